use super::*;
use crate::linalg::symmetrize;
use crate::matcone::{smat, svec, SymMatrix};
use crate::model::{ConeKind, ConicQP, KKTPoint, Phi, SpaceSpec};
use crate::polyset::BoxSet;
use crate::{Matrix, Vector};
use proptest::prelude::*;

fn vecp(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}

fn point(prob: &ConicQP, x: Vector, s: Vector, y: Vector, z: Vector) -> KKTPoint {
    let w = crate::model::build_restricted_wolfe_dual(prob)
        .unwrap()
        .project_w(&x);
    KKTPoint {
        u: x.clone(),
        v: -&z,
        x,
        s,
        y,
        z,
        w,
    }
}

fn vector_qp(q: Matrix, c: Vector, a: Matrix, b: Vector, pset: BoxSet) -> ConicQP {
    let n = q.nrows();
    ConicQP::new(
        SpaceSpec::Vector(n),
        q,
        c,
        a,
        b,
        ConeKind::None,
        pset,
        Phi::BoxIndicator,
    )
    .unwrap()
}

/// `min ⟨I, X⟩ s.t. tr X = 1, X ⪰ 0` at `X = I/2`: every feasible point is optimal.
fn trace_instance() -> CertifiedKKT {
    let eye = svec(&SymMatrix::identity(2));
    let prob = ConicQP::new(
        SpaceSpec::Sym(2),
        Matrix::zeros(3, 3),
        eye.clone(),
        Matrix::from_row_slice(1, 3, eye.as_slice()),
        vecp(&[1.0]),
        ConeKind::Psd,
        BoxSet::free(3),
        Phi::BoxIndicator,
    )
    .unwrap();
    let pt = point(
        &prob,
        eye * 0.5,
        Vector::zeros(3),
        vecp(&[1.0]),
        Vector::zeros(3),
    );
    CertifiedKKT::from_point(&prob, pt, 1e-12).unwrap()
}

/// Three variables, `x₁ + x₂ + x₃ = 1`, `Q = diag(q)`, free box, at `x = (⅓, ⅓, ⅓)`.
fn reduced_hessian_instance(q: [f64; 3]) -> CertifiedKKT {
    let qm = Matrix::from_diagonal(&vecp(&q));
    let x = vecp(&[1.0 / 3.0; 3]);
    let a = Matrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
    let y = vecp(&[1.0]);
    let c = a.tr_mul(&y) - &qm * &x;
    let prob = vector_qp(qm, c, a, vecp(&[1.0]), BoxSet::free(3));
    let pt = point(&prob, x, Vector::zeros(3), y, Vector::zeros(3));
    CertifiedKKT::from_point(&prob, pt, 1e-12).unwrap()
}

/// Smallest eigenvalue of `Q` on `ker [1 1 1]`, from a hand-built orthonormal basis.
fn reduced_hessian_oracle(q: [f64; 3]) -> f64 {
    let z = Matrix::from_column_slice(
        3,
        2,
        &[
            1.0 / 2f64.sqrt(),
            -1.0 / 2f64.sqrt(),
            0.0,
            1.0 / 6f64.sqrt(),
            1.0 / 6f64.sqrt(),
            -2.0 / 6f64.sqrt(),
        ],
    );
    let r = z.transpose() * Matrix::from_diagonal(&vecp(&q)) * &z;
    symmetrize(&r).symmetric_eigen().eigenvalues.min()
}

#[test]
fn positive_definite_objective_holds_everywhere() {
    let cert = certify_kkt(&super::certify::tests::diag_toy(), 1e-7).unwrap();
    let rep = consistency_report(&cert).unwrap();
    for v in rep.verdicts() {
        assert_eq!(v.status, VerdictStatus::Holds, "{:?}", v);
        assert_eq!(v.method, Method::ExactSubspace);
    }
    assert!(rep.consistent && !rep.contradiction());
}

#[test]
fn trace_instance_verdicts() {
    let cert = trace_instance();
    assert!(cert.subspace_regime());
    assert!(cert.primal_unique.holds());
    assert_eq!(cert.dual_unique.status, VerdictStatus::Fails);
    assert!(replay_witness(&cert, &cert.dual_unique).unwrap());

    let sp = sosc_primal(&cert).unwrap();
    assert_eq!(sp.status, VerdictStatus::Fails);
    assert!(replay_witness(&cert, &sp).unwrap());
    let w = Vector::from_column_slice(sp.witness.as_ref().unwrap());
    assert!(smat(&w).unwrap().as_matrix().trace().abs() < 1e-12);

    assert_eq!(srcq_dual(&cert).unwrap().status, VerdictStatus::Fails);
    assert_eq!(srcq_primal(&cert).unwrap().status, VerdictStatus::Holds);
    assert_eq!(
        sosc_dual(&cert).unwrap().status,
        VerdictStatus::Undetermined
    );
    let dd = dd_system_test(&cert).unwrap();
    assert_eq!(dd.status, VerdictStatus::Fails);
    assert!(replay_witness(&cert, &dd).unwrap());

    // Individual verdicts differ, yet every compound item fails.
    let rep = consistency_report(&cert).unwrap();
    assert!(rep.items.iter().all(|i| i.status == VerdictStatus::Fails));
    assert!(rep.consistent);
}

#[test]
fn sosc_primal_matches_reduced_hessian() {
    for q in [
        [1.0, 1.0, 0.0],
        [2.0, 0.5, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
    ] {
        let cert = reduced_hessian_instance(q);
        let oracle = reduced_hessian_oracle(q);
        let v = sosc_primal(&cert).unwrap();
        assert_eq!(v.method, Method::ExactSubspace);
        assert_eq!(v.holds(), oracle > 1e-8, "q = {q:?}");
        assert!((v.margin.unwrap() - oracle).abs() < 1e-12);
        if !v.holds() {
            assert!(replay_witness(&cert, &v).unwrap());
        }
    }
}

#[test]
fn srcq_dual_ray_fails() {
    // m = 0, Q = 0, x ≥ 0 with x̄ = 0 and zero multiplier: S is a ray.
    let prob = vector_qp(
        Matrix::zeros(1, 1),
        Vector::zeros(1),
        Matrix::zeros(0, 1),
        Vector::zeros(0),
        BoxSet::nonneg(1),
    );
    let pt = point(
        &prob,
        Vector::zeros(1),
        Vector::zeros(1),
        Vector::zeros(0),
        Vector::zeros(1),
    );
    let cert = CertifiedKKT::from_point(&prob, pt, 1e-12).unwrap();
    assert!(!cert.subspace_regime());
    let v = srcq_dual(&cert).unwrap();
    assert_eq!(v.status, VerdictStatus::Fails);
    assert!(replay_witness(&cert, &v).unwrap());
}

#[test]
fn full_space_instance_holds() {
    let prob = vector_qp(
        Matrix::identity(2, 2),
        vecp(&[1.0, -1.0]),
        Matrix::zeros(0, 2),
        Vector::zeros(0),
        BoxSet::free(2),
    );
    let pt = point(
        &prob,
        vecp(&[-1.0, 1.0]),
        Vector::zeros(2),
        Vector::zeros(0),
        Vector::zeros(2),
    );
    let cert = CertifiedKKT::from_point(&prob, pt, 1e-12).unwrap();
    let rep = consistency_report(&cert).unwrap();
    assert!(rep.verdicts().iter().all(|v| v.holds()));
}

#[test]
fn redundant_lp_has_multiplier_kernel() {
    // x₁ + x₂ = 1 written twice, c ∈ range A*, interior point.
    let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
    let y = vecp(&[1.0, 0.0]);
    let prob = vector_qp(
        Matrix::zeros(2, 2),
        a.tr_mul(&y),
        a.clone(),
        vecp(&[1.0, 2.0]),
        BoxSet::nonneg(2),
    );
    let pt = point(
        &prob,
        vecp(&[0.5, 0.5]),
        Vector::zeros(2),
        y,
        Vector::zeros(2),
    );
    let cert = CertifiedKKT::from_point(&prob, pt, 1e-12).unwrap();
    assert!(cert.subspace_regime());
    let dd = dd_system_test(&cert).unwrap();
    assert_eq!(dd.status, VerdictStatus::Fails);
    assert!(replay_witness(&cert, &dd).unwrap());
    // The pure multiplier direction (0, 0, d_y, 0) with d_y ∈ ker A* is in the kernel.
    let mut pure = ConditionVerdict::new(
        Condition::DdSystem,
        VerdictStatus::Fails,
        Method::ExactSubspace,
    );
    pure.witness = Some(vec![0.0, 0.0, 0.0, 0.0, 2.0, -1.0, 0.0, 0.0]);
    assert!(replay_witness(&cert, &pure).unwrap());

    let rep = consistency_report(&cert).unwrap();
    for v in rep.verdicts() {
        assert_ne!(v.status, VerdictStatus::Holds, "{:?}", v.condition);
        if v.status == VerdictStatus::Fails {
            assert!(replay_witness(&cert, v).unwrap(), "{:?}", v.condition);
        }
    }
    assert!(rep.consistent);
}

#[test]
fn zero_dimensional_system_holds() {
    let prob = vector_qp(
        Matrix::zeros(0, 0),
        Vector::zeros(0),
        Matrix::zeros(0, 0),
        Vector::zeros(0),
        BoxSet::free(0),
    );
    let z = Vector::zeros(0);
    let pt = point(&prob, z.clone(), z.clone(), z.clone(), z);
    let cert = CertifiedKKT::from_point(&prob, pt, 1e-12).unwrap();
    assert!(dd_system_test(&cert).unwrap().holds());
}

#[test]
fn strictly_complementary_qsdp_all_hold() {
    // X̄ = diag(1, 0), S̄ = diag(0, 2), Q = I, no constraints.
    let x = svec(&SymMatrix::from_diagonal(&[1.0, 0.0]));
    let s = svec(&SymMatrix::from_diagonal(&[0.0, 2.0]));
    let prob = ConicQP::new(
        SpaceSpec::Sym(2),
        Matrix::identity(3, 3),
        &s - &x,
        Matrix::zeros(0, 3),
        Vector::zeros(0),
        ConeKind::Psd,
        BoxSet::free(3),
        Phi::BoxIndicator,
    )
    .unwrap();
    let cert = CertifiedKKT::from_point(
        &prob,
        point(&prob, x, s, Vector::zeros(0), Vector::zeros(3)),
        1e-12,
    )
    .unwrap();
    assert!(cert.subspace_regime());
    let rep = consistency_report(&cert).unwrap();
    assert!(rep.all_exact());
    assert!(
        rep.verdicts().iter().all(|v| v.holds()),
        "{}",
        rep.to_json()
    );
}

#[test]
fn curvature_matches_closed_form() {
    // With X̄ = diag(x_α, 0) and S̄ = diag(0, s_γ) the form is 2 Σ (s_j / x_i) d_ij².
    let x = svec(&SymMatrix::from_diagonal(&[2.0, 0.0]));
    let s = svec(&SymMatrix::from_diagonal(&[0.0, 3.0]));
    let prob = ConicQP::new(
        SpaceSpec::Sym(2),
        Matrix::zeros(3, 3),
        &s - Vector::zeros(3),
        Matrix::zeros(0, 3),
        Vector::zeros(0),
        ConeKind::Psd,
        BoxSet::free(3),
        Phi::BoxIndicator,
    )
    .unwrap();
    let cert = CertifiedKKT::from_point(
        &prob,
        point(&prob, x, s, Vector::zeros(0), Vector::zeros(3)),
        1e-12,
    )
    .unwrap();
    let g = cert.primal_curvature().unwrap();
    let d = Matrix::from_row_slice(2, 2, &[0.3, 0.7, 0.7, -1.1]);
    let dv = svec(&SymMatrix::new(d).unwrap());
    let expected = 2.0 * (3.0 / 2.0) * 0.7 * 0.7;
    assert!((dv.dot(&(&g * &dv)) - expected).abs() < 1e-14);
}

#[test]
fn report_serializes() {
    let rep = consistency_report(&trace_instance()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(v["sosc_primal"]["status"], "fails");
    assert_eq!(v["sosc_primal"]["method"], "exact-subspace");
    assert_eq!(v["items"].as_array().unwrap().len(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sosc_primal_scale_covariant(lam in 0.1f64..10.0, q1 in 0.0f64..2.0, q2 in 0.0f64..2.0) {
        let q = [q1, q2, 0.0];
        let base = reduced_hessian_instance(q);
        let prob = &base.prob;
        let scaled = vector_qp(&prob.q * lam, &prob.c * lam, prob.a.clone(), prob.b.clone(), prob.pset.clone());
        let p = &base.point;
        let pt = point(&scaled, p.x.clone(), &p.s * lam, &p.y * lam, &p.z * lam);
        let cert = CertifiedKKT::from_point(&scaled, pt, 1e-10).unwrap();
        let (a, b) = (sosc_primal(&base).unwrap(), sosc_primal(&cert).unwrap());
        let (ma, mb) = (a.margin.unwrap(), b.margin.unwrap());
        prop_assert!((mb - lam * ma).abs() < 1e-10 * (1.0 + lam));
        if ma.min(mb) > 1e-7 || ma.max(mb) < 1e-9 {
            prop_assert_eq!(a.status, b.status);
        }
    }
}

#[test]
fn generated_strict_instances_hold() {
    use crate::generate::{generate, GenSpec};
    for spec in [
        GenSpec::convex_qp(10, 3, 1).strict(),
        GenSpec::convex_qp(10, 3, 2).rank(0).strict(),
        GenSpec::qsdp(4, 2, 3).strict(),
        GenSpec::qsdp(5, 3, 4).strict(),
    ] {
        let g = generate(&spec).unwrap();
        let cert = certify_kkt(&g.prob, 1e-7).unwrap();
        assert!(cert.subspace_regime(), "{spec:?}");
        let rep = consistency_report(&cert).unwrap();
        assert!(
            rep.verdicts().iter().all(|v| v.holds()),
            "{spec:?}\n{}",
            rep.to_json()
        );
        assert!((&cert.point.x - &g.reference.x).amax() < 1e-7);
    }
}

#[test]
fn generated_redundant_lps_fail() {
    use crate::generate::{generate, GenSpec};
    for spec in [
        GenSpec::convex_qp(6, 4, 1).rank(0).degenerate(),
        GenSpec::qsdp(3, 4, 2).rank(0).degenerate(),
    ] {
        let g = generate(&spec).unwrap();
        let cert = certify_kkt(&g.prob, 1e-7).unwrap();
        let rep = consistency_report(&cert).unwrap();
        for v in rep.verdicts() {
            assert_ne!(
                v.status,
                VerdictStatus::Holds,
                "{spec:?}\n{}",
                rep.to_json()
            );
            if v.status == VerdictStatus::Fails {
                assert!(replay_witness(&cert, v).unwrap());
            }
        }
        assert!(rep.consistent);
    }
}
