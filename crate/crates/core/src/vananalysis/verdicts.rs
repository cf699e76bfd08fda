use super::certify::{nsd_triple_at, primal_map_derivative, primal_map_jacobian, CertifiedKKT};
use super::geometry::{
    form_value, rank, restricted_min_eig, smallest_singular, ConeSum, Coverage, PsdSet, VERDICT_TOL,
};
use super::{Condition, ConditionVerdict, Method, VerdictStatus};
use crate::error::{check_dim, Result};
use crate::linalg::{block_diag, hcat, null_space, op_norm, select_columns};
use crate::matcone::{in_critical_cone_nsd, in_critical_cone_psd, smat};
use crate::model::build_restricted_wolfe_dual;
use crate::polyset::{in_S_ba, in_critical_cone_box, ACTIVE_TOL};
use crate::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random directions drawn when a second-order form is tested outside the subspace regime.
pub const SAMPLE_COUNT: usize = 10_000;
const PIECE_SAMPLES: usize = 200;
const SAMPLED_KERNEL_TOL: f64 = 1e-9;
const SEED: u64 = 0x5a17_c0de;

fn method(cert: &CertifiedKKT) -> Method {
    if cert.subspace_regime() {
        Method::ExactSubspace
    } else {
        Method::Sampled
    }
}

fn thr(norm: f64) -> f64 {
    VERDICT_TOL * norm.max(1.0)
}

/// Columns of the identity not listed in `set` (a matrix of unit columns).
fn unit_complement(set: &Matrix) -> Matrix {
    let d = set.nrows();
    let used: Vec<usize> = (0..set.ncols()).map(|c| set.column(c).iamax()).collect();
    let keep: Vec<usize> = (0..d).filter(|i| !used.contains(i)).collect();
    select_columns(&Matrix::identity(d, d), &keep)
}

fn kernel_lift(constraints: &Matrix, param: &Matrix) -> Matrix {
    if param.ncols() == 0 {
        return param.clone();
    }
    let scale = op_norm(constraints).max(1.0);
    let n = null_space(constraints, thr(scale));
    param * n
}

// ---------------------------------------------------------------- uniqueness

fn primal_multiplier_map(cert: &CertifiedKKT, lin: bool) -> (Matrix, Matrix) {
    let g = &cert.geometry;
    let (d, m) = (g.d, cert.prob.m());
    let fs = g.psd_set(PsdSet::DualFace, lin);
    let sz = g.coord_set(true, lin);
    let at = cert.prob.a.transpose();
    let map = hcat(d, &[&fs, &at, &sz]);
    let lift = block_diag_rect(&[&fs, &Matrix::identity(m, m), &sz]);
    (map, lift)
}

/// Block-diagonal stacking of rectangular blocks.
fn block_diag_rect(blocks: &[&Matrix]) -> Matrix {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), b.shape()).copy_from(*b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

/// Uniqueness of `(s̄, ȳ, z̄)`: no nonzero feasible direction with
/// `d_s + A*d_y + d_z = 0`.
pub fn primal_uniqueness(cert: &CertifiedKKT) -> Result<ConditionVerdict> {
    let cond = Condition::PrimalUniqueness;
    let (map, _) = primal_multiplier_map(cert, false);
    let t = thr(op_norm(&map));
    if map.ncols() == 0 || rank(&map, t) == map.ncols() {
        return Ok(
            ConditionVerdict::new(cond, VerdictStatus::Holds, method(cert))
                .detail("multiplier system has a trivial kernel"),
        );
    }
    let (map, lift) = primal_multiplier_map(cert, true);
    let ker = null_space(&map, thr(op_norm(&map)));
    if ker.ncols() > 0 {
        let w = &lift * ker.column(0);
        return Ok(
            ConditionVerdict::new(cond, VerdictStatus::Fails, method(cert))
                .witness(&w)
                .detail(format!(
                    "multiplier directions span {} dimensions",
                    ker.ncols()
                )),
        );
    }
    Ok(
        ConditionVerdict::new(cond, VerdictStatus::Undetermined, Method::Sampled)
            .detail("kernel lies only in the degenerate parts"),
    )
}

fn dual_multiplier_directions(cert: &CertifiedKKT, lin: bool) -> Matrix {
    let g = &cert.geometry;
    let fx = g.psd_set(PsdSet::PrimalFace, lin);
    let off = unit_complement(&g.coord_set(false, lin));
    let d = g.d;
    let mut rows = Matrix::zeros(cert.prob.m() + d + off.ncols(), d);
    rows.view_mut((0, 0), (cert.prob.m(), d))
        .copy_from(&cert.prob.a);
    rows.view_mut((cert.prob.m(), 0), (d, d))
        .copy_from(&cert.prob.q);
    rows.view_mut((cert.prob.m() + d, 0), (off.ncols(), d))
        .copy_from(&off.transpose());
    kernel_lift(&(rows * &fx), &fx)
}

/// Uniqueness of `x̄` as the multiplier of the dual: no nonzero feasible
/// direction with `A d_x = 0`, `Q d_x = 0`.
pub fn dual_uniqueness(cert: &CertifiedKKT) -> Result<ConditionVerdict> {
    let cond = Condition::DualUniqueness;
    if dual_multiplier_directions(cert, false).ncols() == 0 {
        return Ok(
            ConditionVerdict::new(cond, VerdictStatus::Holds, method(cert))
                .detail("multiplier system has a trivial kernel"),
        );
    }
    let lin = dual_multiplier_directions(cert, true);
    if lin.ncols() > 0 {
        return Ok(
            ConditionVerdict::new(cond, VerdictStatus::Fails, method(cert))
                .witness(&lin.column(0).into_owned())
                .detail(format!(
                    "multiplier directions span {} dimensions",
                    lin.ncols()
                )),
        );
    }
    Ok(
        ConditionVerdict::new(cond, VerdictStatus::Undetermined, Method::Sampled)
            .detail("kernel lies only in the degenerate parts"),
    )
}

// ---------------------------------------------------------------- SOSC

fn primal_critical_basis(cert: &CertifiedKKT, lin: bool) -> Matrix {
    let g = &cert.geometry;
    let kp = g.psd_set(PsdSet::PrimalCritical, lin);
    let off = unit_complement(&g.coord_set(false, lin));
    let (m, d) = (cert.prob.m(), g.d);
    let mut rows = Matrix::zeros(m + off.ncols(), d);
    rows.view_mut((0, 0), (m, d)).copy_from(&cert.prob.a);
    rows.view_mut((m, 0), (off.ncols(), d))
        .copy_from(&off.transpose());
    kernel_lift(&(rows * &kp), &kp)
}

fn primal_form(cert: &CertifiedKKT) -> Result<Matrix> {
    Ok(&cert.prob.q + cert.primal_curvature()?)
}

fn in_primal_critical_cone(cert: &CertifiedKKT, dx: &Vector) -> Result<bool> {
    let tol = VERDICT_TOL * dx.norm().max(f64::MIN_POSITIVE);
    if (&cert.prob.a * dx).norm() > tol * op_norm(&cert.prob.a).max(1.0) {
        return Ok(false);
    }
    if let Some(t) = &cert.triple {
        if !in_critical_cone_psd(&smat(dx)?, t, VERDICT_TOL)? {
            return Ok(false);
        }
    }
    let p = &cert.point;
    in_critical_cone_box(&cert.prob.pset, dx, &p.u, &p.z, ACTIVE_TOL)
}

/// `⟨Q d, d⟩ + 2⟨s̄, d x̄† d⟩ > 0` on the nonzero elements of the primal critical cone.
pub fn sosc_primal(cert: &CertifiedKKT) -> Result<ConditionVerdict> {
    let cond = Condition::SoscPrimal;
    if !cert.primal_unique.holds() {
        return Ok(
            ConditionVerdict::new(cond, VerdictStatus::Undetermined, method(cert))
                .detail("primal multipliers are not established as unique"),
        );
    }
    let f = primal_form(cert)?;
    let t = thr(op_norm(&f));
    let span = primal_critical_basis(cert, false);
    let Some((lmin, v)) = restricted_min_eig(&f, &span)? else {
        return Ok(
            ConditionVerdict::new(cond, VerdictStatus::Holds, method(cert))
                .detail("critical cone is {0}"),
        );
    };
    if lmin > t {
        return Ok(ConditionVerdict::new(cond, VerdictStatus::Holds, method(cert)).margin(lmin));
    }
    if cert.subspace_regime() {
        return Ok(
            ConditionVerdict::new(cond, VerdictStatus::Fails, Method::ExactSubspace)
                .margin(lmin)
                .witness(&v),
        );
    }
    sampled_fail_search(
        cond,
        &f,
        t,
        &primal_critical_basis(cert, true),
        &span,
        |d| in_primal_critical_cone(cert, d),
    )
}

/// Outside the regime: a lineality eigenvector, or random span elements that
/// pass the membership test, may witness failure.
fn sampled_fail_search(
    cond: Condition,
    f: &Matrix,
    t: f64,
    lin: &Matrix,
    span: &Matrix,
    member: impl Fn(&Vector) -> Result<bool>,
) -> Result<ConditionVerdict> {
    if let Some((l, v)) = restricted_min_eig(f, lin)? {
        if l <= t && member(&v)? {
            return Ok(
                ConditionVerdict::new(cond, VerdictStatus::Fails, Method::Sampled)
                    .margin(l)
                    .witness(&v),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..SAMPLE_COUNT {
        let c = Vector::from_fn(span.ncols(), |_, _| rng.gen_range(-1.0..1.0));
        let d = span * c;
        let n2 = d.norm_squared();
        if n2 == 0.0 {
            continue;
        }
        if form_value(f, &d) <= t * n2 && member(&d)? {
            return Ok(
                ConditionVerdict::new(cond, VerdictStatus::Fails, Method::Sampled)
                    .witness(&(d / n2.sqrt())),
            );
        }
    }
    Ok(
        ConditionVerdict::new(cond, VerdictStatus::Undetermined, Method::Sampled).detail(format!(
            "no violating direction among {SAMPLE_COUNT} samples; subspace bound inconclusive"
        )),
    )
}

struct DualCone {
    /// Columns are directions `(d_s, d_y, d_w, d_z)` spanning the set.
    basis: Matrix,
    form: Matrix,
}

fn dual_critical(cert: &CertifiedKKT, lin: bool) -> Result<DualCone> {
    let g = &cert.geometry;
    let (d, m) = (g.d, cert.prob.m());
    let kd = g.psd_set(PsdSet::DualTangent, lin);
    let sz = g.coord_set(true, lin);
    let vw = build_restricted_wolfe_dual(&cert.prob)?.w_basis;
    let at = cert.prob.a.transpose();
    let qv = -(&cert.prob.q * &vw);
    let eq = hcat(d, &[&kd, &at, &qv, &sz]);
    let lift = block_diag_rect(&[&kd, &Matrix::identity(m, m), &vw, &sz]);
    let form = block_diag(&[
        &cert.dual_curvature()?,
        &Matrix::zeros(m, m),
        &cert.prob.q,
        &Matrix::zeros(d, d),
    ]);
    Ok(DualCone {
        basis: kernel_lift(&eq, &lift),
        form,
    })
}

fn split4(v: &Vector, d: usize, m: usize) -> (Vector, Vector, Vector, Vector) {
    (
        v.rows(0, d).into_owned(),
        v.rows(d, m).into_owned(),
        v.rows(d + m, d).into_owned(),
        v.rows(2 * d + m, d).into_owned(),
    )
}

fn in_dual_critical_cone(cert: &CertifiedKKT, dir: &Vector) -> Result<bool> {
    let (d, m) = (cert.prob.dim(), cert.prob.m());
    let (ds, dy, dw, dz) = split4(dir, d, m);
    let tol = VERDICT_TOL * dir.norm().max(f64::MIN_POSITIVE);
    let q = &cert.prob.q;
    let eq = &ds + cert.prob.a.tr_mul(&dy) - q * &dw + &dz;
    let scale = 1.0 + op_norm(&cert.prob.a) + op_norm(q);
    if eq.norm() > tol * scale {
        return Ok(false);
    }
    let dual = build_restricted_wolfe_dual(&cert.prob)?;
    if (&dw - dual.project_w(&dw)).norm() > tol {
        return Ok(false);
    }
    match &cert.triple {
        Some(t) => {
            if !in_critical_cone_nsd(&smat(&(-&ds))?, t, VERDICT_TOL)? {
                return Ok(false);
            }
        }
        None => {
            if ds.norm() > tol {
                return Ok(false);
            }
        }
    }
    let p = &cert.point;
    in_S_ba(&cert.prob.pset, &dz, &p.u, &p.z, ACTIVE_TOL)
}

/// `⟨Q d_w, d_w⟩ + 2⟨x̄, d_s s̄† d_s⟩ > 0` on the nonzero elements of the dual critical cone.
pub fn sosc_dual(cert: &CertifiedKKT) -> Result<ConditionVerdict> {
    let cond = Condition::SoscDual;
    if !cert.dual_unique.holds() {
        return Ok(
            ConditionVerdict::new(cond, VerdictStatus::Undetermined, method(cert))
                .detail("the dual multiplier is not established as unique"),
        );
    }
    let span = dual_critical(cert, false)?;
    let t = thr(op_norm(&span.form));
    let Some((lmin, v)) = restricted_min_eig(&span.form, &span.basis)? else {
        return Ok(
            ConditionVerdict::new(cond, VerdictStatus::Holds, method(cert))
                .detail("critical cone is {0}"),
        );
    };
    if lmin > t {
        return Ok(ConditionVerdict::new(cond, VerdictStatus::Holds, method(cert)).margin(lmin));
    }
    if cert.subspace_regime() {
        return Ok(
            ConditionVerdict::new(cond, VerdictStatus::Fails, Method::ExactSubspace)
                .margin(lmin)
                .witness(&v),
        );
    }
    let lin = dual_critical(cert, true)?;
    sampled_fail_search(cond, &span.form, t, &lin.basis, &span.basis, |d| {
        in_dual_critical_cone(cert, d)
    })
}

// ---------------------------------------------------------------- SRCQ

fn dual_cover(cert: &CertifiedKKT) -> ConeSum {
    let g = &cert.geometry;
    let d = g.d;
    let kd = g.psd_set(PsdSet::DualTangent, true);
    let sz = g.coord_set(true, true);
    let at = cert.prob.a.transpose();
    ConeSum {
        lin: hcat(d, &[&kd, &sz, &at, &cert.prob.q]),
        rays: g.coord_rays(true),
        psd_map: g.psd_beta_map(),
    }
}

fn primal_cover(cert: &CertifiedKKT) -> ConeSum {
    let g = &cert.geometry;
    let (d, m) = (g.d, cert.prob.m());
    let a = &cert.prob.a;
    let lift = |cols: &Matrix| {
        let mut out = Matrix::zeros(m + d, cols.ncols());
        out.view_mut((0, 0), (m, cols.ncols()))
            .copy_from(&(a * cols));
        out.view_mut((m, 0), (d, cols.ncols())).copy_from(cols);
        out
    };
    let pad = |cols: &Matrix| {
        let mut out = Matrix::zeros(m + d, cols.ncols());
        out.view_mut((m, 0), (d, cols.ncols())).copy_from(cols);
        out
    };
    let kp = g.psd_set(PsdSet::PrimalCritical, true);
    let cp = g.coord_set(false, true);
    ConeSum {
        lin: hcat(m + d, &[&lift(&kp), &pad(&cp)]),
        rays: pad(&g.coord_rays(false)),
        psd_map: lift(&g.psd_beta_map()),
    }
}

fn coverage_verdict(cert: &CertifiedKKT, cond: Condition, sum: &ConeSum) -> ConditionVerdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let m = method(cert);
    match sum.coverage(&mut rng) {
        Coverage::Full => ConditionVerdict::new(cond, VerdictStatus::Holds, m),
        Coverage::NotFull(h) => ConditionVerdict::new(cond, VerdictStatus::Fails, m)
            .witness(&h)
            .detail("nonzero vector pairs nonnegatively with every generator"),
        Coverage::Unknown => {
            ConditionVerdict::new(cond, VerdictStatus::Undetermined, Method::Sampled)
                .detail("lineality parts do not cover and no separating vector was found")
        }
    }
}

/// `T(s̄) ∩ x̄^⊥ + S_{x̄,z̄} + A*ℝ^m − Q𝒲` covers the whole space.
pub fn srcq_dual(cert: &CertifiedKKT) -> Result<ConditionVerdict> {
    Ok(coverage_verdict(
        cert,
        Condition::SrcqDual,
        &dual_cover(cert),
    ))
}

/// `[A; I](T(x̄) ∩ s̄^⊥) + {0} × (T_P(ū) ∩ z̄^⊥)` covers `ℝ^m × 𝒳`.
pub fn srcq_primal(cert: &CertifiedKKT) -> Result<ConditionVerdict> {
    Ok(coverage_verdict(
        cert,
        Condition::SrcqPrimal,
        &primal_cover(cert),
    ))
}

// ---------------------------------------------------------------- calmness

/// Kernel of the directional derivative of `F_P` at the certificate.
pub fn dd_system_test(cert: &CertifiedKKT) -> Result<ConditionVerdict> {
    let cond = Condition::DdSystem;
    let prob = &cert.prob;
    let pt = cert.point.primal();
    let n = 3 * prob.dim() + prob.m();
    if n == 0 {
        return Ok(
            ConditionVerdict::new(cond, VerdictStatus::Holds, Method::ExactSubspace)
                .detail("zero-dimensional system"),
        );
    }
    let tn = nsd_triple_at(prob, &pt)?;
    if cert.subspace_regime() {
        let j = primal_map_jacobian(prob, tn.as_ref(), &pt)?;
        let t = thr(op_norm(&j));
        let (smin, v) = smallest_singular(&j).expect("nonempty");
        let status = if smin > t {
            VerdictStatus::Holds
        } else {
            VerdictStatus::Fails
        };
        let mut out = ConditionVerdict::new(cond, status, Method::ExactSubspace).margin(smin);
        if status == VerdictStatus::Fails {
            out = out.witness(&v);
        }
        return Ok(out);
    }
    let g = |dir: &Vector| primal_map_derivative(prob, tn.as_ref(), &pt, dir);
    let scale = op_norm(&primal_map_jacobian(prob, tn.as_ref(), &pt)?).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let eps = 1e-6;
    for _ in 0..PIECE_SAMPLES {
        let d0 = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let g0 = g(&d0)?;
        let mut j = Matrix::zeros(n, n);
        for k in 0..n {
            let mut dk = d0.clone();
            dk[k] += eps;
            j.set_column(k, &((g(&dk)? - &g0) / eps));
        }
        if let Some((_, v)) = smallest_singular(&j) {
            for cand in [v.clone(), -v] {
                if g(&cand)?.norm() <= SAMPLED_KERNEL_TOL * scale * cand.norm() {
                    return Ok(
                        ConditionVerdict::new(cond, VerdictStatus::Fails, Method::Sampled)
                            .witness(&cand)
                            .detail("kernel direction found on a sampled piece"),
                    );
                }
            }
        }
    }
    Ok(
        ConditionVerdict::new(cond, VerdictStatus::Undetermined, Method::Sampled).detail(format!(
            "no kernel direction on {PIECE_SAMPLES} sampled pieces"
        )),
    )
}

// ---------------------------------------------------------------- replay

/// Substitutes the witness of a `Fails` verdict back into the defining
/// condition. Returns `false` for verdicts without a witness.
pub fn replay_witness(cert: &CertifiedKKT, verdict: &ConditionVerdict) -> Result<bool> {
    let Some(w) = &verdict.witness else {
        return Ok(false);
    };
    let w = Vector::from_column_slice(w);
    let nw = w.norm();
    if !(nw > 0.0) {
        return Ok(false);
    }
    let (d, m) = (cert.prob.dim(), cert.prob.m());
    let prob = &cert.prob;
    match verdict.condition {
        Condition::SoscPrimal => {
            check_dim("witness", d, w.len())?;
            let f = primal_form(cert)?;
            Ok(in_primal_critical_cone(cert, &w)?
                && form_value(&f, &w) <= thr(op_norm(&f)) * nw * nw)
        }
        Condition::SoscDual => {
            check_dim("witness", 3 * d + m, w.len())?;
            let f = dual_critical(cert, false)?.form;
            Ok(
                in_dual_critical_cone(cert, &w)?
                    && form_value(&f, &w) <= thr(op_norm(&f)) * nw * nw,
            )
        }
        Condition::SrcqDual => {
            check_dim("witness", d, w.len())?;
            Ok(dual_cover(cert).is_dual_witness(&w))
        }
        Condition::SrcqPrimal => {
            check_dim("witness", m + d, w.len())?;
            Ok(primal_cover(cert).is_dual_witness(&w))
        }
        Condition::DdSystem => {
            check_dim("witness", 3 * d + m, w.len())?;
            let pt = cert.point.primal();
            let tn = nsd_triple_at(prob, &pt)?;
            let scale = op_norm(&primal_map_jacobian(prob, tn.as_ref(), &pt)?);
            let g = primal_map_derivative(prob, tn.as_ref(), &pt, &w)?;
            Ok(g.norm() <= thr(scale) * nw)
        }
        Condition::PrimalUniqueness => {
            check_dim("witness", 2 * d + m, w.len())?;
            let (ds, dy, dz) = (
                w.rows(0, d).into_owned(),
                w.rows(d, m).into_owned(),
                w.rows(d + m, d).into_owned(),
            );
            let res = &ds + prob.a.tr_mul(&dy) + &dz;
            let tol = VERDICT_TOL * nw;
            let face_ok = match &cert.triple {
                Some(_) => {
                    let fs = cert.geometry.psd_set(PsdSet::DualFace, false);
                    (&ds - &fs * fs.tr_mul(&ds)).norm() <= tol
                }
                None => ds.norm() <= tol,
            };
            let p = &cert.point;
            Ok(res.norm() <= tol * (1.0 + op_norm(&prob.a))
                && face_ok
                && in_S_ba(&prob.pset, &dz, &p.u, &p.z, ACTIVE_TOL)?)
        }
        Condition::DualUniqueness => {
            check_dim("witness", d, w.len())?;
            let tol = VERDICT_TOL * nw * (1.0 + op_norm(&prob.a) + op_norm(&prob.q));
            let fx = cert.geometry.psd_set(PsdSet::PrimalFace, false);
            let p = &cert.point;
            Ok((&prob.a * &w).norm() <= tol
                && (&prob.q * &w).norm() <= tol
                && (&w - &fx * fx.tr_mul(&w)).norm() <= VERDICT_TOL * nw
                && in_critical_cone_box(&prob.pset, &w, &p.u, &p.z, ACTIVE_TOL)?)
        }
    }
}
