//! sGS-sPADMM on the restricted Wolfe dual.
//!
//! The first block `(s, y, w)` is updated by one symmetric Gauss-Seidel sweep
//! `w½ → y½ → s → y → w`, the second block is `z`, and the multiplier is the
//! primal `x`. The `z` step takes no proximal term.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, lambda_max, lambda_min, symmetrize};
use crate::model::{
    build_restricted_wolfe_dual, Block, ConeKind, ConicQP, DualModel, DualPoint, Nonsmooth, Phi,
    ProxKind, TwoBlockProblem,
};
use crate::polyset::BoxSet;
use crate::solver::{SPADMMConfig, SemiProx, SolveResult, SolveStatus};
use crate::{Matrix, Vector};
use nalgebra::{Cholesky, Dyn};

const MAJORIZE_INFLATION: f64 = 1e-6;
const DIVERGENCE_FACTOR: f64 = 1e12;

/// An iterate of the dual solver. `w` is kept in full coordinates and lies in `𝒲`.
#[derive(Debug, Clone, PartialEq)]
pub struct SGSState {
    pub s: Vector,
    pub y: Vector,
    pub w: Vector,
    pub z: Vector,
    pub x: Vector,
    pub k: usize,
}

impl SGSState {
    pub fn zeros(prob: &ConicQP) -> Self {
        let d = prob.dim();
        Self {
            s: Vector::zeros(d),
            y: Vector::zeros(prob.m()),
            w: Vector::zeros(d),
            z: Vector::zeros(d),
            x: Vector::zeros(d),
            k: 0,
        }
    }

    pub fn point(&self) -> DualPoint {
        DualPoint {
            s: self.s.clone(),
            y: self.y.clone(),
            w: self.w.clone(),
            z: self.z.clone(),
            x: self.x.clone(),
        }
    }

    pub fn norm(&self) -> f64 {
        [&self.s, &self.y, &self.w, &self.z, &self.x]
            .iter()
            .map(|v| v.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// The backward-sweep values of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct SGSTrace {
    pub w_half: Vector,
    pub y_half: Vector,
}

/// A configured sGS-sPADMM engine.
#[derive(Debug, Clone)]
pub struct SGSEngine {
    dual: DualModel,
    cfg: SPADMMConfig,
    s1: Matrix,
    y_op: Matrix,
    y_chol: Cholesky<f64, Dyn>,
    /// `S2` in the coordinates of the `𝒲` basis.
    s2: Matrix,
    w_op: Matrix,
    w_chol: Option<Cholesky<f64, Dyn>>,
}

fn majorize(base: &Matrix) -> Result<Matrix> {
    let n = base.nrows();
    let lam = lambda_max(base)?;
    let lam = if lam > 0.0 {
        lam * (1.0 + MAJORIZE_INFLATION)
    } else {
        1.0
    };
    Ok(Matrix::identity(n, n) * lam - symmetrize(base))
}

fn positive_definite(m: &Matrix) -> Result<bool> {
    if m.nrows() == 0 {
        return Ok(true);
    }
    Ok(lambda_min(m)? > 1e-12 * lambda_max(m)?.max(f64::MIN_POSITIVE))
}

fn explicit(m: &Matrix, n: usize, name: &str) -> Result<Matrix> {
    if m.shape() != (n, n) {
        return Err(Error::Config(format!("{name} must be {n}x{n}")));
    }
    if n > 0 && lambda_min(&symmetrize(m))? < -1e-10 * m.amax().max(1.0) {
        return Err(Error::Config(format!(
            "{name} must be positive semidefinite"
        )));
    }
    Ok(symmetrize(m))
}

fn choose(rule: &SemiProx, base: &Matrix, name: &str) -> Result<Matrix> {
    let n = base.nrows();
    match rule {
        SemiProx::Zero => Ok(Matrix::zeros(n, n)),
        SemiProx::Majorize => majorize(base),
        SemiProx::Auto if positive_definite(base)? => Ok(Matrix::zeros(n, n)),
        SemiProx::Auto => majorize(base),
        SemiProx::Explicit(m) => explicit(m, n, name),
    }
}

impl SGSEngine {
    pub fn new(prob: &ConicQP, cfg: &SPADMMConfig) -> Result<Self> {
        Self::with_dual(build_restricted_wolfe_dual(prob)?, cfg)
    }

    pub fn with_dual(dual: DualModel, cfg: &SPADMMConfig) -> Result<Self> {
        cfg.validate()?;
        let sigma = cfg.sigma;
        let p = &dual.prob;
        let aat = &p.a * p.a.transpose() * sigma;
        let s1 = choose(&cfg.s1_rule, &aat, "S1")?;
        let y_op = &aat + &s1;
        let y_chol = if y_op.nrows() == 0 {
            cholesky(&Matrix::identity(1, 1)).expect("identity")
        } else {
            cholesky(&y_op).ok_or(Error::Step {
                block: "y",
                reason: "σAA* + S1 is not positive definite; use a nonzero S1 rule".into(),
            })?
        };
        let v = &dual.w_basis;
        let qv = v.transpose() * &p.q * v;
        let w_base = &qv + &qv * &qv * sigma;
        let s2 = choose(&cfg.s2_rule, &w_base, "S2")?;
        let w_op = &w_base + &s2;
        let w_chol = if w_op.nrows() == 0 {
            None
        } else {
            Some(cholesky(&w_op).ok_or(Error::Step {
                block: "w",
                reason: "Q + σQ² + S2 is not positive definite on 𝒲; use a nonzero S2 rule".into(),
            })?)
        };
        Ok(Self {
            dual,
            cfg: cfg.clone(),
            s1,
            y_op,
            y_chol,
            s2,
            w_op,
            w_chol,
        })
    }

    pub fn dual(&self) -> &DualModel {
        &self.dual
    }

    pub fn s1(&self) -> &Matrix {
        &self.s1
    }

    /// `S2` in full coordinates, `V S2 Vᵀ`.
    pub fn s2_full(&self) -> Matrix {
        let v = &self.dual.w_basis;
        v * &self.s2 * v.transpose()
    }

    /// `σAA* + S1`.
    pub fn y_operator(&self) -> &Matrix {
        &self.y_op
    }

    fn prob(&self) -> &ConicQP {
        &self.dual.prob
    }

    /// `s + A*y − Qw + z − c`.
    fn resid(&self, s: &Vector, y: &Vector, w: &Vector, z: &Vector) -> Vector {
        let p = self.prob();
        s + p.a.tr_mul(y) - &p.q * w + z - &p.c
    }

    fn w_rhs(&self, st: &SGSState, s: &Vector, y: &Vector) -> Vector {
        let p = self.prob();
        let v = &self.dual.w_basis;
        let e = s + p.a.tr_mul(y) + &st.z - &p.c;
        let full = &p.q * (&st.x + e * self.cfg.sigma);
        v.tr_mul(&full) + &self.s2 * v.tr_mul(&st.w)
    }

    fn w_solve(&self, st: &SGSState, s: &Vector, y: &Vector) -> Vector {
        match &self.w_chol {
            None => Vector::zeros(self.prob().dim()),
            Some(ch) => &self.dual.w_basis * ch.solve(&self.w_rhs(st, s, y)),
        }
    }

    fn y_rhs(&self, st: &SGSState, s: &Vector, w: &Vector) -> Vector {
        let p = self.prob();
        let f = s - &p.q * w + &st.z - &p.c;
        &p.b - &p.a * &st.x - &p.a * f * self.cfg.sigma + &self.s1 * &st.y
    }

    fn y_solve(&self, st: &SGSState, s: &Vector, w: &Vector) -> Vector {
        if self.y_op.nrows() == 0 {
            return Vector::zeros(0);
        }
        self.y_chol.solve(&self.y_rhs(st, s, w))
    }

    fn s_solve(&self, st: &SGSState, y: &Vector, w: &Vector) -> Result<Vector> {
        let p = self.prob();
        let g = p.a.tr_mul(y) - &p.q * w + &st.z - &p.c;
        p.project_dual_cone(&(-g - &st.x / self.cfg.sigma))
    }

    fn z_solve(&self, st: &SGSState, s: &Vector, y: &Vector, w: &Vector) -> Result<Vector> {
        let p = self.prob();
        let sigma = self.cfg.sigma;
        let h = s + p.a.tr_mul(y) - &p.q * w - &p.c;
        p.theta_prox(1.0 / sigma, &(-h - &st.x / sigma))
    }

    /// One sGS-sPADMM step.
    pub fn step(&self, st: &SGSState) -> Result<(SGSState, SGSTrace)> {
        let w_half = self.w_solve(st, &st.s, &st.y);
        let y_half = self.y_solve(st, &st.s, &w_half);
        let s = self.s_solve(st, &y_half, &w_half)?;
        let y = self.y_solve(st, &s, &w_half);
        let w = self.w_solve(st, &s, &y);
        let z = self.z_solve(st, &s, &y, &w)?;
        let x = &st.x + self.resid(&s, &y, &w, &z) * (self.cfg.tau * self.cfg.sigma);
        Ok((
            SGSState {
                s,
                y,
                w,
                z,
                x,
                k: st.k + 1,
            },
            SGSTrace { w_half, y_half },
        ))
    }

    /// Optimality residuals of the seven stages of the step `prev → next`,
    /// in sweep order `w½, y½, s, y, w, z, x`.
    pub fn certificates(
        &self,
        prev: &SGSState,
        trace: &SGSTrace,
        next: &SGSState,
    ) -> Result<[f64; 7]> {
        let p = self.prob();
        let sigma = self.cfg.sigma;
        let v = &self.dual.w_basis;
        let w_cert = |s: &Vector, y: &Vector, w: &Vector| -> f64 {
            let off = (w - self.dual.project_w(w)).norm();
            off + (&self.w_op * v.tr_mul(w) - self.w_rhs(prev, s, y)).norm()
        };
        let y_cert = |s: &Vector, y: &Vector, w: &Vector| -> f64 {
            if self.y_op.nrows() == 0 {
                return 0.0;
            }
            (&self.y_op * y - self.y_rhs(prev, s, w)).norm()
        };
        let c1 = w_cert(&prev.s, &prev.y, &trace.w_half);
        let c2 = y_cert(&prev.s, &trace.y_half, &trace.w_half);
        let grad_s = &prev.x + self.resid(&next.s, &trace.y_half, &trace.w_half, &prev.z) * sigma;
        let c3 = (&next.s - p.project_dual_cone(&(&next.s - grad_s))?).norm();
        let c4 = y_cert(&next.s, &next.y, &trace.w_half);
        let c5 = w_cert(&next.s, &next.y, &next.w);
        let grad_z = &prev.x + self.resid(&next.s, &next.y, &next.w, &next.z) * sigma;
        let c6 = (&next.z - p.theta_prox(1.0, &(&next.z - grad_z))?).norm();
        let c7 = (&next.x
            - &prev.x
            - self.resid(&next.s, &next.y, &next.w, &next.z) * (self.cfg.tau * sigma))
            .norm();
        Ok([c1, c2, c3, c4, c5, c6, c7])
    }

    /// Relative dual KKT residual.
    pub fn relative_residual(&self, st: &SGSState) -> Result<f64> {
        Ok(self.dual.kkt_residual(&st.point())?.norm() / self.prob().scale())
    }

    pub fn run(&self, st0: SGSState) -> Result<SolveResult<SGSState>> {
        let div = DIVERGENCE_FACTOR * st0.norm().max(self.prob().scale());
        let mut st = st0;
        let mut out = SolveResult {
            state: st.clone(),
            status: SolveStatus::MaxIter,
            iterations: 0,
            residual: self.relative_residual(&st)?,
            residual_history: Vec::new(),
            history: Vec::new(),
            worst_certificate: 0.0,
            tau_in_range: self.cfg.tau_in_range(),
        };
        if self.cfg.history.keeps(0) {
            out.history.push(st.clone());
        }
        for _ in 0..self.cfg.max_iter {
            let (next, trace) = self.step(&st)?;
            let worst = self
                .certificates(&st, &trace, &next)?
                .into_iter()
                .fold(0.0, f64::max);
            out.worst_certificate = out.worst_certificate.max(worst);
            st = next;
            let rel = self.relative_residual(&st)?;
            out.residual_history.push(rel);
            out.residual = rel;
            out.iterations = st.k;
            if self.cfg.history.keeps(st.k) {
                out.history.push(st.clone());
            }
            if !(st.norm() <= div) || !rel.is_finite() {
                out.status = SolveStatus::Diverged;
                break;
            }
            if rel <= self.cfg.tol_rel {
                out.status = SolveStatus::Converged;
                break;
            }
        }
        out.state = st;
        Ok(out)
    }
}

/// One sGS-sPADMM step (builds the engine; prefer [`SGSEngine`] inside loops).
pub fn sgs_step(prob: &ConicQP, cfg: &SPADMMConfig, st: &SGSState) -> Result<(SGSState, SGSTrace)> {
    SGSEngine::new(prob, cfg)?.step(st)
}

/// Runs sGS-sPADMM on the restricted dual from the origin.
pub fn run_sgs_spadmm(prob: &ConicQP, cfg: &SPADMMConfig) -> Result<SolveResult<SGSState>> {
    SGSEngine::new(prob, cfg)?.run(SGSState::zeros(prob))
}

/// See [`SGSEngine::certificates`].
pub fn sgs_optimality_certificates(
    prob: &ConicQP,
    cfg: &SPADMMConfig,
    prev: &SGSState,
    trace: &SGSTrace,
    next: &SGSState,
) -> Result<[f64; 7]> {
    SGSEngine::new(prob, cfg)?.certificates(prev, trace, next)
}

/// For `Q = 0`, the two-block problem in `((s, y), z)` and the block-`(s, y)`
/// semi-proximal operator `Diag(σ²A*(σAA* + S1)⁻¹A, S1)` under which plain
/// sPADMM reproduces the sGS iterates.
pub fn sgs_equivalent_two_block(
    prob: &ConicQP,
    cfg: &SPADMMConfig,
) -> Result<(TwoBlockProblem, SPADMMConfig)> {
    if prob.q.amax() != 0.0 {
        return Err(Error::Input(
            "the two-block equivalent exists only for Q = 0".into(),
        ));
    }
    let eng = SGSEngine::new(prob, cfg)?;
    let (d, m) = (prob.dim(), prob.m());
    let sigma = cfg.sigma;
    let cone_part = match prob.cone {
        ConeKind::Psd => ProxKind::Psd(prob.order()),
        ConeKind::None => ProxKind::Box(BoxSet::uniform(d, 0.0, 0.0)),
    };
    let mut adj1 = Matrix::zeros(d, d + m);
    adj1.columns_mut(0, d).fill_with_identity();
    adj1.columns_mut(d, m).copy_from(&prob.a.transpose());
    let mut lin1 = Vector::zeros(d + m);
    lin1.rows_mut(d, m).copy_from(&(-&prob.b));
    let block1 = Block::new(
        Matrix::zeros(d + m, d + m),
        lin1,
        Nonsmooth::single(cone_part),
        adj1,
    );
    let z_part = match &prob.phi {
        Phi::BoxIndicator => ProxKind::BoxSupport(prob.pset.clone()),
        Phi::WeightedL1(w) => ProxKind::Box(BoxSet::new(
            (-w).as_slice().to_vec(),
            w.as_slice().to_vec(),
        )?),
    };
    let block2 = Block::new(
        Matrix::zeros(d, d),
        Vector::zeros(d),
        Nonsmooth::single(z_part),
        Matrix::identity(d, d),
    );
    let tb = TwoBlockProblem::new(block1, block2, prob.c.clone())?;
    let mut s_gen = Matrix::zeros(d + m, d + m);
    if m > 0 {
        let inv_a = eng.y_chol.solve(&prob.a);
        s_gen
            .view_mut((0, 0), (d, d))
            .copy_from(&(prob.a.tr_mul(&inv_a) * (sigma * sigma)));
        s_gen.view_mut((d, d), (m, m)).copy_from(&eng.s1);
    }
    let gen_cfg = SPADMMConfig {
        s_rule: SemiProx::Explicit(symmetrize(&s_gen)),
        t_rule: SemiProx::Zero,
        ..cfg.clone()
    };
    Ok((tb, gen_cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcone::{svec, svec_dim, svec_index, SymMatrix};
    use crate::model::{IterateState, SpaceSpec};
    use crate::solver::Engine;

    fn scalar_qp() -> ConicQP {
        ConicQP::new(
            SpaceSpec::Vector(1),
            Matrix::identity(1, 1),
            Vector::zeros(1),
            Matrix::identity(1, 1),
            Vector::from_element(1, 1.0),
            ConeKind::None,
            BoxSet::free(1),
            Phi::BoxIndicator,
        )
        .unwrap()
    }

    fn unit_cfg() -> SPADMMConfig {
        SPADMMConfig {
            sigma: 1.0,
            tau: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn scalar_step_matches_hand_derivation() {
        // w½ = 0, y½ = 1, s = 0, y = 1, then 2w = 1, z = 0 and x = 1 − ½ = ½.
        let p = scalar_qp();
        let (next, tr) = sgs_step(&p, &unit_cfg(), &SGSState::zeros(&p)).unwrap();
        assert_eq!(tr.w_half[0], 0.0);
        assert!((tr.y_half[0] - 1.0).abs() < 1e-15);
        assert!((next.y[0] - 1.0).abs() < 1e-15);
        assert!((next.w[0] - 0.5).abs() < 1e-15);
        assert_eq!(next.z[0], 0.0);
        assert!((next.x[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn max_iter_zero_returns_initial_state() {
        let p = scalar_qp();
        let cfg = SPADMMConfig {
            max_iter: 0,
            ..unit_cfg()
        };
        let r = run_sgs_spadmm(&p, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::MaxIter);
        assert_eq!(r.state, SGSState::zeros(&p));
    }

    fn small_qsdp() -> ConicQP {
        // min ½‖X‖² + ⟨C,X⟩ over X ⪰ 0 with trace X = 1 and a box on svec(X).
        let p = 3;
        let n = svec_dim(p);
        let c = SymMatrix::new(Matrix::from_row_slice(
            3,
            3,
            &[1.0, 0.5, -0.2, 0.5, -1.0, 0.3, -0.2, 0.3, 0.4],
        ))
        .unwrap();
        let mut a = Matrix::zeros(1, n);
        for i in 0..p {
            a[(0, svec_index(i, i))] = 1.0;
        }
        ConicQP::new(
            SpaceSpec::Sym(p),
            Matrix::identity(n, n) * 0.5,
            svec(&c),
            a,
            Vector::from_element(1, 1.0),
            ConeKind::Psd,
            BoxSet::uniform(n, -0.8, 0.8),
            Phi::BoxIndicator,
        )
        .unwrap()
    }

    #[test]
    fn iterates_respect_cone_and_certificates() {
        let p = small_qsdp();
        let cfg = SPADMMConfig {
            max_iter: 40,
            ..Default::default()
        };
        let eng = SGSEngine::new(&p, &cfg).unwrap();
        let mut st = SGSState::zeros(&p);
        for _ in 0..40 {
            let (next, tr) = eng.step(&st).unwrap();
            assert!(p.dual_cone_violation(&next.s).unwrap() <= 1e-12);
            let c = eng.certificates(&st, &tr, &next).unwrap();
            assert!(c.iter().all(|v| *v <= 1e-9 * p.scale()), "{c:?}");
            // backward and forward y solves differ only through the s update
            let lhs = eng.y_operator() * (&next.y - &tr.y_half);
            let rhs = -(&p.a * (&next.s - &st.s)) * cfg.sigma;
            assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + st.norm()));
            st = next;
        }
    }

    #[test]
    fn converges_on_small_qsdp() {
        let p = small_qsdp();
        let cfg = SPADMMConfig {
            tol_rel: 1e-9,
            max_iter: 20_000,
            ..Default::default()
        };
        let r = run_sgs_spadmm(&p, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        let primal = crate::solver::run_primal_spadmm(&p, &cfg).unwrap();
        assert!((primal.state.x - &r.state.x).norm() < 1e-6);
    }

    #[test]
    fn q_zero_two_block_equivalence() {
        let mut p = small_qsdp();
        let n = p.dim();
        p.q = Matrix::zeros(n, n);
        let cfg = SPADMMConfig {
            max_iter: 30,
            ..Default::default()
        };
        let eng = SGSEngine::new(&p, &cfg).unwrap();
        let (tb, gcfg) = sgs_equivalent_two_block(&p, &cfg).unwrap();
        let gen = Engine::new(&tb, &gcfg).unwrap();
        let mut st = SGSState::zeros(&p);
        let mut u = IterateState::zeros(&tb);
        for _ in 0..30 {
            st = eng.step(&st).unwrap().0;
            u = gen.step(&u).unwrap().next;
            let sy = crate::linalg::stack(&[&st.s, &st.y]);
            let scale = 1.0 + st.norm();
            assert!((&u.y - sy).amax() <= 1e-10 * scale);
            assert!((&u.z - &st.z).amax() <= 1e-10 * scale);
            assert!((&u.x - &st.x).amax() <= 1e-10 * scale);
        }
    }
}
