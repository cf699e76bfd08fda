use super::{SPADMMConfig, SemiProx, SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, lambda_max, lambda_min, symmetrize};
use crate::model::{residual_r, Block, IterateState, Nonsmooth, TwoBlockProblem};
use crate::{Matrix, Vector};
use nalgebra::{Cholesky, Dyn};

const MAJORIZE_INFLATION: f64 = 1e-6;
const DIVERGENCE_FACTOR: f64 = 1e12;
const INNER_MAX_ITER: usize = 500_000;
const INNER_STALL_TOL: f64 = 1e-13;
const INNER_STALL_WINDOW: usize = 200;

/// How a block subproblem `min N(v) + ½⟨v, M v⟩ − ⟨r, v⟩` is solved.
#[derive(Debug, Clone)]
enum BlockSolver {
    /// `N = 0`: one linear solve.
    Linear(Cholesky<f64, Dyn>),
    /// `M = λI`: one proximal step.
    Scaled(f64),
    /// Accelerated proximal gradient, for semi-proximal choices without a closed form.
    Iterative { op: Matrix, lip: f64, mu: f64 },
}

/// A configured sPADMM engine for one problem.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    prob: &'a TwoBlockProblem,
    cfg: SPADMMConfig,
    s: Matrix,
    t: Matrix,
    op_y: Matrix,
    op_z: Matrix,
    solve_y: BlockSolver,
    solve_z: BlockSolver,
}

/// One step together with the subproblem optimality certificates.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub next: IterateState,
    /// Natural-map residual of the `y` subproblem at the computed point.
    pub cert_y: f64,
    /// Natural-map residual of the `z` subproblem at the computed point.
    pub cert_z: f64,
}

fn semi_prox(
    rule: &SemiProx,
    block: &Block,
    sigma: f64,
    name: &str,
) -> Result<(Matrix, Option<f64>)> {
    let n = block.dim();
    let base = &block.hess + block.adj.tr_mul(&block.adj) * sigma;
    let majorize = |base: &Matrix| -> Result<(Matrix, Option<f64>)> {
        let lam = lambda_max(base)?.max(f64::MIN_POSITIVE) * (1.0 + MAJORIZE_INFLATION);
        Ok((Matrix::identity(n, n) * lam - symmetrize(base), Some(lam)))
    };
    match rule {
        SemiProx::Zero => Ok((Matrix::zeros(n, n), None)),
        SemiProx::Majorize => majorize(&base),
        SemiProx::Auto if block.nonsmooth.is_zero() => Ok((Matrix::zeros(n, n), None)),
        SemiProx::Auto => majorize(&base),
        SemiProx::Explicit(m) => {
            if m.shape() != (n, n) {
                return Err(Error::Config(format!(
                    "explicit semi-proximal operator for block {name} must be {n}x{n}"
                )));
            }
            let scale = m.amax().max(1.0);
            if (m - m.transpose()).amax() > 1e-12 * scale
                || (n > 0 && lambda_min(m)? < -1e-10 * scale)
            {
                return Err(Error::Config(format!(
                    "explicit semi-proximal operator for block {name} must be symmetric PSD"
                )));
            }
            Ok((symmetrize(m), None))
        }
    }
}

fn block_solver(
    op: &Matrix,
    nonsmooth: &Nonsmooth,
    scalar: Option<f64>,
    name: &'static str,
) -> Result<BlockSolver> {
    let n = op.nrows();
    if let Some(lam) = scalar {
        return Ok(BlockSolver::Scaled(lam));
    }
    if nonsmooth.is_zero() {
        return cholesky(op).map(BlockSolver::Linear).ok_or(Error::Step {
            block: name,
            reason: "subproblem operator is not positive definite".into(),
        });
    }
    let mean = if n == 0 { 1.0 } else { op.trace() / n as f64 };
    if (op - Matrix::identity(n, n) * mean).amax() <= 1e-14 * mean.abs() {
        return Ok(BlockSolver::Scaled(mean));
    }
    let lip = lambda_max(op)?;
    let mu = lambda_min(op)?.max(0.0);
    if !(lip > 0.0) {
        return Err(Error::Step {
            block: name,
            reason: "subproblem operator vanishes".into(),
        });
    }
    Ok(BlockSolver::Iterative {
        op: op.clone(),
        lip,
        mu,
    })
}

impl BlockSolver {
    fn solve(
        &self,
        rhs: &Vector,
        ns: &Nonsmooth,
        warm: &Vector,
        name: &'static str,
    ) -> Result<Vector> {
        match self {
            BlockSolver::Linear(ch) => Ok(ch.solve(rhs)),
            BlockSolver::Scaled(lam) => ns.prox(1.0 / lam, &(rhs / *lam)),
            BlockSolver::Iterative { op, lip, mu } => {
                let q = if *mu > 0.0 {
                    let (a, b) = (lip.sqrt(), mu.sqrt());
                    (a - b) / (a + b)
                } else {
                    0.0
                };
                let mut y = ns.prox(1.0 / lip, warm)?;
                let mut v = y.clone();
                let mut t_k: f64 = 1.0;
                let (mut best, mut since_best) = (f64::INFINITY, 0usize);
                for _ in 0..INNER_MAX_ITER {
                    let grad = op * &v - rhs;
                    let y_new = ns.prox(1.0 / lip, &(&v - grad / *lip))?;
                    let step = (&y_new - &y).norm();
                    let mom = if *mu > 0.0 {
                        q
                    } else {
                        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
                        let m = (t_k - 1.0) / t_next;
                        t_k = t_next;
                        m
                    };
                    // restart when the objective model increases
                    let restart = (&y_new - &y).dot(&(&v - &y_new)) > 0.0;
                    v = if restart {
                        y_new.clone()
                    } else {
                        &y_new + (&y_new - &y) * mom
                    };
                    if restart {
                        t_k = 1.0;
                    }
                    y = y_new;
                    let scale = 1.0 + y.norm();
                    if step <= 4.0 * f64::EPSILON * scale {
                        return Ok(y);
                    }
                    // round-off floor of the prox: stop once the step stops shrinking
                    if step < best {
                        (best, since_best) = (step, 0);
                    } else {
                        since_best += 1;
                    }
                    if best <= INNER_STALL_TOL * scale && since_best >= INNER_STALL_WINDOW {
                        return Ok(y);
                    }
                }
                Err(Error::Step {
                    block: name,
                    reason: format!(
                        "inner proximal-gradient solve hit {INNER_MAX_ITER} iterations"
                    ),
                })
            }
        }
    }
}

/// Natural-map residual `‖v − prox_N(v + ξ)‖` with `ξ = r − M v`.
fn certificate(op: &Matrix, rhs: &Vector, ns: &Nonsmooth, v: &Vector) -> Result<f64> {
    let xi = rhs - op * v;
    Ok((v - ns.prox(1.0, &(v + xi))?).norm())
}

impl<'a> Engine<'a> {
    /// Builds the semi-proximal operators and block solvers, and checks that
    /// `Σ_y + S + σ𝒜𝒜*` and `Σ_z + T + σℬℬ*` are positive definite.
    pub fn new(prob: &'a TwoBlockProblem, cfg: &SPADMMConfig) -> Result<Self> {
        cfg.validate()?;
        let sigma = cfg.sigma;
        let (s, lam_y) = semi_prox(&cfg.s_rule, &prob.y, sigma, "y")?;
        let (t, lam_z) = semi_prox(&cfg.t_rule, &prob.z, sigma, "z")?;
        let op_y = &prob.y.hess + prob.y.adj.tr_mul(&prob.y.adj) * sigma + &s;
        let op_z = &prob.z.hess + prob.z.adj.tr_mul(&prob.z.adj) * sigma + &t;
        for (name, op) in [
            ("y", &op_y - &prob.y.hess + &prob.y.sigma),
            ("z", &op_z - &prob.z.hess + &prob.z.sigma),
        ] {
            if op.nrows() == 0 {
                continue;
            }
            let lmax = lambda_max(&op)?;
            let lmin = lambda_min(&op)?;
            if lmin < 1e-8 * lmax.max(1.0) {
                return Err(Error::Config(format!(
                    "Σ + semi-proximal + σ·(operator product) for block {name} is not positive definite \
                     (min eigenvalue {lmin:e}); convergence cannot be certified"
                )));
            }
        }
        let solve_y = block_solver(&op_y, &prob.y.nonsmooth, lam_y, "y")?;
        let solve_z = block_solver(&op_z, &prob.z.nonsmooth, lam_z, "z")?;
        Ok(Self {
            prob,
            cfg: cfg.clone(),
            s,
            t,
            op_y,
            op_z,
            solve_y,
            solve_z,
        })
    }

    pub fn problem(&self) -> &TwoBlockProblem {
        self.prob
    }

    pub fn config(&self) -> &SPADMMConfig {
        &self.cfg
    }

    /// The semi-proximal operator of the `y` block.
    pub fn s(&self) -> &Matrix {
        &self.s
    }

    /// The semi-proximal operator of the `z` block.
    pub fn t(&self) -> &Matrix {
        &self.t
    }

    /// One sPADMM step from `u`.
    pub fn step(&self, u: &IterateState) -> Result<StepOutput> {
        let p = self.prob;
        let sigma = self.cfg.sigma;
        let bz_c = p.z.apply_adj(&u.z) - &p.c;
        let rhs_y = &self.s * &u.y - &p.y.lin - p.y.apply_op(&u.x) - p.y.apply_op(&bz_c) * sigma;
        let y = self.solve_y.solve(&rhs_y, &p.y.nonsmooth, &u.y, "y")?;
        let ay_c = p.y.apply_adj(&y) - &p.c;
        let rhs_z = &self.t * &u.z - &p.z.lin - p.z.apply_op(&u.x) - p.z.apply_op(&ay_c) * sigma;
        let z = self.solve_z.solve(&rhs_z, &p.z.nonsmooth, &u.z, "z")?;
        let x = &u.x + p.constraint_residual(&y, &z) * (self.cfg.tau * sigma);
        let cert_y = certificate(&self.op_y, &rhs_y, &p.y.nonsmooth, &y)?;
        let cert_z = certificate(&self.op_z, &rhs_z, &p.z.nonsmooth, &z)?;
        Ok(StepOutput {
            next: IterateState {
                y,
                z,
                x,
                k: u.k + 1,
            },
            cert_y,
            cert_z,
        })
    }

    /// Iterates from `u0` until the relative KKT residual drops below the tolerance.
    pub fn run(&self, u0: IterateState) -> Result<SolveResult<IterateState>> {
        let scale = self.prob.scale();
        let div = DIVERGENCE_FACTOR * u0.norm().max(scale);
        let mut u = u0;
        let mut out = SolveResult {
            state: u.clone(),
            status: SolveStatus::MaxIter,
            iterations: 0,
            residual: residual_r(self.prob, &u)?.1 / scale,
            residual_history: Vec::new(),
            history: Vec::new(),
            worst_certificate: 0.0,
            tau_in_range: self.cfg.tau_in_range(),
        };
        if self.cfg.history.keeps(0) {
            out.history.push(u.clone());
        }
        for _ in 0..self.cfg.max_iter {
            let st = self.step(&u)?;
            u = st.next;
            out.worst_certificate = out.worst_certificate.max(st.cert_y).max(st.cert_z);
            let rel = residual_r(self.prob, &u)?.1 / scale;
            out.residual_history.push(rel);
            out.residual = rel;
            out.iterations = u.k;
            if self.cfg.history.keeps(u.k) {
                out.history.push(u.clone());
            }
            if !(u.norm() <= div) || !rel.is_finite() {
                out.status = SolveStatus::Diverged;
                break;
            }
            if rel <= self.cfg.tol_rel {
                out.status = SolveStatus::Converged;
                break;
            }
        }
        out.state = u;
        Ok(out)
    }
}

/// The semi-proximal operators `(S, T)` that `cfg` selects for `prob`.
pub fn semi_proximal_operators(
    prob: &TwoBlockProblem,
    cfg: &SPADMMConfig,
) -> Result<(Matrix, Matrix)> {
    let s = semi_prox(&cfg.s_rule, &prob.y, cfg.sigma, "y")?.0;
    let t = semi_prox(&cfg.t_rule, &prob.z, cfg.sigma, "z")?.0;
    Ok((s, t))
}

/// One sPADMM step (builds the engine; prefer [`Engine`] inside loops).
pub fn spadmm_step(
    prob: &TwoBlockProblem,
    cfg: &SPADMMConfig,
    u: &IterateState,
) -> Result<IterateState> {
    Ok(Engine::new(prob, cfg)?.step(u)?.next)
}

/// Runs sPADMM from the origin.
pub fn run_spadmm(prob: &TwoBlockProblem, cfg: &SPADMMConfig) -> Result<SolveResult<IterateState>> {
    run_spadmm_from(prob, cfg, IterateState::zeros(prob))
}

/// Runs sPADMM from `u0`.
pub fn run_spadmm_from(
    prob: &TwoBlockProblem,
    cfg: &SPADMMConfig,
    u0: IterateState,
) -> Result<SolveResult<IterateState>> {
    Engine::new(prob, cfg)?.run(u0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProxKind;
    use crate::polyset::BoxSet;
    use crate::solver::HistoryMode;

    fn scalar() -> TwoBlockProblem {
        let one = Matrix::identity(1, 1);
        TwoBlockProblem::new(
            Block::new(
                one.clone(),
                Vector::zeros(1),
                Nonsmooth::zero(),
                one.clone(),
            ),
            Block::new(one.clone(), Vector::zeros(1), Nonsmooth::zero(), one),
            Vector::from_element(1, 2.0),
        )
        .unwrap()
    }

    fn unit_cfg() -> SPADMMConfig {
        SPADMMConfig {
            sigma: 1.0,
            tau: 1.0,
            s_rule: SemiProx::Zero,
            t_rule: SemiProx::Zero,
            ..Default::default()
        }
    }

    #[test]
    fn scalar_first_step_matches_hand_derivation() {
        // y¹ = argmin ½y² + ½(y − 2)² = 1; z¹ = argmin ½z² + ½(1 + z − 2)² = ½;
        // x¹ = 0 + (1 + ½ − 2) = −½.
        let p = scalar();
        let u1 = spadmm_step(&p, &unit_cfg(), &IterateState::zeros(&p)).unwrap();
        assert!((u1.y[0] - 1.0).abs() < 1e-15);
        assert!((u1.z[0] - 0.5).abs() < 1e-15);
        assert!((u1.x[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn kkt_point_is_fixed() {
        let p = scalar();
        let u = IterateState {
            y: Vector::from_element(1, 1.0),
            z: Vector::from_element(1, 1.0),
            x: Vector::from_element(1, -1.0),
            k: 0,
        };
        let next = spadmm_step(&p, &unit_cfg(), &u).unwrap();
        assert!((next.stacked() - u.stacked()).amax() < 1e-12);
    }

    #[test]
    fn converges_on_scalar_problem() {
        let p = scalar();
        let cfg = SPADMMConfig {
            tol_rel: 1e-12,
            history: HistoryMode::Full,
            ..unit_cfg()
        };
        let r = run_spadmm(&p, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.state.y[0] - 1.0).abs() < 1e-10);
        assert_eq!(r.history.len(), r.iterations + 1);
    }

    #[test]
    fn max_iter_zero_returns_start() {
        let p = scalar();
        let cfg = SPADMMConfig {
            max_iter: 0,
            ..unit_cfg()
        };
        let r = run_spadmm(&p, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::MaxIter);
        assert_eq!(r.state, IterateState::zeros(&p));
    }

    #[test]
    fn tau_range_enforced_unless_overridden() {
        let p = scalar();
        let cfg = SPADMMConfig {
            tau: 2.0,
            ..unit_cfg()
        };
        assert!(matches!(run_spadmm(&p, &cfg), Err(Error::Config(_))));
        let cfg = SPADMMConfig {
            tau: 2.0,
            allow_tau_out_of_range: true,
            max_iter: 5,
            ..unit_cfg()
        };
        let r = run_spadmm(&p, &cfg).unwrap();
        assert!(!r.tau_in_range);
    }

    #[test]
    fn refuses_without_positive_definiteness() {
        // z enters with ℬ* = 0 and no curvature: Σ_z + T + σℬℬ* = 0.
        let one = Matrix::identity(1, 1);
        let p = TwoBlockProblem::new(
            Block::new(one.clone(), Vector::zeros(1), Nonsmooth::zero(), one),
            Block::new(
                Matrix::zeros(1, 1),
                Vector::zeros(1),
                Nonsmooth::zero(),
                Matrix::zeros(1, 1),
            ),
            Vector::from_element(1, 1.0),
        )
        .unwrap();
        assert!(matches!(run_spadmm(&p, &unit_cfg()), Err(Error::Config(_))));
    }

    #[test]
    fn iterative_block_solver_matches_closed_form() {
        // y-block with a box term and a non-scalar operator: compare the inner
        // solver with a brute-force coordinate search on a 1-d problem embedded in 2-d.
        let adj = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let ns = Nonsmooth::single(ProxKind::Box(BoxSet::nonneg(2)));
        let p = TwoBlockProblem::new(
            Block::new(
                Matrix::zeros(2, 2),
                Vector::from_column_slice(&[1.0, -1.0]),
                ns,
                adj,
            ),
            Block::new(
                Matrix::zeros(2, 2),
                Vector::zeros(2),
                Nonsmooth::zero(),
                Matrix::identity(2, 2),
            ),
            Vector::from_column_slice(&[1.0, 2.0]),
        )
        .unwrap();
        let cfg = SPADMMConfig {
            s_rule: SemiProx::Zero,
            ..unit_cfg()
        };
        let eng = Engine::new(&p, &cfg).unwrap();
        let out = eng.step(&IterateState::zeros(&p)).unwrap();
        assert!(out.cert_y < 1e-12, "{}", out.cert_y);
        assert!(out.next.y.iter().all(|v| *v >= 0.0));
    }
}
