use super::Diagnostics;
use crate::error::{Error, Result};
use crate::linalg::{lambda_max, lambda_min, quad};
use crate::model::{residual_r, IterateState};
use crate::Vector;
use serde::Serialize;

const CERTIFIED_BAR: f64 = 1e-9;
const STEP_MATCH: f64 = 1e-8;
const TAIL_WINDOW: usize = 100;

/// A checked inequality `larger ≥ smaller`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlackCheck {
    pub larger: f64,
    pub smaller: f64,
    /// `larger − smaller`.
    pub slack: f64,
    /// `slack / (1 + largest term magnitude)`.
    pub relative: f64,
}

impl SlackCheck {
    fn new(larger: f64, smaller: f64, terms: &[f64]) -> Self {
        let scale = 1.0
            + terms
                .iter()
                .fold(larger.abs().max(smaller.abs()), |a, t| a.max(t.abs()));
        let slack = larger - smaller;
        Self {
            larger,
            smaller,
            slack,
            relative: slack / scale,
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.relative >= -tol
    }
}

fn check_step(d: &Diagnostics, u: &IterateState, next: &IterateState) -> Result<()> {
    let r = d.prob.constraint_residual(&next.y, &next.z);
    let err = (&next.x - &u.x - r * (d.tau * d.sigma)).norm();
    if err > STEP_MATCH * (1.0 + u.x.norm() + next.x.norm()) {
        return Err(Error::Input(format!(
            "iterates {} → {} do not match a multiplier step with tau = {}, sigma = {} (mismatch {err:e})",
            u.k, next.k, d.tau, d.sigma
        )));
    }
    Ok(())
}

fn check_bar(d: &Diagnostics, u_bar: &IterateState) -> Result<()> {
    let r = residual_r(&d.prob, u_bar)?.1;
    if r > CERTIFIED_BAR * d.prob.scale() {
        return Err(Error::Certification(format!(
            "reference point has KKT residual {r:e}, above {CERTIFIED_BAR:e}·scale"
        )));
    }
    Ok(())
}

/// `‖u^{k+1} − u^k‖²_{H₀} ≥ ‖R(u^{k+1})‖²` for one step `u_k → u_k1`.
pub fn check_residual_bound(
    d: &Diagnostics,
    u_k: &IterateState,
    u_k1: &IterateState,
) -> Result<SlackCheck> {
    check_step(d, u_k, u_k1)?;
    let lhs = d.forms.h0.dist_sq(u_k1, u_k);
    let r = residual_r(&d.prob, u_k1)?.1;
    Ok(SlackCheck::new(lhs, r * r, &[]))
}

fn lyapunov(
    d: &Diagnostics,
    u: &IterateState,
    u_prev: &IterateState,
    u_bar: &IterateState,
) -> (f64, f64) {
    let m = d.forms.m.dist_sq(u, u_bar);
    let t = quad(&d.t, &(&u.z - &u_prev.z));
    (m, t)
}

/// `‖u^{k+1}−ū‖²_M + ‖z^{k+1}−z^k‖²_T ≤ ‖u^k−ū‖²_M + ‖z^k−z^{k−1}‖²_T − ‖u^{k+1}−u^k‖²_H`
/// for `k ≥ 1`, given `u^{k−1}, u^k, u^{k+1}` and a certified KKT point `ū`.
pub fn check_descent(
    d: &Diagnostics,
    u_km1: &IterateState,
    u_k: &IterateState,
    u_k1: &IterateState,
    u_bar: &IterateState,
) -> Result<SlackCheck> {
    check_step(d, u_k, u_k1)?;
    check_bar(d, u_bar)?;
    let (m0, t0) = lyapunov(d, u_k, u_km1, u_bar);
    let (m1, t1) = lyapunov(d, u_k1, u_k, u_bar);
    let h = d.forms.h.dist_sq(u_k1, u_k);
    Ok(SlackCheck::new(m0 + t0 - h, m1 + t1, &[m0, t0, m1, t1, h]))
}

/// `θ(u, u′) = (τσ)⁻¹‖x−x′‖² + ‖y−y′‖²_S + ‖z−z′‖²_T + σ‖ℬ*(z−z′)‖²`.
pub fn theta(d: &Diagnostics, u: &IterateState, v: &IterateState) -> f64 {
    let dz = &u.z - &v.z;
    (&u.x - &v.x).norm_squared() / (d.tau * d.sigma)
        + quad(&d.s, &(&u.y - &v.y))
        + quad(&d.t, &dz)
        + d.sigma * d.prob.z.apply_adj(&dz).norm_squared()
}

/// `θ(u^k, ū)` with the step quantities `δ_k` and `ν_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaDeltaNu {
    pub theta: f64,
    pub delta: f64,
    pub nu: f64,
}

pub fn theta_delta_nu(
    d: &Diagnostics,
    u_k: &IterateState,
    u_km1: &IterateState,
    u_bar: &IterateState,
) -> ThetaDeltaNu {
    let (tau, sigma) = (d.tau, d.sigma);
    let dz = &u_k.z - &u_km1.z;
    let delta =
        tau * (1.0 - tau + tau.min(1.0 / tau)) * sigma * d.prob.z.apply_adj(&dz).norm_squared()
            + quad(&d.t, &dz);
    let nu = delta
        + quad(&d.s, &(&u_k.y - &u_km1.y))
        + 2.0 * quad(&d.sigma_y, &(&u_k.y - &u_bar.y))
        + 2.0 * quad(&d.sigma_z, &(&u_k.z - &u_bar.z));
    ThetaDeltaNu {
        theta: theta(d, u_k, u_bar),
        delta,
        nu,
    }
}

/// One step of the telescoping inequality behind global convergence:
/// `Φ_{k+1} − Φ_k ≤ −[ν_{k+1} + (1 − τ + min{τ,1/τ})σ‖𝒜*y^{k+1} + ℬ*z^{k+1} − c‖²]` with
/// `Φ_k = θ(u^k, ū) + ‖z^k − z^{k−1}‖²_T + (1 − min{τ,1/τ})σ‖𝒜*y^k + ℬ*z^k − c‖²`.
pub fn check_telescoping(
    d: &Diagnostics,
    u_km1: &IterateState,
    u_k: &IterateState,
    u_k1: &IterateState,
    u_bar: &IterateState,
) -> Result<SlackCheck> {
    check_step(d, u_k, u_k1)?;
    check_bar(d, u_bar)?;
    let (tau, sigma) = (d.tau, d.sigma);
    let mn = tau.min(1.0 / tau);
    let phi = |u: &IterateState, prev: &IterateState| {
        theta(d, u, u_bar)
            + quad(&d.t, &(&u.z - &prev.z))
            + (1.0 - mn) * sigma * d.prob.constraint_residual(&u.y, &u.z).norm_squared()
    };
    let (p0, p1) = (phi(u_k, u_km1), phi(u_k1, u_k));
    let nu = theta_delta_nu(d, u_k1, u_k, u_bar).nu;
    let feas =
        (1.0 - tau + mn) * sigma * d.prob.constraint_residual(&u_k1.y, &u_k1.z).norm_squared();
    Ok(SlackCheck::new(p0 - nu - feas, p1, &[p0, p1, nu, feas]))
}

/// Minimum eigenvalues behind the positivity equivalence of the block
/// operators, `M` and `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdEquivReport {
    /// `λ_min(Σ_y + S + σ𝒜𝒜*)`.
    pub min_eig_y: f64,
    /// `λ_min(Σ_z + T + σℬℬ*)`.
    pub min_eig_z: f64,
    pub min_eig_m: f64,
    pub min_eig_h: f64,
    pub blocks_pd: bool,
    pub m_pd: bool,
    pub h_pd: bool,
    pub agree: bool,
}

pub fn check_pd_equiv(d: &Diagnostics) -> Result<PdEquivReport> {
    if !d.tau_in_range {
        return Err(Error::Domain(format!(
            "tau = {} is outside (0, (1+√5)/2)",
            d.tau
        )));
    }
    let pd = |m: &crate::Matrix| -> Result<(f64, bool)> {
        if m.nrows() == 0 {
            return Ok((f64::INFINITY, true));
        }
        let lo = lambda_min(m)?;
        Ok((lo, lo > 1e-10 * (1.0 + lambda_max(m)?.abs())))
    };
    let p = &d.prob;
    let op_y = &d.sigma_y + &d.s + p.y.adj.tr_mul(&p.y.adj) * d.sigma;
    let op_z = &d.sigma_z + &d.t + p.z.adj.tr_mul(&p.z.adj) * d.sigma;
    let (ey, py) = pd(&op_y)?;
    let (ez, pz) = pd(&op_z)?;
    let (em, pm) = pd(&d.forms.m.matrix)?;
    let (eh, ph) = pd(&d.forms.h.matrix)?;
    let blocks_pd = py && pz;
    Ok(PdEquivReport {
        min_eig_y: ey,
        min_eig_z: ez,
        min_eig_m: em,
        min_eig_h: eh,
        blocks_pd,
        m_pd: pm,
        h_pd: ph,
        agree: blocks_pd == pm && pm == ph,
    })
}

/// Per-step contraction of `V_k = ‖u^k − ū‖²_M + ‖z^k − z^{k−1}‖²_T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    /// `V_{k+1}/V_k` for consecutive `k ≥ 1` while both exceed the floor.
    pub ratios: Vec<f64>,
    /// Geometric mean of the last 100 ratios.
    pub tail_rate: Option<f64>,
}

fn check_consecutive(history: &[IterateState]) -> Result<()> {
    if history.len() < 2 {
        return Err(Error::Input(
            "rate estimation needs a recorded history".into(),
        ));
    }
    if history.windows(2).any(|w| w[1].k != w[0].k + 1) {
        return Err(Error::Input(
            "rate estimation needs consecutive iterates".into(),
        ));
    }
    Ok(())
}

/// Empirical contraction of the Lyapunov quantity. Ratios stop once `V_k`
/// reaches `floor`, below which the reference point's own error dominates.
pub fn empirical_rate(
    d: &Diagnostics,
    history: &[IterateState],
    u_bar: &IterateState,
    floor: f64,
) -> Result<RateReport> {
    check_consecutive(history)?;
    let v: Vec<f64> = history
        .windows(2)
        .map(|w| {
            let (m, t) = lyapunov(d, &w[1], &w[0], u_bar);
            m + t
        })
        .collect();
    let mut ratios = Vec::new();
    for w in v.windows(2) {
        if !(w[0] > floor && w[1] > floor) {
            break;
        }
        ratios.push(w[1] / w[0]);
    }
    let tail = &ratios[ratios.len().saturating_sub(TAIL_WINDOW)..];
    let tail_rate = if tail.is_empty() {
        None
    } else {
        Some((tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64).exp())
    };
    Ok(RateReport { ratios, tail_rate })
}

/// `max ‖u^k − ū‖ / ‖R(u^k)‖` over the last `tail` recorded iterates with `R ≠ 0`.
pub fn estimate_eta(
    d: &Diagnostics,
    history: &[IterateState],
    u_bar: &IterateState,
    tail: usize,
) -> Result<Option<f64>> {
    let start = history.len().saturating_sub(tail);
    let bar: Vector = u_bar.stacked();
    let mut best: Option<f64> = None;
    for u in &history[start..] {
        let r = residual_r(&d.prob, u)?.1;
        if r > 0.0 {
            let q = (u.stacked() - &bar).norm() / r;
            best = Some(best.map_or(q, |b: f64| b.max(q)));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::super::tests::unit_problem;
    use super::*;
    use crate::model::{Block, Nonsmooth, TwoBlockProblem};
    use crate::solver::{Engine, HistoryMode, SPADMMConfig, SemiProx};
    use crate::Matrix;

    fn kkt() -> IterateState {
        IterateState {
            y: Vector::from_element(1, 1.0),
            z: Vector::from_element(1, 1.0),
            x: Vector::from_element(1, -1.0),
            k: 0,
        }
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
    fn residual_bound_hand_example() {
        // u⁰ = 0 → u¹ = (1, ½, −½): H₀ = κ·Diag(0, 1, 1) with κ = 3, so the left side
        // is 3(¼ + ¼) = 3/2. R(u¹) = (y + x, z + x, 2 − y − z) = (½, 0, ½) has squared norm ½.
        let p = unit_problem();
        let d = Diagnostics::new(&p, &unit_cfg()).unwrap();
        let u0 = IterateState::zeros(&p);
        let u1 = Engine::new(&p, &unit_cfg())
            .unwrap()
            .step(&u0)
            .unwrap()
            .next;
        let c = check_residual_bound(&d, &u0, &u1).unwrap();
        assert!((c.larger - 1.5).abs() < 1e-14, "{}", c.larger);
        assert!((c.smaller - 0.5).abs() < 1e-14, "{}", c.smaller);
        assert!(c.passes(0.0));
    }

    #[test]
    fn fixed_point_gives_zero_sides() {
        let p = unit_problem();
        let d = Diagnostics::new(&p, &unit_cfg()).unwrap();
        let u = kkt();
        let mut u1 = u.clone();
        u1.k = 1;
        let c = check_residual_bound(&d, &u, &u1).unwrap();
        assert_eq!((c.larger, c.smaller), (0.0, 0.0));
        let l = check_descent(&d, &u, &u, &u1, &u).unwrap();
        assert_eq!(l.slack, 0.0);
        assert_eq!(theta(&d, &u, &u), 0.0);
    }

    #[test]
    fn mismatched_step_is_rejected() {
        let p = unit_problem();
        let d = Diagnostics::new(&p, &unit_cfg()).unwrap();
        let u0 = IterateState::zeros(&p);
        let cfg = SPADMMConfig {
            tau: 1.5,
            ..unit_cfg()
        };
        let u1 = Engine::new(&p, &cfg).unwrap().step(&u0).unwrap().next;
        assert!(matches!(
            check_residual_bound(&d, &u0, &u1),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn uncertified_reference_is_rejected() {
        let p = unit_problem();
        let d = Diagnostics::new(&p, &unit_cfg()).unwrap();
        let u0 = IterateState::zeros(&p);
        let u1 = Engine::new(&p, &unit_cfg())
            .unwrap()
            .step(&u0)
            .unwrap()
            .next;
        assert!(matches!(
            check_descent(&d, &u0, &u0, &u1, &u0),
            Err(Error::Certification(_))
        ));
    }

    #[test]
    fn delta_collapses_at_unit_tau() {
        let p = unit_problem();
        let t = Matrix::identity(1, 1) * 0.3;
        let d = Diagnostics::from_operators(&p, Matrix::zeros(1, 1), t, 2.0, 1.0).unwrap();
        let a = kkt();
        let mut b = kkt();
        b.z[0] = 3.0;
        let tdn = theta_delta_nu(&d, &b, &a, &a);
        // σ‖ℬ*Δz‖² + ‖Δz‖²_T = 2·4 + 0.3·4.
        assert!((tdn.delta - 9.2).abs() < 1e-14);
        assert!(tdn.nu >= tdn.delta);
    }

    #[test]
    fn trajectory_inequalities_hold() {
        let p = unit_problem();
        for tau in [0.8, 1.0, 1.618] {
            let cfg = SPADMMConfig {
                tau,
                max_iter: 60,
                tol_rel: 0.0,
                history: HistoryMode::Full,
                ..unit_cfg()
            };
            let d = Diagnostics::new(&p, &cfg).unwrap();
            let r = Engine::new(&p, &cfg)
                .unwrap()
                .run(IterateState::zeros(&p))
                .unwrap();
            let h = &r.history;
            let bar = kkt();
            for k in 1..h.len() - 1 {
                assert!(check_residual_bound(&d, &h[k], &h[k + 1])
                    .unwrap()
                    .passes(1e-9));
                assert!(check_descent(&d, &h[k - 1], &h[k], &h[k + 1], &bar)
                    .unwrap()
                    .passes(1e-8));
                assert!(check_telescoping(&d, &h[k - 1], &h[k], &h[k + 1], &bar)
                    .unwrap()
                    .passes(1e-8));
            }
            let rate = empirical_rate(&d, h, &bar, 1e-24).unwrap();
            assert!(rate.tail_rate.unwrap() < 1.0);
            assert!(estimate_eta(&d, h, &bar, 20).unwrap().unwrap() > 0.0);
        }
    }

    #[test]
    fn converged_start_gives_empty_ratios() {
        let p = unit_problem();
        let d = Diagnostics::new(&p, &unit_cfg()).unwrap();
        let mut h = vec![kkt(), kkt(), kkt()];
        h[1].k = 1;
        h[2].k = 2;
        let r = empirical_rate(&d, &h, &kkt(), 0.0).unwrap();
        assert!(r.ratios.is_empty() && r.tail_rate.is_none());
        assert!(empirical_rate(&d, &h[..1], &kkt(), 0.0).is_err());
    }

    #[test]
    fn pd_equivalence_with_and_without_kernel() {
        let p = unit_problem();
        let r = check_pd_equiv(&Diagnostics::new(&p, &unit_cfg()).unwrap()).unwrap();
        assert!(r.agree && r.blocks_pd);
        // ℬ with a kernel direction and Σ_z = T = 0.
        let one = Matrix::identity(1, 1);
        let q = TwoBlockProblem::new(
            Block::new(one.clone(), Vector::zeros(1), Nonsmooth::zero(), one),
            Block::new(
                Matrix::zeros(2, 2),
                Vector::zeros(2),
                Nonsmooth::zero(),
                Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            ),
            Vector::zeros(1),
        )
        .unwrap();
        let d = Diagnostics::from_operators(&q, Matrix::zeros(1, 1), Matrix::zeros(2, 2), 1.0, 1.2)
            .unwrap();
        let r = check_pd_equiv(&d).unwrap();
        assert!(r.agree && !r.blocks_pd && !r.m_pd && !r.h_pd);
    }
}
