//! Convergence constants, the quadratic forms of the linear-rate analysis, and
//! per-iteration checks of the inequalities that drive it.
//!
//! Every check returns a relative slack: the signed gap of the inequality
//! divided by `1 +` the largest magnitude among its terms.

mod checks;
mod ledger;

pub use checks::{
    check_descent, check_pd_equiv, check_residual_bound, check_telescoping, empirical_rate,
    estimate_eta, theta, theta_delta_nu, PdEquivReport, RateReport, SlackCheck, ThetaDeltaNu,
};
pub use ledger::{build_ledger, summarize, Ledger, LedgerRow, SlackSummary, LEDGER_HEADER};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, lambda_max, quad};
use crate::model::{IterateState, TwoBlockProblem};
use crate::solver::{semi_proximal_operators, SPADMMConfig};
use crate::{Matrix, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// `(s_τ, t_τ) = ((5 − τ − 3 min{τ, 1/τ})/4, (1 − τ + min{τ, 1/τ})/8)`.
pub fn stau_ttau(tau: f64) -> Result<(f64, f64)> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let m = tau.min(1.0 / tau);
    Ok(((5.0 - tau - 3.0 * m) / 4.0, (1.0 - tau + m) / 8.0))
}

/// Weight of `σℬℬ*` in the `z` block of `𝓗`: `τ − τ² + τ min{τ, 1/τ}`.
/// Equals `τ` for `τ ≤ 1` and `1 + τ − τ²` above.
pub fn h_z_coefficient(tau: f64) -> f64 {
    tau - tau * tau + tau * tau.min(1.0 / tau)
}

/// Which quadratic form a [`QuadForm`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FormId {
    H0,
    M,
    H,
    EEstar,
}

/// A self-adjoint operator on stacked iterates `(y, z, x)`.
#[derive(Debug, Clone)]
pub struct QuadForm {
    pub id: FormId,
    pub matrix: Matrix,
}

impl QuadForm {
    /// `‖v‖²` in this form, `v` stacked as `(y, z, x)`.
    pub fn norm_sq(&self, v: &Vector) -> f64 {
        quad(&self.matrix, v)
    }

    /// `‖u − u′‖²` in this form.
    pub fn dist_sq(&self, u: &IterateState, v: &IterateState) -> f64 {
        self.norm_sq(&(u.stacked() - v.stacked()))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        crate::linalg::lambda_min(&self.matrix)
    }
}

/// The four forms of the rate analysis.
#[derive(Debug, Clone)]
pub struct QuadForms {
    pub h0: QuadForm,
    pub m: QuadForm,
    pub h: QuadForm,
    pub ee: QuadForm,
}

/// Constants of the rate analysis. Fields that need the error-bound modulus
/// `η` are `None` until one is supplied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateConstants {
    pub sigma: f64,
    pub tau: f64,
    pub s_tau: f64,
    pub t_tau: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa: f64,
    pub lambda_max_m: f64,
    pub eta: Option<f64>,
    pub kappa4: Option<f64>,
    pub kappa5: Option<f64>,
    pub mu: Option<f64>,
}

impl RateConstants {
    /// Key-value text dump, one `key = value` per line.
    pub fn dump(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:e}"));
        format!(
            "sigma = {:e}\ntau = {:e}\ns_tau = {:e}\nt_tau = {:e}\nkappa1 = {:e}\nkappa2 = {:e}\nkappa3 = {:e}\n\
             kappa = {:e}\nlambda_max_M = {:e}\neta = {}\nkappa4 = {}\nkappa5 = {}\nmu = {}\n",
            self.sigma,
            self.tau,
            self.s_tau,
            self.t_tau,
            self.kappa1,
            self.kappa2,
            self.kappa3,
            self.kappa,
            self.lambda_max_m,
            opt(self.eta),
            opt(self.kappa4),
            opt(self.kappa5),
            opt(self.mu),
        )
    }
}

/// Operators and constants for one problem and configuration.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub prob: TwoBlockProblem,
    pub sigma: f64,
    pub tau: f64,
    pub s: Matrix,
    pub t: Matrix,
    /// Lower monotonicity bounds of the two smooth-plus-nonsmooth parts.
    pub sigma_y: Matrix,
    pub sigma_z: Matrix,
    pub forms: QuadForms,
    pub constants: RateConstants,
    pub tau_in_range: bool,
}

impl Diagnostics {
    /// Resolves `S`, `T` from `cfg`; `Σ` are the blocks' own bounds.
    pub fn new(prob: &TwoBlockProblem, cfg: &SPADMMConfig) -> Result<Self> {
        let (s, t) = semi_proximal_operators(prob, cfg)?;
        Self::from_operators(prob, s, t, cfg.sigma, cfg.tau)
    }

    pub fn from_operators(
        prob: &TwoBlockProblem,
        s: Matrix,
        t: Matrix,
        sigma: f64,
        tau: f64,
    ) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Config(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let (s_tau, t_tau) = stau_ttau(tau)?;
        let (ny, nz, nx) = (prob.y.dim(), prob.z.dim(), prob.c.len());
        let (sy, sz) = (prob.y.sigma.clone(), prob.z.sigma.clone());
        let bb = prob.z.adj.tr_mul(&prob.z.adj);
        let eye_x = Matrix::identity(nx, nx);
        let mut e = Matrix::zeros(nx, ny + nz + nx);
        e.columns_mut(0, ny).copy_from(&prob.y.adj);
        e.columns_mut(ny, nz).copy_from(&prob.z.adj);
        let ee = e.tr_mul(&e);

        let lam_a = if ny > 0 && nx > 0 {
            lambda_max(&prob.y.adj.tr_mul(&prob.y.adj))?
        } else {
            0.0
        };
        let lam_b = if nz > 0 && nx > 0 {
            lambda_max(&bb)?
        } else {
            0.0
        };
        let norm = |m: &Matrix| -> Result<f64> {
            if m.nrows() == 0 {
                Ok(0.0)
            } else {
                Ok(lambda_max(m)?.max(0.0))
            }
        };
        let kappa1 = 3.0 * norm(&s)?;
        let kappa2 = (3.0 * sigma * lam_a).max(2.0 * norm(&t)?);
        let omt2 = (1.0 - tau) * (1.0 - tau);
        let kappa3 = 3.0 * omt2 * sigma * lam_a + 2.0 * omt2 * sigma * lam_b + 1.0 / sigma;
        let kappa = kappa1.max(kappa2).max(kappa3);

        let h0 = block_diag(&[&s, &(&t + &bb * sigma), &(&eye_x / (tau * tau * sigma))]) * kappa;
        let m = block_diag(&[
            &(&s + &sy),
            &(&t + &sz + &bb * sigma),
            &(&eye_x / (tau * sigma)),
        ]) + &ee * (s_tau * sigma);
        let h = block_diag(&[
            &(&s + &sy * 0.5),
            &(&t + &sz * 0.5 + &bb * (h_z_coefficient(tau) * sigma)),
            &(&eye_x * (4.0 * t_tau / (tau * tau * sigma))),
        ]) + &ee * (t_tau * sigma);
        let lambda_max_m = lambda_max(&m)?;
        Ok(Self {
            prob: prob.clone(),
            sigma,
            tau,
            s,
            t,
            sigma_y: sy,
            sigma_z: sz,
            forms: QuadForms {
                h0: QuadForm {
                    id: FormId::H0,
                    matrix: h0,
                },
                m: QuadForm {
                    id: FormId::M,
                    matrix: m,
                },
                h: QuadForm {
                    id: FormId::H,
                    matrix: h,
                },
                ee: QuadForm {
                    id: FormId::EEstar,
                    matrix: ee,
                },
            },
            constants: RateConstants {
                sigma,
                tau,
                s_tau,
                t_tau,
                kappa1,
                kappa2,
                kappa3,
                kappa,
                lambda_max_m,
                eta: None,
                kappa4: None,
                kappa5: None,
                mu: None,
            },
            tau_in_range: tau > 0.0 && tau < crate::solver::GOLDEN,
        })
    }

    /// Fills `κ₄, κ₅, μ` from an error-bound modulus estimate.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Domain(format!(
                "eta estimate must be positive and finite, got {eta}"
            )));
        }
        let c = &mut self.constants;
        let k4 = c.tau.min(4.0 * c.t_tau) / (eta * eta * c.kappa * c.lambda_max_m);
        c.eta = Some(eta);
        c.kappa4 = Some(k4);
        c.kappa5 = Some(1.0 / (1.0 + k4));
        c.mu = Some((1.0 + k4) / (1.0 + 2.0 * k4));
        Ok(self)
    }

    /// Smallest relative slack of `κH ⪰ min{τ, 4t_τ}H₀ + κt_τσℰℰ*` over
    /// `samples` seeded Gaussian directions.
    pub fn operator_inequality_min_slack(&self, samples: usize, seed: u64) -> f64 {
        let c = &self.constants;
        let n = self.forms.m.matrix.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coef = c.tau.min(4.0 * c.t_tau);
        let mut worst = f64::INFINITY;
        for _ in 0..samples {
            let v = Vector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
            let lhs = c.kappa * self.forms.h.norm_sq(&v);
            let rhs = coef * self.forms.h0.norm_sq(&v)
                + c.kappa * c.t_tau * self.sigma * self.forms.ee.norm_sq(&v);
            worst = worst.min((lhs - rhs) / (1.0 + lhs.abs().max(rhs.abs())));
        }
        worst
    }
}

/// Builds the diagnostics for `(prob, cfg)` with an `η` estimate and checks the
/// operator inequality between `H`, `H₀` and `ℰℰ*` on `10³` sampled vectors.
pub fn assemble_forms(
    prob: &TwoBlockProblem,
    cfg: &SPADMMConfig,
    eta: f64,
) -> Result<(RateConstants, Diagnostics)> {
    let d = Diagnostics::new(prob, cfg)?.with_eta(eta)?;
    let slack = d.operator_inequality_min_slack(1000, 0x5eed);
    if slack < -1e-9 {
        return Err(Error::Numerical {
            what: format!(
                "operator inequality between H and H0 violated on a sample (slack {slack:e})"
            ),
            iterations: 1000,
        });
    }
    Ok((d.constants, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Block, Nonsmooth};

    #[test]
    fn stau_ttau_hand_values() {
        let (s, t) = stau_ttau(1.0).unwrap();
        assert!((s - 0.25).abs() < 1e-15 && (t - 0.125).abs() < 1e-15);
        let (s, t) = stau_ttau(1.5).unwrap();
        assert!((s - 0.375).abs() < 1e-15 && (t - 1.0 / 48.0).abs() < 1e-15);
        let r3 = 3f64.sqrt();
        let (s, _) = stau_ttau(r3).unwrap();
        assert!((s - (5.0 - 2.0 * r3) / 4.0).abs() < 1e-15);
        assert!(stau_ttau(0.0).is_err());
        assert!(stau_ttau(-1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn tau_constants_stay_in_their_bands(frac in 1e-6..0.999_999f64) {
            let tau = crate::solver::GOLDEN * frac;
            let (s, t) = stau_ttau(tau).unwrap();
            proptest::prop_assert!(s >= 0.25 - 1e-15);
            proptest::prop_assert!(t > 0.0 && t <= 0.125 + 1e-15);
            if tau >= 1.0 {
                proptest::prop_assert!(s <= (5.0 - 2.0 * 3f64.sqrt()) / 4.0 + 1e-12);
            }
            proptest::prop_assert!(h_z_coefficient(tau) >= tau.min(4.0 * t) - 1e-15);
        }
    }

    #[test]
    fn h_z_coefficient_values() {
        assert_eq!(h_z_coefficient(0.5), 0.5);
        assert_eq!(h_z_coefficient(1.0), 1.0);
        assert!((h_z_coefficient(1.5) - 0.25).abs() < 1e-15);
        // Stays above min{τ, 4t_τ} on the admissible range.
        for i in 1..1000 {
            let tau = crate::solver::GOLDEN * i as f64 / 1000.0;
            let (_, t) = stau_ttau(tau).unwrap();
            assert!(
                h_z_coefficient(tau) >= tau.min(4.0 * t) - 1e-15,
                "tau {tau}"
            );
        }
    }

    pub(crate) fn unit_problem() -> TwoBlockProblem {
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

    #[test]
    fn constants_collapse_at_unit_tau() {
        // S = T = 0, τ = 1: κ₁ = 0, κ₂ = 3σλ(𝒜𝒜*), κ₃ = 1/σ.
        let p = unit_problem();
        let d = Diagnostics::from_operators(&p, Matrix::zeros(1, 1), Matrix::zeros(1, 1), 2.0, 1.0)
            .unwrap();
        let c = d.constants;
        assert_eq!(c.kappa1, 0.0);
        assert!((c.kappa2 - 6.0).abs() < 1e-14);
        assert!((c.kappa3 - 0.5).abs() < 1e-15);
        assert!((c.kappa - 6.0).abs() < 1e-14);
    }

    #[test]
    fn unit_norms_give_kappa_three() {
        // All operator norms 1, σ = τ = 1: κ₁ = 3, κ₂ = 3, κ₃ = 1.
        let p = unit_problem();
        let one = Matrix::identity(1, 1);
        let d = Diagnostics::from_operators(&p, one.clone(), one, 1.0, 1.0).unwrap();
        let c = d.constants;
        assert_eq!(
            (c.kappa1, c.kappa2, c.kappa3, c.kappa),
            (3.0, 3.0, 1.0, 3.0)
        );
        // M = Diag(2, 3, 1) + ¼·[1 1 0]ᵀ[1 1 0] with Σ = 1.
        let want = Matrix::from_row_slice(3, 3, &[2.25, 0.25, 0.0, 0.25, 3.25, 0.0, 0.0, 0.0, 1.0]);
        assert!((&d.forms.m.matrix - want).amax() < 1e-15);
    }

    #[test]
    fn mu_identity_and_operator_inequality() {
        let p = unit_problem();
        let cfg = SPADMMConfig {
            tau: 1.3,
            ..Default::default()
        };
        let (c, d) = assemble_forms(&p, &cfg, 2.5).unwrap();
        let (k4, mu) = (c.kappa4.unwrap(), c.mu.unwrap());
        assert!(((1.0 + 2.0 * k4) * mu - (1.0 + k4)).abs() < 1e-12);
        assert!(mu < 1.0 && c.kappa5.unwrap() > 0.0 && c.kappa5.unwrap() < 1.0);
        assert!(d.operator_inequality_min_slack(1000, 1) >= -1e-9);
        assert!(d.clone().with_eta(0.0).is_err());
        assert!(c.kappa.is_finite() && d.constants.dump().contains("mu = "));
    }
}
