//! Problem data: conic quadratic programs, the abstract two-block problem,
//! KKT residual maps, the restricted Wolfe dual and objective evaluation.

mod dual;
mod kkt;
mod twoblock;

pub use dual::{
    build_restricted_wolfe_dual, build_wolfe_dual, duality_gap, objective_dual, objective_primal,
    DualModel, ObjectiveValue,
};
pub use kkt::{kkt_residual_dual, kkt_residual_primal, DualPoint, KKTPoint, PrimalPoint};
pub use twoblock::{residual_r, Block, IterateState, Nonsmooth, ProxKind, TwoBlockProblem};

use crate::error::{check_dim, Error, Result};
use crate::matcone::{self, smat, svec, svec_dim, SymMatrix};
use crate::polyset::{self, BoxSet};
use crate::{Matrix, Vector};

/// The space holding the primal variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceSpec {
    /// `ℝⁿ`.
    Vector(usize),
    /// Symmetric `p×p` matrices in `svec` coordinates.
    Sym(usize),
}

impl SpaceSpec {
    pub fn dim(&self) -> usize {
        match *self {
            SpaceSpec::Vector(n) => n,
            SpaceSpec::Sym(p) => svec_dim(p),
        }
    }
}

/// The cone constraint on the primal variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    /// No cone constraint (`𝒦` is the whole space).
    None,
    /// The PSD cone (requires a matrix space).
    Psd,
}

/// The polyhedral function `φ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Phi {
    /// Indicator of the box `P` of the problem.
    BoxIndicator,
    /// `Σ wᵢ|xᵢ|` with `w ≥ 0`.
    WeightedL1(Vector),
}

/// `min ½⟨x,Qx⟩ + ⟨c,x⟩ + φ(x)  s.t.  Ax = b, x ∈ 𝒦`.
///
/// Matrix-space data lives in `svec` coordinates, so `Q` is `d×d` and `A` is
/// `m×d` with `d = p(p+1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicQP {
    pub space: SpaceSpec,
    pub q: Matrix,
    pub c: Vector,
    pub a: Matrix,
    pub b: Vector,
    pub cone: ConeKind,
    pub pset: BoxSet,
    pub phi: Phi,
}

impl ConicQP {
    /// Validates shapes, symmetry and semidefiniteness of `Q`, and the
    /// consistency of cone, space and `φ`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        space: SpaceSpec,
        q: Matrix,
        c: Vector,
        a: Matrix,
        b: Vector,
        cone: ConeKind,
        pset: BoxSet,
        phi: Phi,
    ) -> Result<Self> {
        let d = space.dim();
        check_dim("Q rows", d, q.nrows())?;
        check_dim("Q columns", d, q.ncols())?;
        check_dim("c", d, c.len())?;
        check_dim("A columns", d, a.ncols())?;
        check_dim("b", a.nrows(), b.len())?;
        check_dim("P", d, pset.dim())?;
        let finite = q.iter().chain(c.iter()).chain(a.iter()).chain(b.iter());
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("problem data has non-finite entries".into()));
        }
        if (&q - q.transpose()).amax() > 1e-12 * (1.0 + q.amax()) {
            return Err(Error::Input("Q is not symmetric".into()));
        }
        let q = crate::linalg::symmetrize(&q);
        let qn = crate::linalg::lambda_max(&q)?.abs();
        let qmin = crate::linalg::lambda_min(&q)?;
        if qmin < -1e-10 * qn {
            return Err(Error::Input(format!(
                "Q is not positive semidefinite (min eigenvalue {qmin:e})"
            )));
        }
        if cone == ConeKind::Psd && !matches!(space, SpaceSpec::Sym(_)) {
            return Err(Error::Input(
                "the PSD cone needs a symmetric-matrix space".into(),
            ));
        }
        if let Phi::WeightedL1(w) = &phi {
            check_dim("l1 weights", d, w.len())?;
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Input(
                    "l1 weights must be finite and nonnegative".into(),
                ));
            }
            if !pset.is_free() {
                return Err(Error::Input(
                    "a weighted l1 term cannot be combined with a finite box".into(),
                ));
            }
        }
        Ok(Self {
            space,
            q,
            c,
            a,
            b,
            cone,
            pset,
            phi,
        })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// `1 + ‖b‖ + ‖c‖`, the normalisation of relative residuals.
    pub fn scale(&self) -> f64 {
        1.0 + self.b.norm() + self.c.norm()
    }

    pub(crate) fn order(&self) -> usize {
        match self.space {
            SpaceSpec::Sym(p) => p,
            SpaceSpec::Vector(_) => unreachable!("cone checks precede this"),
        }
    }

    /// Projection onto `𝒦`.
    pub fn project_cone(&self, x: &Vector) -> Result<Vector> {
        match self.cone {
            ConeKind::None => Ok(x.clone()),
            ConeKind::Psd => {
                check_dim("cone projection", self.dim(), x.len())?;
                Ok(svec(&matcone::project_psd(&smat(x)?)?))
            }
        }
    }

    /// Projection onto `𝒦*` (`{0}` when `𝒦` is the whole space).
    pub fn project_dual_cone(&self, s: &Vector) -> Result<Vector> {
        match self.cone {
            ConeKind::None => Ok(Vector::zeros(s.len())),
            ConeKind::Psd => self.project_cone(s),
        }
    }

    /// `Π_{𝕊₋}` in svec coordinates.
    pub(crate) fn project_nsd(&self, x: &Vector) -> Result<Vector> {
        debug_assert_eq!(svec_dim(self.order()), x.len());
        Ok(svec(&matcone::project_nsd(&smat(x)?)?))
    }

    /// Distance from `x` to `𝒦`.
    pub fn cone_violation(&self, x: &Vector) -> Result<f64> {
        Ok((x - self.project_cone(x)?).norm())
    }

    /// Distance from `s` to `𝒦*`.
    pub fn dual_cone_violation(&self, s: &Vector) -> Result<f64> {
        Ok((s - self.project_dual_cone(s)?).norm())
    }

    /// `φ(x)` together with the distance of `x` from `dom φ`; the value treats
    /// the indicator as zero.
    pub fn phi_value(&self, x: &Vector) -> (f64, f64) {
        match &self.phi {
            Phi::BoxIndicator => (0.0, self.pset.violation(x)),
            Phi::WeightedL1(w) => (w.iter().zip(x.iter()).map(|(a, b)| a * b.abs()).sum(), 0.0),
        }
    }

    /// `prox_{tφ}(v)`.
    pub fn phi_prox(&self, t: f64, v: &Vector) -> Result<Vector> {
        match &self.phi {
            Phi::BoxIndicator => polyset::project_box(&self.pset, v),
            Phi::WeightedL1(w) => Ok(soft_threshold(v, w, t)),
        }
    }

    /// `θ(z) = φ*(−z)` evaluated at the nearest point of `dom θ`, together with
    /// the distance of `z` from `dom θ`.
    pub fn theta_value(&self, z: &Vector) -> Result<(f64, f64)> {
        check_dim("theta", self.dim(), z.len())?;
        match &self.phi {
            Phi::BoxIndicator => {
                let (l, u) = (self.pset.lower(), self.pset.upper());
                let mut zc = z.clone();
                let mut viol: f64 = 0.0;
                for i in 0..z.len() {
                    // −zᵢ pᵢ is bounded above on [l, u] iff the bound it pushes against is finite
                    if zc[i] > 0.0 && !l[i].is_finite() || zc[i] < 0.0 && !u[i].is_finite() {
                        viol = viol.hypot(zc[i]);
                        zc[i] = 0.0;
                    }
                }
                Ok((polyset::support_value(&self.pset, &(-zc))?, viol))
            }
            Phi::WeightedL1(w) => {
                let viol = (0..z.len())
                    .map(|i| (z[i].abs() - w[i]).max(0.0))
                    .fold(0.0, f64::hypot);
                Ok((0.0, viol))
            }
        }
    }

    /// `prox_{tθ}(v)` for `θ(z) = φ*(−z)`.
    pub fn theta_prox(&self, t: f64, v: &Vector) -> Result<Vector> {
        match &self.phi {
            Phi::BoxIndicator => polyset::prox_support(&self.pset, t, v),
            Phi::WeightedL1(w) => Ok(Vector::from_iterator(
                v.len(),
                (0..v.len()).map(|i| v[i].clamp(-w[i], w[i])),
            )),
        }
    }

    /// `smat` of a primal point (matrix spaces only).
    pub fn as_sym(&self, x: &Vector) -> Result<SymMatrix> {
        match self.space {
            SpaceSpec::Sym(_) => smat(x),
            SpaceSpec::Vector(_) => Err(Error::Input("vector space has no matrix view".into())),
        }
    }
}

pub(crate) fn soft_threshold(v: &Vector, w: &Vector, t: f64) -> Vector {
    Vector::from_iterator(
        v.len(),
        (0..v.len()).map(|i| {
            let k = t * w[i];
            v[i].signum() * (v[i].abs() - k).max(0.0)
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_inconsistent_data() {
        let ok = ConicQP::new(
            SpaceSpec::Vector(2),
            Matrix::identity(2, 2),
            Vector::zeros(2),
            Matrix::zeros(1, 2),
            Vector::zeros(1),
            ConeKind::None,
            BoxSet::free(2),
            Phi::BoxIndicator,
        );
        assert!(ok.is_ok());
        let bad_cone = ConicQP::new(
            SpaceSpec::Vector(2),
            Matrix::identity(2, 2),
            Vector::zeros(2),
            Matrix::zeros(1, 2),
            Vector::zeros(1),
            ConeKind::Psd,
            BoxSet::free(2),
            Phi::BoxIndicator,
        );
        assert!(bad_cone.is_err());
        let indefinite = ConicQP::new(
            SpaceSpec::Vector(2),
            Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, -1.0])),
            Vector::zeros(2),
            Matrix::zeros(0, 2),
            Vector::zeros(0),
            ConeKind::None,
            BoxSet::free(2),
            Phi::BoxIndicator,
        );
        assert!(indefinite.is_err());
        let short_c = ConicQP::new(
            SpaceSpec::Sym(2),
            Matrix::identity(3, 3),
            Vector::zeros(2),
            Matrix::zeros(0, 3),
            Vector::zeros(0),
            ConeKind::Psd,
            BoxSet::free(3),
            Phi::BoxIndicator,
        );
        assert!(matches!(short_c, Err(Error::Dimension { .. })));
    }

    #[test]
    fn soft_threshold_and_theta_prox_are_moreau_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = Vector::from_fn(6, |_, _| rng.gen_range(0.0..2.0));
        let prob = ConicQP::new(
            SpaceSpec::Vector(6),
            Matrix::zeros(6, 6),
            Vector::zeros(6),
            Matrix::zeros(0, 6),
            Vector::zeros(0),
            ConeKind::None,
            BoxSet::free(6),
            Phi::WeightedL1(w),
        )
        .unwrap();
        let v = Vector::from_fn(6, |_, _| rng.gen_range(-3.0..3.0));
        let t = 0.7;
        // prox_{tφ}(v) + t·prox_{φ*/t}(v/t) = v, and φ*(x) = θ(−x)
        let p1 = prob.phi_prox(t, &v).unwrap();
        let p2 = -prob.theta_prox(1.0 / t, &(-&v / t)).unwrap();
        assert!((p1 + p2 * t - v).amax() < 1e-14);
    }
}
