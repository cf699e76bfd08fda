use super::{ConicQP, DualPoint};
use crate::error::{check_dim, Result};
use crate::matcone::{eig_sym, SymMatrix, DEFAULT_ZERO_TOL};
use crate::{Matrix, Vector};

/// The restricted Wolfe dual
/// `min δ_{𝒦*}(s) − ⟨b,y⟩ + ½⟨w,Qw⟩ + φ*(−z)  s.t.  s + A*y − Qw + z = c, w ∈ 𝒲`.
#[derive(Debug, Clone)]
pub struct DualModel {
    pub prob: ConicQP,
    /// Orthonormal basis of `𝒲` as columns.
    pub w_basis: Matrix,
    /// True when `𝒲` is the whole space rather than `Range Q`.
    pub full_space: bool,
}

impl DualModel {
    pub fn w_dim(&self) -> usize {
        self.w_basis.ncols()
    }

    /// Orthogonal projection onto `𝒲`.
    pub fn project_w(&self, w: &Vector) -> Vector {
        if self.full_space {
            return w.clone();
        }
        &self.w_basis * self.w_basis.tr_mul(w)
    }

    /// Dual objective in maximisation form, see [`objective_dual`].
    pub fn objective(&self, pt: &DualPoint) -> Result<ObjectiveValue> {
        objective_dual(&self.prob, pt)
    }
}

/// Dual with `𝒲 = Range Q`.
pub fn build_restricted_wolfe_dual(prob: &ConicQP) -> Result<DualModel> {
    build_wolfe_dual(prob, false)
}

/// Dual with `𝒲 = Range Q`, or the whole space when `full_space` is set.
pub fn build_wolfe_dual(prob: &ConicQP, full_space: bool) -> Result<DualModel> {
    let d = prob.dim();
    let w_basis = if full_space {
        Matrix::identity(d, d)
    } else {
        let t = eig_sym(&SymMatrix::symmetrize(&prob.q)?, DEFAULT_ZERO_TOL)?;
        t.p_alpha()
    };
    Ok(DualModel {
        prob: prob.clone(),
        w_basis,
        full_space,
    })
}

/// An objective value with separately reported infeasibility measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    /// Distance to the cone (`𝒦` for the primal, `𝒦*` for the dual).
    pub cone_violation: f64,
    /// Distance to the domain of the polyhedral term.
    pub domain_violation: f64,
    /// Norm of the linear constraint residual.
    pub equality_violation: f64,
}

/// `½⟨x,Qx⟩ + ⟨c,x⟩ + φ(x)`, with indicator terms reported as violations.
pub fn objective_primal(prob: &ConicQP, x: &Vector) -> Result<ObjectiveValue> {
    check_dim("primal objective", prob.dim(), x.len())?;
    let (phi, dom) = prob.phi_value(x);
    Ok(ObjectiveValue {
        value: 0.5 * x.dot(&(&prob.q * x)) + prob.c.dot(x) + phi,
        cone_violation: prob.cone_violation(x)?,
        domain_violation: dom,
        equality_violation: (&prob.a * x - &prob.b).norm(),
    })
}

/// The dual objective in maximisation form, `⟨b,y⟩ − ½⟨w,Qw⟩ − φ*(−z)`, so
/// that at optimality it equals the primal optimal value.
pub fn objective_dual(prob: &ConicQP, pt: &DualPoint) -> Result<ObjectiveValue> {
    check_dim("dual objective y", prob.m(), pt.y.len())?;
    check_dim("dual objective w", prob.dim(), pt.w.len())?;
    let (theta, dom) = prob.theta_value(&pt.z)?;
    let qw = &prob.q * &pt.w;
    let eq = &pt.s + prob.a.tr_mul(&pt.y) - &qw + &pt.z - &prob.c;
    Ok(ObjectiveValue {
        value: prob.b.dot(&pt.y) - 0.5 * pt.w.dot(&qw) - theta,
        cone_violation: prob.dual_cone_violation(&pt.s)?,
        domain_violation: dom,
        equality_violation: eq.norm(),
    })
}

/// Primal objective at `x` minus dual objective at `pt`.
pub fn duality_gap(prob: &ConicQP, x: &Vector, pt: &DualPoint) -> Result<f64> {
    Ok(objective_primal(prob, x)?.value - objective_dual(prob, pt)?.value)
}
