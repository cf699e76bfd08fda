use super::{build_restricted_wolfe_dual, ConeKind, ConicQP, DualModel};
use crate::error::{check_dim, Result};
use crate::linalg::stack;
use crate::Vector;

/// The reduced primal point `(x, u, y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalPoint {
    pub x: Vector,
    pub u: Vector,
    pub y: Vector,
    pub z: Vector,
}

/// A dual point `(s, y, w, z)` with the primal multiplier `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub s: Vector,
    pub y: Vector,
    pub w: Vector,
    pub z: Vector,
    pub x: Vector,
}

/// A full primal–dual certificate. The primal side reads `(x, u, s, y, z, v)`,
/// the dual side `(s, y, w, z, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KKTPoint {
    pub x: Vector,
    pub u: Vector,
    pub s: Vector,
    pub y: Vector,
    pub z: Vector,
    pub v: Vector,
    pub w: Vector,
}

impl KKTPoint {
    pub fn primal(&self) -> PrimalPoint {
        PrimalPoint {
            x: self.x.clone(),
            u: self.u.clone(),
            y: self.y.clone(),
            z: self.z.clone(),
        }
    }

    pub fn dual(&self) -> DualPoint {
        DualPoint {
            s: self.s.clone(),
            y: self.y.clone(),
            w: self.w.clone(),
            z: self.z.clone(),
            x: self.x.clone(),
        }
    }
}

/// The reduced primal KKT map
/// `(x + Π₋(−x + Qx − A*y − z + c), −u + prox_φ(u − z), Ax − b, x − u)`.
///
/// Without a cone constraint the first block is the stationarity residual
/// `Qx + c − A*y − z`.
pub fn kkt_residual_primal(prob: &ConicQP, pt: &PrimalPoint) -> Result<Vector> {
    let d = prob.dim();
    check_dim("primal x", d, pt.x.len())?;
    check_dim("primal u", d, pt.u.len())?;
    check_dim("primal y", prob.m(), pt.y.len())?;
    check_dim("primal z", d, pt.z.len())?;
    let g = &prob.q * &pt.x + &prob.c - prob.a.tr_mul(&pt.y) - &pt.z;
    let b1 = match prob.cone {
        ConeKind::Psd => &pt.x + prob.project_nsd(&(&g - &pt.x))?,
        ConeKind::None => g,
    };
    let b2 = -&pt.u + prob.phi_prox(1.0, &(&pt.u - &pt.z))?;
    let b3 = &prob.a * &pt.x - &prob.b;
    let b4 = &pt.x - &pt.u;
    Ok(stack(&[&b1, &b2, &b3, &b4]))
}

/// The dual KKT map
/// `(Ax − b, Qw − Qx, −s − A*y + Qw − z + c, s + Π₋(−s + x), −z + Pr_θ(z − x))`
/// with `w` first projected onto `Range Q`.
pub fn kkt_residual_dual(prob: &ConicQP, pt: &DualPoint) -> Result<Vector> {
    build_restricted_wolfe_dual(prob)?.kkt_residual(pt)
}

impl DualModel {
    /// [`kkt_residual_dual`] with the cached basis of `𝒲`.
    pub fn kkt_residual(&self, pt: &DualPoint) -> Result<Vector> {
        let prob = &self.prob;
        let d = prob.dim();
        check_dim("dual s", d, pt.s.len())?;
        check_dim("dual y", prob.m(), pt.y.len())?;
        check_dim("dual w", d, pt.w.len())?;
        check_dim("dual z", d, pt.z.len())?;
        check_dim("dual x", d, pt.x.len())?;
        let w = self.project_w(&pt.w);
        let qw = &prob.q * &w;
        let b1 = &prob.a * &pt.x - &prob.b;
        let b2 = &qw - &prob.q * &pt.x;
        let b3 = -&pt.s - prob.a.tr_mul(&pt.y) + &qw - &pt.z + &prob.c;
        let b4 = match prob.cone {
            ConeKind::Psd => &pt.s + prob.project_nsd(&(&pt.x - &pt.s))?,
            ConeKind::None => pt.s.clone(),
        };
        let b5 = -&pt.z + prob.theta_prox(1.0, &(&pt.z - &pt.x))?;
        Ok(stack(&[&b1, &b2, &b3, &b4, &b5]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Phi, SpaceSpec};
    use crate::polyset::BoxSet;
    use crate::Matrix;

    fn sym2(q: Matrix, c: Vector, a: Matrix, b: Vector, p: BoxSet) -> ConicQP {
        ConicQP::new(
            SpaceSpec::Sym(2),
            q,
            c,
            a,
            b,
            ConeKind::Psd,
            p,
            Phi::BoxIndicator,
        )
        .unwrap()
    }

    #[test]
    fn zero_data_zero_point_gives_zero() {
        let prob = sym2(
            Matrix::zeros(3, 3),
            Vector::zeros(3),
            Matrix::zeros(0, 3),
            Vector::zeros(0),
            BoxSet::free(3),
        );
        let z3 = Vector::zeros(3);
        let pt = PrimalPoint {
            x: z3.clone(),
            u: z3.clone(),
            y: Vector::zeros(0),
            z: z3.clone(),
        };
        assert_eq!(kkt_residual_primal(&prob, &pt).unwrap().norm(), 0.0);
        let dp = DualPoint {
            s: z3.clone(),
            y: Vector::zeros(0),
            w: z3.clone(),
            z: z3.clone(),
            x: z3,
        };
        assert_eq!(kkt_residual_dual(&prob, &dp).unwrap().norm(), 0.0);
    }

    #[test]
    fn first_block_reports_negative_curvature_of_gradient() {
        // x = I ≻ 0 with gradient g = Qx + c − A*y − z = Diag(0, −1/2): the natural map
        // g − Π₊(g − x) evaluates to Diag(0, −1/2) − Π₊(Diag(−1, −3/2)) = Diag(0, −1/2).
        let x = Vector::from_column_slice(&[1.0, 0.0, 1.0]);
        let prob = sym2(
            Matrix::zeros(3, 3),
            Vector::from_column_slice(&[0.0, 0.0, -0.5]),
            Matrix::zeros(0, 3),
            Vector::zeros(0),
            BoxSet::free(3),
        );
        let pt = PrimalPoint {
            x: x.clone(),
            u: x,
            y: Vector::zeros(0),
            z: Vector::zeros(3),
        };
        let r = kkt_residual_primal(&prob, &pt).unwrap();
        let expect = [0.0, 0.0, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!(
            r.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-15),
            "{r}"
        );
    }

    #[test]
    fn dual_third_block_zero_by_construction() {
        let a = Matrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]);
        let c = Vector::from_column_slice(&[2.0, 0.5, -1.0]);
        let prob = sym2(
            Matrix::zeros(3, 3),
            c.clone(),
            a.clone(),
            Vector::from_element(1, 1.0),
            BoxSet::free(3),
        );
        let y = Vector::from_element(1, 0.3);
        let z = &c - a.tr_mul(&y);
        let z3 = Vector::zeros(3);
        let dp = DualPoint {
            s: z3.clone(),
            y,
            w: z3.clone(),
            z,
            x: z3,
        };
        let r = kkt_residual_dual(&prob, &dp).unwrap();
        assert!(r.rows(1 + 3, 3).amax() < 1e-15);
    }
}
