use crate::error::{check_dim, Error, Result};
use crate::linalg::{lambda_min, stack};
use crate::matcone::{project_psd, smat, svec, svec_dim};
use crate::polyset::{self, BoxSet};
use crate::{Matrix, Vector};

/// One closed-form nonsmooth term acting on a contiguous coordinate range.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxKind {
    /// Indicator of a box.
    Box(BoxSet),
    /// `Σ wᵢ|xᵢ|`.
    WeightedL1(Vector),
    /// Indicator of the PSD cone of the given order, in `svec` coordinates.
    Psd(usize),
    /// `θ(z) = δ*_P(−z)` for a box `P`.
    BoxSupport(BoxSet),
}

impl ProxKind {
    pub fn dim(&self) -> usize {
        match self {
            ProxKind::Box(p) | ProxKind::BoxSupport(p) => p.dim(),
            ProxKind::WeightedL1(w) => w.len(),
            ProxKind::Psd(p) => svec_dim(*p),
        }
    }

    /// `argmin_y N(y) + ‖y − v‖²/(2t)`.
    pub fn prox(&self, t: f64, v: &Vector) -> Result<Vector> {
        match self {
            ProxKind::Box(p) => polyset::project_box(p, v),
            ProxKind::WeightedL1(w) => Ok(super::soft_threshold(v, w, t)),
            ProxKind::Psd(_) => Ok(svec(&project_psd(&smat(v)?)?)),
            ProxKind::BoxSupport(p) => polyset::prox_support(p, t, v),
        }
    }
}

/// A separable sum of [`ProxKind`] terms; uncovered coordinates carry no term.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Nonsmooth {
    parts: Vec<(usize, ProxKind)>,
}

impl Nonsmooth {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(kind: ProxKind) -> Self {
        Self {
            parts: vec![(0, kind)],
        }
    }

    /// Adds a term on coordinates `offset..offset + kind.dim()`.
    pub fn with(mut self, offset: usize, kind: ProxKind) -> Self {
        self.parts.push((offset, kind));
        self
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn parts(&self) -> &[(usize, ProxKind)] {
        &self.parts
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let mut covered = vec![false; dim];
        for (off, k) in &self.parts {
            if off + k.dim() > dim {
                return Err(Error::Input("nonsmooth term exceeds its block".into()));
            }
            for c in covered.iter_mut().skip(*off).take(k.dim()) {
                if *c {
                    return Err(Error::Input("overlapping nonsmooth terms".into()));
                }
                *c = true;
            }
        }
        Ok(())
    }

    /// Proximal map of `t·N`.
    pub fn prox(&self, t: f64, v: &Vector) -> Result<Vector> {
        let mut out = v.clone();
        for (off, k) in &self.parts {
            let seg = v.rows(*off, k.dim()).into_owned();
            out.rows_mut(*off, k.dim()).copy_from(&k.prox(t, &seg)?);
        }
        Ok(out)
    }
}

/// One block of the two-block problem: `N(y) + ½⟨y, G y⟩ + ⟨g, y⟩` with its
/// constraint operator `𝒜*` (stored as a `dim_x × dim` matrix) and the
/// monotonicity operator `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub hess: Matrix,
    pub lin: Vector,
    pub nonsmooth: Nonsmooth,
    pub adj: Matrix,
    pub sigma: Matrix,
}

impl Block {
    /// Block with `Σ` equal to the Hessian of the quadratic part.
    pub fn new(hess: Matrix, lin: Vector, nonsmooth: Nonsmooth, adj: Matrix) -> Self {
        let sigma = hess.clone();
        Self {
            hess,
            lin,
            nonsmooth,
            adj,
            sigma,
        }
    }

    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    /// `∇g(y) = G y + g`.
    pub fn grad(&self, y: &Vector) -> Vector {
        &self.hess * y + &self.lin
    }

    /// `𝒜 x` (the adjoint of the stored operator applied to a multiplier).
    pub fn apply_op(&self, x: &Vector) -> Vector {
        self.adj.tr_mul(x)
    }

    /// `𝒜* y`.
    pub fn apply_adj(&self, y: &Vector) -> Vector {
        &self.adj * y
    }
}

/// `min N₁(y) + g(y) + N₂(z) + h(z)  s.t.  𝒜*y + ℬ*z = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBlockProblem {
    pub y: Block,
    pub z: Block,
    pub c: Vector,
}

/// The iterate `u = (y, z, x)` with its counter.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub y: Vector,
    pub z: Vector,
    pub x: Vector,
    pub k: usize,
}

impl IterateState {
    pub fn zeros(p: &TwoBlockProblem) -> Self {
        Self {
            y: Vector::zeros(p.y.dim()),
            z: Vector::zeros(p.z.dim()),
            x: Vector::zeros(p.c.len()),
            k: 0,
        }
    }

    /// `(y, z, x)` stacked.
    pub fn stacked(&self) -> Vector {
        stack(&[&self.y, &self.z, &self.x])
    }

    pub fn norm(&self) -> f64 {
        (self.y.norm_squared() + self.z.norm_squared() + self.x.norm_squared()).sqrt()
    }
}

impl TwoBlockProblem {
    pub fn new(y: Block, z: Block, c: Vector) -> Result<Self> {
        for (name, b) in [("y", &y), ("z", &z)] {
            let n = b.dim();
            check_dim(&format!("{name}-block Hessian rows"), n, b.hess.nrows())?;
            check_dim(&format!("{name}-block Hessian columns"), n, b.hess.ncols())?;
            check_dim(&format!("{name}-block Σ rows"), n, b.sigma.nrows())?;
            check_dim(&format!("{name}-block Σ columns"), n, b.sigma.ncols())?;
            check_dim(&format!("{name}-block operator columns"), n, b.adj.ncols())?;
            check_dim(
                &format!("{name}-block operator rows"),
                c.len(),
                b.adj.nrows(),
            )?;
            b.nonsmooth.validate(n)?;
            for (what, m) in [("Hessian", &b.hess), ("Σ", &b.sigma)] {
                let scale = m.amax().max(1.0);
                if (m - m.transpose()).amax() > 1e-12 * scale {
                    return Err(Error::Input(format!(
                        "{name}-block {what} is not symmetric"
                    )));
                }
                if n > 0 && lambda_min(m)? < -1e-10 * scale {
                    return Err(Error::Input(format!("{name}-block {what} is not PSD")));
                }
            }
        }
        Ok(Self { y, z, c })
    }

    /// `𝒜*y + ℬ*z − c`.
    pub fn constraint_residual(&self, y: &Vector, z: &Vector) -> Vector {
        self.y.apply_adj(y) + self.z.apply_adj(z) - &self.c
    }

    /// `1 + ‖c‖ + ‖g‖ + ‖h‖` for relative residuals.
    pub fn scale(&self) -> f64 {
        1.0 + self.c.norm() + self.y.lin.norm() + self.z.lin.norm()
    }

    fn check_state(&self, u: &IterateState) -> Result<()> {
        check_dim("iterate y", self.y.dim(), u.y.len())?;
        check_dim("iterate z", self.z.dim(), u.z.len())?;
        check_dim("iterate x", self.c.len(), u.x.len())
    }
}

/// The natural-map KKT residual
/// `R(u) = (y − Pr[y − (∇g(y) + 𝒜x)], z − Pr[z − (∇h(z) + ℬx)], c − 𝒜*y − ℬ*z)`
/// and its norm.
pub fn residual_r(p: &TwoBlockProblem, u: &IterateState) -> Result<(Vector, f64)> {
    p.check_state(u)?;
    let gy = p.y.grad(&u.y) + p.y.apply_op(&u.x);
    let r1 = &u.y - p.y.nonsmooth.prox(1.0, &(&u.y - gy))?;
    let gz = p.z.grad(&u.z) + p.z.apply_op(&u.x);
    let r2 = &u.z - p.z.nonsmooth.prox(1.0, &(&u.z - gz))?;
    let r3 = -p.constraint_residual(&u.y, &u.z);
    let r = stack(&[&r1, &r2, &r3]);
    let n = r.norm();
    Ok((r, n))
}
