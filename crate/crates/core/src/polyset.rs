//! Boxes with possibly infinite bounds and their polyhedral cone calculus.
//!
//! For a box every cone that appears in the analysis (tangent cones, critical
//! cones and their duals) is a product of one-dimensional cones, so each is
//! described by a [`CoordCone`] pattern.

use crate::error::{check_dim, Error, Result};
use crate::Vector;

/// Relative activity tolerance at a bound `l`: `|x − l| ≤ ACTIVE_TOL·(1 + |l|)`.
pub const ACTIVE_TOL: f64 = 1e-9;

/// A coordinatewise interval set `{x : lower ≤ x ≤ upper}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vector,
    upper: Vector,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Input(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY || l > u {
                return Err(Error::Input(format!(
                    "invalid box bounds [{l}, {u}] at coordinate {i}"
                )));
            }
        }
        Ok(Self {
            lower: Vector::from_vec(lower),
            upper: Vector::from_vec(upper),
        })
    }

    /// The whole space.
    pub fn free(n: usize) -> Self {
        Self::uniform(n, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// The nonnegative orthant.
    pub fn nonneg(n: usize) -> Self {
        Self::uniform(n, 0.0, f64::INFINITY)
    }

    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        Self::new(vec![lower; n], vec![upper; n]).expect("valid uniform bounds")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }

    pub fn is_free(&self) -> bool {
        self.lower.iter().all(|l| *l == f64::NEG_INFINITY)
            && self.upper.iter().all(|u| *u == f64::INFINITY)
    }

    /// Largest bound violation of `x`.
    pub fn violation(&self, x: &Vector) -> f64 {
        (0..self.dim())
            .map(|i| (self.lower[i] - x[i]).max(x[i] - self.upper[i]).max(0.0))
            .fold(0.0, f64::max)
    }

    fn at_lower(&self, i: usize, x: f64) -> bool {
        let l = self.lower[i];
        l.is_finite() && (x - l).abs() <= ACTIVE_TOL * (1.0 + l.abs())
    }

    fn at_upper(&self, i: usize, x: f64) -> bool {
        let u = self.upper[i];
        u.is_finite() && (x - u).abs() <= ACTIVE_TOL * (1.0 + u.abs())
    }

    /// Activity of coordinate `i` at the point value `x`.
    pub fn activity(&self, i: usize, x: f64) -> Activity {
        match (self.at_lower(i, x), self.at_upper(i, x)) {
            (true, true) => Activity::Fixed,
            (true, false) => Activity::Lower,
            (false, true) => Activity::Upper,
            (false, false) => Activity::Inactive,
        }
    }
}

/// Which bounds of a coordinate are active at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    Inactive,
    Lower,
    Upper,
    /// Both bounds active (degenerate interval).
    Fixed,
}

/// A closed convex cone in one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordCone {
    Free,
    NonNeg,
    NonPos,
    Zero,
}

impl CoordCone {
    /// The dual cone `{w : w·u ≥ 0 ∀u}`.
    pub fn dual(self) -> Self {
        match self {
            CoordCone::Free => CoordCone::Zero,
            CoordCone::Zero => CoordCone::Free,
            other => other,
        }
    }

    pub fn contains(self, x: f64, tol: f64) -> bool {
        match self {
            CoordCone::Free => true,
            CoordCone::NonNeg => x >= -tol,
            CoordCone::NonPos => x <= tol,
            CoordCone::Zero => x.abs() <= tol,
        }
    }

    /// Euclidean projection onto the cone.
    pub fn project(self, x: f64) -> f64 {
        match self {
            CoordCone::Free => x,
            CoordCone::NonNeg => x.max(0.0),
            CoordCone::NonPos => x.min(0.0),
            CoordCone::Zero => 0.0,
        }
    }

    /// True if the cone is a linear subspace.
    pub fn is_subspace(self) -> bool {
        matches!(self, CoordCone::Free | CoordCone::Zero)
    }
}

/// Clamps `c` into the box.
pub fn project_box(p: &BoxSet, c: &Vector) -> Result<Vector> {
    check_dim("box projection", p.dim(), c.len())?;
    Ok(Vector::from_iterator(
        c.len(),
        (0..c.len()).map(|i| c[i].max(p.lower[i]).min(p.upper[i])),
    ))
}

/// Directional derivative of the box projection at `c` along `b`: the
/// projection of `b` onto `T_P(c₊) ∩ c₋^⊥` with `c₊ = Π_P(c)`, `c₋ = c − c₊`.
pub fn dir_deriv_project_box(p: &BoxSet, c: &Vector, b: &Vector) -> Result<Vector> {
    check_dim("box directional derivative", p.dim(), b.len())?;
    let pattern = projection_derivative_pattern(p, c)?;
    Ok(Vector::from_iterator(
        b.len(),
        (0..b.len()).map(|i| pattern[i].project(b[i])),
    ))
}

/// Coordinate cones of `T_P(c₊) ∩ c₋^⊥`.
pub fn projection_derivative_pattern(p: &BoxSet, c: &Vector) -> Result<Vec<CoordCone>> {
    check_dim("box directional derivative", p.dim(), c.len())?;
    Ok((0..c.len())
        .map(|i| {
            let (l, u, x) = (p.lower[i], p.upper[i], c[i]);
            match p.activity(i, x) {
                Activity::Fixed => CoordCone::Zero,
                Activity::Lower => CoordCone::NonNeg,
                Activity::Upper => CoordCone::NonPos,
                Activity::Inactive if x < l || x > u => CoordCone::Zero,
                Activity::Inactive => CoordCone::Free,
            }
        })
        .collect())
}

/// Support function `δ*_P(z) = sup_{p∈P} ⟨p, z⟩`, possibly `+∞`.
pub fn support_value(p: &BoxSet, z: &Vector) -> Result<f64> {
    check_dim("support function", p.dim(), z.len())?;
    let mut total = 0.0;
    for i in 0..z.len() {
        total += if z[i] > 0.0 {
            p.upper[i] * z[i]
        } else if z[i] < 0.0 {
            p.lower[i] * z[i]
        } else {
            0.0
        };
    }
    Ok(total)
}

/// Proximal map of `t·θ` with `θ(z) = δ*_P(−z)`: `v + t·Π_P(−v/t)`.
pub fn prox_support(p: &BoxSet, t: f64, v: &Vector) -> Result<Vector> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "prox step must be positive, got {t}"
        )));
    }
    Ok(v + project_box(p, &(-v / t))? * t)
}

/// Coordinate cones of `C_P(b − a) = T_P(b) ∩ a^⊥` under the precondition
/// `b ∈ P`, `0 ∈ a + N_P(b)`; multipliers with `|a_i| ≤ tol·(1 + ‖a‖_∞)` count as zero.
pub fn critical_cone_pattern(
    p: &BoxSet,
    b: &Vector,
    a: &Vector,
    tol: f64,
) -> Result<Vec<CoordCone>> {
    check_dim("critical cone point", p.dim(), b.len())?;
    check_dim("critical cone multiplier", p.dim(), a.len())?;
    let athr = tol * (1.0 + a.amax());
    let mut out = Vec::with_capacity(b.len());
    for i in 0..b.len() {
        let act = p.activity(i, b[i]);
        if act == Activity::Inactive && (b[i] < p.lower[i] || b[i] > p.upper[i]) {
            return Err(Error::Domain(format!(
                "b ∉ P: coordinate {i} = {} outside [{}, {}]",
                b[i], p.lower[i], p.upper[i]
            )));
        }
        let cone = match act {
            Activity::Fixed => CoordCone::Zero,
            Activity::Inactive => {
                if a[i].abs() > athr {
                    return Err(Error::Domain(format!(
                        "0 ∉ a + N_P(b): coordinate {i} is inactive but a = {}",
                        a[i]
                    )));
                }
                CoordCone::Free
            }
            Activity::Lower => {
                if a[i] < -athr {
                    return Err(Error::Domain(format!(
                        "0 ∉ a + N_P(b): coordinate {i} at lower bound needs a ≥ 0, got {}",
                        a[i]
                    )));
                }
                if a[i] > athr {
                    CoordCone::Zero
                } else {
                    CoordCone::NonNeg
                }
            }
            Activity::Upper => {
                if a[i] > athr {
                    return Err(Error::Domain(format!(
                        "0 ∉ a + N_P(b): coordinate {i} at upper bound needs a ≤ 0, got {}",
                        a[i]
                    )));
                }
                if a[i] < -athr {
                    CoordCone::Zero
                } else {
                    CoordCone::NonPos
                }
            }
        };
        out.push(cone);
    }
    Ok(out)
}

/// Membership of `u` in `C_P(b − a) = T_P(b) ∩ a^⊥`.
pub fn in_critical_cone_box(
    p: &BoxSet,
    u: &Vector,
    b: &Vector,
    a: &Vector,
    tol: f64,
) -> Result<bool> {
    check_dim("critical cone direction", p.dim(), u.len())?;
    critical_cone_pattern(p, b, a, tol)?;
    let utol = tol * (1.0 + u.amax());
    let tangent = (0..u.len()).all(|i| match p.activity(i, b[i]) {
        Activity::Inactive => true,
        Activity::Lower => u[i] >= -utol,
        Activity::Upper => u[i] <= utol,
        Activity::Fixed => u[i].abs() <= utol,
    });
    Ok(tangent && a.dot(u).abs() <= tol * (1.0 + a.norm() * u.norm()))
}

/// Membership of `u` in `S_{b,a}`, the dual cone of `C_P(b − a)`.
#[allow(non_snake_case)]
pub fn in_S_ba(p: &BoxSet, u: &Vector, b: &Vector, a: &Vector, tol: f64) -> Result<bool> {
    check_dim("S_ba direction", p.dim(), u.len())?;
    let pattern = critical_cone_pattern(p, b, a, tol)?;
    let utol = tol * (1.0 + u.amax());
    Ok(pattern
        .iter()
        .zip(u.iter())
        .all(|(c, &x)| c.dual().contains(x, utol)))
}
