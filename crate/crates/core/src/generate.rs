//! Seeded random instance families with a planted KKT point.
//!
//! Every instance is built backwards from a chosen primal–dual point, so the
//! returned [`Generated::reference`] satisfies the KKT system up to rounding.
//! The same [`GenSpec`] always yields bitwise-identical data.

use crate::error::{Error, Result};
use crate::matcone::{svec, svec_dim, SymMatrix};
use crate::model::{build_restricted_wolfe_dual, ConeKind, ConicQP, KKTPoint, Phi, SpaceSpec};
use crate::polyset::BoxSet;
use crate::{Matrix, Vector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Box-constrained convex QP in `ℝⁿ`.
    ConvexQp,
    /// QSDP over `𝕊ᵖ` with a box on the `svec` coordinates.
    Qsdp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub family: Family,
    /// `n` for the QP family, `p` for the QSDP family.
    pub size: usize,
    pub m: usize,
    /// Rank of `Q`; `None` for full rank. Rank 0 gives the LP family.
    pub q_rank: Option<usize>,
    /// Plant a strictly complementary point with unique multipliers.
    pub strict_complementarity: bool,
    /// Plant a degenerate point. With `Q = 0` this gives an LP with redundant
    /// equality rows and a continuum of solutions and multipliers.
    pub degenerate: bool,
    pub seed: u64,
}

impl GenSpec {
    pub fn convex_qp(n: usize, m: usize, seed: u64) -> Self {
        Self {
            family: Family::ConvexQp,
            size: n,
            m,
            q_rank: None,
            strict_complementarity: false,
            degenerate: false,
            seed,
        }
    }

    pub fn qsdp(p: usize, m: usize, seed: u64) -> Self {
        Self {
            family: Family::Qsdp,
            ..Self::convex_qp(p, m, seed)
        }
    }

    pub fn rank(mut self, r: usize) -> Self {
        self.q_rank = Some(r);
        self
    }

    pub fn strict(mut self) -> Self {
        self.strict_complementarity = true;
        self
    }

    pub fn degenerate(mut self) -> Self {
        self.degenerate = true;
        self
    }

    pub fn dim(&self) -> usize {
        match self.family {
            Family::ConvexQp => self.size,
            Family::Qsdp => svec_dim(self.size),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.strict_complementarity && self.degenerate {
            return Err(Error::Input(
                "strict complementarity and degeneracy cannot both be requested".into(),
            ));
        }
        let d = self.dim();
        if self.size == 0 {
            return Err(Error::Input("instance size must be positive".into()));
        }
        if self.m > d {
            return Err(Error::Input(format!(
                "{} equality rows exceed the dimension {d}",
                self.m
            )));
        }
        if let Some(r) = self.q_rank {
            if r > d {
                return Err(Error::Input(format!(
                    "rank of Q ({r}) exceeds the dimension {d}"
                )));
            }
        }
        if self.family == Family::Qsdp && self.degenerate && self.size < 2 {
            return Err(Error::Input("a degenerate QSDP needs p ≥ 2".into()));
        }
        Ok(())
    }
}

/// A generated instance with its planted KKT point.
#[derive(Debug, Clone)]
pub struct Generated {
    pub prob: ConicQP,
    pub reference: KKTPoint,
}

fn gauss(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal) * scale)
}

fn psd_of_rank(rng: &mut ChaCha8Rng, d: usize, r: usize) -> Matrix {
    if r == 0 {
        return Matrix::zeros(d, d);
    }
    let l = gauss(rng, d, r, 1.0 / (r as f64).sqrt());
    let q = &l * l.transpose();
    (&q + q.transpose()) * 0.5
}

fn orthogonal(rng: &mut ChaCha8Rng, p: usize) -> Matrix {
    gauss(rng, p, p, 1.0).qr().q()
}

/// Builds an instance from the spec.
pub fn generate(spec: &GenSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    if spec.q_rank == Some(0) && spec.degenerate {
        return redundant_lp(spec, &mut rng);
    }
    match spec.family {
        Family::ConvexQp => convex_qp(spec, &mut rng),
        Family::Qsdp => qsdp(spec, &mut rng),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Lower,
    Upper,
}

/// Box around `x` with the listed coordinates active; `z` is filled with the
/// matching multipliers (`≥ 0` at lower bounds, `≤ 0` at upper bounds).
fn planted_box(
    rng: &mut ChaCha8Rng,
    x: &Vector,
    active: &[(usize, Side, bool)],
    z: &mut Vector,
) -> Result<BoxSet> {
    let d = x.len();
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for i in 0..d {
        lo[i] = if rng.gen_bool(0.3) {
            f64::NEG_INFINITY
        } else {
            x[i] - rng.gen_range(0.5..1.5)
        };
        hi[i] = if rng.gen_bool(0.3) {
            f64::INFINITY
        } else {
            x[i] + rng.gen_range(0.5..1.5)
        };
    }
    for &(i, side, weak) in active {
        let mag = if weak { 0.0 } else { rng.gen_range(0.5..1.5) };
        match side {
            Side::Lower => {
                lo[i] = x[i];
                z[i] = mag;
            }
            Side::Upper => {
                hi[i] = x[i];
                z[i] = -mag;
            }
        }
    }
    BoxSet::new(lo, hi)
}

fn pick_active(
    rng: &mut ChaCha8Rng,
    d: usize,
    count: usize,
    spec: &GenSpec,
) -> Vec<(usize, Side, bool)> {
    let mut idx: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        idx.swap(i, rng.gen_range(0..=i));
    }
    let mut out: Vec<(usize, Side, bool)> = idx[..count]
        .iter()
        .map(|&i| {
            let side = if rng.gen_bool(0.5) {
                Side::Lower
            } else {
                Side::Upper
            };
            let weak = !spec.strict_complementarity && !spec.degenerate && rng.gen_bool(0.2);
            (i, side, weak)
        })
        .collect();
    if spec.degenerate {
        if let Some(first) = out.first_mut() {
            first.2 = true;
        }
    }
    out.sort_by_key(|a| a.0);
    out
}

#[allow(clippy::too_many_arguments)]
fn finish(
    space: SpaceSpec,
    cone: ConeKind,
    q: Matrix,
    a: Matrix,
    x: Vector,
    s: Vector,
    y: Vector,
    z: Vector,
    pset: BoxSet,
) -> Result<Generated> {
    let c = a.tr_mul(&y) + &z + &s - &q * &x;
    let b = &a * &x;
    let prob = ConicQP::new(space, q, c, a, b, cone, pset, Phi::BoxIndicator)?;
    let w = build_restricted_wolfe_dual(&prob)?.project_w(&x);
    let reference = KKTPoint {
        u: x.clone(),
        v: -&z,
        x,
        s,
        y,
        z,
        w,
    };
    Ok(Generated { prob, reference })
}

fn convex_qp(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<Generated> {
    let (n, m) = (spec.size, spec.m);
    let r = spec.q_rank.unwrap_or(n);
    let q = psd_of_rank(rng, n, r);
    let a = gauss(rng, m, n, 1.0 / (n as f64).sqrt());
    let x = gauss(rng, n, 1, 1.0).column(0).into_owned();
    let y = gauss(rng, m, 1, 1.0).column(0).into_owned();
    // Enough active bounds that the critical subspace fits inside Range Q.
    let free = n - m;
    let want = (n / 4).max(free.saturating_sub(r));
    let count = want.min(free);
    let active = pick_active(rng, n, count, spec);
    let mut z = Vector::zeros(n);
    let pset = planted_box(rng, &x, &active, &mut z)?;
    finish(
        SpaceSpec::Vector(n),
        ConeKind::None,
        q,
        a,
        x,
        Vector::zeros(n),
        y,
        z,
        pset,
    )
}

fn qsdp(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<Generated> {
    let (p, m) = (spec.size, spec.m);
    let d = svec_dim(p);
    let r = spec.q_rank.unwrap_or(d);
    let q = psd_of_rank(rng, d, r);
    let a = gauss(rng, m, d, 1.0 / (d as f64).sqrt());
    let y = gauss(rng, m, 1, 1.0).column(0).into_owned();
    let rx = (p / 2).max(1);
    let beta = if spec.degenerate {
        1
    } else if spec.strict_complementarity || p < 2 {
        0
    } else {
        usize::from(rng.gen_bool(0.3))
    };
    let rs = p.saturating_sub(rx + beta);
    let pm = orthogonal(rng, p);
    let mut lx = vec![0.0; p];
    let mut ls = vec![0.0; p];
    for v in lx.iter_mut().take(rx) {
        *v = rng.gen_range(0.5..2.0);
    }
    for v in ls.iter_mut().skip(rx + beta) {
        *v = rng.gen_range(0.5..2.0);
    }
    let rot = |l: &[f64]| -> Result<Vector> {
        let m = &pm * Matrix::from_diagonal(&Vector::from_column_slice(l)) * pm.transpose();
        Ok(svec(&SymMatrix::symmetrize(&m)?))
    };
    let x = rot(&lx)?;
    let s = rot(&ls)?;
    let room = d.saturating_sub(m + svec_dim(rs));
    let active = pick_active(rng, d, usize::from(room >= 2), spec);
    let mut z = Vector::zeros(d);
    let pset = planted_box(rng, &x, &active, &mut z)?;
    finish(SpaceSpec::Sym(p), ConeKind::Psd, q, a, x, s, y, z, pset)
}

/// `Q = 0`, free box, equality rows where the second half repeats
/// combinations of the first, and `c ∈ Range A*`: every feasible point is
/// optimal and the multipliers form an affine set.
fn redundant_lp(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<Generated> {
    let d = spec.dim();
    let m = spec.m.max(2);
    if m > d {
        return Err(Error::Input(format!(
            "a redundant LP needs at least two rows and no more than {d}"
        )));
    }
    let indep = (m / 2).max(1);
    let base = gauss(rng, indep, d, 1.0 / (d as f64).sqrt());
    let mix = gauss(rng, m - indep, indep, 1.0);
    let mut a = Matrix::zeros(m, d);
    a.rows_mut(0, indep).copy_from(&base);
    a.rows_mut(indep, m - indep).copy_from(&(&mix * &base));
    let y = gauss(rng, m, 1, 1.0).column(0).into_owned();
    let (space, cone, x, s) = match spec.family {
        Family::ConvexQp => (
            SpaceSpec::Vector(d),
            ConeKind::None,
            gauss(rng, d, 1, 1.0).column(0).into_owned(),
            Vector::zeros(d),
        ),
        Family::Qsdp => {
            let p = spec.size;
            let pm = orthogonal(rng, p);
            let l = Vector::from_fn(p, |_, _| rng.gen_range(0.5..2.0));
            let xm = &pm * Matrix::from_diagonal(&l) * pm.transpose();
            (
                SpaceSpec::Sym(p),
                ConeKind::Psd,
                svec(&SymMatrix::symmetrize(&xm)?),
                Vector::zeros(d),
            )
        }
    };
    finish(
        space,
        cone,
        Matrix::zeros(d, d),
        a,
        x,
        s,
        y,
        Vector::zeros(d),
        BoxSet::free(d),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcone::{eig_sym, smat, DEFAULT_ZERO_TOL};
    use crate::model::{kkt_residual_dual, kkt_residual_primal};

    fn planted_residuals(g: &Generated) -> (f64, f64) {
        let rp = kkt_residual_primal(&g.prob, &g.reference.primal())
            .unwrap()
            .norm();
        let rd = kkt_residual_dual(&g.prob, &g.reference.dual())
            .unwrap()
            .norm();
        (rp, rd)
    }

    #[test]
    fn planted_points_solve_kkt() {
        let specs = [
            GenSpec::convex_qp(12, 4, 1),
            GenSpec::convex_qp(12, 4, 2).strict(),
            GenSpec::convex_qp(12, 4, 3).rank(0).strict(),
            GenSpec::convex_qp(12, 4, 4).rank(3).degenerate(),
            GenSpec::convex_qp(12, 4, 5).rank(0).degenerate(),
            GenSpec::qsdp(4, 2, 6),
            GenSpec::qsdp(4, 2, 7).strict(),
            GenSpec::qsdp(4, 2, 8).degenerate(),
            GenSpec::qsdp(3, 2, 9).rank(0).degenerate(),
        ];
        for spec in specs {
            let g = generate(&spec).unwrap();
            let (rp, rd) = planted_residuals(&g);
            let tol = 1e-12 * g.prob.scale();
            assert!(rp < tol && rd < tol, "{spec:?}: {rp:e} {rd:e}");
        }
    }

    #[test]
    fn same_seed_same_data() {
        let s = GenSpec::qsdp(5, 3, 42).strict();
        let (a, b) = (generate(&s).unwrap(), generate(&s).unwrap());
        assert_eq!(a.prob, b.prob);
        assert_eq!(a.reference, b.reference);
        let c = generate(&GenSpec::qsdp(5, 3, 43).strict()).unwrap();
        assert_ne!(a.prob, c.prob);
    }

    #[test]
    fn contradictory_toggles_rejected() {
        let s = GenSpec::convex_qp(5, 1, 0).strict().degenerate();
        assert!(matches!(generate(&s), Err(Error::Input(_))));
        assert!(generate(&GenSpec::convex_qp(3, 4, 0)).is_err());
        assert!(generate(&GenSpec::convex_qp(3, 1, 0).rank(4)).is_err());
    }

    #[test]
    fn rank_zero_is_lp() {
        let g = generate(&GenSpec::convex_qp(8, 3, 11).rank(0)).unwrap();
        assert_eq!(g.prob.q.amax(), 0.0);
    }

    #[test]
    fn strict_qsdp_has_empty_beta() {
        let g = generate(&GenSpec::qsdp(6, 3, 5).strict()).unwrap();
        let c = smat(&(&g.reference.x - &g.reference.s)).unwrap();
        assert!(eig_sym(&c, DEFAULT_ZERO_TOL).unwrap().beta().is_empty());
        let g = generate(&GenSpec::qsdp(6, 3, 5).degenerate()).unwrap();
        let c = smat(&(&g.reference.x - &g.reference.s)).unwrap();
        assert_eq!(eig_sym(&c, DEFAULT_ZERO_TOL).unwrap().beta().len(), 1);
    }
}
