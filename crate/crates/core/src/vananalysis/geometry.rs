use crate::error::Result;
use crate::linalg::{hcat, null_space, quad, right_singular, select_columns};
use crate::matcone::{smat, svec, svec_dim, svec_index, SpectralTriple, SymMatrix};
use crate::polyset::CoordCone;
use crate::{Matrix, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Relative threshold for every rank, eigenvalue and singular-value decision.
pub(crate) const VERDICT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Blk {
    A,
    B,
    G,
}

/// The four PSD-side sets appearing in the conditions, described through the
/// eigenbasis of `x̄ − s̄` (`α` holds `x̄`, `γ` holds `s̄`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PsdSet {
    /// `T(x̄) ∩ s̄^⊥`, also the PSD part of the primal critical cone.
    PrimalCritical,
    /// `T(s̄) ∩ x̄^⊥`.
    DualTangent,
    /// Feasible directions of the primal multiplier face at `x̄`.
    PrimalFace,
    /// Feasible directions of the dual multiplier face at `s̄`.
    DualFace,
}

type BlockPairs = &'static [(Blk, Blk)];

impl PsdSet {
    /// Blocks free in the span and in the lineality space.
    fn blocks(self) -> (BlockPairs, BlockPairs) {
        use Blk::*;
        match self {
            PsdSet::PrimalCritical => {
                (&[(A, A), (A, B), (A, G), (B, B)], &[(A, A), (A, B), (A, G)])
            }
            PsdSet::DualTangent => (&[(G, G), (G, B), (G, A), (B, B)], &[(G, G), (G, B), (G, A)]),
            PsdSet::PrimalFace => (&[(A, A), (A, B), (B, B)], &[(A, A)]),
            PsdSet::DualFace => (&[(G, G), (G, B), (B, B)], &[(G, G)]),
        }
    }

    /// Without a cone constraint the primal-side sets are the whole space and
    /// the dual-side sets are `{0}`.
    fn whole_without_cone(self) -> bool {
        matches!(self, PsdSet::PrimalCritical | PsdSet::PrimalFace)
    }
}

/// Eigenbasis bookkeeping for the matrix pair and the box pattern.
#[derive(Debug, Clone)]
pub(crate) struct Geometry {
    pub d: usize,
    psd: Option<(Matrix, Vec<Blk>)>,
    pub pattern: Vec<CoordCone>,
}

impl Geometry {
    pub fn new(d: usize, triple: Option<&SpectralTriple>, pattern: Vec<CoordCone>) -> Self {
        let psd = triple.map(|t| {
            let mut labels = vec![Blk::A; t.order()];
            for i in t.beta() {
                labels[i] = Blk::B;
            }
            for i in t.gamma() {
                labels[i] = Blk::G;
            }
            (t.p().clone(), labels)
        });
        Self { d, psd, pattern }
    }

    pub fn beta_len(&self) -> usize {
        self.psd
            .as_ref()
            .map_or(0, |(_, l)| l.iter().filter(|&&b| b == Blk::B).count())
    }

    fn rotated_element(p: &Matrix, i: usize, j: usize) -> Vector {
        let n = p.nrows();
        let (pi, pj) = (p.column(i), p.column(j));
        let m = if i == j {
            pi * pi.transpose()
        } else {
            (pi * pj.transpose() + pj * pi.transpose()) / std::f64::consts::SQRT_2
        };
        debug_assert_eq!(m.nrows(), n);
        svec(&SymMatrix::symmetrize(&m).expect("square"))
    }

    fn sym_basis(&self, allowed: &[(Blk, Blk)]) -> Matrix {
        let (p, labels) = self.psd.as_ref().expect("PSD geometry");
        let n = labels.len();
        let ok = |a: Blk, b: Blk| {
            allowed
                .iter()
                .any(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b))
        };
        let mut cols = Vec::new();
        for j in 0..n {
            for i in 0..=j {
                if ok(labels[i], labels[j]) {
                    cols.push(Self::rotated_element(p, i, j));
                }
            }
        }
        Matrix::from_fn(self.d, cols.len(), |r, c| cols[c][r])
    }

    /// Orthonormal basis of the span (`lin = false`) or the lineality space
    /// (`lin = true`) of a PSD-side set, in `svec` coordinates.
    pub fn psd_set(&self, set: PsdSet, lin: bool) -> Matrix {
        if self.psd.is_none() {
            return if set.whole_without_cone() {
                Matrix::identity(self.d, self.d)
            } else {
                Matrix::zeros(self.d, 0)
            };
        }
        let (span, lineality) = set.blocks();
        self.sym_basis(if lin { lineality } else { span })
    }

    /// Columns mapping `svec` of a `|β|×|β|` matrix into the `ββ` block, which
    /// ranges over a PSD cone in every set used here.
    pub fn psd_beta_map(&self) -> Matrix {
        let Some((p, labels)) = self.psd.as_ref() else {
            return Matrix::zeros(self.d, 0);
        };
        let beta: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Blk::B).collect();
        let k = beta.len();
        let mut out = Matrix::zeros(self.d, svec_dim(k));
        for jj in 0..k {
            for ii in 0..=jj {
                let v = Self::rotated_element(p, beta[ii], beta[jj]);
                out.set_column(svec_index(ii, jj), &v);
            }
        }
        out
    }

    fn coord_cone(&self, i: usize, dual: bool) -> CoordCone {
        if dual {
            self.pattern[i].dual()
        } else {
            self.pattern[i]
        }
    }

    /// Unit columns for the coordinates free in the span or lineality space of
    /// `C_P` (`dual = false`) or of its dual cone `S` (`dual = true`).
    pub fn coord_set(&self, dual: bool, lin: bool) -> Matrix {
        let keep: Vec<usize> = (0..self.d)
            .filter(|&i| {
                let c = self.coord_cone(i, dual);
                if lin {
                    c == CoordCone::Free
                } else {
                    c != CoordCone::Zero
                }
            })
            .collect();
        select_columns(&Matrix::identity(self.d, self.d), &keep)
    }

    /// Signed unit columns for the one-sided coordinates.
    pub fn coord_rays(&self, dual: bool) -> Matrix {
        let mut cols = Vec::new();
        for i in 0..self.d {
            let sign = match self.coord_cone(i, dual) {
                CoordCone::NonNeg => 1.0,
                CoordCone::NonPos => -1.0,
                _ => continue,
            };
            let mut e = Vector::zeros(self.d);
            e[i] = sign;
            cols.push(e);
        }
        Matrix::from_fn(self.d, cols.len(), |r, c| cols[c][r])
    }

    pub fn degenerate_box(&self) -> bool {
        self.pattern.iter().any(|c| !c.is_subspace())
    }

    pub fn subspace_regime(&self) -> bool {
        self.beta_len() == 0 && !self.degenerate_box()
    }
}

/// `d ↦ 2⟨W, D·Y·D⟩` on `svec` coordinates, as a symmetric matrix.
pub(crate) fn curvature_matrix(weight: &SymMatrix, pinv: &SymMatrix) -> Result<Matrix> {
    let p = weight.order();
    let d = svec_dim(p);
    let mut g = Matrix::zeros(d, d);
    let mut basis = Vec::with_capacity(d);
    for i in 0..d {
        let mut e = Vector::zeros(d);
        e[i] = 1.0;
        basis.push(smat(&e)?);
    }
    let (w, y) = (weight.as_matrix(), pinv.as_matrix());
    for i in 0..d {
        let left = w * basis[i].as_matrix() * y;
        for j in 0..d {
            g[(i, j)] = (&left * basis[j].as_matrix()).trace();
        }
    }
    Ok(&g + g.transpose())
}

/// Result of testing whether a sum of cones covers the whole space.
#[derive(Debug, Clone)]
pub(crate) enum Coverage {
    Full,
    /// A nonzero `h` with `⟨h, g⟩ ≥ 0` on every generator.
    NotFull(Vector),
    Unknown,
}

/// `range(lin) + cone(rays) + psd_map(S₊)`.
#[derive(Debug, Clone)]
pub(crate) struct ConeSum {
    pub lin: Matrix,
    pub rays: Matrix,
    pub psd_map: Matrix,
}

impl ConeSum {
    pub fn dim(&self) -> usize {
        self.lin.nrows()
    }

    fn generators(&self) -> Matrix {
        hcat(self.dim(), &[&self.lin, &self.rays, &self.psd_map])
    }

    fn scale(&self) -> f64 {
        self.generators().amax().max(1.0)
    }

    pub fn coverage(&self, rng: &mut ChaCha8Rng) -> Coverage {
        let n = self.dim();
        if n == 0 {
            return Coverage::Full;
        }
        let thr = VERDICT_TOL * self.scale();
        let lin_t = self.lin.transpose();
        if rank(&self.lin, thr) == n {
            return Coverage::Full;
        }
        let gens = self.generators();
        let left = null_space(&gens.transpose(), thr);
        if left.ncols() > 0 {
            return Coverage::NotFull(left.column(0).into_owned());
        }
        // One-sided parts: look for h ⊥ lin with nonnegative pairings.
        let perp = null_space(&lin_t, thr);
        if perp.ncols() == 0 {
            return Coverage::Full;
        }
        for _ in 0..200 {
            let t = Vector::from_fn(perp.ncols(), |_, _| rng.gen_range(-1.0..1.0));
            let mut h = &perp * t;
            for _ in 0..200 {
                h = self.project_dual_step(&perp, &h);
                let nrm = h.norm();
                if nrm < 1e-12 {
                    break;
                }
                h /= nrm;
                if self.is_dual_witness(&h) {
                    return Coverage::NotFull(h);
                }
            }
        }
        Coverage::Unknown
    }

    fn project_dual_step(&self, perp: &Matrix, h: &Vector) -> Vector {
        let mut h = h.clone();
        for c in 0..self.rays.ncols() {
            let r = self.rays.column(c);
            let v = r.dot(&h);
            if v < 0.0 {
                h -= r * (v / r.norm_squared());
            }
        }
        if self.psd_map.ncols() > 0 {
            let wt = self.psd_map.transpose() * &h;
            if let Ok(m) = smat(&wt) {
                if let Ok(pp) = crate::matcone::project_psd(&m) {
                    let corr = svec(&pp) - &wt;
                    let gram = self.psd_map.transpose() * &self.psd_map;
                    if let Some(ch) = gram.cholesky() {
                        h += &self.psd_map * ch.solve(&corr);
                    }
                }
            }
        }
        perp * perp.tr_mul(&h)
    }

    /// `h ≠ 0`, `h ⊥ lin`, `⟨h, ray⟩ ≥ 0` and `psd_mapᵀh ⪰ 0`, to relative tolerance.
    pub fn is_dual_witness(&self, h: &Vector) -> bool {
        let nh = h.norm();
        if !(nh > 0.0) {
            return false;
        }
        let thr = VERDICT_TOL * self.scale() * nh;
        if self.lin.ncols() > 0 && (self.lin.tr_mul(h)).amax() > thr {
            return false;
        }
        if self.rays.ncols() > 0 && (self.rays.tr_mul(h)).min() < -thr {
            return false;
        }
        if self.psd_map.ncols() > 0 {
            let Ok(m) = smat(&self.psd_map.tr_mul(h)) else {
                return false;
            };
            match crate::linalg::lambda_min(m.as_matrix()) {
                Ok(l) if l >= -thr => {}
                _ => return false,
            }
        }
        true
    }
}

pub(crate) fn rank(m: &Matrix, thr: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > thr)
        .count()
}

/// Minimum eigenvalue and eigenvector of `Vᵀ F V`, mapped back through `V`.
pub(crate) fn restricted_min_eig(f: &Matrix, v: &Matrix) -> Result<Option<(f64, Vector)>> {
    if v.ncols() == 0 {
        return Ok(None);
    }
    let r = v.transpose() * f * v;
    let (vals, vecs) = crate::linalg::sorted_eigen(&crate::linalg::symmetrize(&r))?;
    let k = vals.len() - 1;
    Ok(Some((vals[k], v * vecs.column(k))))
}

/// Smallest singular value of `j` and its right singular vector.
pub(crate) fn smallest_singular(j: &Matrix) -> Option<(f64, Vector)> {
    let c = j.ncols();
    if c == 0 {
        return None;
    }
    let (vals, vecs) = right_singular(j);
    Some((vals[c - 1], vecs.column(c - 1).into_owned()))
}

pub(crate) fn form_value(f: &Matrix, v: &Vector) -> f64 {
    quad(f, v)
}
