//! Spectral calculus of the cones of positive and negative semidefinite matrices.
//!
//! Every operation works from a [`SpectralTriple`]: an orthogonal factor `P`,
//! eigenvalues sorted non-increasing, and the partition of indices into the
//! positive block `α`, the zero block `β` and the negative block `γ`. Because
//! the eigenvalues are sorted, the three blocks are contiguous column ranges of
//! `P`, and block formulas below are written in the rotated coordinates
//! `H̃ = PᵀHP`.
//!
//! When the triple decomposes `C = A + B` for a complementary pair
//! `A ⪰ 0`, `B ⪯ 0`, `AB = 0`, the `α` block carries `A` and the `γ` block
//! carries `B`.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{lambda_max, lambda_min, sorted_eigen};
use crate::{Matrix, Vector};
use std::ops::Range;

/// Default relative tolerance used to classify an eigenvalue as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

/// A dense symmetric matrix whose symmetry is checked at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: Matrix,
}

impl SymMatrix {
    /// Wraps `m` after checking it is square, finite and exactly symmetric.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Input(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(
                "symmetric matrix has non-finite entries".into(),
            ));
        }
        let p = m.nrows();
        for j in 0..p {
            for i in 0..j {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::Input(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { m })
    }

    /// Builds `(m + mᵀ)/2`.
    pub fn symmetrize(m: &Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Input("symmetrize needs a square matrix".into()));
        }
        let p = m.nrows();
        let mut out = Matrix::zeros(p, p);
        for j in 0..p {
            out[(j, j)] = m[(j, j)];
            for i in 0..j {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Self::new(out)
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            m: Matrix::zeros(p, p),
        }
    }

    pub fn identity(p: usize) -> Self {
        Self {
            m: Matrix::identity(p, p),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            m: Matrix::from_diagonal(&Vector::from_column_slice(d)),
        }
    }

    pub fn order(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// Trace inner product `⟨self, other⟩`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.m.dot(&other.m)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        Self { m: &self.m * s }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        Self {
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        Self {
            m: &self.m - &other.m,
        }
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> Result<f64> {
        if self.order() == 0 {
            return Ok(0.0);
        }
        Ok(lambda_max(&self.m)?.abs().max(lambda_min(&self.m)?.abs()))
    }

    /// `X ↦ Pᵀ X P` for a (possibly rectangular) `P`, symmetrised.
    pub fn congruence(&self, p: &Matrix) -> SymMatrix {
        sym_of(&(p.transpose() * &self.m * p))
    }
}

fn sym_of(m: &Matrix) -> SymMatrix {
    SymMatrix::symmetrize(m).expect("square finite input")
}

/// Dimension of `svec` coordinates for order `p`.
pub fn svec_dim(p: usize) -> usize {
    p * (p + 1) / 2
}

/// Inverse of [`svec_dim`], if `d` is a triangular number.
pub fn svec_order(d: usize) -> Option<usize> {
    let p = (((8 * d + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    (p..=p + 1).find(|&q| svec_dim(q) == d)
}

/// Position of entry `(i, j)` in `svec` coordinates. The upper triangle is
/// stacked column by column: `(0,0), (0,1), (1,1), (0,2), (1,2), (2,2), …`.
pub fn svec_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

/// Isometric vectorisation: off-diagonal entries are scaled by `√2`.
pub fn svec(x: &SymMatrix) -> Vector {
    let p = x.order();
    let mut v = Vector::zeros(svec_dim(p));
    for j in 0..p {
        for i in 0..=j {
            let s = if i == j {
                1.0
            } else {
                std::f64::consts::SQRT_2
            };
            v[svec_index(i, j)] = s * x.m[(i, j)];
        }
    }
    v
}

/// Inverse of [`svec`].
pub fn smat(v: &Vector) -> Result<SymMatrix> {
    let p = svec_order(v.len())
        .ok_or_else(|| Error::Input(format!("length {} is not a triangular number", v.len())))?;
    let mut m = Matrix::zeros(p, p);
    for j in 0..p {
        for i in 0..=j {
            let s = if i == j {
                1.0
            } else {
                std::f64::consts::FRAC_1_SQRT_2
            };
            let val = s * v[svec_index(i, j)];
            m[(i, j)] = val;
            m[(j, i)] = val;
        }
    }
    SymMatrix::new(m)
}

/// Eigendecomposition with the `α/β/γ` index partition.
#[derive(Debug, Clone)]
pub struct SpectralTriple {
    p: Matrix,
    lambda: Vector,
    n_alpha: usize,
    n_beta: usize,
    zero_threshold: f64,
}

impl SpectralTriple {
    pub fn order(&self) -> usize {
        self.lambda.len()
    }

    /// Orthogonal factor with eigenvectors as columns.
    pub fn p(&self) -> &Matrix {
        &self.p
    }

    /// Eigenvalues, non-increasing.
    pub fn lambda(&self) -> &Vector {
        &self.lambda
    }

    /// Absolute threshold used for the zero classification.
    pub fn zero_threshold(&self) -> f64 {
        self.zero_threshold
    }

    pub fn alpha(&self) -> Range<usize> {
        0..self.n_alpha
    }

    pub fn beta(&self) -> Range<usize> {
        self.n_alpha..self.n_alpha + self.n_beta
    }

    pub fn gamma(&self) -> Range<usize> {
        self.n_alpha + self.n_beta..self.order()
    }

    pub fn p_block(&self, r: Range<usize>) -> Matrix {
        self.p.columns(r.start, r.len()).into_owned()
    }

    pub fn p_alpha(&self) -> Matrix {
        self.p_block(self.alpha())
    }

    pub fn p_beta(&self) -> Matrix {
        self.p_block(self.beta())
    }

    pub fn p_gamma(&self) -> Matrix {
        self.p_block(self.gamma())
    }

    /// `P·Diag(λ)·Pᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        sym_of(&(&self.p * Matrix::from_diagonal(&self.lambda) * self.p.transpose()))
    }

    /// The positive part `A = P_α Λ_α P_αᵀ` of the complementary pair.
    pub fn positive_part(&self) -> SymMatrix {
        self.part(self.alpha())
    }

    /// The negative part `B = P_γ Λ_γ P_γᵀ` of the complementary pair.
    pub fn negative_part(&self) -> SymMatrix {
        self.part(self.gamma())
    }

    fn part(&self, r: Range<usize>) -> SymMatrix {
        let pb = self.p_block(r.clone());
        let d = Vector::from_iterator(r.len(), r.map(|i| self.lambda[i]));
        sym_of(&(&pb * Matrix::from_diagonal(&d) * pb.transpose()))
    }

    /// `PᵀHP`.
    pub fn rotate(&self, h: &SymMatrix) -> Result<Matrix> {
        check_dim("spectral rotation", self.order(), h.order())?;
        Ok(self.p.transpose() * h.as_matrix() * &self.p)
    }

    /// `P·H̃·Pᵀ`, symmetrised.
    pub fn unrotate(&self, ht: &Matrix) -> SymMatrix {
        sym_of(&(&self.p * ht * self.p.transpose()))
    }
}

/// The weights `Υ_ij = −λ_j/(λ_i − λ_j)` for `i ∈ α`, `j ∈ γ`, and `Ῡ = 1 − Υ`.
#[derive(Debug, Clone)]
pub struct GammaWeights {
    pub upsilon: Matrix,
    pub upsilon_bar: Matrix,
}

impl GammaWeights {
    pub fn from_triple(t: &SpectralTriple) -> Self {
        let (a, g) = (t.alpha(), t.gamma());
        let mut ups = Matrix::zeros(a.len(), g.len());
        for (ii, i) in a.clone().enumerate() {
            for (jj, j) in g.clone().enumerate() {
                let (li, lj) = (t.lambda[i], t.lambda[j]);
                ups[(ii, jj)] = -lj / (li - lj);
            }
        }
        let bar = ups.map(|v| 1.0 - v);
        Self {
            upsilon: ups,
            upsilon_bar: bar,
        }
    }
}

/// Eigendecomposition of `m`; index `i` is placed in `β` iff
/// `|λ_i| ≤ zero_tol·max(1, ‖m‖₂)`.
pub fn eig_sym(m: &SymMatrix, zero_tol: f64) -> Result<SpectralTriple> {
    if !(zero_tol >= 0.0) {
        return Err(Error::Input("zero tolerance must be nonnegative".into()));
    }
    let (lambda, p) = sorted_eigen(m.as_matrix())?;
    let norm2 = lambda.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let thr = zero_tol * norm2.max(1.0);
    let n_alpha = lambda.iter().filter(|&&v| v > thr).count();
    let n_gamma = lambda.iter().filter(|&&v| v < -thr).count();
    let n_beta = lambda.len() - n_alpha - n_gamma;
    Ok(SpectralTriple {
        p,
        lambda,
        n_alpha,
        n_beta,
        zero_threshold: thr,
    })
}

/// Projection onto the PSD cone.
pub fn project_psd(m: &SymMatrix) -> Result<SymMatrix> {
    let (lambda, p) = sorted_eigen(m.as_matrix())?;
    let d = lambda.map(|v| v.max(0.0));
    Ok(sym_of(&(&p * Matrix::from_diagonal(&d) * p.transpose())))
}

/// Projection onto the NSD cone, `−Π₊(−m)`.
pub fn project_nsd(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(project_psd(&m.scale(-1.0))?.scale(-1.0))
}

/// Directional derivative of the NSD projection at `C` (given by its triple) along `H`.
///
/// In rotated coordinates: the `αα` and `αβ` blocks vanish, the `αγ` block is
/// `H̃_αγ ∘ Υ`, the `ββ` block is the NSD projection of `H̃_ββ`, and the `βγ`
/// and `γγ` blocks are copied.
pub fn dir_deriv_proj_nsd(t: &SpectralTriple, h: &SymMatrix) -> Result<SymMatrix> {
    let ht = t.rotate(h)?;
    let p = t.order();
    let (a, b, g) = (t.alpha(), t.beta(), t.gamma());
    let w = GammaWeights::from_triple(t);
    let mut out = Matrix::zeros(p, p);
    for (ii, i) in a.clone().enumerate() {
        for (jj, j) in g.clone().enumerate() {
            let v = ht[(i, j)] * w.upsilon[(ii, jj)];
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    if !b.is_empty() {
        let hbb = sym_of(&ht.view((b.start, b.start), (b.len(), b.len())).into_owned());
        let proj = project_nsd(&hbb)?;
        out.view_mut((b.start, b.start), (b.len(), b.len()))
            .copy_from(proj.as_matrix());
    }
    for i in b.start..p {
        for j in g.clone() {
            out[(i, j)] = ht[(i, j)];
            out[(j, i)] = ht[(j, i)];
        }
    }
    Ok(t.unrotate(&out))
}

/// Directional derivative of the PSD projection, `H − Π′₋(C; H)`.
pub fn dir_deriv_proj_psd(t: &SpectralTriple, h: &SymMatrix) -> Result<SymMatrix> {
    Ok(h.sub(&dir_deriv_proj_nsd(t, h)?))
}

/// Moore–Penrose pseudo-inverse of a PSD matrix. Eigenvalues within
/// `tol·max(1, ‖S‖₂)` of zero are treated as zero; anything more negative is a
/// domain error.
pub fn pinv_psd(s: &SymMatrix, tol: f64) -> Result<SymMatrix> {
    let t = eig_sym(s, tol)?;
    if !t.gamma().is_empty() {
        return Err(Error::Domain(format!(
            "pseudo-inverse requires a PSD matrix, found eigenvalue {:e}",
            t.lambda[t.order() - 1]
        )));
    }
    let pa = t.p_alpha();
    let d = Vector::from_iterator(t.n_alpha, t.alpha().map(|i| 1.0 / t.lambda[i]));
    Ok(sym_of(&(&pa * Matrix::from_diagonal(&d) * pa.transpose())))
}

fn block(m: &Matrix, rows: Range<usize>, cols: Range<usize>) -> Matrix {
    m.view((rows.start, cols.start), (rows.len(), cols.len()))
        .into_owned()
}

fn span(a: Range<usize>, b: Range<usize>) -> Range<usize> {
    debug_assert_eq!(a.end, b.start);
    a.start..b.end
}

fn block_extreme_eig(m: &Matrix, r: Range<usize>, largest: bool) -> Result<f64> {
    if r.is_empty() {
        return Ok(0.0);
    }
    let bb = block(m, r.clone(), r);
    if largest {
        lambda_max(&bb)
    } else {
        lambda_min(&bb)
    }
}

/// Membership in the critical cone of the NSD cone at `C`:
/// `P_αᵀ H [P_α P_β] = 0` and `P_βᵀ H P_β ⪯ 0`, tested relative to `‖H‖_F`.
pub fn in_critical_cone_nsd(h: &SymMatrix, t: &SpectralTriple, tol: f64) -> Result<bool> {
    let ht = t.rotate(h)?;
    let thr = tol * h.frobenius_norm();
    let rows = block(&ht, t.alpha(), span(t.alpha(), t.beta()));
    Ok(rows.norm() <= thr && block_extreme_eig(&ht, t.beta(), true)? <= thr)
}

/// Membership in the critical cone of the PSD cone at `C`:
/// `P_γᵀ H [P_β P_γ] = 0` and `P_βᵀ H P_β ⪰ 0`.
pub fn in_critical_cone_psd(h: &SymMatrix, t: &SpectralTriple, tol: f64) -> Result<bool> {
    let ht = t.rotate(h)?;
    let thr = tol * h.frobenius_norm();
    let rows = block(&ht, t.gamma(), span(t.beta(), t.gamma()));
    Ok(rows.norm() <= thr && block_extreme_eig(&ht, t.beta(), false)? >= -thr)
}

/// Membership in the polar of the NSD critical cone:
/// `P_αᵀ H P_γ = 0` and `H` in the PSD critical cone.
pub fn in_polar_critical_cone_nsd(h: &SymMatrix, t: &SpectralTriple, tol: f64) -> Result<bool> {
    let ht = t.rotate(h)?;
    let thr = tol * h.frobenius_norm();
    Ok(block(&ht, t.alpha(), t.gamma()).norm() <= thr && in_critical_cone_psd(h, t, tol)?)
}

/// Membership in the polar of the PSD critical cone:
/// `P_αᵀ H P_γ = 0` and `H` in the NSD critical cone.
pub fn in_polar_critical_cone_psd(h: &SymMatrix, t: &SpectralTriple, tol: f64) -> Result<bool> {
    let ht = t.rotate(h)?;
    let thr = tol * h.frobenius_norm();
    Ok(block(&ht, t.alpha(), t.gamma()).norm() <= thr && in_critical_cone_nsd(h, t, tol)?)
}

/// Outcome of [`check_pair_relations`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairRelations {
    /// `P_αᵀ ΔA [P_α P_β] = 0`.
    pub alpha_rows_vanish: bool,
    /// `(P_αᵀ ΔA P_γ) ∘ Ῡ = (P_αᵀ ΔB P_γ) ∘ Υ`.
    pub alpha_gamma_coupled: bool,
    /// `P_βᵀ ΔA P_β = Π₋(P_βᵀ (ΔA + ΔB) P_β)`.
    pub beta_block_projected: bool,
    /// `[P_β P_γ]ᵀ ΔB P_γ = 0`.
    pub gamma_cols_vanish: bool,
    /// `ΔA` lies in the NSD critical cone at `C`.
    pub da_in_critical_cone: bool,
    /// `⟨ΔA, ΔB⟩`.
    pub inner_product: f64,
    /// `2⟨A, ΔA (−B)† ΔA⟩`.
    pub curvature: f64,
}

impl PairRelations {
    pub fn relations_hold(&self) -> bool {
        self.alpha_rows_vanish
            && self.alpha_gamma_coupled
            && self.beta_block_projected
            && self.gamma_cols_vanish
    }
}

/// Evaluates the four block relations that characterise
/// `ΔA = Π′₋(C; ΔA + ΔB)` for a complementary pair, plus the implied
/// inner-product identity. Block tests are relative to `‖ΔA‖_F + ‖ΔB‖_F`.
pub fn check_pair_relations(
    da: &SymMatrix,
    db: &SymMatrix,
    t: &SpectralTriple,
    tol: f64,
) -> Result<PairRelations> {
    check_dim("pair relations", da.order(), db.order())?;
    let at = t.rotate(da)?;
    let bt = t.rotate(db)?;
    let thr = tol * (da.frobenius_norm() + db.frobenius_norm());
    let (a, b, g) = (t.alpha(), t.beta(), t.gamma());
    let w = GammaWeights::from_triple(t);

    let alpha_rows_vanish = block(&at, a.clone(), span(a.clone(), b.clone())).norm() <= thr;
    let lhs = block(&at, a.clone(), g.clone()).component_mul(&w.upsilon_bar);
    let rhs = block(&bt, a.clone(), g.clone()).component_mul(&w.upsilon);
    let alpha_gamma_coupled = (lhs - rhs).norm() <= thr;
    let beta_block_projected = if b.is_empty() {
        true
    } else {
        let abb = block(&at, b.clone(), b.clone());
        let sum = sym_of(&(&abb + block(&bt, b.clone(), b.clone())));
        (abb - project_nsd(&sum)?.as_matrix()).norm() <= thr
    };
    let gamma_cols_vanish = block(&bt, span(b.clone(), g.clone()), g.clone()).norm() <= thr;
    let da_in_critical_cone = in_critical_cone_nsd(da, t, tol)?;

    let pos = t.positive_part();
    let neg_b = t.negative_part().scale(-1.0);
    let pinv = pinv_psd(&neg_b, DEFAULT_ZERO_TOL)?;
    let middle = da.as_matrix() * pinv.as_matrix() * da.as_matrix();
    Ok(PairRelations {
        alpha_rows_vanish,
        alpha_gamma_coupled,
        beta_block_projected,
        gamma_cols_vanish,
        da_in_critical_cone,
        inner_product: da.inner(db),
        curvature: 2.0 * pos.as_matrix().dot(&middle),
    })
}
