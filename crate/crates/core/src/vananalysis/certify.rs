use super::geometry::{curvature_matrix, Geometry};
use super::verdicts::{dual_uniqueness, primal_uniqueness};
use super::ConditionVerdict;
use crate::error::{Error, Result};
use crate::linalg::stack;
use crate::matcone::{
    dir_deriv_proj_nsd, eig_sym, pinv_psd, project_psd, smat, svec, SpectralTriple,
    DEFAULT_ZERO_TOL,
};
use crate::model::{
    build_restricted_wolfe_dual, kkt_residual_dual, kkt_residual_primal, ConeKind, ConicQP,
    KKTPoint, Phi, PrimalPoint,
};
use crate::polyset::{self, critical_cone_pattern, CoordCone, ACTIVE_TOL};
use crate::sgs::run_sgs_spadmm;
use crate::solver::{SPADMMConfig, SolveStatus};
use crate::{Matrix, Vector};

const SOLVE_TOL: f64 = 1e-10;
const SOLVE_MAX_ITER: usize = 100_000;
const POLISH_STEPS: usize = 8;

/// A KKT point whose residuals have been verified, with the spectral and
/// box-activity data the verdicts are built from.
#[derive(Debug, Clone)]
pub struct CertifiedKKT {
    pub prob: ConicQP,
    pub point: KKTPoint,
    /// `‖F_P(x̄, ū, ȳ, z̄)‖`.
    pub primal_residual: f64,
    /// `‖F_D(s̄, ȳ, w̄, z̄, x̄)‖`.
    pub dual_residual: f64,
    /// `|⟨x̄, s̄⟩|`.
    pub complementarity: f64,
    pub scale: f64,
    /// Eigendecomposition of `x̄ − s̄`: `α` carries `x̄`, `γ` carries `−s̄`.
    pub triple: Option<SpectralTriple>,
    /// Coordinate cones of `C_P(ū − z̄)`.
    pub box_pattern: Vec<CoordCone>,
    pub primal_unique: ConditionVerdict,
    pub dual_unique: ConditionVerdict,
    pub(crate) geometry: Geometry,
}

impl CertifiedKKT {
    /// Validates a candidate point and assembles the certificate. `tol` bounds
    /// both residual norms and the complementarity gap relative to the scale.
    pub fn from_point(prob: &ConicQP, point: KKTPoint, tol: f64) -> Result<Self> {
        if !matches!(prob.phi, Phi::BoxIndicator) {
            return Err(Error::Input(
                "second-order analysis supports only the box-indicator term".into(),
            ));
        }
        let scale = prob.scale();
        let rp = kkt_residual_primal(prob, &point.primal())?.norm();
        let rd = kkt_residual_dual(prob, &point.dual())?.norm();
        let comp = point.x.dot(&point.s).abs();
        let bound = tol * scale;
        if !(rp <= bound && rd <= bound && comp <= bound) {
            return Err(Error::Certification(format!(
                "residuals too large: primal {rp:e}, dual {rd:e}, complementarity {comp:e} (bound {bound:e})"
            )));
        }
        let triple = match prob.cone {
            ConeKind::Psd => {
                let c = smat(&(&point.x - &point.s))?;
                Some(eig_sym(&c, DEFAULT_ZERO_TOL)?)
            }
            ConeKind::None => None,
        };
        let box_pattern = critical_cone_pattern(&prob.pset, &point.u, &point.z, ACTIVE_TOL)?;
        let geometry = Geometry::new(prob.dim(), triple.as_ref(), box_pattern.clone());
        let mut cert = Self {
            prob: prob.clone(),
            point,
            primal_residual: rp,
            dual_residual: rd,
            complementarity: comp,
            scale,
            triple,
            box_pattern,
            primal_unique: placeholder(),
            dual_unique: placeholder(),
            geometry,
        };
        cert.primal_unique = primal_uniqueness(&cert)?;
        cert.dual_unique = dual_uniqueness(&cert)?;
        Ok(cert)
    }

    /// Size of the zero-eigenvalue block of `x̄ − s̄`.
    pub fn beta_size(&self) -> usize {
        self.geometry.beta_len()
    }

    /// Strict complementarity of the matrix pair and no degenerate box coordinate.
    pub fn subspace_regime(&self) -> bool {
        self.geometry.subspace_regime()
    }

    /// `d ↦ 2⟨s̄, d x̄† d⟩` as a matrix; zero without a cone.
    pub(crate) fn primal_curvature(&self) -> Result<Matrix> {
        self.curvature(&self.point.s, &self.point.x)
    }

    /// `d ↦ 2⟨x̄, d s̄† d⟩` as a matrix; zero without a cone.
    pub(crate) fn dual_curvature(&self) -> Result<Matrix> {
        self.curvature(&self.point.x, &self.point.s)
    }

    fn curvature(&self, weight: &Vector, inverted: &Vector) -> Result<Matrix> {
        let d = self.prob.dim();
        if self.prob.cone == ConeKind::None {
            return Ok(Matrix::zeros(d, d));
        }
        let w = smat(weight)?;
        let y = pinv_psd(&smat(inverted)?, DEFAULT_ZERO_TOL)?;
        curvature_matrix(&w, &y)
    }
}

fn placeholder() -> ConditionVerdict {
    ConditionVerdict::new(
        super::Condition::PrimalUniqueness,
        super::VerdictStatus::Undetermined,
        super::Method::Sampled,
    )
}

/// Solves with sGS-sPADMM, polishes with semismooth Newton steps on `F_P`,
/// then certifies with residual bound `tol·scale`.
pub fn certify_kkt(prob: &ConicQP, tol: f64) -> Result<CertifiedKKT> {
    if !matches!(prob.phi, Phi::BoxIndicator) {
        return Err(Error::Input(
            "second-order analysis supports only the box-indicator term".into(),
        ));
    }
    let cfg = SPADMMConfig {
        tol_rel: SOLVE_TOL,
        max_iter: SOLVE_MAX_ITER,
        ..SPADMMConfig::default()
    };
    let run = run_sgs_spadmm(prob, &cfg)?;
    if run.status != SolveStatus::Converged {
        return Err(Error::Certification(format!(
            "solver stopped with {:?} after {} iterations (relative residual {:e})",
            run.status, run.iterations, run.residual
        )));
    }
    let st = run.state;
    let mut pt = PrimalPoint {
        x: st.x.clone(),
        u: st.x.clone(),
        y: st.y.clone(),
        z: st.z.clone(),
    };
    polish(prob, &mut pt)?;
    let point = clean(prob, &pt)?;
    CertifiedKKT::from_point(prob, point, tol)
}

/// Directional derivative of `F_P` at `pt` along `dir = (d_x, d_u, d_y, d_z)`.
/// `nsd_triple` is the eigendecomposition of `Qx + c − A*y − z − x`.
pub(crate) fn primal_map_derivative(
    prob: &ConicQP,
    nsd_triple: Option<&SpectralTriple>,
    pt: &PrimalPoint,
    dir: &Vector,
) -> Result<Vector> {
    let (d, m) = (prob.dim(), prob.m());
    let dx = dir.rows(0, d).into_owned();
    let du = dir.rows(d, d).into_owned();
    let dy = dir.rows(2 * d, m).into_owned();
    let dz = dir.rows(2 * d + m, d).into_owned();
    let dg = &prob.q * &dx - prob.a.tr_mul(&dy) - &dz;
    let b1 = match nsd_triple {
        Some(t) => &dx + svec(&dir_deriv_proj_nsd(t, &smat(&(&dg - &dx))?)?),
        None => dg,
    };
    let c2 = &pt.u - &pt.z;
    let b2 = -&du + polyset::dir_deriv_project_box(&prob.pset, &c2, &(&du - &dz))?;
    let b3 = &prob.a * &dx;
    let b4 = &dx - &du;
    Ok(stack(&[&b1, &b2, &b3, &b4]))
}

pub(crate) fn nsd_triple_at(prob: &ConicQP, pt: &PrimalPoint) -> Result<Option<SpectralTriple>> {
    match prob.cone {
        ConeKind::Psd => {
            let g = &prob.q * &pt.x + &prob.c - prob.a.tr_mul(&pt.y) - &pt.z;
            Ok(Some(eig_sym(&smat(&(g - &pt.x))?, DEFAULT_ZERO_TOL)?))
        }
        ConeKind::None => Ok(None),
    }
}

/// Matrix of the directional derivative, built column by column.
pub(crate) fn primal_map_jacobian(
    prob: &ConicQP,
    nsd_triple: Option<&SpectralTriple>,
    pt: &PrimalPoint,
) -> Result<Matrix> {
    let n = 3 * prob.dim() + prob.m();
    let mut j = Matrix::zeros(n, n);
    for k in 0..n {
        let mut e = Vector::zeros(n);
        e[k] = 1.0;
        j.set_column(k, &primal_map_derivative(prob, nsd_triple, pt, &e)?);
    }
    Ok(j)
}

fn unstack(prob: &ConicQP, v: &Vector) -> PrimalPoint {
    let (d, m) = (prob.dim(), prob.m());
    PrimalPoint {
        x: v.rows(0, d).into_owned(),
        u: v.rows(d, d).into_owned(),
        y: v.rows(2 * d, m).into_owned(),
        z: v.rows(2 * d + m, d).into_owned(),
    }
}

fn polish(prob: &ConicQP, pt: &mut PrimalPoint) -> Result<()> {
    let mut f = kkt_residual_primal(prob, pt)?;
    for _ in 0..POLISH_STEPS {
        let fn0 = f.norm();
        if fn0 <= 1e-15 * prob.scale() {
            break;
        }
        let t = nsd_triple_at(prob, pt)?;
        let j = primal_map_jacobian(prob, t.as_ref(), pt)?;
        let svd = j.svd(true, true);
        let smax = svd.singular_values.max();
        let Ok(step) = svd.solve(&(-&f), 1e-12 * smax.max(1.0)) else {
            break;
        };
        let base = stack(&[&pt.x, &pt.u, &pt.y, &pt.z]);
        let mut accepted = false;
        let mut alpha = 1.0;
        for _ in 0..20 {
            let trial = unstack(prob, &(&base + &step * alpha));
            let ft = kkt_residual_primal(prob, &trial)?;
            if ft.norm() < fn0 {
                *pt = trial;
                f = ft;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(())
}

/// Splits `x − s` exactly into complementary PSD parts and recomputes `z` as
/// an exact normal-cone multiplier at `ū`.
fn clean(prob: &ConicQP, pt: &PrimalPoint) -> Result<KKTPoint> {
    let s_raw = &prob.q * &pt.x + &prob.c - prob.a.tr_mul(&pt.y) - &pt.z;
    let (x, s) = match prob.cone {
        ConeKind::Psd => {
            let c = smat(&(&pt.x - &s_raw))?;
            let xp = project_psd(&c)?;
            let sp = project_psd(&c.scale(-1.0))?;
            (svec(&xp), svec(&sp))
        }
        ConeKind::None => (pt.x.clone(), Vector::zeros(prob.dim())),
    };
    let c2 = &pt.u - &pt.z;
    let u = polyset::project_box(&prob.pset, &c2)?;
    let z = &u - &c2;
    let dual = build_restricted_wolfe_dual(prob)?;
    let w = dual.project_w(&x);
    Ok(KKTPoint {
        v: -&z,
        x,
        u,
        s,
        y: pt.y.clone(),
        z,
        w,
    })
}
