use super::{Engine, IterateState, SPADMMConfig, SolveResult};
use crate::error::Result;
use crate::linalg::stack;
use crate::model::{
    Block, ConeKind, ConicQP, Nonsmooth, Phi, PrimalPoint, ProxKind, TwoBlockProblem,
};
use crate::{Matrix, Vector};

/// Splits the primal problem as `min ⟨x,Qx⟩/2 + ⟨c,x⟩ + δ_𝒦(x) + φ(u)`
/// subject to `𝒜x = b`, `x − u = 0`.
///
/// The first block is `x` with constraint map `[𝒜; I]`, the second is `u`
/// with `[0; −I]`. Multipliers of the two-block form are `−(y, z)`.
pub fn primal_two_block(prob: &ConicQP) -> Result<TwoBlockProblem> {
    let (m, d) = (prob.m(), prob.dim());
    let mut adj_x = Matrix::zeros(m + d, d);
    adj_x.rows_mut(0, m).copy_from(&prob.a);
    adj_x.rows_mut(m, d).fill_with_identity();
    let mut adj_u = Matrix::zeros(m + d, d);
    adj_u.rows_mut(m, d).fill_with_identity();
    adj_u.rows_mut(m, d).neg_mut();
    let ns_x = match prob.cone {
        ConeKind::None => Nonsmooth::zero(),
        ConeKind::Psd => Nonsmooth::single(ProxKind::Psd(prob.order())),
    };
    let ns_u = match &prob.phi {
        Phi::BoxIndicator if prob.pset.is_free() => Nonsmooth::zero(),
        Phi::BoxIndicator => Nonsmooth::single(ProxKind::Box(prob.pset.clone())),
        Phi::WeightedL1(w) => Nonsmooth::single(ProxKind::WeightedL1(w.clone())),
    };
    TwoBlockProblem::new(
        Block::new(prob.q.clone(), prob.c.clone(), ns_x, adj_x),
        Block::new(Matrix::zeros(d, d), Vector::zeros(d), ns_u, adj_u),
        stack(&[&prob.b, &Vector::zeros(d)]),
    )
}

/// Reads a two-block iterate of [`primal_two_block`] in primal-dual coordinates.
#[derive(Debug, Clone, Copy)]
pub struct PrimalView {
    pub m: usize,
}

impl PrimalView {
    pub fn new(prob: &ConicQP) -> Self {
        Self { m: prob.m() }
    }

    pub fn point(&self, u: &IterateState) -> PrimalPoint {
        let y = -u.x.rows(0, self.m).clone_owned();
        let z = -u.x.rows(self.m, u.x.len() - self.m).clone_owned();
        PrimalPoint {
            x: u.y.clone(),
            u: u.z.clone(),
            y,
            z,
        }
    }

    pub fn iterate(&self, pt: &PrimalPoint, k: usize) -> IterateState {
        IterateState {
            y: pt.x.clone(),
            z: pt.u.clone(),
            x: -stack(&[&pt.y, &pt.z]),
            k,
        }
    }
}

/// Runs the primal sPADMM from the origin.
///
/// With the default `S` rule the `x` step is a linear solve when there is no
/// cone and a projected gradient step otherwise; the `u` step is always a
/// single proximal map.
pub fn run_primal_spadmm(prob: &ConicQP, cfg: &SPADMMConfig) -> Result<SolveResult<PrimalPoint>> {
    let tb = primal_two_block(prob)?;
    let view = PrimalView::new(prob);
    let r = Engine::new(&tb, cfg)?.run(IterateState::zeros(&tb))?;
    Ok(SolveResult {
        state: view.point(&r.state),
        status: r.status,
        iterations: r.iterations,
        residual: r.residual,
        residual_history: r.residual_history,
        history: r.history.iter().map(|u| view.point(u)).collect(),
        worst_certificate: r.worst_certificate,
        tau_in_range: r.tau_in_range,
    })
}
