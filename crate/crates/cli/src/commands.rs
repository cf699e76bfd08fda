use crate::{AnalyzeArgs, DiagnoseArgs, FamilyArg, GenerateArgs, RunFlags, SolveArgs, SolverKind};
use spadmm::diagnostics::{build_ledger, stau_ttau, summarize, Diagnostics, Ledger, LedgerRow};
use spadmm::generate::{generate as gen_instance, GenSpec};
use spadmm::io::{
    parse_config_onto, parse_history, parse_problem, write_problem, ProblemFile, SolutionFile,
};
use spadmm::model::{
    objective_dual, objective_primal, residual_r, ConicQP, IterateState, KKTPoint, TwoBlockProblem,
};
use spadmm::sgs::{run_sgs_spadmm, sgs_equivalent_two_block, SGSState};
use spadmm::solver::{
    primal_two_block, Engine, HistoryMode, PrimalView, SPADMMConfig, SolveStatus,
};
use spadmm::vananalysis::{certify_kkt, consistency_report, ConsistencyReport, VerdictStatus};
use spadmm::Vector;
use std::fs;
use std::path::{Path, PathBuf};

/// Prints a line to stdout; a closed pipe is not an error.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_MAX_ITER: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;
pub const EXIT_CONTRADICTION: u8 = 4;
pub const EXIT_VIOLATION: u8 = 5;

/// Relative slack tolerances asserted by `diagnose`.
const TOL_RESIDUAL_BOUND: f64 = 1e-9;
const TOL_DESCENT: f64 = 1e-8;
/// A reference point must satisfy `‖R(ū)‖ ≤ REFERENCE_TOL·(1 + ‖ū‖)`.
const REFERENCE_TOL: f64 = 1e-6;

type CmdResult = Result<u8, String>;

fn ctx<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> String + '_ {
    move |e| format!("{}: {e}", path.display())
}

fn load_problem(path: &Path) -> Result<ProblemFile, String> {
    let text = fs::read_to_string(path).map_err(ctx(path))?;
    parse_problem(&text).map_err(ctx(path))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), String> {
    fs::write(path, contents).map_err(ctx(path))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(
        || "problem".to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

/// Defaults, then the config file, then command-line flags. An explicit
/// `--tau` outside the guaranteed range is taken as an override.
fn build_config(run: &RunFlags, history: HistoryMode) -> Result<SPADMMConfig, String> {
    let mut cfg = SPADMMConfig {
        history,
        ..Default::default()
    };
    if let Some(p) = &run.config {
        let text = fs::read_to_string(p).map_err(ctx(p))?;
        cfg = parse_config_onto(&text, cfg).map_err(ctx(p))?;
    }
    if let Some(v) = run.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = run.tau {
        cfg.tau = v;
        if !cfg.tau_in_range() {
            cfg.allow_tau_out_of_range = true;
        }
    }
    if let Some(v) = run.tol {
        cfg.tol_rel = v;
    }
    if let Some(v) = run.max_iter {
        cfg.max_iter = v;
    }
    if let Some(h) = &run.history {
        cfg.history = parse_history(h).map_err(|e| e.to_string())?;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIter => "max-iter",
        SolveStatus::Diverged => "diverged",
    }
}

fn status_code(s: SolveStatus) -> u8 {
    match s {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::MaxIter => EXIT_MAX_ITER,
        SolveStatus::Diverged => EXIT_DIVERGED,
    }
}

fn concat(parts: &[&Vector]) -> Vector {
    Vector::from_iterator(
        parts.iter().map(|v| v.len()).sum(),
        parts.iter().flat_map(|v| v.iter().copied()),
    )
}

/// The sGS iterate seen as an iterate of its two-block equivalent.
fn sgs_iterate(st: &SGSState) -> IterateState {
    IterateState {
        y: concat(&[&st.s, &st.y]),
        z: st.z.clone(),
        x: st.x.clone(),
        k: st.k,
    }
}

fn reference_iterate(kind: SolverKind, prob: &ConicQP, r: &KKTPoint) -> IterateState {
    match kind {
        SolverKind::Primal => PrimalView::new(prob).iterate(&r.primal(), 0),
        SolverKind::DualSgs => IterateState {
            y: concat(&[&r.s, &r.y]),
            z: r.z.clone(),
            x: r.x.clone(),
            k: 0,
        },
    }
}

/// The two-block problem and configuration whose diagnostics apply to `kind`.
fn diagnostic_model(
    kind: SolverKind,
    prob: &ConicQP,
    cfg: &SPADMMConfig,
) -> Result<Option<(TwoBlockProblem, SPADMMConfig)>, String> {
    match kind {
        SolverKind::Primal => Ok(Some((
            primal_two_block(prob).map_err(|e| e.to_string())?,
            cfg.clone(),
        ))),
        SolverKind::DualSgs if prob.q.amax() == 0.0 => sgs_equivalent_two_block(prob, cfg)
            .map(Some)
            .map_err(|e| e.to_string()),
        SolverKind::DualSgs => Ok(None),
    }
}

fn residual_only_ledger(cfg: &SPADMMConfig, residuals: &[f64]) -> Ledger {
    let rows = residuals
        .iter()
        .enumerate()
        .map(|(i, &r)| LedgerRow {
            k: i + 1,
            r_norm: r,
            theta: f64::NAN,
            delta_k: f64::NAN,
            nu_k: f64::NAN,
            residual_bound_slack: f64::NAN,
            descent_slack: f64::NAN,
            ratio: f64::NAN,
            u: Vec::new(),
        })
        .collect();
    Ledger {
        sigma: cfg.sigma,
        tau: cfg.tau,
        tau_in_range: cfg.tau_in_range(),
        dims: (0, 0, 0),
        rows,
    }
}

fn short_constants(cfg: &SPADMMConfig) -> Result<String, String> {
    let (s, t) = stau_ttau(cfg.tau).map_err(|e| e.to_string())?;
    Ok(format!(
        "sigma = {:e}\ntau = {:e}\ns_tau = {s:e}\nt_tau = {t:e}\n",
        cfg.sigma, cfg.tau
    ))
}

pub fn solve(a: &SolveArgs, kind: SolverKind) -> CmdResult {
    let file = load_problem(&a.problem)?;
    let prob = &file.prob;
    let cfg = build_config(&a.run, HistoryMode::Full)?;
    let e = |e: spadmm::Error| e.to_string();

    let (solution, ledger, constants, status) = match kind {
        SolverKind::Primal => {
            let (tb, _) = diagnostic_model(kind, prob, &cfg)?.expect("primal model");
            let view = PrimalView::new(prob);
            let r = Engine::new(&tb, &cfg)
                .map_err(e)?
                .run(IterateState::zeros(&tb))
                .map_err(e)?;
            let pt = view.point(&r.state);
            let solution = SolutionFile {
                solver: "primal".into(),
                status: status_name(r.status).into(),
                iterations: r.iterations,
                residual: r.residual,
                objective: objective_primal(prob, &pt.x).map_err(e)?.value,
                blocks: vec![
                    ("x".into(), pt.x),
                    ("u".into(), pt.u),
                    ("y".into(), pt.y),
                    ("z".into(), pt.z),
                ],
            };
            let diag = Diagnostics::new(&tb, &cfg).map_err(e)?;
            let bar = file
                .reference
                .as_ref()
                .map(|p| reference_iterate(kind, prob, p));
            let ledger = build_ledger(&diag, &r.history, bar.as_ref()).map_err(e)?;
            (solution, ledger, diag.constants.dump(), r.status)
        }
        SolverKind::DualSgs => {
            let r = run_sgs_spadmm(prob, &cfg).map_err(e)?;
            let st = &r.state;
            let solution = SolutionFile {
                solver: "dual-sgs".into(),
                status: status_name(r.status).into(),
                iterations: r.iterations,
                residual: r.residual,
                objective: objective_dual(prob, &st.point()).map_err(e)?.value,
                blocks: vec![
                    ("s".into(), st.s.clone()),
                    ("y".into(), st.y.clone()),
                    ("w".into(), st.w.clone()),
                    ("z".into(), st.z.clone()),
                    ("x".into(), st.x.clone()),
                ],
            };
            let (ledger, constants) = match diagnostic_model(kind, prob, &cfg)? {
                Some((tb, gcfg)) => {
                    let diag = Diagnostics::new(&tb, &gcfg).map_err(e)?;
                    let hist: Vec<IterateState> = r.history.iter().map(sgs_iterate).collect();
                    let bar = file
                        .reference
                        .as_ref()
                        .map(|p| reference_iterate(kind, prob, p));
                    (
                        build_ledger(&diag, &hist, bar.as_ref()).map_err(e)?,
                        diag.constants.dump(),
                    )
                }
                None => (
                    residual_only_ledger(&cfg, &r.residual_history),
                    short_constants(&cfg)?,
                ),
            };
            (solution, ledger, constants, r.status)
        }
    };

    fs::create_dir_all(&a.out_dir).map_err(ctx(&a.out_dir))?;
    let base = format!("{}.{}", stem(&a.problem), solution.solver);
    let out = |ext: &str| -> PathBuf { a.out_dir.join(format!("{base}.{ext}")) };
    write_file(&out("solution"), solution.render().as_bytes())?;
    let mut buf = Vec::new();
    ledger.write(&mut buf).map_err(e)?;
    write_file(&out("ledger.csv"), &buf)?;
    write_file(&out("constants.txt"), constants.as_bytes())?;
    out!(
        "{} after {} iterations, relative residual {:e}, objective {}",
        solution.status,
        solution.iterations,
        solution.residual,
        solution.objective
    );
    Ok(status_code(status))
}

fn reference_from_solution(
    path: &Path,
    kind: SolverKind,
    prob: &ConicQP,
) -> Result<IterateState, String> {
    let text = fs::read_to_string(path).map_err(ctx(path))?;
    let sol = SolutionFile::parse(&text).map_err(ctx(path))?;
    let get = |k: &str| {
        sol.block(k)
            .cloned()
            .ok_or_else(|| format!("{}: missing block `{k}`", path.display()))
    };
    Ok(match kind {
        SolverKind::Primal => {
            let pt = spadmm::model::PrimalPoint {
                x: get("x")?,
                u: get("u")?,
                y: get("y")?,
                z: get("z")?,
            };
            PrimalView::new(prob).iterate(&pt, 0)
        }
        SolverKind::DualSgs => IterateState {
            y: concat(&[&get("s")?, &get("y")?]),
            z: get("z")?,
            x: get("x")?,
            k: 0,
        },
    })
}

pub fn diagnose(a: &DiagnoseArgs) -> CmdResult {
    let file = load_problem(&a.problem)?;
    let prob = &file.prob;
    let text = fs::read(&a.ledger).map_err(ctx(&a.ledger))?;
    let ledger = Ledger::read(text.as_slice()).map_err(ctx(&a.ledger))?;

    let mut cfg = build_config(&a.run, HistoryMode::None)?;
    cfg.sigma = ledger.sigma;
    cfg.tau = ledger.tau;
    cfg.allow_tau_out_of_range = true;
    let (tb, gcfg) = diagnostic_model(a.solver, prob, &cfg)?
        .ok_or("ledgers of the sGS solver with nonzero Q carry no iterates to diagnose")?;
    let dims = (tb.y.dim(), tb.z.dim(), tb.c.len());
    if ledger.dims != dims {
        return Err(format!(
            "{}: ledger dimensions {:?} do not match the problem ({dims:?})",
            a.ledger.display(),
            ledger.dims
        ));
    }

    let bar = match (&a.reference, &file.reference) {
        (Some(p), _) => reference_from_solution(p, a.solver, prob)?,
        (None, Some(r)) => reference_iterate(a.solver, prob, r),
        (None, None) => {
            return Err(
                "no reference point: pass --reference or add a reference block to the problem"
                    .into(),
            )
        }
    };
    let (_, r_norm) = residual_r(&tb, &bar).map_err(|e| format!("reference point: {e}"))?;
    if r_norm > REFERENCE_TOL * (1.0 + bar.stacked().norm()) {
        return Err(format!(
            "reference point is not a KKT point (residual {r_norm:e})"
        ));
    }

    let diag = Diagnostics::new(&tb, &gcfg).map_err(|e| e.to_string())?;
    let summary = summarize(
        &diag,
        &ledger.states(),
        &bar,
        TOL_RESIDUAL_BOUND,
        TOL_DESCENT,
    )
    .map_err(|e| e.to_string())?;
    out!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    if !summary.asserted {
        out!(
            "tau = {} is outside the guaranteed range; violations are reported only",
            ledger.tau
        );
    }
    Ok(if summary.violated() {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    })
}

/// Replaces the computed verdicts by a set that disagrees inside the subspace regime.
fn force_inconsistent(
    cert: &spadmm::vananalysis::CertifiedKKT,
    r: &ConsistencyReport,
) -> ConsistencyReport {
    let mut sosc_primal = r.sosc_primal.clone();
    let mut srcq_primal = r.srcq_primal.clone();
    let mut dd = r.dd_system.clone();
    sosc_primal.status = VerdictStatus::Holds;
    srcq_primal.status = VerdictStatus::Holds;
    dd.status = VerdictStatus::Fails;
    let mut forced = ConsistencyReport::from_verdicts(
        cert,
        sosc_primal,
        r.sosc_dual.clone(),
        srcq_primal,
        r.srcq_dual.clone(),
        dd,
    );
    forced.subspace_regime = true;
    forced
}

pub fn analyze(a: &AnalyzeArgs) -> CmdResult {
    let file = load_problem(&a.problem)?;
    let cert = certify_kkt(&file.prob, a.tol).map_err(|e| e.to_string())?;
    let mut report = consistency_report(&cert).map_err(|e| e.to_string())?;
    if a.test_force_inconsistent {
        report = force_inconsistent(&cert, &report);
    }
    let json = report.to_json();
    fs::create_dir_all(&a.out_dir).map_err(ctx(&a.out_dir))?;
    write_file(
        &a.out_dir
            .join(format!("{}.analysis.json", stem(&a.problem))),
        json.as_bytes(),
    )?;
    out!("{json}");
    if report.contradiction() {
        eprintln!(
            "determined verdicts disagree: {}",
            report.disagreements.join(", ")
        );
        return Ok(EXIT_CONTRADICTION);
    }
    Ok(EXIT_OK)
}

pub fn generate(a: &GenerateArgs) -> CmdResult {
    let mut spec = match a.family {
        FamilyArg::Qp => GenSpec::convex_qp(a.size, a.m, a.seed),
        FamilyArg::Qsdp => GenSpec::qsdp(a.size, a.m, a.seed),
    };
    if let Some(r) = a.rank {
        spec = spec.rank(r);
    }
    if a.strict {
        spec = spec.strict();
    }
    if a.degenerate {
        spec = spec.degenerate();
    }
    let g = gen_instance(&spec).map_err(|e| e.to_string())?;
    let text = write_problem(&ProblemFile {
        prob: g.prob,
        reference: Some(g.reference),
    });
    match &a.output {
        Some(p) => write_file(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}
