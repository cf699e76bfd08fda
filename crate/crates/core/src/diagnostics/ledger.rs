use super::checks::{
    check_descent, check_residual_bound, check_telescoping, theta, theta_delta_nu,
};
use super::Diagnostics;
use crate::error::{Error, Result};
use crate::model::{residual_r, IterateState};
use crate::Vector;
use serde::Serialize;
use std::io::{Read, Write};

/// First line of every ledger file.
pub const LEDGER_HEADER: &str = "# spadmm-ledger v1";

const COLUMNS: [&str; 8] = [
    "k",
    "r_norm",
    "theta",
    "delta_k",
    "nu_k",
    "residual_bound_slack",
    "descent_slack",
    "ratio",
];

/// One iteration of a recorded run. Quantities that need earlier iterates or
/// a reference point are `NaN` where unavailable.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub k: usize,
    pub r_norm: f64,
    pub theta: f64,
    pub delta_k: f64,
    pub nu_k: f64,
    pub residual_bound_slack: f64,
    pub descent_slack: f64,
    pub ratio: f64,
    /// The iterate stacked as `(y, z, x)`.
    pub u: Vec<f64>,
}

/// A per-iteration record of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Ledger {
    pub sigma: f64,
    pub tau: f64,
    pub tau_in_range: bool,
    pub dims: (usize, usize, usize),
    pub rows: Vec<LedgerRow>,
}

/// Worst relative slacks over the consecutive steps of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlackSummary {
    pub steps: usize,
    pub min_residual_bound: f64,
    pub min_descent: f64,
    pub min_telescoping: f64,
    pub residual_bound_violations: usize,
    pub descent_violations: usize,
    pub telescoping_violations: usize,
    /// False when `τ` lies outside the guaranteed range; violations are then reported only.
    pub asserted: bool,
}

impl SlackSummary {
    pub fn violated(&self) -> bool {
        self.asserted
            && self.residual_bound_violations
                + self.descent_violations
                + self.telescoping_violations
                > 0
    }
}

fn consecutive(h: &[IterateState]) -> bool {
    h.windows(2).all(|w| w[1].k == w[0].k + 1)
}

/// Tabulates a recorded history; `u_bar` must be a certified KKT point when given.
pub fn build_ledger(
    d: &Diagnostics,
    history: &[IterateState],
    u_bar: Option<&IterateState>,
) -> Result<Ledger> {
    let full = consecutive(history);
    let mut rows = Vec::with_capacity(history.len());
    let mut prev_v: Option<f64> = None;
    for (i, u) in history.iter().enumerate() {
        let mut row = LedgerRow {
            k: u.k,
            r_norm: residual_r(&d.prob, u)?.1,
            theta: f64::NAN,
            delta_k: f64::NAN,
            nu_k: f64::NAN,
            residual_bound_slack: f64::NAN,
            descent_slack: f64::NAN,
            ratio: f64::NAN,
            u: u.stacked().iter().copied().collect(),
        };
        if let Some(bar) = u_bar {
            row.theta = theta(d, u, bar);
        }
        if full && i >= 1 {
            let pu = &history[i - 1];
            row.residual_bound_slack = check_residual_bound(d, pu, u)?.relative;
            if let Some(bar) = u_bar {
                let t = theta_delta_nu(d, u, pu, bar);
                row.delta_k = t.delta;
                row.nu_k = t.nu;
                let v = d.forms.m.dist_sq(u, bar) + crate::linalg::quad(&d.t, &(&u.z - &pu.z));
                if let Some(p) = prev_v {
                    if p > 0.0 {
                        row.ratio = v / p;
                    }
                }
                prev_v = Some(v);
                if i >= 2 {
                    row.descent_slack = check_descent(d, &history[i - 2], pu, u, bar)?.relative;
                }
            }
        }
        rows.push(row);
    }
    let p = &d.prob;
    Ok(Ledger {
        sigma: d.sigma,
        tau: d.tau,
        tau_in_range: d.tau_in_range,
        dims: (p.y.dim(), p.z.dim(), p.c.len()),
        rows,
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

impl Ledger {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let (ny, nz, nx) = self.dims;
        let io = |e: std::io::Error| Error::Input(format!("writing ledger: {e}"));
        writeln!(w, "{LEDGER_HEADER}").map_err(io)?;
        writeln!(w, "# sigma = {}", self.sigma).map_err(io)?;
        writeln!(w, "# tau = {}", self.tau).map_err(io)?;
        writeln!(w, "# tau_in_range = {}", self.tau_in_range).map_err(io)?;
        writeln!(w, "# dims = {ny} {nz} {nx}").map_err(io)?;
        let mut cw = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::Input(format!("writing ledger: {e}"));
        let mut header: Vec<String> = COLUMNS.iter().map(|s| s.to_string()).collect();
        header.extend((0..ny).map(|i| format!("y{i}")));
        header.extend((0..nz).map(|i| format!("z{i}")));
        header.extend((0..nx).map(|i| format!("x{i}")));
        cw.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.k.to_string()];
            rec.extend(
                [
                    r.r_norm,
                    r.theta,
                    r.delta_k,
                    r.nu_k,
                    r.residual_bound_slack,
                    r.descent_slack,
                    r.ratio,
                ]
                .iter()
                .chain(&r.u)
                .map(|v| v.to_string()),
            );
            cw.write_record(&rec).map_err(csv_err)?;
        }
        cw.flush()
            .map_err(|e| Error::Input(format!("writing ledger: {e}")))?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)
            .map_err(|e| Error::Input(format!("reading ledger: {e}")))?;
        let mut lines = text.lines();
        if lines.next() != Some(LEDGER_HEADER) {
            return Err(parse_err(1, format!("expected `{LEDGER_HEADER}`")));
        }
        let mut meta = |line: usize, key: &str| -> Result<String> {
            let l = lines.next().unwrap_or_default();
            l.strip_prefix("# ")
                .and_then(|rest| rest.strip_prefix(key))
                .and_then(|rest| rest.strip_prefix(" = "))
                .map(str::to_string)
                .ok_or_else(|| parse_err(line, format!("expected `# {key} = …`")))
        };
        let num = |line: usize, s: &str| {
            s.parse::<f64>()
                .map_err(|e| parse_err(line, format!("{e}: `{s}`")))
        };
        let sigma = num(2, &meta(2, "sigma")?)?;
        let tau = num(3, &meta(3, "tau")?)?;
        let tau_in_range = meta(4, "tau_in_range")?
            .parse::<bool>()
            .map_err(|e| parse_err(4, e.to_string()))?;
        let dims_s = meta(5, "dims")?;
        let dims: Vec<usize> = dims_s
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| parse_err(5, e.to_string())))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(parse_err(5, "dims needs three counts"));
        }
        let body: String = lines.collect::<Vec<_>>().join("\n");
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(body.as_bytes());
        let width = COLUMNS.len() + dims.iter().sum::<usize>();
        let hdr = rdr
            .headers()
            .map_err(|e| parse_err(6, e.to_string()))?
            .clone();
        if hdr.len() != width || hdr.iter().zip(COLUMNS).any(|(a, b)| a != b) {
            return Err(parse_err(6, "unexpected column header"));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize + 5);
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize + 5);
            if rec.len() != width {
                return Err(parse_err(
                    line,
                    format!("expected {width} fields, found {}", rec.len()),
                ));
            }
            let k = rec[0]
                .parse::<usize>()
                .map_err(|e| parse_err(line, format!("{e}: `{}`", &rec[0])))?;
            let vals: Vec<f64> = rec
                .iter()
                .skip(1)
                .map(|s| num(line, s))
                .collect::<Result<_>>()?;
            rows.push(LedgerRow {
                k,
                r_norm: vals[0],
                theta: vals[1],
                delta_k: vals[2],
                nu_k: vals[3],
                residual_bound_slack: vals[4],
                descent_slack: vals[5],
                ratio: vals[6],
                u: vals[7..].to_vec(),
            });
        }
        Ok(Self {
            sigma,
            tau,
            tau_in_range,
            dims: (dims[0], dims[1], dims[2]),
            rows,
        })
    }

    /// The recorded iterates.
    pub fn states(&self) -> Vec<IterateState> {
        let (ny, nz, nx) = self.dims;
        self.rows
            .iter()
            .map(|r| IterateState {
                y: Vector::from_column_slice(&r.u[..ny]),
                z: Vector::from_column_slice(&r.u[ny..ny + nz]),
                x: Vector::from_column_slice(&r.u[ny + nz..ny + nz + nx]),
                k: r.k,
            })
            .collect()
    }
}

/// Recomputes the step inequalities over a consecutive history.
pub fn summarize(
    d: &Diagnostics,
    history: &[IterateState],
    u_bar: &IterateState,
    tol_residual_bound: f64,
    tol_descent: f64,
) -> Result<SlackSummary> {
    if !consecutive(history) {
        return Err(Error::Input(
            "slack summary needs consecutive iterates".into(),
        ));
    }
    let mut s = SlackSummary {
        steps: history.len().saturating_sub(1),
        min_residual_bound: f64::INFINITY,
        min_descent: f64::INFINITY,
        min_telescoping: f64::INFINITY,
        residual_bound_violations: 0,
        descent_violations: 0,
        telescoping_violations: 0,
        asserted: d.tau_in_range,
    };
    for i in 1..history.len() {
        let c = check_residual_bound(d, &history[i - 1], &history[i])?;
        s.min_residual_bound = s.min_residual_bound.min(c.relative);
        s.residual_bound_violations += usize::from(!c.passes(tol_residual_bound));
        if i >= 2 {
            let l = check_descent(d, &history[i - 2], &history[i - 1], &history[i], u_bar)?;
            s.min_descent = s.min_descent.min(l.relative);
            s.descent_violations += usize::from(!l.passes(tol_descent));
            let b = check_telescoping(d, &history[i - 2], &history[i - 1], &history[i], u_bar)?;
            s.min_telescoping = s.min_telescoping.min(b.relative);
            s.telescoping_violations += usize::from(!b.passes(tol_descent));
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::super::tests::unit_problem;
    use super::*;
    use crate::solver::{Engine, HistoryMode, SPADMMConfig, SemiProx};

    fn run() -> (Diagnostics, Vec<IterateState>, IterateState) {
        let p = unit_problem();
        let cfg = SPADMMConfig {
            tau: 1.2,
            s_rule: SemiProx::Zero,
            history: HistoryMode::Full,
            max_iter: 25,
            tol_rel: 0.0,
            ..Default::default()
        };
        let r = Engine::new(&p, &cfg)
            .unwrap()
            .run(IterateState::zeros(&p))
            .unwrap();
        let bar = IterateState {
            y: Vector::from_element(1, 1.0),
            z: Vector::from_element(1, 1.0),
            x: Vector::from_element(1, -1.0),
            k: 0,
        };
        (Diagnostics::new(&p, &cfg).unwrap(), r.history, bar)
    }

    #[test]
    fn ledger_write_read_is_lossless() {
        let (d, h, bar) = run();
        let l = build_ledger(&d, &h, Some(&bar)).unwrap();
        let mut buf = Vec::new();
        l.write(&mut buf).unwrap();
        let back = Ledger::read(buf.as_slice()).unwrap();
        assert_eq!(back.rows.len(), l.rows.len());
        assert_eq!(back.states(), h);
        assert!(back.rows[1].theta.to_bits() == l.rows[1].theta.to_bits());
        assert!(back.rows[0].residual_bound_slack.is_nan());
        assert!(l.rows[3].descent_slack >= -1e-8);
    }

    #[test]
    fn corrupted_row_reports_its_line() {
        let (d, h, _) = run();
        let mut buf = Vec::new();
        build_ledger(&d, &h, None).unwrap().write(&mut buf).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replacen("\n3,", "\n3,oops,", 1);
        match Ledger::read(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn summary_of_healthy_run() {
        let (d, h, bar) = run();
        let s = summarize(&d, &h, &bar, 1e-9, 1e-8).unwrap();
        assert!(!s.violated() && s.steps == h.len() - 1);
    }
}
