//! Text problem files, solution files and solver configuration files.
//!
//! A problem file is line oriented. Blank lines and lines starting with `#`
//! are ignored; every other line starts with a keyword:
//!
//! ```text
//! spadmm-problem 1
//! # symmetric matrices use svec: upper triangle column by column, off-diagonals times sqrt(2)
//! space psd 2            (or: space vector n | space sym p)
//! Q dense                (or: Q zero | Q identity 2.5)
//! 1 0 0
//! 0 1 0
//! 0 0 1
//! c 1 0 1
//! A 1
//! 1 0 1
//! b 1
//! lower -inf -inf -inf
//! upper inf inf inf
//! phi box                (or: phi l1 w1 w2 ...)
//! reference              (optional, followed by x u s y z v w lines)
//! end
//! ```
//!
//! Floats are written with their shortest round-trip representation, so
//! [`write_problem`] followed by [`parse_problem`] reproduces the data exactly.

use crate::error::{Error, Result};
use crate::model::{ConeKind, ConicQP, KKTPoint, Phi, SpaceSpec};
use crate::polyset::BoxSet;
use crate::solver::{HistoryMode, SPADMMConfig, SemiProx};
use crate::{Matrix, Vector};
use serde::Deserialize;
use std::fmt::Write as _;

pub const PROBLEM_MAGIC: &str = "spadmm-problem";
pub const SOLUTION_MAGIC: &str = "spadmm-solution";
pub const FORMAT_VERSION: u32 = 1;

const SVEC_NOTE: &str = "# symmetric matrices use svec: upper triangle column by column, \
                         off-diagonal entries scaled by sqrt(2)";

/// A problem together with an optional reference KKT point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub prob: ConicQP,
    pub reference: Option<KKTPoint>,
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| perr(line, format!("`{tok}` is not a number")))
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse::<usize>()
        .map_err(|_| perr(line, format!("{what} `{tok}` is not a nonnegative integer")))
}

fn numbers<'a>(toks: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<f64>> {
    toks.map(|t| parse_f64(t, line)).collect()
}

fn expect_len(v: &[f64], n: usize, line: usize, what: &str) -> Result<()> {
    if v.len() == n {
        Ok(())
    } else {
        Err(perr(
            line,
            format!("{what} has {} entries, expected {n}", v.len()),
        ))
    }
}

/// Non-comment lines with their 1-based line numbers.
struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Self {
            inner: it.peekable(),
            last: 0,
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => Err(perr(
                self.last + 1,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    fn peek_keyword(&mut self) -> Option<&'a str> {
        self.inner
            .peek()
            .and_then(|(_, l)| l.split_whitespace().next())
    }

    /// The next line, which must start with `key`; returns the remaining tokens.
    fn keyed(&mut self, key: &str) -> Result<(usize, std::str::SplitWhitespace<'a>)> {
        let (n, l) = self.next(&format!("`{key}`"))?;
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some(k) if k == key => Ok((n, toks)),
            Some(k) => Err(perr(n, format!("expected `{key}`, found `{k}`"))),
            None => Err(perr(n, format!("expected `{key}`"))),
        }
    }

    fn keyed_vector(&mut self, key: &str, len: usize) -> Result<(usize, Vec<f64>)> {
        let (n, toks) = self.keyed(key)?;
        let v = numbers(toks, n)?;
        expect_len(&v, len, n, key)?;
        Ok((n, v))
    }

    fn rows(&mut self, count: usize, len: usize, what: &str) -> Result<Matrix> {
        let mut m = Matrix::zeros(count, len);
        for i in 0..count {
            let (n, l) = self.next(&format!("row {} of {what}", i + 1))?;
            let v = numbers(l.split_whitespace(), n)?;
            expect_len(&v, len, n, &format!("row {} of {what}", i + 1))?;
            for (j, x) in v.into_iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        Ok(m)
    }
}

fn header(lines: &mut Lines<'_>, magic: &str) -> Result<()> {
    let (n, mut toks) = lines.keyed(magic)?;
    let v = parse_usize(toks.next(), n, "format version")?;
    if v != FORMAT_VERSION as usize {
        return Err(perr(n, format!("unsupported format version {v}")));
    }
    Ok(())
}

/// Parses and validates a problem file.
pub fn parse_problem(text: &str) -> Result<ProblemFile> {
    let mut lines = Lines::new(text);
    header(&mut lines, PROBLEM_MAGIC)?;

    let (n, mut toks) = lines.keyed("space")?;
    let kind = toks.next().ok_or_else(|| perr(n, "missing space kind"))?;
    let size = parse_usize(toks.next(), n, "space size")?;
    let (space, cone) = match kind {
        "vector" => (SpaceSpec::Vector(size), ConeKind::None),
        "psd" => (SpaceSpec::Sym(size), ConeKind::Psd),
        "sym" => (SpaceSpec::Sym(size), ConeKind::None),
        other => return Err(perr(n, format!("unknown space kind `{other}`"))),
    };
    let d = space.dim();

    let (n, mut toks) = lines.keyed("Q")?;
    let q = match toks.next() {
        Some("zero") => Matrix::zeros(d, d),
        Some("identity") => {
            let s = toks
                .next()
                .ok_or_else(|| perr(n, "missing identity scale"))?;
            Matrix::identity(d, d) * parse_f64(s, n)?
        }
        Some("dense") => lines.rows(d, d, "Q")?,
        Some(other) => return Err(perr(n, format!("unknown Q form `{other}`"))),
        None => return Err(perr(n, "missing Q form")),
    };

    let (_, c) = lines.keyed_vector("c", d)?;
    let (n, mut toks) = lines.keyed("A")?;
    let m = parse_usize(toks.next(), n, "row count of A")?;
    let a = lines.rows(m, d, "A")?;
    let (_, b) = lines.keyed_vector("b", m)?;
    let (_, lower) = lines.keyed_vector("lower", d)?;
    let (n_box, upper) = lines.keyed_vector("upper", d)?;
    let pset = BoxSet::new(lower, upper).map_err(|e| perr(n_box, e.to_string()))?;

    let (n_phi, mut toks) = lines.keyed("phi")?;
    let phi = match toks.next() {
        Some("box") => Phi::BoxIndicator,
        Some("l1") => {
            let w = numbers(toks, n_phi)?;
            expect_len(&w, d, n_phi, "l1 weights")?;
            Phi::WeightedL1(Vector::from_vec(w))
        }
        Some(other) => return Err(perr(n_phi, format!("unknown phi form `{other}`"))),
        None => return Err(perr(n_phi, "missing phi form")),
    };

    let prob = ConicQP::new(
        space,
        q,
        Vector::from_vec(c),
        a,
        Vector::from_vec(b),
        cone,
        pset,
        phi,
    )
    .map_err(|e| perr(n_phi, e.to_string()))?;

    let reference = if lines.peek_keyword() == Some("reference") {
        lines.next("reference")?;
        let mut get = |k: &str, len: usize| -> Result<Vector> {
            Ok(Vector::from_vec(lines.keyed_vector(k, len)?.1))
        };
        Some(KKTPoint {
            x: get("x", d)?,
            u: get("u", d)?,
            s: get("s", d)?,
            y: get("y", m)?,
            z: get("z", d)?,
            v: get("v", d)?,
            w: get("w", d)?,
        })
    } else {
        None
    };
    lines.keyed("end")?;
    if let Ok((n, l)) = lines.next("nothing") {
        return Err(perr(n, format!("trailing content `{l}` after `end`")));
    }
    Ok(ProblemFile { prob, reference })
}

fn push_vector(out: &mut String, key: &str, v: impl IntoIterator<Item = f64>) {
    out.push_str(key);
    for x in v {
        let _ = write!(out, " {x}");
    }
    out.push('\n');
}

fn push_rows(out: &mut String, m: &Matrix) {
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

/// Renders a problem file. The output is a deterministic function of the data.
pub fn write_problem(file: &ProblemFile) -> String {
    let p = &file.prob;
    let d = p.dim();
    let mut out = String::new();
    let _ = writeln!(out, "{PROBLEM_MAGIC} {FORMAT_VERSION}");
    out.push_str(SVEC_NOTE);
    out.push('\n');
    match (p.space, p.cone) {
        (SpaceSpec::Vector(n), _) => {
            let _ = writeln!(out, "space vector {n}");
        }
        (SpaceSpec::Sym(s), ConeKind::Psd) => {
            let _ = writeln!(out, "space psd {s}");
        }
        (SpaceSpec::Sym(s), ConeKind::None) => {
            let _ = writeln!(out, "space sym {s}");
        }
    }
    let diag = p.q.diagonal();
    let is_diag = (0..d).all(|i| (0..d).all(|j| i == j || p.q[(i, j)] == 0.0));
    if p.q.iter().all(|&x| x == 0.0) {
        out.push_str("Q zero\n");
    } else if d > 0 && is_diag && diag.iter().all(|&x| x == diag[0]) {
        let _ = writeln!(out, "Q identity {}", diag[0]);
    } else {
        out.push_str("Q dense\n");
        push_rows(&mut out, &p.q);
    }
    push_vector(&mut out, "c", p.c.iter().copied());
    let _ = writeln!(out, "A {}", p.a.nrows());
    push_rows(&mut out, &p.a);
    push_vector(&mut out, "b", p.b.iter().copied());
    push_vector(&mut out, "lower", p.pset.lower().iter().copied());
    push_vector(&mut out, "upper", p.pset.upper().iter().copied());
    match &p.phi {
        Phi::BoxIndicator => out.push_str("phi box\n"),
        Phi::WeightedL1(w) => push_vector(&mut out, "phi l1", w.iter().copied()),
    }
    if let Some(r) = &file.reference {
        out.push_str("reference\n");
        for (k, v) in [
            ("x", &r.x),
            ("u", &r.u),
            ("s", &r.s),
            ("y", &r.y),
            ("z", &r.z),
            ("v", &r.v),
            ("w", &r.w),
        ] {
            push_vector(&mut out, k, v.iter().copied());
        }
    }
    out.push_str("end\n");
    out
}

/// The result of a solver run as written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub solver: String,
    pub status: String,
    pub iterations: usize,
    pub residual: f64,
    pub objective: f64,
    /// Named iterate blocks in output order.
    pub blocks: Vec<(String, Vector)>,
}

impl SolutionFile {
    pub fn block(&self, name: &str) -> Option<&Vector> {
        self.blocks.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{SOLUTION_MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(out, "solver {}", self.solver);
        let _ = writeln!(out, "status {}", self.status);
        let _ = writeln!(out, "iterations {}", self.iterations);
        let _ = writeln!(out, "residual {}", self.residual);
        let _ = writeln!(out, "objective {}", self.objective);
        for (k, v) in &self.blocks {
            push_vector(&mut out, &format!("block {k}"), v.iter().copied());
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        header(&mut lines, SOLUTION_MAGIC)?;
        let mut word = |key: &str| -> Result<(usize, String)> {
            let (n, toks) = lines.keyed(key)?;
            let rest: Vec<&str> = toks.collect();
            if rest.len() != 1 {
                return Err(perr(n, format!("`{key}` takes one value")));
            }
            Ok((n, rest[0].to_string()))
        };
        let solver = word("solver")?.1;
        let status = word("status")?.1;
        let (n, it) = word("iterations")?;
        let iterations = parse_usize(Some(&it), n, "iteration count")?;
        let (n, r) = word("residual")?;
        let residual = parse_f64(&r, n)?;
        let (n, o) = word("objective")?;
        let objective = parse_f64(&o, n)?;
        let mut blocks = Vec::new();
        loop {
            let (n, l) = lines.next("`block` or `end`")?;
            let mut toks = l.split_whitespace();
            match toks.next() {
                Some("end") => break,
                Some("block") => {
                    let name = toks.next().ok_or_else(|| perr(n, "missing block name"))?;
                    blocks.push((name.to_string(), Vector::from_vec(numbers(toks, n)?)));
                }
                Some(k) => return Err(perr(n, format!("unexpected keyword `{k}`"))),
                None => unreachable!("blank lines are skipped"),
            }
        }
        Ok(Self {
            solver,
            status,
            iterations,
            residual,
            objective,
            blocks,
        })
    }
}

/// `none`, `full`, `stride:K` or `strided(K)`.
pub fn parse_history(s: &str) -> Result<HistoryMode> {
    let s = s.trim();
    let stride = s
        .strip_prefix("stride:")
        .or_else(|| s.strip_prefix("strided(").and_then(|r| r.strip_suffix(')')));
    match (s, stride) {
        ("none", _) => Ok(HistoryMode::None),
        ("full", _) => Ok(HistoryMode::Full),
        (_, Some(k)) => match k.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(HistoryMode::Stride(k)),
            _ => Err(Error::Config(format!("invalid history stride in `{s}`"))),
        },
        _ => Err(Error::Config(format!("unknown history mode `{s}`"))),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    sigma: Option<f64>,
    tau: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    #[serde(rename = "S_rule")]
    s_rule: Option<String>,
    #[serde(rename = "T_rule")]
    t_rule: Option<String>,
    #[serde(rename = "S1_rule")]
    s1_rule: Option<String>,
    #[serde(rename = "S2_rule")]
    s2_rule: Option<String>,
    #[serde(rename = "S_matrix")]
    s_matrix: Option<Vec<Vec<f64>>>,
    #[serde(rename = "T_matrix")]
    t_matrix: Option<Vec<Vec<f64>>>,
    #[serde(rename = "S1_matrix")]
    s1_matrix: Option<Vec<Vec<f64>>>,
    #[serde(rename = "S2_matrix")]
    s2_matrix: Option<Vec<Vec<f64>>>,
    history: Option<String>,
    allow_tau_out_of_range: Option<bool>,
}

fn semi_prox(key: &str, rule: &str, matrix: Option<Vec<Vec<f64>>>) -> Result<SemiProx> {
    match rule {
        "auto" => Ok(SemiProx::Auto),
        "zero" => Ok(SemiProx::Zero),
        "majorize" => Ok(SemiProx::Majorize),
        "explicit" => {
            let rows = matrix.ok_or_else(|| {
                Error::Config(format!(
                    "{key} = \"explicit\" needs a {} key",
                    key.replace("_rule", "_matrix")
                ))
            })?;
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(Error::Config(format!(
                    "explicit matrix for {key} is not square"
                )));
            }
            Ok(SemiProx::Explicit(Matrix::from_fn(n, n, |i, j| rows[i][j])))
        }
        other => Err(Error::Config(format!("unknown {key} `{other}`"))),
    }
}

/// Parses a TOML configuration on top of the defaults and validates it.
pub fn parse_config(text: &str) -> Result<SPADMMConfig> {
    let cfg = parse_config_onto(text, SPADMMConfig::default())?;
    cfg.validate()?;
    Ok(cfg)
}

/// Applies the keys present in `text` to `base` without validating.
pub fn parse_config_onto(text: &str, base: SPADMMConfig) -> Result<SPADMMConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut cfg = base;
    if let Some(v) = raw.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = raw.tau {
        cfg.tau = v;
    }
    if let Some(v) = raw.tol {
        cfg.tol_rel = v;
    }
    if let Some(v) = raw.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = raw.allow_tau_out_of_range {
        cfg.allow_tau_out_of_range = v;
    }
    if let Some(h) = raw.history {
        cfg.history = parse_history(&h)?;
    }
    for (key, rule, mat, slot) in [
        ("S_rule", raw.s_rule, raw.s_matrix, &mut cfg.s_rule),
        ("T_rule", raw.t_rule, raw.t_matrix, &mut cfg.t_rule),
        ("S1_rule", raw.s1_rule, raw.s1_matrix, &mut cfg.s1_rule),
        ("S2_rule", raw.s2_rule, raw.s2_matrix, &mut cfg.s2_rule),
    ] {
        if let Some(r) = rule {
            *slot = semi_prox(key, &r, mat)?;
        } else if mat.is_some() {
            return Err(Error::Config(format!(
                "matrix given without {key} = \"explicit\""
            )));
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ProblemFile {
        let q = Matrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.1]);
        let prob = ConicQP::new(
            SpaceSpec::Sym(2),
            q,
            Vector::from_vec(vec![0.1, -1.0 / 3.0, 1e-17]),
            Matrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]),
            Vector::from_vec(vec![1.0]),
            ConeKind::Psd,
            BoxSet::new(
                vec![f64::NEG_INFINITY, -1.0, 0.0],
                vec![f64::INFINITY, 2.5, 7.0],
            )
            .unwrap(),
            Phi::BoxIndicator,
        )
        .unwrap();
        ProblemFile {
            prob,
            reference: None,
        }
    }

    #[test]
    fn problem_round_trip_is_exact() {
        let f = sample();
        let text = write_problem(&f);
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("# symmetric matrices use svec"));
        let g = parse_problem(&text).unwrap();
        assert_eq!(f, g);
        assert_eq!(text, write_problem(&g));
    }

    #[test]
    fn reference_block_round_trips() {
        let mut f = sample();
        let v = |k: f64| Vector::from_vec(vec![k, 2.0 * k, std::f64::consts::PI]);
        f.reference = Some(KKTPoint {
            x: v(1.0),
            u: v(2.0),
            s: v(3.0),
            y: Vector::from_vec(vec![0.7]),
            z: v(-1.0),
            v: v(1.0),
            w: v(0.0),
        });
        assert_eq!(parse_problem(&write_problem(&f)).unwrap(), f);
    }

    #[test]
    fn compact_q_forms() {
        let mut f = sample();
        f.prob.q = Matrix::identity(3, 3) * 2.5;
        let text = write_problem(&f);
        assert!(text.contains("Q identity 2.5\n"));
        assert_eq!(parse_problem(&text).unwrap(), f);
        f.prob.q = Matrix::zeros(3, 3);
        assert!(write_problem(&f).contains("Q zero\n"));
    }

    #[test]
    fn l1_vector_problem() {
        let text = "spadmm-problem 1\nspace vector 2\nQ identity 1\nc 1 -1\nA 0\nb\n\
                    lower -inf -inf\nupper inf inf\nphi l1 0.5 0\nend\n";
        let f = parse_problem(text).unwrap();
        assert_eq!(
            f.prob.phi,
            Phi::WeightedL1(Vector::from_vec(vec![0.5, 0.0]))
        );
        assert_eq!(f.prob.m(), 0);
        assert_eq!(
            write_problem(&f),
            text.replace("space", &format!("{SVEC_NOTE}\nspace"))
        );
    }

    fn parse_line(text: &str) -> usize {
        match parse_problem(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_line() {
        let good = write_problem(&sample());
        let bad = good.replace("c 0.1", "c zero.1");
        let n = bad.lines().position(|l| l.starts_with("c ")).unwrap() + 1;
        assert_eq!(parse_line(&bad), n);

        let short = good.replace("b 1\n", "b 1 2\n");
        let n = short.lines().position(|l| l.starts_with("b ")).unwrap() + 1;
        assert_eq!(parse_line(&short), n);

        assert_eq!(parse_line("spadmm-problem 2\n"), 1);
        assert_eq!(parse_line("# c\n\nspace vector 2\n"), 3);
        let trunc: String = good.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert_eq!(parse_line(&trunc), 5);
        assert_eq!(
            parse_line(&format!("{good}extra\n")),
            good.lines().count() + 1
        );
    }

    #[test]
    fn invalid_data_is_rejected_at_load() {
        let good = write_problem(&sample());
        let bad = good.replace("2 0.5 0", "2 -0.5 0");
        assert!(matches!(parse_problem(&bad), Err(Error::Parse { .. })));
        let bad = good.replace("lower -inf -1 0", "lower -inf 3 0");
        assert!(matches!(parse_problem(&bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn solution_round_trip() {
        let s = SolutionFile {
            solver: "primal".into(),
            status: "converged".into(),
            iterations: 17,
            residual: 3.2e-9,
            objective: -0.125,
            blocks: vec![
                ("x".into(), Vector::from_vec(vec![1.0, 0.1])),
                ("y".into(), Vector::zeros(0)),
            ],
        };
        let t = SolutionFile::parse(&s.render()).unwrap();
        assert_eq!(t, s);
        assert_eq!(t.block("y").unwrap().len(), 0);
    }

    #[test]
    fn config_keys() {
        let cfg = parse_config(
            "sigma = 2.0\ntau = 1.0\ntol = 1e-6\nmax_iter = 50\nS_rule = \"zero\"\n\
             T_rule = \"majorize\"\nS1_rule = \"explicit\"\nS1_matrix = [[1.0, 0.0], [0.0, 2.0]]\n\
             history = \"strided(5)\"\n",
        )
        .unwrap();
        assert_eq!(cfg.sigma, 2.0);
        assert_eq!(cfg.tau, 1.0);
        assert_eq!(cfg.tol_rel, 1e-6);
        assert_eq!(cfg.max_iter, 50);
        assert_eq!(cfg.s_rule, SemiProx::Zero);
        assert_eq!(cfg.t_rule, SemiProx::Majorize);
        assert_eq!(
            cfg.s1_rule,
            SemiProx::Explicit(Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 2.0])))
        );
        assert_eq!(cfg.s2_rule, SemiProx::Auto);
        assert_eq!(cfg.history, HistoryMode::Stride(5));
    }

    #[test]
    fn config_rejections() {
        assert!(parse_config("tau = 1.9\n").is_err());
        assert!(parse_config("tau = 1.9\nallow_tau_out_of_range = true\n").is_ok());
        assert!(parse_config("sigma = 1.0\nrho = 2.0\n").is_err());
        assert!(parse_config("S_rule = \"explicit\"\n").is_err());
        assert!(parse_config("history = \"stride:0\"\n").is_err());
    }

    #[test]
    fn history_forms() {
        assert_eq!(parse_history("none").unwrap(), HistoryMode::None);
        assert_eq!(parse_history("full").unwrap(), HistoryMode::Full);
        assert_eq!(parse_history("stride:3").unwrap(), HistoryMode::Stride(3));
        assert!(parse_history("every").is_err());
    }
}
