//! Text formats: the line-oriented PQP problem file, path output (exact and
//! sampled CSV), and the SVM / conjoint CSV inputs.
//!
//! ```text
//! pqp 1
//! name scalar            # optional
//! n 1  m 0
//! mu -2 2
//! Q
//! 1
//! c0 0
//! c1 1
//! b0
//! b1
//! ```
//!
//! An `A` section with `m` rows follows `Q` when `m > 0`. Numbers are
//! integers, finite decimals or `p/q` fractions and are read exactly.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use num_traits::Zero;
use thiserror::Error;

use crate::builders::{ChoiceObservation, ConjointDesign};
use crate::matrix::Matrix;
use crate::path::{PathPiece, PathStats, PathValue, SolutionPath};
use crate::problem::{Objective, ParametricQP, ProblemError};
use crate::rational::{fmt_rat, fmt_vec, parse_rat, to_decimal, AffineScalar, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self { line, column, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemFile {
    pub name: Option<String>,
    pub comments: Vec<String>,
    pub qp: ParametricQP,
}

impl ProblemFile {
    pub fn new(qp: ParametricQP) -> Self {
        Self { name: None, comments: Vec::new(), qp }
    }
}

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

#[derive(Debug, Clone)]
struct Line<'a> {
    number: usize,
    tokens: Vec<Token<'a>>,
    /// Raw text after the keyword, for `name`.
    rest: &'a str,
}

fn tokenize(number: usize, content: &str) -> Line<'_> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in content.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(Token { text: &content[s..i], column: content[..s].chars().count() + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token { text: &content[s..], column: content[..s].chars().count() + 1 });
    }
    let rest = tokens.first().map(|t| content[content.find(t.text).unwrap_or(0) + t.text.len()..].trim()).unwrap_or("");
    Line { number, tokens, rest }
}

fn rat_at(line: &Line<'_>, tok: &Token<'_>) -> Result<Rat, ParseError> {
    parse_rat(tok.text).map_err(|e| ParseError::new(line.number, tok.column, e.to_string()))
}

fn usize_at(line: &Line<'_>, tok: &Token<'_>) -> Result<usize, ParseError> {
    tok.text
        .parse()
        .map_err(|_| ParseError::new(line.number, tok.column, format!("expected a count, found `{}`", tok.text)))
}

fn rationals(line: &Line<'_>, from: usize, expected: usize, what: &str) -> Result<Vec<Rat>, ParseError> {
    let toks = &line.tokens[from..];
    if toks.len() != expected {
        let column = toks.get(expected).or(toks.last()).map_or(1, |t| t.column);
        return Err(ParseError::new(
            line.number,
            column,
            format!("{what} has {} entries, expected {expected}", toks.len()),
        ));
    }
    toks.iter().map(|t| rat_at(line, t)).collect()
}

const KEYWORDS: &[&str] = &["pqp", "name", "n", "mu", "Q", "A", "c0", "c1", "b0", "b1"];

/// Parses a PQP file.
pub fn parse_problem(text: &str) -> Result<ProblemFile, ParseError> {
    let mut comments = Vec::new();
    let mut lines = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        last_line = i + 1;
        let (content, comment) = match raw.find('#') {
            Some(pos) => (&raw[..pos], Some(&raw[pos + 1..])),
            None => (raw, None),
        };
        let line = tokenize(i + 1, content);
        if line.tokens.is_empty() {
            if let Some(c) = comment {
                comments.push(c.strip_prefix(' ').unwrap_or(c).trim_end().to_string());
            }
            continue;
        }
        lines.push(line);
    }
    let eof = last_line + 1;

    let mut it = lines.into_iter().peekable();
    let header = it.next().ok_or_else(|| ParseError::new(eof, 1, "empty file; expected `pqp 1`"))?;
    if header.tokens[0].text != "pqp" || header.tokens.len() != 2 || header.tokens[1].text != "1" {
        return Err(ParseError::new(header.number, 1, "expected header `pqp 1`"));
    }

    let mut name = None;
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut mu: Option<(Rat, Rat)> = None;
    let mut blocks: HashMap<&'static str, (usize, Vec<Vec<Rat>>)> = HashMap::new();
    let mut vectors: HashMap<&'static str, (usize, Vec<Rat>)> = HashMap::new();

    while let Some(line) = it.next() {
        let kw = line.tokens[0].text;
        let Some(&key) = KEYWORDS.iter().find(|&&k| k == kw) else {
            return Err(ParseError::new(line.number, line.tokens[0].column, format!("unexpected `{kw}`")));
        };
        let repeated = match key {
            "name" => name.is_some(),
            "n" => dims.is_some(),
            "mu" => mu.is_some(),
            "Q" | "A" => blocks.contains_key(key),
            "pqp" => true,
            _ => vectors.contains_key(key),
        };
        if repeated {
            return Err(ParseError::new(line.number, 1, format!("duplicate `{key}` section")));
        }
        match key {
            "name" => name = Some(line.rest.to_string()),
            "n" => {
                let t = &line.tokens;
                if t.len() != 4 || t[2].text != "m" {
                    return Err(ParseError::new(line.number, 1, "expected `n <n> m <m>`"));
                }
                dims = Some((usize_at(&line, &t[1])?, usize_at(&line, &t[3])?, line.number));
            }
            "mu" => {
                let v = rationals(&line, 1, 2, "mu")?;
                mu = Some((v[0].clone(), v[1].clone()));
            }
            "Q" | "A" => {
                let (n, m, _) =
                    dims.ok_or_else(|| ParseError::new(line.number, 1, format!("`{key}` before `n … m …`")))?;
                if line.tokens.len() != 1 {
                    return Err(ParseError::new(
                        line.number,
                        line.tokens[1].column,
                        format!("`{key}` takes its rows on the following lines"),
                    ));
                }
                let rows = if key == "Q" { n } else { m };
                let mut data = Vec::with_capacity(rows);
                for r in 0..rows {
                    let row = match it.peek() {
                        Some(l) if !KEYWORDS.contains(&l.tokens[0].text) => it.next().expect("peeked"),
                        Some(l) => {
                            return Err(ParseError::new(l.number, 1, format!("{key} has {r} rows, expected {rows}")))
                        }
                        None => return Err(ParseError::new(eof, 1, format!("{key} has {r} rows, expected {rows}"))),
                    };
                    data.push(rationals(&row, 0, n, &format!("{key} row {}", r + 1))?);
                }
                blocks.insert(key, (line.number, data));
            }
            _ => {
                let (n, m, _) =
                    dims.ok_or_else(|| ParseError::new(line.number, 1, format!("`{key}` before `n … m …`")))?;
                let len = if key.starts_with('c') { n } else { m };
                vectors.insert(key, (line.number, rationals(&line, 1, len, key)?));
            }
        }
    }

    let (n, m, dims_line) = dims.ok_or_else(|| ParseError::new(eof, 1, "missing section `n … m …`"))?;
    let (mu_min, mu_max) = mu.ok_or_else(|| ParseError::new(eof, 1, "missing section `mu`"))?;
    let missing = |s: &str| ParseError::new(eof, 1, format!("missing section `{s}`"));
    let (q_line, q_rows) = blocks.remove("Q").ok_or_else(|| missing("Q"))?;
    let a_rows = match blocks.remove("A") {
        Some((_, rows)) => rows,
        None if m == 0 => Vec::new(),
        None => return Err(missing("A")),
    };
    let mut vec_of = |key: &'static str, len: usize| -> Result<Vec<Rat>, ParseError> {
        match vectors.remove(key) {
            Some((_, v)) => Ok(v),
            None if len == 0 => Ok(Vec::new()),
            None => Err(missing(key)),
        }
    };
    let (c0, c1, b0, b1) = (vec_of("c0", n)?, vec_of("c1", n)?, vec_of("b0", m)?, vec_of("b1", m)?);
    let affine = |a: Vec<Rat>, b: Vec<Rat>| -> Vec<AffineScalar> {
        a.into_iter().zip(b).map(|(c, s)| AffineScalar::new(c, s)).collect()
    };
    let qp = ParametricQP::new(
        Matrix::from_rows(n, q_rows),
        Matrix::from_rows(n, a_rows),
        affine(c0, c1),
        affine(b0, b1),
        mu_min,
        mu_max,
    )
    .map_err(|e| {
        let line = match e {
            ProblemError::NotSymmetric | ProblemError::NotSquare { .. } => q_line,
            _ => dims_line,
        };
        ParseError::new(line, 1, e.to_string())
    })?;
    Ok(ProblemFile { name, comments, qp })
}

fn join(v: &[Rat]) -> String {
    v.iter().map(fmt_rat).collect::<Vec<_>>().join(" ")
}

fn keyed(out: &mut String, key: &str, v: &[Rat]) {
    if v.is_empty() {
        let _ = writeln!(out, "{key}");
    } else {
        let _ = writeln!(out, "{key} {}", join(v));
    }
}

/// Renders a PQP file; `parse_problem(&write_problem(p)) == p`.
pub fn write_problem(file: &ProblemFile) -> String {
    let qp = &file.qp;
    let mut out = String::from("pqp 1\n");
    if let Some(name) = &file.name {
        let _ = writeln!(out, "name {name}");
    }
    for c in &file.comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "n {}  m {}", qp.n(), qp.m());
    let _ = writeln!(out, "mu {} {}", fmt_rat(qp.mu_min()), fmt_rat(qp.mu_max()));
    out.push_str("Q\n");
    for i in 0..qp.n() {
        let _ = writeln!(out, "{}", join(qp.q().row(i)));
    }
    if qp.m() > 0 {
        out.push_str("A\n");
        for i in 0..qp.m() {
            let _ = writeln!(out, "{}", join(qp.a().row(i)));
        }
    }
    let parts = |v: &[AffineScalar]| -> (Vec<Rat>, Vec<Rat>) {
        v.iter().map(|a| (a.constant.clone(), a.slope.clone())).unzip()
    };
    let (c0, c1) = parts(qp.c());
    let (b0, b1) = parts(qp.b());
    keyed(&mut out, "c0", &c0);
    keyed(&mut out, "c1", &c1);
    keyed(&mut out, "b0", &b0);
    keyed(&mut out, "b1", &b1);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputMode {
    Exact,
    Sampled { step: Rat, precision: u32 },
}

pub const DEFAULT_PRECISION: u32 = 12;

/// Exact listing, one line per piece:
///
/// ```text
/// segment <mu_lo> <mu_hi> x0=<...> x1=<...>
/// jump <mu> from=<...> to=<...> # objective=<value>
/// infeasible <mu_lo> <mu_hi>
/// ```
pub fn write_path_exact(path: &SolutionPath, objective: &Objective) -> String {
    let mut out = String::new();
    for piece in &path.pieces {
        let _ = match piece {
            PathPiece::Segment(s) => writeln!(
                out,
                "segment {} {} x0={} x1={}",
                fmt_rat(&s.mu_lo),
                fmt_rat(&s.mu_hi),
                fmt_vec(&s.x0),
                fmt_vec(&s.x1)
            ),
            PathPiece::Jump(j) => {
                let from = objective.value(&j.mu, &j.x_from);
                let to = objective.value(&j.mu, &j.x_to);
                let obj = if from == to {
                    format!("objective={}", fmt_rat(&from))
                } else {
                    format!("objective_from={} objective_to={}", fmt_rat(&from), fmt_rat(&to))
                };
                writeln!(out, "jump {} from={} to={} # {obj}", fmt_rat(&j.mu), fmt_vec(&j.x_from), fmt_vec(&j.x_to))
            }
            PathPiece::Infeasible(i) => writeln!(out, "infeasible {} {}", fmt_rat(&i.mu_lo), fmt_rat(&i.mu_hi)),
        };
    }
    out
}

/// CSV `mu,x1,…,xn,objective` at `μ_min + i·step`. Rows in infeasible
/// stretches leave `x` empty and print `infeasible` as objective.
pub fn write_path_sampled(path: &SolutionPath, objective: &Objective, step: &Rat, precision: u32) -> String {
    assert!(step > &Rat::zero(), "sample step must be positive");
    let mut out = String::from("mu");
    for i in 1..=path.n {
        let _ = write!(out, ",x{i}");
    }
    out.push_str(",objective\n");
    let mut mu = path.mu_min.clone();
    while mu <= path.mu_max {
        let _ = write!(out, "{}", to_decimal(&mu, precision));
        match path.eval(&mu) {
            Ok(PathValue::Feasible(x)) => {
                for v in &x {
                    let _ = write!(out, ",{}", to_decimal(v, precision));
                }
                let _ = writeln!(out, ",{}", to_decimal(&objective.value(&mu, &x), precision));
            }
            _ => {
                out.push_str(&",".repeat(path.n));
                out.push_str(",infeasible\n");
            }
        }
        mu += step;
    }
    out
}

pub fn write_path(path: &SolutionPath, objective: &Objective, mode: &OutputMode) -> String {
    match mode {
        OutputMode::Exact => write_path_exact(path, objective),
        OutputMode::Sampled { step, precision } => write_path_sampled(path, objective, step, *precision),
    }
}

/// Pivot counts as `(cold,bend₁,bend₂,…)`.
pub fn format_stats(stats: &PathStats) -> String {
    let mut parts = vec![stats.cold_pivots.to_string()];
    parts.extend(stats.bends.iter().map(|b| b.pivots.to_string()));
    format!("({})", parts.join(","))
}

pub struct StatsReport<'a>(pub &'a PathStats);

impl fmt::Display for StatsReport<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0;
        writeln!(f, "pivots {}", format_stats(s))?;
        writeln!(f, "bends {}", s.bends.len())?;
        writeln!(f, "cold_start_pivots {}", s.cold_pivots)?;
        write!(f, "total_pivots {}", s.total_pivots())
    }
}

fn csv_error(e: csv::Error) -> ParseError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    ParseError::new(line, 1, e.to_string())
}

/// SVM training points: one point per row, label (`1` or `-1`) last.
pub fn read_svm_points(text: &str) -> Result<(Vec<Vec<Rat>>, Vec<i64>), ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() < 2 {
            return Err(ParseError::new(line, 1, "expected at least one feature and a label"));
        }
        if *width.get_or_insert(record.len()) != record.len() {
            return Err(ParseError::new(
                line,
                1,
                format!("expected {} columns, found {}", width.unwrap(), record.len()),
            ));
        }
        let mut row = Vec::with_capacity(record.len() - 1);
        for (col, field) in record.iter().enumerate().take(record.len() - 1) {
            row.push(parse_rat(field).map_err(|e| ParseError::new(line, col + 1, e.to_string()))?);
        }
        let label_field = &record[record.len() - 1];
        let label = label_field.parse::<i64>().ok().filter(|l| *l == 1 || *l == -1).ok_or_else(|| {
            ParseError::new(line, record.len(), format!("label must be 1 or -1, found `{label_field}`"))
        })?;
        points.push(row);
        labels.push(label);
    }
    Ok((points, labels))
}

fn levels_of(field: &str, line: usize, column: usize) -> Result<Vec<usize>, ParseError> {
    field
        .split(',')
        .map(|t| {
            let t = t.trim();
            match t.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(ParseError::new(line, column, format!("level indices are 1-based integers, found `{t}`"))),
            }
        })
        .collect()
}

/// Conjoint choices, one per row as `winner_levels;loser_levels` with
/// comma-separated 1-based level indices.
pub fn read_cbc_choices(text: &str, design: &ConjointDesign) -> Result<Vec<ChoiceObservation>, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(b';')
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != 2 {
            return Err(ParseError::new(line, 1, "expected `winner_levels;loser_levels`"));
        }
        let winner = levels_of(&record[0], line, 1)?;
        let loser = levels_of(&record[1], line, record[0].len() + 2)?;
        for option in [&winner, &loser] {
            if option.len() != design.attributes() {
                return Err(ParseError::new(
                    line,
                    1,
                    format!("expected {} levels per option, found {}", design.attributes(), option.len()),
                ));
            }
            for (a, &l) in option.iter().enumerate() {
                if l >= design.level_counts()[a] {
                    return Err(ParseError::new(
                        line,
                        1,
                        format!("level {} of attribute {} is out of range", l + 1, a + 1),
                    ));
                }
            }
        }
        out.push(ChoiceObservation::new(winner, loser));
    }
    Ok(out)
}
