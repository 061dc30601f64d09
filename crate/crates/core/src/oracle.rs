//! Brute-force reference solver: enumerates every complementary basis of a
//! fixed-μ LCP. Exponential in `k`; meant for checking paths on small
//! instances. Shares no linear algebra with the pivoting code.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::path::{PathPiece, PathValue, SolutionPath};
use crate::problem::{qp_to_lcp_with, ParametricLCP, ParametricQP};
use crate::rational::{fmt_rat, fmt_vec, frac, int, Rat};

pub const MAX_ORACLE_DIM: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("LCP dimension {0} exceeds the enumeration bound {MAX_ORACLE_DIM}")]
    TooLarge(usize),
    #[error(transparent)]
    Problem(#[from] crate::problem::ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleStatus {
    Solved,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub status: OracleStatus,
    pub x: Vec<Rat>,
    pub objective: Rat,
    /// Indices `j` with `w_j` basic in the witnessing solution.
    pub witness_basis: Vec<usize>,
}

/// Gauss-Jordan solve of a dense square system; `None` if singular.
#[allow(clippy::needless_range_loop)]
fn gauss_solve(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        b.swap(col, p);
        let pivot = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &pivot;
            for c in col..n {
                let v = &f * &a[col][c];
                a[r][c] -= v;
            }
            let v = &f * &b[col];
            b[r] -= v;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Enumerates bases `B` by bitmask (bit `j` set means `w_j` basic) and returns
/// the first with a nonnegative basic solution of `w − Mz = q(μ)`.
pub fn solve_fixed(lcp: &ParametricLCP, mu: &Rat) -> Result<OracleResult, OracleError> {
    let k = lcp.k();
    if k > MAX_ORACLE_DIM {
        return Err(OracleError::TooLarge(k));
    }
    let m = lcp.m();
    let q = lcp.q_at(mu);
    let witness = (0u32..(1u32 << k)).into_par_iter().find_map_first(|mask| {
        let in_b = |j: usize| mask >> j & 1 == 1;
        let a: Vec<Vec<Rat>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        if in_b(j) {
                            if i == j {
                                int(1)
                            } else {
                                int(0)
                            }
                        } else {
                            -m[(i, j)].clone()
                        }
                    })
                    .collect()
            })
            .collect();
        let lambda = gauss_solve(a, q.clone())?;
        lambda.iter().all(|v| !v.is_negative()).then(|| {
            let z: Vec<Rat> = (0..k).map(|j| if in_b(j) { Rat::zero() } else { lambda[j].clone() }).collect();
            (mask, z)
        })
    });

    let n = lcp.n_orig();
    Ok(match witness {
        Some((mask, z)) => {
            let x = z[..n].to_vec();
            let objective = lcp_objective(lcp, mu, &x);
            OracleResult {
                status: OracleStatus::Solved,
                x,
                objective,
                witness_basis: (0..k).filter(|&j| mask >> j & 1 == 1).collect(),
            }
        }
        None => OracleResult {
            status: OracleStatus::Infeasible,
            x: Vec::new(),
            objective: Rat::zero(),
            witness_basis: Vec::new(),
        },
    })
}

/// `xᵀQx + c(μ)ᵀx` read back from the LCP blocks (`2Q` and `c`).
fn lcp_objective(lcp: &ParametricLCP, mu: &Rat, x: &[Rat]) -> Rat {
    let m = lcp.m();
    let half = frac(1, 2);
    let mut quad = Rat::zero();
    for (i, xi) in x.iter().enumerate() {
        for (j, xj) in x.iter().enumerate() {
            quad += xi * &m[(i, j)] * xj;
        }
    }
    let lin: Rat = x.iter().zip(lcp.q()).map(|(xi, c)| xi * c.eval(mu)).sum();
    quad * half + lin
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub mu: Rat,
    pub detail: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mu={}: {}", fmt_rat(&self.mu), self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VerifyReport {
    pub samples: usize,
    pub failures: Vec<Divergence>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn first_divergence(&self) -> Option<&Divergence> {
        self.failures.first()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.first_divergence() {
            None => write!(f, "verify: {} samples, all match", self.samples),
            Some(d) => write!(f, "verify: {} samples, {} mismatches; first at {d}", self.samples, self.failures.len()),
        }
    }
}

/// Sample points: every piece endpoint and interior midpoint plus
/// `sample_count` equispaced points over the interval.
pub fn sample_points(path: &SolutionPath, sample_count: usize) -> Vec<Rat> {
    let mut pts = BTreeSet::new();
    for piece in &path.pieces {
        let (lo, hi) = (piece.mu_lo(), piece.mu_hi());
        pts.insert(lo.clone());
        pts.insert(hi.clone());
        pts.insert((lo + hi) * frac(1, 2));
    }
    let (lo, hi) = (&path.mu_min, &path.mu_max);
    match sample_count {
        0 => {}
        1 => {
            pts.insert(lo.clone());
        }
        n => {
            let step = (hi - lo) / int(n as i64 - 1);
            for i in 0..n {
                pts.insert(lo + &step * int(i as i64));
            }
        }
    }
    pts.into_iter().collect()
}

fn check_point(
    qp: &ParametricQP,
    lcp: &ParametricLCP,
    path: &SolutionPath,
    mu: &Rat,
) -> Result<Vec<Divergence>, OracleError> {
    let oracle = solve_fixed(lcp, mu)?;
    let fail = |detail: String| Divergence { mu: mu.clone(), detail };
    let value = match path.eval(mu) {
        Ok(v) => v,
        Err(e) => return Ok(vec![fail(format!("path evaluation failed: {e}"))]),
    };
    let mut out = Vec::new();
    let mut check_x = |x: &[Rat], label: &str| {
        if !qp.is_primal_feasible(mu, x) {
            out.push(fail(format!("{label} x=({}) is not feasible", fmt_vec(x))));
            return;
        }
        let obj = qp.objective_value(mu, x);
        if obj != oracle.objective {
            out.push(fail(format!(
                "{label} objective {} differs from oracle {}",
                fmt_rat(&obj),
                fmt_rat(&oracle.objective)
            )));
        }
    };
    match (&value, oracle.status) {
        (PathValue::Infeasible, OracleStatus::Infeasible) => {}
        (PathValue::Feasible(x), OracleStatus::Solved) => {
            check_x(x, "path");
            if let Some(jump) = path.jump_at(mu) {
                check_x(&jump.x_from, "jump start");
            }
        }
        (PathValue::Feasible(_), OracleStatus::Infeasible) => {
            out.push(fail("path is feasible but the oracle finds no solution".into()))
        }
        (PathValue::Infeasible, OracleStatus::Solved) => {
            out.push(fail("path reports infeasible but the oracle solves it".into()))
        }
    }
    Ok(out)
}

/// Compares the path against the oracle at [`sample_points`]: objective
/// values must match exactly and the feasibility status must agree.
pub fn verify_path(qp: &ParametricQP, path: &SolutionPath, sample_count: usize) -> Result<VerifyReport, OracleError> {
    let lcp = qp_to_lcp_with(qp, false)?;
    if lcp.k() > MAX_ORACLE_DIM {
        return Err(OracleError::TooLarge(lcp.k()));
    }
    let pts = sample_points(path, sample_count);
    let per_point: Vec<Vec<Divergence>> =
        pts.par_iter().map(|mu| check_point(qp, &lcp, path, mu)).collect::<Result<_, _>>()?;
    // segments must also tile the interval without gaps
    let mut failures: Vec<Divergence> = per_point.into_iter().flatten().collect();
    let mut cursor = path.mu_min.clone();
    for piece in &path.pieces {
        if matches!(piece, PathPiece::Jump(_)) {
            continue;
        }
        if piece.mu_lo() != &cursor {
            failures.push(Divergence { mu: cursor.clone(), detail: format!("piece starts at {}", piece.mu_lo()) });
        }
        cursor = piece.mu_hi().clone();
    }
    if cursor != path.mu_max {
        failures.push(Divergence { mu: cursor, detail: "path ends before mu_max".into() });
    }
    Ok(VerifyReport { samples: pts.len(), failures })
}
