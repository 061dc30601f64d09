//! Exact solution-path tracing over a parameter interval.
//!
//! A basis found for `q(μ + ε)` stays optimal on `[μ, μ']` where `μ'` is the
//! first root of its affine basic solution. At `μ'` the criss-cross method is
//! restarted from the same basis with right-hand side `q(μ' + ε)`. Infeasible
//! stretches are skipped by following the certificate row until its basic
//! value stops being negative.

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::crisscross::{
    criss_cross_solve_observed, Basis, BasisFactor, Fault, InfeasibilityCertificate, Iterate, Outcome, SolveOptions,
    SolveStats,
};
use crate::matrix::Matrix;
use crate::problem::ParametricLCP;
use crate::rational::{EpsVector, Rat};

/// Affine piece `x(μ) = x0 + μ·x1` on `[mu_lo, mu_hi]`, with the constraint
/// multipliers `y(μ) = y0 + μ·y1` from the same basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSegment {
    pub mu_lo: Rat,
    pub mu_hi: Rat,
    pub basis: Basis,
    pub x0: Vec<Rat>,
    pub x1: Vec<Rat>,
    pub y0: Vec<Rat>,
    pub y1: Vec<Rat>,
}

fn affine_at(v0: &[Rat], v1: &[Rat], mu: &Rat) -> Vec<Rat> {
    v0.iter().zip(v1).map(|(a, b)| a + mu * b).collect()
}

impl PathSegment {
    pub fn x_at(&self, mu: &Rat) -> Vec<Rat> {
        affine_at(&self.x0, &self.x1, mu)
    }

    pub fn y_at(&self, mu: &Rat) -> Vec<Rat> {
        affine_at(&self.y0, &self.y1, mu)
    }

    pub fn contains(&self, mu: &Rat) -> bool {
        &self.mu_lo <= mu && mu <= &self.mu_hi
    }
}

/// Discontinuity at `mu`: both endpoints, and every point between them, are
/// optimal there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JumpRecord {
    pub mu: Rat,
    pub x_from: Vec<Rat>,
    pub x_to: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfeasibleInterval {
    pub mu_lo: Rat,
    pub mu_hi: Rat,
    pub certificate: InfeasibilityCertificate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathPiece {
    Segment(PathSegment),
    Jump(JumpRecord),
    Infeasible(InfeasibleInterval),
}

impl PathPiece {
    pub fn mu_lo(&self) -> &Rat {
        match self {
            PathPiece::Segment(s) => &s.mu_lo,
            PathPiece::Jump(j) => &j.mu,
            PathPiece::Infeasible(i) => &i.mu_lo,
        }
    }

    pub fn mu_hi(&self) -> &Rat {
        match self {
            PathPiece::Segment(s) => &s.mu_hi,
            PathPiece::Jump(j) => &j.mu,
            PathPiece::Infeasible(i) => &i.mu_hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BendStat {
    pub mu: Rat,
    pub pivots: usize,
    /// `false` for the cold re-solve that follows an infeasible interval.
    pub warm: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathStats {
    pub cold_pivots: usize,
    pub bends: Vec<BendStat>,
}

impl PathStats {
    pub fn total_pivots(&self) -> usize {
        self.cold_pivots + self.bends.iter().map(|b| b.pivots).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionPath {
    pub mu_min: Rat,
    pub mu_max: Rat,
    pub n: usize,
    pub pieces: Vec<PathPiece>,
    pub stats: PathStats,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathValue {
    Feasible(Vec<Rat>),
    Infeasible,
}

impl PathValue {
    pub fn x(&self) -> Option<&[Rat]> {
        match self {
            PathValue::Feasible(x) => Some(x),
            PathValue::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("mu = {mu} lies outside the traced interval [{mu_min}, {mu_max}]")]
    OutOfRange { mu: Box<Rat>, mu_min: Box<Rat>, mu_max: Box<Rat> },
    #[error("no path piece covers mu = {0}")]
    Gap(Box<Rat>),
}

impl SolutionPath {
    pub fn segments(&self) -> impl Iterator<Item = &PathSegment> {
        self.pieces.iter().filter_map(|p| match p {
            PathPiece::Segment(s) => Some(s),
            _ => None,
        })
    }

    pub fn jumps(&self) -> impl Iterator<Item = &JumpRecord> {
        self.pieces.iter().filter_map(|p| match p {
            PathPiece::Jump(j) => Some(j),
            _ => None,
        })
    }

    pub fn infeasible_intervals(&self) -> impl Iterator<Item = &InfeasibleInterval> {
        self.pieces.iter().filter_map(|p| match p {
            PathPiece::Infeasible(i) => Some(i),
            _ => None,
        })
    }

    pub fn jump_at(&self, mu: &Rat) -> Option<&JumpRecord> {
        self.jumps().find(|j| &j.mu == mu)
    }

    /// Optimal `x` at `mu`. At a jump the right-hand value `x_to` is returned;
    /// use [`SolutionPath::jump_at`] for the other endpoint.
    pub fn eval(&self, mu: &Rat) -> Result<PathValue, PathError> {
        if mu < &self.mu_min || mu > &self.mu_max {
            return Err(PathError::OutOfRange {
                mu: Box::new(mu.clone()),
                mu_min: Box::new(self.mu_min.clone()),
                mu_max: Box::new(self.mu_max.clone()),
            });
        }
        let end = self.pieces.partition_point(|p| p.mu_lo() <= mu);
        for i in (0..end).rev() {
            match &self.pieces[i] {
                PathPiece::Jump(_) => continue,
                PathPiece::Segment(s) if s.contains(mu) => return Ok(PathValue::Feasible(s.x_at(mu))),
                PathPiece::Infeasible(inf) if mu <= &inf.mu_hi => {
                    if mu == &inf.mu_lo {
                        if let Some(PathPiece::Segment(prev)) = i.checked_sub(1).map(|j| &self.pieces[j]) {
                            if &prev.mu_hi == mu {
                                return Ok(PathValue::Feasible(prev.x_at(mu)));
                            }
                        }
                    }
                    return Ok(PathValue::Infeasible);
                }
                _ => break,
            }
        }
        Err(PathError::Gap(Box::new(mu.clone())))
    }

    /// Applies a linear map `x ↦ P·x` to every stored `x`, e.g. to undo a
    /// free-variable split.
    pub fn map_x(&self, p: &Matrix) -> SolutionPath {
        assert_eq!(p.cols(), self.n);
        let pieces = self
            .pieces
            .iter()
            .map(|piece| match piece {
                PathPiece::Segment(s) => {
                    PathPiece::Segment(PathSegment { x0: p.mul_vec(&s.x0), x1: p.mul_vec(&s.x1), ..s.clone() })
                }
                PathPiece::Jump(j) => PathPiece::Jump(JumpRecord {
                    mu: j.mu.clone(),
                    x_from: p.mul_vec(&j.x_from),
                    x_to: p.mul_vec(&j.x_to),
                }),
                PathPiece::Infeasible(i) => PathPiece::Infeasible(i.clone()),
            })
            .collect();
        SolutionPath { n: p.rows(), pieces, ..self.clone() }
    }
}

pub fn eval_path(path: &SolutionPath, mu: &Rat) -> Result<PathValue, PathError> {
    path.eval(mu)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceOptions {
    pub solve: SolveOptions,
    pub max_bends: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { solve: SolveOptions::default(), max_bends: 1_000_000 }
    }
}

/// Smallest root `−s_j/t_j` over components with `t_j < 0`; `None` for +∞.
pub fn first_root(s: &[Rat], t: &[Rat]) -> Option<Rat> {
    s.iter().zip(t).filter(|(_, tj)| tj.is_negative()).map(|(sj, tj)| -(sj / tj)).min()
}

/// Largest `μ' ≥ μ` for which the basic solution of `basis` stays
/// nonnegative; `None` when it never turns negative.
pub fn segment_upper_end(lcp: &ParametricLCP, basis: &Basis, mu: &Rat) -> Result<Option<Rat>, Fault> {
    let f = BasisFactor::new(lcp.m(), basis)?;
    let s = f.solve(&lcp.q_constant());
    let t = f.solve(&lcp.q_slope());
    let end = first_root(&s, &t);
    if let Some(e) = &end {
        if e < mu {
            return Err(Fault::Invariant(format!("basis {basis:?} is not valid at {mu}")));
        }
    }
    Ok(end)
}

/// Warm restart at a bend: criss-cross from `basis` on `q(μ' + ε)`.
pub fn restart_at_bend(
    lcp: &ParametricLCP,
    basis: &Basis,
    mu_prime: &Rat,
    opts: &SolveOptions,
) -> Result<(Outcome, SolveStats), Fault> {
    let q = EpsVector::at(lcp.q(), mu_prime);
    criss_cross_solve_observed(lcp.m(), &q, basis, opts, &mut |_| {})
}

/// Cold solve for `q(μ + ε)` from `B = [k]`.
pub fn cold_solve(lcp: &ParametricLCP, mu: &Rat, opts: &SolveOptions) -> Result<(Outcome, SolveStats), Fault> {
    let q = EpsVector::at(lcp.q(), mu);
    criss_cross_solve_observed(lcp.m(), &q, &Basis::full(lcp.k()), opts, &mut |_| {})
}

pub fn trace_path(lcp: &ParametricLCP) -> Result<SolutionPath, Fault> {
    trace_path_with(lcp, &TraceOptions::default(), &mut |_| {})
}

/// Traces `[μ_min, μ_max]` in increasing μ. The observer sees every basis
/// visited by every criss-cross run.
pub fn trace_path_with(
    lcp: &ParametricLCP,
    opts: &TraceOptions,
    observer: &mut dyn FnMut(&Iterate<'_>),
) -> Result<SolutionPath, Fault> {
    Tracer { lcp, opts, observer, pieces: Vec::new(), stats: PathStats::default() }.run()
}

struct Tracer<'a, 'o> {
    lcp: &'a ParametricLCP,
    opts: &'a TraceOptions,
    observer: &'o mut dyn FnMut(&Iterate<'_>),
    pieces: Vec<PathPiece>,
    stats: PathStats,
}

impl Tracer<'_, '_> {
    fn solve(&mut self, q: &EpsVector, start: &Basis) -> Result<(Outcome, usize), Fault> {
        let (out, st) = criss_cross_solve_observed(self.lcp.m(), q, start, &self.opts.solve, self.observer)?;
        Ok((out, st.pivots))
    }

    fn segment(&self, basis: &Basis, mu_lo: Rat, mu_hi: Rat) -> Result<PathSegment, Fault> {
        let lcp = self.lcp;
        let f = BasisFactor::new(lcp.m(), basis)?;
        let s = f.solve(&lcp.q_constant());
        let t = f.solve(&lcp.q_slope());
        let z_part = |v: &[Rat], range: std::ops::Range<usize>| -> Vec<Rat> {
            range.map(|j| if basis.contains(j) { Rat::zero() } else { v[j].clone() }).collect()
        };
        let (n, k) = (lcp.n_orig(), lcp.k());
        Ok(PathSegment {
            mu_lo,
            mu_hi,
            basis: basis.clone(),
            x0: z_part(&s, 0..n),
            x1: z_part(&t, 0..n),
            y0: z_part(&s, n..k),
            y1: z_part(&t, n..k),
        })
    }

    fn x_of(&self, basis: &Basis, lambda: &EpsVector) -> Vec<Rat> {
        (0..self.lcp.n_orig()).map(|j| if basis.contains(j) { Rat::zero() } else { lambda.s[j].clone() }).collect()
    }

    fn bend(&mut self, mu: &Rat, pivots: usize, warm: bool) -> Result<(), Fault> {
        if self.stats.bends.len() >= self.opts.max_bends {
            return Err(Fault::BendLimit { limit: self.opts.max_bends });
        }
        self.stats.bends.push(BendStat { mu: mu.clone(), pivots, warm });
        Ok(())
    }

    /// Pushes a zero-length segment if the unperturbed problem is solvable
    /// exactly at `mu`.
    fn point_check(&mut self, mu: &Rat) -> Result<(), Fault> {
        let q = EpsVector::exact(self.lcp.q_at(mu));
        let (out, _) = self.solve(&q, &Basis::full(self.lcp.k()))?;
        if let Outcome::Solved(sol) = out {
            let seg = self.segment(&sol.basis, mu.clone(), mu.clone())?;
            self.pieces.push(PathPiece::Segment(seg));
        }
        Ok(())
    }

    fn run(mut self) -> Result<SolutionPath, Fault> {
        let lcp = self.lcp;
        let k = lcp.k();
        let (mu_min, mu_max) = (lcp.mu_min().clone(), lcp.mu_max().clone());

        if mu_min == mu_max {
            let q = EpsVector::exact(lcp.q_at(&mu_min));
            let (out, pivots) = self.solve(&q, &Basis::full(k))?;
            self.stats.cold_pivots = pivots;
            let piece = match out {
                Outcome::Solved(sol) => PathPiece::Segment(self.segment(&sol.basis, mu_min.clone(), mu_max.clone())?),
                Outcome::Infeasible(certificate) => PathPiece::Infeasible(InfeasibleInterval {
                    mu_lo: mu_min.clone(),
                    mu_hi: mu_max.clone(),
                    certificate,
                }),
            };
            self.pieces.push(piece);
            return Ok(self.finish(mu_min, mu_max));
        }

        let mut mu = mu_min.clone();
        let (mut outcome, pivots) = self.solve(&EpsVector::at(lcp.q(), &mu), &Basis::full(k))?;
        self.stats.cold_pivots = pivots;

        loop {
            match outcome {
                Outcome::Solved(sol) => {
                    let end = segment_upper_end(lcp, &sol.basis, &mu)?;
                    let hi = match end {
                        Some(e) if e < mu_max => e,
                        _ => mu_max.clone(),
                    };
                    let seg = self.segment(&sol.basis, mu.clone(), hi.clone())?;
                    let x_old = seg.x_at(&hi);
                    self.pieces.push(PathPiece::Segment(seg));
                    if hi >= mu_max {
                        break;
                    }
                    let q = EpsVector::at(lcp.q(), &hi);
                    let (next, pivots) = self.solve(&q, &sol.basis)?;
                    self.bend(&hi, pivots, true)?;
                    if let Outcome::Solved(new_sol) = &next {
                        let x_new = self.x_of(&new_sol.basis, &new_sol.lambda);
                        if x_new != x_old {
                            self.pieces.push(PathPiece::Jump(JumpRecord {
                                mu: hi.clone(),
                                x_from: x_old,
                                x_to: x_new,
                            }));
                        }
                    }
                    mu = hi;
                    outcome = next;
                }
                Outcome::Infeasible(certificate) => {
                    let follows_segment = matches!(self.pieces.last(), Some(PathPiece::Segment(s)) if s.mu_hi == mu);
                    if !follows_segment {
                        self.point_check(&mu)?;
                    }
                    // λ_r(μ + δ) = a + δ·b with a + εb < 0
                    let (a, b) = certificate.lambda_r.clone();
                    let hi = if b.is_positive() {
                        let root = &mu - &(&a / &b);
                        if root < mu_max {
                            root
                        } else {
                            mu_max.clone()
                        }
                    } else {
                        mu_max.clone()
                    };
                    self.pieces.push(PathPiece::Infeasible(InfeasibleInterval {
                        mu_lo: mu.clone(),
                        mu_hi: hi.clone(),
                        certificate,
                    }));
                    if hi >= mu_max {
                        // the certificate only proves infeasibility where λ_r < 0
                        if (&a + (&mu_max - &mu) * &b).is_zero() {
                            self.point_check(&mu_max)?;
                        }
                        break;
                    }
                    let (next, pivots) = self.solve(&EpsVector::at(lcp.q(), &hi), &Basis::full(k))?;
                    self.bend(&hi, pivots, false)?;
                    mu = hi;
                    outcome = next;
                }
            }
        }
        Ok(self.finish(mu_min, mu_max))
    }

    fn finish(self, mu_min: Rat, mu_max: Rat) -> SolutionPath {
        SolutionPath { mu_min, mu_max, n: self.lcp.n_orig(), pieces: self.pieces, stats: self.stats }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::problem::{qp_to_lcp, ParametricQP};
    use crate::rational::{frac, int, AffineScalar};

    fn ints(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn scalar_lcp(lo: i64, hi: i64) -> ParametricLCP {
        // min x² + μx, x ≥ 0
        let qp = ParametricQP::new(
            Matrix::from_i64(&[&[1]]),
            Matrix::zeros(0, 1),
            vec![AffineScalar::new(int(0), int(1))],
            vec![],
            int(lo),
            int(hi),
        )
        .unwrap();
        qp_to_lcp(&qp).unwrap()
    }

    #[test]
    fn first_root_examples() {
        assert_eq!(first_root(&ints(&[1, 2]), &ints(&[0, 3])), None);
        assert_eq!(first_root(&ints(&[1, 2]), &ints(&[-1, 0])), Some(int(1)));
        assert_eq!(first_root(&ints(&[3, 6]), &ints(&[-1, -2])), Some(int(3)));
        assert_eq!(first_root(&ints(&[1, 1]), &ints(&[-2, -1])), Some(frac(1, 2)));
    }

    #[test]
    fn scalar_path_has_two_segments() {
        let path = trace_path(&scalar_lcp(-2, 2)).unwrap();
        let segs: Vec<_> = path.segments().collect();
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[0].mu_lo.clone(), segs[0].mu_hi.clone()), (int(-2), int(0)));
        assert_eq!((segs[0].x0.clone(), segs[0].x1.clone()), (ints(&[0]), vec![frac(-1, 2)]));
        assert_eq!((segs[1].mu_lo.clone(), segs[1].mu_hi.clone()), (int(0), int(2)));
        assert_eq!((segs[1].x0.clone(), segs[1].x1.clone()), (ints(&[0]), ints(&[0])));
        assert_eq!(path.jumps().count(), 0);
        assert_eq!(path.eval(&int(-2)).unwrap(), PathValue::Feasible(ints(&[1])));
        assert_eq!(path.eval(&int(0)).unwrap(), PathValue::Feasible(ints(&[0])));
        assert_eq!(path.eval(&int(-1)).unwrap(), PathValue::Feasible(vec![frac(1, 2)]));
        assert!(matches!(path.eval(&int(3)), Err(PathError::OutOfRange { .. })));
    }

    #[test]
    fn bend_at_zero_is_one_diagonal_pivot() {
        let lcp = scalar_lcp(-2, 2);
        // at μ = 0 from B = ∅: λ = z = −μ/2 hits zero
        let b = Basis::empty(1);
        assert_eq!(segment_upper_end(&lcp, &b, &int(-2)).unwrap(), Some(int(0)));
        let (out, stats) = restart_at_bend(&lcp, &b, &int(0), &SolveOptions::default()).unwrap();
        assert_eq!(stats.pivots, 1);
        assert_eq!(out.basis(), &Basis::full(1));
        // no-op restart: B = [1] is already ε-valid at 0
        let (out, stats) = restart_at_bend(&lcp, &Basis::full(1), &int(0), &SolveOptions::default()).unwrap();
        assert_eq!(stats.pivots, 0);
        assert_eq!(out.basis(), &Basis::full(1));
        assert_eq!(segment_upper_end(&lcp, &Basis::full(1), &int(0)).unwrap(), None);
    }

    #[test]
    fn single_point_interval() {
        let path = trace_path(&scalar_lcp(-1, -1)).unwrap();
        assert_eq!(path.pieces.len(), 1);
        assert_eq!(path.eval(&int(-1)).unwrap(), PathValue::Feasible(vec![frac(1, 2)]));
    }

    #[test]
    fn infeasible_start_then_feasible() {
        // min x s.t. −x ≥ −μ (x ≤ μ), feasible iff μ ≥ 0
        let qp = ParametricQP::new(
            Matrix::zeros(1, 1),
            Matrix::from_i64(&[&[-1]]),
            vec![AffineScalar::constant(int(1))],
            vec![AffineScalar::new(int(0), int(-1))],
            int(-1),
            int(1),
        )
        .unwrap();
        let path = trace_path(&qp_to_lcp(&qp).unwrap()).unwrap();
        assert!(matches!(&path.pieces[0], PathPiece::Infeasible(i) if i.mu_lo == int(-1) && i.mu_hi == int(0)));
        assert!(matches!(&path.pieces[1], PathPiece::Segment(s) if s.mu_lo == int(0) && s.mu_hi == int(1)));
        assert_eq!(path.eval(&frac(-1, 2)).unwrap(), PathValue::Infeasible);
        assert_eq!(path.eval(&int(0)).unwrap(), PathValue::Feasible(ints(&[0])));
        assert_eq!(path.pieces.len(), 2);
    }

    #[test]
    fn isolated_feasible_point_is_kept() {
        // 0·x ≥ μ and 0·x ≥ −μ: feasible only at μ = 0
        let qp = ParametricQP::new(
            Matrix::from_i64(&[&[1]]),
            Matrix::zeros(2, 1),
            vec![AffineScalar::constant(int(0))],
            vec![AffineScalar::new(int(0), int(1)), AffineScalar::new(int(0), int(-1))],
            int(-1),
            int(1),
        )
        .unwrap();
        let path = trace_path(&qp_to_lcp(&qp).unwrap()).unwrap();
        assert_eq!(path.eval(&int(0)).unwrap(), PathValue::Feasible(ints(&[0])));
        assert_eq!(path.eval(&frac(1, 2)).unwrap(), PathValue::Infeasible);
        assert_eq!(path.eval(&frac(-1, 2)).unwrap(), PathValue::Infeasible);
    }

    #[test]
    fn feasible_only_at_upper_end() {
        // x ≤ μ − 1 with x ≥ 0: feasible only at μ = 1
        let qp = ParametricQP::new(
            Matrix::from_i64(&[&[1]]),
            Matrix::from_i64(&[&[-1]]),
            vec![AffineScalar::constant(int(0))],
            vec![AffineScalar::new(int(1), int(-1))],
            int(-1),
            int(1),
        )
        .unwrap();
        let path = trace_path(&qp_to_lcp(&qp).unwrap()).unwrap();
        assert_eq!(path.eval(&frac(1, 2)).unwrap(), PathValue::Infeasible);
        assert_eq!(path.eval(&int(1)).unwrap(), PathValue::Feasible(ints(&[0])));
    }
}
