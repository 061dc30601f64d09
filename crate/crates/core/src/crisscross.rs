//! Criss-cross pivoting for linear complementarity problems with a positive
//! semidefinite matrix.
//!
//! A basis `B ⊆ [k]` selects `w_j` as basic for `j ∈ B` and `z_j` otherwise.
//! With `N = [k] ∖ B`, the basic system `M_B λ = q` only involves the
//! principal block `M_NN`:
//!
//! ```text
//!   λ_N = −M_NN⁻¹ q_N          (the basic z's)
//!   λ_B = q_B + M_BN λ_N       (the basic w's)
//! ```
//!
//! so a basis is valid iff `M_NN` is invertible and only that block is ever
//! factored. Right-hand sides are [`EpsVector`]s; every sign decision uses the
//! perturbed sign rule.

use std::collections::HashSet;
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::matrix::{Lu, Matrix};
use crate::rational::{eps_sign, EpsVector, Rat};

/// Unrecoverable solver states. Each one signals a broken invariant, since
/// criss-cross pivoting on a PSD matrix always terminates with a valid basis.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Fault {
    #[error("basis matrix is singular ({nonbasic} nonbasic columns)")]
    SingularBasis { nonbasic: usize },
    #[error("pivot limit of {limit} exceeded")]
    PivotLimit { limit: usize },
    #[error("bend limit of {limit} exceeded")]
    BendLimit { limit: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Complementary basis: `in_basis[j]` means `w_j` is basic.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Basis {
    in_basis: Vec<bool>,
}

impl Basis {
    /// `B = [k]`, always valid since `M_B = I`.
    pub fn full(k: usize) -> Self {
        Self { in_basis: vec![true; k] }
    }

    pub fn empty(k: usize) -> Self {
        Self { in_basis: vec![false; k] }
    }

    pub fn from_members(k: usize, members: &[usize]) -> Self {
        let mut b = Self::empty(k);
        for &j in members {
            b.in_basis[j] = true;
        }
        b
    }

    pub fn from_mask(in_basis: Vec<bool>) -> Self {
        Self { in_basis }
    }

    pub fn k(&self) -> usize {
        self.in_basis.len()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.in_basis[j]
    }

    pub fn mask(&self) -> &[bool] {
        &self.in_basis
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.k()).filter(|&j| self.in_basis[j]).collect()
    }

    pub fn nonbasic(&self) -> Vec<usize> {
        (0..self.k()).filter(|&j| !self.in_basis[j]).collect()
    }

    /// `B ⊕ {j}`.
    pub fn toggled(&self, j: usize) -> Basis {
        let mut b = self.clone();
        b.in_basis[j] = !b.in_basis[j];
        b
    }
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Basis{:?}", self.members())
    }
}

/// Factored `M_B` for one basis.
pub struct BasisFactor<'a> {
    m: &'a Matrix,
    basis: Basis,
    nonbasic: Vec<usize>,
    lu: Lu,
}

impl<'a> BasisFactor<'a> {
    pub fn new(m: &'a Matrix, basis: &Basis) -> Result<Self, Fault> {
        assert_eq!(m.rows(), basis.k(), "basis size does not match M");
        let nonbasic = basis.nonbasic();
        let block = m.select(&nonbasic, &nonbasic);
        let lu = Lu::factor(&block).ok_or(Fault::SingularBasis { nonbasic: nonbasic.len() })?;
        Ok(Self { m, basis: basis.clone(), nonbasic, lu })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// Solves `M_B λ = rhs`.
    pub fn solve(&self, rhs: &[Rat]) -> Vec<Rat> {
        let k = self.basis.k();
        assert_eq!(rhs.len(), k);
        let rhs_n: Vec<Rat> = self.nonbasic.iter().map(|&j| -rhs[j].clone()).collect();
        let z_n = self.lu.solve(&rhs_n);
        let mut lambda = rhs.to_vec();
        for (&j, z) in self.nonbasic.iter().zip(&z_n) {
            lambda[j] = z.clone();
        }
        for (i, lam) in lambda.iter_mut().enumerate() {
            if !self.basis.contains(i) {
                continue;
            }
            for (&j, z) in self.nonbasic.iter().zip(&z_n) {
                let mij = &self.m[(i, j)];
                if !mij.is_zero() && !z.is_zero() {
                    *lam += mij * z;
                }
            }
        }
        lambda
    }

    pub fn solve_eps(&self, q: &EpsVector) -> EpsVector {
        EpsVector::new(self.solve(&q.s), self.solve(&q.t))
    }

    /// Row `r` of the dictionary `Λ = −M_B⁻¹M_N`, indexed by pair: entry `j`
    /// is the coefficient of pair `j`'s nonbasic variable in the expression
    /// for pair `r`'s basic variable.
    pub fn dictionary_row(&self, r: usize) -> Vec<Rat> {
        let k = self.basis.k();
        let m = self.m;
        let r_basic_w = self.basis.contains(r);
        let g: Vec<Rat> = self
            .nonbasic
            .iter()
            .map(|&j| {
                if r_basic_w {
                    m[(r, j)].clone()
                } else if j == r {
                    Rat::from_integer(1.into())
                } else {
                    Rat::zero()
                }
            })
            .collect();
        let y = self.lu.solve_transpose(&g);
        let mut row = vec![Rat::zero(); k];
        for (&j, yj) in self.nonbasic.iter().zip(&y) {
            row[j] = yj.clone();
        }
        for j in 0..k {
            if !self.basis.contains(j) {
                continue;
            }
            let mut v = if r_basic_w { m[(r, j)].clone() } else { Rat::zero() };
            for (&i, yi) in self.nonbasic.iter().zip(&y) {
                let mij = &m[(i, j)];
                if !yi.is_zero() && !mij.is_zero() {
                    v -= yi * mij;
                }
            }
            row[j] = v;
        }
        row
    }
}

/// Basic solution: `λ_j = w_j` for `j ∈ B`, `λ_j = z_j` otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicSolution {
    pub basis: Basis,
    pub lambda: EpsVector,
}

impl BasicSolution {
    pub fn w(&self) -> EpsVector {
        self.scatter(true)
    }

    pub fn z(&self) -> EpsVector {
        self.scatter(false)
    }

    fn scatter(&self, want_w: bool) -> EpsVector {
        let pick = |v: &Vec<Rat>| -> Vec<Rat> {
            v.iter()
                .enumerate()
                .map(|(j, x)| if self.basis.contains(j) == want_w { x.clone() } else { Rat::zero() })
                .collect()
        };
        EpsVector::new(pick(&self.lambda.s), pick(&self.lambda.t))
    }
}

/// Basic solution of `M_B λ = q`.
pub fn basic_solution(m: &Matrix, basis: &Basis, q: &EpsVector) -> Result<BasicSolution, Fault> {
    let f = BasisFactor::new(m, basis)?;
    Ok(BasicSolution { basis: basis.clone(), lambda: f.solve_eps(q) })
}

/// Row `r` of the dictionary for `basis`.
pub fn dictionary_entries(m: &Matrix, basis: &Basis, r: usize) -> Result<Vec<Rat>, Fault> {
    Ok(BasisFactor::new(m, basis)?.dictionary_row(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PivotKind {
    Diagonal,
    Exchange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PivotChoice {
    /// Least index with a negative basic value.
    pub r: usize,
    /// Least index with a positive entry in dictionary row `r`.
    pub s: usize,
    pub p: usize,
    pub kind: PivotKind,
}

/// `B ⊕ {p}` for a diagonal pivot, `B ⊕ {r, s}` for an exchange pivot.
pub fn apply_pivot(basis: &Basis, choice: &PivotChoice) -> Basis {
    match choice.kind {
        PivotKind::Diagonal => basis.toggled(choice.p),
        PivotKind::Exchange => basis.toggled(choice.r).toggled(choice.s),
    }
}

/// Proof that `w − Mz = q`, `w, z ≥ 0` has no solution: the basic variable of
/// pair `r` equals `λ_r + Λ_r·λ_N` with `λ_r < 0` and `Λ_r ≤ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfeasibilityCertificate {
    pub basis: Basis,
    pub r: usize,
    pub dictionary_row: Vec<Rat>,
    /// `λ_r` as `(s, t)` meaning `s + εt`.
    pub lambda_r: (Rat, Rat),
}

impl InfeasibilityCertificate {
    pub fn is_valid(&self) -> bool {
        self.dictionary_row.iter().all(|v| !v.is_positive()) && eps_sign(&self.lambda_r.0, &self.lambda_r.1).is_lt()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Solved(BasicSolution),
    Infeasible(InfeasibilityCertificate),
}

impl Outcome {
    pub fn basis(&self) -> &Basis {
        match self {
            Outcome::Solved(s) => &s.basis,
            Outcome::Infeasible(c) => &c.basis,
        }
    }

    pub fn solved(&self) -> Option<&BasicSolution> {
        match self {
            Outcome::Solved(s) => Some(s),
            Outcome::Infeasible(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOptions {
    pub max_pivots: usize,
    /// Track visited bases and check `w − Mz = q` at every iterate.
    pub check_invariants: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_pivots: 1_000_000, check_invariants: cfg!(debug_assertions) }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub pivots: usize,
    pub diagonal: usize,
    pub exchange: usize,
}

/// One visited basis, reported to observers before the pivot (if any) is
/// applied.
#[derive(Debug)]
pub struct Iterate<'a> {
    pub basis: &'a Basis,
    pub lambda: &'a EpsVector,
    pub q: &'a EpsVector,
    pub pivot: Option<PivotChoice>,
}

pub fn criss_cross_solve(
    m: &Matrix,
    q: &EpsVector,
    start: &Basis,
    opts: &SolveOptions,
) -> Result<(Outcome, SolveStats), Fault> {
    criss_cross_solve_observed(m, q, start, opts, &mut |_| {})
}

/// Least-index criss-cross method. Returns a basis whose basic solution is
/// nonnegative under the ε-sign rule, or an infeasibility certificate.
pub fn criss_cross_solve_observed(
    m: &Matrix,
    q: &EpsVector,
    start: &Basis,
    opts: &SolveOptions,
    observer: &mut dyn FnMut(&Iterate<'_>),
) -> Result<(Outcome, SolveStats), Fault> {
    let k = m.rows();
    assert_eq!(q.len(), k, "right-hand side length does not match M");
    let mut stats = SolveStats::default();
    let mut visited: HashSet<Basis> = HashSet::new();
    let mut basis = start.clone();

    loop {
        let factor = BasisFactor::new(m, &basis)?;
        let lambda = factor.solve_eps(q);
        if opts.check_invariants {
            check_basic_solution(m, &basis, &lambda, q)?;
            if !visited.insert(basis.clone()) {
                return Err(Fault::Invariant(format!("basis {basis:?} repeated")));
            }
        }

        let Some(r) = (0..k).find(|&j| lambda.is_negative(j)) else {
            observer(&Iterate { basis: &basis, lambda: &lambda, q, pivot: None });
            return Ok((Outcome::Solved(BasicSolution { basis, lambda }), stats));
        };

        let row_r = factor.dictionary_row(r);
        let Some(s) = (0..k).find(|&j| row_r[j].is_positive()) else {
            observer(&Iterate { basis: &basis, lambda: &lambda, q, pivot: None });
            let lambda_r = (lambda.s[r].clone(), lambda.t[r].clone());
            return Ok((
                Outcome::Infeasible(InfeasibilityCertificate { basis, r, dictionary_row: row_r, lambda_r }),
                stats,
            ));
        };

        if stats.pivots >= opts.max_pivots {
            return Err(Fault::PivotLimit { limit: opts.max_pivots });
        }

        let p = r.max(s);
        let row_s = (s != r).then(|| factor.dictionary_row(s));
        let diag = if p == r { &row_r[r] } else { &row_s.as_ref().expect("s != r")[s] };
        let kind = if diag.is_zero() { PivotKind::Exchange } else { PivotKind::Diagonal };
        if kind == PivotKind::Exchange {
            // r == s is impossible here: Λ_rs > 0 would be the zero diagonal
            let row_s = row_s.as_ref().expect("exchange pivot needs r != s");
            if row_s[r] != -row_r[s].clone() {
                return Err(Fault::Invariant(format!(
                    "exchange pivot ({r}, {s}) without Λ_sr = −Λ_rs: {} vs {}",
                    row_s[r], row_r[s]
                )));
            }
        }
        let choice = PivotChoice { r, s, p, kind };
        observer(&Iterate { basis: &basis, lambda: &lambda, q, pivot: Some(choice) });

        stats.pivots += 1;
        match kind {
            PivotKind::Diagonal => stats.diagonal += 1,
            PivotKind::Exchange => stats.exchange += 1,
        }
        basis = apply_pivot(&basis, &choice);
    }
}

fn check_basic_solution(m: &Matrix, basis: &Basis, lambda: &EpsVector, q: &EpsVector) -> Result<(), Fault> {
    let sol = BasicSolution { basis: basis.clone(), lambda: lambda.clone() };
    let (w, z) = (sol.w(), sol.z());
    for (wv, zv, qv) in [(&w.s, &z.s, &q.s), (&w.t, &z.t, &q.t)] {
        let mz = m.mul_vec(zv);
        for j in 0..m.rows() {
            if &wv[j] - &mz[j] != qv[j] {
                return Err(Fault::Invariant(format!("w − Mz ≠ q in row {j} for {basis:?}")));
            }
        }
    }
    Ok(())
}
