//! Parametric quadratic programs, their complementarity form, and the
//! structural checks that gate the solver.
//!
//! A [`ParametricQP`] is
//!
//! ```text
//!   minimize   xᵀQx + c(μ)ᵀx
//!   subject to Ax ≥ b(μ),  x ≥ 0
//! ```
//!
//! with `c` and `b` affine in μ. Its optimality conditions are the linear
//! complementarity problem `w − Mz = q(μ)`, `w, z ≥ 0`, `wᵀz = 0` with
//! `M = [[2Q, −Aᵀ], [A, 0]]`, `q(μ) = (c(μ), −b(μ))`, `z = (x, y)` and
//! `w = (u, v)`.

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::matrix::{dot, Matrix};
use crate::rational::{int, AffineScalar, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("problem has no variables")]
    NoVariables,
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("Q is not symmetric")]
    NotSymmetric,
    #[error("Q is not positive semidefinite")]
    NotPsd,
    #[error("parameter interval is inverted: mu_min {mu_min} > mu_max {mu_max}")]
    InvertedInterval { mu_min: Box<Rat>, mu_max: Box<Rat> },
}

fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<(), ProblemError> {
    if expected == found {
        Ok(())
    } else {
        Err(ProblemError::Dimension { what, expected, found })
    }
}

/// Exact PSD test for a symmetric matrix by LDLᵀ elimination with diagonal
/// pivoting. A zero pivot is admissible only if its remaining row is zero.
pub fn validate_psd(q: &Matrix) -> Result<bool, ProblemError> {
    if !q.is_square() {
        return Err(ProblemError::NotSquare { rows: q.rows(), cols: q.cols() });
    }
    if !q.is_symmetric() {
        return Err(ProblemError::NotSymmetric);
    }
    let mut a = q.clone();
    let mut active: Vec<usize> = (0..q.rows()).collect();
    while !active.is_empty() {
        let mut pivot = None;
        let mut keep = Vec::with_capacity(active.len());
        for &j in &active {
            let d = &a[(j, j)];
            if d.is_negative() {
                return Ok(false);
            }
            if d.is_zero() {
                if active.iter().any(|&l| !a[(j, l)].is_zero()) {
                    return Ok(false);
                }
                // zero row and column: contributes nothing
                continue;
            }
            if pivot.is_none() {
                pivot = Some(j);
            }
            keep.push(j);
        }
        let Some(p) = pivot else {
            return Ok(true);
        };
        keep.retain(|&j| j != p);
        let d = a[(p, p)].clone();
        for &j in &keep {
            if a[(j, p)].is_zero() {
                continue;
            }
            let f = &a[(j, p)] / &d;
            for &l in &keep {
                if !a[(p, l)].is_zero() {
                    let v = &f * &a[(p, l)];
                    a[(j, l)] -= v;
                }
            }
        }
        active = keep;
    }
    Ok(true)
}

/// Quadratic objective `xᵀQx + c(μ)ᵀx`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Objective {
    pub q: Matrix,
    pub c: Vec<AffineScalar>,
}

impl Objective {
    pub fn value(&self, mu: &Rat, x: &[Rat]) -> Rat {
        let lin: Vec<Rat> = self.c.iter().map(|c| c.eval(mu)).collect();
        self.q.quad_form(x) + dot(&lin, x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParametricQP {
    q: Matrix,
    a: Matrix,
    c: Vec<AffineScalar>,
    b: Vec<AffineScalar>,
    mu_min: Rat,
    mu_max: Rat,
}

impl ParametricQP {
    /// Checks shapes, symmetry of `Q` and the interval order. PSD-ness is
    /// checked separately by [`ParametricQP::validate`] or [`qp_to_lcp`].
    pub fn new(
        q: Matrix,
        a: Matrix,
        c: Vec<AffineScalar>,
        b: Vec<AffineScalar>,
        mu_min: Rat,
        mu_max: Rat,
    ) -> Result<Self, ProblemError> {
        let n = q.rows();
        if n == 0 {
            return Err(ProblemError::NoVariables);
        }
        if !q.is_square() {
            return Err(ProblemError::NotSquare { rows: q.rows(), cols: q.cols() });
        }
        check_dim("A columns", n, a.cols())?;
        check_dim("c", n, c.len())?;
        check_dim("b", a.rows(), b.len())?;
        if !q.is_symmetric() {
            return Err(ProblemError::NotSymmetric);
        }
        if mu_min > mu_max {
            return Err(ProblemError::InvertedInterval { mu_min: Box::new(mu_min), mu_max: Box::new(mu_max) });
        }
        Ok(Self { q, a, c, b, mu_min, mu_max })
    }

    pub fn n(&self) -> usize {
        self.q.rows()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn c(&self) -> &[AffineScalar] {
        &self.c
    }

    pub fn b(&self) -> &[AffineScalar] {
        &self.b
    }

    pub fn mu_min(&self) -> &Rat {
        &self.mu_min
    }

    pub fn mu_max(&self) -> &Rat {
        &self.mu_max
    }

    pub fn with_interval(mut self, mu_min: Rat, mu_max: Rat) -> Result<Self, ProblemError> {
        if mu_min > mu_max {
            return Err(ProblemError::InvertedInterval { mu_min: Box::new(mu_min), mu_max: Box::new(mu_max) });
        }
        self.mu_min = mu_min;
        self.mu_max = mu_max;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if validate_psd(&self.q)? {
            Ok(())
        } else {
            Err(ProblemError::NotPsd)
        }
    }

    pub fn objective(&self) -> Objective {
        Objective { q: self.q.clone(), c: self.c.clone() }
    }

    pub fn objective_value(&self, mu: &Rat, x: &[Rat]) -> Rat {
        let lin: Vec<Rat> = self.c.iter().map(|c| c.eval(mu)).collect();
        self.q.quad_form(x) + dot(&lin, x)
    }

    /// `x ≥ 0` and `Ax ≥ b(μ)`.
    pub fn is_primal_feasible(&self, mu: &Rat, x: &[Rat]) -> bool {
        x.len() == self.n()
            && x.iter().all(|v| !v.is_negative())
            && self.a.mul_vec(x).iter().zip(&self.b).all(|(ax, b)| *ax >= b.eval(mu))
    }
}

/// Linear complementarity problem `w − Mz = q(μ)`, `w, z ≥ 0`, `wᵀz = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParametricLCP {
    m: Matrix,
    q: Vec<AffineScalar>,
    n_orig: usize,
    mu_min: Rat,
    mu_max: Rat,
}

impl ParametricLCP {
    pub fn new(m: Matrix, q: Vec<AffineScalar>, n_orig: usize, mu_min: Rat, mu_max: Rat) -> Result<Self, ProblemError> {
        if !m.is_square() {
            return Err(ProblemError::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        check_dim("q", m.rows(), q.len())?;
        if n_orig > m.rows() {
            return Err(ProblemError::Dimension { what: "n_orig", expected: m.rows(), found: n_orig });
        }
        if mu_min > mu_max {
            return Err(ProblemError::InvertedInterval { mu_min: Box::new(mu_min), mu_max: Box::new(mu_max) });
        }
        Ok(Self { m, q, n_orig, mu_min, mu_max })
    }

    pub fn k(&self) -> usize {
        self.m.rows()
    }

    pub fn m(&self) -> &Matrix {
        &self.m
    }

    pub fn q(&self) -> &[AffineScalar] {
        &self.q
    }

    pub fn n_orig(&self) -> usize {
        self.n_orig
    }

    pub fn mu_min(&self) -> &Rat {
        &self.mu_min
    }

    pub fn mu_max(&self) -> &Rat {
        &self.mu_max
    }

    pub fn q_at(&self, mu: &Rat) -> Vec<Rat> {
        self.q.iter().map(|a| a.eval(mu)).collect()
    }

    pub fn q_constant(&self) -> Vec<Rat> {
        self.q.iter().map(|a| a.constant.clone()).collect()
    }

    pub fn q_slope(&self) -> Vec<Rat> {
        self.q.iter().map(|a| a.slope.clone()).collect()
    }

    /// Whether `M` has the form `[[S, −Tᵀ], [T, P]]` with `S` (`split × split`)
    /// and `P` symmetric.
    pub fn is_bisymmetric(&self, split: usize) -> bool {
        let k = self.k();
        let m = &self.m;
        (0..k).all(|i| {
            (0..k).all(|j| {
                let same_block = (i < split) == (j < split);
                if same_block {
                    m[(i, j)] == m[(j, i)]
                } else {
                    m[(i, j)] == -m[(j, i)].clone()
                }
            })
        })
    }
}

/// Reduces a QP to its KKT complementarity problem after checking that `Q`
/// is PSD.
pub fn qp_to_lcp(p: &ParametricQP) -> Result<ParametricLCP, ProblemError> {
    qp_to_lcp_with(p, true)
}

/// As [`qp_to_lcp`]; `check_psd = false` skips the PSD test but symmetry is
/// still enforced.
pub fn qp_to_lcp_with(p: &ParametricQP, check_psd: bool) -> Result<ParametricLCP, ProblemError> {
    if !p.q.is_symmetric() {
        return Err(ProblemError::NotSymmetric);
    }
    if check_psd {
        p.validate()?;
    }
    let (n, m) = (p.n(), p.m());
    let k = n + m;
    let mut big = Matrix::zeros(k, k);
    let two = int(2);
    for i in 0..n {
        for j in 0..n {
            big[(i, j)] = &p.q[(i, j)] * &two;
        }
    }
    for r in 0..m {
        for j in 0..n {
            let a = &p.a[(r, j)];
            big[(n + r, j)] = a.clone();
            big[(j, n + r)] = -a.clone();
        }
    }
    let q = p.c.iter().cloned().chain(p.b.iter().cloned().map(|b| -b)).collect();
    ParametricLCP::new(big, q, n, p.mu_min.clone(), p.mu_max.clone())
}

/// Linear back-map from split variables `(x⁺, x⁻)` to the original sign-free
/// variables. Positive parts keep the original positions; negative parts of
/// the free variables are appended in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeVarMap {
    n_orig: usize,
    neg_index: Vec<Option<usize>>,
}

impl FreeVarMap {
    pub fn new(free_mask: &[bool]) -> Self {
        let n = free_mask.len();
        let mut next = n;
        let neg_index = free_mask
            .iter()
            .map(|&free| {
                free.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        Self { n_orig: n, neg_index }
    }

    pub fn n_orig(&self) -> usize {
        self.n_orig
    }

    pub fn n_split(&self) -> usize {
        self.n_orig + self.neg_index.iter().flatten().count()
    }

    /// Split-space index of the negative part of original variable `j`.
    pub fn negative_part(&self, j: usize) -> Option<usize> {
        self.neg_index[j]
    }

    /// `x = x⁺ − x⁻`.
    pub fn recover(&self, split: &[Rat]) -> Vec<Rat> {
        assert_eq!(split.len(), self.n_split());
        (0..self.n_orig)
            .map(|j| match self.neg_index[j] {
                Some(neg) => &split[j] - &split[neg],
                None => split[j].clone(),
            })
            .collect()
    }

    /// Canonical split with `x⁺ = max(x, 0)`, `x⁻ = max(−x, 0)`.
    pub fn split(&self, x: &[Rat]) -> Vec<Rat> {
        assert_eq!(x.len(), self.n_orig);
        let mut out = vec![Rat::zero(); self.n_split()];
        for (j, v) in x.iter().enumerate() {
            match self.neg_index[j] {
                Some(neg) if v.is_negative() => out[neg] = -v.clone(),
                _ => out[j] = v.clone(),
            }
        }
        out
    }

    /// The `n_orig × n_split` matrix `P` with `x = P·x_split`.
    pub fn matrix(&self) -> Matrix {
        let mut p = Matrix::zeros(self.n_orig, self.n_split());
        for j in 0..self.n_orig {
            p[(j, j)] = int(1);
            if let Some(neg) = self.neg_index[j] {
                p[(j, neg)] = int(-1);
            }
        }
        p
    }
}

/// Standard-form data after splitting free variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddedPieces {
    pub q: Matrix,
    pub a: Matrix,
    pub c: Vec<AffineScalar>,
    pub map: FreeVarMap,
}

/// Substitutes `x = x⁺ − x⁻` for every variable flagged in `free_mask`:
/// `Q ↦ PᵀQP`, `A ↦ AP`, `c ↦ Pᵀc`, which keeps `Q` PSD.
pub fn embed_free_variables(
    q: &Matrix,
    a: &Matrix,
    c: &[AffineScalar],
    free_mask: &[bool],
) -> Result<EmbeddedPieces, ProblemError> {
    let n = free_mask.len();
    if !q.is_square() {
        return Err(ProblemError::NotSquare { rows: q.rows(), cols: q.cols() });
    }
    check_dim("Q", n, q.rows())?;
    check_dim("A columns", n, a.cols())?;
    check_dim("c", n, c.len())?;

    let map = FreeVarMap::new(free_mask);
    let p = map.matrix();
    let pt = p.transpose();
    let q_split = pt.mul(q).mul(&p);
    let a_split = a.mul(&p);
    let mut c_split: Vec<AffineScalar> = c.to_vec();
    for (j, cj) in c.iter().enumerate() {
        if map.negative_part(j).is_some() {
            c_split.push(-cj.clone());
        }
    }
    Ok(EmbeddedPieces { q: q_split, a: a_split, c: c_split, map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    fn aff(c: i64, s: i64) -> AffineScalar {
        AffineScalar::new(int(c), int(s))
    }

    #[test]
    fn scalar_qp_to_lcp() {
        let p =
            ParametricQP::new(Matrix::from_i64(&[&[1]]), Matrix::zeros(0, 1), vec![aff(0, 1)], vec![], int(-2), int(2))
                .unwrap();
        let lcp = qp_to_lcp(&p).unwrap();
        assert_eq!(lcp.k(), 1);
        assert_eq!(lcp.m(), &Matrix::from_i64(&[&[2]]));
        assert_eq!(lcp.q(), &[aff(0, 1)]);
        assert_eq!(lcp.n_orig(), 1);
    }

    #[test]
    fn block_layout_with_constraints() {
        let p = ParametricQP::new(
            Matrix::from_i64(&[&[1, 0], &[0, 0]]),
            Matrix::from_i64(&[&[1, 1]]),
            vec![aff(0, 0), aff(0, 0)],
            vec![aff(0, 1)],
            int(0),
            int(1),
        )
        .unwrap();
        let lcp = qp_to_lcp(&p).unwrap();
        assert_eq!(lcp.m(), &Matrix::from_i64(&[&[2, 0, -1], &[0, 0, -1], &[1, 1, 0]]));
        assert_eq!(lcp.q(), &[aff(0, 0), aff(0, 0), aff(0, -1)]);
        assert!(lcp.is_bisymmetric(2));
    }

    #[test]
    fn rejects_empty_and_nonsymmetric() {
        let err = ParametricQP::new(Matrix::zeros(0, 0), Matrix::zeros(0, 0), vec![], vec![], int(0), int(1));
        assert_eq!(err.unwrap_err(), ProblemError::NoVariables);
        let err = ParametricQP::new(
            Matrix::from_i64(&[&[1, 2], &[0, 1]]),
            Matrix::zeros(0, 2),
            vec![aff(0, 0); 2],
            vec![],
            int(0),
            int(1),
        );
        assert_eq!(err.unwrap_err(), ProblemError::NotSymmetric);
        let err =
            ParametricQP::new(Matrix::from_i64(&[&[1]]), Matrix::zeros(0, 1), vec![aff(0, 0)], vec![], int(1), int(0));
        assert!(matches!(err.unwrap_err(), ProblemError::InvertedInterval { .. }));
    }

    #[test]
    fn non_psd_rejected_unless_skipped() {
        let p = ParametricQP::new(
            Matrix::from_i64(&[&[0, 1], &[1, 0]]),
            Matrix::zeros(0, 2),
            vec![aff(0, 0); 2],
            vec![],
            int(0),
            int(1),
        )
        .unwrap();
        assert_eq!(qp_to_lcp(&p).unwrap_err(), ProblemError::NotPsd);
        assert!(qp_to_lcp_with(&p, false).is_ok());
    }

    #[test]
    fn psd_examples() {
        assert!(validate_psd(&Matrix::identity(2)).unwrap());
        assert!(validate_psd(&Matrix::zeros(2, 2)).unwrap());
        assert!(!validate_psd(&Matrix::from_i64(&[&[0, 1], &[1, 0]])).unwrap());
        assert!(!validate_psd(&Matrix::from_i64(&[&[1, 2], &[2, 1]])).unwrap());
        assert!(validate_psd(&Matrix::from_i64(&[&[1, 1], &[1, 1]])).unwrap());
        assert!(!validate_psd(&Matrix::from_i64(&[&[-1]])).unwrap());
        assert!(validate_psd(&Matrix::zeros(0, 0)).unwrap());
        assert_eq!(validate_psd(&Matrix::from_i64(&[&[1, 2], &[3, 1]])).unwrap_err(), ProblemError::NotSymmetric);
        // singular after elimination: [[1,1,0],[1,1,1],[0,1,1]] has a 2x2
        // zero-diagonal block with an off-diagonal entry once the first
        // pivot is removed
        assert!(!validate_psd(&Matrix::from_i64(&[&[1, 1, 0], &[1, 1, 1], &[0, 1, 1]])).unwrap());
    }

    #[test]
    fn splitting_a_single_free_variable() {
        let emb =
            embed_free_variables(&Matrix::from_i64(&[&[1]]), &Matrix::zeros(0, 1), &[aff(0, 1)], &[true]).unwrap();
        assert_eq!(emb.q, Matrix::from_i64(&[&[1, -1], &[-1, 1]]));
        assert_eq!(emb.c, vec![aff(0, 1), aff(0, -1)]);
        assert_eq!(emb.map.recover(&[int(2), int(5)]), vec![int(-3)]);
        assert_eq!(emb.map.split(&[frac(-1, 2)]), vec![int(0), frac(1, 2)]);
    }

    #[test]
    fn mixed_mask_keeps_fixed_variables_in_place() {
        let a = Matrix::from_i64(&[&[1, 2, 3]]);
        let emb =
            embed_free_variables(&Matrix::identity(3), &a, &[aff(1, 0), aff(2, 0), aff(3, 0)], &[false, true, true])
                .unwrap();
        assert_eq!(emb.map.n_split(), 5);
        assert_eq!(emb.a, Matrix::from_i64(&[&[1, 2, 3, -2, -3]]));
        assert_eq!(emb.map.negative_part(0), None);
        assert_eq!(emb.map.negative_part(2), Some(4));
        let x = vec![int(1), int(-2), int(3)];
        assert_eq!(emb.map.recover(&emb.map.split(&x)), x);
        assert_eq!(emb.q.rank(), 3);
        assert!(validate_psd(&emb.q).unwrap());
    }
}
