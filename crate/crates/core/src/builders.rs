//! Standard-form problem builders for two regularization paths: the
//! soft-margin SVM dual with `C` as parameter, and choice-based conjoint
//! analysis with hinge-penalized choice constraints.
//!
//! Both objectives are stated with a `½` factor; the builders fold it into
//! `Q` because the solver minimizes `xᵀQx + c(μ)ᵀx`.

use thiserror::Error;

use crate::matrix::Matrix;
use crate::problem::{embed_free_variables, validate_psd, FreeVarMap, Objective, ParametricQP, ProblemError};
use crate::rational::{frac, int, AffineScalar, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("label {0} is not +1 or -1")]
    BadLabel(i64),
    #[error("{labels} labels for {points} points")]
    LabelCount { points: usize, labels: usize },
    #[error("points have inconsistent dimensions")]
    RaggedPoints,
    #[error("instance has no points")]
    Empty,
    #[error("kernel matrix is not positive semidefinite")]
    KernelNotPsd,
    #[error("attribute {attribute} has {levels} levels; at least 2 are required")]
    TooFewLevels { attribute: usize, levels: usize },
    #[error("no choice observations")]
    NoChoices,
    #[error("choice {choice}: expected {expected} level indices, found {found}")]
    TupleLength { choice: usize, expected: usize, found: usize },
    #[error("choice {choice}: level {level} of attribute {attribute} is out of range")]
    LevelOutOfRange { choice: usize, attribute: usize, level: usize },
    #[error("choice {choice}: winner and loser are the same option")]
    IdenticalOptions { choice: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Labeled training set, kept as its kernel matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvmInstance {
    kernel: Matrix,
    labels: Vec<i8>,
}

fn check_labels(labels: &[i64]) -> Result<Vec<i8>, BuildError> {
    labels
        .iter()
        .map(|&l| match l {
            1 => Ok(1),
            -1 => Ok(-1),
            other => Err(BuildError::BadLabel(other)),
        })
        .collect()
}

impl SvmInstance {
    /// Linear kernel `K_ij = ⟨x_i, x_j⟩`.
    pub fn from_points(points: &[Vec<Rat>], labels: &[i64]) -> Result<Self, BuildError> {
        if points.is_empty() {
            return Err(BuildError::Empty);
        }
        if points.len() != labels.len() {
            return Err(BuildError::LabelCount { points: points.len(), labels: labels.len() });
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(BuildError::RaggedPoints);
        }
        let labels = check_labels(labels)?;
        let x = Matrix::from_rows(dim, points.to_vec());
        let kernel = x.mul(&x.transpose());
        Ok(Self { kernel, labels })
    }

    /// Precomputed kernel; must be symmetric PSD.
    pub fn from_kernel(kernel: Matrix, labels: &[i64]) -> Result<Self, BuildError> {
        if kernel.rows() == 0 {
            return Err(BuildError::Empty);
        }
        if kernel.rows() != labels.len() {
            return Err(BuildError::LabelCount { points: kernel.rows(), labels: labels.len() });
        }
        let labels = check_labels(labels)?;
        if !validate_psd(&kernel)? {
            return Err(BuildError::KernelNotPsd);
        }
        Ok(Self { kernel, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn kernel(&self) -> &Matrix {
        &self.kernel
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }
}

/// Right-hand side of the dual equality `Σ yᵢαᵢ = const`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumAlpha {
    /// Standard dual, `Σ yᵢαᵢ = 0`.
    #[default]
    Zero,
    /// `Σ yᵢαᵢ = 1`.
    One,
}

/// SVM dual as a minimization over `α ≥ 0` with `μ = C`:
///
/// ```text
///   minimize   ½ Σᵢⱼ αᵢαⱼ yᵢyⱼ Kᵢⱼ − Σᵢ αᵢ
///   subject to Σ yᵢαᵢ ≥ s,  −Σ yᵢαᵢ ≥ −s,  −αᵢ ≥ −C
/// ```
pub fn build_svm_dual(
    inst: &SvmInstance,
    c_min: Rat,
    c_max: Rat,
    sum_alpha: SumAlpha,
) -> Result<ParametricQP, BuildError> {
    let n = inst.len();
    let half = frac(1, 2);
    let mut q = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sign = int((inst.labels[i] * inst.labels[j]) as i64);
            q[(i, j)] = &inst.kernel[(i, j)] * &sign * &half;
        }
    }
    let target = match sum_alpha {
        SumAlpha::Zero => int(0),
        SumAlpha::One => int(1),
    };
    let y: Vec<Rat> = inst.labels.iter().map(|&l| int(l as i64)).collect();
    let mut rows = vec![y.clone(), y.iter().map(|v| -v.clone()).collect()];
    let mut b = vec![AffineScalar::constant(target.clone()), AffineScalar::constant(-target)];
    for i in 0..n {
        let mut row = vec![int(0); n];
        row[i] = int(-1);
        rows.push(row);
        b.push(AffineScalar::new(int(0), int(-1)));
    }
    let a = Matrix::from_rows(n, rows);
    let c = vec![AffineScalar::constant(int(-1)); n];
    let qp = ParametricQP::new(q, a, c, b, c_min, c_max)?;
    qp.validate()?;
    Ok(qp)
}

/// Attribute structure of the option space: `level_counts[i] = |Aᵢ|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjointDesign {
    level_counts: Vec<usize>,
}

impl ConjointDesign {
    pub fn new(level_counts: Vec<usize>) -> Result<Self, BuildError> {
        for (attribute, &levels) in level_counts.iter().enumerate() {
            if levels < 2 {
                return Err(BuildError::TooFewLevels { attribute, levels });
            }
        }
        Ok(Self { level_counts })
    }

    pub fn attributes(&self) -> usize {
        self.level_counts.len()
    }

    pub fn level_counts(&self) -> &[usize] {
        &self.level_counts
    }

    pub fn total_levels(&self) -> usize {
        self.level_counts.iter().sum()
    }

    /// Position of `(attribute, level)` in the part-worth vector.
    pub fn offset(&self, attribute: usize, level: usize) -> usize {
        self.level_counts[..attribute].iter().sum::<usize>() + level
    }

    /// Characteristic vector `χ_a` of an option.
    pub fn characteristic(&self, option: &[usize]) -> Vec<i64> {
        let mut chi = vec![0; self.total_levels()];
        for (attr, &level) in option.iter().enumerate() {
            chi[self.offset(attr, level)] = 1;
        }
        chi
    }
}

/// Option `winner` was preferred over `loser`. Level indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChoiceObservation {
    pub winner: Vec<usize>,
    pub loser: Vec<usize>,
}

impl ChoiceObservation {
    pub fn new(winner: Vec<usize>, loser: Vec<usize>) -> Self {
        Self { winner, loser }
    }
}

/// Conjoint problem in standard form together with the maps back to
/// part-worths.
///
/// Pre-split variables are `(v, ξ)`; after splitting the free part-worths
/// the layout is `(v⁺, ξ, v⁻)`, i.e. `2·levels + choices` variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CbcProblem {
    pub qp: ParametricQP,
    pub design: ConjointDesign,
    pub map: FreeVarMap,
    pub choices: usize,
    original_q: Matrix,
    original_c: Vec<AffineScalar>,
}

impl CbcProblem {
    /// `(v, ξ)` from a split solution.
    pub fn recover(&self, split: &[Rat]) -> Vec<Rat> {
        self.map.recover(split)
    }

    /// Part-worth values grouped by attribute.
    pub fn part_worths(&self, split: &[Rat]) -> Vec<Vec<Rat>> {
        let v = self.recover(split);
        let mut out = Vec::with_capacity(self.design.attributes());
        let mut at = 0;
        for &levels in self.design.level_counts() {
            out.push(v[at..at + levels].to_vec());
            at += levels;
        }
        out
    }

    pub fn slacks(&self, split: &[Rat]) -> Vec<Rat> {
        let m = self.design.total_levels();
        self.recover(split)[m..].to_vec()
    }

    /// `½‖v‖² + C·Σξ` on the unsplit variables.
    pub fn original_objective(&self) -> Objective {
        Objective { q: self.original_q.clone(), c: self.original_c.clone() }
    }
}

/// Builds
///
/// ```text
///   minimize   ½‖v‖² + C Σⱼ ξⱼ
///   subject to n_abᵀv + ξⱼ ≥ 1,  ξ ≥ 0,  v free
/// ```
///
/// with `n_ab = χ_a − χ_b` per observation and `μ = C`. Contradictory
/// observations are kept as-is.
pub fn build_cbc(
    design: &ConjointDesign,
    choices: &[ChoiceObservation],
    c_min: Rat,
    c_max: Rat,
) -> Result<CbcProblem, BuildError> {
    if choices.is_empty() {
        return Err(BuildError::NoChoices);
    }
    let attrs = design.attributes();
    for (choice, obs) in choices.iter().enumerate() {
        for option in [&obs.winner, &obs.loser] {
            if option.len() != attrs {
                return Err(BuildError::TupleLength { choice, expected: attrs, found: option.len() });
            }
            for (attribute, &level) in option.iter().enumerate() {
                if level >= design.level_counts[attribute] {
                    return Err(BuildError::LevelOutOfRange { choice, attribute, level });
                }
            }
        }
        if obs.winner == obs.loser {
            return Err(BuildError::IdenticalOptions { choice });
        }
    }

    let m = design.total_levels();
    let s = choices.len();
    let dim = m + s;
    let mut q = Matrix::zeros(dim, dim);
    for i in 0..m {
        q[(i, i)] = frac(1, 2);
    }
    let mut c = vec![AffineScalar::constant(int(0)); m];
    c.extend(std::iter::repeat_n(AffineScalar::new(int(0), int(1)), s));
    let mut a = Matrix::zeros(s, dim);
    for (j, obs) in choices.iter().enumerate() {
        let win = design.characteristic(&obs.winner);
        let lose = design.characteristic(&obs.loser);
        for l in 0..m {
            a[(j, l)] = int(win[l] - lose[l]);
        }
        a[(j, m + j)] = int(1);
    }
    let b = vec![AffineScalar::constant(int(1)); s];

    let mut free = vec![true; m];
    free.extend(std::iter::repeat_n(false, s));
    let emb = embed_free_variables(&q, &a, &c, &free)?;
    assert!(emb.q.rank() < emb.q.rows(), "conjoint objective must be singular");
    let qp = ParametricQP::new(emb.q, emb.a, emb.c, b, c_min, c_max)?;
    qp.validate()?;
    Ok(CbcProblem { qp, design: design.clone(), map: emb.map, choices: s, original_q: q, original_c: c })
}

/// `n_ab = χ_a − χ_b` for one observation.
pub fn choice_vector(design: &ConjointDesign, obs: &ChoiceObservation) -> Vec<i64> {
    let win = design.characteristic(&obs.winner);
    let lose = design.characteristic(&obs.loser);
    win.iter().zip(&lose).map(|(a, b)| a - b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn two_point_svm_shape() {
        let inst = SvmInstance::from_points(&[vec![int(1), int(0)], vec![int(-1), int(0)]], &[1, -1]).unwrap();
        let qp = build_svm_dual(&inst, frac(1, 8), int(2), SumAlpha::Zero).unwrap();
        let h = frac(1, 2);
        assert_eq!(qp.q(), &Matrix::from_rows(2, vec![vec![h.clone(), h.clone()], vec![h.clone(), h]]));
        assert_eq!(qp.q().rank(), 1);
        assert_eq!(qp.c(), &[AffineScalar::constant(int(-1)), AffineScalar::constant(int(-1))]);
        assert_eq!(qp.m(), 4);
        // equality as a pair of opposing rows
        assert_eq!(qp.a().row(0), &[int(1), int(-1)]);
        assert_eq!(qp.a().row(1), &[int(-1), int(1)]);
        assert_eq!(qp.b()[0], AffineScalar::constant(int(0)));
        assert_eq!(qp.b()[1], AffineScalar::constant(int(0)));
        // box rows −αᵢ ≥ −C
        assert_eq!(qp.a().row(2), &[int(-1), int(0)]);
        assert_eq!(qp.b()[2], AffineScalar::new(int(0), int(-1)));
    }

    #[test]
    fn svm_sum_alpha_one_variant() {
        let inst = SvmInstance::from_points(&[vec![int(1)], vec![int(2)]], &[1, 1]).unwrap();
        let qp = build_svm_dual(&inst, int(1), int(2), SumAlpha::One).unwrap();
        assert_eq!(qp.b()[0], AffineScalar::constant(int(1)));
        assert_eq!(qp.b()[1], AffineScalar::constant(int(-1)));
    }

    #[test]
    fn svm_input_errors() {
        assert_eq!(SvmInstance::from_points(&[vec![int(1)]], &[2]).unwrap_err(), BuildError::BadLabel(2));
        assert!(matches!(
            SvmInstance::from_points(&[vec![int(1)]], &[1, 1]).unwrap_err(),
            BuildError::LabelCount { .. }
        ));
        assert_eq!(
            SvmInstance::from_kernel(Matrix::from_i64(&[&[0, 1], &[1, 0]]), &[1, -1]).unwrap_err(),
            BuildError::KernelNotPsd
        );
        assert!(SvmInstance::from_kernel(Matrix::from_i64(&[&[2, 1], &[1, 2]]), &[1, -1]).is_ok());
    }

    #[test]
    fn cbc_small_instance() {
        let design = ConjointDesign::new(vec![2, 2]).unwrap();
        let obs = ChoiceObservation::new(vec![0, 0], vec![1, 1]);
        assert_eq!(choice_vector(&design, &obs), vec![1, -1, 1, -1]);
        let cbc = build_cbc(&design, &[obs], int(1), int(10)).unwrap();
        assert_eq!(cbc.qp.n(), 9);
        assert_eq!(cbc.qp.m(), 1);
        // (v⁺, ξ, v⁻)
        assert_eq!(cbc.qp.a().row(0), &[1, -1, 1, -1, 1, -1, 1, -1, 1].map(int)[..]);
        let h = frac(1, 2);
        for l in 0..4 {
            let neg = cbc.map.negative_part(l).unwrap();
            assert_eq!(cbc.qp.q()[(l, l)], h);
            assert_eq!(cbc.qp.q()[(neg, neg)], h);
            assert_eq!(cbc.qp.q()[(l, neg)], -h.clone());
        }
        assert_eq!(cbc.qp.q()[(4, 4)], int(0));
        assert_eq!(cbc.qp.c()[4], AffineScalar::new(int(0), int(1)));
        assert!(validate_psd(cbc.qp.q()).unwrap());
    }

    #[test]
    fn six_attribute_study_dimensions() {
        let design = ConjointDesign::new(vec![3, 5, 6, 2, 3, 5]).unwrap();
        assert_eq!(design.total_levels(), 24);
        let choices: Vec<_> = (0..7)
            .map(|i| ChoiceObservation::new(vec![i % 3, 0, 0, 0, 0, 0], vec![(i + 1) % 3, 1, 0, 0, 0, 0]))
            .collect();
        let cbc = build_cbc(&design, &choices, int(1), int(2)).unwrap();
        assert_eq!(cbc.qp.n(), 2 * 24 + 7);
        assert_eq!(cbc.qp.m(), 7);
        assert_eq!(
            cbc.part_worths(&vec![int(0); cbc.qp.n()]).iter().map(Vec::len).collect::<Vec<_>>(),
            vec![3, 5, 6, 2, 3, 5]
        );
    }

    #[test]
    fn cbc_input_errors() {
        assert!(matches!(ConjointDesign::new(vec![2, 1]), Err(BuildError::TooFewLevels { attribute: 1, levels: 1 })));
        let design = ConjointDesign::new(vec![2, 2]).unwrap();
        assert_eq!(build_cbc(&design, &[], int(0), int(1)).unwrap_err(), BuildError::NoChoices);
        let bad = ChoiceObservation::new(vec![0, 2], vec![1, 1]);
        assert!(matches!(
            build_cbc(&design, &[bad], int(0), int(1)).unwrap_err(),
            BuildError::LevelOutOfRange { choice: 0, attribute: 1, level: 2 }
        ));
        let same = ChoiceObservation::new(vec![0, 1], vec![0, 1]);
        assert!(matches!(
            build_cbc(&design, &[same], int(0), int(1)).unwrap_err(),
            BuildError::IdenticalOptions { .. }
        ));
        let short = ChoiceObservation::new(vec![0], vec![1, 1]);
        assert!(matches!(build_cbc(&design, &[short], int(0), int(1)).unwrap_err(), BuildError::TupleLength { .. }));
    }

    #[test]
    fn contradictory_choices_are_both_kept() {
        let design = ConjointDesign::new(vec![2, 2]).unwrap();
        let ab = ChoiceObservation::new(vec![0, 0], vec![1, 1]);
        let ba = ChoiceObservation::new(vec![1, 1], vec![0, 0]);
        let cbc = build_cbc(&design, &[ab, ba], int(1), int(1)).unwrap();
        assert_eq!(cbc.qp.m(), 2);
        let r0: Vec<Rat> = cbc.qp.a().row(0)[..4].to_vec();
        let r1: Vec<Rat> = cbc.qp.a().row(1)[..4].iter().map(|v| -v.clone()).collect();
        assert_eq!(r0, r1);
        assert!(cbc.qp.q().rank() < cbc.qp.n());
        let zero = Rat::zero();
        assert!(cbc.original_objective().value(&int(1), &vec![zero; 6]).is_zero());
    }
}
