//! Shared fixtures and independent checks for the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pqpath::builders::{
    build_cbc, build_svm_dual, CbcProblem, ChoiceObservation, ConjointDesign, SumAlpha, SvmInstance,
};
use pqpath::crisscross::{Basis, Iterate};
use pqpath::matrix::Matrix;
use pqpath::path::{PathPiece, SolutionPath};
use pqpath::problem::ParametricQP;
use pqpath::rational::{frac, int, AffineScalar, Rat};

pub fn ints(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&x| int(x)).collect()
}

pub fn affine(pairs: &[(i64, i64)]) -> Vec<AffineScalar> {
    pairs.iter().map(|&(c, s)| AffineScalar::new(int(c), int(s))).collect()
}

/// min x² + μx, x ≥ 0, μ ∈ [−2, 2].
pub fn scalar_qp() -> ParametricQP {
    ParametricQP::new(Matrix::from_i64(&[&[1]]), Matrix::zeros(0, 1), affine(&[(0, 1)]), vec![], int(-2), int(2))
        .unwrap()
}

/// min x s.t. x ≥ μ, x ≥ 0 with Q = 0, μ ∈ [−1, 1].
pub fn singular_lp() -> ParametricQP {
    ParametricQP::new(
        Matrix::zeros(1, 1),
        Matrix::from_i64(&[&[1]]),
        affine(&[(1, 0)]),
        affine(&[(0, 1)]),
        int(-1),
        int(1),
    )
    .unwrap()
}

/// x ≥ μ and −x ≥ 0: infeasible for μ > 0.
pub fn infeasible_qp() -> ParametricQP {
    ParametricQP::new(
        Matrix::from_i64(&[&[1]]),
        Matrix::from_i64(&[&[1], &[-1]]),
        affine(&[(0, 0)]),
        affine(&[(0, 1), (0, 0)]),
        int(-1),
        int(1),
    )
    .unwrap()
}

/// Optimal set `{x ≥ 0 : x₁ − x₂ = −μ/2}` for every μ:
/// Q = [[1,−1],[−1,1]], c = (μ, −μ).
pub fn ray_qp() -> ParametricQP {
    ParametricQP::new(
        Matrix::from_i64(&[&[1, -1], &[-1, 1]]),
        Matrix::zeros(0, 2),
        affine(&[(0, 1), (0, -1)]),
        vec![],
        int(-1),
        int(1),
    )
    .unwrap()
}

/// Linear objective `μx₁ − μx₂` over `x₁ + x₂ ≤ 1`: the optimum jumps from
/// (1, 0) to (0, 1) at μ = 0.
pub fn jump_qp() -> ParametricQP {
    ParametricQP::new(
        Matrix::zeros(2, 2),
        Matrix::from_i64(&[&[-1, -1]]),
        affine(&[(0, 1), (0, -1)]),
        affine(&[(-1, 0)]),
        int(-1),
        int(1),
    )
    .unwrap()
}

/// Points +1 at x = 1 and −1 at x = −1; α₁ = α₂ = min(C, ½).
pub fn svm_toy() -> ParametricQP {
    let inst = SvmInstance::from_points(&[ints(&[1]), ints(&[-1])], &[1, -1]).unwrap();
    build_svm_dual(&inst, frac(1, 8), int(2), SumAlpha::Zero).unwrap()
}

/// Random pQP with `Q = GᵀG`, `rank G ≤ 2`, entries in [−3, 3] and slopes
/// in [−2, 2].
pub fn random_qp(rng: &mut impl Rng) -> ParametricQP {
    let n = rng.gen_range(1..=4);
    let m = rng.gen_range(0..=3);
    let r = rng.gen_range(1..=2);
    let mut entry = |lo: i64, hi: i64| int(rng.gen_range(lo..=hi));
    let g = Matrix::from_rows(n, (0..r).map(|_| (0..n).map(|_| entry(-3, 3)).collect()).collect());
    let q = g.transpose().mul(&g);
    let a = Matrix::from_rows(n, (0..m).map(|_| (0..n).map(|_| entry(-3, 3)).collect()).collect());
    let c = (0..n).map(|_| AffineScalar::new(entry(-3, 3), entry(-2, 2))).collect();
    let b = (0..m).map(|_| AffineScalar::new(entry(-3, 3), entry(-2, 2))).collect();
    ParametricQP::new(q, a, c, b, int(-3), int(3)).unwrap()
}

/// Synthetic conjoint study: uniformly random distinct option pairs, the
/// winner chosen by a planted additive utility, and each answer flipped with
/// probability `noise`.
pub fn synthetic_cbc(
    levels: &[usize],
    choices: usize,
    noise: f64,
    seed: u64,
) -> (ConjointDesign, Vec<ChoiceObservation>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let design = ConjointDesign::new(levels.to_vec()).unwrap();
    let worth: Vec<Vec<i64>> = levels.iter().map(|&l| (0..l).map(|_| rng.gen_range(-3..=3)).collect()).collect();
    let utility = |o: &[usize]| o.iter().enumerate().map(|(a, &l)| worth[a][l]).sum::<i64>();
    let mut out = Vec::with_capacity(choices);
    while out.len() < choices {
        let a: Vec<usize> = levels.iter().map(|&l| rng.gen_range(0..l)).collect();
        let b: Vec<usize> = levels.iter().map(|&l| rng.gen_range(0..l)).collect();
        let (ua, ub) = (utility(&a), utility(&b));
        if a == b || ua == ub {
            continue;
        }
        let (mut w, mut l) = if ua > ub { (a, b) } else { (b, a) };
        if rng.gen_bool(noise) {
            std::mem::swap(&mut w, &mut l);
        }
        out.push(ChoiceObservation::new(w, l));
    }
    (design, out)
}

pub fn cbc_instance() -> CbcProblem {
    let (design, obs) = synthetic_cbc(&[3, 3, 4], 40, 0.1, 7);
    build_cbc(&design, &obs, int(1), int(10_000)).unwrap()
}

fn eval_all(v: &[AffineScalar], mu: &Rat) -> Vec<Rat> {
    v.iter().map(|a| a.eval(mu)).collect()
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

/// Optimality conditions for `min xᵀQx + cᵀx, Ax ≥ b, x ≥ 0` with
/// multipliers `y`: primal feasibility `v = Ax − b ≥ 0, x ≥ 0`, dual
/// feasibility `u = 2Qx + c − Aᵀy ≥ 0, y ≥ 0`, and complementarity
/// `xᵀu = yᵀv = 0`. Returns a description of each violated condition.
pub fn kkt_violations(qp: &ParametricQP, mu: &Rat, x: &[Rat], y: &[Rat]) -> Vec<String> {
    let (n, m) = (qp.n(), qp.m());
    let c = eval_all(qp.c(), mu);
    let b = eval_all(qp.b(), mu);
    let mut bad = Vec::new();
    let v: Vec<Rat> = (0..m).map(|i| dot(qp.a().row(i), x) - &b[i]).collect();
    let u: Vec<Rat> = (0..n)
        .map(|j| {
            let qx: Rat = (0..n).fold(Rat::zero(), |acc, k| acc + &qp.q()[(j, k)] * &x[k]);
            let aty: Rat = (0..m).fold(Rat::zero(), |acc, i| acc + &qp.a()[(i, j)] * &y[i]);
            qx * int(2) + &c[j] - aty
        })
        .collect();
    let neg = |v: &[Rat]| v.iter().any(|e| e.is_negative());
    if neg(x) || neg(&v) {
        bad.push(format!("primal infeasible at μ={mu}"));
    }
    if neg(y) || neg(&u) {
        bad.push(format!("dual infeasible at μ={mu}"));
    }
    if !dot(x, &u).is_zero() || !dot(y, &v).is_zero() {
        bad.push(format!("complementarity violated at μ={mu}"));
    }
    bad
}

/// Structural checks on a traced path; empty when everything holds.
pub fn path_violations(qp: &ParametricQP, path: &SolutionPath) -> Vec<String> {
    let obj = qp.objective();
    let mut bad = Vec::new();
    let half = frac(1, 2);

    // KKT and piecewise linearity on each segment
    for s in path.segments() {
        let mid = (&s.mu_lo + &s.mu_hi) * &half;
        for mu in [&s.mu_lo, &mid, &s.mu_hi] {
            bad.extend(kkt_violations(qp, mu, &s.x_at(mu), &s.y_at(mu)));
        }
        let avg: Vec<Rat> = s.x_at(&s.mu_lo).iter().zip(s.x_at(&s.mu_hi)).map(|(a, b)| (a + b) * &half).collect();
        if avg != s.x_at(&mid) {
            bad.push(format!("segment [{}, {}] is not affine", s.mu_lo, s.mu_hi));
        }
    }

    // coverage and order
    let mut cursor = path.mu_min.clone();
    for piece in &path.pieces {
        if let PathPiece::Jump(j) = piece {
            if j.mu != cursor {
                bad.push(format!("jump at {} away from the current end {}", j.mu, cursor));
            }
            continue;
        }
        if piece.mu_lo() != &cursor {
            bad.push(format!("gap or overlap at {cursor}: next piece starts at {}", piece.mu_lo()));
        }
        if piece.mu_hi() < piece.mu_lo() {
            bad.push(format!("inverted piece at {}", piece.mu_lo()));
        }
        cursor = piece.mu_hi().clone();
    }
    if cursor != path.mu_max {
        bad.push(format!("path ends at {cursor}, not {}", path.mu_max));
    }

    // objective continuity between consecutive segments and across jumps
    let mut prev: Option<(Rat, Rat)> = None;
    for piece in &path.pieces {
        match piece {
            PathPiece::Segment(s) => {
                let start = obj.value(&s.mu_lo, &s.x_at(&s.mu_lo));
                if let Some((mu, value)) = &prev {
                    if *mu == s.mu_lo && *value != start {
                        bad.push(format!("objective discontinuous at {mu}"));
                    }
                }
                prev = Some((s.mu_hi.clone(), obj.value(&s.mu_hi, &s.x_at(&s.mu_hi))));
            }
            PathPiece::Jump(j) => {
                if obj.value(&j.mu, &j.x_from) != obj.value(&j.mu, &j.x_to) {
                    bad.push(format!("objective changes across the jump at {}", j.mu));
                }
            }
            PathPiece::Infeasible(i) => {
                if !i.certificate.is_valid() {
                    bad.push(format!("invalid certificate on [{}, {}]", i.mu_lo, i.mu_hi));
                }
                prev = None;
            }
        }
    }

    // no basis reused by two segments of positive length
    let mut seen = HashSet::new();
    for s in path.segments().filter(|s| s.mu_lo < s.mu_hi) {
        if !seen.insert(s.basis.mask().to_vec()) {
            bad.push(format!("basis of segment [{}, {}] already used", s.mu_lo, s.mu_hi));
        }
    }
    bad
}

/// Observer for every criss-cross iterate: checks `w − Mz = q`,
/// `w ∘ z = 0`, and that no basis repeats within a single solve.
pub struct IterateChecker {
    m: Matrix,
    visited: HashSet<Vec<bool>>,
    pub iterates: usize,
    pub solves: usize,
    pub violations: Vec<String>,
}

impl IterateChecker {
    pub fn new(m: &Matrix) -> Self {
        Self { m: m.clone(), visited: HashSet::new(), iterates: 0, solves: 0, violations: Vec::new() }
    }

    pub fn observe(&mut self, it: &Iterate<'_>) {
        self.iterates += 1;
        let k = self.m.rows();
        let basis: &Basis = it.basis;
        for part in 0..2 {
            let lam = if part == 0 { &it.lambda.s } else { &it.lambda.t };
            let q = if part == 0 { &it.q.s } else { &it.q.t };
            let w: Vec<Rat> = (0..k).map(|j| if basis.contains(j) { lam[j].clone() } else { Rat::zero() }).collect();
            let z: Vec<Rat> = (0..k).map(|j| if basis.contains(j) { Rat::zero() } else { lam[j].clone() }).collect();
            if w.iter().zip(&z).any(|(a, b)| !(a * b).is_zero()) {
                self.violations.push("w ∘ z ≠ 0".into());
            }
            for i in 0..k {
                let mz = dot(self.m.row(i), &z);
                if w[i].clone() - mz != q[i] {
                    self.violations.push(format!("w − Mz ≠ q in row {i}"));
                    break;
                }
            }
        }
        if !self.visited.insert(basis.mask().to_vec()) {
            self.violations.push(format!("basis repeated within a solve: {:?}", basis.members()));
        }
        if it.pivot.is_none() {
            self.visited.clear();
            self.solves += 1;
        }
    }
}
