//! Exact solution paths for parametric convex quadratic programs
//!
//! ```text
//! minimize  xᵀQx + c(μ)ᵀx   subject to  Ax ≥ b(μ),  x ≥ 0,   μ ∈ [μ_min, μ_max]
//! ```
//!
//! with `c` and `b` affine in `μ`. The program is rewritten as a parametric
//! linear complementarity problem and solved with the least-index criss-cross
//! method; the optimal `x(μ)` is then traced across the whole interval as a
//! sequence of affine segments, warm-starting the pivoting at every bend.
//! All arithmetic is exact over the rationals.
//!
//! ```
//! use pqpath::{parse_problem, qp_to_lcp, trace_path, Rat};
//!
//! let file = parse_problem("pqp 1\nn 1 m 0\nmu -2 2\nQ\n1\nc0 0\nc1 1\n").unwrap();
//! let path = trace_path(&qp_to_lcp(&file.qp).unwrap()).unwrap();
//! let x = path.eval(&Rat::from_integer((-1).into())).unwrap();
//! assert_eq!(x.x().unwrap(), &[Rat::new(1.into(), 2.into())]);
//! ```

pub mod builders;
pub mod crisscross;
pub mod format;
pub mod matrix;
pub mod oracle;
pub mod path;
pub mod problem;
pub mod rational;

pub use builders::{build_cbc, build_svm_dual, CbcProblem, ChoiceObservation, ConjointDesign, SumAlpha, SvmInstance};
pub use crisscross::{criss_cross_solve, Basis, Fault, Outcome, SolveOptions};
pub use format::{parse_problem, write_path, write_problem, OutputMode, ParseError, ProblemFile};
pub use matrix::Matrix;
pub use oracle::{solve_fixed, verify_path, VerifyReport};
pub use path::{trace_path, trace_path_with, PathPiece, PathValue, SolutionPath, TraceOptions};
pub use problem::{qp_to_lcp, Objective, ParametricLCP, ParametricQP, ProblemError};
pub use rational::{parse_rat, AffineScalar, Rat};
