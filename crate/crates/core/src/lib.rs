//! Exact sparse classification.
//!
//! Solves `min_w sum_i l(y_i, w'x_i + b) + |w|^2 / (2 gamma)` subject to
//! `|w|_0 <= k` by outer approximation over the support, with a dual
//! oracle producing cuts and a branch-and-bound master choosing supports.
//! Also ships L1 baselines, a synthetic data generator, evaluation
//! metrics and executable support-recovery theory.

pub mod data;
pub mod datagen;
pub mod dual;
pub mod error;
pub mod io;
pub mod lasso;
pub mod losses;
pub mod master;
pub mod metrics;
pub mod oa;
mod par;
pub mod theory;
mod timing;

pub use data::{Dataset, SupportMask};
pub use dual::{evaluate_support, Cut, DualSolution, InnerSolver, OracleOptions};
pub use error::{Error, Result};
pub use lasso::{fit_lasso_logistic, fit_lasso_svm, lambda_grid, LassoFit};
pub use losses::{Extended, LossKind};
pub use master::{solve_master, CutPool, MasterOptions, MasterSolution};
pub use oa::{fit_sparse, FitOptions, FitResult};
