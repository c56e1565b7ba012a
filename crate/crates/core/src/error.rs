use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A projection or dual problem has an empty feasible set.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An iterative solver ran out of its iteration or node budget.
    #[error("budget exceeded after {iterations} iterations (residual {residual:.3e})")]
    BudgetExceeded { iterations: usize, residual: f64 },

    /// A metric is undefined for the supplied data.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// A dataset file could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// The dual oracle stopped before certifying its duality gap; carries the
    /// best feasible iterate, which still yields a valid cut.
    #[error("dual oracle budget exceeded (duality gap {:.3e})", .0.gap)]
    OracleBudget(Box<crate::dual::DualSolution>),

    /// The master search hit its node limit; carries the incumbent.
    #[error("master node limit reached (gap {:.3e})", .0.proof_gap)]
    MasterBudget(Box<crate::master::MasterSolution>),

    /// A lasso solve did not reach its tolerance; carries the last iterate.
    #[error("lasso solver budget exceeded (residual {:.3e})", .0.residual)]
    LassoBudget(Box<crate::lasso::LassoFit>),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
