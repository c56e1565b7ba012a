use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sparsecls::LossKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SparseLogistic,
    SparseSvm,
    LassoLogistic,
    LassoSvm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::SparseLogistic, Method::SparseSvm, Method::LassoLogistic, Method::LassoSvm];

    pub fn name(self) -> &'static str {
        match self {
            Method::SparseLogistic => "sparse-logistic",
            Method::SparseSvm => "sparse-svm",
            Method::LassoLogistic => "lasso-logistic",
            Method::LassoSvm => "lasso-svm",
        }
    }

    pub fn kind(self) -> LossKind {
        match self {
            Method::SparseLogistic | Method::LassoLogistic => LossKind::Logistic,
            Method::SparseSvm | Method::LassoSvm => LossKind::Hinge,
        }
    }

    pub fn is_sparse(self) -> bool {
        matches!(self, Method::SparseLogistic | Method::SparseSvm)
    }

    /// Ridge parameter used when none is configured.
    pub fn default_gamma(self) -> f64 {
        match self.kind() {
            LossKind::Logistic => 0.03,
            _ => 0.01,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                format!("unknown method {s:?}; expected one of {}", names.join(", "))
            })
    }
}
