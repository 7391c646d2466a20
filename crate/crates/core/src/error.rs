use thiserror::Error;

use crate::model::{DaId, NodeId, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no compatibility scope relates {a} and {b}")]
    UnrelatedPair { a: DaId, b: DaId },

    #[error("unknown design alternative {0}")]
    UnknownDa(DaId),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("group {0} has no criterion with a value for every alternative")]
    NoActiveCriteria(NodeId),

    #[error("quality vectors differ in shape: k {k1} vs {k2}, m {m1} vs {m2}")]
    ShapeMismatch {
        k1: usize,
        k2: usize,
        m1: u32,
        m2: u32,
    },

    #[error("profiles cover different groups")]
    ProfileMismatch,

    #[error("every composition at node {0} contains an incompatible pair")]
    EmptyFront(NodeId),

    #[error("design space of {size} profiles exceeds the enumeration cap {cap}")]
    CapExceeded { size: u128, cap: u128 },

    #[error("minimum total cost {min_cost} exceeds budget {budget}")]
    Infeasible { min_cost: f64, budget: f64 },

    #[error("cost {0} needs more than 3 decimal places for the exact solver")]
    CostPrecision(f64),

    #[error("no cost/profit estimate for {0}")]
    MissingItemData(DaId),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model is invalid ({} error(s)); first: {}", .0.errors.len(), .0.errors.first().map(|e| e.message.as_str()).unwrap_or(""))]
    Validation(ValidationReport),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnrelatedPair { .. } => "UNRELATED_PAIR",
            Error::UnknownDa(_) => "UNKNOWN_DA",
            Error::UnknownNode(_) => "UNKNOWN_NODE",
            Error::NoActiveCriteria(_) => "NO_ACTIVE_CRITERIA",
            Error::ShapeMismatch { .. } | Error::ProfileMismatch => "SHAPE_MISMATCH",
            Error::EmptyFront(_) => "EMPTY_FRONT",
            Error::CapExceeded { .. } => "CAP_EXCEEDED",
            Error::Infeasible { .. } => "INFEASIBLE",
            Error::CostPrecision(_) => "COST_PRECISION",
            Error::MissingItemData(_) => "MISSING_ITEM_DATA",
            Error::InvalidInput(_) => "INVALID_INPUT",
            Error::Validation(_) => "VALIDATION_ERROR",
            Error::Parse { .. } => "PARSE_ERROR",
        }
    }

    /// Infeasibility is reported separately from hard errors (exit code 2).
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible { .. } | Error::EmptyFront(_))
    }
}
