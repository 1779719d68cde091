use std::collections::BTreeMap;

use thiserror::Error;

/// A sample point: symbol key -> value.
pub type Point = BTreeMap<String, f64>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("division by zero (denominator {value:e} within 1e-12 of 0)")]
    DivisionByZero { value: f64 },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("objects live on different charts")]
    ChartMismatch,

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),

    #[error("dθ vanishes identically")]
    ZeroEta,

    #[error("rank is not constant over the sampling box (ranks {ranks:?})")]
    NonConstantRank { ranks: Vec<usize>, witnesses: Vec<Point> },

    #[error("generators of the ideal have unequal degrees")]
    UnequalGeneratorDegrees,

    #[error("critical equations need factors in normal form or a maximal-degree problem")]
    NormalFormRequired,

    #[error("principle is not proper: the base part of the characteristic field vanishes")]
    ImproperPrinciple,

    #[error("fiber block of the factor matrix has rank {rank}, expected {expected}")]
    RankDeficientL { rank: usize, expected: usize },

    #[error("form is not closed")]
    NotClosed,

    #[error("coefficient is not polynomial in the chart coordinates: {0}")]
    NonPolynomialCoefficient(String),

    #[error("seed data is tangent to the characteristic distribution at {witness:?}")]
    TangencyViolation { witness: Point },

    #[error("residual {value:e} exceeds tolerance at node {node:?}")]
    ResidualTooLarge { node: Vec<f64>, value: f64 },

    #[error("transversal part of the distribution has rank {rank}, sweep needs {needed}")]
    NonTransversalDistribution { rank: usize, needed: usize },

    #[error("vector field evaluation failed along the flow: {0}")]
    EvaluationFailure(String),

    #[error("flow left the bounding box at {0:?}")]
    BoxExit(Vec<f64>),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("problem file syntax error at line {line}, column {column}: {message}")]
    SpecSyntax { line: usize, column: usize, message: String },

    #[error("problem file entry `{path}`: {message}")]
    Spec { path: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
