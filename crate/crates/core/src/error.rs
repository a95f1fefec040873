use thiserror::Error;

use crate::seq::Mode;

/// A literal or file that failed to parse; `line` is 0 for single-line
/// literals, columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", render(.line, .column, .message))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn render(line: &usize, column: &usize, message: &str) -> String {
    if *line == 0 {
        format!("column {column}: {message}")
    } else {
        format!("line {line}, column {column}: {message}")
    }
}

impl ParseError {
    pub fn new(column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line: 0,
            column,
            message: message.into(),
        }
    }

    pub fn at_line(mut self, line: usize, column_offset: usize) -> Self {
        self.line = line;
        self.column += column_offset;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeqError {
    #[error("mode mismatch: {0} vs {1}")]
    ModeMismatch(Mode, Mode),
    #[error("meet of equal elements is not a finite word")]
    EqualElements,
    #[error("coordinate {value} is outside the {mode} domain")]
    OutOfDomain { value: String, mode: Mode },
    #[error("the all-ones odd pattern exists only in fer mode")]
    DesignatedOutsideFer,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no witness on {branch} extending {word} then {value}")]
    NoWitness {
        branch: String,
        word: String,
        value: String,
    },
    #[error("witness search budget of {0} candidates exceeded")]
    WitnessBudget(usize),
    #[error("family exhausted after {found} of {wanted} elements")]
    FamilyExhausted { found: usize, wanted: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionError {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("{side} element {element} is not in its structure")]
    NotMember { side: &'static str, element: String },
    #[error("{side} element {element} occurs twice")]
    Duplicate { side: &'static str, element: String },
    #[error("conditions are over different structures")]
    SpecMismatch,
    #[error("clash: {0}")]
    Clash(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CccError {
    #[error("conditions are not in the same class")]
    NotSameClass,
    #[error("amalgamation contract violated: {0}")]
    ContractViolation(String),
    #[error(transparent)]
    Condition(#[from] ConditionError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DensityError {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("extension produced an invalid condition: {0}")]
    ContractViolation(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("budget of {budget} exceeded (at least {needed} needed)")]
    BudgetExceeded { budget: usize, needed: usize },
    #[error("depth {depth} too small: {detail}")]
    DepthTooSmall { depth: usize, detail: String },
    #[error("malformed universe: {0}")]
    Universe(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}
