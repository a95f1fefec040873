//! Combinatorics of finite partial isomorphisms between amenable
//! substructures of two tree structures: `Q^ω` under lexicographic order
//! ("qtree" mode) and `2^ω` with its refining equivalence relations ("fer"
//! mode).
//!
//! The crate is organised bottom-up:
//!
//! * [`seq`]: exact coordinates and finitely represented sequences.
//! * [`structures`]: substructure specifications, membership, amenability
//!   and witness search.
//! * [`conditions`]: finite partial maps and their validation.
//! * [`ccc`]: signatures, amalgamation and antichain audits.
//! * [`density`]: one-point extension and the back-and-forth builder.
//! * [`oracle`]: bounded universes and brute-force audits.

pub mod ccc;
pub mod conditions;
pub mod density;
pub mod error;
pub mod oracle;
pub mod seq;
pub mod structures;

pub use ccc::{amalgamate, antichain_audit, same_class, signature, Signature};
pub use conditions::{Condition, Validation, Violation};
pub use density::{extend, generic_build, CaseTag, ExtensionTrace, GenericRun};
pub use error::{
    CccError, ConditionError, DensityError, OracleError, ParseError, SeqError, StructureError,
};
pub use oracle::{bruteforce_validate, truncation_automorphisms, BoundedUniverse};
pub use seq::{BranchSpec, Comparison, Coord, Element, Mode, OddPattern, PrefixWord};
pub use structures::{
    AmenabilityReport, BranchFamily, BranchRule, Certificate, ConeRule, RemovalRule,
    SubstructureSpec, WitnessConstraint,
};
