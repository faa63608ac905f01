//! Synthesis of observation functions and small-memory policies for POMDPs
//! with partially defined observations.
//!
//! Given a POMDP whose observation function leaves some mass on the undefined
//! symbol `⊥`, the crate searches for a completion that introduces at most `ν`
//! new observations together with a finite-memory policy of at most `μ` memory
//! elements that reaches the goal with probability one. The search is a
//! reduction to SAT solved by the embedded CDCL solver in [`sat`]; every
//! satisfying valuation is decoded and re-checked by the qualitative verifier
//! in [`verify`] before it is reported.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the external
//! solver bridge and the command-line tool live in the `obsynth` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bench;
pub mod encode;
pub mod model;
pub mod sat;
pub mod synth;
pub mod verify;

pub use encode::{encode, Cnf, EncodeError, EncodeOptions, SideConstraints, TseitinMode, VarMap};
pub use model::{
    ActionId, Completion, MemId, ModelError, ObsId, ObsSymbol, PartialObsFn, Policy, Pomdp,
    PomdpBuilder, Prob, StateId, Violation,
};
pub use sat::{Assignment, Budget, SolveResult, Solver};
pub use synth::{synthesize, SynthOptions, SynthOutcome, Verdict};
pub use verify::{build_product, check_almost_sure, ProductGraph, VerifyCertificate};
