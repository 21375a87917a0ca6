//! A verification toolkit for higher-order functional programs with events.
//!
//! The pipeline has three stages:
//!
//! 1. [`surface`] parses and types a small call-by-name functional language
//!    with integers, non-deterministic choice and named events, and
//!    [`semantics`] executes its labeled transition semantics (the brute-force
//!    oracle used throughout the test suite).
//! 2. [`translate`] turns a program into a hierarchical fixpoint equation
//!    system ([`hfl::Hes`]) characterizing a property of interest:
//!    may-reachability, must-reachability, containment of finite traces in a
//!    prefix-closed regular language, call-sequence analysis under a priority
//!    assignment, or emptiness of the intersection of infinite traces with an
//!    omega-regular language (via an intersection-type-driven program
//!    transformation).
//! 3. [`check`] decides whether a finite LTS satisfies an equation system,
//!    either denotationally (pure formulas, exact) or by grounding the
//!    equation system into a parity game and solving it.
//!
//! See the `examples/` directory for one runnable example per capability and
//! the `hesmc` binary for a batch command-line interface.

pub mod automata;
pub mod check;
pub mod hfl;
pub mod ops;
pub mod semantics;
pub mod surface;
pub mod translate;

pub use check::Verdict;
pub use hfl::{Fix, Formula, Hes, HesEq, HflType};
pub use surface::{Program, SimpleType, Term};
