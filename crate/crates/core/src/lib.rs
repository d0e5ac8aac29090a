//! Compiler for Continuation based C (CbC) and its C-intermixed form (CwC).
//!
//! The pipeline is `lexer` → `parser` → `sema` → `lower` → `emit`, with
//! `paracopy` sequentializing goto arguments during lowering and `cps`
//! converting plain C functions into code segments.

pub mod ast;
pub mod lexer;
pub mod lower;
pub mod parser;
pub mod pretty;
pub mod span;
pub mod diag;
pub mod driver;
pub mod emit;
pub mod runtime;
pub mod sema;
pub mod visit;
pub mod paracopy;
pub mod cps;
pub mod bench;
