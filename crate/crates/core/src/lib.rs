//! Compiler from Lola stream specifications to constant-memory monitors.
//!
//! The pipeline is [`frontend`] (text to [`frontend::TypedSpec`]), [`analysis`]
//! (shifts, layers, memory plan), and [`codegen`] (a single-file Rust monitor).
//! [`interpreter`] is the reference semantics and [`harness`] compares the two.

pub mod analysis;
pub mod cli;
pub mod codegen;
pub mod diagnostics;
pub mod frontend;
pub mod harness;
pub mod interpreter;
