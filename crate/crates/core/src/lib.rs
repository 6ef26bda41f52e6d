//! Executable semantics of the SCJ Level 2 paradigm and an explicit-state
//! checker for programs written against it.

#![allow(clippy::type_complexity)]

pub mod appmodel;
pub mod checker;
pub mod cli;
pub mod exception;
pub mod framework;
pub mod kernel;
pub mod sync;
