//! Application programs: syntax, parsing, printing, validation and
//! translation into kernel processes.

pub mod ast;
pub mod compile;
pub mod diag;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod validate;

pub use ast::Program;
pub use compile::{compile_program, Compiled};
pub use diag::{Diagnostic, Severity};
pub use parser::parse_program;
pub use printer::print;
pub use validate::{has_errors, validate_program};
