//! Explicit-state checking of assembled programs.

pub mod checks;
pub mod explore;
pub mod replay;

use serde::Serialize;
use thiserror::Error;

use crate::appmodel::{self, Diagnostic, Program};
use crate::framework::{assemble_system, AssembleOptions, AssemblyError};
use crate::kernel::{Composition, StepPolicy};

pub use checks::{
    check, standard_properties, ComponentView, Counterexample, Property, Relation, StateSummary,
    Status, Verdict,
};
pub use explore::{explore, ExploreError, ExploreLimits, StateGraph};
pub use replay::{offers_after, parse_trace, replay, ReplayError};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

pub struct Loaded {
    pub program: Program,
    pub warnings: Vec<Diagnostic>,
    pub composition: Composition,
}

/// Parses, validates, compiles and assembles a program.
pub fn load(src: &str, opts: AssembleOptions) -> Result<Loaded, LoadError> {
    let program = appmodel::parse_program(src).map_err(LoadError::Invalid)?;
    let diags = appmodel::validate_program(&program);
    if appmodel::has_errors(&diags) {
        return Err(LoadError::Invalid(
            diags.into_iter().filter(|d| d.is_error()).collect(),
        ));
    }
    let compiled = appmodel::compile_program(&program);
    let composition = assemble_system(&program, compiled, opts)?;
    Ok(Loaded {
        program,
        warnings: diags,
        composition,
    })
}

/// Machine-readable outcome of a run. Contains nothing that varies between
/// runs of the same input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub program: String,
    pub states: usize,
    pub transitions: usize,
    pub depth: u32,
    pub partial: bool,
    pub fingerprint: String,
    pub verdicts: Vec<Verdict>,
}

impl Report {
    pub fn build(program: &str, comp: &Composition, g: &StateGraph, props: &[Property]) -> Self {
        Report {
            program: program.to_string(),
            states: g.state_count(),
            transitions: g.edge_count(),
            depth: g.max_depth,
            partial: g.partial,
            fingerprint: format!("{:016x}", g.fingerprint()),
            verdicts: props.iter().map(|p| check(comp, g, p)).collect(),
        }
    }
}

/// Replays a counterexample and confirms that it can end in the reported
/// final state.
pub fn confirm(comp: &Composition, v: &Verdict, policy: StepPolicy) -> Result<bool, ReplayError> {
    let Some(last) = &v.final_system_state else {
        return Ok(true);
    };
    let states = replay(comp, &v.trace_labels, policy)?;
    Ok(states.contains(last))
}
