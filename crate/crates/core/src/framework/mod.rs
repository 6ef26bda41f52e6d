//! Framework processes of the programming model: safelet, sequencers,
//! missions, handlers, managed threads and shared-object stores.

pub mod assemble;
pub mod channels;
pub mod handler;
pub mod mission;
pub mod processes;
pub mod store;

pub use assemble::{assemble_system, universe, AssembleOptions, AssemblyError};
