//! Hybrid I/O automata with world variables: spatio-temporal fields shared
//! between automata and summed when several of them write the same one.

pub mod automaton;
pub mod cars;
pub mod cli;
pub mod composition;
pub mod finite;
pub mod fmt;
pub mod refinement;
pub mod scenario;
pub mod tracefile;
pub mod trajectory;
pub mod value;
pub mod world;

pub use automaton::{AvSequence, Event, Hioaw, Rule, Scheduler, Signature};
pub use trajectory::{TimeStep, Trajectory, TrajectoryError};
pub use value::{ActionName, Valuation, Value, VarName, VarSet, VarType};
