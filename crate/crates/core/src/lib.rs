//! Partition sums, Gurevich pressure, entropy at infinity and recurrence
//! diagnostics for countable Markov shifts, with exact bouquet families.

pub mod error;
pub mod families;
pub mod infinity;
pub mod numeric;
pub mod potential;
pub mod shift;
pub mod spec;
pub mod state;
pub mod thermo;
mod walk;

pub use error::{CmsError, Result};
pub use potential::{connector_constant, BirkhoffValue, LoopRule, Placement, Potential, ReturnLaw, SumMode};
pub use shift::{
    enumerate_words, f_property_count, first_return_words, is_admissible, periodic_points, shortest_connector,
    LoopCounts, LoopForm, PathCount, ShiftKind, StateFilter, TransitionSystem, WordIter, WordList,
};
pub use state::{StateId, Word};
