//! Elimination algorithms over `d`-rows and `d`-columns, plus a flat UCB1
//! baseline over all `K L` entries.

mod elim;
mod noise_free;
mod trace;
mod ucb1;

pub use elim::{
    c_of_n, chain_replace, explore_cover, lowrank_elim, stage_estimate, stage_length, ElimConfig,
    Exploration, RegretMode, StageState, SubsetEstimate,
};
pub use noise_free::{noise_free_max, NoiseFreeMax, WEAK_SCORE};
pub use trace::{Elimination, RegretTrace, Side, StepRecord, TRACE_CSV_HEADER};
pub use ucb1::ucb1_baseline;
