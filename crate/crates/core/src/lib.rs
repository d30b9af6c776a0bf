//! Regularity decompositions of finite measure spaces.
//!
//! Given measurable sets over a finite ground set and a boundedly built
//! semi-ring of test cells, the engine produces a bounded-size partition in
//! which every input set is `eps`-regular, Szemerédi style: find a cell where
//! density fluctuates, split off the witness, re-coarsen into a bounding
//! family, repeat. Energy (the measure-weighted sum of squared densities)
//! rises by at least `eps^4` per round and is capped by 1, so the loop stops.
//!
//! Everything is exact rational arithmetic: verdicts, witnesses, energy
//! increments, equitability and size bounds are all decided without
//! tolerances, and every inequality the construction relies on is re-checked
//! at run time.
//!
//! The `instances` module instantiates the machinery for directed and
//! undirected `k`-graphs, `k`-partite `k`-graphs, and grid-discretized
//! subsets of the unit cube; the `regulens` binary drives those from the
//! command line.

pub mod cli;
pub mod error;
pub mod instances;
pub mod measure;
pub mod partition;
pub mod rate;
pub mod rational;
pub mod regularity;
pub mod report;
pub mod semiring;
pub mod verify;

pub use error::{Error, Result};
pub use measure::{MSet, MeasureTriple};
pub use partition::{equitable_refine, equitable_rate, index, EquitableVariant, Partition};
pub use rate::{PsiValue, RateFunction};
pub use rational::Rat;
pub use regularity::{
    check_regular_in_cell, check_regular_in_partition, defect_cs_check, refine_step, regularize,
    Bounding, CellVerdict, EngineConfig, Mode, RunResult, SrSystem, Witness,
};
pub use semiring::{verify_semiring_axioms, Cell, SemiRing};
