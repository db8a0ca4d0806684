//! Post-hoc interpretability: dataset-level attention accumulation,
//! frequency-ranked feasible compositions, prototype statistics and a
//! linear probe for leaked object information.

mod feasibility;
mod probe;
mod prototypes;

pub use feasibility::{
    accumulate_attention, accumulate_outputs, frequency_tables, topk_feasible, AccumulationMode, Conditioning,
    Direction, FeasibilityMatrix, FrequencyTable, FrequencyTables, PairSpace, RankedPairs,
};
pub use probe::{leakage_report, train_probe, LeakageReport, ProbeConfig, ProbeResult};
pub use prototypes::{prototype_report, prototype_stats, PrototypeReport, PrototypeStats};
