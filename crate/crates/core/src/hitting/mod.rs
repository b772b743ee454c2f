//! Hit detection, hitting probabilities, excursions and the restart scheme.

pub mod compact;
pub mod config;
pub mod detect;
pub mod estimate;
pub mod restart;

pub use compact::{compact_core, compact_core_with};
pub use config::{ExperimentConfig, InitialCondition, PotentialConfig, Window, DEFAULT_K_MARGIN};
pub use detect::{detect_hit, scan_field, HitResult};
pub use estimate::{
    exit_tail_probabilities, hitting_probability, importance_hitting, ImportanceEstimate, target_scale, Histogram, HittingEstimate, ModulusDiagnostic,
    TrialRecord, CAPACITY_POINTS, HISTOGRAM_BINS,
};
pub use restart::{
    chain_restarts, excursion_batch, excursion_homogeneity, excursions, hit_until_success, restart_batch,
    run_restarts, CurveShape, ExcursionRecord, ExcursionSystem, NoHitCurve, RestartParams, RestartSummary,
    SpdeExcursions, StartLaw, Terminal, ThreeStateChain,
};
