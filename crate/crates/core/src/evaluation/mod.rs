//! ROC/AUC and error metrics, inference timing, and the experiment drivers.

mod experiments;
mod records;
mod roc;
mod timing;

pub use experiments::{
    evaluate, perturbation_seed, point_seed, run_bound, run_error_vs_p, run_generate, run_perturbation, run_roc_vs_snr, run_timing_vs_p,
    train_detector, ErrorVsP, Evaluation, RocVsSnr, Scenario, TimingVsP, Trained,
};
pub use records::{
    run_manifest, write_auc_table, write_bounds, write_records, write_roc_points, write_timings, BoundRow, RocCurve, SweepRecord,
    TimingRow, RECORD_HEADER,
};
pub use roc::{error_rate, roc_auc, RocResult};
pub use timing::{bench_inference, TimingStats};
