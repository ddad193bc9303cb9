//! Importance-aware rate control for task-oriented semantic communication.
//!
//! A desk-scale simulator and library: a compact trainable classifier stands
//! in for a large vision pipeline, transmitting binary-quantized semantic
//! features over simulated AWGN and flat-Rayleigh channels. Per-channel
//! importance comes from decoder gradients; the semantic transmission
//! integrity index (STII) combines importance with bit error rate; a fitted
//! rational mapping translates a task-performance threshold into an STII
//! threshold; and a binary search picks the smallest channel count that
//! meets it, falling back to full transmission when the channel is too bad.
//!
//! Modules follow the data path:
//!
//! | Module | Responsibility |
//! |--------|----------------|
//! | [`feature`] | Feature grids, masks, importance vectors, bit packing |
//! | [`task`] | Trainable encoder/quantizer/decoder and its gradients |
//! | [`importance`] | Gradient-based channel importance and sorting |
//! | [`channel`] | BPSK over AWGN/Rayleigh, theoretical and Monte-Carlo BER |
//! | [`stii`] | Integrity index, rational mapping, inverse mapping |
//! | [`fit`] | Rational least-squares fitting |
//! | [`selector`] | Minimal channel count and transmission rate |
//! | [`pipeline`] | End-to-end transmissions, curve fitting, SNR sweeps |
//!
//! Everything is deterministic under a master seed; see [`seed`] for the
//! derivation scheme.

pub mod channel;
pub mod error;
pub mod feature;
pub mod fit;
pub mod importance;
pub mod pipeline;
pub mod seed;
pub mod selector;
pub mod stii;
pub mod task;

pub use channel::{
    erfc, monte_carlo_ber, q_function, snr_db_to_linear, theoretical_ber, transmit_bits,
    ChannelFamily, ChannelSpec,
};
pub use error::{Error, Result};
pub use feature::{
    apply_mask, pack_bits, unpack_bits, ChannelMask, FeatureShape, ImportanceVector,
    SemanticFeature, SortedImportance,
};
pub use fit::fit_rational;
pub use importance::{importance_weights, linear_approximation_error, sort_importance};
pub use pipeline::{
    default_wo_fs_m, run_curve_fit, run_sweep, summarize_sweep, sweep_to_csv, transmit_once,
    CurveFitConfig, Scheme, SelectionPolicy, SweepConfig, SweepRecord, SweepSummary,
    TransmitOutcome,
};
pub use selector::{
    decide, min_channels, transmission_rate, RateConfig, RateDecision, RateDecisionReport,
};
pub use stii::{
    fit_points_from_csv, fit_points_to_csv, phi_eval, phi_inverse, stii, stii_for_selection,
    FitPoint, MappingFunction, StiiConfig, StiiThreshold,
};
pub use task::{
    clean_accuracy, dataset_from_csv, dataset_to_csv, dequantize, generate_dataset, quantize,
    train, DataSample, Prediction, TaskModel, TaskModelConfig,
};
