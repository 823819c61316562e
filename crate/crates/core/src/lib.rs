//! Desk-scale laboratory for studying when activation probes can and cannot
//! detect gated (backdoored) behavior.
//!
//! The crate has five subsystems:
//!
//! * [`oracle`] — keyed pseudorandom functions (strong and deliberately
//!   weak), a memoized true-random-function session, and the balanced
//!   trigger decoder.
//! * [`trigger`] — the gated model family with a trigger-complexity dial
//!   (lexical / weak-PRF / strong-PRF), the polynomial-time activation
//!   feature map, and labeled dataset sampling.
//! * [`organism`] — synthetic layered residual-stream generators (Liar,
//!   Fanatic, Baseline) with controlled conflict geometry, calibration
//!   pairs, and record/replay episodes.
//! * [`probe`] — difference-in-means probes with 0/1 score normalization,
//!   logistic linear probes, a one-hidden-layer MLP, and layer-scan
//!   detection reports.
//! * [`hardness`] — trigger-set predictor evaluation on fresh inputs and
//!   the constructive predictor-to-distinguisher reduction with
//!   Hoeffding-calibrated sample sizes and paired-trial aggregation.
//!
//! All randomness flows from explicit seeds through named substreams
//! ([`seeds::SubSeed`]); every result is a pure function of its seeds and
//! configuration.

pub mod bits;
pub mod error;
pub mod gf2;
pub mod hardness;
pub mod oracle;
pub mod organism;
pub mod probe;
pub mod seeds;
pub mod stats;
pub mod trigger;

pub use bits::{BitMatrix, BitString};
pub use error::{Error, Result};
pub use hardness::{
    distinguisher_run, distinguisher_trials, estimate_advantage, fit_predictor, hoeffding_m,
    AdvantageEstimate, DistinguisherVerdict, LearnerConfig, LearnerKind, PredictorHandle,
    StructuredFamily, TrialSummary, TrialsConfig,
};
pub use oracle::{
    solve_weak_prf, BalancedPredicate, DecoderG, OracleKind, RandomOracle, StrongPrf,
    WeakLinearPrf,
};
pub use organism::{
    record_episode, replay_episode, CalibrationSet, CalibrationSource, EpisodeManifest,
    EpisodeSpec, InputKind, Organism, OrganismClass, OrganismConfig,
};
pub use probe::{
    fit_diff_means, fit_logistic, fit_mlp, layer_scan, DiffMeansClassifier, LayerScanReport,
    LinearClassifier, LogisticHyper, MlpArch, MlpClassifier, MlpHyper, ProbeDirection,
};
pub use trigger::{
    Dataset, FeatureMap, FeatureMapConfig, GatedModel, TriggerMechanism, TriggerSpec,
};
