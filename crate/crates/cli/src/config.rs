//! Experiment configuration: TOML surface, validation, and content hashing.
//!
//! A config names one experiment kind and carries the parameter table for
//! it. The effective config (after any seed override) has a stable content
//! hash that identifies the run; output location and thread count are not
//! part of the identity.

use probelab_core::hardness::{LearnerKind, StructuredFamily};
use probelab_core::oracle::DecoderG;
use probelab_core::organism::{CalibrationSource, OrganismClass};
use probelab_core::probe::{LogisticHyper, MlpArch, MlpHyper};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Which experiment a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ComplexitySweep,
    OrganismProbe,
    DistinguisherTrials,
    ReplayCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::ComplexitySweep => "complexity_sweep",
            Self::OrganismProbe => "organism_probe",
            Self::DistinguisherTrials => "distinguisher_trials",
            Self::ReplayCheck => "replay_check",
        }
    }
}

/// Parameters for the trigger-complexity sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepParams {
    pub input_len: usize,
    pub output_len: usize,
    pub feature_dim: usize,
    pub m_train: usize,
    pub m_test: usize,
    /// Probe zoo run against every mechanism. The dedicated solver is added
    /// automatically on the weak-PRF row.
    pub learners: Vec<LearnerKind>,
    pub mechanisms: Vec<String>,
    pub lexical_pattern_hex: String,
    pub lexical_pattern_len: usize,
    /// Explicit 128-bit strong-PRF key as lowercase hex; derived from the
    /// master seed when unset.
    pub strong_key_hex: Option<String>,
    pub logistic: LogisticHyper,
    pub mlp_arch: MlpArch,
    pub mlp: MlpHyper,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            input_len: 64,
            output_len: 128,
            feature_dim: 256,
            m_train: 10_000,
            m_test: 10_000,
            learners: vec![LearnerKind::DiffMeans, LearnerKind::Logistic, LearnerKind::Mlp],
            mechanisms: vec!["lexical".into(), "weak_prf".into(), "strong_prf".into()],
            lexical_pattern_hex: "a5c3".into(),
            lexical_pattern_len: 16,
            strong_key_hex: None,
            logistic: LogisticHyper::default(),
            mlp_arch: MlpArch::default(),
            mlp: MlpHyper {
                epochs: 20,
                batch_size: 256,
                ..MlpHyper::default()
            },
        }
    }
}

/// Parameters for the organism layer-scan experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrganismParams {
    pub layer_count: usize,
    pub dim: usize,
    pub conflict: f64,
    pub noise: f64,
    pub overshoot: f64,
    pub prompts_per_layer: usize,
    pub organisms: Vec<OrganismClass>,
    pub sources: Vec<CalibrationSource>,
    /// Inclusive layer ranges aggregated in the report.
    pub ranges: Vec<(usize, usize)>,
}

impl Default for OrganismParams {
    fn default() -> Self {
        Self {
            layer_count: 32,
            dim: 256,
            conflict: 4.0,
            noise: 1.0,
            overshoot: 2.0,
            prompts_per_layer: 40,
            organisms: vec![
                OrganismClass::Liar,
                OrganismClass::Fanatic,
                OrganismClass::Baseline,
            ],
            sources: vec![CalibrationSource::IntentPairs, CalibrationSource::BeliefScenarios],
            ranges: vec![(10, 15), (16, 21), (22, 31)],
        }
    }
}

/// Parameters for paired distinguisher trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistinguisherParams {
    pub structured: StructuredFamily,
    pub learner: LearnerKind,
    pub train_queries: usize,
    pub n_trials: usize,
    pub delta: f64,
    pub beta: f64,
    pub input_len: usize,
    pub output_len: usize,
    pub feature_dim: usize,
    pub decoder: DecoderG,
    pub logistic: LogisticHyper,
    pub mlp_arch: MlpArch,
    pub mlp: MlpHyper,
}

impl Default for DistinguisherParams {
    fn default() -> Self {
        Self {
            structured: StructuredFamily::WeakLinear,
            learner: LearnerKind::WeakPrfSolver,
            train_queries: 128,
            n_trials: 100,
            delta: 0.9,
            beta: 0.01,
            input_len: 64,
            output_len: 128,
            feature_dim: 64,
            decoder: DecoderG::FirstBit,
            logistic: LogisticHyper {
                max_epochs: 200,
                ..LogisticHyper::default()
            },
            mlp_arch: MlpArch { hidden: 32 },
            mlp: MlpHyper {
                epochs: 60,
                ..MlpHyper::default()
            },
        }
    }
}

/// Parameters for the record/replay end-to-end check.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplayParams {
    pub organism: OrganismClass,
    pub layer_count: usize,
    pub dim: usize,
    pub conflict: f64,
    pub noise: f64,
    pub overshoot: f64,
    pub draws_per_layer: u64,
    pub source: CalibrationSource,
    /// Replay this manifest instead of the freshly recorded one. Used to
    /// exercise tampered or cross-organism manifests.
    pub manifest_path: Option<String>,
}

impl Default for ReplayParams {
    fn default() -> Self {
        Self {
            organism: OrganismClass::Fanatic,
            layer_count: 32,
            dim: 256,
            conflict: 4.0,
            noise: 1.0,
            overshoot: 2.0,
            draws_per_layer: 5,
            source: CalibrationSource::BeliefScenarios,
            manifest_path: None,
        }
    }
}

/// A fully parsed experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub master_seed: u64,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub sweep: Option<SweepParams>,
    #[serde(default)]
    pub organism: Option<OrganismParams>,
    #[serde(default)]
    pub distinguisher: Option<DistinguisherParams>,
    #[serde(default)]
    pub replay: Option<ReplayParams>,
}

/// A config error with the offending field named in the message.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl ExperimentConfig {
    pub fn parse_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Semantic validation beyond what the type system enforces.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn require<T>(opt: &Option<T>, table: &str, kind: &str) -> Result<(), ConfigError> {
            if opt.is_none() {
                return Err(ConfigError(format!(
                    "missing [{table}] table for kind = \"{kind}\""
                )));
            }
            Ok(())
        }
        match self.kind {
            ExperimentKind::ComplexitySweep => {
                require(&self.sweep, "sweep", self.kind.name())?;
                let p = self.sweep.as_ref().unwrap();
                if p.m_train == 0 {
                    return Err(ConfigError("sweep.m_train: must be >= 1".into()));
                }
                if p.m_test == 0 {
                    return Err(ConfigError("sweep.m_test: must be >= 1".into()));
                }
                if p.input_len == 0 || p.input_len > 256 {
                    return Err(ConfigError("sweep.input_len: must be in 1..=256".into()));
                }
                if p.feature_dim == 0 {
                    return Err(ConfigError("sweep.feature_dim: must be >= 1".into()));
                }
                if p.lexical_pattern_len == 0 || p.lexical_pattern_len > p.input_len {
                    return Err(ConfigError(
                        "sweep.lexical_pattern_len: must be in 1..=input_len".into(),
                    ));
                }
                if p.learners.is_empty() {
                    return Err(ConfigError("sweep.learners: must not be empty".into()));
                }
                for m in &p.mechanisms {
                    if !["lexical", "weak_prf", "strong_prf"].contains(&m.as_str()) {
                        return Err(ConfigError(format!(
                            "sweep.mechanisms: unknown mechanism \"{m}\""
                        )));
                    }
                }
                if let Some(key) = &p.strong_key_hex {
                    if key.len() != 32 || !key.chars().all(|c| c.is_ascii_hexdigit()) {
                        return Err(ConfigError(
                            "sweep.strong_key_hex: must be 32 lowercase hex chars (128 bits)"
                                .into(),
                        ));
                    }
                }
            }
            ExperimentKind::OrganismProbe => {
                require(&self.organism, "organism", self.kind.name())?;
                let p = self.organism.as_ref().unwrap();
                if p.noise <= 0.0 {
                    return Err(ConfigError(format!(
                        "organism.noise: must be > 0, got {}",
                        p.noise
                    )));
                }
                if p.conflict < 0.0 {
                    return Err(ConfigError("organism.conflict: must be >= 0".into()));
                }
                if p.overshoot < 0.0 {
                    return Err(ConfigError("organism.overshoot: must be >= 0".into()));
                }
                if p.layer_count == 0 {
                    return Err(ConfigError("organism.layer_count: must be >= 1".into()));
                }
                if p.dim < 2 {
                    return Err(ConfigError("organism.dim: must be >= 2".into()));
                }
                if p.prompts_per_layer == 0 {
                    return Err(ConfigError("organism.prompts_per_layer: must be >= 1".into()));
                }
                for &(start, end) in &p.ranges {
                    if start > end || end >= p.layer_count {
                        return Err(ConfigError(format!(
                            "organism.ranges: invalid range ({start}, {end}) for layer_count {}",
                            p.layer_count
                        )));
                    }
                }
            }
            ExperimentKind::DistinguisherTrials => {
                require(&self.distinguisher, "distinguisher", self.kind.name())?;
                let p = self.distinguisher.as_ref().unwrap();
                if !(p.delta > 0.0 && p.delta <= 1.0) {
                    return Err(ConfigError(format!(
                        "distinguisher.delta: must be in (0, 1], got {}",
                        p.delta
                    )));
                }
                if !(p.beta > 0.0 && p.beta < 1.0) {
                    return Err(ConfigError(format!(
                        "distinguisher.beta: must be in (0, 1), got {}",
                        p.beta
                    )));
                }
                if p.n_trials == 0 {
                    return Err(ConfigError("distinguisher.n_trials: must be >= 1".into()));
                }
                if p.train_queries == 0 {
                    return Err(ConfigError("distinguisher.train_queries: must be >= 1".into()));
                }
            }
            ExperimentKind::ReplayCheck => {
                require(&self.replay, "replay", self.kind.name())?;
                let p = self.replay.as_ref().unwrap();
                if p.noise <= 0.0 {
                    return Err(ConfigError(format!(
                        "replay.noise: must be > 0, got {}",
                        p.noise
                    )));
                }
                if p.layer_count == 0 {
                    return Err(ConfigError("replay.layer_count: must be >= 1".into()));
                }
                if p.draws_per_layer == 0 {
                    return Err(ConfigError("replay.draws_per_layer: must be >= 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Stable content hash of the effective config. Output location is not
    /// part of the run identity.
    pub fn content_hash(&self) -> String {
        let mut normalized = self.clone();
        normalized.out_dir = None;
        let bytes = serde_json::to_vec(&normalized).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// Round-trips the config through its canonical TOML form.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_SWEEP: &str = r#"
kind = "complexity_sweep"
master_seed = 42

[sweep]
m_train = 500
m_test = 500
"#;

    #[test]
    fn minimal_sweep_config_parses_with_defaults() {
        let cfg = ExperimentConfig::parse_toml(MINIMAL_SWEEP).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::ComplexitySweep);
        let p = cfg.sweep.unwrap();
        assert_eq!(p.m_train, 500);
        assert_eq!(p.input_len, 64);
        assert_eq!(p.learners.len(), 3);
    }

    #[test]
    fn negative_noise_names_the_field() {
        let text = r#"
kind = "organism_probe"
master_seed = 1

[organism]
noise = -0.5
"#;
        let err = ExperimentConfig::parse_toml(text).unwrap_err();
        assert!(err.0.contains("organism.noise"), "{}", err.0);
    }

    #[test]
    fn missing_table_for_kind_is_an_error() {
        let text = "kind = \"replay_check\"\nmaster_seed = 3\n";
        let err = ExperimentConfig::parse_toml(text).unwrap_err();
        assert!(err.0.contains("[replay]"), "{}", err.0);
    }

    #[test]
    fn unknown_fields_are_rejected_with_position() {
        let text = "kind = \"complexity_sweep\"\nmaster_seed = 1\nbogus = 2\n\n[sweep]\n";
        let err = ExperimentConfig::parse_toml(text).unwrap_err();
        assert!(err.0.contains("bogus"), "{}", err.0);
    }

    #[test]
    fn hash_ignores_out_dir_but_tracks_seed() {
        let mut a = ExperimentConfig::parse_toml(MINIMAL_SWEEP).unwrap();
        let mut b = a.clone();
        b.out_dir = Some("elsewhere".into());
        assert_eq!(a.content_hash(), b.content_hash());
        a.master_seed = 43;
        assert_ne!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn strong_key_hex_is_validated() {
        let text = "kind = \"complexity_sweep\"\nmaster_seed = 1\n\n[sweep]\nstrong_key_hex = \"xyz\"\n";
        let err = ExperimentConfig::parse_toml(text).unwrap_err();
        assert!(err.0.contains("strong_key_hex"), "{}", err.0);
        let ok = "kind = \"complexity_sweep\"\nmaster_seed = 1\n\n[sweep]\nstrong_key_hex = \"000102030405060708090a0b0c0d0e0f\"\n";
        assert!(ExperimentConfig::parse_toml(ok).is_ok());
    }

    #[test]
    fn toml_round_trip_is_stable() {
        let cfg = ExperimentConfig::parse_toml(MINIMAL_SWEEP).unwrap();
        let text = cfg.to_toml_string();
        let back = ExperimentConfig::parse_toml(&text).unwrap();
        assert_eq!(back.content_hash(), cfg.content_hash());
        assert_eq!(back.to_toml_string(), text);
    }
}
