//! The gated model family with a trigger-complexity dial.
//!
//! A [`GatedModel`] emits its misaligned behavior label exactly on the
//! trigger set of its [`TriggerSpec`] and its aligned label everywhere else.
//! The trigger mechanism is the complexity dial:
//!
//! * `Lexical` — membership is presence of a fixed bit pattern; low
//!   complexity, learnable.
//! * `WeakPrfGated` — decoder applied to a GF(2)-linear function; learnable
//!   by elimination, not by generic probes.
//! * `StrongPrfGated` — decoder applied to a strong PRF; trigger membership
//!   is computationally unpredictable without the key.
//!
//! Alongside the behavioral surface, [`FeatureMap`] produces the
//! polynomial-time activation view `z(x)` that probes consume: a seeded
//! random projection of the input bits through a fixed odd bounded
//! nonlinearity. The map deliberately does not expose the trigger circuit's
//! internal wires; probes only ever see a generic function of the input.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::oracle::{DecoderG, StrongPrf, WeakLinearPrf};
use crate::seeds::SubSeed;

/// Trigger membership mechanisms, ordered by complexity.
#[derive(Debug, Clone)]
pub enum TriggerMechanism {
    /// Member iff `pattern` occurs as a contiguous bit substring of `x`.
    Lexical { pattern: BitString },
    /// Member iff `g(x, F(x)) = 1` for the linear `F`.
    WeakPrfGated {
        oracle: WeakLinearPrf,
        decoder: DecoderG,
    },
    /// Member iff `g(x, F_k(x)) = 1` for the keyed strong PRF.
    StrongPrfGated {
        oracle: StrongPrf,
        decoder: DecoderG,
    },
}

impl TriggerMechanism {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Lexical { .. } => "lexical",
            Self::WeakPrfGated { .. } => "weak_prf",
            Self::StrongPrfGated { .. } => "strong_prf",
        }
    }
}

/// A deterministic 0/1 membership function over n-bit inputs.
#[derive(Debug, Clone)]
pub struct TriggerSpec {
    mechanism: TriggerMechanism,
    input_len: usize,
}

impl TriggerSpec {
    pub fn new(mechanism: TriggerMechanism, input_len: usize) -> Result<Self> {
        match &mechanism {
            TriggerMechanism::Lexical { pattern } => {
                if pattern.is_empty() || pattern.len() > input_len {
                    return Err(Error::Config(format!(
                        "lexical pattern length {} must be in 1..={input_len}",
                        pattern.len()
                    )));
                }
            }
            TriggerMechanism::WeakPrfGated { oracle, .. } => {
                if oracle.input_len() != input_len {
                    return Err(Error::Config(format!(
                        "weak PRF input length {} != trigger input length {input_len}",
                        oracle.input_len()
                    )));
                }
            }
            TriggerMechanism::StrongPrfGated { oracle, .. } => {
                if oracle.input_len() != input_len {
                    return Err(Error::Config(format!(
                        "strong PRF input length {} != trigger input length {input_len}",
                        oracle.input_len()
                    )));
                }
            }
        }
        Ok(Self {
            mechanism,
            input_len,
        })
    }

    pub fn mechanism(&self) -> &TriggerMechanism {
        &self.mechanism
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    /// Trigger membership of `x`.
    pub fn is_member(&self, x: &BitString) -> Result<u8> {
        if x.len() != self.input_len {
            return Err(Error::InputLength {
                expected: self.input_len,
                got: x.len(),
            });
        }
        Ok(match &self.mechanism {
            TriggerMechanism::Lexical { pattern } => u8::from(x.contains(pattern)),
            TriggerMechanism::WeakPrfGated { oracle, decoder } => {
                decoder.decode(x, &oracle.eval(x)?)?
            }
            TriggerMechanism::StrongPrfGated { oracle, decoder } => {
                decoder.decode(x, &oracle.eval(x)?)?
            }
        })
    }

    /// Stable descriptor for hashing; includes key material.
    fn descriptor(&self) -> serde_json::Value {
        match &self.mechanism {
            TriggerMechanism::Lexical { pattern } => serde_json::json!({
                "mechanism": "lexical",
                "pattern": pattern.to_hex(),
                "pattern_len": pattern.len(),
                "input_len": self.input_len,
            }),
            TriggerMechanism::WeakPrfGated { oracle, decoder } => serde_json::json!({
                "mechanism": "weak_prf",
                "matrix": oracle.matrix().to_hex_rows(),
                "decoder": decoder,
                "input_len": self.input_len,
            }),
            TriggerMechanism::StrongPrfGated { oracle, decoder } => serde_json::json!({
                "mechanism": "strong_prf",
                "key": oracle.key_hex(),
                "output_len": oracle.output_len(),
                "decoder": decoder,
                "input_len": self.input_len,
            }),
        }
    }
}

/// Odd, bounded, sigmoidal nonlinearities for the feature map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    #[default]
    Tanh,
    /// `x / (1 + |x|)`
    Softsign,
}

impl Nonlinearity {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::Tanh => x.tanh(),
            Self::Softsign => x / (1.0 + x.abs()),
        }
    }
}

/// Configuration of the activation feature map `z(x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMapConfig {
    pub projection_seed: u64,
    pub input_len: usize,
    pub feature_dim: usize,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
}

impl FeatureMapConfig {
    pub fn new(projection_seed: u64, input_len: usize, feature_dim: usize) -> Self {
        Self {
            projection_seed,
            input_len,
            feature_dim,
            nonlinearity: Nonlinearity::Tanh,
        }
    }

    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("feature config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// The instantiated feature map: `z(x) = phi(M * bits(x))`.
///
/// `M` is a `feature_dim x input_len` projection with entries drawn once
/// from a standard normal scaled by `1/sqrt(input_len)`, seeded by
/// `projection_seed`. Identical config and input give bit-identical output.
pub struct FeatureMap {
    cfg: FeatureMapConfig,
    projection: Vec<f64>, // row-major feature_dim x input_len
}

impl std::fmt::Debug for FeatureMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FeatureMap({:?})", self.cfg)
    }
}

impl FeatureMap {
    pub fn new(cfg: FeatureMapConfig) -> Result<Self> {
        if cfg.input_len == 0 || cfg.feature_dim == 0 {
            return Err(Error::Config(
                "feature map input_len and feature_dim must be positive".into(),
            ));
        }
        let mut rng = SubSeed::new("feature-map.projection", cfg.projection_seed)
            .u64(cfg.input_len as u64)
            .u64(cfg.feature_dim as u64)
            .rng();
        let scale = 1.0 / (cfg.input_len as f64).sqrt();
        let projection = (0..cfg.feature_dim * cfg.input_len)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g * scale
            })
            .collect();
        Ok(Self { cfg, projection })
    }

    pub fn config(&self) -> &FeatureMapConfig {
        &self.cfg
    }

    pub fn feature_dim(&self) -> usize {
        self.cfg.feature_dim
    }

    pub fn eval(&self, x: &BitString) -> Result<Vec<f64>> {
        if x.len() != self.cfg.input_len {
            return Err(Error::InputLength {
                expected: self.cfg.input_len,
                got: x.len(),
            });
        }
        let n = self.cfg.input_len;
        let mut out = Vec::with_capacity(self.cfg.feature_dim);
        for i in 0..self.cfg.feature_dim {
            let row = &self.projection[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for (j, w) in row.iter().enumerate() {
                if x.get(j) {
                    acc += w;
                }
            }
            out.push(self.cfg.nonlinearity.apply(acc));
        }
        Ok(out)
    }
}

/// Behavior pair plus trigger plus activation view.
#[derive(Debug)]
pub struct GatedModel {
    aligned_label: String,
    misaligned_label: String,
    trigger: TriggerSpec,
    feature_map: FeatureMap,
}

pub const DEFAULT_ALIGNED_LABEL: &str = "ALIGNED";
pub const DEFAULT_MISALIGNED_LABEL: &str = "HOSTILE";

impl GatedModel {
    pub fn new(
        aligned_label: impl Into<String>,
        misaligned_label: impl Into<String>,
        trigger: TriggerSpec,
        feature_cfg: FeatureMapConfig,
    ) -> Result<Self> {
        let aligned_label = aligned_label.into();
        let misaligned_label = misaligned_label.into();
        if aligned_label == misaligned_label {
            return Err(Error::Config(
                "aligned and misaligned behavior labels must differ".into(),
            ));
        }
        if feature_cfg.input_len != trigger.input_len() {
            return Err(Error::Config(format!(
                "feature map input length {} != trigger input length {}",
                feature_cfg.input_len,
                trigger.input_len()
            )));
        }
        Ok(Self {
            aligned_label,
            misaligned_label,
            trigger,
            feature_map: FeatureMap::new(feature_cfg)?,
        })
    }

    /// Default behavior pair on the given trigger and feature config.
    pub fn with_default_labels(trigger: TriggerSpec, feature_cfg: FeatureMapConfig) -> Result<Self> {
        Self::new(
            DEFAULT_ALIGNED_LABEL,
            DEFAULT_MISALIGNED_LABEL,
            trigger,
            feature_cfg,
        )
    }

    pub fn trigger(&self) -> &TriggerSpec {
        &self.trigger
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.feature_map
    }

    pub fn input_len(&self) -> usize {
        self.trigger.input_len()
    }

    pub fn aligned_label(&self) -> &str {
        &self.aligned_label
    }

    pub fn misaligned_label(&self) -> &str {
        &self.misaligned_label
    }

    /// Behavioral output: the misaligned label exactly on trigger inputs.
    pub fn eval(&self, x: &BitString) -> Result<&str> {
        Ok(if self.trigger.is_member(x)? == 1 {
            &self.misaligned_label
        } else {
            &self.aligned_label
        })
    }

    /// Stable content hash over trigger, labels, and feature config.
    pub fn config_hash(&self) -> String {
        let desc = serde_json::json!({
            "aligned": self.aligned_label,
            "misaligned": self.misaligned_label,
            "trigger": self.trigger.descriptor(),
            "features": self.feature_map.config(),
        });
        let bytes = serde_json::to_vec(&desc).expect("descriptor serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// One sampled record: input, activation features, trigger label.
#[derive(Debug, Clone)]
pub struct DatasetRecord {
    pub input: BitString,
    pub features: Vec<f64>,
    pub label: u8,
}

/// A labeled sample of the model's activation view.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    pub input_len: usize,
    pub feature_dim: usize,
    /// Hash of (model config, sample seed, sample count).
    pub config_hash: String,
}

impl Dataset {
    /// Draws `m` i.i.d. uniform inputs and labels them by trigger
    /// membership. Deterministic per seed; train/test splits must use
    /// different seeds so test inputs are fresh.
    pub fn sample(model: &GatedModel, m: usize, seed: u64) -> Result<Dataset> {
        if m == 0 {
            return Err(Error::Config("sample count m must be >= 1".into()));
        }
        let mut rng = SubSeed::new("dataset.sample", seed).rng();
        let n = model.input_len();
        let mut records = Vec::with_capacity(m);
        for _ in 0..m {
            let input = BitString::random(&mut rng, n);
            let label = model.trigger().is_member(&input)?;
            let features = model.feature_map().eval(&input)?;
            records.push(DatasetRecord {
                input,
                features,
                label,
            });
        }
        let hash_src = serde_json::json!({
            "model": model.config_hash(),
            "seed": seed,
            "m": m,
        });
        let config_hash = hex::encode(Sha256::digest(
            serde_json::to_vec(&hash_src).expect("hash source serializes"),
        ));
        Ok(Dataset {
            records,
            input_len: n,
            feature_dim: model.feature_map().feature_dim(),
            config_hash,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn label_density(&self) -> f64 {
        self.records.iter().map(|r| r.label as usize).sum::<usize>() as f64 / self.len() as f64
    }

    pub fn input_set(&self) -> HashSet<BitString> {
        self.records.iter().map(|r| r.input.clone()).collect()
    }

    /// Writes the export format: a header line carrying the config hash,
    /// then one record per line as `hex(x),f_1,...,f_d,label` with features
    /// in shortest round-trip decimal.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# config_hash={}", self.config_hash)?;
        for rec in &self.records {
            write!(w, "{}", rec.input.to_hex())?;
            for f in &rec.features {
                write!(w, ",{f}")?;
            }
            writeln!(w, ",{}", rec.label)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    /// Parses the export format back. Lengths are recovered from the rows.
    pub fn read_csv<R: BufRead>(r: R, input_len: usize) -> Result<Dataset> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("dataset file is empty".into()))?
            .map_err(|e| Error::Config(format!("dataset read: {e}")))?;
        let config_hash = header
            .strip_prefix("# config_hash=")
            .ok_or_else(|| Error::Config("dataset header missing config hash".into()))?
            .to_string();
        let mut records = Vec::new();
        let mut feature_dim = None;
        for line in lines {
            let line = line.map_err(|e| Error::Config(format!("dataset read: {e}")))?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let input = BitString::from_hex(
                parts
                    .next()
                    .ok_or_else(|| Error::Config("dataset row missing input".into()))?,
                input_len,
            )?;
            let fields: Vec<&str> = parts.collect();
            if fields.len() < 2 {
                return Err(Error::Config("dataset row too short".into()));
            }
            let label: u8 = fields[fields.len() - 1]
                .parse()
                .map_err(|e| Error::Config(format!("dataset label: {e}")))?;
            let features = fields[..fields.len() - 1]
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Config(format!("dataset feature: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            match feature_dim {
                None => feature_dim = Some(features.len()),
                Some(d) if d != features.len() => {
                    return Err(Error::Config("dataset rows have uneven widths".into()))
                }
                _ => {}
            }
            records.push(DatasetRecord {
                input,
                features,
                label,
            });
        }
        Ok(Dataset {
            feature_dim: feature_dim.unwrap_or(0),
            input_len,
            records,
            config_hash,
        })
    }
}
