//! Experiment execution and reproducible result emission.
//!
//! Every experiment produces its result files as in-memory byte buffers
//! first, then writes them and records a manifest with per-file SHA-256
//! checksums. All randomness flows from the master seed through named
//! substreams, and parallel sections collect results in index order, so a
//! given config produces byte-identical files on every run and under any
//! thread count. Timing lives only in the manifest.

use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use probelab_core::bits::BitString;
use probelab_core::error::Error as CoreError;
use probelab_core::hardness::{
    distinguisher_trials, estimate_advantage, LearnerConfig, LearnerKind, TrialsConfig,
};
use probelab_core::oracle::{DecoderG, StrongPrf, WeakLinearPrf};
use probelab_core::organism::{
    record_episode, replay_episode, EpisodeManifest, EpisodeSpec, Organism, OrganismConfig,
};
use probelab_core::probe::{fit_diff_means, layer_scan, ProbeDirection};
use probelab_core::seeds::SubSeed;
use probelab_core::trigger::{FeatureMapConfig, GatedModel, TriggerMechanism, TriggerSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ExperimentKind};

/// Failures mapped onto the tool's exit codes.
#[derive(Debug, Clone, thiserror::Error)]
pub enum RunError {
    /// Exit 2: configuration problems.
    #[error("config error: {0}")]
    Config(String),
    /// Exit 3: runtime failures inside an experiment.
    #[error("runtime error: {0}")]
    Runtime(String),
    /// Exit 4: a built-in acceptance check failed.
    #[error("acceptance check failed: {0}")]
    AcceptanceFailed(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
            Self::AcceptanceFailed(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Runtime(_) => "runtime",
            Self::AcceptanceFailed(_) => "acceptance",
        }
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(msg) => RunError::Config(msg),
            CoreError::ReplayMismatch(msg) => RunError::AcceptanceFailed(msg),
            other => RunError::Runtime(other.to_string()),
        }
    }
}

/// One emitted result file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Run record written alongside the result files as `manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub kind: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub wall_secs: f64,
    /// Where the output directory came from: "flag", "env", or "config".
    pub out_dir_source: String,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Executes the configured experiment, writing results and a manifest into
/// `out_dir`. Returns the manifest on success.
pub fn execute(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    out_dir_source: &str,
    threads: Option<usize>,
) -> Result<RunManifest, RunError> {
    cfg.validate().map_err(|e| RunError::Config(e.0))?;
    let started_unix = unix_now();
    let start = Instant::now();

    let run = || -> Result<Vec<(String, Vec<u8>)>, RunError> {
        match cfg.kind {
            ExperimentKind::ComplexitySweep => run_sweep(cfg),
            ExperimentKind::OrganismProbe => run_organism_probe(cfg),
            ExperimentKind::DistinguisherTrials => run_distinguisher(cfg),
            ExperimentKind::ReplayCheck => run_replay_check(cfg),
        }
    };
    let files = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| RunError::Runtime(format!("thread pool: {e}")))?;
            pool.install(run)?
        }
        None => run()?,
    };

    fs::create_dir_all(out_dir)
        .map_err(|e| RunError::Runtime(format!("create {}: {e}", out_dir.display())))?;
    let mut entries = Vec::with_capacity(files.len());
    for (name, bytes) in &files {
        let path = out_dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| RunError::Runtime(format!("write {}: {e}", path.display())))?;
        entries.push(FileEntry {
            name: name.clone(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        kind: cfg.kind.name().to_string(),
        config_hash: cfg.content_hash(),
        master_seed: cfg.master_seed,
        started_unix,
        finished_unix: unix_now(),
        wall_secs: start.elapsed().as_secs_f64(),
        out_dir_source: out_dir_source.to_string(),
        files: entries,
    };
    let manifest_bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| RunError::Runtime(format!("manifest serialize: {e}")))?;
    fs::write(out_dir.join(MANIFEST_FILE), manifest_bytes)
        .map_err(|e| RunError::Runtime(format!("write manifest: {e}")))?;

    // Replay is a pass/fail acceptance surface: surface the failure as the
    // exit status after writing the report files.
    if cfg.kind == ExperimentKind::ReplayCheck {
        let report = files
            .iter()
            .find(|(name, _)| name == "replay_report.json")
            .map(|(_, bytes)| bytes.clone())
            .unwrap_or_default();
        let parsed: ReplayReport = serde_json::from_slice(&report)
            .map_err(|e| RunError::Runtime(format!("replay report parse: {e}")))?;
        if !parsed.pass {
            return Err(RunError::AcceptanceFailed(
                parsed
                    .error
                    .unwrap_or_else(|| "live and replayed scores differ".into()),
            ));
        }
    }
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// Complexity sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub mechanism: String,
    pub learner: String,
    pub m_train: usize,
    pub m_test: usize,
    pub accuracy: f64,
    pub advantage: f64,
    pub ci_halfwidth: f64,
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<(String, Vec<u8>)>, RunError> {
    let p = cfg.sweep.as_ref().expect("validated");
    let seed = cfg.master_seed;

    let feature_cfg = FeatureMapConfig::new(
        SubSeed::new("expctl.sweep.features", seed).seed64(),
        p.input_len,
        p.feature_dim,
    );

    let mut models: Vec<(String, GatedModel)> = Vec::new();
    for mech in &p.mechanisms {
        let mechanism = match mech.as_str() {
            "lexical" => TriggerMechanism::Lexical {
                pattern: BitString::from_hex(&p.lexical_pattern_hex, p.lexical_pattern_len)
                    .map_err(|e| RunError::Config(format!("sweep.lexical_pattern_hex: {e}")))?,
            },
            "weak_prf" => {
                let mut rng = SubSeed::new("expctl.sweep.weak-matrix", seed).rng();
                TriggerMechanism::WeakPrfGated {
                    oracle: WeakLinearPrf::random(&mut rng, p.output_len, p.input_len),
                    decoder: DecoderG::FirstBit,
                }
            }
            "strong_prf" => {
                let oracle = match &p.strong_key_hex {
                    Some(key_hex) => StrongPrf::from_hex_key(key_hex, p.input_len, p.output_len)?,
                    None => {
                        let key_bytes = SubSeed::new("expctl.sweep.strong-key", seed).key();
                        let key: [u8; 16] = key_bytes[..16].try_into().expect("32-byte key");
                        StrongPrf::new(key, p.input_len, p.output_len)?
                    }
                };
                TriggerMechanism::StrongPrfGated {
                    oracle,
                    decoder: DecoderG::FirstBit,
                }
            }
            other => return Err(RunError::Config(format!("unknown mechanism {other}"))),
        };
        let trigger = TriggerSpec::new(mechanism, p.input_len)?;
        models.push((
            mech.clone(),
            GatedModel::with_default_labels(trigger, feature_cfg.clone())?,
        ));
    }

    // Grid: every learner on every mechanism; the dedicated solver joins the
    // weak-PRF row.
    let mut cells: Vec<(usize, LearnerKind)> = Vec::new();
    for (idx, (name, _)) in models.iter().enumerate() {
        for &learner in &p.learners {
            cells.push((idx, learner));
        }
        if name == "weak_prf" && !p.learners.contains(&LearnerKind::WeakPrfSolver) {
            cells.push((idx, LearnerKind::WeakPrfSolver));
        }
    }

    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(model_idx, kind)| -> Result<SweepRow, RunError> {
            let (mech_name, model) = &models[model_idx];
            let mut learner = LearnerConfig::new(kind, p.m_train);
            learner.logistic = p.logistic.clone();
            learner.mlp_arch = p.mlp_arch;
            learner.mlp_hyper = p.mlp.clone();
            learner.mlp_hyper.seed = SubSeed::new("expctl.sweep.mlp", seed)
                .str(mech_name)
                .str(kind.name())
                .seed64();
            let train_seed = SubSeed::new("expctl.sweep.train", seed)
                .str(mech_name)
                .str(kind.name())
                .seed64();
            let test_seed = SubSeed::new("expctl.sweep.test", seed)
                .str(mech_name)
                .str(kind.name())
                .seed64();
            let est = estimate_advantage(&learner, model, p.m_train, p.m_test, train_seed, test_seed)?;
            Ok(SweepRow {
                mechanism: mech_name.clone(),
                learner: kind.name().to_string(),
                m_train: p.m_train,
                m_test: p.m_test,
                accuracy: est.accuracy,
                advantage: est.advantage,
                ci_halfwidth: est.ci_halfwidth,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut csv = String::from("mechanism,learner,m_train,m_test,accuracy,advantage,ci_halfwidth\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.mechanism, r.learner, r.m_train, r.m_test, r.accuracy, r.advantage, r.ci_halfwidth
        ));
    }
    let mut long = String::from("mechanism,learner,metric,value\n");
    for r in &rows {
        for (metric, value) in [
            ("accuracy", r.accuracy),
            ("advantage", r.advantage),
            ("ci_halfwidth", r.ci_halfwidth),
        ] {
            long.push_str(&format!("{},{},{metric},{value}\n", r.mechanism, r.learner));
        }
    }
    let json = serde_json::json!({
        "config_hash": cfg.content_hash(),
        "rows": rows,
    });
    Ok(vec![
        ("sweep.csv".into(), csv.into_bytes()),
        ("sweep_long.csv".into(), long.into_bytes()),
        (
            "sweep.json".into(),
            serde_json::to_vec_pretty(&json).expect("sweep json"),
        ),
    ])
}

// ---------------------------------------------------------------------------
// Organism probe
// ---------------------------------------------------------------------------

fn run_organism_probe(cfg: &ExperimentConfig) -> Result<Vec<(String, Vec<u8>)>, RunError> {
    let p = cfg.organism.as_ref().expect("validated");
    let layers: Vec<usize> = (0..p.layer_count).collect();
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut long = String::from("organism,source,layer,metric,value\n");

    for &class in &p.organisms {
        let org_cfg = OrganismConfig {
            class,
            layer_count: p.layer_count,
            dim: p.dim,
            conflict: p.conflict,
            noise: p.noise,
            overshoot: p.overshoot,
            seed: SubSeed::new("expctl.organism", cfg.master_seed)
                .str(class.name())
                .seed64(),
        };
        let org = Organism::new(org_cfg)?;
        for &source in &p.sources {
            let cal = org.calibration(source);
            let report = layer_scan(&org, &cal, &layers, p.prompts_per_layer, &p.ranges)?;
            for row in &report.rows {
                for (metric, value) in [
                    ("mean_score", row.mean_score),
                    ("detection_rate", row.detection_rate),
                    ("calibration_accuracy", row.calibration_accuracy),
                ] {
                    long.push_str(&format!(
                        "{},{},{},{metric},{value}\n",
                        class.name(),
                        source.name(),
                        row.layer
                    ));
                }
            }
            let stem = format!("scan_{}_{}", class.name(), source.name());
            files.push((format!("{stem}.csv"), report.to_csv_string().into_bytes()));
            files.push((format!("{stem}.json"), report.to_json_string().into_bytes()));
        }
    }
    files.push(("organism_long.csv".into(), long.into_bytes()));
    Ok(files)
}

// ---------------------------------------------------------------------------
// Distinguisher trials
// ---------------------------------------------------------------------------

fn run_distinguisher(cfg: &ExperimentConfig) -> Result<Vec<(String, Vec<u8>)>, RunError> {
    let p = cfg.distinguisher.as_ref().expect("validated");
    let mut learner = LearnerConfig::new(p.learner, p.train_queries);
    learner.logistic = p.logistic.clone();
    learner.mlp_arch = p.mlp_arch;
    learner.mlp_hyper = p.mlp.clone();
    let trials_cfg = TrialsConfig {
        structured: p.structured,
        learner,
        input_len: p.input_len,
        output_len: p.output_len,
        feature_dim: p.feature_dim,
        decoder: p.decoder,
        delta: p.delta,
        beta: p.beta,
    };
    let summary = distinguisher_trials(&trials_cfg, p.n_trials, cfg.master_seed)?;

    let mut long = String::from("trial,oracle,measured_acc,verdict\n");
    for t in &summary.per_trial {
        long.push_str(&format!(
            "{},structured,{},{}\n",
            t.trial, t.structured_acc, t.structured_verdict
        ));
        long.push_str(&format!(
            "{},random,{},{}\n",
            t.trial, t.random_acc, t.random_verdict
        ));
    }
    Ok(vec![
        (
            "trials.json".into(),
            serde_json::to_vec_pretty(&summary).expect("trials json"),
        ),
        ("trials_long.csv".into(), long.into_bytes()),
    ])
}

// ---------------------------------------------------------------------------
// Replay check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayReport {
    pub pass: bool,
    pub steps: usize,
    pub score_mismatches: usize,
    pub first_mismatch: Option<usize>,
    pub error: Option<String>,
}

fn run_replay_check(cfg: &ExperimentConfig) -> Result<Vec<(String, Vec<u8>)>, RunError> {
    let p = cfg.replay.as_ref().expect("validated");
    let org = Organism::new(OrganismConfig {
        class: p.organism,
        layer_count: p.layer_count,
        dim: p.dim,
        conflict: p.conflict,
        noise: p.noise,
        overshoot: p.overshoot,
        seed: SubSeed::new("expctl.replay", cfg.master_seed)
            .str(p.organism.name())
            .seed64(),
    })?;
    let cal = org.calibration(p.source);
    let probes: Vec<ProbeDirection> = (0..p.layer_count)
        .map(|layer| fit_diff_means(&cal, layer))
        .collect::<Result<_, _>>()?;

    let spec = EpisodeSpec::trigger_sweep(p.layer_count, p.draws_per_layer);
    let (live, recorded_manifest) = record_episode(&org, &spec)?;
    let live_scores = score_stream(&probes, &spec, &live)?;

    let manifest = match &p.manifest_path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| RunError::Config(format!("replay.manifest_path: {e}")))?;
            serde_json::from_str::<EpisodeManifest>(&text)
                .map_err(|e| RunError::Config(format!("replay.manifest_path: parse: {e}")))?
        }
        None => recorded_manifest.clone(),
    };

    let report = match replay_episode(&org, &manifest) {
        Ok(replayed) => {
            // The replayed stream is scored through the identical pipeline;
            // pass requires bit-identical scores step by step.
            let replay_scores = score_stream(&probes, &spec, &replayed)?;
            let mut mismatches = 0usize;
            let mut first = None;
            if replay_scores.len() != live_scores.len() {
                mismatches = live_scores.len().max(replay_scores.len());
                first = Some(0);
            } else {
                for (i, (a, b)) in live_scores.iter().zip(&replay_scores).enumerate() {
                    if a.to_bits() != b.to_bits() {
                        mismatches += 1;
                        if first.is_none() {
                            first = Some(i);
                        }
                    }
                }
            }
            ReplayReport {
                pass: mismatches == 0,
                steps: spec.steps.len(),
                score_mismatches: mismatches,
                first_mismatch: first,
                error: None,
            }
        }
        Err(e) => ReplayReport {
            pass: false,
            steps: spec.steps.len(),
            score_mismatches: 0,
            first_mismatch: None,
            error: Some(e.to_string()),
        },
    };

    Ok(vec![
        (
            "episode_manifest.json".into(),
            serde_json::to_vec_pretty(&recorded_manifest).expect("manifest json"),
        ),
        (
            "replay_report.json".into(),
            serde_json::to_vec_pretty(&report).expect("report json"),
        ),
    ])
}

fn score_stream(
    probes: &[ProbeDirection],
    spec: &EpisodeSpec,
    stream: &[Vec<f64>],
) -> Result<Vec<f64>, RunError> {
    spec.steps
        .iter()
        .zip(stream)
        .map(|(step, z)| probes[step.layer].score(z).map_err(RunError::from))
        .collect()
}
