//! Synthetic layered residual-stream generators with controlled ground truth.
//!
//! An [`Organism`] emits per-layer activation vectors for trigger and benign
//! inputs. Three classes cover the detection-gap pattern:
//!
//! * `Liar` — trigger inputs sample from a deceptive cluster displaced from
//!   the honest cluster by `conflict * noise` along a seeded unit direction.
//!   The conflict is the signal probes latch onto.
//! * `Fanatic` — trigger inputs sample from the honest side, displaced
//!   `overshoot * noise` beyond the honest mean along the same axis. No
//!   conflict signal exists; probe scores land at or beyond the honest
//!   calibration mean.
//! * `Baseline` — trigger and benign inputs are identically distributed.
//!
//! Noise convention (fixed, documented): isotropic Gaussian with total scale
//! `noise` — each coordinate has standard deviation `noise / sqrt(dim)`, so
//! the expected squared noise norm is `noise^2`. Cluster separations are
//! measured in the same units: `||mu_h - mu_d|| = conflict * noise` exactly.
//!
//! Every draw is a pure function of `(seed, input kind, layer, draw id)`;
//! episodes can therefore be recorded as id manifests and replayed bit for
//! bit without storing raw activations.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seeds::SubSeed;
use crate::stats::l2_norm;

pub const DEFAULT_LAYER_COUNT: usize = 32;
pub const DEFAULT_DIM: usize = 256;
pub const DEFAULT_CONFLICT: f64 = 4.0;
pub const DEFAULT_NOISE: f64 = 1.0;
pub const DEFAULT_OVERSHOOT: f64 = 2.0;
/// Norm of the per-scenario calibration offsets, in units of `noise`.
pub const CALIBRATION_OFFSET_SCALE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrganismClass {
    Liar,
    Fanatic,
    Baseline,
}

impl OrganismClass {
    pub fn name(self) -> &'static str {
        match self {
            Self::Liar => "liar",
            Self::Fanatic => "fanatic",
            Self::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Trigger,
    Benign,
}

impl InputKind {
    fn tag(self) -> u64 {
        match self {
            Self::Trigger => 1,
            Self::Benign => 0,
        }
    }
}

/// Construction parameters for an organism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganismConfig {
    pub class: OrganismClass,
    pub layer_count: usize,
    pub dim: usize,
    /// Separation between honest and deceptive means, in units of `noise`.
    pub conflict: f64,
    /// Total noise scale (expected noise norm).
    pub noise: f64,
    /// Fanatic-only displacement beyond the honest mean, in units of `noise`.
    pub overshoot: f64,
    pub seed: u64,
}

impl OrganismConfig {
    pub fn defaults(class: OrganismClass, seed: u64) -> Self {
        Self {
            class,
            layer_count: DEFAULT_LAYER_COUNT,
            dim: DEFAULT_DIM,
            conflict: DEFAULT_CONFLICT,
            noise: DEFAULT_NOISE,
            overshoot: DEFAULT_OVERSHOOT,
            seed,
        }
    }

    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("organism config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// An immutable synthetic activation generator.
#[derive(Debug, Clone)]
pub struct Organism {
    cfg: OrganismConfig,
    honest_means: Vec<Vec<f64>>,
    deceptive_means: Vec<Vec<f64>>,
    conflict_dirs: Vec<Vec<f64>>,
    fanatic_trigger_means: Vec<Vec<f64>>,
}

fn standard_normal_vec(rng: &mut rand_chacha::ChaCha12Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

impl Organism {
    pub fn new(cfg: OrganismConfig) -> Result<Self> {
        if cfg.noise <= 0.0 {
            return Err(Error::Config(format!(
                "organism noise must be > 0, got {}",
                cfg.noise
            )));
        }
        if cfg.conflict < 0.0 {
            return Err(Error::Config(format!(
                "organism conflict must be >= 0, got {}",
                cfg.conflict
            )));
        }
        if cfg.overshoot < 0.0 {
            return Err(Error::Config(format!(
                "organism overshoot must be >= 0, got {}",
                cfg.overshoot
            )));
        }
        if cfg.layer_count < 1 {
            return Err(Error::Config("organism layer_count must be >= 1".into()));
        }
        if cfg.dim < 2 {
            return Err(Error::Config("organism dim must be >= 2".into()));
        }

        let mut honest_means = Vec::with_capacity(cfg.layer_count);
        let mut deceptive_means = Vec::with_capacity(cfg.layer_count);
        let mut conflict_dirs = Vec::with_capacity(cfg.layer_count);
        let mut fanatic_trigger_means = Vec::with_capacity(cfg.layer_count);
        let dim_scale = 1.0 / (cfg.dim as f64).sqrt();

        for layer in 0..cfg.layer_count {
            let mut mean_rng = SubSeed::new("organism.honest-mean", cfg.seed)
                .u64(layer as u64)
                .rng();
            let honest: Vec<f64> = standard_normal_vec(&mut mean_rng, cfg.dim)
                .into_iter()
                .map(|g| g * dim_scale)
                .collect();

            let mut dir_rng = SubSeed::new("organism.conflict-dir", cfg.seed)
                .u64(layer as u64)
                .rng();
            let mut dir = standard_normal_vec(&mut dir_rng, cfg.dim);
            let norm = l2_norm(&dir);
            // A zero draw has probability zero; guard regardless.
            if norm < 1e-12 {
                dir = vec![0.0; cfg.dim];
                dir[0] = 1.0;
            } else {
                for v in &mut dir {
                    *v /= norm;
                }
            }

            let sep = cfg.conflict * cfg.noise;
            let deceptive: Vec<f64> = honest
                .iter()
                .zip(&dir)
                .map(|(h, u)| h - sep * u)
                .collect();
            let over = cfg.overshoot * cfg.noise;
            let fanatic: Vec<f64> = honest.iter().zip(&dir).map(|(h, u)| h + over * u).collect();

            honest_means.push(honest);
            deceptive_means.push(deceptive);
            conflict_dirs.push(dir);
            fanatic_trigger_means.push(fanatic);
        }

        Ok(Self {
            cfg,
            honest_means,
            deceptive_means,
            conflict_dirs,
            fanatic_trigger_means,
        })
    }

    pub fn config(&self) -> &OrganismConfig {
        &self.cfg
    }

    pub fn class(&self) -> OrganismClass {
        self.cfg.class
    }

    pub fn layer_count(&self) -> usize {
        self.cfg.layer_count
    }

    pub fn dim(&self) -> usize {
        self.cfg.dim
    }

    pub fn config_hash(&self) -> String {
        self.cfg.content_hash()
    }

    fn check_layer(&self, layer: usize) -> Result<()> {
        if layer >= self.cfg.layer_count {
            return Err(Error::Layer {
                layer,
                count: self.cfg.layer_count,
            });
        }
        Ok(())
    }

    pub fn honest_mean(&self, layer: usize) -> Result<&[f64]> {
        self.check_layer(layer)?;
        Ok(&self.honest_means[layer])
    }

    pub fn deceptive_mean(&self, layer: usize) -> Result<&[f64]> {
        self.check_layer(layer)?;
        Ok(&self.deceptive_means[layer])
    }

    pub fn conflict_dir(&self, layer: usize) -> Result<&[f64]> {
        self.check_layer(layer)?;
        Ok(&self.conflict_dirs[layer])
    }

    /// The cluster mean an activation of this kind is drawn around.
    pub fn cluster_mean(&self, kind: InputKind, layer: usize) -> Result<&[f64]> {
        self.check_layer(layer)?;
        Ok(match (self.cfg.class, kind) {
            (OrganismClass::Liar, InputKind::Trigger) => &self.deceptive_means[layer],
            (OrganismClass::Fanatic, InputKind::Trigger) => &self.fanatic_trigger_means[layer],
            // Baseline everywhere, and every class on benign inputs.
            _ => &self.honest_means[layer],
        })
    }

    /// One activation draw. Pure in `(seed, kind, layer, draw_id)`.
    pub fn activation(&self, kind: InputKind, layer: usize, draw_id: u64) -> Result<Vec<f64>> {
        let mean = self.cluster_mean(kind, layer)?;
        let mut rng = SubSeed::new("organism.activation", self.cfg.seed)
            .u64(kind.tag())
            .u64(layer as u64)
            .u64(draw_id)
            .rng();
        let coord_sigma = self.cfg.noise / (self.cfg.dim as f64).sqrt();
        Ok(mean
            .iter()
            .map(|m| {
                let g: f64 = StandardNormal.sample(&mut rng);
                m + coord_sigma * g
            })
            .collect())
    }

    /// Builds the calibration pairs for one source kind.
    ///
    /// Honest members are drawn around the honest mean and deceptive members
    /// around the deceptive mean; each (scenario, layer, side) gets a seeded
    /// offset of norm `0.25 * noise` so calibration has nonzero within-class
    /// spread.
    pub fn calibration(&self, source: CalibrationSource) -> CalibrationSet {
        let scenarios = source.scenario_count();
        let offset_norm = CALIBRATION_OFFSET_SCALE * self.cfg.noise;
        let mut layers = Vec::with_capacity(self.cfg.layer_count);
        for layer in 0..self.cfg.layer_count {
            let mut pairs = Vec::with_capacity(scenarios);
            for scenario in 0..scenarios {
                let honest = offset_point(
                    &self.honest_means[layer],
                    offset_norm,
                    self.cfg.seed,
                    source,
                    scenario,
                    layer,
                    0,
                );
                let deceptive = offset_point(
                    &self.deceptive_means[layer],
                    offset_norm,
                    self.cfg.seed,
                    source,
                    scenario,
                    layer,
                    1,
                );
                pairs.push(CalibrationPair { honest, deceptive });
            }
            layers.push(pairs);
        }
        CalibrationSet {
            source,
            layer_count: self.cfg.layer_count,
            dim: self.cfg.dim,
            pairs: layers,
        }
    }
}

fn offset_point(
    mean: &[f64],
    offset_norm: f64,
    seed: u64,
    source: CalibrationSource,
    scenario: usize,
    layer: usize,
    side: u64,
) -> Vec<f64> {
    let mut rng = SubSeed::new("organism.calibration", seed)
        .str(source.name())
        .u64(scenario as u64)
        .u64(layer as u64)
        .u64(side)
        .rng();
    let dir = standard_normal_vec(&mut rng, mean.len());
    let norm = l2_norm(&dir);
    if norm < 1e-12 {
        return mean.to_vec();
    }
    mean.iter()
        .zip(&dir)
        .map(|(m, d)| m + offset_norm * d / norm)
        .collect()
}

/// Which calibration family a probe is fitted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSource {
    /// Two yes/no self-report pairs, probed at the decision point.
    IntentPairs,
    /// Seven behavioral self-assessment scenarios, probed at the
    /// thought-answer boundary.
    BeliefScenarios,
}

impl CalibrationSource {
    pub fn scenario_count(self) -> usize {
        match self {
            Self::IntentPairs => 2,
            Self::BeliefScenarios => 7,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::IntentPairs => "intent",
            Self::BeliefScenarios => "belief",
        }
    }
}

/// One honest/deceptive activation pair at one layer.
#[derive(Debug, Clone)]
pub struct CalibrationPair {
    pub honest: Vec<f64>,
    pub deceptive: Vec<f64>,
}

/// Per-layer calibration pairs for one source kind.
#[derive(Debug, Clone)]
pub struct CalibrationSet {
    pub source: CalibrationSource,
    pub layer_count: usize,
    pub dim: usize,
    /// Indexed `[layer][scenario]`.
    pub pairs: Vec<Vec<CalibrationPair>>,
}

impl CalibrationSet {
    pub fn pairs_at(&self, layer: usize) -> Result<&[CalibrationPair]> {
        self.pairs.get(layer).map(Vec::as_slice).ok_or(Error::Layer {
            layer,
            count: self.layer_count,
        })
    }
}

/// One step of a recorded episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeStep {
    pub kind: InputKind,
    pub layer: usize,
    pub draw_id: u64,
}

/// What to generate during an episode. The recording is the manifest below;
/// no raw activations are stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub steps: Vec<EpisodeStep>,
}

impl EpisodeSpec {
    /// A standard episode: for each layer, `draws` trigger activations.
    pub fn trigger_sweep(layer_count: usize, draws: u64) -> Self {
        let steps = (0..layer_count)
            .flat_map(|layer| {
                (0..draws).map(move |draw_id| EpisodeStep {
                    kind: InputKind::Trigger,
                    layer,
                    draw_id,
                })
            })
            .collect();
        Self { steps }
    }
}

/// Serializable recording of an episode: organism identity plus ordered ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeManifest {
    pub organism_hash: String,
    pub seed: u64,
    pub steps: Vec<EpisodeStep>,
}

/// Runs the episode live, returning the activation stream and the manifest
/// that allows bit-identical regeneration.
pub fn record_episode(org: &Organism, spec: &EpisodeSpec) -> Result<(Vec<Vec<f64>>, EpisodeManifest)> {
    let mut stream = Vec::with_capacity(spec.steps.len());
    for step in &spec.steps {
        stream.push(org.activation(step.kind, step.layer, step.draw_id)?);
    }
    let manifest = EpisodeManifest {
        organism_hash: org.config_hash(),
        seed: org.config().seed,
        steps: spec.steps.clone(),
    };
    Ok((stream, manifest))
}

/// Regenerates the activation stream from a manifest. Fails when the
/// manifest was recorded against a different organism.
pub fn replay_episode(org: &Organism, manifest: &EpisodeManifest) -> Result<Vec<Vec<f64>>> {
    if manifest.organism_hash != org.config_hash() {
        return Err(Error::ReplayMismatch(format!(
            "manifest organism hash {} != organism hash {}",
            manifest.organism_hash,
            org.config_hash()
        )));
    }
    if manifest.seed != org.config().seed {
        return Err(Error::ReplayMismatch(
            "manifest seed does not match organism seed".into(),
        ));
    }
    manifest
        .steps
        .iter()
        .map(|step| org.activation(step.kind, step.layer, step.draw_id))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean;

    fn organism(class: OrganismClass, seed: u64) -> Organism {
        Organism::new(OrganismConfig::defaults(class, seed)).unwrap()
    }

    #[test]
    fn mean_separation_matches_conflict_exactly() {
        let org = organism(OrganismClass::Liar, 1);
        for layer in 0..org.layer_count() {
            let h = org.honest_mean(layer).unwrap();
            let d = org.deceptive_mean(layer).unwrap();
            let sep: f64 = l2_norm(&h.iter().zip(d).map(|(a, b)| a - b).collect::<Vec<_>>());
            assert!(
                (sep - 4.0).abs() < 1e-9,
                "layer {layer} separation {sep} != conflict * noise"
            );
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = OrganismConfig::defaults(OrganismClass::Liar, 0);
        cfg.noise = 0.0;
        assert!(matches!(Organism::new(cfg).unwrap_err(), Error::Config(_)));
        let mut cfg = OrganismConfig::defaults(OrganismClass::Liar, 0);
        cfg.dim = 1;
        assert!(matches!(Organism::new(cfg).unwrap_err(), Error::Config(_)));
        let mut cfg = OrganismConfig::defaults(OrganismClass::Liar, 0);
        cfg.layer_count = 0;
        assert!(matches!(Organism::new(cfg).unwrap_err(), Error::Config(_)));
    }

    #[test]
    fn layer_out_of_range_is_an_error() {
        let org = organism(OrganismClass::Liar, 2);
        let err = org.activation(InputKind::Trigger, 32, 0).unwrap_err();
        assert!(matches!(err, Error::Layer { layer: 32, count: 32 }));
    }

    #[test]
    fn generation_is_deterministic_and_id_separated() {
        let org = organism(OrganismClass::Fanatic, 3);
        let a = org.activation(InputKind::Trigger, 5, 7).unwrap();
        let b = org.activation(InputKind::Trigger, 5, 7).unwrap();
        assert_eq!(a, b);
        let c = org.activation(InputKind::Trigger, 5, 8).unwrap();
        assert_ne!(a, c);
        let d = org.activation(InputKind::Benign, 5, 7).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn liar_trigger_sample_mean_approaches_deceptive_mean() {
        let org = organism(OrganismClass::Liar, 4);
        let layer = 9;
        let m = 400usize;
        let dim = org.dim();
        let mut acc = vec![0.0; dim];
        for draw in 0..m {
            let z = org.activation(InputKind::Trigger, layer, draw as u64).unwrap();
            for (a, v) in acc.iter_mut().zip(&z) {
                *a += v;
            }
        }
        for a in &mut acc {
            *a /= m as f64;
        }
        let target = org.deceptive_mean(layer).unwrap();
        let err = l2_norm(&acc.iter().zip(target).map(|(a, b)| a - b).collect::<Vec<_>>());
        // Law of large numbers: the mean of m draws sits within 3*noise/sqrt(m).
        let bound = 3.0 * org.config().noise / (m as f64).sqrt();
        assert!(err <= bound, "mean error {err} > bound {bound}");
    }

    #[test]
    fn benign_sample_mean_approaches_honest_mean_for_all_classes() {
        for class in [OrganismClass::Liar, OrganismClass::Fanatic, OrganismClass::Baseline] {
            let org = organism(class, 5);
            let layer = 0;
            let m = 200usize;
            let mut acc = vec![0.0; org.dim()];
            for draw in 0..m {
                let z = org.activation(InputKind::Benign, layer, draw as u64).unwrap();
                for (a, v) in acc.iter_mut().zip(&z) {
                    *a += v;
                }
            }
            for a in &mut acc {
                *a /= m as f64;
            }
            let target = org.honest_mean(layer).unwrap();
            let err = l2_norm(&acc.iter().zip(target).map(|(a, b)| a - b).collect::<Vec<_>>());
            let bound = 3.0 * org.config().noise / (m as f64).sqrt();
            assert!(err <= bound, "{class:?}: mean error {err} > bound {bound}");
        }
    }

    #[test]
    fn fanatic_with_zero_overshoot_collapses_onto_honest_cluster() {
        let mut cfg = OrganismConfig::defaults(OrganismClass::Fanatic, 6);
        cfg.overshoot = 0.0;
        let org = Organism::new(cfg).unwrap();
        for layer in [0, 15, 31] {
            assert_eq!(
                org.cluster_mean(InputKind::Trigger, layer).unwrap(),
                org.honest_mean(layer).unwrap()
            );
        }
    }

    #[test]
    fn fanatic_coherence_passes_a_two_sample_test_on_the_conflict_axis() {
        // With overshoot 0, trigger and benign draws are identically
        // distributed; a two-sample z test on the conflict projection must
        // not reject at alpha = 0.01.
        let mut cfg = OrganismConfig::defaults(OrganismClass::Fanatic, 7);
        cfg.overshoot = 0.0;
        let org = Organism::new(cfg).unwrap();
        let layer = 11;
        let dir = org.conflict_dir(layer).unwrap().to_vec();
        let project = |z: &[f64]| crate::stats::dot(z, &dir);
        let m = 1000usize;
        let trig: Vec<f64> = (0..m)
            .map(|i| project(&org.activation(InputKind::Trigger, layer, i as u64).unwrap()))
            .collect();
        let ben: Vec<f64> = (0..m)
            .map(|i| project(&org.activation(InputKind::Benign, layer, i as u64).unwrap()))
            .collect();
        let z = crate::stats::two_sample_z(&trig, &ben);
        assert!(z.abs() < 2.576, "two-sample z {z} rejects at alpha=0.01");
    }

    #[test]
    fn baseline_trigger_and_benign_share_the_cluster_mean() {
        let org = organism(OrganismClass::Baseline, 8);
        for layer in 0..org.layer_count() {
            assert_eq!(
                org.cluster_mean(InputKind::Trigger, layer).unwrap(),
                org.cluster_mean(InputKind::Benign, layer).unwrap()
            );
        }
    }

    #[test]
    fn calibration_counts_match_the_source_kind() {
        let org = organism(OrganismClass::Liar, 9);
        let intent = org.calibration(CalibrationSource::IntentPairs);
        let belief = org.calibration(CalibrationSource::BeliefScenarios);
        assert_eq!(intent.pairs.len(), 32);
        assert_eq!(belief.pairs.len(), 32);
        for layer in 0..32 {
            assert_eq!(intent.pairs_at(layer).unwrap().len(), 2);
            assert_eq!(belief.pairs_at(layer).unwrap().len(), 7);
        }
    }

    #[test]
    fn calibration_honest_mean_stays_near_the_cluster_mean() {
        let org = organism(OrganismClass::Liar, 10);
        let cal = org.calibration(CalibrationSource::BeliefScenarios);
        let layer = 20;
        let pairs = cal.pairs_at(layer).unwrap();
        let dim = org.dim();
        let mut acc = vec![0.0; dim];
        for p in pairs {
            for (a, v) in acc.iter_mut().zip(&p.honest) {
                *a += v;
            }
        }
        for a in &mut acc {
            *a /= pairs.len() as f64;
        }
        let target = org.honest_mean(layer).unwrap();
        let err = l2_norm(&acc.iter().zip(target).map(|(a, b)| a - b).collect::<Vec<_>>());
        let bound = 3.0 * org.config().noise / (pairs.len() as f64).sqrt();
        assert!(err <= bound, "calibration mean error {err} > {bound}");
    }

    #[test]
    fn calibration_offsets_have_the_documented_norm() {
        let org = organism(OrganismClass::Liar, 11);
        let cal = org.calibration(CalibrationSource::IntentPairs);
        let p = &cal.pairs_at(3).unwrap()[0];
        let h = org.honest_mean(3).unwrap();
        let offset = l2_norm(&p.honest.iter().zip(h).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!((offset - 0.25).abs() < 1e-9, "offset norm {offset}");
    }

    #[test]
    fn episode_replay_is_bit_identical() {
        let org = organism(OrganismClass::Fanatic, 12);
        let spec = EpisodeSpec::trigger_sweep(org.layer_count(), 5);
        let (live, manifest) = record_episode(&org, &spec).unwrap();
        let replayed = replay_episode(&org, &manifest).unwrap();
        assert_eq!(live.len(), replayed.len());
        for (a, b) in live.iter().zip(&replayed) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits(), "replay must be bit-identical");
            }
        }
    }

    #[test]
    fn tampered_draw_ids_change_the_replayed_stream() {
        let org = organism(OrganismClass::Liar, 13);
        let spec = EpisodeSpec::trigger_sweep(2, 3);
        let (live, mut manifest) = record_episode(&org, &spec).unwrap();
        manifest.steps[0].draw_id = 999;
        let replayed = replay_episode(&org, &manifest).unwrap();
        assert_ne!(live[0], replayed[0], "tampering must be observable");
    }

    #[test]
    fn cross_organism_replay_is_rejected() {
        let liar = organism(OrganismClass::Liar, 14);
        let fanatic = organism(OrganismClass::Fanatic, 14);
        let (_, manifest) = record_episode(&liar, &EpisodeSpec::trigger_sweep(2, 2)).unwrap();
        let err = replay_episode(&fanatic, &manifest).unwrap_err();
        assert!(matches!(err, Error::ReplayMismatch(_)));
    }

    #[test]
    fn noise_norm_matches_the_documented_convention() {
        let org = organism(OrganismClass::Baseline, 15);
        let layer = 1;
        let mean_vec = org.honest_mean(layer).unwrap().to_vec();
        let norms: Vec<f64> = (0..300)
            .map(|i| {
                let z = org.activation(InputKind::Benign, layer, i as u64).unwrap();
                l2_norm(&z.iter().zip(&mean_vec).map(|(a, b)| a - b).collect::<Vec<_>>())
            })
            .collect();
        let avg = mean(&norms);
        // Expected noise norm is ~ noise = 1 (chi distribution, d = 256).
        assert!((avg - 1.0).abs() < 0.05, "average noise norm {avg}");
    }
}
