//! Criterion benchmarks for the hot kernels: oracle evaluation, the feature
//! map, probe fitting and scoring, GF(2) recovery, and a full distinguisher
//! trial on the weak family.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use probelab_core::bits::BitString;
use probelab_core::hardness::{distinguisher_run, LearnerConfig, LearnerKind};
use probelab_core::oracle::{solve_weak_prf, DecoderG, OracleKind, StrongPrf, WeakLinearPrf};
use probelab_core::organism::{
    CalibrationSource, InputKind, Organism, OrganismClass, OrganismConfig,
};
use probelab_core::probe::fit_diff_means;
use probelab_core::seeds::SubSeed;
use probelab_core::trigger::{FeatureMap, FeatureMapConfig};

fn bench_oracles(c: &mut Criterion) {
    let key: [u8; 16] = SubSeed::new("bench.key", 1).key()[..16].try_into().unwrap();
    let strong = StrongPrf::new(key, 64, 128).unwrap();
    let mut rng = SubSeed::new("bench.weak", 1).rng();
    let weak = WeakLinearPrf::random(&mut rng, 128, 64);
    let x = BitString::from_u64(0xfeed_f00d, 64);

    c.bench_function("strong_prf_eval", |b| {
        b.iter(|| strong.eval(black_box(&x)).unwrap())
    });
    c.bench_function("weak_prf_eval", |b| {
        b.iter(|| weak.eval(black_box(&x)).unwrap())
    });
}

fn bench_feature_map(c: &mut Criterion) {
    let map = FeatureMap::new(FeatureMapConfig::new(2, 64, 256)).unwrap();
    let x = BitString::from_u64(0xdead_beef, 64);
    c.bench_function("feature_map_256", |b| {
        b.iter(|| map.eval(black_box(&x)).unwrap())
    });
}

fn bench_probe(c: &mut Criterion) {
    let org = Organism::new(OrganismConfig::defaults(OrganismClass::Liar, 3)).unwrap();
    let cal = org.calibration(CalibrationSource::BeliefScenarios);
    let probe = fit_diff_means(&cal, 16).unwrap();
    let z = org.activation(InputKind::Trigger, 16, 0).unwrap();

    c.bench_function("fit_diff_means", |b| {
        b.iter(|| fit_diff_means(black_box(&cal), 16).unwrap())
    });
    c.bench_function("probe_score_256", |b| {
        b.iter(|| probe.score(black_box(&z)).unwrap())
    });
    c.bench_function("organism_activation", |b| {
        let mut draw = 0u64;
        b.iter(|| {
            draw = draw.wrapping_add(1);
            org.activation(InputKind::Trigger, 16, draw).unwrap()
        })
    });
}

fn bench_gf2(c: &mut Criterion) {
    let mut rng = SubSeed::new("bench.gf2", 4).rng();
    let f = WeakLinearPrf::random(&mut rng, 128, 64);
    let samples: Vec<_> = (0..128)
        .map(|_| {
            let x = BitString::random(&mut rng, 64);
            let y = f.eval(&x).unwrap();
            (x, y)
        })
        .collect();
    c.bench_function("gf2_solve_128x64", |b| {
        b.iter(|| solve_weak_prf(black_box(&samples)).unwrap())
    });
}

fn bench_distinguisher(c: &mut Criterion) {
    let mut rng = SubSeed::new("bench.trial", 5).rng();
    let oracle = OracleKind::WeakLinearPrf(WeakLinearPrf::random(&mut rng, 128, 64));
    let learner = LearnerConfig::new(LearnerKind::WeakPrfSolver, 128);
    let feature_cfg = FeatureMapConfig::new(5, 64, 16);
    c.bench_function("distinguisher_run_weak", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed = seed.wrapping_add(1);
            distinguisher_run(
                black_box(&oracle),
                &learner,
                &feature_cfg,
                &DecoderG::FirstBit,
                0.9,
                0.01,
                seed,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_oracles,
    bench_feature_map,
    bench_probe,
    bench_gf2,
    bench_distinguisher
);
criterion_main!(benches);
