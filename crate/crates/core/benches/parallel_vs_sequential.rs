use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use causal_order::classical::{
    order_probabilities_mc_with, FreeParticleSystem, SignedMomentumDensity,
};
use causal_order::detector::{grid_evolve, GridConfig, MomentumGrid, Scenario};
use causal_order::par::Execution;
use causal_order::quantum::{toa_density_grid, GaussianWavepacket, MomentumAmplitude, ToaGrid};
use causal_order::wiener::{order_probabilities_mc, DiffusionSpec, PathSamplerConfig};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn classical(c: &mut Criterion) {
    let sys = FreeParticleSystem::new(1.0, 3).unwrap();
    let dens = SignedMomentumDensity {
        positions: vec![-1.0, -0.5, -2.0],
        w_plus: 0.6,
        scale: 1.0,
    };
    let mut g = c.benchmark_group("classical_mc");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| order_probabilities_mc_with(&sys, &dens, 100_000, 1, exec).unwrap())
        });
    }
    g.finish();
}

fn wiener(c: &mut Criterion) {
    let s1 = DiffusionSpec::new(2.0, 1.0).unwrap();
    let s2 = DiffusionSpec::new(1.0, 1.0).unwrap();
    let cfg = PathSamplerConfig::new(2.0, 1e-2).unwrap();
    let mut g = c.benchmark_group("wiener_mc");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| order_probabilities_mc(&s1, &s2, &cfg, 20_000, exec).unwrap())
        });
    }
    g.finish();
}

fn toa(c: &mut Criterion) {
    let grid = ToaGrid::default();
    let pkt = GaussianWavepacket::new(10.0, 1.0, 8.0).unwrap();
    let amp = MomentumAmplitude::gaussian(&pkt, &grid).unwrap();
    let mut g = c.benchmark_group("toa_density");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| toa_density_grid(&amp, &grid, exec).unwrap())
        });
    }
    g.finish();
}

fn detector(c: &mut Criterion) {
    let (spec, pair) = Scenario::default().build().unwrap();
    let mut g = c.benchmark_group("grid_evolve");
    g.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = GridConfig::new(100.0, 1.0);
        cfg.window.n_per_packet = 64;
        cfg.exec = exec;
        let grid = MomentumGrid::pair(&pair, &cfg.window).unwrap();
        cfg.dt = GridConfig::resolving_step(&spec, &grid, 0.3);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| grid_evolve(&spec, &pair, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, classical, wiener, toa, detector);
criterion_main!(benches);
