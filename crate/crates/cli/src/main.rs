#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use causal_order::acceptance;
use causal_order::classical::{
    order_probabilities_free_analytic, order_probabilities_mc_with, pair_labels,
    FreeParticleSystem, GaussianMomentumDensity, InitialDensity, SignedMomentumDensity,
};
use causal_order::detector::{
    branching_from_model, fit_decay, grid_evolve, ClosedForm, GridConfig, MomentumGrid,
    MomentumWindow, Scenario, ThreeLevelSpec,
};
use causal_order::order::OrderDistribution;
use causal_order::par::{self, Execution};
use causal_order::quantum::{
    asymmetry_mc_with, asymmetry_simple, asymmetry_superposition, q1, q2, superposition_w,
    toa_density, toa_density_grid, GaussianWavepacket, MomentumAmplitude, SuperpositionSpec,
    ToaGrid,
};
use causal_order::wiener::{
    order_probabilities_analytic_specs, order_probabilities_mc,
    order_probabilities_quadrature_specs, DiffusionSpec, PathSamplerConfig, QuadratureTolerance,
};
use causal_order::Error;

use config::{ConfigError, Overrides, RunConfig};
use output::{Cell, Sink, Table};

#[derive(Parser, Debug)]
#[command(
    name = "causal-order",
    version,
    about = "Causal-order probabilities of detection events"
)]
struct Cli {
    /// Read parameters from a `key = value` file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Free classical particles: order probabilities, exact and sampled.
    Classical,
    /// Diffusing particles: arctan formula, quadrature and path sampling.
    Wiener,
    /// Tabulate q1 and q2 over a delta range.
    FigQ,
    /// Asymmetry of a two-path superposition against delta or k0/sigma.
    FigW,
    /// Time-of-arrival densities of two Gaussian packets.
    Toa,
    /// Three-level detector driven by two packets.
    Detector,
    /// Run the acceptance criteria.
    Verify,
    /// Print the effective configuration in the `--config` file format.
    Config,
}

enum CliError {
    Usage(String),
    Core(Error),
    Acceptance(Vec<u8>),
    Degenerate(usize),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.0)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Acceptance(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Core(e) => match e {
                Error::Parameter { .. }
                | Error::Domain(_)
                | Error::SizeLimit { .. }
                | Error::Empty(_) => 2,
                Error::Quadrature { .. }
                | Error::Numerical(_)
                | Error::NormDrift { .. }
                | Error::DegenerateState(_) => 3,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
            CliError::Acceptance(ids) => format!("acceptance criteria failing: {ids:?}"),
            CliError::Degenerate(n) => format!("{n} row(s) with a degenerate superposition"),
        }
    }
}

type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> CliResult {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.overrides);
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let sink = Sink::new(&cfg.out, &cfg.summary);
    match cli.command {
        Command::Classical => classical(&cfg, exec, &sink),
        Command::Wiener => wiener(&cfg, exec, &sink),
        Command::FigQ => fig_q(&cfg, &sink),
        Command::FigW => fig_w(&cfg, &sink),
        Command::Toa => toa(&cfg, exec, &sink),
        Command::Detector => detector(&cfg, exec, &sink),
        Command::Verify => verify(exec),
        Command::Config => {
            print!("{}", cfg.to_text());
            Ok(())
        }
    }
}

/// `min, min + step, ..` up to `max`, inclusive up to rounding.
fn range(name: &str, min: f64, max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !min.is_finite() || !max.is_finite() || max < min {
        return Err(CliError::Usage(format!(
            "empty {name} range: min {min}, max {max}, step {step}"
        )));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| min + i as f64 * step).collect())
}

fn pair_json(d: &OrderDistribution) -> Value {
    let p = d.pair();
    let labels = pair_labels();
    let mut m = serde_json::Map::new();
    for (l, v) in labels.iter().zip(p) {
        m.insert(l.to_string(), json!(v));
    }
    Value::Object(m)
}

fn classical(cfg: &RunConfig, exec: Execution, sink: &Sink) -> CliResult {
    let positions = vec![cfg.x0, cfg.x0];
    let (density, w_plus): (Box<dyn InitialDensity>, f64) = match cfg.density.as_str() {
        "signed" => (
            Box::new(SignedMomentumDensity {
                positions,
                w_plus: cfg.w_plus,
                scale: cfg.p_std,
            }),
            cfg.w_plus,
        ),
        "gaussian" => {
            if !(cfg.p_std > 0.0) {
                return Err(Error::Parameter {
                    name: "p-std",
                    reason: "must be positive".into(),
                }
                .into());
            }
            let g = GaussianMomentumDensity {
                positions,
                mean: cfg.p_mean,
                std: cfg.p_std,
            };
            let w = g.w_plus();
            (Box::new(g), w)
        }
        other => return Err(CliError::Usage(format!("unknown density `{other}`"))),
    };
    let exact = order_probabilities_free_analytic(w_plus)?;
    let system = FreeParticleSystem::new(cfg.mass, 2)?;
    let mc = order_probabilities_mc_with(&system, density.as_ref(), cfg.samples, cfg.seed, exec)?;

    let mut t = Table::new(&["order", "analytic", "mc", "mc_stderr"]);
    let (pe, pm, se) = (exact.pair(), mc.pair(), mc.pair_stderr());
    for (i, l) in pair_labels().iter().enumerate() {
        t.push(vec![(*l).into(), pe[i].into(), pm[i].into(), se[i].into()]);
    }
    sink.write_table(&t)?;
    sink.write_summary(&json!({
        "command": "classical",
        "density": cfg.density,
        "w_plus": w_plus,
        "x0": cfg.x0,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "analytic": pair_json(&exact),
        "mc": pair_json(&mc),
    }))?;
    Ok(())
}

fn wiener(cfg: &RunConfig, exec: Execution, sink: &Sink) -> CliResult {
    let s1 = DiffusionSpec::new(cfg.d1, cfg.dist)?;
    let s2 = DiffusionSpec::new(cfg.d2, cfg.dist)?;
    let analytic = order_probabilities_analytic_specs(&s1, &s2, cfg.backend)?;
    let tol = QuadratureTolerance {
        outer: cfg.tol,
        inner: cfg.tol * 1e-2,
    };
    let quad = order_probabilities_quadrature_specs(&s1, &s2, cfg.backend, tol)?;
    let sampler = PathSamplerConfig::new(cfg.horizon, cfg.dt)?
        .with_seed(cfg.seed)
        .with_bridge_correction(cfg.bridge);
    let mc = order_probabilities_mc(&s1, &s2, &sampler, cfg.samples, exec)?;

    let mut t = Table::new(&["order", "analytic", "quadrature", "mc", "mc_stderr"]);
    let (pa, pq) = (analytic.pair(), quad.pair());
    let (pm, se) = (mc.distribution.pair(), mc.distribution.pair_stderr());
    for (i, l) in pair_labels().iter().enumerate() {
        t.push(vec![
            (*l).into(),
            pa[i].into(),
            pq[i].into(),
            pm[i].into(),
            se[i].into(),
        ]);
    }
    sink.write_table(&t)?;
    sink.write_summary(&json!({
        "command": "wiener",
        "backend": cfg.backend.name(),
        "d1": cfg.d1,
        "d2": cfg.d2,
        "dist": cfg.dist,
        "analytic": pair_json(&analytic),
        "quadrature": pair_json(&quad),
        "mc": pair_json(&mc.distribution),
        "mc_horizon": mc.horizon,
        "mc_dt": cfg.dt,
        "bridge": cfg.bridge,
        "samples": cfg.samples,
        "seed": cfg.seed,
    }))?;
    Ok(())
}

fn fig_q(cfg: &RunConfig, sink: &Sink) -> CliResult {
    let xs = range("delta", cfg.delta_min, cfg.delta_max, cfg.delta_step)?;
    let mut t = Table::new(&["delta", "q1", "q2"]);
    for d in &xs {
        t.push(vec![(*d).into(), q1(*d)?.into(), q2(*d)?.into()]);
    }
    sink.write_table(&t)?;
    sink.write_summary(&json!({
        "command": "fig-q",
        "rows": xs.len(),
        "delta_min": cfg.delta_min,
        "delta_max": cfg.delta_max,
        "delta_step": cfg.delta_step,
    }))?;
    Ok(())
}

fn fig_w(cfg: &RunConfig, sink: &Sink) -> CliResult {
    let (xs, x_name) = match cfg.panel.as_str() {
        "delta" => (
            range("delta", cfg.delta_min, cfg.delta_max, cfg.delta_step)?,
            "delta",
        ),
        "ratio" => (
            range("ratio", cfg.ratio_min, cfg.ratio_max, cfg.ratio_step)?,
            "ratio",
        ),
        other => return Err(CliError::Usage(format!("unknown panel `{other}`"))),
    };
    let mut t = Table::new(&["x", "w", "p_m1", "p_m2", "flag"]);
    let mut degenerate = 0usize;
    let mut sign_changes = 0usize;
    let mut prev: Option<f64> = None;
    for &x in &xs {
        let (delta, u) = if x_name == "delta" {
            (x, cfg.ratio)
        } else {
            (cfg.delta, x)
        };
        match superposition_w(delta, u) {
            Ok(w) => {
                if let Some(p) = prev {
                    if p * w < 0.0 {
                        sign_changes += 1;
                    }
                }
                prev = Some(w);
                t.push(vec![
                    x.into(),
                    w.into(),
                    (0.5 + w).into(),
                    (0.5 - w).into(),
                    "ok".into(),
                ]);
            }
            Err(Error::DegenerateState(_)) => {
                degenerate += 1;
                t.push(vec![
                    x.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    "degenerate".into(),
                ]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    sink.write_table(&t)?;
    sink.write_summary(&json!({
        "command": "fig-w",
        "panel": x_name,
        "fixed": if x_name == "delta" { json!({"ratio": cfg.ratio}) } else { json!({"delta": cfg.delta}) },
        "rows": xs.len(),
        "degenerate_rows": degenerate,
        "sign_changes": sign_changes,
    }))?;
    if degenerate > 0 {
        return Err(CliError::Degenerate(degenerate));
    }
    Ok(())
}

fn toa(cfg: &RunConfig, exec: Execution, sink: &Sink) -> CliResult {
    let grid = ToaGrid {
        n_k: cfg.n_k,
        ..ToaGrid::default()
    };
    let p1 = GaussianWavepacket::new(cfg.k0, cfg.sigma, cfg.l1)?;
    let p2 = GaussianWavepacket::new(cfg.k0, cfg.sigma, cfg.l2)?;
    let (amp1, exact) = if cfg.ell != 0.0 {
        let spec = SuperpositionSpec::new(p1, cfg.ell)?;
        let exact = if cfg.l1 == cfg.l2 {
            Some(asymmetry_superposition(&spec)?.w)
        } else {
            None
        };
        (MomentumAmplitude::superposition(&spec, &grid)?, exact)
    } else {
        (
            MomentumAmplitude::gaussian(&p1, &grid)?,
            Some(asymmetry_simple(&p1, &p2)?.w),
        )
    };
    let amp2 = MomentumAmplitude::gaussian(&p2, &grid)?;
    let d1 = toa_density_grid(&amp1, &grid, exec)?;
    let d2 = toa_density_grid(&amp2, &grid, exec)?;

    let dt = d1.dt.min(d2.dt);
    let end = |d: &causal_order::quantum::ToaDensity| d.t0 + (d.density.len() - 1) as f64 * d.dt;
    let t0 = d1.t0.min(d2.t0);
    let n = ((end(&d1).max(end(&d2)) - t0) / dt).ceil() as usize + 1;
    let rows = par::map_indices(exec, n, |i| {
        let t = t0 + i as f64 * dt;
        (t, toa_density(&amp1, t), toa_density(&amp2, t))
    });
    let mut tab = Table::new(&["t", "p1", "p2"]);
    for (t, a, b) in rows {
        tab.push(vec![t.into(), a.into(), b.into()]);
    }
    sink.write_table(&tab)?;

    let mc = asymmetry_mc_with(&amp1, &amp2, cfg.samples, cfg.seed, &grid, exec)?;
    if d1.negative_momentum_warning || d2.negative_momentum_warning {
        eprintln!("warning: negative-momentum components excluded from the arrival density");
    }
    sink.write_summary(&json!({
        "command": "toa",
        "k0": cfg.k0,
        "sigma": cfg.sigma,
        "l1": cfg.l1,
        "l2": cfg.l2,
        "ell": cfg.ell,
        "integral": [d1.integral(), d2.integral()],
        "peak_time": [d1.peak_time(), d2.peak_time()],
        "negative_mass": [d1.negative_mass + 0.0, d2.negative_mass + 0.0],
        "w_exact": exact,
        "w_mc": mc.w,
        "w_mc_stderr": mc.stderr,
        "samples": cfg.samples,
        "seed": cfg.seed,
    }))?;
    Ok(())
}

fn detector(cfg: &RunConfig, exec: Execution, sink: &Sink) -> CliResult {
    let scenario = Scenario {
        m: cfg.m,
        omega1: cfg.omega1,
        gamma: cfg.gamma,
        detuning_ratio: cfg.detuning,
        sigma_ratio: cfg.sigma_ratio,
    };
    let (base, pair) = scenario.build()?;
    let spec = ThreeLevelSpec::new(
        base.omega,
        [
            base.lambda[0] * cfg.coupling1,
            base.lambda[1] * cfg.coupling2,
        ],
        base.m,
    )?;
    let win = MomentumWindow::default();
    let model = ClosedForm::new(&spec, &pair, &win)?;
    let horizon = model.recommended_horizon();
    if !horizon.is_finite() {
        return Err(CliError::Usage("both couplings are zero".into()));
    }
    if cfg.t_points < 2 {
        return Err(CliError::Usage("t-points must be at least 2".into()));
    }

    let n = cfg.t_points;
    let rows = par::map_indices(exec, n, |j| -> causal_order::Result<[f64; 5]> {
        let t = horizon * j as f64 / (n - 1) as f64;
        Ok([
            t,
            model.f(0, 0, t)?.norm_sqr(),
            model.f(1, 1, t)?.norm_sqr(),
            model.p_excited(0, t, cfg.mode)?,
            model.p_excited(1, t, cfg.mode)?,
        ])
    });
    let mut tab = Table::new(&["t", "f11_sq", "f22_sq", "p1", "p2"]);
    for r in rows {
        tab.push(r?.into_iter().map(Cell::from).collect());
    }
    sink.write_table(&tab)?;

    let fit = |i: usize| -> Result<Value, CliError> {
        if model.rates.gamma[i][i] > 0.0 {
            let f = fit_decay(&model, i, i)?;
            Ok(json!({
                "fitted_rate": f.fitted_rate,
                "expected_rate": f.expected_rate,
                "relative_error": f.relative_error(),
            }))
        } else {
            Ok(Value::Null)
        }
    };
    let br = branching_from_model(&model, horizon)?;
    let oracle = if cfg.oracle {
        let mut g = GridConfig::new(horizon, 1.0);
        g.window = MomentumWindow {
            n_per_packet: cfg.grid_points,
            ..win
        };
        g.exec = exec;
        let mg = MomentumGrid::pair(&pair, &g.window)?;
        g.dt = GridConfig::resolving_step(&spec, &mg, 0.3);
        let traj = grid_evolve(&spec, &pair, &g)?;
        json!({
            "grid_points": mg.len(),
            "dt": g.dt,
            "max_norm_drift": traj.max_norm_drift(),
            "branching": pair_json(&traj.branching()?),
        })
    } else {
        Value::Null
    };
    sink.write_summary(&json!({
        "command": "detector",
        "omega": spec.omega,
        "lambda": spec.lambda,
        "m": spec.m,
        "k": pair.k,
        "sigma": pair.sigma,
        "distance": pair.l,
        "mode": config::ConfigValue::render(&cfg.mode),
        "eta": model.rates.eta,
        "gamma": model.rates.gamma,
        "decay_fit": [fit(0)?, fit(1)?],
        "arrival_time": [pair.arrival_time(0, spec.m), pair.arrival_time(1, spec.m)],
        "arrival_time_nonrelativistic": [
            pair.arrival_time_nonrelativistic(0, spec.m),
            pair.arrival_time_nonrelativistic(1, spec.m),
        ],
        "horizon": horizon,
        "branching": pair_json(&br.distribution),
        "branching_missing_fraction": br.missing_fraction,
        "oracle": oracle,
    }))?;
    Ok(())
}

fn verify(exec: Execution) -> CliResult {
    let results = acceptance::run_all(exec);
    for r in &results {
        println!("{r}");
    }
    let failing: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!(
        "acceptance: {}/{} criteria pass",
        results.len() - failing.len(),
        results.len()
    );
    if failing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(failing))
    }
}
