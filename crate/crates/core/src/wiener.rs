//! First passage of Brownian particles through a line, and the causal-order
//! probabilities of two independent such crossings.
//!
//! Two density backends are provided. [`DensityBackend::Paper`] carries an
//! extra factor 1/2 relative to the reflection-principle density and leaves
//! probability 1/2 of never crossing; all closed-form order probabilities
//! (the arctan formulas) are built on it. [`DensityBackend::Standard`] is the
//! reflection-principle density, normalised to one, which the Euler–Maruyama
//! path sampler reproduces.

use std::cell::Cell;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{erfc, integrate, QuadratureSpec, SeedStream, StreamRng};
use crate::order::{OrderCounts, OrderDistribution, Outcome};
use crate::par::{self, Execution};

/// Brownian particle with diffusion constant `d` started a distance `l`
/// before the crossing line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionSpec {
    pub d: f64,
    pub l: f64,
}

impl DiffusionSpec {
    pub fn new(d: f64, l: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::param(
                "D",
                format!("diffusion constant must be > 0, got {d}"),
            ));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::param(
                "L",
                format!("start distance must be > 0, got {l}"),
            ));
        }
        Ok(Self { d, l })
    }

    /// Natural time scale `L^2 / D`.
    pub fn time_scale(&self) -> f64 {
        self.l * self.l / self.d
    }
}

/// Which first-passage density to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityBackend {
    #[default]
    Paper,
    Standard,
}

impl DensityBackend {
    /// Total probability of ever crossing.
    pub fn crossing_mass(self) -> f64 {
        match self {
            DensityBackend::Paper => 0.5,
            DensityBackend::Standard => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DensityBackend::Paper => "paper",
            DensityBackend::Standard => "standard",
        }
    }
}

impl std::str::FromStr for DensityBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(DensityBackend::Paper),
            "standard" => Ok(DensityBackend::Standard),
            other => Err(Error::param(
                "backend",
                format!("unknown backend `{other}`"),
            )),
        }
    }
}

/// `L / sqrt(2 pi D t^3) * exp(-L^2 / (2 D t))`, evaluated in log form.
fn reflection_density(t: f64, spec: &DiffusionSpec) -> f64 {
    let log_f = (spec.l / (2.0 * PI * spec.d).sqrt()).ln()
        - 1.5 * t.ln()
        - spec.l * spec.l / (2.0 * spec.d * t);
    log_f.exp()
}

/// `1/sqrt(2 pi D t) * L/(2t) * exp(-L^2/(2 D t))`; integrates to 1/2.
pub fn first_passage_density_paper(t: f64, spec: &DiffusionSpec) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "first-passage density needs t > 0, got {t}"
        )));
    }
    Ok(0.5 * reflection_density(t, spec))
}

/// Reflection-principle first-passage density; integrates to 1.
pub fn first_passage_density_standard(t: f64, spec: &DiffusionSpec) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "first-passage density needs t > 0, got {t}"
        )));
    }
    Ok(reflection_density(t, spec))
}

pub fn first_passage_density(t: f64, spec: &DiffusionSpec, backend: DensityBackend) -> Result<f64> {
    match backend {
        DensityBackend::Paper => first_passage_density_paper(t, spec),
        DensityBackend::Standard => first_passage_density_standard(t, spec),
    }
}

/// Probability of having crossed by time `t`.
pub fn crossing_probability_by(t: f64, spec: &DiffusionSpec, backend: DensityBackend) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    backend.crossing_mass() * erfc(spec.l / (2.0 * spec.d * t).sqrt())
}

/// Closed-form order probabilities for two particles with equal start
/// distances and diffusion constants `d1`, `d2`.
pub fn order_probabilities_analytic(d1: f64, d2: f64) -> Result<OrderDistribution> {
    order_probabilities_analytic_specs(
        &DiffusionSpec::new(d1, 1.0)?,
        &DiffusionSpec::new(d2, 1.0)?,
        DensityBackend::Paper,
    )
}

/// Closed form for arbitrary start distances.
///
/// Given both cross, `T_i = L_i^2 / (D_i Z_i^2)` with independent standard
/// normals, so `P(T1 < T2) = (2/pi) arctan((L2/L1) sqrt(D1/D2))`.
pub fn order_probabilities_analytic_specs(
    s1: &DiffusionSpec,
    s2: &DiffusionSpec,
    backend: DensityBackend,
) -> Result<OrderDistribution> {
    let c = backend.crossing_mass();
    let a12 = (s2.l / s1.l) * (s1.d / s2.d).sqrt();
    let a21 = (s1.l / s2.l) * (s2.d / s1.d).sqrt();
    let p1 = c * c * 2.0 / PI * a12.atan() + c * (1.0 - c);
    let p2 = c * c * 2.0 / PI * a21.atan() + c * (1.0 - c);
    let p3 = (1.0 - c) * (1.0 - c);
    OrderDistribution::from_pair([p1, p2, p3, 0.0])
}

/// Tolerances for [`order_probabilities_quadrature_specs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureTolerance {
    pub outer: f64,
    pub inner: f64,
}

impl Default for QuadratureTolerance {
    fn default() -> Self {
        Self {
            outer: 1e-10,
            inner: 1e-12,
        }
    }
}

/// Order probabilities by nested adaptive quadrature of the paper density,
/// start distance 1.
pub fn order_probabilities_quadrature(d1: f64, d2: f64) -> Result<OrderDistribution> {
    order_probabilities_quadrature_specs(
        &DiffusionSpec::new(d1, 1.0)?,
        &DiffusionSpec::new(d2, 1.0)?,
        DensityBackend::Paper,
        QuadratureTolerance::default(),
    )
}

/// `p(M1) = int f1(t) S2(t) dt + m1 (1 - m2)` with `S2(t) = int_t^inf f2`,
/// `m_i = int f_i`, and symmetrically for `M2`; `p(M3) = (1-m1)(1-m2)`.
pub fn order_probabilities_quadrature_specs(
    s1: &DiffusionSpec,
    s2: &DiffusionSpec,
    backend: DensityBackend,
    tol: QuadratureTolerance,
) -> Result<OrderDistribution> {
    let m1 = crossing_mass_quadrature(s1, backend, tol.outer)?;
    let m2 = crossing_mass_quadrature(s2, backend, tol.outer)?;
    let j12 = first_of_two_quadrature(s1, s2, backend, tol)?;
    let j21 = first_of_two_quadrature(s2, s1, backend, tol)?;
    let p1 = j12 + m1 * (1.0 - m2);
    let p2 = j21 + m2 * (1.0 - m1);
    let p3 = (1.0 - m1) * (1.0 - m2);
    OrderDistribution::from_pair([p1, p2, p3, 0.0])
}

/// `int_0^inf f(t) dt` by quadrature.
pub fn crossing_mass_quadrature(
    spec: &DiffusionSpec,
    backend: DensityBackend,
    tol: f64,
) -> Result<f64> {
    let q = QuadratureSpec::upper_infinite(0.0)
        .with_scale(spec.time_scale())
        .with_abs_tol(tol)
        .with_rel_tol(tol);
    integrate(|t| density_or_zero(t, spec, backend), &q)?.into_result()
}

fn density_or_zero(t: f64, spec: &DiffusionSpec, backend: DensityBackend) -> f64 {
    first_passage_density(t, spec, backend).unwrap_or(0.0)
}

/// `int_0^inf f_a(t) int_t^inf f_b(u) du dt`: both cross, `a` first.
fn first_of_two_quadrature(
    a: &DiffusionSpec,
    b: &DiffusionSpec,
    backend: DensityBackend,
    tol: QuadratureTolerance,
) -> Result<f64> {
    let inner_failure: Cell<Option<Error>> = Cell::new(None);
    let survival_b = |t: f64| -> f64 {
        let q = QuadratureSpec::upper_infinite(t)
            .with_scale(b.time_scale())
            .with_abs_tol(tol.inner)
            .with_rel_tol(tol.inner);
        match integrate(|u| density_or_zero(u, b, backend), &q).and_then(|r| r.into_result()) {
            Ok(v) => v,
            Err(e) => {
                inner_failure.set(Some(e));
                0.0
            }
        }
    };
    let q = QuadratureSpec::upper_infinite(0.0)
        .with_scale(a.time_scale())
        .with_abs_tol(tol.outer)
        .with_rel_tol(tol.outer);
    let outer = integrate(
        |t| {
            let fa = density_or_zero(t, a, backend);
            if fa == 0.0 {
                0.0
            } else {
                fa * survival_b(t)
            }
        },
        &q,
    )?;
    if let Some(e) = inner_failure.take() {
        return Err(e);
    }
    outer.into_result()
}

/// Euler–Maruyama path sampling configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSamplerConfig {
    pub horizon: f64,
    pub dt: f64,
    pub bridge_correction: bool,
    pub seed: u64,
}

impl PathSamplerConfig {
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        let cfg = Self {
            horizon,
            dt,
            bridge_correction: true,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_bridge_correction(mut self, on: bool) -> Self {
        self.bridge_correction = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= self.horizon && self.horizon.is_finite()) {
            return Err(Error::param(
                "dt/horizon",
                format!(
                    "need 0 < dt <= T, got dt = {}, T = {}",
                    self.dt, self.horizon
                ),
            ));
        }
        Ok(())
    }
}

/// One first-passage draw from `rng`.
///
/// Steps `x += sqrt(D dt) Z` from `x = -L`. An explicit crossing (`x >= 0`
/// after a step) is timed by linear interpolation inside the step. With the
/// bridge correction, a step whose endpoints are both below the line still
/// counts as a crossing with probability `exp(-2 x_n x_{n+1} / (D dt))`, the
/// exact Brownian-bridge crossing probability; such crossings are timed at
/// the step midpoint.
pub fn sample_first_passage(
    spec: &DiffusionSpec,
    cfg: &PathSamplerConfig,
    rng: &mut StreamRng,
) -> Outcome {
    let mut x = -spec.l;
    let mut t = 0.0;
    while t < cfg.horizon {
        let h = cfg.dt.min(cfg.horizon - t);
        if h <= 0.0 {
            break;
        }
        let next = x + (spec.d * h).sqrt() * rng.normal();
        if next >= 0.0 {
            return Outcome::Time(t + h * (-x) / (next - x));
        }
        if cfg.bridge_correction {
            let p = (-2.0 * x * next / (spec.d * h)).exp();
            if rng.uniform() < p {
                return Outcome::Time(t + 0.5 * h);
            }
        }
        x = next;
        t += h;
    }
    Outcome::NoDetection
}

/// Single draw seeded from `cfg.seed`.
pub fn sample_first_passage_mc(spec: &DiffusionSpec, cfg: &PathSamplerConfig) -> Result<Outcome> {
    cfg.validate()?;
    let mut rng = SeedStream::new(cfg.seed, 0).rng();
    Ok(sample_first_passage(spec, cfg, &mut rng))
}

/// `n` independent first-passage draws, reproducible for a fixed seed.
pub fn first_passage_samples(
    spec: &DiffusionSpec,
    cfg: &PathSamplerConfig,
    n: usize,
    exec: Execution,
) -> Result<Vec<Outcome>> {
    cfg.validate()?;
    let chunks = par::sample_chunks(n, par::MC_CHUNK);
    let parts = par::map_indices(exec, chunks.len(), |c| {
        let (idx, len) = chunks[c];
        let mut rng = SeedStream::new(cfg.seed, idx).rng();
        (0..len)
            .map(|_| sample_first_passage(spec, cfg, &mut rng))
            .collect::<Vec<_>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

/// Monte Carlo order distribution with the finite horizon it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerMcResult {
    pub distribution: OrderDistribution,
    /// Paths not crossing by this time count as never crossing.
    pub horizon: f64,
}

/// Two independent path samplers, classified into causal orders.
pub fn order_probabilities_mc(
    s1: &DiffusionSpec,
    s2: &DiffusionSpec,
    cfg: &PathSamplerConfig,
    n_samples: usize,
    exec: Execution,
) -> Result<WienerMcResult> {
    cfg.validate()?;
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    let chunks = par::sample_chunks(n_samples, par::MC_CHUNK);
    let parts = par::map_indices(exec, chunks.len(), |c| {
        let (idx, len) = chunks[c];
        let mut rng = SeedStream::new(cfg.seed, idx).rng();
        let mut counts = OrderCounts::new(2);
        for _ in 0..len {
            let a = sample_first_passage(s1, cfg, &mut rng);
            let b = sample_first_passage(s2, cfg, &mut rng);
            counts.add_slice(&[a, b]);
        }
        counts
    });
    let mut total = OrderCounts::new(2);
    parts.into_iter().for_each(|c| total.merge(c));
    Ok(WienerMcResult {
        distribution: total.into_distribution()?,
        horizon: cfg.horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> DiffusionSpec {
        DiffusionSpec::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn paper_density_mass_is_half() {
        let m = crossing_mass_quadrature(&unit(), DensityBackend::Paper, 1e-10).unwrap();
        assert!((m - 0.5).abs() < 1e-6, "{m}");
        let s = DiffusionSpec::new(0.3, 2.0).unwrap();
        let m = crossing_mass_quadrature(&s, DensityBackend::Standard, 1e-10).unwrap();
        assert!((m - 1.0).abs() < 1e-6, "{m}");
    }

    /// d/dt ln f = -3/(2t) + L^2/(2 D t^2) vanishes at t = L^2 / (3D).
    #[test]
    fn density_mode() {
        let s = DiffusionSpec::new(2.0, 1.5).unwrap();
        let mode = s.l * s.l / (3.0 * s.d);
        let h = 1e-6;
        let slope = |t: f64| {
            (first_passage_density_paper(t + h, &s).unwrap()
                - first_passage_density_paper(t - h, &s).unwrap())
                / (2.0 * h)
        };
        assert!(slope(0.99 * mode) > 0.0);
        assert!(slope(1.01 * mode) < 0.0);
    }

    #[test]
    fn density_vanishes_at_origin() {
        let s = unit();
        assert!(first_passage_density_paper(1e-3, &s).unwrap() < 1e-200);
        assert_eq!(first_passage_density_paper(1e-300, &s).unwrap(), 0.0);
        assert!(matches!(
            first_passage_density_paper(0.0, &s),
            Err(Error::Domain(_))
        ));
        assert!(first_passage_density_paper(-1.0, &s).is_err());
    }

    #[test]
    fn analytic_equal_diffusion() {
        let p = order_probabilities_analytic(1.0, 1.0).unwrap().pair();
        assert_eq!(p, [0.375, 0.375, 0.25, 0.0]);
    }

    #[test]
    fn analytic_large_ratio_limit() {
        let p = order_probabilities_analytic(1e12, 1.0).unwrap().pair();
        assert!((p[0] - 0.5).abs() < 1e-6);
        assert!((p[1] - 0.25).abs() < 1e-6);
        assert_eq!(p[2], 0.25);
        assert!(order_probabilities_analytic(0.0, 1.0).is_err());
        assert!(order_probabilities_analytic(1.0, -1.0).is_err());
    }

    #[test]
    fn quadrature_examples() {
        let q = order_probabilities_quadrature(1.0, 1.0).unwrap().pair();
        for (a, b) in q.iter().zip([0.375, 0.375, 0.25, 0.0]) {
            assert!((a - b).abs() < 1e-6, "{q:?}");
        }
        assert!((q[0] - q[1]).abs() < 1e-9);
        let q = order_probabilities_quadrature(4.0, 1.0).unwrap().pair();
        let a = order_probabilities_analytic(4.0, 1.0).unwrap().pair();
        for i in 0..3 {
            assert!((q[i] - a[i]).abs() < 1e-6, "{q:?} vs {a:?}");
        }
    }

    #[test]
    fn quadrature_general_lengths_and_standard_backend() {
        let s1 = DiffusionSpec::new(0.7, 1.3).unwrap();
        let s2 = DiffusionSpec::new(2.0, 0.6).unwrap();
        for backend in [DensityBackend::Paper, DensityBackend::Standard] {
            let q = order_probabilities_quadrature_specs(&s1, &s2, backend, Default::default())
                .unwrap()
                .pair();
            let a = order_probabilities_analytic_specs(&s1, &s2, backend)
                .unwrap()
                .pair();
            for i in 0..3 {
                assert!((q[i] - a[i]).abs() < 1e-6, "{backend:?}: {q:?} vs {a:?}");
            }
        }
    }

    #[test]
    fn quadrature_exchange_symmetry_is_exact() {
        let s1 = DiffusionSpec::new(0.4, 1.0).unwrap();
        let s2 = DiffusionSpec::new(3.0, 1.7).unwrap();
        let t = QuadratureTolerance::default();
        let a = order_probabilities_quadrature_specs(&s1, &s2, DensityBackend::Paper, t)
            .unwrap()
            .pair();
        let b = order_probabilities_quadrature_specs(&s2, &s1, DensityBackend::Paper, t)
            .unwrap()
            .pair();
        assert_eq!(a[0], b[1]);
        assert_eq!(a[1], b[0]);
        assert_eq!(a[2], b[2]);
    }

    #[test]
    fn quadrature_failure_reports_diagnostics() {
        let t = QuadratureTolerance {
            outer: 1e-30,
            inner: 1e-30,
        };
        let r = order_probabilities_quadrature_specs(&unit(), &unit(), DensityBackend::Paper, t);
        assert!(matches!(r, Err(Error::Quadrature { .. })), "{r:?}");
    }

    #[test]
    fn tiny_horizon_never_crosses() {
        let cfg = PathSamplerConfig::new(1e-4, 1e-5).unwrap();
        let s = unit();
        let v = first_passage_samples(&s, &cfg, 2000, Execution::Sequential).unwrap();
        assert!(v.iter().all(|o| *o == Outcome::NoDetection));
    }

    #[test]
    fn bridge_correction_adds_crossings() {
        let s = unit();
        let base = PathSamplerConfig::new(2.0, 0.05).unwrap().with_seed(1);
        let frac = |cfg: &PathSamplerConfig| {
            let v = first_passage_samples(&s, cfg, 40_000, Execution::default()).unwrap();
            v.iter().filter(|o| o.is_detected()).count() as f64 / v.len() as f64
        };
        let off = frac(&base.with_bridge_correction(false));
        let on = frac(&base);
        let se = (0.25f64 / 40_000.0).sqrt();
        assert!(on > off + 3.0 * se, "on {on}, off {off}");
        // with the correction the fraction matches erfc(L / sqrt(2 D T))
        let exact = crossing_probability_by(2.0, &s, DensityBackend::Standard);
        assert!((on - exact).abs() < 4.0 * se, "on {on}, exact {exact}");
    }

    #[test]
    fn sampler_config_validation() {
        assert!(PathSamplerConfig::new(1.0, 0.0).is_err());
        assert!(PathSamplerConfig::new(1.0, 2.0).is_err());
        let cfg = PathSamplerConfig::new(1.0, 0.1).unwrap().with_seed(3);
        let a = sample_first_passage_mc(&unit(), &cfg).unwrap();
        let b = sample_first_passage_mc(&unit(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn analytic_sums_to_one(ld1 in -2.0f64..2.0, ld2 in -2.0f64..2.0) {
            let p = order_probabilities_analytic(10f64.powf(ld1), 10f64.powf(ld2)).unwrap().pair();
            prop_assert!((p[0] + p[1] + p[2] - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn analytic_exchange_symmetry(
            d1 in 0.01f64..100.0, d2 in 0.01f64..100.0,
            l1 in 0.1f64..10.0, l2 in 0.1f64..10.0,
        ) {
            let s1 = DiffusionSpec::new(d1, l1).unwrap();
            let s2 = DiffusionSpec::new(d2, l2).unwrap();
            let a = order_probabilities_analytic_specs(&s1, &s2, DensityBackend::Paper).unwrap().pair();
            let b = order_probabilities_analytic_specs(&s2, &s1, DensityBackend::Paper).unwrap().pair();
            prop_assert_eq!(a[0], b[1]);
            prop_assert_eq!(a[1], b[0]);
        }
    }
}
