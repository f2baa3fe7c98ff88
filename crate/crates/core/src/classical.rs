//! Event times as first crossings of phase-space surfaces under a
//! deterministic flow.
//!
//! Free particles have closed-form time functions. Any other flow is handled
//! by scanning `F(flow(xi, t))` on a fixed step up to a finite horizon and
//! refining the first sign change by bisection, so "never crosses" means
//! "does not cross before the horizon".

use crate::error::{Error, Result};
use crate::numerics::{bisect, normal_cdf, SeedStream, StreamRng};
use crate::order::{EventId, OrderCounts, OrderDistribution, Outcome, PairOrder};
use crate::par::{self, Execution};

/// Relative tolerance of the bisection refinement in [`time_function_generic`].
pub const ROOT_REL_TOL: f64 = 1e-12;

/// A point `(x_1..x_n, p_1..p_n)` of phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpacePoint {
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
}

impl PhaseSpacePoint {
    pub fn new(positions: Vec<f64>, momenta: Vec<f64>) -> Result<Self> {
        if positions.len() != momenta.len() {
            return Err(Error::param(
                "phase-space point",
                "positions and momenta must have equal length",
            ));
        }
        Ok(Self { positions, momenta })
    }

    pub fn dim(&self) -> usize {
        self.positions.len()
    }
}

/// Time evolution map `sigma_t` on phase space.
pub trait Flow: Sync {
    fn evolve(&self, xi: &PhaseSpacePoint, t: f64) -> PhaseSpacePoint;
}

/// Free motion `x(t) = x + p t / m` of equal-mass particles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeFlow {
    pub mass: f64,
}

impl Flow for FreeFlow {
    fn evolve(&self, xi: &PhaseSpacePoint, t: f64) -> PhaseSpacePoint {
        let positions = xi
            .positions
            .iter()
            .zip(&xi.momenta)
            .map(|(x, p)| x + p * t / self.mass)
            .collect();
        PhaseSpacePoint {
            positions,
            momenta: xi.momenta.clone(),
        }
    }
}

/// Codimension-one surface `F = 0` defining one event.
pub struct EventSurface {
    pub label: EventId,
    f: Box<dyn Fn(&PhaseSpacePoint) -> f64 + Send + Sync>,
}

impl EventSurface {
    pub fn new<F>(label: EventId, f: F) -> Self
    where
        F: Fn(&PhaseSpacePoint) -> f64 + Send + Sync + 'static,
    {
        Self {
            label,
            f: Box::new(f),
        }
    }

    /// The surface `x_particle = 0`.
    pub fn position_zero(label: EventId, particle: usize) -> Self {
        Self::new(label, move |xi| xi.positions[particle])
    }

    pub fn eval(&self, xi: &PhaseSpacePoint) -> f64 {
        (self.f)(xi)
    }
}

impl std::fmt::Debug for EventSurface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventSurface")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

/// Crossing time of the line `x = 0` by a free particle started at `x <= 0`.
///
/// A particle already on the line is detected at `t = 0`; otherwise it is
/// detected at `-m x / p` when `p > 0` and never when `p <= 0`.
pub fn time_function_free(x: f64, p: f64, m: f64) -> Result<Outcome> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::param("mass", format!("must be positive, got {m}")));
    }
    if !(x <= 0.0) || !p.is_finite() {
        return Err(Error::param(
            "start",
            format!("need finite x <= 0 and finite p, got x = {x}, p = {p}"),
        ));
    }
    if x == 0.0 {
        return Ok(Outcome::Time(0.0));
    }
    if p > 0.0 {
        Ok(Outcome::Time(-m * x / p))
    } else {
        Ok(Outcome::NoDetection)
    }
}

/// First crossing of `surface` along `flow` from `xi0`, searched on `[0, horizon]`.
///
/// The scan evaluates `F` every `step`; the first sign change (or exact zero)
/// is refined by bisection to [`ROOT_REL_TOL`]. A tangential touch between two
/// scan points has no sign change and is reported as `NoDetection`; a touch
/// that lands exactly on a scan point is reported as a detection there.
pub fn time_function_generic<Fl: Flow + ?Sized>(
    flow: &Fl,
    surface: &EventSurface,
    xi0: &PhaseSpacePoint,
    horizon: f64,
    step: f64,
) -> Result<Outcome> {
    if !(horizon > 0.0) || !(step > 0.0) {
        return Err(Error::param("horizon/step", "both must be positive"));
    }
    let f_at = |t: f64| surface.eval(&flow.evolve(xi0, t));
    let check = |v: f64, t: f64| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!(
                "non-finite surface value at t = {t}"
            )))
        }
    };
    let mut prev_t = 0.0;
    let mut prev_f = check(f_at(0.0), 0.0)?;
    if prev_f == 0.0 {
        return Ok(Outcome::Time(0.0));
    }
    let n_steps = (horizon / step).ceil() as usize;
    for k in 1..=n_steps {
        let t = (k as f64 * step).min(horizon);
        let fv = check(f_at(t), t)?;
        if fv == 0.0 || fv.signum() != prev_f.signum() {
            let root = bisect(f_at, prev_t, t, prev_f, fv, ROOT_REL_TOL)?;
            return Ok(Outcome::Time(root));
        }
        prev_t = t;
        prev_f = fv;
    }
    Ok(Outcome::NoDetection)
}

/// Closed-form order probabilities for two free particles started at the
/// same point with i.i.d. momenta, of which a fraction `w_plus` is positive.
pub fn order_probabilities_free_analytic(w_plus: f64) -> Result<OrderDistribution> {
    if !(0.0..=1.0).contains(&w_plus) {
        return Err(Error::param("w_plus", format!("{w_plus} not in [0, 1]")));
    }
    let ordered = w_plus - 0.5 * w_plus * w_plus;
    let none = (1.0 - w_plus) * (1.0 - w_plus);
    OrderDistribution::from_pair([ordered, ordered, none, 0.0])
}

/// A system whose events are determined by its initial phase-space point.
pub trait EventSystem: Sync {
    fn n_events(&self) -> usize;
    fn event_times(&self, xi: &PhaseSpacePoint) -> Result<Vec<Outcome>>;
}

/// Free particles of a common mass, each detected on crossing `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParticleSystem {
    pub mass: f64,
    pub n_particles: usize,
}

impl FreeParticleSystem {
    pub fn new(mass: f64, n_particles: usize) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::param("mass", "must be positive"));
        }
        Ok(Self { mass, n_particles })
    }
}

impl EventSystem for FreeParticleSystem {
    fn n_events(&self) -> usize {
        self.n_particles
    }

    fn event_times(&self, xi: &PhaseSpacePoint) -> Result<Vec<Outcome>> {
        if xi.dim() != self.n_particles {
            return Err(Error::param("phase-space point", "dimension mismatch"));
        }
        xi.positions
            .iter()
            .zip(&xi.momenta)
            .map(|(&x, &p)| time_function_free(x, p, self.mass))
            .collect()
    }
}

/// Arbitrary flow and surfaces, solved by [`time_function_generic`].
pub struct GenericSystem<Fl: Flow> {
    pub flow: Fl,
    pub surfaces: Vec<EventSurface>,
    pub horizon: f64,
    pub step: f64,
}

impl<Fl: Flow> EventSystem for GenericSystem<Fl> {
    fn n_events(&self) -> usize {
        self.surfaces.len()
    }

    fn event_times(&self, xi: &PhaseSpacePoint) -> Result<Vec<Outcome>> {
        self.surfaces
            .iter()
            .map(|s| time_function_generic(&self.flow, s, xi, self.horizon, self.step))
            .collect()
    }
}

/// Initial probability density on phase space, accessed through sampling.
pub trait InitialDensity: Sync {
    fn sample(&self, rng: &mut StreamRng) -> Result<PhaseSpacePoint>;
}

/// Deterministic initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDensity(pub PhaseSpacePoint);

impl InitialDensity for PointDensity {
    fn sample(&self, _rng: &mut StreamRng) -> Result<PhaseSpacePoint> {
        Ok(self.0.clone())
    }
}

/// Fixed positions; each momentum independently `+scale|Z|` with probability
/// `w_plus` and `-scale|Z|` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMomentumDensity {
    pub positions: Vec<f64>,
    pub w_plus: f64,
    pub scale: f64,
}

impl InitialDensity for SignedMomentumDensity {
    fn sample(&self, rng: &mut StreamRng) -> Result<PhaseSpacePoint> {
        let momenta = self
            .positions
            .iter()
            .map(|_| {
                let mag = self.scale * rng.normal().abs();
                if rng.bernoulli(self.w_plus) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        PhaseSpacePoint::new(self.positions.clone(), momenta)
    }
}

/// Fixed positions with i.i.d. Gaussian momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMomentumDensity {
    pub positions: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl GaussianMomentumDensity {
    /// Fraction of positive momenta.
    pub fn w_plus(&self) -> f64 {
        normal_cdf(self.mean / self.std)
    }
}

impl InitialDensity for GaussianMomentumDensity {
    fn sample(&self, rng: &mut StreamRng) -> Result<PhaseSpacePoint> {
        let momenta = self
            .positions
            .iter()
            .map(|_| self.mean + self.std * rng.normal())
            .collect();
        PhaseSpacePoint::new(self.positions.clone(), momenta)
    }
}

/// Monte Carlo estimate of the causal-order distribution.
pub fn order_probabilities_mc<S, D>(
    system: &S,
    density: &D,
    n_samples: usize,
    seed: u64,
) -> Result<OrderDistribution>
where
    S: EventSystem + ?Sized,
    D: InitialDensity + ?Sized,
{
    order_probabilities_mc_with(system, density, n_samples, seed, Execution::default())
}

/// [`order_probabilities_mc`] with an explicit execution mode. The sample is
/// split into fixed chunks, each with its own random stream, so the result
/// depends only on `(seed, n_samples)`.
pub fn order_probabilities_mc_with<S, D>(
    system: &S,
    density: &D,
    n_samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<OrderDistribution>
where
    S: EventSystem + ?Sized,
    D: InitialDensity + ?Sized,
{
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    let n = system.n_events();
    let chunks = par::sample_chunks(n_samples, par::MC_CHUNK);
    let partial = par::map_indices(exec, chunks.len(), |c| -> Result<OrderCounts> {
        let (idx, len) = chunks[c];
        let mut rng = SeedStream::new(seed, idx).rng();
        let mut counts = OrderCounts::new(n);
        for _ in 0..len {
            let xi = density.sample(&mut rng)?;
            counts.add_slice(&system.event_times(&xi)?);
        }
        Ok(counts)
    });
    let mut total = OrderCounts::new(n);
    for c in partial {
        total.merge(c?);
    }
    total.into_distribution()
}

/// Labels of the pair orders in output order.
pub fn pair_labels() -> [&'static str; 4] {
    PairOrder::ALL.map(|m| m.label())
}
