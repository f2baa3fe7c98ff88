//! Time-of-arrival densities of massless wavepackets at an ideal detector and
//! the resulting order asymmetry between two particles.
//!
//! Conventions: particle `i` is emitted a distance `L_i` from its detector,
//! so the packet that starts closer arrives first. `w = p(M1) - 1/2` is
//! positive when particle 1 tends to be detected first. In a superposition
//! the second branch of particle 1 travels a path shorter by `ell`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{erf, integrate, QuadratureSpec, SeedStream, StreamRng};
use crate::order::{OrderCounts, OrderDistribution, Outcome};
use crate::par::{self, Execution};

/// Prefactor of `q1`, `q2`; makes `q1(+-inf) = +-1/2`.
pub const Q_NORMALIZATION: f64 = 0.398_942_280_401_432_7; // 1/sqrt(2 pi)

/// Tolerance of the `q1`, `q2` quadratures.
pub const Q_TOL: f64 = 1e-10;

/// Below this ratio `k0 / sigma` the packet has noticeable negative-momentum weight.
pub const POSITIVE_MOMENTUM_RATIO: f64 = 3.0;

/// Mass fraction on `k <= 0` above which a density is flagged.
pub const NEGATIVE_MASS_WARNING: f64 = 1e-6;

/// Smallest `|1 + nu|` accepted for a superposition.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-12;

fn q_integral(delta: f64, weight: impl Fn(f64) -> f64) -> Result<f64> {
    if !delta.is_finite() {
        return Err(Error::param(
            "delta",
            format!("must be finite, got {delta}"),
        ));
    }
    let spec = QuadratureSpec::new(crate::numerics::Interval::Infinite {
        center: 0.5 * delta,
        scale: 1.0,
    })
    .with_abs_tol(Q_TOL)
    .with_rel_tol(Q_TOL);
    let v = integrate(|x| weight(x) * erf(2f64.sqrt() * x), &spec)?.into_result()?;
    Ok(Q_NORMALIZATION * v)
}

/// `N * int exp(-2 (x - delta)^2) erf(sqrt(2) x) dx`.
pub fn q1(delta: f64) -> Result<f64> {
    q_integral(delta, |x| (-2.0 * (x - delta) * (x - delta)).exp())
}

/// `N * int exp(-x^2 - (x - delta)^2) erf(sqrt(2) x) dx`.
pub fn q2(delta: f64) -> Result<f64> {
    q_integral(delta, |x| (-x * x - (x - delta) * (x - delta)).exp())
}

/// Gaussian momentum amplitude `~ exp(-(k - k0)^2 / (4 sigma^2))` emitted a
/// distance `l` from the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianWavepacket {
    pub k0: f64,
    pub sigma: f64,
    pub l: f64,
}

impl GaussianWavepacket {
    pub fn new(k0: f64, sigma: f64, l: f64) -> Result<Self> {
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(Error::param("k0", format!("must be > 0, got {k0}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("must be > 0, got {sigma}")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::param("L", format!("must be > 0, got {l}")));
        }
        Ok(Self { k0, sigma, l })
    }

    /// False when `k0 / sigma` is below [`POSITIVE_MOMENTUM_RATIO`].
    pub fn positive_momentum_regime(&self) -> bool {
        self.k0 / self.sigma >= POSITIVE_MOMENTUM_RATIO
    }
}

/// Particle 1 in `(psi + psi shifted forward by ell) / norm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionSpec {
    pub base: GaussianWavepacket,
    pub ell: f64,
}

impl SuperpositionSpec {
    pub fn new(base: GaussianWavepacket, ell: f64) -> Result<Self> {
        if !ell.is_finite() {
            return Err(Error::param("ell", "must be finite"));
        }
        Ok(Self { base, ell })
    }

    pub fn delta(&self) -> f64 {
        self.base.sigma * self.ell
    }

    /// Overlap of the two branches, `exp(-sigma^2 ell^2 / 2) cos(k0 ell)`.
    pub fn nu(&self) -> f64 {
        (-0.5 * self.delta() * self.delta()).exp() * (self.base.k0 * self.ell).cos()
    }
}

/// Order asymmetry and the distribution it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetryResult {
    pub w: f64,
    /// Monte Carlo standard error, when sampled.
    pub stderr: Option<f64>,
    pub distribution: OrderDistribution,
}

impl AsymmetryResult {
    fn exact(w: f64) -> Result<Self> {
        if !(w.abs() <= 0.5 + 1e-12) {
            return Err(Error::Numerical(format!(
                "asymmetry {w} outside [-1/2, 1/2]"
            )));
        }
        let w = w.clamp(-0.5, 0.5);
        Ok(Self {
            w,
            stderr: None,
            distribution: OrderDistribution::from_pair([0.5 + w, 0.5 - w, 0.0, 0.0])?,
        })
    }
}

/// Product of two Gaussian packets with common `(k0, sigma)`:
/// `w = q1(sigma (L2 - L1))`.
pub fn asymmetry_simple(
    pkt1: &GaussianWavepacket,
    pkt2: &GaussianWavepacket,
) -> Result<AsymmetryResult> {
    if pkt1.k0 != pkt2.k0 || pkt1.sigma != pkt2.sigma {
        return Err(Error::param(
            "packets",
            "both packets must share k0 and sigma",
        ));
    }
    AsymmetryResult::exact(q1(pkt1.sigma * (pkt2.l - pkt1.l))?)
}

/// `w = [q1(d) + 2 q2(d) cos(u d)] / (2 [1 + exp(-d^2/2) cos(u d)])` with
/// `d = sigma ell`, `u = k0 / sigma`.
pub fn superposition_w(delta: f64, u: f64) -> Result<f64> {
    let c = (u * delta).cos();
    let den = 2.0 * (1.0 + (-0.5 * delta * delta).exp() * c);
    if den.abs() < DEGENERATE_DENOMINATOR {
        return Err(Error::DegenerateState(den));
    }
    Ok((q1(delta)? + 2.0 * q2(delta)? * c) / den)
}

/// Particle 1 in a two-path superposition, particle 2 a plain packet at the
/// same distance.
pub fn asymmetry_superposition(spec: &SuperpositionSpec) -> Result<AsymmetryResult> {
    let u = spec.base.k0 / spec.base.sigma;
    AsymmetryResult::exact(superposition_w(spec.delta(), u)?)
}

/// Resolution of the momentum and time grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToaGrid {
    /// Momentum points on `[k0 - 8 sigma, k0 + 8 sigma]`.
    pub n_k: usize,
    /// Time points per Nyquist interval `pi / (16 sigma)`.
    pub oversampling: usize,
    /// Half-width of the time window in units of `1 / sigma`.
    pub window: f64,
}

impl Default for ToaGrid {
    fn default() -> Self {
        Self {
            n_k: 4096,
            oversampling: 16,
            window: 10.0,
        }
    }
}

/// Momentum amplitude sampled on a uniform grid, normalised so that
/// `sum |psi|^2 dk = 1`, with the emission distance `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumAmplitude {
    pub k_min: f64,
    pub dk: f64,
    pub psi: Vec<Complex64>,
    pub l: f64,
    /// Momentum spread, used to size time grids.
    pub sigma: f64,
    /// Range of arrival-time offsets relative to `l` carried by the branches.
    pub offsets: (f64, f64),
}

impl MomentumAmplitude {
    pub fn gaussian(pkt: &GaussianWavepacket, grid: &ToaGrid) -> Result<Self> {
        Self::branches(pkt, &[0.0], grid)
    }

    /// `psi(k) (1 + exp(-i k ell))`, normalised on the grid.
    pub fn superposition(spec: &SuperpositionSpec, grid: &ToaGrid) -> Result<Self> {
        Self::branches(&spec.base, &[0.0, spec.ell], grid)
    }

    /// Equal-weight sum of copies of the packet advanced by each of `shifts`.
    fn branches(pkt: &GaussianWavepacket, shifts: &[f64], grid: &ToaGrid) -> Result<Self> {
        if grid.n_k < 16 {
            return Err(Error::param("n_k", "need at least 16 momentum points"));
        }
        let k_min = pkt.k0 - 8.0 * pkt.sigma;
        let dk = 16.0 * pkt.sigma / (grid.n_k - 1) as f64;
        let psi: Vec<Complex64> = (0..grid.n_k)
            .map(|j| {
                let k = k_min + j as f64 * dk;
                let env = (-(k - pkt.k0).powi(2) / (4.0 * pkt.sigma * pkt.sigma)).exp();
                shifts
                    .iter()
                    .map(|s| Complex64::from_polar(env, -k * s))
                    .sum()
            })
            .collect();
        let lo = shifts.iter().fold(0.0f64, |a, s| a.min(-s));
        let hi = shifts.iter().fold(0.0f64, |a, s| a.max(-s));
        Self::from_samples(k_min, dk, psi, pkt.l, pkt.sigma, (lo, hi))
    }

    /// Normalises arbitrary samples.
    pub fn from_samples(
        k_min: f64,
        dk: f64,
        mut psi: Vec<Complex64>,
        l: f64,
        sigma: f64,
        offsets: (f64, f64),
    ) -> Result<Self> {
        if !(dk > 0.0) || psi.is_empty() {
            return Err(Error::param("momentum grid", "need dk > 0 and samples"));
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dk;
        if !(norm > DEGENERATE_DENOMINATOR) {
            return Err(Error::DegenerateState(norm));
        }
        let s = norm.sqrt().recip();
        psi.iter_mut().for_each(|z| *z *= s);
        Ok(Self {
            k_min,
            dk,
            psi,
            l,
            sigma,
            offsets,
        })
    }

    pub fn k(&self, j: usize) -> f64 {
        self.k_min + j as f64 * self.dk
    }

    /// Probability carried by grid points with `k <= 0`.
    pub fn negative_mass_fraction(&self) -> f64 {
        self.psi
            .iter()
            .enumerate()
            .filter(|(j, _)| self.k(*j) <= 0.0)
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            * self.dk
    }

    /// Same amplitude emitted from distance `l`.
    pub fn at_distance(&self, l: f64) -> Self {
        Self { l, ..self.clone() }
    }
}

/// Arrival density `|(1/sqrt(2 pi)) sum_k psi(k) e^{i k (L - t)} dk|^2`.
/// Momenta `k <= 0` never reach the detector and are left out.
pub fn toa_density(amp: &MomentumAmplitude, t: f64) -> f64 {
    let x = amp.l - t;
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, z) in amp.psi.iter().enumerate() {
        let k = amp.k(j);
        if k > 0.0 {
            acc += z * Complex64::cis(k * x);
        }
    }
    (acc * amp.dk).norm_sqr() / (2.0 * PI)
}

/// Arrival density tabulated on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ToaDensity {
    pub t0: f64,
    pub dt: f64,
    pub density: Vec<f64>,
    pub negative_mass: f64,
    /// Set when `negative_mass` exceeds [`NEGATIVE_MASS_WARNING`].
    pub negative_momentum_warning: bool,
}

impl ToaDensity {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.density.len()).map(move |i| self.t0 + i as f64 * self.dt)
    }

    pub fn integral(&self) -> f64 {
        crate::numerics::trapezoid(&self.density, self.dt)
    }

    pub fn peak_time(&self) -> f64 {
        let (i, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        self.t0 + i as f64 * self.dt
    }
}

/// Tabulates [`toa_density`] over `L + offsets +- window / sigma`.
pub fn toa_density_grid(
    amp: &MomentumAmplitude,
    grid: &ToaGrid,
    exec: Execution,
) -> Result<ToaDensity> {
    if grid.oversampling == 0 || !(grid.window > 0.0) {
        return Err(Error::param(
            "time grid",
            "need oversampling >= 1 and window > 0",
        ));
    }
    let dt = PI / (16.0 * amp.sigma) / grid.oversampling as f64;
    let t0 = amp.l + amp.offsets.0 - grid.window / amp.sigma;
    let t1 = amp.l + amp.offsets.1 + grid.window / amp.sigma;
    let n = ((t1 - t0) / dt).ceil() as usize + 1;
    let density = par::map_indices(exec, n, |i| toa_density(amp, t0 + i as f64 * dt));
    let negative_mass = amp.negative_mass_fraction();
    Ok(ToaDensity {
        t0,
        dt,
        density,
        negative_mass,
        negative_momentum_warning: negative_mass > NEGATIVE_MASS_WARNING,
    })
}

/// Largest probability allowed in one time cell of an [`ArrivalSampler`].
pub const MAX_CELL_MASS: f64 = 0.05;

/// Inverse-CDF sampler over a tabulated density.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSampler {
    t0: f64,
    dt: f64,
    cdf: Vec<f64>,
}

impl ArrivalSampler {
    pub fn new(d: &ToaDensity) -> Result<Self> {
        if d.density.len() < 2 {
            return Err(Error::Numerical(
                "time grid has fewer than two points".into(),
            ));
        }
        let mut cdf = Vec::with_capacity(d.density.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in d.density.windows(2) {
            acc += 0.5 * d.dt * (w[0] + w[1]);
            cdf.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::Numerical(format!("arrival density has mass {acc}")));
        }
        let mut prev = 0.0;
        for c in cdf.iter_mut() {
            *c /= acc;
            if *c - prev > MAX_CELL_MASS {
                return Err(Error::Numerical(format!(
                    "time grid too coarse: one cell carries {:.3} of the arrival probability",
                    *c - prev
                )));
            }
            prev = *c;
        }
        Ok(Self {
            t0: d.t0,
            dt: d.dt,
            cdf,
        })
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let i = self
            .cdf
            .partition_point(|&c| c <= u)
            .clamp(1, self.cdf.len() - 1);
        let (a, b) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if b > a { (u - a) / (b - a) } else { 0.5 };
        self.t0 + (i as f64 - 1.0 + frac) * self.dt
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        self.quantile(rng.uniform())
    }
}

/// Empirical asymmetry from independent arrival-time draws of two particles.
pub fn asymmetry_mc(
    amp1: &MomentumAmplitude,
    amp2: &MomentumAmplitude,
    n_samples: usize,
    seed: u64,
) -> Result<AsymmetryResult> {
    asymmetry_mc_with(
        amp1,
        amp2,
        n_samples,
        seed,
        &ToaGrid::default(),
        Execution::default(),
    )
}

pub fn asymmetry_mc_with(
    amp1: &MomentumAmplitude,
    amp2: &MomentumAmplitude,
    n_samples: usize,
    seed: u64,
    grid: &ToaGrid,
    exec: Execution,
) -> Result<AsymmetryResult> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    let s1 = ArrivalSampler::new(&toa_density_grid(amp1, grid, exec)?)?;
    let s2 = ArrivalSampler::new(&toa_density_grid(amp2, grid, exec)?)?;
    let chunks = par::sample_chunks(n_samples, par::MC_CHUNK);
    let parts = par::map_indices(exec, chunks.len(), |c| {
        let (idx, len) = chunks[c];
        let mut rng = SeedStream::new(seed, idx).rng();
        let mut counts = OrderCounts::new(2);
        for _ in 0..len {
            let t1 = s1.sample(&mut rng);
            let t2 = s2.sample(&mut rng);
            counts.add_slice(&[Outcome::Time(t1), Outcome::Time(t2)]);
        }
        counts
    });
    let mut total = OrderCounts::new(2);
    parts.into_iter().for_each(|c| total.merge(c));
    let distribution = total.into_distribution()?;
    let p1 = distribution.pair()[0];
    Ok(AsymmetryResult {
        w: p1 - 0.5,
        stderr: Some(distribution.pair_stderr()[0]),
        distribution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Closed forms via int exp(-(y - a)^2) erf(y) dy = sqrt(pi) erf(a / sqrt(2)).
    fn q1_oracle(d: f64) -> f64 {
        0.5 * erf(d)
    }

    fn q2_oracle(d: f64) -> f64 {
        0.5 * (-0.5 * d * d).exp() * erf(0.5 * d)
    }

    #[test]
    fn normalization_constant() {
        assert!((Q_NORMALIZATION - (2.0 * PI).sqrt().recip()).abs() < 1e-16);
    }

    #[test]
    fn q_examples() {
        assert!(q1(0.0).unwrap().abs() < 1e-14);
        assert!(q2(0.0).unwrap().abs() < 1e-14);
        assert!((q1(4.0).unwrap() - 0.5).abs() < 1e-3);
        assert!(q2(8.0).unwrap().abs() < 1e-6);
        assert!(q2(-8.0).unwrap().abs() < 1e-6);
        assert!(q1(f64::NAN).is_err());
    }

    #[test]
    fn q_match_closed_forms() {
        for i in -40..=40 {
            let d = i as f64 * 0.15;
            assert!((q1(d).unwrap() - q1_oracle(d)).abs() < 1e-9, "q1({d})");
            assert!((q2(d).unwrap() - q2_oracle(d)).abs() < 1e-9, "q2({d})");
        }
    }

    #[test]
    fn q1_increasing() {
        let v: Vec<f64> = (0..=400)
            .map(|i| q1(-4.0 + 0.02 * i as f64).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn simple_examples() {
        let a = GaussianWavepacket::new(10.0, 1.0, 5.0).unwrap();
        let r = asymmetry_simple(&a, &a).unwrap();
        assert!(r.w.abs() < 1e-14);
        let b = GaussianWavepacket::new(10.0, 1.0, 9.0).unwrap();
        let r = asymmetry_simple(&a, &b).unwrap();
        assert!((r.w - 0.5).abs() < 1e-3);
        let p = r.distribution.pair();
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15 && p[2] == 0.0);
        let s = asymmetry_simple(&b, &a).unwrap();
        assert_eq!(s.w, -r.w);
        let c = GaussianWavepacket::new(11.0, 1.0, 5.0).unwrap();
        assert!(asymmetry_simple(&a, &c).is_err());
    }

    #[test]
    fn superposition_examples() {
        let base = GaussianWavepacket::new(10.0, 1.0, 5.0).unwrap();
        let r = asymmetry_superposition(&SuperpositionSpec::new(base, 0.0).unwrap()).unwrap();
        assert!(r.w.abs() < 1e-14);
        let u = 3.7;
        let a = superposition_w(1.0, u).unwrap();
        let b = superposition_w(1.0, u + 2.0 * PI).unwrap();
        assert!((a - b).abs() < 1e-12);
        // cos(u delta) = 0
        let d = 1.3;
        let w = superposition_w(d, PI / (2.0 * d)).unwrap();
        assert!((w - 0.5 * q1(d).unwrap()).abs() < 1e-12);
        // far apart branches: one of them is almost surely first
        assert!((superposition_w(12.0, 10.0).unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn degenerate_superposition() {
        // 1 + exp(-d^2/2) cos(u d) = 0 needs d = 0 with cos = -1: tiny d, u d = pi
        let d = 1e-7;
        let r = superposition_w(d, PI / d);
        assert!(matches!(r, Err(Error::DegenerateState(_))), "{r:?}");
    }

    fn narrow() -> GaussianWavepacket {
        GaussianWavepacket::new(10.0, 1.0, 6.0).unwrap()
    }

    #[test]
    fn toa_normalized_and_peaked() {
        let g = ToaGrid::default();
        let amp = MomentumAmplitude::gaussian(&narrow(), &g).unwrap();
        let d = toa_density_grid(&amp, &g, Execution::default()).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-3, "{}", d.integral());
        assert!((d.peak_time() - 6.0).abs() <= d.dt);
        assert!(d.density.iter().all(|&p| p >= 0.0));
        assert!(!d.negative_momentum_warning);
    }

    #[test]
    fn toa_translation() {
        let g = ToaGrid {
            n_k: 512,
            ..ToaGrid::default()
        };
        let amp = MomentumAmplitude::gaussian(&narrow(), &g).unwrap();
        let shifted = amp.at_distance(amp.l + 2.5);
        let peak = toa_density(&amp, amp.l);
        for i in 0..50 {
            let t = 3.0 + 0.1 * i as f64;
            let a = toa_density(&amp, t);
            let b = toa_density(&shifted, t + 2.5);
            assert!((a - b).abs() < 1e-12 * peak);
        }
    }

    #[test]
    fn toa_global_phase_invariant() {
        let g = ToaGrid {
            n_k: 512,
            ..ToaGrid::default()
        };
        let amp = MomentumAmplitude::gaussian(&narrow(), &g).unwrap();
        let mut rot = amp.clone();
        let phase = Complex64::cis(1.234);
        rot.psi.iter_mut().for_each(|z| *z *= phase);
        for i in 0..40 {
            let t = 4.0 + 0.1 * i as f64;
            let (a, b) = (toa_density(&amp, t), toa_density(&rot, t));
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        }
    }

    #[test]
    fn negative_momentum_flag() {
        let pkt = GaussianWavepacket::new(2.0, 1.0, 5.0).unwrap();
        assert!(!pkt.positive_momentum_regime());
        let g = ToaGrid {
            n_k: 512,
            oversampling: 2,
            ..ToaGrid::default()
        };
        let amp = MomentumAmplitude::gaussian(&pkt, &g).unwrap();
        let d = toa_density_grid(&amp, &g, Execution::Sequential).unwrap();
        assert!(d.negative_momentum_warning);
        assert!(d.negative_mass > 1e-3);
    }

    #[test]
    fn coarse_time_grid_rejected() {
        let d = ToaDensity {
            t0: 0.0,
            dt: 1.0,
            density: vec![0.0, 1.0, 0.0],
            negative_mass: 0.0,
            negative_momentum_warning: false,
        };
        assert!(matches!(ArrivalSampler::new(&d), Err(Error::Numerical(_))));
    }

    #[test]
    fn quantile_inverts_cdf() {
        let n = 201;
        let density: Vec<f64> = (0..n).map(|_| 0.01).collect();
        let d = ToaDensity {
            t0: 1.0,
            dt: 0.5,
            density,
            negative_mass: 0.0,
            negative_momentum_warning: false,
        };
        let s = ArrivalSampler::new(&d).unwrap();
        assert!((s.quantile(0.0) - 1.0).abs() < 1e-12);
        assert!((s.quantile(0.5) - 51.0).abs() < 1e-9);
        assert!((s.quantile(1.0) - 101.0).abs() < 1e-9);
    }

    #[test]
    fn mc_identical_packets() {
        let g = ToaGrid {
            n_k: 1024,
            ..ToaGrid::default()
        };
        let amp = MomentumAmplitude::gaussian(&narrow(), &g).unwrap();
        let r = asymmetry_mc_with(&amp, &amp, 50_000, 4, &g, Execution::default()).unwrap();
        assert!(r.w.abs() < 3.0 * r.stderr.unwrap(), "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn q_antisymmetric(d in -6.0f64..6.0) {
            prop_assert!((q1(d).unwrap() + q1(-d).unwrap()).abs() <= 1e-10);
            prop_assert!((q2(d).unwrap() + q2(-d).unwrap()).abs() <= 1e-10);
        }

        #[test]
        fn superposition_w_bounded(d in -6.0f64..6.0, u in 0.0f64..30.0) {
            if let Ok(w) = superposition_w(d, u) {
                prop_assert!(w.abs() <= 0.5 + 1e-12);
            }
        }

        #[test]
        fn simple_distribution_sums_to_one(l1 in 0.5f64..20.0, l2 in 0.5f64..20.0) {
            let a = GaussianWavepacket::new(10.0, 1.0, l1).unwrap();
            let b = GaussianWavepacket::new(10.0, 1.0, l2).unwrap();
            let r = asymmetry_simple(&a, &b).unwrap();
            prop_assert!(r.w.abs() <= 0.5);
            prop_assert!((r.distribution.total() - 1.0).abs() <= 1e-15);
        }
    }
}
