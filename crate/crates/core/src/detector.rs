//! A three-level detector that absorbs one of two incoming scalar particles.
//!
//! Particle `i` can only drive the transition `0 -> i`, so the level that is
//! excited records which particle was detected first. Two descriptions are
//! provided: the Wigner–Weisskopf closed form built from the amplitudes
//! `F_ia(t)`, and a brute-force integration of the coupled amplitude
//! equations on a one-dimensional momentum grid.
//!
//! Normalisation: packet amplitudes satisfy `int dk/(2 pi) |psi_i|^2 = 1`,
//! the measure used by `F_ia`. With the coupled equations written on the
//! same measure, the grid excitation `sum dk/(2 pi) |d_a|^2` equals twice the
//! closed-form `p_excited`; ratios between the levels are unaffected.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{integrate, linear_fit, OdeSystem, QuadratureSpec, Rk4};
use crate::order::OrderDistribution;
use crate::par::{self, Execution};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Level energies, couplings and field mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeLevelSpec {
    pub omega: [f64; 2],
    pub lambda: [f64; 2],
    pub m: f64,
}

impl ThreeLevelSpec {
    pub fn new(omega: [f64; 2], lambda: [f64; 2], m: f64) -> Result<Self> {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::param("m", format!("mass must be >= 0, got {m}")));
        }
        for a in 0..2 {
            if !(omega[a] > m && omega[a].is_finite()) {
                return Err(Error::param(
                    "omega",
                    format!("level {} energy {} must exceed m = {m}", a + 1, omega[a]),
                ));
            }
            if !lambda[a].is_finite() {
                return Err(Error::param("lambda", "couplings must be finite"));
            }
        }
        Ok(Self { omega, lambda, m })
    }

    /// Exchanges the roles of the two levels.
    pub fn swapped(&self) -> Self {
        Self {
            omega: [self.omega[1], self.omega[0]],
            lambda: [self.lambda[1], self.lambda[0]],
            m: self.m,
        }
    }
}

/// Two Gaussian packets with central momenta `k`, common spread `sigma`,
/// both starting a distance `l` from the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncomingPair {
    pub k: [f64; 2],
    pub sigma: f64,
    pub l: f64,
}

/// Minimum separation of the central momenta in units of `sigma`.
pub const MIN_MOMENTUM_SEPARATION: f64 = 6.0;

impl IncomingPair {
    pub fn new(k: [f64; 2], sigma: f64, l: f64) -> Result<Self> {
        if !(k[0] > 0.0 && k[1] > 0.0 && k.iter().all(|x| x.is_finite())) {
            return Err(Error::param("k", "central momenta must be positive"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", "must be positive"));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::param("L", "must be positive"));
        }
        if (k[0] - k[1]).abs() < MIN_MOMENTUM_SEPARATION * sigma {
            return Err(Error::param(
                "k",
                format!(
                    "packets overlap in momentum: |k1 - k2| = {} < {MIN_MOMENTUM_SEPARATION} sigma",
                    (k[0] - k[1]).abs()
                ),
            ));
        }
        Ok(Self { k, sigma, l })
    }

    /// Packets whose central energies sit on the two transitions.
    pub fn resonant(spec: &ThreeLevelSpec, sigma: f64, l: f64) -> Result<Self> {
        let k = spec.omega.map(|w| (w * w - spec.m * spec.m).sqrt());
        Self::new(k, sigma, l)
    }

    pub fn swapped(&self) -> Self {
        Self {
            k: [self.k[1], self.k[0]],
            ..*self
        }
    }

    pub fn energy(&self, i: usize, m: f64) -> f64 {
        self.k[i].hypot(m)
    }

    /// Arrival time `L eps_i / k_i` at the group velocity.
    pub fn arrival_time(&self, i: usize, m: f64) -> f64 {
        self.l * self.energy(i, m) / self.k[i]
    }

    /// The non-relativistic arrival time `m L / k_i`.
    pub fn arrival_time_nonrelativistic(&self, i: usize, m: f64) -> f64 {
        m * self.l / self.k[i]
    }
}

/// `lambda_a^2 (Omega_a^2 - m^2)^{3/2} / (pi sqrt(Omega_a))`, taken positive.
pub fn eta(spec: &ThreeLevelSpec, a: usize) -> Result<f64> {
    if a > 1 {
        return Err(Error::param("level", format!("no level {}", a + 1)));
    }
    let (w, m) = (spec.omega[a], spec.m);
    if !(w > m) {
        return Err(Error::param("omega", "level energy must exceed m"));
    }
    Ok(spec.lambda[a].powi(2) * (w * w - m * m).powf(1.5) / (PI * w.sqrt()))
}

/// `eta_a` and the damping rates `gamma[i][a]` of `F_ia`.
///
/// The rate of `F_ia` is set by the energy of the other particle:
/// `Gamma_1a = eta_a / (2 sqrt(eps_2))`, `Gamma_2a = eta_a / (2 sqrt(eps_1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    pub eta: [f64; 2],
    pub gamma: [[f64; 2]; 2],
}

impl DecayRates {
    pub fn new(spec: &ThreeLevelSpec, pair: &IncomingPair) -> Result<Self> {
        let eta = [eta(spec, 0)?, eta(spec, 1)?];
        let eps = [pair.energy(0, spec.m), pair.energy(1, spec.m)];
        let gamma = [
            [0.5 * eta[0] / eps[1].sqrt(), 0.5 * eta[1] / eps[1].sqrt()],
            [0.5 * eta[0] / eps[0].sqrt(), 0.5 * eta[1] / eps[0].sqrt()],
        ];
        Ok(Self { eta, gamma })
    }
}

/// Momentum sampling: `n_per_packet` points on `k_i +- half_width sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumWindow {
    pub n_per_packet: usize,
    pub half_width: f64,
}

impl Default for MomentumWindow {
    fn default() -> Self {
        Self {
            n_per_packet: 256,
            half_width: 8.0,
        }
    }
}

/// Uniform momentum points with weights `dk / (2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub k: Vec<f64>,
    pub w: Vec<f64>,
}

impl MomentumGrid {
    fn window(center: f64, sigma: f64, win: &MomentumWindow) -> Result<(f64, f64, usize)> {
        if win.n_per_packet < 8 || !(win.half_width > 0.0) {
            return Err(Error::param(
                "momentum window",
                "need >= 8 points and width > 0",
            ));
        }
        let lo = center - win.half_width * sigma;
        let hi = center + win.half_width * sigma;
        if lo <= 0.0 {
            return Err(Error::param(
                "momentum window",
                format!("window reaches k <= 0 (lower edge {lo})"),
            ));
        }
        Ok((lo, hi, win.n_per_packet))
    }

    fn uniform(lo: f64, hi: f64, n: usize) -> Self {
        let dk = (hi - lo) / (n - 1) as f64;
        Self {
            k: (0..n).map(|j| lo + j as f64 * dk).collect(),
            w: vec![dk / (2.0 * PI); n],
        }
    }

    /// Grid around one packet.
    pub fn single(pair: &IncomingPair, i: usize, win: &MomentumWindow) -> Result<Self> {
        let (lo, hi, n) = Self::window(pair.k[i], pair.sigma, win)?;
        Ok(Self::uniform(lo, hi, n))
    }

    /// Grid covering both packets; overlapping windows are merged into one
    /// uniform range with the same spacing.
    pub fn pair(pair: &IncomingPair, win: &MomentumWindow) -> Result<Self> {
        let (a_lo, a_hi, n) = Self::window(pair.k[0].min(pair.k[1]), pair.sigma, win)?;
        let (b_lo, b_hi, _) = Self::window(pair.k[0].max(pair.k[1]), pair.sigma, win)?;
        let dk = (a_hi - a_lo) / (n - 1) as f64;
        if b_lo <= a_hi + dk {
            let m = ((b_hi - a_lo) / dk).round() as usize + 1;
            return Ok(Self::uniform(a_lo, b_hi, m));
        }
        let mut g = Self::uniform(a_lo, a_hi, n);
        let h = Self::uniform(b_lo, b_hi, n);
        g.k.extend(h.k);
        g.w.extend(h.w);
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

/// `psi_i(k) = C exp(-(k - k_i)^2 / (4 sigma^2)) e^{i k L}` on `grid`, with
/// `sum w |psi|^2 = 1`.
pub fn packet_amplitude(pair: &IncomingPair, i: usize, grid: &MomentumGrid) -> Vec<Complex64> {
    let s2 = pair.sigma * pair.sigma;
    let raw: Vec<Complex64> = grid
        .k
        .iter()
        .map(|&k| Complex64::from_polar((-(k - pair.k[i]).powi(2) / (4.0 * s2)).exp(), k * pair.l))
        .collect();
    let norm: f64 = raw.iter().zip(&grid.w).map(|(z, w)| w * z.norm_sqr()).sum();
    let s = norm.sqrt().recip();
    raw.into_iter().map(|z| z * s).collect()
}

/// `(e^{-G t} - e^{-i D t}) / (G - i D)`, stable as `G - i D -> 0`.
fn response_kernel(gamma: f64, detuning: f64, t: f64) -> Complex64 {
    let z = Complex64::new(gamma, -detuning);
    let zt = z * t;
    if zt.norm() < 1e-3 {
        // -e^{-G t} (e^{z t} - 1) / z
        let series = Complex64::new(1.0, 0.0) + zt / 2.0 + zt * zt / 6.0 + zt * zt * zt / 24.0;
        -(-gamma * t).exp() * t * series
    } else {
        (Complex64::new((-gamma * t).exp(), 0.0) - Complex64::cis(-detuning * t)) / z
    }
}

/// Evaluates the Wigner–Weisskopf closed form for one configuration.
#[derive(Debug, Clone)]
pub struct ClosedForm {
    pub spec: ThreeLevelSpec,
    pub pair: IncomingPair,
    pub rates: DecayRates,
    grids: [MomentumGrid; 2],
    // w psi_i(k) / sqrt(2 eps_k)
    weighted: [Vec<Complex64>; 2],
    eps: [Vec<f64>; 2],
}

/// Whether `p_excited` keeps the off-resonant amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExcitationMode {
    #[default]
    Full,
    Resonant,
}

impl std::str::FromStr for ExcitationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ExcitationMode::Full),
            "resonant" => Ok(ExcitationMode::Resonant),
            other => Err(Error::param("mode", format!("unknown mode `{other}`"))),
        }
    }
}

impl ClosedForm {
    pub fn new(spec: &ThreeLevelSpec, pair: &IncomingPair, win: &MomentumWindow) -> Result<Self> {
        let rates = DecayRates::new(spec, pair)?;
        let grids = [
            MomentumGrid::single(pair, 0, win)?,
            MomentumGrid::single(pair, 1, win)?,
        ];
        let eps = [0, 1].map(|i| {
            grids[i]
                .k
                .iter()
                .map(|k| k.hypot(spec.m))
                .collect::<Vec<_>>()
        });
        let weighted = [0, 1].map(|i| {
            let psi = packet_amplitude(pair, i, &grids[i]);
            psi.iter()
                .zip(&grids[i].w)
                .zip(&eps[i])
                .map(|((z, w), e)| z * (w / (2.0 * e).sqrt()))
                .collect::<Vec<_>>()
        });
        Ok(Self {
            spec: *spec,
            pair: *pair,
            rates,
            grids,
            weighted,
            eps,
        })
    }

    /// `F_ia(t) = int dk/(2 pi) psi_i(k) (e^{-G t} - e^{-i(eps_k - Omega_a) t})
    ///  / (sqrt(2 eps_k) (G - i(eps_k - Omega_a)))` with `G = Gamma_ia`.
    pub fn f(&self, i: usize, a: usize, t: f64) -> Result<Complex64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("F_ia needs t >= 0, got {t}")));
        }
        let g = self.rates.gamma[i][a];
        let om = self.spec.omega[a];
        let v: Complex64 = self.weighted[i]
            .iter()
            .zip(&self.eps[i])
            .map(|(c, e)| c * response_kernel(g, e - om, t))
            .sum();
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!(
                "F_{}{} not finite at t = {t}",
                i + 1,
                a + 1
            )))
        }
    }

    /// Excitation probability of level `a`.
    pub fn p_excited(&self, a: usize, t: f64, mode: ExcitationMode) -> Result<f64> {
        let l2 = self.spec.lambda[a].powi(2);
        Ok(match mode {
            ExcitationMode::Full => {
                l2 * (self.f(0, a, t)?.norm_sqr() + self.f(1, a, t)?.norm_sqr())
            }
            ExcitationMode::Resonant => l2 * self.f(a, a, t)?.norm_sqr(),
        })
    }

    pub fn arrival_time(&self, i: usize) -> f64 {
        self.pair.arrival_time(i, self.spec.m)
    }

    pub fn momentum_grid(&self, i: usize) -> &MomentumGrid {
        &self.grids[i]
    }

    /// Horizon `max t_a + 10 / min Gamma_aa` after which the excitations
    /// have decayed.
    pub fn recommended_horizon(&self) -> f64 {
        let t = self.arrival_time(0).max(self.arrival_time(1));
        let g = [self.rates.gamma[0][0], self.rates.gamma[1][1]]
            .into_iter()
            .filter(|g| *g > 0.0)
            .fold(f64::INFINITY, f64::min);
        if g.is_finite() {
            t + 10.0 / g
        } else {
            f64::INFINITY
        }
    }
}

/// Free-function form of [`ClosedForm::f`].
pub fn f_ia(
    t: f64,
    i: usize,
    a: usize,
    spec: &ThreeLevelSpec,
    pair: &IncomingPair,
    win: &MomentumWindow,
) -> Result<Complex64> {
    if i > 1 || a > 1 {
        return Err(Error::param("index", "packet and level indices are 0 or 1"));
    }
    ClosedForm::new(spec, pair, win)?.f(i, a, t)
}

/// Free-function form of [`ClosedForm::p_excited`].
pub fn p_excited(
    t: f64,
    a: usize,
    spec: &ThreeLevelSpec,
    pair: &IncomingPair,
    mode: ExcitationMode,
    win: &MomentumWindow,
) -> Result<f64> {
    ClosedForm::new(spec, pair, win)?.p_excited(a, t, mode)
}

/// Fitted exponential decay of `|F_ia|^2` after the packet has passed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `-slope / 2` of `ln |F_ia|^2` over the window.
    pub fitted_rate: f64,
    pub expected_rate: f64,
    pub window: (f64, f64),
}

impl DecayFit {
    pub fn relative_error(&self) -> f64 {
        (self.fitted_rate - self.expected_rate).abs() / self.expected_rate
    }
}

/// Fits `ln |F_ia|^2` on `[t_i + 5/G, t_i + 15/G]` with `G = Gamma_ia`.
pub fn fit_decay(model: &ClosedForm, i: usize, a: usize) -> Result<DecayFit> {
    let g = model.rates.gamma[i][a];
    if !(g > 0.0) {
        return Err(Error::param(
            "lambda",
            "decay fit needs a non-zero coupling",
        ));
    }
    let t0 = model.arrival_time(i) + 5.0 / g;
    let t1 = model.arrival_time(i) + 15.0 / g;
    let n = 200;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for j in 0..n {
        let t = t0 + (t1 - t0) * j as f64 / (n - 1) as f64;
        let v = model.f(i, a, t)?.norm_sqr();
        if v > 0.0 {
            xs.push(t);
            ys.push(v.ln());
        }
    }
    if xs.len() < n / 2 {
        return Err(Error::Numerical(
            "|F|^2 underflows in the fit window".into(),
        ));
    }
    let (_, slope) = linear_fit(&xs, &ys);
    Ok(DecayFit {
        fitted_rate: -0.5 * slope,
        expected_rate: g,
        window: (t0, t1),
    })
}

/// Peak of `|F_ia|^2` over a uniform scan of `[0, horizon]`.
pub fn peak_f_sq(model: &ClosedForm, i: usize, a: usize, horizon: f64, n: usize) -> Result<f64> {
    let mut best = 0.0f64;
    for j in 0..=n {
        let t = horizon * j as f64 / n as f64;
        best = best.max(model.f(i, a, t)?.norm_sqr());
    }
    Ok(best)
}

/// Measured suppression `max|F_12|^2 / max|F_11|^2` and the Breit–Wigner
/// estimate `|G_11|^2 / |G_12 - i(eps_1 - Omega_2)|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffResonance {
    pub measured: f64,
    pub breit_wigner: f64,
}

pub fn off_resonance_ratio(model: &ClosedForm) -> Result<OffResonance> {
    let horizon = model.recommended_horizon();
    let n = 4000;
    let on = peak_f_sq(model, 0, 0, horizon, n)?;
    let off = peak_f_sq(model, 0, 1, horizon, n)?;
    let g11 = model.rates.gamma[0][0];
    let g12 = model.rates.gamma[0][1];
    let det = model.pair.energy(0, model.spec.m) - model.spec.omega[1];
    Ok(OffResonance {
        measured: off / on,
        breit_wigner: g11 * g11 / (g12 * g12 + det * det),
    })
}

/// Which particle is recorded first, from the fluorescence of each level.
#[derive(Debug, Clone, PartialEq)]
pub struct Branching {
    pub distribution: OrderDistribution,
    /// Unnormalised weights `2 Gamma_aa int_0^T p_a dt`.
    pub weights: [f64; 2],
    pub horizon: f64,
    /// Estimated weight still to be emitted after the horizon, relative to the total.
    pub missing_fraction: f64,
    /// Set when the horizon is shorter than [`ClosedForm::recommended_horizon`].
    pub horizon_warning: bool,
}

/// `p(M_a) ~ 2 Gamma_aa int_0^T p_a(t) dt`, normalised over the two levels.
pub fn branching_probabilities(
    spec: &ThreeLevelSpec,
    pair: &IncomingPair,
    horizon: f64,
    win: &MomentumWindow,
) -> Result<Branching> {
    let model = ClosedForm::new(spec, pair, win)?;
    branching_from_model(&model, horizon)
}

pub fn branching_from_model(model: &ClosedForm, horizon: f64) -> Result<Branching> {
    if !(horizon > 0.0) {
        return Err(Error::param("horizon", "must be positive"));
    }
    let mut weights = [0.0; 2];
    let mut tails = [0.0; 2];
    for a in 0..2 {
        let g = model.rates.gamma[a][a];
        if g == 0.0 {
            continue;
        }
        // split at the arrival times so the quadrature sees the jumps
        let mut knots = vec![0.0, model.arrival_time(0), model.arrival_time(1), horizon];
        knots.retain(|t| *t <= horizon);
        knots.sort_by(f64::total_cmp);
        let mut integral = 0.0;
        for w in knots.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let q = QuadratureSpec::finite(w[0], w[1])
                .with_abs_tol(1e-14)
                .with_rel_tol(1e-9)
                .with_max_subdivisions(5000);
            let mut failure = None;
            let r = integrate(
                |t| match model.p_excited(a, t, ExcitationMode::Full) {
                    Ok(v) => v,
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                },
                &q,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            integral += r.into_result()?;
        }
        weights[a] = 2.0 * g * integral;
        tails[a] = model.p_excited(a, horizon, ExcitationMode::Full)?;
    }
    let total = weights[0] + weights[1];
    if !(total > 0.0) {
        return Err(Error::Numerical("neither level is excited".into()));
    }
    let missing = tails[0] + tails[1];
    let p1 = weights[0] / total;
    Ok(Branching {
        distribution: OrderDistribution::from_pair([p1, 1.0 - p1, 0.0, 0.0])?,
        weights,
        horizon,
        missing_fraction: missing / (total + missing),
        horizon_warning: horizon < model.recommended_horizon(),
    })
}

/// Settings of [`grid_evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub window: MomentumWindow,
    pub t_final: f64,
    pub dt: f64,
    /// Store `d_a(k)` every this many steps (0: never).
    pub snapshot_every: usize,
    /// Largest tolerated deviation of the total norm.
    pub norm_tolerance: f64,
    pub exec: Execution,
}

impl GridConfig {
    pub fn new(t_final: f64, dt: f64) -> Self {
        Self {
            window: MomentumWindow {
                n_per_packet: 128,
                half_width: 8.0,
            },
            t_final,
            dt,
            snapshot_every: 0,
            norm_tolerance: 1e-4,
            exec: Execution::default(),
        }
    }

    /// Step that advances the fastest interaction-picture phase by `radians`.
    pub fn resolving_step(spec: &ThreeLevelSpec, grid: &MomentumGrid, radians: f64) -> f64 {
        let mut w = 0.0f64;
        for k in &grid.k {
            let e = k.hypot(spec.m);
            for om in spec.omega {
                w = w.max((e - om).abs());
            }
        }
        if w > 0.0 {
            radians / w
        } else {
            f64::INFINITY
        }
    }
}

/// Amplitudes `c(k, k')` (row-major), `d_a(k)` and the probability emitted
/// out of the grid by each level.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub t: f64,
    pub grid: MomentumGrid,
    pub c: Vec<Complex64>,
    pub d: [Vec<Complex64>; 2],
    pub emitted: [f64; 2],
}

impl GridState {
    pub fn initial(
        spec: &ThreeLevelSpec,
        pair: &IncomingPair,
        win: &MomentumWindow,
    ) -> Result<Self> {
        let _ = spec;
        let grid = MomentumGrid::pair(pair, win)?;
        let n = grid.len();
        let p1 = packet_amplitude(pair, 0, &grid);
        let p2 = packet_amplitude(pair, 1, &grid);
        let mut c = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                c[i * n + j] = (p1[i] * p2[j] + p1[j] * p2[i]) / 2f64.sqrt();
            }
        }
        let norm: f64 = (0..n * n)
            .map(|x| grid.w[x / n] * grid.w[x % n] * c[x].norm_sqr())
            .sum();
        let s = norm.sqrt().recip();
        c.iter_mut().for_each(|z| *z *= s);
        Ok(Self {
            t: 0.0,
            grid,
            c,
            d: [
                vec![Complex64::new(0.0, 0.0); n],
                vec![Complex64::new(0.0, 0.0); n],
            ],
            emitted: [0.0; 2],
        })
    }

    /// `sum w |d_a|^2`.
    pub fn population(&self, a: usize) -> f64 {
        self.d[a]
            .iter()
            .zip(&self.grid.w)
            .map(|(z, w)| w * z.norm_sqr())
            .sum()
    }

    /// Two-particle norm plus excitations plus emitted probability.
    pub fn norm(&self) -> f64 {
        let n = self.grid.len();
        let cc: f64 = (0..n)
            .map(|i| {
                let row = &self.c[i * n..(i + 1) * n];
                self.grid.w[i]
                    * row
                        .iter()
                        .zip(&self.grid.w)
                        .map(|(z, w)| w * z.norm_sqr())
                        .sum::<f64>()
            })
            .sum();
        cc + self.population(0) + self.population(1) + self.emitted[0] + self.emitted[1]
    }
}

/// Excitation amplitudes at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub d: [Vec<Complex64>; 2],
}

/// Per-step record of a [`grid_evolve`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTrajectory {
    pub times: Vec<f64>,
    pub populations: Vec<[f64; 2]>,
    pub emitted: Vec<[f64; 2]>,
    pub norm: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub initial_c: Vec<Complex64>,
    pub final_state: GridState,
}

impl GridTrajectory {
    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.norm[0];
        self.norm.iter().fold(0.0, |m, n| m.max((n - n0).abs()))
    }

    /// Probability that level `a` ends up excited or has fluoresced.
    pub fn fired(&self, a: usize) -> f64 {
        let last = self.populations.len() - 1;
        self.populations[last][a] + self.emitted[last][a]
    }

    /// Branching computed from the grid evolution.
    pub fn branching(&self) -> Result<OrderDistribution> {
        let (f1, f2) = (self.fired(0), self.fired(1));
        if !(f1 + f2 > 0.0) {
            return Err(Error::Numerical("neither level is excited".into()));
        }
        OrderDistribution::from_pair([f1 / (f1 + f2), f2 / (f1 + f2), 0.0, 0.0])
    }
}

/// Right-hand side of the coupled amplitude equations on the grid.
///
/// With `g_a(q, t) = e^{i(eps_q - Omega_a) t} / sqrt(2 eps_q)` and weights `w`:
/// `i dc(k,k')/dt = sum_a lambda_a [d_a(k) g_a(k') + d_a(k') g_a(k)]`,
/// `i dd_a(k)/dt = 2 lambda_a sum_k' w' g_a(k')^* c(k,k') - i gamma_a(k) d_a(k)`
/// with `gamma_a(k) = eta_a / (2 sqrt(eps_k))`; the decay term feeds the
/// emitted probability.
struct GridSystem {
    n: usize,
    eps: Vec<f64>,
    w: Vec<f64>,
    inv_sqrt: Vec<f64>,
    omega: [f64; 2],
    lambda: [f64; 2],
    gamma: [Vec<f64>; 2],
    exec: Execution,
}

impl GridSystem {
    fn new(spec: &ThreeLevelSpec, grid: &MomentumGrid, exec: Execution) -> Result<Self> {
        let eps: Vec<f64> = grid.k.iter().map(|k| k.hypot(spec.m)).collect();
        let eta = [eta(spec, 0)?, eta(spec, 1)?];
        let gamma = eta.map(|e| eps.iter().map(|x| 0.5 * e / x.sqrt()).collect::<Vec<_>>());
        Ok(Self {
            n: grid.len(),
            inv_sqrt: eps.iter().map(|e| (2.0 * e).sqrt().recip()).collect(),
            eps,
            w: grid.w.clone(),
            omega: spec.omega,
            lambda: spec.lambda,
            gamma,
            exec,
        })
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let nn = self.n * self.n;
        (nn, nn + self.n, nn + 2 * self.n)
    }
}

impl OdeSystem for GridSystem {
    fn dim(&self) -> usize {
        self.n * self.n + 2 * self.n + 2
    }

    fn derivative(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let n = self.n;
        let (d1, d2, b) = self.offsets();
        let c = &y[..d1];
        let d = [&y[d1..d2], &y[d2..b]];
        let g: [Vec<Complex64>; 2] = [0, 1].map(|a| {
            (0..n)
                .map(|j| Complex64::cis((self.eps[j] - self.omega[a]) * t) * self.inv_sqrt[j])
                .collect()
        });
        let u: [Vec<Complex64>; 2] = [0, 1].map(|a| {
            g[a].iter()
                .zip(&self.w)
                .map(|(z, w)| z.conj() * w)
                .collect()
        });

        let dd: Vec<[Complex64; 2]> = par::map_indices(self.exec, n, |i| {
            let row = &c[i * n..(i + 1) * n];
            let mut s = [Complex64::new(0.0, 0.0); 2];
            for (j, z) in row.iter().enumerate() {
                s[0] += u[0][j] * z;
                s[1] += u[1][j] * z;
            }
            [0, 1].map(|a| -I * 2.0 * self.lambda[a] * s[a] - self.gamma[a][i] * d[a][i])
        });

        let (dc, rest) = dy.split_at_mut(d1);
        par::for_each_row_mut(self.exec, dc, n, |i, row| {
            let left = [d[0][i] * self.lambda[0], d[1][i] * self.lambda[1]];
            let gi = [g[0][i] * self.lambda[0], g[1][i] * self.lambda[1]];
            for (j, out) in row.iter_mut().enumerate() {
                let v = left[0] * g[0][j] + d[0][j] * gi[0] + left[1] * g[1][j] + d[1][j] * gi[1];
                *out = -I * v;
            }
        });
        for i in 0..n {
            rest[i] = dd[i][0];
            rest[n + i] = dd[i][1];
        }
        for a in 0..2 {
            let r: f64 = (0..n)
                .map(|i| 2.0 * self.gamma[a][i] * self.w[i] * d[a][i].norm_sqr())
                .sum();
            rest[2 * n + a] = Complex64::new(r, 0.0);
        }
    }
}

/// Integrates the coupled amplitude equations with fixed-step RK4.
pub fn grid_evolve(
    spec: &ThreeLevelSpec,
    pair: &IncomingPair,
    cfg: &GridConfig,
) -> Result<GridTrajectory> {
    if !(cfg.dt > 0.0 && cfg.t_final > 0.0 && cfg.dt <= cfg.t_final) {
        return Err(Error::param("dt", "need 0 < dt <= t_final"));
    }
    let state = GridState::initial(spec, pair, &cfg.window)?;
    let sys = GridSystem::new(spec, &state.grid, cfg.exec)?;
    let n = sys.n;
    let (d1, d2, b) = sys.offsets();
    let mut y = Vec::with_capacity(sys.dim());
    y.extend_from_slice(&state.c);
    y.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), 2 * n + 2));
    let initial_c = state.c.clone();

    let mut cur = state;
    let mut out = GridTrajectory {
        times: vec![0.0],
        populations: vec![[0.0; 2]],
        emitted: vec![[0.0; 2]],
        norm: vec![cur.norm()],
        snapshots: Vec::new(),
        initial_c,
        final_state: cur.clone(),
    };
    if cfg.snapshot_every > 0 {
        out.snapshots.push(Snapshot {
            t: 0.0,
            d: cur.d.clone(),
        });
    }
    let n0 = out.norm[0];
    let steps = (cfg.t_final / cfg.dt).ceil() as usize;
    let mut rk = Rk4::new(sys.dim());
    let mut t = 0.0;
    for step in 1..=steps {
        let h = cfg.dt.min(cfg.t_final - t);
        rk.step(&sys, t, h, &mut y);
        t = if step == steps { cfg.t_final } else { t + h };
        cur.t = t;
        cur.d[0].copy_from_slice(&y[d1..d2]);
        cur.d[1].copy_from_slice(&y[d2..b]);
        cur.emitted = [y[b].re, y[b + 1].re];
        cur.c.copy_from_slice(&y[..d1]);
        let norm = cur.norm();
        if !norm.is_finite() {
            return Err(Error::Numerical(format!("non-finite norm at t = {t}")));
        }
        if (norm - n0).abs() > cfg.norm_tolerance {
            return Err(Error::NormDrift {
                drift: (norm - n0).abs(),
                bound: cfg.norm_tolerance,
            });
        }
        out.times.push(t);
        out.populations.push([cur.population(0), cur.population(1)]);
        out.emitted.push(cur.emitted);
        out.norm.push(norm);
        if cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 {
            out.snapshots.push(Snapshot {
                t,
                d: cur.d.clone(),
            });
        }
    }
    out.final_state = cur;
    Ok(out)
}

/// Closed-form `d_a(k, t) = i sqrt(2) lambda_a [psi_1(k) F_2a(t) + psi_2(k) F_1a(t)]`
/// on the evolution grid.
pub fn closed_form_d(
    model: &ClosedForm,
    grid: &MomentumGrid,
    a: usize,
    t: f64,
) -> Result<Vec<Complex64>> {
    let p1 = packet_amplitude(&model.pair, 0, grid);
    let p2 = packet_amplitude(&model.pair, 1, grid);
    let f1 = model.f(0, a, t)?;
    let f2 = model.f(1, a, t)?;
    let pre = I * 2f64.sqrt() * model.spec.lambda[a];
    Ok(p1
        .iter()
        .zip(&p2)
        .map(|(x, y)| pre * (x * f2 + y * f1))
        .collect())
}

/// `||u - v|| / ||v||` in the weighted norm of `grid`.
pub fn relative_l2(grid: &MomentumGrid, u: &[Complex64], v: &[Complex64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((a, b), w) in u.iter().zip(v).zip(&grid.w) {
        num += w * (a - b).norm_sqr();
        den += w * b.norm_sqr();
    }
    (num / den).sqrt()
}

/// Resonant configuration used by the examples and the acceptance checks.
///
/// Level 1 sits at `omega1`, level 2 is detuned upward by `detuning_ratio`
/// times the level-1 decay rate `gamma`; the packets are resonant, have
/// `sigma = sigma_ratio * gamma` and start `5 / sigma` away.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub m: f64,
    pub omega1: f64,
    pub gamma: f64,
    pub detuning_ratio: f64,
    pub sigma_ratio: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            m: 1.0,
            omega1: 10.0,
            gamma: 0.02,
            detuning_ratio: 30.0,
            sigma_ratio: 0.7,
        }
    }
}

impl Scenario {
    /// Builds the configuration with equal couplings chosen so `Gamma_11 = gamma`.
    pub fn build(&self) -> Result<(ThreeLevelSpec, IncomingPair)> {
        let omega = [self.omega1, self.omega1 + self.detuning_ratio * self.gamma];
        let probe = ThreeLevelSpec::new(omega, [1.0, 1.0], self.m)?;
        let sigma = self.sigma_ratio * self.gamma;
        let pair = IncomingPair::resonant(&probe, sigma, 5.0 / sigma)?;
        let unit = DecayRates::new(&probe, &pair)?.gamma[0][0];
        let lambda = (self.gamma / unit).sqrt();
        Ok((ThreeLevelSpec::new(omega, [lambda, lambda], self.m)?, pair))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_examples() {
        let s = ThreeLevelSpec::new([1.0, 2.0], [0.1, 0.0], 0.0).unwrap();
        assert!((eta(&s, 0).unwrap() - 0.01 / PI).abs() < 1e-15);
        assert!((eta(&s, 0).unwrap() - 3.1831e-3).abs() < 1e-7);
        assert_eq!(eta(&s, 1).unwrap(), 0.0);
        let d = ThreeLevelSpec::new([1.0, 2.0], [0.2, 0.0], 0.0).unwrap();
        assert!((eta(&d, 0).unwrap() / eta(&s, 0).unwrap() - 4.0).abs() < 1e-12);
        // massless: lambda^2 Omega^{5/2} / pi
        let s = ThreeLevelSpec::new([3.0, 4.0], [0.5, 0.5], 0.0).unwrap();
        assert!((eta(&s, 1).unwrap() - 0.25 * 4f64.powf(2.5) / PI).abs() < 1e-12);
        assert!(ThreeLevelSpec::new([1.0, 2.0], [0.1, 0.1], 1.0).is_err());
        assert!(eta(&s, 2).is_err());
    }

    #[test]
    fn pair_validation() {
        assert!(IncomingPair::new([1.0, 1.7], 0.1, 10.0).is_ok());
        assert!(
            IncomingPair::new([1.0, 1.7], 0.1, 10.0)
                .unwrap()
                .arrival_time(0, 0.0)
                == 10.0
        );
        assert!(IncomingPair::new([1.0, 1.3], 0.1, 10.0).is_err());
        assert!(IncomingPair::new([-1.0, 1.5], 0.1, 10.0).is_err());
        let p = IncomingPair::new([3.0, 4.0], 0.1, 10.0).unwrap();
        assert!((p.arrival_time(0, 4.0) - 10.0 * 5.0 / 3.0).abs() < 1e-12);
        assert!((p.arrival_time_nonrelativistic(0, 4.0) - 40.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_series_matches_direct() {
        for &(g, d, t) in &[(1e-3, 2e-4, 0.5), (0.0, 0.0, 1.0), (0.5, -0.3, 1e-4)] {
            let k = response_kernel(g, d, t);
            // trapezoid on -int_0^t e^{-g(t-s)} e^{-i d s} ds
            let n = 20000;
            let h = t / n as f64;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..=n {
                let x = j as f64 * h;
                let wgt = if j == 0 || j == n { 0.5 } else { 1.0 };
                s += wgt * (-g * (t - x)).exp() * Complex64::cis(-d * x);
            }
            assert!(
                (k + s * h).norm() < 1e-9 * t.max(1e-12) + 1e-14,
                "{g} {d} {t}"
            );
        }
        let direct = response_kernel(0.7, 0.4, 3.0);
        let z = Complex64::new(0.7, -0.4);
        let expect = (Complex64::new((-2.1f64).exp(), 0.0) - Complex64::cis(-1.2)) / z;
        assert!((direct - expect).norm() < 1e-15);
    }

    fn scenario() -> (ThreeLevelSpec, IncomingPair) {
        Scenario::default().build().unwrap()
    }

    #[test]
    fn scenario_rates() {
        let (s, p) = scenario();
        let r = DecayRates::new(&s, &p).unwrap();
        assert!((r.gamma[0][0] - 0.02).abs() < 1e-12);
        assert!(r.gamma.iter().flatten().all(|g| *g > 0.0));
    }

    #[test]
    fn f_vanishes_at_zero_and_before_arrival() {
        let (s, p) = scenario();
        let m = ClosedForm::new(&s, &p, &MomentumWindow::default()).unwrap();
        assert_eq!(m.f(0, 0, 0.0).unwrap().norm(), 0.0);
        assert_eq!(m.p_excited(0, 0.0, ExcitationMode::Full).unwrap(), 0.0);
        let ta = m.arrival_time(0);
        let early = m.f(0, 0, 0.3 * ta).unwrap().norm_sqr();
        let late = m.f(0, 0, ta + 2.0 / p.sigma).unwrap().norm_sqr();
        assert!(early < 1e-6 * late, "{early} vs {late}");
        assert!(m.f(0, 0, -1.0).is_err());
    }

    #[test]
    fn decay_rate_fit() {
        let (s, p) = scenario();
        let m = ClosedForm::new(&s, &p, &MomentumWindow::default()).unwrap();
        for (i, a) in [(0, 0), (1, 1)] {
            let fit = fit_decay(&m, i, a).unwrap();
            assert!(fit.relative_error() < 0.1, "{fit:?}");
        }
    }

    #[test]
    fn probabilities_in_unit_interval() {
        let (s, p) = scenario();
        let m = ClosedForm::new(&s, &p, &MomentumWindow::default()).unwrap();
        let h = m.recommended_horizon();
        for j in 0..=400 {
            let t = h * j as f64 / 400.0;
            for a in 0..2 {
                let v = m.p_excited(a, t, ExcitationMode::Full).unwrap();
                assert!((0.0..=1.0).contains(&v));
                // grid normalisation carries twice the closed-form value
                assert!(2.0 * v <= 1.0);
            }
        }
    }

    #[test]
    fn exchange_symmetry_is_exact() {
        let (s, p) = scenario();
        let w = MomentumWindow::default();
        let a = ClosedForm::new(&s, &p, &w).unwrap();
        let b = ClosedForm::new(&s.swapped(), &p.swapped(), &w).unwrap();
        for j in 0..50 {
            let t = 20.0 * j as f64;
            for mode in [ExcitationMode::Full, ExcitationMode::Resonant] {
                assert_eq!(
                    a.p_excited(0, t, mode).unwrap(),
                    b.p_excited(1, t, mode).unwrap()
                );
                assert_eq!(
                    a.p_excited(1, t, mode).unwrap(),
                    b.p_excited(0, t, mode).unwrap()
                );
            }
        }
    }

    #[test]
    fn single_level_branching() {
        let (mut s, p) = scenario();
        s.lambda[1] = 0.0;
        let b = branching_probabilities(&s, &p, 2000.0, &MomentumWindow::default()).unwrap();
        assert_eq!(b.distribution.pair(), [1.0, 0.0, 0.0, 0.0]);
        s.lambda[0] = 0.0;
        assert!(branching_probabilities(&s, &p, 2000.0, &MomentumWindow::default()).is_err());
    }

    #[test]
    fn short_horizon_warns() {
        let (s, p) = scenario();
        let w = MomentumWindow::default();
        let m = ClosedForm::new(&s, &p, &w).unwrap();
        let b = branching_from_model(&m, m.arrival_time(0) + 1.0 / p.sigma).unwrap();
        assert!(b.horizon_warning);
        assert!(b.missing_fraction > 0.1);
        let b = branching_from_model(&m, m.recommended_horizon()).unwrap();
        assert!(!b.horizon_warning);
        assert!(b.missing_fraction < 1e-3);
    }

    #[test]
    fn free_grid_evolution_is_static() {
        let (mut s, p) = scenario();
        s.lambda = [0.0, 0.0];
        let mut cfg = GridConfig::new(50.0, 1.0);
        cfg.window.n_per_packet = 32;
        let tr = grid_evolve(&s, &p, &cfg).unwrap();
        assert_eq!(tr.final_state.c, tr.initial_c);
        assert_eq!(tr.fired(0), 0.0);
        assert!((tr.norm[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn merged_grid_when_windows_overlap() {
        let p = IncomingPair::new([5.0, 5.7], 0.1, 10.0).unwrap();
        let g = MomentumGrid::pair(
            &p,
            &MomentumWindow {
                n_per_packet: 33,
                half_width: 8.0,
            },
        )
        .unwrap();
        let dk = g.k[1] - g.k[0];
        assert!(g.k.windows(2).all(|w| ((w[1] - w[0]) - dk).abs() < 1e-12));
        assert!((g.k[0] - 4.2).abs() < 1e-12 && (g.k[g.len() - 1] - 6.5).abs() < 1e-9);
    }
}
