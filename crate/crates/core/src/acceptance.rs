//! Acceptance checks shared by the test suite and the `verify` command.
//!
//! Each criterion returns one [`CriterionResult`] whose `Display` form is a
//! single report line.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use crate::classical::{
    order_probabilities_free_analytic, order_probabilities_mc_with, FreeParticleSystem,
    SignedMomentumDensity,
};
use crate::detector::{
    branching_from_model, fit_decay, grid_evolve, off_resonance_ratio, ClosedForm, GridConfig,
    MomentumGrid, MomentumWindow, Scenario,
};
use crate::error::Result;
use crate::numerics::SeedStream;
use crate::order::{classify_outcomes, validate_order, Outcome, OutcomeVector, PairOrder};
use crate::par::Execution;
use crate::quantum::{
    asymmetry_mc_with, q1, q2, superposition_w, GaussianWavepacket, MomentumAmplitude, ToaGrid,
};
use crate::wiener::{order_probabilities_analytic, order_probabilities_quadrature};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

fn timed(
    id: u8,
    name: &'static str,
    limit: Option<Duration>,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> CriterionResult {
    let start = Instant::now();
    let (mut passed, mut detail) = match body() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!("; runtime limit {} s exceeded", limit.as_secs()));
        }
    }
    CriterionResult {
        id,
        name,
        passed,
        detail,
        elapsed,
    }
}

/// Every criterion, in order.
pub fn run_all(exec: Execution) -> Vec<CriterionResult> {
    vec![
        wiener_analytic(),
        wiener_identity(),
        classical_free(exec),
        q_functions(),
        superposition(),
        toa(exec),
        detector(exec),
        order_algebra(),
    ]
}

/// 1. Equal diffusion constants give (3/8, 3/8, 1/4); quadrature within 1e-6.
pub fn wiener_analytic() -> CriterionResult {
    timed(1, "wiener-analytic", Some(Duration::from_secs(5)), || {
        let a = order_probabilities_analytic(1.0, 1.0)?.pair();
        let exact = a[..3] == [0.375, 0.375, 0.25];
        let q = order_probabilities_quadrature(1.0, 1.0)?.pair();
        let err = (0..3).map(|i| (q[i] - a[i]).abs()).fold(0.0, f64::max);
        Ok((
            exact && err <= 1e-6,
            format!("analytic {:?}, quadrature max deviation {err:.2e}", &a[..3]),
        ))
    })
}

/// 2. Probabilities sum to one for 100 random diffusion ratios in [1e-2, 1e2].
pub fn wiener_identity() -> CriterionResult {
    timed(2, "wiener-identity", None, || {
        let mut rng = SeedStream::new(2, 0).rng();
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let d1 = 10f64.powf(rng.uniform() * 2.0 - 1.0);
            let d2 = d1 / 10f64.powf(rng.uniform() * 4.0 - 2.0);
            let p = order_probabilities_analytic(d1, d2)?.pair();
            worst = worst.max((p[0] + p[1] + p[2] - 1.0).abs());
        }
        Ok((
            worst <= 1e-12,
            format!("max |sum - 1| = {worst:.2e} over 100 pairs"),
        ))
    })
}

/// 3. Free-particle Monte Carlo against the closed form, 3 binomial sigma.
pub fn classical_free(exec: Execution) -> CriterionResult {
    timed(3, "classical-free", Some(Duration::from_secs(10)), || {
        let sys = FreeParticleSystem::new(1.0, 2)?;
        let mut ok = true;
        let mut worst = 0.0f64;
        for (i, w_plus) in [0.25, 0.5, 0.9].into_iter().enumerate() {
            let dens = SignedMomentumDensity {
                positions: vec![-1.0, -1.0],
                w_plus,
                scale: 1.0,
            };
            let d = order_probabilities_mc_with(&sys, &dens, 100_000, 30 + i as u64, exec)?;
            let exact = order_probabilities_free_analytic(w_plus)?.pair();
            let (p, se) = (d.pair(), d.pair_stderr());
            for m in 0..3 {
                let z = (p[m] - exact[m]).abs() / se[m].max(f64::MIN_POSITIVE);
                worst = worst.max(z);
                ok &= (p[m] - exact[m]).abs() <= 3.0 * se[m];
            }
        }
        Ok((
            ok,
            format!("largest deviation {worst:.2} sigma over 9 probabilities"),
        ))
    })
}

/// 4. Values and antisymmetry of `q1`, `q2`.
pub fn q_functions() -> CriterionResult {
    timed(4, "q-functions", None, || {
        let z1 = q1(0.0)?.abs();
        let z2 = q2(0.0)?.abs();
        let hi = (q1(4.0)? - 0.5).abs();
        let lo = (q1(-4.0)? + 0.5).abs();
        let mut anti = 0.0f64;
        for j in 0..41 {
            let d = -4.0 + 0.2 * j as f64;
            anti = anti.max((q1(d)? + q1(-d)?).abs());
        }
        let ok = z1 <= 1e-8 && z2 <= 1e-8 && hi <= 1e-3 && lo <= 1e-3 && anti <= 1e-10;
        Ok((
            ok,
            format!(
                "|q1(0)| {z1:.1e}, |q2(0)| {z2:.1e}, |q1(+-4) -+ 1/2| {:.1e}, antisymmetry {anti:.1e}",
                hi.max(lo)
            ),
        ))
    })
}

/// Sign changes of a sequence, ignoring exact zeros.
pub fn sign_changes(v: &[f64]) -> usize {
    let signs: Vec<f64> = v
        .iter()
        .filter(|x| **x != 0.0)
        .map(|x| x.signum())
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// 5. Bound, periodicity and oscillation of the superposition asymmetry.
pub fn superposition() -> CriterionResult {
    timed(5, "superposition-asymmetry", None, || {
        // panel a: w(delta) at k0/sigma = 10; panel b: w(k0/sigma) at delta = 1
        let mut max_w = 0.0f64;
        for j in 0..=400 {
            let d = -4.0 + 0.02 * j as f64;
            if let Ok(w) = superposition_w(d, 10.0) {
                max_w = max_w.max(w.abs());
            }
        }
        let us: Vec<f64> = (0..=2500).map(|j| 5.0 + 0.01 * j as f64).collect();
        let mut ws = Vec::with_capacity(us.len());
        let mut period = 0.0f64;
        for &u in &us {
            let w = superposition_w(1.0, u)?;
            max_w = max_w.max(w.abs());
            period = period.max((w - superposition_w(1.0, u + 2.0 * PI)?).abs());
            ws.push(w);
        }
        let changes = sign_changes(&ws);
        let min_num = q1(1.0)? - 2.0 * q2(1.0)?.abs();
        let baseline = q1(1.0)? / 2.0;
        let shifted: Vec<f64> = ws.iter().map(|w| w - baseline).collect();
        let ok = max_w <= 0.5 && period <= 1e-9 && changes >= 3;
        Ok((
            ok,
            format!(
                "max |w| {max_w:.4}, periodicity {period:.1e}, sign changes of w on [5, 30] at delta = 1: {changes} \
                 (need >= 3; numerator q1(1) + 2 q2(1) cos u >= {min_num:.4} > 0 for all u); \
                 w - q1(1)/2 changes sign {} times",
                sign_changes(&shifted)
            ),
        ))
    })
}

/// 6. Arrival-density normalisation and sampled asymmetry.
pub fn toa(exec: Execution) -> CriterionResult {
    timed(6, "toa-density", Some(Duration::from_secs(60)), || {
        let grid = ToaGrid::default();
        let base = GaussianWavepacket::new(10.0, 1.0, 8.0)?;
        let amp = MomentumAmplitude::gaussian(&base, &grid)?;
        let dens = crate::quantum::toa_density_grid(&amp, &grid, exec)?;
        let norm = dens.integral();
        let mut ok = (norm - 1.0).abs() <= 1e-3;
        let mut worst = 0.0f64;
        for (i, sdl) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            let other = GaussianWavepacket::new(10.0, 1.0, 8.0 + sdl)?;
            let amp2 = MomentumAmplitude::gaussian(&other, &grid)?;
            let r = asymmetry_mc_with(&amp, &amp2, 100_000, 60 + i as u64, &grid, exec)?;
            let exact = q1(sdl)?;
            let se = r.stderr.unwrap_or(0.0);
            worst = worst.max((r.w - exact).abs() / se);
            ok &= (r.w - exact).abs() <= 3.0 * se;
        }
        Ok((
            ok,
            format!("int p dt = {norm:.6}, largest MC deviation {worst:.2} sigma"),
        ))
    })
}

/// 7. Grid evolution, decay rates, Breit–Wigner suppression and branching.
pub fn detector(exec: Execution) -> CriterionResult {
    timed(7, "detector-3ls", Some(Duration::from_secs(300)), || {
        let (spec, pair) = Scenario::default().build()?;
        let model = ClosedForm::new(&spec, &pair, &MomentumWindow::default())?;
        let horizon = model.recommended_horizon();

        // rise near the arrival time
        let mut rise_ok = true;
        for a in 0..2 {
            let ta = model.arrival_time(a);
            let width = model.pair.energy(a, spec.m) / (model.pair.k[a] * pair.sigma);
            let peak = crate::detector::peak_f_sq(&model, a, a, horizon, 4000)?;
            let n = 4000;
            let mut half = None;
            for j in 0..=n {
                let t = horizon * j as f64 / n as f64;
                if model.f(a, a, t)?.norm_sqr() >= 0.5 * peak {
                    half = Some(t);
                    break;
                }
            }
            rise_ok &= half.is_some_and(|t| (t - ta).abs() <= 3.0 * width);
        }

        let fits = [fit_decay(&model, 0, 0)?, fit_decay(&model, 1, 1)?];
        let fit_err = fits.iter().map(|f| f.relative_error()).fold(0.0, f64::max);

        let mut bw = Vec::new();
        for ratio in [30.0, 100.0] {
            let sc = Scenario {
                detuning_ratio: ratio,
                ..Scenario::default()
            };
            let (s, p) = sc.build()?;
            let m = ClosedForm::new(&s, &p, &MomentumWindow::default())?;
            let r = off_resonance_ratio(&m)?;
            bw.push(r.measured / r.breit_wigner);
        }
        let bw_ok = bw.iter().all(|x| (1.0 / 3.0..=3.0).contains(x));

        let mut cfg = GridConfig::new(horizon, 1.0);
        cfg.window.n_per_packet = 256;
        cfg.exec = exec;
        let g = MomentumGrid::pair(&pair, &cfg.window)?;
        cfg.dt = GridConfig::resolving_step(&spec, &g, 0.3);
        let tr = grid_evolve(&spec, &pair, &cfg)?;
        let drift = tr.max_norm_drift();
        let grid_p = tr.branching()?.pair();
        let closed_p = branching_from_model(&model, horizon)?.distribution.pair();
        let br_err = (0..2)
            .map(|a| (grid_p[a] - closed_p[a]).abs() / closed_p[a])
            .fold(0.0, f64::max);

        let ok = drift <= 1e-6 && rise_ok && fit_err <= 0.1 && bw_ok && br_err <= 0.05;
        Ok((
            ok,
            format!(
                "norm drift {drift:.1e} ({} points), rise at t_a {}, decay-rate error {:.2}%, \
                 off-resonance/Breit-Wigner {:.2} (30), {:.2} (100), branching closed {:.4} grid {:.4} (rel. diff {:.2}%)",
                g.len(),
                if rise_ok { "ok" } else { "missing" },
                100.0 * fit_err,
                bw[0],
                bw[1],
                closed_p[0],
                grid_p[0],
                100.0 * br_err
            ),
        ))
    })
}

/// 8. Classified orders are valid; two events realise exactly M1..M4.
pub fn order_algebra() -> CriterionResult {
    timed(8, "order-algebra", None, || {
        let mut rng = SeedStream::new(8, 0).rng();
        let mut all_valid = true;
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..10_000 {
            let n = 1 + (rng.uniform() * 5.0) as usize;
            let v: Vec<Outcome> = (0..n)
                .map(|_| {
                    if rng.bernoulli(0.25) {
                        Outcome::NoDetection
                    } else {
                        // coarse times so that ties occur
                        Outcome::Time((rng.uniform() * 4.0).floor())
                    }
                })
                .collect();
            let o = classify_outcomes(&OutcomeVector::new(v)?);
            all_valid &= validate_order(&o);
            if n == 2 {
                seen.insert(o);
            }
        }
        let four: std::collections::BTreeSet<_> =
            PairOrder::ALL.iter().map(|m| m.order()).collect();
        Ok((
            all_valid && seen == four,
            format!(
                "10^4 random outcome vectors valid: {all_valid}; distinct two-event orders: {}",
                seen.len()
            ),
        ))
    })
}
