use causal_order::detector::*;
use causal_order::Error;

fn coarse(spec: &ThreeLevelSpec, pair: &IncomingPair, t_final: f64) -> GridConfig {
    let mut cfg = GridConfig::new(t_final, 1.0);
    cfg.window.n_per_packet = 64;
    let g = MomentumGrid::pair(pair, &cfg.window).unwrap();
    cfg.dt = GridConfig::resolving_step(spec, &g, 0.3);
    cfg
}

#[test]
fn grid_matches_closed_form() {
    let (spec, pair) = Scenario::default().build().unwrap();
    let model = ClosedForm::new(&spec, &pair, &MomentumWindow::default()).unwrap();
    let horizon = model.recommended_horizon();
    let mut cfg = coarse(&spec, &pair, horizon);
    cfg.snapshot_every = (0.5 / pair.sigma / cfg.dt) as usize;
    let tr = grid_evolve(&spec, &pair, &cfg).unwrap();
    assert!(tr.max_norm_drift() <= 1e-6, "{}", tr.max_norm_drift());

    // amplitudes after the packets have arrived
    let grid = &tr.final_state.grid;
    let ta = model.arrival_time(0).min(model.arrival_time(1));
    let mut compared = 0;
    for snap in tr
        .snapshots
        .iter()
        .filter(|s| s.t > ta && s.t < ta + 8.0 / pair.sigma)
    {
        for a in 0..2 {
            let cf = closed_form_d(&model, grid, a, snap.t).unwrap();
            let err = relative_l2(grid, &snap.d[a], &cf);
            assert!(err < 0.1, "t = {}, level {a}: {err}", snap.t);
            compared += 1;
        }
    }
    assert!(compared >= 8);

    // rise-then-decay: population peaks where 2 p_excited peaks
    for a in 0..2 {
        let (j, peak) = tr
            .populations
            .iter()
            .enumerate()
            .fold((0, 0.0), |b, (j, p)| if p[a] > b.1 { (j, p[a]) } else { b });
        let t_peak = tr.times[j];
        let closed = 2.0 * model.p_excited(a, t_peak, ExcitationMode::Full).unwrap();
        assert!(
            (peak - closed).abs() < 0.1 * closed,
            "level {a}: {peak} vs {closed}"
        );
        assert!(t_peak > model.arrival_time(a) - 2.0 / pair.sigma);
        assert!(
            t_peak
                < model.arrival_time(a) + 2.0 / DecayRates::new(&spec, &pair).unwrap().gamma[a][a]
        );
        let last = *tr.populations.last().unwrap();
        assert!(last[a] < 1e-3 * peak);
    }

    let closed = branching_from_model(&model, horizon)
        .unwrap()
        .distribution
        .pair();
    let grid_p = tr.branching().unwrap().pair();
    for a in 0..2 {
        assert!((grid_p[a] - closed[a]).abs() < 0.05 * closed[a]);
    }
}

#[test]
fn single_coupled_level_never_fires_the_other() {
    let (mut spec, pair) = Scenario::default().build().unwrap();
    spec.lambda[1] = 0.0;
    let cfg = coarse(&spec, &pair, 600.0);
    let tr = grid_evolve(&spec, &pair, &cfg).unwrap();
    assert_eq!(tr.fired(1), 0.0);
    assert!(tr.fired(0) > 0.0);
    assert_eq!(tr.branching().unwrap().pair(), [1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn coarse_step_reports_norm_drift() {
    let (spec, pair) = Scenario::default().build().unwrap();
    let mut cfg = coarse(&spec, &pair, 600.0);
    cfg.dt *= 10.0;
    cfg.norm_tolerance = 1e-9;
    let r = grid_evolve(&spec, &pair, &cfg);
    assert!(matches!(r, Err(Error::NormDrift { .. })), "{r:?}");
}

/// With equal couplings the two levels differ only through their energies,
/// so the branching tends to 1/2 as the level splitting shrinks relative to
/// the level energies.
#[test]
fn equal_couplings_branch_evenly() {
    let mut dev = Vec::new();
    for gamma in [0.02, 0.002] {
        let sc = Scenario {
            gamma,
            ..Scenario::default()
        };
        let (spec, pair) = sc.build().unwrap();
        let model = ClosedForm::new(&spec, &pair, &MomentumWindow::default()).unwrap();
        let b = branching_from_model(&model, model.recommended_horizon()).unwrap();
        dev.push((b.distribution.pair()[0] - 0.5).abs());
    }
    assert!(dev[0] < 0.05, "{dev:?}");
    assert!(dev[1] < 0.2 * dev[0], "{dev:?}");
}

#[test]
fn resonant_mode_matches_full_for_large_splitting() {
    let sc = Scenario {
        detuning_ratio: 100.0,
        ..Scenario::default()
    };
    let (spec, pair) = sc.build().unwrap();
    let model = ClosedForm::new(&spec, &pair, &MomentumWindow::default()).unwrap();
    let h = model.recommended_horizon();
    for a in 0..2 {
        let (mut full, mut res) = (0.0f64, 0.0f64);
        for j in 0..=2000 {
            let t = h * j as f64 / 2000.0;
            full = full.max(model.p_excited(a, t, ExcitationMode::Full).unwrap());
            res = res.max(model.p_excited(a, t, ExcitationMode::Resonant).unwrap());
        }
        assert!((full - res).abs() < 0.05 * full);
    }
    let r = off_resonance_ratio(&model).unwrap();
    assert!(r.measured < 1e-3);
}
