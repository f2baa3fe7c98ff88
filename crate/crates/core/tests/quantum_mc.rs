use causal_order::par::Execution;
use causal_order::quantum::{
    asymmetry_mc, asymmetry_mc_with, asymmetry_simple, asymmetry_superposition, GaussianWavepacket,
    MomentumAmplitude, SuperpositionSpec, ToaGrid,
};

fn packet(l: f64) -> GaussianWavepacket {
    GaussianWavepacket::new(10.0, 1.0, l).unwrap()
}

#[test]
fn sampled_asymmetry_tracks_q1() {
    let g = ToaGrid::default();
    for (i, dl) in [-2.0, -1.0, 0.0, 1.0, 2.0].into_iter().enumerate() {
        let (p1, p2) = (packet(8.0), packet(8.0 + dl));
        let exact = asymmetry_simple(&p1, &p2).unwrap().w;
        let a1 = MomentumAmplitude::gaussian(&p1, &g).unwrap();
        let a2 = MomentumAmplitude::gaussian(&p2, &g).unwrap();
        let mc = asymmetry_mc(&a1, &a2, 100_000, 100 + i as u64).unwrap();
        let se = mc.stderr.unwrap();
        assert!(
            (mc.w - exact).abs() < 3.0 * se,
            "dL = {dl}: mc {} exact {exact} se {se}",
            mc.w
        );
    }
}

#[test]
fn sampled_superposition_matches_closed_form() {
    let g = ToaGrid::default();
    for (i, ell) in [0.6, 1.0, 1.7].into_iter().enumerate() {
        let spec = SuperpositionSpec::new(packet(8.0), ell).unwrap();
        let exact = asymmetry_superposition(&spec).unwrap().w;
        let a1 = MomentumAmplitude::superposition(&spec, &g).unwrap();
        let a2 = MomentumAmplitude::gaussian(&spec.base, &g).unwrap();
        let mc = asymmetry_mc(&a1, &a2, 100_000, 7 + i as u64).unwrap();
        let se = mc.stderr.unwrap();
        assert!(
            (mc.w - exact).abs() < 3.0 * se,
            "ell = {ell}: mc {} exact {exact} se {se}",
            mc.w
        );
    }
}

#[test]
fn sampling_is_reproducible_across_modes() {
    let g = ToaGrid {
        n_k: 512,
        ..ToaGrid::default()
    };
    let a1 = MomentumAmplitude::gaussian(&packet(8.0), &g).unwrap();
    let a2 = MomentumAmplitude::gaussian(&packet(8.5), &g).unwrap();
    let s = asymmetry_mc_with(&a1, &a2, 20_000, 3, &g, Execution::Sequential).unwrap();
    let p = asymmetry_mc_with(&a1, &a2, 20_000, 3, &g, Execution::Parallel).unwrap();
    assert_eq!(s, p);
}
