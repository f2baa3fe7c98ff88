//! Shared numerical kernels: special functions, quadrature, root finding,
//! seeded random streams and ODE stepping.

pub mod ode;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod special;

pub use ode::{OdeSystem, Rk4};
pub use quad::{integrate, Interval, QuadResult, QuadratureSpec};
pub use rng::{rng_normal, SeedStream, StreamRng};
pub use roots::bisect;
pub use special::{erf, erfc, normal_cdf};

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

/// Ordinary least-squares fit `y = intercept + slope * x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}
