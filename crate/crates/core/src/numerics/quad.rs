//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Semi-infinite and infinite ranges are mapped onto finite ones with
//! rational substitutions before the adaptive scheme runs. Oscillatory
//! integrands should not be fed through here; use a fixed fine grid instead.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Integration range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interval {
    /// `[a, b]`.
    Finite { a: f64, b: f64 },
    /// `[a, inf)`, mapped by `x = a + scale * (s / (1 - s))^2`, `s in [0, 1)`.
    ///
    /// The squared map keeps integrands decaying like `x^(-3/2)` finite at
    /// the upper end of the reduced range.
    UpperInfinite { a: f64, scale: f64 },
    /// `(-inf, inf)`, mapped by `x = center + scale * s / (1 - s^2)`.
    Infinite { center: f64, scale: f64 },
}

/// Tolerances and range for one call of [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub interval: Interval,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(interval: Interval) -> Self {
        Self {
            interval,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
        }
    }

    pub fn finite(a: f64, b: f64) -> Self {
        Self::new(Interval::Finite { a, b })
    }

    pub fn upper_infinite(a: f64) -> Self {
        Self::new(Interval::UpperInfinite { a, scale: 1.0 })
    }

    pub fn infinite() -> Self {
        Self::new(Interval::Infinite {
            center: 0.0,
            scale: 1.0,
        })
    }

    pub fn with_abs_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }

    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    pub fn with_scale(mut self, s: f64) -> Self {
        match &mut self.interval {
            Interval::Finite { .. } => {}
            Interval::UpperInfinite { scale, .. } | Interval::Infinite { scale, .. } => *scale = s,
        }
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::param("tolerance", "tolerances must be positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::param("max_subdivisions", "must be at least 1"));
        }
        match self.interval {
            Interval::Finite { a, b } if !(a.is_finite() && b.is_finite()) => {
                Err(Error::param("interval", "finite bounds required"))
            }
            Interval::UpperInfinite { scale, .. } | Interval::Infinite { scale, .. }
                if !(scale > 0.0) =>
            {
                Err(Error::param("scale", "must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Achieved absolute error estimate.
    pub error: f64,
    pub subdivisions: usize,
    pub converged: bool,
    /// The absolute tolerance that was actually requested, `max(abs, rel * |value|)`.
    pub requested: f64,
}

impl QuadResult {
    /// Turns a non-converged result into [`Error::Quadrature`].
    pub fn into_result(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Quadrature {
                value: self.value,
                error: self.error,
                requested: self.requested,
                subdivisions: self.subdivisions,
            })
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        scaled = res_asc * (200.0 * scaled / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    if !res_k.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite integrand on [{a:e}, {b:e}]"
        )));
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let err = rescale_error(
        (res_k - res_g) * half,
        res_abs * half.abs(),
        res_asc * half.abs(),
    );
    Ok((value, err))
}

/// Adaptive integration of `f` over `spec.interval`.
///
/// Non-convergence is not an error here: the partial result is returned with
/// `converged = false`. Use [`QuadResult::into_result`] to escalate.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, spec: &QuadratureSpec) -> Result<QuadResult> {
    spec.validate()?;
    match spec.interval {
        Interval::Finite { a, b } => adapt(&mut f, a, b, spec),
        Interval::UpperInfinite { a, scale } => {
            let mut g = |s: f64| {
                let r = s / (1.0 - s);
                let x = a + scale * r * r;
                let fx = f(x);
                if fx == 0.0 {
                    0.0
                } else {
                    fx * scale * 2.0 * s / ((1.0 - s) * (1.0 - s) * (1.0 - s))
                }
            };
            adapt(&mut g, 0.0, 1.0, spec)
        }
        Interval::Infinite { center, scale } => {
            let mut g = |s: f64| {
                let d = 1.0 - s * s;
                let x = center + scale * s / d;
                let fx = f(x);
                if fx == 0.0 {
                    0.0
                } else {
                    fx * scale * (1.0 + s * s) / (d * d)
                }
            };
            adapt(&mut g, -1.0, 1.0, spec)
        }
    }
}

fn adapt<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    let (v0, e0) = gk15(f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: v0,
        error: e0,
    });
    let mut total = v0;
    let mut total_err = e0;
    let mut n = 1;
    loop {
        let requested = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= requested {
            return Ok(QuadResult {
                value: total,
                error: total_err,
                subdivisions: n,
                converged: true,
                requested,
            });
        }
        if n >= spec.max_subdivisions {
            return Ok(QuadResult {
                value: total,
                error: total_err,
                subdivisions: n,
                converged: false,
                requested,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Segment cannot be split further in floating point.
            return Ok(QuadResult {
                value: total,
                error: total_err,
                subdivisions: n,
                converged: false,
                requested,
            });
        }
        let (v1, e1) = gk15(f, worst.a, mid)?;
        let (v2, e2) = gk15(f, mid, worst.b)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        n += 1;
        // Re-sum periodically to keep the running totals from drifting.
        if n % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x * x, &QuadratureSpec::finite(0.0, 1.0)).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0 / 3.0).abs() <= 1e-12);
        assert!(r.error <= r.requested);
    }

    #[test]
    fn exponential_tail() {
        let r = integrate(|t| (-t).exp(), &QuadratureSpec::upper_infinite(0.0)).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0).abs() <= 1e-10, "{}", r.value);
    }

    #[test]
    fn gaussian_whole_line() {
        let r = integrate(|x| (-x * x).exp(), &QuadratureSpec::infinite()).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() <= 1e-10);
    }

    #[test]
    fn power_tail_three_halves() {
        // int_1^inf x^(-3/2) dx = 2
        let r = integrate(|x| x.powf(-1.5), &QuadratureSpec::upper_infinite(1.0)).unwrap();
        assert!(r.converged);
        assert!((r.value - 2.0).abs() <= 1e-9, "{}", r.value);
    }

    #[test]
    fn nonconvergence_is_flagged() {
        let spec = QuadratureSpec::finite(0.0, 1.0)
            .with_abs_tol(1e-14)
            .with_rel_tol(1e-14)
            .with_max_subdivisions(3);
        let r = integrate(|x| (1.0 / x.max(1e-300)).sqrt() * (50.0 * x).sin(), &spec).unwrap();
        assert!(!r.converged);
        assert!(matches!(r.into_result(), Err(Error::Quadrature { .. })));
    }

    #[test]
    fn rejects_bad_tolerance() {
        let spec = QuadratureSpec::finite(0.0, 1.0).with_abs_tol(0.0);
        assert!(integrate(|x| x, &spec).is_err());
    }

    #[test]
    fn non_finite_integrand_is_error() {
        let r = integrate(|_| f64::NAN, &QuadratureSpec::finite(0.0, 1.0));
        assert!(matches!(r, Err(Error::Numerical(_))));
    }
}
