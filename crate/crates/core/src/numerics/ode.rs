//! Classical fixed-step fourth-order Runge–Kutta for complex state vectors.

use num_complex::Complex64;

/// Right-hand side `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn derivative(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

/// Work buffers for [`Rk4::step`].
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advances `y` from `t` to `t + dt` in place.
    pub fn step<S: OdeSystem + ?Sized>(&mut self, sys: &S, t: f64, dt: f64, y: &mut [Complex64]) {
        let h2 = 0.5 * dt;
        sys.derivative(t, y, &mut self.k1);
        axpy(&mut self.tmp, y, h2, &self.k1);
        sys.derivative(t + h2, &self.tmp, &mut self.k2);
        axpy(&mut self.tmp, y, h2, &self.k2);
        sys.derivative(t + h2, &self.tmp, &mut self.k3);
        axpy(&mut self.tmp, y, dt, &self.k3);
        sys.derivative(t + dt, &self.tmp, &mut self.k4);
        let h6 = dt / 6.0;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]) * h6;
        }
    }
}

fn axpy(out: &mut [Complex64], y: &[Complex64], h: f64, k: &[Complex64]) {
    for ((o, &yi), &ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + ki * h;
    }
}
