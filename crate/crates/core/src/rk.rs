//! Embedded Runge–Kutta–Fehlberg 7(8) integrator for autonomous systems.
//!
//! The 8th-order solution is propagated; the difference to the 7th-order
//! solution drives the step-size controller.
//!
//! Right-hand sides that are only finitely smooth across a hyperplane
//! y_k = 0 (odd power laws |y|^{s−1}y with non-integer or small s) defeat
//! both the order and the error estimate of a step that straddles it. Such a
//! component can be registered with [`Rkf78::with_kink`]; steps are then
//! shortened to end exactly on the crossing. Near the crossing the solution
//! itself is only finitely smooth (y_k ≈ v t makes the force ≈ |v t|^s), and
//! the embedded estimate no longer sees the error, so steps ending on or
//! leaving a crossing are capped at h_s = (rtol·|v|^{1−s})^{1/(s+1)}, the
//! length over which the singular term stays below tolerance.

use thiserror::Error;

const STAGES: usize = 13;

const A: [[f64; STAGES - 1]; STAGES] = [
    [0.0; 12],
    [
        2.0 / 27.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        1.0 / 36.0,
        1.0 / 12.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        1.0 / 24.0,
        0.0,
        1.0 / 8.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        5.0 / 12.0,
        0.0,
        -25.0 / 16.0,
        25.0 / 16.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        1.0 / 20.0,
        0.0,
        0.0,
        1.0 / 4.0,
        1.0 / 5.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        -25.0 / 108.0,
        0.0,
        0.0,
        125.0 / 108.0,
        -65.0 / 27.0,
        125.0 / 54.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        31.0 / 300.0,
        0.0,
        0.0,
        0.0,
        61.0 / 225.0,
        -2.0 / 9.0,
        13.0 / 900.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2.0,
        0.0,
        0.0,
        -53.0 / 6.0,
        704.0 / 45.0,
        -107.0 / 9.0,
        67.0 / 90.0,
        3.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        -91.0 / 108.0,
        0.0,
        0.0,
        23.0 / 108.0,
        -976.0 / 135.0,
        311.0 / 54.0,
        -19.0 / 60.0,
        17.0 / 6.0,
        -1.0 / 12.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2383.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -301.0 / 82.0,
        2133.0 / 4100.0,
        45.0 / 82.0,
        45.0 / 164.0,
        18.0 / 41.0,
        0.0,
        0.0,
    ],
    [
        3.0 / 205.0,
        0.0,
        0.0,
        0.0,
        0.0,
        -6.0 / 41.0,
        -3.0 / 205.0,
        -3.0 / 41.0,
        3.0 / 41.0,
        6.0 / 41.0,
        0.0,
        0.0,
    ],
    [
        -1777.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -289.0 / 82.0,
        2193.0 / 4100.0,
        51.0 / 82.0,
        33.0 / 164.0,
        12.0 / 41.0,
        0.0,
        1.0,
    ],
];

const B8: [f64; STAGES] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

/// Error estimate y8 - y7 = 41/840 (k0 + k10 - k11 - k12).
const ERR_WEIGHT: f64 = 41.0 / 840.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum IntegrateError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
        }
    }
}

/// RKF7(8) integrator for the autonomous system y' = f(y).
#[derive(Clone)]
pub struct Rkf78<F, const N: usize> {
    rhs: F,
    tol: Tolerances,
    max_steps: usize,
    kink: Option<Kink>,
}

#[derive(Debug, Clone, Copy)]
struct Kink {
    index: usize,
    exponent: f64,
}

impl<F, const N: usize> Rkf78<F, N>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    pub fn new(rhs: F, tol: Tolerances) -> Self {
        Self {
            rhs,
            tol,
            max_steps: 10_000_000,
            kink: None,
        }
    }

    /// Declares that the right-hand side behaves like |y[index]|^exponent
    /// (with a non-smooth odd or even extension) where `y[index]` changes sign.
    pub fn with_kink(mut self, index: usize, exponent: f64) -> Self {
        assert!(index < N && exponent > 0.0);
        self.kink = Some(Kink { index, exponent });
        self
    }

    /// Step cap at distance δ ≈ |y_k / y_k'| in time from a crossing. An
    /// 8th-order step of length h ending δ away from a singularity of
    /// strength |v|^s t^{s+2} errs by about |v|^s h^9 δ^{s−7}; keeping this
    /// below rtol·|v| gives h ≤ δ (h_s/δ)^{(s+1)/9}, never less than h_s.
    fn graded_step(&self, kink: Kink, y: &[f64; N]) -> f64 {
        let v = self.rhs(y)[kink.index];
        let h_s = self.kink_step(kink, v);
        if !h_s.is_finite() {
            return f64::INFINITY;
        }
        let delta = y[kink.index].abs() / v.abs();
        if delta <= h_s {
            return h_s;
        }
        delta * (h_s / delta).powf((kink.exponent + 1.0) / 9.0)
    }

    /// Largest step allowed next to a crossing with `y[k]' = v`.
    fn kink_step(&self, kink: Kink, v: f64) -> f64 {
        let s = kink.exponent;
        if v == 0.0 {
            return f64::INFINITY;
        }
        (self.tol.rtol * v.abs().powf(1.0 - s)).powf(1.0 / (s + 1.0))
    }

    pub fn rhs(&self, y: &[f64; N]) -> [f64; N] {
        (self.rhs)(y)
    }

    /// One trial step of size `h`; returns the new state and the scaled
    /// error norm (accept when <= 1).
    fn attempt(&self, y: &[f64; N], h: f64) -> ([f64; N], f64) {
        let mut k = [[0.0; N]; STAGES];
        k[0] = (self.rhs)(y);
        for s in 1..STAGES {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = (self.rhs)(&ys);
        }
        let mut y8 = *y;
        let mut err = 0.0_f64;
        for i in 0..N {
            let mut incr = 0.0;
            for s in 0..STAGES {
                incr += B8[s] * k[s][i];
            }
            y8[i] += h * incr;
            let e = h * ERR_WEIGHT * (k[0][i] + k[10][i] - k[11][i] - k[12][i]);
            let scale = self.tol.atol + self.tol.rtol * y[i].abs().max(y8[i].abs());
            err = err.max(e.abs() / scale);
        }
        (y8, err)
    }

    fn initial_step(&self, y: &[f64; N]) -> f64 {
        let f = (self.rhs)(y);
        let ny = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let nf = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if nf == 0.0 || ny == 0.0 {
            1e-2
        } else {
            (0.05 * ny / nf).clamp(1e-8, 0.5)
        }
    }

    /// Starts a stepper at time `t0` in the direction of `sign(direction)`.
    pub fn stepper(&self, y0: [f64; N], t0: f64, direction: f64) -> Stepper<'_, F, N> {
        let h = self.initial_step(&y0).copysign(direction);
        Stepper {
            solver: self,
            t: t0,
            y: y0,
            h,
            steps: 0,
        }
    }

    /// Integrates from `t = 0` to `t_end` (either sign).
    pub fn integrate(&self, y0: [f64; N], t_end: f64) -> Result<[f64; N], IntegrateError> {
        if t_end == 0.0 {
            return Ok(y0);
        }
        let mut st = self.stepper(y0, 0.0, t_end);
        st.advance_to(t_end)?;
        Ok(st.y)
    }

    /// States at each of `times` (any order, any sign), integrating outward
    /// from `t = 0` once in each direction.
    pub fn sample(&self, y0: [f64; N], times: &[f64]) -> Result<Vec<[f64; N]>, IntegrateError> {
        let mut out = vec![y0; times.len()];
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let split = order.partition_point(|&i| times[i] < 0.0);

        let mut fwd = self.stepper(y0, 0.0, 1.0);
        for &i in &order[split..] {
            fwd.advance_to(times[i])?;
            out[i] = fwd.y;
        }
        let mut bwd = self.stepper(y0, 0.0, -1.0);
        for &i in order[..split].iter().rev() {
            bwd.advance_to(times[i])?;
            out[i] = bwd.y;
        }
        Ok(out)
    }
}

/// Marching state of an [`Rkf78`] integration.
pub struct Stepper<'a, F, const N: usize> {
    solver: &'a Rkf78<F, N>,
    pub t: f64,
    pub y: [f64; N],
    h: f64,
    steps: usize,
}

impl<F, const N: usize> Stepper<'_, F, N>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    /// Takes one accepted step, never passing `limit` if given.
    pub fn step(&mut self, limit: Option<f64>) -> Result<(), IntegrateError> {
        loop {
            self.steps += 1;
            if self.steps > self.solver.max_steps {
                return Err(IntegrateError::TooManySteps(self.solver.max_steps));
            }
            let mut h = self.h;
            if let Some(kink) = self.solver.kink {
                let cap = self.solver.graded_step(kink, &self.y);
                if h.abs() > cap {
                    h = cap.copysign(h);
                }
            }
            let mut clipped = false;
            if let Some(lim) = limit {
                let remaining = lim - self.t;
                if remaining.abs() <= h.abs() {
                    h = remaining;
                    clipped = true;
                }
            }
            if h.abs() <= 8.0 * f64::EPSILON * self.t.abs().max(1.0) && !clipped {
                return Err(IntegrateError::StepSizeUnderflow { t: self.t, h });
            }
            let (y_new, err) = self.solver.attempt(&self.y, h);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-1.0 / 8.0)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                if let Some(kink) = self.solver.kink {
                    let k = kink.index;
                    if self.y[k] * y_new[k] < 0.0 {
                        if let Some((tau, y_hit, v)) = self.land_on_kink(k, h, &y_new) {
                            let cap = self.solver.kink_step(kink, v);
                            if tau.abs() <= 2.0 * cap {
                                self.t += tau;
                                self.y = y_hit;
                                self.h = h * factor;
                                return Ok(());
                            }
                            // approach the crossing first, then land with a short step
                            self.h = tau - cap.copysign(tau);
                            continue;
                        }
                    }
                }
                self.t = if clipped { limit.unwrap() } else { self.t + h };
                self.y = y_new;
                // keep the controller's step when a short clipped step was taken
                if !clipped || factor < 1.0 {
                    self.h = h * factor;
                }
                return Ok(());
            }
            self.h = h * factor;
        }
    }

    /// Shortened step from the current state ending where `y[k] = 0`, by
    /// Newton iteration on the step length. The crossing component is snapped
    /// to exactly zero. Returns `None` if the iteration leaves (0, h).
    /// Also returns y[k]' at the crossing.
    fn land_on_kink(&self, k: usize, h: f64, y_full: &[f64; N]) -> Option<(f64, [f64; N], f64)> {
        let y0 = self.y;
        let mut tau = h * y0[k] / (y0[k] - y_full[k]);
        for _ in 0..50 {
            let (y_tau, err) = self.solver.attempt(&y0, tau);
            let slope = self.solver.rhs(&y_tau)[k];
            if slope == 0.0 || err > 1.0 {
                return None;
            }
            let dtau = -y_tau[k] / slope;
            tau += dtau;
            if tau.abs() > h.abs() || tau * h <= 0.0 {
                return None;
            }
            if dtau.abs() <= 4.0 * f64::EPSILON * tau.abs() {
                let (mut y_hit, _) = self.solver.attempt(&y0, tau);
                y_hit[k] = 0.0;
                return Some((tau, y_hit, slope));
            }
        }
        None
    }

    /// Steps until `t` is reached exactly.
    pub fn advance_to(&mut self, t: f64) -> Result<(), IntegrateError> {
        while self.t != t {
            if (t - self.t) * self.h < 0.0 {
                self.h = -self.h;
            }
            self.step(Some(t))?;
        }
        Ok(())
    }
}
