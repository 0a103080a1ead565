//! First and second derivatives by finite differences with Ridders
//! extrapolation to zero step.
//!
//! Central stencils are used when the stencil fits inside [0, ∞); close to the
//! origin the stencil is one-sided so functions defined only for r ≥ 0 are
//! never evaluated at negative arguments.

use serde::{Deserialize, Serialize};

/// Derivative order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    First,
    Second,
}

impl TryFrom<u8> for Order {
    type Error = u8;

    fn try_from(k: u8) -> Result<Self, u8> {
        match k {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            other => Err(other),
        }
    }
}

/// Below this radius the stencil is one-sided. Central steps therefore start
/// at h ≥ 1e-3, which keeps rounding in second differences near ε|f|·1e6.
pub const ONE_SIDED_BELOW: f64 = 2e-3;

const ONE_SIDED_STEP: f64 = 0.05;
const TABLEAU: usize = 12;
const SAFE: f64 = 2.0;
const MIN_LEVELS: usize = 5;

/// Derivative of `f` at `r ≥ 0`.
pub fn derivative<E, F>(f: F, r: f64, order: Order) -> Result<f64, E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    if r < ONE_SIDED_BELOW {
        let f0 = f(r)?;
        let estimate = |h: f64| -> Result<f64, E> {
            Ok(match order {
                Order::First => (-3.0 * f0 + 4.0 * f(r + h)? - f(r + 2.0 * h)?) / (2.0 * h),
                Order::Second => {
                    (2.0 * f0 - 5.0 * f(r + h)? + 4.0 * f(r + 2.0 * h)? - f(r + 3.0 * h)?) / (h * h)
                }
            })
        };
        // errors of the one-sided rules contain every power of h from h²
        ridders(estimate, ONE_SIDED_STEP, 2.0, 1)
    } else {
        let h0 = (0.1 * r.max(1.0)).min(0.5 * r);
        let f0 = match order {
            Order::First => 0.0,
            Order::Second => f(r)?,
        };
        let estimate = |h: f64| -> Result<f64, E> {
            let (fp, fm) = (f(r + h)?, f(r - h)?);
            Ok(match order {
                Order::First => (fp - fm) / (2.0 * h),
                Order::Second => (fp - 2.0 * f0 + fm) / (h * h),
            })
        };
        ridders(estimate, h0, 1.4, 2)
    }
}

/// Neville extrapolation of `estimate(h)` to h = 0 along h_i = h0/shrink^i,
/// treating the estimate as a polynomial in h^`power`. Returns the entry with
/// the smallest internal error estimate and stops once the tableau diagonal
/// starts to grow again, after a few levels so that rules whose leading
/// error terms vanish are not cut short.
fn ridders<E, G>(estimate: G, h0: f64, shrink: f64, power: i32) -> Result<f64, E>
where
    G: Fn(f64) -> Result<f64, E>,
{
    let mut hs = [0.0; TABLEAU];
    let mut a = [[0.0; TABLEAU]; TABLEAU];
    let mut best = f64::NAN;
    let mut best_err = f64::INFINITY;
    for i in 0..TABLEAU {
        hs[i] = h0 / shrink.powi(i as i32);
        a[0][i] = estimate(hs[i])?;
        if i == 0 {
            best = a[0][0];
            continue;
        }
        for j in 1..=i {
            let (xa, xb) = (hs[i - j].powi(power), hs[i].powi(power));
            a[j][i] = (xa * a[j - 1][i] - xb * a[j - 1][i - 1]) / (xa - xb);
            let err = (a[j][i] - a[j - 1][i])
                .abs()
                .max((a[j][i] - a[j - 1][i - 1]).abs());
            if err <= best_err {
                best_err = err;
                best = a[j][i];
            }
        }
        if i >= MIN_LEVELS && (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * best_err {
            break;
        }
    }
    Ok(best)
}
