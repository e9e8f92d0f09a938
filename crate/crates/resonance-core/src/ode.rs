//! Adaptive Dormand–Prince 5(4) integration for small complex ODE systems.
//!
//! The stepper is generic over the state dimension `N` (components are
//! `Complex64`; real systems embed in the real parts). It supports a
//! position-dependent step-size cap — used by callers to keep steps below a
//! fraction of the local oscillation wavelength — and a per-accepted-step
//! callback that may modify the state in place (used for overflow
//! renormalization of linear systems). When the callback reports a
//! modification, the first-same-as-last reuse is skipped and the stage is
//! recomputed from the modified state.

use num_complex::Complex64;

use crate::{Error, Result};

/// Options for [`integrate_adaptive`].
#[derive(Debug, Clone)]
pub struct OdeOpts {
    /// Combined absolute/relative local error tolerance per unit step.
    pub tol: f64,
    /// Budget on attempted steps (accepted + rejected).
    pub max_steps: usize,
    /// Initial step size; defaults to 1e-3 of the interval.
    pub h_init: Option<f64>,
}

impl Default for OdeOpts {
    fn default() -> Self {
        OdeOpts {
            tol: 1e-12,
            max_steps: 500_000,
            h_init: None,
        }
    }
}

// Dormand–Prince 5(4) coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (identical to the last stage row: FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded fourth-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[inline]
fn axpy<const N: usize>(y: &mut [Complex64; N], a: f64, k: &[Complex64; N]) {
    for i in 0..N {
        y[i] += a * k[i];
    }
}

/// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction).
///
/// `max_step(x)` caps the absolute step size near `x`; `on_step(x, &mut y)`
/// runs after every accepted step and returns whether it modified `y`.
/// Returns the state at `x1`.
pub fn integrate_adaptive<const N: usize, F, M, S>(
    f: F,
    x0: f64,
    x1: f64,
    y0: [Complex64; N],
    opts: &OdeOpts,
    max_step: M,
    mut on_step: S,
) -> Result<[Complex64; N]>
where
    F: Fn(f64, &[Complex64; N]) -> [Complex64; N],
    M: Fn(f64) -> f64,
    S: FnMut(f64, &mut [Complex64; N]) -> bool,
{
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let total = span.abs();
    let tol = opts.tol;
    if !(tol > 0.0) {
        return Err(Error::Numerical("ODE tolerance must be positive".into()));
    }

    let mut x = x0;
    let mut y = y0;
    let mut k: [[Complex64; N]; 7] = [[Complex64::new(0.0, 0.0); N]; 7];
    k[0] = f(x, &y);

    let cap0 = max_step(x0);
    if !(cap0 > 0.0) {
        return Err(Error::Numerical(format!(
            "step-size cap is not positive at x = {x0}"
        )));
    }
    let mut h = opts
        .h_init
        .unwrap_or(total * 1e-3)
        .min(cap0)
        .min(total)
        .max(total * 1e-15);

    let mut attempts = 0usize;
    loop {
        let remaining = (x1 - x).abs();
        if remaining <= total * 1e-15 {
            return Ok(y);
        }
        let cap = max_step(x);
        if !(cap > 0.0) {
            return Err(Error::Numerical(format!(
                "step-size cap is not positive at x = {x}"
            )));
        }
        h = h.min(cap);
        let last = h >= remaining;
        if last {
            h = remaining;
        }

        attempts += 1;
        if attempts > opts.max_steps {
            return Err(Error::IntegrationBudget {
                h,
                tol,
                steps: attempts,
            });
        }

        // Stages 2..=7.
        for s in 1..7 {
            let mut ys = y;
            for j in 0..s {
                if A[s][j] != 0.0 {
                    axpy(&mut ys, dir * h * A[s][j], &k[j]);
                }
            }
            k[s] = f(x + dir * h * C[s], &ys);
        }

        // Fifth-order solution and embedded error.
        let mut y5 = y;
        let mut err_vec = [Complex64::new(0.0, 0.0); N];
        for s in 0..7 {
            if B5[s] != 0.0 {
                axpy(&mut y5, dir * h * B5[s], &k[s]);
            }
            let d = B5[s] - B4[s];
            if d != 0.0 {
                axpy(&mut err_vec, dir * h * d, &k[s]);
            }
        }
        let mut err_sq = 0.0;
        for i in 0..N {
            let scale = tol + tol * y[i].norm().max(y5[i].norm());
            let r = err_vec[i].norm() / scale;
            err_sq += r * r;
        }
        let err = (err_sq / N as f64).sqrt();

        if err <= 1.0 {
            x = if last { x1 } else { x + dir * h };
            y = y5;
            let modified = on_step(x, &mut y);
            if modified {
                k[0] = f(x, &y);
            } else {
                k[0] = k[6];
            }
        }
        // PI-free elementary controller with the usual safety clamps.
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * factor).max(total * 1e-15);
    }
}

/// Convenience wrapper without a callback or step cap.
#[cfg(test)]
pub fn integrate_plain<const N: usize, F>(
    f: F,
    x0: f64,
    x1: f64,
    y0: [Complex64; N],
    opts: &OdeOpts,
) -> Result<[Complex64; N]>
where
    F: Fn(f64, &[Complex64; N]) -> [Complex64; N],
{
    integrate_adaptive(f, x0, x1, y0, opts, |_| f64::INFINITY, |_, _| false)
}
