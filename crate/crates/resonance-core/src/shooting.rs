//! Exact outgoing solutions by piecewise ODE shooting.
//!
//! The outgoing solution enters the support from the left as the
//! left-moving wave `e^{−i z^{1/2} x / h}`; it is continued across the
//! support by integrating the first-order system in `(u, v)` with
//! `v = h u′`, together with its z-derivative `(u_z, v_z)` obtained from
//! the variational equation. The residual
//!
//! ```text
//! R(z) = −i v(L) − z^{1/2} u(L)
//! ```
//!
//! vanishes exactly when the continued solution is outgoing on the right,
//! i.e. at a resonance. `R` is kept as a mantissa/log-scale pair: the
//! integration renormalizes the state whenever it grows past a threshold,
//! which changes `R` only by a positive constant factor — Newton ratios
//! and phases are unaffected, and raw values are recovered exactly while
//! they fit in an `f64`.
//!
//! For constant wells an independent closed-form route (plane-wave
//! matching across the two steps) gives the same resonances; it shares no
//! code with the integrator and serves as the cross-check oracle.

use num_complex::Complex64;

use crate::ode::{integrate_adaptive, OdeOpts};
use crate::potential::Potential;
use crate::tolerances::{H_RANGE, NEWTON_MAX_ITERS, ODE_TOL_DEFAULT, ODE_TOL_MIN, RENORM_THRESHOLD_DEFAULT};
use crate::{Error, Result};

/// Options for the outgoing integration.
#[derive(Debug, Clone)]
pub struct ShootOpts {
    /// Local error tolerance for the ODE stepper.
    pub tol: f64,
    /// State-magnitude threshold that triggers renormalization.
    pub renorm_threshold: f64,
    /// Step budget across the whole support.
    pub max_steps: usize,
}

impl Default for ShootOpts {
    fn default() -> Self {
        ShootOpts {
            tol: ODE_TOL_DEFAULT,
            renorm_threshold: RENORM_THRESHOLD_DEFAULT,
            max_steps: 2_000_000,
        }
    }
}

/// Scaled outgoing state at the right end of the support.
///
/// True values are `e^{log_scale}` times the stored ones.
#[derive(Debug, Clone)]
pub struct OutgoingState {
    pub u: Complex64,
    pub v: Complex64,
    pub u_z: Complex64,
    pub v_z: Complex64,
    pub log_scale: f64,
    /// Accepted integration steps over all pieces.
    pub steps: usize,
}

/// Outgoing residual with its z-derivative, in mantissa/log-scale form.
#[derive(Debug, Clone)]
pub struct Residual {
    pub mantissa: Complex64,
    pub d_mantissa: Complex64,
    /// True residual = `e^{log_scale} · mantissa` (same factor for the
    /// derivative).
    pub log_scale: f64,
    pub steps: usize,
}

impl Residual {
    /// Raw residual value; overflows for deep states at tiny `h`, where
    /// only ratios and phases are meaningful.
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }

    /// Raw derivative value.
    pub fn derivative(&self) -> Complex64 {
        self.d_mantissa * self.log_scale.exp()
    }

    /// Newton correction `R / R′`; the shared scale factor cancels
    /// exactly.
    pub fn newton_ratio(&self) -> Complex64 {
        self.mantissa / self.d_mantissa
    }

    /// Argument of the residual (the log-scale factor is positive and
    /// drops out).
    pub fn phase(&self) -> f64 {
        self.mantissa.arg()
    }
}

fn validate_h_tol(h: f64, tol: f64) -> Result<()> {
    if !(h >= H_RANGE.0 && h <= H_RANGE.1) {
        return Err(Error::OutOfRange {
            what: "semiclassical parameter h",
            detail: format!("h = {h} outside [{}, {}]", H_RANGE.0, H_RANGE.1),
        });
    }
    if !(tol >= ODE_TOL_MIN) {
        return Err(Error::OutOfRange {
            what: "ODE tolerance",
            detail: format!("tol = {tol} below floor {ODE_TOL_MIN}"),
        });
    }
    Ok(())
}

/// Integrates the outgoing solution and its z-derivative from `0` to `L`.
///
/// Requires `Re z` above the potential sup (the admissible-window
/// condition) so the local wavelength bound stays positive.
pub fn integrate_out(
    pot: &Potential,
    z: Complex64,
    h: f64,
    opts: &ShootOpts,
) -> Result<OutgoingState> {
    validate_h_tol(h, opts.tol)?;
    if !(z.re > pot.sup()) {
        return Err(Error::WindowAdmissibility {
            e: z.re,
            sup_v: pot.sup(),
        });
    }
    let sqrt_z = z.sqrt();
    let mut y = [
        Complex64::new(1.0, 0.0),
        -Complex64::i() * sqrt_z,
        Complex64::new(0.0, 0.0),
        -Complex64::i() / (2.0 * sqrt_z),
    ];
    let mut log_scale = 0.0f64;
    let mut steps = 0usize;
    let threshold = opts.renorm_threshold;

    for piece in pot.pieces() {
        let form = &piece.form;
        let rhs = |x: f64, s: &[Complex64; 4]| -> [Complex64; 4] {
            let vx = form.deriv(x, 0);
            let w = (vx - z) / h;
            [s[1] / h, w * s[0], s[3] / h, w * s[2] - s[0] / h]
        };
        let max_step = |x: f64| {
            let vx = form.deriv(x, 0);
            0.4 * h / (z - vx).norm().sqrt()
        };
        let ode_opts = OdeOpts {
            tol: opts.tol,
            max_steps: opts.max_steps,
            h_init: None,
        };
        y = integrate_adaptive(
            rhs,
            piece.lo,
            piece.hi,
            y,
            &ode_opts,
            max_step,
            |_x, s: &mut [Complex64; 4]| {
                steps += 1;
                let m = s
                    .iter()
                    .map(|c| c.norm())
                    .fold(0.0f64, f64::max);
                if m > threshold {
                    let rho = 1.0 / m;
                    for c in s.iter_mut() {
                        *c *= rho;
                    }
                    log_scale += m.ln();
                    true
                } else {
                    false
                }
            },
        )?;
    }
    Ok(OutgoingState {
        u: y[0],
        v: y[1],
        u_z: y[2],
        v_z: y[3],
        log_scale,
        steps,
    })
}

/// Outgoing residual `R(z) = −i v(L) − z^{1/2} u(L)` and its z-derivative,
/// both carrying the shared renormalization log-scale.
pub fn outgoing_residual(
    pot: &Potential,
    z: Complex64,
    h: f64,
    opts: &ShootOpts,
) -> Result<Residual> {
    let st = integrate_out(pot, z, h, opts)?;
    let sqrt_z = z.sqrt();
    let i = Complex64::i();
    let mantissa = -i * st.v - sqrt_z * st.u;
    let d_mantissa = -i * st.v_z - st.u / (2.0 * sqrt_z) - sqrt_z * st.u_z;
    Ok(Residual {
        mantissa,
        d_mantissa,
        log_scale: st.log_scale,
        steps: st.steps,
    })
}

/// Newton iteration on the outgoing residual from `z0`; the shared
/// renormalization factor cancels in every correction.
pub fn newton_root(
    pot: &Potential,
    z0: Complex64,
    h: f64,
    opts: &ShootOpts,
    step_tol: f64,
) -> Result<Complex64> {
    let mut z = z0;
    let mut last_norm = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITERS {
        let r = outgoing_residual(pot, z, h, opts)?;
        let dz = r.newton_ratio();
        z -= dz;
        last_norm = dz.norm();
        if last_norm <= step_tol * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    Err(Error::NewtonNoConvergence {
        iters: NEWTON_MAX_ITERS,
        last_norm,
        last_z: z,
    })
}

// ----------------------------------------------------------------------
// Closed-form route for constant wells (independent of the integrator).
// ----------------------------------------------------------------------

/// Plane-wave matching residual for the constant well `v0` on `[0, l]`:
/// `g(z) = r² e^{2 i κ l / h} − 1` with `κ = (z − v0)^{1/2}` and
/// `r = (z^{1/2} − κ)/(z^{1/2} + κ)`. Returns `(g, g′)`.
pub fn constant_well_residual(v0: f64, l: f64, z: Complex64, h: f64) -> (Complex64, Complex64) {
    let sz = z.sqrt();
    let kappa = (z - v0).sqrt();
    let r = (sz - kappa) / (sz + kappa);
    let g = r * r * (Complex64::i() * 2.0 * kappa * l / h).exp() - 1.0;
    let rp = -v0 / (sz * kappa * (sz + kappa) * (sz + kappa));
    let gp = (g + 1.0) * (2.0 * rp / r + Complex64::i() * l / (kappa * h));
    (g, gp)
}

/// The exact outgoing data `(u(l), v(l))` of the constant well, from the
/// same plane-wave matching. Used to validate the integrator at the state
/// level, not only at roots.
pub fn constant_well_outgoing(v0: f64, l: f64, z: Complex64, h: f64) -> (Complex64, Complex64) {
    let sz = z.sqrt();
    let kappa = (z - v0).sqrt();
    let a = (kappa - sz) / (2.0 * kappa);
    let b = (kappa + sz) / (2.0 * kappa);
    let ep = (Complex64::i() * kappa * l / h).exp();
    let em = 1.0 / ep;
    let u = a * ep + b * em;
    let v = Complex64::i() * kappa * (a * ep - b * em);
    (u, v)
}

/// All constant-well resonances with `Re z ∈ [a, b]` and `Im z ≥ im_floor`,
/// by per-branch Newton on the logarithmic form
/// `2 Log r + 2 i κ l / h = 2 π i n`. Requires `v0 > 0` (a free line has
/// no resonances) and `a > v0`.
pub fn constant_well_roots(
    v0: f64,
    l: f64,
    a: f64,
    b: f64,
    im_floor: f64,
    h: f64,
) -> Result<Vec<Complex64>> {
    if !(v0 > 0.0) {
        return Err(Error::InvalidPotential(
            "closed-form well route needs a nonzero depth".into(),
        ));
    }
    if !(a > v0 && b > a) {
        return Err(Error::WindowAdmissibility { e: a, sup_v: v0 });
    }
    let two_pi = std::f64::consts::TAU;
    let n_lo = (l * (a - v0).sqrt() / (std::f64::consts::PI * h)).floor() as i64 - 1;
    let n_hi = (l * (b - v0).sqrt() / (std::f64::consts::PI * h)).ceil() as i64 + 1;
    let mut roots: Vec<Complex64> = Vec::new();
    for n in n_lo.max(1)..=n_hi {
        let kappa_seed = std::f64::consts::PI * (n as f64) * h / l;
        let mut z = Complex64::new(v0 + kappa_seed * kappa_seed, 0.0);
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERS {
            let sz = z.sqrt();
            let kappa = (z - v0).sqrt();
            let r = (sz - kappa) / (sz + kappa);
            let f = 2.0 * r.ln() + Complex64::i() * (2.0 * kappa * l / h - two_pi * n as f64);
            let rp = -v0 / (sz * kappa * (sz + kappa) * (sz + kappa));
            let fp = 2.0 * rp / r + Complex64::i() * l / (kappa * h);
            let dz = f / fp;
            z -= dz;
            if dz.norm() < 1e-13 * z.norm().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            continue;
        }
        let in_window = z.re >= a - 1e-9 && z.re <= b + 1e-9 && z.im >= im_floor - 1e-9;
        if in_window && !roots.iter().any(|w| (w - z).norm() < 1e-9) {
            roots.push(z);
        }
    }
    roots.sort_by(|p, q| p.re.partial_cmp(&q.re).unwrap());
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const FROZEN_ROOT_H02: Complex64 = Complex64::new(2.5747356711772321, -0.10560492007798839);
    const FROZEN_ROOT_H05: Complex64 = Complex64::new(2.5517045918257918, -0.26234915800950198);

    #[test]
    fn free_line_propagates_the_plane_wave() {
        let pot = Potential::constant(0.0, 1.0).unwrap();
        let z = c(2.0, 0.0);
        let h = 0.05;
        let st = integrate_out(&pot, z, h, &ShootOpts::default()).unwrap();
        let sqrt_z = z.sqrt();
        let want_u = (-Complex64::i() * sqrt_z / h).exp();
        assert_eq!(st.log_scale, 0.0);
        assert!((st.u - want_u).norm() < 1e-10, "{} vs {}", st.u, want_u);
        assert!((st.v + Complex64::i() * sqrt_z * want_u).norm() < 1e-10);
        // No resonances on the free line: residual = −2√z·u(L), away from 0.
        let r = outgoing_residual(&pot, z, h, &ShootOpts::default()).unwrap();
        assert!((r.value() + 2.0 * sqrt_z * want_u).norm() < 1e-9);
        assert!(r.value().norm() > 1.0);
    }

    #[test]
    fn constant_well_state_matches_plane_wave_matching() {
        let pot = Potential::constant(1.0, 1.0).unwrap();
        let h = 0.05;
        for z in [c(2.5, 0.0), c(2.2, -0.1), c(2.9, -0.25)] {
            let st = integrate_out(&pot, z, h, &ShootOpts::default()).unwrap();
            let (u_want, v_want) = constant_well_outgoing(1.0, 1.0, z, h);
            let scale = st.log_scale.exp();
            assert!(
                (st.u * scale - u_want).norm() < 1e-10 * u_want.norm().max(1.0),
                "u at {z}: {} vs {}",
                st.u * scale,
                u_want
            );
            assert!((st.v * scale - v_want).norm() < 1e-10 * v_want.norm().max(1.0));
        }
    }

    #[test]
    fn residual_agrees_with_closed_form_up_to_explicit_prefactor() {
        // R(z) = (κ+√z)² e^{−iκl/h} / (2κ) · g(z): the two routes must agree
        // at the value level, not only at the common zeros.
        let pot = Potential::constant(1.0, 1.0).unwrap();
        let h = 0.05;
        for z in [c(2.3, -0.02), c(2.55, -0.26), c(2.8, -0.1)] {
            let r = outgoing_residual(&pot, z, h, &ShootOpts::default()).unwrap();
            let (g, _) = constant_well_residual(1.0, 1.0, z, h);
            let sz = z.sqrt();
            let kappa = (z - 1.0).sqrt();
            let pre =
                (kappa + sz) * (kappa + sz) * (-Complex64::i() * kappa / h).exp() / (2.0 * kappa);
            let want = pre * g;
            let got = r.value();
            assert!(
                (got - want).norm() < 1e-9 * want.norm().max(1.0),
                "z = {z}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn frozen_roots_are_found_by_both_routes() {
        // Closed-form route.
        let roots = constant_well_roots(1.0, 1.0, 2.0, 3.0, -0.5, 0.02).unwrap();
        assert!(
            roots.iter().any(|z| (z - FROZEN_ROOT_H02).norm() < 1e-11),
            "missing frozen root at h=0.02 in {roots:?}"
        );
        let roots = constant_well_roots(1.0, 1.0, 2.0, 3.0, -0.5, 0.05).unwrap();
        assert!(roots.iter().any(|z| (z - FROZEN_ROOT_H05).norm() < 1e-11));

        // Shooting route via Newton from a perturbed seed.
        let pot = Potential::constant(1.0, 1.0).unwrap();
        let seed = FROZEN_ROOT_H05 + c(3e-3, 2e-3);
        let z = newton_root(&pot, seed, 0.05, &ShootOpts::default(), 1e-13).unwrap();
        assert!(
            (z - FROZEN_ROOT_H05).norm() < 1e-9,
            "shooting root {z} vs frozen {FROZEN_ROOT_H05}"
        );
    }

    #[test]
    fn wronskian_of_two_solutions_is_conserved() {
        // u1 carries the outgoing data, u2 = (0, 1); the Wronskian
        // u1 v2 − u2 v1 equals its initial value 1 across the support.
        let pot = Potential::parabolic_bump();
        let z = c(2.2, -0.05);
        let h = 0.02;
        let opts = ShootOpts {
            renorm_threshold: f64::INFINITY,
            ..ShootOpts::default()
        };
        let s1 = integrate_out(&pot, z, h, &opts).unwrap();
        // Second solution: reuse the integrator through a modified start.
        // Integrate (u2, v2) embedded in the first two slots by shifting the
        // initial data; the variational slots are ignored.
        let mut y = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        for piece in pot.pieces().iter() {
            let form = piece.form.clone();
            let rhs = move |x: f64, s: &[Complex64; 4]| -> [Complex64; 4] {
                let w = (form.deriv(x, 0) - z) / h;
                [s[1] / h, w * s[0], s[3] / h, w * s[2] - s[0] / h]
            };
            y = crate::ode::integrate_adaptive(
                rhs,
                piece.lo,
                piece.hi,
                y,
                &crate::ode::OdeOpts::default(),
                |x: f64| 0.4 * h / (z - pot.value(x)).norm().sqrt(),
                |_, _: &mut [Complex64; 4]| false,
            )
            .unwrap();
        }
        let w = s1.u * y[1] - y[0] * s1.v;
        assert!((w - c(1.0, 0.0)).norm() < 1e-10, "Wronskian drifted: {w}");
    }

    #[test]
    fn variational_derivative_matches_finite_differences() {
        let pot = Potential::parabolic_bump();
        let z0 = c(2.3, -0.05);
        let h = 0.05;
        let opts = ShootOpts::default();
        let r0 = outgoing_residual(&pot, z0, h, &opts).unwrap();
        let d = 1e-6;
        let fd = |delta: f64| -> Complex64 {
            let rp = outgoing_residual(&pot, z0 + delta, h, &opts).unwrap();
            let rm = outgoing_residual(&pot, z0 - delta, h, &opts).unwrap();
            (rp.value() - rm.value()) / (2.0 * delta)
        };
        let fd_val = (fd(d / 2.0) * 4.0 - fd(d)) / 3.0;
        let var = r0.derivative();
        assert!(
            (var - fd_val).norm() < 1e-5 * var.norm(),
            "variational {var} vs finite-difference {fd_val}"
        );
    }

    #[test]
    fn renormalization_threshold_does_not_move_roots() {
        let pot = Potential::constant(1.0, 1.0).unwrap();
        let seed = FROZEN_ROOT_H05 + c(1e-3, 1e-3);
        let tight = ShootOpts {
            renorm_threshold: 1e2,
            ..ShootOpts::default()
        };
        let loose = ShootOpts {
            renorm_threshold: 1e3,
            ..ShootOpts::default()
        };
        let z1 = newton_root(&pot, seed, 0.05, &tight, 1e-13).unwrap();
        let z2 = newton_root(&pot, seed, 0.05, &loose, 1e-13).unwrap();
        assert!((z1 - z2).norm() < 1e-11, "{z1} vs {z2}");
    }

    #[test]
    fn parameter_ranges_are_validated() {
        let pot = Potential::constant(1.0, 1.0).unwrap();
        let z = c(2.5, 0.0);
        let bad_h = integrate_out(&pot, z, 0.5, &ShootOpts::default());
        assert!(matches!(bad_h, Err(Error::OutOfRange { .. })));
        let bad_h2 = integrate_out(&pot, z, 1e-5, &ShootOpts::default());
        assert!(matches!(bad_h2, Err(Error::OutOfRange { .. })));
        let bad_tol = integrate_out(
            &pot,
            z,
            0.05,
            &ShootOpts {
                tol: 1e-16,
                ..ShootOpts::default()
            },
        );
        assert!(matches!(bad_tol, Err(Error::OutOfRange { .. })));
        let below = integrate_out(&pot, c(0.5, 0.0), 0.05, &ShootOpts::default());
        assert!(matches!(below, Err(Error::WindowAdmissibility { .. })));
    }
}
