//! Closed-form resonance predictions and the quantization-condition solver.
//!
//! For a potential vanishing to order `k` at `0⁺` and `l` at `L⁻`, write
//! `Q = V^{(k)}(0⁺) · V^{(l)}(L⁻)`, `p = k + l + 4`, and let `S(E)`, `T(E)`
//! be the action and traversal time over the support. Resonances in an
//! admissible window organize into a lattice `z_n ≈ E_n + w_n`:
//!
//! * the real parts solve `S(E_n) = π h (n − (l−k)/4 − φ)` with
//!   `φ = arg Q / 2π` (0 or 1/2 for real data);
//! * the common depth is
//!   `w_n = i h [ (k+l) log h + log|Q| − (p/2) log(4E_n) ] / (2 T(E_n))`,
//!   i.e. `−Im z_n ≈ (k+l) h log(1/h) / (2T)` plus an O(h) correction that
//!   is numerically dominant at practical h.
//!
//! The same data define the quantization function
//!
//! ```text
//! G(z) = i^{l−k} h^{k+l} (2 z^{1/2})^{−p} Q e^{2 i Φ(z)/h} − 1,
//! ```
//!
//! with `Φ(z) = ∫₀^L (z − V)^{1/2}`; its Newton zeros are the
//! mid-fidelity resonance approximations, seeded by the closed form.

use num_complex::Complex64;

use crate::potential::Potential;
use crate::quadrature::{action, complex_period, complex_phase, invert_action, period};
use crate::tolerances::{H_RANGE, NEWTON_MAX_ITERS, QC_NEWTON_TOL};
use crate::{Error, Result};

/// One predicted resonance.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// Lattice index n.
    pub n: i64,
    /// Real part `E_n` (zero of the action rule).
    pub e_n: f64,
    /// Action `S(E_n)`.
    pub s_n: f64,
    /// Traversal time `T(E_n)`.
    pub t_n: f64,
    /// Common-depth shift; `Im w_n < 0`.
    pub w_n: Complex64,
    /// Predicted resonance `E_n + w_n`.
    pub z: Complex64,
}

/// The full prediction over a window at one `h`.
#[derive(Debug, Clone)]
pub struct PredictionSet {
    pub h: f64,
    pub window: (f64, f64),
    pub k: usize,
    pub l: usize,
    /// `Q = V^{(k)}(0⁺) · V^{(l)}(L⁻)`.
    pub q: f64,
    /// Maslov-type index `(l−k)/4 + φ` entering the action rule.
    pub index_shift: f64,
    pub items: Vec<Prediction>,
}

fn validate_window(pot: &Potential, a: f64, b: f64) -> Result<()> {
    if !(a > pot.sup() && b > a) {
        return Err(Error::WindowAdmissibility {
            e: a,
            sup_v: pot.sup(),
        });
    }
    Ok(())
}

fn validate_h(h: f64) -> Result<()> {
    if !(h >= H_RANGE.0 && h <= H_RANGE.1) {
        return Err(Error::OutOfRange {
            what: "semiclassical parameter h",
            detail: format!("h = {h} outside [{}, {}]", H_RANGE.0, H_RANGE.1),
        });
    }
    Ok(())
}

/// Endpoint data `(k, l, Q, φ)` with `Q ≠ 0` enforced.
fn endpoint_data(pot: &Potential) -> Result<(usize, usize, f64, f64)> {
    let (k, l) = pot.vanishing_orders()?;
    let (vk0, vll) = pot.endpoint_derivatives()?;
    let q = vk0 * vll;
    if q == 0.0 {
        return Err(Error::DegenerateOrder);
    }
    let phi = if q > 0.0 { 0.0 } else { 0.5 };
    Ok((k, l, q, phi))
}

/// Depth shift `w(E)` at energy `E` for the given endpoint data.
fn depth_shift(k: usize, l: usize, q: f64, e: f64, t: f64, h: f64) -> Complex64 {
    let p = (k + l + 4) as f64;
    let bracket = (k + l) as f64 * h.ln() + q.abs().ln() - 0.5 * p * (4.0 * e).ln();
    Complex64::new(0.0, h * bracket / (2.0 * t))
}

/// Closed-form prediction of every lattice resonance with `E_n` in the
/// window. Indices run over the integer solutions of the action rule.
pub fn predict(pot: &Potential, a: f64, b: f64, h: f64) -> Result<PredictionSet> {
    validate_h(h)?;
    validate_window(pot, a, b)?;
    let (k, l, q, phi) = endpoint_data(pot)?;
    let shift = (l as f64 - k as f64) / 4.0 + phi;
    let s_a = action(pot, a)?;
    let s_b = action(pot, b)?;
    let n_lo = (s_a / (std::f64::consts::PI * h) + shift).ceil() as i64;
    let n_hi = (s_b / (std::f64::consts::PI * h) + shift).floor() as i64;
    let mut items = Vec::new();
    for n in n_lo..=n_hi {
        let s_n = std::f64::consts::PI * h * (n as f64 - shift);
        if s_n < s_a - 1e-12 || s_n > s_b + 1e-12 {
            continue;
        }
        let e_n = invert_action(pot, s_n, (a, b))?;
        let t_n = period(pot, e_n)?;
        let w_n = depth_shift(k, l, q, e_n, t_n, h);
        items.push(Prediction {
            n,
            e_n,
            s_n,
            t_n,
            w_n,
            z: Complex64::new(e_n, 0.0) + w_n,
        });
    }
    Ok(PredictionSet {
        h,
        window: (a, b),
        k,
        l,
        q,
        index_shift: shift,
        items,
    })
}

/// Quantization function `G(z)` and its derivative
/// `G′ = (G+1) (−p/(2z) + 2 i T(z)/h)`, with `T(z)` the complexified
/// traversal time.
pub fn qc_residual(pot: &Potential, z: Complex64, h: f64) -> Result<(Complex64, Complex64)> {
    let (k, l, q, _) = endpoint_data(pot)?;
    let p = (k + l + 4) as i32;
    let big_phi = complex_phase(pot, pot.support_right(), z)?;
    let t_c = complex_period(pot, z)?;
    let i = Complex64::i();
    let g = i.powi(l as i32 - k as i32)
        * h.powi((k + l) as i32)
        * (2.0 * z.sqrt()).powi(-p)
        * q
        * (2.0 * i * big_phi / h).exp()
        - 1.0;
    let gp = (g + 1.0) * (-(p as f64) / (2.0 * z) + 2.0 * i * t_c / h);
    Ok((g, gp))
}

/// Newton refinement of a seed against the quantization condition.
/// Converges when `|G| ≤` the quantization tolerance.
pub fn solve_qc(pot: &Potential, seed: Complex64, h: f64) -> Result<Complex64> {
    validate_h(h)?;
    let mut z = seed;
    let mut last_norm = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITERS {
        let (g, gp) = qc_residual(pot, z, h)?;
        if g.norm() <= QC_NEWTON_TOL {
            return Ok(z);
        }
        let dz = g / gp;
        last_norm = g.norm();
        z -= dz;
    }
    let (g, _) = qc_residual(pot, z, h)?;
    if g.norm() <= QC_NEWTON_TOL {
        return Ok(z);
    }
    Err(Error::NewtonNoConvergence {
        iters: NEWTON_MAX_ITERS,
        last_norm,
        last_z: z,
    })
}

/// The prediction-level quantization function
/// `F(w, E) = i^{l−k} h^{k+l} (2 E^{1/2})^{−p} Q e^{2 i (S(E) + w T(E))/h} − 1`
/// using the real action data at `E`. The closed-form pair `(E_n, w_n)`
/// is an exact zero.
pub fn qc_at_prediction(pot: &Potential, w: Complex64, e: f64, h: f64) -> Result<Complex64> {
    let (k, l, q, _) = endpoint_data(pot)?;
    let p = (k + l + 4) as i32;
    let s = action(pot, e)?;
    let t = period(pot, e)?;
    let i = Complex64::i();
    Ok(i.powi(l as i32 - k as i32)
        * h.powi((k + l) as i32)
        * Complex64::new(2.0 * e.sqrt(), 0.0).powi(-p)
        * q
        * (2.0 * i * (s + w * t) / h).exp()
        - 1.0)
}

/// w-derivative of [`qc_at_prediction`]: `∂_w F = (2i/h) T(E) (F + 1)`.
pub fn qc_at_prediction_dw(pot: &Potential, w: Complex64, e: f64, h: f64) -> Result<Complex64> {
    let f = qc_at_prediction(pot, w, e, h)?;
    let t = period(pot, e)?;
    Ok(Complex64::i() * 2.0 * t / h * (f + 1.0))
}

/// Default depth multiplier for the search band `Im z ≥ −M h log(1/h)`:
/// the predicted common depth at both window ends, normalized by
/// `h log(1/h)`, plus a unit margin. Falls back to the leading
/// coefficient `(k+l)/(2 min T) + 1` if the window contains no lattice
/// point.
pub fn default_m(pot: &Potential, a: f64, b: f64, h: f64) -> Result<f64> {
    validate_h(h)?;
    validate_window(pot, a, b)?;
    let (k, l, q, _) = endpoint_data(pot)?;
    let hl = h * (1.0 / h).ln();
    let mut m_max: f64 = 0.0;
    for e in [a, b] {
        let t = period(pot, e)?;
        let w = depth_shift(k, l, q, e, t, h);
        m_max = m_max.max(-w.im / hl);
    }
    if m_max > 0.0 {
        return Ok(m_max + 1.0);
    }
    let t_min = period(pot, b)?.min(period(pot, a)?);
    Ok((k + l) as f64 / (2.0 * t_min) + 1.0)
}
