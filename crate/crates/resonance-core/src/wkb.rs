//! Exponential-form WKB series via jet arithmetic.
//!
//! With `ψ₀ = (z − V)^{1/2}`, the two exponential branches carry correction
//! terms defined by the recursion
//!
//! ```text
//! ψ_{±,k} = ±(i/(2ψ₀)) ∂ₓψ_{±,k−1} − (1/(2ψ₀)) Σ_{j=1}^{k−1} ψ_{±,j} ψ_{±,k−j}
//! ```
//!
//! evaluated here on truncated Taylor jets at a base point. Each recursion
//! level consumes one jet degree through the derivative shift, so a depth-K
//! computation starts from a degree-2K jet of V by default. At an endpoint
//! where V vanishes to order m (from inside), the recursion telescopes to
//! the closed form `ψ_{±,m}(x₀) = −i^{±m} (2z^{1/2})^{−m−1} V^{(m)}(x₀)`,
//! with all lower orders vanishing; [`endpoint_identity`] checks that
//! against the jet computation.

use num_complex::Complex64;

use crate::jet::Jet;
use crate::potential::{Potential, Side};
use crate::{Error, Result};

/// Which end of the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

/// Jets of `ψ_{±,j}` (j = 0..=k_max) at one base point. `plus[j]` has
/// degree `v_degree − j`.
#[derive(Debug, Clone)]
pub struct WkbJets {
    pub z: Complex64,
    pub base: f64,
    pub plus: Vec<Jet>,
    pub minus: Vec<Jet>,
}

/// Per-order endpoint values of both branches at both support ends.
#[derive(Debug, Clone)]
pub struct WkbSeries {
    pub z: Complex64,
    pub k_max: usize,
    pub plus_at_left: Vec<Complex64>,
    pub plus_at_right: Vec<Complex64>,
    pub minus_at_left: Vec<Complex64>,
    pub minus_at_right: Vec<Complex64>,
}

/// Runs the recursion on jets at `x0` (one-sided). `v_degree` is the Taylor
/// depth of V consumed at the base point; it must be at least `k_max`.
pub fn wkb_jets(
    v: &Potential,
    z: Complex64,
    x0: f64,
    side: Side,
    k_max: usize,
    v_degree: usize,
) -> Result<WkbJets> {
    if !(z.re > v.sup()) {
        return Err(Error::WindowAdmissibility {
            e: z.re,
            sup_v: v.sup(),
        });
    }
    if v_degree < k_max {
        return Err(Error::DegreeExhaustion {
            needed: k_max,
            available: v_degree,
        });
    }
    let zv = v.z_minus_v_jet(x0, side, v_degree, z)?;
    let psi0 = zv.sqrt()?;
    let two_psi0 = psi0.scale(Complex64::new(2.0, 0.0));

    let mut plus: Vec<Jet> = vec![psi0.clone()];
    let mut minus: Vec<Jet> = vec![psi0];
    let i_c = Complex64::new(0.0, 1.0);
    for k in 1..=k_max {
        let deg = v_degree - k;
        for (series, sign) in [(&mut plus, 1.0), (&mut minus, -1.0)] {
            let dprev = series[k - 1].derivative()?;
            let mut num = dprev.truncate(deg).scale(sign * i_c);
            for j in 1..k {
                let prod = series[j].truncate(deg).mul(&series[k - j].truncate(deg));
                num = num.sub(&prod);
            }
            series.push(num.div(&two_psi0.truncate(deg))?);
        }
    }
    Ok(WkbJets {
        z,
        base: x0,
        plus,
        minus,
    })
}

/// Endpoint values `ψ_{±,j}` at `0⁺` and `L⁻` through order `k_max`.
/// The truncated branch sums `Σ_j h^j ψ_{±,j}` are assembled by callers;
/// h enters only at assembly.
pub fn endpoint_values(v: &Potential, z: Complex64, k_max: usize) -> Result<WkbSeries> {
    let deg = 2 * k_max;
    let at_left = wkb_jets(v, z, 0.0, Side::Right, k_max, deg)?;
    let at_right = wkb_jets(v, z, v.support_right(), Side::Left, k_max, deg)?;
    Ok(WkbSeries {
        z,
        k_max,
        plus_at_left: at_left.plus.iter().map(|j| j.value()).collect(),
        plus_at_right: at_right.plus.iter().map(|j| j.value()).collect(),
        minus_at_left: at_left.minus.iter().map(|j| j.value()).collect(),
        minus_at_right: at_right.minus.iter().map(|j| j.value()).collect(),
    })
}

/// Comparison of the recursion value against the closed endpoint form.
#[derive(Debug, Clone)]
pub struct EndpointIdentityReport {
    pub end: End,
    /// Vanishing order used (k at the left end, l at the right end).
    pub order: usize,
    pub plus_recursion: Complex64,
    pub minus_recursion: Complex64,
    pub plus_closed: Complex64,
    pub minus_closed: Complex64,
    pub rel_error_plus: f64,
    pub rel_error_minus: f64,
}

/// Checks `ψ_{±,m}(x₀) = −i^{±m}(2z^{1/2})^{−m−1} V^{(m)}(x₀)` at a support
/// end, `m` the vanishing order there. For `m = 0` the identity degenerates
/// to the leading Taylor deviation `ψ₀(x₀) − z^{1/2} ≈ −V(x₀)/(2z^{1/2})`,
/// accurate only to the next Taylor term, and the report reflects that.
pub fn endpoint_identity(v: &Potential, z: Complex64, end: End) -> Result<EndpointIdentityReport> {
    let (k, l) = v.vanishing_orders()?;
    let (x0, side, order) = match end {
        End::Left => (0.0, Side::Right, k),
        End::Right => (v.support_right(), Side::Left, l),
    };
    let jets = wkb_jets(v, z, x0, side, order.max(1), 2 * order.max(1))?;
    let vm = v.eval(x0, order, side)?;
    let sqrt_z = z.sqrt();
    let i_c = Complex64::new(0.0, 1.0);
    let base = -(2.0 * sqrt_z).powi(-(order as i32) - 1) * vm;
    let plus_closed = i_c.powu(order as u32) * base;
    let minus_closed = i_c.powu(order as u32).conj() * base;

    let (plus_recursion, minus_recursion) = if order == 0 {
        (
            jets.plus[0].value() - sqrt_z,
            jets.minus[0].value() - sqrt_z,
        )
    } else {
        (jets.plus[order].value(), jets.minus[order].value())
    };
    let rel = |got: Complex64, want: Complex64| (got - want).norm() / want.norm().max(1e-300);
    Ok(EndpointIdentityReport {
        end,
        order,
        plus_recursion,
        minus_recursion,
        plus_closed,
        minus_closed,
        rel_error_plus: rel(plus_recursion, plus_closed),
        rel_error_minus: rel(minus_recursion, minus_closed),
    })
}

/// Closed form of `∫₀^L ψ_{+,1} dx`. Since `ψ_{±,1} = ±(i/2)(log ψ₀)′`,
/// the integral telescopes to `(i/2)·log(ψ₀(L⁻)/ψ₀(0⁺))`; the minus branch
/// is its negative.
pub fn first_order_integral(v: &Potential, z: Complex64) -> Result<Complex64> {
    if !(z.re > v.sup()) {
        return Err(Error::WindowAdmissibility {
            e: z.re,
            sup_v: v.sup(),
        });
    }
    let l = v.support_right();
    let psi0_l = (z - v.eval(l, 0, Side::Left)?).sqrt();
    let psi0_0 = (z - v.eval(0.0, 0, Side::Right)?).sqrt();
    Ok(Complex64::new(0.0, 0.5) * (psi0_l / psi0_0).ln())
}

/// Pointwise `ψ_{+,1}(x) = −i V′(x) / (4(z − V(x)))`, used as an
/// independent cross-check of the jet recursion and of
/// [`first_order_integral`].
pub fn psi_plus_one(v: &Potential, z: Complex64, x: f64, side: Side) -> Result<Complex64> {
    let vp = v.eval(x, 1, side)?;
    let v0 = v.eval(x, 0, side)?;
    Ok(Complex64::new(0.0, -1.0) * vp / (4.0 * (z - v0)))
}
