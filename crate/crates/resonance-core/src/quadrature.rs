//! Action, period, and complex phase integrals of a potential, plus action
//! inversion and a cached interpolation table.
//!
//! All integrals run adaptive Gauss–Kronrod (G7, K15) per smooth piece with
//! the K15−G7 difference as the local error estimate. The integrands are
//! smooth on each piece for window energies above sup V, so bisection depth
//! stays shallow. Square roots take the principal branch throughout, valid
//! because Re z > sup V keeps Re(z − V) positive.

use num_complex::Complex64;

use crate::potential::Potential;
use crate::tolerances::{ACTION_INVERT_TOL, QUAD_ABS_TOL};
use crate::{Error, Result};

/// Kronrod abscissae (positive half; the rule is symmetric).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];

/// K15 weights aligned with `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// G7 weights for `XGK[1], XGK[3], XGK[5]` and the center point.
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One G7/K15 evaluation on `[lo, hi]`: returns the K15 value and the
/// |K15 − G7| error estimate.
fn gk15<F: Fn(f64) -> Complex64>(f: &F, lo: f64, hi: f64) -> (Complex64, f64) {
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    let mut k15 = Complex64::new(0.0, 0.0);
    let mut g7 = Complex64::new(0.0, 0.0);
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let val = if i == 7 {
            f(c)
        } else {
            f(c - r * x) + f(c + r * x)
        };
        k15 += wk * val;
        if i % 2 == 1 {
            g7 += WG[i / 2] * val;
        } else if i == 7 {
            g7 += WG[3] * val;
        }
    }
    (k15 * r, ((k15 - g7) * r).norm())
}

/// Adaptive bisection on one smooth interval to absolute tolerance.
pub fn integrate_complex<F: Fn(f64) -> Complex64>(
    f: &F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
) -> Result<Complex64> {
    if lo == hi {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let total_len = hi - lo;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut err_acc = 0.0;
    // Explicit stack: (lo, hi, depth).
    let mut stack = vec![(lo, hi, 0u32)];
    while let Some((a, b, depth)) = stack.pop() {
        let (val, err) = gk15(f, a, b);
        let budget = abs_tol * ((b - a) / total_len).abs();
        if err <= budget || depth >= 60 {
            acc += val;
            err_acc += err;
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m, depth + 1));
            stack.push((m, b, depth + 1));
        }
    }
    if err_acc > 100.0 * abs_tol {
        return Err(Error::Numerical(format!(
            "quadrature error estimate {err_acc:.3e} exceeds budget {abs_tol:.3e}"
        )));
    }
    Ok(acc)
}

pub fn integrate_real<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, abs_tol: f64) -> Result<f64> {
    integrate_complex(&|x| Complex64::new(f(x), 0.0), lo, hi, abs_tol).map(|v| v.re)
}

fn check_window(v: &Potential, e: f64) -> Result<()> {
    if !(e > v.sup()) {
        return Err(Error::WindowAdmissibility {
            e,
            sup_v: v.sup(),
        });
    }
    Ok(())
}

/// Action `S(E) = ∫₀^L (E − V)^{1/2} dx`, increasing in E above sup V.
pub fn action(v: &Potential, e: f64) -> Result<f64> {
    check_window(v, e)?;
    per_piece_real(v, |form, x| (e - form.deriv(x, 0)).sqrt())
}

/// Period `T(E) = ∫₀^L dx / (2(E − V)^{1/2})`; equals ∂S/∂E and the affine
/// traversal time of the classical flow across the support.
pub fn period(v: &Potential, e: f64) -> Result<f64> {
    check_window(v, e)?;
    per_piece_real(v, |form, x| 0.5 / (e - form.deriv(x, 0)).sqrt())
}

fn per_piece_real(
    v: &Potential,
    integrand: impl Fn(&crate::potential::PieceForm, f64) -> f64,
) -> Result<f64> {
    let n = v.pieces().len() as f64;
    let mut total = 0.0;
    for p in v.pieces() {
        total += integrate_real(&|x| integrand(&p.form, x), p.lo, p.hi, QUAD_ABS_TOL / n)?;
    }
    Ok(total)
}

/// Traversal-time distance `∫_{lo}^{hi} dx / (2(E − V)^{1/2})` between two
/// points of the support closure (order-insensitive; always ≥ 0). Both
/// endpoints may lie outside the support, where V = 0.
pub fn time_distance(v: &Potential, e: f64, a: f64, b: f64) -> Result<f64> {
    check_window(v, e)?;
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut total = 0.0;
    let free = |x0: f64, x1: f64| (x1 - x0) / (2.0 * e.sqrt());
    let l = v.support_right();
    if lo < 0.0 {
        total += free(lo, hi.min(0.0));
    }
    if hi > l {
        total += free(lo.max(l), hi);
    }
    let n = v.pieces().len() as f64;
    for p in v.pieces() {
        let (plo, phi) = (p.lo.max(lo), p.hi.min(hi));
        if plo < phi {
            total += integrate_real(
                &|x| 0.5 / (e - p.form.deriv(x, 0)).sqrt(),
                plo,
                phi,
                QUAD_ABS_TOL / n,
            )?;
        }
    }
    Ok(total)
}

/// Complex phase `φ(x; z) = ∫₀^x (z − V)^{1/2} ds`, principal branch.
/// Reduces to the action at `x = L`, real `z`.
pub fn complex_phase(v: &Potential, x: f64, z: Complex64) -> Result<Complex64> {
    if !(0.0..=v.support_right()).contains(&x) {
        return Err(Error::OutOfRange {
            what: "phase endpoint",
            detail: format!("x = {x} outside [0, {}]", v.support_right()),
        });
    }
    check_branch(v, z)?;
    per_piece_complex(v, x, |form, s| (z - form.deriv(s, 0)).sqrt())
}

/// Complex period `∫₀^L ds / (2(z − V)^{1/2})`: the z-derivative of the full
/// phase, used by Newton on the quantization condition.
pub fn complex_period(v: &Potential, z: Complex64) -> Result<Complex64> {
    check_branch(v, z)?;
    per_piece_complex(v, v.support_right(), |form, s| {
        0.5 / (z - form.deriv(s, 0)).sqrt()
    })
}

fn check_branch(v: &Potential, z: Complex64) -> Result<()> {
    let margin = z.re - v.sup();
    if !(margin > 0.0) {
        return Err(Error::BranchCut {
            x: v.sup_argmax(),
            margin,
        });
    }
    Ok(())
}

fn per_piece_complex(
    v: &Potential,
    x_end: f64,
    integrand: impl Fn(&crate::potential::PieceForm, f64) -> Complex64,
) -> Result<Complex64> {
    let n = v.pieces().len() as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in v.pieces() {
        let hi = p.hi.min(x_end);
        if p.lo < hi {
            total += integrate_complex(&|s| integrand(&p.form, s), p.lo, hi, QUAD_ABS_TOL / n)?;
        }
    }
    Ok(total)
}

/// Solves `S(E) = s` on the window by Newton (derivative `T`) with a
/// bisection-safeguarded bracket. `|S(E) − s| ≤ 1e−12` on success.
pub fn invert_action(v: &Potential, s: f64, window: (f64, f64)) -> Result<f64> {
    let (a, b) = window;
    check_window(v, a)?;
    if !(a < b) {
        return Err(Error::OutOfRange {
            what: "window",
            detail: format!("[{a}, {b}] is empty"),
        });
    }
    let sa = action(v, a)?;
    let sb = action(v, b)?;
    let slack = 1e-12 * sb.abs().max(1.0);
    if s < sa - slack || s > sb + slack {
        return Err(Error::OutOfRange {
            what: "action value",
            detail: format!("s = {s} outside [S(a), S(b)] = [{sa}, {sb}]"),
        });
    }
    let s = s.clamp(sa, sb);
    let (mut lo, mut hi) = (a, b);
    // Linear seed: S is smooth and strictly monotone here.
    let mut e = a + (b - a) * ((s - sa) / (sb - sa)).clamp(0.0, 1.0);
    for _ in 0..100 {
        let fs = action(v, e)? - s;
        if fs.abs() <= ACTION_INVERT_TOL {
            return Ok(e);
        }
        if fs > 0.0 {
            hi = e;
        } else {
            lo = e;
        }
        let t = period(v, e)?;
        let mut next = e - fs / t;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        e = next;
    }
    Err(Error::NewtonNoConvergence {
        iters: 100,
        last_norm: (action(v, e)? - s).abs(),
        last_z: Complex64::new(e, 0.0),
    })
}

/// Cached action/period scan with monotone cubic (Fritsch–Carlson)
/// interpolation. Interpolation error at 65–257 nodes is far above the
/// 1e−12 class of the exact integrals, so prediction paths use
/// [`action`]/[`invert_action`] directly; the table serves coarse sweeps
/// such as gap-report energy grids.
#[derive(Debug, Clone)]
pub struct ActionTable {
    energies: Vec<f64>,
    s_vals: Vec<f64>,
    t_vals: Vec<f64>,
    s_slopes: Vec<f64>,
    t_slopes: Vec<f64>,
}

impl ActionTable {
    pub fn build(v: &Potential, window: (f64, f64), nodes: usize) -> Result<Self> {
        let (a, b) = window;
        check_window(v, a)?;
        if nodes < 4 {
            return Err(Error::OutOfRange {
                what: "node count",
                detail: format!("{nodes} < 4"),
            });
        }
        let energies: Vec<f64> = (0..nodes)
            .map(|i| a + (b - a) * (i as f64) / ((nodes - 1) as f64))
            .collect();
        let mut s_vals = Vec::with_capacity(nodes);
        let mut t_vals = Vec::with_capacity(nodes);
        for &e in &energies {
            s_vals.push(action(v, e)?);
            t_vals.push(period(v, e)?);
        }
        let s_slopes = pchip_slopes(&energies, &s_vals);
        let t_slopes = pchip_slopes(&energies, &t_vals);
        Ok(ActionTable {
            energies,
            s_vals,
            t_vals,
            s_slopes,
            t_slopes,
        })
    }

    pub fn window(&self) -> (f64, f64) {
        (self.energies[0], *self.energies.last().unwrap())
    }

    pub fn s(&self, e: f64) -> f64 {
        hermite_eval(&self.energies, &self.s_vals, &self.s_slopes, e)
    }

    pub fn t(&self, e: f64) -> f64 {
        hermite_eval(&self.energies, &self.t_vals, &self.t_slopes, e)
    }

    /// Inverts the interpolated action by bisection + Newton polish.
    pub fn invert_s(&self, s: f64) -> Result<f64> {
        let (a, b) = self.window();
        let (sa, sb) = (self.s(a), self.s(b));
        if s < sa - 1e-12 || s > sb + 1e-12 {
            return Err(Error::OutOfRange {
                what: "action value",
                detail: format!("s = {s} outside table range [{sa}, {sb}]"),
            });
        }
        let (mut lo, mut hi) = (a, b);
        let mut e = 0.5 * (a + b);
        for _ in 0..80 {
            let fs = self.s(e) - s;
            if fs.abs() <= 1e-13 * s.abs().max(1.0) {
                break;
            }
            if fs > 0.0 {
                hi = e;
            } else {
                lo = e;
            }
            let t = self.t(e);
            let mut next = e - fs / t;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            e = next;
        }
        Ok(e)
    }
}

/// Fritsch–Carlson monotone slopes on a (possibly non-uniform) grid.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        d = 0.0;
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        d = 3.0 * d0;
    }
    d
}

fn hermite_eval(x: &[f64], y: &[f64], d: &[f64], e: f64) -> f64 {
    let n = x.len();
    let i = match x.binary_search_by(|v| v.total_cmp(&e)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.clamp(1, n - 1) - 1,
    };
    let h = x[i + 1] - x[i];
    let t = (e - x[i]) / h;
    let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
    let h10 = t * (1.0 - t) * (1.0 - t);
    let h01 = t * t * (3.0 - 2.0 * t);
    let h11 = t * t * (t - 1.0);
    h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kronrod_weights_sum_to_interval() {
        let s_k: f64 = WGK[..7].iter().map(|w| 2.0 * w).sum::<f64>() + WGK[7];
        let s_g: f64 = WG[..3].iter().map(|w| 2.0 * w).sum::<f64>() + WG[3];
        assert!((s_k - 2.0).abs() < 1e-13, "kronrod sum {s_k}");
        assert!((s_g - 2.0).abs() < 1e-13, "gauss sum {s_g}");
    }

    #[test]
    fn rule_is_exact_on_polynomials() {
        // G7 integrates degree ≤ 13 exactly; K15 degree ≤ 22. On x^k over
        // [0,1] the exact value is 1/(k+1); both rule values must agree
        // with it, so the error estimate is ~0 too.
        for k in 0..=13u32 {
            let f = |x: f64| Complex64::new(x.powi(k as i32), 0.0);
            let (val, err) = gk15(&f, 0.0, 1.0);
            let exact = 1.0 / (k as f64 + 1.0);
            assert!((val.re - exact).abs() < 1e-14, "k = {k}: {} vs {exact}", val.re);
            assert!(err < 1e-13, "k = {k}: err {err}");
        }
    }

    #[test]
    fn closed_form_action_and_period() {
        let free = Potential::constant(0.0, 1.0).unwrap();
        assert!((action(&free, 4.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((period(&free, 4.0).unwrap() - 0.25).abs() < 1e-12);

        let well = Potential::constant(1.0, 1.0).unwrap();
        assert!((action(&well, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((period(&well, 2.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn parabolic_bump_against_reference() {
        // Reference values from 40-digit adaptive quadrature.
        let v = Potential::parabolic_bump();
        let cases = [
            (1.5, 1.1542566397523977, 0.43350736324528255),
            (2.0, 1.3537299820568188, 0.36949897192586931),
            (2.3, 1.4603729286904294, 0.34248067526110945),
            (2.5, 1.5273322530759263, 0.32745015023725844),
        ];
        for (e, s_ref, t_ref) in cases {
            assert!((action(&v, e).unwrap() - s_ref).abs() < 1e-12, "S({e})");
            assert!((period(&v, e).unwrap() - t_ref).abs() < 1e-12, "T({e})");
        }
    }

    #[test]
    fn window_admissibility_is_enforced() {
        let v = Potential::parabolic_bump();
        assert!(matches!(
            action(&v, 0.2),
            Err(Error::WindowAdmissibility { .. })
        ));
        assert!(matches!(
            action(&v, 0.25),
            Err(Error::WindowAdmissibility { .. })
        ));
    }

    #[test]
    fn complex_phase_reference_and_reduction() {
        let v = Potential::parabolic_bump();
        let z = Complex64::new(2.0, -0.05);
        let got = complex_phase(&v, 1.0, z).unwrap();
        let want = Complex64::new(1.3538562215087636, -0.018473220481930502);
        assert!((got - want).norm() < 1e-12, "{got} vs {want}");

        let t = complex_period(&v, z).unwrap();
        let t_want = Complex64::new(0.36939530782621488, 0.0050483939022825449);
        assert!((t - t_want).norm() < 1e-12, "{t} vs {t_want}");

        // Reduces to the action on the real axis.
        let real = complex_phase(&v, 1.0, Complex64::new(2.0, 0.0)).unwrap();
        assert!((real.re - action(&v, 2.0).unwrap()).abs() < 1e-12);
        assert!(real.im.abs() < 1e-13);

        // Constant integrand case: φ = x·√z.
        let free = Potential::constant(0.0, 1.0).unwrap();
        let z = Complex64::new(4.0, -0.1);
        let got = complex_phase(&free, 1.0, z).unwrap();
        assert!((got - z.sqrt()).norm() < 1e-13);
    }

    #[test]
    fn branch_guard_fires_below_sup() {
        let v = Potential::constant(1.0, 1.0).unwrap();
        assert!(matches!(
            complex_phase(&v, 1.0, Complex64::new(0.5, -0.1)),
            Err(Error::BranchCut { .. })
        ));
    }

    #[test]
    fn invert_action_round_trips() {
        let v = Potential::parabolic_bump();
        for e in [1.6, 2.0, 2.3, 2.45] {
            let s = action(&v, e).unwrap();
            let back = invert_action(&v, s, (1.5, 2.5)).unwrap();
            assert!((back - e).abs() < 1e-10, "E = {e}: got {back}");
        }
        let well = Potential::constant(1.0, 1.0).unwrap();
        // S = √(E−1): s = 1 ⇒ E = 2.
        let e = invert_action(&well, 1.0, (1.5, 3.0)).unwrap();
        assert!((e - 2.0).abs() < 1e-11);

        assert!(matches!(
            invert_action(&v, 99.0, (1.5, 2.5)),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn ds_de_equals_period() {
        let v = Potential::parabolic_bump();
        let d = 1e-5;
        for i in 0..20 {
            let e = 1.6 + 0.04 * i as f64;
            let fd = (action(&v, e + d).unwrap() - action(&v, e - d).unwrap()) / (2.0 * d);
            let t = period(&v, e).unwrap();
            assert!((fd - t).abs() <= 1e-8, "E = {e}: {fd} vs {t}");
        }
    }

    #[test]
    fn action_table_tracks_exact_values() {
        let v = Potential::parabolic_bump();
        let table = ActionTable::build(&v, (1.5, 2.5), 129).unwrap();
        for i in 0..=40 {
            let e = 1.5 + i as f64 / 40.0;
            assert!((table.s(e) - action(&v, e).unwrap()).abs() < 1e-7);
            assert!((table.t(e) - period(&v, e).unwrap()).abs() < 1e-6);
        }
        // Interpolated inverse round-trips through the interpolated forward.
        for e in [1.55, 1.9, 2.2, 2.44] {
            let back = table.invert_s(table.s(e)).unwrap();
            assert!((back - e).abs() < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn action_is_monotone(e1 in 1.5f64..2.5, e2 in 1.5f64..2.5) {
            prop_assume!((e1 - e2).abs() > 1e-6);
            let v = Potential::parabolic_bump();
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(action(&v, hi).unwrap() > action(&v, lo).unwrap());
        }

        #[test]
        fn complex_phase_is_holomorphic(re in 1.6f64..2.4, im in -0.3f64..-0.01) {
            // Cauchy–Riemann via finite differences: ∂φ/∂(Re z) = −i ∂φ/∂(Im z).
            let v = Potential::parabolic_bump();
            let z = Complex64::new(re, im);
            let d = 1e-6;
            let dre = (complex_phase(&v, 1.0, z + d).unwrap()
                - complex_phase(&v, 1.0, z - d).unwrap())
                / (2.0 * d);
            let dim = (complex_phase(&v, 1.0, z + Complex64::new(0.0, d)).unwrap()
                - complex_phase(&v, 1.0, z - Complex64::new(0.0, d)).unwrap())
                / (2.0 * d);
            prop_assert!((dre - dim * Complex64::new(0.0, -1.0)).norm() < 1e-6);
        }
    }
}
