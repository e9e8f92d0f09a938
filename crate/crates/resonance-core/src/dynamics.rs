//! Classical dynamics: broken Hamiltonian flow, interface classification,
//! the energy diameter of the interface set, and the resonance-free gap
//! predictor.
//!
//! The Hamiltonian is `H(x, ξ) = ξ² + V(x)`, so `ẋ = 2ξ`, `ξ̇ = −V′(x)`.
//! Above the barrier (`E > sup V`) the momentum never vanishes and `x(t)`
//! is strictly monotone; the flow is integrated per smooth piece with `x`
//! as the independent variable (`dt/dx = 1/(2ξ)`, `dξ/dx = −V′/(2ξ)`),
//! which lands on interfaces exactly instead of hunting for crossing
//! events. Crossing an interface requires vanishing order ≥ 2 there: the
//! force is then continuous and the trajectory unique. Lower orders stop
//! the flow at the crossing event with an error.
//!
//! `diam(E, Y)` — the longest traversal time between interface points at
//! energy `E` — is computed by quadrature (the flow integrator is a
//! cross-check only, which sidesteps the uniqueness restriction), and
//! `T(E) = diam_E({0, L})`. The gap report compares the Theorem-style
//! resonance-free coefficient `α/diam` (α = min interface order) against
//! the lattice band-top coefficient `(k+l)/(2T)`; the inequality
//! `(k+l)/(2T(E)) ≥ α/diam_E` holds with equality exactly when `k = l`.

use num_complex::Complex64;

use crate::ode::{integrate_adaptive, OdeOpts};
use crate::potential::Potential;
use crate::quadrature::{period, time_distance};
use crate::tolerances::GLANCING_TOL;
use crate::{Error, Result};

/// A point of the broken flow: position, momentum, elapsed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub x: f64,
    pub xi: f64,
    pub t: f64,
}

impl FlowState {
    pub fn new(x: f64, xi: f64) -> Self {
        FlowState { x, xi, t: 0.0 }
    }

    /// Energy `ξ² + V(x)`, evaluating V on the side the momentum moves
    /// into when `x` sits exactly on an interface.
    pub fn energy(&self, v: &Potential) -> f64 {
        let l = v.support_right();
        let x_eff = self.x;
        let vx = if (0.0..l).contains(&x_eff) || x_eff == l {
            // Sample infinitesimally into the direction of travel to get
            // the one-sided value at interfaces.
            let eps = 1e-13 * (1.0 + x_eff.abs());
            let probe = if self.xi >= 0.0 { x_eff + eps } else { x_eff - eps };
            v.value(probe.clamp(0.0, l - f64::EPSILON.max(1e-300)))
        } else {
            0.0
        };
        self.xi * self.xi + vx
    }
}

/// Classification of an interface point at a given energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    /// The flow crosses transversally: `E − V > 0` on both sides.
    Hyperbolic,
    /// `E − V` vanishes on some side (tangential contact).
    Glancing,
    /// `E < V` on some side: classically forbidden.
    Elliptic,
}

#[derive(Debug, Clone)]
pub struct InterfacePoint {
    pub y: f64,
    pub order: usize,
    pub kind: PointKind,
}

/// Classifies every declared interface of the potential at energy `e`.
pub fn classify_interfaces(pot: &Potential, e: f64) -> Result<Vec<InterfacePoint>> {
    let l = pot.support_right();
    let mut out = Vec::new();
    for &y in pot.interfaces() {
        let order = pot.order_at(y).unwrap_or(0);
        let left = if y <= 0.0 {
            0.0
        } else {
            pot.eval(y, 0, crate::potential::Side::Left)?
        };
        let right = if y >= l {
            0.0
        } else {
            pot.eval(y, 0, crate::potential::Side::Right)?
        };
        let gap = (e - left).min(e - right);
        let kind = if gap > GLANCING_TOL {
            PointKind::Hyperbolic
        } else if gap >= -GLANCING_TOL {
            PointKind::Glancing
        } else {
            PointKind::Elliptic
        };
        out.push(InterfacePoint { y, order, kind });
    }
    Ok(out)
}

/// Piece-internal flight: advances `(t, ξ)` from `x0` to `x1` along the
/// flow with `x` as the parameter. Returns `(elapsed, ξ_end)`.
fn fly_piece(
    form: &crate::potential::PieceForm,
    x0: f64,
    x1: f64,
    xi0: f64,
) -> Result<(f64, f64)> {
    if x0 == x1 {
        return Ok((0.0, xi0));
    }
    let y0 = [Complex64::new(0.0, 0.0), Complex64::new(xi0, 0.0)];
    let span = (x1 - x0).abs();
    let rhs = |x: f64, y: &[Complex64; 2]| -> [Complex64; 2] {
        let xi = y[1].re;
        [
            Complex64::new(1.0 / (2.0 * xi), 0.0),
            Complex64::new(-form.deriv(x, 1) / (2.0 * xi), 0.0),
        ]
    };
    let opts = OdeOpts {
        tol: 1e-13,
        ..OdeOpts::default()
    };
    let y = integrate_adaptive(rhs, x0, x1, y0, &opts, |_| span, |_, _| false)?;
    Ok((y[0].re, y[1].re))
}

/// Elapsed time for the flow to go from `x0` to `x1` inside one piece,
/// solving for the intermediate endpoint when a time budget runs out
/// first. Returns `Ok(Err(x_stop))`-style via enum below.
enum PieceOutcome {
    /// Reached the far end of the piece: (elapsed, ξ at end).
    Crossed(f64, f64),
    /// Budget exhausted inside: final state.
    Stopped(FlowState),
}

fn fly_piece_budget(
    form: &crate::potential::PieceForm,
    x0: f64,
    x_far: f64,
    xi0: f64,
    t_now: f64,
    budget: f64,
) -> Result<PieceOutcome> {
    let (dt_full, xi_far) = fly_piece(form, x0, x_far, xi0)?;
    if dt_full <= budget {
        return Ok(PieceOutcome::Crossed(dt_full, xi_far));
    }
    // Monotone root solve for τ(x*) = budget on [x0, x_far]:
    // Newton with dτ/dx = 1/(2ξ) and a bisection bracket.
    let dir = (x_far - x0).signum();
    let mut lo = x0;
    let mut hi = x_far;
    let mut x = x0 + dir * (budget / dt_full).max(1e-6) * (x_far - x0).abs();
    for _ in 0..80 {
        let (tau, xi_x) = fly_piece(form, x0, x, xi0)?;
        let g = tau - budget;
        if g.abs() <= 1e-15 * budget.max(1e-12) {
            return Ok(PieceOutcome::Stopped(FlowState {
                x,
                xi: xi_x,
                t: t_now + budget,
            }));
        }
        if g > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = g * 2.0 * xi_x.abs() * dir;
        let mut next = x - step;
        if (dir > 0.0 && !(next > lo && next < hi)) || (dir < 0.0 && !(next > hi.min(lo) && next < lo.max(hi)))
        {
            next = 0.5 * (lo + hi);
        }
        x = next;
    }
    let (_, xi_x) = fly_piece(form, x0, x, xi0)?;
    Ok(PieceOutcome::Stopped(FlowState {
        x,
        xi: xi_x,
        t: t_now + budget,
    }))
}

/// Advances the broken flow by time `dt ≥ 0`.
///
/// Requires energy above the potential sup (no turning points, momentum
/// never vanishes). Crossing any declared interface requires vanishing
/// order ≥ 2 there; otherwise the flow is only defined up to the crossing
/// event and the call fails with the interface location. Smooth internal
/// piece joins are crossed freely.
pub fn flow(pot: &Potential, state: &FlowState, dt: f64) -> Result<FlowState> {
    if dt < 0.0 {
        return Err(Error::OutOfRange {
            what: "flow time",
            detail: format!("negative time {dt}; reverse the momentum instead"),
        });
    }
    let e = state.energy(pot);
    if !(e > pot.sup() + GLANCING_TOL) {
        return Err(Error::WindowAdmissibility {
            e,
            sup_v: pot.sup(),
        });
    }
    let l = pot.support_right();
    let mut s = *state;
    let mut budget = dt;
    if s.xi == 0.0 {
        return Err(Error::FlowUniqueness { y: s.x, order: 0 });
    }

    // Boundaries that the trajectory must respect: piece edges are
    // integration breakpoints; declared interfaces additionally gate
    // continuation on their order.
    while budget > 0.0 {
        let dir = s.xi.signum();
        // Free flight outside the support.
        if s.x <= 0.0 && dir < 0.0 || s.x >= l && dir > 0.0 {
            s = FlowState {
                x: s.x + 2.0 * s.xi * budget,
                xi: s.xi,
                t: s.t + budget,
            };
            return Ok(s);
        }
        if s.x < 0.0 || s.x > l {
            // Heading toward the support: free flight up to the edge.
            let edge = if dir > 0.0 { 0.0 } else { l };
            let dist = (edge - s.x).abs();
            let dt_edge = dist / (2.0 * s.xi.abs());
            if dt_edge >= budget {
                return Ok(FlowState {
                    x: s.x + 2.0 * s.xi * budget,
                    xi: s.xi,
                    t: s.t + budget,
                });
            }
            s = FlowState {
                x: edge,
                xi: s.xi,
                t: s.t + dt_edge,
            };
            budget -= dt_edge;
            // Continuing through the support edge is a crossing event.
            if budget > 0.0 {
                if let Some(order) = pot.order_at(edge) {
                    if order < 2 {
                        return Err(Error::FlowUniqueness { y: edge, order });
                    }
                }
            }
            continue;
        }
        // On the support closure, moving into it (or along it): find the
        // current piece in the direction of travel.
        let piece = pot
            .pieces()
            .iter()
            .find(|p| {
                if dir > 0.0 {
                    s.x >= p.lo && s.x < p.hi
                } else {
                    s.x > p.lo && s.x <= p.hi
                }
            })
            .cloned();
        let Some(piece) = piece else {
            // At an edge moving outward was handled above; x == l moving
            // right or x == 0 moving left.
            unreachable!("piece lookup cannot fail inside the support");
        };
        // Entering through a declared interface at the current point?
        // Crossing INTO the piece from exactly an interface position is
        // the crossing event completion; gate on order if we arrived here
        // with time still to spend (i.e. we are crossing, not starting).
        let x_far = if dir > 0.0 { piece.hi } else { piece.lo };
        match fly_piece_budget(&piece.form, s.x, x_far, s.xi, s.t, budget)? {
            PieceOutcome::Stopped(end) => return Ok(end),
            PieceOutcome::Crossed(elapsed, xi_far) => {
                s = FlowState {
                    x: x_far,
                    xi: xi_far,
                    t: s.t + elapsed,
                };
                budget -= elapsed;
                if budget <= 0.0 {
                    return Ok(s);
                }
                // About to continue past x_far: if it is a declared
                // interface, continuation needs order ≥ 2.
                if let Some(order) = pot.order_at(x_far) {
                    if order < 2 {
                        return Err(Error::FlowUniqueness { y: x_far, order });
                    }
                }
            }
        }
    }
    Ok(s)
}

/// Traversal time of the support at energy `e` by the flow integrator
/// (the ODE route, independent of the period quadrature). The end
/// interfaces are endpoints of the trajectory, not crossings, so this is
/// defined for any interface orders.
pub fn traversal_time(pot: &Potential, e: f64) -> Result<f64> {
    if !(e > pot.sup() + GLANCING_TOL) {
        return Err(Error::WindowAdmissibility {
            e,
            sup_v: pot.sup(),
        });
    }
    let mut t = 0.0;
    let mut xi = (e - pot.value(0.0)).sqrt();
    for p in pot.pieces() {
        let (dt, xi_end) = fly_piece(&p.form, p.lo, p.hi, xi)?;
        t += dt;
        xi = xi_end;
    }
    // Energy drift audit: ξ at the right edge must match √(E − V(L⁻)).
    let want = (e - pot.eval(pot.support_right(), 0, crate::potential::Side::Left)?).sqrt();
    if (xi - want).abs() > 1e-8 * want.max(1.0) {
        return Err(Error::Numerical(format!(
            "flow energy drift at traversal end: ξ = {xi}, expected {want}"
        )));
    }
    Ok(t)
}

/// Energy diameter of the point set `y_set` at energy `e`: the largest
/// pairwise traversal-time distance. Every point must be hyperbolic at
/// `e`. Quadrature-based.
pub fn diam(pot: &Potential, e: f64, y_set: &[f64]) -> Result<f64> {
    for &y in y_set {
        let classes = classify_interfaces(pot, e)?;
        if let Some(p) = classes.iter().find(|p| p.y == y) {
            if p.kind != PointKind::Hyperbolic {
                return Err(Error::OutOfRange {
                    what: "diameter energy",
                    detail: format!("interface at {y} is not hyperbolic at E = {e}"),
                });
            }
        }
    }
    let mut best = 0.0f64;
    for i in 0..y_set.len() {
        for j in i + 1..y_set.len() {
            best = best.max(time_distance(pot, e, y_set[i], y_set[j])?);
        }
    }
    Ok(best)
}

/// Resonance-free gap data over an energy window.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub window: (f64, f64),
    /// Minimum interface vanishing order α.
    pub alpha: f64,
    /// `sup { diam_E(Y) : E ∈ window }`.
    pub diam_window: f64,
    /// Gap coefficient `α / diam`; +∞ when the diameter vanishes.
    pub nu0_bound: f64,
    /// Lattice band-top coefficient `min_E (k+l)/(2 T(E))`.
    pub band_top: f64,
    /// `min_E [ (k+l)/(2T(E)) − α/diam_E ]` over the sample grid; ≥ 0 up
    /// to roundoff, = 0 exactly when k = l.
    pub min_margin: f64,
    pub samples: usize,
}

/// Builds the gap report for `Y` = the declared interfaces, maximizing
/// `diam_E` over a grid with golden-section polish, and asserting the
/// band consistency inequality at every sample.
pub fn gap_report(pot: &Potential, a: f64, b: f64) -> Result<GapReport> {
    if !(a > pot.sup() && b > a) {
        return Err(Error::WindowAdmissibility {
            e: a,
            sup_v: pot.sup(),
        });
    }
    let (k, l) = pot.vanishing_orders()?;
    let alpha = pot
        .interfaces()
        .iter()
        .map(|&y| pot.order_at(y).unwrap_or(0))
        .min()
        .unwrap_or(0) as f64;
    let y: Vec<f64> = pot.interfaces().to_vec();
    let grid = 33usize;
    let mut diam_max = f64::NEG_INFINITY;
    let mut e_at_max = a;
    let mut band_top = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    for i in 0..grid {
        let e = a + (b - a) * i as f64 / (grid - 1) as f64;
        let d = diam(pot, e, &y)?;
        let t = period(pot, e)?;
        if d > diam_max {
            diam_max = d;
            e_at_max = e;
        }
        let band = (k + l) as f64 / (2.0 * t);
        band_top = band_top.min(band);
        let bound = if d > 0.0 { alpha / d } else { 0.0 };
        min_margin = min_margin.min(band - bound);
    }
    // Golden-section polish of the diameter maximum around the best node.
    let span = (b - a) / (grid - 1) as f64;
    let (mut lo, mut hi) = ((e_at_max - span).max(a), (e_at_max + span).min(b));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if diam(pot, m1, &y)? > diam(pot, m2, &y)? {
            hi = m2;
        } else {
            lo = m1;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let e_polished = 0.5 * (lo + hi);
    diam_max = diam_max.max(diam(pot, e_polished, &y)?);
    let nu0_bound = if diam_max > 0.0 {
        alpha / diam_max
    } else {
        f64::INFINITY
    };
    Ok(GapReport {
        window: (a, b),
        alpha,
        diam_window: diam_max,
        nu0_bound,
        band_top,
        min_margin,
        samples: grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::period;

    #[test]
    fn constant_well_diameter_is_the_period() {
        let pot = Potential::constant(1.0, 1.0).unwrap();
        // T(2) = 1/(2·√1) = 0.5 exactly.
        let d = diam(&pot, 2.0, &[0.0, 1.0]).unwrap();
        assert!((d - 0.5).abs() < 1e-12, "{d}");
        let t = period(&pot, 2.0).unwrap();
        assert!((d - t).abs() < 1e-12);
        // Single point: diameter zero.
        assert_eq!(diam(&pot, 2.0, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn flow_traversal_matches_quadrature_period() {
        for pot in [Potential::parabolic_bump(), Potential::skew_bump()] {
            for i in 0..10 {
                let e = 1.5 + i as f64 * 0.15;
                let t_flow = traversal_time(&pot, e).unwrap();
                let t_quad = period(&pot, e).unwrap();
                assert!(
                    (t_flow - t_quad).abs() < 1e-6,
                    "E = {e}: flow {t_flow} vs quadrature {t_quad}"
                );
            }
        }
    }

    #[test]
    fn free_flight_is_exact_and_lands_on_interfaces() {
        let pot = Potential::skew_bump();
        let e = 2.0f64;
        let xi = e.sqrt();
        let s0 = FlowState::new(-0.5, xi);
        // Exactly the free-flight time to the left edge.
        let dt = 0.5 / (2.0 * xi);
        let s1 = flow(&pot, &s0, dt).unwrap();
        assert!(s1.x.abs() < 1e-12, "{}", s1.x);
        assert!((s1.xi - xi).abs() < 1e-14);
        assert!((s1.t - dt).abs() < 1e-15);
    }

    #[test]
    fn full_crossing_conserves_energy_and_time() {
        // x²(1−x)³ has orders (2, 3): both ends may be crossed.
        let pot = Potential::skew_bump();
        let e = 2.0f64;
        let xi = e.sqrt();
        let t_free = 0.5 / (2.0 * xi);
        let t_mid = period(&pot, e).unwrap();
        let total = t_free + t_mid + t_free;
        let s = flow(&pot, &FlowState::new(-0.5, xi), total).unwrap();
        assert!((s.x - 1.5).abs() < 1e-6, "{}", s.x);
        assert!((s.xi - xi).abs() < 1e-10, "energy drift: {}", s.xi);
        assert!((s.t - total).abs() < 1e-12);
        // Energy conservation at the endpoint (V = 0 there).
        assert!((s.energy(&pot) - e).abs() < 1e-10);
    }

    #[test]
    fn low_order_interfaces_block_continuation() {
        // x(1−x) has order 1 at both ends: crossing x = 0 must fail.
        let pot = Potential::parabolic_bump();
        let xi = 2.0f64.sqrt();
        let s0 = FlowState::new(-0.25, xi);
        let err = flow(&pot, &s0, 1.0);
        match err {
            Err(Error::FlowUniqueness { y, order }) => {
                assert!(y.abs() < 1e-12);
                assert_eq!(order, 1);
            }
            other => panic!("expected uniqueness failure, got {other:?}"),
        }
        // But flowing exactly UP TO the crossing event is fine.
        let dt = 0.25 / (2.0 * xi);
        let s1 = flow(&pot, &s0, dt).unwrap();
        assert!(s1.x.abs() < 1e-12);
    }

    #[test]
    fn below_barrier_flow_is_rejected() {
        let pot = Potential::constant(1.0, 1.0).unwrap();
        // Energy 0.81 < sup V = 1.
        let s = FlowState::new(-0.5, 0.9);
        assert!(matches!(
            flow(&pot, &s, 1.0),
            Err(Error::WindowAdmissibility { .. })
        ));
    }

    #[test]
    fn classification_distinguishes_hyperbolic_glancing_elliptic() {
        let pot = Potential::constant(1.0, 1.0).unwrap();
        let at = |e: f64| classify_interfaces(&pot, e).unwrap();
        for p in at(2.0) {
            assert_eq!(p.kind, PointKind::Hyperbolic);
            assert_eq!(p.order, 0);
        }
        for p in at(1.0) {
            assert_eq!(p.kind, PointKind::Glancing);
        }
        for p in at(0.5) {
            assert_eq!(p.kind, PointKind::Elliptic);
        }
    }

    #[test]
    fn diameter_is_continuous_and_decreasing() {
        let pot = Potential::parabolic_bump();
        let y = [0.0, 1.0];
        let mut prev = f64::INFINITY;
        for i in 0..24 {
            let e = 1.2 + i as f64 * 0.075;
            let d = diam(&pot, e, &y).unwrap();
            assert!(d < prev, "diameter must strictly decrease in E");
            if i > 0 {
                assert!((prev - d) < 0.2, "no jumps: {prev} -> {d}");
            }
            prev = d;
        }
    }

    #[test]
    fn gap_report_equality_exactly_at_equal_orders() {
        // k = l = 1: the band-top coefficient equals α/diam at the
        // shared extremal energy.
        let bump = Potential::parabolic_bump();
        let r = gap_report(&bump, 1.5, 2.5).unwrap();
        assert_eq!(r.alpha, 1.0);
        let t_max = period(&bump, 1.5).unwrap();
        assert!((r.diam_window - t_max).abs() < 1e-10, "diam max at window bottom");
        assert!((r.nu0_bound - r.band_top).abs() < 1e-9, "{r:?}");
        assert!(r.min_margin.abs() < 1e-12);

        // k = 2, l = 3: strict inequality, margin > 0.
        let skew = Potential::skew_bump();
        let r = gap_report(&skew, 1.5, 2.5).unwrap();
        assert_eq!(r.alpha, 2.0);
        assert!(r.band_top > r.nu0_bound);
        assert!(r.min_margin > 0.1);

        // k = l = 0: both coefficients vanish.
        let well = Potential::constant(1.0, 1.0).unwrap();
        let r = gap_report(&well, 2.0, 3.0).unwrap();
        assert_eq!(r.alpha, 0.0);
        assert!((r.diam_window - 0.5).abs() < 1e-10);
        assert_eq!(r.nu0_bound, 0.0);
        assert_eq!(r.band_top, 0.0);
    }

    #[test]
    fn flow_stops_inside_a_piece_when_time_runs_out() {
        let pot = Potential::skew_bump();
        let e = 2.5f64;
        let t_half = period(&pot, e).unwrap() * 0.37;
        let xi0 = (e - pot.value(0.0)).sqrt();
        let s = flow(&pot, &FlowState::new(0.0, xi0), t_half).unwrap();
        assert!(s.x > 0.0 && s.x < 1.0);
        assert!((s.t - t_half).abs() < 1e-12);
        // Energy conserved at the interior point.
        let v_here = pot.value(s.x);
        assert!((s.xi * s.xi + v_here - e).abs() < 1e-9);
    }
}
