//! Compactly supported piecewise-smooth potentials on the line.
//!
//! A [`Potential`] is zero outside `[0, L]` and given on `[0, L]` by an
//! ordered list of closed-form pieces, each carrying exact m-th derivative
//! formulas. Piece boundaries that are declared in `declared_orders` form the
//! interface set Y (always including 0 and L); an interface's order is the
//! first j for which the one-sided jump `V^(j)(y⁺) − V^(j)(y⁻)` is nonzero.
//! Undeclared interior boundaries must be smooth joins (jumps vanishing
//! through degree 8) and are excluded from Y.

use num_complex::Complex64;

use crate::jet::Jet;
use crate::tolerances::ORDER_VALIDATION_TOL;
use crate::{Error, Result};

/// Which one-sided limit to take at an interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    TwoSided,
}

/// Closed-form smooth function on a piece, with exact derivatives of every
/// order. Coordinates are global (not piece-local).
#[derive(Debug, Clone, PartialEq)]
pub enum PieceForm {
    /// `Σ coeffs[i] · x^i`.
    Polynomial { coeffs: Vec<f64> },
    /// `amp · sin(freq·x + phase)`.
    Trig { amp: f64, freq: f64, phase: f64 },
    /// `amp · exp(−((x − center)/width)²)`.
    Gaussian { amp: f64, center: f64, width: f64 },
}

impl PieceForm {
    /// Exact m-th derivative at x.
    pub fn deriv(&self, x: f64, m: usize) -> f64 {
        match self {
            PieceForm::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (i, &ci) in coeffs.iter().enumerate().skip(m) {
                    // falling factorial i·(i−1)···(i−m+1)
                    let mut fall = 1.0;
                    for j in 0..m {
                        fall *= (i - j) as f64;
                    }
                    acc += ci * fall * x.powi((i - m) as i32);
                }
                acc
            }
            PieceForm::Trig { amp, freq, phase } => {
                amp * freq.powi(m as i32)
                    * (freq * x + phase + m as f64 * std::f64::consts::FRAC_PI_2).sin()
            }
            PieceForm::Gaussian { amp, center, width } => {
                // dᵐ/dxᵐ e^(−t²) = (−1)ᵐ Hₘ(t) e^(−t²) with t = (x−c)/w,
                // Hₘ the physicists' Hermite polynomials.
                let t = (x - center) / width;
                let mut h_prev = 0.0;
                let mut h = 1.0;
                for k in 0..m {
                    let h_next = 2.0 * t * h - 2.0 * (k as f64) * h_prev;
                    h_prev = h;
                    h = h_next;
                }
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                amp * sign * h * (-t * t).exp() / width.powi(m as i32)
            }
        }
    }

    /// Normalized Taylor coefficients `V^(k)(x0)/k!` through `degree`.
    pub fn jet(&self, x0: f64, degree: usize) -> Vec<f64> {
        let mut fact = 1.0;
        (0..=degree)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                self.deriv(x0, k) / fact
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub form: PieceForm,
}

#[derive(Debug, Clone)]
pub struct Potential {
    support_right: f64,
    pieces: Vec<Piece>,
    /// Interface set Y: 0, L, and declared interior boundaries, sorted.
    interfaces: Vec<f64>,
    /// Declared jump order per interface, aligned with `interfaces`.
    orders: Vec<usize>,
    sup_v: f64,
    sup_argmax: f64,
}

/// Degree through which an undeclared interior boundary must have zero jumps
/// to count as a smooth join.
const SMOOTH_JOIN_CHECK_DEGREE: usize = 8;

impl Potential {
    /// Builds and validates a potential. `declared_orders` maps interface
    /// locations to jump orders and must cover 0 and `support_right`.
    pub fn new(
        support_right: f64,
        pieces: Vec<Piece>,
        declared_orders: &[(f64, usize)],
    ) -> Result<Self> {
        if !(support_right > 0.0) || !support_right.is_finite() {
            return Err(Error::InvalidPotential(format!(
                "support_right must be positive and finite, got {support_right}"
            )));
        }
        if pieces.is_empty() {
            return Err(Error::InvalidPotential("no pieces".into()));
        }
        if pieces[0].lo != 0.0 {
            return Err(Error::InvalidPotential(format!(
                "first piece must start at 0, starts at {}",
                pieces[0].lo
            )));
        }
        if pieces.last().unwrap().hi != support_right {
            return Err(Error::InvalidPotential(format!(
                "last piece must end at support_right = {support_right}, ends at {}",
                pieces.last().unwrap().hi
            )));
        }
        for w in pieces.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(Error::InvalidPotential(format!(
                    "pieces must tile the support exactly: gap between {} and {}",
                    w[0].hi, w[1].lo
                )));
            }
        }
        for p in &pieces {
            if !(p.lo < p.hi) {
                return Err(Error::InvalidPotential(format!(
                    "degenerate piece [{}, {}]",
                    p.lo, p.hi
                )));
            }
        }

        let boundaries: Vec<f64> = std::iter::once(0.0)
            .chain(pieces.iter().map(|p| p.hi))
            .collect();

        let mut declared: Vec<(f64, usize)> = declared_orders.to_vec();
        declared.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(y, _) in &declared {
            if !boundaries.contains(&y) {
                return Err(Error::InvalidPotential(format!(
                    "declared interface x = {y} is not a piece boundary"
                )));
            }
        }
        let has = |y: f64| declared.iter().any(|&(x, _)| x == y);
        if !has(0.0) || !has(support_right) {
            return Err(Error::InvalidPotential(
                "declared_orders must cover both support endpoints".into(),
            ));
        }

        let (sup_v, sup_argmax) = global_max(&pieces);

        let pot = Potential {
            support_right,
            interfaces: declared.iter().map(|&(y, _)| y).collect(),
            orders: declared.iter().map(|&(_, o)| o).collect(),
            pieces,
            sup_v,
            sup_argmax,
        };

        // Undeclared boundaries must be smooth joins. Declared orders are
        // validated lazily (`validate_orders`, `vanishing_orders`): the
        // identically-zero potential has no meaningful endpoint orders yet
        // must remain usable by quadrature and shooting.
        for &b in &boundaries {
            if !has(b) {
                pot.validate_smooth_join(b)?;
            }
        }
        Ok(pot)
    }

    /// Single constant piece of height `v0` on `[0, l]`.
    pub fn constant(v0: f64, l: f64) -> Result<Self> {
        Potential::new(
            l,
            vec![Piece {
                lo: 0.0,
                hi: l,
                form: PieceForm::Polynomial { coeffs: vec![v0] },
            }],
            &[(0.0, 0), (l, 0)],
        )
    }

    /// Single polynomial piece on `[0, l]` with declared endpoint orders.
    pub fn polynomial(coeffs: &[f64], l: f64, order_left: usize, order_right: usize) -> Result<Self> {
        Potential::new(
            l,
            vec![Piece {
                lo: 0.0,
                hi: l,
                form: PieceForm::Polynomial {
                    coeffs: coeffs.to_vec(),
                },
            }],
            &[(0.0, order_left), (l, order_right)],
        )
    }

    /// The parabolic bump `x(1−x)` on `[0, 1]`: simple zeros at both ends.
    pub fn parabolic_bump() -> Self {
        Potential::polynomial(&[0.0, 1.0, -1.0], 1.0, 1, 1).expect("valid fixed potential")
    }

    /// `x²(1−x)³` on `[0, 1]`: orders (2, 3).
    pub fn skew_bump() -> Self {
        // x²(1−x)³ = x² − 3x³ + 3x⁴ − x⁵
        Potential::polynomial(&[0.0, 0.0, 1.0, -3.0, 3.0, -1.0], 1.0, 2, 3)
            .expect("valid fixed potential")
    }

    pub fn support_right(&self) -> f64 {
        self.support_right
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// The interface set Y (sorted; includes 0 and L).
    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    pub fn order_at(&self, y: f64) -> Option<usize> {
        self.interfaces
            .iter()
            .position(|&x| x == y)
            .map(|i| self.orders[i])
    }

    /// Global maximum of V over the whole line (0 outside the support is
    /// included in the comparison).
    pub fn sup(&self) -> f64 {
        self.sup_v.max(0.0)
    }

    /// Location where the supremum over `[0, L]` is attained.
    pub fn sup_argmax(&self) -> f64 {
        self.sup_argmax
    }

    /// Maximum of V over `[lo, hi] ∩ [0, L]`.
    pub fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(0.0);
        let hi = hi.min(self.support_right);
        if !(lo < hi) {
            return self.value(lo.clamp(0.0, self.support_right));
        }
        let mut best = f64::NEG_INFINITY;
        for p in &self.pieces {
            let a = p.lo.max(lo);
            let b = p.hi.min(hi);
            if a < b {
                let (m, _) = piece_max(&p.form, a, b);
                best = best.max(m);
            }
        }
        best
    }

    /// `V^(m)(x)`, one-sided at interfaces. `side` is mandatory (i.e. must
    /// not be `TwoSided`) exactly when the two one-sided values differ.
    pub fn eval(&self, x: f64, m: usize, side: Side) -> Result<f64> {
        let left = self.one_sided(x, m, false);
        let right = self.one_sided(x, m, true);
        match side {
            Side::Left => Ok(left),
            Side::Right => Ok(right),
            Side::TwoSided => {
                let scale = left.abs().max(right.abs()).max(1.0);
                if (left - right).abs() <= ORDER_VALIDATION_TOL * scale {
                    Ok(right)
                } else {
                    Err(Error::InterfaceAmbiguity { x })
                }
            }
        }
    }

    /// V(x) with the right-continuous convention on `[0, L)` and the left
    /// limit at `L`; 0 outside the support. Integration and ODE drivers
    /// sample pieces directly and never rely on the boundary convention.
    pub fn value(&self, x: f64) -> f64 {
        if x < 0.0 || x > self.support_right {
            return 0.0;
        }
        if x == self.support_right {
            return self.one_sided(x, 0, false);
        }
        self.one_sided(x, 0, true)
    }

    fn one_sided(&self, x: f64, m: usize, from_right: bool) -> f64 {
        if x < 0.0 || x > self.support_right {
            return 0.0;
        }
        if x == 0.0 && !from_right {
            return 0.0;
        }
        if x == self.support_right && from_right {
            return 0.0;
        }
        let piece = self
            .pieces
            .iter()
            .find(|p| {
                if from_right {
                    p.lo <= x && x < p.hi
                } else {
                    p.lo < x && x <= p.hi
                }
            })
            .expect("pieces tile the support");
        piece.form.deriv(x, m)
    }

    /// Endpoint vanishing orders `(k, l)` at `0⁺` and `L⁻`, validated
    /// against the derivative oracle.
    pub fn vanishing_orders(&self) -> Result<(usize, usize)> {
        let k = self.order_at(0.0).expect("constructor guarantees");
        let l = self.order_at(self.support_right).expect("constructor guarantees");
        self.validate_order(0.0, k)?;
        self.validate_order(self.support_right, l)?;
        Ok((k, l))
    }

    /// Validates every declared interface order against the derivative
    /// oracle (endpoints and interior interfaces alike).
    pub fn validate_orders(&self) -> Result<()> {
        for (&y, &o) in self.interfaces.iter().zip(&self.orders) {
            self.validate_order(y, o)?;
        }
        Ok(())
    }

    /// `V^(k)(0⁺)` and `V^(l)(L⁻)`, the data entering the phase shift and
    /// the quantization condition.
    pub fn endpoint_derivatives(&self) -> Result<(f64, f64)> {
        let (k, l) = self.vanishing_orders()?;
        Ok((
            self.eval(0.0, k, Side::Right)?,
            self.eval(self.support_right, l, Side::Left)?,
        ))
    }

    /// Normalized Taylor coefficients of V at x0 from the given side,
    /// through `degree`. Zero jet outside the support.
    pub fn jet_at(&self, x0: f64, side: Side, degree: usize) -> Result<Vec<f64>> {
        let from_right = match side {
            Side::Right => true,
            Side::Left => false,
            Side::TwoSided => {
                // Fine at non-interface interior points.
                if self.interfaces.contains(&x0) {
                    return Err(Error::InterfaceAmbiguity { x: x0 });
                }
                true
            }
        };
        if x0 < 0.0
            || x0 > self.support_right
            || (x0 == 0.0 && !from_right)
            || (x0 == self.support_right && from_right)
        {
            return Ok(vec![0.0; degree + 1]);
        }
        let piece = self
            .pieces
            .iter()
            .find(|p| {
                if from_right {
                    p.lo <= x0 && x0 < p.hi
                } else {
                    p.lo < x0 && x0 <= p.hi
                }
            })
            .expect("pieces tile the support");
        Ok(piece.form.jet(x0, degree))
    }

    /// Complex jet of `z − V` at x0, the argument of the WKB square root.
    pub fn z_minus_v_jet(&self, x0: f64, side: Side, degree: usize, z: Complex64) -> Result<Jet> {
        let v = self.jet_at(x0, side, degree)?;
        let mut c: Vec<Complex64> = v.iter().map(|&a| Complex64::new(-a, 0.0)).collect();
        c[0] += z;
        Ok(Jet::from_coeffs(c))
    }

    fn validate_order(&self, y: f64, declared: usize) -> Result<()> {
        let jump = |j: usize| self.one_sided(y, j, true) - self.one_sided(y, j, false);
        let lead = jump(declared);
        let scale = (0..=declared)
            .map(|j| jump(j).abs())
            .fold(1.0f64, f64::max);
        if lead.abs() <= ORDER_VALIDATION_TOL * scale {
            return Err(Error::OrderValidation {
                x: y,
                declared,
                detail: format!("jump at declared order is zero ({lead:.3e})"),
            });
        }
        for j in 0..declared {
            if jump(j).abs() > ORDER_VALIDATION_TOL * lead.abs().max(1.0) {
                return Err(Error::OrderValidation {
                    x: y,
                    declared,
                    detail: format!("jump of order {j} is nonzero ({:.3e})", jump(j)),
                });
            }
        }
        Ok(())
    }

    fn validate_smooth_join(&self, y: f64) -> Result<()> {
        for j in 0..=SMOOTH_JOIN_CHECK_DEGREE {
            let jump = self.one_sided(y, j, true) - self.one_sided(y, j, false);
            let scale = self
                .one_sided(y, j, true)
                .abs()
                .max(self.one_sided(y, j, false).abs())
                .max(1.0);
            if jump.abs() > ORDER_VALIDATION_TOL * scale {
                return Err(Error::InvalidPotential(format!(
                    "undeclared boundary x = {y} is not a smooth join (order-{j} jump = {jump:.3e}); \
                     declare it in declared_orders"
                )));
            }
        }
        Ok(())
    }
}

/// Grid scan plus golden-section polish; adequate for the closed-form piece
/// vocabulary (no exact critical-point casework needed).
fn piece_max(form: &PieceForm, lo: f64, hi: f64) -> (f64, f64) {
    const GRID: usize = 256;
    let mut best_x = lo;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=GRID {
        let x = lo + (hi - lo) * (i as f64) / (GRID as f64);
        let v = form.deriv(x, 0);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    // Golden-section refinement in the bracketing neighborhood.
    let step = (hi - lo) / (GRID as f64);
    let mut a = (best_x - step).max(lo);
    let mut b = (best_x + step).min(hi);
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = form.deriv(c, 0);
    let mut fd = form.deriv(d, 0);
    while b - a > 1e-13 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = form.deriv(c, 0);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = form.deriv(d, 0);
        }
    }
    let x = 0.5 * (a + b);
    let v = form.deriv(x, 0).max(best);
    if v >= best {
        (v, x)
    } else {
        (best, best_x)
    }
}

fn global_max(pieces: &[Piece]) -> (f64, f64) {
    let mut best = f64::NEG_INFINITY;
    let mut best_x = pieces[0].lo;
    for p in pieces {
        let (v, x) = piece_max(&p.form, p.lo, p.hi);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    (best, best_x)
}
