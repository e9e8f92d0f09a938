//! Complex root localization by argument-principle winding counts.
//!
//! The engine works on any holomorphic residual presented as a
//! `(value, derivative)` pair that may carry an arbitrary positive
//! per-call scale factor (as the shooting residual does after overflow
//! renormalization): windings use only the argument, Newton uses only the
//! ratio, and both are invariant under that factor.
//!
//! Counting walks the rectangle boundary counterclockwise, tracking the
//! continuous phase; any sampled increment above π/2 is refined by
//! bisection, and failure to settle flags a zero on (or hopelessly near)
//! the contour. Localization subdivides rectangles until each holds a
//! single zero, asserting count conservation across every split (with
//! split-line nudges when a zero sits on the line), then polishes by
//! Newton with a derivative-free fallback, and certifies each root with a
//! winding-one box around it.

use num_complex::Complex64;

use crate::tolerances::{CERT_BOX_RADIUS_REL, NEWTON_MAX_ITERS};
use crate::{Error, Result};

/// Closed axis-aligned rectangle in the z-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rect {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Self {
        Rect {
            re_lo,
            re_hi,
            im_lo,
            im_hi,
        }
    }

    pub fn width(&self) -> f64 {
        self.re_hi - self.re_lo
    }

    pub fn height(&self) -> f64 {
        self.im_hi - self.im_lo
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_lo + self.re_hi),
            0.5 * (self.im_lo + self.im_hi),
        )
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_lo && z.re <= self.re_hi && z.im >= self.im_lo && z.im <= self.im_hi
    }

    /// Inflated copy (margin as a fraction of each side length).
    pub fn inflate(&self, frac: f64) -> Rect {
        let dw = frac * self.width();
        let dh = frac * self.height();
        Rect::new(
            self.re_lo - dw,
            self.re_hi + dw,
            self.im_lo - dh,
            self.im_hi + dh,
        )
    }

    /// Inflated copy (absolute margin on every side).
    pub fn inflate_abs(&self, margin: f64) -> Rect {
        Rect::new(
            self.re_lo - margin,
            self.re_hi + margin,
            self.im_lo - margin,
            self.im_hi + margin,
        )
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_lo, self.im_lo),
            Complex64::new(self.re_hi, self.im_lo),
            Complex64::new(self.re_hi, self.im_hi),
            Complex64::new(self.re_lo, self.im_hi),
        ]
    }
}

/// Options for counting and localization.
#[derive(Debug, Clone)]
pub struct SearchOpts {
    /// Initial boundary samples per rectangle edge. Must keep the true
    /// phase change per interval below π to avoid aliasing; residuals
    /// oscillating like `e^{2iS/h}` need at least `width · 2T/(π h)` on
    /// horizontal edges.
    pub samples_per_edge: usize,
    /// Budget on subdivision cells.
    pub max_cells: usize,
    /// Relative Newton step tolerance.
    pub newton_tol: f64,
    /// Certification box radius, relative to max(1, |z|).
    pub cert_radius_rel: f64,
    /// Attempt limits for split-line nudges and contour perturbations.
    pub max_nudges: usize,
}

impl Default for SearchOpts {
    fn default() -> Self {
        SearchOpts {
            samples_per_edge: 64,
            max_cells: 100_000,
            newton_tol: 1e-13,
            cert_radius_rel: CERT_BOX_RADIUS_REL,
            max_nudges: 5,
        }
    }
}

/// One certified zero.
#[derive(Debug, Clone)]
pub struct CertifiedRoot {
    pub z: Complex64,
    /// Radius of the winding-one certification box.
    pub box_radius: f64,
    /// Scale-free convergence measure |f| / (|f′| · max(1, |z|)) at the
    /// converged point — the relative Newton step that remains.
    pub residual_norm: f64,
    /// Iterations the polish stage spent (Newton plus secant fallback).
    pub newton_iters: usize,
}

/// Outcome of a full search: certified roots, anything the engine could
/// count but not resolve, and bookkeeping that lets callers audit count
/// conservation.
#[derive(Debug, Clone)]
pub struct RootSearch {
    /// The rectangle actually searched (outer nudges may have moved edges
    /// outward by tiny amounts).
    pub rect: Rect,
    pub total_count: i64,
    pub roots: Vec<CertifiedRoot>,
    /// Sub-rectangles with a positive count that resisted resolution,
    /// with their counts. Non-fatal: completeness is judged by the caller.
    pub unresolved: Vec<(Rect, i64)>,
    /// Number of conservation-checked splits performed.
    pub splits: usize,
}

impl RootSearch {
    /// True when every counted zero was certified individually.
    pub fn complete(&self) -> bool {
        self.unresolved.is_empty() && self.roots.len() as i64 == self.total_count
    }
}

fn wrap_phase(d: f64) -> f64 {
    let mut d = d % std::f64::consts::TAU;
    if d > std::f64::consts::PI {
        d -= std::f64::consts::TAU;
    } else if d <= -std::f64::consts::PI {
        d += std::f64::consts::TAU;
    }
    d
}

/// Phase increment along a segment, refining until each piece turns by at
/// most π/2. Errors if refinement bottoms out (zero on the contour).
fn segment_phase<F>(f: &F, z0: Complex64, a0: f64, z1: Complex64, a1: f64, depth: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<(Complex64, Complex64)>,
{
    let d = wrap_phase(a1 - a0);
    if d.abs() <= std::f64::consts::FRAC_PI_2 && depth > 0 {
        // Coarse acceptance at depth 0 risks aliasing a fast full turn;
        // always split the very first level.
        return Ok(d);
    }
    if depth >= 48 {
        return Err(Error::ContourThroughZero { attempts: depth as u32 });
    }
    let zm = 0.5 * (z0 + z1);
    let (fm, _) = f(zm)?;
    if fm.norm() == 0.0 {
        return Err(Error::ContourThroughZero { attempts: depth as u32 });
    }
    let am = fm.arg();
    Ok(segment_phase(f, z0, a0, zm, am, depth + 1)?
        + segment_phase(f, zm, am, z1, a1, depth + 1)?)
}

/// Number of zeros (with multiplicity) strictly inside `rect`, by the
/// argument principle with adaptive phase tracking on the boundary.
pub fn count_zeros<F>(f: &F, rect: &Rect, opts: &SearchOpts) -> Result<i64>
where
    F: Fn(Complex64) -> Result<(Complex64, Complex64)>,
{
    let corners = rect.corners();
    let mut total = 0.0f64;
    for e in 0..4 {
        let z0 = corners[e];
        let z1 = corners[(e + 1) % 4];
        let n = opts.samples_per_edge.max(2);
        let mut prev_z = z0;
        let (f0, _) = f(prev_z)?;
        if f0.norm() == 0.0 {
            return Err(Error::ContourThroughZero { attempts: 0 });
        }
        let mut prev_a = f0.arg();
        for j in 1..=n {
            let t = j as f64 / n as f64;
            let z = z0 + t * (z1 - z0);
            let (fj, _) = f(z)?;
            if fj.norm() == 0.0 {
                return Err(Error::ContourThroughZero { attempts: 0 });
            }
            let a = fj.arg();
            total += segment_phase(f, prev_z, prev_a, z, a, 1)?;
            prev_z = z;
            prev_a = a;
        }
    }
    let w = total / std::f64::consts::TAU;
    let n = w.round();
    if (w - n).abs() > 0.25 {
        return Err(Error::Numerical(format!(
            "boundary phase tracking did not settle on an integer: {w}"
        )));
    }
    Ok(n as i64)
}

/// Splits a rectangle across its longer side into two tiles that exactly
/// share the split line, nudging the line when a zero obstructs it, and
/// enforcing count conservation.
fn split_counted<F>(
    f: &F,
    rect: &Rect,
    n_parent: i64,
    opts: &SearchOpts,
) -> Result<((Rect, i64), (Rect, i64))>
where
    F: Fn(Complex64) -> Result<(Complex64, Complex64)>,
{
    let vertical = rect.width() >= rect.height();
    let (lo, hi) = if vertical {
        (rect.re_lo, rect.re_hi)
    } else {
        (rect.im_lo, rect.im_hi)
    };
    let span = hi - lo;
    for attempt in 0..opts.max_nudges {
        // 0, +ε, −ε, +2ε, −2ε, … as fractions of the span.
        let step = (attempt as f64 + 1.0) / 2.0;
        let sign = if attempt % 2 == 1 { 1.0 } else { -1.0 };
        let frac = if attempt == 0 {
            0.5
        } else {
            0.5 + sign * step.floor() * 1e-3
        };
        let cut = lo + frac * span;
        let (r1, r2) = if vertical {
            (
                Rect::new(rect.re_lo, cut, rect.im_lo, rect.im_hi),
                Rect::new(cut, rect.re_hi, rect.im_lo, rect.im_hi),
            )
        } else {
            (
                Rect::new(rect.re_lo, rect.re_hi, rect.im_lo, cut),
                Rect::new(rect.re_lo, rect.re_hi, cut, rect.im_hi),
            )
        };
        let c1 = match count_zeros(f, &r1, opts) {
            Ok(c) => c,
            Err(Error::ContourThroughZero { .. }) => continue,
            Err(e) => return Err(e),
        };
        let c2 = match count_zeros(f, &r2, opts) {
            Ok(c) => c,
            Err(Error::ContourThroughZero { .. }) => continue,
            Err(e) => return Err(e),
        };
        if c1 + c2 == n_parent {
            return Ok(((r1, c1), (r2, c2)));
        }
        // A miscount means a zero too close to the line disturbed the
        // phase tracking; nudge and retry.
    }
    Err(Error::WindingConservation {
        parent: n_parent,
        children: -1,
    })
}

/// Newton from the cell center using the scale-free ratio, with a secant
/// fallback on the ratio itself.
fn polish<F>(
    f: &F,
    cell: &Rect,
    opts: &SearchOpts,
) -> Result<Option<(Complex64, f64, usize)>>
where
    F: Fn(Complex64) -> Result<(Complex64, Complex64)>,
{
    let escape = cell.inflate(0.5);
    let diam = (cell.width().powi(2) + cell.height().powi(2)).sqrt();
    let mut z = cell.center();
    let mut iters = 0usize;
    // Scale-free convergence measure at a point.
    let measure = |z: Complex64| -> Result<f64> {
        let (v, dv) = f(z)?;
        Ok(if dv.norm() == 0.0 {
            f64::INFINITY
        } else {
            v.norm() / (dv.norm() * z.norm().max(1.0))
        })
    };
    for _ in 0..NEWTON_MAX_ITERS {
        iters += 1;
        let (v, dv) = f(z)?;
        if dv.norm() == 0.0 {
            break;
        }
        let dz = v / dv;
        z -= dz;
        if !escape.contains(z) {
            break;
        }
        if dz.norm() <= opts.newton_tol * z.norm().max(1.0) {
            return Ok(Some((z, measure(z)?, iters)));
        }
    }
    // Secant on g = value/derivative (positive scale factors cancel per
    // call, so g is a genuine function of z with the same simple zeros).
    let g = |z: Complex64| -> Result<Complex64> {
        let (v, dv) = f(z)?;
        Ok(v / dv)
    };
    let mut z0 = cell.center() + Complex64::new(0.11 * diam, 0.07 * diam);
    let mut z1 = cell.center();
    let mut g0 = g(z0)?;
    for _ in 0..2 * NEWTON_MAX_ITERS {
        iters += 1;
        let g1 = g(z1)?;
        let denom = g1 - g0;
        if denom.norm() == 0.0 {
            break;
        }
        let z2 = z1 - g1 * (z1 - z0) / denom;
        if !escape.contains(z2) {
            break;
        }
        if (z2 - z1).norm() <= opts.newton_tol * z2.norm().max(1.0) {
            return Ok(Some((z2, measure(z2)?, iters)));
        }
        z0 = z1;
        g0 = g1;
        z1 = z2;
    }
    Ok(None)
}

/// Finds and certifies every zero in `rect`.
///
/// If a zero obstructs the outer boundary itself, the affected edges are
/// nudged outward by up to `max_nudges` increments of 1e-3 of the span;
/// the rectangle actually searched is reported in the result.
pub fn locate_all<F>(f: &F, rect: &Rect, opts: &SearchOpts) -> Result<RootSearch>
where
    F: Fn(Complex64) -> Result<(Complex64, Complex64)>,
{
    // Outer count, with outward nudges on contour obstruction.
    let mut outer = *rect;
    let mut total = None;
    for attempt in 0..=opts.max_nudges {
        match count_zeros(f, &outer, opts) {
            Ok(n) => {
                total = Some(n);
                break;
            }
            Err(Error::ContourThroughZero { .. }) if attempt < opts.max_nudges => {
                outer = outer.inflate(1e-3);
            }
            Err(e) => return Err(e),
        }
    }
    let total = total.ok_or(Error::ContourThroughZero {
        attempts: opts.max_nudges as u32,
    })?;

    let mut search = RootSearch {
        rect: outer,
        total_count: total,
        roots: Vec::new(),
        unresolved: Vec::new(),
        splits: 0,
    };
    if total == 0 {
        return Ok(search);
    }

    let scale = outer.center().norm().max(1.0);
    let mut queue: std::collections::VecDeque<(Rect, i64)> =
        std::collections::VecDeque::from([(outer, total)]);
    let mut cells_used = 0usize;
    while let Some((cell, n)) = queue.pop_front() {
        cells_used += 1;
        if cells_used > opts.max_cells {
            search.unresolved.push((cell, n));
            for rest in queue {
                search.unresolved.push(rest);
            }
            return Ok(search);
        }
        if n == 0 {
            continue;
        }
        let diam = (cell.width().powi(2) + cell.height().powi(2)).sqrt();
        if n == 1 {
            // Accept the polished point only if it lies in this cell (up to
            // an absolute same-point tolerance, since a zero can sit within
            // floating-point noise of an edge) and is not an
            // already-certified zero. Newton on an oscillatory residual can
            // hop from the cell center into a neighboring basin; accepting
            // such a point would steal the neighbor's zero and orphan this
            // cell's own one, so out-of-cell points force a split instead —
            // the shrinking cell eventually traps Newton on the right zero.
            if let Some((z, rnorm, iters)) = polish(f, &cell, opts)? {
                let own = cell.inflate_abs(1e-9 * scale).contains(z);
                let duplicate = search
                    .roots
                    .iter()
                    .any(|cr: &CertifiedRoot| (cr.z - z).norm() < 1e-9 * scale);
                if own && !duplicate {
                    let radius = opts.cert_radius_rel * z.norm().max(1.0);
                    let cert = Rect::new(z.re - radius, z.re + radius, z.im - radius, z.im + radius);
                    match count_zeros(f, &cert, opts) {
                        Ok(1) => {
                            search.roots.push(CertifiedRoot {
                                z,
                                box_radius: radius,
                                residual_norm: rnorm,
                                newton_iters: iters,
                            });
                            continue;
                        }
                        Ok(_) | Err(Error::ContourThroughZero { .. }) => {
                            // Not certifiable; fall through to splitting.
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            if diam < 1e-10 * scale {
                search.unresolved.push((cell, n));
                continue;
            }
            let ((r1, c1), (r2, c2)) = match split_counted(f, &cell, n, opts) {
                Ok(pair) => pair,
                Err(Error::WindingConservation { .. }) => {
                    search.unresolved.push((cell, n));
                    continue;
                }
                Err(e) => return Err(e),
            };
            search.splits += 1;
            queue.push_back((r1, c1));
            queue.push_back((r2, c2));
            continue;
        }
        // n ≥ 2: split, unless the cluster is numerically degenerate.
        if diam < 1e-10 * scale {
            search.unresolved.push((cell, n));
            continue;
        }
        let ((r1, c1), (r2, c2)) = match split_counted(f, &cell, n, opts) {
            Ok(pair) => pair,
            Err(Error::WindingConservation { .. }) => {
                search.unresolved.push((cell, n));
                continue;
            }
            Err(e) => return Err(e),
        };
        search.splits += 1;
        queue.push_back((r1, c1));
        queue.push_back((r2, c2));
    }
    search
        .roots
        .sort_by(|p, q| p.z.re.partial_cmp(&q.z.re).unwrap());
    Ok(search)
}

/// Pairing of predicted against located zeros by globally greedy nearest
/// distance, with bijectivity (each point used at most once).
#[derive(Debug, Clone)]
pub struct MatchReport {
    /// (prediction index, located index, distance).
    pub pairs: Vec<(usize, usize, f64)>,
    pub max_dist: f64,
    pub mean_dist: f64,
    pub unmatched_predicted: Vec<usize>,
    pub unmatched_located: Vec<usize>,
    /// Minimum pairwise distance among located zeros (∞ if fewer than 2).
    pub min_spacing_located: f64,
}

pub fn match_roots(predicted: &[Complex64], located: &[Complex64]) -> MatchReport {
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in predicted.iter().enumerate() {
        for (j, q) in located.iter().enumerate() {
            edges.push(((p - q).norm(), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut used_p = vec![false; predicted.len()];
    let mut used_l = vec![false; located.len()];
    let mut pairs = Vec::new();
    for (d, i, j) in edges {
        if !used_p[i] && !used_l[j] {
            used_p[i] = true;
            used_l[j] = true;
            pairs.push((i, j, d));
        }
    }
    pairs.sort_by_key(|&(i, _, _)| i);
    let max_dist = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    let mean_dist = if pairs.is_empty() {
        0.0
    } else {
        pairs.iter().map(|p| p.2).sum::<f64>() / pairs.len() as f64
    };
    let mut min_spacing = f64::INFINITY;
    for i in 0..located.len() {
        for j in i + 1..located.len() {
            min_spacing = min_spacing.min((located[i] - located[j]).norm());
        }
    }
    MatchReport {
        unmatched_predicted: used_p
            .iter()
            .enumerate()
            .filter(|(_, u)| !**u)
            .map(|(i, _)| i)
            .collect(),
        unmatched_located: used_l
            .iter()
            .enumerate()
            .filter(|(_, u)| !**u)
            .map(|(i, _)| i)
            .collect(),
        pairs,
        max_dist,
        mean_dist,
        min_spacing_located: min_spacing,
    }
}

// ----------------------------------------------------------------------
// Resonance-specific driver: spectral window, shooting adapter, pairing.
// ----------------------------------------------------------------------

use crate::asymptotic::PredictionSet;
use crate::potential::Potential;
use crate::shooting::{outgoing_residual, ShootOpts};

/// The search region `[a, b] − i[0, M·h·log(1/h)]`.
#[derive(Debug, Clone, Copy)]
pub struct SpectralWindow {
    pub a: f64,
    pub b: f64,
    /// Depth multiplier M.
    pub m: f64,
    pub h: f64,
}

impl SpectralWindow {
    pub fn new(a: f64, b: f64, m: f64, h: f64) -> Result<Self> {
        if !(b > a) || !(m > 0.0) || !(h > 0.0 && h < 1.0) {
            return Err(Error::OutOfRange {
                what: "spectral window",
                detail: format!("a = {a}, b = {b}, M = {m}, h = {h}"),
            });
        }
        Ok(SpectralWindow { a, b, m, h })
    }

    /// Band depth `M·h·log(1/h)`.
    pub fn depth(&self) -> f64 {
        self.m * self.h * (1.0 / self.h).ln()
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.a, self.b, -self.depth(), 0.0)
    }
}

/// A certified resonance of the outgoing problem.
#[derive(Debug, Clone)]
pub struct ComputedResonance {
    pub z: Complex64,
    /// Scale-free Newton convergence measure (see [`CertifiedRoot`]).
    pub residual_norm: f64,
    /// The winding-one certification box.
    pub winding_cell: Rect,
    pub newton_iters: usize,
    /// Lattice index of the paired prediction, when pairing was done.
    pub paired_index: Option<i64>,
}

/// Result of a full spectral-window search.
#[derive(Debug, Clone)]
pub struct ResonanceSearch {
    pub window: SpectralWindow,
    /// Rectangle actually searched (boundary nudges move edges outward).
    pub rect: Rect,
    pub total_count: i64,
    pub resonances: Vec<ComputedResonance>,
    pub unresolved: Vec<(Rect, i64)>,
    pub splits: usize,
}

impl ResonanceSearch {
    pub fn complete(&self) -> bool {
        self.unresolved.is_empty() && self.resonances.len() as i64 == self.total_count
    }
}

/// Locates every resonance in the window by shooting + winding search.
///
/// The initial boundary sampling density is scaled to the residual's
/// oscillation rate `2T/h` so no full turn can hide between samples.
pub fn locate_resonances(
    pot: &Potential,
    window: &SpectralWindow,
    shoot: &ShootOpts,
) -> Result<ResonanceSearch> {
    if !(window.a > pot.sup()) {
        return Err(Error::WindowAdmissibility {
            e: window.a,
            sup_v: pot.sup(),
        });
    }
    let t_max = crate::quadrature::period(pot, window.a)?;
    let width = window.b - window.a;
    let per_edge = ((width * 2.0 * t_max / window.h / 2.0).ceil() as usize).max(64);
    let opts = SearchOpts {
        samples_per_edge: per_edge,
        ..SearchOpts::default()
    };
    let h = window.h;
    let f = |z: Complex64| {
        let r = outgoing_residual(pot, z, h, shoot)?;
        Ok((r.mantissa, r.d_mantissa))
    };
    let s = locate_all(&f, &window.rect(), &opts)?;
    Ok(ResonanceSearch {
        window: *window,
        rect: s.rect,
        total_count: s.total_count,
        resonances: s
            .roots
            .into_iter()
            .map(|r| ComputedResonance {
                z: r.z,
                residual_norm: r.residual_norm,
                winding_cell: Rect::new(
                    r.z.re - r.box_radius,
                    r.z.re + r.box_radius,
                    r.z.im - r.box_radius,
                    r.z.im + r.box_radius,
                ),
                newton_iters: r.newton_iters,
                paired_index: None,
            })
            .collect(),
        unresolved: s.unresolved,
        splits: s.splits,
    })
}

/// One row of a computed-vs-predicted comparison.
#[derive(Debug, Clone)]
pub struct PairRow {
    pub n: i64,
    pub z_predicted: Complex64,
    pub z_computed: Complex64,
    pub dist: f64,
    /// `|Δz| / (h² log²(1/h))` — the first-order error unit.
    pub scaled: f64,
}

/// Computed-vs-predicted table with the aggregates the lattice theory
/// bounds: scaled errors, the empirical spacing constant, and cardinality
/// accounting.
#[derive(Debug, Clone)]
pub struct ComparisonTable {
    pub h: f64,
    pub rows: Vec<PairRow>,
    pub max_dist: f64,
    pub max_scaled: f64,
    pub median_scaled: f64,
    pub unmatched_predicted: Vec<i64>,
    pub unmatched_computed: Vec<Complex64>,
    /// `min_{m≠n} |z_n − z_m| / (h |n−m|)` over paired computed roots.
    pub spacing_constant: f64,
}

/// Pairs computed resonances against a prediction set and fills
/// `paired_index` on the computed entries.
pub fn match_predictions(
    computed: &mut [ComputedResonance],
    predictions: &PredictionSet,
) -> ComparisonTable {
    let pred_pts: Vec<Complex64> = predictions.items.iter().map(|p| p.z).collect();
    let comp_pts: Vec<Complex64> = computed.iter().map(|c| c.z).collect();
    let m = match_roots(&pred_pts, &comp_pts);
    let h = predictions.h;
    let unit = h * h * (1.0 / h).ln().powi(2);
    let mut rows = Vec::new();
    for &(pi, ci, d) in &m.pairs {
        let n = predictions.items[pi].n;
        computed[ci].paired_index = Some(n);
        rows.push(PairRow {
            n,
            z_predicted: pred_pts[pi],
            z_computed: comp_pts[ci],
            dist: d,
            scaled: d / unit,
        });
    }
    rows.sort_by_key(|r| r.n);
    let mut scaled: Vec<f64> = rows.iter().map(|r| r.scaled).collect();
    scaled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_scaled = if scaled.is_empty() {
        0.0
    } else {
        scaled[scaled.len() / 2]
    };
    let max_scaled = scaled.last().copied().unwrap_or(0.0);
    // Spacing constant over paired roots, using lattice indices.
    let mut spacing = f64::INFINITY;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let dn = (rows[i].n - rows[j].n).abs() as f64;
            if dn > 0.0 {
                spacing = spacing.min((rows[i].z_computed - rows[j].z_computed).norm() / (h * dn));
            }
        }
    }
    ComparisonTable {
        h,
        max_dist: m.max_dist,
        max_scaled,
        median_scaled,
        unmatched_predicted: m
            .unmatched_predicted
            .iter()
            .map(|&i| predictions.items[i].n)
            .collect(),
        unmatched_computed: m.unmatched_located.iter().map(|&j| comp_pts[j]).collect(),
        spacing_constant: spacing,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Polynomial with the given roots, as a residual closure.
    fn poly(
        roots: Vec<Complex64>,
    ) -> impl Fn(Complex64) -> Result<(Complex64, Complex64)> {
        move |z: Complex64| {
            let mut v = Complex64::new(1.0, 0.0);
            for r in &roots {
                v *= z - r;
            }
            let mut dv = Complex64::new(0.0, 0.0);
            for i in 0..roots.len() {
                let mut t = Complex64::new(1.0, 0.0);
                for (j, r) in roots.iter().enumerate() {
                    if j != i {
                        t *= z - r;
                    }
                }
                dv += t;
            }
            Ok((v, dv))
        }
    }

    #[test]
    fn a_dense_oscillatory_grid_of_zeros_is_fully_certified() {
        // Zeros of sin(ω(z − p)) sit every π/ω along a horizontal line —
        // forty of them in the box, denser than the early subdivision
        // cells, with one zero 4e−4 from the first bisection line and one
        // 4e−4 from the outer edge. Newton from a cell center routinely
        // hops into neighboring basins here, so this exercises the rule
        // that out-of-cell polish results force a split instead of
        // claiming a neighbor's zero (which would orphan the cell's own).
        let omega = 40.0 * std::f64::consts::PI;
        let p = c(0.0246, -0.1);
        let f = move |z: Complex64| {
            let w = (z - p) * omega;
            Ok((w.sin(), omega * w.cos()))
        };
        let rect = Rect::new(0.0, 1.0, -0.35, 0.15);
        let s = locate_all(&f, &rect, &SearchOpts::default()).unwrap();
        assert_eq!(s.total_count, 40);
        assert!(s.complete(), "unresolved cells: {:?}", s.unresolved);
        let expected: Vec<Complex64> =
            (0..40).map(|k| p + c(k as f64 * 0.025, 0.0)).collect();
        let located: Vec<Complex64> = s.roots.iter().map(|r| r.z).collect();
        let m = match_roots(&expected, &located);
        assert!(m.unmatched_predicted.is_empty());
        assert!(m.unmatched_located.is_empty());
        for &(_, _, d) in &m.pairs {
            assert!(d <= 1e-9, "zero located {d:.3e} away from its true spot");
        }
    }

    #[test]
    fn counts_three_roots_of_a_cubic() {
        let f = poly(vec![c(0.5, -0.25), c(1.5, -0.5), c(2.5, -0.1)]);
        let rect = Rect::new(0.0, 3.0, -1.0, 0.0);
        assert_eq!(count_zeros(&f, &rect, &SearchOpts::default()).unwrap(), 3);
        let sub = Rect::new(0.0, 1.0, -1.0, 0.0);
        assert_eq!(count_zeros(&f, &sub, &SearchOpts::default()).unwrap(), 1);
        let empty = Rect::new(0.0, 3.0, 0.5, 1.5);
        assert_eq!(count_zeros(&f, &empty, &SearchOpts::default()).unwrap(), 0);
    }

    #[test]
    fn counts_multiplicity() {
        let r = c(1.0, -0.5);
        let f = poly(vec![r, r]);
        let rect = Rect::new(0.0, 2.0, -1.0, 0.0);
        assert_eq!(count_zeros(&f, &rect, &SearchOpts::default()).unwrap(), 2);
    }

    #[test]
    fn zero_on_the_contour_is_reported() {
        let f = poly(vec![c(1.0, 0.0)]);
        // Root exactly on the top edge.
        let rect = Rect::new(0.0, 2.0, -1.0, 0.0);
        assert!(matches!(
            count_zeros(&f, &rect, &SearchOpts::default()),
            Err(Error::ContourThroughZero { .. })
        ));
    }

    #[test]
    fn locate_all_certifies_every_root() {
        let roots = vec![c(0.4, -0.2), c(1.1, -0.45), c(1.15, -0.05), c(2.7, -0.8)];
        let f = poly(roots.clone());
        let rect = Rect::new(0.0, 3.0, -1.0, -1e-6);
        let s = locate_all(&f, &rect, &SearchOpts::default()).unwrap();
        assert_eq!(s.total_count, 4);
        assert!(s.complete(), "unresolved: {:?}", s.unresolved);
        for r in &roots {
            let found = s.roots.iter().map(|cr| (cr.z - r).norm()).fold(f64::INFINITY, f64::min);
            assert!(found < 1e-10, "root {r} located to {found}");
        }
        for cr in &s.roots {
            assert!(cr.box_radius > 0.0);
        }
        assert!(s.splits >= 3);
    }

    #[test]
    fn locate_all_nudges_outer_boundary_off_a_root() {
        // A root exactly on the requested top edge: the outer boundary
        // must move, not fail.
        let f = poly(vec![c(1.0, 0.0), c(1.5, -0.4)]);
        let rect = Rect::new(0.0, 2.0, -1.0, 0.0);
        let s = locate_all(&f, &rect, &SearchOpts::default()).unwrap();
        assert_eq!(s.total_count, 2);
        assert!(s.complete());
        assert!(s.rect.im_hi > 0.0, "top edge should have moved out");
    }

    #[test]
    fn upper_half_plane_is_empty_for_lower_half_zeros() {
        let f = poly(vec![c(2.0, -0.1), c(2.5, -0.3)]);
        let rect = Rect::new(1.0, 3.0, 1e-9, 1.0);
        assert_eq!(count_zeros(&f, &rect, &SearchOpts::default()).unwrap(), 0);
    }

    #[test]
    fn matching_pairs_nearest_and_reports_leftovers() {
        let predicted = vec![c(1.0, -0.1), c(2.0, -0.1), c(3.0, -0.1)];
        let located = vec![c(1.01, -0.11), c(2.02, -0.09)];
        let m = match_roots(&predicted, &located);
        assert_eq!(m.pairs.len(), 2);
        assert_eq!(m.unmatched_predicted, vec![2]);
        assert!(m.unmatched_located.is_empty());
        assert!(m.max_dist < 0.05);
        assert!((m.min_spacing_located - (located[0] - located[1]).norm()).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Conservation of winding counts across an arbitrary vertical
        /// split, for random root configurations away from the lines.
        #[test]
        fn split_conserves_counts(
            xs in proptest::collection::vec((0.05f64..0.95, 0.05f64..0.95), 1..5),
            cut in 0.2f64..0.8,
        ) {
            let roots: Vec<Complex64> = xs
                .iter()
                .map(|&(x, y)| c(x, -y))
                .filter(|z| (z.re - cut).abs() > 1e-3)
                .collect();
            prop_assume!(!roots.is_empty());
            let f = poly(roots.clone());
            let opts = SearchOpts::default();
            let whole = Rect::new(0.0, 1.0, -1.0, 0.0);
            let left = Rect::new(0.0, cut, -1.0, 0.0);
            let right = Rect::new(cut, 1.0, -1.0, 0.0);
            let n = count_zeros(&f, &whole, &opts).unwrap();
            let nl = count_zeros(&f, &left, &opts).unwrap();
            let nr = count_zeros(&f, &right, &opts).unwrap();
            prop_assert_eq!(n, nl + nr);
            prop_assert_eq!(n, roots.len() as i64);
        }
    }
}
