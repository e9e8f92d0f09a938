//! The six batch commands. Per-h work is dispatched on scoped threads;
//! file writes happen afterwards on the main thread, in h order, so
//! outputs are byte-deterministic.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use resonance_core::asymptotic::{default_m, predict, qc_residual, solve_qc};
use resonance_core::dynamics::gap_report;
use resonance_core::potential::{PieceForm, Potential};
use resonance_core::rootfind::{
    locate_resonances, match_roots, ResonanceSearch, SpectralWindow,
};
use resonance_core::shooting::{constant_well_roots, ShootOpts};

use crate::config::LoadedConfig;
use crate::output::{
    csv_string, h_label, json_string, round_trips, write_file, CompareAggregates, CompareRow,
    ComputeAggregates, ComputedRow, CountRow, Document, GapPerH, GapSummary, ManifestEntry,
    OracleAggregates, OracleRow, PredictionRow, RunManifest, SCHEMA_VERSION,
};
use crate::AppError;

pub struct Ctx {
    pub loaded: LoadedConfig,
    pub out_dir: PathBuf,
}

impl Ctx {
    fn window(&self) -> (f64, f64) {
        (self.loaded.config.window.a, self.loaded.config.window.b)
    }

    fn shoot_opts(&self) -> ShootOpts {
        let t = &self.loaded.config.tolerances;
        ShootOpts {
            tol: t.ode_tol,
            renorm_threshold: t.renorm_threshold,
            ..ShootOpts::default()
        }
    }

    fn effective_m(&self, h: f64) -> Result<f64, AppError> {
        if let Some(m) = self.loaded.config.run.m {
            return Ok(m);
        }
        let (a, b) = self.window();
        default_m(&self.loaded.potential, a, b, h).map_err(|e| {
            AppError::Numerical(format!(
                "no explicit M and the width-based default is unavailable ({e}); set run.m"
            ))
        })
    }
}

fn numerical(e: resonance_core::Error) -> AppError {
    AppError::Numerical(e.to_string())
}

/// Runs one closure per h on scoped threads, preserving h order.
fn per_h<T, F>(h_list: &[f64], work: F) -> Vec<Result<T, AppError>>
where
    T: Send,
    F: Fn(f64) -> Result<T, AppError> + Sync,
{
    std::thread::scope(|s| {
        let work = &work;
        let handles: Vec<_> = h_list
            .iter()
            .map(|&h| s.spawn(move || work(h)))
            .collect();
        handles
            .into_iter()
            .map(|j| {
                j.join()
                    .unwrap_or_else(|_| Err(AppError::Numerical("worker panicked".into())))
            })
            .collect()
    })
}

struct FileOut {
    name: String,
    json: String,
    csv: Option<(String, String)>,
    h: Option<f64>,
    rows: usize,
    status: &'static str,
    round_trip: bool,
    wall_ms: u128,
}

fn persist(ctx: &Ctx, command: &str, files: Vec<FileOut>) -> Result<i32, AppError> {
    let mut manifest = RunManifest::new(command, &ctx.loaded.sha256);
    let mut exit = 0i32;
    for f in files {
        write_file(&ctx.out_dir, &f.name, &f.json)?;
        if let Some((csv_name, csv)) = &f.csv {
            write_file(&ctx.out_dir, csv_name, csv)?;
        }
        if f.status == "empty" {
            eprintln!(
                "warning: {} has no rows (empty index set in the window)",
                f.name
            );
        }
        if f.status == "partial" {
            exit = exit.max(3);
        }
        if !f.round_trip {
            return Err(AppError::Io(format!("{} failed round-trip validation", f.name)));
        }
        manifest.files.push(ManifestEntry {
            file: f.name,
            h: f.h,
            rows: f.rows,
            status: f.status.to_string(),
            round_trip: f.round_trip,
            wall_ms: f.wall_ms,
        });
    }
    manifest.write(&ctx.out_dir)?;
    Ok(exit)
}

fn collect(results: Vec<Result<FileOut, AppError>>) -> Result<Vec<FileOut>, AppError> {
    results.into_iter().collect()
}

// ---------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------

pub fn cmd_predict(ctx: &Ctx) -> Result<i32, AppError> {
    let (a, b) = ctx.window();
    let pot = &ctx.loaded.potential;
    let results = per_h(&ctx.loaded.config.run.h_list, |h| {
        let t0 = Instant::now();
        let preds = predict(pot, a, b, h).map_err(numerical)?;
        let items: Vec<PredictionRow> = preds
            .items
            .iter()
            .map(|p| PredictionRow {
                n: p.n,
                h,
                re_z: p.z.re,
                im_z: p.z.im,
                e_n: p.e_n,
                s_n: p.s_n,
                t_n: p.t_n,
                tier: "prediction".into(),
            })
            .collect();
        let doc = Document::<PredictionRow, ()> {
            schema_version: SCHEMA_VERSION,
            command: "predict".into(),
            window: [a, b],
            h: Some(h),
            aggregates: None,
            items,
        };
        let json = json_string(&doc)?;
        let ok = round_trips(&doc, &json);
        Ok(FileOut {
            name: format!("predict_h{}.json", h_label(h)),
            csv: Some((
                format!("predict_h{}.csv", h_label(h)),
                csv_string(&doc.items)?,
            )),
            json,
            h: Some(h),
            rows: doc.items.len(),
            status: if doc.items.is_empty() { "empty" } else { "complete" },
            round_trip: ok,
            wall_ms: t0.elapsed().as_millis(),
        })
    });
    persist(ctx, "predict", collect(results)?)
}

// ---------------------------------------------------------------------
// compute
// ---------------------------------------------------------------------

/// Computed points plus certification metadata for one h at the
/// configured tier.
struct TierResult {
    rows: Vec<ComputedRow>,
    winding_total: Option<i64>,
    unresolved: usize,
    band_depth: Option<f64>,
    m: Option<f64>,
}

fn run_tier(ctx: &Ctx, h: f64) -> Result<TierResult, AppError> {
    let (a, b) = ctx.window();
    let pot = &ctx.loaded.potential;
    let tier = ctx.loaded.config.run.tier.as_str();
    let unit = h * (1.0 / h).ln();
    match tier {
        "shooting" => {
            let m = ctx.effective_m(h)?;
            let window = SpectralWindow::new(a, b, m, h).map_err(numerical)?;
            let search = locate_resonances(pot, &window, &ctx.shoot_opts()).map_err(numerical)?;
            let mut rows: Vec<ComputedRow> = search
                .resonances
                .iter()
                .map(|r| ComputedRow {
                    h,
                    re_z: r.z.re,
                    im_z: r.z.im,
                    depth_scaled: -r.z.im / unit,
                    residual_norm: Some(r.residual_norm),
                    newton_iters: Some(r.newton_iters),
                    cell_re_lo: Some(r.winding_cell.re_lo),
                    cell_re_hi: Some(r.winding_cell.re_hi),
                    cell_im_lo: Some(r.winding_cell.im_lo),
                    cell_im_hi: Some(r.winding_cell.im_hi),
                    paired_n: None,
                    tier: tier.into(),
                })
                .collect();
            rows.sort_by(|p, q| (p.re_z, p.im_z).partial_cmp(&(q.re_z, q.im_z)).unwrap());
            Ok(TierResult {
                rows,
                winding_total: Some(search.total_count),
                unresolved: search.unresolved.len(),
                band_depth: Some(window.depth()),
                m: Some(m),
            })
        }
        "quantization" => {
            let preds = predict(pot, a, b, h).map_err(numerical)?;
            let mut rows = Vec::new();
            for p in &preds.items {
                let z = solve_qc(pot, p.z, h).map_err(numerical)?;
                let (g, dg) = qc_residual(pot, z, h).map_err(numerical)?;
                rows.push(ComputedRow {
                    h,
                    re_z: z.re,
                    im_z: z.im,
                    depth_scaled: -z.im / unit,
                    residual_norm: Some(g.norm() / (dg.norm() * z.norm().max(1.0))),
                    newton_iters: None,
                    cell_re_lo: None,
                    cell_re_hi: None,
                    cell_im_lo: None,
                    cell_im_hi: None,
                    paired_n: Some(p.n),
                    tier: tier.into(),
                });
            }
            Ok(TierResult {
                rows,
                winding_total: None,
                unresolved: 0,
                band_depth: None,
                m: None,
            })
        }
        "prediction" => {
            let preds = predict(pot, a, b, h).map_err(numerical)?;
            let rows = preds
                .items
                .iter()
                .map(|p| ComputedRow {
                    h,
                    re_z: p.z.re,
                    im_z: p.z.im,
                    depth_scaled: -p.z.im / unit,
                    residual_norm: None,
                    newton_iters: None,
                    cell_re_lo: None,
                    cell_re_hi: None,
                    cell_im_lo: None,
                    cell_im_hi: None,
                    paired_n: Some(p.n),
                    tier: tier.into(),
                })
                .collect();
            Ok(TierResult {
                rows,
                winding_total: None,
                unresolved: 0,
                band_depth: None,
                m: None,
            })
        }
        other => Err(AppError::Config(format!("unknown tier {other:?}"))),
    }
}

pub fn cmd_compute(ctx: &Ctx) -> Result<i32, AppError> {
    let (a, b) = ctx.window();
    let results = per_h(&ctx.loaded.config.run.h_list, |h| {
        let t0 = Instant::now();
        let tr = run_tier(ctx, h)?;
        let doc = Document::<ComputedRow, ComputeAggregates> {
            schema_version: SCHEMA_VERSION,
            command: "compute".into(),
            window: [a, b],
            h: Some(h),
            aggregates: Some(ComputeAggregates {
                winding_total: tr.winding_total,
                unresolved_cells: tr.unresolved,
                band_depth: tr.band_depth,
                m: tr.m,
            }),
            items: tr.rows,
        };
        let json = json_string(&doc)?;
        let ok = round_trips(&doc, &json);
        Ok(FileOut {
            name: format!("compute_h{}.json", h_label(h)),
            csv: Some((
                format!("compute_h{}.csv", h_label(h)),
                csv_string(&doc.items)?,
            )),
            json,
            h: Some(h),
            rows: doc.items.len(),
            status: if tr.unresolved > 0 {
                "partial"
            } else if doc.items.is_empty() {
                "empty"
            } else {
                "complete"
            },
            round_trip: ok,
            wall_ms: t0.elapsed().as_millis(),
        })
    });
    persist(ctx, "compute", collect(results)?)
}

// ---------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------

pub fn cmd_compare(ctx: &Ctx) -> Result<i32, AppError> {
    let (a, b) = ctx.window();
    let pot = &ctx.loaded.potential;
    let results = per_h(&ctx.loaded.config.run.h_list, |h| {
        let t0 = Instant::now();
        let preds = predict(pot, a, b, h).map_err(numerical)?;
        let tr = run_tier(ctx, h)?;
        let pred_pts: Vec<Complex64> = preds.items.iter().map(|p| p.z).collect();
        let comp_pts: Vec<Complex64> = tr
            .rows
            .iter()
            .map(|r| Complex64::new(r.re_z, r.im_z))
            .collect();
        let m = match_roots(&pred_pts, &comp_pts);
        let unit = (h * (1.0 / h).ln()).powi(2);
        let mut rows: Vec<CompareRow> = m
            .pairs
            .iter()
            .map(|&(pi, ci, d)| CompareRow {
                n: preds.items[pi].n,
                h,
                re_predicted: pred_pts[pi].re,
                im_predicted: pred_pts[pi].im,
                re_computed: comp_pts[ci].re,
                im_computed: comp_pts[ci].im,
                dist: d,
                scaled: d / unit,
            })
            .collect();
        rows.sort_by_key(|r| r.n);
        let mut scaled: Vec<f64> = rows.iter().map(|r| r.scaled).collect();
        scaled.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut spacing = f64::INFINITY;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let dn = (rows[i].n - rows[j].n).abs() as f64;
                let dz = Complex64::new(
                    rows[i].re_computed - rows[j].re_computed,
                    rows[i].im_computed - rows[j].im_computed,
                );
                spacing = spacing.min(dz.norm() / (h * dn));
            }
        }
        let aggregates = CompareAggregates {
            predicted_count: pred_pts.len(),
            computed_count: comp_pts.len(),
            max_dist: rows.iter().map(|r| r.dist).fold(None, fold_max),
            max_scaled: scaled.last().copied(),
            median_scaled: (!scaled.is_empty()).then(|| scaled[scaled.len() / 2]),
            spacing_constant: spacing.is_finite().then_some(spacing),
            unmatched_predicted: m
                .unmatched_predicted
                .iter()
                .map(|&i| preds.items[i].n)
                .collect(),
            unmatched_computed: m
                .unmatched_located
                .iter()
                .map(|&j| [comp_pts[j].re, comp_pts[j].im])
                .collect(),
        };
        let doc = Document::<CompareRow, CompareAggregates> {
            schema_version: SCHEMA_VERSION,
            command: "compare".into(),
            window: [a, b],
            h: Some(h),
            aggregates: Some(aggregates),
            items: rows,
        };
        let json = json_string(&doc)?;
        let ok = round_trips(&doc, &json);
        Ok(FileOut {
            name: format!("compare_h{}.json", h_label(h)),
            csv: Some((
                format!("compare_h{}.csv", h_label(h)),
                csv_string(&doc.items)?,
            )),
            json,
            h: Some(h),
            rows: doc.items.len(),
            status: if tr.unresolved > 0 {
                "partial"
            } else if doc.items.is_empty() {
                "empty"
            } else {
                "complete"
            },
            round_trip: ok,
            wall_ms: t0.elapsed().as_millis(),
        })
    });
    persist(ctx, "compare", collect(results)?)
}

fn fold_max(acc: Option<f64>, x: f64) -> Option<f64> {
    Some(acc.map_or(x, |a| a.max(x)))
}

// ---------------------------------------------------------------------
// count
// ---------------------------------------------------------------------

pub fn cmd_count(ctx: &Ctx) -> Result<i32, AppError> {
    let (a, b) = ctx.window();
    let pot = &ctx.loaded.potential;
    let results = per_h(&ctx.loaded.config.run.h_list, |h| {
        let t0 = Instant::now();
        let preds = predict(pot, a, b, h).map_err(numerical)?;
        let m = ctx.effective_m(h)?;
        let window = SpectralWindow::new(a, b, m, h).map_err(numerical)?;
        let search = locate_resonances(pot, &window, &ctx.shoot_opts()).map_err(numerical)?;
        let certified = search
            .resonances
            .iter()
            .filter(|r| r.z.re >= a && r.z.re <= b)
            .count();
        Ok((
            CountRow {
                h,
                lattice: preds.items.len(),
                certified,
                winding_total: search.total_count,
                difference: certified as i64 - preds.items.len() as i64,
            },
            search.unresolved.len(),
            t0.elapsed().as_millis(),
        ))
    });
    let mut rows = Vec::new();
    let mut partial = false;
    let mut wall_ms = 0u128;
    for r in results {
        let (row, unresolved, ms) = r?;
        partial |= unresolved > 0;
        wall_ms += ms;
        rows.push(row);
    }
    let doc = Document::<CountRow, ()> {
        schema_version: SCHEMA_VERSION,
        command: "count".into(),
        window: [a, b],
        h: None,
        aggregates: None,
        items: rows,
    };
    let json = json_string(&doc)?;
    let ok = round_trips(&doc, &json);
    persist(
        ctx,
        "count",
        vec![FileOut {
            name: "counts.json".into(),
            csv: Some(("counts.csv".into(), csv_string(&doc.items)?)),
            json,
            h: None,
            rows: doc.items.len(),
            status: if partial { "partial" } else { "complete" },
            round_trip: ok,
            wall_ms,
        }],
    )
}

// ---------------------------------------------------------------------
// gap
// ---------------------------------------------------------------------

pub fn cmd_gap(ctx: &Ctx) -> Result<i32, AppError> {
    let (a, b) = ctx.window();
    let pot = &ctx.loaded.potential;
    let t_start = Instant::now();
    let report = gap_report(pot, a, b).map_err(numerical)?;
    let results = per_h(&ctx.loaded.config.run.h_list, |h| {
        let unit = h * (1.0 / h).ln();
        let first_order_top = match predict(pot, a, b, h) {
            Ok(p) => p
                .items
                .iter()
                .map(|it| -it.w_n.im / unit)
                .fold(None, fold_min),
            Err(resonance_core::Error::DegenerateOrder) => None,
            Err(e) => return Err(numerical(e)),
        };
        let m = ctx.effective_m(h)?;
        let window = SpectralWindow::new(a, b, m, h).map_err(numerical)?;
        let search = locate_resonances(pot, &window, &ctx.shoot_opts()).map_err(numerical)?;
        let empirical_top = search
            .resonances
            .iter()
            .map(|r| -r.z.im / unit)
            .fold(None, fold_min);
        Ok((
            GapPerH {
                h,
                empirical_top,
                first_order_top,
                certified: search.resonances.len(),
            },
            search.unresolved.len(),
        ))
    });
    let mut per_h_rows = Vec::new();
    let mut partial = false;
    for r in results {
        let (row, unresolved) = r?;
        partial |= unresolved > 0;
        per_h_rows.push(row);
    }
    let doc = Document::<GapPerH, GapSummary> {
        schema_version: SCHEMA_VERSION,
        command: "gap".into(),
        window: [a, b],
        h: None,
        aggregates: Some(GapSummary {
            alpha: report.alpha,
            diam_window: report.diam_window,
            nu0_bound: report.nu0_bound,
            band_top: report.band_top,
            min_margin: report.min_margin,
        }),
        items: per_h_rows,
    };
    let json = json_string(&doc)?;
    let ok = round_trips(&doc, &json);
    persist(
        ctx,
        "gap",
        vec![FileOut {
            name: "gap.json".into(),
            csv: Some(("gap.csv".into(), csv_string(&doc.items)?)),
            json,
            h: None,
            rows: doc.items.len(),
            status: if partial { "partial" } else { "complete" },
            round_trip: ok,
            wall_ms: t_start.elapsed().as_millis(),
        }],
    )
}

fn fold_min(acc: Option<f64>, x: f64) -> Option<f64> {
    Some(acc.map_or(x, |a| a.min(x)))
}

// ---------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------

/// The closed-form route applies to a single constant piece only.
fn constant_height(pot: &Potential) -> Option<f64> {
    let pieces = pot.pieces();
    if pieces.len() != 1 {
        return None;
    }
    match &pieces[0].form {
        PieceForm::Polynomial { coeffs } => {
            let v0 = *coeffs.first()?;
            coeffs[1..].iter().all(|&c| c == 0.0).then_some(v0)
        }
        _ => None,
    }
}

pub fn cmd_oracle(ctx: &Ctx) -> Result<i32, AppError> {
    let (a, b) = ctx.window();
    let pot = &ctx.loaded.potential;
    let v0 = constant_height(pot).ok_or_else(|| {
        AppError::Config(
            "oracle needs a single constant piece (the closed-form route is exact only there)"
                .into(),
        )
    })?;
    if !(v0 > 0.0) {
        return Err(AppError::Config(format!(
            "oracle needs a positive well height, got {v0}"
        )));
    }
    let l = pot.support_right();
    let mut mismatch = false;
    let results = per_h(&ctx.loaded.config.run.h_list, |h| {
        let t0 = Instant::now();
        let m = ctx.effective_m(h)?;
        let window = SpectralWindow::new(a, b, m, h).map_err(numerical)?;
        let search: ResonanceSearch =
            locate_resonances(pot, &window, &ctx.shoot_opts()).map_err(numerical)?;
        let rect = search.rect;
        let reference: Vec<Complex64> =
            constant_well_roots(v0, l, rect.re_lo.max(v0 + 1e-9), rect.re_hi, rect.im_lo, h)
                .map_err(numerical)?
                .into_iter()
                .filter(|z| rect.contains(*z))
                .collect();
        let computed: Vec<Complex64> = search.resonances.iter().map(|r| r.z).collect();
        let pairing = match_roots(&reference, &computed);
        let mut rows = Vec::new();
        for (ri, z_ref) in reference.iter().enumerate() {
            let hit = pairing.pairs.iter().find(|&&(p, _, _)| p == ri);
            rows.push(OracleRow {
                h,
                re_reference: z_ref.re,
                im_reference: z_ref.im,
                re_computed: hit.map(|&(_, ci, _)| computed[ci].re),
                im_computed: hit.map(|&(_, ci, _)| computed[ci].im),
                dist: hit.map(|&(_, _, d)| d),
            });
        }
        rows.sort_by(|p, q| p.re_reference.partial_cmp(&q.re_reference).unwrap());
        let aggregates = OracleAggregates {
            reference_count: reference.len(),
            computed_count: computed.len(),
            max_dist: rows.iter().filter_map(|r| r.dist).fold(None, fold_max),
        };
        let doc = Document::<OracleRow, OracleAggregates> {
            schema_version: SCHEMA_VERSION,
            command: "oracle".into(),
            window: [a, b],
            h: Some(h),
            aggregates: Some(aggregates),
            items: rows,
        };
        let json = json_string(&doc)?;
        let ok = round_trips(&doc, &json);
        Ok((
            FileOut {
                name: format!("oracle_h{}.json", h_label(h)),
                csv: Some((
                    format!("oracle_h{}.csv", h_label(h)),
                    csv_string(&doc.items)?,
                )),
                json,
                h: Some(h),
                rows: doc.items.len(),
                status: if search.unresolved.is_empty() {
                    "complete"
                } else {
                    "partial"
                },
                round_trip: ok,
                wall_ms: t0.elapsed().as_millis(),
            },
            reference.len() != computed.len(),
        ))
    });
    let mut files = Vec::new();
    for r in results {
        let (f, bad) = r?;
        mismatch |= bad;
        files.push(f);
    }
    let exit = persist(ctx, "oracle", files)?;
    if mismatch {
        eprintln!("oracle cardinality mismatch: closed-form and certified counts differ");
        return Ok(4);
    }
    Ok(exit)
}

/// Creates the output directory and dispatches a command by name.
pub fn run(name: &str, ctx: &Ctx) -> Result<i32, AppError> {
    std::fs::create_dir_all(&ctx.out_dir)
        .map_err(|e| AppError::Io(format!("cannot create {}: {e}", ctx.out_dir.display())))?;
    match name {
        "predict" => cmd_predict(ctx),
        "compute" => cmd_compute(ctx),
        "compare" => cmd_compare(ctx),
        "count" => cmd_count(ctx),
        "gap" => cmd_gap(ctx),
        "oracle" => cmd_oracle(ctx),
        other => Err(AppError::Config(format!("unknown command {other:?}"))),
    }
}

/// Path helper shared with tests.
pub fn out_dir_of(config_dir: &Path, spec: &str) -> PathBuf {
    let p = Path::new(spec);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_dir.join(p)
    }
}
