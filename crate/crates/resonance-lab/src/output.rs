//! Result persistence: versioned JSON documents, CSV mirrors with
//! plot-ready columns, round-trip validation, and the run manifest.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::AppError;

pub const SCHEMA_VERSION: u32 = 1;

/// Filesystem-safe label for an h value: `0.005` → `0p005`.
pub fn h_label(h: f64) -> String {
    format!("{h}").replace('.', "p")
}

// ---------------------------------------------------------------------
// Row records shared by commands. All fields are finite; quantities that
// can be undefined (e.g. the spacing constant with fewer than two roots)
// are optional so every document round-trips exactly.
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredictionRow {
    pub n: i64,
    pub h: f64,
    pub re_z: f64,
    pub im_z: f64,
    pub e_n: f64,
    pub s_n: f64,
    pub t_n: f64,
    pub tier: String,
}

/// One computed resonance. Certification data (winding cell, scale-free
/// Newton measure) is present for the shooting tier; the columns stay
/// flat so the CSV mirror is identical to the JSON record.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComputedRow {
    pub h: f64,
    pub re_z: f64,
    pub im_z: f64,
    /// Plot-ready depth `−Im z / (h log(1/h))`.
    pub depth_scaled: f64,
    pub residual_norm: Option<f64>,
    pub newton_iters: Option<usize>,
    pub cell_re_lo: Option<f64>,
    pub cell_re_hi: Option<f64>,
    pub cell_im_lo: Option<f64>,
    pub cell_im_hi: Option<f64>,
    pub paired_n: Option<i64>,
    pub tier: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComputeAggregates {
    /// Total argument-principle count of the searched rectangle.
    pub winding_total: Option<i64>,
    pub unresolved_cells: usize,
    /// Depth of the searched band, `M·h·log(1/h)`.
    pub band_depth: Option<f64>,
    pub m: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CompareRow {
    pub n: i64,
    pub h: f64,
    pub re_predicted: f64,
    pub im_predicted: f64,
    pub re_computed: f64,
    pub im_computed: f64,
    pub dist: f64,
    /// `|Δz| / (h² log²(1/h))`.
    pub scaled: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CompareAggregates {
    pub predicted_count: usize,
    pub computed_count: usize,
    pub max_dist: Option<f64>,
    pub max_scaled: Option<f64>,
    pub median_scaled: Option<f64>,
    /// `min_{m≠n} |z_n − z_m| / (h |n − m|)` over paired roots; absent
    /// with fewer than two pairs.
    pub spacing_constant: Option<f64>,
    pub unmatched_predicted: Vec<i64>,
    pub unmatched_computed: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CountRow {
    pub h: f64,
    /// Lattice cardinality |N(h)|.
    pub lattice: usize,
    /// Certified roots with Re z in the window.
    pub certified: usize,
    /// Total winding count of the searched rectangle.
    pub winding_total: i64,
    pub difference: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GapPerH {
    pub h: f64,
    /// `min_n (−Im z_n) / (h log(1/h))` over certified roots.
    pub empirical_top: Option<f64>,
    /// Same quantity from the first-order width prediction.
    pub first_order_top: Option<f64>,
    pub certified: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GapSummary {
    pub alpha: f64,
    pub diam_window: f64,
    /// Gap coefficient α/diam (resonance-free depth per h·log(1/h)).
    pub nu0_bound: f64,
    /// Lattice band-top coefficient min_E (k+l)/(2T(E)).
    pub band_top: f64,
    pub min_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OracleRow {
    pub h: f64,
    pub re_reference: f64,
    pub im_reference: f64,
    pub re_computed: Option<f64>,
    pub im_computed: Option<f64>,
    pub dist: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OracleAggregates {
    pub reference_count: usize,
    pub computed_count: usize,
    pub max_dist: Option<f64>,
}

/// Versioned envelope for every emitted JSON document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(bound(
    serialize = "T: Serialize, A: Serialize",
    deserialize = "T: serde::Deserialize<'de>, A: serde::Deserialize<'de>"
))]
pub struct Document<T, A> {
    pub schema_version: u32,
    pub command: String,
    pub window: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub aggregates: Option<A>,
    pub items: Vec<T>,
}

// ---------------------------------------------------------------------
// Writers.
// ---------------------------------------------------------------------

pub fn json_string<T: Serialize>(doc: &T) -> Result<String, AppError> {
    let mut s = serde_json::to_string_pretty(doc)
        .map_err(|e| AppError::Io(format!("JSON serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Serialize, then parse back and compare: every emitted document must
/// reproduce its in-memory record exactly.
pub fn round_trips<T>(doc: &T, json: &str) -> bool
where
    T: Serialize + DeserializeOwned + PartialEq,
{
    serde_json::from_str::<T>(json).map(|d| d == *doc).unwrap_or(false)
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, AppError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| AppError::Io(format!("CSV serialization failed: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| AppError::Io(format!("CSV flush failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| AppError::Io(format!("CSV not UTF-8: {e}")))
}

pub fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf, AppError> {
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| AppError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

// ---------------------------------------------------------------------
// Manifest.
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// File name inside the output directory.
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h: Option<f64>,
    pub rows: usize,
    /// "complete", "partial", or "empty".
    pub status: String,
    /// Whether the written JSON parsed back into an identical record.
    pub round_trip: bool,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    pub config_sha256: String,
    pub files: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn new(command: &str, config_sha256: &str) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sha256: config_sha256.to_string(),
            files: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), AppError> {
        let name = format!("manifest_{}.json", self.command);
        let json = json_string(self)?;
        write_file(dir, &name, &json)?;
        Ok(())
    }
}
