//! Run configuration: TOML schema, validation, and potential assembly.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use resonance_core::{Piece, PieceForm, Potential};

use crate::AppError;

/// One piece of the potential, as written in the config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    /// "polynomial", "trig", or "gaussian".
    pub kind: String,
    /// Closed subinterval `[lo, hi]` of the support.
    pub subinterval: [f64; 2],
    /// Polynomial coefficients, lowest degree first (kind = "polynomial").
    #[serde(default)]
    pub coefficients: Vec<f64>,
    /// Parameters for "trig" (`amp·sin(freq·x + phase)`).
    #[serde(default)]
    pub amp: Option<f64>,
    #[serde(default)]
    pub freq: Option<f64>,
    #[serde(default)]
    pub phase: Option<f64>,
    /// Parameters for "gaussian" (`amp·exp(−((x−center)/width)²)`).
    #[serde(default)]
    pub center: Option<f64>,
    #[serde(default)]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredOrder {
    pub at: f64,
    pub order: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub support_right: f64,
    pub pieces: Vec<PieceSpec>,
    pub declared_orders: Vec<DeclaredOrder>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub a: f64,
    pub b: f64,
}

fn default_tier() -> String {
    "shooting".into()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Semiclassical parameters, sorted descending.
    pub h_list: Vec<f64>,
    /// Depth multiplier for the search band; derived from the width
    /// formula when absent.
    #[serde(default)]
    pub m: Option<f64>,
    /// "prediction", "quantization", or "shooting".
    #[serde(default = "default_tier")]
    pub tier: String,
    /// Declares that the run must be reproducible bit-for-bit. Nothing in
    /// the pipeline is randomized, so `false` is rejected rather than
    /// silently ignored.
    #[serde(default = "default_true")]
    pub deterministic: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSpec {
    pub ode_tol: f64,
    pub renorm_threshold: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        ToleranceSpec {
            ode_tol: 1e-12,
            renorm_threshold: 1e8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub window: WindowSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    pub output: OutputSpec,
}

/// A loaded, validated configuration with its assembled potential and
/// the hash of the raw config bytes.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub potential: Potential,
    pub sha256: String,
}

pub fn load(path: &std::path::Path) -> Result<LoadedConfig, AppError> {
    let raw = std::fs::read(path)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&raw)
        .map_err(|e| AppError::Config(format!("{} is not UTF-8: {e}", path.display())))?;
    let config: RunConfig =
        toml::from_str(text).map_err(|e| AppError::Config(format!("config parse error: {e}")))?;
    let potential = build_potential(&config.potential)?;
    validate(&config, &potential)?;
    let mut hasher = Sha256::new();
    hasher.update(&raw);
    Ok(LoadedConfig {
        config,
        potential,
        sha256: format!("{:x}", hasher.finalize()),
    })
}

fn build_piece(spec: &PieceSpec) -> Result<Piece, AppError> {
    let form = match spec.kind.as_str() {
        "polynomial" => {
            if spec.coefficients.is_empty() {
                return Err(AppError::Config(
                    "polynomial piece needs a coefficients list".into(),
                ));
            }
            PieceForm::Polynomial {
                coeffs: spec.coefficients.clone(),
            }
        }
        "trig" => PieceForm::Trig {
            amp: require(spec.amp, "trig piece needs amp")?,
            freq: require(spec.freq, "trig piece needs freq")?,
            phase: spec.phase.unwrap_or(0.0),
        },
        "gaussian" => PieceForm::Gaussian {
            amp: require(spec.amp, "gaussian piece needs amp")?,
            center: require(spec.center, "gaussian piece needs center")?,
            width: require(spec.width, "gaussian piece needs width")?,
        },
        other => {
            return Err(AppError::Config(format!(
                "unknown piece kind {other:?} (expected polynomial, trig, or gaussian)"
            )))
        }
    };
    Ok(Piece {
        lo: spec.subinterval[0],
        hi: spec.subinterval[1],
        form,
    })
}

fn require<T>(v: Option<T>, msg: &str) -> Result<T, AppError> {
    v.ok_or_else(|| AppError::Config(msg.into()))
}

fn build_potential(spec: &PotentialSpec) -> Result<Potential, AppError> {
    let pieces = spec
        .pieces
        .iter()
        .map(build_piece)
        .collect::<Result<Vec<_>, _>>()?;
    let declared: Vec<(f64, usize)> = spec.declared_orders.iter().map(|d| (d.at, d.order)).collect();
    Potential::new(spec.support_right, pieces, &declared)
        .map_err(|e| AppError::Config(format!("invalid potential: {e}")))
}

pub fn validate(config: &RunConfig, potential: &Potential) -> Result<(), AppError> {
    let w = &config.window;
    if !(w.a > potential.sup()) {
        return Err(AppError::Config(format!(
            "window start a = {} must exceed sup V = {}",
            w.a,
            potential.sup()
        )));
    }
    if !(w.b > w.a) {
        return Err(AppError::Config(format!(
            "window [{}, {}] is empty",
            w.a, w.b
        )));
    }
    if config.run.h_list.is_empty() {
        return Err(AppError::Config("h_list is empty".into()));
    }
    for h in &config.run.h_list {
        if !(*h > 0.0 && *h < 1.0) {
            return Err(AppError::Config(format!("h = {h} outside (0, 1)")));
        }
    }
    if config.run.h_list.windows(2).any(|p| p[0] <= p[1]) {
        return Err(AppError::Config(
            "h_list must be sorted strictly descending".into(),
        ));
    }
    if let Some(m) = config.run.m {
        if !(m > 0.0) {
            return Err(AppError::Config(format!("M = {m} must be positive")));
        }
    }
    match config.run.tier.as_str() {
        "prediction" | "quantization" | "shooting" => {}
        other => {
            return Err(AppError::Config(format!(
                "unknown tier {other:?} (expected prediction, quantization, or shooting)"
            )))
        }
    }
    if !config.run.deterministic {
        return Err(AppError::Config(
            "deterministic = false is not supported: every computation here is deterministic"
                .into(),
        ));
    }
    let t = &config.tolerances;
    if !(t.ode_tol > 0.0 && t.renorm_threshold > 0.0) {
        return Err(AppError::Config("tolerances must be positive".into()));
    }
    Ok(())
}
