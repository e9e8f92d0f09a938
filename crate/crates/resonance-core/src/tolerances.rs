//! Central numerical tolerances.
//!
//! Every threshold that couples two modules, or that a test asserts against,
//! lives here with its justification. Local fudge factors that never leave a
//! single function stay local.

/// Absolute error target for adaptive Gauss–Kronrod quadrature of action,
/// period, and phase integrals. The integrands are smooth per piece, so the
/// rule converges far faster than this; 1e−12 keeps quadrature error two
/// orders below every consumer's tolerance.
pub const QUAD_ABS_TOL: f64 = 1e-12;

/// Convergence target `|S(E) − s| ≤ …` for action inversion. Matches the
/// quadrature tolerance: tighter would chase noise.
pub const ACTION_INVERT_TOL: f64 = 1e-12;

/// Default relative/absolute tolerance of the adaptive ODE steppers
/// (outgoing shooting and classical flow).
pub const ODE_TOL_DEFAULT: f64 = 1e-12;

/// Hard floor for user-supplied ODE tolerances: below this the embedded
/// error estimate is dominated by double-precision roundoff.
pub const ODE_TOL_MIN: f64 = 1e-13;

/// Admissible semiclassical parameter range for the shooting integrator.
/// Above 0.2 the asymptotic regime is gone; below 5e−4 a solve costs more
/// phase resolution than double precision carries through the window.
pub const H_RANGE: (f64, f64) = (5e-4, 0.2);

/// Newton convergence target on the simplified quantization condition G(z).
pub const QC_NEWTON_TOL: f64 = 1e-12;

/// Iteration cap for Newton solves (quantization condition and root
/// polishing). Quadratic convergence from a sane seed needs < 10.
pub const NEWTON_MAX_ITERS: u32 = 50;

/// A certified root must have normalized outgoing residual at most this.
pub const ROOT_RESIDUAL_CEIL: f64 = 1e-10;

/// Relative radius of the final certification box around a polished root:
/// radius = 1e−8 · max(1, |z|), and the box must carry winding number 1.
pub const CERT_BOX_RADIUS_REL: f64 = 1e-8;

/// |E − V| below this at an interface counts as glancing.
pub const GLANCING_TOL: f64 = 1e-12;

/// One-sided derivatives below declared vanishing orders must be zero to
/// this tolerance, relative to the first non-vanishing derivative.
pub const ORDER_VALIDATION_TOL: f64 = 1e-12;

/// Interface-crossing events of the classical flow are located to this
/// accuracy in x.
pub const INTERFACE_EVENT_TOL: f64 = 1e-12;

/// Renormalization threshold for the shooting state: when max(|u|,|v|)
/// exceeds it, the state is rescaled and the exponent logged. Solutions in
/// the spectral strip grow only polynomially in 1/h, so the default rarely
/// fires; tests shrink it to force many rescalings.
pub const RENORM_THRESHOLD_DEFAULT: f64 = 1e8;
