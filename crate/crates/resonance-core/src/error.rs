use num_complex::Complex64;

/// Failure modes shared across the crate.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Structural problem with a potential definition (coverage, ordering,
    /// empty pieces, bad subintervals).
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    /// A declared vanishing/jump order disagrees with the derivative oracle.
    #[error("declared order {declared} at x = {x} fails validation: {detail}")]
    OrderValidation {
        x: f64,
        declared: usize,
        detail: String,
    },

    /// Two-sided derivative requested at an interface where the one-sided
    /// values differ.
    #[error("two-sided derivative is ambiguous at interface x = {x}")]
    InterfaceAmbiguity { x: f64 },

    /// Energy window dips at or below sup V, where the action integrand and
    /// the outgoing normalization degenerate.
    #[error("energy {e} is not above sup V = {sup_v}")]
    WindowAdmissibility { e: f64, sup_v: f64 },

    /// Principal square-root branch would be crossed: Re(z) − V(x) ≤ 0.
    #[error("branch cut touched at x = {x}: Re(z) - V = {margin}")]
    BranchCut { x: f64, margin: f64 },

    /// Argument outside the documented domain of an operation.
    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    /// A jet does not carry enough Taylor degrees for the requested
    /// operation (each derivative shift consumes one degree).
    #[error("jet degree exhausted: need {needed}, have {available}")]
    DegreeExhaustion { needed: usize, available: usize },

    /// Bohr–Sommerfeld index not in N(h) for the window.
    #[error("index n = {n} is not in the quantization index set for this window")]
    IndexNotInSet { n: i64 },

    /// Degenerate data for the phase shift (zero endpoint derivative product).
    #[error("phase shift undefined: endpoint derivative product vanishes")]
    DegenerateOrder,

    /// Newton iteration failed to converge; carries diagnostics.
    #[error("Newton did not converge after {iters} iterations (last |f| = {last_norm:.3e} at z = {last_z})")]
    NewtonNoConvergence {
        iters: u32,
        last_norm: f64,
        last_z: Complex64,
    },

    /// Adaptive integration exceeded its step budget.
    #[error("integration budget exceeded: {steps} steps at h = {h}, tol = {tol}")]
    IntegrationBudget { h: f64, tol: f64, steps: usize },

    /// Contour certification kept failing after the allowed perturbations.
    #[error("contour passes through a zero after {attempts} perturbation attempts")]
    ContourThroughZero { attempts: u32 },

    /// Winding numbers stopped adding up during subdivision; indicates a
    /// numerically unreliable contour, treated as fatal.
    #[error("winding conservation violated: parent = {parent}, children sum = {children}")]
    WindingConservation { parent: i64, children: i64 },

    /// Classical flow cannot be continued uniquely through a low-order
    /// interface (the field is not Lipschitz there).
    #[error("flow is not uniquely continuable through interface x = {y} (order {order})")]
    FlowUniqueness { y: f64, order: usize },

    /// Catch-all for numeric breakdown (step underflow, NaN states, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
