use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("network is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("invalid bus specification: {0}")]
    InvalidBusSpec(String),

    #[error("power flow did not converge after {iterations} iterations (residual {residual:.3e})")]
    PowerFlowDiverged { iterations: usize, residual: f64 },

    #[error("singular Jacobian in Newton iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("invalid device parameters: {0}")]
    InvalidParams(String),

    /// `Q + V^2 / X_q <= 0`: no internal phase on the principal branch.
    #[error("operating point outside generator capability{} (Q + V^2/X_q = {denominator:.6e})", bus_suffix(*bus))]
    OutsideCapability { bus: Option<usize>, denominator: f64 },

    #[error("condition (12a) violated; Gamma undefined (gamma = {gamma:.6e})")]
    GammaNonPositive { gamma: f64 },

    #[error("inconsistent equilibrium: state derivative residual {derivative:.3e}, power balance residual {balance:.3e}")]
    InconsistentEquilibrium { derivative: f64, balance: f64 },

    #[error("algebraic block is numerically singular (condition {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("degenerate equilibrium: {zero_modes} eigenvalues near zero")]
    DegenerateEquilibrium { zero_modes: usize },

    #[error("algebraic solve diverged (residual {residual:.3e})")]
    AlgebraicDivergence { residual: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn bus_suffix(bus: Option<usize>) -> String {
    bus.map(|b| format!(" at bus index {b}")).unwrap_or_default()
}

impl Error {
    /// Attach a bus index to a capability error raised by a per-device routine.
    pub fn at_bus(self, index: usize) -> Self {
        match self {
            Error::OutsideCapability { denominator, .. } => Error::OutsideCapability {
                bus: Some(index),
                denominator,
            },
            other => other,
        }
    }
}
