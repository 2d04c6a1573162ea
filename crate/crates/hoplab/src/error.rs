use thiserror::Error;

/// Faults raised by the simulation stack.
#[derive(Debug, Clone, Error)]
pub enum SimError {
    /// A vector field or integrated state stopped being finite.
    #[error("integration fault at t={t}: non-finite state ({chi}, {chidot})")]
    IntegrationFault { t: f64, chi: f64, chidot: f64 },

    /// The body reached a physically invalid configuration.
    #[error("simulation fault at t={t}: {what}")]
    SimulationFault { t: f64, what: String },

    /// Event refinement was asked to work on a bracket without a sign change.
    #[error("no sign change across event bracket: g0={g0}, g1={g1}")]
    BracketError { g0: f64, g1: f64 },

    /// Invalid parameter or argument for an operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A fixed-point search ran out of iterations.
    #[error("fixed point did not converge after {iterations} iterations (last apexes: {history:?})")]
    NonConvergence { iterations: usize, history: Vec<f64> },
}
