use std::fmt;

use crate::newton::SolveStats;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which runtime certificate failed after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    Bound,
    Mass,
    Energy,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Bound => f.write_str("bound"),
            Certificate::Mass => f.write_str("mass"),
            Certificate::Energy => f.write_str("energy"),
        }
    }
}

/// Inner line solve of a split step, 1-based like the grid documentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Row `q` solved along x.
    X(usize),
    /// Column `p` solved along y.
    Y(usize),
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sweep::X(q) => write!(f, "x-sweep q={q}"),
            Sweep::Y(p) => write!(f, "y-sweep p={p}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("phase value {phi} outside the potential's domain (-1, 1)")]
    Domain { phi: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("Newton iteration did not converge after {} iterations (residual {:.3e})", stats.iterations, stats.final_residual)]
    NoConvergence {
        stats: SolveStats,
        /// Best bounded iterate reached.
        phi: Vec<f64>,
        xi: f64,
    },

    #[error("singular Jacobian in line solve")]
    SingularJacobian,

    #[error("{which} certificate violated (magnitude {magnitude:.3e})")]
    CertificateViolation { which: Certificate, magnitude: f64 },

    #[error("{sweep}: {source}")]
    InSweep {
        sweep: Sweep,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips any sweep context.
    pub fn root(&self) -> &Error {
        match self {
            Error::InSweep { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn sweep(&self) -> Option<Sweep> {
        match self {
            Error::InSweep { sweep, .. } => Some(*sweep),
            _ => None,
        }
    }

    pub(crate) fn in_sweep(self, sweep: Sweep) -> Self {
        Error::InSweep {
            sweep,
            source: Box::new(self),
        }
    }
}
