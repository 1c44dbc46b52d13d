use std::fmt;

use spinsync_core::bound::BoundError;
use spinsync_core::dynamics::DynamicsError;
use spinsync_core::gp::GpError;
use spinsync_core::graph::GraphError;
use spinsync_core::io::IoError;
use spinsync_core::lift::LiftError;
use spinsync_core::spectral::SpectralError;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Invalid = 1,
    CertificationFailed = 2,
    NonConvergence = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self { exit: Exit::Invalid, message: message.into() }
    }

    pub fn certification(message: impl Into<String>) -> Self {
        Self { exit: Exit::CertificationFailed, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn with(exit: Exit, e: impl fmt::Display) -> CliError {
    CliError { exit, message: e.to_string() }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        with(Exit::Invalid, e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        with(Exit::Invalid, e)
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        with(Exit::Invalid, e)
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        with(Exit::Invalid, e)
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        let exit = match e {
            DynamicsError::NonConvergence { .. } => Exit::NonConvergence,
            _ => Exit::Invalid,
        };
        with(exit, e)
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        let exit = match e {
            SpectralError::NoConvergence { .. } => Exit::NonConvergence,
            _ => Exit::Invalid,
        };
        with(exit, e)
    }
}

impl From<LiftError> for CliError {
    fn from(e: LiftError) -> Self {
        match e {
            LiftError::Graph(e) => e.into(),
            LiftError::Dynamics(e) => e.into(),
            LiftError::Spectral(e) => e.into(),
            e @ LiftError::MatchFailure { .. } => with(Exit::CertificationFailed, e),
        }
    }
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> Self {
        let exit = match e {
            BoundError::CertificationFailed { .. } => Exit::CertificationFailed,
            _ => Exit::Invalid,
        };
        with(exit, e)
    }
}
