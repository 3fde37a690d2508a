//! Error classes and their exit codes.

use serde::Serialize;
use thiserror::Error;

use expert_km::asymptotics::AsymptoticsError;
use expert_km::bandwidth::BandwidthError;
use expert_km::dataset::DatasetError;
use expert_km::estimator::EstimatorError;
use expert_km::expert::ExpertError;
use expert_km::loan::LoanError;
use expert_km::simulation::SimulationError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, input data or arguments.
    #[error("{0}")]
    Validation(String),
    /// The numerics could not produce a result (degenerate CV, saturated
    /// jumps, empty neighbourhoods).
    #[error("{0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            exit_code: self.exit_code(),
            kind: self.kind(),
            message: self.to_string(),
        }
    }
}

/// Contents of `error.json`.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub exit_code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<LoanError> for CliError {
    fn from(e: LoanError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<expert_km::data::DataError> for CliError {
    fn from(e: expert_km::data::DataError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<expert_km::kernels::KernelError> for CliError {
    fn from(e: expert_km::kernels::KernelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Kernel(_)
            | EstimatorError::Curve(_)
            | EstimatorError::MissingJudgments => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<BandwidthError> for CliError {
    fn from(e: BandwidthError) -> Self {
        match e {
            BandwidthError::DegenerateNeighborhood { .. }
            | BandwidthError::AllCandidatesDegenerate => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<AsymptoticsError> for CliError {
    fn from(e: AsymptoticsError) -> Self {
        match e {
            AsymptoticsError::InvalidLevel(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ExpertError> for CliError {
    fn from(e: ExpertError) -> Self {
        match e {
            ExpertError::DenominatorUnderflow { .. }
            | ExpertError::Estimator(_)
            | ExpertError::Quadrature(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::Quadrature(_) | SimulationError::Estimator(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}
