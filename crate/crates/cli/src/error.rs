use std::fmt;

use cavity_trio::analytic::AnalyticError;
use cavity_trio::config::ConfigError;
use cavity_trio::dynamics::DynamicsError;
use cavity_trio::model::ModelError;
use cavity_trio::noise::NoiseError;
use cavity_trio::stability::StabilityError;
use cavity_trio::tuning::TuningError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Unstable,
    Numerical,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Config,
            message: message.into(),
        }
    }

    pub fn unstable(message: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Unstable,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Numerical,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Config => 2,
            Kind::Unstable => 3,
            Kind::Numerical => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            Kind::Config => "configuration error",
            Kind::Unstable => "unstable scenario",
            Kind::Numerical => "numerical failure",
        };
        write!(f, "{label}: {}", self.message)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(format!("cannot write output: {e}"))
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Model(m) => m.into(),
            other => CliError::numerical(other.to_string()),
        }
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        match e {
            StabilityError::Model(m) => m.into(),
            StabilityError::InvalidArguments(_)
            | StabilityError::MatrixTooLarge(_)
            | StabilityError::RegimeNotCovered => CliError::config(e.to_string()),
            other => CliError::numerical(other.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Model(m) => m.into(),
            DynamicsError::Diverged { .. } => CliError::unstable(e.to_string()),
            DynamicsError::InvalidControls(_) => CliError::config(e.to_string()),
            other => CliError::numerical(other.to_string()),
        }
    }
}

impl From<TuningError> for CliError {
    fn from(e: TuningError) -> Self {
        match e {
            TuningError::Model(m) => m.into(),
            TuningError::Analytic(a) => a.into(),
            TuningError::Stability(s) => s.into(),
            TuningError::Dynamics(d) => d.into(),
            TuningError::UnstableRegion { .. } => CliError::unstable(e.to_string()),
            TuningError::InvalidBracket | TuningError::NoActiveResonator => CliError::config(e.to_string()),
            other => CliError::numerical(other.to_string()),
        }
    }
}

impl From<NoiseError> for CliError {
    fn from(e: NoiseError) -> Self {
        match e {
            NoiseError::Model(m) => m.into(),
            NoiseError::Stability(s) => s.into(),
            NoiseError::NoActiveResonator | NoiseError::InvalidGain => CliError::config(e.to_string()),
            other => CliError::numerical(other.to_string()),
        }
    }
}
