use std::fmt;

use dea_pkm::calibration::CalibrationError;
use dea_pkm::config::ConfigError;
use dea_pkm::csvio::CsvError;
use dea_pkm::DynamicsError;

/// A failed run. `Usage` exits 2, `Domain` exits 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain { kind: &'static str, chain: Option<usize>, sample: Option<usize>, time: Option<f64>, msg: String },
}

impl Failure {
    pub fn domain(kind: &'static str, msg: impl fmt::Display) -> Self {
        Failure::Domain { kind, chain: None, sample: None, time: None, msg: msg.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Domain { .. } => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "error kind=Usage msg={m:?}"),
            Failure::Domain { kind, chain, sample, time, msg } => {
                write!(f, "error kind={kind}")?;
                if let Some(k) = chain {
                    write!(f, " chain={k}")?;
                }
                if let Some(i) = sample {
                    write!(f, " sample={i}")?;
                }
                if let Some(t) = time {
                    write!(f, " t={t}")?;
                }
                write!(f, " msg={msg:?}")
            }
        }
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        Failure::Domain { kind: e.name(), chain: e.chain(), sample: e.sample(), time: e.time(), msg: e.to_string() }
    }
}

impl From<CsvError> for Failure {
    fn from(e: CsvError) -> Self {
        match e {
            CsvError::Invalid(d) => d.into(),
            CsvError::Io { .. } => Failure::domain("Io", e),
            other => Failure::domain("Csv", other),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::domain("Io", e),
            ConfigError::Invalid(d) => d.into(),
            other => Failure::domain("Config", other),
        }
    }
}

impl From<CalibrationError> for Failure {
    fn from(e: CalibrationError) -> Self {
        match &e {
            CalibrationError::Dynamics(d) => d.clone().into(),
            CalibrationError::InfeasibleDuringFit(d) => Failure::Domain {
                kind: "InfeasibleDuringFit",
                chain: d.chain(),
                sample: d.sample(),
                time: d.time(),
                msg: e.to_string(),
            },
            _ => Failure::domain(e.name(), &e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::domain("Io", e)
    }
}
