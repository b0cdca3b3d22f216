use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Parse(_) | Self::Io(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<bariance::Error> for CliError {
    fn from(e: bariance::Error) -> Self {
        if e.is_numerical() {
            Self::Numerical(e.to_string())
        } else {
            Self::Config(e.to_string())
        }
    }
}

macro_rules! via_library_error {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                bariance::Error::from(e).into()
            }
        })*
    };
}

via_library_error!(
    bariance::EstimatorError,
    bariance::theory::TheoryError,
    bariance::randgen::RandError,
    bariance::montecarlo::MonteCarloError,
    bariance::bench::BenchError,
    bariance::inference::OlsError,
    bariance::inference::KdeError
);
