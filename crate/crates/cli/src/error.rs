use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed configuration, bad arguments.
    #[error("{0}")]
    Config(String),
    /// Well-formed input with unphysical values, or a failed check.
    #[error("{0}")]
    Validation(String),
    /// A numerical contract broke inside the library.
    #[error("numerical contract violation: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<qutrit_dephasing::Error> for CliError {
    fn from(e: qutrit_dephasing::Error) -> Self {
        use qutrit_dephasing::Error as E;
        match e {
            E::Normalization { .. } | E::Domain { .. } | E::Classification { .. } | E::Precondition(_) => {
                CliError::Validation(e.to_string())
            }
            E::Dimension { .. } | E::NotHermitian { .. } | E::InvalidDensity(_) | E::ChannelIntegrity { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}
