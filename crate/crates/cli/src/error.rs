use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {field}: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Core(#[from] treeharm::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{0} scenario(s) disagree with the predicted verdict")]
    Mismatch(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use treeharm::Error as E;
        match self {
            Self::Config { .. } => 2,
            // errors the library raises on bad user input
            Self::Core(
                E::Parameter(_)
                | E::Distinctness { .. }
                | E::UnsupportedOrder(_)
                | E::UnsupportedScenario(_)
                | E::Singularity(_)
                | E::Json(_)
                | E::Csv(_),
            ) => 2,
            Self::Mismatch(_) => 3,
            Self::Core(_) | Self::Io { .. } => 1,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}
