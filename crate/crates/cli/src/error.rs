use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] colonorm::Error),

    #[error("{0}")]
    Usage(String),

    #[error("frame {id}: {source}")]
    Frame {
        id: usize,
        #[source]
        source: Box<CliError>,
    },
}

pub type CliResult<T> = Result<T, CliError>;

fn core_code(e: &colonorm::Error) -> u8 {
    match e {
        _ if e.is_degenerate_data() => 2,
        colonorm::Error::Io { .. } | colonorm::Error::Format { .. } => 3,
        colonorm::Error::Iteration { source, .. } => core_code(source),
        _ => 1,
    }
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Core(e) => core_code(e),
            CliError::Usage(_) => 1,
            CliError::Frame { source, .. } => source.code(),
        }
    }

    /// 1 for invalid input, 2 for data that leaves nothing to measure, 3 for
    /// file system and format failures.
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

/// Tags an error with the frame it came from.
pub fn in_frame(id: usize) -> impl Fn(CliError) -> CliError {
    move |e| CliError::Frame {
        id,
        source: Box::new(e),
    }
}
