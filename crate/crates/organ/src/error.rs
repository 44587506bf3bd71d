use std::path::{Path, PathBuf};

pub type Result<T, E = OrganError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum OrganError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Checkpoint { path: PathBuf, message: String },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Core(#[from] organ_core::Error),
}

impl OrganError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        OrganError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit status, one per error category.
    pub fn exit_code(&self) -> i32 {
        use organ_core::Error as E;
        match self {
            OrganError::Usage(_) => 2,
            OrganError::Config(_) => 3,
            OrganError::Io { .. } => 4,
            OrganError::Checkpoint { .. } => 5,
            OrganError::Parse { .. } => 6,
            OrganError::Diverged(_) => 7,
            OrganError::Core(e) => match e {
                E::Config(_) | E::UnknownObjective(_) | E::Parameter(_) => 3,
                E::Usage(_) => 2,
                E::ReservedCharacter { .. } | E::UnknownCharacter(_) | E::TooLong { .. } | E::EmptyCorpus | E::Format(_) => 6,
                _ => 1,
            },
        }
    }
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| OrganError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| OrganError::io(path, e))
}

/// Writes through a sibling temp file so a failed run never leaves a
/// half-written artifact.
pub fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| OrganError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| OrganError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| OrganError::io(path, e))
}
