use std::fmt;

/// CLI failure classes; each maps to one exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flag, config entry, or output path. Exit status 2.
    Validation(String),
    /// A numerical routine failed on valid input. Exit status 1.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attach seed context to a library error and classify it.
pub trait WithSeed<T> {
    fn with_seed(self, seed: u64) -> CliResult<T>;
}

impl<T> WithSeed<T> for priorconflict::Result<T> {
    fn with_seed(self, seed: u64) -> CliResult<T> {
        self.map_err(|e| {
            if e.is_domain() {
                CliError::Validation(e.to_string())
            } else {
                CliError::Numerical(format!(
                    "{e} (base seed {seed}; streams: reference 0, posterior 1, power 2; rerun with --seed {seed})"
                ))
            }
        })
    }
}
