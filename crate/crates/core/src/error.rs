use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Too many simulated statistics were NaN or infinite.
    #[error(
        "statistic was non-finite on {count} of {total} reference draws \
         (first at seed {seed}, stream {stream_id})"
    )]
    NonFinite {
        count: usize,
        total: usize,
        seed: u64,
        stream_id: u64,
    },

    /// Rejection sampling accepted too few proposals to be practical.
    #[error("constrained sampler accepted {accepted} of {proposed} proposals; use a reparameterized sampler")]
    LowAcceptance { accepted: usize, proposed: usize },

    /// An error raised while computing one replicate of a power study.
    #[error("power study failed at gamma = {gamma}, replicate {replicate}: {source}")]
    Replicate {
        gamma: f64,
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True when the failure comes from invalid input rather than from the
    /// numerics.
    pub fn is_domain(&self) -> bool {
        match self {
            Error::Domain { .. } => true,
            Error::Replicate { source, .. } => source.is_domain(),
            _ => false,
        }
    }

    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
