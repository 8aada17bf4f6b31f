use thiserror::Error;

/// Errors raised by the protocol building blocks and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the domain [0, 1]")]
    Domain { what: &'static str, value: f64 },

    #[error("overhearing duration {duration} s exceeds the maximum {max} s")]
    OverhearDuration { duration: f64, max: f64 },

    #[error("no transmission evidence has been observed yet")]
    NoEvidence,

    #[error("type reduction needs at least one positive membership grade")]
    DegenerateInput,

    #[error("recommender trust must be positive, got {0}")]
    RecommenderTrust(f64),

    #[error("outlier detection is not ready: {0}")]
    NotReady(&'static str),

    #[error("the election game needs at least two players, got {0}")]
    DegenerateGame(usize),

    #[error("node is ineligible: it served as head in round {last_head_round}, window is {window} rounds")]
    Ineligible { last_head_round: u32, window: u32 },

    #[error("invalid membership function: {0}")]
    Membership(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    InvalidConfig(Vec<String>),

    #[error("could not parse definition: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_unit(what: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}
