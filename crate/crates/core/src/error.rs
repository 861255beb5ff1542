use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("scenario infeasible: UAV {uav} has {available} associated candidates, {required} required")]
    ScenarioInfeasible {
        uav: usize,
        available: usize,
        required: usize,
    },

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("degenerate channel: zero-norm coefficient")]
    DegenerateChannel,

    #[error("invalid action for agent {agent}: {constraint}")]
    InvalidAction { agent: usize, constraint: String },

    #[error("long action phase: slot {slot} {detail}")]
    LongActionPhase { slot: u64, detail: &'static str },

    #[error("environment not reset")]
    NotReset,

    #[error("episode already done")]
    EpisodeDone,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("bad request: {0}")]
    BadRequest(String),
}

impl Error {
    /// Machine-readable code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) | Error::ConfigParse(_) => "INVALID_CONFIG",
            Error::ScenarioInfeasible { .. } => "SCENARIO_INFEASIBLE",
            Error::Domain(_) => "DOMAIN",
            Error::DegenerateChannel => "DEGENERATE_CHANNEL",
            Error::InvalidAction { .. } => "INVALID_ACTION",
            Error::LongActionPhase { .. } => "LONG_ACTION_PHASE",
            Error::NotReset => "NOT_RESET",
            Error::EpisodeDone => "EPISODE_DONE",
            Error::Io(_) => "IO",
            Error::Json(_) | Error::BadRequest(_) => "BAD_REQUEST",
            Error::Metrics(_) => "METRICS",
        }
    }
}
