use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The orbit left the flow's domain (e.g. reached a removed puncture).
    #[error("domain escape in {flow}: {detail}")]
    DomainEscape { flow: String, detail: String },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("order violated at node {node}: lower {lower} >= upper {upper}")]
    OrderViolated { node: usize, lower: f64, upper: f64 },

    #[error("beta undefined for C_phi scale {0}: it vanishes on a sampled orbit point")]
    BetaUndefined(String),

    #[error("scale kind {found} is not valid for notion {notion}")]
    InvalidScaleKind { notion: String, found: String },

    #[error("empty sample cloud")]
    EmptyCloud,

    #[error("conjugacy inverse inconsistent: residual {residual} exceeds {tolerance}")]
    InverseInconsistent { residual: f64, tolerance: f64 },

    #[error("no orbits: v(t_max) = 0")]
    NoOrbits,

    #[error("missing isolation radius metadata for fixture {0}")]
    MissingIsolationRadius(String),

    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
