use thiserror::Error;

/// Errors raised while validating inputs or solving.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwError {
    #[error("NegativeRadius: request {0} has a negative walking radius")]
    NegativeRadius(u32),
    #[error("SameClusterPickupDropoff: cluster {cluster} holds both pickup and drop-off of request {request}")]
    SameClusterPickupDropoff { cluster: usize, request: u32 },
    #[error("EmptyArea: the space windows of cluster {0} do not intersect")]
    EmptyArea(usize),
    #[error("DuplicateEvent: event {0} appears more than once")]
    DuplicateEvent(String),
    #[error("MissingEvent: event {0} is not assigned to any cluster")]
    MissingEvent(String),
    #[error("NonPositiveSpeed: {0} must be positive")]
    NonPositiveSpeed(&'static str),
    #[error("InconsistentTimings: {0}")]
    InconsistentTimings(String),
    #[error("InfeasiblePattern: no sequence satisfies legitimacy, capacity and position-shift bounds")]
    InfeasiblePattern,
    #[error("NonConvergence: placement stopped after {0} iterations")]
    NonConvergence(usize),
    #[error("GridTooLarge: {0} grid points requested")]
    GridTooLarge(u128),
    #[error("FrozenPointConflict: frozen pickup of request {request} lies outside the area of cluster {cluster}")]
    FrozenPointConflict { request: u32, cluster: usize },
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
}

impl SwError {
    /// True for errors that stem from a malformed scenario rather than an unsolvable one.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            SwError::InfeasiblePattern
                | SwError::NonConvergence(_)
                | SwError::GridTooLarge(_)
                | SwError::InconsistentTimings(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, SwError>;
