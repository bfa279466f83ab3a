use thiserror::Error;

use crate::optimizer::SearchStats;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quality profile: {0}")]
    InvalidProfile(String),

    #[error("invalid cost model: {0}")]
    InvalidCost(String),

    #[error("invalid revenue model: {0}")]
    InvalidRevenue(String),

    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),

    #[error("case index {index} out of range (mechanism has {cases} cases)")]
    CaseOutOfRange { index: usize, cases: usize },

    #[error("invalid search config: {0}")]
    InvalidSearch(String),

    #[error("search space of {size} allocations exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },

    #[error("no allocation admits collusion-proof, incentive-compatible rewards")]
    NoFeasibleMechanism { stats: SearchStats },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
