use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("explicit rank sequence has {len} entries, stage {stage} requested")]
    RanksExhausted { stage: usize, len: usize },

    #[error("stage {stage} is below the base stage {base}")]
    BelowBaseStage { stage: usize, base: usize },

    #[error("rank plateau r_j = {plateau} not closed below stage {j_max}: census incomplete")]
    CensusIncomplete { plateau: u64, j_max: usize },

    #[error("no stage has rank {plateau}")]
    EmptyPlateau { plateau: u64 },

    #[error("explicit level set would hold {size} positions, cap is {cap}")]
    CapExceeded { size: String, cap: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("cache file {path}: {msg}")]
    Cache { path: PathBuf, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
