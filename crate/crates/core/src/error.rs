use thiserror::Error;

use crate::corpus::CorpusError;
use crate::dac::DacError;
use crate::embed_store::StoreError;
use crate::eval::EvalError;
use crate::knn::IndexError;
use crate::miner::MineError;
use crate::pooling::PoolingError;

/// Crate-level error. Every variant carries the name of the module that
/// raised it, so a failure can be traced back without a backtrace.
#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("embed_store: {0}")]
    Store(#[from] StoreError),
    #[error("pooling: {0}")]
    Pooling(#[from] PoolingError),
    #[error("knn: {0}")]
    Index(#[from] IndexError),
    #[error("miner: {0}")]
    Mine(#[from] MineError),
    #[error("dac: {0}")]
    Dac(#[from] DacError),
    #[error("eval: {0}")]
    Eval(#[from] EvalError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
