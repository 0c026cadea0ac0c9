use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum SigVolError {
    #[error("alphabet mismatch: d={0} vs d={1}")]
    AlphabetMismatch(u8, u8),
    #[error("scalar (empty-word) coefficient must be zero, got {0}")]
    NonZeroScalarTerm(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid must be strictly increasing")]
    NonIncreasingGrid,
    #[error("ODE blow-up at node {node} (u = {u}), t = {t}: |coefficient| = {magnitude:.3e}")]
    BlowUp {
        node: usize,
        u: String,
        t: f64,
        magnitude: f64,
    },
    #[error("non-finite characteristic function value at node {0}")]
    NonFiniteCharFun(usize),
    #[error("price {price} outside the arbitrage band ({lo}, {hi})")]
    PriceOutsideBounds { price: f64, lo: f64, hi: f64 },
    #[error("implied volatility search failed: {0}")]
    ImpliedVolFailure(String),
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("market data: {0}")]
    MarketData(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SigVolError>;
