//! Score moments, NNS exponents and a Monte-Carlo cross-check.

mod moments;
mod montecarlo;
mod quadrature;
mod table;
mod tradeoff;

pub use moments::{expectation, moments_interleaving, ScoreMoments, QUADRATURE_TOLERANCE};
pub use montecarlo::monte_carlo_moments;
pub use quadrature::integrate;
pub use table::{reference_distribution, row_from_moments, table_row, TableRow, REFERENCE_ROWS, TABLE_HEADER};
pub use tradeoff::{
    approximation_factor, normalized_dots, tradeoff, tradeoff_for, tradeoff_residual, Regime, TradeoffPoint,
};
