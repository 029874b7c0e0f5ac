//! Wave-packet pairings against tau-scaled test packets on uniform grids, with
//! order estimation and checks of how pseudodifferential operators,
//! diffeomorphisms and a constant-speed half-wave propagator act on the
//! leading pairing behavior.
//!
//! Pairings are bilinear. Operators are applied by duality: the transpose
//! multiplier acts on the smooth test packet, so point masses and jumps never
//! need to be sampled.

mod distribution;
mod error;
mod grid;
mod laws;
mod operator;
mod packet;

pub use distribution::{
    fio_propagate_constant_speed, pair_packet, pair_packet_exact, pair_packet_quadrature, pair_with,
    psido_apply, Distribution, JumpProfile, SampledDistribution,
};
pub use error::{Error, Result};
pub use grid::{Grid, Point};
pub use laws::{
    estimate_order, fit_grid, fit_log_log, off_graph_order, verify_fio_symbol_extraction,
    verify_psido_symbol_law, verify_pullback_law, Diffeo, FioReport, HalfWave, LogFit,
    OrderEstimate, PullbackReport, SymbolLawReport,
};
pub use operator::{Monomial, Multiplier};
pub use packet::{default_ladder, Envelope, WavePacket};
