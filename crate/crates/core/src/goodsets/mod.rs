//! Paraboloid touching classification (good sets `G_M` and bad sets `A_M`),
//! bad-set decay fits, the alpha/beta level recursion, and an exhaustive
//! checker for the stacked covering inequality.

mod covering;
mod decay;
mod mask;
mod touch;

pub use covering::{
    cells_from_nodes, covering_lemma_trials, covering_lemma_verify, random_covering_instance, CoveringInstance, CoveringReport, DyadicLattice,
};
pub use decay::{a_decay, a_decay_from_measures, alpha_beta_sequences, ADecay, AlphaBetaParams, AlphaBetaRow, MIN_CUBE_NODES};
pub use mask::{good_set_mask, run_lengths, GoodSetMask, TouchingProfile};
pub use touch::{opening_admits, touches_from_above, touches_from_below, AffineReading, Paraboloid, TouchDomain, TouchSide, OPENING_TOL};
