//! Desk-scale laboratory for relativistic cryptography: the prime-field
//! commitment family, the two-prover zero-knowledge protocol for Hamiltonian
//! Cycle with light-cone timing enforcement, coupled nonlocal games, and
//! numerical certification of the consecutive-measurement bounds that carry
//! the quantum soundness argument.
//!
//! Module map:
//! - [`fq`]: arbitrary-precision prime fields and matrices over them.
//! - [`graphs`]: graphs, permutations, directed cycles, Hamiltonicity oracles.
//! - [`quantum`]: dense complex operators and the measurement-disturbance checks.
//! - [`games`]: two-player games, coupled games, exact classical values, CHSH bounds.
//! - [`commitment`]: the field commitment, string/parallel variants, sum-binding ε.
//! - [`spacetime`]: deterministic message timeline with light-cone validation.
//! - [`zkproto`]: the protocol engine, soundness oracle, attack harness, simulator.

pub mod commitment;
pub mod fq;
pub mod games;
pub mod graphs;
pub mod quantum;
pub mod spacetime;
pub mod zkproto;

pub use fq::{FieldElement, FieldModulus, FqMatrix};
pub use graphs::{Cycle, Graph, Permutation};
pub use quantum::{DensityMatrix, Projector, ProjectorFamily, PureState};
pub use spacetime::{AgentId, CausalityVerdict, SpacetimeEvent};
pub use zkproto::{SoundnessParameters, Transcript};

/// RNG used everywhere randomness is consumed; a run is a pure function of
/// its 64-bit seed.
pub type SeededRng = rand_chacha::ChaCha20Rng;

/// Derive an independent per-task stream from a master seed. Streams for
/// distinct indices never overlap.
pub fn subseed(master: u64, index: u64) -> u64 {
    // splitmix64 step
    let mut z = master ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
