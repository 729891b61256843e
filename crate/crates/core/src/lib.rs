//! Exact computation in the measure algebra of the unit interval.
//!
//! The crate bundles a family of interlocking components:
//!
//! - [`malg`] — rational interval sets in `[0,1)` with exact boolean
//!   operations, the measure metric `d(A,B) = μ(A △ B)`, and
//!   measure-preserving automorphisms realized as interval exchange
//!   transformations;
//! - [`types`] — quantifier-free types of tuples (the vector of atom
//!   measures), type realization, and the orbit distance computed as an
//!   exact optimal-transport problem with Hamming cost;
//! - [`homog`] — constructive automorphism synthesis: partition matching,
//!   transport-optimal maps, and a back-and-forth routine producing an
//!   interval exchange moving one tuple onto another;
//! - [`logic`] — a continuous-logic formula language over the
//!   measure-algebra signature with parser, Lipschitz-modulus bookkeeping,
//!   and an exact evaluator over finite dyadic subalgebras;
//! - [`freegroup`] — reduced words of the free group on two generators,
//!   Cayley-ball enumeration, and compressed Markov operators;
//! - [`kesten`] — exact return probabilities of the simple random walk and
//!   spectral certificates converging to the displacement constant
//!   `sqrt(2 - sqrt(3))`;
//! - [`bernoulli`] — the two-generator Bernoulli shift on cylinder sets,
//!   independence and type-factorization checks, and export of the two
//!   shift generators as dyadic interval exchanges;
//! - [`backforth`] — a generic discrete back-and-forth engine instantiated
//!   for the random graph (BIT presentation) and the dense linear order.

pub mod backforth;
pub mod bernoulli;
pub mod freegroup;
pub mod homog;
pub mod kesten;
pub mod logic;
pub mod malg;
pub mod rat;
pub mod sampling;
pub mod types;

pub use malg::{Iet, MSet};
pub use rat::Q;
pub use types::TypeVector;
