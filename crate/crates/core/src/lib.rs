//! Integrable Hamiltonian systems on the dual of the deformed Lie algebra
//! so_{lambda,alpha}(5): Lie-Poisson dynamics, closed-form quadrature
//! solutions on invariant submanifolds, momentum maps to so(5) and sl(2,R),
//! coadjoint orbit classification, and geodesic flows on quadrics.

pub mod algebra;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod lift;
pub mod linalg;
pub mod numeric;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
