//! Classical simulation of operator scrambling in spin chains, measured
//! through the Holevo information of Heisenberg-evolved operators.

pub mod circuit;
pub mod error;
pub mod experiments;
pub mod holevo;
pub mod ising;
pub mod linalg;
pub mod mitigation;
pub mod pauli;
pub mod protocol;
pub mod seed;

pub use error::{Error, Result};
