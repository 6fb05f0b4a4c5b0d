//! Learning-guided partial variable assignment for mixed integer programs.

pub mod diving;
pub mod error;
pub mod eval;
pub mod io;
pub mod mip;
pub mod model;
pub mod par;
pub mod rng;
pub mod tal;
