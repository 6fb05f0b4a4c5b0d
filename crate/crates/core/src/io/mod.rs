//! Instance formats and generators.

pub mod generate;
pub mod json;
pub mod mps;

pub use generate::{gen_capped_selection, gen_indep_set, gen_set_cover, indep_set_from_edges, preferential_attachment};
pub use json::{read_instance, write_instance};
pub use mps::{parse_mps, write_mps};
