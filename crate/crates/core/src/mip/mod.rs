//! Exact MIP machinery: instances, the simplex LP solver and branch-and-bound.

pub mod bnb;
pub mod clock;
pub mod instance;
pub mod lp;

pub use bnb::{solve_mip, solve_mip_opts, solve_mip_with, solves_on_this_thread, Incumbent, MipOptions, SolveMode, SolveStatus, SolveTrace};
pub use clock::{ClockKind, Stopwatch};
pub use instance::{Assignment, InstanceBuilder, MipInstance, PartialAssignment, Sense};
pub use lp::{solve_lp, solve_lp_with, solve_lp_with_bounds, LpOptions, LpResult, LpStatus};
