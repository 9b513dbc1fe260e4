//! Exact linear programming and the path-cover relaxation.

mod ktspp;
pub mod simplex;

pub use ktspp::{
    build_ktspp_base_lp, separate, solve_ktspp_lp, ArcValue, CutCertificate, LpLayout, LpOptions, LpSolution,
    SolveLpError,
};
pub use simplex::{simplex_solve, LpError, LpPoint, LpProblem, LpStatus, Sense, SimplexOptions};
