//! Randomized LP-rounding approximations for Ordered TSP and k-Person TSP
//! Path, with the exact machinery they rest on: a rational simplex with cut
//! separation, preflow-to-branching decomposition, rooted spanning forests,
//! parity correction, and brute-force oracles for checking all of it.

pub mod algorithms;
pub mod flow;
pub mod forest;
pub mod generate;
pub mod instance;
pub mod io;
pub mod lp;
pub mod oracle;
pub mod parity;
pub mod rational;
pub mod rng;

pub use generate::{generate_instance, GeneratorKind, Instance, ProblemKind};
pub use instance::{
    KtsppInstance, MetricInstance, NodeId, OtspInstance, PairedInstance, SolutionPaths,
    SolutionTour, Verdict, WeightedMultigraph,
};
pub use rational::Rational;
