//! Distributed multi-objective optimization by agent negotiation.
//!
//! Agents each own a slice of the decision variables and negotiate a shared
//! Pareto front by exchanging working memories over a simulated network.
//! Fronts are compared by hypervolume against a reference point fixed up
//! front.

pub mod benchmark;
pub mod cohda;
pub mod cpes;
pub mod netsim;
pub mod nsga2;
pub mod pareto;
pub mod problems;
pub mod seeding;
