//! Reference implementations for cross-checking the production solvers.
//!
//! Everything here is written for clarity over speed and deliberately shares
//! no code with the main crates: these are the independent oracles the test
//! suites compare against. This crate is a dev-dependency only and is never
//! part of the shipped library.

pub mod flow;
pub mod grid_energy;
pub mod stats;

pub use flow::{brute_force_min_cut, edmonds_karp, RefGraph};
pub use grid_energy::{brute_force_min_energy, energy_of_labels, GridEnergy};
pub use stats::{normal_cdf, weighted_kde_2d};
