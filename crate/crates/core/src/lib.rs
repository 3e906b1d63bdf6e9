//! Conservative belief updating in misspecified finite models.
//!
//! An agent holds a belief over a finite family of likelihoods that need not
//! contain the true distribution, and moves it towards the Bayesian
//! posterior by a fraction `γ_n` after each observation. This crate provides
//! the update rules, the geometry of the mean field `H`, the decomposition of
//! its zero set into convex components, and simulation of the resulting
//! belief processes.

pub mod catalog;
pub mod components;
pub mod dynamics;
pub mod geometry;
mod hull;
pub mod io;
pub mod linalg;
pub mod literal;
pub mod model;
pub mod schedule;
pub mod update;
