//! Scenario execution, metric computation, and plot emission around the
//! `magnecko-core` locomotion stack.

pub mod compare;
pub mod controller;
pub mod metrics;
pub mod plots;
pub mod runner;
pub mod scenario;
pub mod transition;
