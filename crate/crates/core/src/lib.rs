//! Core algorithms for a quadrupedal magnetic climbing robot simulator.
//!
//! The crate is organised around a single rigid body dynamics (SRBD) model
//! with quaternion attitude, a crawl-gait contact scheduler with
//! electro-permanent magnet switching, a multiple-shooting SQP model
//! predictive controller with magnetic friction cones, and a closed-loop
//! plant. IO, scenario files, and the CLI live in the companion
//! `magnecko-cli` crate; this crate is `no_std`-compatible (with `alloc`).

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dynamics;
pub mod gait;
pub mod kinematics;
pub mod model;
pub mod mpc;
pub mod sim;
pub mod spatial;
pub mod terrain;
