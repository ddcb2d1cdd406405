//! Simulation and calculation toolkit for cold atoms in a high-finesse
//! ring-cavity standing-wave dipole trap, probed by recoil-induced resonances.
//!
//! Modules, bottom-up:
//!
//! - [`physics`]: constants, atomic line data, laser-field conversions
//! - [`cavity`]: finesse, linewidth, power buildup, mode volume
//! - [`trap`]: dipole potential, secular frequencies, Hermite-Gauss modes
//! - [`thermal`]: Maxwell-Boltzmann sampling and time-of-flight thermometry
//! - [`rir`]: recoil-induced-resonance spectra and trapped-atom geometry
//! - [`bloch`]: swept two-level Bloch equations and ringing analysis
//! - [`config`], [`report`], [`cli`]: experiment files and the command line

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod bloch;
pub mod cavity;
pub mod cli;
pub mod config;
pub mod error;
pub mod files;
pub mod ode;
pub mod physics;
pub mod plot;
pub mod report;
pub mod rir;
pub mod thermal;
pub mod trap;

pub use error::{Error, Result};
