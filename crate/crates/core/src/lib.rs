//! Simulator for an expectation-value quantum computer restricted to the
//! measurements an NMR spectrometer can make.
//!
//! The crate covers Boolean oracle functions and their promise classes
//! ([`funcspace`]), dense spin-1/2 operators ([`spinops`]), the starting
//! density matrices ([`states`]), the expectation/balancedness engine and the
//! classification protocols ([`engine`]), the structure of permutation
//! invariant measurement operators ([`measure`]), the classical adversary
//! bound ([`adversary`]) and the time-domain signal ([`timedomain`]).

pub mod adversary;
pub mod engine;
pub mod error;
pub mod funcspace;
pub mod measure;
pub mod spinops;
pub mod states;
pub mod timedomain;

pub use error::{Error, Result};
pub use funcspace::{BoolFunc, FunctionClass};
pub use spinops::{Axis, EigenSpectrum, Operator};
pub use states::{DensityMatrix, SpinSystem};
pub use engine::{Decision, Resolution, Verdict};
