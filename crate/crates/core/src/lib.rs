//! Periodic orbits and Arnold tongues of the drifted standard map
//!
//! The map `x' = x + v − δ − ε f(x)`, `v' = v − δ − ε f(x)` with a
//! trigonometric-polynomial `f` has p/q periodic orbits only for drifts `δ`
//! in a narrow interval (the tongue). This crate
//!
//! * solves for p/q orbits by Newton ([`orbits`]),
//! * computes the drift `Δ(x_0, ε)` at which the orbit through `x_0` exists
//!   and measures tongue widths and their scaling in `ε` ([`tongue`]),
//! * expands `Δ` and `Y` in powers of `ε` with trigonometric-polynomial
//!   coefficients ([`series`]),
//! * integrates the damped, torqued sine-Gordon chain whose equilibria are
//!   those orbits ([`sgchain`]).

pub mod cylmap;
pub mod exec;
pub mod fmt;
pub mod orbits;
pub mod series;
pub mod sgchain;
pub mod tongue;
pub mod trigpoly;

pub use cylmap::{MapParams, PhaseState, RemainderPair};
pub use exec::Execution;
pub use trigpoly::TrigPoly;
