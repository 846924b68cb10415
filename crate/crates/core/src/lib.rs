//! Physics core for simulating 1D traversable-wormhole spacetimes on
//! flux-biased dc-SQUID transmission-line arrays.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`constants`]: flux quantum, resistance quantum and the flat-line light speed.
//! * [`spacetime`]: shape function, lab coordinate, proper distance, effective
//!   light speed, embedding diagram and ray-optics traversal times.
//! * [`squid_array`]: SQUID inductance, flux synthesis, impedance and the
//!   feasibility checks for a discretized array.
//! * [`time_machine`]: accelerated-mouth flux schedules and the closed
//!   timelike curve time-shift budget.
//! * [`propagation`]: a leapfrog solver for the discrete LC ladder with
//!   time-of-flight estimation against the ray prediction.
//!
//! All quantities are SI.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod constants;
mod error;
mod math;
pub mod propagation;
pub mod quadrature;
pub mod spacetime;
pub mod squid_array;
pub mod time_machine;

pub use constants::{default_constants, PhysicalConstants};
pub use error::{Error, Result};
pub use spacetime::{RaySegment, ShapeFunction, Side, WormholeGeometry};
pub use propagation::{
    build_ladder, simulate, time_of_flight, validate_against_ray, Boundary, LadderModel,
    ProbeSeries, PulseSpec, RayValidation, SimulationRecord,
};
pub use squid_array::{
    discretize_profile, feasibility, impedance_ratio, speed_from_flux, squid_inductance,
    synthesize_flux_at, ArrayConfig, FeasibilityReport, FluxProfile, Verdict,
};
pub use time_machine::{
    ctc_budget, form_factor, gamma_factor, mouth_velocity, time_shift, tm_flux,
    AccelerationSegment, TimeMachineConfig, TimeShiftBudget,
};
