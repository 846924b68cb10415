use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::squid_array::FeasibilityReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the model is defined.
    Domain {
        what: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// A configuration value violates its invariant.
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// The flux at SQUID `index` reached the throat value `φ₀/2`.
    Synthesis { index: usize, position: f64 },
    /// Time-machine flux argument exceeded one (local speed above `c_base`).
    Superluminal { position: f64, argument: f64 },
    /// A ladder was requested from a profile whose feasibility verdict is fail.
    Infeasible(Box<FeasibilityReport>),
    /// Non-finite state in the time-domain solver.
    Unstable { step: usize },
    /// A probe series holds no detectable pulse.
    NoPulse { node: usize, reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain {
                what,
                value,
                reason,
            } => write!(f, "{what} = {value:e} out of domain: {reason}"),
            Error::InvalidParameter {
                name,
                value,
                reason,
            } => write!(f, "invalid {name} = {value:e}: {reason}"),
            Error::Synthesis { index, position } => write!(
                f,
                "flux synthesis failed at SQUID {index} (x = {position:e} m): flux reaches \
                 phi0/2, infinite inductance; throat is not representable by a biased SQUID \
                 in the linear regime"
            ),
            Error::Superluminal { position, argument } => write!(
                f,
                "superluminal region not representable at x = {position:e} m \
                 (arccos argument {argument})"
            ),
            Error::Infeasible(report) => {
                write!(f, "profile is infeasible")?;
                for reason in &report.reasons {
                    write!(f, "; {reason}")?;
                }
                Ok(())
            }
            Error::Unstable { step } => {
                write!(f, "solver state became non-finite at step {step}")
            }
            Error::NoPulse { node, reason } => {
                write!(f, "no detectable pulse at node {node}: {reason}")
            }
        }
    }
}

impl core::error::Error for Error {}
