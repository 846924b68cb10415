//! Circuit layer: SQUID inductance, flux synthesis, array impedance and the
//! feasibility rules for a discretized array.
//!
//! A dc-SQUID with identical junctions and negligible loop inductance acts,
//! below its plasma frequency and for small phase, as an inductor
//! `L_s = φ₀ / (4π I_c cos(π φ_ext/φ₀))`. Biasing each SQUID so that
//! `cos(π φ_ext/φ₀) = 1 − b(r)/r` reproduces the wormhole light speed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::math::{abs, acos, cos, round, sqrt};
use crate::spacetime::{ShapeFunction, WormholeGeometry};
use crate::time_machine::{tm_flux, TimeMachineConfig};

pub const DEFAULT_THRESHOLD_FLUX_RATIO: f64 = 0.45;
pub const DEFAULT_BIAS_RATIO_CAP: f64 = 0.1;
/// The shortest signal wavelength must span at least this many SQUIDs.
pub const CONTINUUM_WAVELENGTH_SPACINGS: f64 = 10.0;
/// Signals must stay below `plasma_frequency_min / PLASMA_MARGIN`.
pub const PLASMA_MARGIN: f64 = 2.0;

/// Hardware parameters of the array. All SI.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    /// Junction critical current `I_c` (A).
    pub critical_current: f64,
    /// Capacitance to ground per cell `C₀` (F).
    pub ground_capacitance: f64,
    /// SQUID capacitance `C_s` (F), sets the plasma frequency.
    pub squid_capacitance: f64,
    /// SQUID spacing `d` (m).
    pub spacing: f64,
    /// SQUID count; derived from the extent when `None`.
    pub squid_count: Option<usize>,
    /// `I_b / I_c`.
    pub bias_ratio: f64,
    /// Largest `I_b / I_c` still treated as `≪ 1`.
    pub bias_ratio_cap: f64,
    /// Top of the intended signal band (Hz).
    pub signal_band_max: f64,
    /// Critical flux as a fraction of `φ₀`.
    pub threshold_flux_ratio: f64,
    /// Rigid shift of the whole grid along the line (m).
    pub grid_offset: f64,
}

impl ArrayConfig {
    /// `I_c = 10 µA`, `C₀ = 0.1 pF`, `d = 0.05 mm`, threshold `0.45 φ₀`.
    ///
    /// `C_s = 40 fF` and the 50 GHz signal band are not taken from any
    /// measurement; they keep the plasma bound above the band for the
    /// `b₀ = 0.1 mm` profile.
    pub fn reference() -> Self {
        Self {
            critical_current: 10.0e-6,
            ground_capacitance: 0.1e-12,
            squid_capacitance: 40.0e-15,
            spacing: 0.05e-3,
            squid_count: None,
            bias_ratio: 0.01,
            bias_ratio_cap: DEFAULT_BIAS_RATIO_CAP,
            signal_band_max: 50.0e9,
            threshold_flux_ratio: DEFAULT_THRESHOLD_FLUX_RATIO,
            grid_offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("critical_current", self.critical_current),
            ("ground_capacitance", self.ground_capacitance),
            ("squid_capacitance", self.squid_capacitance),
            ("spacing", self.spacing),
            ("bias_ratio_cap", self.bias_ratio_cap),
            ("signal_band_max", self.signal_band_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and > 0",
                });
            }
        }
        if !(self.bias_ratio.is_finite() && self.bias_ratio >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "bias_ratio",
                value: self.bias_ratio,
                reason: "must be finite and >= 0",
            });
        }
        if !(self.threshold_flux_ratio > 0.0 && self.threshold_flux_ratio < 0.5) {
            return Err(Error::InvalidParameter {
                name: "threshold_flux_ratio",
                value: self.threshold_flux_ratio,
                reason: "must lie in (0, 0.5)",
            });
        }
        if !self.grid_offset.is_finite() {
            return Err(Error::InvalidParameter {
                name: "grid_offset",
                value: self.grid_offset,
                reason: "must be finite",
            });
        }
        if let Some(n) = self.squid_count {
            if n < 2 {
                return Err(Error::InvalidParameter {
                    name: "squid_count",
                    value: n as f64,
                    reason: "need at least 2 SQUIDs",
                });
            }
        }
        Ok(())
    }

    /// `2π e² / (φ₀ C₀ I_c)`, the squared impedance ratio at zero flux.
    fn impedance_scale(&self, constants: &PhysicalConstants) -> f64 {
        let e = constants.elementary_charge();
        2.0 * PI * e * e
            / (constants.flux_quantum() * self.ground_capacitance * self.critical_current)
    }
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self::reference()
    }
}

/// `cos(π φ/φ₀)` for a flux in the linear-regime domain `[0, φ₀/2)`.
fn flux_cosine(phi_ext: f64, constants: &PhysicalConstants) -> Result<f64> {
    let ratio = phi_ext / constants.flux_quantum();
    if !(0.0..0.5).contains(&ratio) {
        return Err(Error::Domain {
            what: "phi_ext",
            value: phi_ext,
            reason: "flux must lie in [0, phi0/2); at phi0/2 the inductance is infinite and the \
                     throat is not representable by a biased SQUID in the linear regime",
        });
    }
    Ok(cos(PI * ratio))
}

/// Linear-regime SQUID inductance `φ₀ / (4π I_c cos(π φ/φ₀))` in H.
pub fn squid_inductance(
    phi_ext: f64,
    cfg: &ArrayConfig,
    constants: &PhysicalConstants,
) -> Result<f64> {
    let c = flux_cosine(phi_ext, constants)?;
    Ok(constants.flux_quantum() / (4.0 * PI * cfg.critical_current * c))
}

/// Line speed `c_base sqrt(cos(π φ/φ₀))` for a flux-biased array.
pub fn speed_from_flux(phi_ext: f64, constants: &PhysicalConstants) -> Result<f64> {
    let c = flux_cosine(phi_ext, constants)?;
    Ok(constants.light_speed() * sqrt(c))
}

/// Array impedance over the resistance quantum,
/// `Z_A/R_Q = sqrt(2π e² / (φ₀ C₀ I_c cos(π φ/φ₀)))`.
pub fn impedance_ratio(
    phi_ext: f64,
    cfg: &ArrayConfig,
    constants: &PhysicalConstants,
) -> Result<f64> {
    let c = flux_cosine(phi_ext, constants)?;
    Ok(sqrt(cfg.impedance_scale(constants) / c))
}

/// Flux at which `Z_A/R_Q` reaches one, or `None` if it is already above
/// one at zero flux.
pub fn unit_impedance_flux(cfg: &ArrayConfig, constants: &PhysicalConstants) -> Option<f64> {
    let k = cfg.impedance_scale(constants);
    (k <= 1.0).then(|| constants.flux_quantum() * (acos(k) / PI))
}

/// Flux whose SQUID speed satisfies `c² / c_base² = speed_ratio_squared`.
pub(crate) fn flux_for_speed_ratio_squared(speed_ratio_squared: f64, phi0: f64) -> f64 {
    phi0 * (acos(speed_ratio_squared) / PI)
}

/// Bias flux that reproduces the wormhole light speed at lab coordinate `x`:
/// `(φ₀/π) arccos(1 − b₀²/(|x| + b₀)²)`.
pub fn synthesize_flux_at(x: f64, geom: &WormholeGeometry) -> f64 {
    flux_for_speed_ratio_squared(
        geom.speed_ratio_squared(abs(x)),
        geom.constants().flux_quantum(),
    )
}

/// Half-width of the region where the static profile exceeds
/// `threshold_ratio · φ₀`: `b₀ (1/sqrt(1 − cos(π θ)) − 1)`.
pub fn threshold_half_width(b0: f64, threshold_ratio: f64) -> f64 {
    b0 * (1.0 / sqrt(1.0 - cos(PI * threshold_ratio)) - 1.0)
}

/// Largest `|x|` where [`synthesize_flux_at`] still reaches
/// `threshold_ratio · φ₀`, found by bisection on the synthesized profile.
pub fn threshold_crossing(geom: &WormholeGeometry, threshold_ratio: f64) -> f64 {
    let target = threshold_ratio * geom.constants().flux_quantum();
    if geom.is_flat() || synthesize_flux_at(0.0, geom) < target {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, geom.b0());
    while synthesize_flux_at(hi, geom) >= target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if synthesize_flux_at(mid, geom) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Positions `(n − (N−1)/2) d`, shifted by `d/2` for odd `N` so that no
/// SQUID lands on the throat, then by `offset`.
pub fn grid_positions(count: usize, spacing: f64, offset: f64) -> Vec<f64> {
    let center = (count as f64 - 1.0) / 2.0;
    let odd_shift = if count % 2 == 1 { 0.5 * spacing } else { 0.0 };
    (0..count)
        .map(|n| (n as f64 - center) * spacing + odd_shift + offset)
        .collect()
}

/// Time-machine parameters stamped on a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMachineStamp {
    pub l0: f64,
    pub time: f64,
    pub acceleration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileProvenance {
    pub b0: f64,
    pub constants: PhysicalConstants,
    pub time_machine: Option<TimeMachineStamp>,
    pub label: String,
}

/// Per-SQUID bias flux on a uniform grid. Fluxes are stored in Wb.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxProfile {
    positions: Vec<f64>,
    fluxes: Vec<f64>,
    spacing: f64,
    provenance: ProfileProvenance,
}

impl FluxProfile {
    /// Builds a profile from raw samples, checking the grid and flux range.
    pub fn from_samples(
        positions: Vec<f64>,
        fluxes: Vec<f64>,
        provenance: ProfileProvenance,
    ) -> Result<Self> {
        if positions.len() != fluxes.len() || positions.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "samples",
                value: positions.len() as f64,
                reason: "need at least 2 positions with one flux each",
            });
        }
        let spacing = positions[1] - positions[0];
        if !(spacing > 0.0) {
            return Err(Error::InvalidParameter {
                name: "positions",
                value: spacing,
                reason: "must be strictly increasing",
            });
        }
        for w in positions.windows(2) {
            let step = w[1] - w[0];
            if !(abs(step - spacing) <= 1e-6 * spacing) {
                return Err(Error::InvalidParameter {
                    name: "positions",
                    value: step,
                    reason: "must be uniformly spaced",
                });
            }
        }
        let phi0 = provenance.constants.flux_quantum();
        for (index, (&x, &phi)) in positions.iter().zip(&fluxes).enumerate() {
            if !(phi >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "flux",
                    value: phi,
                    reason: "must be >= 0",
                });
            }
            if phi / phi0 >= 0.5 {
                return Err(Error::Synthesis { index, position: x });
            }
        }
        Ok(Self {
            positions,
            fluxes,
            spacing,
            provenance,
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Fluxes in Wb.
    pub fn fluxes(&self) -> &[f64] {
        &self.fluxes
    }

    pub fn flux_ratios(&self) -> impl Iterator<Item = f64> + '_ {
        let phi0 = self.provenance.constants.flux_quantum();
        self.fluxes.iter().map(move |&f| f / phi0)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn provenance(&self) -> &ProfileProvenance {
        &self.provenance
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.provenance.constants
    }
}

/// Samples the static (or, with `tm`, time-machine) bias flux at time `t`
/// on `N` SQUIDs spaced by `cfg.spacing`.
///
/// `N` comes from `cfg.squid_count` or else `round(2 extent / d)`.
pub fn discretize_profile(
    geom: &WormholeGeometry,
    cfg: &ArrayConfig,
    extent: f64,
    tm: Option<&TimeMachineConfig>,
    t: f64,
) -> Result<FluxProfile> {
    cfg.validate()?;
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::InvalidParameter {
            name: "extent",
            value: extent,
            reason: "half-length must be finite and > 0",
        });
    }
    let d = cfg.spacing;
    let derived = round(2.0 * extent / d) as usize;
    let count = match cfg.squid_count {
        Some(n) => {
            if abs(n as f64 * d - 2.0 * extent) > d {
                return Err(Error::InvalidParameter {
                    name: "squid_count",
                    value: n as f64,
                    reason: "N * d must match 2 * extent to within one spacing",
                });
            }
            n
        }
        None => derived.max(2),
    };

    let positions = grid_positions(count, d, cfg.grid_offset);
    let phi0 = geom.constants().flux_quantum();
    let mut fluxes = Vec::with_capacity(count);
    for (index, &x) in positions.iter().enumerate() {
        let phi = match tm {
            Some(tm) => tm_flux(x, t, geom, tm)?,
            None => synthesize_flux_at(x, geom),
        };
        if phi / phi0 >= 0.5 {
            return Err(Error::Synthesis { index, position: x });
        }
        fluxes.push(phi);
    }

    let (stamp, label) = match tm {
        Some(tm) => {
            let g = tm.acceleration_at(t);
            (
                Some(TimeMachineStamp {
                    l0: tm.l0(),
                    time: t,
                    acceleration: g,
                }),
                format!("b0={:e} m, l0={:e} m, t={:e} s, g={:e} m/s^2", geom.b0(), tm.l0(), t, g),
            )
        }
        None => (None, format!("b0={:e} m, static", geom.b0())),
    };

    Ok(FluxProfile {
        positions,
        fluxes,
        spacing: d,
        provenance: ProfileProvenance {
            b0: geom.b0(),
            constants: *geom.constants(),
            time_machine: stamp,
            label,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

impl Verdict {
    /// 0 pass, 1 warn, 2 fail.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Warn => 1,
            Verdict::Fail => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Warn => "warn",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub above_threshold_count: usize,
    /// `count · d` (m).
    pub above_threshold_width: f64,
    pub max_impedance_ratio: f64,
    /// Highest frequency whose wavelength still spans ten SQUIDs (Hz).
    pub continuum_cutoff: f64,
    pub plasma_frequency_min: f64,
    pub linear_regime_ok: bool,
    /// `threshold_flux_ratio · φ₀` (Wb).
    pub threshold_flux: f64,
    pub impedance_at_threshold: f64,
    /// Flux where `Z_A/R_Q = 1` for this configuration, if any (Wb).
    pub unit_impedance_flux: Option<f64>,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
}

/// Checks a profile against the impedance threshold, the continuum and
/// plasma-frequency limits and the small bias-current condition.
///
/// Fails when more than one SQUID sits above threshold, the bias ratio is
/// above its cap, or the signal band reaches either frequency bound. A
/// single SQUID above threshold, or an impedance ratio above one, warns.
pub fn feasibility(profile: &FluxProfile, cfg: &ArrayConfig) -> FeasibilityReport {
    let constants = profile.constants();
    let phi0 = constants.flux_quantum();
    let threshold_flux = cfg.threshold_flux_ratio * phi0;

    let above_threshold_count = profile
        .fluxes()
        .iter()
        .filter(|&&f| f > threshold_flux)
        .count();
    let above_threshold_width = above_threshold_count as f64 * profile.spacing();

    let mut max_impedance_ratio = 0.0f64;
    let mut plasma_frequency_min = f64::INFINITY;
    for &phi in profile.fluxes() {
        // profile construction guarantees the flux domain
        let z = impedance_ratio(phi, cfg, constants).unwrap_or(f64::INFINITY);
        max_impedance_ratio = max_impedance_ratio.max(z);
        let plasma = squid_inductance(phi, cfg, constants)
            .map(|l| 1.0 / (2.0 * PI * sqrt(l * cfg.squid_capacitance)))
            .unwrap_or(0.0);
        plasma_frequency_min = plasma_frequency_min.min(plasma);
    }

    let continuum_cutoff =
        constants.light_speed() / (CONTINUUM_WAVELENGTH_SPACINGS * profile.spacing());
    let linear_regime_ok = cfg.bias_ratio <= cfg.bias_ratio_cap;
    let impedance_at_threshold =
        impedance_ratio(threshold_flux, cfg, constants).unwrap_or(f64::INFINITY);

    let mut fails = Vec::new();
    let mut warns = Vec::new();
    if above_threshold_count > 1 {
        fails.push(format!(
            "{above_threshold_count} SQUIDs above {:.3} phi0 (width {:e} m)",
            cfg.threshold_flux_ratio, above_threshold_width
        ));
    } else if above_threshold_count == 1 {
        warns.push(format!(
            "single SQUID above {:.3} phi0 (throat SQUID)",
            cfg.threshold_flux_ratio
        ));
    }
    if !linear_regime_ok {
        fails.push(format!(
            "I_b/I_c = {} exceeds linear-regime cap {}",
            cfg.bias_ratio, cfg.bias_ratio_cap
        ));
    }
    if cfg.signal_band_max > continuum_cutoff {
        fails.push(format!(
            "signal band {:e} Hz exceeds continuum cutoff {:e} Hz",
            cfg.signal_band_max, continuum_cutoff
        ));
    }
    if cfg.signal_band_max > plasma_frequency_min / PLASMA_MARGIN {
        fails.push(format!(
            "signal band {:e} Hz exceeds half the minimum plasma frequency {:e} Hz",
            cfg.signal_band_max, plasma_frequency_min
        ));
    }
    if max_impedance_ratio > 1.0 {
        warns.push(format!("max Z_A/R_Q = {max_impedance_ratio} exceeds 1"));
    }

    let verdict = if !fails.is_empty() {
        Verdict::Fail
    } else if !warns.is_empty() {
        Verdict::Warn
    } else {
        Verdict::Pass
    };
    fails.extend(warns);

    FeasibilityReport {
        above_threshold_count,
        above_threshold_width,
        max_impedance_ratio,
        continuum_cutoff,
        plasma_frequency_min,
        linear_regime_ok,
        threshold_flux,
        impedance_at_threshold,
        unit_impedance_flux: unit_impedance_flux(cfg, constants),
        verdict,
        reasons: fails,
    }
}
