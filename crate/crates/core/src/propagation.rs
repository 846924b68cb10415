//! Time-domain solver for the discrete LC ladder realised by a flux profile.
//!
//! Layout: SQUID `n` is the series inductor `L_n` between nodes `n` and
//! `n + 1`; every node has a capacitance to ground. With `N` SQUIDs there
//! are `N + 1` nodes, and node `k` sits at `x_k − d/2` (the last one at
//! `x_{N−1} + d/2`).
//!
//! Leapfrog update of the telegrapher equations:
//!
//! ```text
//! I_n^{k+1/2} = I_n^{k−1/2} + dt/L_n (V_n^k − V_{n+1}^k)
//! V_m^{k+1}   = V_m^k + dt/C_m (I_{m−1}^{k+1/2} − I_m^{k+1/2})
//! ```
//!
//! The energy diagnostic is `½ Σ C V_k² + ½ Σ L I^{k−1/2} I^{k+1/2}`. The
//! scheme conserves it exactly when there is no loss, which the naive
//! `½ Σ L I²` with staggered currents does not.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{abs, cos, exp, sqrt};
use crate::spacetime::WormholeGeometry;
use crate::squid_array::{
    feasibility, squid_inductance, ArrayConfig, FeasibilityReport, FluxProfile, Verdict,
    PLASMA_MARGIN,
};

/// Courant factor applied to the smallest cell transit time.
pub const CFL_FACTOR: f64 = 0.5;
/// Gaussian pulses are switched off beyond this many widths from center.
pub const PULSE_SUPPORT_WIDTHS: f64 = 6.0;
/// Spectral extent of a pulse is `carrier + SPECTRAL_SIGMAS / (2π σ)`.
pub const SPECTRAL_SIGMAS: f64 = 3.0;

const WINDOW_THRESHOLD: f64 = 1e-4;
const NOISE_FLOOR_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// First-order absorbing: resistor `sqrt(L_end / C_end)` to ground.
    Matched,
    /// No current leaves the end node.
    Open,
    /// End node held at zero volts.
    Short,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Matched => "matched",
            Boundary::Open => "open",
            Boundary::Short => "short",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderModel {
    inductances: Vec<f64>,
    capacitances: Vec<f64>,
    node_positions: Vec<f64>,
    spacing: f64,
    left: Boundary,
    right: Boundary,
    c_base: f64,
    zero_flux_inductance: f64,
    feasibility: Option<FeasibilityReport>,
    overridden: bool,
    notes: Vec<String>,
}

/// Builds the ladder for `profile`.
///
/// Refuses a profile whose feasibility verdict is fail unless
/// `allow_infeasible` is set. The ground capacitance is rescaled when
/// needed so that a zero-flux cell carries light at exactly `c_base`,
/// i.e. `L_s(0) C₀ = (d / c_base)²`; the rescaling is recorded in
/// [`LadderModel::notes`].
pub fn build_ladder(
    profile: &FluxProfile,
    cfg: &ArrayConfig,
    left: Boundary,
    right: Boundary,
    allow_infeasible: bool,
) -> Result<LadderModel> {
    let report = feasibility(profile, cfg);
    let mut notes = Vec::new();
    let mut overridden = false;
    match report.verdict {
        Verdict::Fail if !allow_infeasible => return Err(Error::Infeasible(report.into())),
        Verdict::Fail => {
            overridden = true;
            notes.push(format!(
                "feasibility override: built despite verdict fail ({})",
                report.reasons.join("; ")
            ));
        }
        Verdict::Warn => notes.push(format!(
            "feasibility warning: {}",
            report.reasons.join("; ")
        )),
        Verdict::Pass => {}
    }

    let constants = profile.constants();
    let inductances = profile
        .fluxes()
        .iter()
        .map(|&phi| squid_inductance(phi, cfg, constants))
        .collect::<Result<Vec<_>>>()?;
    let zero_flux_inductance = squid_inductance(0.0, cfg, constants)?;

    let d = profile.spacing();
    let c_base = constants.light_speed();
    let transit = d / c_base;
    let mut c0 = cfg.ground_capacitance;
    let calibrated = transit * transit / zero_flux_inductance;
    if abs(c0 / calibrated - 1.0) > 1e-9 {
        notes.push(format!(
            "ground capacitance rescaled from {c0:e} F to {calibrated:e} F so that zero-flux cells \
             propagate at c_base = {c_base:e} m/s"
        ));
        c0 = calibrated;
    }

    let mut node_positions: Vec<f64> = profile.positions().iter().map(|&x| x - 0.5 * d).collect();
    node_positions.push(profile.positions()[profile.len() - 1] + 0.5 * d);

    let ladder = LadderModel {
        capacitances: vec![c0; inductances.len() + 1],
        inductances,
        node_positions,
        spacing: d,
        left,
        right,
        c_base,
        zero_flux_inductance,
        feasibility: Some(report),
        overridden,
        notes,
    };
    debug_assert!(ladder
        .local_speeds()
        .iter()
        .all(|&v| v <= c_base * (1.0 + 1e-9)));
    Ok(ladder)
}

impl LadderModel {
    /// Uniform ladder of `cells` identical inductors, first node at `x = 0`.
    pub fn homogeneous(
        cells: usize,
        inductance: f64,
        capacitance: f64,
        spacing: f64,
        left: Boundary,
        right: Boundary,
    ) -> Result<Self> {
        if cells < 2 {
            return Err(Error::InvalidParameter {
                name: "cells",
                value: cells as f64,
                reason: "need at least 2 cells",
            });
        }
        for (name, value) in [
            ("inductance", inductance),
            ("capacitance", capacitance),
            ("spacing", spacing),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and > 0",
                });
            }
        }
        Ok(Self {
            inductances: vec![inductance; cells],
            capacitances: vec![capacitance; cells + 1],
            node_positions: (0..=cells).map(|k| k as f64 * spacing).collect(),
            spacing,
            left,
            right,
            c_base: spacing / sqrt(inductance * capacitance),
            zero_flux_inductance: inductance,
            feasibility: None,
            overridden: false,
            notes: Vec::new(),
        })
    }

    /// Same grid and capacitances with every inductor at its zero-flux value.
    pub fn flat_reference(&self) -> Self {
        Self {
            inductances: vec![self.zero_flux_inductance; self.inductances.len()],
            feasibility: None,
            overridden: false,
            notes: vec![String::from("flat reference of a flux-biased ladder")],
            ..self.clone()
        }
    }

    pub fn with_boundaries(mut self, left: Boundary, right: Boundary) -> Self {
        self.left = left;
        self.right = right;
        self
    }

    pub fn inductances(&self) -> &[f64] {
        &self.inductances
    }

    pub fn capacitances(&self) -> &[f64] {
        &self.capacitances
    }

    pub fn node_positions(&self) -> &[f64] {
        &self.node_positions
    }

    pub fn node_count(&self) -> usize {
        self.capacitances.len()
    }

    pub fn cell_count(&self) -> usize {
        self.inductances.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundaries(&self) -> (Boundary, Boundary) {
        (self.left, self.right)
    }

    pub fn c_base(&self) -> f64 {
        self.c_base
    }

    pub fn feasibility(&self) -> Option<&FeasibilityReport> {
        self.feasibility.as_ref()
    }

    /// True when built from a failing profile under override.
    pub fn is_overridden(&self) -> bool {
        self.overridden
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn nearest_node(&self, x: f64) -> usize {
        let first = self.node_positions[0];
        let k = crate::math::round((x - first) / self.spacing);
        (k.max(0.0) as usize).min(self.node_count() - 1)
    }

    /// `d / sqrt(L_n C)` per cell.
    pub fn local_speeds(&self) -> Vec<f64> {
        self.inductances
            .iter()
            .enumerate()
            .map(|(n, &l)| self.spacing / sqrt(l * self.cell_capacitance(n)))
            .collect()
    }

    fn cell_capacitance(&self, n: usize) -> f64 {
        self.capacitances[n].min(self.capacitances[n + 1])
    }

    /// `CFL_FACTOR · min_n sqrt(L_n C)`.
    pub fn stable_time_step(&self) -> f64 {
        let min = self
            .inductances
            .iter()
            .enumerate()
            .map(|(n, &l)| sqrt(l * self.cell_capacitance(n)))
            .fold(f64::INFINITY, f64::min);
        CFL_FACTOR * min
    }

    fn end_impedance(&self, left: bool) -> f64 {
        if left {
            sqrt(self.inductances[0] / self.capacitances[0])
        } else {
            sqrt(self.inductances[self.cell_count() - 1] / self.capacitances[self.cell_count()])
        }
    }

    fn node_impedance(&self, node: usize) -> f64 {
        let l = if node == 0 {
            self.inductances[0]
        } else if node == self.cell_count() {
            self.inductances[node - 1]
        } else {
            0.5 * (self.inductances[node - 1] + self.inductances[node])
        };
        sqrt(l / self.capacitances[node])
    }
}

/// Gaussian probe pulse, optionally on a carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub center_time: f64,
    /// Standard deviation of the envelope (s).
    pub width: f64,
    /// Carrier frequency (Hz), 0 for baseband.
    pub carrier: f64,
    /// Launched wave amplitude (V).
    pub amplitude: f64,
    pub node: usize,
}

impl PulseSpec {
    pub fn waveform(&self, t: f64) -> f64 {
        let s = (t - self.center_time) / self.width;
        let envelope = self.amplitude * exp(-0.5 * s * s);
        if self.carrier == 0.0 {
            envelope
        } else {
            envelope * cos(2.0 * PI * self.carrier * (t - self.center_time))
        }
    }

    pub fn is_active(&self, t: f64) -> bool {
        abs(t - self.center_time) <= PULSE_SUPPORT_WIDTHS * self.width
    }

    pub fn off_time(&self) -> f64 {
        self.center_time + PULSE_SUPPORT_WIDTHS * self.width
    }

    /// `carrier + 3 / (2π σ)`: three spectral standard deviations (Hz).
    pub fn spectral_extent(&self) -> f64 {
        self.carrier + SPECTRAL_SIGMAS / (2.0 * PI * self.width)
    }

    /// Rejects pulses whose spectrum reaches the continuum cutoff or the
    /// plasma bound of `report`.
    pub fn check_band(&self, report: &FeasibilityReport) -> Result<()> {
        let top = self.spectral_extent();
        if top >= report.continuum_cutoff {
            return Err(Error::InvalidParameter {
                name: "pulse spectral extent",
                value: top,
                reason: "reaches the continuum cutoff of the array",
            });
        }
        if top >= report.plasma_frequency_min / PLASMA_MARGIN {
            return Err(Error::InvalidParameter {
                name: "pulse spectral extent",
                value: top,
                reason: "reaches half the minimum SQUID plasma frequency",
            });
        }
        Ok(())
    }

    fn validate(&self, nodes: usize) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::InvalidParameter {
                name: "pulse width",
                value: self.width,
                reason: "must be finite and > 0",
            });
        }
        if !(self.center_time.is_finite() && self.center_time >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "pulse center_time",
                value: self.center_time,
                reason: "must be finite and >= 0",
            });
        }
        if !(self.carrier.is_finite() && self.carrier >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter {
                name: "pulse carrier/amplitude",
                value: self.carrier,
                reason: "must be finite, carrier >= 0",
            });
        }
        if self.node >= nodes {
            return Err(Error::InvalidParameter {
                name: "pulse node",
                value: self.node as f64,
                reason: "injection node outside the ladder",
            });
        }
        Ok(())
    }
}

/// Voltage record at one node on the solver's uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSeries {
    pub node: usize,
    pub position: f64,
    /// Sample `k` is taken at `k · dt`.
    pub dt: f64,
    pub voltages: Vec<f64>,
}

impl ProbeSeries {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.voltages.len()).map(move |k| self.time(k))
    }

    pub fn len(&self) -> usize {
        self.voltages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voltages.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRecord {
    pub probes: Vec<ProbeSeries>,
    /// Leapfrog energy `E^k` for `k = 0..steps` (J).
    pub energy: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    /// First step with the source switched off for good.
    pub source_off_step: usize,
}

/// External drive applied during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    None,
    /// Current injected into a node (A).
    Current { node: usize, current: f64 },
    /// Source voltage behind the matched termination at the left end.
    LeftSource(f64),
    /// Source voltage behind the matched termination at the right end.
    RightSource(f64),
}

/// Mutable solver state for one run: node voltages `V^k` and branch
/// currents `I^{k−1/2}`.
#[derive(Debug, Clone)]
pub struct LadderState<'a> {
    ladder: &'a LadderModel,
    dt: f64,
    voltages: Vec<f64>,
    currents: Vec<f64>,
    dt_over_l: Vec<f64>,
    dt_over_c: Vec<f64>,
    step: usize,
}

impl<'a> LadderState<'a> {
    pub fn new(ladder: &'a LadderModel, dt: f64) -> Self {
        Self {
            ladder,
            dt,
            voltages: vec![0.0; ladder.node_count()],
            currents: vec![0.0; ladder.cell_count()],
            dt_over_l: ladder.inductances.iter().map(|&l| dt / l).collect(),
            dt_over_c: ladder.capacitances.iter().map(|&c| dt / c).collect(),
            step: 0,
        }
    }

    pub fn voltages(&self) -> &[f64] {
        &self.voltages
    }

    pub fn voltages_mut(&mut self) -> &mut [f64] {
        &mut self.voltages
    }

    pub fn currents(&self) -> &[f64] {
        &self.currents
    }

    pub fn currents_mut(&mut self) -> &mut [f64] {
        &mut self.currents
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    /// Advances one step with `drive` evaluated at the half step. Returns
    /// the energy `E^k` of the state it started from.
    pub fn step(&mut self, drive: Drive) -> Result<f64> {
        let ladder = self.ladder;
        let v = &mut self.voltages;
        let i = &mut self.currents;
        let cells = i.len();

        let mut e_c = 0.0;
        let mut e_l = 0.0;
        for n in 0..cells {
            let old = i[n];
            let new = old + self.dt_over_l[n] * (v[n] - v[n + 1]);
            e_c += ladder.capacitances[n] * v[n] * v[n];
            e_l += ladder.inductances[n] * old * new;
            i[n] = new;
        }
        e_c += ladder.capacitances[cells] * v[cells] * v[cells];
        let energy = 0.5 * (e_c + e_l);
        if !energy.is_finite() {
            return Err(Error::Unstable { step: self.step });
        }

        for k in 1..cells {
            v[k] += self.dt_over_c[k] * (i[k - 1] - i[k]);
        }

        let (mut left_in, mut right_in) = (-i[0], i[cells - 1]);
        let (mut left_src, mut right_src) = (0.0, 0.0);
        match drive {
            Drive::None => {}
            Drive::Current { node, current } => {
                if node == 0 {
                    left_in += current;
                } else if node == cells {
                    right_in += current;
                } else {
                    v[node] += self.dt_over_c[node] * current;
                }
            }
            Drive::LeftSource(vs) => left_src = vs,
            Drive::RightSource(vs) => right_src = vs,
        }

        let end = |boundary: Boundary, v: f64, inflow: f64, vs: f64, dt_c: f64, z: f64| match boundary {
            Boundary::Open => v + dt_c * inflow,
            Boundary::Short => 0.0,
            Boundary::Matched => {
                // trapezoidal resistor current (vs − (v_new + v)/2) / z
                let g = 0.5 * dt_c / z;
                (v * (1.0 - g) + dt_c * (inflow + vs / z)) / (1.0 + g)
            }
        };
        v[0] = end(
            ladder.left,
            v[0],
            left_in,
            left_src,
            self.dt_over_c[0],
            ladder.end_impedance(true),
        );
        v[cells] = end(
            ladder.right,
            v[cells],
            right_in,
            right_src,
            self.dt_over_c[cells],
            ladder.end_impedance(false),
        );

        self.step += 1;
        Ok(energy)
    }
}

/// Runs the pulse experiment with the default CFL step.
pub fn simulate(
    ladder: &LadderModel,
    pulse: &PulseSpec,
    duration: f64,
    probes: &[usize],
) -> Result<SimulationRecord> {
    simulate_with_time_step(ladder, pulse, duration, probes, ladder.stable_time_step())
}

/// As [`simulate`] with an explicit time step; nothing checks `dt` against
/// the stability limit.
pub fn simulate_with_time_step(
    ladder: &LadderModel,
    pulse: &PulseSpec,
    duration: f64,
    probes: &[usize],
    dt: f64,
) -> Result<SimulationRecord> {
    let nodes = ladder.node_count();
    pulse.validate(nodes)?;
    if !(duration.is_finite() && duration > pulse.center_time) {
        return Err(Error::InvalidParameter {
            name: "duration",
            value: duration,
            reason: "must exceed the pulse center time",
        });
    }
    if let Some(&bad) = probes.iter().find(|&&p| p >= nodes) {
        return Err(Error::InvalidParameter {
            name: "probe node",
            value: bad as f64,
            reason: "outside the ladder",
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "must be finite and > 0",
        });
    }

    let steps = libm::ceil(duration / dt) as usize;
    let source_off_step = (libm::ceil(pulse.off_time() / dt - 0.5).max(0.0) as usize).min(steps);
    let (left, right) = ladder.boundaries();
    let cells = ladder.cell_count();
    let thevenin_left = pulse.node == 0 && left == Boundary::Matched;
    let thevenin_right = pulse.node == cells && right == Boundary::Matched;
    let soft_scale = 2.0 / ladder.node_impedance(pulse.node);

    let mut series: Vec<ProbeSeries> = probes
        .iter()
        .map(|&node| {
            let mut voltages = Vec::with_capacity(steps + 1);
            voltages.push(0.0);
            ProbeSeries {
                node,
                position: ladder.node_positions[node],
                dt,
                voltages,
            }
        })
        .collect();
    let mut energy = Vec::with_capacity(steps);

    let mut state = LadderState::new(ladder, dt);
    for k in 0..steps {
        let t_half = (k as f64 + 0.5) * dt;
        let drive = if pulse.is_active(t_half) {
            let s = pulse.waveform(t_half);
            if thevenin_left {
                Drive::LeftSource(2.0 * s)
            } else if thevenin_right {
                Drive::RightSource(2.0 * s)
            } else {
                Drive::Current {
                    node: pulse.node,
                    current: soft_scale * s,
                }
            }
        } else {
            Drive::None
        };
        energy.push(state.step(drive)?);
        for s in &mut series {
            s.voltages.push(state.voltages[s.node]);
        }
    }
    if state.voltages.iter().any(|v| !v.is_finite()) {
        return Err(Error::Unstable { step: steps });
    }

    Ok(SimulationRecord {
        probes: series,
        energy,
        dt,
        steps,
        source_off_step,
    })
}

/// Energy-centroid arrival time of the dominant pulse in `series`.
///
/// The window grows outward from the peak of `V²` while samples stay above
/// `1e-4` of the peak, bridging gaps no longer than the half-maximum
/// half-width (carrier zeros). The peak must exceed ten times the RMS of
/// everything before the window.
pub fn arrival_time(series: &ProbeSeries) -> Result<f64> {
    let v2: Vec<f64> = series.voltages.iter().map(|v| v * v).collect();
    let (peak_at, peak) = v2
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (k, &e)| if e > acc.1 { (k, e) } else { acc });
    if !(peak > 0.0) {
        return Err(Error::NoPulse {
            node: series.node,
            reason: String::from("series is identically zero"),
        });
    }

    let half = 0.5 * peak;
    let half_width = v2[peak_at..].iter().take_while(|&&e| e >= half).count().max(1);
    let threshold = WINDOW_THRESHOLD * peak;

    let mut hi = peak_at;
    for (k, &e) in v2.iter().enumerate().skip(peak_at + 1) {
        if e >= threshold {
            hi = k;
        } else if k - hi > half_width {
            break;
        }
    }
    let mut lo = peak_at;
    for k in (0..peak_at).rev() {
        if v2[k] >= threshold {
            lo = k;
        } else if lo - k > half_width {
            break;
        }
    }

    if lo > 0 {
        let rms = sqrt(v2[..lo].iter().sum::<f64>() / lo as f64);
        if sqrt(peak) <= NOISE_FLOOR_FACTOR * rms {
            return Err(Error::NoPulse {
                node: series.node,
                reason: format!("peak {} V is not above 10x the pre-pulse RMS {rms} V", sqrt(peak)),
            });
        }
    }

    let (weighted, total) = v2[lo..=hi]
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(w, t), (j, &e)| {
            (w + series.time(lo + j) * e, t + e)
        });
    Ok(weighted / total)
}

/// Arrival at `b` minus arrival at `a`.
pub fn time_of_flight(a: &ProbeSeries, b: &ProbeSeries) -> Result<f64> {
    Ok(arrival_time(b)? - arrival_time(a)?)
}

/// Pulse measurement compared with the ray-optics prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct RayValidation {
    pub probe_nodes: (usize, usize),
    pub probe_positions: (f64, f64),
    pub measured_tof: f64,
    pub ray_tof: f64,
    pub abs_discrepancy: f64,
    pub rel_discrepancy: f64,
    /// Same pulse on the zero-flux ladder with the same grid.
    pub flat_measured_tof: f64,
    pub flat_ray_tof: f64,
    /// `measured_tof − flat_measured_tof`.
    pub measured_delay: f64,
    /// `ray_tof − flat_ray_tof`.
    pub predicted_delay: f64,
    /// Lattice group-delay error at the top of the pulse spectrum over
    /// the probe separation.
    pub dispersion_budget: f64,
    pub dt: f64,
    pub steps: usize,
    pub notes: Vec<String>,
}

/// Extra flight time of the discrete ladder over `distance` at frequency
/// `f` relative to the continuum, from the leapfrog dispersion relation
/// `sin(ω dt/2) = (dt/τ) sin(k d/2)` with `τ = d / c`.
pub fn dispersion_delay(distance: f64, c: f64, spacing: f64, dt: f64, f: f64) -> f64 {
    let tau = spacing / c;
    let omega = 2.0 * PI * f;
    let s = libm::sin(0.5 * omega * dt) * tau / dt;
    if 0.5 * omega * dt >= 0.5 * PI || s >= 1.0 {
        return f64::INFINITY;
    }
    let half_kd = libm::asin(s);
    let vg = c * cos(half_kd) / cos(0.5 * omega * dt);
    distance / vg - distance / c
}

/// Launches `pulse` on both `ladder` and its flat reference, measures the
/// time of flight between the probe nodes and compares it with
/// [`WormholeGeometry::traversal_time`] between the probe positions.
///
/// The pulse spectrum is checked against the ladder's feasibility report;
/// an overridden ladder records the violation instead of failing.
pub fn validate_against_ray(
    ladder: &LadderModel,
    geom: &WormholeGeometry,
    probes: (usize, usize),
    pulse: &PulseSpec,
) -> Result<RayValidation> {
    let mut notes = Vec::new();
    if let Some(report) = ladder.feasibility() {
        if let Err(err) = pulse.check_band(report) {
            if ladder.is_overridden() {
                notes.push(format!("pulse band check overridden: {err}"));
            } else {
                return Err(err);
            }
        }
    }

    let xa = ladder.node_positions[probes.0.min(ladder.node_count() - 1)];
    let xb = ladder.node_positions[probes.1.min(ladder.node_count() - 1)];
    let xs = ladder.node_positions[pulse.node.min(ladder.node_count() - 1)];
    let far = if abs(xa - xs) > abs(xb - xs) { xa } else { xb };
    let travel = geom.traversal_time(xs, far).elapsed;
    let duration = 1.2 * (pulse.center_time + travel + 2.0 * PULSE_SUPPORT_WIDTHS * pulse.width);

    let run = simulate(ladder, pulse, duration, &[probes.0, probes.1])?;
    let measured_tof = time_of_flight(&run.probes[0], &run.probes[1])?;

    let flat = ladder.flat_reference();
    let flat_run = simulate(&flat, pulse, duration, &[probes.0, probes.1])?;
    let flat_measured_tof = time_of_flight(&flat_run.probes[0], &flat_run.probes[1])?;

    let c = ladder.c_base();
    let ray_tof = geom.traversal_time(xa, xb).elapsed;
    let flat_ray_tof = abs(xb - xa) / c;
    let abs_discrepancy = abs(measured_tof - ray_tof);

    Ok(RayValidation {
        probe_nodes: probes,
        probe_positions: (xa, xb),
        measured_tof,
        ray_tof,
        abs_discrepancy,
        rel_discrepancy: abs_discrepancy / ray_tof,
        flat_measured_tof,
        flat_ray_tof,
        measured_delay: measured_tof - flat_measured_tof,
        predicted_delay: ray_tof - flat_ray_tof,
        dispersion_budget: dispersion_delay(
            abs(xb - xa),
            c,
            ladder.spacing(),
            run.dt,
            pulse.spectral_extent(),
        ),
        dt: run.dt,
        steps: run.steps,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::default_constants;
    use crate::squid_array::discretize_profile;

    fn unit_ladder(cells: usize, left: Boundary, right: Boundary) -> LadderModel {
        LadderModel::homogeneous(cells, 1.0, 1.0, 1.0, left, right).unwrap()
    }

    #[test]
    fn three_node_hand_computation() {
        let ladder = unit_ladder(2, Boundary::Open, Boundary::Open);
        let mut st = LadderState::new(&ladder, 0.5);
        st.voltages_mut()[0] = 1.0;

        let e0 = st.step(Drive::None).unwrap();
        assert_eq!(e0, 0.5);
        assert_eq!(st.currents(), &[0.5, 0.0]);
        assert_eq!(st.voltages(), &[0.75, 0.25, 0.0]);

        let e1 = st.step(Drive::None).unwrap();
        assert_eq!(e1, 0.5);
        assert_eq!(st.currents(), &[0.75, 0.125]);
        assert_eq!(st.voltages(), &[0.375, 0.5625, 0.0625]);
    }

    #[test]
    fn homogeneous_speed_and_time_step() {
        let ladder = unit_ladder(10, Boundary::Matched, Boundary::Matched);
        assert!(ladder.local_speeds().iter().all(|&v| v == 1.0));
        assert_eq!(ladder.stable_time_step(), 0.5);
        assert_eq!(ladder.nearest_node(3.4), 3);
        assert_eq!(ladder.nearest_node(-7.0), 0);
        assert_eq!(ladder.nearest_node(70.0), 10);
    }

    fn pulse(node: usize) -> PulseSpec {
        PulseSpec {
            center_time: 60.0,
            width: 10.0,
            carrier: 0.0,
            amplitude: 1.0,
            node,
        }
    }

    #[test]
    fn homogeneous_time_of_flight() {
        let ladder = unit_ladder(600, Boundary::Matched, Boundary::Matched);
        let rec = simulate(&ladder, &pulse(0), 500.0, &[100, 300]).unwrap();
        let tof = time_of_flight(&rec.probes[0], &rec.probes[1]).unwrap();
        assert!((tof - 200.0).abs() < 0.02 * 200.0, "{tof}");
        let back = time_of_flight(&rec.probes[1], &rec.probes[0]).unwrap();
        assert_eq!(back, -tof);
        // launched amplitude
        let peak = rec.probes[0].voltages.iter().cloned().fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 0.02, "{peak}");
    }

    #[test]
    fn open_end_echo_keeps_sign_short_end_inverts() {
        for (far, sign) in [(Boundary::Open, 1.0), (Boundary::Short, -1.0)] {
            let ladder = unit_ladder(300, Boundary::Matched, far);
            let rec = simulate(&ladder, &pulse(0), 900.0, &[100]).unwrap();
            let v = &rec.probes[0].voltages;
            let dt = rec.dt;
            // incident reaches node 100 at t ≈ 60 + 100, echo at 60 + 100 + 2·200
            let at = |t: f64| v[(t / dt) as usize];
            assert!((at(160.0) - 1.0).abs() < 0.05);
            assert!((at(560.0) - sign).abs() < 0.05, "{far:?}: {}", at(560.0));
        }
    }

    #[test]
    fn echo_round_trip_is_twice_one_way() {
        let ladder = unit_ladder(400, Boundary::Matched, Boundary::Open);
        let rec = simulate(&ladder, &pulse(0), 1200.0, &[0, 400]).unwrap();
        let one_way = time_of_flight(&rec.probes[0], &rec.probes[1]).unwrap();
        // split the source-node record into outgoing pulse and returning echo
        let split = (600.0 / rec.dt) as usize;
        let mut echo = rec.probes[0].clone();
        echo.voltages[..split].iter_mut().for_each(|v| *v = 0.0);
        let mut out = rec.probes[0].clone();
        out.voltages[split..].iter_mut().for_each(|v| *v = 0.0);
        let round = arrival_time(&echo).unwrap() - arrival_time(&out).unwrap();
        assert!((round - 2.0 * one_way).abs() < 0.01 * round, "{round} vs {one_way}");
    }

    #[test]
    fn energy_conserved_with_reflecting_ends() {
        let ladder = unit_ladder(80, Boundary::Open, Boundary::Short);
        let rec = simulate(&ladder, &pulse(40), 20_000.0, &[]).unwrap();
        let after = &rec.energy[rec.source_off_step..];
        let e0 = after[0];
        assert!(e0 > 0.0);
        let drift = after.iter().map(|e| ((e - e0) / e0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-10, "{drift}");
    }

    #[test]
    fn energy_decays_with_absorbing_ends() {
        let ladder = unit_ladder(80, Boundary::Matched, Boundary::Matched);
        let rec = simulate(&ladder, &pulse(40), 2_000.0, &[]).unwrap();
        let after = &rec.energy[rec.source_off_step..];
        assert!(after.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-13)));
        assert!(after[after.len() - 1] < 1e-3 * after[0]);
    }

    #[test]
    fn oversized_step_is_reported_unstable() {
        let ladder = unit_ladder(50, Boundary::Open, Boundary::Open);
        let err = simulate_with_time_step(&ladder, &pulse(25), 1e5, &[], 2.5).unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
    }

    #[test]
    fn silent_series_has_no_pulse() {
        let s = ProbeSeries {
            node: 3,
            position: 0.0,
            dt: 1.0,
            voltages: vec![0.0; 100],
        };
        assert!(matches!(arrival_time(&s), Err(Error::NoPulse { node: 3, .. })));
        let mut noisy = s.clone();
        for (k, v) in noisy.voltages.iter_mut().take(50).enumerate() {
            *v = if k % 2 == 0 { 0.5 } else { -0.5 };
        }
        noisy.voltages[80] = 2.0;
        assert!(matches!(arrival_time(&noisy), Err(Error::NoPulse { .. })));
    }

    #[test]
    fn carrier_pulse_centroid_bridges_zeros() {
        let p = PulseSpec {
            center_time: 300.0,
            width: 40.0,
            carrier: 0.02,
            amplitude: 1.0,
            node: 0,
        };
        let s = ProbeSeries {
            node: 0,
            position: 0.0,
            dt: 0.25,
            voltages: (0..4000).map(|k| p.waveform(k as f64 * 0.25)).collect(),
        };
        assert!((arrival_time(&s).unwrap() - 300.0).abs() < 1e-3);
    }

    fn reference_profile() -> (FluxProfile, ArrayConfig) {
        let geom = WormholeGeometry::new(1e-4, default_constants()).unwrap();
        let cfg = ArrayConfig::reference();
        (discretize_profile(&geom, &cfg, 10e-3, None, 0.0).unwrap(), cfg)
    }

    #[test]
    fn ladder_from_reference_profile() {
        let (profile, cfg) = reference_profile();
        let ladder = build_ladder(&profile, &cfg, Boundary::Matched, Boundary::Matched, false).unwrap();
        assert_eq!(ladder.cell_count(), 400);
        assert!(ladder.notes().iter().any(|n| n.contains("rescaled")));
        let speeds = ladder.local_speeds();
        let c = 1e8;
        assert!(speeds.iter().all(|&v| v <= c * (1.0 + 1e-9)));
        // innermost cells at |x| = d/2: speed ratio sqrt(0.36) = 0.6
        assert!((speeds[199] / c - 0.6).abs() < 1e-12);
        assert!((speeds[200] / c - 0.6).abs() < 1e-12);
        assert!(speeds[199] == speeds.iter().cloned().fold(f64::INFINITY, f64::min));
        assert_eq!(ladder.node_positions()[200], 0.0);
    }

    #[test]
    fn zero_flux_ladder_runs_at_base_speed() {
        let geom = WormholeGeometry::new(1e-12, default_constants()).unwrap();
        let cfg = ArrayConfig::reference();
        let profile = discretize_profile(&geom, &cfg, 1e-3, None, 0.0).unwrap();
        let ladder = build_ladder(&profile, &cfg, Boundary::Matched, Boundary::Matched, false).unwrap();
        for v in ladder.local_speeds() {
            assert!((v / 1e8 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_profile_needs_override() {
        let geom = WormholeGeometry::new(1e-3, default_constants()).unwrap();
        let cfg = ArrayConfig::reference();
        let profile = discretize_profile(&geom, &cfg, 5e-3, None, 0.0).unwrap();
        let err = build_ladder(&profile, &cfg, Boundary::Matched, Boundary::Matched, false).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        let ladder = build_ladder(&profile, &cfg, Boundary::Matched, Boundary::Matched, true).unwrap();
        assert!(ladder.is_overridden());
        assert!(ladder.notes().iter().any(|n| n.contains("override")));
    }

    #[test]
    fn pulse_band_check() {
        let (profile, cfg) = reference_profile();
        let report = feasibility(&profile, &cfg);
        let ok = PulseSpec {
            center_time: 60e-12,
            width: 10e-12,
            carrier: 0.0,
            amplitude: 1.0,
            node: 0,
        };
        assert!(ok.check_band(&report).is_ok());
        let wide = PulseSpec { width: 1e-12, ..ok };
        assert!(wide.check_band(&report).is_err());
    }

    #[test]
    fn dispersion_delay_vanishes_at_low_frequency() {
        assert!(dispersion_delay(1.0, 1.0, 0.01, 0.005, 1e-6).abs() < 1e-12);
        assert!(dispersion_delay(1.0, 1.0, 0.01, 0.005, 1.0) > 0.0);
        assert!(dispersion_delay(1.0, 1.0, 0.01, 0.005, 40.0).is_infinite());
    }

    fn wormhole_ladder(spacing: f64, allow: bool) -> (LadderModel, WormholeGeometry) {
        let geom = WormholeGeometry::new(1e-4, default_constants()).unwrap();
        let cfg = ArrayConfig {
            spacing,
            ..ArrayConfig::reference()
        };
        let profile = discretize_profile(&geom, &cfg, 12e-3, None, 0.0).unwrap();
        let ladder = build_ladder(&profile, &cfg, Boundary::Matched, Boundary::Matched, allow).unwrap();
        (ladder, geom)
    }

    fn ps_pulse(node: usize) -> PulseSpec {
        PulseSpec {
            center_time: 120e-12,
            width: 20e-12,
            carrier: 0.0,
            amplitude: 1.0,
            node,
        }
    }

    #[test]
    fn wormhole_time_of_flight_tracks_ray() {
        let (ladder, geom) = wormhole_ladder(5e-5, false);
        let probes = (ladder.nearest_node(-5e-3), ladder.nearest_node(5e-3));
        let report = validate_against_ray(&ladder, &geom, probes, &ps_pulse(0)).unwrap();
        assert!(report.rel_discrepancy < 0.1, "{report:?}");
        assert_eq!(report.probe_positions, (-5e-3, 5e-3));
        // slow light: the wormhole never speeds the pulse up
        assert!(report.measured_delay > 0.0);
        // a 2 mm long pulse cannot resolve a 0.1 mm throat; the measured
        // delay stays below the ray value
        assert!(report.measured_delay < report.predicted_delay);
        assert!(report.measured_delay > 0.5 * report.predicted_delay);
    }

    #[test]
    fn reciprocity_on_symmetric_profile() {
        let (ladder, _) = wormhole_ladder(5e-5, false);
        let (a, b) = (ladder.nearest_node(-5e-3), ladder.nearest_node(5e-3));
        let last = ladder.node_count() - 1;
        let fwd = simulate(&ladder, &ps_pulse(0), 400e-12, &[a, b]).unwrap();
        let back = simulate(&ladder, &ps_pulse(last), 400e-12, &[b, a]).unwrap();
        let t1 = time_of_flight(&fwd.probes[0], &fwd.probes[1]).unwrap();
        let t2 = time_of_flight(&back.probes[0], &back.probes[1]).unwrap();
        assert!(((t1 - t2) / t1).abs() < 0.01, "{t1} {t2}");
    }

    #[test]
    fn flat_reference_is_homogeneous() {
        let (ladder, _) = wormhole_ladder(5e-5, false);
        let flat = ladder.flat_reference();
        assert!(flat.inductances().iter().all(|&l| l == flat.inductances()[0]));
        assert_eq!(flat.capacitances(), ladder.capacitances());
        for v in flat.local_speeds() {
            assert!((v / 1e8 - 1.0).abs() < 1e-9);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(6))]

        #[test]
        fn cfl_step_keeps_energy_bounded(b0 in 2e-5f64..1.5e-4, offset in 0.0f64..2.5e-5) {
            let geom = WormholeGeometry::new(b0, default_constants()).unwrap();
            let cfg = ArrayConfig { grid_offset: offset, signal_band_max: 1e10, ..ArrayConfig::reference() };
            let profile = discretize_profile(&geom, &cfg, 1e-3, None, 0.0).unwrap();
            proptest::prop_assume!(feasibility(&profile, &cfg).verdict != Verdict::Fail);
            let ladder = build_ladder(&profile, &cfg, Boundary::Open, Boundary::Short, false)
                .unwrap();
            let dt = ladder.stable_time_step();
            let p = PulseSpec { center_time: 120e-12, width: 20e-12, carrier: 0.0, amplitude: 1.0, node: 10 };
            let rec = simulate(&ladder, &p, 1e6 * dt, &[]).unwrap();
            let e0 = rec.energy[rec.source_off_step];
            let worst = rec.energy[rec.source_off_step..]
                .iter()
                .map(|e| (e - e0) / e0)
                .fold(0.0f64, f64::max);
            proptest::prop_assert!(worst < 1e-6, "{}", worst);
        }

        #[test]
        fn slow_light_ordering(b0 in 2e-5f64..1.5e-4) {
            let geom = WormholeGeometry::new(b0, default_constants()).unwrap();
            let cfg = ArrayConfig::reference();
            let profile = discretize_profile(&geom, &cfg, 4e-3, None, 0.0).unwrap();
            proptest::prop_assume!(feasibility(&profile, &cfg).verdict != Verdict::Fail);
            let ladder = build_ladder(&profile, &cfg, Boundary::Matched, Boundary::Matched, false).unwrap();
            let (a, b) = (ladder.nearest_node(-2e-3), ladder.nearest_node(2e-3));
            let r = validate_against_ray(&ladder, &geom, (a, b), &ps_pulse(0)).unwrap();
            proptest::prop_assert!(r.measured_tof >= r.flat_measured_tof);
        }
    }
}
