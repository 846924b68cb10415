//! One function per subcommand. Each writes its files into the output
//! directory and returns what it wrote plus the process exit status.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use wormline_core::propagation::{
    simulate, time_of_flight, validate_against_ray, Boundary, LadderModel, PulseSpec,
    RayValidation, SimulationRecord,
};
use wormline_core::squid_array::{threshold_crossing, threshold_half_width};
use wormline_core::{
    build_ladder, discretize_profile, feasibility, impedance_ratio, squid_inductance,
    synthesize_flux_at, ArrayConfig, Error as CoreError, FeasibilityReport, FluxProfile,
    TimeMachineConfig, WormholeGeometry,
};

use crate::config::{ConfigError, Format, RunConfig, SourceSide};
use crate::table::{to_pretty, write_text, Cell, Table, TableError};

/// The traversal time quoted for the time-machine region.
pub const QUOTED_TRAVERSAL_S: f64 = 0.04e-9;
/// The quoted delay after 10 cm of line.
pub const QUOTED_DELAY_S: f64 = 1e-12;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Core {
        context: String,
        source: CoreError,
    },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("{0}")]
    Usage(String),
}

fn core(context: impl Into<String>) -> impl FnOnce(CoreError) -> CliError {
    let context = context.into();
    move |source| CliError::Core { context, source }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub exit_code: i32,
}

/// Resolved config plus where to put things.
#[derive(Debug)]
pub struct Run {
    pub cfg: RunConfig,
    pub hash: String,
    pub out_dir: PathBuf,
}

impl Run {
    pub fn new(cfg: RunConfig, out_override: Option<&Path>, format: Option<Format>) -> Result<Self, CliError> {
        let mut cfg = cfg;
        if let Some(f) = format {
            cfg.output.format = f;
        }
        if let Some(dir) = out_override {
            cfg.output.directory = dir.display().to_string();
        }
        let out_dir = PathBuf::from(&cfg.output.directory);
        fs::create_dir_all(&out_dir).map_err(|source| TableError::Io {
            path: out_dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            hash: cfg.short_hash(),
            cfg,
            out_dir,
        })
    }

    pub fn path(&self, stem: &str, ext: &str) -> PathBuf {
        self.out_dir.join(format!("{stem}-{}.{ext}", self.hash))
    }

    fn format(&self) -> Format {
        self.cfg.output.format
    }

    fn write_json(&self, out: &mut Outcome, stem: &str, value: &Value) -> Result<(), CliError> {
        self.write_json_as(out, self.path(stem, "json"), value)
    }

    fn write_json_as(&self, out: &mut Outcome, path: PathBuf, value: &Value) -> Result<(), CliError> {
        write_text(&path, &to_pretty(value))?;
        out.files.push(path);
        Ok(())
    }

    /// CSV plus a `.meta.json` sidecar, or one JSON document.
    fn write_table(
        &self,
        out: &mut Outcome,
        stem: &str,
        table: &Table,
        provenance: &Value,
        rows_key: &str,
    ) -> Result<(), CliError> {
        match self.format() {
            Format::Csv => {
                let path = self.path(stem, "csv");
                write_text(&path, &table.to_csv())?;
                out.files.push(path);
                self.write_json_as(out, self.path(stem, "meta.json"), provenance)?;
            }
            Format::Json => {
                let path = self.path(stem, "json");
                write_text(&path, &table.to_json(provenance, rows_key))?;
                out.files.push(path);
            }
        }
        Ok(())
    }

    fn write_config(&self, out: &mut Outcome) -> Result<(), CliError> {
        let path = self.path("config", "json");
        let mut text = self.cfg.to_json();
        text.push('\n');
        write_text(&path, &text)?;
        out.files.push(path);
        Ok(())
    }

    fn base_provenance(&self) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("config_hash".into(), json!(self.hash));
        m
    }
}

fn table_extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned())
}

fn micrometre_label(x: f64) -> String {
    let um = (x * 1e9).round() / 1e3;
    format!("{um}um")
}

/// Rows `index, x_m, flux_Wb, flux_over_phi0, L_s_H, impedance_ratio[, t_s]`.
pub fn profile_table(profile: &FluxProfile, cfg: &ArrayConfig, t: Option<f64>) -> Result<Table, CliError> {
    let mut columns = vec!["index", "x_m", "flux_Wb", "flux_over_phi0", "L_s_H", "impedance_ratio"];
    if t.is_some() {
        columns.push("t_s");
    }
    let consts = profile.constants();
    let phi0 = consts.flux_quantum();
    let mut table = Table::new(columns);
    for (n, (&x, &phi)) in profile.positions().iter().zip(profile.fluxes()).enumerate() {
        let l = squid_inductance(phi, cfg, consts).map_err(core(format!("SQUID {n}")))?;
        let z = impedance_ratio(phi, cfg, consts).map_err(core(format!("SQUID {n}")))?;
        let mut row = vec![Cell::from(n), x.into(), phi.into(), (phi / phi0).into(), l.into(), z.into()];
        if let Some(t) = t {
            row.push(t.into());
        }
        table.push(row);
    }
    Ok(table)
}

fn profile_provenance(run: &Run, profile: &FluxProfile, cfg: &ArrayConfig) -> Value {
    let p = profile.provenance();
    let mut m = run.base_provenance();
    m.insert("label".into(), json!(p.label));
    m.insert("b0_m".into(), json!(p.b0));
    m.insert("c_base_m_per_s".into(), json!(p.constants.light_speed()));
    m.insert("flux_quantum_Wb".into(), json!(p.constants.flux_quantum()));
    m.insert("spacing_m".into(), json!(profile.spacing()));
    m.insert("squid_count".into(), json!(profile.len()));
    m.insert("threshold_flux_ratio".into(), json!(cfg.threshold_flux_ratio));
    m.insert(
        "threshold_flux_Wb".into(),
        json!(cfg.threshold_flux_ratio * p.constants.flux_quantum()),
    );
    if let Some(tm) = &p.time_machine {
        m.insert(
            "time_machine".into(),
            json!({"l0_m": tm.l0, "t_s": tm.time, "g_m_per_s2": tm.acceleration}),
        );
    }
    Value::Object(m)
}

fn synthesis_context(b0: f64) -> String {
    format!("flux synthesis for b0 = {b0:e} m")
}

/// Static profiles for every throat radius in the sweep, plus a summary
/// with the threshold line and the width of the region above it.
pub fn flux_profile(run: &Run) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    run.write_config(&mut out)?;
    let cfg = run.cfg.array_config();
    let extent = run.cfg.experiment.profile_extent_m;
    let mut entries = Vec::new();
    for &b0 in &run.cfg.geometry.b0_sweep_m {
        let geom = run.cfg.geometry_for(b0)?;
        let profile = discretize_profile(&geom, &cfg, extent, None, 0.0).map_err(core(synthesis_context(b0)))?;
        let table = profile_table(&profile, &cfg, None)?;
        let stem = format!("flux-profile-b0_{}", micrometre_label(b0));
        run.write_table(&mut out, &stem, &table, &profile_provenance(run, &profile, &cfg), "samples")?;

        let report = feasibility(&profile, &cfg);
        let max_ratio = profile.flux_ratios().fold(0.0, f64::max);
        entries.push(json!({
            "b0_m": b0,
            "file": file_name(&run.path(&stem, table_extension(run.format()))),
            "squid_count": profile.len(),
            "max_flux_over_phi0": max_ratio,
            "above_threshold_count": report.above_threshold_count,
            "above_threshold_width_sampled_m": report.above_threshold_width,
            "above_threshold_width_m": 2.0 * threshold_crossing(&geom, cfg.threshold_flux_ratio),
            "above_threshold_width_closed_form_m": 2.0 * threshold_half_width(b0, cfg.threshold_flux_ratio),
            "verdict": report.verdict.as_str(),
        }));
    }
    let consts = run.cfg.constants()?;
    let summary = json!({
        "config_hash": run.hash,
        "threshold_flux_ratio": cfg.threshold_flux_ratio,
        "threshold_flux_Wb": cfg.threshold_flux_ratio * consts.flux_quantum(),
        "throat_flux_over_phi0": synthesize_flux_at(0.0, &run.cfg.geometry()?) / consts.flux_quantum(),
        "profiles": entries,
    });
    run.write_json(&mut out, "flux-profile-summary", &summary)?;
    Ok(out)
}

pub fn feasibility_json(report: &FeasibilityReport, cfg: &ArrayConfig, run: &Run, profile: &FluxProfile) -> Value {
    let consts = profile.constants();
    json!({
        "config_hash": run.hash,
        "b0_m": profile.provenance().b0,
        "spacing_m": profile.spacing(),
        "squid_count": profile.len(),
        "verdict": report.verdict.as_str(),
        "exit_code": report.verdict.exit_code(),
        "reasons": report.reasons,
        "above_threshold_count": report.above_threshold_count,
        "above_threshold_width_m": report.above_threshold_width,
        "max_impedance_ratio": report.max_impedance_ratio,
        "continuum_cutoff_hz": report.continuum_cutoff,
        "plasma_frequency_min_hz": report.plasma_frequency_min,
        "signal_band_max_hz": cfg.signal_band_max,
        "linear_regime_ok": report.linear_regime_ok,
        "bias_ratio": cfg.bias_ratio,
        "threshold_flux_ratio": cfg.threshold_flux_ratio,
        "threshold_flux_Wb": report.threshold_flux,
        "impedance_ratio_at_threshold": report.impedance_at_threshold,
        "unit_impedance_flux_over_phi0": report.unit_impedance_flux.map(|f| f / consts.flux_quantum()),
        "impedance_note": format!(
            "Z_A/R_Q at {} phi0 evaluates to {:.4e}; the quoted value there is about 1. Z_A/R_Q reaches 1 only at {} phi0",
            cfg.threshold_flux_ratio,
            report.impedance_at_threshold,
            report.unit_impedance_flux.map_or(String::from("(never)"), |f| format!("{:.6}", f / consts.flux_quantum())),
        ),
    })
}

/// Discretizes the main profile and reports; exit 0 pass, 1 warn, 2 fail.
pub fn feasibility_cmd(run: &Run) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    run.write_config(&mut out)?;
    let geom = run.cfg.geometry()?;
    let cfg = run.cfg.array_config();
    let profile = discretize_profile(&geom, &cfg, run.cfg.experiment.profile_extent_m, None, 0.0)
        .map_err(core(synthesis_context(geom.b0())))?;
    let report = feasibility(&profile, &cfg);
    run.write_json(&mut out, "feasibility", &feasibility_json(&report, &cfg, run, &profile))?;
    out.exit_code = report.verdict.exit_code();
    Ok(out)
}

/// A time at which the schedule holds `g` steadily.
fn time_holding(tm: &TimeMachineConfig, g: f64) -> f64 {
    let mut start = 0.0;
    for seg in tm.schedule() {
        if seg.acceleration == g {
            return start + 0.5 * seg.duration.max(tm.ramp_time());
        }
        start += seg.duration;
    }
    tm.total_duration() + tm.ramp_time()
}

pub fn time_machine(run: &Run) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let tm = run
        .cfg
        .time_machine_config()?
        .ok_or_else(|| ConfigError {
            path: String::from("time_machine"),
            message: String::from("block required for the time-machine command"),
        })?;
    let section = run.cfg.time_machine.as_ref().expect("checked above");
    run.write_config(&mut out)?;
    let geom = run.cfg.geometry()?;
    let cfg = run.cfg.array_config();
    let c = geom.c_base();

    for (k, g) in tm.distinct_accelerations().into_iter().enumerate() {
        let t = time_holding(&tm, g);
        let profile = discretize_profile(&geom, &cfg, run.cfg.experiment.profile_extent_m, Some(&tm), t)
            .map_err(core(format!("time-machine flux for g = {g:e} m/s^2")))?;
        let table = profile_table(&profile, &cfg, Some(t))?;
        let mut prov = profile_provenance(run, &profile, &cfg);
        prov["g_m_per_s2"] = json!(g);
        prov["g_over_c2_per_l0"] = json!(g * tm.l0() / (c * c));
        run.write_table(&mut out, &format!("tm-flux-{k}"), &table, &prov, "samples")?;
    }

    let schedule = json!({
        "l0_m": section.l0_m,
        "ramp_time_s": section.ramp_time_s,
        "schedule": section.schedule.iter()
            .map(|s| json!({"duration_s": s.duration_s, "g_m_per_s2": s.g_m_per_s2}))
            .collect::<Vec<_>>(),
    });
    run.write_json(&mut out, "tm-schedule", &schedule)?;

    let x0 = section.x0_m.unwrap_or_else(|| geom.x_from_proper_distance(tm.l0()));
    let total = section.total_time_s.unwrap_or_else(|| tm.total_duration());
    let budget = wormline_core::ctc_budget(&geom, &tm, &cfg, total, (-x0, x0))
        .map_err(core("time-shift budget"))?;
    let closed_form = 2.0 * geom.proper_distance(x0) / c;
    let x0_for_quote = geom.x_from_proper_distance(0.5 * QUOTED_TRAVERSAL_S * c);
    let max_group = tm
        .schedule()
        .iter()
        .map(|s| 2.0 * s.acceleration.abs() * tm.l0() / (c * c))
        .fold(0.0, f64::max);
    let report = json!({
        "config_hash": run.hash,
        "gamma": budget.gamma,
        "mouth_velocity_m_per_s": budget.mouth_velocity,
        "total_time_s": total,
        "time_shift_s": budget.shift,
        "x0_m": x0,
        "traversal_time_s": budget.traversal,
        "traversal_closed_form_s": closed_form,
        "ctc_possible": budget.ctc_possible,
        "geometry_preservation_max": max_group,
        "quoted_traversal_s": QUOTED_TRAVERSAL_S,
        "x0_for_quoted_traversal_m": x0_for_quote,
        "traversal_note": format!(
            "traversal across [-x0, x0] with x0 = {x0:e} m is {:.4e} s (closed form 2 l(x0)/c = {closed_form:.4e} s); \
             the quoted 0.04 ns needs x0 = {x0_for_quote:.4e} m, which is not tied to l0",
            budget.traversal
        ),
    });
    run.write_json(&mut out, "tm-budget", &report)?;
    Ok(out)
}

/// Node indices nearest to the requested probe positions.
fn probe_nodes(ladder: &LadderModel, probes: [f64; 2]) -> (usize, usize) {
    (ladder.nearest_node(probes[0]), ladder.nearest_node(probes[1]))
}

fn pulse_for(run: &Run, ladder: &LadderModel) -> PulseSpec {
    let p = &run.cfg.experiment.pulse;
    PulseSpec {
        center_time: p.center_time_s,
        width: p.width_s,
        carrier: p.carrier_hz,
        amplitude: p.amplitude_v,
        node: match run.cfg.experiment.source {
            SourceSide::Left => 0,
            SourceSide::Right => ladder.node_count() - 1,
        },
    }
}

fn ladder_for(
    geom: &WormholeGeometry,
    cfg: &ArrayConfig,
    extent: f64,
    boundaries: (Boundary, Boundary),
    allow: bool,
) -> Result<LadderModel, CliError> {
    let profile = discretize_profile(geom, cfg, extent, None, 0.0).map_err(core(synthesis_context(geom.b0())))?;
    build_ladder(&profile, cfg, boundaries.0, boundaries.1, allow).map_err(core("ladder"))
}

fn validation_json(v: &RayValidation) -> Value {
    json!({
        "probe_nodes": [v.probe_nodes.0, v.probe_nodes.1],
        "probe_positions_m": [v.probe_positions.0, v.probe_positions.1],
        "measured_tof_s": v.measured_tof,
        "ray_tof_s": v.ray_tof,
        "abs_discrepancy_s": v.abs_discrepancy,
        "rel_discrepancy": v.rel_discrepancy,
        "flat_measured_tof_s": v.flat_measured_tof,
        "flat_ray_tof_s": v.flat_ray_tof,
        "measured_delay_s": v.measured_delay,
        "predicted_delay_s": v.predicted_delay,
        "dispersion_budget_s": v.dispersion_budget,
        "dt_s": v.dt,
        "steps": v.steps,
        "notes": v.notes,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub spacing: f64,
    pub cells: usize,
    pub overridden: bool,
    pub validation: RayValidation,
}

/// Halves the spacing `halvings` times, re-synthesizing the profile each
/// time, and runs the ray comparison on every grid in parallel. Grids
/// that fail feasibility are built under override and flagged.
pub fn convergence_study(
    geom: &WormholeGeometry,
    cfg: &ArrayConfig,
    extent: f64,
    probes: [f64; 2],
    pulse: PulseSpec,
    halvings: usize,
) -> Result<Vec<ConvergenceRow>, CliError> {
    let spacings: Vec<f64> = (0..=halvings).map(|k| cfg.spacing / f64::from(1u32 << k)).collect();
    let results: Vec<Result<ConvergenceRow, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = spacings
            .iter()
            .map(|&d| {
                scope.spawn(move || {
                    let cfg = ArrayConfig { spacing: d, ..cfg.clone() };
                    let ladder = ladder_for(geom, &cfg, extent, (Boundary::Matched, Boundary::Matched), true)?;
                    let pulse = PulseSpec {
                        node: if pulse.node == 0 { 0 } else { ladder.node_count() - 1 },
                        ..pulse
                    };
                    let probes = probe_nodes(&ladder, probes);
                    let validation = validate_against_ray(&ladder, geom, probes, &pulse)
                        .map_err(core(format!("ray validation at d = {d:e} m")))?;
                    Ok(ConvergenceRow {
                        spacing: d,
                        cells: ladder.cell_count(),
                        overridden: ladder.is_overridden(),
                        validation,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("convergence worker panicked")).collect()
    });
    results.into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct CoarseDelay {
    pub probe_m: f64,
    pub measured_one_way: f64,
    pub predicted_one_way: f64,
    pub validation: RayValidation,
}

/// Symmetric through-traversal between `±probe`; half the measured excess
/// over the flat ladder is the one-way delay from `probe` to the throat.
pub fn coarse_delay(
    geom: &WormholeGeometry,
    cfg: &ArrayConfig,
    probe: f64,
    pulse: PulseSpec,
    allow: bool,
) -> Result<CoarseDelay, CliError> {
    let extent = probe * 1.1;
    let ladder = ladder_for(geom, cfg, extent, (Boundary::Matched, Boundary::Matched), allow)?;
    let pulse = PulseSpec { node: 0, ..pulse };
    let probes = probe_nodes(&ladder, [-probe, probe]);
    let v = validate_against_ray(&ladder, geom, probes, &pulse).map_err(core("long-line delay run"))?;
    Ok(CoarseDelay {
        probe_m: probe,
        measured_one_way: 0.5 * v.measured_delay,
        predicted_one_way: geom.delay_vs_flat(probe, 0.0),
        validation: v,
    })
}

/// Ray elapsed time from `start` inward to each `x`, with and without the
/// wormhole.
pub fn elapsed_curves(geom: &WormholeGeometry, start: f64, samples: usize) -> Table {
    let mut t = Table::new(["x_m", "elapsed_wormhole_s", "elapsed_flat_s", "delay_s"]);
    let c = geom.c_base();
    for k in 0..samples {
        let x = start * (1.0 - k as f64 / (samples - 1) as f64);
        let worm = geom.traversal_time(start, x).elapsed;
        let flat = (start - x) / c;
        t.push(vec![x.into(), worm.into(), flat.into(), (worm - flat).into()]);
    }
    t
}

fn probe_series_table(rec: &SimulationRecord) -> Table {
    let mut columns = vec![String::from("t_s")];
    columns.extend(rec.probes.iter().map(|p| format!("V_volts_node{}", p.node)));
    let mut t = Table::new(columns);
    let len = rec.probes.first().map_or(0, |p| p.len());
    for k in 0..len {
        let mut row = vec![Cell::from(k as f64 * rec.dt)];
        row.extend(rec.probes.iter().map(|p| Cell::from(p.voltages[k])));
        t.push(row);
    }
    t
}

pub fn propagate(run: &Run) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    run.write_config(&mut out)?;
    let ex = &run.cfg.experiment;
    let geom = run.cfg.geometry()?;
    let cfg = run.cfg.array_config();
    let boundaries = (Boundary::from(ex.boundaries[0]), Boundary::from(ex.boundaries[1]));
    let ladder = ladder_for(&geom, &cfg, ex.extent_m, boundaries, ex.allow_infeasible)?;
    let pulse = pulse_for(run, &ladder);
    let probes = probe_nodes(&ladder, ex.probes_m);

    let validation = validate_against_ray(&ladder, &geom, probes, &pulse).map_err(core("ray validation"))?;
    let duration = ex.duration_s.unwrap_or_else(|| {
        let far = ladder.node_positions()[pulse.node];
        let reach = ex.probes_m.iter().map(|p| geom.traversal_time(far, *p).elapsed).fold(0.0, f64::max);
        1.2 * (pulse.center_time + reach + 12.0 * pulse.width)
    });
    let rec = simulate(&ladder, &pulse, duration, &[probes.0, probes.1]).map_err(core("simulation"))?;
    let tof = time_of_flight(&rec.probes[0], &rec.probes[1]).map_err(core("time of flight"))?;

    let (left, right) = ladder.boundaries();
    let mut prov = run.base_provenance();
    prov.insert("dt_s".into(), json!(rec.dt));
    prov.insert("steps".into(), json!(rec.steps));
    prov.insert("cells".into(), json!(ladder.cell_count()));
    prov.insert("nodes".into(), json!(ladder.node_count()));
    prov.insert("spacing_m".into(), json!(ladder.spacing()));
    prov.insert("boundaries".into(), json!([left.as_str(), right.as_str()]));
    prov.insert(
        "pulse".into(),
        json!({
            "center_time_s": pulse.center_time,
            "width_s": pulse.width,
            "carrier_hz": pulse.carrier,
            "amplitude_v": pulse.amplitude,
            "node": pulse.node,
            "spectral_extent_hz": pulse.spectral_extent(),
        }),
    );
    prov.insert(
        "probes".into(),
        json!(rec.probes.iter().map(|p| json!({"node": p.node, "position_m": p.position})).collect::<Vec<_>>()),
    );
    prov.insert("ladder_notes".into(), json!(ladder.notes()));
    run.write_table(&mut out, "probe-series", &probe_series_table(&rec), &Value::Object(prov), "samples")?;

    let rows = convergence_study(&geom, &cfg, ex.extent_m, ex.probes_m, pulse, ex.convergence_halvings)?;
    let mut conv = Table::new([
        "spacing_m",
        "cells",
        "measured_tof_s",
        "ray_tof_s",
        "rel_discrepancy",
        "measured_delay_s",
        "predicted_delay_s",
        "dispersion_budget_s",
        "overridden",
    ]);
    for r in &rows {
        let v = &r.validation;
        conv.push(vec![
            r.spacing.into(),
            r.cells.into(),
            v.measured_tof.into(),
            v.ray_tof.into(),
            v.rel_discrepancy.into(),
            v.measured_delay.into(),
            v.predicted_delay.into(),
            v.dispersion_budget.into(),
            Cell::Int(i64::from(r.overridden)),
        ]);
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].validation.abs_discrepancy < w[0].validation.abs_discrepancy);
    let mut conv_prov = run.base_provenance();
    conv_prov.insert("probes_m".into(), json!(ex.probes_m));
    conv_prov.insert("monotone".into(), json!(monotone));
    run.write_table(&mut out, "convergence", &conv, &Value::Object(conv_prov), "rows")?;

    let curves = elapsed_curves(&geom, ex.elapsed_start_m, ex.elapsed_samples);
    let mut curve_prov = run.base_provenance();
    curve_prov.insert("b0_m".into(), json!(geom.b0()));
    curve_prov.insert("start_m".into(), json!(ex.elapsed_start_m));
    curve_prov.insert("delay_at_throat_s".into(), json!(geom.delay_vs_flat(ex.elapsed_start_m, 0.0)));
    run.write_table(&mut out, "elapsed", &curves, &Value::Object(curve_prov), "samples")?;

    let coarse = ex
        .coarse_probe_m
        .map(|probe| coarse_delay(&geom, &cfg, probe, pulse, ex.allow_infeasible))
        .transpose()?;

    let report = json!({
        "config_hash": run.hash,
        "feasibility": ladder.feasibility().map(|r| r.verdict.as_str()),
        "overridden": ladder.is_overridden(),
        "ladder_notes": ladder.notes(),
        "time_of_flight_s": tof,
        "validation": validation_json(&validation),
        "convergence_monotone": monotone,
        "coarse": coarse.as_ref().map(|c| json!({
            "probe_m": c.probe_m,
            "measured_one_way_delay_s": c.measured_one_way,
            "predicted_one_way_delay_s": c.predicted_one_way,
            "quoted_delay_s": QUOTED_DELAY_S,
            "ratio_to_quoted": c.measured_one_way / QUOTED_DELAY_S,
            "validation": validation_json(&c.validation),
        })),
    });
    run.write_json(&mut out, "propagation-report", &report)?;
    Ok(out)
}

/// Embedding surface `(l, r, z)` over `|x| ≤ profile_extent`; `z` takes
/// the sign of `l` so the two sheets are mirror images.
pub fn embedding_table(geom: &WormholeGeometry, extent: f64, samples: usize) -> Result<Table, CliError> {
    let lmax = geom.proper_distance(extent);
    let mut t = Table::new(["l_m", "r_m", "z_m"]);
    for k in 0..samples {
        let l = lmax * (2.0 * k as f64 - (samples - 1) as f64) / (samples - 1) as f64;
        let x = geom.x_from_proper_distance(l);
        let r = geom.r_from_x(x);
        let z = geom.embedding_height(r).map_err(core("embedding"))?;
        t.push(vec![l.into(), r.into(), (if l < 0.0 { -z } else { z }).into()]);
    }
    Ok(t)
}

pub fn embed(run: &Run) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    run.write_config(&mut out)?;
    let geom = run.cfg.geometry()?;
    let table = embedding_table(&geom, run.cfg.experiment.profile_extent_m, run.cfg.experiment.embed_samples)?;
    let mut prov = run.base_provenance();
    prov.insert("b0_m".into(), json!(geom.b0()));
    run.write_table(&mut out, "embedding", &table, &Value::Object(prov), "samples")?;
    Ok(out)
}

pub fn traversal_json(geom: &WormholeGeometry, from: f64, to: f64) -> Value {
    let seg = geom.traversal_time(from, to);
    let c = geom.c_base();
    json!({
        "x_start_m": from,
        "x_end_m": to,
        "elapsed_s": seg.elapsed,
        "closed_form_s": (geom.proper_distance(to) - geom.proper_distance(from)).abs() / c,
        "flat_elapsed_s": (to - from).abs() / c,
        "delay_s": geom.delay_vs_flat(from, to),
    })
}

pub fn traversal(run: &Run, from: f64, to: f64) -> Result<(Outcome, Value), CliError> {
    let mut out = Outcome::default();
    run.write_config(&mut out)?;
    let geom = run.cfg.geometry()?;
    let mut value = traversal_json(&geom, from, to);
    value["config_hash"] = json!(run.hash);
    run.write_json(&mut out, "traversal", &value)?;
    Ok((out, value))
}
