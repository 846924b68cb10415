//! Run configuration: one JSON document with `geometry`, `array`,
//! `time_machine`, `experiment` and `output` blocks.
//!
//! Quantities may be given as SI numbers or as strings with a unit
//! (`"0.1 mm"`, `"10 uA"`). After loading, everything is SI and the resolved
//! document is what gets hashed and written next to the results.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use wormline_core::{
    AccelerationSegment, ArrayConfig, Boundary, Error as CoreError,
    PhysicalConstants, TimeMachineConfig, WormholeGeometry,
};

use crate::units::{parse_quantity, Dimension};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Matched,
    Open,
    Short,
}

impl From<BoundaryKind> for Boundary {
    fn from(b: BoundaryKind) -> Self {
        match b {
            BoundaryKind::Matched => Boundary::Matched,
            BoundaryKind::Open => Boundary::Open,
            BoundaryKind::Short => Boundary::Short,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceSide {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySection {
    pub b0_m: f64,
    pub c_base_m_per_s: f64,
    /// Throat radii for `flux-profile`; empty means just `b0_m`.
    pub b0_sweep_m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArraySection {
    pub critical_current_a: f64,
    pub ground_capacitance_f: f64,
    pub squid_capacitance_f: f64,
    pub spacing_m: f64,
    pub squid_count: Option<usize>,
    pub bias_ratio: f64,
    pub bias_ratio_cap: f64,
    pub signal_band_max_hz: f64,
    pub threshold_flux_ratio: f64,
    pub grid_offset_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSection {
    pub duration_s: f64,
    pub g_m_per_s2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeMachineSection {
    pub l0_m: f64,
    pub ramp_time_s: f64,
    pub schedule: Vec<SegmentSection>,
    /// Whole trip as seen from the resting mouth; defaults to the schedule length.
    pub total_time_s: Option<f64>,
    /// Half-width of the time-shifted region; defaults to `x(l0)`.
    pub x0_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSection {
    pub center_time_s: f64,
    pub width_s: f64,
    pub carrier_hz: f64,
    pub amplitude_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSection {
    /// Half-length of the array for profile, feasibility and time-machine output.
    pub profile_extent_m: f64,
    /// Half-length of the simulated ladder.
    pub extent_m: f64,
    pub probes_m: [f64; 2],
    pub pulse: PulseSection,
    pub source: SourceSide,
    pub duration_s: Option<f64>,
    pub boundaries: [BoundaryKind; 2],
    pub allow_infeasible: bool,
    pub convergence_halvings: usize,
    /// Probe distance from the throat for the long-line delay run; `null` skips it.
    pub coarse_probe_m: Option<f64>,
    pub elapsed_start_m: f64,
    pub elapsed_samples: usize,
    pub embed_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    pub directory: String,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub geometry: GeometrySection,
    pub array: ArraySection,
    pub time_machine: Option<TimeMachineSection>,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

/// `b0 = 0.1 mm`, `c = 1e8 m/s`, `l0 = 0.2 mm`, `g = c²/(20 l0)` for
/// 1 ns out, 2 ns back, 1 ns to rest.
pub fn reference_preset() -> RunConfig {
    let array = ArrayConfig::reference();
    let c = 1e8;
    let l0 = 0.2e-3;
    let g = c * c / (20.0 * l0);
    RunConfig {
        geometry: GeometrySection {
            b0_m: 0.1e-3,
            c_base_m_per_s: c,
            b0_sweep_m: vec![0.1e-3, 0.5e-3, 1e-3],
        },
        array: ArraySection {
            critical_current_a: array.critical_current,
            ground_capacitance_f: array.ground_capacitance,
            squid_capacitance_f: array.squid_capacitance,
            spacing_m: array.spacing,
            squid_count: array.squid_count,
            bias_ratio: array.bias_ratio,
            bias_ratio_cap: array.bias_ratio_cap,
            signal_band_max_hz: array.signal_band_max,
            threshold_flux_ratio: array.threshold_flux_ratio,
            grid_offset_m: array.grid_offset,
        },
        time_machine: Some(TimeMachineSection {
            l0_m: l0,
            ramp_time_s: 0.0,
            schedule: vec![
                SegmentSection { duration_s: 1e-9, g_m_per_s2: g },
                SegmentSection { duration_s: 2e-9, g_m_per_s2: -g },
                SegmentSection { duration_s: 1e-9, g_m_per_s2: g },
            ],
            total_time_s: None,
            x0_m: None,
        }),
        experiment: ExperimentSection {
            profile_extent_m: 5e-3,
            extent_m: 12e-3,
            probes_m: [-5e-3, 5e-3],
            pulse: PulseSection {
                center_time_s: 120e-12,
                width_s: 20e-12,
                carrier_hz: 0.0,
                amplitude_v: 1e-6,
            },
            source: SourceSide::Left,
            duration_s: None,
            boundaries: [BoundaryKind::Matched, BoundaryKind::Matched],
            allow_infeasible: false,
            convergence_halvings: 2,
            coarse_probe_m: Some(0.1),
            elapsed_start_m: 0.1,
            elapsed_samples: 201,
            embed_samples: 201,
        },
        output: OutputSection {
            directory: String::from("out"),
            format: Format::Csv,
        },
    }
}

/// Reads `path` (or the reference preset), applies `key=value` overrides and
/// validates the result.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::new(p.display().to_string(), e.to_string()))?;
            serde_json::from_str(&text)
                .map_err(|e| ConfigError::new(p.display().to_string(), e.to_string()))?
        }
        None => serde_json::to_value(reference_preset()).expect("preset serializes"),
    };
    for assignment in overrides {
        apply_override(&mut doc, assignment)?;
    }
    resolve(&doc)
}

/// Sets a dotted path such as `geometry.b0_m=0.5 mm`. The value is read as
/// JSON when it parses, otherwise kept as a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::new(assignment, "expected key=value"))?;
    let key = key.trim();
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
    if key.is_empty() {
        return Err(ConfigError::new(assignment, "empty key"));
    }
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (depth, part) in parts.iter().enumerate() {
        let here = parts[..=depth].join(".");
        if let Ok(index) = part.parse::<usize>() {
            let arr = node
                .as_array_mut()
                .ok_or_else(|| ConfigError::new(&here, "not an array"))?;
            let len = arr.len();
            node = arr
                .get_mut(index)
                .ok_or_else(|| ConfigError::new(&here, format!("index out of range (len {len})")))?;
        } else {
            if node.is_null() {
                *node = Value::Object(Map::new());
            }
            let obj = node
                .as_object_mut()
                .ok_or_else(|| ConfigError::new(&here, "not an object"))?;
            node = obj.entry(part.to_string()).or_insert(Value::Null);
        }
    }
    *node = value;
    Ok(())
}

struct Section<'a> {
    path: String,
    map: Option<&'a Map<String, Value>>,
}

impl<'a> Section<'a> {
    fn open(parent: Option<&'a Map<String, Value>>, path: &str) -> Result<Self, ConfigError> {
        let key = path.rsplit('.').next().unwrap_or(path);
        let map = match parent.and_then(|m| m.get(key)) {
            None | Some(Value::Null) => None,
            Some(Value::Object(m)) => Some(m),
            Some(_) => return Err(ConfigError::new(path, "expected an object")),
        };
        Ok(Self {
            path: path.to_string(),
            map,
        })
    }

    fn present(&self) -> bool {
        self.map.is_some()
    }

    fn field(&self, key: &str) -> String {
        format!("{}.{key}", self.path)
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.and_then(|m| m.get(key)).filter(|v| !v.is_null())
    }

    fn check_keys(&self, known: &[&str]) -> Result<(), ConfigError> {
        if let Some(map) = self.map {
            if let Some(k) = map.keys().find(|k| !known.contains(&k.as_str())) {
                return Err(ConfigError::new(self.field(k), "unknown field"));
            }
        }
        Ok(())
    }

    fn quantity(&self, key: &str, dim: Dimension, default: f64) -> Result<f64, ConfigError> {
        Ok(self.optional_quantity(key, dim)?.unwrap_or(default))
    }

    fn required_quantity(&self, key: &str, dim: Dimension) -> Result<f64, ConfigError> {
        self.optional_quantity(key, dim)?
            .ok_or_else(|| ConfigError::new(self.field(key), "missing required field"))
    }

    fn optional_quantity(&self, key: &str, dim: Dimension) -> Result<Option<f64>, ConfigError> {
        self.get(key)
            .map(|v| quantity_value(v, dim, &self.field(key)))
            .transpose()
    }

    /// `Some(x)` overrides, explicit `null` clears, absence keeps the default.
    fn nullable_quantity(
        &self,
        key: &str,
        dim: Dimension,
        default: Option<f64>,
    ) -> Result<Option<f64>, ConfigError> {
        match self.map.and_then(|m| m.get(key)) {
            None => Ok(default),
            Some(Value::Null) => Ok(None),
            Some(v) => quantity_value(v, dim, &self.field(key)).map(Some),
        }
    }

    fn quantities(&self, key: &str, dim: Dimension, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| quantity_value(v, dim, &format!("{}[{i}]", self.field(key))))
                .collect(),
            Some(_) => Err(ConfigError::new(self.field(key), "expected an array")),
        }
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(*b),
            Some(_) => Err(ConfigError::new(self.field(key), "expected true or false")),
        }
    }

    fn count(&self, key: &str, default: Option<usize>) -> Result<Option<usize>, ConfigError> {
        match self.map.and_then(|m| m.get(key)) {
            None => Ok(default),
            Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|n| Some(n as usize))
                .ok_or_else(|| ConfigError::new(self.field(key), "expected a non-negative integer")),
        }
    }

    fn choice<T: for<'de> Deserialize<'de>>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => choice_value(v, &self.field(key)),
        }
    }
}

fn quantity_value(v: &Value, dim: Dimension, path: &str) -> Result<f64, ConfigError> {
    let value = match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| ConfigError::new(path, "number out of range"))?,
        Value::String(s) => parse_quantity(s, dim).map_err(|e| ConfigError::new(path, e.to_string()))?,
        _ => {
            return Err(ConfigError::new(
                path,
                format!("expected a number in {} or a quantity string", dim.si_unit()),
            ))
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ConfigError::new(path, "must be finite"))
    }
}

fn choice_value<T: for<'de> Deserialize<'de>>(v: &Value, path: &str) -> Result<T, ConfigError> {
    T::deserialize(v).map_err(|e| ConfigError::new(path, e.to_string()))
}

/// Resolves a raw document into SI values and validates it. Missing
/// fields take their reference-preset values, except `geometry.b0_m`.
pub fn resolve(doc: &Value) -> Result<RunConfig, ConfigError> {
    let root = doc
        .as_object()
        .ok_or_else(|| ConfigError::new("$", "config must be a JSON object"))?;
    if let Some(k) = root
        .keys()
        .find(|k| !["geometry", "array", "time_machine", "experiment", "output"].contains(&k.as_str()))
    {
        return Err(ConfigError::new(k.as_str(), "unknown block"));
    }
    let preset = reference_preset();
    let root = Some(root);

    let geo = Section::open(root, "geometry")?;
    geo.check_keys(&["b0_m", "c_base_m_per_s", "b0_sweep_m"])?;
    let b0_m = geo.required_quantity("b0_m", Dimension::Length)?;
    let geometry = GeometrySection {
        b0_m,
        c_base_m_per_s: geo.quantity("c_base_m_per_s", Dimension::Speed, preset.geometry.c_base_m_per_s)?,
        b0_sweep_m: if geo.get("b0_sweep_m").is_some() {
            geo.quantities("b0_sweep_m", Dimension::Length, &[])?
        } else {
            vec![b0_m]
        },
    };

    let arr = Section::open(root, "array")?;
    arr.check_keys(&[
        "critical_current_a",
        "ground_capacitance_f",
        "squid_capacitance_f",
        "spacing_m",
        "squid_count",
        "bias_ratio",
        "bias_ratio_cap",
        "signal_band_max_hz",
        "threshold_flux_ratio",
        "grid_offset_m",
    ])?;
    let pa = &preset.array;
    let array = ArraySection {
        critical_current_a: arr.quantity("critical_current_a", Dimension::Current, pa.critical_current_a)?,
        ground_capacitance_f: arr.quantity("ground_capacitance_f", Dimension::Capacitance, pa.ground_capacitance_f)?,
        squid_capacitance_f: arr.quantity("squid_capacitance_f", Dimension::Capacitance, pa.squid_capacitance_f)?,
        spacing_m: arr.quantity("spacing_m", Dimension::Length, pa.spacing_m)?,
        squid_count: arr.count("squid_count", pa.squid_count)?,
        bias_ratio: arr.quantity("bias_ratio", Dimension::Dimensionless, pa.bias_ratio)?,
        bias_ratio_cap: arr.quantity("bias_ratio_cap", Dimension::Dimensionless, pa.bias_ratio_cap)?,
        signal_band_max_hz: arr.quantity("signal_band_max_hz", Dimension::Frequency, pa.signal_band_max_hz)?,
        threshold_flux_ratio: arr.quantity("threshold_flux_ratio", Dimension::Dimensionless, pa.threshold_flux_ratio)?,
        grid_offset_m: arr.quantity("grid_offset_m", Dimension::Length, pa.grid_offset_m)?,
    };

    let tm = Section::open(root, "time_machine")?;
    let time_machine = if tm.present() {
        tm.check_keys(&["l0_m", "ramp_time_s", "schedule", "total_time_s", "x0_m"])?;
        let pt = preset.time_machine.as_ref().expect("preset has a time machine");
        let schedule = match tm.get("schedule") {
            None => pt.schedule.clone(),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, item)| {
                    let path = format!("time_machine.schedule[{i}]");
                    let obj = item
                        .as_object()
                        .ok_or_else(|| ConfigError::new(&path, "expected an object"))?;
                    let seg = Section {
                        path,
                        map: Some(obj),
                    };
                    seg.check_keys(&["duration_s", "g_m_per_s2"])?;
                    Ok(SegmentSection {
                        duration_s: seg.required_quantity("duration_s", Dimension::Time)?,
                        g_m_per_s2: seg.required_quantity("g_m_per_s2", Dimension::Acceleration)?,
                    })
                })
                .collect::<Result<_, ConfigError>>()?,
            Some(_) => return Err(ConfigError::new("time_machine.schedule", "expected an array")),
        };
        Some(TimeMachineSection {
            l0_m: tm.quantity("l0_m", Dimension::Length, pt.l0_m)?,
            ramp_time_s: tm.quantity("ramp_time_s", Dimension::Time, pt.ramp_time_s)?,
            schedule,
            total_time_s: tm.nullable_quantity("total_time_s", Dimension::Time, pt.total_time_s)?,
            x0_m: tm.nullable_quantity("x0_m", Dimension::Length, pt.x0_m)?,
        })
    } else {
        None
    };

    let ex = Section::open(root, "experiment")?;
    ex.check_keys(&[
        "profile_extent_m",
        "extent_m",
        "probes_m",
        "pulse",
        "source",
        "duration_s",
        "boundaries",
        "allow_infeasible",
        "convergence_halvings",
        "coarse_probe_m",
        "elapsed_start_m",
        "elapsed_samples",
        "embed_samples",
    ])?;
    let pe = &preset.experiment;
    let probes = ex.quantities("probes_m", Dimension::Length, &pe.probes_m)?;
    let probes_m: [f64; 2] = probes
        .try_into()
        .map_err(|_| ConfigError::new("experiment.probes_m", "expected exactly two positions"))?;
    let pulse_sec = Section::open(ex.map, "experiment.pulse")?;
    pulse_sec.check_keys(&["center_time_s", "width_s", "carrier_hz", "amplitude_v"])?;
    let pp = &pe.pulse;
    let boundaries = match ex.get("boundaries") {
        None => pe.boundaries,
        Some(v) => choice_value(v, "experiment.boundaries")?,
    };
    let experiment = ExperimentSection {
        profile_extent_m: ex.quantity("profile_extent_m", Dimension::Length, pe.profile_extent_m)?,
        extent_m: ex.quantity("extent_m", Dimension::Length, pe.extent_m)?,
        probes_m,
        pulse: PulseSection {
            center_time_s: pulse_sec.quantity("center_time_s", Dimension::Time, pp.center_time_s)?,
            width_s: pulse_sec.quantity("width_s", Dimension::Time, pp.width_s)?,
            carrier_hz: pulse_sec.quantity("carrier_hz", Dimension::Frequency, pp.carrier_hz)?,
            amplitude_v: pulse_sec.quantity("amplitude_v", Dimension::Voltage, pp.amplitude_v)?,
        },
        source: ex.choice("source", pe.source)?,
        duration_s: ex.nullable_quantity("duration_s", Dimension::Time, pe.duration_s)?,
        boundaries,
        allow_infeasible: ex.flag("allow_infeasible", pe.allow_infeasible)?,
        convergence_halvings: ex
            .count("convergence_halvings", Some(pe.convergence_halvings))?
            .unwrap_or(0),
        coarse_probe_m: ex.nullable_quantity("coarse_probe_m", Dimension::Length, pe.coarse_probe_m)?,
        elapsed_start_m: ex.quantity("elapsed_start_m", Dimension::Length, pe.elapsed_start_m)?,
        elapsed_samples: ex.count("elapsed_samples", Some(pe.elapsed_samples))?.unwrap_or(0),
        embed_samples: ex.count("embed_samples", Some(pe.embed_samples))?.unwrap_or(0),
    };

    let out = Section::open(root, "output")?;
    out.check_keys(&["directory", "format"])?;
    let output = OutputSection {
        directory: match out.get("directory") {
            None => preset.output.directory.clone(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(ConfigError::new("output.directory", "expected a string")),
        },
        format: out.choice("format", preset.output.format)?,
    };

    let cfg = RunConfig {
        geometry,
        array,
        time_machine,
        experiment,
        output,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn array_field(core_name: &str) -> &'static str {
    match core_name {
        "critical_current" => "array.critical_current_a",
        "ground_capacitance" => "array.ground_capacitance_f",
        "squid_capacitance" => "array.squid_capacitance_f",
        "spacing" => "array.spacing_m",
        "squid_count" => "array.squid_count",
        "bias_ratio" => "array.bias_ratio",
        "bias_ratio_cap" => "array.bias_ratio_cap",
        "signal_band_max" => "array.signal_band_max_hz",
        "threshold_flux_ratio" => "array.threshold_flux_ratio",
        "grid_offset" => "array.grid_offset_m",
        _ => "array",
    }
}

fn core_message(err: &CoreError) -> String {
    match err {
        CoreError::InvalidParameter { value, reason, .. } => format!("{reason} (got {value:e})"),
        other => other.to_string(),
    }
}

fn positive(value: f64, path: &str) -> Result<(), ConfigError> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be > 0 (got {value:e})")))
    }
}

impl RunConfig {
    /// Checks every module-level invariant, naming the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.constants()?;
        positive(self.geometry.b0_m, "geometry.b0_m")?;
        for (i, &b0) in self.geometry.b0_sweep_m.iter().enumerate() {
            positive(b0, &format!("geometry.b0_sweep_m[{i}]"))?;
        }
        if self.geometry.b0_sweep_m.is_empty() {
            return Err(ConfigError::new("geometry.b0_sweep_m", "must not be empty"));
        }
        self.array_config().validate().map_err(|e| match &e {
            CoreError::InvalidParameter { name, .. } => ConfigError::new(array_field(name), core_message(&e)),
            _ => ConfigError::new("array", e.to_string()),
        })?;
        if let Some(tm) = &self.time_machine {
            positive(tm.l0_m, "time_machine.l0_m")?;
            for (i, seg) in tm.schedule.iter().enumerate() {
                TimeMachineConfig::new(
                    tm.l0_m,
                    vec![AccelerationSegment {
                        duration: seg.duration_s,
                        acceleration: seg.g_m_per_s2,
                    }],
                    tm.ramp_time_s,
                    self.geometry.c_base_m_per_s,
                )
                .map_err(|e| {
                    let field = match &e {
                        CoreError::InvalidParameter { name: "ramp_time", .. } => {
                            String::from("time_machine.ramp_time_s")
                        }
                        CoreError::InvalidParameter { name: "duration", .. } => {
                            format!("time_machine.schedule[{i}].duration_s")
                        }
                        _ => format!("time_machine.schedule[{i}].g_m_per_s2"),
                    };
                    ConfigError::new(field, core_message(&e))
                })?;
            }
            self.time_machine_config()?;
            if let Some(t) = tm.total_time_s {
                if !(t >= 0.0) {
                    return Err(ConfigError::new("time_machine.total_time_s", "must be >= 0"));
                }
            }
            if let Some(x0) = tm.x0_m {
                positive(x0, "time_machine.x0_m")?;
            }
        }

        let ex = &self.experiment;
        positive(ex.profile_extent_m, "experiment.profile_extent_m")?;
        positive(ex.extent_m, "experiment.extent_m")?;
        for (i, &p) in ex.probes_m.iter().enumerate() {
            if p.abs() >= ex.extent_m {
                return Err(ConfigError::new(
                    format!("experiment.probes_m[{i}]"),
                    "probe must lie inside the ladder (|x| < experiment.extent_m)",
                ));
            }
        }
        if ex.probes_m[0] >= ex.probes_m[1] {
            return Err(ConfigError::new("experiment.probes_m", "first probe must be left of the second"));
        }
        positive(ex.pulse.width_s, "experiment.pulse.width_s")?;
        if ex.pulse.center_time_s < 0.0 {
            return Err(ConfigError::new("experiment.pulse.center_time_s", "must be >= 0"));
        }
        if ex.pulse.carrier_hz < 0.0 {
            return Err(ConfigError::new("experiment.pulse.carrier_hz", "must be >= 0"));
        }
        if ex.pulse.amplitude_v == 0.0 {
            return Err(ConfigError::new("experiment.pulse.amplitude_v", "must be non-zero"));
        }
        if let Some(d) = ex.duration_s {
            if d <= ex.pulse.center_time_s {
                return Err(ConfigError::new(
                    "experiment.duration_s",
                    "must exceed experiment.pulse.center_time_s",
                ));
            }
        }
        if ex.convergence_halvings > 4 {
            return Err(ConfigError::new("experiment.convergence_halvings", "at most 4"));
        }
        if let Some(x) = ex.coarse_probe_m {
            positive(x, "experiment.coarse_probe_m")?;
        }
        positive(ex.elapsed_start_m, "experiment.elapsed_start_m")?;
        if ex.elapsed_samples < 2 {
            return Err(ConfigError::new("experiment.elapsed_samples", "need at least 2"));
        }
        if ex.embed_samples < 3 {
            return Err(ConfigError::new("experiment.embed_samples", "need at least 3"));
        }
        if self.output.directory.is_empty() {
            return Err(ConfigError::new("output.directory", "must not be empty"));
        }
        Ok(())
    }

    pub fn constants(&self) -> Result<PhysicalConstants, ConfigError> {
        PhysicalConstants::with_light_speed(self.geometry.c_base_m_per_s)
            .map_err(|e| ConfigError::new("geometry.c_base_m_per_s", core_message(&e)))
    }

    pub fn geometry(&self) -> Result<WormholeGeometry, ConfigError> {
        self.geometry_for(self.geometry.b0_m)
            .map_err(|e| ConfigError::new("geometry.b0_m", e.message))
    }

    pub fn geometry_for(&self, b0: f64) -> Result<WormholeGeometry, ConfigError> {
        WormholeGeometry::new(b0, self.constants()?)
            .map_err(|e| ConfigError::new("geometry.b0_sweep_m", core_message(&e)))
    }

    pub fn array_config(&self) -> ArrayConfig {
        let a = &self.array;
        ArrayConfig {
            critical_current: a.critical_current_a,
            ground_capacitance: a.ground_capacitance_f,
            squid_capacitance: a.squid_capacitance_f,
            spacing: a.spacing_m,
            squid_count: a.squid_count,
            bias_ratio: a.bias_ratio,
            bias_ratio_cap: a.bias_ratio_cap,
            signal_band_max: a.signal_band_max_hz,
            threshold_flux_ratio: a.threshold_flux_ratio,
            grid_offset: a.grid_offset_m,
        }
    }

    pub fn time_machine_config(&self) -> Result<Option<TimeMachineConfig>, ConfigError> {
        let Some(tm) = &self.time_machine else {
            return Ok(None);
        };
        let schedule = tm
            .schedule
            .iter()
            .map(|s| AccelerationSegment {
                duration: s.duration_s,
                acceleration: s.g_m_per_s2,
            })
            .collect();
        TimeMachineConfig::new(tm.l0_m, schedule, tm.ramp_time_s, self.geometry.c_base_m_per_s)
            .map(Some)
            .map_err(|e| ConfigError::new("time_machine", core_message(&e)))
    }

    /// Pretty JSON of the resolved configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// First 8 hex digits of SHA-256 over the resolved physics blocks. The
    /// `output` block is left out so moving a run does not rename it.
    pub fn short_hash(&self) -> String {
        #[derive(Serialize)]
        struct Physics<'a> {
            geometry: &'a GeometrySection,
            array: &'a ArraySection,
            time_machine: &'a Option<TimeMachineSection>,
            experiment: &'a ExperimentSection,
        }
        let text = serde_json::to_string(&Physics {
            geometry: &self.geometry,
            array: &self.array,
            time_machine: &self.time_machine,
            experiment: &self.experiment,
        })
        .expect("config serializes");
        hex::encode(&Sha256::digest(text.as_bytes())[..4])
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        reference_preset()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn preset_round_trips_through_resolve() {
        let preset = reference_preset();
        let doc = serde_json::to_value(&preset).unwrap();
        assert_eq!(resolve(&doc).unwrap(), preset);
    }

    #[test]
    fn unit_strings_convert_to_si() {
        let cfg = resolve(&json!({
            "geometry": {"b0_m": "0.5 mm"},
            "array": {"critical_current_a": "20 uA", "ground_capacitance_f": "0.2 pF"},
            "experiment": {"pulse": {"width_s": "15 ps"}}
        }))
        .unwrap();
        assert_eq!(cfg.geometry.b0_m, 0.5e-3);
        assert_eq!(cfg.geometry.b0_sweep_m, vec![0.5e-3]);
        assert_eq!(cfg.array.critical_current_a, 20.0 * 1e-6);
        assert_eq!(cfg.array.ground_capacitance_f, 0.2 * 1e-12);
        assert_eq!(cfg.experiment.pulse.width_s, 15.0 * 1e-12);
        assert!(cfg.time_machine.is_none());
    }

    #[test]
    fn empty_geometry_names_b0() {
        let err = resolve(&json!({"geometry": {}})).unwrap_err();
        assert_eq!(err.path, "geometry.b0_m");
        let err = resolve(&json!({})).unwrap_err();
        assert_eq!(err.path, "geometry.b0_m");
    }

    #[test]
    fn errors_carry_field_paths() {
        let cases = [
            (json!({"geometry": {"b0_m": -1.0}}), "geometry.b0_m"),
            (json!({"geometry": {"b0_m": 1e-4, "c_base_m_per_s": 0}}), "geometry.c_base_m_per_s"),
            (json!({"geometry": {"b0_m": 1e-4}, "array": {"spacing_m": "0 mm"}}), "array.spacing_m"),
            (json!({"geometry": {"b0_m": 1e-4}, "array": {"critical_current_a": "3 GHz"}}), "array.critical_current_a"),
            (json!({"geometry": {"b0_m": 1e-4}, "array": {"threshold_flux_ratio": 0.7}}), "array.threshold_flux_ratio"),
            (json!({"geometry": {"b0_m": 1e-4}, "array": {"spasing_m": 1}}), "array.spasing_m"),
            (json!({"geometry": {"b0_m": 1e-4}, "time_machine": {"schedule": [{"duration_s": 1e-9, "g_m_per_s2": 1e20}]}}),
                "time_machine.schedule[0].g_m_per_s2"),
            (json!({"geometry": {"b0_m": 1e-4}, "experiment": {"probes_m": ["5 mm", "-5 mm"]}}), "experiment.probes_m"),
            (json!({"geometry": {"b0_m": 1e-4}, "experiment": {"probes_m": ["-50 mm", "5 mm"]}}), "experiment.probes_m[0]"),
            (json!({"geometry": {"b0_m": 1e-4}, "experiment": {"boundaries": ["matched", "leaky"]}}), "experiment.boundaries"),
            (json!({"geometry": {"b0_m": 1e-4}, "output": {"format": "xml"}}), "output.format"),
            (json!({"geometry": {"b0_m": 1e-4}, "extra": {}}), "extra"),
        ];
        for (doc, path) in cases {
            let err = resolve(&doc).unwrap_err();
            assert_eq!(err.path, path, "{err}");
        }
    }

    #[test]
    fn dotted_overrides() {
        let mut doc = serde_json::to_value(reference_preset()).unwrap();
        apply_override(&mut doc, "geometry.b0_m=0.5 mm").unwrap();
        apply_override(&mut doc, "array.spacing_m=2.5e-5").unwrap();
        apply_override(&mut doc, "time_machine.schedule.1.g_m_per_s2=0").unwrap();
        apply_override(&mut doc, "output.format=json").unwrap();
        apply_override(&mut doc, "experiment.coarse_probe_m=null").unwrap();
        let cfg = resolve(&doc).unwrap();
        assert_eq!(cfg.geometry.b0_m, 0.5e-3);
        assert_eq!(cfg.array.spacing_m, 2.5e-5);
        assert_eq!(cfg.time_machine.unwrap().schedule[1].g_m_per_s2, 0.0);
        assert_eq!(cfg.output.format, Format::Json);
        assert_eq!(cfg.experiment.coarse_probe_m, None);

        assert!(apply_override(&mut doc, "no_equals_sign").is_err());
        assert_eq!(
            apply_override(&mut doc, "time_machine.schedule.9.g_m_per_s2=0").unwrap_err().path,
            "time_machine.schedule.9"
        );
    }

    #[test]
    fn hash_tracks_physics_not_output() {
        let a = reference_preset();
        let mut b = a.clone();
        b.output.directory = String::from("elsewhere");
        assert_eq!(a.short_hash(), b.short_hash());
        b.geometry.b0_m = 2e-4;
        assert_ne!(a.short_hash(), b.short_hash());
        assert_eq!(a.short_hash().len(), 8);
        assert!(a.short_hash().chars().all(|c| c.is_ascii_hexdigit()));
    }
}
