//! Accelerated-mouth flux schedules and the time-shift budget.
//!
//! One mouth is accelerated with proper acceleration `g(t)`; inside the
//! form-factor support the lapse picks up a factor `(1 + g l F(l) / c²)²`
//! (at `θ = 0`). The `1/c²` makes the group dimensionless; the
//! geometry-preservation condition `2 |g| l₀ / c² ≪ 1` is enforced as
//! `≤ 0.1`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{abs, cos, hypot};
use crate::spacetime::{ShapeFunction, WormholeGeometry};
use crate::squid_array::{flux_for_speed_ratio_squared, grid_positions, ArrayConfig};

/// Upper bound on `2 |g| l₀ / c²`.
pub const GEOMETRY_PRESERVATION_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelerationSegment {
    /// Segment length (s).
    pub duration: f64,
    /// Proper acceleration of the travelling mouth (m/s²).
    pub acceleration: f64,
}

/// Validated form-factor support and acceleration schedule.
///
/// The schedule starts at `t = 0`; the mouth is at rest (`g = 0`) before
/// and after it. With `ramp_time > 0` every change of `g` follows a
/// raised-cosine ramp that starts at the segment boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMachineConfig {
    l0: f64,
    schedule: Vec<AccelerationSegment>,
    ramp_time: f64,
}

impl TimeMachineConfig {
    pub fn new(
        l0: f64,
        schedule: Vec<AccelerationSegment>,
        ramp_time: f64,
        c_base: f64,
    ) -> Result<Self> {
        if !(l0.is_finite() && l0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "l0",
                value: l0,
                reason: "must be finite and > 0",
            });
        }
        if !(ramp_time.is_finite() && ramp_time >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "ramp_time",
                value: ramp_time,
                reason: "must be finite and >= 0",
            });
        }
        for seg in &schedule {
            if !(seg.duration.is_finite() && seg.duration > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "duration",
                    value: seg.duration,
                    reason: "segment duration must be > 0",
                });
            }
            if ramp_time > seg.duration {
                return Err(Error::InvalidParameter {
                    name: "ramp_time",
                    value: ramp_time,
                    reason: "ramp must not be longer than any segment",
                });
            }
            if !seg.acceleration.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "acceleration",
                    value: seg.acceleration,
                    reason: "must be finite",
                });
            }
            let group = 2.0 * abs(seg.acceleration) * l0 / (c_base * c_base);
            if group > GEOMETRY_PRESERVATION_LIMIT * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter {
                    name: "2|g|l0/c^2",
                    value: group,
                    reason: "throat geometry must not change during the trip (limit 0.1)",
                });
            }
        }
        Ok(Self {
            l0,
            schedule,
            ramp_time,
        })
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn schedule(&self) -> &[AccelerationSegment] {
        &self.schedule
    }

    pub fn ramp_time(&self) -> f64 {
        self.ramp_time
    }

    pub fn total_duration(&self) -> f64 {
        self.schedule.iter().map(|s| s.duration).sum()
    }

    /// `g(t)`, including ramps.
    pub fn acceleration_at(&self, t: f64) -> f64 {
        let mut start = 0.0;
        let mut previous = 0.0;
        for seg in &self.schedule {
            let end = start + seg.duration;
            if t < start {
                return previous;
            }
            if t < end {
                return self.ramped(previous, seg.acceleration, t - start);
            }
            start = end;
            previous = seg.acceleration;
        }
        if t < start {
            previous
        } else {
            self.ramped(previous, 0.0, t - start)
        }
    }

    fn ramped(&self, from: f64, to: f64, since: f64) -> f64 {
        if self.ramp_time == 0.0 || since >= self.ramp_time {
            return to;
        }
        let s = since / self.ramp_time;
        from + (to - from) * 0.5 * (1.0 - cos(PI * s))
    }

    /// Largest proper velocity `|∫ g dt|` reached by the instantaneous
    /// schedule (m/s).
    pub fn peak_celerity(&self) -> f64 {
        let mut w = 0.0f64;
        let mut peak = 0.0f64;
        for seg in &self.schedule {
            w += seg.acceleration * seg.duration;
            peak = peak.max(abs(w));
        }
        peak
    }

    /// Distinct accelerations in schedule order, always starting with 0.
    pub fn distinct_accelerations(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0];
        for seg in &self.schedule {
            if !out.contains(&seg.acceleration) {
                out.push(seg.acceleration);
            }
        }
        out
    }
}

/// `F(l) = l / l₀` on `(0, l₀]`, zero elsewhere.
pub fn form_factor(l: f64, l0: f64) -> f64 {
    if l > 0.0 && l <= l0 {
        l / l0
    } else {
        0.0
    }
}

/// Bias flux at `x` for a fixed mouth acceleration `g`.
pub fn tm_flux_for_acceleration(x: f64, g: f64, geom: &WormholeGeometry, l0: f64) -> Result<f64> {
    let phi0 = geom.constants().flux_quantum();
    let base = geom.speed_ratio_squared(abs(x));
    let l = geom.proper_distance(x);
    let f = form_factor(l, l0);
    let argument = if f == 0.0 || g == 0.0 {
        base
    } else {
        let c = geom.c_base();
        let factor = 1.0 + g * l * f / (c * c);
        base * factor * factor
    };
    debug_assert!(argument >= 0.0);
    if argument > 1.0 {
        return Err(Error::Superluminal {
            position: x,
            argument,
        });
    }
    Ok(flux_for_speed_ratio_squared(argument, phi0))
}

/// Time-machine bias flux
/// `(φ₀/π) arccos((1 − b/r)(1 + g(t) l F(l) / c²)²)`.
pub fn tm_flux(x: f64, t: f64, geom: &WormholeGeometry, tm: &TimeMachineConfig) -> Result<f64> {
    tm_flux_for_acceleration(x, tm.acceleration_at(t), geom, tm.l0())
}

/// Mouth speed after accelerating at `g` for coordinate time `t_a`:
/// `g t_a / sqrt(1 + (g t_a / c)²)`.
pub fn mouth_velocity(g: f64, t_a: f64, c_base: f64) -> f64 {
    let w = g * t_a;
    w / hypot(1.0, w / c_base)
}

/// `γ = sqrt(1 + (g t_a / c)²)`.
pub fn gamma_factor(g: f64, t_a: f64, c_base: f64) -> f64 {
    hypot(1.0, g * t_a / c_base)
}

/// `T (1 − 1/γ)`.
pub fn time_shift(total: f64, gamma: f64) -> f64 {
    total * (1.0 - 1.0 / gamma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeShiftBudget {
    pub gamma: f64,
    pub mouth_velocity: f64,
    pub shift: f64,
    pub traversal: f64,
    pub ctc_possible: bool,
}

/// Compares the time shift built up by the schedule with the ray
/// traversal time across `x_bounds`.
///
/// `γ` comes from the peak proper velocity of the schedule. Before that the
/// flux is checked on the array grid inside the bounds, and at the outer
/// edge of the form-factor support, for every scheduled acceleration.
pub fn ctc_budget(
    geom: &WormholeGeometry,
    tm: &TimeMachineConfig,
    cfg: &ArrayConfig,
    total_time: f64,
    x_bounds: (f64, f64),
) -> Result<TimeShiftBudget> {
    let (lo, hi) = x_bounds;
    if !(lo < 0.0 && hi > 0.0) {
        return Err(Error::InvalidParameter {
            name: "x_bounds",
            value: if lo >= 0.0 { lo } else { hi },
            reason: "bounds must straddle the throat",
        });
    }
    if !(total_time.is_finite() && total_time >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "total_time",
            value: total_time,
            reason: "must be finite and >= 0",
        });
    }
    cfg.validate()?;

    let count = ((hi - lo) / cfg.spacing) as usize + 2;
    let mut checks: Vec<f64> = grid_positions(count, cfg.spacing, cfg.grid_offset)
        .into_iter()
        .filter(|&x| x >= lo && x <= hi && x != 0.0)
        .collect();
    checks.push(geom.x_from_proper_distance(tm.l0()).min(hi));
    for g in tm.distinct_accelerations() {
        for &x in &checks {
            tm_flux_for_acceleration(x, g, geom, tm.l0())?;
        }
    }

    let c = geom.c_base();
    let w = tm.peak_celerity();
    let gamma = gamma_factor(w, 1.0, c);
    let shift = time_shift(total_time, gamma);
    let traversal = geom.traversal_time(lo, hi).elapsed;
    Ok(TimeShiftBudget {
        gamma,
        mouth_velocity: mouth_velocity(w, 1.0, c),
        shift,
        traversal,
        ctc_possible: shift > traversal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::default_constants;
    use crate::squid_array::synthesize_flux_at;
    use alloc::vec;
    use proptest::prelude::*;

    const B0: f64 = 1e-4;
    const L0: f64 = 2e-4;
    const C: f64 = 1e8;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn geom() -> WormholeGeometry {
        WormholeGeometry::new(B0, default_constants()).unwrap()
    }

    fn preset_g() -> f64 {
        C * C / (20.0 * L0)
    }

    fn single(g: f64, ramp: f64) -> TimeMachineConfig {
        TimeMachineConfig::new(
            L0,
            vec![AccelerationSegment {
                duration: 1e-9,
                acceleration: g,
            }],
            ramp,
            C,
        )
        .unwrap()
    }

    #[test]
    fn form_factor_examples() {
        assert_eq!(form_factor(L0 / 2.0, L0), 0.5);
        assert_eq!(form_factor(-L0, L0), 0.0);
        assert_eq!(form_factor(2.0 * L0, L0), 0.0);
        assert_eq!(form_factor(0.0, L0), 0.0);
        assert_eq!(form_factor(L0, L0), 1.0);
    }

    #[test]
    fn tm_flux_examples() {
        let g = geom();
        let phi0 = g.constants().flux_quantum();
        let x_l0 = g.x_from_proper_distance(L0);
        let up = tm_flux_for_acceleration(x_l0, preset_g(), &g, L0).unwrap() / phi0;
        let rest = tm_flux_for_acceleration(x_l0, 0.0, &g, L0).unwrap() / phi0;
        let down = tm_flux_for_acceleration(x_l0, -preset_g(), &g, L0).unwrap() / phi0;
        // mpmath: arccos(0.8·1.05²)/π, arccos(0.8)/π, arccos(0.8·0.95²)/π
        assert!(rel(up, 0.156_196_825_568_595_22) < 1e-9, "{up}");
        assert!(rel(rest, 0.204_832_764_699_133_45) < 1e-9, "{rest}");
        assert!(rel(down, 0.243_223_044_651_076_06) < 1e-9, "{down}");
        assert!(down > rest && rest > up);

        for x in [-3e-3, -1e-4, 5e-4, 2e-2] {
            let static_flux = synthesize_flux_at(x, &g);
            assert_eq!(tm_flux_for_acceleration(x, 0.0, &g, L0).unwrap(), static_flux);
            if x < 0.0 || g.proper_distance(x) > L0 {
                assert_eq!(tm_flux_for_acceleration(x, preset_g(), &g, L0).unwrap(), static_flux);
            }
        }
    }

    #[test]
    fn superluminal_argument_is_an_error() {
        // narrow throat: 1 − b/r ≈ 1 at l = l0, so the boost pushes it past 1
        let g = WormholeGeometry::new(1e-5, default_constants()).unwrap();
        let x = g.x_from_proper_distance(L0);
        assert!(matches!(
            tm_flux_for_acceleration(x, preset_g(), &g, L0),
            Err(Error::Superluminal { .. })
        ));
    }

    #[test]
    fn kinematics_examples() {
        assert!(rel(mouth_velocity(C, 1.0, C), C / 2f64.sqrt()) < 1e-15);
        let v = mouth_velocity(2.5e18, 1e-9, C);
        // 25/sqrt(626), mpmath
        assert!(rel(v / C, 0.999_200_958_721_789_4) < 1e-14);
        assert_eq!(mouth_velocity(2.5e18, 0.0, C), 0.0);

        let gamma = gamma_factor(2.5e18, 1e-9, C);
        assert!(rel(gamma, 25.019_992_006_393_607) < 1e-14);
        assert_eq!(gamma_factor(2.5e18, 0.0, C), 1.0);
        let from_v = 1.0 / (1.0 - (v / C) * (v / C)).sqrt();
        assert!(rel(from_v, gamma) < 1e-12);
    }

    #[test]
    fn time_shift_examples() {
        assert!(rel(time_shift(5e-9, 25.0), 4.8e-9) < 1e-15);
        assert_eq!(time_shift(5e-9, 1.0), 0.0);
        assert!(rel(time_shift(5e-9, 1e300), 5e-9) < 1e-15);
    }

    #[test]
    fn preset_budget_allows_ctc() {
        let g = geom();
        let tm = single(preset_g(), 0.0);
        let x0 = g.x_from_proper_distance(L0);
        let budget = ctc_budget(&g, &tm, &ArrayConfig::reference(), 5e-9, (-x0, x0)).unwrap();
        assert!(rel(budget.gamma, 25.019_992_006_393_607) < 1e-12);
        assert!(rel(budget.traversal, 2.0 * L0 / C) < 1e-9);
        assert!(budget.shift > 4.79e-9 && budget.shift < 4.81e-9);
        assert!(budget.ctc_possible);
    }

    #[test]
    fn zero_schedule_has_no_shift() {
        let g = geom();
        let tm = single(0.0, 0.0);
        let b = ctc_budget(&g, &tm, &ArrayConfig::reference(), 5e-9, (-1e-3, 1e-3)).unwrap();
        assert_eq!(b.gamma, 1.0);
        assert_eq!(b.shift, 0.0);
        assert!(!b.ctc_possible);
    }

    #[test]
    fn geometry_preservation_is_enforced() {
        let err = TimeMachineConfig::new(
            L0,
            vec![AccelerationSegment {
                duration: 1e-9,
                acceleration: 1.01 * preset_g(),
            }],
            0.0,
            C,
        );
        assert!(err.is_err());
        assert!(TimeMachineConfig::new(L0, vec![], 0.0, C).is_ok());
        assert!(TimeMachineConfig::new(-1.0, vec![], 0.0, C).is_err());
    }

    #[test]
    fn budget_propagates_representability_errors() {
        let g = WormholeGeometry::new(1e-5, default_constants()).unwrap();
        let tm = single(preset_g(), 0.0);
        assert!(matches!(
            ctc_budget(&g, &tm, &ArrayConfig::reference(), 5e-9, (-1e-3, 1e-3)),
            Err(Error::Superluminal { .. })
        ));
    }

    #[test]
    fn schedule_lookup_and_ramps() {
        let tm = TimeMachineConfig::new(
            L0,
            vec![
                AccelerationSegment { duration: 1e-9, acceleration: 1e17 },
                AccelerationSegment { duration: 2e-9, acceleration: -1e17 },
            ],
            0.0,
            C,
        )
        .unwrap();
        assert_eq!(tm.acceleration_at(-1.0), 0.0);
        assert_eq!(tm.acceleration_at(0.5e-9), 1e17);
        assert_eq!(tm.acceleration_at(2e-9), -1e17);
        assert_eq!(tm.acceleration_at(4e-9), 0.0);
        assert_eq!(tm.peak_celerity(), 1e8);
        assert_eq!(tm.distinct_accelerations(), vec![0.0, 1e17, -1e17]);
    }

    #[test]
    fn ramped_flux_is_continuous_at_boundaries() {
        let g = geom();
        let tm = TimeMachineConfig::new(
            L0,
            vec![
                AccelerationSegment { duration: 1e-9, acceleration: preset_g() },
                AccelerationSegment { duration: 1e-9, acceleration: -preset_g() },
            ],
            0.1e-9,
            C,
        )
        .unwrap();
        let x = g.x_from_proper_distance(0.8 * L0);
        for boundary in [0.0, 1e-9, 2e-9] {
            let eps = 1e-18;
            let before = tm_flux(x, boundary - eps, &g, &tm).unwrap();
            let after = tm_flux(x, boundary + eps, &g, &tm).unwrap();
            assert!((before - after).abs() < 1e-9 * before, "t={boundary}");
        }
        // instantaneous switching jumps
        let hard = single(preset_g(), 0.0);
        let jump = tm_flux(x, 1e-9 - 1e-18, &g, &hard).unwrap() - tm_flux(x, 1e-9 + 1e-18, &g, &hard).unwrap();
        assert!(jump.abs() > 1e-3 * g.constants().flux_quantum());
    }

    #[test]
    fn ramp_longer_than_segment_is_rejected() {
        assert!(TimeMachineConfig::new(
            L0,
            vec![AccelerationSegment { duration: 1e-9, acceleration: 0.0 }],
            2e-9,
            C
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn flux_decreases_with_acceleration(frac in 0.01f64..1.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
            prop_assume!(a < b);
            let g = geom();
            let x = g.x_from_proper_distance(frac * L0);
            let fa = tm_flux_for_acceleration(x, a * preset_g(), &g, L0).unwrap();
            let fb = tm_flux_for_acceleration(x, b * preset_g(), &g, L0).unwrap();
            prop_assert!(fb < fa);
        }

        #[test]
        fn static_outside_support(x in -0.05f64..0.05, a in -1.0f64..1.0, t in 0.0f64..3e-9) {
            let g = geom();
            prop_assume!(g.proper_distance(x) <= 0.0 || g.proper_distance(x) > L0);
            let tm = single(a * preset_g(), 0.0);
            prop_assert_eq!(tm_flux(x, t, &g, &tm).unwrap(), synthesize_flux_at(x, &g));
        }

        #[test]
        fn gamma_matches_velocity(g in 0.0f64..1e19, t_a in 0.0f64..1e-8) {
            let v = mouth_velocity(g, t_a, C);
            prop_assert!(v < C);
            let gamma = gamma_factor(g, t_a, C);
            let from_v = 1.0 / (1.0 - (v / C) * (v / C)).sqrt();
            // 1 − v² loses digits as v → c
            prop_assume!(gamma < 1e4);
            prop_assert!(((from_v - gamma) / gamma).abs() < 1e-12 * gamma * gamma);
        }
    }
}
