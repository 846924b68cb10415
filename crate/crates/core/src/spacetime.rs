//! Geometry of the massless (zero redshift) wormhole reduced to 1D.
//!
//! The shape function is `b(r) = b₀²/r`. Positions along the line use the
//! lab coordinate `x` with `|x| = r − b₀`, so `x = 0` is the throat and the
//! sign of `x` picks the side.
//!
//! Light crosses the line at `c(x)² = c_base² (1 − b(r)/r)`. For this shape
//! function `dx / c(x) = dl / c_base`, which gives a closed form for
//! traversal times; [`WormholeGeometry::traversal_time`] still integrates
//! numerically so the two routes can be compared.

use alloc::vec::Vec;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::math::{abs, asinh, sqrt};
use crate::quadrature::{integrate, Tolerance};

/// Spatial part of a zero-redshift wormhole metric, in the lab coordinate.
///
/// Only [`WormholeGeometry`] ships; other shape functions can plug into
/// [`inverse_speed_integral`] through this trait.
pub trait ShapeFunction {
    fn throat_radius(&self) -> f64;

    /// `b(r)` for `r ≥ b₀`.
    fn shape(&self, r: f64) -> f64;

    /// `1 − b(r)/r` evaluated at `r = |x| + b₀`.
    ///
    /// Implementations should override this when a cancellation-free form
    /// exists; the default loses digits near the throat.
    fn speed_ratio_squared(&self, abs_x: f64) -> f64 {
        let r = abs_x + self.throat_radius();
        1.0 - self.shape(r) / r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `x < 0`
    Negative,
    /// `x > 0`
    Positive,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Negative => -1.0,
            Side::Positive => 1.0,
        }
    }
}

/// Wormhole with `b(r) = b₀²/r` seen by light of flat-space speed `c_base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WormholeGeometry {
    b0: f64,
    constants: PhysicalConstants,
}

/// Result of a ray traversal between two lab coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySegment {
    pub x_start: f64,
    pub x_end: f64,
    /// Coordinate time, never below `|x_end − x_start| / c_base`.
    pub elapsed: f64,
}

impl WormholeGeometry {
    pub fn new(b0: f64, constants: PhysicalConstants) -> Result<Self> {
        if !(b0.is_finite() && b0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "b0",
                value: b0,
                reason: "throat radius must be finite and > 0",
            });
        }
        Ok(Self { b0, constants })
    }

    /// The degenerate `b₀ = 0` line: no throat, light moves at `c_base`.
    pub fn flat(constants: PhysicalConstants) -> Self {
        Self { b0: 0.0, constants }
    }

    #[inline]
    pub fn b0(&self) -> f64 {
        self.b0
    }

    #[inline]
    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    #[inline]
    pub fn c_base(&self) -> f64 {
        self.constants.light_speed()
    }

    pub fn is_flat(&self) -> bool {
        self.b0 == 0.0
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if r >= self.b0 && r.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "r",
                value: r,
                reason: "radius must be >= b0 (inside the throat is unphysical)",
            })
        }
    }

    /// `b(r) = b₀²/r`.
    pub fn shape_b(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        if self.is_flat() {
            return Ok(0.0);
        }
        Ok(self.b0 * (self.b0 / r))
    }

    #[inline]
    pub fn r_from_x(&self, x: f64) -> f64 {
        abs(x) + self.b0
    }

    pub fn x_from_r(&self, r: f64, side: Side) -> Result<f64> {
        self.check_radius(r)?;
        Ok(side.sign() * (r - self.b0))
    }

    /// Signed proper radial distance, `l² = |x|(|x| + 2b₀)`.
    pub fn proper_distance(&self, x: f64) -> f64 {
        let ax = abs(x);
        let l = sqrt(ax * (ax + 2.0 * self.b0));
        if x < 0.0 {
            -l
        } else {
            l
        }
    }

    /// Inverse of [`proper_distance`](Self::proper_distance).
    pub fn x_from_proper_distance(&self, l: f64) -> f64 {
        let ax = libm::hypot(l, self.b0) - self.b0;
        if l < 0.0 {
            -ax
        } else {
            ax
        }
    }

    /// `c(x) = c_base sqrt(1 − b₀²/(|x| + b₀)²)`; zero at the throat.
    pub fn effective_speed(&self, x: f64) -> f64 {
        if self.is_flat() {
            return self.c_base();
        }
        self.c_base() * sqrt(self.speed_ratio_squared(abs(x)))
    }

    /// Coordinate time for light to go from `x_i` to `x_f` along the line.
    ///
    /// Integrated with adaptive Gauss–Kronrod after substituting
    /// `u = sqrt(|x|)` on each side of the throat, which removes the
    /// `1/sqrt(|x|)` singularity of `1/c(x)`.
    pub fn traversal_time(&self, x_i: f64, x_f: f64) -> RaySegment {
        let elapsed = if x_i == x_f {
            0.0
        } else if self.is_flat() {
            abs(x_f - x_i) / self.c_base()
        } else {
            let (lo, hi) = if x_i < x_f { (x_i, x_f) } else { (x_f, x_i) };
            let c = self.c_base();
            let t = if lo >= 0.0 {
                inverse_speed_integral(self, c, lo, hi)
            } else if hi <= 0.0 {
                inverse_speed_integral(self, c, -hi, -lo)
            } else {
                inverse_speed_integral(self, c, 0.0, -lo) + inverse_speed_integral(self, c, 0.0, hi)
            };
            t.max(abs(x_f - x_i) / c)
        };
        RaySegment {
            x_start: x_i,
            x_end: x_f,
            elapsed,
        }
    }

    /// Extra time relative to a flat line of the same length.
    pub fn delay_vs_flat(&self, x_i: f64, x_f: f64) -> f64 {
        let seg = self.traversal_time(x_i, x_f);
        (seg.elapsed - abs(x_f - x_i) / self.c_base()).max(0.0)
    }

    /// Height of the embedding surface above the throat plane,
    /// `z(r) = b₀ arccosh(r/b₀)`.
    pub fn embedding_height(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        if self.is_flat() {
            return Ok(0.0);
        }
        // arccosh(r/b0) = asinh(|l|/b0), better conditioned near the throat
        let l = sqrt((r - self.b0) * (r + self.b0));
        Ok(self.b0 * asinh(l / self.b0))
    }

    /// `(r, z)` pairs of the embedding diagram's upper sheet.
    pub fn embedding_profile(&self, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
        radii
            .iter()
            .map(|&r| self.embedding_height(r).map(|z| (r, z)))
            .collect()
    }
}

impl ShapeFunction for WormholeGeometry {
    fn throat_radius(&self) -> f64 {
        self.b0
    }

    fn shape(&self, r: f64) -> f64 {
        if self.is_flat() {
            0.0
        } else {
            self.b0 * (self.b0 / r)
        }
    }

    fn speed_ratio_squared(&self, abs_x: f64) -> f64 {
        if self.is_flat() {
            return 1.0;
        }
        let r = abs_x + self.b0;
        abs_x * (abs_x + 2.0 * self.b0) / (r * r)
    }
}

/// `∫ d|x| / c(x)` over `|x| ∈ [from, to]` on one side of the throat,
/// `0 ≤ from < to`.
pub fn inverse_speed_integral<S: ShapeFunction + ?Sized>(
    shape: &S,
    c_base: f64,
    from: f64,
    to: f64,
) -> f64 {
    debug_assert!(0.0 <= from && from <= to);
    let integrand = |u: f64| {
        let ax = u * u;
        2.0 * u / (c_base * sqrt(shape.speed_ratio_squared(ax)))
    };
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-12,
        max_intervals: 4000,
    };
    let r = integrate(integrand, sqrt(from), sqrt(to), &tol);
    debug_assert!(r.converged, "traversal quadrature did not converge: {r:?}");
    r.value
}
