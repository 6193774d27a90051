use std::f64::consts::PI;

use super::{MpisimError, Result};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_MODULATION_HZ: f64 = 50.0e6;

/// One return path at a pixel. `path_length` is the one-way equivalent
/// distance in millimeters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub amplitude: f64,
    pub path_length: f64,
}

impl PathComponent {
    pub const fn new(amplitude: f64, path_length: f64) -> Self {
        Self { amplitude, path_length }
    }
}

/// Unambiguous range `c / 2f` in millimeters.
pub fn unambiguous_range_mm(f: f64) -> f64 {
    SPEED_OF_LIGHT / (2.0 * f) * 1000.0
}

/// Depth a single-frequency continuous-wave sensor reports for the sum of
/// `components`.
pub fn phasor_depth(components: &[PathComponent], f: f64) -> Result<f64> {
    if components.is_empty() {
        return Err(MpisimError::NoPaths);
    }
    let range = unambiguous_range_mm(f);
    let mut total = 0.0;
    for c in components {
        if !(c.amplitude >= 0.0 && c.amplitude.is_finite()) {
            return Err(MpisimError::InvalidPath(format!("amplitude {}", c.amplitude)));
        }
        if !(c.path_length > 0.0 && c.path_length < range) {
            return Err(MpisimError::InvalidPath(format!(
                "path length {} mm outside (0, {range:.1}) mm",
                c.path_length
            )));
        }
        total += c.amplitude;
    }
    if total <= 0.0 {
        return Err(MpisimError::ZeroAmplitude);
    }
    Ok(phasor_depth_unchecked(components, f))
}

/// [`phasor_depth`] without validation, for the renderer's inner loop.
#[inline]
pub(crate) fn phasor_depth_unchecked(components: &[PathComponent], f: f64) -> f64 {
    // phase per mm of one-way path: 4 pi f / c
    let k = 4.0 * PI * f / (SPEED_OF_LIGHT * 1000.0);
    let (mut s, mut c) = (0.0, 0.0);
    for p in components {
        let (sin, cos) = (k * p.path_length).sin_cos();
        s += p.amplitude * sin;
        c += p.amplitude * cos;
    }
    let phase = s.atan2(c).rem_euclid(2.0 * PI);
    let d = phase / k;
    // rem_euclid can round up to exactly 2 pi
    if d >= unambiguous_range_mm(f) {
        0.0
    } else {
        d
    }
}

/// Depth of a direct return at `direct` mm mixed with a weaker return
/// `extra` mm longer, as seen at relative amplitude `a`.
#[inline]
pub(crate) fn two_path_depth(direct: f64, a: f64, extra: f64, f: f64) -> f64 {
    if a <= 0.0 {
        return direct;
    }
    // measured offset relative to the direct path; exact and cheaper than
    // summing absolute phasors
    let k = 4.0 * PI * f / (SPEED_OF_LIGHT * 1000.0);
    let (sin, cos) = (k * extra).sin_cos();
    direct + (a * sin).atan2(1.0 + a * cos) / k
}
