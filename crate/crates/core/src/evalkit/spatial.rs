use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{mean, sample_sd, EvalError, Result};

/// Chi-square quantile for 95% with two degrees of freedom.
pub const CHI2_2DOF_95: f64 = 5.991;

/// 95% confidence ellipse of the detections for one target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceEllipse {
    pub target: [f64; 2],
    pub center: [f64; 2],
    /// Semi-axes, major first, mm.
    pub axes: [f64; 2],
    /// Angle of the major axis from +x, degrees in (-90, 90].
    pub angle_deg: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialReport {
    /// Mean detected-minus-target vector over all pairs.
    pub global_offset: [f64; 2],
    /// Mean of the per-pair residuals after offset removal, before outlier
    /// rejection.
    pub mean_residual: [f64; 2],
    pub mean_euclidean_error: f64,
    pub sd: f64,
    pub outliers_removed: usize,
    pub points_used: usize,
    pub ellipses: Vec<ConfidenceEllipse>,
}

impl fmt::Display for SpatialReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "spatial accuracy over {} points ({} outliers removed)", self.points_used, self.outliers_removed)?;
        writeln!(f, "  global offset ({:.3}, {:.3}) mm", self.global_offset[0], self.global_offset[1])?;
        write!(f, "  mean error {:.3} mm, sd {:.3} mm", self.mean_euclidean_error, self.sd)?;
        for e in &self.ellipses {
            write!(
                f,
                "\n  target ({:.1}, {:.1}): center ({:.2}, {:.2}) axes {:.2} x {:.2} mm at {:.1} deg, n {}",
                e.target[0], e.target[1], e.center[0], e.center[1], e.axes[0], e.axes[1], e.angle_deg, e.points
            )?;
        }
        Ok(())
    }
}

fn ellipse(target: [f64; 2], pts: &[[f64; 2]]) -> ConfidenceEllipse {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let d = (n - 1.0).max(1.0);
    let (sxx, syy, sxy) = (sxx / d, syy / d, sxy / d);
    let half_tr = (sxx + syy) / 2.0;
    let disc = (((sxx - syy) / 2.0).powi(2) + sxy * sxy).sqrt();
    let (l1, l2) = (half_tr + disc, (half_tr - disc).max(0.0));
    let mut angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    if angle <= -std::f64::consts::FRAC_PI_2 {
        angle += std::f64::consts::PI;
    }
    ConfidenceEllipse {
        target,
        center: [cx, cy],
        axes: [(CHI2_2DOF_95 * l1).sqrt(), (CHI2_2DOF_95 * l2).sqrt()],
        angle_deg: angle.to_degrees(),
        points: pts.len(),
    }
}

/// Removes the global mean offset, drops pairs further than three standard
/// deviations from their target and summarizes the rest.
///
/// The deviation scale is the per-axis standard deviation of the
/// offset-free residuals, pooled over x and y.
pub fn spatial_accuracy(pairs: &[([f64; 2], [f64; 2])]) -> Result<SpatialReport> {
    if pairs.len() < 2 {
        return Err(EvalError::TooFewPoints { needed: 2, got: pairs.len() });
    }
    for (i, (d, t)) in pairs.iter().enumerate() {
        if !(d.iter().chain(t).all(|v| v.is_finite())) {
            return Err(EvalError::NonFinite(i));
        }
    }
    let dx: Vec<f64> = pairs.iter().map(|(d, t)| d[0] - t[0]).collect();
    let dy: Vec<f64> = pairs.iter().map(|(d, t)| d[1] - t[1]).collect();
    let offset = [mean(&dx), mean(&dy)];
    let residuals: Vec<[f64; 2]> = dx.iter().zip(&dy).map(|(x, y)| [x - offset[0], y - offset[1]]).collect();
    let rx: Vec<f64> = residuals.iter().map(|r| r[0]).collect();
    let ry: Vec<f64> = residuals.iter().map(|r| r[1]).collect();
    let mean_residual = [mean(&rx), mean(&ry)];

    let n = residuals.len() as f64;
    let sigma = (residuals.iter().map(|r| r[0] * r[0] + r[1] * r[1]).sum::<f64>() / (2.0 * (n - 1.0))).sqrt();
    let keep: Vec<bool> = residuals.iter().map(|r| sigma == 0.0 || r[0].hypot(r[1]) <= 3.0 * sigma).collect();
    let errors: Vec<f64> = residuals.iter().zip(&keep).filter(|(_, k)| **k).map(|(r, _)| r[0].hypot(r[1])).collect();

    let mut groups: BTreeMap<(u64, u64), ([f64; 2], Vec<[f64; 2]>)> = BTreeMap::new();
    for (((_, t), r), k) in pairs.iter().zip(&residuals).zip(&keep) {
        if !k {
            continue;
        }
        let entry = groups.entry((t[0].to_bits(), t[1].to_bits())).or_insert((*t, Vec::new()));
        entry.1.push([t[0] + r[0], t[1] + r[1]]);
    }
    let ellipses = groups.values().filter(|(_, pts)| pts.len() >= 2).map(|(t, pts)| ellipse(*t, pts)).collect();

    Ok(SpatialReport {
        global_offset: offset,
        mean_residual,
        mean_euclidean_error: mean(&errors),
        sd: sample_sd(&errors),
        outliers_removed: keep.iter().filter(|k| !**k).count(),
        points_used: errors.len(),
        ellipses,
    })
}
