use super::{HalocoreError, Result};

/// IR share of the IR/RGB-luma blend that hand tracking runs on.
pub const IR_WEIGHT: f64 = 0.7;

pub fn blend(ir: &[u16], rgb_luma: &[u16]) -> Result<Vec<u16>> {
    blend_with(ir, rgb_luma, IR_WEIGHT)
}

/// `ir_weight * ir + (1 - ir_weight) * luma`, rounded and clamped to `u16`.
pub fn blend_with(ir: &[u16], rgb_luma: &[u16], ir_weight: f64) -> Result<Vec<u16>> {
    if ir.len() != rgb_luma.len() {
        return Err(HalocoreError::DimensionMismatch(format!("ir has {} pixels, luma {}", ir.len(), rgb_luma.len())));
    }
    Ok(ir
        .iter()
        .zip(rgb_luma)
        .map(|(&a, &b)| (ir_weight * a as f64 + (1.0 - ir_weight) * b as f64).round().clamp(0.0, u16::MAX as f64) as u16)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        assert_eq!(blend(&[100], &[200]).unwrap(), vec![130]);
        assert_eq!(blend(&[5, 900], &[5, 900]).unwrap(), vec![5, 900]);
        assert_eq!(blend(&[u16::MAX], &[u16::MAX]).unwrap(), vec![u16::MAX]);
        assert_eq!(blend_with(&[u16::MAX], &[u16::MAX], 1.2).unwrap(), vec![u16::MAX]);
        assert!(blend(&[1, 2], &[1]).is_err());
    }
}
