use crate::error::{Error, Result};
use crate::raster::Mask;

/// Intersection over union. Two empty masks score 1.0.
pub fn mask_iou(a: &Mask, b: &Mask) -> Result<f64> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: a.dimensions(),
            found: b.dimensions(),
        });
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in a.bits().iter().zip(b.bits()) {
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures() {
        let a = Mask::from_pixels(4, 4, &[(0, 0), (1, 0)]).unwrap();
        let b = Mask::from_pixels(4, 4, &[(1, 0), (2, 0)]).unwrap();
        let c = Mask::from_pixels(4, 4, &[(3, 3)]).unwrap();
        assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(mask_iou(&a, &c).unwrap(), 0.0);
        assert_eq!(mask_iou(&a, &b).unwrap(), 1.0 / 3.0);
        assert_eq!(mask_iou(&Mask::empty(4, 4), &Mask::empty(4, 4)).unwrap(), 1.0);
        assert!(mask_iou(&a, &Mask::empty(3, 4)).is_err());
    }
}
