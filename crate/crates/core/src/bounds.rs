use crate::{Error, Result};

/// Axis-aligned box used to min-max normalize vectors to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension(format!(
                "bounds have {} lower and {} upper entries",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u)) {
            return Err(Error::InvalidConfig("every bound needs finite lower < upper".into()));
        }
        Ok(Self { lower, upper })
    }

    /// The unit box `[-1, 1]^dim`.
    pub fn symmetric_unit(dim: usize) -> Self {
        Self { lower: vec![-1.0; dim], upper: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.len() == self.dim() && v.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (l, u))| x >= l && x <= u)
    }

    /// Maps `v` from this box onto `[-1, 1]` per dimension.
    pub fn to_unit(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, u))| 2.0 * (x - l) / (u - l) - 1.0)
            .collect()
    }

    /// Inverse of [`BoxBounds::to_unit`], without clamping.
    pub fn from_unit(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (l, u))| l + (t + 1.0) * 0.5 * (u - l))
            .collect()
    }

    /// Clamps into the box; the flag reports whether any coordinate moved.
    pub fn clamp(&self, v: &[f64]) -> (Vec<f64>, bool) {
        let mut moved = false;
        let out = v
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, u))| {
                let c = x.clamp(*l, *u);
                moved |= c != *x;
                c
            })
            .collect();
        (out, moved)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mapping_round_trips() {
        let b = BoxBounds::new(vec![0.0, -2.0], vec![4.0, 2.0]).unwrap();
        assert_eq!(b.to_unit(&[0.0, 2.0]), vec![-1.0, 1.0]);
        assert_eq!(b.from_unit(&[0.0, 0.0]), vec![2.0, 0.0]);
        let (c, moved) = b.clamp(&[5.0, 0.0]);
        assert_eq!(c, vec![4.0, 0.0]);
        assert!(moved);
    }

    #[test]
    fn degenerate_bounds_rejected() {
        assert!(BoxBounds::new(vec![1.0], vec![1.0]).is_err());
        assert!(BoxBounds::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }
}
