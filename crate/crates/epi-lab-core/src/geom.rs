//! Axis-aligned boxes in R^d used as integration domains and supports.

use crate::error::{Error, Result};

/// A closed axis-aligned box `[lo_1,hi_1] x ... x [lo_d,hi_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter(format!(
                "box must satisfy lo < hi per axis, got lo={lo:?} hi={hi:?}"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn axis(&self, i: usize) -> (f64, f64) {
        (self.lo[i], self.hi[i])
    }

    /// Smallest box containing both `self` and `other`.
    pub fn hull(&self, other: &BoxDomain) -> BoxDomain {
        BoxDomain {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.min(*b))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.max(*b))
                .collect(),
        }
    }

    pub fn intersects(&self, other: &BoxDomain) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(other.lo.iter().zip(&other.hi))
            .all(|((alo, ahi), (blo, bhi))| alo <= bhi && blo <= ahi)
    }

    /// Minkowski sum, valid for boxes: per-axis interval sums.
    pub fn minkowski_sum(&self, other: &BoxDomain) -> BoxDomain {
        BoxDomain {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Collapse a list of boxes into pairwise-disjoint ones. Overlapping boxes
/// are merged into their hull, so the result covers the union (possibly more).
pub fn disjoint_cover(mut boxes: Vec<BoxDomain>) -> Vec<BoxDomain> {
    loop {
        let mut merged = false;
        'outer: for i in 0..boxes.len() {
            for j in (i + 1)..boxes.len() {
                if boxes[i].intersects(&boxes[j]) {
                    let b = boxes.swap_remove(j);
                    let h = boxes[i].hull(&b);
                    boxes[i] = h;
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            return boxes;
        }
    }
}
