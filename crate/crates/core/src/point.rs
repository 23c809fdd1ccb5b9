//! Points of the fixture spaces: finite real vectors or symbolic cylinder
//! codes carrying a suspension height.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Real")]
pub enum Point<T = f64> {
    Vector(Vec<T>),
    Symbolic(SymbolicPoint<T>),
}

/// A point of a suspension over a subshift.
///
/// Only a finite window of the bi-infinite sequence is stored: `word[k]` is
/// the symbol at coordinate `offset + k`. Coordinates outside the window are
/// unknown and the symbolic metric treats them as agreeing, so a point stands
/// for its cylinder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SymbolicPoint<T = f64> {
    pub word: Arc<[u8]>,
    pub offset: i64,
    pub height: T,
}

impl<T: Real> Point<T> {
    /// Builds a vector point, rejecting non-finite coordinates.
    pub fn vector(coords: Vec<T>) -> Result<Self> {
        if let Some(bad) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!("coordinate {bad} is not finite")));
        }
        Ok(Point::Vector(coords))
    }

    /// Shorthand for tests and fixtures with literal coordinates.
    pub fn from_f64s(coords: &[f64]) -> Self {
        Point::Vector(coords.iter().map(|&c| T::lit(c)).collect())
    }

    pub fn coords(&self) -> Option<&[T]> {
        match self {
            Point::Vector(v) => Some(v),
            Point::Symbolic(_) => None,
        }
    }

    pub fn symbolic(&self) -> Option<&SymbolicPoint<T>> {
        match self {
            Point::Symbolic(s) => Some(s),
            Point::Vector(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Point::Vector(v) => v.iter().all(|c| c.is_finite()),
            Point::Symbolic(s) => s.height.is_finite(),
        }
    }
}

impl<T: Real> SymbolicPoint<T> {
    pub fn new(word: impl Into<Arc<[u8]>>, offset: i64, height: T) -> Self {
        Self { word: word.into(), offset, height }
    }

    /// Symbol at coordinate `i`, if it lies inside the stored window.
    #[inline]
    pub fn symbol(&self, i: i64) -> Option<u8> {
        let k = i - self.offset;
        if k < 0 {
            return None;
        }
        self.word.get(k as usize).copied()
    }

    /// Coordinates `[lo, hi)` covered by the stored window.
    #[inline]
    pub fn window(&self) -> (i64, i64) {
        (self.offset, self.offset + self.word.len() as i64)
    }

    /// Smallest `|i|` at which both windows are known and the symbols differ.
    pub fn first_disagreement(&self, other: &Self) -> Option<u64> {
        let (alo, ahi) = self.window();
        let (blo, bhi) = other.window();
        let lo = alo.max(blo);
        let hi = ahi.min(bhi);
        if lo >= hi {
            return None;
        }
        let reach = lo.unsigned_abs().max((hi - 1).unsigned_abs());
        for j in 0..=reach as i64 {
            for i in [j, -j] {
                if i >= lo && i < hi && self.symbol(i) != other.symbol(i) {
                    return Some(j as u64);
                }
                if j == 0 {
                    break;
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_rejects_nan() {
        assert!(Point::<f64>::vector(vec![1.0, f64::NAN]).is_err());
        assert!(Point::<f64>::vector(vec![1.0, f64::INFINITY]).is_err());
        assert!(Point::<f64>::vector(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn symbol_lookup_respects_offset() {
        let p = SymbolicPoint::<f64>::new(vec![0u8, 1, 1], -1, 0.0);
        assert_eq!(p.symbol(-1), Some(0));
        assert_eq!(p.symbol(0), Some(1));
        assert_eq!(p.symbol(1), Some(1));
        assert_eq!(p.symbol(2), None);
        assert_eq!(p.symbol(-2), None);
    }

    #[test]
    fn first_disagreement_searches_outward() {
        let a = SymbolicPoint::<f64>::new(vec![0u8, 0, 0, 0, 0], -2, 0.0);
        let b = SymbolicPoint::<f64>::new(vec![1u8, 0, 0, 0, 0], -2, 0.0);
        assert_eq!(a.first_disagreement(&b), Some(2));
        let c = SymbolicPoint::<f64>::new(vec![0u8, 0, 1, 0, 0], -2, 0.0);
        assert_eq!(a.first_disagreement(&c), Some(0));
        assert_eq!(a.first_disagreement(&a.clone()), None);
    }

    #[test]
    fn unknown_coordinates_count_as_agreement() {
        let a = SymbolicPoint::<f64>::new(vec![0u8, 1], 0, 0.0);
        let b = SymbolicPoint::<f64>::new(vec![0u8, 1, 1, 1], 0, 0.0);
        assert_eq!(a.first_disagreement(&b), None);
    }
}
