//! Metric spaces and the metrics used by the fixtures.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::point::{Point, SymbolicPoint};

pub type MetricFn<T> = Arc<dyn Fn(&Point<T>, &Point<T>) -> T + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "tag", bound = "T: Real")]
pub enum Discreteness<T = f64> {
    None,
    Discrete,
    /// Every ball `B(x, rho)` is `{x}`.
    UniformlyDiscrete { rho: T },
}

/// Which closed form a metric follows, when known. Lets the separation
/// engine use packed kernels instead of calling the metric closure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    Euclidean,
    Suspension,
    Other,
}

#[derive(Clone)]
pub struct MetricSpace<T = f64> {
    pub id: String,
    metric: MetricFn<T>,
    pub discreteness: Discreteness<T>,
    pub kind: MetricKind,
}

impl<T: Real> MetricSpace<T> {
    pub fn new(id: impl Into<String>, metric: MetricFn<T>, discreteness: Discreteness<T>) -> Self {
        Self { id: id.into(), metric, discreteness, kind: MetricKind::Other }
    }

    pub fn euclidean(id: impl Into<String>) -> Self {
        Self { kind: MetricKind::Euclidean, ..Self::new(id, Arc::new(euclidean), Discreteness::None) }
    }

    pub fn suspension(id: impl Into<String>) -> Self {
        Self { kind: MetricKind::Suspension, ..Self::new(id, Arc::new(suspension_distance), Discreteness::None) }
    }

    pub fn with_discreteness(mut self, d: Discreteness<T>) -> Self {
        self.discreteness = d;
        self
    }

    #[inline]
    pub fn distance(&self, a: &Point<T>, b: &Point<T>) -> T {
        (self.metric)(a, b)
    }

    pub fn metric(&self) -> MetricFn<T> {
        self.metric.clone()
    }
}

impl<T> fmt::Debug for MetricSpace<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricSpace").field("id", &self.id).finish_non_exhaustive()
    }
}

/// Euclidean distance; points of mismatched kind or dimension are infinitely
/// far apart.
pub fn euclidean<T: Real>(a: &Point<T>, b: &Point<T>) -> T {
    match (a, b) {
        (Point::Vector(u), Point::Vector(v)) if u.len() == v.len() => u
            .iter()
            .zip(v)
            .fold(T::zero(), |acc, (&p, &q)| acc + (p - q) * (p - q))
            .sqrt(),
        _ => T::infinity(),
    }
}

/// `2^{-m}` where `m` is the length of the longest common central block
/// `x_{-(n-1)} .. x_{n-1}`, i.e. `m = 2n - 1` with `n` the first index (by
/// absolute value) where the sequences differ. Distance 1 when `x_0 != y_0`.
pub fn symbolic_distance<T: Real>(a: &SymbolicPoint<T>, b: &SymbolicPoint<T>) -> T {
    match a.first_disagreement(b) {
        None => T::zero(),
        Some(n) => symbolic_scale(n),
    }
}

/// Symbolic distance between sequences whose first disagreement is at `|i| = n`.
#[inline]
pub fn symbolic_scale<T: Real>(n: u64) -> T {
    if n == 0 {
        return T::one();
    }
    let m = (2 * n - 1).min(i32::MAX as u64) as i32;
    T::lit(2.0).powi(-m)
}

/// Product surrogate for a suspension metric: the larger of the symbolic
/// distance and the height difference.
pub fn suspension_distance<T: Real>(a: &Point<T>, b: &Point<T>) -> T {
    match (a, b) {
        (Point::Symbolic(p), Point::Symbolic(q)) => {
            let dh = (p.height - q.height).abs();
            symbolic_distance(p, q).max(dh)
        }
        _ => T::infinity(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(word: &[u8], offset: i64, h: f64) -> Point<f64> {
        Point::Symbolic(SymbolicPoint::new(word.to_vec(), offset, h))
    }

    #[test]
    fn symbolic_distance_powers() {
        let a = sym(&[0, 0, 0, 0, 0], -2, 0.0);
        assert_eq!(suspension_distance(&a, &a), 0.0);
        assert_eq!(suspension_distance(&a, &sym(&[0, 0, 1, 0, 0], -2, 0.0)), 1.0);
        // first difference at |i| = 1: common block x_0, length 1
        assert_eq!(suspension_distance(&a, &sym(&[0, 0, 0, 1, 0], -2, 0.0)), 0.5);
        // first difference at |i| = 2: common block x_{-1..1}, length 3
        assert_eq!(suspension_distance(&a, &sym(&[1, 0, 0, 0, 0], -2, 0.0)), 0.125);
    }

    #[test]
    fn height_dominates_when_larger() {
        let a = sym(&[0, 0, 0], -1, 0.0);
        let b = sym(&[0, 0, 0], -1, 0.3);
        assert!((suspension_distance(&a, &b) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn mismatched_kinds_are_infinitely_far() {
        let v = Point::<f64>::from_f64s(&[0.0, 0.0]);
        let s = sym(&[0], 0, 0.0);
        assert!(euclidean(&v, &s).is_infinite());
        assert!(euclidean(&v, &Point::from_f64s(&[0.0])).is_infinite());
    }
}
