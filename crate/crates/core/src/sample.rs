//! Finite point clouds standing in for compact subsets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::periodic::Sft;
use crate::point::{Point, SymbolicPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CompactSample<T = f64> {
    pub id: String,
    pub points: Vec<Point<T>>,
    pub region: String,
    pub seed: u64,
}

impl<T: Real> CompactSample<T> {
    pub fn new(id: impl Into<String>, points: Vec<Point<T>>, region: impl Into<String>, seed: u64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        Ok(Self { id: id.into(), points, region: region.into(), seed })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Image of the sample under a map (used for h-matched compacts).
    pub fn try_map<F>(&self, id: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(&Point<T>) -> Result<Point<T>>,
    {
        let points = self.points.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Self { id: id.into(), points, region: format!("image of [{}]", self.region), seed: self.seed })
    }

    /// Uniform (area) sample of the planar annulus `r_in <= |x| <= r_out`.
    pub fn annulus(r_in: f64, r_out: f64, n: usize, seed: u64) -> Result<Self> {
        if !(0.0 <= r_in && r_in < r_out) {
            return Err(Error::invalid(format!("annulus radii must satisfy 0 <= {r_in} < {r_out}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let r = (r_in * r_in + u * (r_out * r_out - r_in * r_in)).sqrt();
                let th = rng.gen::<f64>() * std::f64::consts::TAU;
                Point::from_f64s(&[r * th.cos(), r * th.sin()])
            })
            .collect();
        Self::new(format!("annulus[{r_in},{r_out}]x{n}"), points, format!("annulus r in [{r_in}, {r_out}], n = {n}"), seed)
    }

    /// Integer lattice points in `[-half, half]^2`.
    pub fn lattice_box(half: i64) -> Result<Self> {
        let mut points = Vec::new();
        for i in -half..=half {
            for j in -half..=half {
                points.push(Point::from_f64s(&[i as f64, j as f64]));
            }
        }
        Self::new(format!("lattice[-{half},{half}]^2"), points, format!("Z^2 ∩ [-{half}, {half}]^2"), 0)
    }

    /// One representative per admissible cylinder fixed on coordinates
    /// `0..depth`, all at suspension height `height`. Ordered
    /// lexicographically.
    pub fn cylinder_representatives(sft: &Sft<T>, depth: usize, height: T) -> Result<Self> {
        let words = sft.admissible_words(depth);
        let points = words
            .into_iter()
            .map(|w| Point::Symbolic(SymbolicPoint::new(w, 0, height)))
            .collect();
        Self::new(
            format!("cylinders(depth={depth})"),
            points,
            format!("admissible cylinders on coordinates [0, {depth}) at height {height}"),
            0,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_points_lie_in_annulus() {
        let k = CompactSample::<f64>::annulus(1.0, 2.0, 500, 3).unwrap();
        for p in &k.points {
            let r = crate::num::norm(p.coords().unwrap());
            assert!((1.0..=2.0).contains(&r));
        }
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(matches!(CompactSample::<f64>::new("k", vec![], "", 0), Err(Error::EmptyCloud)));
    }

    #[test]
    fn full_shift_cylinders() {
        let sft = Sft::<f64>::full_shift(2, 1.0).unwrap();
        let k = CompactSample::cylinder_representatives(&sft, 6, 0.0).unwrap();
        assert_eq!(k.len(), 64);
    }
}
