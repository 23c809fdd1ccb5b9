//! `(t, δ, K)`-separated and spanning sets on a time grid, and `β(t, δ, K)`.
//!
//! Orbits of the sample points are tabulated once per compact; scale values
//! along them once per scale. Separated sets are found by a greedy pass over
//! a seeded order (a lower bound for `S`), spanning sets by greedy covering
//! (an upper bound for `R`). Samples with at most [`EXACT_LIMIT`] points are
//! solved exhaustively instead.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::num::Real;
use crate::point::Point;
use crate::sample::CompactSample;
use crate::scale::{ScaleFn, ScaleKind};
use crate::space::{symbolic_scale, MetricKind};

pub const EXACT_LIMIT: usize = 12;

/// Number of grid steps `k` with `k * dt <= t`.
pub fn grid_steps<T: Real>(t: T, dt: T) -> Result<usize> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::invalid(format!("t must be nonnegative, got {t}")));
    }
    let n = (t / dt + T::lit(1e-9)).floor();
    n.to_usize().ok_or_else(|| Error::invalid(format!("time grid t = {t}, dt = {dt} too large")))
}

/// Orbit segments `φ_{k dt}(z)`, `k = 0..=steps`, for every point of a compact.
pub struct OrbitTable<T = f64> {
    pub dt: T,
    pub steps: usize,
    points: Vec<Vec<Point<T>>>,
    metric: crate::space::MetricFn<T>,
    packed: Option<Packed<T>>,
}

/// Suspension orbits whose words never change along the orbit and whose
/// windows line up across the compact. Symbolic distance then only depends
/// on the set of positions where two words differ.
struct Packed<T> {
    bits: u32,
    len: usize,
    words: Vec<u128>,
    group_low: u128,
    /// Common window offset at each time step.
    offsets: Vec<i64>,
    heights: Vec<Vec<T>>,
    /// Every orbit has the same height sequence.
    flat: bool,
}

impl<T: Real> Packed<T> {
    fn build(points: &[Vec<Point<T>>], steps: usize) -> Option<Self> {
        let first = points.first()?[0].symbolic()?;
        let len = first.word.len();
        let max_sym = points.iter().flat_map(|o| o[0].symbolic().map(|s| s.word.iter().copied().max().unwrap_or(0)));
        let max_sym = max_sym.max()?;
        let bits = (u8::BITS - max_sym.leading_zeros()).max(1);
        if len == 0 || len as u32 * bits > 128 {
            return None;
        }
        let mut offsets = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            offsets.push(first_offset(&points[0][k])?);
        }
        let mut words = Vec::with_capacity(points.len());
        let mut heights = Vec::with_capacity(points.len());
        for orbit in points {
            let s0 = orbit[0].symbolic()?;
            if s0.word.len() != len {
                return None;
            }
            let mut hs = Vec::with_capacity(steps + 1);
            for (k, p) in orbit.iter().enumerate() {
                let s = p.symbolic()?;
                if s.offset != offsets[k] || (!std::sync::Arc::ptr_eq(&s.word, &s0.word) && s.word != s0.word) {
                    return None;
                }
                hs.push(s.height);
            }
            let mut w = 0u128;
            for (p, &sym) in s0.word.iter().enumerate() {
                w |= (sym as u128) << (p as u32 * bits);
            }
            words.push(w);
            heights.push(hs);
        }
        let mut group_low = 0u128;
        for p in 0..len {
            group_low |= 1u128 << (p as u32 * bits);
        }
        let flat = heights.iter().all(|h| h == &heights[0]);
        Some(Self { bits, len, words, group_low, offsets, heights, flat })
    }

    #[inline]
    fn diff(&self, i: usize, j: usize) -> u128 {
        let x = self.words[i] ^ self.words[j];
        let mut y = x;
        for s in 1..self.bits {
            y |= x >> s;
        }
        y & self.group_low
    }

    /// Bits of the word positions whose coordinate `c` at step `k` has `|c| <= m`.
    fn window(&self, k: usize, m: i64) -> u128 {
        if m < 0 {
            return 0;
        }
        let o = self.offsets[k];
        let lo = (-m - o).max(0);
        let hi = (m - o).min(self.len as i64 - 1);
        if lo > hi {
            return 0;
        }
        let top = (hi as u32 + 1) * self.bits;
        let upper = if top >= 128 { u128::MAX } else { (1u128 << top) - 1 };
        let lower = (1u128 << (lo as u32 * self.bits)) - 1;
        upper & !lower & self.group_low
    }
}

fn first_offset<T: Real>(p: &Point<T>) -> Option<i64> {
    p.symbolic().map(|s| s.offset)
}

/// Largest `n` with `cmp(symbolic_scale(n), delta)`, or -1 if none. Capped
/// at `cap`, beyond which every window is full anyway.
fn threshold<T: Real>(delta: T, cap: i64, cmp: impl Fn(T, T) -> bool) -> i64 {
    let mut n = -1;
    while n < cap && cmp(symbolic_scale::<T>((n + 1) as u64), delta) {
        n += 1;
    }
    n
}

impl<T: Real> OrbitTable<T> {
    pub fn build(flow: &FlowSpec<T>, k: &CompactSample<T>, t_max: T, dt: T) -> Result<Self> {
        let steps = grid_steps(t_max, dt)?;
        let points = k
            .points
            .par_iter()
            .map(|z| {
                (0..=steps)
                    .map(|s| flow.evaluate(z, T::from_usize_lossy(s) * dt))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let packed = if flow.space.kind == MetricKind::Suspension { Packed::build(&points, steps) } else { None };
        Ok(Self { dt, steps, points, metric: flow.space.metric(), packed })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn orbit(&self, i: usize) -> &[Point<T>] {
        &self.points[i]
    }

    /// Scale values along every tabulated orbit.
    pub fn scale_table(&self, delta: &ScaleFn<T>) -> ScaleTable<T> {
        let values: Vec<Vec<T>> =
            self.points.par_iter().map(|o| o.iter().map(|p| delta.evaluate(p)).collect()).collect();
        // running unions of the window masks and running minima of the
        // scale, so a pair test is one mask test per order
        let windows = self.packed.as_ref().map(|pk| {
            let cap = pk.len as i64 + pk.offsets.iter().map(|o| o.abs()).max().unwrap_or(0) + 1;
            values
                .par_iter()
                .map(|row| {
                    let (mut ge_acc, mut gt_acc) = (0u128, 0u128);
                    row.iter()
                        .enumerate()
                        .map(|(k, &d)| {
                            ge_acc |= pk.window(k, threshold(d, cap, |a, b| a >= b));
                            gt_acc |= pk.window(k, threshold(d, cap, |a, b| a > b));
                            (ge_acc, gt_acc)
                        })
                        .collect()
                })
                .collect()
        });
        let running_min = values
            .iter()
            .map(|row| {
                let mut m = T::infinity();
                row.iter().map(|&v| { m = m.min(v); m }).collect()
            })
            .collect();
        ScaleTable { id: delta.id.clone(), kind: delta.kind, constant: delta.as_constant(), values, windows, running_min }
    }

    /// Some step `k <= steps` has `d(φ x_i, φ x_j) >= δ(φ x_i)`.
    #[inline]
    pub fn separated_ordered(&self, d: &ScaleTable<T>, i: usize, j: usize, steps: usize) -> bool {
        if let (Some(pk), Some(win)) = (&self.packed, &d.windows) {
            if pk.diff(i, j) & win[i][steps].0 != 0 {
                return true;
            }
            if pk.flat {
                return d.running_min[i][steps] <= T::zero();
            }
            let (hi, hj) = (&pk.heights[i], &pk.heights[j]);
            return (0..=steps).any(|k| (hi[k] - hj[k]).abs() >= d.values[i][k]);
        }
        let (oi, oj) = (&self.points[i], &self.points[j]);
        (0..=steps).any(|k| (self.metric)(&oi[k], &oj[k]) >= d.values[i][k])
    }

    /// Both orders separated, as required of distinct members of a separated set.
    #[inline]
    pub fn separated(&self, d: &ScaleTable<T>, i: usize, j: usize, steps: usize) -> bool {
        if d.constant.is_some() {
            return self.separated_ordered(d, i, j, steps);
        }
        self.separated_ordered(d, i, j, steps) && self.separated_ordered(d, j, i, steps)
    }

    /// `d(φ x_c, φ x_x) <= δ(φ x_c)` at every step: `c` shadows `x`.
    #[inline]
    pub fn covers(&self, d: &ScaleTable<T>, c: usize, x: usize, steps: usize) -> bool {
        if let (Some(pk), Some(win)) = (&self.packed, &d.windows) {
            if pk.diff(c, x) & win[c][steps].1 != 0 {
                return false;
            }
            if pk.flat {
                return d.running_min[c][steps] >= T::zero();
            }
            let (hc, hx) = (&pk.heights[c], &pk.heights[x]);
            return (0..=steps).all(|k| (hc[k] - hx[k]).abs() <= d.values[c][k]);
        }
        let (oc, ox) = (&self.points[c], &self.points[x]);
        (0..=steps).all(|k| (self.metric)(&oc[k], &ox[k]) <= d.values[c][k])
    }

    /// Greedy inclusion-maximal separated set over `order`; exhaustive maximum
    /// for small samples. Returns sorted indices and the exactness flag.
    pub fn max_separated(&self, d: &ScaleTable<T>, steps: usize, order: &[usize]) -> (Vec<usize>, bool) {
        let n = self.len();
        if n <= EXACT_LIMIT {
            let compat: Vec<u32> = (0..n)
                .map(|i| (0..n).filter(|&j| j == i || self.separated(d, i, j, steps)).fold(0, |m, j| m | 1 << j))
                .collect();
            let mut best = 0u32;
            for mask in 1u32..1 << n {
                if mask.count_ones() > best.count_ones()
                    && (0..n).all(|i| mask & 1 << i == 0 || compat[i] & mask == mask)
                {
                    best = mask;
                }
            }
            return ((0..n).filter(|&i| best & 1 << i != 0).collect(), true);
        }
        let mut chosen: Vec<usize> = Vec::new();
        for &c in order {
            let ok = if chosen.len() >= 4096 {
                chosen.par_iter().all(|&e| self.separated(d, c, e, steps))
            } else {
                chosen.iter().all(|&e| self.separated(d, c, e, steps))
            };
            if ok {
                chosen.push(c);
            }
        }
        let exact = chosen.len() == n;
        chosen.sort_unstable();
        (chosen, exact)
    }

    /// Greedy cover over `order` by K-points; exhaustive minimum for small
    /// samples. Every point is rechecked against its recorded center.
    pub fn min_spanning(&self, d: &ScaleTable<T>, steps: usize, order: &[usize]) -> (Vec<usize>, bool) {
        let n = self.len();
        if n <= EXACT_LIMIT {
            let shadow: Vec<u32> = (0..n)
                .map(|c| (0..n).filter(|&x| self.covers(d, c, x, steps)).fold(0, |m, x| m | 1 << x))
                .collect();
            let full = (1u32 << n) - 1;
            let mut best = full;
            for mask in 1u32..=full {
                if mask.count_ones() < best.count_ones()
                    && (0..n).filter(|&c| mask & 1 << c != 0).fold(0, |u, c| u | shadow[c]) == full
                {
                    best = mask;
                }
            }
            return ((0..n).filter(|&i| best & 1 << i != 0).collect(), true);
        }
        let mut center: Vec<Option<usize>> = vec![None; n];
        let mut uncovered: Vec<usize> = (0..n).collect();
        let mut chosen = Vec::new();
        for &c in order {
            if center[c].is_some() {
                continue;
            }
            chosen.push(c);
            let covered = |x: usize| x == c || self.covers(d, c, x, steps);
            let flags: Vec<bool> = if uncovered.len() >= 4096 {
                uncovered.par_iter().map(|&x| covered(x)).collect()
            } else {
                uncovered.iter().map(|&x| covered(x)).collect()
            };
            let mut next = Vec::with_capacity(uncovered.len());
            for (&x, f) in uncovered.iter().zip(flags) {
                if f {
                    center[x] = Some(c);
                } else {
                    next.push(x);
                }
            }
            uncovered = next;
        }
        assert!(
            center.iter().enumerate().all(|(x, c)| c.is_some_and(|c| c == x || self.covers(d, c, x, steps))),
            "greedy cover left a point unshadowed"
        );
        chosen.sort_unstable();
        (chosen, false)
    }

    /// `min δ(φ_{k dt} z)` over the compact and `k <= steps`.
    pub fn beta(&self, d: &ScaleTable<T>, steps: usize) -> Result<T> {
        if d.kind == ScaleKind::Signed {
            return Err(Error::InvalidScaleKind { notion: "beta".into(), found: d.kind.to_string() });
        }
        let m = d.values.iter().flat_map(|row| row[..=steps].iter().copied()).fold(T::infinity(), T::min);
        if !(m > T::zero()) || !m.is_finite() {
            return Err(Error::BetaUndefined(d.id.clone()));
        }
        Ok(m)
    }
}

/// Scale values along an [`OrbitTable`].
pub struct ScaleTable<T = f64> {
    pub id: String,
    pub kind: ScaleKind,
    pub constant: Option<T>,
    values: Vec<Vec<T>>,
    /// Per point and step: union over earlier steps of the position masks
    /// for `>= δ` and `> δ`.
    windows: Option<Vec<Vec<(u128, u128)>>>,
    running_min: Vec<Vec<T>>,
}

/// Seeded visiting order for the greedy passes.
pub fn seeded_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SeparationReport<T = f64> {
    pub t_horizon: T,
    pub dt: T,
    pub k_id: String,
    pub k_size: usize,
    pub delta_id: String,
    pub seed: u64,
    /// Lower bound for `S` (exact when flagged).
    pub s_lower: Option<usize>,
    pub s_exact: bool,
    pub separated_witness: Vec<usize>,
    /// Upper bound for `R` over spanning sets drawn from the sample.
    pub r_upper: Option<usize>,
    pub r_exact: bool,
    pub spanning_witness: Vec<usize>,
    pub beta: Option<T>,
    pub k_restricted_spanning: bool,
}

impl<T: Real> SeparationReport<T> {
    pub const CSV_HEADER: &'static str = "t,dt,k_size,s_lower,r_upper,beta,exact,seed";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        let exact = self.s_lower.is_none_or(|_| self.s_exact) && self.r_upper.is_none_or(|_| self.r_exact);
        format!(
            "{},{},{},{},{},{},{},{}",
            crate::output::fmt17(self.t_horizon.as_f64()),
            crate::output::fmt17(self.dt.as_f64()),
            self.k_size,
            opt(self.s_lower),
            opt(self.r_upper),
            self.beta.map(|b| crate::output::fmt17(b.as_f64())).unwrap_or_default(),
            exact,
            self.seed
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Which {
    pub separated: bool,
    pub spanning: bool,
    pub beta: bool,
}

impl Which {
    pub const ALL: Which = Which { separated: true, spanning: true, beta: true };
}

/// Computes the requested parts of a separation report.
pub fn separation_report<T: Real>(
    flow: &FlowSpec<T>,
    k: &CompactSample<T>,
    t: T,
    delta: &ScaleFn<T>,
    dt: T,
    seed: u64,
    which: Which,
) -> Result<SeparationReport<T>> {
    let table = OrbitTable::build(flow, k, t, dt)?;
    let d = table.scale_table(delta);
    let steps = table.steps;
    let order = seeded_order(k.len(), seed);
    let mut report = SeparationReport {
        t_horizon: t,
        dt,
        k_id: k.id.clone(),
        k_size: k.len(),
        delta_id: delta.id.clone(),
        seed,
        s_lower: None,
        s_exact: false,
        separated_witness: Vec::new(),
        r_upper: None,
        r_exact: false,
        spanning_witness: Vec::new(),
        beta: None,
        k_restricted_spanning: true,
    };
    if which.separated {
        let (set, exact) = table.max_separated(&d, steps, &order);
        report.s_lower = Some(set.len());
        report.s_exact = exact;
        report.separated_witness = set;
    }
    if which.spanning {
        let (set, exact) = table.min_spanning(&d, steps, &order);
        report.r_upper = Some(set.len());
        report.r_exact = exact;
        report.spanning_witness = set;
    }
    if which.beta {
        report.beta = Some(table.beta(&d, steps)?);
    }
    Ok(report)
}

pub fn max_separated_set<T: Real>(
    flow: &FlowSpec<T>,
    k: &CompactSample<T>,
    t: T,
    delta: &ScaleFn<T>,
    dt: T,
    seed: u64,
) -> Result<SeparationReport<T>> {
    separation_report(flow, k, t, delta, dt, seed, Which { separated: true, spanning: false, beta: false })
}

pub fn min_spanning_set<T: Real>(
    flow: &FlowSpec<T>,
    k: &CompactSample<T>,
    t: T,
    delta: &ScaleFn<T>,
    dt: T,
    seed: u64,
) -> Result<SeparationReport<T>> {
    separation_report(flow, k, t, delta, dt, seed, Which { separated: false, spanning: true, beta: false })
}

pub fn beta<T: Real>(flow: &FlowSpec<T>, k: &CompactSample<T>, t: T, delta: &ScaleFn<T>, dt: T) -> Result<T> {
    let table = OrbitTable::build(flow, k, t, dt)?;
    table.beta(&table.scale_table(delta), table.steps)
}

/// Some grid time `s <= t` has `d(φ_s x, φ_s y) >= δ(φ_s x)`.
pub fn is_separated_pair<T: Real>(
    flow: &FlowSpec<T>,
    x: &Point<T>,
    y: &Point<T>,
    t: T,
    delta: &ScaleFn<T>,
    dt: T,
) -> Result<bool> {
    let steps = grid_steps(t, dt)?;
    for k in 0..=steps {
        let s = T::from_usize_lossy(k) * dt;
        let (px, py) = (flow.evaluate(x, s)?, flow.evaluate(y, s)?);
        if flow.distance(&px, &py) >= delta.evaluate(&px) {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricSpace;
    use std::sync::Arc;

    fn trivial(points: &[f64]) -> (FlowSpec<f64>, CompactSample<f64>) {
        let flow = FlowSpec::new("trivial", MetricSpace::euclidean("R"), Arc::new(|x: &Point<f64>, _| Ok(x.clone())));
        let pts = points.iter().map(|&x| Point::from_f64s(&[x])).collect();
        (flow, CompactSample::new("k", pts, "points", 0).unwrap())
    }

    #[test]
    fn grid_steps_counts_inclusive_grid() {
        assert_eq!(grid_steps(2.0, 0.5).unwrap(), 4);
        assert_eq!(grid_steps(0.3, 0.1).unwrap(), 3);
        assert_eq!(grid_steps(0.25, 0.1).unwrap(), 2);
        assert!(grid_steps(1.0, 0.0).is_err());
    }

    #[test]
    fn two_point_trivial_examples() {
        let delta = ScaleFn::constant(0.5);
        let (flow, k) = trivial(&[0.0, 1.0]);
        let r = separation_report(&flow, &k, 1.0, &delta, 0.5, 1, Which::ALL).unwrap();
        assert_eq!((r.s_lower, r.r_upper, r.beta), (Some(2), Some(2), Some(0.5)));
        assert!(r.s_exact && r.r_exact);
        let (flow, k) = trivial(&[0.0, 0.3]);
        let r = separation_report(&flow, &k, 1.0, &delta, 0.5, 1, Which::ALL).unwrap();
        assert_eq!((r.s_lower, r.r_upper), (Some(1), Some(1)));
    }

    #[test]
    fn single_point_spans() {
        let (flow, k) = trivial(&[4.0]);
        let r = min_spanning_set(&flow, &k, 3.0, &ScaleFn::constant(0.1), 1.0, 0).unwrap();
        assert_eq!(r.r_upper, Some(1));
    }

    #[test]
    fn identical_points_never_separate() {
        let (flow, _) = trivial(&[0.2]);
        let x = Point::from_f64s(&[0.2]);
        assert!(!is_separated_pair(&flow, &x, &x, 5.0, &ScaleFn::constant(1e-9), 0.1).unwrap());
    }

    #[test]
    fn beta_rejects_vanishing_values() {
        let (flow, k) = trivial(&[0.0, 1.0]);
        let v = ScaleFn::closed_form(
            "|x|",
            ScaleKind::VanishingOnSingularities,
            Arc::new(|x: &Point<f64>| x.coords().unwrap()[0].abs()),
        );
        assert!(matches!(beta(&flow, &k, 1.0, &v, 0.5), Err(Error::BetaUndefined(_))));
    }

    #[test]
    fn seeded_order_is_a_permutation() {
        let mut o = seeded_order(100, 9);
        assert_eq!(o, seeded_order(100, 9));
        o.sort_unstable();
        assert_eq!(o, (0..100).collect::<Vec<_>>());
    }
}
