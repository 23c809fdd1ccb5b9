//! Entropy estimates: Bowen–Dinaburg `e(φ)` on compact fixtures and the
//! invariant `e*(φ)` over swept compacts and scale families.
//!
//! Each `(K, δ)` cell yields the series `N(t)` (`S`, or `R` in spanning
//! mode) over the time grid. Its growth rate is the largest secant slope
//! of `log(N/β)` over the last two grid intervals; the estimate is the
//! maximum over the sweep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::num::Real;
use crate::sample::CompactSample;
use crate::scale::{ScaleFn, ScaleKind};
use crate::separation::{grid_steps, seeded_order, OrbitTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    ClassicalE,
    EStarSeparating,
    EStarSpanning,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Regression<T = f64> {
    pub slope: T,
    pub intercept: T,
}

/// Least-squares line through `(x, y)`; `None` with fewer than two distinct `x`.
pub fn linear_fit<T: Real>(pts: &[(T, T)]) -> Option<Regression<T>> {
    let n = T::from_usize_lossy(pts.len());
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == T::zero() {
        return None;
    }
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(Regression { slope, intercept: my - slope * mx })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SweepCell<T = f64> {
    pub k_id: String,
    pub delta_id: String,
    /// `S` or `R` at each grid time.
    pub counts: Vec<usize>,
    /// `β` at each grid time (`1` in classical mode).
    pub betas: Vec<T>,
    /// `(t, (1/t) log(N/β))`.
    pub per_t_rates: Vec<(T, T)>,
    pub tail_rate: T,
    pub regression: Option<Regression<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EntropyReport<T = f64> {
    pub estimate: T,
    pub mode: EntropyMode,
    pub t_grid: Vec<T>,
    pub dt: T,
    pub delta_family_id: Vec<String>,
    pub k_id: Vec<String>,
    /// Series of the cell attaining the estimate.
    pub per_t_rates: Vec<(T, T)>,
    /// Slope and intercept of `log(N/β)` against `t` for that cell.
    pub regression: Option<Regression<T>>,
    pub aggregation: String,
    pub seed: u64,
    /// The sweep covers finitely many compacts and scales.
    pub lower_estimate: bool,
    pub k_restricted_spanning: bool,
    pub sweep: Vec<SweepCell<T>>,
}

pub const AGGREGATION: &str = "max over the sweep of the largest secant slope of log(N/beta) on the last two t-grid intervals";

/// Growth rate of a `(t, log N)` series: the larger secant slope over the
/// last two intervals, `(1/t) log N` for a single point.
pub fn tail_rate<T: Real>(log_n: &[(T, T)]) -> T {
    match log_n.len() {
        0 => T::zero(),
        1 => log_n[0].1 / log_n[0].0,
        m => {
            let secant = |a: (T, T), b: (T, T)| (b.1 - a.1) / (b.0 - a.0);
            let last = secant(log_n[m - 2], log_n[m - 1]);
            if m >= 3 {
                last.max(secant(log_n[m - 3], log_n[m - 2]))
            } else {
                last
            }
        }
    }
}

fn check_grid<T: Real>(t_grid: &[T], dt: T) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::invalid("empty t grid"));
    }
    if t_grid.iter().any(|&t| !(t > T::zero())) || t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("t grid must be positive and strictly increasing"));
    }
    for &t in t_grid {
        grid_steps(t, dt)?;
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Count {
    Separated,
    Spanning,
}

/// `N(t)` for every grid time, skipping work once `N = |K|`.
fn count_series<T: Real>(
    table: &OrbitTable<T>,
    delta: &ScaleFn<T>,
    t_grid: &[T],
    dt: T,
    order: &[usize],
    count: Count,
    saturated_at: &[bool],
) -> Result<(Vec<usize>, Vec<T>, Option<usize>)> {
    let d = table.scale_table(delta);
    let n = table.len();
    let mut counts = Vec::with_capacity(t_grid.len());
    let mut betas = Vec::with_capacity(t_grid.len());
    let mut first_full = None;
    for (i, &t) in t_grid.iter().enumerate() {
        let steps = grid_steps(t, dt)?;
        let c = if first_full.is_some() || saturated_at[i] {
            n
        } else {
            match count {
                Count::Separated => table.max_separated(&d, steps, order).0.len(),
                Count::Spanning => table.min_spanning(&d, steps, order).0.len(),
            }
        };
        if c == n && first_full.is_none() {
            first_full = Some(i);
        }
        counts.push(c);
        betas.push(table.beta(&d, steps)?);
    }
    Ok((counts, betas, first_full))
}

fn make_cell<T: Real>(
    k_id: &str,
    delta_id: &str,
    t_grid: &[T],
    counts: Vec<usize>,
    betas: Vec<T>,
    normalize: bool,
) -> SweepCell<T> {
    let log_n: Vec<(T, T)> = t_grid
        .iter()
        .zip(counts.iter().zip(&betas))
        .map(|(&t, (&c, &b))| {
            let v = T::from_usize_lossy(c).ln() - if normalize { b.ln() } else { T::zero() };
            (t, v)
        })
        .collect();
    SweepCell {
        k_id: k_id.to_string(),
        delta_id: delta_id.to_string(),
        counts,
        betas,
        per_t_rates: log_n.iter().map(|&(t, v)| (t, v / t)).collect(),
        tail_rate: tail_rate(&log_n),
        regression: linear_fit(&log_n),
    }
}

fn assemble<T: Real>(
    mode: EntropyMode,
    t_grid: &[T],
    dt: T,
    deltas: Vec<String>,
    ks: Vec<String>,
    seed: u64,
    sweep: Vec<SweepCell<T>>,
) -> EntropyReport<T> {
    let best = sweep
        .iter()
        .enumerate()
        .fold(None::<usize>, |b, (i, c)| match b {
            Some(j) if sweep[j].tail_rate >= c.tail_rate => Some(j),
            _ => Some(i),
        })
        .expect("nonempty sweep");
    EntropyReport {
        estimate: sweep[best].tail_rate,
        mode,
        t_grid: t_grid.to_vec(),
        dt,
        delta_family_id: deltas,
        k_id: ks,
        per_t_rates: sweep[best].per_t_rates.clone(),
        regression: sweep[best].regression,
        aggregation: AGGREGATION.to_string(),
        seed,
        lower_estimate: mode != EntropyMode::ClassicalE,
        k_restricted_spanning: mode == EntropyMode::EStarSpanning,
        sweep,
    }
}

/// Bowen–Dinaburg entropy on a compact fixture, `K` the whole sampled space.
pub fn estimate_entropy_compact<T: Real>(
    flow: &FlowSpec<T>,
    k: &CompactSample<T>,
    eps_grid: &[T],
    t_grid: &[T],
    dt: T,
    seed: u64,
) -> Result<EntropyReport<T>> {
    check_grid(t_grid, dt)?;
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e > T::zero())) {
        return Err(Error::invalid("epsilon grid must be nonempty and positive"));
    }
    let table = OrbitTable::build(flow, k, *t_grid.last().expect("nonempty"), dt)?;
    let order = seeded_order(k.len(), seed);
    // larger epsilon first: once every pair separates at some t, it does for
    // all smaller epsilon too
    let mut eps: Vec<T> = eps_grid.to_vec();
    eps.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    eps.dedup();
    let mut saturated = vec![false; t_grid.len()];
    let mut sweep = Vec::with_capacity(eps.len());
    for &e in &eps {
        let delta = ScaleFn::constant(e);
        let (counts, _, first_full) = count_series(&table, &delta, t_grid, dt, &order, Count::Separated, &saturated)?;
        if let Some(i) = first_full {
            saturated[i..].iter_mut().for_each(|s| *s = true);
        }
        let ones = vec![T::one(); counts.len()];
        sweep.push(make_cell(&k.id, &delta.id, t_grid, counts, ones, false));
    }
    let deltas = eps.iter().map(|e| ScaleFn::constant(*e).id).collect();
    Ok(assemble(EntropyMode::ClassicalE, t_grid, dt, deltas, vec![k.id.clone()], seed, sweep))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StarMode {
    Separating,
    Spanning,
}

/// `e*` over the swept compacts and scales.
pub fn estimate_e_star<T: Real>(
    flow: &FlowSpec<T>,
    k_list: &[CompactSample<T>],
    delta_family: &[ScaleFn<T>],
    t_grid: &[T],
    dt: T,
    mode: StarMode,
    seed: u64,
) -> Result<EntropyReport<T>> {
    check_grid(t_grid, dt)?;
    if k_list.is_empty() || delta_family.is_empty() {
        return Err(Error::invalid("e* needs at least one compact and one scale"));
    }
    if let Some(bad) = delta_family.iter().find(|d| d.kind != ScaleKind::PositiveContinuous) {
        return Err(Error::InvalidScaleKind { notion: "e_star".into(), found: bad.kind.to_string() });
    }
    let count = match mode {
        StarMode::Separating => Count::Separated,
        StarMode::Spanning => Count::Spanning,
    };
    let mut sweep = Vec::new();
    for k in k_list {
        let table = OrbitTable::build(flow, k, *t_grid.last().expect("nonempty"), dt)?;
        let order = seeded_order(k.len(), seed);
        // constant scales in decreasing order share saturation like the
        // classical sweep; other scales are run independently
        let mut idx: Vec<usize> = (0..delta_family.len()).collect();
        idx.sort_by(|&a, &b| match (delta_family[a].as_constant(), delta_family[b].as_constant()) {
            (Some(x), Some(y)) => y.partial_cmp(&x).expect("finite"),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.cmp(&b),
        });
        let mut cells = vec![None; delta_family.len()];
        let mut saturated = vec![false; t_grid.len()];
        let none = vec![false; t_grid.len()];
        for &i in &idx {
            let delta = &delta_family[i];
            let sat = if delta.as_constant().is_some() { &saturated } else { &none };
            let (counts, betas, first_full) = count_series(&table, delta, t_grid, dt, &order, count, sat)?;
            if delta.as_constant().is_some() {
                if let Some(f) = first_full {
                    saturated[f..].iter_mut().for_each(|s| *s = true);
                }
            }
            cells[i] = Some(make_cell(&k.id, &delta.id, t_grid, counts, betas, true));
        }
        sweep.extend(cells.into_iter().map(|c| c.expect("every scale visited")));
    }
    let m = match mode {
        StarMode::Separating => EntropyMode::EStarSeparating,
        StarMode::Spanning => EntropyMode::EStarSpanning,
    };
    let deltas = delta_family.iter().map(|d| d.id.clone()).collect();
    let ks = k_list.iter().map(|k| k.id.clone()).collect();
    Ok(assemble(m, t_grid, dt, deltas, ks, seed, sweep))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Tolerance<T = f64> {
    pub absolute: T,
    pub relative: T,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self { absolute: T::lit(0.05), relative: T::lit(0.1) }
    }
}

impl<T: Real> Tolerance<T> {
    /// `max(absolute, relative * |reference|)`.
    pub fn at(&self, reference: T) -> T {
        self.absolute.max(self.relative * reference.abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "identity", bound = "T: Real")]
pub enum Identity<T = f64> {
    ConjugacyInvariance,
    CompactEquality,
    TimeRescale { a: T },
    SpanningEqualsSeparating,
}

/// One side of an identity check: a flow with its swept compacts and scales.
#[derive(Clone, Debug)]
pub struct Side<T = f64> {
    pub flow: FlowSpec<T>,
    pub k_list: Vec<CompactSample<T>>,
    pub deltas: Vec<ScaleFn<T>>,
}

#[derive(Clone, Debug)]
pub struct IdentityInstance<T = f64> {
    pub base: Side<T>,
    /// Conjugate flow with `h`-matched compacts and transported scales.
    pub partner: Option<Side<T>>,
    /// Constant scales for the classical estimate.
    pub eps_grid: Vec<T>,
    pub t_grid: Vec<T>,
    pub dt: T,
    pub seed: u64,
    pub tolerance: Tolerance<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct IdentityVerdict<T = f64> {
    pub identity: Identity<T>,
    pub lhs: T,
    pub rhs: T,
    pub margin: T,
    pub tolerance: T,
    pub pass: bool,
    /// `lhs / base estimate` for time rescaling.
    pub ratio: Option<T>,
    pub reports: Vec<EntropyReport<T>>,
}

fn e_star_side<T: Real>(s: &Side<T>, inst: &IdentityInstance<T>, mode: StarMode) -> Result<EntropyReport<T>> {
    estimate_e_star(&s.flow, &s.k_list, &s.deltas, &inst.t_grid, inst.dt, mode, inst.seed)
}

/// Numerical check of one of the `e*` identities. A failed comparison is a
/// verdict, not an error.
pub fn verify_identity<T: Real>(identity: Identity<T>, inst: &IdentityInstance<T>) -> Result<IdentityVerdict<T>> {
    let (lhs_r, rhs_r, rhs, ratio) = match &identity {
        Identity::ConjugacyInvariance => {
            let partner =
                inst.partner.as_ref().ok_or_else(|| Error::invalid("conjugacy check needs a partner flow"))?;
            let l = e_star_side(&inst.base, inst, StarMode::Separating)?;
            let r = e_star_side(partner, inst, StarMode::Separating)?;
            let rhs = r.estimate;
            (l, r, rhs, None)
        }
        Identity::CompactEquality => {
            let l = e_star_side(&inst.base, inst, StarMode::Separating)?;
            let k = inst.base.k_list.first().ok_or(Error::EmptyCloud)?;
            let r = estimate_entropy_compact(&inst.base.flow, k, &inst.eps_grid, &inst.t_grid, inst.dt, inst.seed)?;
            let rhs = r.estimate;
            (l, r, rhs, None)
        }
        Identity::TimeRescale { a } => {
            let a = *a;
            let scaled = inst.base.flow.time_scaled(a)?;
            let t_grid: Vec<T> = inst.t_grid.iter().map(|&t| t / a).collect();
            let base = e_star_side(&inst.base, inst, StarMode::Separating)?;
            let l = estimate_e_star(
                &scaled,
                &inst.base.k_list,
                &inst.base.deltas,
                &t_grid,
                inst.dt / a,
                StarMode::Separating,
                inst.seed,
            )?;
            let rhs = a * base.estimate;
            let ratio = (base.estimate != T::zero()).then(|| l.estimate / base.estimate);
            (l, base, rhs, ratio)
        }
        Identity::SpanningEqualsSeparating => {
            let l = e_star_side(&inst.base, inst, StarMode::Spanning)?;
            let r = e_star_side(&inst.base, inst, StarMode::Separating)?;
            let rhs = r.estimate;
            (l, r, rhs, None)
        }
    };
    let lhs = lhs_r.estimate;
    let margin = (lhs - rhs).abs();
    let tolerance = inst.tolerance.at(rhs);
    Ok(IdentityVerdict {
        identity,
        lhs,
        rhs,
        margin,
        tolerance,
        pass: margin <= tolerance,
        ratio,
        reports: vec![lhs_r, rhs_r],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_rate_uses_last_two_secants() {
        let s = [(1.0, 0.0), (2.0, 1.0), (3.0, 1.5)];
        assert_eq!(tail_rate(&s), 1.0);
        assert_eq!(tail_rate(&[(2.0, 1.0)]), 0.5);
    }

    #[test]
    fn fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        let r = linear_fit(&pts).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12 && (r.intercept - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[(1.0, 1.0), (1.0, 2.0)]).is_none());
    }

    #[test]
    fn tolerance_is_max_of_parts() {
        let t = Tolerance::<f64>::default();
        assert_eq!(t.at(0.1), 0.05);
        assert!((t.at(1.4) - 0.14).abs() < 1e-15);
    }
}
