//! Falsification of the expansivity notions by searching point pairs and
//! piecewise-linear reparameterizations.
//!
//! A witness is a pair `(x, y)` with `y` off the orbit segment
//! `φ_{[-ε, ε]}(x)` and a reparameterization `α` keeping
//! `d(φ_t x, φ_{α(t)} y)` below `δ(φ_t x)` on the whole window `[-T, T]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::num::Real;
use crate::point::Point;
use crate::scale::{ScaleFn, ScaleKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Notion {
    Expansive,
    TopologicalExpansive,
    RescalingExpansive,
}

impl Notion {
    /// Rescaling expansivity compares with `<=`, the others with `<`.
    pub fn non_strict(self) -> bool {
        self == Notion::RescalingExpansive
    }

    fn close(self, d: f64, delta: f64) -> bool {
        if self.non_strict() {
            d <= delta
        } else {
            d < delta
        }
    }

    pub fn check_scale<T: Real>(self, delta: &ScaleFn<T>) -> Result<()> {
        let ok = match self {
            Notion::Expansive => delta.as_constant().is_some_and(|c| c > T::zero()),
            Notion::TopologicalExpansive => delta.kind == ScaleKind::PositiveContinuous,
            Notion::RescalingExpansive => delta.kind == ScaleKind::VanishingOnSingularities,
        };
        if ok {
            Ok(())
        } else {
            let found = if delta.as_constant().is_some() { "constant".to_string() } else { delta.kind.to_string() };
            Err(Error::InvalidScaleKind { notion: format!("{self:?}"), found })
        }
    }
}

/// Continuous piecewise-linear `α` with `α(0) = 0`, extended with slope 1
/// beyond the outer knots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Reparam<T = f64> {
    pub knot_times: Vec<T>,
    pub knot_values: Vec<T>,
}

impl<T: Real> Reparam<T> {
    pub fn new(knot_times: Vec<T>, knot_values: Vec<T>) -> Result<Self> {
        if knot_times.len() != knot_values.len() || knot_times.len() < 2 {
            return Err(Error::invalid("reparameterization needs matching knot times and values, at least two"));
        }
        if knot_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("knot times must be strictly increasing"));
        }
        match knot_times.iter().position(|&t| t == T::zero()) {
            Some(i) if knot_values[i] == T::zero() => {}
            _ => return Err(Error::invalid("reparameterization must have a knot at 0 with value 0")),
        }
        if knot_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("knot values must be finite"));
        }
        Ok(Self { knot_times, knot_values })
    }

    /// Identity on `[-window, window]` with `count` equally spaced knots
    /// (`count` odd, so 0 is a knot).
    pub fn identity(window: T, count: usize) -> Result<Self> {
        if count < 3 || count % 2 == 0 {
            return Err(Error::invalid(format!("knot count must be odd and >= 3, got {count}")));
        }
        let mid = count / 2;
        let h = window / T::from_usize_lossy(mid);
        let times: Vec<T> = (0..count)
            .map(|j| if j == mid { T::zero() } else { (T::from_usize_lossy(j) - T::from_usize_lossy(mid)) * h })
            .collect();
        Self::new(times.clone(), times)
    }

    pub fn evaluate(&self, t: T) -> T {
        let ts = &self.knot_times;
        let vs = &self.knot_values;
        let n = ts.len();
        if t <= ts[0] {
            return vs[0] + (t - ts[0]);
        }
        if t >= ts[n - 1] {
            return vs[n - 1] + (t - ts[n - 1]);
        }
        let i = ts.partition_point(|&k| k <= t) - 1;
        let u = (t - ts[i]) / (ts[i + 1] - ts[i]);
        vs[i] + u * (vs[i + 1] - vs[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SearchConfig<T = f64> {
    /// Screened pairs to search.
    pub pair_samples: usize,
    /// Draw limit per screened pair requested.
    pub draw_factor: usize,
    pub knot_count: usize,
    pub window_t: T,
    pub dt: T,
    pub seed: u64,
    /// Total budget of objective evaluations.
    pub iterations: u64,
    pub pair_budget: u64,
    pub restarts: usize,
    pub margin: T,
    pub batch: usize,
}

impl<T: Real> Default for SearchConfig<T> {
    fn default() -> Self {
        Self {
            pair_samples: 1000,
            draw_factor: 50,
            knot_count: 33,
            window_t: T::lit(20.0),
            dt: T::lit(0.1),
            seed: 0,
            iterations: 100_000,
            pair_budget: 2_000,
            restarts: 4,
            margin: T::lit(1e-3),
            batch: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailFlag {
    TailVerified,
    WindowOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Witness<T = f64> {
    pub x: Point<T>,
    pub y: Point<T>,
    pub alpha: Reparam<T>,
    pub window_t: T,
    pub dt: T,
    /// Max over the window grid of `d(φ_t x, φ_{α(t)} y) - δ(φ_t x)`.
    pub max_discrepancy: T,
    /// Min over `s ∈ [-ε, ε]` of `d(φ_s x, y)`.
    pub orbit_distinctness: T,
    pub margin: T,
    pub tail_flag: TailFlag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "result", bound = "T: Real")]
pub enum SearchResult<T = f64> {
    WitnessFound { witness: Witness<T> },
    NoWitness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExpansivityVerdict<T = f64> {
    pub flow_id: String,
    pub notion: Notion,
    pub eps: T,
    pub delta_id: String,
    pub result: SearchResult<T>,
    pub pairs_drawn: usize,
    pub pairs_screened: usize,
    pub pairs_searched: usize,
    pub iterations_used: u64,
    pub search: SearchConfig<T>,
    pub restriction: String,
}

impl<T: Real> ExpansivityVerdict<T> {
    pub fn witness(&self) -> Option<&Witness<T>> {
        match &self.result {
            SearchResult::WitnessFound { witness } => Some(witness),
            SearchResult::NoWitness => None,
        }
    }
}

fn time_grid<T: Real>(lo: T, hi: T, dt: T) -> Vec<T> {
    let n = ((hi - lo) / dt + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    (0..=n).map(|k| lo + T::from_usize_lossy(k) * dt).collect()
}

/// Min over the grid `s ∈ [-ε, ε]` of `d(φ_s x, y)`.
pub fn orbit_distinctness<T: Real>(flow: &FlowSpec<T>, x: &Point<T>, y: &Point<T>, eps: T, dt: T) -> Result<T> {
    let mut m = T::infinity();
    for s in time_grid(-eps, eps, dt) {
        m = m.min(flow.distance(&flow.evaluate(x, s)?, y));
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Screening<T = f64> {
    pub distance: T,
    pub delta_x: T,
    pub distinctness: T,
    pub admitted: bool,
}

/// A pair is searched only if `y` starts `δ`-close to `x` and is not on the
/// orbit segment `φ_{[-ε, ε]}(x)`.
pub fn screen_pair<T: Real>(
    flow: &FlowSpec<T>,
    notion: Notion,
    eps: T,
    delta: &ScaleFn<T>,
    x: &Point<T>,
    y: &Point<T>,
    cfg: &SearchConfig<T>,
) -> Result<Screening<T>> {
    let distance = flow.distance(x, y);
    let delta_x = delta.evaluate(x);
    let distinctness = orbit_distinctness(flow, x, y, eps, cfg.dt)?;
    let admitted = notion.close(distance.as_f64(), delta_x.as_f64()) && distinctness > cfg.margin;
    Ok(Screening { distance, delta_x, distinctness, admitted })
}

/// Discrepancies `d(φ_t x, φ_{α(t)} y) - δ(φ_t x)` along a fixed window grid.
struct Profile<'a, T> {
    flow: &'a FlowSpec<T>,
    y: &'a Point<T>,
    times: Vec<T>,
    x_orbit: Vec<Point<T>>,
    delta_x: Vec<T>,
}

impl<'a, T: Real> Profile<'a, T> {
    fn new(flow: &'a FlowSpec<T>, delta: &ScaleFn<T>, x: &Point<T>, y: &'a Point<T>, window: T, dt: T) -> Result<Self> {
        let times = time_grid(-window, window, dt);
        let x_orbit = times.iter().map(|&t| flow.evaluate(x, t)).collect::<Result<Vec<_>>>()?;
        let delta_x = x_orbit.iter().map(|p| delta.evaluate(p)).collect();
        Ok(Self { flow, y, times, x_orbit, delta_x })
    }

    fn at(&self, g: usize, alpha: &Reparam<T>) -> T {
        match self.flow.evaluate(self.y, alpha.evaluate(self.times[g])) {
            Ok(py) => self.flow.distance(&self.x_orbit[g], &py) - self.delta_x[g],
            Err(_) => T::infinity(),
        }
    }

    /// Grid indices strictly inside `(lo, hi)`.
    fn span(&self, lo: T, hi: T) -> std::ops::Range<usize> {
        let a = self.times.partition_point(|&t| t <= lo);
        let b = self.times.partition_point(|&t| t < hi);
        a..b.max(a)
    }
}

fn max_of<T: Real>(v: &[T]) -> T {
    v.iter().copied().fold(T::neg_infinity(), T::max)
}

fn accepts<T: Real>(notion: Notion, m: T) -> bool {
    if notion.non_strict() {
        m <= T::zero()
    } else {
        m < T::zero()
    }
}

struct PairOutcome<T> {
    iterations: u64,
    found: Option<(Reparam<T>, T)>,
}

/// Coordinate descent on the knot values from the identity and from
/// randomly shifted starts. One iteration is one local objective evaluation.
fn search_pair<T: Real>(
    profile: &Profile<'_, T>,
    notion: Notion,
    cfg: &SearchConfig<T>,
    budget: u64,
    rng: &mut ChaCha8Rng,
) -> Result<PairOutcome<T>> {
    let base = Reparam::identity(cfg.window_t, cfg.knot_count)?;
    let mid = cfg.knot_count / 2;
    let spacing = cfg.window_t / T::from_usize_lossy(mid);
    let n = base.knot_times.len();
    let mut used = 0u64;
    for restart in 0..=cfg.restarts {
        let mut alpha = base.clone();
        if restart > 0 {
            let shift = T::lit(rng.gen_range(-2.0..2.0));
            for j in (0..n).filter(|&j| j != mid) {
                alpha.knot_values[j] = alpha.knot_values[j] + shift + T::lit(rng.gen_range(-0.25..0.25));
            }
        }
        let mut disc: Vec<T> = (0..profile.times.len()).map(|g| profile.at(g, &alpha)).collect();
        used += 1;
        if accepts(notion, max_of(&disc)) {
            return Ok(PairOutcome { iterations: used, found: Some((alpha, max_of(&disc))) });
        }
        let mut step = spacing / T::lit(4.0);
        let min_step = T::lit(1e-4);
        while step >= min_step && used < budget {
            let mut improved = false;
            for j in (0..n).filter(|&j| j != mid) {
                let lo = if j == 0 { T::neg_infinity() } else { alpha.knot_times[j - 1] };
                let hi = if j + 1 == n { T::infinity() } else { alpha.knot_times[j + 1] };
                let span = profile.span(lo, hi);
                let current = max_of(&disc[span.clone()]);
                for dir in [T::one(), -T::one()] {
                    if used >= budget {
                        break;
                    }
                    let old = alpha.knot_values[j];
                    alpha.knot_values[j] = old + dir * step;
                    let trial: Vec<T> = span.clone().map(|g| profile.at(g, &alpha)).collect();
                    used += 1;
                    if max_of(&trial) < current {
                        disc[span.clone()].copy_from_slice(&trial);
                        improved = true;
                        let m = max_of(&disc);
                        if accepts(notion, m) {
                            return Ok(PairOutcome { iterations: used, found: Some((alpha, m)) });
                        }
                        break;
                    }
                    alpha.knot_values[j] = old;
                }
            }
            if !improved {
                step = step / T::lit(2.0);
            }
        }
        if used >= budget {
            break;
        }
    }
    Ok(PairOutcome { iterations: used, found: None })
}

const TAIL_OFFSETS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];

/// Both tails beyond `±T`: the pair distance must stay within the scale and
/// not grow, and the orbits must slow down monotonically (they settle
/// toward a limit set). Any domain escape leaves the witness window-only.
pub fn tail_check<T: Real>(
    flow: &FlowSpec<T>,
    notion: Notion,
    delta: &ScaleFn<T>,
    x: &Point<T>,
    y: &Point<T>,
    alpha: &Reparam<T>,
    window: T,
) -> TailFlag {
    let side = |sign: T| -> Option<bool> {
        let mut last_d = T::infinity();
        let mut last_speed = T::infinity();
        let mut prev: Option<(T, Point<T>)> = None;
        for &o in &TAIL_OFFSETS {
            let t = sign * (window + T::lit(o));
            let px = flow.evaluate(x, t).ok()?;
            let py = flow.evaluate(y, alpha.evaluate(t)).ok()?;
            let d = flow.distance(&px, &py);
            let dx = delta.evaluate(&px);
            if !notion.close(d.as_f64(), dx.as_f64()) || d > last_d {
                return Some(false);
            }
            last_d = d;
            if let Some((pt, pp)) = &prev {
                let speed = flow.distance(pp, &px) / (t - *pt).abs();
                if speed > last_speed {
                    return Some(false);
                }
                last_speed = speed;
            }
            prev = Some((t, px));
        }
        Some(true)
    };
    match (side(T::one()), side(-T::one())) {
        (Some(true), Some(true)) => TailFlag::TailVerified,
        _ => TailFlag::WindowOnly,
    }
}

/// Max discrepancy of `(x, y, α)` over the window grid for a given scale.
pub fn max_discrepancy<T: Real>(
    flow: &FlowSpec<T>,
    delta: &ScaleFn<T>,
    x: &Point<T>,
    y: &Point<T>,
    alpha: &Reparam<T>,
    window: T,
    dt: T,
) -> Result<T> {
    let mut m = T::neg_infinity();
    for t in time_grid(-window, window, dt) {
        let px = flow.evaluate(x, t)?;
        let py = flow.evaluate(y, alpha.evaluate(t))?;
        m = m.max(flow.distance(&px, &py) - delta.evaluate(&px));
    }
    Ok(m)
}

/// Independent recheck of a witness against `delta`: the discrepancy and
/// distinctness conditions, recomputed from scratch.
pub fn recheck_witness<T: Real>(
    flow: &FlowSpec<T>,
    notion: Notion,
    eps: T,
    delta: &ScaleFn<T>,
    w: &Witness<T>,
) -> Result<bool> {
    let m = max_discrepancy(flow, delta, &w.x, &w.y, &w.alpha, w.window_t, w.dt)?;
    let distinct = orbit_distinctness(flow, &w.x, &w.y, eps, w.dt)?;
    Ok(accepts(notion, m) && distinct > w.margin)
}

/// `(t, d(φ_t x, φ_{α(t)} y), δ(φ_t x))` along the window grid.
pub fn witness_profile<T: Real>(flow: &FlowSpec<T>, delta: &ScaleFn<T>, w: &Witness<T>) -> Result<Vec<(T, T, T)>> {
    time_grid(-w.window_t, w.window_t, w.dt)
        .into_iter()
        .map(|t| {
            let px = flow.evaluate(&w.x, t)?;
            let py = flow.evaluate(&w.y, w.alpha.evaluate(t))?;
            Ok((t, flow.distance(&px, &py), delta.evaluate(&px)))
        })
        .collect()
}

fn pair_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws the `index`-th candidate pair: `x` from the fixture sampler, `y`
/// from its perturbation kernel at radius `δ(x)`.
fn draw_pair<T: Real>(flow: &FlowSpec<T>, delta: &ScaleFn<T>, seed: u64, index: u64) -> Result<(Point<T>, Point<T>)> {
    let sampler = flow.sampler.as_ref().ok_or_else(|| Error::invalid(format!("fixture {} has no sampler", flow.id)))?;
    let perturb =
        flow.perturb.as_ref().ok_or_else(|| Error::invalid(format!("fixture {} has no perturbation kernel", flow.id)))?;
    let mut rng = pair_rng(seed, index);
    let x = sampler(&mut rng);
    let y = perturb(&x, delta.evaluate(&x), &mut rng);
    Ok((x, y))
}

/// Seeded falsification search. Screened pairs are searched in parallel
/// batches; the first witness in pair order wins, so results do not depend
/// on the worker count.
pub fn falsify<T: Real>(
    flow: &FlowSpec<T>,
    notion: Notion,
    eps: T,
    delta: &ScaleFn<T>,
    cfg: &SearchConfig<T>,
) -> Result<ExpansivityVerdict<T>> {
    notion.check_scale(delta)?;
    if !(eps > T::zero()) || !(cfg.dt > T::zero()) || !(cfg.window_t > T::zero()) {
        return Err(Error::invalid("eps, dt and window must be positive"));
    }
    Reparam::identity(cfg.window_t, cfg.knot_count)?;

    let mut verdict = ExpansivityVerdict {
        flow_id: flow.id.clone(),
        notion,
        eps,
        delta_id: delta.id.clone(),
        result: SearchResult::NoWitness,
        pairs_drawn: 0,
        pairs_screened: 0,
        pairs_searched: 0,
        iterations_used: 0,
        search: *cfg,
        restriction: format!(
            "piecewise-linear reparameterizations with {} knots on [-{}, {}]; times sampled every {}",
            cfg.knot_count, cfg.window_t, cfg.window_t, cfg.dt
        ),
    };
    let max_draws = cfg.pair_samples.saturating_mul(cfg.draw_factor.max(1));
    let mut next_draw = 0usize;
    while verdict.pairs_screened < cfg.pair_samples && verdict.iterations_used < cfg.iterations {
        // screen a batch of candidates, sequentially in draw order
        let mut batch = Vec::new();
        while batch.len() < cfg.batch.max(1)
            && verdict.pairs_screened + batch.len() < cfg.pair_samples
            && next_draw < max_draws
        {
            let (x, y) = draw_pair(flow, delta, cfg.seed, next_draw as u64)?;
            next_draw += 1;
            verdict.pairs_drawn += 1;
            if screen_pair(flow, notion, eps, delta, &x, &y, cfg)?.admitted {
                batch.push((next_draw as u64 - 1, x, y));
            }
        }
        if batch.is_empty() {
            break;
        }
        let remaining = cfg.iterations - verdict.iterations_used;
        let per_pair = cfg.pair_budget.min((remaining / batch.len() as u64).max(1));
        let outcomes: Vec<Result<PairOutcome<T>>> = batch
            .par_iter()
            .map(|(i, x, y)| {
                let profile = Profile::new(flow, delta, x, y, cfg.window_t, cfg.dt)?;
                let mut rng = pair_rng(cfg.seed ^ 0x9e37_79b9_7f4a_7c15, *i);
                search_pair(&profile, notion, cfg, per_pair, &mut rng)
            })
            .collect();
        for ((_, x, y), outcome) in batch.into_iter().zip(outcomes) {
            // pairs escaping the domain inside the window cannot be witnesses
            let outcome = match outcome {
                Ok(o) => o,
                Err(Error::DomainEscape { .. }) => PairOutcome { iterations: 0, found: None },
                Err(e) => return Err(e),
            };
            verdict.pairs_screened += 1;
            verdict.pairs_searched += 1;
            verdict.iterations_used += outcome.iterations;
            if let Some((alpha, m)) = outcome.found {
                let tail_flag = tail_check(flow, notion, delta, &x, &y, &alpha, cfg.window_t);
                let witness = Witness {
                    orbit_distinctness: orbit_distinctness(flow, &x, &y, eps, cfg.dt)?,
                    x,
                    y,
                    alpha,
                    window_t: cfg.window_t,
                    dt: cfg.dt,
                    max_discrepancy: m,
                    margin: cfg.margin,
                    tail_flag,
                };
                if !recheck_witness(flow, notion, eps, delta, &witness)? {
                    return Err(Error::invalid("witness failed its independent recheck"));
                }
                verdict.result = SearchResult::WitnessFound { witness };
                return Ok(verdict);
            }
        }
        if next_draw >= max_draws {
            break;
        }
    }
    Ok(verdict)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OffsetPair<T = f64> {
    pub x: Point<T>,
    pub y: Point<T>,
    /// `‖x - y‖ < δ(x) < ‖v‖ε` with `δ(x) = ½‖v‖ε e^{-‖x‖}`.
    pub premise_holds: bool,
    /// `(t, s(t) - t)` for the closest-approach time `s(t)` on `y`'s orbit.
    pub drift: Vec<(T, T)>,
    /// `‖(s(t) - t) v - (x - y)‖`, the part of `x - y` off the flow line.
    pub limit_residual: T,
    /// Recovered `α` with `y = φ_α(x)` along the flow line.
    pub alpha: Option<T>,
    pub alpha_within_eps: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OffsetReport<T = f64> {
    pub v: Vec<T>,
    pub eps: T,
    pub pairs: Vec<OffsetPair<T>>,
    /// Every pair that passed screening and shadows along the window
    /// recovered `|α| < ε`.
    pub pass: bool,
}

/// Reproduces the translation-flow argument on concrete pairs: the
/// closest-approach drift `(s(t) - t) v` is constant and equals the
/// component of `x - y` along `v`, and the offset `α` satisfies `|α| < ε`.
pub fn certify_translation_offsets<T: Real>(
    flow: &FlowSpec<T>,
    v: &[T],
    eps: T,
    pairs: &[(Point<T>, Point<T>)],
    window: T,
    dt: T,
) -> Result<OffsetReport<T>> {
    let vv: T = v.iter().map(|&c| c * c).sum();
    if !(vv > T::zero()) {
        return Err(Error::invalid("translation vector must be nonzero"));
    }
    let vn = vv.sqrt();
    let probe = Point::from_f64s(&vec![0.0; v.len()]);
    let moved = flow.evaluate(&probe, T::one())?;
    if moved.coords().map(|c| c.iter().zip(v).any(|(a, b)| (*a - *b).abs() > T::lit(1e-9))) != Some(false) {
        return Err(Error::invalid(format!("flow {} is not the translation by the given vector", flow.id)));
    }
    let mut out = Vec::with_capacity(pairs.len());
    let mut pass = true;
    for (x, y) in pairs {
        let (xc, yc) = match (x.coords(), y.coords()) {
            (Some(a), Some(b)) if a.len() == v.len() && b.len() == v.len() => (a, b),
            _ => return Err(Error::invalid("translation pairs must be vector points of the flow's dimension")),
        };
        let diff: Vec<T> = xc.iter().zip(yc).map(|(&a, &b)| a - b).collect();
        let dist = crate::num::norm(&diff);
        let delta_x = T::lit(0.5) * vn * eps * (-crate::num::norm(xc)).exp();
        let premise_holds = dist < delta_x && delta_x < vn * eps;
        let along: T = diff.iter().zip(v).map(|(&d, &c)| d * c).sum::<T>() / vv;
        let mut drift = Vec::new();
        if premise_holds {
            for t in time_grid(-window, window, dt) {
                // closest point of y's orbit to φ_t(x): s(t) - t = <x - y, v>/|v|^2
                let px = flow.evaluate(x, t)?;
                let py = flow.evaluate(y, t)?;
                let gap: T = px
                    .coords()
                    .expect("vector")
                    .iter()
                    .zip(py.coords().expect("vector"))
                    .zip(v)
                    .map(|((&a, &b), &c)| (a - b) * c)
                    .sum::<T>()
                    / vv;
                drift.push((t, gap));
            }
        }
        let limit_residual =
            crate::num::norm(&diff.iter().zip(v).map(|(&d, &c)| along * c - d).collect::<Vec<_>>());
        let alpha = premise_holds.then(|| -along);
        let alpha_within_eps = alpha.is_some_and(|a| a.abs() < eps);
        if premise_holds && !alpha_within_eps {
            pass = false;
        }
        out.push(OffsetPair {
            x: x.clone(),
            y: y.clone(),
            premise_holds,
            drift,
            limit_residual,
            alpha,
            alpha_within_eps,
        });
    }
    Ok(OffsetReport { v: v.to_vec(), eps, pairs: out, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct IsolationReport<T = f64> {
    pub flow_id: String,
    pub singularities: usize,
    /// `(singularity index, radius, closest other sample distance)` failures.
    pub failures: Vec<(usize, T, T)>,
    pub pass: bool,
}

/// For every declared singularity `σ`, no other sample lies in `B(σ, r(σ))`.
pub fn check_singularities_isolated<T: Real>(flow: &FlowSpec<T>) -> Result<IsolationReport<T>> {
    let sings = flow.declared_singularities(&flow.samples);
    if sings.is_empty() {
        return Ok(IsolationReport { flow_id: flow.id.clone(), singularities: 0, failures: Vec::new(), pass: true });
    }
    let radius = flow.isolation_radius.as_ref().ok_or_else(|| Error::MissingIsolationRadius(flow.id.clone()))?;
    let failures: Vec<(usize, T, T)> = sings
        .par_iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let r = radius(s);
            let closest = flow
                .samples
                .iter()
                .map(|y| flow.distance(s, y))
                .filter(|&d| d > T::zero())
                .fold(T::infinity(), T::min);
            (closest < r).then_some((i, r, closest))
        })
        .collect();
    Ok(IsolationReport { flow_id: flow.id.clone(), singularities: sings.len(), pass: failures.is_empty(), failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reparam_identity_and_extrapolation() {
        let a = Reparam::<f64>::identity(20.0, 33).unwrap();
        assert_eq!(a.knot_times.len(), 33);
        assert_eq!(a.evaluate(0.0), 0.0);
        assert!((a.evaluate(3.3) - 3.3).abs() < 1e-12);
        assert!((a.evaluate(-25.0) + 25.0).abs() < 1e-12);
    }

    #[test]
    fn reparam_requires_zero_knot() {
        assert!(Reparam::<f64>::new(vec![-1.0, 1.0], vec![-1.0, 1.0]).is_err());
        assert!(Reparam::<f64>::new(vec![-1.0, 0.0, 1.0], vec![0.0, 0.5, 1.0]).is_err());
        assert!(Reparam::<f64>::identity(5.0, 4).is_err());
    }

    #[test]
    fn reparam_interpolates_linearly() {
        let a = Reparam::<f64>::new(vec![-1.0, 0.0, 2.0], vec![-3.0, 0.0, 1.0]).unwrap();
        assert_eq!(a.evaluate(1.0), 0.5);
        assert_eq!(a.evaluate(-0.5), -1.5);
        assert_eq!(a.evaluate(3.0), 2.0);
    }

    #[test]
    fn notion_scale_kinds() {
        let c = ScaleFn::<f64>::constant(0.1);
        assert!(Notion::Expansive.check_scale(&c).is_ok());
        assert!(Notion::TopologicalExpansive.check_scale(&c).is_ok());
        assert!(Notion::RescalingExpansive.check_scale(&c).is_err());
    }
}
