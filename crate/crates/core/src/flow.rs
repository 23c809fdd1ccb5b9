//! Flows on metric spaces, conjugation, and fixed-step integration of
//! vector fields.

use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::point::Point;
use crate::sample::CompactSample;
use crate::space::MetricSpace;

pub type EvolveFn<T> = Arc<dyn Fn(&Point<T>, T) -> Result<Point<T>> + Send + Sync>;
pub type MapFn<T> = Arc<dyn Fn(&Point<T>) -> Result<Point<T>> + Send + Sync>;
pub type PredicateFn<T> = Arc<dyn Fn(&Point<T>) -> bool + Send + Sync>;
pub type RadiusFn<T> = Arc<dyn Fn(&Point<T>) -> T + Send + Sync>;
pub type SampleFn<T> = Arc<dyn Fn(&mut ChaCha8Rng) -> Point<T> + Send + Sync>;
/// Draws a point near `x` at distance at most (roughly) `radius`.
pub type PerturbFn<T> = Arc<dyn Fn(&Point<T>, T, &mut ChaCha8Rng) -> Point<T> + Send + Sync>;
pub type VectorField<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// Group-law tolerance for closed-form flows.
pub const TOL_GROUP_ANALYTIC: f64 = 1e-9;
/// Group-law tolerance for flows evaluated by fixed-step integration.
pub const TOL_GROUP_INTEGRATED: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Analytic,
    Integrated,
}

impl Precision {
    pub fn tol_group(self) -> f64 {
        match self {
            Precision::Analytic => TOL_GROUP_ANALYTIC,
            Precision::Integrated => TOL_GROUP_INTEGRATED,
        }
    }
}

#[derive(Clone)]
pub enum Singularities<T = f64> {
    None,
    List(Vec<Point<T>>),
    Predicate(PredicateFn<T>),
}

/// An evaluable flow together with the metadata the estimators and
/// falsifiers need. Immutable once built; `evaluate` is pure.
#[derive(Clone)]
pub struct FlowSpec<T = f64> {
    pub id: String,
    pub space: MetricSpace<T>,
    evolve: EvolveFn<T>,
    pub precision: Precision,
    pub singularities: Singularities<T>,
    /// Radius `r(sigma)` claimed for `B(sigma, r) = {sigma}` at singularities.
    pub isolation_radius: Option<RadiusFn<T>>,
    /// Compact set meeting every regular orbit, when the fixture has one.
    pub isolated_at_infinity: Option<CompactSample<T>>,
    /// Finite deterministic sample cloud of the space.
    pub samples: Vec<Point<T>>,
    pub sampler: Option<SampleFn<T>>,
    pub perturb: Option<PerturbFn<T>>,
}

impl<T> fmt::Debug for FlowSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowSpec")
            .field("id", &self.id)
            .field("space", &self.space)
            .field("precision", &self.precision)
            .finish_non_exhaustive()
    }
}

impl<T: Real> FlowSpec<T> {
    pub fn new(id: impl Into<String>, space: MetricSpace<T>, evolve: EvolveFn<T>) -> Self {
        Self {
            id: id.into(),
            space,
            evolve,
            precision: Precision::Analytic,
            singularities: Singularities::None,
            isolation_radius: None,
            isolated_at_infinity: None,
            samples: Vec::new(),
            sampler: None,
            perturb: None,
        }
    }

    /// Flow of an autonomous vector field on `R^n`, integrated with classical
    /// RK4 at a fixed step no larger than `dt`.
    pub fn integrated(id: impl Into<String>, space: MetricSpace<T>, field: VectorField<T>, dt: T) -> Self {
        let id = id.into();
        let name = id.clone();
        let evolve: EvolveFn<T> = Arc::new(move |x, t| {
            let y0 = x
                .coords()
                .ok_or_else(|| Error::InvalidPoint(format!("{name}: vector point expected")))?;
            Point::vector(rk4(&field, y0, t, dt)).map_err(|e| Error::DomainEscape {
                flow: name.clone(),
                detail: e.to_string(),
            })
        });
        let mut flow = Self::new(id, space, evolve);
        flow.precision = Precision::Integrated;
        flow
    }

    pub fn with_singularities(mut self, s: Singularities<T>) -> Self {
        self.singularities = s;
        self
    }

    pub fn with_samples(mut self, samples: Vec<Point<T>>) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_sampler(mut self, sampler: SampleFn<T>) -> Self {
        self.sampler = Some(sampler);
        self
    }

    pub fn with_perturb(mut self, perturb: PerturbFn<T>) -> Self {
        self.perturb = Some(perturb);
        self
    }

    pub fn with_isolation_radius(mut self, r: RadiusFn<T>) -> Self {
        self.isolation_radius = Some(r);
        self
    }

    pub fn with_isolated_at_infinity(mut self, k: CompactSample<T>) -> Self {
        self.isolated_at_infinity = Some(k);
        self
    }

    pub fn tol_group(&self) -> T {
        T::lit(self.precision.tol_group())
    }

    /// `phi_t(x)`. Exact identity at `t = 0`; a non-finite result is reported
    /// as a domain escape rather than returned.
    pub fn evaluate(&self, x: &Point<T>, t: T) -> Result<Point<T>> {
        if !t.is_finite() {
            return Err(Error::invalid(format!("non-finite time {t}")));
        }
        if t == T::zero() {
            return Ok(x.clone());
        }
        let y = (self.evolve)(x, t)?;
        if !y.is_finite() {
            return Err(Error::DomainEscape {
                flow: self.id.clone(),
                detail: format!("non-finite state at t = {t}"),
            });
        }
        Ok(y)
    }

    #[inline]
    pub fn distance(&self, a: &Point<T>, b: &Point<T>) -> T {
        self.space.distance(a, b)
    }

    pub fn is_singular(&self, x: &Point<T>) -> bool {
        match &self.singularities {
            Singularities::None => false,
            Singularities::List(list) => list.iter().any(|s| self.distance(s, x) == T::zero()),
            Singularities::Predicate(p) => p(x),
        }
    }

    /// Declared singularities among `points` (all of the list, or the
    /// points satisfying the predicate).
    pub fn declared_singularities(&self, points: &[Point<T>]) -> Vec<Point<T>> {
        match &self.singularities {
            Singularities::None => Vec::new(),
            Singularities::List(list) => list.clone(),
            Singularities::Predicate(p) => points.iter().filter(|x| p(x)).cloned().collect(),
        }
    }

    /// `d(phi_{s+t}(x), phi_t(phi_s(x)))`.
    pub fn group_law_residual(&self, x: &Point<T>, s: T, t: T) -> Result<T> {
        let direct = self.evaluate(x, s + t)?;
        let composed = self.evaluate(&self.evaluate(x, s)?, t)?;
        Ok(self.distance(&direct, &composed))
    }

    /// The time-rescaled flow `t -> phi_{a t}`.
    pub fn time_scaled(&self, a: T) -> Result<Self> {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::invalid(format!("time scale must be positive, got {a}")));
        }
        let base = self.clone();
        let mut scaled = self.clone();
        scaled.id = format!("time_scaled({}, a={})", self.id, a);
        scaled.evolve = Arc::new(move |x, t| base.evaluate(x, a * t));
        Ok(scaled)
    }
}

/// Fixed-step RK4 from `y0` over signed duration `t`.
fn rk4<T: Real>(field: &VectorField<T>, y0: &[T], t: T, dt: T) -> Vec<T> {
    let steps = (t.abs() / dt).ceil().to_usize().unwrap_or(1).max(1);
    let h = t / T::from_usize_lossy(steps);
    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let two = T::lit(2.0);
    let axpy = |y: &[T], k: &[T], a: T| -> Vec<T> { y.iter().zip(k).map(|(&yi, &ki)| yi + a * ki).collect() };
    let mut y = y0.to_vec();
    for _ in 0..steps {
        let k1 = field(&y);
        let k2 = field(&axpy(&y, &k1, half * h));
        let k3 = field(&axpy(&y, &k2, half * h));
        let k4 = field(&axpy(&y, &k3, h));
        for i in 0..y.len() {
            y[i] = y[i] + h * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
    }
    y
}

/// A homeomorphism `forward: source -> target` with its inverse.
#[derive(Clone)]
pub struct Conjugacy<T = f64> {
    pub id: String,
    pub forward: MapFn<T>,
    pub inverse: MapFn<T>,
    pub source_space: String,
    pub target_space: MetricSpace<T>,
}

impl<T: Real> Conjugacy<T> {
    pub fn identity(space: MetricSpace<T>) -> Self {
        Self {
            id: "identity".into(),
            forward: Arc::new(|x| Ok(x.clone())),
            inverse: Arc::new(|x| Ok(x.clone())),
            source_space: space.id.clone(),
            target_space: space,
        }
    }
}

impl<T> fmt::Debug for Conjugacy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Conjugacy")
            .field("id", &self.id)
            .field("source_space", &self.source_space)
            .field("target_space", &self.target_space)
            .finish_non_exhaustive()
    }
}

/// Transports `flow` along `h`: the result acts on the target space by
/// `psi_t = h ∘ phi_t ∘ h^{-1}`, so `h ∘ phi_t = psi_t ∘ h`.
///
/// Inverse consistency is checked on the flow's sample cloud in both spaces.
pub fn conjugate_flow<T: Real>(flow: &FlowSpec<T>, h: &Conjugacy<T>) -> Result<FlowSpec<T>> {
    let tol = flow.tol_group();
    let mut mapped_samples = Vec::with_capacity(flow.samples.len());
    for x in &flow.samples {
        let y = (h.forward)(x)?;
        let back = (h.inverse)(&y)?;
        let there = (h.forward)(&back)?;
        let residual = flow.distance(&back, x).max(h.target_space.distance(&there, &y));
        if !(residual < tol) {
            return Err(Error::InverseInconsistent { residual: residual.as_f64(), tolerance: tol.as_f64() });
        }
        mapped_samples.push(y);
    }

    let base = flow.clone();
    let fwd = h.forward.clone();
    let inv = h.inverse.clone();
    let evolve: EvolveFn<T> = Arc::new(move |y, t| fwd(&base.evaluate(&inv(y)?, t)?));
    let mut out = FlowSpec::new(format!("{}∘{}∘{}^-1", h.id, flow.id, h.id), h.target_space.clone(), evolve);
    out.precision = flow.precision;
    out.samples = mapped_samples;
    out.singularities = match &flow.singularities {
        Singularities::None => Singularities::None,
        Singularities::List(list) => {
            Singularities::List(list.iter().map(|s| (h.forward)(s)).collect::<Result<Vec<_>>>()?)
        }
        Singularities::Predicate(p) => {
            let p = p.clone();
            let inv = h.inverse.clone();
            Singularities::Predicate(Arc::new(move |y| inv(y).map(|x| p(&x)).unwrap_or(false)))
        }
    };
    if let Some(sampler) = &flow.sampler {
        let sampler = sampler.clone();
        let fwd = h.forward.clone();
        // resample until the draw lies in the domain of h
        out.sampler = Some(Arc::new(move |rng| loop {
            if let Ok(y) = fwd(&sampler(rng)) {
                return y;
            }
        }));
    }
    if let Some(k) = &flow.isolated_at_infinity {
        out.isolated_at_infinity = Some(k.try_map(format!("{}({})", h.id, k.id), |x| (h.forward)(x))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_matches_exponential() {
        let field: VectorField<f64> = Arc::new(|y| vec![1.0, y[1]]);
        let flow = FlowSpec::integrated("colina_ode", MetricSpace::euclidean("R2"), field, 1e-3);
        let y = flow.evaluate(&Point::from_f64s(&[0.0, 1.0]), 1.0).unwrap();
        let c = y.coords().unwrap();
        assert!((c[0] - 1.0).abs() < 1e-9);
        assert!((c[1] - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn evaluate_at_zero_is_exact_identity() {
        let field: VectorField<f64> = Arc::new(|y| vec![y[0] * 1e3]);
        let flow = FlowSpec::integrated("stiff", MetricSpace::euclidean("R"), field, 0.1);
        let x = Point::from_f64s(&[0.123456789]);
        assert_eq!(flow.evaluate(&x, 0.0).unwrap(), x);
    }

    #[test]
    fn blow_up_is_a_domain_escape() {
        let field: VectorField<f64> = Arc::new(|y| vec![y[0] * y[0]]);
        let flow = FlowSpec::integrated("blowup", MetricSpace::euclidean("R"), field, 0.01);
        let err = flow.evaluate(&Point::from_f64s(&[1.0]), 5.0).unwrap_err();
        assert!(matches!(err, Error::DomainEscape { .. }), "{err}");
    }

    #[test]
    fn time_scale_rejects_nonpositive() {
        let flow = FlowSpec::<f64>::new("id", MetricSpace::euclidean("R"), Arc::new(|x, _| Ok(x.clone())));
        assert!(flow.time_scaled(0.0).is_err());
        assert!(flow.time_scaled(-1.0).is_err());
    }
}
