//! Built-in flows: the radial plane and its stereographic image on the
//! punctured sphere, translations and the colina flow, trivial flows on
//! discrete spaces, suspensions over subshifts of finite type, time
//! rescalings, and a rotating-circles control with a non-isolated
//! singularity.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansivity::Notion;
use crate::flow::{conjugate_flow, Conjugacy, EvolveFn, FlowSpec, Singularities, VectorField};
use crate::num::{norm, Real};
use crate::periodic::Sft;
use crate::point::{Point, SymbolicPoint};
use crate::sample::CompactSample;
use crate::scale::{ScaleFn, ScaleKind};
use crate::space::{Discreteness, MetricSpace};

pub const DEFAULT_GUARD: f64 = 1e-12;
/// Largest compact sample a default suspension compact may hold.
pub const DEFAULT_CYLINDER_CAP: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSchema {
    pub name: String,
    pub kind: String,
    pub default: String,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureInfo {
    pub id: String,
    pub description: String,
    pub space: String,
    pub compact_space: bool,
    pub params: Vec<ParamSchema>,
}

fn param(name: &str, kind: &str, default: &str, description: &str) -> ParamSchema {
    ParamSchema { name: name.into(), kind: kind.into(), default: default.into(), description: description.into() }
}

pub fn list_fixtures() -> Vec<FixtureInfo> {
    let guard = param("guard", "float", "1e-12", "radius around removed points that counts as leaving the domain");
    let k_points = param("k_points", "integer", "256", "points in the default annular compact sample");
    let seed = param("seed", "integer", "0", "seed for sampled compacts");
    vec![
        FixtureInfo {
            id: "radial_plane".into(),
            description: "phi_t(w) = e^t w on the punctured plane".into(),
            space: "R^2 minus the origin, Euclidean".into(),
            compact_space: false,
            params: vec![guard.clone(), k_points.clone(), seed.clone()],
        },
        FixtureInfo {
            id: "punctured_sphere".into(),
            description: "radial flow carried to the sphere minus both poles by inverse stereographic projection"
                .into(),
            space: "S^2 minus the poles, chordal metric".into(),
            compact_space: false,
            params: vec![guard, k_points.clone(), seed.clone()],
        },
        FixtureInfo {
            id: "translation".into(),
            description: "phi_t(x) = x + t v".into(),
            space: "R^2, Euclidean".into(),
            compact_space: false,
            params: vec![
                param("v", "float list", "[1, 0]", "translation vector"),
                k_points.clone(),
                seed.clone(),
            ],
        },
        FixtureInfo {
            id: "colina".into(),
            description: "phi_t(x, y) = (x + t, e^t y), conjugate to translation by h(x, y) = (x, e^x y)".into(),
            space: "R^2, Euclidean".into(),
            compact_space: false,
            params: vec![
                param("ode_dt", "float", "none", "integrate the vector field (1, y) with RK4 at this step instead"),
                k_points,
                seed,
            ],
        },
        FixtureInfo {
            id: "trivial_discrete".into(),
            description: "identity flow on the lattice Z^2; every point is a singularity".into(),
            space: "Z^2 in R^2, uniformly discrete".into(),
            compact_space: false,
            params: vec![param("half", "integer", "10", "sample box [-half, half]^2")],
        },
        FixtureInfo {
            id: "trivial_nonuniform".into(),
            description: "identity flow on {n, n + 1/n : n >= 2}".into(),
            space: "subset of R, discrete but not uniformly discrete".into(),
            compact_space: false,
            params: vec![param("count", "integer", "1000", "number of sample points")],
        },
        FixtureInfo {
            id: "suspension".into(),
            description: "suspension of a subshift of finite type under a constant roof".into(),
            space: "symbolic sequences x [0, roof), max(2^-(common central block), |height difference|)".into(),
            compact_space: true,
            params: vec![
                param("adjacency", "0/1 matrix", "[[1, 1], [1, 1]]", "transition matrix; presets suspension:full2, suspension:golden"),
                param("roof", "float", "1", "constant roof"),
                param("depth", "integer", "auto", "cylinder depth of the default compact (auto: largest within 20000 points)"),
            ],
        },
        FixtureInfo {
            id: "time_scaled".into(),
            description: "t -> phi_{a t} for a base fixture".into(),
            space: "that of the base fixture".into(),
            compact_space: false,
            params: vec![
                param("base", "fixture id", "suspension:full2", "fixture to rescale"),
                param("a", "float", "2", "positive time scale"),
            ],
        },
        FixtureInfo {
            id: "rotating_circles".into(),
            description: "rotation on {0} and circles of radius 1/n; the singular origin is a limit of regular orbits"
                .into(),
            space: "subset of R^2, Euclidean".into(),
            compact_space: true,
            params: vec![param("circles", "integer", "40", "circles of radius 1/n for n = 2..=circles + 1")],
        },
    ]
}

/// Fixture parameters, as read from a configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureParams {
    pub v: Option<Vec<f64>>,
    pub a: Option<f64>,
    pub adjacency: Option<Vec<Vec<u8>>>,
    pub roof: Option<f64>,
    pub depth: Option<usize>,
    pub base: Option<String>,
    pub guard: Option<f64>,
    pub ode_dt: Option<f64>,
    pub k_points: Option<usize>,
    pub seed: Option<u64>,
    pub half: Option<i64>,
    pub count: Option<usize>,
    pub circles: Option<usize>,
}

/// A flow together with the defaults the estimators and falsifiers use.
#[derive(Clone, Debug)]
pub struct Fixture<T = f64> {
    pub id: String,
    pub flow: FlowSpec<T>,
    pub compact: CompactSample<T>,
    /// Positive continuous scales swept by `e*`.
    pub scale_family: Vec<ScaleFn<T>>,
    /// Constant scales for the classical estimate.
    pub eps_grid: Vec<T>,
    pub sft: Option<Sft<T>>,
    pub translation: Option<Vec<T>>,
    pub compact_space: bool,
    /// Flow time corresponding to one time unit of the underlying fixture
    /// (`1/a` after rescaling by `a`).
    pub time_unit: T,
}

/// Canonical fixture id: lower case, `-` read as `_`.
pub fn normalize_id(id: &str) -> String {
    id.trim().to_ascii_lowercase().replace('-', "_")
}

fn lit_vec<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn escape(flow: &str, detail: impl Into<String>) -> Error {
    Error::DomainEscape { flow: flow.into(), detail: detail.into() }
}

fn coords2<T: Real>(x: &Point<T>, flow: &str) -> Result<[T; 2]> {
    match x.coords() {
        Some([a, b]) => Ok([*a, *b]),
        _ => Err(Error::InvalidPoint(format!("{flow}: planar point expected"))),
    }
}

fn disc_sampler<T: Real>(r_max: f64) -> crate::flow::SampleFn<T> {
    Arc::new(move |rng: &mut ChaCha8Rng| {
        let r = r_max * rng.gen::<f64>().sqrt();
        let th = rng.gen::<f64>() * TAU;
        Point::from_f64s(&[r * th.cos(), r * th.sin()])
    })
}

fn annulus_sampler<T: Real>(r_in: f64, r_out: f64) -> crate::flow::SampleFn<T> {
    Arc::new(move |rng: &mut ChaCha8Rng| {
        let u: f64 = rng.gen();
        let r = (r_in * r_in + u * (r_out * r_out - r_in * r_in)).sqrt();
        let th = rng.gen::<f64>() * TAU;
        Point::from_f64s(&[r * th.cos(), r * th.sin()])
    })
}

/// Uniform point of the disc of the given radius around a vector point.
fn ball_perturb<T: Real>() -> crate::flow::PerturbFn<T> {
    Arc::new(|x: &Point<T>, radius: T, rng: &mut ChaCha8Rng| {
        let c = x.coords().expect("vector point");
        let r = radius.as_f64() * rng.gen::<f64>().sqrt();
        let mut dir: Vec<f64> = c.iter().map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let n = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-300);
        dir.iter_mut().for_each(|d| *d *= r / n);
        Point::Vector(c.iter().zip(&dir).map(|(&a, &d)| a + T::lit(d)).collect())
    })
}

/// `e^t w` on the plane minus the origin.
pub fn radial_plane<T: Real>(guard: T) -> FlowSpec<T> {
    let evolve: EvolveFn<T> = Arc::new(move |x, t| {
        let [a, b] = coords2(x, "radial_plane")?;
        if (a * a + b * b).sqrt() < guard {
            return Err(escape("radial_plane", "start point inside the puncture guard"));
        }
        let s = t.exp();
        let (u, v) = (s * a, s * b);
        if (u * u + v * v).sqrt() < guard {
            return Err(escape("radial_plane", format!("orbit reached the puncture at t = {t}")));
        }
        Point::vector(vec![u, v]).map_err(|e| escape("radial_plane", e.to_string()))
    });
    let samples = annulus(0.5, 2.0, 64, 11).points;
    FlowSpec::new("radial_plane", MetricSpace::euclidean("R^2 minus 0"), evolve)
        .with_samples(samples)
        .with_sampler(annulus_sampler(0.2, 3.0))
        .with_perturb(ball_perturb())
        .with_isolated_at_infinity(annulus(1.0, 2.0, 256, 0))
}

fn annulus<T: Real>(r_in: f64, r_out: f64, n: usize, seed: u64) -> CompactSample<T> {
    CompactSample::annulus(r_in, r_out, n, seed).expect("valid annulus")
}

/// Inverse stereographic projection from the north pole, `R^2 -> S^2`.
pub fn inverse_stereographic<T: Real>(guard: T) -> Conjugacy<T> {
    let forward = Arc::new(move |x: &Point<T>| {
        let [a, b] = coords2(x, "stereographic")?;
        let r2 = a * a + b * b;
        if !(r2 < T::lit(1e300)) {
            return Err(escape("punctured_sphere", "point at the north pole"));
        }
        let den = r2 + T::one();
        Point::vector(vec![T::lit(2.0) * a / den, T::lit(2.0) * b / den, (r2 - T::one()) / den])
    });
    let inverse = Arc::new(move |p: &Point<T>| {
        let c = p.coords().filter(|c| c.len() == 3).ok_or_else(|| Error::InvalidPoint("point of R^3 expected".into()))?;
        let (x, y, z) = (c[0], c[1], c[2]);
        let near_pole = |s: T| (x * x + y * y + (z - s) * (z - s)).sqrt() < guard;
        if near_pole(T::one()) || near_pole(-T::one()) {
            return Err(escape("punctured_sphere", "point inside a pole guard"));
        }
        let den = T::one() - z;
        Point::vector(vec![x / den, y / den])
    });
    Conjugacy {
        id: "inv_stereo".into(),
        forward,
        inverse,
        source_space: "R^2 minus 0".into(),
        target_space: MetricSpace::euclidean("S^2 minus poles (chordal)"),
    }
}

fn sphere_band_sampler<T: Real>() -> crate::flow::SampleFn<T> {
    Arc::new(|rng: &mut ChaCha8Rng| {
        let z: f64 = rng.gen_range(-0.95..0.95);
        let th = rng.gen::<f64>() * TAU;
        let r = (1.0 - z * z).sqrt();
        Point::from_f64s(&[r * th.cos(), r * th.sin(), z])
    })
}

/// Moves along a random tangent direction, then back onto the sphere.
fn sphere_perturb<T: Real>() -> crate::flow::PerturbFn<T> {
    Arc::new(|x: &Point<T>, radius: T, rng: &mut ChaCha8Rng| {
        let c: Vec<f64> = x.coords().expect("vector").iter().map(|v| v.as_f64()).collect();
        let mut u: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let dot: f64 = u.iter().zip(&c).map(|(a, b)| a * b).sum();
        u.iter_mut().zip(&c).for_each(|(a, b)| *a -= dot * b);
        let n = u.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
        let r = radius.as_f64() * rng.gen::<f64>();
        let mut y: Vec<f64> = c.iter().zip(&u).map(|(a, b)| a + r * b / n).collect();
        let m = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        y.iter_mut().for_each(|a| *a /= m);
        Point::from_f64s(&y)
    })
}

pub fn punctured_sphere<T: Real>(guard: T) -> Result<FlowSpec<T>> {
    let mut flow = conjugate_flow(&radial_plane(guard), &inverse_stereographic(guard))?;
    flow.id = "punctured_sphere".into();
    flow.sampler = Some(sphere_band_sampler());
    flow.perturb = Some(sphere_perturb());
    Ok(flow)
}

pub fn translation<T: Real>(v: &[T]) -> Result<FlowSpec<T>> {
    if v.len() != 2 || v.iter().all(|&c| c == T::zero()) {
        return Err(Error::invalid("translation needs a nonzero planar vector v"));
    }
    let w = v.to_vec();
    let evolve: EvolveFn<T> = Arc::new(move |x, t| {
        let [a, b] = coords2(x, "translation")?;
        Ok(Point::Vector(vec![a + t * w[0], b + t * w[1]]))
    });
    let id = format!("translation(v=[{}, {}])", v[0], v[1]);
    Ok(FlowSpec::new(id, MetricSpace::euclidean("R^2"), evolve)
        .with_samples(annulus(0.5, 2.0, 64, 12).points)
        .with_sampler(disc_sampler(3.0))
        .with_perturb(ball_perturb()))
}

pub fn colina<T: Real>() -> FlowSpec<T> {
    let evolve: EvolveFn<T> = Arc::new(|x, t| {
        let [a, b] = coords2(x, "colina")?;
        Ok(Point::Vector(vec![a + t, t.exp() * b]))
    });
    FlowSpec::new("colina", MetricSpace::euclidean("R^2"), evolve)
        .with_samples(annulus(0.5, 2.0, 64, 13).points)
        .with_sampler(disc_sampler(3.0))
        .with_perturb(ball_perturb())
}

/// Colina as the RK4 flow of the vector field `(1, y)`.
pub fn colina_integrated<T: Real>(dt: T) -> FlowSpec<T> {
    let field: VectorField<T> = Arc::new(|y: &[T]| vec![T::one(), y[1]]);
    FlowSpec::integrated("colina_rk4", MetricSpace::euclidean("R^2"), field, dt)
        .with_samples(annulus(0.5, 2.0, 64, 13).points)
        .with_sampler(disc_sampler(3.0))
        .with_perturb(ball_perturb())
}

/// `h(x, y) = (x, e^x y)`, taking translation by `(1, 0)` to colina.
pub fn colina_conjugacy<T: Real>() -> Conjugacy<T> {
    Conjugacy {
        id: "h_colina".into(),
        forward: Arc::new(|p: &Point<T>| {
            let [x, y] = coords2(p, "h_colina")?;
            Point::vector(vec![x, x.exp() * y])
        }),
        inverse: Arc::new(|p: &Point<T>| {
            let [x, y] = coords2(p, "h_colina")?;
            Point::vector(vec![x, (-x).exp() * y])
        }),
        source_space: "R^2".into(),
        target_space: MetricSpace::euclidean("R^2"),
    }
}

fn identity_evolve<T: Real>() -> EvolveFn<T> {
    Arc::new(|x, _| Ok(x.clone()))
}

pub fn trivial_discrete<T: Real>(half: i64) -> Result<FlowSpec<T>> {
    let box_sample = CompactSample::<T>::lattice_box(half)?;
    let h = half as f64;
    let space = MetricSpace::euclidean("Z^2").with_discreteness(Discreteness::UniformlyDiscrete { rho: T::lit(0.5) });
    Ok(FlowSpec::new("trivial_discrete", space, identity_evolve())
        .with_singularities(Singularities::Predicate(Arc::new(|_| true)))
        .with_isolation_radius(Arc::new(|_| T::lit(0.5)))
        .with_samples(box_sample.points)
        .with_sampler(Arc::new(move |rng: &mut ChaCha8Rng| {
            let i = rng.gen_range(-h..=h).round();
            let j = rng.gen_range(-h..=h).round();
            Point::from_f64s(&[i, j])
        }))
        .with_perturb(Arc::new(|x: &Point<T>, _r, rng: &mut ChaCha8Rng| {
            let c = x.coords().expect("vector");
            let (di, dj) = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)][rng.gen_range(0..4)];
            Point::Vector(vec![c[0] + T::lit(di), c[1] + T::lit(dj)])
        })))
}

/// `{n, n + 1/n : n >= 2}`, first `count` points in increasing order.
pub fn nonuniform_points(count: usize) -> Vec<f64> {
    (2..).flat_map(|n| [n as f64, n as f64 + 1.0 / n as f64]).take(count).collect()
}

pub fn trivial_nonuniform<T: Real>(count: usize) -> Result<FlowSpec<T>> {
    if count < 2 {
        return Err(Error::invalid("trivial_nonuniform needs at least 2 points"));
    }
    let pts = nonuniform_points(count);
    let samples: Vec<Point<T>> = pts.iter().map(|&p| Point::from_f64s(&[p])).collect();
    let draw = samples.clone();
    let space = MetricSpace::euclidean("{n, n+1/n}").with_discreteness(Discreteness::Discrete);
    Ok(FlowSpec::new("trivial_nonuniform", space, identity_evolve())
        .with_singularities(Singularities::Predicate(Arc::new(|_| true)))
        // the gap at n and n + 1/n is 1/n
        .with_isolation_radius(Arc::new(|x: &Point<T>| {
            let n = x.coords().expect("vector")[0].floor();
            T::lit(0.5) / n
        }))
        .with_samples(samples)
        .with_sampler(Arc::new(move |rng: &mut ChaCha8Rng| draw[rng.gen_range(0..draw.len())].clone()))
        .with_perturb(Arc::new(|x: &Point<T>, _r, _rng: &mut ChaCha8Rng| {
            let p = x.coords().expect("vector")[0];
            let n = p.floor();
            let partner = if p == n { n + T::one() / n } else { n };
            Point::Vector(vec![partner])
        })))
}

/// Suspension of `sft` under its constant roof.
pub fn suspension<T: Real>(id: &str, sft: &Sft<T>) -> Result<FlowSpec<T>> {
    let roof = sft.roof;
    let name = id.to_string();
    let evolve: EvolveFn<T> = Arc::new(move |x, t| {
        let s = x.symbolic().ok_or_else(|| Error::InvalidPoint(format!("{name}: symbolic point expected")))?;
        let total = s.height + t;
        let mut k = (total / roof).floor();
        let mut h = total - k * roof;
        if h >= roof {
            h = h - roof;
            k = k + T::one();
        }
        if h < T::zero() {
            h = T::zero();
        }
        let shift = k.to_i64().ok_or_else(|| escape(&name, format!("time {t} out of range")))?;
        Ok(Point::Symbolic(SymbolicPoint::new(s.word.clone(), s.offset - shift, h)))
    });
    let sampler_sft = sft.clone();
    let samples: Vec<Point<T>> = CompactSample::cylinder_representatives(sft, 6, T::zero())?
        .points
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let s = p.symbolic().expect("symbolic").clone();
            let h = roof * T::from_usize_lossy(i % 7) / T::lit(7.0);
            Point::Symbolic(SymbolicPoint::new(s.word, s.offset, h))
        })
        .collect();
    let depth = default_depth(sft, DEFAULT_CYLINDER_CAP).min(8);
    Ok(FlowSpec::new(id, MetricSpace::suspension(format!("{id} space")), evolve)
        .with_samples(samples)
        .with_isolated_at_infinity(CompactSample::cylinder_representatives(sft, depth, T::zero())?)
        .with_sampler(Arc::new(move |rng: &mut ChaCha8Rng| random_sequence_point(&sampler_sft, 12, rng)))
        .with_perturb(Arc::new(move |x: &Point<T>, r: T, rng: &mut ChaCha8Rng| {
            let s = x.symbolic().expect("symbolic");
            let dh = T::lit(rng.gen_range(-1.0..1.0)) * r;
            let h = (s.height + dh).max(T::zero()).min(roof * T::lit(1.0 - 1e-12));
            Point::Symbolic(SymbolicPoint::new(s.word.clone(), s.offset, h))
        })))
}

/// Admissible word on coordinates `[-half, half]` by a uniform random walk,
/// at a uniform height.
fn random_sequence_point<T: Real>(sft: &Sft<T>, half: usize, rng: &mut ChaCha8Rng) -> Point<T> {
    let len = 2 * half + 1;
    loop {
        let mut word = vec![rng.gen_range(0..sft.alphabet) as u8];
        while word.len() < len {
            let last = *word.last().expect("nonempty");
            let next: Vec<u8> = (0..sft.alphabet as u8).filter(|&b| sft.allowed(last, b)).collect();
            if next.is_empty() {
                break;
            }
            word.push(next[rng.gen_range(0..next.len())]);
        }
        if word.len() == len {
            let h = sft.roof * T::lit(rng.gen::<f64>());
            return Point::Symbolic(SymbolicPoint::new(word, -(half as i64), h));
        }
    }
}

/// Largest cylinder depth (at most 24) whose admissible word count fits `cap`.
pub fn default_depth<T: Real>(sft: &Sft<T>, cap: usize) -> usize {
    let traces_ok = |d: usize| count_words(sft, d) <= cap;
    (1..=24).take_while(|&d| traces_ok(d)).last().unwrap_or(1)
}

fn count_words<T: Real>(sft: &Sft<T>, len: usize) -> usize {
    let m = sft.alphabet;
    let mut v = vec![1usize; m];
    for _ in 1..len {
        v = (0..m)
            .map(|b| (0..m).filter(|&a| sft.allowed(a as u8, b as u8)).map(|a| v[a]).fold(0usize, |s, x| s.saturating_add(x)))
            .collect();
    }
    v.iter().fold(0usize, |s, &x| s.saturating_add(x))
}

pub fn rotating_circles<T: Real>(circles: usize) -> FlowSpec<T> {
    let evolve: EvolveFn<T> = Arc::new(|x, t| {
        let [a, b] = coords2(x, "rotating_circles")?;
        let (s, c) = t.sin_cos();
        Ok(Point::Vector(vec![c * a - s * b, s * a + c * b]))
    });
    let mut samples = vec![Point::from_f64s(&[0.0, 0.0])];
    for n in 2..circles + 2 {
        let r = 1.0 / n as f64;
        for k in 0..16 {
            let th = k as f64 * TAU / 16.0;
            samples.push(Point::from_f64s(&[r * th.cos(), r * th.sin()]));
        }
    }
    let draw = samples.clone();
    FlowSpec::new("rotating_circles", MetricSpace::euclidean("{0} and circles 1/n"), evolve)
        .with_singularities(Singularities::List(vec![Point::from_f64s(&[0.0, 0.0])]))
        .with_isolation_radius(Arc::new(|_| T::lit(0.25)))
        .with_samples(samples)
        .with_sampler(Arc::new(move |rng: &mut ChaCha8Rng| draw[rng.gen_range(1..draw.len())].clone()))
        .with_perturb(Arc::new(|_x: &Point<T>, _r, _rng: &mut ChaCha8Rng| Point::from_f64s(&[0.0, 0.0])))
}

/// `½ ‖v‖ ε e^{-‖x‖}`, the scale under which translations are topologically
/// expansive.
pub fn translation_scale<T: Real>(v: &[T], eps: T) -> ScaleFn<T> {
    let c = T::lit(0.5) * norm(v) * eps;
    ScaleFn::closed_form(
        format!("translation_scale(|v|={}, eps={eps})", norm(v)),
        ScaleKind::PositiveContinuous,
        Arc::new(move |x: &Point<T>| c * (-norm(x.coords().expect("vector"))).exp()),
    )
}

/// `ε e^{x}`: a constant scale on the translation side carried to colina.
pub fn colina_scale<T: Real>(eps: T) -> ScaleFn<T> {
    ScaleFn::closed_form(
        format!("colina_transport(eps={eps})"),
        ScaleKind::PositiveContinuous,
        Arc::new(move |p: &Point<T>| eps * p.coords().expect("vector")[0].exp()),
    )
}

/// `‖x‖`, vanishing exactly at the origin.
pub fn norm_scale<T: Real>() -> ScaleFn<T> {
    ScaleFn::closed_form(
        "norm",
        ScaleKind::VanishingOnSingularities,
        Arc::new(|x: &Point<T>| norm(x.coords().expect("vector"))),
    )
}

fn dyadic<T: Real>(lo: i32, hi: i32) -> Vec<T> {
    (lo..=hi).map(|k| T::lit(2f64.powi(-k))).collect()
}

fn constants<T: Real>(eps: &[T]) -> Vec<ScaleFn<T>> {
    eps.iter().map(|&e| ScaleFn::constant(e)).collect()
}

impl<T: Real> Fixture<T> {
    fn plain(id: &str, flow: FlowSpec<T>, compact: CompactSample<T>, eps: Vec<T>) -> Self {
        Self {
            id: id.into(),
            flow,
            compact,
            scale_family: constants(&eps),
            eps_grid: eps,
            sft: None,
            translation: None,
            compact_space: false,
            time_unit: T::one(),
        }
    }

    /// Replaces the constant scales, and the `e*` family built from them.
    pub fn set_eps_grid(&mut self, eps: Vec<T>) {
        self.scale_family = if self.id == "colina" {
            eps.iter().map(|&e| colina_scale(e)).collect()
        } else {
            constants(&eps)
        };
        self.eps_grid = eps;
    }

    /// Default scale for a falsification query.
    pub fn expansivity_delta(&self, notion: Notion, eps: T, constant: Option<T>) -> Result<ScaleFn<T>> {
        if let Some(c) = constant {
            if notion != Notion::RescalingExpansive {
                return Ok(ScaleFn::constant(c));
            }
        }
        match notion {
            Notion::Expansive => Ok(ScaleFn::constant(T::lit(0.05))),
            Notion::TopologicalExpansive => match &self.translation {
                Some(v) => Ok(translation_scale(v, eps)),
                None => Ok(ScaleFn::constant(T::lit(0.05))),
            },
            Notion::RescalingExpansive => match self.id.as_str() {
                "rotating_circles" => Ok(norm_scale()),
                _ => Err(Error::invalid(format!("no default rescaling scale for fixture {}", self.id))),
            },
        }
    }
}

/// Builds a fixture from its id (`-` and `_` are interchangeable).
pub fn build_fixture<T: Real>(id: &str, p: &FixtureParams) -> Result<Fixture<T>> {
    let nid = normalize_id(id);
    let guard = T::lit(p.guard.unwrap_or(DEFAULT_GUARD));
    let k_points = p.k_points.unwrap_or(256);
    let seed = p.seed.unwrap_or(0);
    let planar_eps: Vec<T> = dyadic(1, 3);
    match nid.as_str() {
        "radial_plane" => {
            let k = annulus(1.0, 2.0, k_points, seed);
            Ok(Fixture::plain("radial_plane", radial_plane(guard), k, planar_eps))
        }
        "punctured_sphere" => {
            let flow = punctured_sphere(guard)?;
            let h = inverse_stereographic(guard);
            let k = annulus::<T>(1.0, 2.0, k_points, seed).try_map("inv_stereo(annulus)", |x| (h.forward)(x))?;
            Ok(Fixture::plain("punctured_sphere", flow, k, planar_eps))
        }
        "translation" => {
            let v: Vec<T> = lit_vec(p.v.as_deref().unwrap_or(&[1.0, 0.0]));
            let mut f = Fixture::plain("translation", translation(&v)?, annulus(1.0, 2.0, k_points, seed), planar_eps);
            f.translation = Some(v);
            Ok(f)
        }
        "colina" => {
            let flow = match p.ode_dt {
                Some(dt) => colina_integrated(T::lit(dt)),
                None => colina(),
            };
            let h = colina_conjugacy::<T>();
            let k = annulus::<T>(1.0, 2.0, k_points, seed).try_map("h(annulus)", |x| (h.forward)(x))?;
            let mut f = Fixture::plain("colina", flow, k, planar_eps.clone());
            f.scale_family = planar_eps.iter().map(|&e| colina_scale(e)).collect();
            Ok(f)
        }
        "trivial_discrete" => {
            let flow = trivial_discrete(p.half.unwrap_or(10))?;
            Ok(Fixture::plain("trivial_discrete", flow, CompactSample::lattice_box(3)?, planar_eps))
        }
        "trivial_nonuniform" => {
            let flow = trivial_nonuniform(p.count.unwrap_or(1000))?;
            let k = CompactSample::new("first 40 points", flow.samples[..40].to_vec(), "{n, n+1/n}, n = 2..21", 0)?;
            Ok(Fixture::plain("trivial_nonuniform", flow, k, planar_eps))
        }
        "rotating_circles" => {
            let flow = rotating_circles(p.circles.unwrap_or(40));
            let k = CompactSample::new("circle samples", flow.samples.clone(), "origin and circles 1/n", 0)?;
            Ok(Fixture::plain("rotating_circles", flow, k, planar_eps))
        }
        s if s == "suspension" || s.starts_with("suspension:") => {
            let roof = T::lit(p.roof.unwrap_or(1.0));
            let (name, sft) = match s.strip_prefix("suspension:") {
                Some("full2") => ("suspension:full2".to_string(), Sft::full_shift(2, roof)?),
                Some("golden") => ("suspension:golden".to_string(), Sft::golden_mean(roof)?),
                Some(other) => return Err(Error::UnknownFixture(format!("suspension:{other}"))),
                None => {
                    let adj = p.adjacency.clone().unwrap_or_else(|| vec![vec![1, 1], vec![1, 1]]);
                    ("suspension".to_string(), Sft::new(adj, roof)?)
                }
            };
            let depth = p.depth.unwrap_or_else(|| default_depth(&sft, DEFAULT_CYLINDER_CAP));
            let k = CompactSample::cylinder_representatives(&sft, depth, T::zero())?;
            let eps = dyadic(2, 6);
            Ok(Fixture {
                id: name.clone(),
                flow: suspension(&name, &sft)?,
                compact: k,
                scale_family: constants(&eps),
                eps_grid: eps,
                sft: Some(sft),
                translation: None,
                compact_space: true,
                time_unit: T::one(),
            })
        }
        s if s == "time_scaled" || s.starts_with("time_scaled:") => {
            let base_id = s.strip_prefix("time_scaled:").map(str::to_string).or_else(|| p.base.clone());
            let base_id = base_id.unwrap_or_else(|| "suspension:full2".into());
            if normalize_id(&base_id).starts_with("time_scaled") {
                return Err(Error::invalid("time_scaled base must not itself be time_scaled"));
            }
            let a = T::lit(p.a.unwrap_or(2.0));
            let mut f = build_fixture::<T>(&base_id, p)?;
            f.flow = f.flow.time_scaled(a)?;
            f.time_unit = f.time_unit / a;
            f.id = format!("time_scaled({}, a={a})", f.id);
            Ok(f)
        }
        _ => Err(Error::UnknownFixture(id.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(p: &Point<f64>, want: &[f64], tol: f64) -> bool {
        p.coords().unwrap().iter().zip(want).all(|(a, b)| (a - b).abs() < tol)
    }

    #[test]
    fn radial_and_colina_closed_forms() {
        let r = radial_plane::<f64>(1e-12);
        assert!(close(&r.evaluate(&Point::from_f64s(&[1.0, 0.0]), 1.0).unwrap(), &[std::f64::consts::E, 0.0], 1e-15));
        let c = colina::<f64>();
        assert!(close(&c.evaluate(&Point::from_f64s(&[0.0, 1.0]), 1.0).unwrap(), &[1.0, std::f64::consts::E], 1e-15));
    }

    #[test]
    fn radial_flow_escapes_through_puncture() {
        let r = radial_plane::<f64>(1e-12);
        let err = r.evaluate(&Point::from_f64s(&[1.0, 0.0]), -40.0).unwrap_err();
        assert!(matches!(err, Error::DomainEscape { .. }));
    }

    #[test]
    fn ids_accept_hyphens() {
        let f = build_fixture::<f64>("punctured-sphere", &FixtureParams::default()).unwrap();
        assert_eq!(f.id, "punctured_sphere");
        assert!(matches!(build_fixture::<f64>("nope", &FixtureParams::default()), Err(Error::UnknownFixture(_))));
    }

    #[test]
    fn suspension_default_depths() {
        let full = build_fixture::<f64>("suspension:full2", &FixtureParams::default()).unwrap();
        assert_eq!(full.compact.len(), 16384);
        let golden = build_fixture::<f64>("suspension:golden", &FixtureParams::default()).unwrap();
        assert_eq!(golden.compact.len(), 17711);
    }

    #[test]
    fn suspension_shifts_at_the_roof() {
        let sft = Sft::<f64>::full_shift(2, 1.0).unwrap();
        let flow = suspension("s", &sft).unwrap();
        let x = Point::Symbolic(SymbolicPoint::new(vec![0u8, 1, 1], 0, 0.25));
        let y = flow.evaluate(&x, 2.5).unwrap();
        let s = y.symbolic().unwrap();
        assert_eq!((s.offset, s.height), (-2, 0.75));
        assert_eq!(s.symbol(0), Some(1));
    }

    #[test]
    fn time_scaled_suspension_shifts_twice_as_fast() {
        let f = build_fixture::<f64>("time-scaled", &FixtureParams { a: Some(2.0), ..Default::default() }).unwrap();
        assert_eq!(f.time_unit, 0.5);
        let x = f.compact.points[0].clone();
        let y = f.flow.evaluate(&x, 0.5).unwrap();
        assert_eq!(y.symbolic().unwrap().offset, -1);
    }

    #[test]
    fn catalog_lists_translation_and_sphere() {
        let ids: Vec<String> = list_fixtures().into_iter().map(|f| f.id).collect();
        assert!(ids.contains(&"translation".to_string()));
        assert!(ids.contains(&"punctured_sphere".to_string()));
    }
}
