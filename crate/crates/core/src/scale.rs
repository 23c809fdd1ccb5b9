//! Scale functions: positive continuous functions, functions vanishing
//! exactly on singularities, the `≪` refinement and grid interpolation.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::RadiusFn;
use crate::num::Real;
use crate::point::Point;
use crate::space::{MetricFn, MetricSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleKind {
    PositiveContinuous,
    VanishingOnSingularities,
    /// Real valued, no sign constraint (Dowker interpolants of signed data).
    Signed,
}

impl fmt::Display for ScaleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleKind::PositiveContinuous => "positive_continuous",
            ScaleKind::VanishingOnSingularities => "vanishing_on_singularities",
            ScaleKind::Signed => "signed",
        })
    }
}

#[derive(Clone)]
enum Repr<T> {
    Constant(T),
    ClosedForm(RadiusFn<T>),
    Scaled(T, Arc<ScaleFn<T>>),
    Refined(Arc<Refined<T>>),
    Grid(Arc<GridInterp<T>>),
}

struct Refined<T> {
    base: ScaleFn<T>,
    metric: MetricFn<T>,
    cloud: Vec<Point<T>>,
    base_on_cloud: Vec<T>,
}

/// An evaluable scalar function on the space with its kind tag.
#[derive(Clone)]
pub struct ScaleFn<T = f64> {
    pub id: String,
    pub kind: ScaleKind,
    repr: Repr<T>,
}

impl<T> fmt::Debug for ScaleFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScaleFn").field("id", &self.id).field("kind", &self.kind).finish_non_exhaustive()
    }
}

impl<T: Real> ScaleFn<T> {
    /// The constant function `c`. Kind is positive continuous for `c > 0`.
    pub fn constant(c: T) -> Self {
        let kind = if c > T::zero() { ScaleKind::PositiveContinuous } else { ScaleKind::Signed };
        Self { id: format!("const({c})"), kind, repr: Repr::Constant(c) }
    }

    pub fn closed_form(id: impl Into<String>, kind: ScaleKind, f: RadiusFn<T>) -> Self {
        Self { id: id.into(), kind, repr: Repr::ClosedForm(f) }
    }

    #[inline]
    pub fn evaluate(&self, x: &Point<T>) -> T {
        match &self.repr {
            Repr::Constant(c) => *c,
            Repr::ClosedForm(f) => f(x),
            Repr::Scaled(a, base) => *a * base.evaluate(x),
            Repr::Refined(r) => r.evaluate(x),
            Repr::Grid(g) => g.evaluate(x),
        }
    }

    pub fn as_constant(&self) -> Option<T> {
        match self.repr {
            Repr::Constant(c) => Some(c),
            _ => None,
        }
    }

    pub fn grid(&self) -> Option<&GridInterp<T>> {
        match &self.repr {
            Repr::Grid(g) => Some(g),
            _ => None,
        }
    }

    /// `a * self`, same kind for `a > 0`.
    pub fn scaled(&self, a: T) -> Self {
        if let Some(c) = self.as_constant() {
            return Self::constant(a * c);
        }
        let kind = if a > T::zero() { self.kind } else { ScaleKind::Signed };
        Self { id: format!("{a}*{}", self.id), kind, repr: Repr::Scaled(a, Arc::new(self.clone())) }
    }

    /// Checks the kind's sign constraints on the given points.
    pub fn validate_on(&self, samples: &[Point<T>], singular: impl Fn(&Point<T>) -> bool) -> Result<()> {
        for x in samples {
            let v = self.evaluate(x);
            let ok = match self.kind {
                ScaleKind::PositiveContinuous => v > T::zero() && v.is_finite(),
                ScaleKind::VanishingOnSingularities => {
                    if singular(x) {
                        v == T::zero()
                    } else {
                        v > T::zero() && v.is_finite()
                    }
                }
                ScaleKind::Signed => v.is_finite(),
            };
            if !ok {
                return Err(Error::invalid(format!("scale {} ({}) takes value {v} at {x:?}", self.id, self.kind)));
            }
        }
        Ok(())
    }
}

impl<T: Real> Refined<T> {
    fn evaluate(&self, x: &Point<T>) -> T {
        let rx = self.base.evaluate(x);
        let r = rx / T::lit(2.0);
        let mut m = rx;
        for (y, &ry) in self.cloud.iter().zip(&self.base_on_cloud) {
            if ry < m && (self.metric)(x, y) <= r {
                m = ry;
            }
        }
        m / T::lit(2.0)
    }
}

/// `γ(x) = ½ inf{ρ(y) : d(x, y) ≤ ρ(x)/2}` over `cloud ∪ {x}`.
///
/// For every `y` in the cloud, `d(x, y) < γ(x)` implies `γ(x) ≤ ρ(y)/2`.
pub fn refine_scale<T: Real>(rho: &ScaleFn<T>, space: &MetricSpace<T>, cloud: &[Point<T>]) -> Result<ScaleFn<T>> {
    if rho.kind != ScaleKind::PositiveContinuous {
        return Err(Error::InvalidScaleKind { notion: "refine_scale".into(), found: rho.kind.to_string() });
    }
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if let Some(c) = rho.as_constant() {
        return Ok(ScaleFn { id: format!("refine({})", rho.id), ..ScaleFn::constant(c / T::lit(2.0)) });
    }
    let base_on_cloud = cloud.iter().map(|y| rho.evaluate(y)).collect();
    Ok(ScaleFn {
        id: format!("refine({})", rho.id),
        kind: ScaleKind::PositiveContinuous,
        repr: Repr::Refined(Arc::new(Refined {
            base: rho.clone(),
            metric: space.metric(),
            cloud: cloud.to_vec(),
            base_on_cloud,
        })),
    })
}

/// `γ(x) < ρ(x)` at every sample.
pub fn check_strict_order<T: Real>(gamma: &ScaleFn<T>, rho: &ScaleFn<T>, samples: &[Point<T>]) -> bool {
    samples.iter().all(|x| gamma.evaluate(x) < rho.evaluate(x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LlViolation<T = f64> {
    pub pair: usize,
    pub distance: T,
    pub gamma_x: T,
    pub rho_y: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LlReport<T = f64> {
    pub pairs: usize,
    /// Pairs with `d(x, y) < γ(x)`.
    pub tested: usize,
    pub violations: Vec<LlViolation<T>>,
}

impl<T> LlReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sampled check of `γ ≪ ρ`: every tested pair must have `γ(x) < ρ(y)`.
pub fn check_ll<T: Real>(
    gamma: &ScaleFn<T>,
    rho: &ScaleFn<T>,
    space: &MetricSpace<T>,
    pairs: &[(Point<T>, Point<T>)],
) -> LlReport<T> {
    let mut tested = 0;
    let mut violations = Vec::new();
    for (i, (x, y)) in pairs.iter().enumerate() {
        let gx = gamma.evaluate(x);
        let d = space.distance(x, y);
        if !(d < gx) {
            continue;
        }
        tested += 1;
        let ry = rho.evaluate(y);
        if !(gx < ry) {
            violations.push(LlViolation { pair: i, distance: d, gamma_x: gx, rho_y: ry });
        }
    }
    LlReport { pairs: pairs.len(), tested, violations }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Lower,
    Upper,
}

/// Node values of a semicontinuous function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SemicontinuousSample<T = f64> {
    pub nodes: Vec<Point<T>>,
    pub values: Vec<T>,
    pub sense: Sense,
}

impl<T: Real> SemicontinuousSample<T> {
    pub fn new(nodes: Vec<Point<T>>, values: Vec<T>, sense: Sense) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::invalid(format!("{} nodes but {} values", nodes.len(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("semicontinuous sample values must be finite"));
        }
        Ok(Self { nodes, values, sense })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Real")]
pub enum GridLayout<T = f64> {
    /// Sorted distinct abscissae; linear between neighbours, constant beyond.
    Line { xs: Vec<T> },
    /// Rectilinear grid, value index `i * ys.len() + j`. Each cell is split
    /// along its diagonal into two triangles with linear interpolation.
    Rect { xs: Vec<T>, ys: Vec<T> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GridInterp<T = f64> {
    pub layout: GridLayout<T>,
    pub values: Vec<T>,
}

/// Index `i` with `xs[i] <= x <= xs[i+1]` and the local coordinate in
/// `[0, 1]`, clamping outside the range.
fn locate<T: Real>(xs: &[T], x: T) -> (usize, T) {
    let n = xs.len();
    if n == 1 || x <= xs[0] {
        return (0, T::zero());
    }
    if x >= xs[n - 1] {
        return (n - 2, T::one());
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    (i, (x - xs[i]) / (xs[i + 1] - xs[i]))
}

impl<T: Real> GridInterp<T> {
    /// Infers the layout from the node set: distinct 1-D nodes, or 2-D nodes
    /// forming a full rectilinear product grid.
    pub fn from_nodes(nodes: &[Point<T>], values: &[T]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if nodes.len() != values.len() {
            return Err(Error::invalid("node and value counts differ"));
        }
        let coords: Vec<&[T]> = nodes
            .iter()
            .map(|p| p.coords().ok_or_else(|| Error::invalid("grid nodes must be vector points")))
            .collect::<Result<_>>()?;
        let dim = coords[0].len();
        if coords.iter().any(|c| c.len() != dim) {
            return Err(Error::invalid("grid nodes have mixed dimensions"));
        }
        let sorted_distinct = |mut v: Vec<T>| {
            v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            v.dedup();
            v
        };
        match dim {
            1 => {
                let mut order: Vec<usize> = (0..nodes.len()).collect();
                order.sort_by(|&a, &b| coords[a][0].partial_cmp(&coords[b][0]).expect("finite"));
                let xs: Vec<T> = order.iter().map(|&i| coords[i][0]).collect();
                if xs.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::invalid("duplicate grid node"));
                }
                let values = order.iter().map(|&i| values[i]).collect();
                Ok(Self { layout: GridLayout::Line { xs }, values })
            }
            2 => {
                let xs = sorted_distinct(coords.iter().map(|c| c[0]).collect());
                let ys = sorted_distinct(coords.iter().map(|c| c[1]).collect());
                if xs.len() * ys.len() != nodes.len() {
                    return Err(Error::invalid("2-D grid nodes must form a full rectilinear grid"));
                }
                let mut grid = vec![None; nodes.len()];
                for (c, &v) in coords.iter().zip(values) {
                    let i = xs.partition_point(|&a| a < c[0]);
                    let j = ys.partition_point(|&a| a < c[1]);
                    let slot = &mut grid[i * ys.len() + j];
                    if slot.is_some() {
                        return Err(Error::invalid("duplicate grid node"));
                    }
                    *slot = Some(v);
                }
                let values = grid.into_iter().map(|v| v.expect("every slot filled")).collect();
                Ok(Self { layout: GridLayout::Rect { xs, ys }, values })
            }
            _ => Err(Error::invalid(format!("grid interpolation supports 1-D and 2-D nodes, got {dim}-D"))),
        }
    }

    pub fn nodes(&self) -> Vec<Point<T>> {
        match &self.layout {
            GridLayout::Line { xs } => xs.iter().map(|&x| Point::Vector(vec![x])).collect(),
            GridLayout::Rect { xs, ys } => {
                xs.iter().flat_map(|&x| ys.iter().map(move |&y| Point::Vector(vec![x, y]))).collect()
            }
        }
    }

    pub fn evaluate(&self, p: &Point<T>) -> T {
        let Some(c) = p.coords() else {
            return T::nan();
        };
        match &self.layout {
            GridLayout::Line { xs } => {
                if xs.len() == 1 {
                    return self.values[0];
                }
                let (i, u) = locate(xs, c[0]);
                (T::one() - u) * self.values[i] + u * self.values[i + 1]
            }
            GridLayout::Rect { xs, ys } => {
                let ny = ys.len();
                let at = |i: usize, j: usize| self.values[i * ny + j];
                match (xs.len(), ny) {
                    (1, 1) => at(0, 0),
                    (1, _) => {
                        let (j, v) = locate(ys, c[1]);
                        (T::one() - v) * at(0, j) + v * at(0, j + 1)
                    }
                    (_, 1) => {
                        let (i, u) = locate(xs, c[0]);
                        (T::one() - u) * at(i, 0) + u * at(i + 1, 0)
                    }
                    _ => {
                        let (i, u) = locate(xs, c[0]);
                        let (j, v) = locate(ys, c[1]);
                        let (f00, f10, f01, f11) = (at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1));
                        if u >= v {
                            (T::one() - u) * f00 + (u - v) * f10 + v * f11
                        } else {
                            (T::one() - v) * f00 + (v - u) * f01 + u * f11
                        }
                    }
                }
            }
        }
    }

    /// CSV rows `(x[, y], value)` with a header line.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        match &self.layout {
            GridLayout::Line { .. } => out.write_record(["x", "value"])?,
            GridLayout::Rect { .. } => out.write_record(["x", "y", "value"])?,
        }
        for (node, v) in self.nodes().iter().zip(&self.values) {
            let mut rec: Vec<String> = node.coords().expect("vector").iter().map(|c| crate::output::fmt17(c.as_f64())).collect();
            rec.push(crate::output::fmt17(v.as_f64()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let nums = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::invalid(format!("bad CSV number {f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let (v, c) = nums.split_last().ok_or_else(|| Error::invalid("empty CSV record"))?;
            nodes.push(Point::vector(c.iter().map(|&x| T::lit(x)).collect())?);
            values.push(T::lit(*v));
        }
        Self::from_nodes(&nodes, &values)
    }
}

impl<T: Real> ScaleFn<T> {
    pub fn from_grid(id: impl Into<String>, grid: GridInterp<T>) -> Self {
        let kind = if grid.values.iter().all(|&v| v > T::zero()) {
            ScaleKind::PositiveContinuous
        } else {
            ScaleKind::Signed
        };
        Self { id: id.into(), kind, repr: Repr::Grid(Arc::new(grid)) }
    }
}

/// Continuous `α` with `γ < α < β` at every node: the per-node midpoint,
/// interpolated piecewise linearly.
pub fn dowker_interpolate<T: Real>(
    beta: &SemicontinuousSample<T>,
    gamma: &SemicontinuousSample<T>,
) -> Result<ScaleFn<T>> {
    if beta.sense != Sense::Lower || gamma.sense != Sense::Upper {
        return Err(Error::invalid("dowker_interpolate expects a lower semicontinuous β and upper semicontinuous γ"));
    }
    if beta.nodes != gamma.nodes {
        return Err(Error::invalid("β and γ must share the node set"));
    }
    let mut mid = Vec::with_capacity(beta.values.len());
    for (node, (&b, &g)) in beta.values.iter().zip(&gamma.values).enumerate() {
        if !(g < b) {
            return Err(Error::OrderViolated { node, lower: g.as_f64(), upper: b.as_f64() });
        }
        let m = (g + b) / T::lit(2.0);
        // midpoint of adjacent floats can round onto an endpoint
        if !(g < m && m < b) {
            return Err(Error::OrderViolated { node, lower: g.as_f64(), upper: b.as_f64() });
        }
        mid.push(m);
    }
    let grid = GridInterp::from_nodes(&beta.nodes, &mid)?;
    Ok(ScaleFn::from_grid("dowker", grid))
}
