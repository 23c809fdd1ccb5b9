//! Property suites for the scale constructions and the separation sandwich,
//! and the standard instances behind the `e*` identity checks. Shared by the
//! command line and the acceptance tests.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{estimate_e_star, verify_identity, EntropyReport, Identity, IdentityInstance, IdentityVerdict, Side, StarMode, Tolerance};
use crate::error::{Error, Result};
use crate::fixtures::{self, build_fixture, colina_scale, Fixture, FixtureParams};
use crate::flow::FlowSpec;
use crate::num::norm;
use crate::periodic::{check_growth_bound, orbit_census, GrowthBoundVerdict, OrbitCensus};
use crate::point::Point;
use crate::sample::CompactSample;
use crate::scale::{check_ll, dowker_interpolate, refine_scale, LlReport, ScaleFn, ScaleKind, SemicontinuousSample, Sense};
use crate::separation::{grid_steps, seeded_order, OrbitTable};
use crate::space::MetricSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    /// Smallest slack seen across instances (positive means strict pass).
    pub min_margin: f64,
    pub detail: Vec<String>,
    pub pass: bool,
}

impl SuiteReport {
    fn new(name: &str, instances: usize, failures: usize, min_margin: f64, detail: Vec<String>) -> Self {
        Self { name: name.into(), instances, failures, min_margin, detail, pass: failures == 0 && instances > 0 }
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Random 1-D or 2-D grid instances of `γ < β`; the interpolant must lie
/// strictly between them at every node.
pub fn dowker_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut r = rng(seed, 1);
    let mut failures = 0;
    let mut min_margin = f64::INFINITY;
    let mut detail = Vec::new();
    for inst in 0..instances {
        let nodes: Vec<Point<f64>> = if inst % 2 == 0 {
            let n = r.gen_range(2..=20);
            let mut xs: Vec<f64> = (0..n).map(|_| r.gen_range(-5.0..5.0)).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            xs.dedup();
            xs.iter().map(|&x| Point::from_f64s(&[x])).collect()
        } else {
            let (nx, ny) = (r.gen_range(2..=6), r.gen_range(2..=6));
            let xs: Vec<f64> = (0..nx).map(|i| i as f64 + r.gen_range(0.0..0.5)).collect();
            let ys: Vec<f64> = (0..ny).map(|j| j as f64 + r.gen_range(0.0..0.5)).collect();
            xs.iter().flat_map(|&x| ys.iter().map(move |&y| Point::from_f64s(&[x, y]))).collect()
        };
        let gamma: Vec<f64> = nodes.iter().map(|_| r.gen_range(-1.0..1.0)).collect();
        let beta: Vec<f64> = gamma.iter().map(|g| g + 10f64.powf(r.gen_range(-6.0..0.0))).collect();
        let alpha = dowker_interpolate(
            &SemicontinuousSample::new(nodes.clone(), beta.clone(), Sense::Lower)?,
            &SemicontinuousSample::new(nodes.clone(), gamma.clone(), Sense::Upper)?,
        )?;
        let mut ok = true;
        for (p, (&g, &b)) in nodes.iter().zip(gamma.iter().zip(&beta)) {
            let a = alpha.evaluate(p);
            ok &= g < a && a < b;
            min_margin = min_margin.min((a - g).min(b - a));
        }
        if !ok {
            failures += 1;
            if detail.len() < 5 {
                detail.push(format!("instance {inst}: interpolant left (γ, β) at some node"));
            }
        }
    }
    Ok(SuiteReport::new("dowker", instances, failures, min_margin, detail))
}

/// The positive scales the `≪` suite refines.
pub fn ll_rhos() -> Vec<ScaleFn<f64>> {
    vec![
        ScaleFn::closed_form(
            "exp(-|x|)",
            ScaleKind::PositiveContinuous,
            Arc::new(|x: &Point<f64>| (-norm(x.coords().expect("vector"))).exp()),
        ),
        ScaleFn::closed_form(
            "0.3+0.25sin(2x)cos(3y)",
            ScaleKind::PositiveContinuous,
            Arc::new(|x: &Point<f64>| {
                let c = x.coords().expect("vector");
                0.3 + 0.25 * (2.0 * c[0]).sin() * (3.0 * c[1]).cos()
            }),
        ),
        ScaleFn::closed_form(
            "0.5/(1+|x|^2)",
            ScaleKind::PositiveContinuous,
            Arc::new(|x: &Point<f64>| {
                let n = norm(x.coords().expect("vector"));
                0.5 / (1.0 + n * n)
            }),
        ),
    ]
}

/// `refine_scale(ρ) ≪ ρ` on `pairs` pairs split across [`ll_rhos`]: `x` near
/// a cloud point, `y` among its nearest cloud neighbours.
pub fn ll_suite(pairs: usize, seed: u64) -> Result<(SuiteReport, Vec<LlReport<f64>>)> {
    let mut r = rng(seed, 2);
    let space = MetricSpace::<f64>::euclidean("R^2");
    let cloud: Vec<Point<f64>> =
        (0..500).map(|_| Point::from_f64s(&[r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)])).collect();
    let rhos = ll_rhos();
    let mut reports = Vec::new();
    let mut failures = 0;
    let mut detail = Vec::new();
    let mut min_margin = f64::INFINITY;
    for (ri, rho) in rhos.iter().enumerate() {
        let gamma = refine_scale(rho, &space, &cloud)?;
        let share = pairs / rhos.len() + usize::from(ri < pairs % rhos.len());
        let mut ps = Vec::with_capacity(share);
        for _ in 0..share {
            let base = cloud[r.gen_range(0..cloud.len())].coords().expect("vector").to_vec();
            let x = Point::from_f64s(&[base[0] + r.gen_range(-0.1..0.1), base[1] + r.gen_range(-0.1..0.1)]);
            let mut by_dist: Vec<(f64, usize)> =
                cloud.iter().enumerate().map(|(i, y)| (space.distance(&x, y), i)).collect();
            by_dist.select_nth_unstable_by(7, |a, b| a.partial_cmp(b).expect("finite"));
            let pick = by_dist[r.gen_range(0..8)].1;
            ps.push((x, cloud[pick].clone()));
        }
        let rep = check_ll(&gamma, rho, &space, &ps);
        for (x, y) in &ps {
            let g = gamma.evaluate(x);
            if space.distance(x, y) < g {
                min_margin = min_margin.min(rho.evaluate(y) - g);
            }
        }
        if !rep.passed() || rep.tested == 0 {
            failures += 1;
            detail.push(format!("{}: {} violations, {} tested pairs", rho.id, rep.violations.len(), rep.tested));
        } else {
            detail.push(format!("{}: {} of {} pairs inside γ(x)", rho.id, rep.tested, rep.pairs));
        }
        reports.push(rep);
    }
    Ok((SuiteReport::new("ll", pairs, failures, min_margin, detail), reports))
}

/// One random exact instance: a planar flow, `|K| <= 12`, a horizon.
struct SandwichInstance {
    flow: FlowSpec<f64>,
    k: CompactSample<f64>,
    t: f64,
    dt: f64,
    delta: ScaleFn<f64>,
}

fn sandwich_instance(r: &mut ChaCha8Rng, idx: usize) -> Result<SandwichInstance> {
    let flow = match idx % 3 {
        0 => fixtures::colina(),
        1 => fixtures::translation(&[1.0, r.gen_range(-1.0..1.0)])?,
        _ => fixtures::radial_plane(fixtures::DEFAULT_GUARD),
    };
    let n = r.gen_range(2..=12);
    let pts = (0..n)
        .map(|_| {
            let rad: f64 = r.gen_range(0.5..1.5);
            let th: f64 = r.gen_range(0.0..std::f64::consts::TAU);
            Point::from_f64s(&[rad * th.cos(), rad * th.sin()])
        })
        .collect();
    let k = CompactSample::new(format!("random{idx}"), pts, "annulus [0.5, 1.5]", idx as u64)?;
    let (c, a, b) = (r.gen_range(0.05..0.6), r.gen_range(0.0..1.0), r.gen_range(0.5..3.0));
    let delta = if idx % 2 == 0 {
        ScaleFn::closed_form(
            format!("{c}exp(-{a}|x|)"),
            ScaleKind::PositiveContinuous,
            Arc::new(move |x: &Point<f64>| c * (-a * norm(x.coords().expect("vector"))).exp()),
        )
    } else {
        ScaleFn::closed_form(
            format!("{c}(1+0.5sin({b}x))"),
            ScaleKind::PositiveContinuous,
            Arc::new(move |x: &Point<f64>| c * (1.0 + 0.5 * (b * x.coords().expect("vector")[0]).sin())),
        )
    };
    Ok(SandwichInstance { flow, k, t: [0.5, 1.0, 2.0][r.gen_range(0..3)], dt: 0.25, delta })
}

struct Counts {
    s: usize,
    r: usize,
    beta: f64,
}

fn exact_counts(table: &OrbitTable<f64>, delta: &ScaleFn<f64>, steps: usize) -> Result<Counts> {
    let d = table.scale_table(delta);
    let order = seeded_order(table.len(), 0);
    let (s, s_exact) = table.max_separated(&d, steps, &order);
    let (r, r_exact) = table.min_spanning(&d, steps, &order);
    if !(s_exact && r_exact) {
        return Err(Error::invalid("sandwich instances must be small enough for exact counts"));
    }
    Ok(Counts { s: s.len(), r: r.len(), beta: table.beta(&d, steps)? })
}

/// `a/b <= c/d` up to rounding of the products.
fn ratio_le(a: f64, b: f64, c: f64, d: f64) -> (bool, f64) {
    let (l, rr) = (a * d, c * b);
    (l <= rr * (1.0 + 1e-12), rr - l)
}

/// Exact instances with `|K| <= 12`: `R <= S` for constant scales, and both
/// sandwich inequalities for variable scales, with the refinement taken over
/// every tabulated orbit point of `K`.
pub fn sandwich_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut r = rng(seed, 3);
    let mut failures = 0;
    let mut detail = Vec::new();
    let mut min_margin = f64::INFINITY;
    for idx in 0..instances {
        let inst = sandwich_instance(&mut r, idx)?;
        let steps = grid_steps(inst.t, inst.dt)?;
        let table = OrbitTable::build(&inst.flow, &inst.k, inst.t, inst.dt)?;
        let cloud: Vec<Point<f64>> = (0..table.len()).flat_map(|i| table.orbit(i).to_vec()).collect();

        let c = ScaleFn::constant(r.gen_range(0.05..0.6));
        let cc = exact_counts(&table, &c, steps)?;
        let rs = cc.r <= cc.s;

        let base = exact_counts(&table, &inst.delta, steps)?;
        let d1 = refine_scale(&inst.delta, &inst.flow.space, &cloud)?;
        let c1 = exact_counts(&table, &d1, steps)?;
        let (le1, m1) = ratio_le(base.r as f64, base.beta, c1.s as f64, c1.beta);
        let d2 = refine_scale(&refine_scale(&inst.delta, &inst.flow.space, &cloud)?.scaled(0.25), &inst.flow.space, &cloud)?;
        let c2 = exact_counts(&table, &d2, steps)?;
        let (le2, m2) = ratio_le(base.s as f64, base.beta, c2.r as f64, c2.beta);
        min_margin = min_margin.min(m1).min(m2).min((cc.s - cc.r.min(cc.s)) as f64);
        if !(rs && le1 && le2) {
            failures += 1;
            if detail.len() < 5 {
                detail.push(format!(
                    "instance {idx} ({}, |K| = {}, t = {}): R<=S {rs}, le1 {le1}, le2 {le2}",
                    inst.flow.id,
                    inst.k.len(),
                    inst.t
                ));
            }
        }
    }
    Ok(SuiteReport::new("sandwich", instances, failures, min_margin, detail))
}

/// Dowker on 10³ instances, `≪` on 10⁴ pairs, sandwich on 10² instances.
pub fn lemma_suites(seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![dowker_suite(1000, seed)?, ll_suite(10_000, seed)?.0, sandwich_suite(100, seed)?])
}

pub const SUSPENSION_T_MAX: usize = 12;

pub fn integer_grid(t_max: usize) -> Vec<f64> {
    (1..=t_max).map(|t| t as f64).collect()
}

/// Matched sweep on a suspension fixture: its default cylinder compact, the
/// constant scales `2^-2..2^-6`, `t = 1..12`, `dt` equal to the roof.
pub fn suspension_instance(fixture: &Fixture<f64>, seed: u64) -> Result<IdentityInstance<f64>> {
    let sft = fixture.sft.as_ref().ok_or_else(|| Error::invalid(format!("{} is not a suspension", fixture.id)))?;
    let dt = sft.roof;
    Ok(IdentityInstance {
        base: Side { flow: fixture.flow.clone(), k_list: vec![fixture.compact.clone()], deltas: fixture.scale_family.clone() },
        partner: None,
        eps_grid: fixture.eps_grid.clone(),
        t_grid: integer_grid(SUSPENSION_T_MAX).iter().map(|&t| t * dt).collect(),
        dt,
        seed,
        tolerance: Tolerance::default(),
    })
}

pub fn suspension_fixture(id: &str) -> Result<Fixture<f64>> {
    build_fixture(id, &FixtureParams::default())
}

/// Translation by `(1, 0)` on the annulus `[1, 2]` with constant scales,
/// against colina on the `h`-image of the annulus with the transported
/// scales `ε e^{x}`.
pub fn conjugacy_instance(seed: u64) -> Result<IdentityInstance<f64>> {
    let trans = build_fixture::<f64>("translation", &FixtureParams::default())?;
    let col = build_fixture::<f64>("colina", &FixtureParams::default())?;
    let eps = trans.eps_grid.clone();
    Ok(IdentityInstance {
        base: Side { flow: trans.flow, k_list: vec![trans.compact], deltas: eps.iter().map(|&e| ScaleFn::constant(e)).collect() },
        partner: Some(Side { flow: col.flow, k_list: vec![col.compact], deltas: eps.iter().map(|&e| colina_scale(e)).collect() }),
        eps_grid: eps,
        t_grid: integer_grid(8),
        dt: 0.25,
        seed,
        tolerance: Tolerance::default(),
    })
}

/// Conjugacy check plus the requirement that both sides vanish within the
/// absolute tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyCheck {
    pub verdict: IdentityVerdict<f64>,
    pub both_vanish: bool,
    pub pass: bool,
}

pub fn conjugacy_check(seed: u64) -> Result<ConjugacyCheck> {
    let inst = conjugacy_instance(seed)?;
    let verdict = verify_identity(Identity::ConjugacyInvariance, &inst)?;
    let tol = inst.tolerance.absolute;
    let both_vanish = verdict.lhs.abs() <= tol && verdict.rhs.abs() <= tol;
    let pass = verdict.pass && both_vanish && verdict.margin <= tol;
    Ok(ConjugacyCheck { verdict, both_vanish, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub fixture: String,
    pub census: OrbitCensus<f64>,
    pub bound: GrowthBoundVerdict<f64>,
}

/// Orbit census to `t = 12` against a separating `e*` estimate.
pub fn growth_check(
    fixture: &Fixture<f64>,
    e_star: &EntropyReport<f64>,
    classical: Option<&EntropyReport<f64>>,
    slack: f64,
) -> Result<GrowthCheck> {
    let sft = fixture.sft.as_ref().ok_or_else(|| Error::invalid(format!("{} is not a suspension", fixture.id)))?;
    let census = orbit_census(sft, SUSPENSION_T_MAX as f64 * sft.roof)?;
    let bound = check_growth_bound(&census, e_star, slack, classical)?;
    Ok(GrowthCheck { fixture: fixture.id.clone(), census, bound })
}

pub fn separating_e_star(inst: &IdentityInstance<f64>) -> Result<EntropyReport<f64>> {
    estimate_e_star(&inst.base.flow, &inst.base.k_list, &inst.base.deltas, &inst.t_grid, inst.dt, StarMode::Separating, inst.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        assert!(dowker_suite(50, 1).unwrap().pass);
        assert!(ll_suite(300, 1).unwrap().0.pass);
        assert!(sandwich_suite(12, 1).unwrap().pass);
    }
}
