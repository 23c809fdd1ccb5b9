use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use texflow::expansivity::recheck_witness;
use texflow::fixtures;
use texflow::flow::FlowSpec;
use texflow::scale::{check_ll, dowker_interpolate, SemicontinuousSample, Sense};
use texflow::separation::{max_separated_set, min_spanning_set, separation_report, Which};
use texflow::space::{suspension_distance, MetricKind};
use texflow::*;

fn group_law_holds(flow: &FlowSpec<f64>, n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = flow.sampler.clone().unwrap();
    let mut points = flow.samples.clone();
    while points.len() < n {
        points.push(sampler(&mut rng));
    }
    let tol = flow.tol_group();
    let mut worst = 0.0f64;
    for (i, x) in points.iter().take(n).enumerate() {
        let s = ((i * 7919) % 200) as f64 / 100.0 - 1.0;
        let t = ((i * 104729) % 200) as f64 / 100.0 - 1.0;
        match flow.group_law_residual(x, s, t) {
            Ok(r) => worst = worst.max(r),
            Err(Error::DomainEscape { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(worst <= tol, "{}: residual {worst} > {tol}", flow.id);
}

#[test]
fn group_law_on_fixtures() {
    let p = FixtureParams::default();
    for id in ["radial_plane", "punctured_sphere", "translation", "colina", "trivial_discrete", "trivial_nonuniform",
        "suspension:full2", "suspension:golden", "rotating_circles"]
    {
        let f = build_fixture::<f64>(id, &p).unwrap();
        group_law_holds(&f.flow, 1000, 1);
    }
    group_law_holds(&fixtures::colina_integrated(1e-3), 1000, 2);
    group_law_holds(&build_fixture::<f64>("time_scaled", &p).unwrap().flow, 1000, 3);
}

#[test]
fn triangle_inequality_on_samples() {
    let p = FixtureParams::default();
    for id in ["suspension:golden", "punctured_sphere", "colina"] {
        let f = build_fixture::<f64>(id, &p).unwrap();
        let sampler = f.flow.sampler.clone().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Point<f64>> = (0..300).map(|_| sampler(&mut rng)).collect();
        let mut checked = 0;
        for i in 0..pts.len() {
            for j in (i * 13 % 300..300).step_by(37).take(6) {
                for k in (j * 7 % 300..300).step_by(53).take(6) {
                    let (a, b, c) = (&pts[i], &pts[j], &pts[k]);
                    let d = |u, v| f.flow.distance(u, v);
                    assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12, "{id}");
                    checked += 1;
                }
            }
        }
        assert!(checked >= 10_000 / 3, "{checked}");
    }
}

#[test]
fn colina_conjugacy_intertwines() {
    let base = fixtures::translation(&[1.0, 0.0]).unwrap();
    let col = fixtures::colina::<f64>();
    let h = fixtures::colina_conjugacy::<f64>();
    let psi = texflow::conjugate_flow(&base, &h).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sampler = base.sampler.clone().unwrap();
    for i in 0..1000 {
        let x = sampler(&mut rng);
        let t = (i % 40) as f64 / 10.0 - 2.0;
        let lhs = (h.forward)(&base.evaluate(&x, t).unwrap()).unwrap();
        let rhs = col.evaluate(&(h.forward)(&x).unwrap(), t).unwrap();
        let via = psi.evaluate(&(h.forward)(&x).unwrap(), t).unwrap();
        assert!(col.distance(&lhs, &rhs) < 1e-10 * (1.0 + lhs.coords().unwrap()[1].abs()));
        assert!(col.distance(&via, &rhs) < 1e-10 * (1.0 + rhs.coords().unwrap()[1].abs()));
    }
}

fn constant_or_exp(c: f64, a: f64) -> ScaleFn<f64> {
    if a == 0.0 {
        return ScaleFn::constant(c);
    }
    ScaleFn::closed_form(
        format!("{c}exp(-{a}|x|)"),
        ScaleKind::PositiveContinuous,
        Arc::new(move |x: &Point<f64>| c * (-a * texflow::num::norm(x.coords().unwrap())).exp()),
    )
}

fn small_k(coords: &[(f64, f64)]) -> CompactSample<f64> {
    CompactSample::new("k", coords.iter().map(|&(x, y)| Point::from_f64s(&[x, y])).collect(), "random", 0).unwrap()
}

fn pts_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.5..1.5f64, -1.5..1.5f64), 2..=12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dowker_between_bounds(
        xs in prop::collection::btree_set(-1000i32..1000, 2..30),
        gaps in prop::collection::vec((-1.0..1.0f64, 1e-6..1.0f64), 30),
    ) {
        let nodes: Vec<Point<f64>> = xs.iter().map(|&x| Point::from_f64s(&[x as f64 / 100.0])).collect();
        let gamma: Vec<f64> = gaps.iter().take(nodes.len()).map(|g| g.0).collect();
        let beta: Vec<f64> = gaps.iter().take(nodes.len()).map(|g| g.0 + g.1).collect();
        let a = dowker_interpolate(
            &SemicontinuousSample::new(nodes.clone(), beta.clone(), Sense::Lower).unwrap(),
            &SemicontinuousSample::new(nodes.clone(), gamma.clone(), Sense::Upper).unwrap(),
        ).unwrap();
        for (p, (g, b)) in nodes.iter().zip(gamma.iter().zip(&beta)) {
            let v = a.evaluate(p);
            prop_assert!(*g < v && v < *b);
        }
    }

    #[test]
    fn refine_is_ll_against_cloud_points(
        cloud in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..60),
        c in 0.05..1.0f64,
        a in 0.0..2.0f64,
        xs in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 20),
    ) {
        let space = MetricSpace::<f64>::euclidean("R^2");
        let rho = constant_or_exp(c, a);
        let cloud: Vec<Point<f64>> = cloud.iter().map(|&(x, y)| Point::from_f64s(&[x, y])).collect();
        let gamma = refine_scale(&rho, &space, &cloud).unwrap();
        let pairs: Vec<(Point<f64>, Point<f64>)> = xs.iter()
            .flat_map(|&(x, y)| cloud.iter().map(move |q| (Point::from_f64s(&[x, y]), q.clone())))
            .collect();
        prop_assert!(check_ll(&gamma, &rho, &space, &pairs).passed());
        for (x, _) in &pairs {
            prop_assert!(gamma.evaluate(x) < rho.evaluate(x));
        }
    }

    #[test]
    fn refine_monotone_when_values_agree_at_the_point(
        cloud in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..40),
        c in 0.05..1.0f64,
        bump in 0.0..1.0f64,
    ) {
        // ρ1 <= ρ2 everywhere, equal at the origin
        let space = MetricSpace::<f64>::euclidean("R^2");
        let r1 = constant_or_exp(c, 1.0);
        let r2 = ScaleFn::closed_form("bumped", ScaleKind::PositiveContinuous, Arc::new(move |x: &Point<f64>| {
            let n = texflow::num::norm(x.coords().unwrap());
            c * (-n).exp() * (1.0 + bump * n)
        }));
        let cloud: Vec<Point<f64>> = cloud.iter().map(|&(x, y)| Point::from_f64s(&[x, y])).collect();
        let o = Point::from_f64s(&[0.0, 0.0]);
        let g1 = refine_scale(&r1, &space, &cloud).unwrap().evaluate(&o);
        let g2 = refine_scale(&r2, &space, &cloud).unwrap().evaluate(&o);
        prop_assert!(g1 <= g2);
    }

    #[test]
    fn separated_count_monotone_in_time_and_scale(pts in pts_strategy(), c in 0.05..0.5f64) {
        let flow = fixtures::colina::<f64>();
        let k = small_k(&pts);
        let s = |t: f64, d: f64| max_separated_set(&flow, &k, t, &ScaleFn::constant(d), 0.25, 0).unwrap().s_lower.unwrap();
        prop_assert!(s(0.5, c) <= s(1.0, c));
        prop_assert!(s(1.0, c) <= s(2.0, c));
        prop_assert!(s(1.0, 2.0 * c) <= s(1.0, c));
    }

    #[test]
    fn spanning_bounded_by_separated_for_constant_scale(pts in pts_strategy(), c in 0.05..0.5f64, t in 0.25..2.0f64) {
        let flow = fixtures::radial_plane::<f64>(1e-12);
        let k = small_k(&pts);
        let d = ScaleFn::constant(c);
        let s = max_separated_set(&flow, &k, t, &d, 0.25, 0).unwrap().s_lower.unwrap();
        let r = min_spanning_set(&flow, &k, t, &d, 0.25, 0).unwrap().r_upper.unwrap();
        prop_assert!(r <= s);
    }

    #[test]
    fn witnesses_survive_larger_scales(d1 in 0.01..0.1f64, factor in 1.0..3.0f64, seed in 0u64..20) {
        let f = build_fixture::<f64>("punctured_sphere", &FixtureParams::default()).unwrap();
        let cfg = SearchConfig { seed, iterations: 5_000, pair_samples: 20, ..SearchConfig::default() };
        let v = falsify(&f.flow, Notion::Expansive, 1.0, &ScaleFn::constant(d1), &cfg).unwrap();
        if let Some(w) = v.witness() {
            prop_assert!(recheck_witness(&f.flow, Notion::Expansive, 1.0, &ScaleFn::constant(d1), w).unwrap());
            prop_assert!(recheck_witness(&f.flow, Notion::Expansive, 1.0, &ScaleFn::constant(d1 * factor), w).unwrap());
        }
    }

    #[test]
    fn packed_kernel_agrees_with_generic_metric(
        words in prop::collection::vec(prop::collection::vec(0u8..2, 10), 2..40),
        heights in prop::collection::vec(0.0..0.5f64, 40),
        c in 0.001..0.6f64,
        a in 0.0..1.0f64,
        t in 1usize..8,
        flat in any::<bool>(),
    ) {
        let sft = Sft::<f64>::full_shift(2, 1.0).unwrap();
        let flow = fixtures::suspension("s", &sft).unwrap();
        let mut generic = flow.clone();
        generic.space = MetricSpace::new("generic", Arc::new(suspension_distance), Discreteness::None);
        prop_assert_eq!(generic.space.kind, MetricKind::Other);
        let pts: Vec<Point<f64>> = words.iter().zip(&heights)
            .map(|(w, &h)| Point::Symbolic(SymbolicPoint::new(w.clone(), -3, if flat { 0.25 } else { h })))
            .collect();
        let k = CompactSample::new("k", pts, "words", 0).unwrap();
        let delta = if a < 0.5 { ScaleFn::constant(c) } else {
            ScaleFn::closed_form("h-dependent", ScaleKind::PositiveContinuous, Arc::new(move |p: &Point<f64>| {
                c * (1.0 + p.symbolic().unwrap().height)
            }))
        };
        let r1 = separation_report(&flow, &k, t as f64, &delta, 1.0, 3, Which::ALL).unwrap();
        let r2 = separation_report(&generic, &k, t as f64, &delta, 1.0, 3, Which::ALL).unwrap();
        prop_assert_eq!(r1.s_lower, r2.s_lower);
        prop_assert_eq!(r1.r_upper, r2.r_upper);
        prop_assert_eq!(r1.separated_witness, r2.separated_witness);
        prop_assert_eq!(r1.spanning_witness, r2.spanning_witness);
    }
}

#[test]
fn f32_instantiation_matches_f64() {
    let p = FixtureParams { depth: Some(8), ..Default::default() };
    let f64_fix = build_fixture::<f64>("suspension:golden", &p).unwrap();
    let f32_fix = build_fixture::<f32>("suspension:golden", &p).unwrap();
    let t64: Vec<f64> = (1..=6).map(|t| t as f64).collect();
    let t32: Vec<f32> = (1..=6).map(|t| t as f32).collect();
    let a = texflow::entropy::estimate_entropy_compact(&f64_fix.flow, &f64_fix.compact, &[0.25, 0.125], &t64, 1.0, 0).unwrap();
    let b = texflow::entropy::estimate_entropy_compact(&f32_fix.flow, &f32_fix.compact, &[0.25, 0.125], &t32, 1.0, 0).unwrap();
    assert_eq!(a.sweep.iter().map(|c| c.counts.clone()).collect::<Vec<_>>(), b.sweep.iter().map(|c| c.counts.clone()).collect::<Vec<_>>());
    assert!((a.estimate - b.estimate as f64).abs() < 1e-5);
    let planar = fixtures::colina::<f32>();
    let y = planar.evaluate(&Point::from_f64s(&[0.0, 1.0]), 1.0).unwrap();
    assert!((y.coords().unwrap()[1] - std::f32::consts::E).abs() < 1e-6);
}
