use texflow::entropy::{estimate_e_star, StarMode};
use texflow::output::to_json_string;
use texflow::*;

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn estimates_identical_across_pool_sizes() {
    let p = FixtureParams { depth: Some(12), ..Default::default() };
    let f = build_fixture::<f64>("suspension:golden", &p).unwrap();
    let t: Vec<f64> = (1..=8).map(|t| t as f64).collect();
    let run = || {
        let r = estimate_e_star(&f.flow, &[f.compact.clone()], &f.scale_family, &t, 1.0, StarMode::Spanning, 7).unwrap();
        to_json_string(&r).unwrap()
    };
    assert_eq!(in_pool(1, run), in_pool(3, run));
}

#[test]
fn falsification_identical_across_pool_sizes() {
    let f = build_fixture::<f64>("translation", &FixtureParams::default()).unwrap();
    let delta = f.expansivity_delta(Notion::TopologicalExpansive, 1.0, None).unwrap();
    let cfg = SearchConfig { pair_samples: 40, iterations: 40_000, pair_budget: 500, seed: 11, ..SearchConfig::default() };
    let run = || to_json_string(&falsify(&f.flow, Notion::TopologicalExpansive, 1.0, &delta, &cfg).unwrap()).unwrap();
    assert_eq!(in_pool(1, run), in_pool(4, run));
}

#[test]
fn different_seeds_change_greedy_order_not_exact_counts() {
    let f = build_fixture::<f64>("suspension:full2", &FixtureParams { depth: Some(8), ..Default::default() }).unwrap();
    let t: Vec<f64> = (1..=6).map(|t| t as f64).collect();
    let a = texflow::entropy::estimate_entropy_compact(&f.flow, &f.compact, &[0.25], &t, 1.0, 1).unwrap();
    let b = texflow::entropy::estimate_entropy_compact(&f.flow, &f.compact, &[0.25], &t, 1.0, 2).unwrap();
    assert_eq!(a.sweep[0].counts, b.sweep[0].counts);
    assert_ne!(a.seed, b.seed);
}
