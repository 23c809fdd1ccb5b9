use std::collections::HashSet;

use num_traits::ToPrimitive;
use texflow::entropy::estimate_entropy_compact;
use texflow::expansivity::check_singularities_isolated;
use texflow::fixtures::{self, translation_scale};
use texflow::separation::{beta, is_separated_pair, separation_report, Which};
use texflow::*;

/// Primitive necklaces of length `n`, counted by listing every admissible
/// cyclic word and keeping the lexicographically least rotation.
fn necklaces(adj: &[Vec<u8>], n: usize) -> usize {
    let m = adj.len();
    let mut seen = HashSet::new();
    let total = m.pow(n as u32);
    for code in 0..total {
        let w: Vec<usize> = (0..n).map(|i| code / m.pow(i as u32) % m).collect();
        if !(0..n).all(|i| adj[w[i]][w[(i + 1) % n]] == 1) {
            continue;
        }
        let rots: Vec<Vec<usize>> = (0..n).map(|r| (0..n).map(|i| w[(i + r) % n]).collect()).collect();
        let primitive = (1..n).all(|r| rots[r] != w);
        if primitive {
            seen.insert(rots.into_iter().min().unwrap());
        }
    }
    seen.len()
}

fn spectral_radius(adj: &[Vec<u8>]) -> f64 {
    let m = adj.len();
    let mut v = vec![1.0; m];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..m).map(|i| (0..m).map(|j| adj[i][j] as f64 * v[j]).sum()).collect();
        lambda = w.iter().cloned().fold(0.0, f64::max);
        v = w.iter().map(|x| x / lambda).collect();
    }
    lambda
}

const FULL2: [[u8; 2]; 2] = [[1, 1], [1, 1]];
const GOLDEN: [[u8; 2]; 2] = [[1, 1], [1, 0]];

fn adj(a: [[u8; 2]; 2]) -> Vec<Vec<u8>> {
    a.iter().map(|r| r.to_vec()).collect()
}

#[test]
fn census_matches_necklace_brute_force() {
    for (a, sft) in [(FULL2, Sft::<f64>::full_shift(2, 1.0).unwrap()), (GOLDEN, Sft::golden_mean(1.0).unwrap())] {
        let census = orbit_census(&sft, 8.0).unwrap();
        for row in &census.rows {
            let want = necklaces(&adj(a), row.n);
            assert_eq!(row.least_period_orbits.to_usize().unwrap(), want, "n = {}", row.n);
        }
    }
}

#[test]
fn first_cumulative_counts() {
    let full = orbit_census(&Sft::<f64>::full_shift(2, 1.0).unwrap(), 4.0).unwrap();
    let golden = orbit_census(&Sft::<f64>::golden_mean(1.0).unwrap(), 4.0).unwrap();
    let v = |c: &OrbitCensus<f64>| (1..=4).map(|t| c.v(t as f64).to_u64().unwrap()).collect::<Vec<_>>();
    let nk = |a| (1..=4).scan(0, |s, n| { *s += necklaces(&adj(a), n) as u64; Some(*s) }).collect::<Vec<_>>();
    assert_eq!(v(&full), nk(FULL2));
    assert_eq!(v(&golden), nk(GOLDEN));
    assert_eq!(v(&full), vec![2, 3, 5, 8]);
    assert_eq!(v(&golden), vec![1, 2, 3, 4]);
}

#[test]
fn census_with_roof_two_doubles_periods() {
    let c = orbit_census(&Sft::<f64>::full_shift(2, 2.0).unwrap(), 8.0).unwrap();
    assert_eq!(c.v(3.9).to_u64().unwrap(), 2);
    assert_eq!(c.v(4.0).to_u64().unwrap(), 3);
    assert_eq!(c.v(8.0).to_u64().unwrap(), 8);
}

#[test]
fn golden_classical_estimate_near_spectral_oracle() {
    let f = build_fixture::<f64>("suspension:golden", &FixtureParams::default()).unwrap();
    let t: Vec<f64> = (1..=12).map(|t| t as f64).collect();
    let r = estimate_entropy_compact(&f.flow, &f.compact, &f.eps_grid, &t, 1.0, 0).unwrap();
    let oracle = spectral_radius(&adj(GOLDEN)).ln();
    assert!((r.estimate - oracle).abs() < 1e-3, "{} vs {oracle}", r.estimate);
}

#[test]
fn full_shift_small_depth_estimate_is_log_two() {
    let f = build_fixture::<f64>("suspension:full2", &FixtureParams { depth: Some(10), ..Default::default() }).unwrap();
    let t: Vec<f64> = (1..=8).map(|t| t as f64).collect();
    let r = estimate_entropy_compact(&f.flow, &f.compact, &[0.25], &t, 1.0, 0).unwrap();
    let oracle = spectral_radius(&adj(FULL2)).ln();
    assert!((r.estimate - oracle).abs() < 1e-12, "{} vs {oracle}", r.estimate);
}

/// Covering at threshold 2^-3 over steps 0..=3 forces agreement on word
/// positions 0..=4, so the classes are the 5-letter prefixes.
#[test]
fn depth_six_cylinders_at_one_eighth() {
    let sft = Sft::<f64>::full_shift(2, 1.0).unwrap();
    let flow = fixtures::suspension("s", &sft).unwrap();
    let k = CompactSample::cylinder_representatives(&sft, 6, 0.0).unwrap();
    let rep = separation_report(&flow, &k, 3.0, &ScaleFn::constant(0.125), 1.0, 0, Which::ALL).unwrap();
    let prefixes: HashSet<Vec<u8>> = sft.admissible_words(6).into_iter().map(|w| w[..5].to_vec()).collect();
    assert_eq!(rep.s_lower, Some(64));
    assert!(rep.s_exact);
    assert_eq!(rep.r_upper, Some(prefixes.len()));
    assert_eq!(prefixes.len(), 32);
}

#[test]
fn stereographic_image_of_radial_flow() {
    let f = fixtures::punctured_sphere::<f64>(1e-12).unwrap();
    let p = f.evaluate(&Point::from_f64s(&[1.0, 0.0, 0.0]), 2f64.ln()).unwrap();
    let c = p.coords().unwrap();
    for (a, b) in c.iter().zip([0.8, 0.0, 0.6]) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn radial_pair_separates_after_log_five() {
    let f = fixtures::radial_plane::<f64>(1e-12);
    let (x, y) = (Point::from_f64s(&[1.0, 0.0]), Point::from_f64s(&[1.01, 0.0]));
    let d = ScaleFn::constant(0.05);
    assert!(is_separated_pair(&f, &x, &y, 2.0, &d, 0.01).unwrap());
    assert!(!is_separated_pair(&f, &x, &y, 1.6, &d, 0.01).unwrap());
}

#[test]
fn translation_beta_closed_form() {
    let f = fixtures::translation(&[1.0, 0.0]).unwrap();
    let k = CompactSample::new("k", vec![Point::from_f64s(&[1.0, 0.0])], "point", 0).unwrap();
    let b = beta(&f, &k, 1.0, &translation_scale(&[1.0, 0.0], 1.0), 0.25).unwrap();
    assert!((b - 0.5 * (-2.0f64).exp()).abs() < 1e-15);
}

#[test]
fn colina_rk4_tracks_closed_form() {
    let exact = fixtures::colina::<f64>();
    let rk = fixtures::colina_integrated::<f64>(1e-3);
    let x = Point::from_f64s(&[0.3, -0.7]);
    let (a, b) = (exact.evaluate(&x, 2.0).unwrap(), rk.evaluate(&x, 2.0).unwrap());
    assert!(exact.distance(&a, &b) < 1e-9);
}

#[test]
fn isolation_of_singularities() {
    let disc = fixtures::trivial_discrete::<f64>(5).unwrap();
    assert!(check_singularities_isolated(&disc).unwrap().pass);
    let nonu = fixtures::trivial_nonuniform::<f64>(1000).unwrap();
    assert!(check_singularities_isolated(&nonu).unwrap().pass);
    let circ = fixtures::rotating_circles::<f64>(40);
    let rep = check_singularities_isolated(&circ).unwrap();
    assert!(!rep.pass);
    assert_eq!(rep.singularities, 1);
}

#[test]
fn nonuniform_gaps_shrink() {
    let p = fixtures::nonuniform_points(6);
    assert_eq!(p, vec![2.0, 2.5, 3.0, 3.0 + 1.0 / 3.0, 4.0, 4.25]);
}
