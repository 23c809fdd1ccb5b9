//! End-to-end acceptance run. Prints one line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use texflow::entropy::{estimate_entropy_compact, verify_identity, EntropyReport, Identity, IdentityInstance};
use texflow::expansivity::{falsify, Notion, SearchConfig, TailFlag};
use texflow::fixtures::{build_fixture, Fixture, FixtureParams};
use texflow::periodic::Sft;
use texflow::suites;

const SEED: u64 = 0;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = anyhow::Result<Outcome>;

struct Suspension {
    fixture: Fixture<f64>,
    inst: IdentityInstance<f64>,
    classical: EntropyReport<f64>,
    classical_time: Duration,
    e_star: EntropyReport<f64>,
}

fn load(id: &str) -> anyhow::Result<Suspension> {
    let fixture = suites::suspension_fixture(id)?;
    let inst = suites::suspension_instance(&fixture, SEED)?;
    let start = Instant::now();
    let classical = estimate_entropy_compact(&fixture.flow, &fixture.compact, &fixture.eps_grid, &inst.t_grid, inst.dt, SEED)?;
    let classical_time = start.elapsed();
    let e_star = suites::separating_e_star(&inst)?;
    Ok(Suspension { fixture, inst, classical, classical_time, e_star })
}

fn c1(full: &Suspension, gold: &Suspension) -> Check {
    let ok = |s: &Suspension, lo: f64, hi: f64| {
        (lo..=hi).contains(&s.classical.estimate) && s.classical_time < Duration::from_secs(60) && s.fixture.compact.len() <= 50_000
    };
    Ok(Outcome {
        pass: ok(full, 0.62, 0.77) && ok(gold, 0.40, 0.55),
        detail: format!(
            "full2 {:.6} in {:.1?} (|K| {}), golden {:.6} in {:.1?} (|K| {})",
            full.classical.estimate,
            full.classical_time,
            full.fixture.compact.len(),
            gold.classical.estimate,
            gold.classical_time,
            gold.fixture.compact.len()
        ),
    })
}

fn c2(full: &Suspension, gold: &Suspension) -> Check {
    let gap = |s: &Suspension| (s.e_star.estimate - s.classical.estimate).abs();
    Ok(Outcome {
        pass: gap(full) <= 0.05 && gap(gold) <= 0.05,
        detail: format!(
            "full2 e* {:.6} vs {:.6}, golden e* {:.6} vs {:.6}",
            full.e_star.estimate, full.classical.estimate, gold.e_star.estimate, gold.classical.estimate
        ),
    })
}

fn c3(full: &Suspension) -> Check {
    let v = verify_identity(Identity::TimeRescale { a: 2.0 }, &full.inst)?;
    let ratio = v.ratio.unwrap_or(f64::NAN);
    Ok(Outcome { pass: (1.8..=2.2).contains(&ratio), detail: format!("ratio {ratio:.6} ({:.6} / {:.6})", v.lhs, v.rhs) })
}

fn c4() -> Check {
    let c = suites::conjugacy_check(SEED)?;
    let v = &c.verdict;
    let pass = v.lhs.abs() <= 0.05 && v.rhs.abs() <= 0.05 && (v.lhs - v.rhs).abs() <= 0.05;
    Ok(Outcome { pass, detail: format!("translation {:.6}, colina {:.6}", v.lhs, v.rhs) })
}

fn c5(full: &Suspension) -> Check {
    let v = verify_identity(Identity::SpanningEqualsSeparating, &full.inst)?;
    let pass = (v.lhs - v.rhs).abs() <= 0.05;
    Ok(Outcome { pass, detail: format!("spanning {:.6}, separating {:.6}", v.lhs, v.rhs) })
}

/// Primitive periodic orbits of least period `n`, by listing every cyclically
/// admissible word and grouping rotations.
fn necklaces(sft: &Sft<f64>, n: usize) -> usize {
    let m = sft.adjacency.len();
    let mut seen = std::collections::BTreeSet::new();
    let mut word = vec![0u8; n];
    let total = m.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        for w in word.iter_mut() {
            *w = (c % m) as u8;
            c /= m;
        }
        if !(0..n).all(|i| sft.allowed(word[i], word[(i + 1) % n])) {
            continue;
        }
        let rotations: Vec<Vec<u8>> = (0..n).map(|r| word[r..].iter().chain(&word[..r]).copied().collect()).collect();
        if rotations.iter().skip(1).any(|r| *r == word) {
            continue;
        }
        seen.insert(rotations.into_iter().min().expect("n > 0"));
    }
    seen.len()
}

fn c6(full: &Suspension, gold: &Suspension) -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, expected) in [(full, [2u64, 3, 5, 8]), (gold, [1, 2, 3, 4])] {
        let g = suites::growth_check(&s.fixture, &s.e_star, Some(&s.classical), 0.05)?;
        let sft = s.fixture.sft.as_ref().expect("suspension");
        let mut brute = Vec::new();
        let mut acc = 0u64;
        for n in 1..=4 {
            acc += necklaces(sft, n) as u64;
            brute.push(acc);
        }
        let census: Vec<u64> = (1..=4).map(|t| g.census.v(t as f64).to_string().parse().expect("small")).collect();
        pass &= g.bound.pass && census == brute && brute == expected;
        parts.push(format!(
            "{} growth {:.6} <= e* {:.6} + 0.05, v(1..4) {:?} brute {:?}",
            s.fixture.id, g.bound.growth_rate, g.bound.e_star_estimate, census, brute
        ));
    }
    Ok(Outcome { pass, detail: parts.join("; ") })
}

fn c7() -> Check {
    let sphere = build_fixture::<f64>("punctured_sphere", &FixtureParams::default())?;
    let mut pass = true;
    let mut parts = Vec::new();
    for delta in [0.1, 0.05, 0.01] {
        let d = sphere.expansivity_delta(Notion::Expansive, 1.0, Some(delta))?;
        let cfg = SearchConfig { seed: 7, ..SearchConfig::default() };
        let v = falsify(&sphere.flow, Notion::Expansive, 1.0, &d, &cfg)?;
        match v.witness() {
            Some(w) => {
                let ok = w.max_discrepancy < 0.0
                    && w.orbit_distinctness > 1e-3
                    && w.tail_flag == TailFlag::TailVerified
                    && v.iterations_used <= 100_000;
                pass &= ok;
                parts.push(format!(
                    "sphere δ={delta}: disc {:.3e}, dist {:.3e}, {} iters",
                    w.max_discrepancy, w.orbit_distinctness, v.iterations_used
                ));
            }
            None => {
                pass = false;
                parts.push(format!("sphere δ={delta}: no witness"));
            }
        }
    }
    let trans = build_fixture::<f64>("translation", &FixtureParams::default())?;
    let d = trans.expansivity_delta(Notion::TopologicalExpansive, 1.0, None)?;
    let cfg = SearchConfig { seed: 7, iterations: 2_000_000, pair_budget: 2_000, ..SearchConfig::default() };
    let v = falsify(&trans.flow, Notion::TopologicalExpansive, 1.0, &d, &cfg)?;
    pass &= v.witness().is_none() && v.pairs_screened >= 1000;
    parts.push(format!("translation: {} screened, witness {}", v.pairs_screened, v.witness().is_some()));
    Ok(Outcome { pass, detail: parts.join("; ") })
}

fn c8() -> Check {
    let reps = suites::lemma_suites(SEED)?;
    let expected = [1000, 10_000, 100];
    let pass = reps.len() == 3 && reps.iter().zip(expected).all(|(r, n)| r.pass && r.instances == n && r.failures == 0);
    let detail = reps
        .iter()
        .map(|r| format!("{} {}/{} ok, margin {:.3e}", r.name, r.instances - r.failures, r.instances, r.min_margin))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Outcome { pass, detail })
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.expect("entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("read"))
        })
        .collect()
}

fn c9() -> Check {
    let runs: [&[&str]; 6] = [
        &["estimate", "--fixture", "suspension:golden", "--mode", "classical", "--seed", "3"],
        &["estimate", "--fixture", "radial_plane", "--mode", "e-star", "--seed", "3"],
        &["separate", "--fixture", "suspension:full2", "--t", "6", "--delta", "0.125", "--seed", "3"],
        &["falsify", "--fixture", "punctured_sphere", "--notion", "expansive", "--delta", "0.05", "--seed", "7"],
        &["falsify", "--fixture", "translation", "--notion", "topological", "--seed", "7"],
        &["verify", "lemmas", "--seed", "3"],
    ];
    let mut pass = true;
    let mut files = 0;
    for args in runs {
        let mut snaps = Vec::new();
        for jobs in ["1", "3"] {
            let dir = tempfile::tempdir()?;
            let status = Command::new(env!("CARGO_BIN_EXE_texflow"))
                .args(args)
                .args(["--jobs", jobs, "--out"])
                .arg(dir.path())
                .output()?
                .status;
            pass &= status.success();
            snaps.push(snapshot(dir.path()));
        }
        pass &= !snaps[0].is_empty() && snaps[0] == snaps[1];
        files += snaps[0].len();
    }
    Ok(Outcome { pass, detail: format!("{} commands, {files} report files identical across --jobs 1 and 3", runs.len()) })
}

fn main() -> ExitCode {
    let full = load("suspension:full2");
    let gold = load("suspension:golden");
    let (full, gold) = match (full, gold) {
        (Ok(f), Ok(g)) => (f, g),
        (f, g) => {
            eprintln!("fixture setup failed: {:?} {:?}", f.err(), g.err());
            return ExitCode::FAILURE;
        }
    };
    let checks: Vec<(usize, &str, Box<dyn Fn() -> Check>)> = vec![
        (1, "classical entropy recovery", Box::new(|| c1(&full, &gold))),
        (2, "e* equals classical entropy on compact spaces", Box::new(|| c2(&full, &gold))),
        (3, "e* scales with time rescaling", Box::new(|| c3(&full))),
        (4, "e* conjugacy invariance", Box::new(c4)),
        (5, "spanning and separating e* agree", Box::new(|| c5(&full))),
        (6, "periodic-orbit growth bounded by e*", Box::new(|| c6(&full, &gold))),
        (7, "expansivity falsification", Box::new(c7)),
        (8, "scale and sandwich property suites", Box::new(c8)),
        (9, "determinism across --jobs", Box::new(c9)),
    ];
    let mut failed = 0;
    for (n, name, check) in &checks {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {n}: {} {name}: {detail} [{:.1?}]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed()
        );
    }
    println!("acceptance: {}/{} criteria pass", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
