use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use texflow::entropy::{estimate_e_star, estimate_entropy_compact, verify_identity, Identity, IdentityInstance, Side, StarMode, Tolerance};
use texflow::expansivity::witness_profile;
use texflow::fixtures::{build_fixture, list_fixtures, normalize_id, Fixture, FixtureParams};
use texflow::output::{fmt17, rates_csv, to_json_string, write_json, write_text};
use texflow::periodic::orbit_census;
use texflow::separation::{separation_report, SeparationReport, Which};
use texflow::suites;
use texflow::{falsify as run_falsify, Notion, ScaleFn, SearchConfig};

use crate::config::RunConfig;
use crate::{CensusArgs, EstimateArgs, Expect, FalsifyArgs, FixtureArgs, Mode, NotionArg, SeparateArgs, Suite, VerifyArgs};

const BOTH_SUSPENSIONS: [&str; 2] = ["suspension:full2", "suspension:golden"];

pub fn fixtures_list(json: bool) -> Result<bool> {
    let catalog = list_fixtures();
    if json {
        print!("{}", to_json_string(&catalog)?);
    } else {
        for f in &catalog {
            println!("{:<20} {}", f.id, f.description);
        }
    }
    Ok(true)
}

pub fn fixtures_show(id: &str) -> Result<bool> {
    let nid = normalize_id(id);
    let base = nid.split(':').next().unwrap_or(&nid);
    let info = list_fixtures()
        .into_iter()
        .find(|f| f.id == base)
        .ok_or_else(|| anyhow!("unknown fixture: {id}"))?;
    println!("{} ({})", info.id, info.space);
    println!("  {}", info.description);
    for p in &info.params {
        println!("  {:<10} {:<12} default {:<18} {}", p.name, p.kind, p.default, p.description);
    }
    Ok(true)
}

fn fixture_params(cfg: &RunConfig, args: &FixtureArgs) -> FixtureParams {
    let mut p = cfg.fixture.params.clone();
    if args.depth.is_some() {
        p.depth = args.depth;
    }
    if args.a.is_some() {
        p.a = args.a;
    }
    p
}

fn load_fixture(cfg: &RunConfig, args: &FixtureArgs) -> Result<Fixture<f64>> {
    let id = args
        .fixture
        .clone()
        .or_else(|| cfg.fixture.id.clone())
        .ok_or_else(|| anyhow!("no fixture given (--fixture or [fixture] id)"))?;
    Ok(build_fixture(&id, &fixture_params(cfg, args))?)
}

fn seed(cfg: &RunConfig, flag: Option<u64>) -> u64 {
    flag.or(cfg.seed).unwrap_or(0)
}

fn tolerance(cfg: &RunConfig) -> Tolerance<f64> {
    let d = Tolerance::default();
    Tolerance {
        absolute: cfg.tolerance.absolute.unwrap_or(d.absolute),
        relative: cfg.tolerance.relative.unwrap_or(d.relative),
    }
}

/// Integer grid in fixture time units: `dt` is the roof for suspensions and
/// `0.25` otherwise.
fn time_grid(f: &Fixture<f64>, t_grid: Option<Vec<f64>>, t_max: Option<usize>, dt: Option<f64>) -> (Vec<f64>, f64) {
    let (unit, default_max, default_dt) = match &f.sft {
        Some(s) => (s.roof * f.time_unit, 12, s.roof * f.time_unit),
        None => (f.time_unit, 8, 0.25 * f.time_unit),
    };
    let grid = t_grid.unwrap_or_else(|| (1..=t_max.unwrap_or(default_max)).map(|t| t as f64 * unit).collect());
    (grid, dt.unwrap_or(default_dt))
}

fn report_files<T: Serialize>(out: &Path, stem: &str, value: &T) -> Result<()> {
    let path = out.join(format!("{stem}.json"));
    write_json(&path, value).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn estimate(cfg: &RunConfig, a: &EstimateArgs, out: &Path) -> Result<bool> {
    let mut f = load_fixture(cfg, &a.fixture)?;
    let mode = match (a.mode, cfg.estimate.mode.as_deref()) {
        (Some(m), _) => m,
        (None, None) => Mode::Classical,
        (None, Some(s)) => <Mode as clap::ValueEnum>::from_str(s, true).map_err(|e| anyhow!("estimate.mode: {e}"))?,
    };
    if let Some(eps) = a.eps.clone().or_else(|| cfg.estimate.eps.clone()) {
        f.set_eps_grid(eps);
    }
    let (t_grid, dt) = time_grid(
        &f,
        a.t_grid.clone().or_else(|| cfg.estimate.t_grid.clone()),
        a.t_max.or(cfg.estimate.t_max),
        a.dt.or(cfg.estimate.dt),
    );
    let seed = seed(cfg, a.fixture.seed);
    let ks = [f.compact.clone()];
    let star = |m| estimate_e_star(&f.flow, &ks, &f.scale_family, &t_grid, dt, m, seed);
    let write = |name: &str, r: &texflow::EntropyReport<f64>| -> Result<()> {
        report_files(out, &format!("estimate_{name}"), r)?;
        let (series, cells) = rates_csv(r)?;
        write_text(&out.join(format!("rates_{name}.csv")), &series)?;
        write_text(&out.join(format!("cells_{name}.csv")), &cells)?;
        println!("{name} {}: estimate {}", f.id, fmt17(r.estimate));
        Ok(())
    };
    match mode {
        Mode::Classical => write("classical", &estimate_entropy_compact(&f.flow, &f.compact, &f.eps_grid, &t_grid, dt, seed)?)?,
        Mode::EStar => write("e_star", &star(StarMode::Separating)?)?,
        Mode::EStarSpanning => write("e_star_spanning", &star(StarMode::Spanning)?)?,
        Mode::Paired => {
            let inst = IdentityInstance {
                base: Side { flow: f.flow.clone(), k_list: ks.to_vec(), deltas: f.scale_family.clone() },
                partner: None,
                eps_grid: f.eps_grid.clone(),
                t_grid: t_grid.clone(),
                dt,
                seed,
                tolerance: tolerance(cfg),
            };
            let v = verify_identity(Identity::CompactEquality, &inst)?;
            write("e_star", &v.reports[0])?;
            write("classical", &v.reports[1])?;
            report_files(out, "paired", &v)?;
            println!(
                "paired {}: |e* - e| = {} (tolerance {}) {}",
                f.id,
                fmt17(v.margin),
                fmt17(v.tolerance),
                verdict_word(v.pass)
            );
            return Ok(v.pass);
        }
    }
    Ok(true)
}

fn verdict_word(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn separate(cfg: &RunConfig, a: &SeparateArgs, out: &Path) -> Result<bool> {
    let f = load_fixture(cfg, &a.fixture)?;
    let (grid, dt) = time_grid(&f, None, Some(3), a.dt.or(cfg.separate.dt));
    let t = a.t.or(cfg.separate.t).unwrap_or(*grid.last().expect("nonempty grid"));
    let delta = a.delta.or(cfg.separate.delta).unwrap_or(if f.sft.is_some() { 0.125 } else { 0.1 });
    let which = match &cfg.separate.which {
        None => Which::ALL,
        Some(ws) => Which {
            separated: ws.iter().any(|w| w == "separated"),
            spanning: ws.iter().any(|w| w == "spanning"),
            beta: ws.iter().any(|w| w == "beta"),
        },
    };
    let rep = separation_report(&f.flow, &f.compact, t, &ScaleFn::constant(delta), dt, seed(cfg, a.fixture.seed), which)?;
    report_files(out, "separation", &rep)?;
    write_text(&out.join("separation.csv"), &format!("{}\n{}\n", SeparationReport::<f64>::CSV_HEADER, rep.csv_row()))?;
    println!(
        "separate {} t={t} delta={delta}: S>={} R<={} beta={}",
        f.id,
        rep.s_lower.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
        rep.r_upper.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
        rep.beta.map(fmt17).unwrap_or_else(|| "-".into())
    );
    Ok(true)
}

fn parse_notion(s: &str) -> Result<NotionArg> {
    <NotionArg as clap::ValueEnum>::from_str(s, true).map_err(|e| anyhow!("falsify.notion: {e}"))
}

fn parse_expect(s: &str) -> Result<Expect> {
    <Expect as clap::ValueEnum>::from_str(s, true).map_err(|e| anyhow!("falsify.expect: {e}"))
}

pub fn falsify(cfg: &RunConfig, a: &FalsifyArgs, out: &Path) -> Result<bool> {
    let f = load_fixture(cfg, &a.fixture)?;
    let c = &cfg.falsify;
    let notion = match (a.notion, c.notion.as_deref()) {
        (Some(n), _) => n,
        (None, Some(s)) => parse_notion(s)?,
        (None, None) => NotionArg::Expansive,
    };
    let notion = match notion {
        NotionArg::Expansive => Notion::Expansive,
        NotionArg::Topological => Notion::TopologicalExpansive,
        NotionArg::Rescaling => Notion::RescalingExpansive,
    };
    let seed = a.fixture.seed.or(cfg.seed).ok_or_else(|| anyhow!("falsify needs a seed (--seed or seed in the config)"))?;
    let eps = a.eps.or(c.eps).unwrap_or(1.0);
    let delta = f.expansivity_delta(notion, eps, a.delta.or(c.delta))?;
    let d = SearchConfig::<f64>::default();
    let search = SearchConfig {
        pair_samples: a.pairs.or(c.pair_samples).unwrap_or(d.pair_samples),
        knot_count: c.knot_count.unwrap_or(d.knot_count),
        window_t: c.window.unwrap_or(d.window_t),
        dt: c.dt.unwrap_or(d.dt),
        seed,
        iterations: a.iterations.or(c.iterations).unwrap_or(d.iterations),
        pair_budget: a.pair_budget.or(c.pair_budget).unwrap_or(d.pair_budget),
        restarts: c.restarts.unwrap_or(d.restarts),
        ..d
    };
    let v = run_falsify(&f.flow, notion, eps, &delta, &search)?;
    report_files(out, "falsify", &v)?;
    match v.witness() {
        Some(w) => {
            let profile = witness_profile(&f.flow, &delta, w)?;
            let mut csv = String::from("t,distance,delta\n");
            for (t, dist, dl) in profile {
                csv.push_str(&format!("{},{},{}\n", fmt17(t), fmt17(dist), fmt17(dl)));
            }
            write_text(&out.join("witness_profile.csv"), &csv)?;
            println!(
                "witness {}: max_discrepancy {} distinctness {} {:?}",
                f.id,
                fmt17(w.max_discrepancy),
                fmt17(w.orbit_distinctness),
                w.tail_flag
            );
        }
        None => println!(
            "no_witness {}: {} pairs screened, {} iterations",
            f.id, v.pairs_screened, v.iterations_used
        ),
    }
    let expect = match (a.expect, c.expect.as_deref()) {
        (Some(e), _) => Some(e),
        (None, Some(s)) => Some(parse_expect(s)?),
        (None, None) => None,
    };
    Ok(match expect {
        None => true,
        Some(Expect::Witness) => v.witness().is_some(),
        Some(Expect::NoWitness) => v.witness().is_none(),
    })
}

pub fn census(cfg: &RunConfig, a: &CensusArgs, out: &Path) -> Result<bool> {
    let f = load_fixture(cfg, &a.fixture)?;
    let sft = f.sft.as_ref().ok_or_else(|| anyhow!("census needs a suspension fixture, got {}", f.id))?;
    let t_max = a.t_max.or(cfg.census.t_max).unwrap_or(12.0 * sft.roof);
    let c = orbit_census(sft, t_max)?;
    let csv = c.to_csv();
    write_text(&out.join("census.csv"), &csv)?;
    report_files(out, "census", &c)?;
    print!("{csv}");
    Ok(true)
}

#[derive(Serialize)]
struct Summary<T: Serialize> {
    suite: String,
    pass: bool,
    checks: Vec<T>,
}

fn suspension_ids(flag: &Option<String>, default: &[&str]) -> Vec<String> {
    match flag {
        Some(id) => vec![id.clone()],
        None => default.iter().map(|s| s.to_string()).collect(),
    }
}

fn line(name: &str, lhs: f64, rhs: f64, margin: f64, tol: f64, pass: bool) {
    println!(
        "{name}: lhs {} rhs {} margin {} tolerance {} {}",
        fmt17(lhs),
        fmt17(rhs),
        fmt17(margin),
        fmt17(tol),
        verdict_word(pass)
    );
}

pub fn verify(cfg: &RunConfig, a: &VerifyArgs, out: &Path) -> Result<bool> {
    let seed = seed(cfg, a.seed);
    let tol = tolerance(cfg);
    let write = |name: &str, pass: bool, v: &dyn erased::Json| -> Result<bool> {
        let path = out.join(format!("verify_{name}.json"));
        write_text(&path, &v.json()?)?;
        println!("{name}: {} ({})", verdict_word(pass), path.display());
        Ok(pass)
    };
    match a.suite {
        Suite::Sa1 => {
            let c = suites::conjugacy_check(seed)?;
            line("sa1 translation/colina", c.verdict.lhs, c.verdict.rhs, c.verdict.margin, c.verdict.tolerance, c.pass);
            write("sa1", c.pass, &Summary { suite: "sa1".into(), pass: c.pass, checks: vec![c.clone()] })
        }
        Suite::Sa2 | Suite::Sa4 => {
            let (identity, name) = match a.suite {
                Suite::Sa2 => (Identity::CompactEquality, "sa2"),
                _ => (Identity::SpanningEqualsSeparating, "sa4"),
            };
            let default: &[&str] = if name == "sa2" { &BOTH_SUSPENSIONS } else { &BOTH_SUSPENSIONS[..1] };
            let mut checks = Vec::new();
            for id in suspension_ids(&a.fixture, default) {
                let f = suites::suspension_fixture(&id)?;
                let mut inst = suites::suspension_instance(&f, seed)?;
                inst.tolerance = tol;
                let v = verify_identity(identity.clone(), &inst)?;
                line(&format!("{name} {id}"), v.lhs, v.rhs, v.margin, v.tolerance, v.pass);
                checks.push(v);
            }
            let pass = checks.iter().all(|v| v.pass);
            write(name, pass, &Summary { suite: name.into(), pass, checks })
        }
        Suite::Sa3 => {
            let scale = a.a.or(cfg.verify.a).unwrap_or(2.0);
            if !(scale > 0.0) {
                bail!("--a must be positive");
            }
            let id = a.fixture.clone().unwrap_or_else(|| BOTH_SUSPENSIONS[0].into());
            let f = suites::suspension_fixture(&id)?;
            let mut inst = suites::suspension_instance(&f, seed)?;
            inst.tolerance = tol;
            let v = verify_identity(Identity::TimeRescale { a: scale }, &inst)?;
            let ratio = v.ratio.unwrap_or(f64::NAN);
            let in_band = (ratio - scale).abs() <= tol.relative * scale;
            let pass = v.pass && in_band;
            println!("sa3 {id}: ratio {} (a = {scale}, band ±{})", fmt17(ratio), tol.relative * scale);
            line(&format!("sa3 {id}"), v.lhs, v.rhs, v.margin, v.tolerance, pass);
            write("sa3", pass, &Summary { suite: "sa3".into(), pass, checks: vec![v] })
        }
        Suite::ThB => {
            let slack = cfg.verify.slack.unwrap_or(0.05);
            let mut checks = Vec::new();
            for id in suspension_ids(&a.fixture, &BOTH_SUSPENSIONS) {
                let f = suites::suspension_fixture(&id)?;
                let inst = suites::suspension_instance(&f, seed)?;
                let e_star = suites::separating_e_star(&inst)?;
                let classical = estimate_entropy_compact(&f.flow, &f.compact, &f.eps_grid, &inst.t_grid, inst.dt, seed)?;
                let g = suites::growth_check(&f, &e_star, Some(&classical), slack)?;
                println!(
                    "thB {id}: growth {} <= e* {} + {} {} (classical {})",
                    fmt17(g.bound.growth_rate),
                    fmt17(g.bound.e_star_estimate),
                    slack,
                    verdict_word(g.bound.pass),
                    fmt17(classical.estimate)
                );
                checks.push(g);
            }
            let pass = checks.iter().all(|g| g.bound.pass);
            write("thB", pass, &Summary { suite: "thB".into(), pass, checks })
        }
        Suite::Lemmas => {
            let reps = suites::lemma_suites(seed)?;
            for r in &reps {
                println!(
                    "{}: {} instances, {} failures, min margin {} {}",
                    r.name,
                    r.instances,
                    r.failures,
                    fmt17(r.min_margin),
                    verdict_word(r.pass)
                );
            }
            let pass = reps.iter().all(|r| r.pass);
            write("lemmas", pass, &Summary { suite: "lemmas".into(), pass, checks: reps })
        }
    }
}

mod erased {
    pub trait Json {
        fn json(&self) -> anyhow::Result<String>;
    }

    impl<T: serde::Serialize> Json for T {
        fn json(&self) -> anyhow::Result<String> {
            Ok(texflow::output::to_json_string(self)?)
        }
    }
}
