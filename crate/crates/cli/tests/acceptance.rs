//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use mobicell_core::protocol::compute_bap_route;
use mobicell_core::protocol::explore::{explore, ExploreConfig};
use mobicell_core::radio::{capacity_bps_capped, noise_floor_dbm, path_loss_db};
use mobicell_core::topology::{ElementId, IabForest, TopologyError};
use mobicell_core::{
    load_scenario, run_scenario, PathLossModel, ProcedureKind, ScenarioDescription, SimError, SimOutput, Simulation,
    TraceEvent,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SHIPPED: [&str; 5] = ["baseline_no_mc", "fig4_nosplit", "fig5_split2", "iab_overlay", "iab_direct_bap"];
/// Brute-force point-in-disk count on the 200 x 100 seaport grid:
/// 7836 covered cells with the mobile cell, 5380 without.
const ORACLE_MARGIN: f64 = 2456.0 / 20000.0;
const GRID_CELL: f64 = 1.0 / 20000.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn shipped_path(name: &str) -> PathBuf {
    root().join("scenarios").join(format!("{name}.toml"))
}

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(format!("{name}.toml"))
}

fn load(p: &Path) -> ScenarioDescription {
    load_scenario(p).unwrap_or_else(|e| panic!("{e}"))
}

fn run(s: &ScenarioDescription) -> SimOutput {
    run_scenario(s, None, None).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn coverage_extension() -> Outcome {
    let base = run(&load(&shipped_path("baseline_no_mc"))).metrics.final_coverage().unwrap();
    let with_mc = run(&load(&shipped_path("fig4_nosplit"))).metrics.final_coverage().unwrap();
    let margin = with_mc - base;
    ensure(margin > 0.0, || format!("no extension: {with_mc} vs {base}"))?;
    ensure((margin - ORACLE_MARGIN).abs() <= GRID_CELL, || {
        format!("margin {margin} vs oracle {ORACLE_MARGIN} (tolerance {GRID_CELL})")
    })?;
    Ok(format!("baseline {base}, with MC {with_mc}, margin {margin:.6} (oracle {ORACLE_MARGIN})"))
}

fn relay_dependence() -> Outcome {
    let out = run(&load(&shipped_path("fig5_split2")));
    let base = run(&load(&shipped_path("baseline_no_mc")));
    let served: Vec<&String> = out
        .metrics
        .ues
        .iter()
        .filter(|(_, u)| {
            u.samples
                .iter()
                .any(|s| s.time_s == 299.0 && s.serving_cell.as_deref().is_some_and(|c| c.starts_with("mc1.")))
        })
        .map(|(id, _)| id)
        .collect();
    ensure(!served.is_empty(), || "no UE served by the mobile cell before the failure".into())?;
    for ue in &served {
        let s = out.metrics.ues[*ue].samples.iter().find(|s| s.time_s == 301.0).unwrap();
        ensure(s.state == mobicell_core::metrics::UeServiceState::Outage, || {
            format!("{ue} still {:?} at 301 s", s.state)
        })?;
        let start = out.metrics.ues[*ue].outage_intervals.iter().map(|i| i.0).find(|&t| t >= 300.0);
        ensure(start.is_some_and(|t| t <= 301.0), || format!("{ue} outage starts at {start:?}"))?;
    }
    let mut worst: f64 = 0.0;
    for c in out.metrics.coverage.iter().filter(|c| c.time_s >= 301.0) {
        let b = base.metrics.coverage_at(c.time_s).unwrap();
        worst = worst.max((c.fraction - b).abs() / b);
    }
    ensure(worst <= 0.005, || format!("coverage differs from baseline by {:.3}%", worst * 100.0))?;
    Ok(format!(
        "{} MC-served UE(s) in outage by 301 s; coverage within {:.4}% of baseline",
        served.len(),
        worst * 100.0
    ))
}

fn wab_advantage() -> Outcome {
    let split = run(&load(&fixture_path("wab_slow_split2")));
    let nosplit = run(&load(&fixture_path("wab_slow_nosplit")));
    let mc = &split.metrics.mobile_cells["mc1"];
    let verdict = mc.split_verdict.clone().unwrap_or_default();
    ensure(verdict.contains("LatencyExceeded"), || format!("split-2 verdict `{verdict}`"))?;
    ensure(mc.first_on_air_s.is_none(), || format!("split-2 MC on air at {:?}", mc.first_on_air_s))?;
    ensure(!split.trace.records.iter().any(|r| r.event == TraceEvent::CellState), || {
        "split-2 cell changed state".into()
    })?;
    let on_air = nosplit.metrics.mobile_cells["mc1"].first_on_air_s;
    ensure(on_air.is_some(), || "no-split MC never on air".into())?;
    Ok(format!("split-2 {verdict}, never on air; no-split on air at {}s", on_air.unwrap()))
}

/// Random forest of `n` DUs: `donors` roots, every later node picks an
/// earlier one as parent.
fn random_forest(rng: &mut ChaCha8Rng, n: usize) -> (IabForest, Vec<(ElementId, ElementId)>) {
    let donors = rng.random_range(1..=3);
    let name = |i: usize| ElementId::from(format!("du{i}"));
    let edges: Vec<_> = (donors..n).map(|c| (name(c), name(rng.random_range(0..c)))).collect();
    let forest = IabForest::new(
        (0..donors).map(name),
        edges.iter().map(|(c, p)| (c.clone(), ElementId::from(format!("{c}.mt")), p.clone())),
    )
    .unwrap();
    (forest, edges)
}

fn bfs_route(forest: &IabForest, edges: &[(ElementId, ElementId)], node: &ElementId) -> Vec<ElementId> {
    let mut adj: BTreeMap<&ElementId, Vec<&ElementId>> = BTreeMap::new();
    for (a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut prev: BTreeMap<&ElementId, &ElementId> = BTreeMap::new();
    let mut queue = VecDeque::from([node]);
    while let Some(cur) = queue.pop_front() {
        if forest.is_donor(cur) {
            let mut out = vec![cur.clone()];
            while let Some(p) = prev.get(out.last().unwrap()) {
                out.push((*p).clone());
            }
            out.reverse();
            return out;
        }
        for n in adj.get(cur).into_iter().flatten() {
            if *n != node && !prev.contains_key(n) {
                prev.insert(n, cur);
                queue.push_back(n);
            }
        }
    }
    Vec::new()
}

fn bap_constraint() -> Outcome {
    let mut s = load(&shipped_path("iab_direct_bap"));
    s.mobile_cells[0].bap_capable = false;
    match Simulation::new(&s) {
        Err(SimError::Topology(TopologyError::BapRequired { .. })) => {}
        Err(e) => return Err(format!("expected BapRequired, got {e}")),
        Ok(_) => return Err("bap_capable=false was accepted".into()),
    }
    let out = run(&load(&shipped_path("iab_direct_bap")));
    ensure(out.metrics.mobile_cells["mc1"].first_on_air_s.is_some(), || "BAP-capable MC never on air".into())?;

    let mut routes = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (forest, edges) = random_forest(&mut rng, 12);
        for node in forest.nodes() {
            let got = compute_bap_route(&forest, &node).map_err(|e| e.to_string())?.dus();
            let want = bfs_route(&forest, &edges, &node);
            ensure(got == want, || format!("seed {seed} node {node}: {got:?} vs {want:?}"))?;
            routes += 1;
        }
    }
    Ok(format!("BapRequired without BAP; on air with BAP; {routes} routes over 100 forests match BFS"))
}

fn fsm_soundness() -> Outcome {
    use ProcedureKind::*;
    let mut states = 0;
    for chain in [vec![MtSession], vec![F1Setup], vec![UeAttach], vec![MtSession, F1Setup, UeAttach]] {
        let r = explore(&ExploreConfig { chain: chain.clone(), max_retries: 1, max_losses: 1 });
        ensure(r.deadlocks.is_empty(), || format!("{chain:?}: deadlocks {:?}", r.deadlocks))?;
        ensure(r.cycles == 0, || format!("{chain:?}: {} non-terminating cycles", r.cycles))?;
        ensure(r.violations.is_empty(), || format!("{chain:?}: {:?}", r.violations))?;
        ensure(r.terminal_states > 0, || format!("{chain:?}: no terminal state"))?;
        states += r.states;
    }
    Ok(format!("{states} states explored, no deadlock, all runs terminate, F1 always after MT Active"))
}

fn radio_analytics() -> Outcome {
    let path = root().join("crates/core/tests/data/radio_oracle.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let model = PathLossModel { pl0_db: v[0], d0_m: v[1], exponent_n: v[2] };
        let pl = path_loss_db(v[3], &model);
        let noise = noise_floor_dbm(v[7], v[8]);
        let snr = v[4] + v[5] + v[6] - pl - noise;
        let cap = capacity_bps_capped(v[7], snr, f64::INFINITY);
        for (got, want) in [(pl, v[9]), (noise, v[10]), (cap, v[13])] {
            worst = worst.max(((got - want) / want).abs());
        }
        n += 1;
    }
    ensure(n == 1000, || format!("{n} draws"))?;
    ensure(worst <= 1e-9, || format!("worst relative error {worst:e}"))?;
    Ok(format!("{n} draws, worst relative error {worst:.2e}"))
}

fn run_cli(scenario: &Path, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_mobicell"))
        .arg("run")
        .arg(scenario)
        .args(["--seed", "7", "--out"])
        .arg(out)
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("{} exited with {status}", scenario.display()))
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for name in SHIPPED {
        let (a, b) = (tmp.path().join(format!("{name}_a")), tmp.path().join(format!("{name}_b")));
        run_cli(&shipped_path(name), &a)?;
        run_cli(&shipped_path(name), &b)?;
        let (fa, fb) = (files_under(&a), files_under(&b));
        ensure(fa.contains_key(Path::new("trace.log")) && fa.contains_key(Path::new("metrics.json")), || {
            format!("{name}: missing outputs")
        })?;
        ensure(fa == fb, || format!("{name}: outputs differ"))?;
        files += fa.len();
    }
    Ok(format!("5 scenarios, {files} output files byte-identical across two runs"))
}

fn scalability() -> Outcome {
    let runs: Vec<SimOutput> = (0..=4).map(|n| run(&load(&fixture_path(&format!("seaport_sweep_{n}"))))).collect();
    let series: Vec<Vec<(f64, f64)>> =
        runs.iter().map(|o| o.metrics.coverage.iter().map(|c| (c.time_s, c.fraction)).collect()).collect();
    for w in series.windows(2) {
        ensure(w[0].len() == w[1].len(), || "coverage series lengths differ".into())?;
        for (x, y) in w[0].iter().zip(&w[1]) {
            ensure(x.0 == y.0 && y.1 >= x.1, || format!("coverage fell from {} to {} at {}s", x.1, y.1, x.0))?;
        }
    }
    let finals: Vec<String> = series.iter().map(|s| format!("{:.4}", s.last().unwrap().1)).collect();
    Ok(format!("{} samples per run, final coverage {}", series[0].len(), finals.join(" <= ")))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("coverage extension", coverage_extension),
        ("relay dependence", relay_dependence),
        ("no-split tolerates slow backhaul", wab_advantage),
        ("BAP constraint", bap_constraint),
        ("procedure FSM soundness", fsm_soundness),
        ("radio analytics", radio_analytics),
        ("determinism", determinism),
        ("scalability monotonicity", scalability),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        let outcome =
            outcome.and_then(|d| if secs <= 30.0 { Ok(d) } else { Err(format!("took {secs:.1}s, budget 30s")) });
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.2}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.2}s) {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 8 acceptance criteria passed");
}
