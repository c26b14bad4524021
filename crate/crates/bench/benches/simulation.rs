use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, Criterion};
use mobicell_core::metrics::{coverage_fraction, CoverageGrid, CoverageServer};
use mobicell_core::radio::{capacity_bps_capped, path_loss_db};
use mobicell_core::{load_scenario, run_scenario, PathLossModel, Position, RadioModel, RadioParams};

fn scenario(name: &str) -> mobicell_core::ScenarioDescription {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"));
    load_scenario(&p).unwrap()
}

fn radio(tx: f64) -> RadioParams {
    RadioParams {
        tx_power_dbm: tx,
        tx_antenna_gain_db: 12.0,
        rx_antenna_gain_db: 0.0,
        bandwidth_hz: 20e6,
        noise_figure_db: 7.0,
        carrier_band_label: String::new(),
        sensitivity_dbm: -95.0,
        hysteresis_db: 2.0,
    }
}

fn link_budget(c: &mut Criterion) {
    let model = PathLossModel { pl0_db: 61.4, d0_m: 1.0, exponent_n: 3.5 };
    c.bench_function("path_loss_and_capacity_1k", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 0..1000 {
                let pl = path_loss_db(black_box(i as f64 * 3.0), &model);
                acc += capacity_bps_capped(20e6, 50.0 - pl + 100.0, 7.4);
            }
            acc
        })
    });
}

fn coverage(c: &mut Criterion) {
    let grid = CoverageGrid::new(0.0, 0.0, 2000.0, 1000.0, 10.0);
    let model = RadioModel {
        path_loss: PathLossModel { pl0_db: 61.4, d0_m: 1.0, exponent_n: 3.5 },
        max_spectral_efficiency: 7.4,
    };
    let servers: Vec<CoverageServer> = [(500.0, 500.0), (1300.0, 500.0), (1700.0, 250.0), (900.0, 850.0)]
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| CoverageServer {
            id: format!("c{i}"),
            position: Position::new(x, y),
            tx: radio(40.0),
            pl0_override: None,
        })
        .collect();
    let rx = radio(23.0);
    c.bench_function("coverage_grid_200x100_4_servers", |b| {
        b.iter(|| coverage_fraction(black_box(&grid), &servers, &rx, &model))
    });
}

fn event_loop(c: &mut Criterion) {
    let mut s = scenario("fig5_split2");
    s.grid = None;
    let mut group = c.benchmark_group("event_loop");
    group.sample_size(20);
    group.bench_function("fig5_split2_360s_no_grid", |b| b.iter(|| run_scenario(black_box(&s), None, None).unwrap()));
    group.finish();
}

criterion_group!(benches, link_budget, coverage, event_loop);
criterion_main!(benches);
