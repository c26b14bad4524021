use mobicell_core::metrics::{coverage_fraction, CoverageGrid, CoverageServer};
use mobicell_core::radio::{capacity_bps_capped, link_state, path_loss_db, range_for_threshold_m, rx_power_dbm};
use mobicell_core::{LinkState, PathLossModel, Position, RadioModel, RadioParams};
use proptest::prelude::*;

fn params(tx: f64, sens: f64, hyst: f64) -> RadioParams {
    RadioParams {
        tx_power_dbm: tx,
        tx_antenna_gain_db: 10.0,
        rx_antenna_gain_db: 0.0,
        bandwidth_hz: 20e6,
        noise_figure_db: 7.0,
        carrier_band_label: String::new(),
        sensitivity_dbm: sens,
        hysteresis_db: hyst,
    }
}

fn model() -> PathLossModel {
    PathLossModel { pl0_db: 61.4, d0_m: 1.0, exponent_n: 3.5 }
}

proptest! {
    #[test]
    fn path_loss_grows_with_distance(a in 0.0f64..10_000.0, b in 0.0f64..10_000.0) {
        let (near, far) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(path_loss_db(near, &model()) <= path_loss_db(far, &model()));
        prop_assert!(path_loss_db(near, &model()) >= model().pl0_db);
    }

    #[test]
    fn capacity_is_monotone_and_capped(bw in 1e5f64..1e9, s1 in -40.0f64..60.0, s2 in -40.0f64..60.0) {
        let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
        let (c_lo, c_hi) = (capacity_bps_capped(bw, lo, 7.4), capacity_bps_capped(bw, hi, 7.4));
        prop_assert!(c_lo <= c_hi);
        prop_assert!(c_hi <= bw * 7.4 * (1.0 + 1e-12));
    }

    #[test]
    fn hysteresis_band_holds_state(sens in -110.0f64..-80.0, hyst in 0.0f64..6.0, frac in 0.0f64..1.0) {
        let p = params(30.0, sens, hyst);
        let inside = sens - hyst * frac;
        // Within [sens - hyst, sens) neither state changes.
        if inside < sens {
            prop_assert_eq!(link_state(inside, LinkState::Up, &p), LinkState::Up);
            prop_assert_eq!(link_state(inside, LinkState::Down, &p), LinkState::Down);
        }
        prop_assert_eq!(link_state(sens, LinkState::Down, &p), LinkState::Up);
        prop_assert_eq!(link_state(sens - hyst - 0.01, LinkState::Up, &p), LinkState::Down);
    }

    #[test]
    fn range_inverts_the_link_budget(tx in 10.0f64..50.0, thr in -110.0f64..-60.0) {
        let (t, r) = (params(tx, thr, 0.0), params(0.0, thr, 0.0));
        let d = range_for_threshold_m(&t, &r, &model(), thr);
        prop_assume!(d > 1.0);
        let rx = rx_power_dbm(&t, &r, path_loss_db(d, &model()));
        prop_assert!((rx - thr).abs() < 1e-9);
    }

    #[test]
    fn coverage_never_drops_when_a_server_is_added(
        cells in prop::collection::vec((0.0f64..1000.0, 0.0f64..500.0, 20.0f64..45.0), 0..5),
        extra in (0.0f64..1000.0, 0.0f64..500.0, 20.0f64..45.0),
    ) {
        let grid = CoverageGrid::new(0.0, 0.0, 1000.0, 500.0, 25.0);
        let rx = params(0.0, -95.0, 0.0);
        let radio = RadioModel { path_loss: model(), max_spectral_efficiency: 7.4 };
        let server = |i: usize, &(x, y, tx): &(f64, f64, f64)| CoverageServer {
            id: format!("c{i}"),
            position: Position::new(x, y),
            tx: params(tx, -95.0, 0.0),
            pl0_override: None,
        };
        let mut servers: Vec<_> = cells.iter().enumerate().map(|(i, c)| server(i, c)).collect();
        let before = coverage_fraction(&grid, &servers, &rx, &radio);
        servers.push(server(99, &extra));
        let after = coverage_fraction(&grid, &servers, &rx, &radio);
        prop_assert!(after >= before);
        prop_assert!((0.0..=1.0).contains(&after));
    }
}
