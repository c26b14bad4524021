use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mobility::Position;
use crate::radio::{RadioModel, RadioParams};
use crate::scenario::GridSpec;

/// Regular grid of square cells; each cell is represented by its center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub x0_m: f64,
    pub y0_m: f64,
    pub resolution_m: f64,
    pub nx: usize,
    pub ny: usize,
}

impl CoverageGrid {
    pub fn new(x0_m: f64, y0_m: f64, x1_m: f64, y1_m: f64, resolution_m: f64) -> CoverageGrid {
        let count = |span: f64| ((span / resolution_m).round() as usize).max(1);
        CoverageGrid { x0_m, y0_m, resolution_m, nx: count(x1_m - x0_m), ny: count(y1_m - y0_m) }
    }

    pub fn from_spec(g: &GridSpec) -> CoverageGrid {
        CoverageGrid::new(g.x0_m, g.y0_m, g.x1_m, g.y1_m, g.resolution_m)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Center of cell `i`, row-major from the `(x0, y0)` corner.
    pub fn center(&self, i: usize) -> Position {
        let (ix, iy) = (i % self.nx, i / self.nx);
        Position::new(
            self.x0_m + (ix as f64 + 0.5) * self.resolution_m,
            self.y0_m + (iy as f64 + 0.5) * self.resolution_m,
        )
    }
}

/// A cell that can serve grid points at the evaluated instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageServer {
    pub id: String,
    pub position: Position,
    pub tx: RadioParams,
    pub pl0_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCoverage {
    pub best_server: Option<String>,
    pub rx_dbm: f64,
    pub covered: bool,
}

/// Best server for one point: highest received power, ties to the lowest id.
fn best_at<'a>(
    p: &Position,
    servers: &'a [CoverageServer],
    rx: &RadioParams,
    model: &RadioModel,
) -> Option<(&'a str, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for s in servers {
        let dbm = model.rx_dbm(&s.tx, rx, p.distance(&s.position), s.pl0_override);
        best = match best {
            Some((id, b)) if b > dbm || (b == dbm && id <= s.id.as_str()) => Some((id, b)),
            _ => Some((s.id.as_str(), dbm)),
        };
    }
    best
}

pub fn coverage_map(
    grid: &CoverageGrid,
    servers: &[CoverageServer],
    rx: &RadioParams,
    model: &RadioModel,
) -> Vec<CellCoverage> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| match best_at(&grid.center(i), servers, rx, model) {
            Some((id, dbm)) => {
                CellCoverage { best_server: Some(id.to_string()), rx_dbm: dbm, covered: dbm >= rx.sensitivity_dbm }
            }
            None => CellCoverage { best_server: None, rx_dbm: f64::NEG_INFINITY, covered: false },
        })
        .collect()
}

/// Fraction of grid cells whose best server reaches the receiver sensitivity.
/// `servers` must already be restricted to cells that are on air.
pub fn coverage_fraction(grid: &CoverageGrid, servers: &[CoverageServer], rx: &RadioParams, model: &RadioModel) -> f64 {
    if grid.is_empty() || servers.is_empty() {
        return 0.0;
    }
    let covered: usize = (0..grid.len())
        .into_par_iter()
        .filter(|&i| best_at(&grid.center(i), servers, rx, model).is_some_and(|(_, dbm)| dbm >= rx.sensitivity_dbm))
        .count();
    covered as f64 / grid.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::{range_for_threshold_m, PathLossModel};

    fn model() -> RadioModel {
        RadioModel {
            path_loss: PathLossModel { pl0_db: 61.4, d0_m: 1.0, exponent_n: 3.5 },
            max_spectral_efficiency: 7.4,
        }
    }

    fn params(tx: f64) -> RadioParams {
        RadioParams {
            tx_power_dbm: tx,
            tx_antenna_gain_db: 0.0,
            rx_antenna_gain_db: 0.0,
            bandwidth_hz: 20e6,
            noise_figure_db: 9.0,
            carrier_band_label: String::new(),
            sensitivity_dbm: -100.0,
            hysteresis_db: 2.0,
        }
    }

    #[test]
    fn grid_centers() {
        let g = CoverageGrid::new(0.0, 0.0, 100.0, 50.0, 10.0);
        assert_eq!((g.nx, g.ny, g.len()), (10, 5, 50));
        assert_eq!(g.center(0), Position::new(5.0, 5.0));
        assert_eq!(g.center(11), Position::new(15.0, 15.0));
    }

    #[test]
    fn no_servers_is_zero() {
        let g = CoverageGrid::new(0.0, 0.0, 100.0, 100.0, 10.0);
        assert_eq!(coverage_fraction(&g, &[], &params(0.0), &model()), 0.0);
    }

    #[test]
    fn single_server_matches_point_in_disk_count() {
        let g = CoverageGrid::new(0.0, 0.0, 400.0, 400.0, 10.0);
        let s = CoverageServer {
            id: "a".into(),
            position: Position::new(200.0, 200.0),
            tx: params(30.0),
            pl0_override: None,
        };
        let rx = params(0.0);
        let r = range_for_threshold_m(&s.tx, &rx, &model().path_loss, rx.sensitivity_dbm);
        let inside = (0..g.len()).filter(|&i| g.center(i).distance(&s.position) <= r).count();
        let f = coverage_fraction(&g, std::slice::from_ref(&s), &rx, &model());
        assert!((f - inside as f64 / g.len() as f64).abs() <= 1.0 / g.len() as f64);
    }

    #[test]
    fn ties_break_to_lowest_id() {
        let g = CoverageGrid::new(0.0, 0.0, 10.0, 10.0, 10.0);
        let mk = |id: &str| CoverageServer {
            id: id.into(),
            position: Position::new(5.0, 5.0),
            tx: params(30.0),
            pl0_override: None,
        };
        let map = coverage_map(&g, &[mk("b"), mk("a")], &params(0.0), &model());
        assert_eq!(map[0].best_server.as_deref(), Some("a"));
    }
}
