//! Position-over-time traces for mobile platforms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Planar position in meters on a local tangent plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn lerp(&self, other: &Position, f: f64) -> Position {
        Position::new(self.x + (other.x - self.x) * f, self.y + (other.y - self.y) * f)
    }
}

impl From<[f64; 2]> for Position {
    fn from(p: [f64; 2]) -> Self {
        Position::new(p[0], p[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub time_s: f64,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TraceMode {
    Waypoints(Vec<Waypoint>),
    /// Parked at `position` from `deploy_time_s` on; undeployed before.
    Nomadic {
        position: Position,
        deploy_time_s: f64,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("trace `{0}` has no waypoints")]
    Empty(String),
    #[error("trace `{id}`: waypoint times must be strictly increasing (index {index})")]
    NonIncreasing { id: String, index: usize },
    #[error("trace `{id}`: {what} must be finite and non-negative")]
    BadTime { id: String, what: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityTrace {
    pub trace_id: String,
    pub mode: TraceMode,
    pub looped: bool,
    /// Replaces the path-loss intercept on links touching this platform
    /// (e.g. a drone's altitude advantage).
    pub pl0_db_override: Option<f64>,
}

impl MobilityTrace {
    pub fn waypoints(id: &str, points: Vec<(f64, Position)>, looped: bool) -> Result<Self, TraceError> {
        let t = MobilityTrace {
            trace_id: id.into(),
            mode: TraceMode::Waypoints(
                points.into_iter().map(|(time_s, position)| Waypoint { time_s, position }).collect(),
            ),
            looped,
            pl0_db_override: None,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn nomadic(id: &str, position: Position, deploy_time_s: f64) -> Result<Self, TraceError> {
        let t = MobilityTrace {
            trace_id: id.into(),
            mode: TraceMode::Nomadic { position, deploy_time_s },
            looped: false,
            pl0_db_override: None,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let id = || self.trace_id.clone();
        match &self.mode {
            TraceMode::Waypoints(w) => {
                if w.is_empty() {
                    return Err(TraceError::Empty(id()));
                }
                if w.iter().any(|p| !p.time_s.is_finite() || p.time_s < 0.0) {
                    return Err(TraceError::BadTime { id: id(), what: "waypoint time" });
                }
                if let Some(i) = w.windows(2).position(|p| p[1].time_s <= p[0].time_s) {
                    return Err(TraceError::NonIncreasing { id: id(), index: i + 1 });
                }
            }
            TraceMode::Nomadic { deploy_time_s, .. } => {
                if !deploy_time_s.is_finite() || *deploy_time_s < 0.0 {
                    return Err(TraceError::BadTime { id: id(), what: "deploy_time_s" });
                }
            }
        }
        Ok(())
    }

    /// Position at `t_s`, or `None` while a nomadic platform is not deployed.
    pub fn position_at(&self, t_s: f64) -> Option<Position> {
        match &self.mode {
            TraceMode::Nomadic { position, deploy_time_s } => (t_s >= *deploy_time_s).then_some(*position),
            TraceMode::Waypoints(points) => Some(interpolate(points, self.effective_time(points, t_s))),
        }
    }

    fn effective_time(&self, points: &[Waypoint], t_s: f64) -> f64 {
        let first = points[0].time_s;
        let last = points[points.len() - 1].time_s;
        let period = last - first;
        if self.looped && period > 0.0 && t_s > last {
            first + (t_s - first).rem_euclid(period)
        } else {
            t_s
        }
    }

    /// Fastest segment speed, m/s. Zero for nomadic and single-point traces.
    pub fn max_speed(&self) -> f64 {
        match &self.mode {
            TraceMode::Nomadic { .. } => 0.0,
            TraceMode::Waypoints(p) => p
                .windows(2)
                .map(|w| w[0].position.distance(&w[1].position) / (w[1].time_s - w[0].time_s))
                .fold(0.0, f64::max),
        }
    }
}

fn interpolate(points: &[Waypoint], t: f64) -> Position {
    let first = &points[0];
    let last = &points[points.len() - 1];
    if t <= first.time_s {
        return first.position;
    }
    if t >= last.time_s {
        return last.position;
    }
    // First waypoint strictly after t; its predecessor is at or before t.
    let hi = points.partition_point(|p| p.time_s <= t);
    let (a, b) = (&points[hi - 1], &points[hi]);
    let f = (t - a.time_s) / (b.time_s - a.time_s);
    a.position.lerp(&b.position, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(looped: bool) -> MobilityTrace {
        MobilityTrace::waypoints("t", vec![(0.0, Position::new(0.0, 0.0)), (100.0, Position::new(100.0, 0.0))], looped)
            .unwrap()
    }

    #[test]
    fn midpoint_of_segment() {
        assert_eq!(line(false).position_at(50.0), Some(Position::new(50.0, 0.0)));
    }

    #[test]
    fn clamps_after_last_waypoint() {
        assert_eq!(line(false).position_at(200.0), Some(Position::new(100.0, 0.0)));
    }

    #[test]
    fn loop_wraps_by_period() {
        // Oracle: t mod period over [0, 100).
        let trace = line(true);
        for t in [150.0, 250.0, 1_050.0, 100.5] {
            let wrapped = t % 100.0;
            assert_eq!(trace.position_at(t), Some(Position::new(wrapped, 0.0)), "t={t}");
        }
    }

    #[test]
    fn nomadic_is_undeployed_before_deploy_time() {
        let n = MobilityTrace::nomadic("n", Position::new(3.0, 4.0), 10.0).unwrap();
        assert_eq!(n.position_at(9.99), None);
        assert_eq!(n.position_at(10.0), Some(Position::new(3.0, 4.0)));
        assert_eq!(n.position_at(1e6), Some(Position::new(3.0, 4.0)));
    }

    #[test]
    fn single_waypoint_is_static() {
        let t = MobilityTrace::waypoints("s", vec![(5.0, Position::new(1.0, 2.0))], true).unwrap();
        assert_eq!(t.position_at(0.0), Some(Position::new(1.0, 2.0)));
        assert_eq!(t.position_at(50.0), Some(Position::new(1.0, 2.0)));
    }

    #[test]
    fn rejects_non_increasing_times() {
        let err = MobilityTrace::waypoints(
            "bad",
            vec![(0.0, Position::new(0.0, 0.0)), (0.0, Position::new(1.0, 0.0))],
            false,
        )
        .unwrap_err();
        assert_eq!(err, TraceError::NonIncreasing { id: "bad".into(), index: 1 });
        assert_eq!(MobilityTrace::waypoints("e", vec![], false).unwrap_err(), TraceError::Empty("e".into()));
    }

    proptest! {
        #[test]
        fn waypoint_traces_are_lipschitz(
            steps in prop::collection::vec((0.5f64..50.0, -500.0f64..500.0, -500.0f64..500.0), 1..8),
            t1 in 0.0f64..400.0,
            dt in 0.0f64..20.0,
        ) {
            let mut time = 0.0;
            let mut pts = vec![(0.0, Position::new(0.0, 0.0))];
            for (gap, x, y) in steps {
                time += gap;
                pts.push((time, Position::new(x, y)));
            }
            let trace = MobilityTrace::waypoints("p", pts, false).unwrap();
            let a = trace.position_at(t1).unwrap();
            let b = trace.position_at(t1 + dt).unwrap();
            prop_assert!(a.distance(&b) <= trace.max_speed() * dt + 1e-6);
        }
    }
}
