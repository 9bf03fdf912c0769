//! User motion path: a quadratic Bezier in (theta, phi) coordinates,
//! resampled to constant arc-length spacing so the waypoints model constant
//! speed.

use crate::signal::Direction;

/// Ordered waypoints plus the running angular displacement
/// sum of sqrt(dtheta^2 + dphi^2), starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPath {
    pub waypoints: Vec<Direction>,
    pub cumulative_angle: Vec<f64>,
}

impl MotionPath {
    pub fn total_angle(&self) -> f64 {
        *self.cumulative_angle.last().unwrap_or(&0.0)
    }
}

/// Quadratic Bezier from `from` to `to` whose control point sits `curvature`
/// degrees perpendicular off the chord midpoint, resampled to `n_waypoints`
/// equally spaced points by arc length. Zero curvature degenerates to the
/// straight segment.
pub fn gen_motion_path(
    from: Direction,
    to: Direction,
    n_waypoints: usize,
    curvature: f64,
) -> MotionPath {
    assert!(n_waypoints >= 2, "need at least two waypoints");
    let chord = (to.theta - from.theta, to.phi - from.phi);
    let chord_len = (chord.0 * chord.0 + chord.1 * chord.1).sqrt();
    let control = if chord_len == 0.0 || curvature == 0.0 {
        (
            0.5 * (from.theta + to.theta),
            0.5 * (from.phi + to.phi),
        )
    } else {
        let perp = (-chord.1 / chord_len, chord.0 / chord_len);
        (
            0.5 * (from.theta + to.theta) + curvature * perp.0,
            0.5 * (from.phi + to.phi) + curvature * perp.1,
        )
    };
    let bezier = |t: f64| -> (f64, f64) {
        let a = (1.0 - t) * (1.0 - t);
        let b = 2.0 * t * (1.0 - t);
        let c = t * t;
        (
            a * from.theta + b * control.0 + c * to.theta,
            a * from.phi + b * control.1 + c * to.phi,
        )
    };
    // Dense arc-length table for the constant-speed resampling.
    const DENSE: usize = 4096;
    let mut dense = Vec::with_capacity(DENSE + 1);
    let mut arc = Vec::with_capacity(DENSE + 1);
    let mut acc = 0.0;
    let mut prev = bezier(0.0);
    dense.push(prev);
    arc.push(0.0);
    for i in 1..=DENSE {
        let p = bezier(i as f64 / DENSE as f64);
        acc += ((p.0 - prev.0).powi(2) + (p.1 - prev.1).powi(2)).sqrt();
        dense.push(p);
        arc.push(acc);
        prev = p;
    }
    let total = acc;
    let mut waypoints = Vec::with_capacity(n_waypoints);
    for i in 0..n_waypoints {
        let target = total * i as f64 / (n_waypoints - 1) as f64;
        let j = arc.partition_point(|&a| a < target).min(DENSE);
        let p = if j == 0 || total == 0.0 {
            dense[0]
        } else {
            let (a0, a1) = (arc[j - 1], arc[j]);
            let t = if a1 > a0 { (target - a0) / (a1 - a0) } else { 0.0 };
            (
                dense[j - 1].0 + t * (dense[j].0 - dense[j - 1].0),
                dense[j - 1].1 + t * (dense[j].1 - dense[j - 1].1),
            )
        };
        waypoints.push(Direction::new(p.0, p.1));
    }
    // Pin the endpoints exactly.
    waypoints[0] = from;
    let last = waypoints.len() - 1;
    waypoints[last] = to;
    let mut cumulative_angle = Vec::with_capacity(n_waypoints);
    let mut sum = 0.0;
    cumulative_angle.push(0.0);
    for w in 1..n_waypoints {
        sum += waypoints[w].distance(&waypoints[w - 1]);
        cumulative_angle.push(sum);
    }
    MotionPath {
        waypoints,
        cumulative_angle,
    }
}
