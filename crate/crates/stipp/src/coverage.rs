//! Deterministic coverage tours used as comparison baselines.
//!
//! Both patterns place waypoints on a closed curve inside the workspace and
//! wrap around it until the length budget is spent, so a generous budget
//! yields revisitation. No randomness anywhere: identical inputs give
//! identical plans.

use crate::error::{Error, Result};
use crate::field::Bounds;

/// Circle radius as a fraction of the smaller workspace dimension.
const CIRCLE_RADIUS_FRACTION: f64 = 0.35;
/// Lemniscate half-width as a fraction of the smaller workspace dimension.
const LEMNISCATE_SCALE_FRACTION: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoveragePattern {
    Circle,
    Lemniscate,
}

/// An ordered waypoint tour with its polyline length.
#[derive(Debug, Clone)]
pub struct CoveragePlan {
    pub waypoints: Vec<(f64, f64)>,
    pub pattern: CoveragePattern,
    pub total_length: f64,
}

fn check_budget(budget_length: f64, n_waypoints: usize) -> Result<()> {
    if n_waypoints == 0 {
        return Err(Error::EmptyInput("coverage plan needs waypoints"));
    }
    if !(budget_length > 0.0) || !budget_length.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "coverage budget too small for one waypoint gap: {budget_length}"
        )));
    }
    Ok(())
}

fn polyline_length(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
        .sum()
}

/// Waypoints spaced uniformly in arc length along a circle centered in the
/// workspace, wrapping past a full turn when the budget allows revisitation.
pub fn circular_coverage(
    bounds: &Bounds,
    budget_length: f64,
    n_waypoints: usize,
) -> Result<CoveragePlan> {
    check_budget(budget_length, n_waypoints)?;
    let (cx, cy) = bounds.center();
    let r = CIRCLE_RADIUS_FRACTION * bounds.min_dimension();
    let mut waypoints = Vec::with_capacity(n_waypoints);
    if n_waypoints == 1 {
        waypoints.push((cx + r, cy));
    } else {
        let arc = budget_length / (n_waypoints as f64 - 1.0);
        for k in 0..n_waypoints {
            let phi = arc * k as f64 / r;
            waypoints.push((cx + r * phi.cos(), cy + r * phi.sin()));
        }
    }
    let total_length = polyline_length(&waypoints);
    debug_assert!(total_length <= budget_length + 1e-9);
    Ok(CoveragePlan {
        waypoints,
        pattern: CoveragePattern::Circle,
        total_length,
    })
}

/// Point on a Bernoulli lemniscate of half-width `a`, centered at origin.
fn lemniscate_point(a: f64, theta: f64) -> (f64, f64) {
    let s = theta.sin();
    let c = theta.cos();
    let denom = 1.0 + s * s;
    (a * c / denom, a * s * c / denom)
}

/// Waypoints spaced uniformly in curve parameter along a Bernoulli
/// lemniscate inscribed in the workspace; the parameter span is chosen so
/// the waypoint polyline spends as much of the budget as possible.
pub fn lemniscate_coverage(
    bounds: &Bounds,
    budget_length: f64,
    n_waypoints: usize,
) -> Result<CoveragePlan> {
    check_budget(budget_length, n_waypoints)?;
    let (cx, cy) = bounds.center();
    let a = LEMNISCATE_SCALE_FRACTION * bounds.min_dimension();
    if n_waypoints == 1 {
        return Ok(CoveragePlan {
            waypoints: vec![(cx + a, cy)],
            pattern: CoveragePattern::Lemniscate,
            total_length: 0.0,
        });
    }

    let polyline_for = |theta_total: f64| -> Vec<(f64, f64)> {
        (0..n_waypoints)
            .map(|k| {
                let theta = theta_total * k as f64 / (n_waypoints as f64 - 1.0);
                let (x, y) = lemniscate_point(a, theta);
                (cx + x, cy + y)
            })
            .collect()
    };

    // One-period length bounds how many wraps the budget can pay for.
    let period_len = polyline_length(&polyline_for(2.0 * std::f64::consts::PI)).max(1e-9);
    let mut lo = 0.0;
    let mut hi = 2.0 * std::f64::consts::PI * (budget_length / period_len + 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if polyline_length(&polyline_for(mid)) <= budget_length {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let waypoints = polyline_for(lo);
    let total_length = polyline_length(&waypoints);
    Ok(CoveragePlan {
        waypoints,
        pattern: CoveragePattern::Lemniscate,
        total_length,
    })
}
