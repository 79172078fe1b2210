//! Median split of the visibility/centrality plane.

use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrant {
    /// Low visibility, low centrality.
    Minor,
    /// Low visibility, high centrality.
    Background,
    /// High visibility, low centrality.
    Overexposed,
    /// High visibility, high centrality.
    Foreground,
}

impl Quadrant {
    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::Minor => "minor",
            Quadrant::Background => "background",
            Quadrant::Overexposed => "overexposed",
            Quadrant::Foreground => "foreground",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantPoint {
    pub quadrant: Quadrant,
    /// Visibility rescaled to [0, 1] over all points.
    pub normalized_visibility: f64,
    /// Centrality minus normalized visibility; negative below the diagonal.
    pub residual: f64,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Classify `(visibility, centrality)` points. A point is high on an axis
/// when strictly above that axis's median.
pub fn quadrant(points: &[(f64, f64)]) -> Result<Vec<QuadrantPoint>, MetricsError> {
    if points.len() < 2 {
        return Err(MetricsError::TooFewActors(points.len()));
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(v, _)| {
            (lo.min(v), hi.max(v))
        });
    let norm: Vec<f64> = points
        .iter()
        .map(|&(v, _)| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        .collect();
    let cent: Vec<f64> = points.iter().map(|&(_, c)| c).collect();
    let (mv, mc) = (median(&norm), median(&cent));
    Ok(norm
        .iter()
        .zip(&cent)
        .map(|(&v, &c)| QuadrantPoint {
            quadrant: match (v > mv, c > mc) {
                (false, false) => Quadrant::Minor,
                (false, true) => Quadrant::Background,
                (true, false) => Quadrant::Overexposed,
                (true, true) => Quadrant::Foreground,
            },
            normalized_visibility: v,
            residual: c - v,
        })
        .collect())
}
