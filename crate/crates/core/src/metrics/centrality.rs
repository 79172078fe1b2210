//! Closeness on a hypergraph, with distance counted in hyperedges.
//!
//! Two hyperedges are s-adjacent when they share at least `s` vertices. The
//! distance from `v` to `u` is the length of the shortest sequence of
//! pairwise s-adjacent hyperedges whose first edge holds `v` and whose last
//! holds `u`. Closeness over the reachable set `R` is
//! `(|R| / (|V| - 1)) * (|R| / sum of distances)`, and 0 when `R` is empty.

use std::collections::VecDeque;

use super::MetricsError;
use crate::graph::EntityHypergraph;

struct EdgeAdjacency {
    /// Edges incident to each vertex.
    incident: Vec<Vec<usize>>,
    /// s-adjacent edges per edge.
    adjacent: Vec<Vec<usize>>,
}

impl EdgeAdjacency {
    fn new(h: &EntityHypergraph, s: usize) -> Self {
        let mut incident = vec![Vec::new(); h.vertices().len()];
        for (e, edge) in h.edges().iter().enumerate() {
            for &v in &edge.members {
                incident[v].push(e);
            }
        }
        let n = h.edges().len();
        let mut adjacent = vec![Vec::new(); n];
        let mut shared = vec![0usize; n];
        for (e, edge) in h.edges().iter().enumerate() {
            shared.iter_mut().for_each(|c| *c = 0);
            for &v in &edge.members {
                for &f in &incident[v] {
                    shared[f] += 1;
                }
            }
            adjacent[e] = (0..n).filter(|&f| f != e && shared[f] >= s).collect();
        }
        EdgeAdjacency { incident, adjacent }
    }

    fn distances(&self, h: &EntityHypergraph, v: usize) -> Vec<Option<usize>> {
        let mut edge_dist = vec![None; h.edges().len()];
        let mut queue = VecDeque::new();
        for &e in &self.incident[v] {
            edge_dist[e] = Some(1);
            queue.push_back(e);
        }
        while let Some(e) = queue.pop_front() {
            let d = edge_dist[e].expect("queued edges have a distance");
            for &f in &self.adjacent[e] {
                if edge_dist[f].is_none() {
                    edge_dist[f] = Some(d + 1);
                    queue.push_back(f);
                }
            }
        }
        let mut out = vec![None; h.vertices().len()];
        for (e, d) in edge_dist.iter().enumerate() {
            let Some(d) = *d else { continue };
            for &u in &h.edges()[e].members {
                if out[u].is_none_or(|old| d < old) {
                    out[u] = Some(d);
                }
            }
        }
        out[v] = Some(0);
        out
    }
}

fn closeness_from(distances: &[Option<usize>], n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let reach: Vec<usize> = distances
        .iter()
        .flatten()
        .copied()
        .filter(|&d| d > 0)
        .collect();
    if reach.is_empty() {
        return 0.0;
    }
    let r = reach.len() as f64;
    let total: usize = reach.iter().sum();
    (r / (n - 1) as f64) * (r / total as f64)
}

/// Hyperedge distances from `v`; `None` for unreachable vertices.
pub fn s_distances(
    h: &EntityHypergraph,
    v: usize,
    s: usize,
) -> Result<Vec<Option<usize>>, MetricsError> {
    if s == 0 {
        return Err(MetricsError::ZeroS);
    }
    if v >= h.vertices().len() {
        return Err(MetricsError::UnknownVertex(v));
    }
    Ok(EdgeAdjacency::new(h, s).distances(h, v))
}

pub fn closeness_centrality(h: &EntityHypergraph, v: usize, s: usize) -> Result<f64, MetricsError> {
    Ok(closeness_from(&s_distances(h, v, s)?, h.vertices().len()))
}

/// Closeness of every vertex, in vertex order.
pub fn all_closeness(h: &EntityHypergraph, s: usize) -> Result<Vec<f64>, MetricsError> {
    if s == 0 {
        return Err(MetricsError::ZeroS);
    }
    let adj = EdgeAdjacency::new(h, s);
    let n = h.vertices().len();
    Ok((0..n)
        .map(|v| closeness_from(&adj.distances(h, v), n))
        .collect())
}
