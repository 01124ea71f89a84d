// SPDX-License-Identifier: Apache-2.0

//! Agglomerative complete-linkage clustering under the L1 metric.
//!
//! Two clusters whose complete-linkage distance exceeds the limit can never
//! merge later, since merging only raises that distance. Only pairs within
//! the limit are therefore tracked: a sparse neighbour map per cluster,
//! seeded from a spatial grid, and a heap of candidate merges with lazy
//! invalidation.

use crate::placement::Placement;
use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};

pub fn l1(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

/// Default distance limit: 5% of the die half-perimeter.
pub fn default_distance_limit(p: &Placement) -> f64 {
    0.05 * p.half_perimeter()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    a: usize,
    b: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, o: &Self) -> Ordering {
        self.dist
            .total_cmp(&o.dist)
            .then(self.a.cmp(&o.a))
            .then(self.b.cmp(&o.b))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Clusters of placed cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Dense cluster id per cell name. Ids follow the order of each
    /// cluster's lexicographically smallest member.
    pub cluster_of: BTreeMap<String, usize>,
    /// Members per cluster id, sorted by name.
    pub members: Vec<Vec<String>>,
    pub centroids: Vec<(f64, f64)>,
}

/// Merges the closest pair of clusters until the smallest complete-linkage
/// distance exceeds `limit`. Equal distances merge the pair with the
/// smallest (cluster id, cluster id), where a cluster's id is the index of
/// its smallest member name.
pub fn cluster_cells(p: &Placement, limit: f64) -> Clustering {
    let names: Vec<&String> = p.cells.keys().collect();
    let pts: Vec<(f64, f64)> = p.cells.values().copied().collect();
    let count = pts.len();
    let mut neighbours: Vec<HashMap<usize, f64>> = vec![HashMap::new(); count];
    let mut heap = BinaryHeap::new();

    if count > 1 && limit >= 0.0 {
        let cell = if limit > 0.0 { limit } else { 1.0 };
        let key = |q: (f64, f64)| ((q.0 / cell).floor() as i64, (q.1 / cell).floor() as i64);
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, &q) in pts.iter().enumerate() {
            grid.entry(key(q)).or_default().push(i);
        }
        for (i, &q) in pts.iter().enumerate() {
            let (gx, gy) = key(q);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(bucket) = grid.get(&(gx + dx, gy + dy)) else {
                        continue;
                    };
                    for &j in bucket {
                        if j <= i {
                            continue;
                        }
                        let d = l1(q, pts[j]);
                        if d <= limit {
                            neighbours[i].insert(j, d);
                            neighbours[j].insert(i, d);
                            heap.push(Reverse(Candidate { dist: d, a: i, b: j }));
                        }
                    }
                }
            }
        }
    }

    let mut members: Vec<Vec<usize>> = (0..count).map(|i| vec![i]).collect();
    let mut alive = vec![true; count];
    while let Some(Reverse(c)) = heap.pop() {
        if !alive[c.a] || !alive[c.b] || neighbours[c.a].get(&c.b) != Some(&c.dist) {
            continue;
        }
        let (keep, gone) = (c.a, c.b);
        alive[gone] = false;
        let gone_nb = std::mem::take(&mut neighbours[gone]);
        let keep_nb = std::mem::take(&mut neighbours[keep]);
        let mut merged = HashMap::new();
        for (&x, &dk) in &keep_nb {
            if x == gone {
                continue;
            }
            neighbours[x].remove(&keep);
            if let Some(&dg) = gone_nb.get(&x) {
                merged.insert(x, dk.max(dg));
            }
        }
        for &x in gone_nb.keys() {
            if x != keep {
                neighbours[x].remove(&gone);
            }
        }
        for (&x, &d) in &merged {
            neighbours[x].insert(keep, d);
            let (a, b) = if keep < x { (keep, x) } else { (x, keep) };
            heap.push(Reverse(Candidate { dist: d, a, b }));
        }
        neighbours[keep] = merged;
        let moved = std::mem::take(&mut members[gone]);
        members[keep].extend(moved);
    }

    let mut cluster_of = BTreeMap::new();
    let mut out_members = Vec::new();
    let mut centroids = Vec::new();
    for (i, m) in members.iter_mut().enumerate() {
        if !alive[i] {
            continue;
        }
        m.sort_unstable();
        let id = out_members.len();
        let (mut sx, mut sy) = (0.0, 0.0);
        for &c in m.iter() {
            cluster_of.insert(names[c].clone(), id);
            sx += pts[c].0;
            sy += pts[c].1;
        }
        centroids.push((sx / m.len() as f64, sy / m.len() as f64));
        out_members.push(m.iter().map(|&c| names[c].clone()).collect());
    }
    Clustering {
        cluster_of,
        members: out_members,
        centroids,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn placement(cells: &[(&str, f64, f64)]) -> Placement {
        let mut p = Placement::new(100.0, 100.0, 0.5);
        for (n, x, y) in cells {
            p.cells.insert(n.to_string(), (*x, *y));
        }
        p
    }

    #[test]
    fn two_cells() {
        let p = placement(&[("A", 0.0, 0.0), ("B", 3.0, 4.0)]);
        assert_eq!(cluster_cells(&p, 10.0).members.len(), 1);
        assert_eq!(cluster_cells(&p, 5.0).members.len(), 2);
    }

    #[test]
    fn three_cells_complete_linkage() {
        let p = placement(&[("A", 0.0, 0.0), ("B", 4.0, 0.0), ("C", 8.0, 0.0)]);
        let c = cluster_cells(&p, 6.0);
        assert_eq!(c.members, vec![vec!["A", "B"], vec!["C"]]);
        assert_eq!(c.centroids[0], (2.0, 0.0));
    }

    #[test]
    fn tie_merges_smallest_pair_first() {
        // A-B and B-C both at distance 4; A-C at 8 exceeds the limit.
        let p = placement(&[("A", 0.0, 0.0), ("B", 4.0, 0.0), ("C", 8.0, 0.0)]);
        let c = cluster_cells(&p, 7.0);
        assert_eq!(c.members, vec![vec!["A", "B"], vec!["C"]]);
    }
}
