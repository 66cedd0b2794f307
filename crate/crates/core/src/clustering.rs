//! Clusters of quaking meshes.
//!
//! Two quaking meshes belong to the same cluster when they touch through an
//! edge or a vertex, transitively; a gap of one non-quaking mesh separates
//! clusters. Clusters are grown by flood fill from seeds over a dense label
//! grid spanning the bounding box of the input, so time and memory are linear
//! in the number of meshes of that box. The partition does not depend on the
//! order in which seeds are taken; cluster ids are normalized afterwards so
//! that cluster `k` is the one holding the `k`-th smallest row-major mesh.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::grid::{Mesh, MeshWindowCounts};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cluster {
    pub id: usize,
    /// Sorted row-major.
    pub meshes: Vec<Mesh>,
    pub event_count: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClusterPartition {
    pub clusters: Vec<Cluster>,
    labels: LabelGrid,
}

/// Cluster ids over the bounding box of the clustered meshes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct LabelGrid {
    row0: u32,
    col0: u32,
    rows: u32,
    cols: u32,
    ids: Vec<u32>,
    meshes: usize,
}

impl LabelGrid {
    fn get(&self, mesh: Mesh) -> Option<usize> {
        let (r, c) = (mesh.row.checked_sub(self.row0)?, mesh.col.checked_sub(self.col0)?);
        if r >= self.rows || c >= self.cols {
            return None;
        }
        let id = self.ids[r as usize * self.cols as usize + c as usize];
        (id < PENDING).then_some(id as usize)
    }
}

impl ClusterPartition {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn label(&self, mesh: Mesh) -> Option<usize> {
        self.labels.get(mesh)
    }

    pub fn mesh_count(&self) -> usize {
        self.labels.meshes
    }

    /// Fills `event_count` of every cluster from `counts`.
    pub fn tally(&mut self, counts: &MeshWindowCounts) {
        for c in &mut self.clusters {
            c.event_count = c.meshes.iter().map(|m| counts.count(*m) as u64).sum();
        }
    }

    /// The partition as a set of mesh sets, independent of labels.
    pub fn as_sets(&self) -> BTreeSet<Vec<Mesh>> {
        self.clusters.iter().map(|c| c.meshes.clone()).collect()
    }
}

const EMPTY: u32 = u32::MAX;
const PENDING: u32 = u32::MAX - 1;

/// Partitions `msh` into maximal 8-connected clusters.
pub fn make_clusters(msh: &BTreeSet<Mesh>) -> ClusterPartition {
    let seeds: Vec<Mesh> = msh.iter().copied().collect();
    cluster_with_seed_order(&seeds, &seeds)
}

/// Same partition as [`make_clusters`], growing clusters from seeds in the
/// given order. `seed_order` must be a permutation of `msh`.
pub fn make_clusters_seeded(msh: &BTreeSet<Mesh>, seed_order: &[Mesh]) -> ClusterPartition {
    let meshes: Vec<Mesh> = msh.iter().copied().collect();
    cluster_with_seed_order(&meshes, seed_order)
}

fn cluster_with_seed_order(meshes: &[Mesh], seed_order: &[Mesh]) -> ClusterPartition {
    if meshes.is_empty() {
        return ClusterPartition::default();
    }
    let row0 = meshes.iter().map(|m| m.row).min().unwrap() as usize;
    let col0 = meshes.iter().map(|m| m.col).min().unwrap() as usize;
    let rows = meshes.iter().map(|m| m.row).max().unwrap() as usize - row0 + 1;
    let cols = meshes.iter().map(|m| m.col).max().unwrap() as usize - col0 + 1;
    let at = |m: &Mesh| (m.row as usize - row0) * cols + (m.col as usize - col0);

    let mut grid = vec![EMPTY; rows * cols];
    for m in meshes {
        grid[at(m)] = PENDING;
    }

    let mut found = 0u32;
    let mut stack: Vec<usize> = Vec::new();
    for seed in seed_order {
        let s = at(seed);
        if grid[s] != PENDING {
            continue;
        }
        let label = found;
        found += 1;
        grid[s] = label;
        stack.push(s);
        while let Some(cell) = stack.pop() {
            let (r, c) = (cell / cols, cell % cols);
            for nr in r.saturating_sub(1)..=(r + 1).min(rows - 1) {
                for nc in c.saturating_sub(1)..=(c + 1).min(cols - 1) {
                    let n = nr * cols + nc;
                    if grid[n] == PENDING {
                        grid[n] = label;
                        stack.push(n);
                    }
                }
            }
        }
    }

    // A row-major scan meets clusters in order of their smallest mesh and
    // lists each cluster's meshes already sorted.
    let mut renamed = vec![EMPTY; found as usize];
    let mut clusters: Vec<Cluster> = Vec::with_capacity(found as usize);
    for (k, id) in grid.iter_mut().enumerate() {
        if *id == EMPTY {
            continue;
        }
        let slot = &mut renamed[*id as usize];
        if *slot == EMPTY {
            *slot = clusters.len() as u32;
            clusters.push(Cluster {
                id: clusters.len(),
                meshes: Vec::new(),
                event_count: 0,
            });
        }
        *id = *slot;
        clusters[*slot as usize]
            .meshes
            .push(Mesh::new((k / cols + row0) as u32, (k % cols + col0) as u32));
    }
    let labels = LabelGrid {
        row0: row0 as u32,
        col0: col0 as u32,
        rows: rows as u32,
        cols: cols as u32,
        ids: grid,
        meshes: meshes.len(),
    };
    ClusterPartition { clusters, labels }
}

/// p(C|S,t) and p(C,t) for every cluster of one region and window.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterProbabilities {
    pub cluster_counts: Vec<u64>,
    /// quakes(C,t) / quakes(S,t)
    pub conditional: Vec<f64>,
    /// quakes(C,t) / quakes(S^U,t)
    pub joint: Vec<f64>,
    /// p(S,t) = quakes(S,t) / quakes(S^U,t)
    pub p_s: f64,
    /// Share of the region's events that sit in no cluster.
    pub residual: f64,
}

/// `None` marks a window without data (no events in the region).
pub fn cluster_probabilities(partition: &ClusterPartition, counts: &MeshWindowCounts) -> Option<ClusterProbabilities> {
    if counts.region_total == 0 || counts.universe_total == 0 {
        return None;
    }
    let region = counts.region_total as f64;
    let universe = counts.universe_total as f64;
    let cluster_counts: Vec<u64> = partition
        .clusters
        .iter()
        .map(|c| c.meshes.iter().map(|m| counts.count(*m) as u64).sum())
        .collect();
    let clustered: u64 = cluster_counts.iter().sum();
    Some(ClusterProbabilities {
        conditional: cluster_counts.iter().map(|&q| q as f64 / region).collect(),
        joint: cluster_counts.iter().map(|&q| q as f64 / universe).collect(),
        p_s: region / universe,
        residual: (counts.region_total - clustered) as f64 / region,
        cluster_counts,
    })
}
