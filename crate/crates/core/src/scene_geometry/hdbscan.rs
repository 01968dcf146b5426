// SPDX-License-Identifier: Apache-2.0

//! Hierarchical density clustering over mutual-reachability distances with
//! excess-of-mass cluster selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PointCloud, Vec3};
use crate::error::{ensure_positive, GuiderError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    /// Weight on the normal components of the 6D feature.
    pub normal_weight: f64,
    pub min_cluster_size: usize,
    /// Neighbour count for core distances; `None` uses `min_cluster_size`.
    pub min_samples: Option<usize>,
    /// Allow the whole cloud to be reported as one cluster.
    pub allow_single_cluster: bool,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            normal_weight: 0.1,
            min_cluster_size: 15,
            min_samples: None,
            allow_single_cluster: true,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("scene.cluster", "normal_weight", self.normal_weight)?;
        if self.min_cluster_size < 2 {
            return Err(GuiderError::Config("scene.cluster.min_cluster_size must be >= 2".into()));
        }
        if self.min_samples == Some(0) {
            return Err(GuiderError::Config("scene.cluster.min_samples must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Ascending indices into the clustered cloud.
    pub members: Vec<usize>,
    pub centroid: Vec3,
}

type Feature = [f64; 6];

fn dist(a: &Feature, b: &Feature) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Distance to the k-th nearest feature, counting the point itself.
fn core_distances(f: &[Feature], k: usize) -> Vec<f64> {
    let k = k.min(f.len()).max(1);
    f.par_iter()
        .map(|a| {
            let mut d: Vec<f64> = f.iter().map(|b| dist(a, b)).collect();
            let (_, kth, _) = d.select_nth_unstable_by(k - 1, |x, y| x.total_cmp(y));
            *kth
        })
        .collect()
}

/// Prim's algorithm on the implicit complete mutual-reachability graph.
/// Returns `(u, v, weight)` edges.
fn mst(f: &[Feature], core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = f.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = dist(&f[current], &f[j]).max(core[current]).max(core[j]);
            if w < best[j] {
                best[j] = w;
                from[j] = current;
            }
        }
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
            .expect("remaining vertex");
        in_tree[next] = true;
        edges.push((from[next], next, best[next]));
        current = next;
    }
    edges
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Single-linkage dendrogram node: `(left, right, distance, size)`.
type Merge = (usize, usize, f64, usize);

fn single_linkage(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Vec<Merge> {
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.min(a.1).cmp(&b.0.min(b.1))));
    let mut uf = UnionFind {
        parent: (0..2 * n).collect(),
    };
    let mut size = vec![1usize; 2 * n];
    let mut merges = Vec::with_capacity(n - 1);
    for (a, b, w) in edges {
        let (ra, rb) = (uf.find(a), uf.find(b));
        let node = n + merges.len();
        let s = size[ra] + size[rb];
        merges.push((ra, rb, w, s));
        size[node] = s;
        uf.parent[ra] = node;
        uf.parent[rb] = node;
    }
    merges
}

struct Condensed {
    /// Per cluster: parent cluster and birth lambda.
    parent: Vec<Option<usize>>,
    birth: Vec<f64>,
    /// Per point: owning cluster when it fell out and the lambda at which it did.
    point_cluster: Vec<usize>,
    point_lambda: Vec<f64>,
    /// Child clusters with the lambda they split off at and their size.
    children: Vec<Vec<(usize, f64, usize)>>,
}

fn lambda(d: f64) -> f64 {
    1.0 / d.max(1e-12)
}

fn condense(n: usize, merges: &[Merge], min_size: usize) -> Condensed {
    let node_size = |i: usize| if i < n { 1 } else { merges[i - n].3 };
    let mut c = Condensed {
        parent: vec![None],
        birth: vec![0.0],
        point_cluster: vec![0; n],
        point_lambda: vec![0.0; n],
        children: vec![Vec::new()],
    };
    let root = n + merges.len() - 1;
    let mut stack = vec![(root, 0usize)];
    let mut leaves = Vec::new();
    while let Some((node, cluster)) = stack.pop() {
        debug_assert!(node >= n, "single points never form clusters");
        let (l, r, d, _) = merges[node - n];
        let lam = lambda(d);
        let (big_l, big_r) = (node_size(l) >= min_size, node_size(r) >= min_size);
        if big_l && big_r {
            for child in [l, r] {
                let id = c.parent.len();
                c.parent.push(Some(cluster));
                c.birth.push(lam);
                c.children.push(Vec::new());
                c.children[cluster].push((id, lam, node_size(child)));
                stack.push((child, id));
            }
        } else {
            for (child, big) in [(l, big_l), (r, big_r)] {
                if big {
                    stack.push((child, cluster));
                } else {
                    leaves.clear();
                    collect_leaves(child, n, merges, &mut leaves);
                    for &p in &leaves {
                        c.point_cluster[p] = cluster;
                        c.point_lambda[p] = lam;
                    }
                }
            }
        }
    }
    c
}

fn collect_leaves(node: usize, n: usize, merges: &[Merge], out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(x);
        } else {
            let (l, r, _, _) = merges[x - n];
            stack.push(l);
            stack.push(r);
        }
    }
}

/// Excess-of-mass selection; returns the selected cluster ids.
fn select(c: &Condensed, allow_single: bool) -> Vec<usize> {
    let k = c.parent.len();
    let mut stability = vec![0.0; k];
    for (p, &cl) in c.point_cluster.iter().enumerate() {
        stability[cl] += c.point_lambda[p] - c.birth[cl];
    }
    for cl in 0..k {
        for &(_, lam, size) in &c.children[cl] {
            stability[cl] += (lam - c.birth[cl]) * size as f64;
        }
    }

    let mut selected = vec![false; k];
    let mut subtree = stability.clone();
    // Children always have larger ids than their parent.
    for cl in (0..k).rev() {
        let kids: f64 = c.children[cl].iter().map(|&(id, _, _)| subtree[id]).sum();
        let is_root = cl == 0;
        if c.children[cl].is_empty() {
            selected[cl] = !is_root || allow_single;
        } else if (!is_root || allow_single) && stability[cl] >= kids {
            selected[cl] = true;
            clear_descendants(c, cl, &mut selected);
        } else {
            subtree[cl] = kids;
        }
    }
    (0..k).filter(|&cl| selected[cl]).collect()
}

fn clear_descendants(c: &Condensed, cl: usize, selected: &mut [bool]) {
    let mut stack: Vec<usize> = c.children[cl].iter().map(|&(id, _, _)| id).collect();
    while let Some(x) = stack.pop() {
        selected[x] = false;
        stack.extend(c.children[x].iter().map(|&(id, _, _)| id));
    }
}

/// Density clustering of `[x, y, z, α·n]` features. Clusters are returned
/// ordered by their lowest member index; noise points are unassigned.
pub fn cluster_objects(cloud: &PointCloud, normals: &[Vec3], params: &ClusterParams) -> Result<Vec<Cluster>> {
    if normals.len() != cloud.len() {
        return Err(GuiderError::Input(format!(
            "{} normals for {} points",
            normals.len(),
            cloud.len()
        )));
    }
    let n = cloud.len();
    let mcs = params.min_cluster_size;
    if n < mcs || n < 2 {
        return Ok(Vec::new());
    }
    let a = params.normal_weight;
    let features: Vec<Feature> = cloud
        .points
        .iter()
        .zip(normals)
        .map(|(p, m)| [p.x, p.y, p.z, a * m.x, a * m.y, a * m.z])
        .collect();
    let core = core_distances(&features, params.min_samples.unwrap_or(mcs));
    let merges = single_linkage(n, mst(&features, &core));
    let condensed = condense(n, &merges, mcs);
    let chosen = select(&condensed, params.allow_single_cluster);

    // Map every condensed cluster to its selected ancestor, if any.
    let k = condensed.parent.len();
    let mut owner: Vec<Option<usize>> = vec![None; k];
    for cl in 0..k {
        owner[cl] = if chosen.contains(&cl) {
            Some(cl)
        } else {
            condensed.parent[cl].and_then(|p| owner[p])
        };
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for p in 0..n {
        if let Some(o) = owner[condensed.point_cluster[p]] {
            groups[o].push(p);
        }
    }
    let mut out: Vec<Cluster> = groups
        .into_iter()
        .filter(|g| g.len() >= mcs)
        .map(|members| {
            let centroid = members.iter().map(|&i| cloud.points[i]).sum::<Vec3>() / members.len() as f64;
            Cluster { members, centroid }
        })
        .collect();
    out.sort_by_key(|c| c.members[0]);
    Ok(out)
}
