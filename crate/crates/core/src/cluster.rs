//! Spherical k-means and the hierarchical cluster tree used for
//! cluster-stratified seeding.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::DocId;
use crate::error::{Error, Result};
use crate::featurize::SparseVector;
use crate::rng::{derive_seed, rng_from_seed, SimRng};

pub const MAX_KMEANS_ITERS: usize = 25;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    /// Cluster of each input vector, in `0..centroids.len()`.
    pub assignments: Vec<usize>,
    /// Unit-norm dense centroids of the nonempty clusters.
    pub centroids: Vec<Vec<f64>>,
    /// Spherical objective (sum of cosine similarity to the assigned
    /// centroid) after each update step.
    pub objective: Vec<f64>,
}

impl KMeansResult {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

/// Spherical k-means with k-means++ seeding. Inputs need not be normalized.
///
/// Empty clusters are pruned from the result, so fewer than `k` clusters may
/// come back (always the case when there are fewer vectors than `k`).
pub fn kmeans(vectors: &[SparseVector], k: usize, rng: &mut SimRng) -> KMeansResult {
    assert!(k >= 1, "k must be at least 1");
    assert!(!vectors.is_empty(), "kmeans needs at least one vector");
    let unit: Vec<SparseVector> = vectors.iter().map(SparseVector::normalized).collect();
    let refs: Vec<&SparseVector> = unit.iter().collect();
    let dim = refs.iter().map(|v| v.min_dim()).max().unwrap_or(0);
    spherical_kmeans(&refs, dim, k, rng)
}

fn normalize_dense(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn centroid_of<'a>(members: impl Iterator<Item = &'a SparseVector>, dim: usize) -> Vec<f64> {
    let mut c = vec![0.0; dim];
    for x in members {
        x.add_scaled_to(&mut c, 1.0);
    }
    normalize_dense(&mut c);
    c
}

fn best_cluster(x: &SparseVector, centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let s = x.dot(c);
        if s > best.1 {
            best = (j, s);
        }
    }
    best
}

/// `unit` must already be L2-normalized (or zero).
fn spherical_kmeans(unit: &[&SparseVector], dim: usize, k: usize, rng: &mut SimRng) -> KMeansResult {
    let n = unit.len();
    if n <= k {
        let centroids: Vec<Vec<f64>> = unit.iter().map(|x| centroid_of(std::iter::once(*x), dim)).collect();
        let objective = unit.iter().zip(&centroids).map(|(x, c)| x.dot(c)).sum();
        return KMeansResult {
            assignments: (0..n).collect(),
            centroids,
            objective: vec![objective],
        };
    }

    let mut centroids = plus_plus_init(unit, dim, k, rng);
    let k = centroids.len();
    let mut assignments = vec![usize::MAX; n];
    let mut objective = Vec::new();

    for _ in 0..MAX_KMEANS_ITERS {
        let mut changed = false;
        for (i, x) in unit.iter().enumerate() {
            let (j, _) = best_cluster(x, &centroids);
            if assignments[i] != j {
                assignments[i] = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        update_centroids(unit, dim, k, &mut assignments, &mut centroids);
        let obj: f64 = unit.iter().zip(&assignments).map(|(x, &a)| x.dot(&centroids[a])).sum();
        objective.push(obj);
    }

    // prune empty clusters, keeping relative order
    let mut sizes = vec![0usize; k];
    for &a in &assignments {
        sizes[a] += 1;
    }
    let mut remap = vec![usize::MAX; k];
    let mut kept = Vec::new();
    for (j, c) in centroids.into_iter().enumerate() {
        if sizes[j] > 0 {
            remap[j] = kept.len();
            kept.push(c);
        }
    }
    for a in &mut assignments {
        *a = remap[*a];
    }
    KMeansResult {
        assignments,
        centroids: kept,
        objective,
    }
}

/// k-means++ seeding with `1 - cos` as the (squared-distance) weight.
/// Stops early when every remaining point coincides with a chosen center.
fn plus_plus_init(unit: &[&SparseVector], dim: usize, k: usize, rng: &mut SimRng) -> Vec<Vec<f64>> {
    let n = unit.len();
    let first = rng.random_range(0..n);
    let mut centroids = vec![centroid_of(std::iter::once(unit[first]), dim)];
    let mut best_sim: Vec<f64> = unit.iter().map(|x| x.dot(&centroids[0])).collect();
    while centroids.len() < k {
        let weights: Vec<f64> = best_sim.iter().map(|s| (1.0 - s).max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        if total <= 1e-12 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                pick = i;
                if target < *w {
                    break;
                }
                target -= w;
            }
        }
        let c = centroid_of(std::iter::once(unit[pick]), dim);
        for (s, x) in best_sim.iter_mut().zip(unit) {
            *s = s.max(x.dot(&c));
        }
        centroids.push(c);
    }
    centroids
}

/// Recomputes centroids; an empty cluster takes over the point farthest from
/// its own centroid among clusters that can spare one.
fn update_centroids(
    unit: &[&SparseVector],
    dim: usize,
    k: usize,
    assignments: &mut [usize],
    centroids: &mut [Vec<f64>],
) {
    let recompute = |j: usize, assignments: &[usize]| {
        centroid_of(
            unit.iter().zip(assignments).filter(|(_, &a)| a == j).map(|(x, _)| *x),
            dim,
        )
    };
    for (j, c) in centroids.iter_mut().enumerate() {
        *c = recompute(j, assignments);
    }
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            break;
        };
        let donor = unit
            .iter()
            .enumerate()
            .filter(|(i, x)| sizes[assignments[*i]] >= 2 && x.norm() > 0.0)
            .map(|(i, x)| (i, x.dot(&centroids[assignments[i]])))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let Some((i, sim)) = donor else {
            break;
        };
        if sim >= 1.0 - 1e-12 {
            // every candidate already sits on its centroid
            break;
        }
        let from = assignments[i];
        assignments[i] = empty;
        centroids[empty] = centroid_of(std::iter::once(unit[i]), dim);
        centroids[from] = recompute(from, assignments);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub branching: usize,
    pub depth: usize,
    pub min_split: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            branching: 3,
            depth: 5,
            min_split: 30,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if self.branching < 2 {
            return Err(Error::InvalidConfig("cluster branching must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterNode {
    /// Dotted path from the root, e.g. `"0.2.1"`.
    pub id: String,
    pub centroid: SparseVector,
    /// Member positions; populated on leaves only.
    pub members: Vec<usize>,
    pub children: Vec<ClusterNode>,
}

impl ClusterNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a ClusterNode>) {
        if self.is_leaf() {
            out.push(self);
        } else {
            for c in &self.children {
                c.collect_leaves(out);
            }
        }
    }

    fn height(&self) -> usize {
        self.children.iter().map(|c| c.height() + 1).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct ClusterTree {
    pub root: ClusterNode,
    pub params: ClusterParams,
    doc_ids: Vec<DocId>,
    leaf_of: Vec<usize>,
}

impl ClusterTree {
    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<&ClusterNode> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut out);
        out
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves().len()
    }

    /// Depth of the deepest leaf (root alone is depth zero).
    pub fn height(&self) -> usize {
        self.root.height()
    }

    /// Leaf number (depth-first order) of each document position.
    pub fn leaf_numbers(&self) -> &[usize] {
        &self.leaf_of
    }

    /// Member positions of each leaf, depth-first order.
    pub fn leaf_strata(&self) -> Vec<Vec<usize>> {
        self.leaves().into_iter().map(|l| l.members.clone()).collect()
    }

    /// Document id to leaf id.
    pub fn leaf_assignments(&self) -> BTreeMap<DocId, String> {
        let leaves = self.leaves();
        self.doc_ids
            .iter()
            .zip(&self.leaf_of)
            .map(|(d, &l)| (d.clone(), leaves[l].id.clone()))
            .collect()
    }

    /// Dump as `leaf_id,doc_id`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["leaf_id", "doc_id"])?;
        for leaf in self.leaves() {
            for &m in &leaf.members {
                w.write_record([leaf.id.as_str(), self.doc_ids[m].as_str()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<cluster csv>", e))?;
        Ok(())
    }
}

/// Recursive spherical k-means partition with `branching` children per node
/// down to `depth` levels.
///
/// Each node draws from its own stream derived from `(seed, node id)`, so
/// sibling subtrees are built in parallel without affecting the result.
pub fn build_cluster_tree(
    vectors: &[SparseVector],
    doc_ids: &[DocId],
    params: ClusterParams,
    seed: u64,
) -> Result<ClusterTree> {
    params.validate()?;
    if vectors.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    assert_eq!(vectors.len(), doc_ids.len(), "one id per vector");
    let unit: Vec<SparseVector> = vectors.iter().map(SparseVector::normalized).collect();
    let dim = unit.iter().map(|v| v.min_dim()).max().unwrap_or(0);
    let members: Vec<usize> = (0..unit.len()).collect();
    let root = build_node(&unit, dim, members, "0".to_string(), 0, &params, seed);

    let mut leaf_of = vec![usize::MAX; unit.len()];
    let mut leaves = Vec::new();
    root.collect_leaves(&mut leaves);
    for (l, leaf) in leaves.iter().enumerate() {
        for &m in &leaf.members {
            leaf_of[m] = l;
        }
    }
    Ok(ClusterTree {
        root,
        params,
        doc_ids: doc_ids.to_vec(),
        leaf_of,
    })
}

fn build_node(
    unit: &[SparseVector],
    dim: usize,
    members: Vec<usize>,
    id: String,
    level: usize,
    params: &ClusterParams,
    seed: u64,
) -> ClusterNode {
    let centroid = SparseVector::from_pairs(
        centroid_of(members.iter().map(|&m| &unit[m]), dim)
            .into_iter()
            .enumerate()
            .filter(|(_, v)| *v != 0.0)
            .map(|(i, v)| (i as u32, v)),
    );
    let leaf = |members| ClusterNode {
        id: id.clone(),
        centroid: centroid.clone(),
        members,
        children: Vec::new(),
    };
    if level >= params.depth || members.len() < params.min_split {
        return leaf(members);
    }
    let refs: Vec<&SparseVector> = members.iter().map(|&m| &unit[m]).collect();
    let mut rng = rng_from_seed(derive_seed(seed, &id, level as u64));
    let km = spherical_kmeans(&refs, dim, params.branching, &mut rng);
    if km.k() <= 1 {
        return leaf(members);
    }
    let mut groups = vec![Vec::new(); km.k()];
    for (&m, &a) in members.iter().zip(&km.assignments) {
        groups[a].push(m);
    }
    let children = groups
        .into_par_iter()
        .enumerate()
        .map(|(j, g)| build_node(unit, dim, g, format!("{id}.{j}"), level + 1, params, seed))
        .collect();
    ClusterNode {
        id,
        centroid,
        members: Vec::new(),
        children,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn single_cluster() {
        let v = vec![sv(&[(0, 1.0)]), sv(&[(1, 1.0)]), sv(&[(0, 1.0), (1, 1.0)])];
        let r = kmeans(&v, 1, &mut rng_from_seed(0));
        assert_eq!(r.assignments, vec![0, 0, 0]);
        let c = &r.centroids[0];
        let expect = 1.0 / 2f64.sqrt();
        assert!((c[0] - expect).abs() < 1e-12 && (c[1] - expect).abs() < 1e-12);
    }

    #[test]
    fn fewer_vectors_than_clusters() {
        let v = vec![sv(&[(0, 1.0)]), sv(&[(1, 1.0)])];
        let r = kmeans(&v, 5, &mut rng_from_seed(0));
        assert_eq!(r.k(), 2);
        assert_eq!(r.assignments, vec![0, 1]);
    }

    #[test]
    fn duplicate_points_prune_to_one_cluster() {
        let v = vec![sv(&[(0, 1.0)]); 10];
        let r = kmeans(&v, 3, &mut rng_from_seed(4));
        assert_eq!(r.k(), 1);
        assert!(r.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn small_corpus_is_a_single_leaf() {
        let v: Vec<SparseVector> = (0..20).map(|i| sv(&[(i % 4, 1.0)])).collect();
        let ids: Vec<DocId> = (0..20).map(|i| DocId::from(format!("d{i}"))).collect();
        let t = build_cluster_tree(&v, &ids, ClusterParams::default(), 1).unwrap();
        assert_eq!(t.num_leaves(), 1);
        assert_eq!(t.root.id, "0");
        let map = t.leaf_assignments();
        assert_eq!(map.len(), 20);
        assert!(map.values().all(|l| l == "0"));
    }
}
