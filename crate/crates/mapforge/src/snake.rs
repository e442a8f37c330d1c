//! Contour and label processes of displacement-labelled trees, partial
//! symmetrization of sibling displacement blocks, and desk-scale statistics
//! for the continuum scaling behaviour of the sampled map families.

use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::error::Error;
use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::batch::indexed_try_map;
use crate::blossoming::{
    sample_blossoming_tree, to_valid_labelling, vertex_labels, MapFamily, ValidLabelledTree,
};
use crate::closure::sample_map;
use crate::geodesics::{bfs_distance, label_distance_profile, map_vertex_labels};
use crate::plane_tree::{PlantedPlaneTree, VertexId};
use crate::rng::{splitmix64, stream_rng};

#[derive(Debug)]
pub enum SnakeError {
    /// A statistic was requested outside its domain.
    Domain(String),
}

impl fmt::Display for SnakeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SnakeError::Domain(s) => write!(f, "domain error: {s}"),
        }
    }
}

impl Error for SnakeError {}

// ---------------------------------------------------------------------------
// Contour and label processes
// ---------------------------------------------------------------------------

/// Discrete contour and label processes, one entry per contour step
/// (2n − 1 entries for a tree with n vertices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessPair {
    /// Depth of the vertex at each contour step.
    pub c: Vec<i64>,
    /// Displacement sum from the root at each contour step.
    pub z: Vec<i64>,
}

fn interpolate(v: &[i64], t: f64) -> f64 {
    let s = t.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let i = (s.floor() as usize).min(v.len() - 1);
    let frac = s - i as f64;
    if frac == 0.0 || i + 1 == v.len() {
        v[i] as f64
    } else {
        v[i] as f64 * (1.0 - frac) + v[i + 1] as f64 * frac
    }
}

impl ProcessPair {
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Contour value at time t in [0, 1], linearly interpolated.
    pub fn eval_c(&self, t: f64) -> f64 {
        interpolate(&self.c, t)
    }

    /// Label value at time t in [0, 1], linearly interpolated.
    pub fn eval_z(&self, t: f64) -> f64 {
        interpolate(&self.z, t)
    }

    pub fn sup_c(&self) -> i64 {
        *self.c.iter().max().expect("processes are non-empty")
    }

    pub fn min_z(&self) -> i64 {
        *self.z.iter().min().expect("processes are non-empty")
    }

    pub fn max_z(&self) -> i64 {
        *self.z.iter().max().expect("processes are non-empty")
    }
}

/// Contour walk of a labelled tree: step i sits at `visits[i]`, c records the
/// depth and z the accumulated displacement from the root. Sibling blocks are
/// not required to be ordered, so symmetrized trees are accepted.
pub fn processes(v: &ValidLabelledTree) -> ProcessPair {
    let ctr = v.tree.contour();
    let n = v.tree.n_vertices();
    let mut depth = vec![0i64; n];
    let mut x = vec![0i64; n];
    for (i, &u) in ctr.visits.iter().enumerate() {
        if i > 0 && ctr.first_visit[u as usize] == i {
            let p = v.tree.parent(u).expect("non-root vertex has a parent");
            depth[u as usize] = depth[p as usize] + 1;
            x[u as usize] = x[p as usize] + v.disp[u as usize];
        }
    }
    let c = ctr.visits.iter().map(|&u| depth[u as usize]).collect();
    let z = ctr.visits.iter().map(|&u| x[u as usize]).collect();
    ProcessPair { c, z }
}

/// Factor that rescales the contour process of a size-n tree to unit order.
pub fn contour_scale(family: MapFamily, n: usize) -> f64 {
    match family {
        MapFamily::Triangulation => 1.0 / (3.0 * n as f64).sqrt(),
        MapFamily::Quadrangulation => 3.0 / (4.0 * (n as f64).sqrt()),
    }
}

/// Factor that rescales the label process of a size-n tree to unit order.
pub fn label_scale(family: MapFamily, n: usize) -> f64 {
    match family {
        MapFamily::Triangulation => (4.0 * n as f64 / 3.0).powf(-0.25),
        MapFamily::Quadrangulation => (3.0 / (8.0 * n as f64)).powf(0.25),
    }
}

// ---------------------------------------------------------------------------
// Partial symmetrization
// ---------------------------------------------------------------------------

/// A sampled reshuffle of every sibling displacement block. At vertices
/// spanned by the pairwise paths of R the children stay put and only the
/// displacement block is permuted; elsewhere whole child subtrees move with
/// their displacements. Either way slot l receives the displacement of child
/// `source_child[u][l]`.
#[derive(Debug, Clone)]
pub struct SymmetrizationPlan {
    pub r: Vec<VertexId>,
    pub spanned: Vec<bool>,
    pub source_child: Vec<Vec<u32>>,
}

/// Uniform arrangement of the value multiset, returned as slot -> original
/// index with equal values consumed in original order. Shuffling the values
/// hits every arrangement of the multiset equally often, so the induced
/// index map is uniform over the arrangements.
fn valid_shuffle(values: &[i64], rng: &mut impl Rng) -> Vec<u32> {
    let k = values.len();
    let mut shuffled = values.to_vec();
    for i in (1..k).rev() {
        let j = rng.gen_range(0..=i);
        shuffled.swap(i, j);
    }
    let mut queues: BTreeMap<i64, VecDeque<u32>> = BTreeMap::new();
    for (i, &d) in values.iter().enumerate() {
        queues.entry(d).or_default().push_back(i as u32);
    }
    shuffled
        .iter()
        .map(|d| queues.get_mut(d).unwrap().pop_front().unwrap())
        .collect()
}

impl SymmetrizationPlan {
    /// Draws a uniform block-respecting permutation at every vertex. R must
    /// be non-empty, within range, and contain the root.
    pub fn sample(v: &ValidLabelledTree, r: &[VertexId], seed: u64) -> Result<Self, SnakeError> {
        let n = v.tree.n_vertices();
        if r.is_empty() {
            return Err(SnakeError::Domain("the marked set must be non-empty".into()));
        }
        if let Some(&bad) = r.iter().find(|&&u| u as usize >= n) {
            return Err(SnakeError::Domain(format!(
                "the marked set contains out-of-range vertex {bad}"
            )));
        }
        if !r.contains(&v.tree.root()) {
            return Err(SnakeError::Domain("the marked set must contain the root".into()));
        }
        let spanned = v
            .tree
            .spanned_vertex_set(r)
            .map_err(|e| SnakeError::Domain(e.to_string()))?;
        let mut rng = stream_rng(seed, 0);
        let mut source_child = vec![Vec::new(); n];
        for u in 0..n as u32 {
            let kids = v.tree.children(u);
            if kids.is_empty() {
                continue;
            }
            let values: Vec<i64> = kids.iter().map(|&c| v.disp[c as usize]).collect();
            source_child[u as usize] = valid_shuffle(&values, &mut rng);
        }
        Ok(SymmetrizationPlan { r: r.to_vec(), spanned, source_child })
    }

    /// Applies the reshuffle. Vertex ids and parents are preserved, so the
    /// spanned set carries over to the result.
    pub fn apply(&self, v: &ValidLabelledTree) -> ValidLabelledTree {
        let n = v.tree.n_vertices();
        let mut parent = vec![None; n];
        let mut children: Vec<Vec<VertexId>> = vec![Vec::new(); n];
        let mut disp = v.disp.clone();
        for u in 0..n as u32 {
            parent[u as usize] = v.tree.parent(u);
            let kids = v.tree.children(u);
            let inv = &self.source_child[u as usize];
            if self.spanned[u as usize] {
                children[u as usize] = kids.to_vec();
                for (l, &src) in inv.iter().enumerate() {
                    disp[kids[l] as usize] = v.disp[kids[src as usize] as usize];
                }
            } else {
                children[u as usize] = inv.iter().map(|&src| kids[src as usize]).collect();
            }
        }
        let tree = PlantedPlaneTree::new(parent, children).expect("reshuffle keeps a valid tree");
        ValidLabelledTree { tree, disp, family: v.family }
    }
}

/// Samples and applies a reshuffle in one step.
pub fn partial_symmetrize(
    v: &ValidLabelledTree,
    r: &[VertexId],
    seed: u64,
) -> Result<ValidLabelledTree, SnakeError> {
    Ok(SymmetrizationPlan::sample(v, r, seed)?.apply(v))
}

/// Number of distinct arrangements of one sibling displacement block
/// (the multinomial coefficient of its value multiplicities).
pub fn n_valid_reorderings(block: &[i64]) -> u128 {
    let mut counts: BTreeMap<i64, u128> = BTreeMap::new();
    for &d in block {
        *counts.entry(d).or_insert(0) += 1;
    }
    let mut result: u128 = 1;
    let mut total: u128 = 0;
    for &c in counts.values() {
        for i in 1..=c {
            total += 1;
            // Exact at every step: the running value is a multinomial.
            result = result * total / i;
        }
    }
    result
}

/// Largest |label difference| between a contour position and the next
/// position at or after it that sits on a spanned vertex. The root must be
/// spanned, so the final visit always terminates the scan.
pub fn max_gap_to_spanned(v: &ValidLabelledTree, spanned: &[bool]) -> i64 {
    assert!(spanned[v.tree.root() as usize], "the root must be spanned");
    let ctr = v.tree.contour();
    let p = processes(v);
    let mut cur = 0i64;
    let mut max = 0i64;
    for j in (0..ctr.visits.len()).rev() {
        if spanned[ctr.visits[j] as usize] {
            cur = p.z[j];
        }
        max = max.max((p.z[j] - cur).abs());
    }
    max
}

// ---------------------------------------------------------------------------
// Displacement-law statistics
// ---------------------------------------------------------------------------

/// Empirical comparison of sibling displacement blocks before and after full
/// symmetrization (marked set = {root}), triangulation family. Plain blocks
/// are non-decreasing, so their first coordinate is biased low; symmetrized
/// slots are exactly uniform over {−1, 0, 1}.
#[derive(Debug, Clone)]
pub struct DisplacementLawReport {
    pub n: usize,
    pub n_samples: usize,
    /// Counts of the displacement value (−1, 0, 1) on single-child blocks.
    pub k1_counts: [u64; 3],
    /// (slot index, observations, chi-square against uniform over {−1,0,1})
    /// pooled over symmetrized blocks of every arity.
    pub slot_chi_square: Vec<(usize, u64, f64)>,
    pub pair_count: u64,
    pub plain_pair_first_mean: f64,
    pub symmetrized_pair_first_mean: f64,
    /// First-coordinate mean of the plain two-child law, by enumeration.
    pub exact_pair_first_mean: f64,
    pub pass: bool,
}

/// Mean first coordinate over all non-decreasing two-child blocks.
fn enumerated_pair_first_mean() -> f64 {
    let vals = [-1i64, 0, 1];
    let mut sum = 0i64;
    let mut count = 0i64;
    for (i, &a) in vals.iter().enumerate() {
        for _ in &vals[i..] {
            sum += a;
            count += 1;
        }
    }
    sum as f64 / count as f64
}

/// Samples trees, fully symmetrizes each, and compares displacement
/// statistics against the exact laws. Slot chi-squares use 2 degrees of
/// freedom; thresholds sit near the 1e-4 tail so a correct implementation
/// fails spuriously about once in a thousand runs of the whole suite.
pub fn symmetrized_displacement_law_test(
    n: usize,
    n_samples: usize,
    seed: u64,
) -> DisplacementLawReport {
    const MAX_SLOT: usize = 4;
    const CHI_SQUARE_LIMIT: f64 = 21.0;
    let mut k1_counts = [0u64; 3];
    let mut slot_counts = [[0u64; 3]; MAX_SLOT];
    let mut pair_count = 0u64;
    let mut plain_sum = 0i64;
    let mut sym_sum = 0i64;
    for i in 0..n_samples {
        let mut rng = stream_rng(seed, i as u64);
        let t = sample_blossoming_tree(n, MapFamily::Triangulation, &mut rng);
        let v = to_valid_labelling(&t, 0);
        let root = v.tree.root();
        // High-bit offset keeps plan streams disjoint from sampling streams.
        let plan_seed = seed ^ splitmix64(i as u64 | (1 << 63));
        let sym = partial_symmetrize(&v, &[root], plan_seed).expect("root set is valid");
        for u in 0..v.tree.n_vertices() as u32 {
            let kids = v.tree.children(u);
            match kids.len() {
                0 => continue,
                1 => k1_counts[(v.disp[kids[0] as usize] + 1) as usize] += 1,
                2 => {
                    pair_count += 1;
                    plain_sum += v.disp[kids[0] as usize];
                    sym_sum += sym.disp[sym.tree.children(u)[0] as usize];
                }
                _ => {}
            }
            for (l, &c) in sym.tree.children(u).iter().enumerate().take(MAX_SLOT) {
                slot_counts[l][(sym.disp[c as usize] + 1) as usize] += 1;
            }
        }
    }
    let mut slot_chi_square = Vec::new();
    let mut slots_pass = true;
    for (l, counts) in slot_counts.iter().enumerate() {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            continue;
        }
        let expect = total as f64 / 3.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        if total >= 60 && chi2 > CHI_SQUARE_LIMIT {
            slots_pass = false;
        }
        slot_chi_square.push((l, total, chi2));
    }
    let k1_total: u64 = k1_counts.iter().sum();
    let k1_sd = (k1_total as f64 * 2.0 / 9.0).sqrt();
    let k1_pass = k1_counts
        .iter()
        .all(|&c| (c as f64 - k1_total as f64 / 3.0).abs() <= 3.0 * k1_sd);
    let exact = enumerated_pair_first_mean();
    let plain_mean = plain_sum as f64 / pair_count as f64;
    let sym_mean = sym_sum as f64 / pair_count as f64;
    // Variances of the exact laws: 5/9 for the plain first coordinate,
    // 2/3 for a uniform value in {−1, 0, 1}.
    let plain_se = (5.0 / 9.0 / pair_count as f64).sqrt();
    let sym_se = (2.0 / 3.0 / pair_count as f64).sqrt();
    let pass = k1_pass
        && slots_pass
        && (plain_mean - exact).abs() <= 3.0 * plain_se
        && sym_mean.abs() <= 3.0 * sym_se;
    DisplacementLawReport {
        n,
        n_samples,
        k1_counts,
        slot_chi_square,
        pair_count,
        plain_pair_first_mean: plain_mean,
        symmetrized_pair_first_mean: sym_mean,
        exact_pair_first_mean: exact,
        pass,
    }
}

// ---------------------------------------------------------------------------
// Two-point statistics
// ---------------------------------------------------------------------------

/// Distance samples drawn per sampled map; keeps map sampling cost amortized
/// over several pairs.
pub const PAIRS_PER_MAP: usize = 8;

/// Rescaled distances between independent uniform inner vertices, plus one
/// gap per map between a random vertex's distance to the minimum-label
/// vertex and its label prediction.
#[derive(Debug, Clone)]
pub struct TwoPointStatistics {
    pub family: MapFamily,
    pub n: usize,
    pub seed: u64,
    pub values: Vec<f64>,
    pub root_min_gaps: Vec<f64>,
}

impl TwoPointStatistics {
    /// Fraction of pairs that drew the same vertex twice; each pair does so
    /// with probability exactly 1/n.
    pub fn zero_fraction(&self) -> f64 {
        let zeros = self.values.iter().filter(|&&v| v == 0.0).count();
        zeros as f64 / self.values.len() as f64
    }

    pub fn mean_root_min_gap(&self) -> f64 {
        self.root_min_gaps.iter().sum::<f64>() / self.root_min_gaps.len() as f64
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("family,n,seed,sample_idx,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{:.6}\n",
                self.family.name(),
                self.n,
                self.seed,
                i,
                v
            ));
        }
        out
    }
}

/// Samples ceil(n_samples / PAIRS_PER_MAP) maps on independent seed streams
/// and collects rescaled pair distances plus per-map label-prediction gaps.
pub fn two_point_statistics(
    family: MapFamily,
    n: usize,
    n_samples: usize,
    seed: u64,
) -> Result<TwoPointStatistics, SnakeError> {
    if n < 4 {
        return Err(SnakeError::Domain(format!(
            "two-point statistics need n >= 4, got {n}"
        )));
    }
    if n_samples == 0 {
        return Err(SnakeError::Domain("n_samples must be positive".into()));
    }
    let n_maps = n_samples.div_ceil(PAIRS_PER_MAP);
    let b = label_scale(family, n);
    let per_map = indexed_try_map(n_maps, |m| -> Result<(Vec<f64>, f64), SnakeError> {
        let mut rng = stream_rng(seed, m as u64);
        let (rooted, r) = sample_map(n, family, &mut rng)
            .map_err(|e| SnakeError::Domain(format!("sampling failed: {e}")))?;
        let want = PAIRS_PER_MAP.min(n_samples - m * PAIRS_PER_MAP);
        let mut vals = Vec::with_capacity(want);
        for _ in 0..want {
            let u = rng.gen_range(0..n as u32);
            let w = rng.gen_range(0..n as u32);
            vals.push(b * bfs_distance(&r.map, u)[w as usize] as f64);
        }
        let x = &vertex_labels(&rooted).x;
        let u_min = (0..n).min_by_key(|&v| (x[v], v)).unwrap();
        let w = rng.gen_range(0..n as u32);
        let d = bfs_distance(&r.map, w)[u_min] as i64;
        let gap = b * (d - (x[w as usize] - x[u_min])).abs() as f64;
        Ok((vals, gap))
    })?;
    let mut values = Vec::with_capacity(n_samples);
    let mut root_min_gaps = Vec::with_capacity(n_maps);
    for (vals, gap) in per_map {
        values.extend(vals);
        root_min_gaps.push(gap);
    }
    Ok(TwoPointStatistics { family, n, seed, values, root_min_gaps })
}

/// Two-sample Kolmogorov-Smirnov statistic, sup |F_a − F_b|.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "samples must be non-empty");
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        let fa = i as f64 / xs.len() as f64;
        let fb = j as f64 / ys.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

// ---------------------------------------------------------------------------
// Scaling report
// ---------------------------------------------------------------------------

/// One scaling check: the per-size statistics, the summary statistic, and
/// the pass threshold.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub per_n: Vec<f64>,
}

/// Desk-scale scaling report for one family over a list of sizes.
#[derive(Debug, Clone, Serialize)]
pub struct CsFamilyReport {
    pub family: String,
    pub n_list: Vec<usize>,
    pub n_samples: usize,
    pub seed: u64,
    pub conditions: BTreeMap<String, ConditionCheck>,
    pub pass: bool,
}

impl CsFamilyReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Checks the label-process distance bound with constant slack 18 between
/// contour positions i <= j; the arc minima split at i and j with the
/// complementary arc wrapping through the root.
fn contour_bound_holds(z: &[i64], i: usize, j: usize, d: i64) -> bool {
    let inner = *z[i..=j].iter().min().unwrap();
    let outer = (*z[j..].iter().min().unwrap()).min(*z[..=i].iter().min().unwrap());
    d <= z[i] + z[j] - 2 * inner.max(outer) + 18
}

struct MapScalingStats {
    sup_c: f64,
    neg_min_z: f64,
    hub: f64,
    root_min: f64,
    pair_vals: Vec<f64>,
    bound_violations: u64,
    tightness: f64,
}

/// Samples maps at each size and summarizes six desk-scale signatures of the
/// continuum limit: stability of the rescaled contour supremum and label
/// infimum, hubs at distance one from the inner vertex set, agreement of the
/// root-to-minimum distance law with the uniform two-point law, the contour
/// two-point upper bound with slack 18, and the tightening of labels against
/// distances. The two-point law threshold adds an empirical allowance of
/// 0.05 on top of the large-sample critical value because the two laws only
/// coincide in the limit.
pub fn cs_family_report(
    family: MapFamily,
    n_list: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<CsFamilyReport, SnakeError> {
    if n_list.is_empty() {
        return Err(SnakeError::Domain("the size list must be non-empty".into()));
    }
    if n_list.iter().any(|&n| n < 4) {
        return Err(SnakeError::Domain("sizes below 4 are not informative".into()));
    }
    if n_samples == 0 {
        return Err(SnakeError::Domain("n_samples must be positive".into()));
    }
    let n_maps = n_samples.div_ceil(PAIRS_PER_MAP);
    let mut contour_means = Vec::new();
    let mut label_means = Vec::new();
    let mut hub_stats = Vec::new();
    let mut ks_stats = Vec::new();
    let mut violation_counts = Vec::new();
    let mut tightness_means = Vec::new();
    for &n in n_list {
        let seed_n = splitmix64(seed ^ n as u64);
        let a = contour_scale(family, n);
        let b = label_scale(family, n);
        let stats = indexed_try_map(n_maps, |m| -> Result<MapScalingStats, SnakeError> {
            let mut rng = stream_rng(seed_n, m as u64);
            let (rooted, r) = sample_map(n, family, &mut rng)
                .map_err(|e| SnakeError::Domain(format!("sampling failed: {e}")))?;
            let vl = to_valid_labelling(&rooted, 0);
            let ctr = vl.tree.contour();
            let p = processes(&vl);
            let labels = vertex_labels(&rooted);
            let da = bfs_distance(&r.map, r.vertex_a);
            let db = bfs_distance(&r.map, r.vertex_b);
            let hub_a = (0..n).map(|v| da[v]).min().unwrap();
            let hub_b = (0..n).map(|v| db[v]).min().unwrap();
            let x = &labels.x;
            let u_min = (0..n).min_by_key(|&v| (x[v], v)).unwrap();
            let root_min =
                b * bfs_distance(&r.map, r.map.root_vertex())[u_min] as f64;
            let steps = p.z.len();
            let mut pair_vals = Vec::with_capacity(PAIRS_PER_MAP);
            let mut bound_violations = 0u64;
            for _ in 0..PAIRS_PER_MAP {
                let u = rng.gen_range(0..n as u32);
                let w = rng.gen_range(0..n as u32);
                pair_vals.push(b * bfs_distance(&r.map, u)[w as usize] as f64);
                let i = rng.gen_range(0..steps);
                let j = rng.gen_range(0..steps);
                let (i, j) = (i.min(j), i.max(j));
                let vi = ctr.visits[i];
                let vj = ctr.visits[j];
                let d = bfs_distance(&r.map, vi)[vj as usize] as i64;
                if !contour_bound_holds(&p.z, i, j, d) {
                    bound_violations += 1;
                }
            }
            let tightness =
                label_distance_profile(&r.map, &map_vertex_labels(&r), r.vertex_a)
                    .max_err_scaled;
            Ok(MapScalingStats {
                sup_c: a * p.sup_c() as f64,
                neg_min_z: b * -p.min_z() as f64,
                hub: hub_a.max(hub_b) as f64,
                root_min,
                pair_vals,
                bound_violations,
                tightness,
            })
        })?;
        let count = stats.len() as f64;
        contour_means.push(stats.iter().map(|s| s.sup_c).sum::<f64>() / count);
        label_means.push(stats.iter().map(|s| s.neg_min_z).sum::<f64>() / count);
        hub_stats.push(stats.iter().map(|s| s.hub).fold(0.0, f64::max));
        let root_mins: Vec<f64> = stats.iter().map(|s| s.root_min).collect();
        let pooled: Vec<f64> = stats.iter().flat_map(|s| s.pair_vals.clone()).collect();
        ks_stats.push(ks_statistic(&root_mins, &pooled));
        violation_counts.push(stats.iter().map(|s| s.bound_violations).sum::<u64>() as f64);
        tightness_means.push(stats.iter().map(|s| s.tightness).sum::<f64>() / count);
    }
    let relative_drift = |per: &[f64]| (per[per.len() - 1] / per[0] - 1.0).abs();
    let ks_threshold = {
        let na = n_maps as f64;
        let nb = (n_maps * PAIRS_PER_MAP) as f64;
        1.63 * ((na + nb) / (na * nb)).sqrt() + 0.05
    };
    let mut conditions = BTreeMap::new();
    conditions.insert(
        "contour_scaling_stable".to_string(),
        ConditionCheck {
            statistic: relative_drift(&contour_means),
            threshold: 0.2,
            pass: relative_drift(&contour_means) <= 0.2,
            per_n: contour_means,
        },
    );
    conditions.insert(
        "label_scaling_stable".to_string(),
        ConditionCheck {
            statistic: relative_drift(&label_means),
            threshold: 0.2,
            pass: relative_drift(&label_means) <= 0.2,
            per_n: label_means,
        },
    );
    let hub_max = hub_stats.iter().fold(0.0, |acc: f64, &h| acc.max(h));
    conditions.insert(
        "hub_distance_one".to_string(),
        ConditionCheck {
            statistic: hub_max,
            threshold: 1.0,
            pass: hub_max == 1.0,
            per_n: hub_stats,
        },
    );
    let ks_last = *ks_stats.last().unwrap();
    conditions.insert(
        "root_to_min_two_point_law".to_string(),
        ConditionCheck {
            statistic: ks_last,
            threshold: ks_threshold,
            pass: ks_last <= ks_threshold,
            per_n: ks_stats,
        },
    );
    let total_violations: f64 = violation_counts.iter().sum();
    conditions.insert(
        "two_point_upper_bound_slack18".to_string(),
        ConditionCheck {
            statistic: total_violations,
            threshold: 0.0,
            pass: total_violations == 0.0,
            per_n: violation_counts,
        },
    );
    let tight_first = tightness_means[0];
    let tight_last = *tightness_means.last().unwrap();
    conditions.insert(
        "label_distance_tightness".to_string(),
        ConditionCheck {
            statistic: tight_last,
            threshold: tight_first,
            pass: tight_last <= tight_first,
            per_n: tightness_means,
        },
    );
    let pass = conditions.values().all(|c| c.pass);
    Ok(CsFamilyReport {
        family: family.name().to_string(),
        n_list: n_list.to_vec(),
        n_samples,
        seed,
        conditions,
        pass,
    })
}
