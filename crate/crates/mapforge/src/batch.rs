//! Batch execution over independent RNG streams, plus the deterministic
//! verification suite run on every sampled map.
//!
//! Each work item draws from `stream_rng(seed, index)`, so a batch is a pure
//! function of (seed, index) and produces identical results sequentially or
//! on a thread pool, whatever the thread count. The `parallel` feature (on
//! by default) routes the loops through rayon; without it the same closures
//! run in a plain loop.

use crate::blossoming::{vertex_labels, BlossomingTree, MapFamily};
use crate::closure::{close, open, sample_map, ClosureError, ClosureResult};
use crate::geodesics::{
    bfs_distance, bfs_geodesic, label_distance_profile, leftmost_path, map_vertex_labels,
    winding_number, DistanceLabelReport, TwoPointBound,
};
use crate::rng::stream_rng;

/// 64-bit FNV-1a over a byte string; the checksum reported for sampled maps.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Applies `f` to every index in 0..count, collecting results in index order.
pub fn indexed_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Fallible `indexed_map`; on failure returns the error of smallest index,
/// so both execution modes report the same one.
pub fn indexed_try_map<T, E, F>(count: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    indexed_map(count, f).into_iter().collect()
}

/// One sampled closure, serialized, with its content checksum.
#[derive(Debug, Clone)]
pub struct SampledMap {
    pub index: usize,
    pub json: String,
    pub checksum: u64,
}

/// Samples `count` uniform rooted maps; item i uses RNG stream (seed, i).
pub fn sample_batch(
    family: MapFamily,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<SampledMap>, ClosureError> {
    indexed_try_map(count, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let (_, r) = sample_map(n, family, &mut rng)?;
        let json = r.to_json_string();
        Ok(SampledMap { index: i, checksum: fnv1a64(json.as_bytes()), json })
    })
}

/// Number of probe sources for the geodesic and two-point checks in
/// `verify_closure`; sources are spread evenly over the inner vertices.
const VERIFY_PROBES: usize = 6;

/// Deterministic invariant suite for one closure output. Checks, in order:
/// simplicity, the Euler count, uniform face degrees, the outdegree profile
/// and minimality of the carried orientation, the open/close round trip
/// (compared through canonical codes), the label sandwich
/// Y/3 &le; d(&middot;,A) &le; Y&minus;1, the leftmost-path label identity, winding
/// lower bounds along probe geodesics, and the contour two-point upper bound
/// against probe BFS distances. Returns a message naming the first failure.
pub fn verify_closure(r: &ClosureResult, family: MapFamily) -> Result<(), String> {
    let map = &r.map;
    if !map.is_simple() {
        return Err("simplicity: loop or parallel edge".into());
    }
    let (v, e, f) = (map.n_vertices() as i64, map.n_edges() as i64, map.n_faces() as i64);
    if v - e + f != 2 {
        return Err(format!("euler: V - E + F = {}", v - e + f));
    }
    let want_deg = family.closure_arity() + 1;
    if map.face_degrees().iter().any(|&d| d != want_deg) {
        return Err(format!("faces: degree other than {want_deg} present"));
    }
    let rep = map.check_orientation(family);
    if !rep.ok() {
        return Err(format!("orientation: {} violations", rep.violations.len()));
    }
    match map.is_minimal() {
        Ok(true) => {}
        Ok(false) => return Err("orientation: counterclockwise cycle".into()),
        Err(e) => return Err(format!("orientation: {e}")),
    }

    let tree = open(map, family).map_err(|e| format!("open: {e}"))?;
    let reclosed = close(&tree, 0).map_err(|e| format!("reclose: {e}"))?;
    if reclosed.map.canonical_code() != map.canonical_code() {
        return Err("round trip: reclosed map differs".into());
    }
    // Half-edge ids may be renumbered on the way back, so compare the corner
    // label multiset rather than the vectors.
    let mut got = reclosed.lambda_star.clone();
    let mut want = r.lambda_star.clone();
    got.sort_unstable();
    want.sort_unstable();
    if got != want {
        return Err("round trip: corner label multiset differs".into());
    }

    let y = map_vertex_labels(r);
    let prof = label_distance_profile(map, &y, r.vertex_a);
    if prof.sandwich_violations != 0 {
        return Err(format!("sandwich: {} vertices outside [Y/3, Y-1]", prof.sandwich_violations));
    }

    // Leftmost label identity: exact in the two-stem family; in the one-stem
    // family a path passing strictly through the map root finishes two short
    // of its left corner label (the root keeps a single outgoing edge whose
    // left corner is the label-2 root corner).
    let quad = family == MapFamily::Quadrangulation;
    let root = map.root_vertex();
    let ori = map.orientation().expect("orientation checked above");
    for h in 0..map.n_half_edges() as u32 {
        if !ori[h as usize] || map.vertex_of(h) == r.vertex_b {
            continue;
        }
        let p = leftmost_path(map, h).map_err(|e| format!("leftmost: {e}"))?;
        let len = p.vertices.len();
        let through_root = len >= 3 && p.vertices[len - 2] == root;
        let discount = if quad && through_root { 2 } else { 0 };
        if r.lambda_star[map.sigma_inv(h) as usize] - discount != len as i64 {
            return Err(format!("leftmost identity: half-edge {h}"));
        }
    }

    // Probe geodesics: winding lower bound on the input map, two-point upper
    // bound on the reclosed copy, whose inner vertex ids match the reopened
    // tree's.
    let slack: i64 = if quad { 1 } else { 2 };
    let n_inner = map.n_vertices() - 2;
    let ctr = tree.tree.contour();
    let labels = vertex_labels(&tree);
    let tp = TwoPointBound::new(&ctr, &labels);
    let probes = VERIFY_PROBES.min(n_inner);
    for k in 0..probes {
        let u = (k * n_inner / probes) as u32;
        let q = bfs_geodesic(map, u, r.vertex_a);
        for h in map.out_edges(u) {
            if !ori[h as usize] {
                continue;
            }
            let p = leftmost_path(map, h).map_err(|e| format!("leftmost: {e}"))?;
            let d = winding_number(map, h, &q).map_err(|e| format!("winding: {e}"))?;
            if (q.n_vertices() as i64) < p.n_vertices() as i64 + 2 * (d.w - slack) {
                return Err(format!("winding bound: source {u}, edge {h}"));
            }
        }
        let dist = bfs_distance(&reclosed.map, u);
        for w in 0..n_inner as u32 {
            if tp.bound(u, w) < dist[w as usize] as i64 {
                return Err(format!("two-point bound: pair ({u}, {w})"));
            }
        }
    }
    Ok(())
}

/// Tree-side round trip plus the full closure suite, for freshly sampled
/// pairs where the source tree is still at hand.
pub fn verify_sampled(t: &BlossomingTree, r: &ClosureResult) -> Result<(), String> {
    let back = open(&r.map, t.family).map_err(|e| format!("open: {e}"))?;
    if back.canonical_code() != t.canonical_code() {
        return Err("round trip: reopened tree differs".into());
    }
    verify_closure(r, t.family)
}

/// Samples `count` maps and runs `verify_sampled` on each; Err carries the
/// failing sample index and check name.
pub fn verify_batch(
    family: MapFamily,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<(), String> {
    indexed_try_map(count, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let (t, r) = sample_map(n, family, &mut rng).map_err(|e| format!("sample {i}: {e}"))?;
        verify_sampled(&t, &r).map_err(|msg| format!("sample {i}: {msg}"))
    })
    .map(|_: Vec<()>| ())
}

/// Per-sample label-versus-distance profiles for a batch of maps.
pub fn profile_batch(
    family: MapFamily,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<DistanceLabelReport>, ClosureError> {
    indexed_try_map(count, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let (_, r) = sample_map(n, family, &mut rng)?;
        let y = map_vertex_labels(&r);
        Ok(label_distance_profile(&r.map, &y, r.vertex_a))
    })
}
