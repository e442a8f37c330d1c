//! Completing a balanced blossoming tree into a rooted simple planar map,
//! and the inverse opening walk.
//!
//! Completion runs in three steps. First every stem that is followed (in
//! clockwise contour order) by enough face edges is matched to those edges
//! and completed into a chord; matching is confluent, so a single
//! stack pass over the contour plus one wrap-around cascade reaches the
//! fixed point. Second, the stems that survive are attached to one of two
//! new hub vertices `A` and `B`, split by which side of the other balanced
//! corner they sit on, and the edge `{A, B}` is added. Third, the map is
//! rooted at the image of the balanced corner, every edge receives its
//! canonical direction (stems away from their base, tree edges towards the
//! root, `{A, B}` from `B` to `A`), and the corner labels of the tree are
//! pushed forward onto map corners.
//!
//! Half-edge ids are stable across the construction: tree edge `e(v)`
//! (indexed by its child endpoint `v`) owns halves `2e` (parent side) and
//! `2e + 1` (child side). Completing a stem relocates only the tail of its
//! child-side half; ids and twin pairing never change. The `{A, B}` edge
//! takes the last edge index with the `B` side even.

use std::collections::HashMap;
use std::error::Error;
use std::fmt;

use serde_json::Value;

use crate::blossoming::{
    balanced_corners, corner_labelling, BlossomError, BlossomingTree, CornerLabelling, MapFamily,
};
use crate::planar_map::{HalfEdgeId, HalfEdgeMap, MapError};
use crate::plane_tree::{ContourSequence, PlantedPlaneTree, VertexId};

#[derive(Debug)]
pub enum ClosureError {
    /// A corner argument is out of range or of the wrong kind.
    Corner(String),
    /// Closing requires the root corner to be one of the two balanced corners.
    NotBalanced(usize),
    /// The instance is too small to close into a sphere map.
    TooSmall(&'static str),
    /// An opening argument cannot be the completion of any tree.
    NotClosure(String),
    Blossom(BlossomError),
    Map(MapError),
    Parse(String),
}

impl fmt::Display for ClosureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosureError::Corner(msg) => write!(f, "bad corner: {msg}"),
            ClosureError::NotBalanced(c) => {
                write!(f, "corner {c} is not a balanced root corner")
            }
            ClosureError::TooSmall(msg) => write!(f, "instance too small: {msg}"),
            ClosureError::NotClosure(msg) => write!(f, "not a completed map: {msg}"),
            ClosureError::Blossom(e) => write!(f, "blossoming tree: {e}"),
            ClosureError::Map(e) => write!(f, "planar map: {e}"),
            ClosureError::Parse(msg) => write!(f, "parse: {msg}"),
        }
    }
}

impl Error for ClosureError {}

impl From<BlossomError> for ClosureError {
    fn from(e: BlossomError) -> Self {
        ClosureError::Blossom(e)
    }
}

impl From<MapError> for ClosureError {
    fn from(e: MapError) -> Self {
        ClosureError::Map(e)
    }
}

/// A completed map together with the data carried over from the tree.
///
/// Inner tree vertices keep their ids in the map; the hubs take ids `n` and
/// `n + 1`. `lambda_star[h]` labels the corner swept clockwise from half `h`
/// to the next half out of the same vertex. `inner_corner_image[i]` is the
/// map corner (by half-edge) receiving tree corner `i`, present exactly at
/// inner corners; the tree is indexed as closed, after any replanting.
/// `tree_edges[e]` marks the map edges that were inner tree edges (neither
/// stems nor `{A, B}`).
#[derive(Debug, Clone)]
pub struct ClosureResult {
    pub map: HalfEdgeMap,
    pub lambda_star: Vec<i64>,
    pub vertex_a: VertexId,
    pub vertex_b: VertexId,
    pub tree_vertex_ids: Vec<VertexId>,
    pub inner_corner_image: Vec<Option<HalfEdgeId>>,
    pub tree_edges: Vec<bool>,
}

// ---------------------------------------------------------------------------
// Shared half-edge scaffold over a blossoming tree
// ---------------------------------------------------------------------------

pub(crate) struct Scaffold {
    pub(crate) next_cw: Vec<HalfEdgeId>,
    pub(crate) vertex_of: Vec<VertexId>,
    /// Half-edge traversed by contour step i (tail at visits[i]).
    pub(crate) traversed: Vec<HalfEdgeId>,
    /// Out-half from the root towards its last child; its corner is the
    /// root corner.
    pub(crate) root_half: HalfEdgeId,
    pub(crate) is_stem: Vec<bool>,
}

pub(crate) fn scaffold(t: &BlossomingTree, ctr: &ContourSequence) -> Scaffold {
    let tree = &t.tree;
    let m = tree.n_vertices();
    let root = tree.root();
    let mut edge_of = vec![usize::MAX; m];
    let mut next_e = 0usize;
    for v in 0..m as u32 {
        if v != root {
            edge_of[v as usize] = next_e;
            next_e += 1;
        }
    }
    debug_assert_eq!(next_e, m - 1);
    // One extra edge slot for {A, B}; its halves stay unlinked here.
    let nh = 2 * m;
    let mut next_cw = vec![u32::MAX; nh];
    let mut vertex_of = vec![u32::MAX; nh];
    let mut is_stem = vec![false; m];
    for v in 0..m as u32 {
        if v != root {
            let e = edge_of[v as usize];
            vertex_of[2 * e] = tree.parent(v).expect("non-root has a parent");
            vertex_of[2 * e + 1] = v;
            is_stem[e] = t.is_blossom[v as usize];
        }
        let mut cycle: Vec<HalfEdgeId> = Vec::with_capacity(tree.degree(v));
        if v != root {
            cycle.push(2 * edge_of[v as usize] as u32 + 1);
        }
        for &c in tree.children(v) {
            cycle.push(2 * edge_of[c as usize] as u32);
        }
        for (i, &h) in cycle.iter().enumerate() {
            next_cw[h as usize] = cycle[(i + 1) % cycle.len()];
        }
    }
    let k = ctr.n_corners();
    let mut traversed = Vec::with_capacity(k);
    for i in 0..k {
        let a = ctr.corner_vertex(i);
        let b = ctr.next_vertex(i);
        let h = if tree.parent(b) == Some(a) {
            2 * edge_of[b as usize] as u32
        } else {
            2 * edge_of[a as usize] as u32 + 1
        };
        traversed.push(h);
    }
    let last_child = *tree.children(root).last().expect("inner root has children");
    let root_half = 2 * edge_of[last_child as usize] as u32;
    Scaffold { next_cw, vertex_of, traversed, root_half, is_stem }
}

/// The half-edge traversed by each inner-to-inner contour step, keyed by the
/// corner the step departs from. Stem steps are absent. Half-edge ids
/// survive the completion unchanged, so the pairs stay valid on the
/// finished map.
pub(crate) fn contour_tree_steps(
    t: &BlossomingTree,
    ctr: &ContourSequence,
) -> Vec<(usize, HalfEdgeId)> {
    let sc = scaffold(t, ctr);
    (0..ctr.n_corners())
        .filter(|&i| {
            !t.is_blossom[ctr.corner_vertex(i) as usize]
                && !t.is_blossom[ctr.next_vertex(i) as usize]
        })
        .map(|i| (i, sc.traversed[i]))
        .collect()
}

// ---------------------------------------------------------------------------
// Partial completion: stack engine and sweep oracle
// ---------------------------------------------------------------------------

pub(crate) struct PartialClosure {
    pub(crate) sc: Scaffold,
    /// Surviving stems as (bud corner, bud half), in contour order.
    pub(crate) unclosed: Vec<(usize, HalfEdgeId)>,
    /// Completed stems as (bud corner, spliced-after half), in completion
    /// order.
    pub(crate) targets: Vec<(usize, HalfEdgeId)>,
}

/// Runs the matching to its fixed point with a single contour pass: stems
/// push, face edges feed the innermost open stem, and a completed stem
/// re-enters the stream as a fresh face edge. Edges reaching an empty stack
/// are replayed once past the end, feeding the stems left open. If `labels`
/// is given, both corners created by a splice inherit the label of the
/// corner that was split.
pub(crate) fn partial_closure_stack(
    t: &BlossomingTree,
    ctr: &ContourSequence,
    mut labels: Option<&mut Vec<i64>>,
) -> PartialClosure {
    let mut sc = scaffold(t, ctr);
    let arity = t.family.closure_arity();
    let mut stack: Vec<(usize, HalfEdgeId, usize)> = Vec::new(); // corner, bud, count
    let mut prefix: Vec<HalfEdgeId> = Vec::new();
    let mut targets: Vec<(usize, HalfEdgeId)> = Vec::new();
    let mut feed = |h: HalfEdgeId,
                    stack: &mut Vec<(usize, HalfEdgeId, usize)>,
                    prefix: Option<&mut Vec<HalfEdgeId>>| {
        let mut h = h;
        loop {
            match stack.last_mut() {
                None => {
                    if let Some(p) = prefix {
                        p.push(h);
                    }
                    return;
                }
                Some(top) => {
                    top.2 += 1;
                    if top.2 < arity {
                        return;
                    }
                }
            }
            let (corner, bud, _) = stack.pop().expect("stack non-empty");
            let target = h ^ 1;
            sc.vertex_of[bud as usize] = sc.vertex_of[target as usize];
            sc.next_cw[bud as usize] = sc.next_cw[target as usize];
            sc.next_cw[target as usize] = bud;
            if let Some(lab) = labels.as_deref_mut() {
                lab[bud as usize] = lab[target as usize];
            }
            targets.push((corner, target));
            h = bud ^ 1;
        }
    };
    let k = ctr.n_corners();
    for i in 0..k {
        let a = ctr.corner_vertex(i);
        let b = ctr.next_vertex(i);
        if t.is_blossom[b as usize] {
            stack.push((i + 1, sc.traversed[i] + 1, 0));
        } else if t.is_blossom[a as usize] {
            // returning from a blossom: not a face edge
        } else {
            feed(sc.traversed[i], &mut stack, Some(&mut prefix));
        }
    }
    for h in std::mem::take(&mut prefix) {
        if stack.is_empty() {
            break;
        }
        feed(h, &mut stack, None);
    }
    let unclosed = stack.into_iter().map(|(c, bud, _)| (c, bud)).collect();
    PartialClosure { sc, unclosed, targets }
}

/// Independent fixed-point computation used as a test oracle: repeatedly
/// walk the boundary face from each surviving stem and complete any stem
/// followed by `arity` non-stem edges, until a full sweep changes nothing.
/// `order` permutes the per-sweep processing order to exercise confluence.
#[cfg(test)]
pub(crate) fn partial_closure_sweep(
    t: &BlossomingTree,
    ctr: &ContourSequence,
    order: &[usize],
) -> PartialClosure {
    let mut sc = scaffold(t, ctr);
    let arity = t.family.closure_arity();
    let mut stems: Vec<(usize, HalfEdgeId)> = Vec::new();
    for i in 0..ctr.n_corners() {
        if t.is_blossom[ctr.next_vertex(i) as usize] {
            stems.push((i + 1, sc.traversed[i] + 1));
        }
    }
    assert_eq!(order.len(), stems.len(), "order must permute the stems");
    let mut open: Vec<bool> = vec![true; stems.len()];
    let mut targets = Vec::new();
    loop {
        let mut changed = false;
        for &idx in order {
            if !open[idx] {
                continue;
            }
            let (corner, bud) = stems[idx];
            // Face edges after the stem's return half, skipping nothing:
            // an open stem blocks the window.
            let mut h = sc.next_cw[(bud ^ 1) as usize];
            let mut ok = true;
            for step in 0..arity {
                if sc.is_stem[(h / 2) as usize]
                    && stems.iter().zip(&open).any(|(&(_, b), &o)| o && b / 2 == h / 2)
                {
                    ok = false;
                    break;
                }
                if step + 1 < arity {
                    h = sc.next_cw[(h ^ 1) as usize];
                }
            }
            if !ok {
                continue;
            }
            let target = h ^ 1;
            sc.vertex_of[bud as usize] = sc.vertex_of[target as usize];
            sc.next_cw[bud as usize] = sc.next_cw[target as usize];
            sc.next_cw[target as usize] = bud;
            targets.push((corner, target));
            open[idx] = false;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let unclosed = stems
        .iter()
        .zip(&open)
        .filter(|(_, &o)| o)
        .map(|(&s, _)| s)
        .collect();
    PartialClosure { sc, unclosed, targets }
}

// ---------------------------------------------------------------------------
// Successor scans
// ---------------------------------------------------------------------------

/// First corner strictly after `c` whose continued label sits one below the
/// label at `c`, or None if the stem at `c` is never completed. Reading the
/// contour past the root corner continues the labels with the closing drift
/// of +2, so one lap decides.
pub fn successor(
    t: &BlossomingTree,
    lab: &CornerLabelling,
    c: usize,
) -> Result<Option<usize>, ClosureError> {
    let k = lab.labels.len();
    if c >= k {
        return Err(ClosureError::Corner(format!("corner {c} out of range (contour has {k})")));
    }
    let ctr = t.tree.contour();
    if !t.is_blossom[ctr.corner_vertex(c) as usize] {
        return Err(ClosureError::Corner(format!("corner {c} is not at a blossom")));
    }
    let target = lab.labels[c] - 1;
    for d in 1..k {
        let i = (c + d) % k;
        let drift = if c + d >= k { 2 } else { 0 };
        if lab.labels[i] + drift == target {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Counting form of the successor: the first span after the bud in which
/// the face edges outnumber what the enclosed stems consume. Each bud in
/// the span soaks up `arity` edges plus its own slot.
#[cfg(test)]
pub(crate) fn successor_by_counting(
    t: &BlossomingTree,
    ctr: &ContourSequence,
    c: usize,
) -> Option<usize> {
    let k = ctr.n_corners();
    let weight = t.family.closure_arity() + 1;
    let mut buds = usize::from(t.is_blossom[ctr.corner_vertex(c) as usize]);
    for d in 1..k {
        let i = (c + d) % k;
        if t.is_blossom[ctr.corner_vertex(i) as usize] {
            buds += 1;
        }
        if weight * buds < d + 1 {
            return Some(i);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Closing
// ---------------------------------------------------------------------------

/// Closes the tree replanted at corner `xi`, which must be one of its two
/// balanced corners.
pub fn close(t: &BlossomingTree, xi: usize) -> Result<ClosureResult, ClosureError> {
    let ctr = t.tree.contour();
    if xi >= ctr.n_corners() {
        return Err(ClosureError::Corner(format!(
            "corner {xi} out of range (contour has {})",
            ctr.n_corners()
        )));
    }
    if t.is_blossom[ctr.corner_vertex(xi) as usize] {
        return Err(ClosureError::NotBalanced(xi));
    }
    let rooted = if xi == 0 { t.clone() } else { t.reroot_at_corner(&ctr, xi) };
    close_rooted(&rooted)
}

fn close_rooted(t: &BlossomingTree) -> Result<ClosureResult, ClosureError> {
    let n = t.n_inner();
    if t.family == MapFamily::Quadrangulation && n == 1 {
        return Err(ClosureError::TooSmall(
            "the one-vertex quadrangulation tree closes onto a single face, not a sphere map",
        ));
    }
    let ctr = t.tree.contour();
    let bc = balanced_corners(t, &ctr);
    if bc[0] != 0 {
        return Err(ClosureError::NotBalanced(0));
    }
    let other = bc[1];
    let k = ctr.n_corners();
    let m = t.tree.n_vertices();
    let lab = corner_labelling(t, &ctr);

    // Push the tree's corner labels onto half-edges. Corner i sits at the
    // tail of the half running back towards the previous contour vertex;
    // the root corner belongs to the half towards the root's last child.
    let mut labels = vec![i64::MIN; 2 * m];
    let pre = scaffold(t, &ctr);
    labels[pre.root_half as usize] = lab.labels[0];
    for i in 1..k {
        labels[(pre.traversed[i - 1] ^ 1) as usize] = lab.labels[i];
    }
    drop(pre);

    let pc = partial_closure_stack(t, &ctr, Some(&mut labels));
    let PartialClosure { sc, unclosed, .. } = pc;
    let Scaffold { mut next_cw, mut vertex_of, traversed, root_half, is_stem, .. } = sc;

    // Hub attachments: stems before the other balanced corner join A, the
    // rest join B. Spokes wind around a hub in reverse contour order,
    // followed by the hub's side of {A, B}.
    let va = n as u32;
    let vb = n as u32 + 1;
    let h_ba = (2 * m - 2) as u32;
    let h_ab = h_ba + 1;
    let hub_a: Vec<(usize, HalfEdgeId)> =
        unclosed.iter().copied().filter(|&(c, _)| c < other).collect();
    let hub_b: Vec<(usize, HalfEdgeId)> =
        unclosed.iter().copied().filter(|&(c, _)| c > other).collect();
    if hub_a.is_empty() || hub_b.is_empty() {
        return Err(ClosureError::NotBalanced(0));
    }
    debug_assert_eq!(hub_a[0].0, 1, "the root's opening stem survives and joins A");
    let mut attach = |spokes: &[(usize, HalfEdgeId)], hub: u32, own_half: HalfEdgeId| {
        let mut cycle: Vec<HalfEdgeId> = spokes.iter().rev().map(|&(_, b)| b).collect();
        cycle.push(own_half);
        for (i, &h) in cycle.iter().enumerate() {
            next_cw[h as usize] = cycle[(i + 1) % cycle.len()];
        }
        for &(_, b) in spokes {
            vertex_of[b as usize] = hub;
        }
        vertex_of[own_half as usize] = hub;
    };
    attach(&hub_a, va, h_ab);
    attach(&hub_b, vb, h_ba);
    for &(_, b) in &hub_a {
        labels[b as usize] = 1;
    }
    labels[hub_a[0].1 as usize] = 0; // A's corner on the root face
    labels[h_ab as usize] = 1;
    for &(_, b) in &hub_b {
        labels[b as usize] = 2;
    }
    labels[h_ba as usize] = 1; // B's corner on the root face

    // Stems point away from their base, tree edges towards the root, and
    // {A, B} from B to A; even halves carry the stem/{A,B} direction.
    let mut ori = vec![false; 2 * m];
    let mut tree_edges = vec![false; m];
    for e in 0..m - 1 {
        if is_stem[e] {
            ori[2 * e] = true;
        } else {
            ori[2 * e + 1] = true;
            tree_edges[e] = true;
        }
    }
    ori[h_ba as usize] = true;

    let map = HalfEdgeMap::from_parts(next_cw, vertex_of, root_half, Some(ori))?;

    let mut inner_corner_image = vec![None; k];
    for (i, slot) in inner_corner_image.iter_mut().enumerate() {
        if !t.is_blossom[ctr.corner_vertex(i) as usize] {
            *slot = Some(map.sigma_inv(traversed[i]));
        }
    }
    debug_assert!(labels.iter().all(|&l| l >= 0), "balanced closures never label below zero");

    Ok(ClosureResult {
        map,
        lambda_star: labels,
        vertex_a: va,
        vertex_b: vb,
        tree_vertex_ids: (0..n as u32).collect(),
        inner_corner_image,
        tree_edges,
    })
}

/// Closes the tree and additionally returns the map corner receiving the
/// marked inner corner `xi_hat`. Both corners index the contour of `t` as
/// given.
pub fn close_marked(
    t: &BlossomingTree,
    xi: usize,
    xi_hat: usize,
) -> Result<(ClosureResult, HalfEdgeId), ClosureError> {
    let ctr = t.tree.contour();
    let k = ctr.n_corners();
    if xi_hat >= k {
        return Err(ClosureError::Corner(format!(
            "corner {xi_hat} out of range (contour has {k})"
        )));
    }
    if t.is_blossom[ctr.corner_vertex(xi_hat) as usize] {
        return Err(ClosureError::Corner(format!("marked corner {xi_hat} is not inner")));
    }
    let result = close(t, xi)?;
    let shifted = (xi_hat + k - (xi % k)) % k;
    let image = result.inner_corner_image[shifted]
        .expect("inner corners stay inner under replanting");
    Ok((result, image))
}

// ---------------------------------------------------------------------------
// Opening
// ---------------------------------------------------------------------------

/// Recovers the balanced blossoming tree whose completion is the given map.
/// The map must be simple with uniform face degrees, carry the outdegree
/// profile of its family, and its orientation must be free of
/// counterclockwise cycles.
pub fn open(map: &HalfEdgeMap, family: MapFamily) -> Result<BlossomingTree, ClosureError> {
    let ori = map
        .orientation()
        .ok_or_else(|| ClosureError::NotClosure("map carries no orientation".into()))?
        .to_vec();
    if !map.is_simple() {
        return Err(ClosureError::NotClosure("map is not simple".into()));
    }
    let expected_deg = family.closure_arity() + 1;
    let degs = map.face_degrees();
    if degs.first() != Some(&expected_deg) || degs.last() != Some(&expected_deg) {
        return Err(ClosureError::NotClosure(format!(
            "faces must all have degree {expected_deg}"
        )));
    }
    let report = map.check_orientation(family);
    if !report.ok() {
        return Err(ClosureError::NotClosure(format!(
            "orientation violates the outdegree profile: {:?}",
            report.violations
        )));
    }
    if !map.is_minimal()? {
        return Err(ClosureError::NotClosure(
            "orientation has a counterclockwise cycle".into(),
        ));
    }

    let rf = map.root_face_clockwise();
    let va = rf[1];
    let vb = rf[2];
    let root_half = map.root_half_edge();
    let h_ab_face = map.face_next(map.sigma(root_half));
    debug_assert_eq!(map.vertex_of(h_ab_face), va);
    debug_assert_eq!(map.head_of(h_ab_face), vb);

    let n = map.n_vertices() - 2;
    let m = map.n_edges(); // inner edges + stems after removing {A, B}
    let mut seen = vec![false; m];
    seen[(h_ab_face / 2) as usize] = true;
    let mut visited: Vec<Option<u32>> = vec![None; map.n_vertices()];
    visited[map.root_vertex() as usize] = Some(0);
    let mut parent: Vec<Option<u32>> = vec![None; m];
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut flags = vec![false; m];
    let mut next_inner = 1u32;
    let mut next_blossom = n as u32;

    // Clockwise walk over the growing tree: a first-seen edge pointing with
    // the walk becomes a stem at the current vertex, one pointing against
    // it is kept and descended. Edges at the hubs always point into them,
    // so the hubs are never entered.
    struct Frame {
        v_tree: u32,
        cur: HalfEdgeId,
        end: HalfEdgeId,
        started: bool,
    }
    let mut frames = vec![Frame {
        v_tree: 0,
        cur: map.sigma(root_half),
        end: map.sigma(root_half),
        started: false,
    }];
    while let Some(f) = frames.last_mut() {
        if f.started && f.cur == f.end {
            frames.pop();
            continue;
        }
        f.started = true;
        let h = f.cur;
        f.cur = map.sigma(h);
        let v_tree = f.v_tree;
        let e = (h / 2) as usize;
        if seen[e] {
            continue;
        }
        seen[e] = true;
        if ori[h as usize] {
            if next_blossom as usize >= m {
                return Err(ClosureError::NotClosure("too many stems".into()));
            }
            flags[next_blossom as usize] = true;
            parent[next_blossom as usize] = Some(v_tree);
            children[v_tree as usize].push(next_blossom);
            next_blossom += 1;
        } else {
            let w = map.head_of(h);
            if w == va || w == vb {
                return Err(ClosureError::NotClosure("kept edge enters a hub".into()));
            }
            if visited[w as usize].is_some() {
                return Err(ClosureError::NotClosure("kept edges close a cycle".into()));
            }
            if next_inner as usize >= n {
                return Err(ClosureError::NotClosure("too many kept edges".into()));
            }
            let wt = next_inner;
            next_inner += 1;
            visited[w as usize] = Some(wt);
            parent[wt as usize] = Some(v_tree);
            children[v_tree as usize].push(wt);
            let back = map.alpha(h);
            frames.push(Frame { v_tree: wt, cur: map.sigma(back), end: back, started: true });
        }
    }
    if next_inner as usize != n {
        return Err(ClosureError::NotClosure(
            "kept edges do not span the non-hub vertices".into(),
        ));
    }
    if next_blossom as usize != m {
        return Err(ClosureError::NotClosure("stem count mismatch".into()));
    }
    let tree = PlantedPlaneTree::new(parent, children)?;
    let bt = BlossomingTree::new(tree, flags, family)?;
    let ctr = bt.tree.contour();
    if !crate::blossoming::is_balanced(&bt, &ctr) {
        return Err(ClosureError::NotClosure("opened tree is not balanced".into()));
    }
    Ok(bt)
}

impl From<crate::plane_tree::TreeError> for ClosureError {
    fn from(e: crate::plane_tree::TreeError) -> Self {
        ClosureError::NotClosure(format!("opened structure is not a tree: {e}"))
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Samples a uniform rooted simple map with `n + 2` vertices: a uniform
/// tree is replanted at one of its two balanced corners chosen by coin
/// flip, then closed. Every rooted map arises from equally many
/// (tree, corner) outcomes, so the result is uniform. Also returns the
/// replanted tree.
pub fn sample_map(
    n: usize,
    family: MapFamily,
    rng: &mut impl rand::Rng,
) -> Result<(BlossomingTree, ClosureResult), ClosureError> {
    if n == 0 {
        return Err(ClosureError::TooSmall("need at least one inner vertex"));
    }
    if family == MapFamily::Quadrangulation && n == 1 {
        return Err(ClosureError::TooSmall(
            "the one-vertex quadrangulation tree closes onto a single face, not a sphere map",
        ));
    }
    let t = crate::blossoming::sample_blossoming_tree(n, family, rng);
    let ctr = t.tree.contour();
    let bc = balanced_corners(&t, &ctr);
    let xi = bc[usize::from(rng.gen::<bool>())];
    let rooted = if xi == 0 { t } else { t.reroot_at_corner(&ctr, xi) };
    let result = close_rooted(&rooted)?;
    Ok((rooted, result))
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

impl ClosureResult {
    /// The planar map encoding plus the carried-over fields.
    pub fn to_json_string(&self) -> String {
        let mut v: Value =
            serde_json::from_str(&self.map.to_json_string()).expect("map encodes to json");
        let obj = v.as_object_mut().expect("map encodes to an object");
        obj.insert(
            "lambda_star".into(),
            serde_json::to_value(&self.lambda_star).expect("labels encode"),
        );
        obj.insert("A".into(), Value::from(self.vertex_a));
        obj.insert("B".into(), Value::from(self.vertex_b));
        obj.insert(
            "tree_vertex_ids".into(),
            serde_json::to_value(&self.tree_vertex_ids).expect("ids encode"),
        );
        obj.insert(
            "inner_corner_image".into(),
            serde_json::to_value(&self.inner_corner_image).expect("corners encode"),
        );
        obj.insert(
            "tree_edges".into(),
            serde_json::to_value(&self.tree_edges).expect("flags encode"),
        );
        serde_json::to_string(&v).expect("json value encodes")
    }

    pub fn from_json_str(s: &str) -> Result<Self, ClosureError> {
        let map = HalfEdgeMap::from_json_str(s)?;
        let v: Value = serde_json::from_str(s).map_err(|e| ClosureError::Parse(e.to_string()))?;
        let get = |key: &str| -> Result<Value, ClosureError> {
            v.get(key).cloned().ok_or_else(|| ClosureError::Parse(format!("missing key {key}")))
        };
        let lambda_star: Vec<i64> = serde_json::from_value(get("lambda_star")?)
            .map_err(|e| ClosureError::Parse(e.to_string()))?;
        let vertex_a: VertexId = serde_json::from_value(get("A")?)
            .map_err(|e| ClosureError::Parse(e.to_string()))?;
        let vertex_b: VertexId = serde_json::from_value(get("B")?)
            .map_err(|e| ClosureError::Parse(e.to_string()))?;
        let tree_vertex_ids: Vec<VertexId> = serde_json::from_value(get("tree_vertex_ids")?)
            .map_err(|e| ClosureError::Parse(e.to_string()))?;
        let inner_corner_image: Vec<Option<HalfEdgeId>> =
            serde_json::from_value(get("inner_corner_image")?)
                .map_err(|e| ClosureError::Parse(e.to_string()))?;
        let tree_edges: Vec<bool> = serde_json::from_value(get("tree_edges")?)
            .map_err(|e| ClosureError::Parse(e.to_string()))?;
        if lambda_star.len() != map.n_half_edges() {
            return Err(ClosureError::Parse("lambda_star length mismatch".into()));
        }
        if tree_edges.len() != map.n_edges() {
            return Err(ClosureError::Parse("tree_edges length mismatch".into()));
        }
        if vertex_a as usize >= map.n_vertices() || vertex_b as usize >= map.n_vertices() {
            return Err(ClosureError::Parse("hub vertex out of range".into()));
        }
        if inner_corner_image
            .iter()
            .flatten()
            .any(|&h| h as usize >= map.n_half_edges())
        {
            return Err(ClosureError::Parse("corner image out of range".into()));
        }
        Ok(ClosureResult {
            map,
            lambda_star,
            vertex_a,
            vertex_b,
            tree_vertex_ids,
            inner_corner_image,
            tree_edges,
        })
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blossoming::{
        count_balanced, enumerate_trees, is_balanced, sample_blossoming_tree, unclosed_stems,
        vertex_labels,
    };
    use crate::planar_map::tests::double_triangle_oriented;
    use crate::rng::stream_rng;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use std::collections::HashSet;

    /// Half-edge correspondence between two equal rooted maps, propagated
    /// from root to root along sigma and alpha.
    fn rooted_half_edge_iso(a: &HalfEdgeMap, b: &HalfEdgeMap) -> Vec<HalfEdgeId> {
        assert_eq!(a.n_half_edges(), b.n_half_edges());
        let mut iso = vec![u32::MAX; a.n_half_edges()];
        let mut stack = vec![(a.root_half_edge(), b.root_half_edge())];
        while let Some((x, y)) = stack.pop() {
            if iso[x as usize] != u32::MAX {
                assert_eq!(iso[x as usize], y, "maps are not equal as rooted maps");
                continue;
            }
            iso[x as usize] = y;
            stack.push((a.sigma(x), b.sigma(y)));
            stack.push((a.alpha(x), b.alpha(y)));
        }
        iso
    }

    fn every_balanced_rooting(t: &BlossomingTree) -> Vec<BlossomingTree> {
        let ctr = t.tree.contour();
        let bc = balanced_corners(t, &ctr);
        let mut out = Vec::new();
        for &c in &[bc[0], bc[1]] {
            out.push(if c == 0 { t.clone() } else { t.reroot_at_corner(&ctr, c) });
        }
        out
    }

    #[test]
    fn one_vertex_triangulation_tree_closes_to_the_double_triangle() {
        let trees = enumerate_trees(1, MapFamily::Triangulation).unwrap();
        assert_eq!(trees.len(), 1);
        let r = close(&trees[0], 0).unwrap();
        let golden = double_triangle_oriented();
        assert_eq!(r.map.to_json_string(), golden.to_json_string());
        assert_eq!(r.lambda_star, vec![3, 0, 2, 2, 1, 1]);
        assert_eq!(r.vertex_a, 1);
        assert_eq!(r.vertex_b, 2);
        assert_eq!(r.tree_vertex_ids, vec![0]);
        assert_eq!(r.inner_corner_image, vec![Some(2), None, Some(0), None]);
        assert_eq!(r.tree_edges, vec![false, false, false]);
    }

    #[test]
    fn closing_at_the_second_balanced_corner_of_the_one_vertex_tree_matches() {
        // The smallest tree is symmetric, so its two balanced rootings give
        // the same rooted map.
        let trees = enumerate_trees(1, MapFamily::Triangulation).unwrap();
        let ctr = trees[0].tree.contour();
        let bc = balanced_corners(&trees[0], &ctr);
        assert_eq!(bc, [0, 2]);
        let a = close(&trees[0], 0).unwrap();
        let b = close(&trees[0], 2).unwrap();
        assert_eq!(a.map.canonical_code(), b.map.canonical_code());
    }

    #[test]
    fn two_vertex_triangulation_trees_close_to_the_tetrahedron() {
        let trees = enumerate_trees(2, MapFamily::Triangulation).unwrap();
        assert_eq!(trees.len(), 3);
        let tetra = crate::planar_map::tests::tetrahedron();
        let ori = tetra.minimal_orientation(MapFamily::Triangulation).unwrap();
        let tetra = tetra.with_orientation(ori).unwrap();
        let want = tetra.canonical_code();
        let mut closed = 0;
        for t in &trees {
            for rooted in every_balanced_rooting(t) {
                if !is_balanced(&rooted, &rooted.tree.contour()) {
                    continue;
                }
                let r = close(&rooted, 0).unwrap();
                assert_eq!(r.map.n_vertices(), 4);
                assert_eq!(r.map.n_faces(), 4);
                assert_eq!(r.map.canonical_code(), want);
                closed += 1;
            }
        }
        assert_eq!(closed, 6, "both rootings of every tree close");
    }

    #[test]
    fn two_vertex_quadrangulation_tree_closes_to_the_double_square() {
        let trees = enumerate_trees(2, MapFamily::Quadrangulation).unwrap();
        assert_eq!(trees.len(), 2);
        let mut seen = HashSet::new();
        for t in &trees {
            for rooted in every_balanced_rooting(t) {
                let r = close(&rooted, 0).unwrap();
                assert_eq!(r.map.n_vertices(), 4);
                assert_eq!(r.map.n_edges(), 4);
                assert_eq!(r.map.face_degrees(), vec![4, 4]);
                assert!(r.map.is_simple());
                assert!(r.map.is_minimal().unwrap());
                seen.insert(r.map.canonical_code());
            }
        }
        assert_eq!(seen.len(), 1, "one rooted simple quadrangulation on 4 vertices");
    }

    #[test]
    fn quadrangulation_closure_rejects_the_one_vertex_tree() {
        let trees = enumerate_trees(1, MapFamily::Quadrangulation).unwrap();
        assert_eq!(trees.len(), 1);
        match close(&trees[0], 0) {
            Err(ClosureError::TooSmall(_)) => {}
            other => panic!("expected TooSmall, got {other:?}"),
        }
    }

    #[test]
    fn closing_rejects_unbalanced_corners() {
        let trees = enumerate_trees(2, MapFamily::Triangulation).unwrap();
        for t in &trees {
            let ctr = t.tree.contour();
            let bc = balanced_corners(t, &ctr);
            for c in 0..ctr.n_corners() {
                let res = close(t, c);
                if c == bc[0] || c == bc[1] {
                    assert!(res.is_ok());
                } else {
                    assert!(matches!(res, Err(ClosureError::NotBalanced(_))));
                }
            }
        }
    }

    fn check_closure_invariants(rooted: &BlossomingTree, r: &ClosureResult) {
        let n = rooted.n_inner();
        let family = rooted.family;
        assert_eq!(r.map.n_vertices(), n + 2);
        assert!(r.map.is_simple());
        let deg = family.closure_arity() + 1;
        let degs = r.map.face_degrees();
        assert!(degs.iter().all(|&d| d == deg));
        assert!(r.map.check_orientation(family).ok());
        assert!(r.map.is_minimal().unwrap());
        assert_eq!(r.lambda_star[r.map.root_half_edge() as usize], 2);
        assert!(r.lambda_star.iter().all(|&l| l >= 0));
        // Hub corner labels: one 0 at A on the root face, the rest 1;
        // one 1 at B on the root face, the rest 2.
        let mut a_labels: Vec<i64> = (0..r.map.n_half_edges() as u32)
            .filter(|&h| r.map.vertex_of(h) == r.vertex_a)
            .map(|h| r.lambda_star[h as usize])
            .collect();
        a_labels.sort_unstable();
        assert_eq!(a_labels[0], 0);
        assert!(a_labels[1..].iter().all(|&l| l == 1));
        let mut b_labels: Vec<i64> = (0..r.map.n_half_edges() as u32)
            .filter(|&h| r.map.vertex_of(h) == r.vertex_b)
            .map(|h| r.lambda_star[h as usize])
            .collect();
        b_labels.sort_unstable();
        assert_eq!(b_labels[0], 1);
        assert!(b_labels[1..].iter().all(|&l| l == 2));
        // Splitting corners preserves per-vertex label minima.
        let vl = vertex_labels(rooted);
        let mut min_at = vec![i64::MAX; n];
        for h in 0..r.map.n_half_edges() as u32 {
            let v = r.map.vertex_of(h) as usize;
            if v < n {
                min_at[v] = min_at[v].min(r.lambda_star[h as usize]);
            }
        }
        for v in 0..n {
            assert_eq!(min_at[v], vl.y[v], "corner label minimum at vertex {v}");
        }
        assert_eq!(r.tree_vertex_ids, (0..n as u32).collect::<Vec<_>>());
        assert_eq!(r.tree_edges.len(), r.map.n_edges());
        assert_eq!(
            r.tree_edges.iter().filter(|&&b| b).count(),
            n - 1,
            "kept inner tree edges span the inner vertices"
        );
        for e in 0..r.map.n_edges() {
            if r.tree_edges[e] {
                let u = r.map.vertex_of(2 * e as u32);
                let w = r.map.head_of(2 * e as u32);
                assert!((u as usize) < n && (w as usize) < n);
            }
        }
    }

    #[test]
    fn closure_invariants_hold_exhaustively() {
        for (family, lo) in [(MapFamily::Triangulation, 1), (MapFamily::Quadrangulation, 2)] {
            for n in lo..=4 {
                for t in &enumerate_trees(n, family).unwrap() {
                    for rooted in every_balanced_rooting(t) {
                        let r = close(&rooted, 0).unwrap();
                        check_closure_invariants(&rooted, &r);
                    }
                }
            }
        }
    }

    #[test]
    fn stack_engine_agrees_with_the_sweep_oracle() {
        let mut rng = stream_rng(0x5eed_c105, 0);
        let mut check = |t: &BlossomingTree, rng: &mut rand_chacha::ChaCha8Rng| {
            let ctr = t.tree.contour();
            let a = partial_closure_stack(t, &ctr, None);
            let n_stems = a.unclosed.len() + a.targets.len();
            let mut order: Vec<usize> = (0..n_stems).collect();
            for pass in 0..3 {
                if pass > 0 {
                    order.shuffle(rng);
                }
                let b = partial_closure_sweep(t, &ctr, &order);
                assert_eq!(a.sc.next_cw, b.sc.next_cw);
                assert_eq!(a.sc.vertex_of, b.sc.vertex_of);
                assert_eq!(a.unclosed, b.unclosed);
            }
        };
        for (family, lo) in [(MapFamily::Triangulation, 1), (MapFamily::Quadrangulation, 1)] {
            for n in lo..=4 {
                for t in &enumerate_trees(n, family).unwrap() {
                    check(t, &mut rng);
                }
            }
            for _ in 0..40 {
                let n = rng.gen_range(5..=60);
                let t = sample_blossoming_tree(n, family, &mut rng);
                check(&t, &mut rng);
            }
        }
    }

    #[test]
    fn stack_engine_agrees_with_the_successor_scans() {
        let mut rng = stream_rng(0x5eed_c106, 0);
        let mut check = |t: &BlossomingTree| {
            let ctr = t.tree.contour();
            let lab = corner_labelling(t, &ctr);
            let pc = partial_closure_stack(t, &ctr, None);
            let closed: HashMap<usize, HalfEdgeId> = pc.targets.iter().copied().collect();
            let unclosed: HashSet<usize> = pc.unclosed.iter().map(|&(c, _)| c).collect();
            for c in 0..ctr.n_corners() {
                if !t.is_blossom[ctr.corner_vertex(c) as usize] {
                    continue;
                }
                let scan = successor(t, &lab, c).unwrap();
                let count = successor_by_counting(t, &ctr, c);
                assert_eq!(scan, count, "label scan and counting scan at corner {c}");
                match scan {
                    None => assert!(unclosed.contains(&c), "corner {c} should survive"),
                    Some(s) => {
                        let target = closed[&c];
                        assert_eq!(
                            pc.sc.vertex_of[target as usize],
                            ctr.corner_vertex(s),
                            "completion target vertex at corner {c}"
                        );
                    }
                }
            }
            assert_eq!(closed.len() + unclosed.len(), pc.targets.len() + pc.unclosed.len());
        };
        for (family, lo) in [(MapFamily::Triangulation, 1), (MapFamily::Quadrangulation, 1)] {
            for n in lo..=4 {
                for t in &enumerate_trees(n, family).unwrap() {
                    check(t);
                }
            }
            for _ in 0..30 {
                let n = rng.gen_range(5..=100);
                let t = sample_blossoming_tree(n, family, &mut rng);
                check(&t);
            }
        }
    }

    #[test]
    fn stack_engine_agrees_with_the_balance_scanner() {
        let mut rng = stream_rng(0x5eed_c107, 0);
        let mut check = |t: &BlossomingTree| {
            let ctr = t.tree.contour();
            let pc = partial_closure_stack(t, &ctr, None);
            let mine: Vec<usize> = pc.unclosed.iter().map(|&(c, _)| c).collect();
            let theirs: Vec<usize> = unclosed_stems(t, &ctr).iter().map(|&(c, _)| c).collect();
            assert_eq!(mine, theirs);
        };
        for (family, lo) in [(MapFamily::Triangulation, 1), (MapFamily::Quadrangulation, 1)] {
            for n in lo..=4 {
                for t in &enumerate_trees(n, family).unwrap() {
                    check(t);
                }
            }
            for _ in 0..30 {
                let n = rng.gen_range(5..=100);
                let t = sample_blossoming_tree(n, family, &mut rng);
                check(&t);
            }
        }
    }

    #[test]
    fn closure_is_injective_across_balanced_rootings() {
        for (family, lo) in [(MapFamily::Triangulation, 1), (MapFamily::Quadrangulation, 2)] {
            for n in lo..=4 {
                let trees = enumerate_trees(n, family).unwrap();
                let mut map_to_tree: HashMap<Vec<u32>, Vec<u8>> = HashMap::new();
                let mut tree_codes = HashSet::new();
                for t in &trees {
                    for rooted in every_balanced_rooting(t) {
                        let tc = rooted.canonical_code();
                        tree_codes.insert(tc.clone());
                        let mc = close(&rooted, 0).unwrap().map.canonical_code();
                        match map_to_tree.entry(mc) {
                            std::collections::hash_map::Entry::Occupied(e) => {
                                assert_eq!(e.get(), &tc, "two trees closed to one map");
                            }
                            std::collections::hash_map::Entry::Vacant(e) => {
                                e.insert(tc);
                            }
                        }
                    }
                }
                assert_eq!(map_to_tree.len(), tree_codes.len());
                assert_eq!(
                    map_to_tree.len(),
                    count_balanced(&trees),
                    "distinct rooted maps match balanced rootings at n={n}"
                );
            }
        }
    }

    #[test]
    fn opening_inverts_closing_exhaustively() {
        for (family, lo) in [(MapFamily::Triangulation, 1), (MapFamily::Quadrangulation, 2)] {
            for n in lo..=4 {
                for t in &enumerate_trees(n, family).unwrap() {
                    for rooted in every_balanced_rooting(t) {
                        let r = close(&rooted, 0).unwrap();
                        let back = open(&r.map, family).unwrap();
                        assert_eq!(back.canonical_code(), rooted.canonical_code());
                    }
                }
            }
        }
    }

    #[test]
    fn closing_inverts_opening_on_random_maps() {
        let mut rng = stream_rng(0x5eed_c108, 0);
        for family in [MapFamily::Triangulation, MapFamily::Quadrangulation] {
            for &n in &[10usize, 37, 120, 200] {
                for _ in 0..20 {
                    let (_, r) = sample_map(n, family, &mut rng).unwrap();
                    let t = open(&r.map, family).unwrap();
                    let again = close(&t, 0).unwrap();
                    assert_eq!(again.map.canonical_code(), r.map.canonical_code());
                    // Opening renumbers vertices in discovery order, so
                    // compare the labels through the rooted isomorphism.
                    let iso = rooted_half_edge_iso(&r.map, &again.map);
                    for h in 0..r.map.n_half_edges() {
                        assert_eq!(r.lambda_star[h], again.lambda_star[iso[h] as usize]);
                    }
                }
            }
        }
    }

    #[test]
    fn random_closures_pass_all_checks() {
        let mut rng = stream_rng(0x5eed_c109, 0);
        for family in [MapFamily::Triangulation, MapFamily::Quadrangulation] {
            for _ in 0..60 {
                let n = rng.gen_range(2..=100);
                let (rooted, r) = sample_map(n, family, &mut rng).unwrap();
                check_closure_invariants(&rooted, &r);
            }
        }
    }

    #[test]
    fn opening_rejects_what_cannot_be_a_closure() {
        // No orientation at all.
        let plain = double_triangle_oriented().without_orientation();
        assert!(matches!(
            open(&plain, MapFamily::Triangulation),
            Err(ClosureError::NotClosure(_))
        ));
        // Wrong family profile.
        let golden = double_triangle_oriented();
        assert!(open(&golden, MapFamily::Quadrangulation).is_err());
        // Valid profile but a counterclockwise cycle: search the cube's
        // orientation lattice for a non-minimal 2-orientation.
        let cube = crate::planar_map::tests::cube();
        let ne = cube.n_edges();
        let mut rejected = 0;
        let mut accepted = 0;
        for mask in 0..(1u32 << ne) {
            let ori: Vec<bool> =
                (0..2 * ne).map(|h| ((mask >> (h / 2)) & 1 == 1) == (h % 2 == 0)).collect();
            let m = cube.clone().with_orientation(ori).unwrap();
            if !m.check_orientation(MapFamily::Quadrangulation).ok() {
                continue;
            }
            if m.is_minimal().unwrap() {
                let t = open(&m, MapFamily::Quadrangulation).unwrap();
                assert!(is_balanced(&t, &t.tree.contour()));
                let again = close(&t, 0).unwrap();
                assert_eq!(again.map.canonical_code(), m.canonical_code());
                accepted += 1;
            } else {
                assert!(matches!(
                    open(&m, MapFamily::Quadrangulation),
                    Err(ClosureError::NotClosure(_))
                ));
                rejected += 1;
            }
        }
        assert_eq!(accepted, 1, "the cube has one minimal 2-orientation");
        assert!(rejected > 0, "the cube has non-minimal 2-orientations");
    }

    #[test]
    fn marked_closure_maps_inner_corners_injectively() {
        for (family, lo) in [(MapFamily::Triangulation, 1), (MapFamily::Quadrangulation, 2)] {
            for n in lo..=4 {
                for t in &enumerate_trees(n, family).unwrap() {
                    for rooted in every_balanced_rooting(t) {
                        let r = close(&rooted, 0).unwrap();
                        let ctr = rooted.tree.contour();
                        let expected = match family {
                            MapFamily::Triangulation => 4 * n - 2,
                            MapFamily::Quadrangulation => 3 * n - 2,
                        };
                        let images: Vec<HalfEdgeId> =
                            r.inner_corner_image.iter().flatten().copied().collect();
                        assert_eq!(images.len(), expected);
                        let distinct: HashSet<_> = images.iter().collect();
                        assert_eq!(distinct.len(), expected, "corner map is injective");
                        for i in 0..ctr.n_corners() {
                            let inner = !rooted.is_blossom[ctr.corner_vertex(i) as usize];
                            assert_eq!(r.inner_corner_image[i].is_some(), inner);
                        }
                        // The root corner maps to the map's root corner.
                        assert_eq!(r.inner_corner_image[0], Some(r.map.root_half_edge()));
                    }
                }
            }
        }
    }

    #[test]
    fn marked_closure_shifts_the_marked_corner_with_the_replanting() {
        let trees = enumerate_trees(3, MapFamily::Triangulation).unwrap();
        for t in &trees {
            let ctr = t.tree.contour();
            let bc = balanced_corners(t, &ctr);
            let xi = bc[1];
            for xi_hat in 0..ctr.n_corners() {
                if t.is_blossom[ctr.corner_vertex(xi_hat) as usize] {
                    assert!(close_marked(t, xi, xi_hat).is_err());
                    continue;
                }
                let (r, image) = close_marked(t, xi, xi_hat).unwrap();
                let k = ctr.n_corners();
                let shifted = (xi_hat + k - xi) % k;
                assert_eq!(Some(image), r.inner_corner_image[shifted]);
            }
        }
    }

    #[test]
    fn triangulation_trees_have_four_n_minus_two_inner_corners() {
        for n in 1..=5 {
            for t in &enumerate_trees(n, MapFamily::Triangulation).unwrap() {
                let ctr = t.tree.contour();
                let inner = (0..ctr.n_corners())
                    .filter(|&i| !t.is_blossom[ctr.corner_vertex(i) as usize])
                    .count();
                assert_eq!(inner, 4 * n - 2);
            }
        }
    }

    #[test]
    fn closure_round_trips_through_json() {
        let mut rng = stream_rng(0x5eed_c10a, 0);
        for family in [MapFamily::Triangulation, MapFamily::Quadrangulation] {
            let (_, r) = sample_map(9, family, &mut rng).unwrap();
            let s = r.to_json_string();
            let back = ClosureResult::from_json_str(&s).unwrap();
            assert_eq!(back.map.to_json_string(), r.map.to_json_string());
            assert_eq!(back.lambda_star, r.lambda_star);
            assert_eq!(back.vertex_a, r.vertex_a);
            assert_eq!(back.vertex_b, r.vertex_b);
            assert_eq!(back.tree_vertex_ids, r.tree_vertex_ids);
            assert_eq!(back.inner_corner_image, r.inner_corner_image);
            assert_eq!(back.tree_edges, r.tree_edges);
        }
    }

    #[test]
    fn map_sampling_is_uniform_at_small_sizes() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let cases = [
            (MapFamily::Triangulation, 5usize, 68usize, 100_000usize),
            (MapFamily::Quadrangulation, 5, 22, 50_000),
        ];
        for (case_idx, &(family, n, want_cells, draws)) in cases.iter().enumerate() {
            let trees = enumerate_trees(n, family).unwrap();
            let mut cells: HashMap<Vec<u32>, usize> = HashMap::new();
            for t in &trees {
                for rooted in every_balanced_rooting(t) {
                    cells.insert(close(&rooted, 0).unwrap().map.canonical_code(), 0);
                }
            }
            assert_eq!(cells.len(), want_cells);
            let mut rng = stream_rng(0x5eed_c10b, case_idx as u64);
            for _ in 0..draws {
                let (_, r) = sample_map(n, family, &mut rng).unwrap();
                let code = r.map.canonical_code();
                *cells.get_mut(&code).expect("sampled map is one of the enumerated maps") += 1;
            }
            let expected = draws as f64 / want_cells as f64;
            let stat: f64 = cells
                .values()
                .map(|&c| {
                    let d = c as f64 - expected;
                    d * d / expected
                })
                .sum();
            let dist = ChiSquared::new((want_cells - 1) as f64).unwrap();
            let p = 1.0 - dist.cdf(stat);
            assert!(
                p > 1e-3,
                "{} n={n}: chi-square {stat:.2} (df {}), p={p:.5}",
                family.name(),
                want_cells - 1
            );
        }
    }
}
