//! Blossoming trees: plane trees whose inner vertices each carry a fixed
//! number of degree-one "blossoms" (2 for the triangulation family, 1 for the
//! quadrangulation family), together with the corner labelling, balanced
//! rootings, the displacement-vector bijection, and exact uniform samplers.

use crate::plane_tree::{ContourSequence, PlantedPlaneTree, TreeError, VertexId};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapFamily {
    Triangulation,
    Quadrangulation,
}

impl MapFamily {
    /// Blossoms carried by each inner vertex.
    pub fn stems_per_vertex(self) -> usize {
        match self {
            MapFamily::Triangulation => 2,
            MapFamily::Quadrangulation => 1,
        }
    }

    /// Label increase when the contour returns from a blossom.
    pub fn bud_step(self) -> i64 {
        match self {
            MapFamily::Triangulation => 1,
            MapFamily::Quadrangulation => 2,
        }
    }

    /// Face edges a local closure consumes (one less than the face degree).
    pub fn closure_arity(self) -> usize {
        match self {
            MapFamily::Triangulation => 2,
            MapFamily::Quadrangulation => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MapFamily::Triangulation => "tri",
            MapFamily::Quadrangulation => "quad",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlossomError {
    Structure(String),
    Guard { n: usize, max: usize },
    InvalidDisplacements(String),
    Tree(TreeError),
}

impl fmt::Display for BlossomError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlossomError::Structure(s) => write!(f, "malformed blossoming tree: {s}"),
            BlossomError::Guard { n, max } => {
                write!(f, "enumeration guard: n = {n} exceeds limit {max}")
            }
            BlossomError::InvalidDisplacements(s) => write!(f, "invalid displacements: {s}"),
            BlossomError::Tree(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BlossomError {}

impl From<TreeError> for BlossomError {
    fn from(e: TreeError) -> Self {
        BlossomError::Tree(e)
    }
}

/// A planted blossoming tree. Inner vertices are numbered 0..n and the
/// blossoms n..(n + stems); the root is inner. Blossom ids follow
/// (vertex, slot) order, so structurally equal trees compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlossomingTree {
    pub tree: PlantedPlaneTree,
    pub is_blossom: Vec<bool>,
    pub family: MapFamily,
}

#[derive(Serialize, Deserialize)]
struct BlossomJson {
    parent: Vec<i64>,
    child_order: Vec<Vec<u32>>,
    root_corner: usize,
    is_blossom: Vec<bool>,
}

impl BlossomingTree {
    pub fn new(
        tree: PlantedPlaneTree,
        is_blossom: Vec<bool>,
        family: MapFamily,
    ) -> Result<Self, BlossomError> {
        if is_blossom.len() != tree.n_vertices() {
            return Err(BlossomError::Structure("is_blossom length mismatch".into()));
        }
        let n_inner = is_blossom.iter().filter(|&&b| !b).count();
        let k = family.stems_per_vertex();
        if is_blossom[tree.root() as usize] {
            return Err(BlossomError::Structure("root is a blossom".into()));
        }
        for v in 0..tree.n_vertices() as u32 {
            let inner = !is_blossom[v as usize];
            if inner != ((v as usize) < n_inner) {
                return Err(BlossomError::Structure(
                    "inner vertices must be numbered before blossoms".into(),
                ));
            }
            if inner {
                let stems =
                    tree.children(v).iter().filter(|&&c| is_blossom[c as usize]).count();
                if stems != k {
                    return Err(BlossomError::Structure(format!(
                        "inner vertex {v} has {stems} stems, expected {k}"
                    )));
                }
            } else if !tree.children(v).is_empty() {
                return Err(BlossomError::Structure(format!("blossom {v} has children")));
            }
        }
        Ok(BlossomingTree { tree, is_blossom, family })
    }

    pub fn n_inner(&self) -> usize {
        self.is_blossom.iter().filter(|&&b| !b).count()
    }

    pub fn is_inner(&self, v: VertexId) -> bool {
        !self.is_blossom[v as usize]
    }

    /// Reroots at the given contour corner (which must sit at an inner
    /// vertex) and renumbers blossoms back into canonical (vertex, slot)
    /// order.
    pub fn reroot_at_corner(&self, ctr: &ContourSequence, corner: usize) -> BlossomingTree {
        assert!(
            !self.is_blossom[ctr.corner_vertex(corner) as usize],
            "root corner must be inner"
        );
        let tree = self.tree.reroot_at_corner(ctr, corner);
        canonicalize_blossom_ids(&tree, &self.is_blossom, self.family)
    }

    /// Structural code: '(' subtree ')' per inner vertex, '*' per blossom,
    /// children in order. Equal codes mean equal planted trees.
    pub fn canonical_code(&self) -> Vec<u8> {
        let mut out = Vec::new();
        fn rec(t: &BlossomingTree, v: VertexId, out: &mut Vec<u8>) {
            if t.is_blossom[v as usize] {
                out.push(b'*');
                return;
            }
            out.push(b'(');
            for &c in t.tree.children(v) {
                rec(t, c, out);
            }
            out.push(b')');
        }
        rec(self, self.tree.root(), &mut out);
        out
    }

    pub fn to_json_string(&self) -> String {
        let js = BlossomJson {
            parent: (0..self.tree.n_vertices() as u32)
                .map(|v| self.tree.parent(v).map_or(-1, |p| p as i64))
                .collect(),
            child_order: (0..self.tree.n_vertices() as u32)
                .map(|v| self.tree.children(v).to_vec())
                .collect(),
            root_corner: 0,
            is_blossom: self.is_blossom.clone(),
        };
        serde_json::to_string(&js).expect("serialization cannot fail")
    }

    pub fn from_json_str(s: &str, family: MapFamily) -> Result<Self, BlossomError> {
        let js: BlossomJson =
            serde_json::from_str(s).map_err(|e| BlossomError::Structure(e.to_string()))?;
        let tree = PlantedPlaneTree::from_parts(&js.parent, js.child_order, js.root_corner)?;
        BlossomingTree::new(tree, js.is_blossom, family)
    }
}

fn canonicalize_blossom_ids(
    tree: &PlantedPlaneTree,
    is_blossom: &[bool],
    family: MapFamily,
) -> BlossomingTree {
    let total = tree.n_vertices();
    let n_inner = is_blossom.iter().filter(|&&b| !b).count();
    // Inner ids are preserved; blossoms renumbered by (owner, slot).
    let mut remap = vec![u32::MAX; total];
    for v in 0..total as u32 {
        if !is_blossom[v as usize] {
            remap[v as usize] = v;
        }
    }
    let mut next = n_inner as u32;
    for v in 0..total as u32 {
        if is_blossom[v as usize] {
            continue;
        }
        for &c in tree.children(v) {
            if is_blossom[c as usize] {
                remap[c as usize] = next;
                next += 1;
            }
        }
    }
    let mut parent = vec![None; total];
    let mut children = vec![Vec::new(); total];
    let mut flags = vec![false; total];
    for v in 0..total as u32 {
        let nv = remap[v as usize];
        flags[nv as usize] = is_blossom[v as usize];
        parent[nv as usize] = tree.parent(v).map(|p| remap[p as usize]);
        children[nv as usize] = tree.children(v).iter().map(|&c| remap[c as usize]).collect();
    }
    let tree = PlantedPlaneTree::new(parent, children).expect("relabelling preserves validity");
    BlossomingTree::new(tree, flags, family).expect("relabelling preserves validity")
}

/// Corner labels in contour order: label 2 at the root corner, then per step
/// −1 between inner vertices, 0 arriving at a blossom, +1 (tri) or +2 (quad)
/// returning from one. Over a full lap the label drifts by +2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CornerLabelling {
    pub labels: Vec<i64>,
}

impl CornerLabelling {
    /// Continued label when the walk arrives back at the root corner; always
    /// equals 2 + 2 = 4.
    pub fn closing_label(&self, t: &BlossomingTree, ctr: &ContourSequence) -> i64 {
        let k = ctr.n_corners();
        self.labels[k - 1]
            + step(t, ctr.corner_vertex(k - 1), ctr.corner_vertex(k), t.family)
    }
}

fn step(t: &BlossomingTree, from: VertexId, to: VertexId, family: MapFamily) -> i64 {
    match (t.is_blossom[from as usize], t.is_blossom[to as usize]) {
        (false, false) => -1,
        (false, true) => 0,
        (true, false) => family.bud_step(),
        (true, true) => unreachable!("blossoms are never adjacent"),
    }
}

pub fn corner_labelling(t: &BlossomingTree, ctr: &ContourSequence) -> CornerLabelling {
    let k = ctr.n_corners();
    let mut labels = Vec::with_capacity(k);
    labels.push(2);
    for i in 0..k - 1 {
        let s = step(t, ctr.corner_vertex(i), ctr.corner_vertex(i + 1), t.family);
        labels.push(labels[i] + s);
    }
    CornerLabelling { labels }
}

/// Number of distinct stem edges flanking corner i.
fn stems_at_corner(t: &BlossomingTree, ctr: &ContourSequence, i: usize) -> usize {
    let p = ctr.prev_vertex(i);
    let nx = ctr.next_vertex(i);
    if p == nx {
        usize::from(t.is_blossom[p as usize])
    } else {
        usize::from(t.is_blossom[p as usize]) + usize::from(t.is_blossom[nx as usize])
    }
}

/// The two corners at which replanting yields a balanced tree, in contour
/// order. The one-vertex quadrangulation tree degenerates to a single
/// qualifying corner, reported twice.
///
/// For the two-stem family a corner qualifies iff its flanking edges are two
/// distinct stems and no label of the replanted tree drops below 2. For the
/// one-stem family that test is necessary but not sufficient (symmetric trees
/// admit extra corners passing it), so balance is read off the partial
/// closure instead: around the unclosable face, consecutive unclosed stems
/// are separated by two edges except at exactly two places with a single
/// edge, and the qualifying corners sit just before the stems those single
/// edges lead into.
pub fn balanced_corners(t: &BlossomingTree, ctr: &ContourSequence) -> [usize; 2] {
    match t.family {
        MapFamily::Triangulation => tri_balanced_pair(t, ctr),
        MapFamily::Quadrangulation => quad_balanced_pair(t, ctr),
    }
}

fn tri_balanced_pair(t: &BlossomingTree, ctr: &ContourSequence) -> [usize; 2] {
    let lab = corner_labelling(t, ctr);
    let k = ctr.n_corners();
    // Replanting at corner j shifts labels so that j gets 2; the wrapped
    // prefix continues with drift +2. Corner j qualifies iff it is a global
    // minimum of the continued labelling started at j.
    let mut suffix_min = vec![i64::MAX; k + 1];
    for j in (0..k).rev() {
        suffix_min[j] = suffix_min[j + 1].min(lab.labels[j]);
    }
    let mut found = Vec::new();
    let mut prefix_min = i64::MAX;
    for j in 0..k {
        let v = ctr.corner_vertex(j);
        if !t.is_blossom[v as usize]
            && stems_at_corner(t, ctr, j) == 2
            && suffix_min[j] >= lab.labels[j]
            && prefix_min.saturating_add(2) >= lab.labels[j]
        {
            found.push(j);
        }
        prefix_min = prefix_min.min(lab.labels[j]);
    }
    assert!(found.len() == 2, "expected exactly two balanced corners, found {}", found.len());
    [found[0], found[1]]
}

/// Unclosed stems after the full partial closure, in face order, as
/// (bud corner, edges separating the stem from the next unclosed stem).
/// Runs the cyclic reduction "stem + `arity` face edges -> one face edge"
/// to a fixed point with one linear pass plus a wrap-around cascade.
pub(crate) fn unclosed_stems(
    t: &BlossomingTree,
    ctr: &ContourSequence,
) -> Vec<(usize, usize)> {
    let arity = t.family.closure_arity();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut prefix = 0usize; // face edges seen before any open stem
    let k = ctr.n_corners();
    for s in 0..k {
        let a = ctr.corner_vertex(s);
        let b = ctr.next_vertex(s);
        if t.is_blossom[b as usize] {
            stack.push((s + 1, 0)); // bud corner of this stem
        } else if t.is_blossom[a as usize] {
            // returning from a blossom: not a face edge
        } else {
            let mut add = 1usize;
            while add > 0 {
                match stack.last_mut() {
                    None => {
                        prefix += add;
                        add = 0;
                    }
                    Some(top) => {
                        top.1 += 1;
                        add -= 1;
                        if top.1 == arity {
                            stack.pop();
                            add += 1; // the new edge feeds the stem below
                        }
                    }
                }
            }
        }
    }
    // Wrap the leading edges around to the last open stem and cascade.
    let mut pending = prefix;
    while pending > 0 {
        match stack.last_mut() {
            None => break,
            Some(top) => {
                let need = arity - top.1;
                if pending >= need {
                    pending -= need;
                    stack.pop();
                    pending += 1;
                } else {
                    top.1 += pending;
                    pending = 0;
                }
            }
        }
    }
    assert!(!stack.is_empty(), "partial closure consumed every stem");
    stack
}

fn quad_balanced_pair(t: &BlossomingTree, ctr: &ContourSequence) -> [usize; 2] {
    if t.n_inner() == 1 {
        return [0, 0];
    }
    let k = ctr.n_corners();
    let stems = unclosed_stems(t, ctr);
    // Exactly two gaps of one edge; each points at the corner just before
    // the next unclosed stem's bud.
    let mut found = Vec::new();
    for (i, &(_, gap)) in stems.iter().enumerate() {
        match gap {
            1 => {
                let (next_bud, _) = stems[(i + 1) % stems.len()];
                found.push((next_bud + k - 1) % k);
            }
            2 => {}
            other => panic!("unclosed stem with face gap {other}"),
        }
    }
    assert!(found.len() == 2, "expected exactly two single-edge gaps, found {}", found.len());
    found.sort_unstable();
    [found[0], found[1]]
}

/// Whether the tree as currently planted is balanced.
pub fn is_balanced(t: &BlossomingTree, ctr: &ContourSequence) -> bool {
    balanced_corners(t, ctr).contains(&0)
}

/// Plane tree with per-edge displacements, indexed by the child endpoint
/// (disp[root] = 0 by convention). Sibling blocks are non-decreasing with
/// values in {−1,0,1} (tri) or {−1,1} (quad).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidLabelledTree {
    pub tree: PlantedPlaneTree,
    pub disp: Vec<i64>,
    pub family: MapFamily,
}

impl ValidLabelledTree {
    pub fn validate(&self) -> Result<(), BlossomError> {
        if self.disp.len() != self.tree.n_vertices() {
            return Err(BlossomError::InvalidDisplacements("length mismatch".into()));
        }
        for v in 0..self.tree.n_vertices() as u32 {
            let mut prev = i64::MIN;
            for &c in self.tree.children(v) {
                let d = self.disp[c as usize];
                let ok = match self.family {
                    MapFamily::Triangulation => (-1..=1).contains(&d),
                    MapFamily::Quadrangulation => d == -1 || d == 1,
                };
                if !ok {
                    return Err(BlossomError::InvalidDisplacements(format!(
                        "edge to {c} has displacement {d}"
                    )));
                }
                if d < prev {
                    return Err(BlossomError::InvalidDisplacements(format!(
                        "sibling block of {v} not non-decreasing"
                    )));
                }
                prev = d;
            }
        }
        Ok(())
    }
}

/// Per-vertex labels: Y is the minimum corner label at the vertex, X the sum
/// of displacements from the root. Under a balanced rooting X = Y − 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexLabels {
    pub y: Vec<i64>,
    pub x: Vec<i64>,
}

/// Strips blossoms and converts stem positions to displacement vectors. The
/// input is replanted at `corner` (an inner corner) first.
pub fn to_valid_labelling(t: &BlossomingTree, corner: usize) -> ValidLabelledTree {
    let t = if corner == 0 {
        t.clone()
    } else {
        let ctr = t.tree.contour();
        t.reroot_at_corner(&ctr, corner)
    };
    let n = t.n_inner();
    let mut parent = vec![None; n];
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut disp = vec![0i64; n];
    let per_stem = 2 / t.family.stems_per_vertex() as i64; // 1 for tri, 2 for quad
    for v in 0..n as u32 {
        let mut stems_seen = 0i64;
        for &c in t.tree.children(v) {
            if t.is_blossom[c as usize] {
                stems_seen += 1;
            } else {
                parent[c as usize] = Some(v);
                children[v as usize].push(c);
                disp[c as usize] = per_stem * stems_seen - 1;
            }
        }
    }
    let tree = PlantedPlaneTree::new(parent, children).expect("inner tree is valid");
    ValidLabelledTree { tree, disp, family: t.family }
}

/// Reinserts stems from displacement vectors; inverse of to_valid_labelling.
pub fn from_valid_labelling(v: &ValidLabelledTree) -> Result<BlossomingTree, BlossomError> {
    v.validate()?;
    let n = v.tree.n_vertices();
    let k = v.family.stems_per_vertex() as i64;
    let per_stem = 2 / k; // label weight of one stem
    let mut parent: Vec<Option<u32>> = vec![None; n];
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
    for u in 0..n as u32 {
        parent[u as usize] = v.tree.parent(u);
    }
    let mut blossom_parent = Vec::new(); // owner of blossom i, in (vertex, slot) order
    for u in 0..n as u32 {
        let kids = v.tree.children(u);
        let mut list = Vec::new();
        let push_stems = |list: &mut Vec<(bool, u32)>, count: i64| {
            debug_assert!(count >= 0 && count % per_stem == 0);
            for _ in 0..count / per_stem {
                list.push((true, 0));
            }
        };
        if kids.is_empty() {
            for _ in 0..k {
                list.push((true, 0));
            }
        } else {
            push_stems(&mut list, v.disp[kids[0] as usize] + 1);
            for w in kids.windows(2) {
                list.push((false, w[0]));
                push_stems(&mut list, v.disp[w[1] as usize] - v.disp[w[0] as usize]);
            }
            list.push((false, *kids.last().unwrap()));
            push_stems(&mut list, 1 - v.disp[*kids.last().unwrap() as usize]);
        }
        let mut order = Vec::with_capacity(list.len());
        for (is_stem, child) in list {
            if is_stem {
                let id = (n + blossom_parent.len()) as u32;
                blossom_parent.push(u);
                order.push(id);
            } else {
                order.push(child);
            }
        }
        children[u as usize] = order;
    }
    let total = n + blossom_parent.len();
    let mut flags = vec![false; total];
    parent.resize(total, None);
    children.resize(total, Vec::new());
    for (i, &u) in blossom_parent.iter().enumerate() {
        flags[n + i] = true;
        parent[n + i] = Some(u);
    }
    let tree = PlantedPlaneTree::new(parent, children)?;
    BlossomingTree::new(tree, flags, v.family)
}

/// Y from corner minima on the blossoming tree; X from displacement sums on
/// the stripped tree. Both indexed by vertex id (X only for inner vertices).
pub fn vertex_labels(t: &BlossomingTree) -> VertexLabels {
    let ctr = t.tree.contour();
    let lab = corner_labelling(t, &ctr);
    let mut y = vec![i64::MAX; t.tree.n_vertices()];
    for (i, &l) in lab.labels.iter().enumerate() {
        let v = ctr.corner_vertex(i) as usize;
        y[v] = y[v].min(l);
    }
    let vl = to_valid_labelling(t, 0);
    let n = vl.tree.n_vertices();
    let mut x = vec![0i64; n];
    let inner_ctr = vl.tree.contour();
    for i in 1..inner_ctr.visits.len() {
        let v = inner_ctr.visits[i];
        if inner_ctr.first_visit[v as usize] == i {
            let p = vl.tree.parent(v).unwrap();
            x[v as usize] = x[p as usize] + vl.disp[v as usize];
        }
    }
    VertexLabels { y, x }
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// Geometric(1/2) on {0,1,...} from the trailing zeros of a uniform word.
fn geometric_half(rng: &mut impl Rng) -> u32 {
    loop {
        let u: u64 = rng.gen();
        if u != 0 {
            return u.trailing_zeros();
        }
    }
}

/// One draw from the offspring law: P{B=c} ∝ (c+1)(c+2)(1/4)^c for the
/// triangulation family, ∝ (c+1)(1/3)^c for the quadrangulation family.
/// Rejection from Geometric(1/2) with exact 128-bit integer comparisons.
pub fn sample_offspring(family: MapFamily, rng: &mut impl Rng) -> u32 {
    match family {
        MapFamily::Triangulation => loop {
            let c = geometric_half(rng);
            if c > 62 {
                continue;
            }
            // accept with probability (c+1)(c+2) / (3 · 2^c)
            let u: u64 = rng.gen();
            let lhs = (u as u128) * 3 * (1u128 << c);
            let rhs = ((c as u128 + 1) * (c as u128 + 2)) << 64;
            if lhs < rhs {
                return c;
            }
        },
        MapFamily::Quadrangulation => loop {
            let c = geometric_half(rng);
            if c > 38 {
                continue;
            }
            // accept with probability 3(c+1)2^c / (4 · 3^c)
            let u: u64 = rng.gen();
            let lhs = (u as u128) * 4 * 3u128.pow(c);
            let rhs = ((3 * (c as u128 + 1)) << c) << 64;
            if lhs < rhs {
                return c;
            }
        },
    }
}

/// Galton-Watson tree with the family's offspring law conditioned on having
/// exactly n vertices: i.i.d. draws are rejected until they sum to n−1, then
/// the cycle lemma picks the unique rotation that forms a preorder sequence.
pub fn sample_gw_tree(n: usize, family: MapFamily, rng: &mut impl Rng) -> PlantedPlaneTree {
    assert!(n >= 1);
    if n == 1 {
        return PlantedPlaneTree::singleton();
    }
    let mut b = vec![0u32; n];
    loop {
        let mut sum = 0usize;
        for x in b.iter_mut() {
            *x = sample_offspring(family, rng);
            sum += *x as usize;
        }
        if sum == n - 1 {
            break;
        }
    }
    // First position attaining the minimal prefix sum of (b_i − 1); the
    // rotation starting just after it is the unique valid preorder.
    let mut s = 0i64;
    let mut min = i64::MAX;
    let mut argmin = 0usize;
    for (i, &x) in b.iter().enumerate() {
        s += x as i64 - 1;
        if s < min {
            min = s;
            argmin = i;
        }
    }
    b.rotate_left((argmin + 1) % n);
    tree_from_preorder_offspring(&b)
}

/// Builds the planted tree whose preorder offspring sequence is `b`.
fn tree_from_preorder_offspring(b: &[u32]) -> PlantedPlaneTree {
    let n = b.len();
    let mut parent: Vec<Option<u32>> = vec![None; n];
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut stack: Vec<(u32, u32)> = vec![(0, b[0])]; // (vertex, children still owed)
    for v in 1..n as u32 {
        while let Some(&(_, 0)) = stack.last() {
            stack.pop();
        }
        let &mut (p, ref mut owed) = stack.last_mut().expect("preorder sequence is a valid tree");
        *owed -= 1;
        parent[v as usize] = Some(p);
        children[p as usize].push(v);
        stack.push((v, b[v as usize]));
    }
    debug_assert!(stack.iter().all(|&(_, owed)| owed == 0) || n == 1);
    PlantedPlaneTree::new(parent, children).expect("preorder sequence is a valid tree")
}

/// Inserts the family's stems at each vertex, uniformly among the
/// C(c+k, k) interleavings with the c children.
pub fn attach_stems(
    tree: &PlantedPlaneTree,
    family: MapFamily,
    rng: &mut impl Rng,
) -> BlossomingTree {
    let n = tree.n_vertices();
    let k = family.stems_per_vertex();
    let mut parent: Vec<Option<u32>> = (0..n as u32).map(|v| tree.parent(v)).collect();
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut blossom_owner = Vec::with_capacity(n * k);
    for v in 0..n as u32 {
        let kids = tree.children(v);
        let c = kids.len();
        let mut slots: Vec<usize> = match k {
            1 => vec![rng.gen_range(0..=c)],
            2 => {
                // unordered pair of distinct positions among c+2 slots
                let m = c + 2;
                let a = rng.gen_range(0..m);
                let b = loop {
                    let b = rng.gen_range(0..m);
                    if b != a {
                        break b;
                    }
                };
                let (lo, hi) = (a.min(b), a.max(b));
                vec![lo, hi]
            }
            _ => unreachable!(),
        };
        // slot value s means: s children precede this stem; equal values for
        // k=2 are impossible by construction (positions are distinct slots).
        let mut list = Vec::with_capacity(c + k);
        let mut next_kid = 0usize;
        slots.sort_unstable();
        let mut slot_iter = slots.into_iter().peekable();
        for pos in 0..c + k {
            if slot_iter.peek() == Some(&(pos)) {
                slot_iter.next();
                let id = (n + blossom_owner.len()) as u32;
                blossom_owner.push(v);
                list.push(id);
            } else {
                list.push(kids[next_kid]);
                next_kid += 1;
            }
        }
        children[v as usize] = list;
    }
    let total = n + blossom_owner.len();
    let mut flags = vec![false; total];
    parent.resize(total, None);
    children.resize(total, Vec::new());
    for (i, &v) in blossom_owner.iter().enumerate() {
        flags[n + i] = true;
        parent[n + i] = Some(v);
    }
    let tree = PlantedPlaneTree::new(parent, children).expect("stem insertion is valid");
    BlossomingTree::new(tree, flags, family).expect("stem insertion is valid")
}

/// Uniform planted blossoming tree with n inner vertices.
pub fn sample_blossoming_tree(
    n: usize,
    family: MapFamily,
    rng: &mut impl Rng,
) -> BlossomingTree {
    let t = sample_gw_tree(n, family, rng);
    attach_stems(&t, family, rng)
}

/// Uniform non-decreasing sibling displacement vector: values in {−1,0,1}
/// (tri, C(k+2,2) vectors) or {−1,1} (quad, k+1 vectors).
pub fn sample_sibling_displacements(
    k: usize,
    family: MapFamily,
    rng: &mut impl Rng,
) -> Vec<i64> {
    match family {
        MapFamily::Triangulation => {
            // choose cut points 0 <= a <= b <= k: a entries −1, b−a zeros
            let m = k + 2;
            let i = rng.gen_range(0..m);
            let j = loop {
                let j = rng.gen_range(0..m);
                if j != i {
                    break j;
                }
            };
            let (a, b) = (i.min(j), i.max(j));
            let (neg, zero) = (a, b - a - 1);
            let mut out = vec![-1; neg];
            out.extend(std::iter::repeat(0).take(zero));
            out.extend(std::iter::repeat(1).take(k - neg - zero));
            out
        }
        MapFamily::Quadrangulation => {
            let cut = rng.gen_range(0..=k);
            let mut out = vec![-1; cut];
            out.extend(std::iter::repeat(1).take(k - cut));
            out
        }
    }
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration
// ---------------------------------------------------------------------------

const ENUM_GUARD: usize = 8;

#[derive(Clone)]
enum SNode {
    Bud,
    Inner(Vec<SNode>),
}

/// All planted blossoming trees with n inner vertices (rooted at an inner
/// corner), in a deterministic order. Distinct planted shapes are distinct
/// elements; no isomorphism collapsing is needed beyond that.
pub fn enumerate_trees(n: usize, family: MapFamily) -> Result<Vec<BlossomingTree>, BlossomError> {
    enumerate_trees_with_guard(n, family, ENUM_GUARD)
}

pub fn enumerate_trees_with_guard(
    n: usize,
    family: MapFamily,
    max_n: usize,
) -> Result<Vec<BlossomingTree>, BlossomError> {
    if n == 0 || n > max_n {
        return Err(BlossomError::Guard { n, max: max_n });
    }
    let k = family.stems_per_vertex();
    let mut memo: Vec<Vec<SNode>> = vec![Vec::new(); n + 1];
    for m in 1..=n {
        memo[m] = gen_inner(m, k, &memo);
    }
    Ok(memo[n].iter().map(|s| shape_to_tree(s, family)).collect())
}

/// All inner-rooted shapes with m inner vertices: for each ordered
/// composition of m−1 into child subtree sizes, each product of child
/// shapes, and each placement of the k stems among the c+k slots.
fn gen_inner(m: usize, k: usize, memo: &[Vec<SNode>]) -> Vec<SNode> {
    let mut out = Vec::new();
    for comp in compositions(m - 1) {
        let c = comp.len();
        let choices: Vec<&Vec<SNode>> = comp.iter().map(|&p| &memo[p]).collect();
        let mut idx = vec![0usize; c];
        loop {
            let kids: Vec<&SNode> = (0..c).map(|i| &choices[i][idx[i]]).collect();
            for slots in stem_placements(c, k) {
                let mut list = Vec::with_capacity(c + k);
                let mut next_kid = 0;
                let mut slot_iter = slots.iter().peekable();
                for pos in 0..c + k {
                    if slot_iter.peek() == Some(&&pos) {
                        slot_iter.next();
                        list.push(SNode::Bud);
                    } else {
                        list.push(kids[next_kid].clone());
                        next_kid += 1;
                    }
                }
                out.push(SNode::Inner(list));
            }
            // odometer over the product of child shape choices
            let mut i = 0;
            loop {
                if i == c {
                    break;
                }
                idx[i] += 1;
                if idx[i] < choices[i].len() {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == c {
                break;
            }
        }
    }
    out
}

/// Ordered compositions of t into positive parts (t = 0 gives the empty one).
fn compositions(t: usize) -> Vec<Vec<usize>> {
    if t == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=t {
        for mut rest in compositions(t - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All sorted k-subsets of {0, .., c+k−1}, lexicographically.
fn stem_placements(c: usize, k: usize) -> Vec<Vec<usize>> {
    let m = c + k;
    match k {
        1 => (0..m).map(|i| vec![i]).collect(),
        2 => {
            let mut out = Vec::new();
            for i in 0..m {
                for j in i + 1..m {
                    out.push(vec![i, j]);
                }
            }
            out
        }
        _ => unreachable!(),
    }
}

fn shape_to_tree(shape: &SNode, family: MapFamily) -> BlossomingTree {
    // Inner vertices take preorder ids; blossoms are appended afterwards in
    // (vertex, slot) order. Slot lists use None for a stem placeholder.
    fn walk<'a>(
        s: &'a SNode,
        p: Option<u32>,
        parent: &mut Vec<Option<u32>>,
        slots: &mut Vec<Vec<Option<u32>>>,
    ) -> u32 {
        let SNode::Inner(ch) = s else { unreachable!("walk starts at inner nodes") };
        let id = parent.len() as u32;
        parent.push(p);
        slots.push(Vec::new());
        let mut my_slots = Vec::with_capacity(ch.len());
        for c in ch {
            match c {
                SNode::Bud => my_slots.push(None),
                inner => my_slots.push(Some(walk(inner, Some(id), parent, slots))),
            }
        }
        slots[id as usize] = my_slots;
        id
    }
    let mut parent: Vec<Option<u32>> = Vec::new();
    let mut slots: Vec<Vec<Option<u32>>> = Vec::new();
    walk(shape, None, &mut parent, &mut slots);
    let n = parent.len();
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut blossom_owner = Vec::new();
    for v in 0..n {
        let mut list = Vec::with_capacity(slots[v].len());
        for slot in &slots[v] {
            match slot {
                Some(c) => list.push(*c),
                None => {
                    list.push(u32::MAX); // resolved below once ids are known
                    blossom_owner.push((v as u32, list.len() - 1));
                }
            }
        }
        children[v] = list;
    }
    let total = n + blossom_owner.len();
    let mut flags = vec![false; total];
    parent.resize(total, None);
    children.resize(total, Vec::new());
    for (b, &(v, slot)) in blossom_owner.iter().enumerate() {
        let id = (n + b) as u32;
        flags[id as usize] = true;
        parent[id as usize] = Some(v);
        children[v as usize][slot] = id;
    }
    let tree = PlantedPlaneTree::new(parent, children).expect("enumerated shape is valid");
    BlossomingTree::new(tree, flags, family).expect("enumerated shape is valid")
}

/// Number of distinct balanced planted trees among the given trees (each
/// tree contributes its balanced rerootings, deduplicated structurally).
pub fn count_balanced(trees: &[BlossomingTree]) -> usize {
    let mut codes = std::collections::HashSet::new();
    for t in trees {
        let ctr = t.tree.contour();
        for &c in balanced_corners(t, &ctr).iter() {
            let r = t.reroot_at_corner(&ctr, c);
            codes.insert(r.canonical_code());
        }
    }
    codes.len()
}
