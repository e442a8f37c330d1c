//! Planted plane trees: clockwise contour exploration, corner bookkeeping,
//! rerooting, reduced and spanned subtrees.
//!
//! A planted tree is rooted at a corner of its root vertex. Internally the
//! root's child list is stored so that the root corner sits between the last
//! and the first child edge; a nonzero `root_corner` in serialized form is
//! normalized away on load by rotating the root's child list.

use serde::{Deserialize, Serialize};
use std::fmt;

pub type VertexId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    /// Structural violation: not a tree, inconsistent parent/child data.
    Structure(String),
    /// A precondition of an operation was violated.
    Precondition(&'static str),
    /// Serialization or deserialization failure.
    Parse(String),
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::Structure(s) => write!(f, "malformed tree: {s}"),
            TreeError::Precondition(s) => write!(f, "precondition violated: {s}"),
            TreeError::Parse(s) => write!(f, "parse error: {s}"),
        }
    }
}

impl std::error::Error for TreeError {}

/// Rooted plane tree with dense integer vertex ids and per-vertex clockwise
/// child order. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedPlaneTree {
    parent: Vec<Option<VertexId>>,
    children: Vec<Vec<VertexId>>,
    root: VertexId,
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    parent: Vec<i64>,
    child_order: Vec<Vec<u32>>,
    root_corner: usize,
}

impl PlantedPlaneTree {
    /// Builds and validates a tree from parent pointers and child orders.
    pub fn new(
        parent: Vec<Option<VertexId>>,
        children: Vec<Vec<VertexId>>,
    ) -> Result<Self, TreeError> {
        let n = parent.len();
        if n == 0 {
            return Err(TreeError::Structure("empty vertex set".into()));
        }
        if children.len() != n {
            return Err(TreeError::Structure(format!(
                "parent has {n} entries, child_order has {}",
                children.len()
            )));
        }
        let mut root = None;
        for (v, p) in parent.iter().enumerate() {
            match p {
                None => {
                    if root.replace(v as VertexId).is_some() {
                        return Err(TreeError::Structure("two roots".into()));
                    }
                }
                Some(p) => {
                    if *p as usize >= n {
                        return Err(TreeError::Structure(format!("parent of {v} out of range")));
                    }
                }
            }
        }
        let root = root.ok_or_else(|| TreeError::Structure("no root".into()))?;
        let mut seen_child = vec![false; n];
        for (v, ch) in children.iter().enumerate() {
            for &c in ch {
                if c as usize >= n || parent[c as usize] != Some(v as VertexId) {
                    return Err(TreeError::Structure(format!(
                        "child list of {v} disagrees with parent of {c}"
                    )));
                }
                if seen_child[c as usize] {
                    return Err(TreeError::Structure(format!("vertex {c} listed twice")));
                }
                seen_child[c as usize] = true;
            }
        }
        for v in 0..n {
            if v as VertexId != root && !seen_child[v] {
                return Err(TreeError::Structure(format!("vertex {v} not in any child list")));
            }
        }
        let tree = PlantedPlaneTree { parent, children, root };
        // Connectivity: the DFS from the root must reach every vertex.
        if tree.contour().visits.iter().map(|&v| v as usize).collect::<std::collections::HashSet<_>>().len() != n {
            return Err(TreeError::Structure("not connected".into()));
        }
        Ok(tree)
    }

    /// The tree with a single vertex.
    pub fn singleton() -> Self {
        PlantedPlaneTree { parent: vec![None], children: vec![vec![]], root: 0 }
    }

    pub fn n_vertices(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v as usize]
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v as usize]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.children[v as usize].len() + usize::from(self.parent[v as usize].is_some())
    }

    /// Depth of v (root has depth 0).
    pub fn depth(&self, v: VertexId) -> usize {
        let mut d = 0;
        let mut u = v;
        while let Some(p) = self.parent[u as usize] {
            d += 1;
            u = p;
        }
        d
    }

    /// Edges incident to v in clockwise cyclic order, anchored so that the
    /// walk of the contour lists them in visiting order: parent edge first for
    /// a non-root vertex, first child first for the root.
    pub fn cyclic_neighbours(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = Vec::with_capacity(self.degree(v));
        if let Some(p) = self.parent[v as usize] {
            out.push(p);
        }
        out.extend_from_slice(&self.children[v as usize]);
        out
    }

    /// Ulam-Harris address of v: the child indices (1-based) along the path
    /// from the root.
    pub fn ulam_harris(&self, v: VertexId) -> Vec<u32> {
        let mut path = Vec::new();
        let mut u = v;
        while let Some(p) = self.parent[u as usize] {
            let i = self.children[p as usize].iter().position(|&c| c == u).unwrap();
            path.push((i + 1) as u32);
            u = p;
        }
        path.reverse();
        path
    }

    /// Rebuilds a tree from the multiset of Ulam-Harris addresses (one per
    /// vertex, the root's being empty). Vertex v receives address addrs[v].
    pub fn from_ulam_harris(addrs: &[Vec<u32>]) -> Result<Self, TreeError> {
        let n = addrs.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| addrs[a].cmp(&addrs[b]));
        let mut parent: Vec<Option<VertexId>> = vec![None; n];
        let mut children: Vec<Vec<VertexId>> = vec![vec![]; n];
        // Lexicographic insertion: each address must extend an existing one.
        let mut by_addr = std::collections::HashMap::new();
        for &v in &order {
            let a = &addrs[v];
            if a.is_empty() {
                by_addr.insert(a.clone(), v as VertexId);
                continue;
            }
            let p = *by_addr
                .get(&a[..a.len() - 1])
                .ok_or_else(|| TreeError::Structure("address without parent".into()))?;
            if *a.last().unwrap() as usize != children[p as usize].len() + 1 {
                return Err(TreeError::Structure("child indices not contiguous".into()));
            }
            parent[v] = Some(p);
            children[p as usize].push(v as VertexId);
            by_addr.insert(a.clone(), v as VertexId);
        }
        PlantedPlaneTree::new(parent, children)
    }

    /// Clockwise contour exploration from the root corner.
    pub fn contour(&self) -> ContourSequence {
        let n = self.n_vertices();
        let mut visits = Vec::with_capacity(2 * n - 1);
        visits.push(self.root);
        // Stack of (vertex, next child index to walk).
        let mut stack: Vec<(VertexId, usize)> = vec![(self.root, 0)];
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < self.children[v as usize].len() {
                let c = self.children[v as usize][*i];
                *i += 1;
                visits.push(c);
                stack.push((c, 0));
            } else {
                stack.pop();
                if let Some(&(p, _)) = stack.last() {
                    visits.push(p);
                }
            }
        }
        let mut first_visit = vec![usize::MAX; n];
        for (i, &v) in visits.iter().enumerate() {
            if first_visit[v as usize] == usize::MAX {
                first_visit[v as usize] = i;
            }
        }
        ContourSequence { visits, first_visit }
    }

    /// Reroots the same underlying plane tree at the given contour corner.
    /// Vertex ids are preserved; only parent/child structure rotates.
    pub fn reroot_at_corner(&self, ctr: &ContourSequence, corner: usize) -> PlantedPlaneTree {
        assert!(corner < ctr.n_corners().max(1), "corner out of range");
        let n = self.n_vertices();
        if n == 1 {
            return self.clone();
        }
        let v = ctr.visits[corner];
        let next = ctr.visits[corner + 1];
        let cyc = self.cyclic_neighbours(v);
        let anchor = cyc.iter().position(|&u| u == next).unwrap();
        let mut parent: Vec<Option<VertexId>> = vec![None; n];
        let mut children: Vec<Vec<VertexId>> = vec![vec![]; n];
        // Walk outward from the new root; each vertex's child order is its
        // cyclic edge order starting just after the edge it was entered by.
        let mut stack: Vec<(VertexId, VertexId)> = Vec::new(); // (vertex, came from)
        let order: Vec<VertexId> = (0..cyc.len()).map(|k| cyc[(anchor + k) % cyc.len()]).collect();
        children[v as usize] = order.clone();
        for &u in order.iter().rev() {
            stack.push((u, v));
        }
        while let Some((u, from)) = stack.pop() {
            parent[u as usize] = Some(from);
            let cyc_u = self.cyclic_neighbours(u);
            let a = cyc_u.iter().position(|&w| w == from).unwrap();
            let k = cyc_u.len();
            let ord: Vec<VertexId> = (1..k).map(|j| cyc_u[(a + j) % k]).collect();
            for &w in ord.iter().rev() {
                stack.push((w, u));
            }
            children[u as usize] = ord;
        }
        PlantedPlaneTree { parent, children, root: v }
    }

    /// Reduced tree on R: vertices are R, edges join u, v ∈ R where one is a
    /// tree ancestor of the other and the path between them meets R only at
    /// its endpoints. Child order follows the contour (lexicographic) order.
    /// Vertex ids keep their meaning via the returned map new -> old.
    pub fn reduced_tree(
        &self,
        r: &[VertexId],
    ) -> Result<(PlantedPlaneTree, Vec<VertexId>), TreeError> {
        let mut in_r = vec![false; self.n_vertices()];
        for &v in r {
            in_r[v as usize] = true;
        }
        if !in_r[self.root as usize] {
            return Err(TreeError::Precondition("reduced_tree requires root ∈ R"));
        }
        let ctr = self.contour();
        let mut members: Vec<VertexId> = r.to_vec();
        members.sort_by_key(|&v| ctr.first_visit[v as usize]);
        members.dedup();
        let index_of = {
            let mut m = vec![u32::MAX; self.n_vertices()];
            for (i, &v) in members.iter().enumerate() {
                m[v as usize] = i as u32;
            }
            m
        };
        let mut parent: Vec<Option<VertexId>> = vec![None; members.len()];
        let mut children: Vec<Vec<VertexId>> = vec![vec![]; members.len()];
        // Nearest strict R-ancestor = parent in the reduced tree; children end
        // up sorted by first visit because `members` is.
        for &v in &members {
            if v == self.root {
                continue;
            }
            let mut u = self.parent[v as usize].unwrap();
            while !in_r[u as usize] {
                u = self.parent[u as usize].unwrap();
            }
            let vi = index_of[v as usize];
            let ui = index_of[u as usize];
            parent[vi as usize] = Some(ui);
            children[ui as usize].push(vi);
        }
        Ok((PlantedPlaneTree::new(parent, children)?, members))
    }

    /// Vertex set of the spanned subtree T⟨R⟩: the union of pairwise tree
    /// paths between vertices of R.
    pub fn spanned_vertex_set(&self, r: &[VertexId]) -> Result<Vec<bool>, TreeError> {
        if r.is_empty() {
            return Err(TreeError::Precondition("spanned_subtree requires non-empty R"));
        }
        let n = self.n_vertices();
        let mut in_r = vec![false; n];
        for &v in r {
            in_r[v as usize] = true;
        }
        let total = in_r.iter().filter(|&&b| b).count();
        // cnt[v] = number of R-vertices in the subtree of v; a vertex lies on a
        // pairwise path iff it is in R, or separates R below from R elsewhere,
        // or has R in two or more child subtrees.
        let ctr = self.contour();
        let mut order: Vec<VertexId> = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for &v in &ctr.visits {
            if !seen[v as usize] {
                seen[v as usize] = true;
                order.push(v);
            }
        }
        let mut cnt = vec![0usize; n];
        let mut branch = vec![0usize; n];
        // Reverse first-visit order puts every child before its parent, so
        // subtree counts accumulate bottom-up.
        for &v in order.iter().rev() {
            cnt[v as usize] += usize::from(in_r[v as usize]);
            if let Some(p) = self.parent[v as usize] {
                cnt[p as usize] += cnt[v as usize];
                branch[p as usize] += usize::from(cnt[v as usize] > 0);
            }
        }
        let mut out = vec![false; n];
        for v in 0..n {
            out[v] = in_r[v] || branch[v] >= 2 || (cnt[v] > 0 && cnt[v] < total);
        }
        Ok(out)
    }

    /// Spanned subtree as a planted tree (vertices keep their original ids via
    /// the returned map new -> old), rooted at the minimal-depth member.
    pub fn spanned_subtree(
        &self,
        r: &[VertexId],
    ) -> Result<(PlantedPlaneTree, Vec<VertexId>), TreeError> {
        let keep = self.spanned_vertex_set(r)?;
        let ctr = self.contour();
        let mut members: Vec<VertexId> =
            (0..self.n_vertices() as u32).filter(|&v| keep[v as usize]).collect();
        members.sort_by_key(|&v| ctr.first_visit[v as usize]);
        let index_of = {
            let mut m = vec![u32::MAX; self.n_vertices()];
            for (i, &v) in members.iter().enumerate() {
                m[v as usize] = i as u32;
            }
            m
        };
        let mut parent: Vec<Option<VertexId>> = vec![None; members.len()];
        let mut children: Vec<Vec<VertexId>> = vec![vec![]; members.len()];
        for &v in &members {
            if v == self.root {
                continue;
            }
            let p = self.parent[v as usize].unwrap();
            if keep[p as usize] {
                // Inherited plane structure: original child order restricted.
                parent[index_of[v as usize] as usize] = Some(index_of[p as usize]);
            }
        }
        for &v in &members {
            let vi = index_of[v as usize] as usize;
            for &c in &self.children[v as usize] {
                if keep[c as usize] && parent[index_of[c as usize] as usize] == Some(vi as u32) {
                    children[vi].push(index_of[c as usize]);
                }
            }
        }
        Ok((PlantedPlaneTree::new(parent, children)?, members))
    }

    pub fn to_json_string(&self) -> String {
        let js = TreeJson {
            parent: self.parent.iter().map(|p| p.map_or(-1, |v| v as i64)).collect(),
            child_order: self.children.iter().map(|c| c.to_vec()).collect(),
            root_corner: 0,
        };
        serde_json::to_string(&js).expect("tree serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self, TreeError> {
        let js: TreeJson = serde_json::from_str(s).map_err(|e| TreeError::Parse(e.to_string()))?;
        Self::from_parts(&js.parent, js.child_order, js.root_corner)
    }

    /// Builds from the serialized field layout: parents as signed ids (−1 for
    /// the root) and an optional root child-list rotation.
    pub(crate) fn from_parts(
        parent: &[i64],
        child_order: Vec<Vec<u32>>,
        root_corner: usize,
    ) -> Result<Self, TreeError> {
        let parent: Vec<Option<VertexId>> = parent
            .iter()
            .map(|&p| {
                if p < 0 {
                    Ok(None)
                } else if p <= u32::MAX as i64 {
                    Ok(Some(p as u32))
                } else {
                    Err(TreeError::Parse(format!("parent id {p} out of range")))
                }
            })
            .collect::<Result<_, _>>()?;
        let mut tree = PlantedPlaneTree::new(parent, child_order)?;
        let deg = tree.children[tree.root as usize].len();
        if root_corner > 0 {
            if deg == 0 || root_corner >= deg {
                return Err(TreeError::Parse(format!(
                    "root_corner {root_corner} out of range for root degree {deg}"
                )));
            }
            tree.children[tree.root as usize].rotate_left(root_corner);
        }
        Ok(tree)
    }
}

/// Materialized contour: `visits[i]` is the vertex at contour time i, for
/// i = 0..2|V|−2 inclusive (first and last entries are the root). Corner i is
/// flanked by the edges walked at steps i−1 and i; there are 2|V|−2 corners.
#[derive(Debug, Clone)]
pub struct ContourSequence {
    pub visits: Vec<VertexId>,
    pub first_visit: Vec<usize>,
}

impl ContourSequence {
    pub fn n_corners(&self) -> usize {
        self.visits.len() - 1
    }

    pub fn corner_vertex(&self, i: usize) -> VertexId {
        self.visits[i]
    }

    /// The vertex the contour walks to out of corner i (second flanking edge).
    pub fn next_vertex(&self, i: usize) -> VertexId {
        self.visits[i + 1]
    }

    /// The vertex the contour arrived from at corner i (first flanking edge);
    /// for the root corner this wraps to the final step.
    pub fn prev_vertex(&self, i: usize) -> VertexId {
        if i == 0 {
            self.visits[self.visits.len() - 2]
        } else {
            self.visits[i - 1]
        }
    }
}
