//! Rooted planar maps as half-edge rotation systems.
//!
//! Half-edges 2i and 2i+1 are the two sides of edge i. `next_cw` is the
//! rotation σ: the next half-edge out of the same vertex in clockwise order.
//! The face to the left of h is traced by h ↦ σ(α(h)) where α(h) = h ^ 1.
//! The corner of an out-half-edge h is the sector swept clockwise from h to
//! σ(h); the root corner is the corner of the root half-edge, and the root
//! face is the face to its right.

use crate::plane_tree::VertexId;
use serde::{Deserialize, Serialize};
use std::fmt;

pub type HalfEdgeId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapError {
    Structure(String),
    /// The rotation system describes a surface of positive genus.
    Genus { genus: usize },
    Orientation(String),
    Parse(String),
    Precondition(&'static str),
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::Structure(s) => write!(f, "malformed map: {s}"),
            MapError::Genus { genus } => {
                write!(f, "rotation system has genus {genus}, expected a sphere map")
            }
            MapError::Orientation(s) => write!(f, "orientation error: {s}"),
            MapError::Parse(s) => write!(f, "parse error: {s}"),
            MapError::Precondition(s) => write!(f, "precondition violated: {s}"),
        }
    }
}

impl std::error::Error for MapError {}

/// Immutable rooted sphere map. Construction validates the rotation system
/// and rejects positive-genus surfaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfEdgeMap {
    next_cw: Vec<HalfEdgeId>,
    prev_cw: Vec<HalfEdgeId>,
    vertex_of: Vec<VertexId>,
    root: HalfEdgeId,
    /// orientation[h] is true iff edge h/2 is directed along h.
    orientation: Option<Vec<bool>>,
    n_vertices: usize,
    /// Face to the left of each half-edge, densely numbered.
    face_of: Vec<u32>,
    n_faces: usize,
    /// One representative out-half-edge per vertex.
    first_out: Vec<HalfEdgeId>,
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    n_half_edges: usize,
    next_cw: Vec<u32>,
    vertex_of: Vec<u32>,
    root_half_edge: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    orientation: Option<Vec<bool>>,
}

/// Builds a map from a rotation system; see `HalfEdgeMap::from_parts`.
pub fn build_map(
    next_cw: Vec<HalfEdgeId>,
    vertex_of: Vec<VertexId>,
    root: HalfEdgeId,
) -> Result<HalfEdgeMap, MapError> {
    HalfEdgeMap::from_parts(next_cw, vertex_of, root, None)
}

impl HalfEdgeMap {
    pub fn from_parts(
        next_cw: Vec<HalfEdgeId>,
        vertex_of: Vec<VertexId>,
        root: HalfEdgeId,
        orientation: Option<Vec<bool>>,
    ) -> Result<Self, MapError> {
        let n_h = next_cw.len();
        if n_h == 0 || n_h % 2 != 0 {
            return Err(MapError::Structure(format!(
                "half-edge count {n_h} must be positive and even"
            )));
        }
        if vertex_of.len() != n_h {
            return Err(MapError::Structure("vertex_of length mismatch".into()));
        }
        if root as usize >= n_h {
            return Err(MapError::Structure("root half-edge out of range".into()));
        }
        // σ must be a permutation preserving vertex_of.
        let mut prev_cw = vec![u32::MAX; n_h];
        for h in 0..n_h {
            let t = next_cw[h] as usize;
            if t >= n_h {
                return Err(MapError::Structure(format!("next_cw[{h}] out of range")));
            }
            if prev_cw[t] != u32::MAX {
                return Err(MapError::Structure("next_cw is not a permutation".into()));
            }
            prev_cw[t] = h as u32;
            if vertex_of[t] != vertex_of[h] {
                return Err(MapError::Structure(format!(
                    "rotation moves half-edge {h} across vertices"
                )));
            }
        }
        // Dense vertex ids, one rotation cycle per vertex.
        let n_vertices = match vertex_of.iter().max() {
            Some(&m) => m as usize + 1,
            None => 0,
        };
        let mut seen_vertex = vec![false; n_vertices];
        for &v in &vertex_of {
            seen_vertex[v as usize] = true;
        }
        if seen_vertex.iter().any(|&b| !b) {
            return Err(MapError::Structure("vertex ids are not dense".into()));
        }
        let mut cycle_seen = vec![false; n_h];
        let mut n_cycles = 0usize;
        for h in 0..n_h {
            if cycle_seen[h] {
                continue;
            }
            n_cycles += 1;
            let mut g = h;
            while !cycle_seen[g] {
                cycle_seen[g] = true;
                g = next_cw[g] as usize;
            }
        }
        if n_cycles != n_vertices {
            return Err(MapError::Structure(
                "a vertex's half-edges split into several rotation cycles".into(),
            ));
        }
        // Connectivity over σ and α.
        let mut reach = vec![false; n_h];
        let mut stack = vec![root as usize];
        reach[root as usize] = true;
        while let Some(h) = stack.pop() {
            for g in [next_cw[h] as usize, h ^ 1] {
                if !reach[g] {
                    reach[g] = true;
                    stack.push(g);
                }
            }
        }
        if reach.iter().any(|&b| !b) {
            return Err(MapError::Structure("map is not connected".into()));
        }
        // Faces via the left-face walk φ = σ∘α; Euler formula fixes genus.
        let mut face_of = vec![u32::MAX; n_h];
        let mut n_faces = 0usize;
        for h in 0..n_h {
            if face_of[h] != u32::MAX {
                continue;
            }
            let f = n_faces as u32;
            n_faces += 1;
            let mut g = h;
            while face_of[g] == u32::MAX {
                face_of[g] = f;
                g = next_cw[g ^ 1] as usize;
            }
        }
        let euler = n_vertices as i64 - (n_h / 2) as i64 + n_faces as i64;
        if euler != 2 {
            return Err(MapError::Genus { genus: ((2 - euler) / 2) as usize });
        }
        if let Some(ori) = &orientation {
            validate_orientation(ori, n_h)?;
        }
        let mut first_out = vec![u32::MAX; n_vertices];
        for h in (0..n_h).rev() {
            first_out[vertex_of[h] as usize] = h as u32;
        }
        Ok(HalfEdgeMap {
            next_cw,
            prev_cw,
            vertex_of,
            root,
            orientation,
            n_vertices,
            face_of,
            n_faces,
            first_out,
        })
    }

    pub fn n_half_edges(&self) -> usize {
        self.next_cw.len()
    }

    pub fn n_edges(&self) -> usize {
        self.next_cw.len() / 2
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_faces(&self) -> usize {
        self.n_faces
    }

    pub fn root_half_edge(&self) -> HalfEdgeId {
        self.root
    }

    pub fn root_vertex(&self) -> VertexId {
        self.vertex_of[self.root as usize]
    }

    /// The face containing the root corner: the face to the right of the
    /// root half-edge.
    pub fn root_face(&self) -> u32 {
        self.face_of[(self.root ^ 1) as usize]
    }

    pub fn alpha(&self, h: HalfEdgeId) -> HalfEdgeId {
        h ^ 1
    }

    pub fn sigma(&self, h: HalfEdgeId) -> HalfEdgeId {
        self.next_cw[h as usize]
    }

    pub fn sigma_inv(&self, h: HalfEdgeId) -> HalfEdgeId {
        self.prev_cw[h as usize]
    }

    pub fn vertex_of(&self, h: HalfEdgeId) -> VertexId {
        self.vertex_of[h as usize]
    }

    pub fn head_of(&self, h: HalfEdgeId) -> VertexId {
        self.vertex_of[(h ^ 1) as usize]
    }

    /// Face to the left of h.
    pub fn face_left(&self, h: HalfEdgeId) -> u32 {
        self.face_of[h as usize]
    }

    /// Next half-edge along the face to the left of h.
    pub fn face_next(&self, h: HalfEdgeId) -> HalfEdgeId {
        self.next_cw[(h ^ 1) as usize]
    }

    /// The half-edges of the face to the left of h, starting at h.
    pub fn face_cycle(&self, h: HalfEdgeId) -> Vec<HalfEdgeId> {
        let mut out = vec![h];
        let mut g = self.face_next(h);
        while g != h {
            out.push(g);
            g = self.face_next(g);
        }
        out
    }

    /// Half-edges out of v in clockwise order, starting from the smallest id.
    pub fn out_edges(&self, v: VertexId) -> Vec<HalfEdgeId> {
        let start = self.first_out[v as usize];
        let mut out = vec![start];
        let mut g = self.sigma(start);
        while g != start {
            out.push(g);
            g = self.sigma(g);
        }
        out
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.out_edges(v).len()
    }

    /// Face degrees in non-decreasing order.
    pub fn face_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n_faces];
        for &f in &self.face_of {
            deg[f as usize] += 1;
        }
        deg.sort_unstable();
        deg
    }

    /// No loops and no parallel edges.
    pub fn is_simple(&self) -> bool {
        let mut pairs = std::collections::HashSet::new();
        for e in 0..self.n_edges() {
            let a = self.vertex_of[2 * e];
            let b = self.vertex_of[2 * e + 1];
            if a == b {
                return false;
            }
            if !pairs.insert((a.min(b), a.max(b))) {
                return false;
            }
        }
        true
    }

    pub fn orientation(&self) -> Option<&[bool]> {
        self.orientation.as_deref()
    }

    pub fn with_orientation(mut self, orientation: Vec<bool>) -> Result<Self, MapError> {
        validate_orientation(&orientation, self.n_half_edges())?;
        self.orientation = Some(orientation);
        Ok(self)
    }

    pub fn without_orientation(mut self) -> Self {
        self.orientation = None;
        self
    }

    /// Outdegrees of all vertices under the stored orientation.
    pub fn outdegrees(&self) -> Vec<usize> {
        let ori = self.orientation.as_ref().expect("orientation required");
        let mut out = vec![0usize; self.n_vertices];
        for h in 0..self.next_cw.len() {
            if ori[h] {
                out[self.vertex_of[h] as usize] += 1;
            }
        }
        out
    }

    /// Outdegree of v under the stored orientation.
    pub fn outdegree(&self, v: VertexId) -> usize {
        let ori = self.orientation.as_ref().expect("orientation required");
        self.out_edges(v).iter().filter(|&&h| ori[h as usize]).count()
    }

    /// Canonical relabelling code: breadth-first over half-edges following
    /// the rotation from the root. Two rooted maps have equal codes iff they
    /// are isomorphic as rooted maps (orientation included when present).
    pub fn canonical_code(&self) -> Vec<u32> {
        let n_h = self.n_half_edges();
        let mut order = vec![u32::MAX; n_h]; // half-edge -> discovery index
        let mut seq = Vec::with_capacity(n_h);
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(self.root);
        while let Some(h0) = queue.pop_front() {
            if order[h0 as usize] != u32::MAX {
                continue;
            }
            // absorb the whole rotation at the tail of h0
            let mut g = h0;
            loop {
                order[g as usize] = seq.len() as u32;
                seq.push(g);
                queue.push_back(g ^ 1);
                g = self.sigma(g);
                if g == h0 {
                    break;
                }
            }
        }
        let mut code = Vec::with_capacity(2 * n_h + 1);
        for &h in &seq {
            code.push(order[(h ^ 1) as usize]);
            code.push(order[self.sigma(h) as usize]);
        }
        if let Some(ori) = &self.orientation {
            for &h in &seq {
                code.push(u32::from(ori[h as usize]));
            }
        }
        code
    }

    /// Vertices around the face left of h, tails in walk order.
    pub fn face_vertices(&self, h: HalfEdgeId) -> Vec<VertexId> {
        self.face_cycle(h).iter().map(|&g| self.vertex_of(g)).collect()
    }

    /// Checks the family's outdegree profile: listing the root face
    /// clockwise from the root vertex as (v, A, B) or (v, A, B, w), the
    /// outdegrees must be (2, 0, 1) + 3 elsewhere, or (1, 0, 1, 2) + 2
    /// elsewhere.
    pub fn check_orientation(&self, family: crate::blossoming::MapFamily) -> OrientationReport {
        use crate::blossoming::MapFamily;
        let mut violations = Vec::new();
        let Some(_) = self.orientation else {
            return OrientationReport {
                violations: vec![OrientationViolation::Missing],
            };
        };
        // The root face is to the right of the root half-edge; its walk
        // starts at σ(root), whose tail is the root vertex.
        let rf = self.root_face_clockwise();
        debug_assert_eq!(rf[0], self.root_vertex());
        let want_len = match family {
            MapFamily::Triangulation => 3,
            MapFamily::Quadrangulation => 4,
        };
        if rf.len() != want_len {
            violations.push(OrientationViolation::RootFaceDegree {
                expected: want_len,
                actual: rf.len(),
            });
            return OrientationReport { violations };
        }
        let mut expected = vec![usize::MAX; self.n_vertices];
        let default = match family {
            MapFamily::Triangulation => 3,
            MapFamily::Quadrangulation => 2,
        };
        for slot in &mut expected {
            *slot = default;
        }
        let profile: &[usize] = match family {
            MapFamily::Triangulation => &[2, 0, 1],
            MapFamily::Quadrangulation => &[1, 0, 1, 2],
        };
        for (i, &v) in rf.iter().enumerate() {
            expected[v as usize] = profile[i];
        }
        let actual = self.outdegrees();
        for v in 0..self.n_vertices {
            if actual[v] != expected[v] {
                violations.push(OrientationViolation::Outdegree {
                    vertex: v as VertexId,
                    expected: expected[v],
                    actual: actual[v],
                });
            }
        }
        OrientationReport { violations }
    }

    /// Vertices of the root face in clockwise order, starting at the root
    /// vertex.
    pub fn root_face_clockwise(&self) -> Vec<VertexId> {
        self.face_vertices(self.sigma(self.root))
    }

    /// Exact minimality test for the stored orientation: no counterclockwise
    /// directed cycle. Equivalent form used here: walking left-to-right
    /// across each directed edge, every face must be reachable from the root
    /// face (an unreachable region sits inside a counterclockwise cycle).
    pub fn is_minimal(&self) -> Result<bool, MapError> {
        let ori = self
            .orientation
            .as_ref()
            .ok_or(MapError::Precondition("is_minimal requires an orientation"))?;
        let mut reached = vec![false; self.n_faces];
        let mut stack = vec![self.root_face() as usize];
        reached[self.root_face() as usize] = true;
        // adjacency: arcs face_left(h) -> face_right(h) per directed h
        let mut arcs: Vec<Vec<u32>> = vec![Vec::new(); self.n_faces];
        for h in 0..self.n_half_edges() {
            if ori[h] {
                arcs[self.face_of[h] as usize].push(self.face_of[h ^ 1]);
            }
        }
        while let Some(f) = stack.pop() {
            for &g in &arcs[f] {
                if !reached[g as usize] {
                    reached[g as usize] = true;
                    stack.push(g as usize);
                }
            }
        }
        Ok(reached.iter().all(|&b| b))
    }

    /// Computes the unique minimal orientation with the family's outdegree
    /// profile: first any feasible orientation by augmenting paths, then
    /// reversal of counterclockwise boundaries until the minimality test
    /// passes. Errors if no orientation exists (the map is not simple).
    pub fn minimal_orientation(
        &self,
        family: crate::blossoming::MapFamily,
    ) -> Result<Vec<bool>, MapError> {
        use crate::blossoming::MapFamily;
        let rf = self.root_face_clockwise();
        let (want_len, default, profile): (usize, usize, &[usize]) = match family {
            MapFamily::Triangulation => (3, 3, &[2, 0, 1]),
            MapFamily::Quadrangulation => (4, 2, &[1, 0, 1, 2]),
        };
        if rf.len() != want_len {
            return Err(MapError::Orientation(format!(
                "root face has degree {}, expected {want_len}",
                rf.len()
            )));
        }
        let mut target = vec![default; self.n_vertices];
        for (i, &v) in rf.iter().enumerate() {
            target[v as usize] = profile[i];
        }
        if target.iter().sum::<usize>() != self.n_edges() {
            return Err(MapError::Orientation(
                "outdegree targets do not sum to the edge count".into(),
            ));
        }
        let mut ori = feasible_orientation(self, &target)?;
        // Flip counterclockwise boundaries until minimal: each pass reverses
        // the boundary of the region unreachable from the root face, which
        // moves strictly down the lattice of orientations, so the loop ends.
        for _ in 0..self.n_faces * self.n_edges() + 1 {
            let mut reached = vec![false; self.n_faces];
            let mut stack = vec![self.root_face() as usize];
            reached[self.root_face() as usize] = true;
            while let Some(f) = stack.pop() {
                for h in 0..self.n_half_edges() {
                    if ori[h] && self.face_of[h] as usize == f {
                        let g = self.face_of[h ^ 1] as usize;
                        if !reached[g] {
                            reached[g] = true;
                            stack.push(g);
                        }
                    }
                }
            }
            if reached.iter().all(|&b| b) {
                return Ok(ori);
            }
            // Edges with the unreachable region on the left form its
            // counterclockwise boundary; reverse them.
            for h in 0..self.n_half_edges() {
                if ori[h]
                    && !reached[self.face_of[h] as usize]
                    && reached[self.face_of[h ^ 1] as usize]
                {
                    ori[h] = false;
                    ori[h ^ 1] = true;
                }
            }
        }
        Err(MapError::Orientation(
            "minimality flips did not converge; rotation system is inconsistent".into(),
        ))
    }

    pub fn to_json_string(&self) -> String {
        let js = MapJson {
            n_half_edges: self.n_half_edges(),
            next_cw: self.next_cw.clone(),
            vertex_of: self.vertex_of.clone(),
            root_half_edge: self.root,
            orientation: self.orientation.clone(),
        };
        serde_json::to_string(&js).expect("map serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self, MapError> {
        let js: MapJson = serde_json::from_str(s).map_err(|e| MapError::Parse(e.to_string()))?;
        if js.next_cw.len() != js.n_half_edges {
            return Err(MapError::Parse("n_half_edges disagrees with next_cw".into()));
        }
        HalfEdgeMap::from_parts(js.next_cw, js.vertex_of, js.root_half_edge, js.orientation)
    }
}

fn validate_orientation(ori: &[bool], n_h: usize) -> Result<(), MapError> {
    if ori.len() != n_h {
        return Err(MapError::Orientation("orientation length mismatch".into()));
    }
    for e in 0..n_h / 2 {
        if ori[2 * e] == ori[2 * e + 1] {
            return Err(MapError::Orientation(format!(
                "edge {e} must be directed one way exactly"
            )));
        }
    }
    Ok(())
}

/// Any orientation with the given outdegrees, by augmenting paths: start
/// with all edges directed along their even half-edge, then fix deficits by
/// walking directed paths from over-full to under-full vertices.
fn feasible_orientation(map: &HalfEdgeMap, target: &[usize]) -> Result<Vec<bool>, MapError> {
    let n_h = map.n_half_edges();
    let mut ori = vec![false; n_h];
    for e in 0..n_h / 2 {
        ori[2 * e] = true;
    }
    let mut out = vec![0i64; map.n_vertices()];
    for h in 0..n_h {
        if ori[h] {
            out[map.vertex_of(h as u32) as usize] += 1;
        }
    }
    let excess =
        |out: &[i64], v: usize| out[v] - target[v] as i64;
    loop {
        let Some(src) = (0..map.n_vertices()).find(|&v| excess(&out, v) > 0) else {
            break;
        };
        // BFS along directed edges to a vertex below target; reversing the
        // path shifts one unit of outdegree.
        let mut pred: Vec<Option<u32>> = vec![None; map.n_vertices()];
        let mut seen = vec![false; map.n_vertices()];
        seen[src] = true;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(src as u32);
        let mut sink = None;
        'bfs: while let Some(v) = queue.pop_front() {
            for h in 0..n_h as u32 {
                if ori[h as usize] && map.vertex_of(h) == v {
                    let w = map.head_of(h);
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        pred[w as usize] = Some(h);
                        if excess(&out, w as usize) < 0 {
                            sink = Some(w);
                            break 'bfs;
                        }
                        queue.push_back(w);
                    }
                }
            }
        }
        let Some(sink) = sink else {
            return Err(MapError::Orientation(
                "no orientation with the required outdegrees exists".into(),
            ));
        };
        let mut v = sink;
        while let Some(h) = pred[v as usize] {
            ori[h as usize] = false;
            ori[(h ^ 1) as usize] = true;
            v = map.vertex_of(h);
        }
        debug_assert_eq!(v as usize, src);
        out[src] -= 1;
        out[sink as usize] += 1;
    }
    Ok(ori)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrientationViolation {
    Missing,
    RootFaceDegree { expected: usize, actual: usize },
    Outdegree { vertex: VertexId, expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientationReport {
    pub violations: Vec<OrientationViolation>,
}

impl OrientationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}
