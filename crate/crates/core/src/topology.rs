//! Complete graphs over landmarks, their minimum-cost spanning trees, and the
//! Euler-tour sequences that order the classifier's inputs.
//!
//! Vertices are 0-based. Edge `(i, j)` with `i < j` lives at canonical index
//! `i*n - i*(i+1)/2 + (j - i - 1)` of the flat weight vector.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Number of unordered vertex pairs of `K_n`.
pub const fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Canonical index of the unordered pair `{i, j}` in a graph with `n` vertices.
#[inline]
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < n && j < n);
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

/// Inverse of [`edge_index`].
pub fn edge_endpoints(n: usize, mut index: usize) -> (usize, usize) {
    for a in 0..n {
        let row = n - a - 1;
        if index < row {
            return (a, a + 1 + index);
        }
        index -= row;
    }
    panic!("edge index out of range for n = {n}");
}

/// `K_n` with one real weight per unordered vertex pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCompleteGraph {
    n: usize,
    weights: Vec<f64>,
}

impl WeightedCompleteGraph {
    pub fn new(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("graph", format!("need at least 2 vertices, got {n}")));
        }
        if weights.len() != edge_count(n) {
            return Err(Error::dim("edge weights", edge_count(n), weights.len()));
        }
        if let Some(k) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::invalid(
                "graph",
                format!("edge weight {k} is not finite ({})", weights[k]),
            ));
        }
        Ok(Self { n, weights })
    }

    pub fn from_slice(n: usize, weights: &[f64]) -> Result<Self> {
        Self::new(n, weights.to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[edge_index(self.n, i, j)]
    }
}

/// A rooted spanning tree with ordered child lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    n: usize,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    total_weight: f64,
}

impl SpanningTree {
    /// Builds a tree from its parent array and child lists, checking that they
    /// agree and describe a connected acyclic graph rooted at `root`.
    pub fn from_parts(
        root: usize,
        parent: Vec<Option<usize>>,
        children: Vec<Vec<usize>>,
        total_weight: f64,
    ) -> Result<Self> {
        let n = parent.len();
        if n < 2 {
            return Err(Error::invalid("tree", format!("need at least 2 vertices, got {n}")));
        }
        if children.len() != n {
            return Err(Error::dim("tree children", n, children.len()));
        }
        if root >= n {
            return Err(Error::invalid("tree", format!("root {root} out of range 0..{n}")));
        }
        if !total_weight.is_finite() {
            return Err(Error::invalid("tree", "total weight is not finite"));
        }
        for (v, p) in parent.iter().enumerate() {
            match (*p, v == root) {
                (None, true) => {}
                (Some(_), true) => {
                    return Err(Error::invalid("tree", "root must not have a parent"));
                }
                (None, false) => {
                    return Err(Error::invalid("tree", format!("vertex {v} has no parent")));
                }
                (Some(p), false) => {
                    if p >= n || p == v {
                        return Err(Error::invalid(
                            "tree",
                            format!("vertex {v} has invalid parent {p}"),
                        ));
                    }
                }
            }
        }
        let mut seen = vec![false; n];
        for (p, kids) in children.iter().enumerate() {
            for &c in kids {
                if c >= n || c == root || seen[c] || parent[c] != Some(p) {
                    return Err(Error::invalid(
                        "tree",
                        format!("child list of {p} is inconsistent at {c}"),
                    ));
                }
                seen[c] = true;
            }
        }
        if seen.iter().filter(|s| **s).count() != n - 1 {
            return Err(Error::invalid("tree", "child lists do not cover every non-root vertex"));
        }
        // Reachability from the root rules out cycles among non-root vertices.
        let mut reached = 0usize;
        let mut stack = vec![root];
        let mut visited = vec![false; n];
        while let Some(v) = stack.pop() {
            if visited[v] {
                return Err(Error::invalid("tree", "cycle detected"));
            }
            visited[v] = true;
            reached += 1;
            stack.extend(children[v].iter().copied());
        }
        if reached != n {
            return Err(Error::invalid("tree", "not connected"));
        }
        Ok(Self {
            n,
            root,
            parent,
            children,
            total_weight,
        })
    }

    /// Builds a tree from an undirected edge list. Children are ordered by
    /// ascending vertex index; `total_weight` is taken from `graph` when given.
    pub fn from_edges(
        n: usize,
        root: usize,
        edges: &[(usize, usize)],
        graph: Option<&WeightedCompleteGraph>,
    ) -> Result<Self> {
        if edges.len() + 1 != n {
            return Err(Error::dim("tree edges", n.saturating_sub(1), edges.len()));
        }
        if root >= n {
            return Err(Error::invalid("tree", format!("root {root} out of range 0..{n}")));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::invalid("tree", format!("bad edge ({a}, {b})")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut visited = vec![false; n];
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !visited[u] {
                    visited[u] = true;
                    parent[u] = Some(v);
                    children[v].push(u);
                    queue.push_back(u);
                }
            }
        }
        if visited.iter().any(|v| !v) {
            return Err(Error::invalid("tree", "edge list is not connected"));
        }
        let total = match graph {
            Some(g) => canonical_weight(g, &parent),
            None => 0.0,
        };
        Self::from_parts(root, parent, children, total)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn child_lists(&self) -> &[Vec<usize>] {
        &self.children
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn degree(&self, v: usize) -> usize {
        self.children[v].len() + usize::from(v != self.root)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Length of the longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self.root, 0usize)];
        while let Some((v, d)) = stack.pop() {
            best = best.max(d);
            stack.extend(self.children[v].iter().map(|&c| (c, d + 1)));
        }
        best
    }

    /// `(parent, child)` pairs ordered by child index.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (p, v)))
    }

    /// Canonical edge indices of the tree, sorted ascending.
    pub fn edge_set(&self) -> Vec<usize> {
        let mut set: Vec<usize> = self.edges().map(|(a, b)| edge_index(self.n, a, b)).collect();
        set.sort_unstable();
        set
    }
}

/// Sum of tree edge weights taken in canonical edge order, so two routes that
/// find the same edge set report bit-identical totals.
fn canonical_weight(graph: &WeightedCompleteGraph, parent: &[Option<usize>]) -> f64 {
    let n = graph.n();
    let mut idx: Vec<usize> = parent
        .iter()
        .enumerate()
        .filter_map(|(v, p)| p.map(|p| edge_index(n, p, v)))
        .collect();
    idx.sort_unstable();
    idx.iter().map(|&k| graph.weights()[k]).sum()
}

/// Prim's algorithm on the dense graph, rooted at `start`.
///
/// Among frontier edges of equal weight the one with the smallest canonical
/// index wins. Children are appended in extraction order.
pub fn prim_mst(graph: &WeightedCompleteGraph, start: usize) -> Result<SpanningTree> {
    let n = graph.n();
    if start >= n {
        return Err(Error::invalid("prim start", format!("vertex {start} out of range 0..{n}")));
    }
    let mut in_tree = vec![false; n];
    let mut best_w = vec![f64::INFINITY; n];
    let mut best_idx = vec![usize::MAX; n];
    let mut best_from = vec![start; n];
    let mut parent = vec![None; n];
    let mut children = vec![Vec::new(); n];

    in_tree[start] = true;
    for u in (0..n).filter(|&u| u != start) {
        best_w[u] = graph.weight(start, u);
        best_idx[u] = edge_index(n, start, u);
    }
    for _ in 1..n {
        let mut pick = usize::MAX;
        for u in 0..n {
            if in_tree[u] {
                continue;
            }
            if pick == usize::MAX
                || best_w[u] < best_w[pick]
                || (best_w[u] == best_w[pick] && best_idx[u] < best_idx[pick])
            {
                pick = u;
            }
        }
        in_tree[pick] = true;
        let p = best_from[pick];
        parent[pick] = Some(p);
        children[p].push(pick);
        for u in 0..n {
            if in_tree[u] {
                continue;
            }
            let w = graph.weight(pick, u);
            let k = edge_index(n, pick, u);
            if w < best_w[u] || (w == best_w[u] && k < best_idx[u]) {
                best_w[u] = w;
                best_idx[u] = k;
                best_from[u] = pick;
            }
        }
    }
    let total = canonical_weight(graph, &parent);
    SpanningTree::from_parts(start, parent, children, total)
}

/// Largest `n` accepted by [`brute_force_mst`].
pub const BRUTE_FORCE_MAX_N: usize = 8;

/// Decodes a Prüfer sequence (length `n - 2`) into the edge list of a labeled tree.
pub fn prufer_edges(n: usize, code: &[usize]) -> Result<Vec<(usize, usize)>> {
    if n < 2 || code.len() != n - 2 {
        return Err(Error::dim("prufer code", n.saturating_sub(2), code.len()));
    }
    if code.iter().any(|&c| c >= n) {
        return Err(Error::invalid("prufer code", "label out of range"));
    }
    let mut degree = vec![1usize; n];
    for &c in code {
        degree[c] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &c in code {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        edges.push((leaf, c));
        degree[leaf] -= 1;
        degree[c] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    Ok(edges)
}

/// Exhaustive minimum spanning tree over all `n^(n-2)` labeled trees.
///
/// Test oracle for [`prim_mst`]. Returns the first minimal tree in
/// lexicographic Prüfer order, rooted at vertex 0.
pub fn brute_force_mst(graph: &WeightedCompleteGraph) -> Result<SpanningTree> {
    let n = graph.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Capacity(format!(
            "brute-force enumeration supports n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let len = n - 2;
    let mut code = vec![0usize; len];
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    loop {
        let edges = prufer_edges(n, &code)?;
        let mut idx: Vec<usize> = edges.iter().map(|&(a, b)| edge_index(n, a, b)).collect();
        idx.sort_unstable();
        let w: f64 = idx.iter().map(|&k| graph.weights()[k]).sum();
        if best.as_ref().is_none_or(|(bw, _)| w < *bw) {
            best = Some((w, edges));
        }
        // Odometer increment over base-n digits.
        let mut pos = 0;
        while pos < len {
            code[pos] += 1;
            if code[pos] < n {
                break;
            }
            code[pos] = 0;
            pos += 1;
        }
        if pos == len {
            break;
        }
    }
    let (_, edges) = best.expect("at least one tree");
    SpanningTree::from_edges(n, 0, &edges, Some(graph))
}

/// Vertex sequence of a depth-first walk that records every arrival.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TraversalSequence {
    n: usize,
    vertices: Vec<usize>,
}

impl TraversalSequence {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertices as 1-based labels joined by `-`, e.g. `1-2-3-2-1`.
    pub fn to_one_based_string(&self) -> String {
        let labels: Vec<String> = self.vertices.iter().map(|v| format!("{}", v + 1)).collect();
        labels.join("-")
    }

    /// Stable 64-bit digest of the sequence.
    pub fn digest(&self) -> u64 {
        crate::seed::fnv1a_indices(&self.vertices)
    }

    /// Checks the walk against `tree`: length, endpoints, adjacency of
    /// consecutive entries, and per-vertex multiplicity.
    pub fn check_against(&self, tree: &SpanningTree) -> Result<()> {
        let n = tree.n();
        if self.n != n || self.vertices.len() != 2 * n - 1 {
            return Err(Error::dim("traversal length", 2 * n - 1, self.vertices.len()));
        }
        let root = tree.root();
        if self.vertices[0] != root || self.vertices[2 * n - 2] != root {
            return Err(Error::invalid("traversal", "must start and end at the root"));
        }
        for w in self.vertices.windows(2) {
            let (a, b) = (w[0], w[1]);
            if tree.parent(a) != Some(b) && tree.parent(b) != Some(a) {
                return Err(Error::invalid("traversal", format!("({a}, {b}) is not a tree edge")));
            }
        }
        let mut count = vec![0usize; n];
        for &v in &self.vertices {
            count[v] += 1;
        }
        for v in 0..n {
            let expected = tree.degree(v) + usize::from(v == root);
            if count[v] != expected {
                return Err(Error::invalid(
                    "traversal",
                    format!("vertex {v} appears {} times, expected {expected}", count[v]),
                ));
            }
        }
        Ok(())
    }
}

/// Preorder depth-first walk recording each arrival, backtracking included.
pub fn euler_tour(tree: &SpanningTree) -> TraversalSequence {
    let n = tree.n();
    let mut vertices = Vec::with_capacity(2 * n - 1);
    vertices.push(tree.root());
    let mut stack: Vec<(usize, usize)> = vec![(tree.root(), 0)];
    while let Some(top) = stack.last_mut() {
        let (v, next) = *top;
        if let Some(&c) = tree.children(v).get(next) {
            top.1 += 1;
            vertices.push(c);
            stack.push((c, 0));
        } else {
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                vertices.push(p);
            }
        }
    }
    TraversalSequence { n, vertices }
}

/// One-hot `n x (2n-1)` matrix whose column `j` selects the `j`-th visited vertex.
///
/// Stored sparsely as the visit order; [`SelectionMatrix::to_dense`] gives the
/// full matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionMatrix {
    n: usize,
    columns: Vec<usize>,
}

impl SelectionMatrix {
    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    /// Row index of the single nonzero in column `j`.
    pub fn column_vertex(&self, j: usize) -> usize {
        self.columns[j]
    }

    pub fn column_vertices(&self) -> &[usize] {
        &self.columns
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if self.columns[col] == row {
            1.0
        } else {
            0.0
        }
    }

    pub fn row_sum(&self, row: usize) -> usize {
        self.columns.iter().filter(|&&v| v == row).count()
    }

    pub fn nonzeros(&self) -> usize {
        self.columns.len()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let cols = self.cols();
        let mut out = vec![0.0; self.n * cols];
        for (j, &v) in self.columns.iter().enumerate() {
            out[v * cols + j] = 1.0;
        }
        out
    }

    /// Computes `features * U` for a row-major `d x n` feature matrix, giving
    /// the `d x (2n-1)` traversal-ordered matrix.
    pub fn apply(&self, features: &[f64], d: usize) -> Result<Vec<f64>> {
        if features.len() != d * self.n {
            return Err(Error::dim("features for selection", d * self.n, features.len()));
        }
        let cols = self.cols();
        let mut out = vec![0.0; d * cols];
        for r in 0..d {
            let src = &features[r * self.n..(r + 1) * self.n];
            for (j, &v) in self.columns.iter().enumerate() {
                out[r * cols + j] = src[v];
            }
        }
        Ok(out)
    }
}

pub fn selection_matrix(seq: &TraversalSequence) -> SelectionMatrix {
    SelectionMatrix {
        n: seq.n(),
        columns: seq.vertices().to_vec(),
    }
}

/// Tree whose edges form the path `0 - 1 - ... - (n-1)`, rooted at `root`.
pub fn chain_tree(n: usize, root: usize) -> Result<SpanningTree> {
    let edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
    SpanningTree::from_edges(n, root, &edges, None)
}

/// Graphviz text for `tree`. With `coords`, each vertex gets a pinned
/// `pos` attribute.
pub fn tree_to_dot(tree: &SpanningTree, coords: Option<&[[f64; 2]]>) -> Result<String> {
    let mut out = String::from("graph face_tree {\n");
    if let Some(coords) = coords {
        if coords.len() != tree.n() {
            return Err(Error::dim("dot coordinates", tree.n(), coords.len()));
        }
        for (k, [x, y]) in coords.iter().enumerate() {
            out.push_str(&format!("  {k} [pos=\"{x},{y}!\"];\n"));
        }
    }
    for (a, b) in tree.edges() {
        out.push_str(&format!("  {a} -- {b};\n"));
    }
    out.push_str("}\n");
    Ok(out)
}
