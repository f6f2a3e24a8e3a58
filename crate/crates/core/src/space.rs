//! Dimension trees, their cartesian product, and the structural predicates
//! (overlap, subspace membership, per-dimension children) used everywhere else.
//!
//! Tree nodes are renumbered in preorder at construction time. A node's subtree
//! is then the contiguous id range `[id, id + subtree_size)`, which turns every
//! ancestor query into two integer comparisons. Product nodes get a mixed-radix
//! linear index; because children always carry larger preorder ids than their
//! parents, a child along any dimension has a strictly larger linear index than
//! its parent.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Preorder position of a node inside one [`DimensionTree`]. The root is always `NodeId(0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One row of a hierarchy description: a node key, its parent's key (`None` for
/// the root) and a display name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeRecord {
    pub key: String,
    pub parent: Option<String>,
    pub name: String,
}

impl NodeRecord {
    pub fn new(key: impl Into<String>, parent: Option<&str>, name: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            parent: parent.map(str::to_owned),
            name: name.into(),
        }
    }
}

#[derive(Clone, Debug)]
struct TreeNode {
    key: String,
    name: String,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    depth: u32,
    subtree_size: u32,
    leaves: u32,
}

/// A rooted hierarchy for one dimension. Immutable once built.
#[derive(Clone, Debug)]
pub struct DimensionTree {
    nodes: Vec<TreeNode>,
    by_key: HashMap<String, NodeId>,
    height: usize,
}

impl DimensionTree {
    /// Builds a tree from records in any order. Sibling order follows record order.
    pub fn from_records<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = NodeRecord>,
    {
        let records: Vec<NodeRecord> = records.into_iter().collect();
        if records.is_empty() {
            return Err(Error::Input("hierarchy has no nodes".into()));
        }
        if records.len() >= u32::MAX as usize {
            return Err(Error::Capacity("hierarchy has too many nodes".into()));
        }

        let mut position: HashMap<&str, usize> = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if position.insert(r.key.as_str(), i).is_some() {
                return Err(Error::Input(format!("duplicate node id '{}'", r.key)));
            }
        }

        let mut root: Option<usize> = None;
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); records.len()];
        for (i, r) in records.iter().enumerate() {
            match &r.parent {
                None => {
                    if let Some(prev) = root {
                        return Err(Error::Input(format!(
                            "hierarchy has more than one root ('{}' and '{}')",
                            records[prev].key, r.key
                        )));
                    }
                    root = Some(i);
                }
                Some(p) => {
                    let &pi = position.get(p.as_str()).ok_or_else(|| {
                        Error::Input(format!("node '{}' names unknown parent '{}'", r.key, p))
                    })?;
                    if pi == i {
                        return Err(Error::Input(format!("node '{}' is its own parent", r.key)));
                    }
                    children[pi].push(i);
                }
            }
        }
        let root = root.ok_or_else(|| {
            Error::Input("hierarchy has no root (every node has a parent, so it contains a cycle)".into())
        })?;

        // Preorder renumbering. Every node reachable from the root gets a new id.
        let mut order = Vec::with_capacity(records.len());
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(children[v].iter().rev().copied());
        }
        if order.len() != records.len() {
            let mut seen = vec![false; records.len()];
            for &v in &order {
                seen[v] = true;
            }
            let stray = seen.iter().position(|s| !s).unwrap_or(0);
            return Err(Error::Input(format!(
                "node '{}' is not reachable from the root (cycle in hierarchy)",
                records[stray].key
            )));
        }
        let mut new_id = vec![0u32; records.len()];
        for (pre, &old) in order.iter().enumerate() {
            new_id[old] = pre as u32;
        }

        let mut nodes: Vec<TreeNode> = order
            .iter()
            .map(|&old| {
                let r = &records[old];
                TreeNode {
                    key: r.key.clone(),
                    name: r.name.clone(),
                    parent: r.parent.as_ref().map(|p| NodeId(new_id[position[p.as_str()]])),
                    children: children[old].iter().map(|&c| NodeId(new_id[c])).collect(),
                    depth: 0,
                    subtree_size: 1,
                    leaves: 0,
                }
            })
            .collect();

        for i in 1..nodes.len() {
            let p = nodes[i].parent.expect("non-root node has a parent").index();
            nodes[i].depth = nodes[p].depth + 1;
        }
        for i in (0..nodes.len()).rev() {
            if nodes[i].children.is_empty() {
                nodes[i].leaves = 1;
            }
            if let Some(p) = nodes[i].parent {
                let (size, leaves) = (nodes[i].subtree_size, nodes[i].leaves);
                nodes[p.index()].subtree_size += size;
                nodes[p.index()].leaves += leaves;
            }
        }
        let height = nodes.iter().map(|n| n.depth as usize + 1).max().unwrap_or(1);
        let by_key = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.key.clone(), NodeId(i as u32)))
            .collect();

        Ok(Self { nodes, by_key, height })
    }

    /// Starts a tree whose root has the given key (also used as its name).
    pub fn builder(root: &str) -> TreeBuilder {
        TreeBuilder {
            records: vec![NodeRecord::new(root, None, root)],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Always false: a tree has at least its root.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes[0].leaves as usize
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn check(&self, id: NodeId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::Structural(format!(
                "node id {} out of range for a tree of {} nodes",
                id.0,
                self.nodes.len()
            )))
        }
    }

    pub fn lookup(&self, key: &str) -> Option<NodeId> {
        self.by_key.get(key).copied()
    }

    pub fn key(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].key
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].name
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.index()].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.index()].children
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id.index()].children.is_empty()
    }

    /// Depth in edges; the root has depth 0.
    pub fn depth(&self, id: NodeId) -> usize {
        self.nodes[id.index()].depth as usize
    }

    pub fn subtree_size(&self, id: NodeId) -> usize {
        self.nodes[id.index()].subtree_size as usize
    }

    /// Number of leaves in the subtree of `id`.
    pub fn leaves_below(&self, id: NodeId) -> usize {
        self.nodes[id.index()].leaves as usize
    }

    /// True iff `anc` is `desc` or one of its ancestors.
    #[inline]
    pub fn is_ancestor_or_self(&self, anc: NodeId, desc: NodeId) -> bool {
        anc.0 <= desc.0 && desc.0 < anc.0 + self.nodes[anc.index()].subtree_size
    }

    #[inline]
    pub(crate) fn overlaps_unchecked(&self, p: NodeId, q: NodeId) -> bool {
        self.is_ancestor_or_self(p, q) || self.is_ancestor_or_self(q, p)
    }

    /// True iff `p == q` or one is an ancestor of the other.
    pub fn overlaps(&self, p: NodeId, q: NodeId) -> Result<bool> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.overlaps_unchecked(p, q))
    }

    /// Node ids in preorder.
    pub fn ids(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids().filter(|&id| self.is_leaf(id))
    }

    /// Path from the root down to `id`, both included.
    pub fn root_path(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Records in preorder, which is also a valid construction order.
    pub fn records(&self) -> impl Iterator<Item = NodeRecord> + '_ {
        self.nodes.iter().map(|n| NodeRecord {
            key: n.key.clone(),
            parent: n.parent.map(|p| self.nodes[p.index()].key.clone()),
            name: n.name.clone(),
        })
    }
}

/// Incremental construction helper for trees written in code.
#[derive(Clone, Debug)]
pub struct TreeBuilder {
    records: Vec<NodeRecord>,
}

impl TreeBuilder {
    pub fn child(mut self, parent: &str, key: &str) -> Self {
        self.records.push(NodeRecord::new(key, Some(parent), key));
        self
    }

    pub fn children(mut self, parent: &str, keys: &[&str]) -> Self {
        for k in keys {
            self.records.push(NodeRecord::new(*k, Some(parent), *k));
        }
        self
    }

    pub fn build(self) -> Result<DimensionTree> {
        DimensionTree::from_records(self.records)
    }
}

/// A d-tuple of tree nodes, one per dimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductNode(pub Vec<NodeId>);

impl ProductNode {
    pub fn new(coords: Vec<NodeId>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[NodeId] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for ProductNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", c.0)?;
        }
        f.write_str(")")
    }
}

/// Cartesian product `T1 x ... x Td`. Product nodes are addressed by coordinate
/// tuples or by their mixed-radix linear index (last dimension varies fastest).
#[derive(Clone, Debug)]
pub struct ProductSpace {
    trees: Vec<DimensionTree>,
    strides: Vec<u64>,
    len: u64,
}

impl ProductSpace {
    pub fn new(trees: Vec<DimensionTree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Structural("a product space needs at least one dimension".into()));
        }
        if trees.len() > u8::MAX as usize - 2 {
            return Err(Error::Capacity(format!("{} dimensions is too many", trees.len())));
        }
        let mut strides = vec![1u64; trees.len()];
        let mut len: u64 = 1;
        for i in (0..trees.len()).rev() {
            strides[i] = len;
            len = len.checked_mul(trees[i].len() as u64).ok_or_else(|| {
                Error::Capacity("product space size overflows 64-bit indexing".into())
            })?;
        }
        Ok(Self { trees, strides, len })
    }

    pub fn dims(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[DimensionTree] {
        &self.trees
    }

    pub fn tree(&self, dim: usize) -> &DimensionTree {
        &self.trees[dim]
    }

    /// Total number of product nodes, `n`.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stride(&self, dim: usize) -> u64 {
        self.strides[dim]
    }

    pub fn root(&self) -> ProductNode {
        ProductNode(vec![NodeId(0); self.dims()])
    }

    pub fn check(&self, p: &ProductNode) -> Result<()> {
        if p.dims() != self.dims() {
            return Err(Error::Structural(format!(
                "product node has {} coordinates, space has {} dimensions",
                p.dims(),
                self.dims()
            )));
        }
        for (tree, &c) in self.trees.iter().zip(&p.0) {
            tree.check(c)?;
        }
        Ok(())
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim < self.dims() {
            Ok(())
        } else {
            Err(Error::Structural(format!(
                "dimension {dim} out of range for a {}-dimensional space",
                self.dims()
            )))
        }
    }

    pub fn index_of(&self, p: &ProductNode) -> Result<u64> {
        self.check(p)?;
        Ok(self.index_unchecked(p.coords()))
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, coords: &[NodeId]) -> u64 {
        coords
            .iter()
            .zip(&self.strides)
            .map(|(c, s)| c.0 as u64 * s)
            .sum()
    }

    #[inline]
    pub fn coord(&self, index: u64, dim: usize) -> NodeId {
        NodeId(((index / self.strides[dim]) % self.trees[dim].len() as u64) as u32)
    }

    pub fn node_at(&self, index: u64) -> ProductNode {
        debug_assert!(index < self.len);
        ProductNode((0..self.dims()).map(|i| self.coord(index, i)).collect())
    }

    /// Overlap of two product nodes: every dimension overlaps.
    pub fn overlap(&self, p: &ProductNode, q: &ProductNode) -> Result<bool> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.overlap_index(self.index_unchecked(&p.0), self.index_unchecked(&q.0)))
    }

    #[inline]
    pub fn overlap_index(&self, p: u64, q: u64) -> bool {
        (0..self.dims()).all(|i| self.trees[i].overlaps_unchecked(self.coord(p, i), self.coord(q, i)))
    }

    /// First dimension along which `p` and `q` do not overlap, if any.
    pub fn separating_dim(&self, p: &ProductNode, q: &ProductNode) -> Result<Option<usize>> {
        self.check(p)?;
        self.check(q)?;
        Ok((0..self.dims()).find(|&i| !self.trees[i].overlaps_unchecked(p.0[i], q.0[i])))
    }

    /// True iff `p` lies in `Sub(q)`: every coordinate of `p` is a descendant of or equal to `q`'s.
    pub fn in_subspace(&self, p: &ProductNode, q: &ProductNode) -> Result<bool> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.in_subspace_index(self.index_unchecked(&p.0), self.index_unchecked(&q.0)))
    }

    #[inline]
    pub fn in_subspace_index(&self, p: u64, q: u64) -> bool {
        (0..self.dims()).all(|i| self.trees[i].is_ancestor_or_self(self.coord(q, i), self.coord(p, i)))
    }

    /// `C_i(v)`: `v` with coordinate `dim` replaced by each child, in tree order.
    pub fn children_along(&self, v: &ProductNode, dim: usize) -> Result<Vec<ProductNode>> {
        self.check(v)?;
        self.check_dim(dim)?;
        Ok(self.trees[dim]
            .children(v.0[dim])
            .iter()
            .map(|&c| {
                let mut coords = v.0.clone();
                coords[dim] = c;
                ProductNode(coords)
            })
            .collect())
    }

    /// Linear indices of `C_i(v)` in tree order.
    pub fn children_along_index(&self, v: u64, dim: usize) -> impl Iterator<Item = u64> + '_ {
        let c = self.coord(v, dim);
        let base = v - c.0 as u64 * self.strides[dim];
        let stride = self.strides[dim];
        self.trees[dim]
            .children(c)
            .iter()
            .map(move |ch| base + ch.0 as u64 * stride)
    }

    /// Linear indices of the parents of `v`: at most one per non-root coordinate.
    pub fn parents_index(&self, v: u64) -> impl Iterator<Item = u64> + '_ {
        (0..self.dims()).filter_map(move |i| {
            let c = self.coord(v, i);
            self.trees[i]
                .parent(c)
                .map(|p| v - (c.0 - p.0) as u64 * self.strides[i])
        })
    }

    /// Sum of per-dimension depths; the root tuple has total depth 0.
    pub fn total_depth(&self, v: &ProductNode) -> Result<usize> {
        self.check(v)?;
        Ok(v.0.iter().zip(&self.trees).map(|(&c, t)| t.depth(c)).sum())
    }

    /// True iff every coordinate is a leaf of its tree.
    pub fn is_leaf_tuple(&self, v: &ProductNode) -> bool {
        v.0.iter().zip(&self.trees).all(|(&c, t)| t.is_leaf(c))
    }

    pub fn is_leaf_index(&self, v: u64) -> bool {
        (0..self.dims()).all(|i| self.trees[i].is_leaf(self.coord(v, i)))
    }

    /// Looks a tuple up by per-dimension node keys.
    pub fn node_by_keys<S: AsRef<str>>(&self, keys: &[S]) -> Result<ProductNode> {
        if keys.len() != self.dims() {
            return Err(Error::Structural(format!(
                "expected {} coordinates, got {}",
                self.dims(),
                keys.len()
            )));
        }
        keys.iter()
            .zip(&self.trees)
            .enumerate()
            .map(|(i, (k, t))| {
                t.lookup(k.as_ref()).ok_or_else(|| {
                    Error::Input(format!("unknown node '{}' in dimension {}", k.as_ref(), i + 1))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(ProductNode)
    }

    pub fn keys_of(&self, v: &ProductNode) -> Vec<&str> {
        v.0.iter().zip(&self.trees).map(|(&c, t)| t.key(c)).collect()
    }

    pub fn names_of(&self, v: &ProductNode) -> Vec<&str> {
        v.0.iter().zip(&self.trees).map(|(&c, t)| t.name(c)).collect()
    }
}
