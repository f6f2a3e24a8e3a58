//! Named instance families and seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::space::{DimensionTree, NodeRecord, ProductNode, ProductSpace};
use crate::weights::{build_weight_map, CellTable, WeightFunction, WeightMap};

/// Optimal weights known from the construction, when there are any.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KnownOptima {
    pub overlap_free: Option<f64>,
    pub conflict_free: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub name: &'static str,
    pub params: Value,
    pub space: ProductSpace,
    pub weights: WeightMap,
    /// Leaf cells the weights were derived from; `None` for weight-defined families.
    pub cells: Option<CellTable>,
    /// Output budget the construction is meant to be solved with.
    pub k: usize,
    pub known: KnownOptima,
}

/// A directed graph without self-loops or repeated edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Digraph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(v, w) in &edges {
            if v >= vertices || w >= vertices {
                return Err(Error::Input(format!("edge ({v},{w}) references a missing vertex")));
            }
            if v == w {
                return Err(Error::Input(format!("self-loop at vertex {v}")));
            }
            if !seen.insert((v, w)) {
                return Err(Error::Input(format!("duplicate edge ({v},{w})")));
            }
        }
        Ok(Self { vertices, edges })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

fn star(prefix: &str, leaves: impl IntoIterator<Item = String>) -> Result<DimensionTree> {
    let mut records = vec![NodeRecord::new(prefix, None, prefix)];
    records.extend(leaves.into_iter().map(|l| NodeRecord::new(l.clone(), Some(prefix), l)));
    DimensionTree::from_records(records)
}

fn two_leaf_tree(i: usize) -> Result<DimensionTree> {
    star(&format!("r{i}"), [format!("a{i}"), format!("b{i}")])
}

/// Two trees `r_i -> {a_i, b_i}`. Leaves `(., a2)` rise by `x`, leaves
/// `(., b2)` fall by `x`, so the change lives entirely along dimension 2.
pub fn gen_two_tree_example(x: f64) -> Result<GeneratedInstance> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Config(format!("x must be positive, got {x}")));
    }
    let space = ProductSpace::new(vec![two_leaf_tree(1)?, two_leaf_tree(2)?])?;
    let mut cells = CellTable::new();
    for (a, b, cur) in [("a1", "a2", 2.0 * x), ("b1", "a2", 2.0 * x), ("a1", "b2", 0.0), ("b1", "b2", 0.0)] {
        cells.insert(&space, &space.node_by_keys(&[a, b])?, x, cur)?;
    }
    let weights = build_weight_map(&cells, &space, WeightFunction::AbsDiff)?;
    Ok(GeneratedInstance {
        name: "two-tree",
        params: json!({ "x": x }),
        space,
        weights,
        cells: Some(cells),
        k: 2,
        known: KnownOptima { overlap_free: Some(4.0 * x), conflict_free: Some(4.0 * x) },
    })
}

/// The three pairwise non-overlapping nodes of a single conflict, as coordinate
/// patterns over one block of three dimensions (`0 = r`, `1 = a`, `2 = b`).
const CONFLICT_BLOCK: [[usize; 3]; 3] = [[0, 2, 1], [1, 0, 2], [2, 1, 0]];

fn block_key(dim: usize, which: usize) -> String {
    let letter = ["r", "a", "b"][which];
    format!("{letter}{}", dim + 1)
}

/// Three two-leaf trees with unit weight on `(r1,b2,a3)`, `(a1,r2,b3)`, `(b1,a2,r3)`.
pub fn gen_simple_conflict() -> Result<GeneratedInstance> {
    let mut inst = gen_power_conflict(1)?;
    inst.name = "simple-conflict";
    inst.params = json!({});
    Ok(inst)
}

/// `3m` two-leaf trees; unit weight on every node of `S_1 x ... x S_m`, where
/// each `S_i` places the simple conflict on dimensions `3i-2, 3i-1, 3i`.
pub fn gen_power_conflict(m: usize) -> Result<GeneratedInstance> {
    if !(1..=4).contains(&m) {
        return Err(Error::Capacity(format!("power conflict supports 1 <= m <= 4, got {m}")));
    }
    let d = 3 * m;
    let space = ProductSpace::new((1..=d).map(two_leaf_tree).collect::<Result<_>>()?)?;
    let count = 3usize.pow(m as u32);
    let mut entries = Vec::with_capacity(count);
    for mut code in 0..count {
        let mut keys = Vec::with_capacity(d);
        for block in 0..m {
            let pattern = CONFLICT_BLOCK[code % 3];
            code /= 3;
            keys.extend((0..3).map(|o| block_key(3 * block + o, pattern[o])));
        }
        entries.push((space.node_by_keys(&keys)?, 1.0));
    }
    let weights = WeightMap::from_nodes(&space, &entries)?;
    Ok(GeneratedInstance {
        name: "power-conflict",
        params: json!({ "m": m }),
        space,
        weights,
        cells: None,
        k: count,
        known: KnownOptima {
            overlap_free: Some(count as f64),
            conflict_free: Some(2f64.powi(m as i32)),
        },
    })
}

/// Three height-two trees `A`, `B` (one leaf per vertex) and `C` (one leaf per
/// edge). `N_v = (a_v, b_v, c)` weighs 1; `N_vw = (a_v, b, c_vw)` and
/// `N'_vw = (a, b_w, c_vw)` weigh `1 + epsilon`. The graph has an independent
/// set of size `s` iff some overlap-free set weighs at least `s + (1 + epsilon)|E|`.
pub fn gen_mis_reduction(graph: &Digraph, epsilon: f64) -> Result<GeneratedInstance> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = graph.vertices();
    let edge_key = |&(v, w): &(usize, usize)| format!("c{v}_{w}");
    let a = star("a", (0..n).map(|v| format!("a{v}")))?;
    let b = star("b", (0..n).map(|v| format!("b{v}")))?;
    let c = star("c", graph.edges().iter().map(edge_key))?;
    let space = ProductSpace::new(vec![a, b, c])?;
    let beta = 1.0 + epsilon;
    let mut entries: Vec<(ProductNode, f64)> = Vec::new();
    for v in 0..n {
        entries.push((space.node_by_keys(&[format!("a{v}"), format!("b{v}"), "c".into()])?, 1.0));
    }
    for e @ &(v, w) in graph.edges() {
        entries.push((space.node_by_keys(&[format!("a{v}"), "b".into(), edge_key(e)])?, beta));
        entries.push((space.node_by_keys(&["a".into(), format!("b{w}"), edge_key(e)])?, beta));
    }
    let weights = WeightMap::from_nodes(&space, &entries)?;
    let known = if n <= 24 {
        let mis = max_independent_set_size(graph)?;
        Some(mis as f64 + beta * graph.edges().len() as f64)
    } else {
        None
    };
    Ok(GeneratedInstance {
        name: "mis-reduction",
        params: json!({ "vertices": n, "edges": graph.edges(), "epsilon": epsilon }),
        space,
        weights,
        cells: None,
        k: entries.len().max(1),
        known: KnownOptima { overlap_free: known, conflict_free: None },
    })
}

/// Size of a maximum independent set, by enumeration (at most 24 vertices).
pub fn max_independent_set_size(graph: &Digraph) -> Result<usize> {
    let n = graph.vertices();
    if n > 24 {
        return Err(Error::Capacity(format!("independent-set enumeration supports 24 vertices, got {n}")));
    }
    let masks: Vec<u32> = graph.edges().iter().map(|&(v, w)| (1 << v) | (1 << w)).collect();
    Ok((0u32..1 << n)
        .filter(|s| masks.iter().all(|&e| s & e != e))
        .map(|s| s.count_ones() as usize)
        .max()
        .unwrap_or(0))
}

/// Seeded random digraph with up to `max_vertices` vertices (at least 1) and
/// up to `max_edges` distinct edges.
pub fn random_digraph(seed: u64, max_vertices: usize, max_edges: usize) -> Result<Digraph> {
    if max_vertices == 0 {
        return Err(Error::Config("a digraph needs at least one vertex".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_vertices);
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|v| (0..n).map(move |w| (v, w))).filter(|(v, w)| v != w).collect();
    let m = rng.gen_range(0..=max_edges.min(pairs.len()));
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        edges.push(pairs.swap_remove(rng.gen_range(0..pairs.len())));
    }
    Digraph::new(n, edges)
}

/// Random tree with exactly `size` nodes and at most `max_height` nodes on any
/// root-to-leaf path. Node keys are `{prefix}{j}` in creation order.
pub fn random_tree<R: Rng>(rng: &mut R, size: usize, max_height: usize, prefix: &str) -> Result<DimensionTree> {
    if size == 0 {
        return Err(Error::Config("tree size must be at least 1".into()));
    }
    if max_height == 0 || (max_height == 1 && size > 1) {
        return Err(Error::Config(format!("cannot fit {size} nodes into height {max_height}")));
    }
    let key = |j: usize| format!("{prefix}{j}");
    let mut depth = vec![0usize];
    let mut records = vec![NodeRecord::new(key(0), None, key(0))];
    for j in 1..size {
        let open: Vec<usize> = (0..j).filter(|&p| depth[p] + 1 < max_height).collect();
        let parent = open[rng.gen_range(0..open.len())];
        depth.push(depth[parent] + 1);
        records.push(NodeRecord::new(key(j), Some(&key(parent)), key(j)));
    }
    DimensionTree::from_records(records)
}

/// Parameters of [`gen_random`].
#[derive(Clone, Debug, PartialEq)]
pub struct RandomSpec {
    pub tree_sizes: Vec<usize>,
    pub max_height: usize,
    /// Probability that a leaf tuple carries a cell.
    pub cell_density: f64,
    pub seed: u64,
}

/// Random trees of the given sizes and random integer cells in `[0, 100]`,
/// weighted by absolute difference. Fully determined by `spec`.
pub fn gen_random(spec: &RandomSpec) -> Result<GeneratedInstance> {
    if spec.tree_sizes.is_empty() {
        return Err(Error::Config("need at least one dimension".into()));
    }
    if !(0.0..=1.0).contains(&spec.cell_density) {
        return Err(Error::Config(format!("cell density {} outside [0, 1]", spec.cell_density)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let trees = spec
        .tree_sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| random_tree(&mut rng, size, spec.max_height, &format!("t{}_", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let leaves: Vec<Vec<_>> = trees.iter().map(|t| t.leaves().collect()).collect();
    let space = ProductSpace::new(trees)?;

    let mut cells = CellTable::new();
    let mut cursor = vec![0usize; leaves.len()];
    'tuples: loop {
        if rng.gen_bool(spec.cell_density) {
            let node = ProductNode::new(cursor.iter().zip(&leaves).map(|(&c, l)| l[c]).collect());
            let pre = rng.gen_range(0..=100) as f64;
            let cur = rng.gen_range(0..=100) as f64;
            cells.insert(&space, &node, pre, cur)?;
        }
        for dim in (0..cursor.len()).rev() {
            cursor[dim] += 1;
            if cursor[dim] < leaves[dim].len() {
                continue 'tuples;
            }
            cursor[dim] = 0;
        }
        break;
    }
    let weights = build_weight_map(&cells, &space, WeightFunction::AbsDiff)?;
    Ok(GeneratedInstance {
        name: "random",
        params: json!({
            "tree_sizes": spec.tree_sizes,
            "max_height": spec.max_height,
            "cell_density": spec.cell_density,
            "seed": spec.seed,
        }),
        space,
        weights,
        cells: Some(cells),
        k: 1,
        known: KnownOptima::default(),
    })
}
