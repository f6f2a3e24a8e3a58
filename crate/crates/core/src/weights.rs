//! Two-period metric cells, subspace aggregation, and the weight functions that
//! turn aggregated `(pre, cur)` pairs into nonnegative node weights.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::space::{ProductNode, ProductSpace};

/// Product spaces up to this many nodes get dense aggregate and weight arrays.
pub const DEFAULT_DENSE_BUDGET: u64 = 1 << 24;

/// Floor applied to metric values before the Box-Cox power when `m > 0`.
pub const DEFAULT_BOXCOX_FLOOR: f64 = 1e-9;

/// Metric value in the pre-period (`pre`) and the current period (`cur`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Metrics {
    pub pre: f64,
    pub cur: f64,
}

impl Metrics {
    pub const ZERO: Metrics = Metrics { pre: 0.0, cur: 0.0 };

    pub fn new(pre: f64, cur: f64) -> Self {
        Self { pre, cur }
    }

    pub fn is_zero(&self) -> bool {
        self.pre == 0.0 && self.cur == 0.0
    }
}

/// Leaf-level fact data keyed by leaf tuple. Absent cells are `(0, 0)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CellTable {
    cells: BTreeMap<u64, Metrics>,
}

impl CellTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a cell; values for a tuple that is already present are summed.
    pub fn insert(&mut self, space: &ProductSpace, leaf: &ProductNode, pre: f64, cur: f64) -> Result<()> {
        let idx = space.index_of(leaf)?;
        if !space.is_leaf_tuple(leaf) {
            return Err(Error::Input(format!(
                "cell {} is not a leaf tuple",
                space.keys_of(leaf).join(",")
            )));
        }
        for (what, v) in [("pre-period", pre), ("current-period", cur)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Input(format!(
                    "{what} metric {v} for cell {} must be finite and nonnegative",
                    space.keys_of(leaf).join(",")
                )));
            }
        }
        let e = self.cells.entry(idx).or_default();
        e.pre += pre;
        e.cur += cur;
        Ok(())
    }

    pub fn get(&self, index: u64) -> Metrics {
        self.cells.get(&index).copied().unwrap_or_default()
    }

    /// Cells in increasing linear-index order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, Metrics)> + '_ {
        self.cells.iter().map(|(&i, &m)| (i, m))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Multiplies one or both periods by a constant.
    pub fn scaled(&self, pre_factor: f64, cur_factor: f64) -> CellTable {
        CellTable {
            cells: self
                .cells
                .iter()
                .map(|(&i, m)| (i, Metrics::new(m.pre * pre_factor, m.cur * cur_factor)))
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
enum AggStore {
    Dense(Vec<Metrics>),
    Sparse(HashMap<u64, Metrics>),
}

/// `(pre, cur)` sums over `Sub(v)` for every product node `v`.
#[derive(Clone, Debug)]
pub struct AggregateTable {
    store: AggStore,
}

impl AggregateTable {
    pub fn get(&self, index: u64) -> Metrics {
        match &self.store {
            AggStore::Dense(v) => v[index as usize],
            AggStore::Sparse(m) => m.get(&index).copied().unwrap_or_default(),
        }
    }

    /// Aggregates at the root tuple, i.e. the grand totals of the cell table.
    pub fn totals(&self) -> Metrics {
        self.get(0)
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.store, AggStore::Dense(_))
    }

    /// Materialized nodes with their aggregates, in increasing index order.
    pub fn entries(&self) -> Vec<(u64, Metrics)> {
        match &self.store {
            AggStore::Dense(v) => v.iter().enumerate().map(|(i, &m)| (i as u64, m)).collect(),
            AggStore::Sparse(m) => {
                let mut out: Vec<_> = m.iter().map(|(&i, &v)| (i, v)).collect();
                out.sort_unstable_by_key(|e| e.0);
                out
            }
        }
    }
}

/// First dimension along which `v` has children. Internal sums always recurse
/// along this dimension so the floating-point addition order is fixed.
fn split_dim(space: &ProductSpace, v: u64) -> Option<usize> {
    (0..space.dims()).find(|&i| !space.tree(i).is_leaf(space.coord(v, i)))
}

pub fn aggregate(cells: &CellTable, space: &ProductSpace) -> Result<AggregateTable> {
    aggregate_with_budget(cells, space, DEFAULT_DENSE_BUDGET)
}

/// Sums cells over every subspace. Spaces no larger than `dense_budget` are stored
/// densely; larger ones materialize only ancestors of nonzero cells.
pub fn aggregate_with_budget(cells: &CellTable, space: &ProductSpace, dense_budget: u64) -> Result<AggregateTable> {
    if let Some((idx, _)) = cells.iter().find(|&(i, _)| i >= space.len() || !space.is_leaf_index(i)) {
        return Err(Error::Input(format!("cell index {idx} is not a leaf tuple of this space")));
    }
    if space.len() <= dense_budget && usize::try_from(space.len()).is_ok() {
        let n = space.len() as usize;
        let mut agg = vec![Metrics::ZERO; n];
        for v in (0..n as u64).rev() {
            agg[v as usize] = match split_dim(space, v) {
                None => cells.get(v),
                Some(dim) => {
                    let mut sum = Metrics::ZERO;
                    for c in space.children_along_index(v, dim) {
                        let m = agg[c as usize];
                        sum.pre += m.pre;
                        sum.cur += m.cur;
                    }
                    sum
                }
            };
        }
        return Ok(AggregateTable { store: AggStore::Dense(agg) });
    }

    let mut members: HashSet<u64> = HashSet::new();
    let mut frontier: Vec<u64> = cells.iter().filter(|(_, m)| !m.is_zero()).map(|(i, _)| i).collect();
    while let Some(v) = frontier.pop() {
        if members.insert(v) {
            frontier.extend(space.parents_index(v));
        }
    }
    let mut order: Vec<u64> = members.into_iter().collect();
    order.sort_unstable_by(|a, b| b.cmp(a));
    let mut agg: HashMap<u64, Metrics> = HashMap::with_capacity(order.len());
    for v in order {
        let value = match split_dim(space, v) {
            None => cells.get(v),
            Some(dim) => {
                // Absent children are zero; skipping them leaves the sum bit-identical.
                let mut sum = Metrics::ZERO;
                for c in space.children_along_index(v, dim) {
                    if let Some(m) = agg.get(&c) {
                        sum.pre += m.pre;
                        sum.cur += m.cur;
                    }
                }
                sum
            }
        };
        agg.insert(v, value);
    }
    Ok(AggregateTable { store: AggStore::Sparse(agg) })
}

pub fn weight_absdiff(pre: f64, cur: f64) -> f64 {
    (cur - pre).abs()
}

/// Change in a node's share of the total between the two periods.
pub fn weight_composition(pre: f64, cur: f64, pre_total: f64, cur_total: f64) -> Result<f64> {
    if !(pre_total > 0.0 && cur_total > 0.0) {
        return Err(Error::Config(format!(
            "composition weights need positive totals in both periods (got {pre_total} and {cur_total})"
        )));
    }
    Ok((pre / pre_total - cur / cur_total).abs())
}

pub fn weight_boxcox(pre: f64, cur: f64, m: f64) -> Result<f64> {
    weight_boxcox_with_floor(pre, cur, m, DEFAULT_BOXCOX_FLOOR)
}

/// `|cur^(1-m) - pre^(1-m)| / (1-m)`. For `m > 0` both values are first raised
/// to at least `floor`.
///
/// `m = 1` is rejected: the limit there is `log(cur) - log(pre)`, which is a
/// different weight and is not computed implicitly.
pub fn weight_boxcox_with_floor(pre: f64, cur: f64, m: f64, floor: f64) -> Result<f64> {
    check_boxcox(m, floor)?;
    let power = 1.0 - m;
    let (pre, cur) = if m > 0.0 { (pre.max(floor), cur.max(floor)) } else { (pre, cur) };
    Ok((cur.powf(power) - pre.powf(power)).abs() / power)
}

fn check_boxcox(m: f64, floor: f64) -> Result<()> {
    if m == 1.0 {
        return Err(Error::Config(
            "Box-Cox exponent m = 1 is the log-difference limit, which is not supported; use m < 1".into(),
        ));
    }
    if !(0.0..1.0).contains(&m) {
        return Err(Error::Config(format!("Box-Cox exponent m must lie in [0, 1), got {m}")));
    }
    if !(floor.is_finite() && floor > 0.0) {
        return Err(Error::Config(format!("Box-Cox floor must be positive, got {floor}")));
    }
    Ok(())
}

/// Selects how aggregated metrics become weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightFunction {
    AbsDiff,
    Composition,
    BoxCox { m: f64, floor: f64 },
}

impl WeightFunction {
    pub fn box_cox(m: f64) -> Self {
        WeightFunction::BoxCox { m, floor: DEFAULT_BOXCOX_FLOOR }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightFunction::AbsDiff => "absdiff",
            WeightFunction::Composition => "composition",
            WeightFunction::BoxCox { .. } => "boxcox",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightFunction::BoxCox { m, floor } => check_boxcox(m, floor),
            _ => Ok(()),
        }
    }

    /// Weight of one node given its aggregates and the grand totals.
    pub fn apply(&self, m: Metrics, totals: Metrics) -> Result<f64> {
        match *self {
            WeightFunction::AbsDiff => Ok(weight_absdiff(m.pre, m.cur)),
            WeightFunction::Composition => weight_composition(m.pre, m.cur, totals.pre, totals.cur),
            WeightFunction::BoxCox { m: exp, floor } => weight_boxcox_with_floor(m.pre, m.cur, exp, floor),
        }
    }
}

#[derive(Clone, Debug)]
enum WeightStore {
    Dense(Vec<f64>),
    Sparse(HashMap<u64, f64>),
}

/// Nonnegative weight for every product node. Sparse maps hold only positive
/// entries; everything else weighs 0.
#[derive(Clone, Debug)]
pub struct WeightMap {
    len: u64,
    store: WeightStore,
}

fn check_weight(index: u64, w: f64) -> Result<()> {
    if w.is_finite() && w >= 0.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("weight {w} at node index {index} must be finite and nonnegative")))
    }
}

impl WeightMap {
    pub fn dense(space: &ProductSpace, weights: Vec<f64>) -> Result<Self> {
        if weights.len() as u64 != space.len() {
            return Err(Error::Structural(format!(
                "dense weight map has {} entries, space has {} nodes",
                weights.len(),
                space.len()
            )));
        }
        for (i, &w) in weights.iter().enumerate() {
            check_weight(i as u64, w)?;
        }
        Ok(Self { len: space.len(), store: WeightStore::Dense(weights) })
    }

    /// Weights given by linear index. Repeated indices are an error.
    pub fn sparse<I>(space: &ProductSpace, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, f64)>,
    {
        let mut map = HashMap::new();
        for (i, w) in entries {
            if i >= space.len() {
                return Err(Error::Structural(format!("node index {i} out of range")));
            }
            check_weight(i, w)?;
            if map.insert(i, w).is_some() {
                return Err(Error::Input(format!("node index {i} has more than one weight")));
            }
        }
        map.retain(|_, w| *w > 0.0);
        Ok(Self { len: space.len(), store: WeightStore::Sparse(map) })
    }

    pub fn from_nodes(space: &ProductSpace, entries: &[(ProductNode, f64)]) -> Result<Self> {
        let idx = entries
            .iter()
            .map(|(p, w)| space.index_of(p).map(|i| (i, *w)))
            .collect::<Result<Vec<_>>>()?;
        Self::sparse(space, idx)
    }

    pub fn zeros(space: &ProductSpace) -> Self {
        Self { len: space.len(), store: WeightStore::Sparse(HashMap::new()) }
    }

    #[inline]
    pub fn get(&self, index: u64) -> f64 {
        match &self.store {
            WeightStore::Dense(v) => v[index as usize],
            WeightStore::Sparse(m) => m.get(&index).copied().unwrap_or(0.0),
        }
    }

    pub fn get_node(&self, space: &ProductSpace, p: &ProductNode) -> Result<f64> {
        Ok(self.get(space.index_of(p)?))
    }

    /// Number of product nodes the map covers.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.store, WeightStore::Dense(_))
    }

    pub(crate) fn dense_slice(&self) -> Option<&[f64]> {
        match &self.store {
            WeightStore::Dense(v) => Some(v),
            WeightStore::Sparse(_) => None,
        }
    }

    /// Positive-weight nodes in increasing index order.
    pub fn positive(&self) -> Vec<(u64, f64)> {
        let mut out: Vec<(u64, f64)> = match &self.store {
            WeightStore::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(i, &w)| (i as u64, w))
                .collect(),
            WeightStore::Sparse(m) => m.iter().map(|(&i, &w)| (i, w)).collect(),
        };
        out.sort_unstable_by_key(|e| e.0);
        out
    }

    pub fn to_sparse(&self) -> WeightMap {
        WeightMap {
            len: self.len,
            store: WeightStore::Sparse(self.positive().into_iter().collect()),
        }
    }

    pub fn to_dense(&self) -> Result<WeightMap> {
        let n = usize::try_from(self.len)
            .map_err(|_| Error::Capacity("weight map too large for dense storage".into()))?;
        let mut v = vec![0.0; n];
        for (i, w) in self.positive() {
            v[i as usize] = w;
        }
        Ok(WeightMap { len: self.len, store: WeightStore::Dense(v) })
    }

    /// Every weight multiplied by `factor` (must be positive and finite).
    pub fn scaled(&self, factor: f64) -> Result<WeightMap> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Config(format!("scale factor {factor} must be positive")));
        }
        let store = match &self.store {
            WeightStore::Dense(v) => WeightStore::Dense(v.iter().map(|w| w * factor).collect()),
            WeightStore::Sparse(m) => WeightStore::Sparse(m.iter().map(|(&i, &w)| (i, w * factor)).collect()),
        };
        Ok(WeightMap { len: self.len, store })
    }
}

/// Options for [`build_weight_map_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightOptions {
    pub function: WeightFunction,
    pub dense_budget: u64,
}

impl WeightOptions {
    pub fn new(function: WeightFunction) -> Self {
        Self { function, dense_budget: DEFAULT_DENSE_BUDGET }
    }
}

pub fn build_weight_map(cells: &CellTable, space: &ProductSpace, function: WeightFunction) -> Result<WeightMap> {
    build_weight_map_with(cells, space, &WeightOptions::new(function))
}

pub fn build_weight_map_with(cells: &CellTable, space: &ProductSpace, opts: &WeightOptions) -> Result<WeightMap> {
    opts.function.validate()?;
    let agg = aggregate_with_budget(cells, space, opts.dense_budget)?;
    weights_from_aggregates(&agg, space, opts.function)
}

/// Applies a weight function to every materialized aggregate.
pub fn weights_from_aggregates(agg: &AggregateTable, space: &ProductSpace, function: WeightFunction) -> Result<WeightMap> {
    function.validate()?;
    let totals = agg.totals();
    if function == WeightFunction::Composition {
        // Fail on degenerate totals even when there is nothing else to weigh.
        weight_composition(0.0, 0.0, totals.pre, totals.cur)?;
    }
    match &agg.store {
        AggStore::Dense(v) => {
            let w = v.iter().map(|&m| function.apply(m, totals)).collect::<Result<Vec<_>>>()?;
            WeightMap::dense(space, w)
        }
        AggStore::Sparse(m) => {
            let mut entries = Vec::with_capacity(m.len());
            for (&i, &v) in m {
                entries.push((i, function.apply(v, totals)?));
            }
            WeightMap::sparse(space, entries)
        }
    }
}
