//! CSV formats for hierarchies, leaf facts, explicit node weights and digraphs.
//!
//! * hierarchy: `id,parent_id,name`; the root has an empty `parent_id`, sibling
//!   order is file order.
//! * facts: `dim1,...,dimd,metric_pre,metric_cur`; dimension columns hold leaf ids.
//!   Repeated tuples are summed, missing tuples are `(0, 0)`.
//! * weights: `dim1,...,dimd,weight`; any node may appear, each at most once.
//! * digraph: `source,target` with zero-based vertex numbers.
//!
//! Writers emit a canonical form (hierarchies in preorder, rows in linear-index
//! order) so that reading and writing again reproduces the same bytes.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::error::{Error, Result};
use crate::generators::Digraph;
use crate::space::{DimensionTree, NodeRecord, ProductNode, ProductSpace};
use crate::weights::{CellTable, WeightMap};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn parse_err(file: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { file: file.to_owned(), line, message: message.into() }
}

fn csv_err(file: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_err(file, line, e.to_string())
}

fn with_line(file: &Path, line: u64, e: Error) -> Error {
    match e {
        Error::Input(m) => Error::Input(format!("{}:{line}: {m}", file.display())),
        other => other,
    }
}

fn write_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_owned(), source },
        other => Error::Io {
            path: path.to_owned(),
            source: std::io::Error::other(format!("{other:?}")),
        },
    }
}

/// Reads every row after checking the header, yielding `(line, record)`.
fn records<R: Read>(reader: R, file: &Path, expect_header: &[String]) -> Result<Vec<(u64, StringRecord)>> {
    let mut rdr = ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(file, e))?.clone();
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expect_header {
        return Err(parse_err(
            file,
            1,
            format!("expected header '{}', found '{}'", expect_header.join(","), got.join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(file, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != expect_header.len() {
            return Err(parse_err(
                file,
                line,
                format!("expected {} fields, found {}", expect_header.len(), rec.len()),
            ));
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn parse_hierarchy<R: Read>(reader: R, file: &Path) -> Result<DimensionTree> {
    let rows = records(reader, file, &strings(&["id", "parent_id", "name"]))?;
    let mut recs = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        let id = r[0].trim();
        if id.is_empty() {
            return Err(parse_err(file, line, "empty node id"));
        }
        let parent = r[1].trim();
        recs.push(NodeRecord::new(id, (!parent.is_empty()).then_some(parent), &r[2]));
    }
    DimensionTree::from_records(recs).map_err(|e| match e {
        Error::Input(m) => Error::Input(format!("{}: {m}", file.display())),
        other => other,
    })
}

pub fn read_hierarchy(path: &Path) -> Result<DimensionTree> {
    parse_hierarchy(open(path)?, path)
}

pub fn write_hierarchy<W: Write>(tree: &DimensionTree, writer: W, path: &Path) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    w.write_record(["id", "parent_id", "name"]).map_err(|e| write_err(path, e))?;
    for r in tree.records() {
        w.write_record([r.key.as_str(), r.parent.as_deref().unwrap_or(""), r.name.as_str()])
            .map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn dim_header(d: usize, tail: &[&str]) -> Vec<String> {
    (1..=d).map(|i| format!("dim{i}")).chain(tail.iter().map(|s| s.to_string())).collect()
}

fn parse_number(file: &Path, line: u64, column: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| parse_err(file, line, format!("{column}: '{text}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(file, line, format!("{column}: '{text}' is not finite")));
    }
    Ok(v)
}

fn row_node(space: &ProductSpace, file: &Path, line: u64, rec: &StringRecord) -> Result<ProductNode> {
    let keys: Vec<&str> = rec.iter().take(space.dims()).map(str::trim).collect();
    space.node_by_keys(&keys).map_err(|e| with_line(file, line, e))
}

pub fn parse_facts<R: Read>(reader: R, file: &Path, space: &ProductSpace) -> Result<CellTable> {
    let rows = records(reader, file, &dim_header(space.dims(), &["metric_pre", "metric_cur"]))?;
    let d = space.dims();
    let mut cells = CellTable::new();
    for (line, r) in rows {
        let node = row_node(space, file, line, &r)?;
        let pre = parse_number(file, line, "metric_pre", &r[d])?;
        let cur = parse_number(file, line, "metric_cur", &r[d + 1])?;
        cells.insert(space, &node, pre, cur).map_err(|e| with_line(file, line, e))?;
    }
    Ok(cells)
}

pub fn read_facts(path: &Path, space: &ProductSpace) -> Result<CellTable> {
    parse_facts(open(path)?, path, space)
}

pub fn write_facts<W: Write>(space: &ProductSpace, cells: &CellTable, writer: W, path: &Path) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    w.write_record(dim_header(space.dims(), &["metric_pre", "metric_cur"]))
        .map_err(|e| write_err(path, e))?;
    for (idx, m) in cells.iter() {
        let node = space.node_at(idx);
        let mut row: Vec<String> = space.keys_of(&node).into_iter().map(str::to_owned).collect();
        row.push(m.pre.to_string());
        row.push(m.cur.to_string());
        w.write_record(&row).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_owned(), source })
}

pub fn parse_weights<R: Read>(reader: R, file: &Path, space: &ProductSpace) -> Result<WeightMap> {
    let rows = records(reader, file, &dim_header(space.dims(), &["weight"]))?;
    let d = space.dims();
    let mut entries = Vec::with_capacity(rows.len());
    let mut seen = std::collections::HashSet::new();
    for (line, r) in rows {
        let node = row_node(space, file, line, &r)?;
        let w = parse_number(file, line, "weight", &r[d])?;
        if w < 0.0 {
            return Err(Error::Input(format!("{}:{line}: negative weight {w}", file.display())));
        }
        let idx = space.index_of(&node)?;
        if !seen.insert(idx) {
            return Err(Error::Input(format!("{}:{line}: node listed twice", file.display())));
        }
        entries.push((idx, w));
    }
    WeightMap::sparse(space, entries)
}

pub fn read_weights(path: &Path, space: &ProductSpace) -> Result<WeightMap> {
    parse_weights(open(path)?, path, space)
}

pub fn write_weights<W: Write>(space: &ProductSpace, weights: &WeightMap, writer: W, path: &Path) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    w.write_record(dim_header(space.dims(), &["weight"])).map_err(|e| write_err(path, e))?;
    for (idx, weight) in weights.positive() {
        let node = space.node_at(idx);
        let mut row: Vec<String> = space.keys_of(&node).into_iter().map(str::to_owned).collect();
        row.push(weight.to_string());
        w.write_record(&row).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_owned(), source })
}

/// Edge list; the vertex count is `vertices` or, if absent, one past the largest vertex named.
pub fn read_digraph(path: &Path, vertices: Option<usize>) -> Result<Digraph> {
    let rows = records(open(path)?, path, &strings(&["source", "target"]))?;
    let mut edges = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(path, line, format!("'{s}' is not a vertex number")))
        };
        edges.push((parse(&r[0])?, parse(&r[1])?));
    }
    let n = vertices.unwrap_or_else(|| edges.iter().map(|&(v, w)| v.max(w) + 1).max().unwrap_or(0));
    Digraph::new(n, edges)
}

pub fn read_space(hierarchies: &[PathBuf]) -> Result<ProductSpace> {
    if hierarchies.is_empty() {
        return Err(Error::Config("at least one hierarchy file is required".into()));
    }
    let trees = hierarchies.iter().map(|p| read_hierarchy(p)).collect::<Result<Vec<_>>>()?;
    ProductSpace::new(trees)
}

/// Reads hierarchy files (in dimension order) and a facts file.
pub fn ingest(hierarchies: &[PathBuf], facts: &Path) -> Result<(ProductSpace, CellTable)> {
    let space = read_space(hierarchies)?;
    let cells = read_facts(facts, &space)?;
    Ok((space, cells))
}

/// Writes `dim{i}.csv` for every dimension into `dir` and returns the paths.
pub fn write_space(space: &ProductSpace, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_owned(), source })?;
    let mut paths = Vec::with_capacity(space.dims());
    for (i, tree) in space.trees().iter().enumerate() {
        let p = dir.join(format!("dim{}.csv", i + 1));
        write_hierarchy(tree, create(&p)?, &p)?;
        paths.push(p);
    }
    Ok(paths)
}

pub fn write_facts_file(space: &ProductSpace, cells: &CellTable, path: &Path) -> Result<()> {
    write_facts(space, cells, create(path)?, path)
}

pub fn write_weights_file(space: &ProductSpace, weights: &WeightMap, path: &Path) -> Result<()> {
    write_weights(space, weights, create(path)?, path)
}
