use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use super::IoError;
use crate::geometry::Coords;
use crate::{GeometryType, GridConfig, GridContainer, GridFactory, LagrangeP2, PersistentId};

/// A grid read from an MSH file together with its physical tags.
pub struct GmshMesh {
    pub grid: GridContainer,
    /// Physical tag of each macro element, keyed by element id.
    pub element_tags: HashMap<PersistentId, i32>,
    /// Physical tags of point elements (type 15), keyed by vertex id. Vertex
    /// copies share ids, so leaf vertices can be looked up directly.
    pub vertex_tags: HashMap<PersistentId, i32>,
}

impl GmshMesh {
    /// Physical tag of the macro ancestor of `element`.
    pub fn element_tag(&self, element: crate::Entity) -> Option<i32> {
        let m = self.grid.macro_ancestor(element).ok()?;
        self.element_tags.get(&self.grid.id(m).ok()?).copied()
    }

    pub fn vertex_tag(&self, vertex: crate::Entity) -> Option<i32> {
        self.vertex_tags.get(&self.grid.id(vertex).ok()?).copied()
    }
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<String>, IoError> {
        loop {
            match self.inner.next() {
                None => return Ok(None),
                Some(l) => {
                    self.number += 1;
                    let l = l?;
                    let t = l.trim();
                    if !t.is_empty() {
                        return Ok(Some(t.to_string()));
                    }
                }
            }
        }
    }

    fn expect_line(&mut self, what: &str) -> Result<String, IoError> {
        self.next_line()?.ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, msg: impl Into<String>) -> IoError {
        IoError::Parse { line: self.number, msg: msg.into() }
    }

    fn parse<T: std::str::FromStr>(&self, tok: Option<&str>, what: &str) -> Result<T, IoError> {
        let tok = tok.ok_or_else(|| self.err(format!("missing {what}")))?;
        tok.parse().map_err(|_| self.err(format!("invalid {what} '{tok}'")))
    }

    fn count(&mut self, what: &str) -> Result<usize, IoError> {
        let l = self.expect_line(what)?;
        self.parse(l.split_whitespace().next(), what)
    }
}

/// Number of nodes for the element types handled here.
fn corner_count(kind: u32) -> Option<(usize, usize)> {
    // (element dimension, number of corners)
    match kind {
        1 | 8 => Some((1, 2)),
        2 | 9 => Some((2, 3)),
        _ => None,
    }
}

struct RawElement {
    kind: u32,
    tag: i32,
    nodes: Vec<usize>,
}

/// Reads an MSH 2.2 ASCII file. Elements of the grid dimension become
/// macro elements; 3-node lines and 6-node triangles additionally get a
/// quadratic parametrization through all their nodes. Coordinates are
/// truncated or zero-padded to the world dimension.
pub fn read_gmsh<R: BufRead>(reader: R, config: GridConfig) -> Result<GmshMesh, IoError> {
    let mut lines = Lines { inner: reader.lines(), number: 0 };
    let mut version_seen = false;
    let mut nodes: HashMap<usize, [f64; 3]> = HashMap::new();
    let mut node_order: Vec<usize> = Vec::new();
    let mut elements: Vec<RawElement> = Vec::new();
    let mut points: Vec<(usize, i32)> = Vec::new();

    while let Some(line) = lines.next_line()? {
        match line.as_str() {
            "$MeshFormat" => {
                let l = lines.expect_line("format line")?;
                let mut t = l.split_whitespace();
                let version = t.next().unwrap_or("");
                let file_type: u32 = lines.parse(t.next(), "file type")?;
                if !version.starts_with("2.") {
                    return Err(IoError::Unsupported(format!("MSH version {version} (only 2.x is read)")));
                }
                if file_type != 0 {
                    return Err(IoError::Unsupported("binary MSH".into()));
                }
                version_seen = true;
                expect_end(&mut lines, "$EndMeshFormat")?;
            }
            "$Nodes" => {
                let n = lines.count("node count")?;
                for _ in 0..n {
                    let l = lines.expect_line("node")?;
                    let mut t = l.split_whitespace();
                    let id: usize = lines.parse(t.next(), "node id")?;
                    let mut x = [0.0; 3];
                    for c in &mut x {
                        *c = lines.parse(t.next(), "node coordinate")?;
                    }
                    if nodes.insert(id, x).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    node_order.push(id);
                }
                expect_end(&mut lines, "$EndNodes")?;
            }
            "$Elements" => {
                let n = lines.count("element count")?;
                for _ in 0..n {
                    let l = lines.expect_line("element")?;
                    let mut t = l.split_whitespace();
                    let _id: usize = lines.parse(t.next(), "element id")?;
                    let kind: u32 = lines.parse(t.next(), "element type")?;
                    let ntags: usize = lines.parse(t.next(), "tag count")?;
                    let mut tags = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        tags.push(lines.parse::<i32>(t.next(), "tag")?);
                    }
                    let tag = tags.first().copied().unwrap_or(0);
                    let ids: Vec<usize> =
                        t.map(|s| lines.parse(Some(s), "node reference")).collect::<Result<_, _>>()?;
                    let expected = match kind {
                        1 => Some(2),
                        2 | 8 => Some(3),
                        9 => Some(6),
                        15 => Some(1),
                        _ => None,
                    };
                    match expected {
                        Some(k) if k != ids.len() => {
                            return Err(lines.err(format!("element type {kind} needs {k} nodes, got {}", ids.len())));
                        }
                        Some(_) => {}
                        None => {
                            log::warn!("line {}: element type {kind} not supported, skipped", lines.number);
                            continue;
                        }
                    }
                    if let Some(bad) = ids.iter().find(|i| !nodes.contains_key(i)) {
                        return Err(lines.err(format!("element references unknown node {bad}")));
                    }
                    if kind == 15 {
                        points.push((ids[0], tag));
                    } else {
                        elements.push(RawElement { kind, tag, nodes: ids });
                    }
                }
                expect_end(&mut lines, "$EndElements")?;
            }
            s if s.starts_with("$") => {
                // Unknown section: skip to its end marker.
                let end = format!("$End{}", &s[1..]);
                loop {
                    let l = lines.expect_line(&end)?;
                    if l == end {
                        break;
                    }
                }
            }
            other => return Err(lines.err(format!("unexpected content '{other}'"))),
        }
    }
    if !version_seen {
        return Err(IoError::Unsupported("missing $MeshFormat section".into()));
    }

    let d = config.dim();
    let w = config.world_dim();
    let coords = |id: usize| -> Coords { (0..w).map(|i| if i < 3 { nodes[&id][i] } else { 0.0 }).collect() };
    let accepted: Vec<&RawElement> = elements
        .iter()
        .filter(|e| {
            let ok = corner_count(e.kind).is_some_and(|(ed, _)| ed == d);
            if !ok {
                log::debug!("element of type {} ignored for a {d}-dimensional grid", e.kind);
            }
            ok
        })
        .collect();

    let mut used: HashMap<usize, usize> = HashMap::new();
    for e in &accepted {
        let (_, nc) = corner_count(e.kind).unwrap();
        for id in &e.nodes[..nc] {
            used.insert(*id, usize::MAX);
        }
    }
    let mut factory = GridFactory::new(config);
    for id in &node_order {
        if let Some(slot) = used.get_mut(id) {
            *slot = factory.insert_vertex(&coords(*id))?;
        }
    }
    let kind = if d == 1 { GeometryType::line() } else { GeometryType::triangle() };
    for e in &accepted {
        let (_, nc) = corner_count(e.kind).unwrap();
        let corners: Vec<usize> = e.nodes[..nc].iter().map(|id| used[id]).collect();
        if e.kind == 8 || e.kind == 9 {
            let p2 = LagrangeP2::new(e.nodes.iter().map(|&id| coords(id)).collect());
            factory.insert_parametrized_element(kind, &corners, Arc::new(p2))?;
        } else {
            factory.insert_element(kind, &corners)?;
        }
    }
    let grid = factory.create_grid()?;

    let mut element_tags = HashMap::new();
    for (i, e) in accepted.iter().enumerate() {
        let el = grid.factory_element(i).expect("factory element");
        element_tags.insert(grid.id(el)?, e.tag);
    }
    let mut vertex_tags = HashMap::new();
    for (node, tag) in points {
        let Some(&fi) = used.get(&node) else {
            continue;
        };
        if let Some(v) = grid.factory_vertex(fi) {
            vertex_tags.insert(grid.id(v)?, tag);
        }
    }
    Ok(GmshMesh { grid, element_tags, vertex_tags })
}

fn expect_end<R: BufRead>(lines: &mut Lines<R>, end: &str) -> Result<(), IoError> {
    let l = lines.expect_line(end)?;
    if l != end {
        return Err(lines.err(format!("expected {end}, found '{l}'")));
    }
    Ok(())
}

pub fn read_gmsh_file(path: impl AsRef<Path>, config: GridConfig) -> Result<GmshMesh, IoError> {
    let f = std::fs::File::open(path)?;
    read_gmsh(std::io::BufReader::new(f), config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n3\n1 0 0 0\n2 1 0 0\n3 0 1 0\n$EndNodes\n$Elements\n1\n1 2 2 7 1 1 2 3\n$EndElements\n";

    #[test]
    fn minimal_triangle() {
        let m = read_gmsh(TRI.as_bytes(), GridConfig::new(2, 3).unwrap()).unwrap();
        let v = m.grid.leaf_view();
        assert_eq!((v.size(0), v.size(2)), (1, 3));
        assert_eq!(m.element_tag(v.elements()[0]), Some(7));
    }

    #[test]
    fn rejects_other_versions() {
        let bin = TRI.replace("2.2 0 8", "2.2 1 8");
        assert!(matches!(read_gmsh(bin.as_bytes(), GridConfig::new(2, 3).unwrap()), Err(IoError::Unsupported(_))));
        let v4 = TRI.replace("2.2 0 8", "4.1 0 8");
        assert!(matches!(read_gmsh(v4.as_bytes(), GridConfig::new(2, 3).unwrap()), Err(IoError::Unsupported(_))));
    }

    #[test]
    fn reports_line_numbers() {
        let bad = TRI.replace("2 1 0 0", "2 1 zero 0");
        match read_gmsh(bad.as_bytes(), GridConfig::new(2, 3).unwrap()) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {:?}", other.err()),
        }
    }
}
