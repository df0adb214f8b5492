//! TetGen `.node`/`.ele` and Gmsh MSH v2 readers, legacy VTK writer/reader.

use super::{MeshError, TetMesh};
use crate::Real;
use nalgebra::Vector3;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    /// `.node` + `.ele` pair sharing a base name.
    Tetgen,
    /// Gmsh MSH 2.x ASCII.
    Msh,
}

pub fn load_mesh<T: Real>(path: &Path, format: MeshFormat) -> Result<TetMesh<T>, MeshError> {
    match format {
        MeshFormat::Tetgen => load_tetgen(path),
        MeshFormat::Msh => load_msh(path),
    }
}

fn read(path: &Path) -> Result<String, MeshError> {
    fs::read_to_string(path).map_err(|source| MeshError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, contents: &str) -> Result<(), MeshError> {
    fs::write(path, contents).map_err(|source| MeshError::Io { path: path.to_owned(), source })
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse { path: path.to_owned(), line, msg: msg.into() }
}

fn parse_fields<F: std::str::FromStr>(path: &Path, line: usize, fields: &[&str]) -> Result<Vec<F>, MeshError> {
    fields
        .iter()
        .map(|f| f.parse::<F>().map_err(|_| parse_err(path, line, format!("cannot parse `{f}`"))))
        .collect()
}

fn tetgen_paths(path: &Path) -> (PathBuf, PathBuf) {
    let base = match path.extension().and_then(|e| e.to_str()) {
        Some("node") | Some("ele") => path.with_extension(""),
        _ => path.to_owned(),
    };
    let with = |ext: &str| {
        let mut s = base.clone().into_os_string();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    (with("node"), with("ele"))
}

fn load_tetgen<T: Real>(path: &Path) -> Result<TetMesh<T>, MeshError> {
    let (node_path, ele_path) = tetgen_paths(path);
    let node_text = read(&node_path)?;
    let mut lines = data_lines(&node_text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(&node_path, 1, "missing header"))?;
    let header: Vec<usize> = parse_fields(&node_path, hl, &header.split_whitespace().collect::<Vec<_>>())?;
    let (count, dim) = (header[0], *header.get(1).unwrap_or(&3));
    if dim != 3 {
        return Err(parse_err(&node_path, hl, format!("expected dimension 3, got {dim}")));
    }

    let mut base = None;
    let mut positions = Vec::with_capacity(count);
    for (ln, l) in lines.take(count) {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() < 4 {
            return Err(parse_err(&node_path, ln, "expected `index x y z`"));
        }
        let idx: usize = parse_fields(&node_path, ln, &f[..1])?[0];
        let first = *base.get_or_insert(idx);
        if first > 1 {
            return Err(parse_err(&node_path, ln, "first index must be 0 or 1"));
        }
        if idx != first + positions.len() {
            return Err(parse_err(&node_path, ln, format!("non-consecutive node index {idx}")));
        }
        let xyz: Vec<f64> = parse_fields(&node_path, ln, &f[1..4])?;
        positions.push(Vector3::new(T::lit(xyz[0]), T::lit(xyz[1]), T::lit(xyz[2])));
    }
    if positions.len() != count {
        return Err(parse_err(&node_path, 0, format!("expected {count} nodes, found {}", positions.len())));
    }
    let base = base.unwrap_or(0);

    let ele_text = read(&ele_path)?;
    let mut lines = data_lines(&ele_text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(&ele_path, 1, "missing header"))?;
    let header: Vec<usize> = parse_fields(&ele_path, hl, &header.split_whitespace().collect::<Vec<_>>())?;
    let (tet_count, per_tet) = (header[0], *header.get(1).unwrap_or(&4));
    if per_tet < 4 {
        return Err(parse_err(&ele_path, hl, "tets need at least 4 nodes"));
    }
    let mut tets = Vec::with_capacity(tet_count);
    for (ln, l) in lines.take(tet_count) {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() < 5 {
            return Err(parse_err(&ele_path, ln, "expected `index v0 v1 v2 v3`"));
        }
        let v: Vec<usize> = parse_fields(&ele_path, ln, &f[1..5])?;
        let mut tet = [0; 4];
        for (a, &vi) in v.iter().enumerate() {
            tet[a] = vi
                .checked_sub(base)
                .ok_or_else(|| parse_err(&ele_path, ln, format!("vertex index {vi} below base {base}")))?;
        }
        tets.push(tet);
    }
    if tets.len() != tet_count {
        return Err(parse_err(&ele_path, 0, format!("expected {tet_count} tets, found {}", tets.len())));
    }
    TetMesh::new(positions, tets)
}

/// Writes `<base>.node` and `<base>.ele`, 0-based.
pub fn write_tetgen<T: Real>(mesh: &TetMesh<T>, base: &Path) -> Result<(), MeshError> {
    let (node_path, ele_path) = tetgen_paths(base);
    let mut node = format!("{} 3 0 0\n", mesh.vertex_count());
    for (i, p) in mesh.rest_positions().iter().enumerate() {
        let _ = writeln!(node, "{i} {:.17e} {:.17e} {:.17e}", p.x.as_f64(), p.y.as_f64(), p.z.as_f64());
    }
    let mut ele = format!("{} 4 0\n", mesh.tet_count());
    for (i, t) in mesh.tets().iter().enumerate() {
        let _ = writeln!(ele, "{i} {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    write(&node_path, &node)?;
    write(&ele_path, &ele)
}

fn load_msh<T: Real>(path: &Path) -> Result<TetMesh<T>, MeshError> {
    let text = read(path)?;
    let mut lines = data_lines(&text);
    let mut ids: HashMap<usize, usize> = HashMap::new();
    let mut positions = Vec::new();
    let mut tets = Vec::new();

    while let Some((ln, l)) = lines.next() {
        match l {
            "$MeshFormat" => {
                let (vl, v) = lines.next().ok_or_else(|| parse_err(path, ln, "truncated $MeshFormat"))?;
                let f: Vec<&str> = v.split_whitespace().collect();
                if f.len() < 2 || !f[0].starts_with('2') || f[1] != "0" {
                    return Err(parse_err(path, vl, "only MSH 2.x ASCII is supported"));
                }
            }
            "$Nodes" => {
                let (cl, c) = lines.next().ok_or_else(|| parse_err(path, ln, "truncated $Nodes"))?;
                let count: usize = parse_fields(path, cl, &[c])?[0];
                for _ in 0..count {
                    let (nl, n) = lines.next().ok_or_else(|| parse_err(path, cl, "truncated $Nodes"))?;
                    let f: Vec<&str> = n.split_whitespace().collect();
                    if f.len() < 4 {
                        return Err(parse_err(path, nl, "expected `id x y z`"));
                    }
                    let id: usize = parse_fields(path, nl, &f[..1])?[0];
                    let xyz: Vec<f64> = parse_fields(path, nl, &f[1..4])?;
                    if ids.insert(id, positions.len()).is_some() {
                        return Err(parse_err(path, nl, format!("duplicate node id {id}")));
                    }
                    positions.push(Vector3::new(T::lit(xyz[0]), T::lit(xyz[1]), T::lit(xyz[2])));
                }
            }
            "$Elements" => {
                let (cl, c) = lines.next().ok_or_else(|| parse_err(path, ln, "truncated $Elements"))?;
                let count: usize = parse_fields(path, cl, &[c])?[0];
                for _ in 0..count {
                    let (el, e) = lines.next().ok_or_else(|| parse_err(path, cl, "truncated $Elements"))?;
                    let f: Vec<usize> = parse_fields(path, el, &e.split_whitespace().collect::<Vec<_>>())?;
                    if f.len() < 3 || f[1] != 4 {
                        continue;
                    }
                    let nodes = &f[3 + f[2]..];
                    if nodes.len() != 4 {
                        return Err(parse_err(path, el, "tet element needs 4 nodes"));
                    }
                    let mut tet = [0; 4];
                    for (a, id) in nodes.iter().enumerate() {
                        tet[a] = *ids
                            .get(id)
                            .ok_or_else(|| parse_err(path, el, format!("unknown node id {id}")))?;
                    }
                    tets.push(tet);
                }
            }
            _ => {}
        }
    }
    TetMesh::new(positions, tets)
}

/// Legacy ASCII VTK unstructured grid with tetrahedral cells (type 10).
pub fn export_vtk<T: Real>(mesh: &TetMesh<T>, positions: &[Vector3<T>], path: &Path) -> Result<(), MeshError> {
    if positions.len() != mesh.vertex_count() {
        return Err(MeshError::PositionCount { expected: mesh.vertex_count(), got: positions.len() });
    }
    if mesh.tet_count() == 0 {
        return Err(MeshError::Empty);
    }
    let mut out = String::from("# vtk DataFile Version 2.0\ntet mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", positions.len());
    for p in positions {
        let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", p.x.as_f64(), p.y.as_f64(), p.z.as_f64());
    }
    let _ = writeln!(out, "CELLS {} {}", mesh.tet_count(), 5 * mesh.tet_count());
    for t in mesh.tets() {
        let _ = writeln!(out, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(out, "CELL_TYPES {}", mesh.tet_count());
    for _ in mesh.tets() {
        out.push_str("10\n");
    }
    write(path, &out)
}

/// Reads back what [`export_vtk`] writes: `(positions, tets)`.
pub fn read_vtk<T: Real>(path: &Path) -> Result<(Vec<Vector3<T>>, Vec<[usize; 4]>), MeshError> {
    let text = read(path)?;
    let tokens: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
        .collect();
    let mut it = tokens.into_iter().peekable();
    let mut positions = Vec::new();
    let mut tets = Vec::new();
    let next_num = |it: &mut std::iter::Peekable<std::vec::IntoIter<(usize, &str)>>| -> Result<f64, MeshError> {
        let (ln, t) = it.next().ok_or_else(|| parse_err(path, 0, "unexpected end of file"))?;
        t.parse::<f64>().map_err(|_| parse_err(path, ln, format!("cannot parse `{t}`")))
    };
    while let Some((_, tok)) = it.next() {
        match tok {
            "POINTS" => {
                let n = next_num(&mut it)? as usize;
                it.next(); // data type
                for _ in 0..n {
                    let (x, y, z) = (next_num(&mut it)?, next_num(&mut it)?, next_num(&mut it)?);
                    positions.push(Vector3::new(T::lit(x), T::lit(y), T::lit(z)));
                }
            }
            "CELLS" => {
                let n = next_num(&mut it)? as usize;
                next_num(&mut it)?;
                for _ in 0..n {
                    let k = next_num(&mut it)? as usize;
                    if k != 4 {
                        return Err(parse_err(path, 0, "only tetrahedral cells are supported"));
                    }
                    let mut t = [0; 4];
                    for v in &mut t {
                        *v = next_num(&mut it)? as usize;
                    }
                    tets.push(t);
                }
            }
            "CELL_TYPES" => {
                let n = next_num(&mut it)? as usize;
                for _ in 0..n {
                    if next_num(&mut it)? as u32 != 10 {
                        return Err(parse_err(path, 0, "cell type other than 10"));
                    }
                }
            }
            _ => {}
        }
    }
    Ok((positions, tets))
}
