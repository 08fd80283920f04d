use std::path::Path;

use serde_json::{json, Value};

use super::{cross, normalize, weights, Geometry, Mesh};
use crate::container::{Array, Container};
use crate::error::{Error, Result};

const FORMAT_VERSION: i64 = 1;

fn flat<const N: usize>(v: &[[f64; N]], cols: usize) -> Vec<f64> {
    v.iter().flat_map(|x| x[..cols].iter().copied()).collect()
}

fn flat_i<const N: usize>(v: &[[i32; N]]) -> Vec<i32> {
    v.iter().flat_map(|x| x.iter().copied()).collect()
}

pub fn mesh_to_container(mesh: &Mesh) -> Container {
    let mut c = Container::default();
    let (extent, dim) = match mesh.geometry {
        Geometry::PlanarPeriodic { lx, ly } => (json!([lx, ly]), 2),
        Geometry::Sphere { radius } => (json!(radius), 3),
    };
    c.header.insert("format_version".into(), json!(FORMAT_VERSION));
    c.header.insert("geometry".into(), json!(mesh.geometry.name()));
    c.header.insert("radius_or_extent".into(), extent);

    let (nc, ne, nv) = (mesh.n_cells, mesh.n_edges, mesh.n_vertices);
    let (me, mee) = (mesh.max_edges, mesh.max_edges_on_edge);
    let ints = |v: &[usize]| v.iter().map(|&x| x as i32).collect::<Vec<_>>();
    let bools = |v: &[bool]| v.iter().map(|&x| x as i32).collect::<Vec<_>>();
    let signs = |v: &[f64]| v.iter().map(|&x| x as i32).collect::<Vec<_>>();

    c.insert("cell_center", Array::f64(nc, dim, flat(&mesh.cell_center, dim)));
    c.insert("vertex_pos", Array::f64(nv, dim, flat(&mesh.vertex_pos, dim)));
    c.insert("edge_pos", Array::f64(ne, dim, flat(&mesh.edge_pos, dim)));
    c.insert("n_edges_on_cell", Array::i32(nc, 1, ints(&mesh.n_edges_on_cell)));
    c.insert("edges_on_cell", Array::i32(nc, me, mesh.edges_on_cell.clone()));
    c.insert("vertices_on_cell", Array::i32(nc, me, mesh.vertices_on_cell.clone()));
    c.insert("cells_on_edge", Array::i32(ne, 2, flat_i(&mesh.cells_on_edge)));
    c.insert("vertices_on_edge", Array::i32(ne, 2, flat_i(&mesh.vertices_on_edge)));
    c.insert("edges_on_vertex", Array::i32(nv, 3, flat_i(&mesh.edges_on_vertex)));
    c.insert("cells_on_vertex", Array::i32(nv, 3, flat_i(&mesh.cells_on_vertex)));
    c.insert("n_edges_on_edge", Array::i32(ne, 1, ints(&mesh.n_edges_on_edge)));
    c.insert("edges_on_edge", Array::i32(ne, mee, mesh.edges_on_edge.clone()));
    c.insert("n_eic", Array::i32(nc, me, signs(&mesh.n_eic)));
    c.insert("t_ev", Array::i32(nv, 3, signs(&flat(&mesh.t_ev, 3))));
    c.insert("A_i", Array::f64(nc, 1, mesh.a_i.clone()));
    c.insert("A_v", Array::f64(nv, 1, mesh.a_v.clone()));
    c.insert("A_e", Array::f64(ne, 1, mesh.a_e.clone()));
    c.insert("l_e", Array::f64(ne, 1, mesh.l_e.clone()));
    c.insert("d_e", Array::f64(ne, 1, mesh.d_e.clone()));
    c.insert("R_iv", Array::f64(nv, 3, flat(&mesh.r_iv, 3)));
    c.insert("w_ee", Array::f64(ne, mee, mesh.w_ee.clone()));
    c.insert("edge_is_boundary", Array::i32(ne, 1, bools(&mesh.edge_is_boundary)));
    c.insert("cell_is_dry", Array::i32(nc, 1, bools(&mesh.cell_is_dry)));
    c
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format {
        path: None,
        msg: msg.into(),
    }
}

fn rows<const N: usize>(v: &[f64], cols: usize) -> Vec<[f64; N]> {
    v.chunks_exact(cols)
        .map(|r| {
            let mut a = [0.0; N];
            a[..cols].copy_from_slice(r);
            a
        })
        .collect()
}

fn rows_i<const N: usize>(v: &[i32]) -> Vec<[i32; N]> {
    v.chunks_exact(N).map(|r| r.try_into().unwrap()).collect()
}

fn counts(v: &[i32], name: &str, max: usize) -> Result<Vec<usize>> {
    v.iter()
        .map(|&x| {
            usize::try_from(x)
                .ok()
                .filter(|&n| n <= max)
                .ok_or_else(|| bad(format!("{name} entry {x} out of range")))
        })
        .collect()
}

fn sign(x: i32, what: &str) -> Result<f64> {
    match x {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        _ => Err(bad(format!("{what} sign {x} is not +1 or -1"))),
    }
}

pub fn mesh_from_container(c: &Container) -> Result<Mesh> {
    let version = c.header.get("format_version").and_then(Value::as_i64);
    if version != Some(FORMAT_VERSION) {
        return Err(bad(format!("unsupported format_version {version:?}")));
    }
    let geometry = match (
        c.header.get("geometry").and_then(Value::as_str),
        c.header.get("radius_or_extent"),
    ) {
        (Some("sphere"), Some(r)) => Geometry::Sphere {
            radius: r.as_f64().ok_or_else(|| bad("radius is not a number"))?,
        },
        (Some("planar-periodic"), Some(Value::Array(a))) if a.len() == 2 => Geometry::PlanarPeriodic {
            lx: a[0].as_f64().ok_or_else(|| bad("bad extent"))?,
            ly: a[1].as_f64().ok_or_else(|| bad("bad extent"))?,
        },
        _ => return Err(bad("missing or invalid geometry header")),
    };
    let dim = if matches!(geometry, Geometry::Sphere { .. }) { 3 } else { 2 };

    let nc = c.get("cell_center").ok_or_else(|| bad("missing cell_center"))?.rows;
    let ne = c.get("edge_pos").ok_or_else(|| bad("missing edge_pos"))?.rows;
    let nv = c.get("vertex_pos").ok_or_else(|| bad("missing vertex_pos"))?.rows;

    let (cell_center, _) = c.f64_array("cell_center", nc, dim)?;
    let (vertex_pos, _) = c.f64_array("vertex_pos", nv, dim)?;
    let (edge_pos, _) = c.f64_array("edge_pos", ne, dim)?;
    let (edges_on_cell, me) = c.i32_array("edges_on_cell", nc, 0)?;
    let (vertices_on_cell, _) = c.i32_array("vertices_on_cell", nc, me)?;
    let (n_eic_raw, _) = c.i32_array("n_eic", nc, me)?;
    let n_edges_on_cell = counts(c.i32_array("n_edges_on_cell", nc, 1)?.0, "n_edges_on_cell", me)?;
    let (cells_on_edge, _) = c.i32_array("cells_on_edge", ne, 2)?;
    let (vertices_on_edge, _) = c.i32_array("vertices_on_edge", ne, 2)?;
    let (edges_on_vertex, _) = c.i32_array("edges_on_vertex", nv, 3)?;
    let (cells_on_vertex, _) = c.i32_array("cells_on_vertex", nv, 3)?;
    let (edges_on_edge, mee) = c.i32_array("edges_on_edge", ne, 0)?;
    let n_edges_on_edge = counts(c.i32_array("n_edges_on_edge", ne, 1)?.0, "n_edges_on_edge", mee)?;
    let (t_ev_raw, _) = c.i32_array("t_ev", nv, 3)?;

    let check = |v: &[i32], n: usize, name: &str| -> Result<()> {
        match v.iter().find(|&&x| x < -1 || x >= n as i32) {
            Some(x) => Err(bad(format!("{name} index {x} out of range (count {n})"))),
            None => Ok(()),
        }
    };
    check(edges_on_cell, ne, "edges_on_cell")?;
    check(vertices_on_cell, nv, "vertices_on_cell")?;
    check(cells_on_edge, nc, "cells_on_edge")?;
    check(vertices_on_edge, nv, "vertices_on_edge")?;
    check(edges_on_vertex, ne, "edges_on_vertex")?;
    check(cells_on_vertex, nc, "cells_on_vertex")?;
    check(edges_on_edge, ne, "edges_on_edge")?;

    let mut n_eic = vec![0.0; nc * me];
    for i in 0..nc {
        for k in 0..n_edges_on_cell[i] {
            if edges_on_cell[i * me + k] < 0 {
                return Err(bad(format!("cell {i} has a missing edge in its ring")));
            }
            n_eic[i * me + k] = sign(n_eic_raw[i * me + k], "n_eic")?;
        }
    }
    let mut t_ev = vec![[0.0; 3]; nv];
    for v in 0..nv {
        for k in 0..3 {
            if edges_on_vertex[3 * v + k] >= 0 {
                t_ev[v][k] = sign(t_ev_raw[3 * v + k], "t_ev")?;
            }
        }
    }

    let cells_on_edge: Vec<[i32; 2]> = rows_i(cells_on_edge);
    let vertices_on_edge: Vec<[i32; 2]> = rows_i(vertices_on_edge);
    let edges_on_vertex: Vec<[i32; 3]> = rows_i(edges_on_vertex);
    let mut n_on_edge = vec![[0.0; 2]; ne];
    let mut t_on_edge = vec![[0.0; 2]; ne];
    for e in 0..ne {
        for j in 0..2 {
            let ci = cells_on_edge[e][j];
            if ci >= 0 {
                let i = ci as usize;
                let k = (0..n_edges_on_cell[i])
                    .find(|&k| edges_on_cell[i * me + k] == e as i32)
                    .ok_or_else(|| bad(format!("edge {e} not listed by its cell {i}")))?;
                n_on_edge[e][j] = n_eic[i * me + k];
            }
            let vi = vertices_on_edge[e][j];
            if vi >= 0 {
                let v = vi as usize;
                let k = (0..3)
                    .find(|&k| edges_on_vertex[v][k] == e as i32)
                    .ok_or_else(|| bad(format!("edge {e} not listed by its vertex {v}")))?;
                t_on_edge[e][j] = t_ev[v][k];
            }
        }
    }

    let f64col = |name: &str, n: usize| -> Result<Vec<f64>> { Ok(c.f64_array(name, n, 1)?.0.to_vec()) };
    let flag = |name: &str, n: usize| -> Result<Vec<bool>> {
        Ok(c.i32_array(name, n, 1)?.0.iter().map(|&x| x != 0).collect())
    };

    let mut mesh = Mesh {
        geometry,
        n_cells: nc,
        n_edges: ne,
        n_vertices: nv,
        max_edges: me,
        max_edges_on_edge: mee,
        cell_center: rows(cell_center, dim),
        vertex_pos: rows(vertex_pos, dim),
        edge_pos: rows(edge_pos, dim),
        edge_normal: Vec::new(),
        n_edges_on_cell,
        edges_on_cell: edges_on_cell.to_vec(),
        vertices_on_cell: vertices_on_cell.to_vec(),
        cells_on_edge,
        vertices_on_edge,
        edges_on_vertex,
        cells_on_vertex: rows_i(cells_on_vertex),
        n_edges_on_edge,
        edges_on_edge: edges_on_edge.to_vec(),
        n_eic,
        t_ev,
        n_on_edge,
        t_on_edge,
        a_i: f64col("A_i", nc)?,
        a_v: f64col("A_v", nv)?,
        a_e: f64col("A_e", ne)?,
        l_e: f64col("l_e", ne)?,
        d_e: f64col("d_e", ne)?,
        r_iv: rows(c.f64_array("R_iv", nv, 3)?.0, 3),
        w_ee: Vec::new(),
        edge_is_boundary: flag("edge_is_boundary", ne)?,
        cell_is_dry: flag("cell_is_dry", nc)?,
    };
    mesh.edge_normal = derive_normals(&mesh);
    mesh.w_ee = match c.get("w_ee") {
        Some(_) => c.f64_array("w_ee", ne, mee)?.0.to_vec(),
        None => weights::compute_edge_weights(&mesh),
    };
    mesh.validate()?;
    Ok(mesh)
}

pub(crate) fn derive_normals(mesh: &Mesh) -> Vec<[f64; 3]> {
    (0..mesh.n_edges)
        .map(|e| {
            let [c0, c1] = mesh.cells_on_edge[e];
            let [v0, v1] = mesh.vertices_on_edge[e];
            match mesh.geometry {
                Geometry::Sphere { .. } if c0 >= 0 && c1 >= 0 => {
                    let (a, b) = (mesh.cell_center[c0 as usize], mesh.cell_center[c1 as usize]);
                    let xe = normalize(mesh.edge_pos[e]);
                    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                    let p = super::dot(d, xe);
                    normalize([d[0] - p * xe[0], d[1] - p * xe[1], d[2] - p * xe[2]])
                }
                _ if v0 >= 0 && v1 >= 0 => {
                    // n = t x k for the planar case, t from v0 to v1.
                    let t = mesh.displacement(mesh.vertex_pos[v0 as usize], mesh.vertex_pos[v1 as usize]);
                    match mesh.geometry {
                        Geometry::Sphere { .. } => normalize(cross(t, normalize(mesh.edge_pos[e]))),
                        Geometry::PlanarPeriodic { .. } => normalize([t[1], -t[0], 0.0]),
                    }
                }
                _ => [0.0; 3],
            }
        })
        .collect()
}

pub fn save_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    mesh_to_container(mesh).save(path)
}

pub fn save_mesh_text(mesh: &Mesh, path: &Path) -> Result<()> {
    mesh_to_container(mesh).save_text(path)
}

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let c = Container::load(path)?;
    mesh_from_container(&c).map_err(|e| match e {
        Error::Format { path: None, msg } => Error::Format {
            path: Some(path.to_path_buf()),
            msg,
        },
        other => other,
    })
}
