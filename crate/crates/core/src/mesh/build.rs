use std::collections::HashMap;

use super::{cross, dot, norm, normalize, weights, Geometry, Mesh};
use crate::error::{Error, Result};

/// Combinatorial description from which all connectivity is derived.
pub(crate) struct Topology {
    pub n_cells: usize,
    pub cells_on_edge: Vec<[usize; 2]>,
    /// `[v0, v1]` with `v1` on the positive tangent side.
    pub vertices_on_edge: Vec<[usize; 2]>,
    /// Counter-clockwise.
    pub cells_on_vertex: Vec<[usize; 3]>,
    pub edges_on_vertex: Vec<[usize; 3]>,
}

pub(crate) struct Connectivity {
    pub max_edges: usize,
    pub n_edges_on_cell: Vec<usize>,
    pub edges_on_cell: Vec<i32>,
    pub vertices_on_cell: Vec<i32>,
    pub n_eic: Vec<f64>,
    pub t_ev: Vec<[f64; 3]>,
    pub max_edges_on_edge: usize,
    pub n_edges_on_edge: Vec<usize>,
    pub edges_on_edge: Vec<i32>,
}

pub(crate) fn connectivity(topo: &Topology) -> Result<Connectivity> {
    let nc = topo.n_cells;
    // Around a cell the order is edges_on_vertex[k] -> vertex -> edges_on_vertex[k+2].
    let mut links: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); nc];
    for (v, (cv, ev)) in topo.cells_on_vertex.iter().zip(&topo.edges_on_vertex).enumerate() {
        for k in 0..3 {
            links[cv[k]].push((ev[k], v, ev[(k + 2) % 3]));
        }
    }
    let max_edges = links.iter().map(Vec::len).max().unwrap_or(0);
    let mut n_edges_on_cell = vec![0; nc];
    let mut edges_on_cell = vec![-1; nc * max_edges];
    let mut vertices_on_cell = vec![-1; nc * max_edges];
    let mut n_eic = vec![0.0; nc * max_edges];
    for (i, l) in links.iter().enumerate() {
        let n = l.len();
        let mut cur = l[0].0;
        for k in 0..n {
            let &(e, v, next) = l
                .iter()
                .find(|x| x.0 == cur)
                .ok_or_else(|| Error::InvalidMesh(format!("edge ring of cell {i} is not closed")))?;
            edges_on_cell[i * max_edges + k] = e as i32;
            vertices_on_cell[i * max_edges + k] = v as i32;
            n_eic[i * max_edges + k] = if topo.cells_on_edge[e][0] == i { 1.0 } else { -1.0 };
            cur = next;
        }
        if cur != l[0].0 {
            return Err(Error::InvalidMesh(format!("edge ring of cell {i} is not closed")));
        }
        n_edges_on_cell[i] = n;
    }

    let t_ev = topo
        .edges_on_vertex
        .iter()
        .enumerate()
        .map(|(v, ev)| ev.map(|e| if topo.vertices_on_edge[e][1] == v { 1.0 } else { -1.0 }))
        .collect();

    let ne = topo.cells_on_edge.len();
    let max_edges_on_edge = 2 * max_edges.saturating_sub(1);
    let mut n_edges_on_edge = vec![0; ne];
    let mut edges_on_edge = vec![-1; ne * max_edges_on_edge];
    for e in 0..ne {
        let mut m = 0;
        for &i in &topo.cells_on_edge[e] {
            let n = n_edges_on_cell[i];
            let ring = &edges_on_cell[i * max_edges..i * max_edges + n];
            let k = ring.iter().position(|&x| x == e as i32).unwrap();
            for off in 1..n {
                edges_on_edge[e * max_edges_on_edge + m] = ring[(k + off) % n];
                m += 1;
            }
        }
        n_edges_on_edge[e] = m;
    }

    Ok(Connectivity {
        max_edges,
        n_edges_on_cell,
        edges_on_cell,
        vertices_on_cell,
        n_eic,
        t_ev,
        max_edges_on_edge,
        n_edges_on_edge,
        edges_on_edge,
    })
}

pub(crate) struct Measures {
    pub cell_center: Vec<[f64; 3]>,
    pub vertex_pos: Vec<[f64; 3]>,
    pub edge_pos: Vec<[f64; 3]>,
    pub a_i: Vec<f64>,
    pub a_v: Vec<f64>,
    pub l_e: Vec<f64>,
    pub d_e: Vec<f64>,
    pub r_iv: Vec<[f64; 3]>,
}

pub(crate) fn assemble(geometry: Geometry, topo: &Topology, m: Measures) -> Result<Mesh> {
    let c = connectivity(topo)?;
    let ne = topo.cells_on_edge.len();
    let n_on_edge = topo
        .cells_on_edge
        .iter()
        .map(|&[c0, c1]| if c0 == c1 { [0.0, 0.0] } else { [1.0, -1.0] })
        .collect();
    let mut mesh = Mesh {
        geometry,
        n_cells: topo.n_cells,
        n_edges: ne,
        n_vertices: topo.cells_on_vertex.len(),
        max_edges: c.max_edges,
        max_edges_on_edge: c.max_edges_on_edge,
        cell_center: m.cell_center,
        vertex_pos: m.vertex_pos,
        edge_pos: m.edge_pos,
        edge_normal: Vec::new(),
        n_edges_on_cell: c.n_edges_on_cell,
        edges_on_cell: c.edges_on_cell,
        vertices_on_cell: c.vertices_on_cell,
        cells_on_edge: topo.cells_on_edge.iter().map(|x| x.map(|y| y as i32)).collect(),
        vertices_on_edge: topo.vertices_on_edge.iter().map(|x| x.map(|y| y as i32)).collect(),
        edges_on_vertex: topo.edges_on_vertex.iter().map(|x| x.map(|y| y as i32)).collect(),
        cells_on_vertex: topo.cells_on_vertex.iter().map(|x| x.map(|y| y as i32)).collect(),
        n_edges_on_edge: c.n_edges_on_edge,
        edges_on_edge: c.edges_on_edge,
        n_eic: c.n_eic,
        t_ev: c.t_ev,
        n_on_edge,
        t_on_edge: vec![[-1.0, 1.0]; ne],
        a_e: m.l_e.iter().zip(&m.d_e).map(|(l, d)| l * d).collect(),
        a_i: m.a_i,
        a_v: m.a_v,
        l_e: m.l_e,
        d_e: m.d_e,
        r_iv: m.r_iv,
        w_ee: Vec::new(),
        edge_is_boundary: vec![false; ne],
        cell_is_dry: vec![false; topo.n_cells],
    };
    mesh.edge_normal = super::io::derive_normals(&mesh);
    mesh.w_ee = weights::compute_edge_weights(&mesh);
    mesh.validate()?;
    Ok(mesh)
}

/// Doubly periodic regular hexagonal mesh with cell spacing `dc`.
///
/// Odd rows are shifted by `dc/2`, so `ny` must be even for the tiling to
/// close periodically.
pub fn build_planar_hex_mesh(nx: usize, ny: usize, dc: f64) -> Result<Mesh> {
    if nx < 2 || ny < 2 {
        return Err(Error::Dimensions(format!("nx = {nx}, ny = {ny}; both must be at least 2")));
    }
    if ny % 2 != 0 {
        return Err(Error::Dimensions(format!("ny = {ny} must be even")));
    }
    if !(dc > 0.0 && dc.is_finite()) {
        return Err(Error::Dimensions(format!("cell spacing {dc} must be positive")));
    }
    let nc = nx
        .checked_mul(ny)
        .filter(|&n| n.checked_mul(3).is_some_and(|m| m <= i32::MAX as usize))
        .ok_or_else(|| Error::Dimensions(format!("{nx} x {ny} cells overflow the index type")))?;

    let s3 = 3f64.sqrt();
    let dy = dc * s3 / 2.0;
    let (lx, ly) = (nx as f64 * dc, ny as f64 * dy);
    let idx = |i: isize, j: isize| -> usize {
        let i = i.rem_euclid(nx as isize) as usize;
        let j = j.rem_euclid(ny as isize) as usize;
        j * nx + i
    };
    let wrap = |p: [f64; 2]| [p[0].rem_euclid(lx), p[1].rem_euclid(ly), 0.0];

    // Neighbours of (i, j): east, north-east, north-west, west, south-east.
    let nb = |c: usize| {
        let (i, j) = ((c % nx) as isize, (c / nx) as isize);
        let p = j % 2;
        [
            idx(i + 1, j),
            idx(i + p, j + 1),
            idx(i + p - 1, j + 1),
            idx(i - 1, j),
            idx(i + p, j - 1),
        ]
    };
    const E: usize = 0;
    const NE: usize = 1;
    const NW: usize = 2;
    const W: usize = 3;
    const SE: usize = 4;
    // Vertex 2c is the upper-right corner (c, E, NE), 2c+1 the top (c, NE, NW).
    let ur = |c: usize| 2 * c;
    let top = |c: usize| 2 * c + 1;

    let mut cells_on_edge = vec![[0; 2]; 3 * nc];
    let mut vertices_on_edge = vec![[0; 2]; 3 * nc];
    let mut cells_on_vertex = vec![[0; 3]; 2 * nc];
    let mut edges_on_vertex = vec![[0; 3]; 2 * nc];
    let mut cell_center = vec![[0.0; 3]; nc];
    let mut vertex_pos = vec![[0.0; 3]; 2 * nc];
    let mut edge_pos = vec![[0.0; 3]; 3 * nc];
    let normals = [[1.0, 0.0], [0.5, s3 / 2.0], [-0.5, s3 / 2.0]];

    for c in 0..nc {
        let n = nb(c);
        let (i, j) = (c % nx, c / nx);
        let x = [(i as f64 + 0.5 * (j % 2) as f64) * dc, j as f64 * dy];
        cell_center[c] = wrap(x);

        cells_on_edge[3 * c + E] = [c, n[E]];
        vertices_on_edge[3 * c + E] = [top(n[SE]), ur(c)];
        cells_on_edge[3 * c + NE] = [c, n[NE]];
        vertices_on_edge[3 * c + NE] = [ur(c), top(c)];
        cells_on_edge[3 * c + NW] = [c, n[NW]];
        vertices_on_edge[3 * c + NW] = [top(c), ur(n[W])];

        cells_on_vertex[ur(c)] = [c, n[E], n[NE]];
        edges_on_vertex[ur(c)] = [3 * c + E, 3 * n[E] + NW, 3 * c + NE];
        cells_on_vertex[top(c)] = [c, n[NE], n[NW]];
        edges_on_vertex[top(c)] = [3 * c + NE, 3 * n[NW] + E, 3 * c + NW];

        vertex_pos[ur(c)] = wrap([x[0] + dc / 2.0, x[1] + dc / (2.0 * s3)]);
        vertex_pos[top(c)] = wrap([x[0], x[1] + dc / s3]);
        for (k, nk) in normals.iter().enumerate() {
            edge_pos[3 * c + k] = wrap([x[0] + 0.5 * dc * nk[0], x[1] + 0.5 * dc * nk[1]]);
        }
    }

    let topo = Topology {
        n_cells: nc,
        cells_on_edge,
        vertices_on_edge,
        cells_on_vertex,
        edges_on_vertex,
    };
    let measures = Measures {
        cell_center,
        vertex_pos,
        edge_pos,
        a_i: vec![s3 / 2.0 * dc * dc; nc],
        a_v: vec![s3 / 4.0 * dc * dc; 2 * nc],
        l_e: vec![dc / s3; 3 * nc],
        d_e: vec![dc; 3 * nc],
        r_iv: vec![[1.0 / 6.0; 3]; 2 * nc],
    };
    assemble(Geometry::PlanarPeriodic { lx, ly }, &topo, measures)
}

fn icosahedron() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts = Vec::new();
    for &a in &[-1.0, 1.0] {
        for &b in &[-p, p] {
            pts.push([0.0, a, b]);
            pts.push([a, b, 0.0]);
            pts.push([b, 0.0, a]);
        }
    }
    let close = |a: [f64; 3], b: [f64; 3]| {
        let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        (norm(d) - 2.0).abs() < 1e-9
    };
    let mut faces = Vec::new();
    for a in 0..12 {
        for b in a + 1..12 {
            for c in b + 1..12 {
                if close(pts[a], pts[b]) && close(pts[b], pts[c]) && close(pts[a], pts[c]) {
                    let n = cross(sub(pts[b], pts[a]), sub(pts[c], pts[a]));
                    faces.push(if dot(n, pts[a]) > 0.0 { [a, b, c] } else { [a, c, b] });
                }
            }
        }
    }
    (pts.into_iter().map(normalize).collect(), faces)
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn arc(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b))
}

/// Signed area of the spherical triangle on the unit sphere.
fn spherical_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    2.0 * dot(a, cross(b, c)).atan2(1.0 + dot(a, b) + dot(b, c) + dot(c, a))
}

fn circumcenter(t: [usize; 3], p: &[[f64; 3]]) -> [f64; 3] {
    normalize(cross(sub(p[t[1]], p[t[0]]), sub(p[t[2]], p[t[0]])))
}

/// Icosahedral Voronoi mesh relaxed with Lloyd iterations on a fixed
/// triangulation.
pub fn build_spherical_mesh(subdivision_level: usize, lloyd_iters: usize, radius: f64) -> Result<Mesh> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Dimensions(format!("radius {radius} must be positive")));
    }
    if subdivision_level > 12 {
        return Err(Error::Dimensions(format!("subdivision level {subdivision_level} overflows")));
    }
    let (mut pts, mut faces) = icosahedron();
    for _ in 0..subdivision_level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, pts: &mut Vec<[f64; 3]>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                pts.push(normalize(add(pts[a], pts[b])));
                pts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(4 * faces.len());
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut pts);
            let bc = midpoint(b, c, &mut pts);
            let ca = midpoint(c, a, &mut pts);
            next.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        faces = next;
    }
    let nc = pts.len();

    let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut cells_on_edge: Vec<[usize; 2]> = Vec::new();
    let mut vertices_on_edge: Vec<[usize; 2]> = Vec::new();
    let mut edges_on_vertex = vec![[0; 3]; faces.len()];
    for (t, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let e = match edge_of.get(&(a.min(b), a.max(b))) {
                Some(&e) => {
                    if cells_on_edge[e] != [b, a] {
                        return Err(Error::InvalidMesh("inconsistent triangle orientation".into()));
                    }
                    vertices_on_edge[e][0] = t;
                    e
                }
                None => {
                    cells_on_edge.push([a, b]);
                    vertices_on_edge.push([usize::MAX, t]);
                    edge_of.insert((a.min(b), a.max(b)), cells_on_edge.len() - 1);
                    cells_on_edge.len() - 1
                }
            };
            edges_on_vertex[t][k] = e;
        }
    }
    let topo = Topology {
        n_cells: nc,
        cells_on_edge,
        vertices_on_edge,
        cells_on_vertex: faces.clone(),
        edges_on_vertex,
    };
    let conn = connectivity(&topo)?;

    for _ in 0..lloyd_iters {
        let cc: Vec<[f64; 3]> = faces.iter().map(|&t| circumcenter(t, &pts)).collect();
        for (i, p) in pts.iter_mut().enumerate() {
            let ring = &conn.vertices_on_cell[i * conn.max_edges..i * conn.max_edges + conn.n_edges_on_cell[i]];
            let mut acc = [0.0; 3];
            for k in 0..ring.len() {
                let a = cc[ring[k] as usize];
                let b = cc[ring[(k + 1) % ring.len()] as usize];
                let w = norm(cross(sub(a, *p), sub(b, *p)));
                acc = add(acc, scale(add(add(*p, a), b), w));
            }
            *p = normalize(acc);
        }
    }

    let vertex_unit: Vec<[f64; 3]> = faces.iter().map(|&t| circumcenter(t, &pts)).collect();
    let ne = topo.cells_on_edge.len();
    let mut edge_pos = Vec::with_capacity(ne);
    let mut l_e = Vec::with_capacity(ne);
    let mut d_e = Vec::with_capacity(ne);
    for e in 0..ne {
        let [c0, c1] = topo.cells_on_edge[e];
        let [v0, v1] = topo.vertices_on_edge[e];
        let xe = normalize(add(pts[c0], pts[c1]));
        edge_pos.push(xe);
        d_e.push(radius * arc(pts[c0], pts[c1]));
        l_e.push(radius * arc(vertex_unit[v0], vertex_unit[v1]));
    }
    let r2 = radius * radius;
    let mut a_i = vec![0.0; nc];
    let mut a_v = vec![0.0; faces.len()];
    let mut kites = vec![[0.0; 3]; faces.len()];
    for (v, (cv, ev)) in topo.cells_on_vertex.iter().zip(&topo.edges_on_vertex).enumerate() {
        let xv = vertex_unit[v];
        for k in 0..3 {
            let xi = pts[cv[k]];
            let k1 = r2 * spherical_area(xi, edge_pos[ev[k]], xv);
            let k2 = r2 * spherical_area(xi, xv, edge_pos[ev[(k + 2) % 3]]);
            kites[v][k] = k1 + k2;
            a_i[cv[k]] += k1 + k2;
            a_v[v] += k1 + k2;
        }
    }
    let r_iv = kites
        .iter()
        .zip(&topo.cells_on_vertex)
        .map(|(kv, cv)| [0, 1, 2].map(|k| kv[k] / a_i[cv[k]]))
        .collect();

    let measures = Measures {
        cell_center: pts.iter().map(|&p| scale(p, radius)).collect(),
        vertex_pos: vertex_unit.iter().map(|&p| scale(p, radius)).collect(),
        edge_pos: edge_pos.iter().map(|&p| scale(p, radius)).collect(),
        a_i,
        a_v,
        l_e,
        d_e,
        r_iv,
    };
    assemble(Geometry::Sphere { radius }, &topo, measures)
}
