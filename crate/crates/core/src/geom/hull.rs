//! Convex hulls in dimensions 1, 2 and 3 with a relative tolerance.
//!
//! Points are sorted lexicographically before any predicate runs, so the
//! output (vertex order, facet order) depends only on the point set.

use rustc_hash::{FxHashMap as HashMap, FxHashSet as HashSet};

use super::linalg::{complement_basis, cross2, cross3, dot, lex_cmp, norm, sub};
use super::Facet;
use crate::error::{Error, Result};
use crate::tolerance::HULL_REL_TOL;

pub(crate) struct HullOutput {
    pub vertices: Vec<Vec<f64>>,
    pub facets: Vec<Facet>,
}

/// Bounding-box diagonal of a point set.
pub(crate) fn extent(points: &[Vec<f64>]) -> f64 {
    let d = points[0].len();
    let mut s = 0.0;
    for k in 0..d {
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[k]), hi.max(p[k]))
            });
        s += (hi - lo) * (hi - lo);
    }
    s.sqrt()
}

pub(crate) fn hull(points: &[Vec<f64>], dim: usize) -> Result<HullOutput> {
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: points.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(dim),
        });
    }
    if points.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::DegenerateInput("non-finite coordinate".into()));
    }
    if points.len() < dim + 1 {
        return Err(Error::DegenerateInput(format!(
            "{} points cannot span dimension {dim}",
            points.len()
        )));
    }
    let mut pts: Vec<Vec<f64>> = points.to_vec();
    pts.sort_by(|a, b| lex_cmp(a, b));
    pts.dedup();
    let tol = HULL_REL_TOL * extent(&pts);
    if !(tol > 0.0) {
        return Err(Error::DegenerateInput("all points coincide".into()));
    }
    match dim {
        1 => hull1(&pts, tol),
        2 => hull2(&pts, tol),
        3 => hull3(&pts, tol),
        _ => Err(Error::UnsupportedDimension(dim)),
    }
}

fn hull1(pts: &[Vec<f64>], tol: f64) -> Result<HullOutput> {
    let lo = pts[0][0];
    let hi = pts[pts.len() - 1][0];
    if hi - lo <= tol {
        return Err(Error::DegenerateInput("segment of zero length".into()));
    }
    Ok(HullOutput {
        vertices: vec![vec![lo], vec![hi]],
        facets: vec![
            Facet { normal: vec![-1.0], area: 1.0, offset: -lo, vertices: vec![0] },
            Facet { normal: vec![1.0], area: 1.0, offset: hi, vertices: vec![1] },
        ],
    })
}

/// Andrew's monotone chain on lexicographically sorted 2-D points. Returns
/// indices of the hull in counter-clockwise order starting at the
/// lexicographically smallest point; points within `tol` of a hull edge are
/// dropped.
pub(crate) fn monotone_chain(pts: &[[f64; 2]], tol: f64) -> Vec<usize> {
    let n = pts.len();
    if n < 3 {
        return (0..n).collect();
    }
    let keep = |h: &Vec<usize>, c: usize| -> bool {
        let o = &pts[h[h.len() - 2]];
        let a = &pts[h[h.len() - 1]];
        let b = &pts[c];
        let ob = ((b[0] - o[0]).powi(2) + (b[1] - o[1]).powi(2)).sqrt();
        cross2(o, a, b) > tol * ob
    };
    let mut lower: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        while lower.len() >= 2 && !keep(&lower, i) {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::with_capacity(n);
    for i in (0..n).rev() {
        while upper.len() >= 2 && !keep(&upper, i) {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn polygon_facets(verts: &[Vec<f64>]) -> Vec<Facet> {
    let k = verts.len();
    (0..k)
        .map(|i| {
            let a = &verts[i];
            let b = &verts[(i + 1) % k];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = (dx * dx + dy * dy).sqrt();
            let normal = vec![dy / len, -dx / len];
            let offset = 0.5 * (dot(&normal, a) + dot(&normal, b));
            Facet { normal, area: len, offset, vertices: vec![i, (i + 1) % k] }
        })
        .collect()
}

fn hull2(pts: &[Vec<f64>], tol: f64) -> Result<HullOutput> {
    let flat: Vec<[f64; 2]> = pts.iter().map(|p| [p[0], p[1]]).collect();
    let idx = monotone_chain(&flat, tol);
    if idx.len() < 3 {
        return Err(Error::DegenerateInput("points are collinear".into()));
    }
    let vertices: Vec<Vec<f64>> = idx.iter().map(|&i| pts[i].clone()).collect();
    let facets = polygon_facets(&vertices);
    Ok(HullOutput { vertices, facets })
}

struct Face {
    v: [usize; 3],
    normal: [f64; 3],
    offset: f64,
    alive: bool,
}

fn make_face(pts: &[Vec<f64>], v: [usize; 3]) -> Face {
    let (a, b, c) = (&pts[v[0]], &pts[v[1]], &pts[v[2]]);
    let d1 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let d2 = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let c = cross3(&d1, &d2);
    let l = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    let normal = if l > 0.0 { [c[0] / l, c[1] / l, c[2] / l] } else { [0.0; 3] };
    let offset = normal[0] * a[0] + normal[1] * a[1] + normal[2] * a[2];
    Face { v, normal, offset, alive: true }
}

fn plane_dist(f: &Face, p: &[f64]) -> f64 {
    f.normal[0] * p[0] + f.normal[1] * p[1] + f.normal[2] * p[2] - f.offset
}

fn hull3(pts: &[Vec<f64>], tol: f64) -> Result<HullOutput> {
    let n = pts.len();
    let degenerate = || Error::DegenerateInput("points are affinely dependent".into());

    // initial tetrahedron
    let i0 = 0;
    let i1 = (0..n)
        .max_by(|&a, &b| {
            super::linalg::dist(&pts[a], &pts[i0]).total_cmp(&super::linalg::dist(&pts[b], &pts[i0]))
        })
        .unwrap();
    if super::linalg::dist(&pts[i1], &pts[i0]) <= tol {
        return Err(degenerate());
    }
    let d01 = sub(&pts[i1], &pts[i0]);
    let line_dist = |p: &Vec<f64>| norm(&cross3(&d01, &sub(p, &pts[i0]))) / norm(&d01);
    let i2 = (0..n).max_by(|&a, &b| line_dist(&pts[a]).total_cmp(&line_dist(&pts[b]))).unwrap();
    if line_dist(&pts[i2]) <= tol {
        return Err(degenerate());
    }
    let base = make_face(pts, [i0, i1, i2]);
    let i3 = (0..n)
        .max_by(|&a, &b| plane_dist(&base, &pts[a]).abs().total_cmp(&plane_dist(&base, &pts[b]).abs()))
        .unwrap();
    if plane_dist(&base, &pts[i3]).abs() <= tol {
        return Err(degenerate());
    }

    let seed = [i0, i1, i2, i3];
    let centroid: Vec<f64> = (0..3).map(|k| seed.iter().map(|&i| pts[i][k]).sum::<f64>() / 4.0).collect();
    let mut faces: Vec<Face> = Vec::new();
    for tri in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        let mut f = make_face(pts, tri);
        if plane_dist(&f, &centroid) > 0.0 {
            f = make_face(pts, [tri[0], tri[2], tri[1]]);
        }
        faces.push(f);
    }

    // Quickhull: every face keeps the points strictly above it; the farthest
    // such point is added next.
    let mut outside: Vec<Vec<usize>> = vec![Vec::new(); faces.len()];
    let assign = |faces: &[Face], candidates: &[usize], p: usize| -> Option<usize> {
        candidates
            .iter()
            .map(|&fi| (fi, plane_dist(&faces[fi], &pts[p])))
            .filter(|&(_, d)| d > tol)
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(fi, _)| fi)
    };
    for p in 0..n {
        if !seed.contains(&p) {
            if let Some(fi) = assign(&faces, &[0, 1, 2, 3], p) {
                outside[fi].push(p);
            }
        }
    }
    // directed edge -> face owning it
    let mut owner: HashMap<(usize, usize), usize> = HashMap::default();
    for (i, f) in faces.iter().enumerate() {
        for k in 0..3 {
            owner.insert((f.v[k], f.v[(k + 1) % 3]), i);
        }
    }
    let mut pending: Vec<usize> = (0..4).rev().collect();
    while let Some(start) = pending.pop() {
        if !faces[start].alive || outside[start].is_empty() {
            continue;
        }
        let p = *outside[start]
            .iter()
            .max_by(|&&a, &&b| plane_dist(&faces[start], &pts[a]).total_cmp(&plane_dist(&faces[start], &pts[b])))
            .unwrap();
        // Flood from a face `p` sees so the visible region stays connected;
        // faces that only pass the test through rounding are not reached.
        let mut visible = vec![start];
        let mut seen: HashSet<usize> = std::iter::once(start).collect();
        let mut k = 0;
        while k < visible.len() {
            let v = faces[visible[k]].v;
            k += 1;
            for e in 0..3 {
                let Some(&g) = owner.get(&(v[(e + 1) % 3], v[e])) else { continue };
                if seen.insert(g) && plane_dist(&faces[g], &pts[p]) > tol {
                    visible.push(g);
                }
            }
        }
        let in_visible: HashSet<usize> = visible.iter().copied().collect();
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        let mut orphans: Vec<usize> = Vec::new();
        for &fi in &visible {
            let v = faces[fi].v;
            for e in 0..3 {
                let (a, b) = (v[e], v[(e + 1) % 3]);
                if !owner.get(&(b, a)).is_some_and(|g| in_visible.contains(g)) {
                    horizon.push((a, b));
                }
            }
            orphans.append(&mut outside[fi]);
        }
        horizon.sort_unstable();
        orphans.sort_unstable();
        for &fi in &visible {
            faces[fi].alive = false;
            let v = faces[fi].v;
            for e in 0..3 {
                owner.remove(&(v[e], v[(e + 1) % 3]));
            }
        }
        let first = faces.len();
        for (a, b) in horizon {
            let id = faces.len();
            faces.push(make_face(pts, [a, b, p]));
            outside.push(Vec::new());
            for e in [(a, b), (b, p), (p, a)] {
                owner.insert(e, id);
            }
        }
        // A point above a removed face that is still outside the hull lies
        // above one of the new faces.
        let fresh: Vec<usize> = (first..faces.len()).collect();
        for q in orphans {
            if q != p {
                if let Some(fi) = assign(&faces, &fresh, q) {
                    outside[fi].push(q);
                }
            }
        }
        pending.extend(fresh.into_iter().rev());
    }

    let faces: Vec<Face> = faces.into_iter().filter(|f| f.alive).collect();
    merge_coplanar(pts, &faces, tol)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Groups coplanar hull triangles into polygonal facets and drops vertices
/// that are not corners of any facet polygon.
fn merge_coplanar(pts: &[Vec<f64>], faces: &[Face], tol: f64) -> Result<HullOutput> {
    let mut edge_face: HashMap<(usize, usize), usize> = HashMap::default();
    for (i, f) in faces.iter().enumerate() {
        for k in 0..3 {
            edge_face.insert((f.v[k], f.v[(k + 1) % 3]), i);
        }
    }
    let mut parent: Vec<usize> = (0..faces.len()).collect();
    for (i, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f.v[k], f.v[(k + 1) % 3]);
            let Some(&j) = edge_face.get(&(b, a)) else { continue };
            let g = &faces[j];
            let far = g.v.iter().copied().find(|&x| x != a && x != b).unwrap();
            let far_f = f.v.iter().copied().find(|&x| x != a && x != b).unwrap();
            if plane_dist(f, &pts[far]).abs() <= tol
                && plane_dist(g, &pts[far_f]).abs() <= tol
                && dot(&f.normal, &g.normal) > 0.0
            {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: HashMap<usize, usize> = HashMap::default();
    for i in 0..faces.len() {
        let r = find(&mut parent, i);
        let slot = *root_slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(i);
    }

    let mut polys: Vec<(Vec<f64>, Vec<usize>, f64)> = Vec::with_capacity(groups.len());
    for g in &groups {
        let mut nsum = [0.0; 3];
        let mut ids: Vec<usize> = Vec::new();
        for &fi in g {
            let f = &faces[fi];
            let c = cross3(&sub(&pts[f.v[1]], &pts[f.v[0]]), &sub(&pts[f.v[2]], &pts[f.v[0]]));
            for k in 0..3 {
                nsum[k] += c[k];
            }
            ids.extend_from_slice(&f.v);
        }
        ids.sort_unstable();
        ids.dedup();
        let Some(normal) = super::linalg::normalized(&nsum) else { continue };
        let basis = complement_basis(&normal);
        let flip = dot(&cross3(&basis[0], &basis[1]), &normal) < 0.0;
        let mut local: Vec<([f64; 2], usize)> = ids
            .iter()
            .map(|&i| ([dot(&basis[0], &pts[i]), dot(&basis[1], &pts[i])], i))
            .collect();
        local.sort_by(|a, b| lex_cmp(&a.0, &b.0));
        let flat: Vec<[f64; 2]> = local.iter().map(|x| x.0).collect();
        let mut ring: Vec<usize> = monotone_chain(&flat, tol).into_iter().map(|k| local[k].1).collect();
        if ring.len() < 3 {
            continue;
        }
        if flip {
            ring.reverse();
        }
        let area = polygon_area_3d(pts, &ring, &normal);
        if area <= 0.0 {
            continue;
        }
        polys.push((normal, ring, area));
    }

    let mut used: Vec<usize> = polys.iter().flat_map(|p| p.1.iter().copied()).collect();
    used.sort_unstable();
    used.dedup();
    let remap: HashMap<usize, usize> = used.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let vertices: Vec<Vec<f64>> = used.iter().map(|&i| pts[i].clone()).collect();
    let facets = polys
        .into_iter()
        .map(|(normal, ring, area)| {
            let offset = ring.iter().map(|&i| dot(&normal, &pts[i])).sum::<f64>() / ring.len() as f64;
            Facet { normal, area, offset, vertices: ring.iter().map(|i| remap[i]).collect() }
        })
        .collect();
    Ok(HullOutput { vertices, facets })
}

/// Area of a planar polygon in 3-D (Newell's formula projected on `normal`).
fn polygon_area_3d(pts: &[Vec<f64>], ring: &[usize], normal: &[f64]) -> f64 {
    let o = &pts[ring[0]];
    let mut s = [0.0; 3];
    for w in 1..ring.len() - 1 {
        let c = cross3(&sub(&pts[ring[w]], o), &sub(&pts[ring[w + 1]], o));
        for k in 0..3 {
            s[k] += c[k];
        }
    }
    0.5 * dot(&s, normal)
}
