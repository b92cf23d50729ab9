//! Convex hulls of small 3D and 2D point sets.
//!
//! Tolerances are relative to the bounding-box diagonal of the input. Points
//! within tolerance of a face (or of an edge, in 2D) are not reported as hull
//! vertices.

use std::collections::HashSet;

use nalgebra::{Matrix3, Vector3};

pub type P3 = [f64; 3];
pub type P2 = [f64; 2];

fn sub(a: &P3, b: &P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &P3, b: &P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &P3, b: &P3) -> P3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &P3) -> f64 {
    dot(a, a).sqrt()
}

fn cross2(o: &P2, a: &P2, b: &P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Scale used to turn relative tolerances into absolute ones.
pub fn extent(points: &[P3]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for c in 0..3 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    if points.is_empty() {
        return 0.0;
    }
    norm(&sub(&hi, &lo))
}

/// Principal frame of a point cloud: centroid and orthonormal axes sorted by
/// decreasing spread, plus the max deviation along each axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub center: P3,
    pub axes: [P3; 3],
    pub spread: [f64; 3],
}

pub fn principal_frame(points: &[P3]) -> Frame {
    let n = points.len().max(1) as f64;
    let mut center = [0.0; 3];
    for p in points {
        for c in 0..3 {
            center[c] += p[c] / n;
        }
    }
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::from(sub(p, &center));
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let axes = order.map(|i| {
        let v = eig.eigenvectors.column(i);
        [v[0], v[1], v[2]]
    });
    let spread = axes.map(|ax| {
        points
            .iter()
            .map(|p| dot(&sub(p, &center), &ax).abs())
            .fold(0.0, f64::max)
    });
    Frame { center, axes, spread }
}

/// Hull of points in the plane, counter-clockwise, collinear points dropped.
/// Returns indices into `points`.
pub fn hull2(points: &[P2], tol: f64) -> Vec<usize> {
    let n = points.len();
    if n == 0 {
        return vec![];
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for c in 0..2 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let scale = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt();
    let eps = tol * scale.max(f64::MIN_POSITIVE);
    // merge near-duplicates so the chain never sees zero-length edges
    let mut uniq: Vec<usize> = Vec::with_capacity(n);
    for &i in &idx {
        if let Some(&last) = uniq.last() {
            let p: &P2 = &points[last];
            let q: &P2 = &points[i];
            if ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() <= eps {
                continue;
            }
        }
        uniq.push(i);
    }
    if uniq.len() < 3 {
        return uniq;
    }
    // a turn counts only if the apex sits more than eps off the chord
    let turns = |o: usize, a: usize, b: usize| -> bool {
        let chord = ((points[b][0] - points[o][0]).powi(2) + (points[b][1] - points[o][1]).powi(2)).sqrt();
        cross2(&points[o], &points[a], &points[b]) > eps * chord.max(f64::MIN_POSITIVE)
    };
    let mut lower: Vec<usize> = Vec::new();
    for &i in &uniq {
        while lower.len() >= 2 && !turns(lower[lower.len() - 2], lower[lower.len() - 1], i) {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in uniq.iter().rev() {
        while upper.len() >= 2 && !turns(upper[upper.len() - 2], upper[upper.len() - 1], i) {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && lower[0] == lower[1] {
        lower.pop();
    }
    lower
}

/// Signed area of a polygon given in order.
pub fn polygon_area(poly: &[P2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        * 0.5
}

fn segment_distance(p: &P2, a: &P2, b: &P2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

/// Distance from `p` to a convex polygon given counter-clockwise; zero inside.
pub fn polygon_distance(p: &P2, poly: &[P2]) -> f64 {
    match poly.len() {
        0 => f64::INFINITY,
        1 => ((p[0] - poly[0][0]).powi(2) + (p[1] - poly[0][1]).powi(2)).sqrt(),
        2 => segment_distance(p, &poly[0], &poly[1]),
        n => {
            let inside = (0..n).all(|i| cross2(&poly[i], &poly[(i + 1) % n], p) >= 0.0);
            if inside {
                0.0
            } else {
                (0..n)
                    .map(|i| segment_distance(p, &poly[i], &poly[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Hausdorff distance between two convex polygons (counter-clockwise). The
/// distance to a convex set is convex, so vertices attain the maximum.
pub fn hausdorff_convex(a: &[P2], b: &[P2]) -> f64 {
    let one = |x: &[P2], y: &[P2]| x.iter().map(|p| polygon_distance(p, y)).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

#[derive(Clone, Debug)]
struct Face {
    v: [usize; 3],
    normal: P3,
    offset: f64,
}

/// Hull result; indices refer to the input slice.
#[derive(Clone, Debug, PartialEq)]
pub struct Hull3 {
    pub vertices: Vec<usize>,
    /// Outward-oriented triangles (a fan over the polygon when planar).
    pub facets: Vec<[usize; 3]>,
    pub dim: usize,
    pub frame: Frame,
}

fn make_face(points: &[P3], v: [usize; 3], interior: &P3) -> Option<Face> {
    let n = cross(&sub(&points[v[1]], &points[v[0]]), &sub(&points[v[2]], &points[v[0]]));
    let len = norm(&n);
    if len == 0.0 {
        return None;
    }
    let mut normal = n.map(|x| x / len);
    let mut offset = dot(&normal, &points[v[0]]);
    let mut v = v;
    if dot(&normal, interior) > offset {
        normal = normal.map(|x| -x);
        offset = -offset;
        v.swap(1, 2);
    }
    Some(Face { v, normal, offset })
}

/// Convex hull with tolerance `tol` relative to the point-set extent.
pub fn hull3(points: &[P3], tol: f64) -> Hull3 {
    let frame = principal_frame(points);
    if points.is_empty() {
        return Hull3 { vertices: vec![], facets: vec![], dim: 0, frame };
    }
    let eps = tol * extent(points).max(f64::MIN_POSITIVE);
    let dim = frame.spread.iter().filter(|&&s| s > eps).count();
    match dim {
        0 => Hull3 { vertices: vec![0], facets: vec![], dim, frame },
        1 => {
            let ax = frame.axes[0];
            let (imin, imax) = extremes(points, &ax);
            Hull3 { vertices: vec![imin, imax], facets: vec![], dim, frame }
        }
        2 => {
            let flat: Vec<P2> = points
                .iter()
                .map(|p| {
                    let d = sub(p, &frame.center);
                    [dot(&d, &frame.axes[0]), dot(&d, &frame.axes[1])]
                })
                .collect();
            let ring = hull2(&flat, tol);
            let facets = (1..ring.len().saturating_sub(1))
                .map(|i| [ring[0], ring[i], ring[i + 1]])
                .collect();
            let mut vertices = ring;
            vertices.sort_unstable();
            Hull3 { vertices, facets, dim, frame }
        }
        _ => hull3_full(points, eps, frame),
    }
}

fn extremes(points: &[P3], ax: &P3) -> (usize, usize) {
    let mut imin = 0;
    let mut imax = 0;
    for (i, p) in points.iter().enumerate() {
        if dot(p, ax) < dot(&points[imin], ax) {
            imin = i;
        }
        if dot(p, ax) > dot(&points[imax], ax) {
            imax = i;
        }
    }
    (imin, imax)
}

fn hull3_full(points: &[P3], eps: f64, frame: Frame) -> Hull3 {
    let (i0, i1) = extremes(points, &frame.axes[0]);
    let line = sub(&points[i1], &points[i0]);
    let line_len = norm(&line);
    let i2 = (0..points.len())
        .max_by(|&a, &b| {
            let da = norm(&cross(&sub(&points[a], &points[i0]), &line)) / line_len;
            let db = norm(&cross(&sub(&points[b], &points[i0]), &line)) / line_len;
            da.total_cmp(&db)
        })
        .expect("nonempty");
    let pn = cross(&line, &sub(&points[i2], &points[i0]));
    let pn_len = norm(&pn);
    let i3 = (0..points.len())
        .max_by(|&a, &b| {
            let da = (dot(&sub(&points[a], &points[i0]), &pn) / pn_len).abs();
            let db = (dot(&sub(&points[b], &points[i0]), &pn) / pn_len).abs();
            da.total_cmp(&db)
        })
        .expect("nonempty");
    let seed = [i0, i1, i2, i3];
    let mut interior = [0.0; 3];
    for &i in &seed {
        for c in 0..3 {
            interior[c] += points[i][c] / 4.0;
        }
    }
    let mut faces: Vec<Face> = [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]]
        .iter()
        .filter_map(|&v| make_face(points, v, &interior))
        .collect();

    for (p_idx, p) in points.iter().enumerate() {
        if seed.contains(&p_idx) {
            continue;
        }
        let visible: Vec<bool> = faces.iter().map(|f| dot(&f.normal, p) - f.offset > eps).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for e in 0..3 {
                edges.insert((f.v[e], f.v[(e + 1) % 3]));
            }
        }
        let mut horizon: Vec<(usize, usize)> = edges
            .iter()
            .filter(|&&(a, b)| !edges.contains(&(b, a)))
            .cloned()
            .collect();
        horizon.sort_unstable();
        let mut kept: Vec<Face> = faces
            .into_iter()
            .zip(visible)
            .filter(|(_, v)| !v)
            .map(|(f, _)| f)
            .collect();
        for (a, b) in horizon {
            if let Some(face) = make_face(points, [a, b, p_idx], &interior) {
                kept.push(face);
            }
        }
        faces = kept;
    }

    let mut vertices: Vec<usize> = faces.iter().flat_map(|f| f.v).collect();
    vertices.sort_unstable();
    vertices.dedup();
    let extreme: Vec<usize> = vertices.iter().cloned().filter(|&v| is_extreme(points, &faces, v, eps)).collect();
    if extreme.len() < vertices.len() {
        // a seed or tie left a point inside a face or edge; rebuild without it
        let subset: Vec<P3> = extreme.iter().map(|&i| points[i]).collect();
        let inner = hull3_full(&subset, eps, frame);
        return Hull3 {
            vertices: inner.vertices.iter().map(|&i| extreme[i]).collect(),
            facets: inner.facets.iter().map(|f| f.map(|i| extreme[i])).collect(),
            dim: 3,
            frame: inner.frame,
        };
    }
    Hull3 {
        vertices,
        facets: faces.iter().map(|f| f.v).collect(),
        dim: 3,
        frame,
    }
}

/// A hull vertex is extreme when the sum of its incident face normals, which
/// lies inside its normal cone, separates it from every neighbour by more
/// than `eps`. Points inside a flat face or on an edge fail this.
fn is_extreme(points: &[P3], faces: &[Face], v: usize, eps: f64) -> bool {
    let mut d = [0.0; 3];
    let mut neighbours = Vec::new();
    for f in faces.iter().filter(|f| f.v.contains(&v)) {
        for c in 0..3 {
            d[c] += f.normal[c];
        }
        neighbours.extend(f.v.iter().cloned().filter(|&w| w != v));
    }
    let len = norm(&d);
    if len == 0.0 {
        return false;
    }
    let d = d.map(|x| x / len);
    neighbours.iter().all(|&w| dot(&d, &sub(&points[v], &points[w])) > eps)
}

/// Volume enclosed by outward triangles.
pub fn volume(points: &[P3], facets: &[[usize; 3]]) -> f64 {
    let Some(first) = facets.first() else {
        return 0.0;
    };
    let o = points[first[0]];
    facets
        .iter()
        .map(|f| {
            let a = sub(&points[f[0]], &o);
            let b = sub(&points[f[1]], &o);
            let c = sub(&points[f[2]], &o);
            dot(&a, &cross(&b, &c)) / 6.0
        })
        .sum::<f64>()
        .abs()
}
