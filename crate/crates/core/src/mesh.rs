//! Structured periodic box meshes under a prescribed motion: nodal
//! positions, grid velocities, curl-form metric terms, Jacobians and
//! watertight face geometry. Also a 2D transfinite quad map.

use crate::error::{Error, Result};
use crate::operators::OperatorSet;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionKind {
    Static,
    Sinusoidal,
}

/// Displacement x(t) = x0 + A L sin(2 pi t) prod_d sin(2 pi x0_d / L), applied
/// to every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshMotion {
    pub x_min: f64,
    pub x_max: f64,
    pub amplitude: f64,
    pub kind: MotionKind,
}

impl MeshMotion {
    pub fn new(x_min: f64, x_max: f64, amplitude: f64, kind: MotionKind) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::config(format!("degenerate bounds [{x_min}, {x_max}]")));
        }
        if !amplitude.is_finite() {
            return Err(Error::config("mesh amplitude must be finite"));
        }
        Ok(MeshMotion { x_min, x_max, amplitude, kind })
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    #[inline]
    fn shape(&self, x0: &[f64; 3]) -> f64 {
        let k = 2.0 * PI / self.length();
        (k * x0[0]).sin() * (k * x0[1]).sin() * (k * x0[2]).sin()
    }

    #[inline]
    pub fn position(&self, x0: &[f64; 3], t: f64) -> [f64; 3] {
        match self.kind {
            MotionKind::Static => *x0,
            MotionKind::Sinusoidal => {
                let d = self.amplitude * self.length() * (2.0 * PI * t).sin() * self.shape(x0);
                [x0[0] + d, x0[1] + d, x0[2] + d]
            }
        }
    }

    #[inline]
    pub fn velocity(&self, x0: &[f64; 3], t: f64) -> [f64; 3] {
        match self.kind {
            MotionKind::Static => [0.0; 3],
            MotionKind::Sinusoidal => {
                let v = self.amplitude * self.length() * 2.0 * PI * (2.0 * PI * t).cos() * self.shape(x0);
                [v; 3]
            }
        }
    }

    /// Position and grid velocity together, sharing the spatial factor.
    #[inline]
    pub fn position_velocity(&self, x0: &[f64; 3], t: f64) -> ([f64; 3], [f64; 3]) {
        match self.kind {
            MotionKind::Static => (*x0, [0.0; 3]),
            MotionKind::Sinusoidal => {
                let (st, ct) = (2.0 * PI * t).sin_cos();
                let a = self.amplitude * self.length() * self.shape(x0);
                let d = a * st;
                ([x0[0] + d, x0[1] + d, x0[2] + d], [a * 2.0 * PI * ct; 3])
            }
        }
    }

    /// 1D analogue used by the finite-volume driver.
    pub fn position_1d(&self, x0: f64, t: f64) -> f64 {
        match self.kind {
            MotionKind::Static => x0,
            MotionKind::Sinusoidal => {
                x0 + self.amplitude * self.length() * (2.0 * PI * t).sin() * (2.0 * PI * x0 / self.length()).sin()
            }
        }
    }

    pub fn velocity_1d(&self, x0: f64, t: f64) -> f64 {
        match self.kind {
            MotionKind::Static => 0.0,
            MotionKind::Sinusoidal => {
                self.amplitude * self.length() * 2.0 * PI * (2.0 * PI * t).cos() * (2.0 * PI * x0 / self.length()).sin()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshSummary {
    pub k: [usize; 3],
    pub n: usize,
    pub bounds: [f64; 2],
    pub motion: MotionKind,
    pub amplitude: f64,
}

/// Structured periodic box of hexahedra.
#[derive(Debug, Clone)]
pub struct MovingMesh {
    pub k: [usize; 3],
    pub motion: MeshMotion,
    pub ops: OperatorSet,
}

/// Reference-face numbering 1..6: (axis, upper side) pairs.
pub const FACES: [(usize, bool); 6] = [(1, false), (1, true), (2, false), (0, true), (2, true), (0, false)];

pub fn face_index(axis: usize, upper: bool) -> usize {
    FACES.iter().position(|&f| f == (axis, upper)).unwrap() + 1
}

/// Per-face-node surface element and unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceGeometry {
    pub s_hat: Vec<f64>,
    pub normal: Vec<[f64; 3]>,
    /// Volume node index of each face node.
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub n: usize,
    pub x: Vec<[f64; 3]>,
    pub nu: Vec<[f64; 3]>,
    /// covariant[node][i] = d x / d xi^i
    pub covariant: Vec<[[f64; 3]; 3]>,
    /// metric[node][i] = J a^i
    pub metric: Vec<[[f64; 3]; 3]>,
    pub jac: Vec<f64>,
}

#[inline]
pub fn node_index(m: usize, i: usize, j: usize, k: usize) -> usize {
    i + m * (j + m * k)
}

/// Derivative of a tensor-product nodal field along reference direction `dir`.
pub fn tensor_derivative(ops: &OperatorSet, f: &[f64], dir: usize) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    tensor_derivative_into(ops, f, dir, &mut out);
    out
}

/// As `tensor_derivative`, writing into `out` (same length as `f`).
pub fn tensor_derivative_into(ops: &OperatorSet, f: &[f64], dir: usize, out: &mut [f64]) {
    let m = ops.num_nodes();
    let d = ops.derivative_matrix();
    assert!(f.len() == m * m * m && out.len() == f.len(), "field size does not match the operator");
    let stride = [1, m, m * m][dir];
    macro_rules! fixed {
        ($($n:literal)*) => {
            match m {
                $($n => derivative_lines::<$n>(d, f, stride, out),)*
                _ => derivative_lines_dyn(m, d, f, stride, out),
            }
        };
    }
    fixed!(2 3 4 5 6 7 8 9 10 11 12 13 14 15 16)
}

// Lines along one direction: `outer` steps over blocks of m * stride nodes,
// `inner` over the offsets within a block.
fn derivative_lines<const M: usize>(d: &[f64], f: &[f64], stride: usize, out: &mut [f64]) {
    let mut dm = [[0.0; M]; M];
    for (i, row) in dm.iter_mut().enumerate() {
        row.copy_from_slice(&d[i * M..(i + 1) * M]);
    }
    for outer in (0..f.len()).step_by(M * stride) {
        for inner in 0..stride {
            let base = outer + inner;
            let line: [f64; M] = std::array::from_fn(|q| f[base + q * stride]);
            for (i, row) in dm.iter().enumerate() {
                let mut acc = 0.0;
                for q in 0..M {
                    acc += row[q] * line[q];
                }
                out[base + i * stride] = acc;
            }
        }
    }
}

fn derivative_lines_dyn(m: usize, d: &[f64], f: &[f64], stride: usize, out: &mut [f64]) {
    for outer in (0..f.len()).step_by(m * stride) {
        for inner in 0..stride {
            let base = outer + inner;
            for (i, row) in d.chunks_exact(m).enumerate() {
                let mut acc = 0.0;
                for (q, dq) in row.iter().enumerate() {
                    acc += dq * f[base + q * stride];
                }
                out[base + i * stride] = acc;
            }
        }
    }
}

impl MovingMesh {
    pub fn new(k: [usize; 3], motion: MeshMotion, ops: OperatorSet) -> Result<Self> {
        if k.iter().any(|&x| x == 0) {
            return Err(Error::config(format!("element counts must be at least 1, got {k:?}")));
        }
        MeshMotion::new(motion.x_min, motion.x_max, motion.amplitude, motion.kind)?;
        Ok(MovingMesh { k, motion, ops })
    }

    pub fn num_elements(&self) -> usize {
        self.k[0] * self.k[1] * self.k[2]
    }
    pub fn nodes_per_element(&self) -> usize {
        self.ops.num_nodes().pow(3)
    }
    pub fn is_static(&self) -> bool {
        self.motion.kind == MotionKind::Static || self.motion.amplitude == 0.0
    }

    pub fn summary(&self) -> MeshSummary {
        MeshSummary {
            k: self.k,
            n: self.ops.degree(),
            bounds: [self.motion.x_min, self.motion.x_max],
            motion: self.motion.kind,
            amplitude: self.motion.amplitude,
        }
    }

    pub fn element_coords(&self, e: usize) -> [usize; 3] {
        [e % self.k[0], (e / self.k[0]) % self.k[1], e / (self.k[0] * self.k[1])]
    }
    pub fn element_id(&self, c: [usize; 3]) -> usize {
        c[0] + self.k[0] * (c[1] + self.k[1] * c[2])
    }

    /// Periodic neighbor across the face normal to `axis` on the given side.
    pub fn neighbor(&self, e: usize, axis: usize, upper: bool) -> usize {
        let mut c = self.element_coords(e);
        let kk = self.k[axis];
        c[axis] = if upper { (c[axis] + 1) % kk } else { (c[axis] + kk - 1) % kk };
        self.element_id(c)
    }

    fn element_origin(&self, e: usize) -> ([f64; 3], [f64; 3]) {
        let c = self.element_coords(e);
        let l = self.motion.length();
        let mut lo = [0.0; 3];
        let mut h = [0.0; 3];
        for d in 0..3 {
            h[d] = l / self.k[d] as f64;
            lo[d] = self.motion.x_min + c[d] as f64 * h[d];
        }
        (lo, h)
    }

    /// Undisplaced LGL node positions of an element.
    pub fn reference_nodes(&self, e: usize) -> Vec<[f64; 3]> {
        let (lo, h) = self.element_origin(e);
        let m = self.ops.num_nodes();
        let xi = self.ops.nodes();
        let mut out = Vec::with_capacity(m * m * m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    out.push([
                        lo[0] + 0.5 * (xi[i] + 1.0) * h[0],
                        lo[1] + 0.5 * (xi[j] + 1.0) * h[1],
                        lo[2] + 0.5 * (xi[k] + 1.0) * h[2],
                    ]);
                }
            }
        }
        out
    }

    pub fn element_geometry(&self, e: usize, t: f64) -> Result<ElementGeometry> {
        if e >= self.num_elements() {
            return Err(Error::config(format!("element {e} out of range")));
        }
        let ops = &self.ops;
        let np = self.nodes_per_element();
        let x0 = self.reference_nodes(e);
        let (x, nu): (Vec<[f64; 3]>, Vec<[f64; 3]>) = x0.iter().map(|p| self.motion.position_velocity(p, t)).unzip();
        // local coordinates relative to the element's fixed corner; the metric
        // terms are invariant under the shift
        let (lo, _) = self.element_origin(e);
        let local: Vec<Vec<f64>> = (0..3).map(|c| x.iter().map(|p| p[c] - lo[c]).collect()).collect();
        // dx_c/dxi_d
        let mut grad = [[vec![], vec![], vec![]], [vec![], vec![], vec![]], [vec![], vec![], vec![]]];
        for c in 0..3 {
            for d in 0..3 {
                grad[c][d] = tensor_derivative(ops, &local[c], d);
            }
        }
        let mut covariant = vec![[[0.0; 3]; 3]; np];
        for q in 0..np {
            for d in 0..3 {
                for c in 0..3 {
                    covariant[q][d][c] = grad[c][d][q];
                }
            }
        }
        // J a^i_n = -x_i . curl(X_l grad X_m), (n, m, l) cyclic
        let mut metric = vec![[[0.0; 3]; 3]; np];
        let mut v = [vec![0.0; np], vec![0.0; np], vec![0.0; np]];
        let (mut da, mut db) = (vec![0.0; np], vec![0.0; np]);
        for n in 0..3 {
            let mm = (n + 1) % 3;
            let ll = (n + 2) % 3;
            for (d, vd) in v.iter_mut().enumerate() {
                for q in 0..np {
                    vd[q] = local[ll][q] * grad[mm][d][q];
                }
            }
            // curl component i = d_a v_p - d_b v_r as (i, p, a, r, b)
            for (i, p, a, r, b) in [(0, 2, 1, 1, 2), (1, 0, 2, 2, 0), (2, 1, 0, 0, 1)] {
                tensor_derivative_into(ops, &v[p], a, &mut da);
                tensor_derivative_into(ops, &v[r], b, &mut db);
                for q in 0..np {
                    metric[q][i][n] = -(da[q] - db[q]);
                }
            }
        }
        let mut jac = vec![0.0; np];
        for q in 0..np {
            let a = &covariant[q];
            jac[q] = dot(&a[0], &cross(&a[1], &a[2]));
            if !(jac[q] > 0.0) {
                return Err(Error::geometry(format!(
                    "nonpositive Jacobian {} at element {e}, node {q}, t={t}",
                    jac[q]
                )));
            }
        }
        Ok(ElementGeometry { n: ops.degree(), x, nu, covariant, metric, jac })
    }

    /// Geometry of every element at time t.
    pub fn all_geometry(&self, t: f64) -> Result<Vec<ElementGeometry>> {
        use rayon::prelude::*;
        (0..self.num_elements()).into_par_iter().map(|e| self.element_geometry(e, t)).collect()
    }

    /// Element size: smallest width 2J / |J a^i| over all nodes and
    /// reference directions. Equals the edge length on an undistorted box
    /// and shrinks with compression in any direction, not only along edges.
    pub fn element_size(&self, geom: &ElementGeometry) -> f64 {
        let mut h = f64::INFINITY;
        for (j, ja) in geom.jac.iter().zip(&geom.metric) {
            for v in ja {
                h = h.min(2.0 * j / norm(v));
            }
        }
        h
    }
}

impl ElementGeometry {
    pub fn num_nodes_1d(&self) -> usize {
        self.n + 1
    }

    /// Volume node indices of a face, ordered by the two tangential indices.
    pub fn face_nodes(&self, axis: usize, upper: bool) -> Vec<usize> {
        let m = self.n + 1;
        let fixed = if upper { m - 1 } else { 0 };
        let mut out = Vec::with_capacity(m * m);
        for b in 0..m {
            for a in 0..m {
                out.push(match axis {
                    0 => node_index(m, fixed, a, b),
                    1 => node_index(m, a, fixed, b),
                    _ => node_index(m, a, b, fixed),
                });
            }
        }
        out
    }

    /// Surface element and outward unit normal on face 1..=6.
    pub fn face_geometry(&self, face: usize) -> Result<FaceGeometry> {
        if !(1..=6).contains(&face) {
            return Err(Error::config(format!("face index {face} outside 1..=6")));
        }
        let (axis, upper) = FACES[face - 1];
        let sign = if upper { 1.0 } else { -1.0 };
        let nodes = self.face_nodes(axis, upper);
        let mut s_hat = Vec::with_capacity(nodes.len());
        let mut normal = Vec::with_capacity(nodes.len());
        for &q in &nodes {
            let v = self.metric[q][axis];
            let sv = [sign * v[0], sign * v[1], sign * v[2]];
            let s = norm(&sv);
            if !(s > 0.0) {
                return Err(Error::geometry(format!("degenerate surface element on face {face}")));
            }
            s_hat.push(s);
            normal.push([sv[0] / s, sv[1] / s, sv[2] / s]);
        }
        Ok(FaceGeometry { s_hat, normal, nodes })
    }
}

/// max over nodes and directions of |sum_i D_i (J a^i)_beta|.
pub fn metric_identity_residual(ops: &OperatorSet, geom: &ElementGeometry) -> f64 {
    let mut r: f64 = 0.0;
    for beta in 0..3 {
        let mut total = vec![0.0; geom.jac.len()];
        for i in 0..3 {
            let f: Vec<f64> = geom.metric.iter().map(|m| m[i][beta]).collect();
            for (t, d) in total.iter_mut().zip(tensor_derivative(ops, &f, i)) {
                *t += d;
            }
        }
        r = total.iter().fold(r, |a, x| a.max(x.abs()));
    }
    r
}

/// max over interior faces of the componentwise difference of s_hat n from
/// both adjacent elements.
pub fn watertight_residual(mesh: &MovingMesh, geoms: &[ElementGeometry]) -> Result<f64> {
    let mut r: f64 = 0.0;
    for e in 0..mesh.num_elements() {
        for axis in 0..3 {
            let nb = mesh.neighbor(e, axis, true);
            let fm = geoms[e].face_geometry(face_index(axis, true))?;
            let fp = geoms[nb].face_geometry(face_index(axis, false))?;
            for q in 0..fm.nodes.len() {
                for c in 0..3 {
                    // outward normals are opposite
                    let a = fm.s_hat[q] * fm.normal[q][c];
                    let b = -fp.s_hat[q] * fp.normal[q][c];
                    r = r.max((a - b).abs());
                }
            }
        }
    }
    Ok(r)
}

#[inline]
pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
#[inline]
pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
#[inline]
#[cfg(test)]
fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
#[inline]
pub fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Time-dependent planar curve on s in [-1, 1].
pub trait Curve2d {
    fn position(&self, s: f64, t: f64) -> [f64; 2];
    fn velocity(&self, s: f64, t: f64) -> [f64; 2];
}

/// Transfinite map of the reference square bounded by bottom, right, top and
/// left curves (bottom/top parameterized by xi1, right/left by xi2). Each
/// curve is replaced by its LGL interpolant of degree N.
pub struct TransfiniteQuad<'a> {
    pub faces: [&'a dyn Curve2d; 4],
    pub ops: &'a OperatorSet,
}

const CORNER_TOL: f64 = 1e-12;

impl<'a> TransfiniteQuad<'a> {
    pub fn new(faces: [&'a dyn Curve2d; 4], ops: &'a OperatorSet, t: f64) -> Result<Self> {
        let [b, r, tp, lf] = faces;
        let pairs = [
            (b.position(-1.0, t), lf.position(-1.0, t)),
            (b.position(1.0, t), r.position(-1.0, t)),
            (tp.position(-1.0, t), lf.position(1.0, t)),
            (tp.position(1.0, t), r.position(1.0, t)),
        ];
        for (p, q) in pairs {
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            if d > CORNER_TOL {
                return Err(Error::config(format!("curve corners mismatch by {d:e}")));
            }
        }
        Ok(TransfiniteQuad { faces, ops })
    }

    fn blend(&self, xi1: f64, xi2: f64, eval: impl Fn(&dyn Curve2d, f64) -> [f64; 2]) -> [f64; 2] {
        let nodes = self.ops.nodes();
        let interp = |c: &dyn Curve2d, s: f64| -> [f64; 2] {
            let l = self.ops.lagrange_basis(s);
            let mut p = [0.0; 2];
            for (lj, &eta) in l.iter().zip(nodes) {
                let v = eval(c, eta);
                p[0] += lj * v[0];
                p[1] += lj * v[1];
            }
            p
        };
        let [g1, g2, g3, g4] = self.faces;
        let (b, r, t, lf) = (interp(g1, xi1), interp(g2, xi2), interp(g3, xi1), interp(g4, xi2));
        let (b1, t1, bm, tm) = (eval(g1, 1.0), eval(g3, 1.0), eval(g1, -1.0), eval(g3, -1.0));
        let mut out = [0.0; 2];
        for c in 0..2 {
            out[c] = 0.5 * ((1.0 - xi1) * lf[c] + (1.0 + xi1) * r[c])
                + 0.5 * ((1.0 - xi2) * b[c] + (1.0 + xi2) * t[c])
                - 0.25 * (1.0 + xi1) * ((1.0 - xi2) * b1[c] + (1.0 + xi2) * t1[c])
                - 0.25 * (1.0 - xi1) * ((1.0 - xi2) * bm[c] + (1.0 + xi2) * tm[c]);
        }
        out
    }

    /// Position and grid velocity at (xi1, xi2, t).
    pub fn map(&self, xi1: f64, xi2: f64, t: f64) -> Result<([f64; 2], [f64; 2])> {
        if !(-1.0..=1.0).contains(&xi1) || !(-1.0..=1.0).contains(&xi2) {
            return Err(Error::config(format!("reference point ({xi1}, {xi2}) outside the square")));
        }
        Ok((
            self.blend(xi1, xi2, |c, s| c.position(s, t)),
            self.blend(xi1, xi2, |c, s| c.velocity(s, t)),
        ))
    }
}

/// Convenience wrapper: validate corners and evaluate the map.
pub fn transfinite_map_2d(
    faces: [&dyn Curve2d; 4],
    ops: &OperatorSet,
    xi1: f64,
    xi2: f64,
    t: f64,
) -> Result<([f64; 2], [f64; 2])> {
    TransfiniteQuad::new(faces, ops, t)?.map(xi1, xi2, t)
}
