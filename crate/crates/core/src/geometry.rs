//! Numeric kernels for metric simplices.
//!
//! A metric simplex with `n` vertices is realized in `R^(n-1)` with vertex 0
//! (the apex) at the origin and vertex `j` using only its first `j`
//! coordinates, the last of which is non-negative. Extrapolation then places
//! a virtual source (a point or a hyperplane) at prescribed distances from
//! the non-apex vertices and reports the apex's distance to it.

use thiserror::Error;

/// Relative tolerance on negative radicands and discriminants (times scale²).
pub const EPS_REAL: f64 = 1e-10;
/// Relative tolerance below which a realized height counts as zero (times scale).
pub const EPS_DEGEN: f64 = 1e-9;
/// Weight magnitudes at or below this are treated as zero.
pub const EPS_WEIGHT: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("vertex {vertex} cannot be placed: radicand {radicand:e} is negative")]
    NotRealizable { vertex: usize, radicand: f64 },
    #[error("vertex {vertex} lies in the span of the previous vertices (height {height:e})")]
    Degenerate { vertex: usize, height: f64 },
    #[error("no real virtual source: discriminant {discriminant:e}")]
    NoRealSolution { discriminant: f64 },
    #[error("line from the apex is parallel to the opposite face (weight sum {sum:e})")]
    DegenerateWeights { sum: f64 },
    #[error("expected {expected} values, got {got}")]
    Arity { expected: usize, got: usize },
}

impl GeometryError {
    /// True for the failures that a caller may absorb by falling back to faces.
    pub fn is_numeric(&self) -> bool {
        !matches!(self, GeometryError::Arity { .. })
    }
}

/// Canonical Euclidean realization in lower-triangular layout.
///
/// Row `j` stores the `j` leading coordinates of vertex `j`; the rest are 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    rows: Vec<Vec<f64>>,
    scale: f64,
}

impl Default for Embedding {
    fn default() -> Self {
        Self::new()
    }
}

impl Embedding {
    /// The one-vertex simplex: just the apex at the origin.
    pub fn new() -> Self {
        Embedding { rows: vec![Vec::new()], scale: 0.0 }
    }

    /// Realizes `n` vertices from a symmetric distance accessor.
    ///
    /// ```
    /// use sstar::geometry::Embedding;
    /// let e = Embedding::realize(3, |_, _| 1.0).unwrap();
    /// assert_eq!(e.point(1), vec![1.0, 0.0]);
    /// assert!((e.coord(2, 1) - 3f64.sqrt() / 2.0).abs() < 1e-15);
    /// ```
    pub fn realize<F: Fn(usize, usize) -> f64>(n: usize, dist: F) -> Result<Self, GeometryError> {
        let mut e = Embedding::new();
        let mut d = Vec::with_capacity(n);
        for j in 1..n {
            d.clear();
            d.extend((0..j).map(|i| dist(j, i)));
            e.push(&d)?;
        }
        Ok(e)
    }

    /// Appends one vertex given its distances to every existing vertex.
    ///
    /// Existing rows are never touched, so realizing a prefix and extending it
    /// gives bitwise the same coordinates as realizing the whole simplex.
    pub fn push(&mut self, d: &[f64]) -> Result<(), GeometryError> {
        let j = self.rows.len();
        if d.len() != j {
            return Err(GeometryError::Arity { expected: j, got: d.len() });
        }
        let scale = d.iter().fold(self.scale, |m, &x| m.max(x));
        let d0sq = d[0] * d[0];
        let mut row = vec![0.0; j];
        for k in 0..j.saturating_sub(1) {
            let prev = &self.rows[k + 1];
            let mut num = d0sq - d[k + 1] * d[k + 1] + prev[k] * prev[k];
            for p in 0..k {
                num += prev[p] * prev[p] - 2.0 * row[p] * prev[p];
            }
            row[k] = num / (2.0 * prev[k]);
        }
        let mut rad = d0sq;
        for &x in &row[..j - 1] {
            rad -= x * x;
        }
        if rad < -EPS_REAL * scale * scale {
            return Err(GeometryError::NotRealizable { vertex: j, radicand: rad });
        }
        let h = rad.max(0.0).sqrt();
        if h <= EPS_DEGEN * scale {
            return Err(GeometryError::Degenerate { vertex: j, height: h });
        }
        row[j - 1] = h;
        self.rows.push(row);
        self.scale = scale;
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.rows.len()
    }

    /// Ambient dimension `n - 1`.
    pub fn dim(&self) -> usize {
        self.rows.len() - 1
    }

    /// Largest input distance seen so far.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn coord(&self, j: usize, k: usize) -> f64 {
        self.rows[j].get(k).copied().unwrap_or(0.0)
    }

    /// Vertex `j` padded to the full ambient dimension.
    pub fn point(&self, j: usize) -> Vec<f64> {
        let mut p = self.rows[j].clone();
        p.resize(self.dim(), 0.0);
        p
    }

    /// `Σ w_i · v_i` over `(vertex index, weight)` pairs.
    pub fn combine<I: IntoIterator<Item = (usize, f64)>>(&self, terms: I) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (j, w) in terms {
            for (o, &x) in out.iter_mut().zip(&self.rows[j]) {
                *o += w * x;
            }
        }
        out
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    let mut s = 0.0;
    for i in 0..n {
        let d = a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0);
        s += d * d;
    }
    s.sqrt()
}

/// Which virtual source models the wavefront.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Method {
    /// A point at distance `d̄_j` from each non-apex vertex.
    #[default]
    Spherical,
    /// A hyperplane at signed distance `d̄_j` from each non-apex vertex.
    Linear,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spherical" => Ok(Method::Spherical),
            "linear" => Ok(Method::Linear),
            _ => Err(format!("unknown method `{s}` (expected spherical or linear)")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Spherical => "spherical",
            Method::Linear => "linear",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Point(Vec<f64>),
    /// Points `x` with `normal · x + offset = 0`; `normal` has unit length.
    Plane {
        normal: Vec<f64>,
        offset: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extrapolation {
    /// Apex-to-source distance, ignoring where the ray crosses the opposite face.
    pub distance: f64,
    /// Barycentric weights of vertices `1..n` where the ray from the apex
    /// meets their affine hull.
    pub weights: Vec<f64>,
    pub source: Source,
}

pub fn extrapolate(emb: &Embedding, dbar: &[f64], method: Method) -> Result<Extrapolation, GeometryError> {
    match method {
        Method::Spherical => spherical_extrapolate(emb, dbar),
        Method::Linear => linear_extrapolate(emb, dbar),
    }
}

/// Places a point `o` with `‖o − v_j‖ = dbar[j-1]`, on the far side of the
/// opposite face from the apex.
///
/// ```
/// use sstar::geometry::{spherical_extrapolate, Embedding};
/// let e = Embedding::realize(3, |_, _| 1.0).unwrap();
/// let x = spherical_extrapolate(&e, &[1.0, 1.0]).unwrap();
/// assert!((x.distance - 3f64.sqrt()).abs() < 1e-12);
/// assert!((x.weights[0] - 0.5).abs() < 1e-12);
/// ```
pub fn spherical_extrapolate(emb: &Embedding, dbar: &[f64]) -> Result<Extrapolation, GeometryError> {
    spherical_with_root(emb, dbar, false)
}

/// `lower_root` picks the wrong quadratic root; used only to check that the
/// oracle harness notices.
pub(crate) fn spherical_with_root(
    emb: &Embedding,
    dbar: &[f64],
    lower_root: bool,
) -> Result<Extrapolation, GeometryError> {
    let m = check_arity(emb, dbar)?;
    let v10 = emb.coord(1, 0);
    if m == 1 {
        let o = vec![v10 + dbar[0]];
        return Ok(Extrapolation { distance: dbar[0] + v10, weights: vec![1.0], source: Source::Point(o) });
    }
    // o_k = A_k o_0 + B_k for k >= 1.
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    let d1sq = dbar[0] * dbar[0];
    for k in 1..m {
        let row = &emb.rows[k + 1];
        let h = row[k];
        let mut sq = 0.0;
        for &x in row {
            sq += x * x;
        }
        let mut ak = (v10 - row[0]) / h;
        let mut bk = (sq - v10 * v10 + d1sq - dbar[k] * dbar[k]) / (2.0 * h);
        for p in 1..k {
            let r = row[p] / h;
            ak -= r * a[p];
            bk -= r * b[p];
        }
        a[k] = ak;
        b[k] = bk;
    }
    let mut u = 1.0;
    let mut v = -v10;
    let mut w = v10 * v10 - d1sq;
    for k in 1..m {
        u += a[k] * a[k];
        v += a[k] * b[k];
        w += b[k] * b[k];
    }
    v *= 2.0;
    let o0 = solve_quadratic(u, v, w, source_scale(emb, dbar), lower_root)?;
    let mut o = vec![o0; m];
    for k in 1..m {
        o[k] = a[k] * o0 + b[k];
    }
    let weights = intersection_weights(emb, &o)?;
    Ok(Extrapolation { distance: norm(&o), weights, source: Source::Point(o) })
}

/// Places a hyperplane with `n·v_j + μ = dbar[j-1]`, as far from the apex as
/// possible; the distance is `μ`.
///
/// ```
/// use sstar::geometry::{linear_extrapolate, Embedding};
/// let e = Embedding::realize(3, |_, _| 1.0).unwrap();
/// let x = linear_extrapolate(&e, &[1.0, 1.0]).unwrap();
/// assert!((x.distance - (1.0 + 3f64.sqrt() / 2.0)).abs() < 1e-12);
/// ```
pub fn linear_extrapolate(emb: &Embedding, dbar: &[f64]) -> Result<Extrapolation, GeometryError> {
    let m = check_arity(emb, dbar)?;
    let v10 = emb.coord(1, 0);
    if m == 1 {
        return Ok(Extrapolation {
            distance: dbar[0] + v10,
            weights: vec![1.0],
            source: Source::Plane { normal: vec![-1.0], offset: dbar[0] + v10 },
        });
    }
    // normal_k = M_k μ + N_k, from the rows of v_1..v_{n-1}.
    let mut mm = vec![0.0; m];
    let mut nn = vec![0.0; m];
    for k in 0..m {
        let row = &emb.rows[k + 1];
        let mut mk = -1.0;
        let mut nk = dbar[k];
        for p in 0..k {
            mk -= mm[p] * row[p];
            nk -= nn[p] * row[p];
        }
        mm[k] = mk / row[k];
        nn[k] = nk / row[k];
    }
    let (mut p, mut q, mut r) = (0.0, 0.0, -1.0);
    for k in 0..m {
        p += mm[k] * mm[k];
        q += mm[k] * nn[k];
        r += nn[k] * nn[k];
    }
    q *= 2.0;
    let mu = solve_quadratic(p, q, r, source_scale(emb, dbar), false)?;
    let normal: Vec<f64> = (0..m).map(|k| mm[k] * mu + nn[k]).collect();
    let weights = intersection_weights(emb, &normal)?;
    Ok(Extrapolation { distance: mu, weights, source: Source::Plane { normal, offset: mu } })
}

/// Weights of the point where the line through the apex and `direction`
/// meets the affine hull of vertices `1..n`.
///
/// Solved back to front: coordinate `j-1` only involves vertices `j..n`.
pub fn intersection_weights(emb: &Embedding, direction: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let m = emb.dim();
    if direction.len() != m {
        return Err(GeometryError::Arity { expected: m, got: direction.len() });
    }
    let mut w = vec![0.0; m];
    for j in (1..=m).rev() {
        let mut num = direction[j - 1];
        for i in j + 1..=m {
            num -= w[i - 1] * emb.rows[i][j - 1];
        }
        w[j - 1] = num / emb.rows[j][j - 1];
    }
    let sum: f64 = w.iter().sum();
    if sum.abs() < EPS_WEIGHT || !sum.is_finite() {
        return Err(GeometryError::DegenerateWeights { sum });
    }
    for x in &mut w {
        *x /= sum;
    }
    Ok(w)
}

fn check_arity(emb: &Embedding, dbar: &[f64]) -> Result<usize, GeometryError> {
    let m = emb.dim();
    if m == 0 || dbar.len() != m {
        return Err(GeometryError::Arity { expected: m.max(1), got: dbar.len() });
    }
    Ok(m)
}

fn source_scale(emb: &Embedding, dbar: &[f64]) -> f64 {
    dbar.iter().fold(emb.scale(), |s, &x| s.max(x.abs()))
}

/// Larger (or, on request, smaller) root of `a x² + b x + c` with `a > 0`,
/// avoiding cancellation.
fn solve_quadratic(a: f64, b: f64, c: f64, scale: f64, lower: bool) -> Result<f64, GeometryError> {
    let disc = b * b - 4.0 * a * c;
    if disc < -EPS_REAL * scale * scale || disc.is_nan() {
        return Err(GeometryError::NoRealSolution { discriminant: disc });
    }
    let s = disc.max(0.0).sqrt();
    let upper = !lower;
    let root = if (b <= 0.0) == upper {
        (-b + if upper { s } else { -s }) / (2.0 * a)
    } else {
        2.0 * c / (-b - if upper { s } else { -s })
    };
    if !root.is_finite() {
        return Err(GeometryError::NoRealSolution { discriminant: disc });
    }
    Ok(root)
}
