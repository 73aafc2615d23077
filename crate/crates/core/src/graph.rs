//! Weighted graphs over signal samples and their Laplacian operators.
//!
//! Two constructions are provided: bilateral-filter weights (a spatial
//! Gaussian times a photometric Gaussian over a local neighborhood) and
//! guided-filter weights (the implicit symmetric matrix realized by the
//! guided filter's local linear model). Both yield a [`WeightedGraph`]
//! whose Laplacian `L = D - W` acts matrix-free through
//! [`LaplacianOperator`].

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::signal::{Shape, Signal};

/// Bilateral-filter weight parameters.
///
/// `sigma_s` is in pixel-distance units, `sigma_r` in intensity units,
/// `half_width` is the neighborhood radius in the grid metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfParams {
    pub sigma_s: f64,
    pub sigma_r: f64,
    pub half_width: usize,
}

impl BfParams {
    pub fn new(sigma_s: f64, sigma_r: f64, half_width: usize) -> Result<Self> {
        if !(sigma_s > 0.0) || !sigma_s.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sigma_s must be finite and > 0, got {sigma_s}"
            )));
        }
        if !(sigma_r > 0.0) || !sigma_r.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sigma_r must be finite and > 0, got {sigma_r}"
            )));
        }
        if half_width == 0 {
            return Err(Error::InvalidArgument("half_width must be >= 1".into()));
        }
        Ok(BfParams {
            sigma_s,
            sigma_r,
            half_width,
        })
    }
}

/// Guided-filter parameters: odd mean-filter window width `rho` and the
/// variance regularizer `epsilon` (intensity-squared units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfParams {
    pub rho: usize,
    pub epsilon: f64,
}

impl GfParams {
    pub fn new(rho: usize, epsilon: f64) -> Result<Self> {
        if rho == 0 || rho % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "rho must be odd and >= 1, got {rho}"
            )));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and > 0, got {epsilon}"
            )));
        }
        Ok(GfParams { rho, epsilon })
    }
}

/// One undirected edge, stored once with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Symmetric weighted graph over the samples of a signal.
///
/// Storage is one entry per undirected edge plus the diagonal (self-loop)
/// weights; symmetry is structural. Degrees `d_i = sum_j w_ij` are computed
/// once at construction. Guided-filter graphs may carry negative edge
/// weights; bilateral graphs never do.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    shape: Shape,
    diag: Vec<f64>,
    edges: Vec<Edge>,
    degrees: Vec<f64>,
}

impl WeightedGraph {
    /// Builds a graph from self-loop weights and undirected edges.
    ///
    /// Edges must satisfy `i < j` with valid vertex indices and finite
    /// weights; they are sorted by `(i, j)` so downstream traversal order
    /// is deterministic.
    pub fn from_parts(shape: Shape, diag: Vec<f64>, mut edges: Vec<Edge>) -> Result<Self> {
        let n = shape.len();
        if diag.len() != n {
            return Err(Error::InvalidArgument(format!(
                "diagonal has {} entries for {} vertices",
                diag.len(),
                n
            )));
        }
        if let Some(i) = diag.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        for e in &edges {
            if e.i >= e.j {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) must have i < j",
                    e.i, e.j
                )));
            }
            if e.j >= n {
                return Err(Error::VertexOutOfRange { vertex: e.j, n });
            }
            if !e.weight.is_finite() {
                return Err(Error::NonFinite(e.i));
            }
        }
        edges.sort_by(|a, b| (a.i, a.j).cmp(&(b.i, b.j)));

        let mut degrees = diag.clone();
        for e in &edges {
            degrees[e.i] += e.weight;
            degrees[e.j] += e.weight;
        }
        Ok(WeightedGraph {
            shape,
            diag,
            edges,
            degrees,
        })
    }

    /// Unit-weight path graph without self-loops; the standard spectral
    /// test fixture (eigenvalues `2 - 2cos(k*pi/n)`).
    pub fn path(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("empty path graph".into()));
        }
        let edges = (0..n.saturating_sub(1))
            .map(|i| Edge {
                i,
                j: i + 1,
                weight: 1.0,
            })
            .collect();
        WeightedGraph::from_parts(Shape::Length(n), vec![0.0; n], edges)
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn self_loops(&self) -> &[f64] {
        &self.diag
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// y = W x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self
            .diag
            .iter()
            .zip(x)
            .map(|(w, xi)| w * xi)
            .collect();
        for e in &self.edges {
            y[e.i] += e.weight * x[e.j];
            y[e.j] += e.weight * x[e.i];
        }
        y
    }

    /// Componentwise `d_i * x_i`.
    pub fn degree_matvec(&self, x: &[f64]) -> Vec<f64> {
        self.degrees.iter().zip(x).map(|(d, xi)| d * xi).collect()
    }

    /// Componentwise `x_i / d_i`; errors on any zero degree.
    pub fn degree_solve(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(i) = self.degrees.iter().position(|&d| d == 0.0) {
            return Err(Error::SingularPreconditioner(i));
        }
        Ok(self.degrees.iter().zip(x).map(|(d, xi)| xi / d).collect())
    }

    /// Dense adjacency matrix W, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut a = vec![0.0; n * n];
        for (i, w) in self.diag.iter().enumerate() {
            a[i * n + i] = *w;
        }
        for e in &self.edges {
            a[e.i * n + e.j] = e.weight;
            a[e.j * n + e.i] = e.weight;
        }
        a
    }
}

/// True iff `max_i d_i <= 2`, the Gershgorin bound under which one filter
/// pass `x - D^{-1}Lx` cannot amplify any spectral component.
pub fn gershgorin_check(graph: &WeightedGraph) -> bool {
    graph.degrees.iter().fold(0.0_f64, |m, &d| m.max(d)) <= 2.0
}

fn grid_of(shape: Shape) -> (usize, usize) {
    match shape {
        Shape::Length(n) => (1, n),
        Shape::Grid { rows, cols } => (rows, cols),
    }
}

/// Vertices within the neighborhood of `vertex`, self included, sorted.
///
/// 1D: the window `|i - j| <= half_width`, truncated at the ends. 2D: the
/// axis-aligned cross of radius `half_width`, truncated at the borders;
/// `half_width = 1` is the 5-point stencil.
pub fn neighborhood(shape: Shape, vertex: usize, half_width: usize) -> Result<Vec<usize>> {
    let n = shape.len();
    if vertex >= n {
        return Err(Error::VertexOutOfRange { vertex, n });
    }
    match shape {
        Shape::Length(len) => {
            let lo = vertex.saturating_sub(half_width);
            let hi = (vertex + half_width).min(len - 1);
            Ok((lo..=hi).collect())
        }
        Shape::Grid { rows, cols } => {
            let r = vertex / cols;
            let c = vertex % cols;
            let mut out = Vec::with_capacity(4 * half_width + 1);
            for k in 1..=half_width {
                if r >= k {
                    out.push((r - k) * cols + c);
                }
            }
            for k in 1..=half_width {
                if c >= k {
                    out.push(r * cols + (c - k));
                }
            }
            out.push(vertex);
            for k in 1..=half_width {
                if c + k < cols {
                    out.push(r * cols + (c + k));
                }
            }
            for k in 1..=half_width {
                if r + k < rows {
                    out.push((r + k) * cols + c);
                }
            }
            out.sort_unstable();
            Ok(out)
        }
    }
}

/// Bilateral-filter graph over `guidance`.
///
/// For each `j` in the neighborhood of `i`:
/// `w_ij = exp(-|p_i - p_j|^2 / (2 sigma_s^2)) * exp(-(g_i - g_j)^2 / (2 sigma_r^2))`
/// with `p` in grid coordinates at unit spacing. Self-loops are exactly 1.
pub fn bf_graph(guidance: &Signal, params: &BfParams) -> WeightedGraph {
    let shape = guidance.shape();
    let g = guidance.values();
    let n = g.len();
    let (_, cols) = grid_of(shape);
    let inv_2ss = 1.0 / (2.0 * params.sigma_s * params.sigma_s);
    let inv_2sr = 1.0 / (2.0 * params.sigma_r * params.sigma_r);

    let mut edges = Vec::new();
    for i in 0..n {
        // neighborhood() cannot fail here: i < n by construction
        for j in neighborhood(shape, i, params.half_width).expect("valid vertex") {
            if j <= i {
                continue;
            }
            let (ri, ci) = (i / cols, i % cols);
            let (rj, cj) = (j / cols, j % cols);
            let dr = ri as f64 - rj as f64;
            let dc = ci as f64 - cj as f64;
            let spatial = (-(dr * dr + dc * dc) * inv_2ss).exp();
            let dg = g[i] - g[j];
            let photometric = (-(dg * dg) * inv_2sr).exp();
            edges.push(Edge {
                i,
                j,
                weight: spatial * photometric,
            });
        }
    }
    WeightedGraph::from_parts(shape, vec![1.0; n], edges).expect("construction is valid")
}

/// Mean-filter windows centered at every sample: start offset and members.
fn window_bounds(len: usize, center: usize, half: usize) -> (usize, usize) {
    let lo = center.saturating_sub(half);
    let hi = (center + half).min(len - 1);
    (lo, hi)
}

/// Guided-filter weight matrix over `guidance`.
///
/// `W_ij = (1/|w|^2) * sum over windows k containing both i and j of
/// (1 + (g_i - mu_k)(g_j - mu_k) / (sigma_k^2 + epsilon))`, where `mu_k`
/// and `sigma_k^2` are the mean and biased variance of the guidance over
/// the width-`rho` window centered at `k`. Windows truncate at borders but
/// the prefactor keeps the constant `|w| = rho` (1D) or `rho^2` (2D); rows
/// whose window stack is fully interior sum to exactly 1, boundary rows
/// fall short of 1 and are left as computed. Entries may be negative.
pub fn gf_weight_matrix(guidance: &Signal, params: &GfParams) -> WeightedGraph {
    let shape = guidance.shape();
    let g = guidance.values();
    let n = g.len();
    let (rows, cols) = grid_of(shape);
    let half = (params.rho - 1) / 2;
    let omega = match shape {
        Shape::Length(_) => params.rho as f64,
        Shape::Grid { .. } => (params.rho * params.rho) as f64,
    };
    let inv_omega_sq = 1.0 / (omega * omega);

    let mut diag = vec![0.0; n];
    let mut off: HashMap<(usize, usize), f64> = HashMap::new();
    let mut members: Vec<usize> = Vec::with_capacity(params.rho * params.rho);

    for kr in 0..rows {
        let (r_lo, r_hi) = window_bounds(rows, kr, half);
        for kc in 0..cols {
            let (c_lo, c_hi) = window_bounds(cols, kc, half);
            members.clear();
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for r in r_lo..=r_hi {
                for c in c_lo..=c_hi {
                    let v = r * cols + c;
                    members.push(v);
                    sum += g[v];
                    sum_sq += g[v] * g[v];
                }
            }
            let count = members.len() as f64;
            let mu = sum / count;
            // biased variance corr_g - mean_g^2, matching the filter's arithmetic
            let var = sum_sq / count - mu * mu;
            let inv_var_eps = 1.0 / (var + params.epsilon);

            for (a, &i) in members.iter().enumerate() {
                let gi = g[i] - mu;
                for &j in &members[a..] {
                    let contrib = (1.0 + gi * (g[j] - mu) * inv_var_eps) * inv_omega_sq;
                    if i == j {
                        diag[i] += contrib;
                    } else {
                        *off.entry((i, j)).or_insert(0.0) += contrib;
                    }
                }
            }
        }
    }

    let edges = off
        .into_iter()
        .map(|((i, j), weight)| Edge { i, j, weight })
        .collect();
    WeightedGraph::from_parts(shape, diag, edges).expect("construction is valid")
}

/// Vertices far enough from every border that their entire guided-filter
/// window stack is untruncated (distance >= rho-1 per axis). On these rows
/// the weight matrix sums to exactly 1 and matches the vertex-domain filter.
pub fn gf_interior_vertices(shape: Shape, rho: usize) -> Vec<usize> {
    let margin = rho - 1;
    match shape {
        Shape::Length(n) => {
            if n > 2 * margin {
                (margin..n - margin).collect()
            } else {
                Vec::new()
            }
        }
        Shape::Grid { rows, cols } => {
            let mut out = Vec::new();
            if rows > 2 * margin && cols > 2 * margin {
                for r in margin..rows - margin {
                    for c in margin..cols - margin {
                        out.push(r * cols + c);
                    }
                }
            }
            out
        }
    }
}

/// Matrix-free graph Laplacian `L = D - W`, optionally symmetrically
/// normalized as `(diag L)^{-1/2} L (diag L)^{-1/2}`.
#[derive(Debug, Clone)]
pub struct LaplacianOperator {
    graph: WeightedGraph,
    normalized: bool,
    inv_sqrt_diag: Option<Vec<f64>>,
}

/// Wraps a graph as a Laplacian operator.
///
/// The normalized form requires every diagonal entry of `L` (that is,
/// `d_i - w_ii`) to be positive.
pub fn laplacian(graph: WeightedGraph, normalized: bool) -> Result<LaplacianOperator> {
    let inv_sqrt_diag = if normalized {
        let mut s = Vec::with_capacity(graph.n());
        for i in 0..graph.n() {
            let l_ii = graph.degrees[i] - graph.diag[i];
            if l_ii <= 0.0 {
                return Err(Error::SingularScaling(i));
            }
            s.push(1.0 / l_ii.sqrt());
        }
        Some(s)
    } else {
        None
    };
    Ok(LaplacianOperator {
        graph,
        normalized,
        inv_sqrt_diag,
    })
}

impl LaplacianOperator {
    pub fn dim(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    fn apply_unnormalized(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.graph;
        let mut y: Vec<f64> = g
            .degrees
            .iter()
            .zip(&g.diag)
            .zip(x)
            .map(|((d, w), xi)| (d - w) * xi)
            .collect();
        for e in &g.edges {
            y[e.i] -= e.weight * x[e.j];
            y[e.j] -= e.weight * x[e.i];
        }
        y
    }

    /// y = L x (or the normalized form when requested at construction).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.inv_sqrt_diag {
            None => self.apply_unnormalized(x),
            Some(s) => {
                let scaled: Vec<f64> = s.iter().zip(x).map(|(si, xi)| si * xi).collect();
                let mut y = self.apply_unnormalized(&scaled);
                for (yi, si) in y.iter_mut().zip(s) {
                    *yi *= si;
                }
                y
            }
        }
    }

    /// Diagonal entries of the operator.
    pub fn diag(&self) -> Vec<f64> {
        let g = &self.graph;
        match &self.inv_sqrt_diag {
            None => g
                .degrees
                .iter()
                .zip(&g.diag)
                .map(|(d, w)| d - w)
                .collect(),
            // normalized diagonal is 1 by construction
            Some(s) => vec![1.0; s.len()],
        }
    }

    /// Dense row-major realization, for the desk-scale spectral path.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let g = &self.graph;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = g.degrees[i] - g.diag[i];
        }
        for e in &g.edges {
            a[e.i * n + e.j] = -e.weight;
            a[e.j * n + e.i] = -e.weight;
        }
        if let Some(s) = &self.inv_sqrt_diag {
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] *= s[i] * s[j];
                }
            }
        }
        a
    }
}

/// Diagonal linear operator: the degree matrix, its inverse, or identity.
/// Serves as the pencil mass matrix and preconditioner in the Krylov
/// solvers.
#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    entries: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(entries: Vec<f64>) -> Self {
        DiagonalOperator { entries }
    }

    pub fn identity(n: usize) -> Self {
        DiagonalOperator {
            entries: vec![1.0; n],
        }
    }

    pub fn from_degrees(graph: &WeightedGraph) -> Self {
        DiagonalOperator {
            entries: graph.degrees.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.entries.iter().zip(x).map(|(d, xi)| d * xi).collect()
    }

    pub fn solve(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(i) = self.entries.iter().position(|&d| d == 0.0) {
            return Err(Error::SingularPreconditioner(i));
        }
        Ok(self.entries.iter().zip(x).map(|(d, xi)| xi / d).collect())
    }

    pub fn inverse(&self) -> Result<DiagonalOperator> {
        if let Some(i) = self.entries.iter().position(|&d| d == 0.0) {
            return Err(Error::SingularPreconditioner(i));
        }
        Ok(DiagonalOperator {
            entries: self.entries.iter().map(|d| 1.0 / d).collect(),
        })
    }
}
