//! Finite-element discrete-variable representation (FE-DVR) grids.
//!
//! The simulation box `[-x_s, x_s]` is split into elements, each spanned by
//! `n_g` Gauss-Lobatto DVR functions. Functions at interior element
//! boundaries are "bridge" functions shared by the two adjacent elements;
//! the two functions sitting exactly on the box endpoints are dropped, which
//! enforces hard-wall boundary conditions and gives
//! `N_b = N_e (n_g - 1) - 1` spatial basis functions.
//!
//! In this basis, local potentials and the electron-electron interaction are
//! diagonal at the quadrature nodes, and only the kinetic matrix couples
//! functions within an element (or across one bridge).

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Tag distinguishing interior element functions from boundary bridges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FnKind {
    Element,
    Bridge,
}

/// FE-DVR grid with its basis-function bookkeeping.
///
/// Basis functions are ordered left to right by node coordinate. The
/// functions whose nodes lie strictly inside `(-x_c, x_c)` form a contiguous
/// index range (`central_range`); the bridges at `±x_c` belong to the outer
/// set.
#[derive(Debug, Clone)]
pub struct FedvrGrid {
    pub x_s: f64,
    pub x_c: f64,
    pub element_boundaries: Vec<f64>,
    pub n_g: usize,
    /// Quadrature node of each basis function.
    pub nodes: Vec<f64>,
    /// Quadrature weight of each basis function (bridge weights are the sum
    /// of the two adjacent element weights).
    pub weights: Vec<f64>,
    pub kinds: Vec<FnKind>,
    /// Left (owning) element of each basis function.
    pub elements: Vec<usize>,
    /// Reference Lobatto rule on [-1, 1].
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
    /// `index_map[i][m]` = global index of local DVR function `m` of element
    /// `i`, or `None` for the dropped box-endpoint functions.
    index_map: Vec<Vec<Option<usize>>>,
    central_start: usize,
    n_c: usize,
}

/// Gauss-Lobatto quadrature rule with `n` points on `[-1, 1]`.
///
/// The nodes are the roots of `(1 - t^2) P'_{n-1}(t)`; the rule integrates
/// polynomials up to degree `2n - 3` exactly. Interior roots are refined by
/// Newton iteration from Chebyshev initial guesses to 1e-14.
pub fn lobatto_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::Invalid(format!("Lobatto rule needs n >= 2, got {n}")));
    }
    let deg = n - 1; // Legendre degree
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[deg] = 1.0;
    for j in 1..deg {
        // Chebyshev-Lobatto initial guess
        let mut x = -(std::f64::consts::PI * j as f64 / deg as f64).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(deg, x);
            // Newton step for (1 - x^2) P'_N(x), whose derivative is -N(N+1) P_N(x)
            let update = (1.0 - x * x) * dp / (deg as f64 * (deg + 1) as f64 * p);
            x += update;
            if update.abs() < 1e-14 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::RootFinding(format!(
                "Lobatto node {j} of rule n={n} did not converge"
            )));
        }
        nodes[j] = x;
    }
    let nn = (deg * (deg + 1)) as f64;
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre_and_derivative(deg, x);
            2.0 / (nn * p * p)
        })
        .collect();
    Ok((nodes, weights))
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    // P'_n from P_n and P_{n-1}
    let dp = if (x * x - 1.0).abs() < 1e-300 {
        // endpoints: P'_n(±1) = ±^{n+1} n(n+1)/2
        let s = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        (n as f64) * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// Build a grid with `n_e` uniform elements on `[-x_s, x_s]`.
pub fn build_grid(x_s: f64, x_c: f64, n_e: usize, n_g: usize) -> Result<FedvrGrid> {
    if n_e < 2 {
        return Err(Error::Grid(format!("need at least 2 elements, got {n_e}")));
    }
    let boundaries: Vec<f64> = (0..=n_e)
        .map(|i| -x_s + 2.0 * x_s * i as f64 / n_e as f64)
        .collect();
    build_grid_with_boundaries(&boundaries, x_c, n_g)
}

/// Build a grid from an explicit (strictly increasing) element partition.
pub fn build_grid_with_boundaries(boundaries: &[f64], x_c: f64, n_g: usize) -> Result<FedvrGrid> {
    if n_g < 2 {
        return Err(Error::Grid(format!("need n_g >= 2 DVR functions per element, got {n_g}")));
    }
    if boundaries.len() < 3 {
        return Err(Error::Grid("need at least 2 elements".into()));
    }
    if boundaries.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid("element boundaries must be strictly increasing".into()));
    }
    let x_s = boundaries[boundaries.len() - 1];
    if (boundaries[0] + x_s).abs() > 1e-9 * x_s.abs().max(1.0) {
        return Err(Error::Grid("partition must span a symmetric box [-x_s, x_s]".into()));
    }
    if !(0.0 <= x_c && x_c < x_s) {
        return Err(Error::Grid(format!("need 0 <= x_c < x_s, got x_c={x_c}, x_s={x_s}")));
    }
    let tol = 1e-9 * x_s.max(1.0);
    if x_c > 0.0 {
        for xc in [-x_c, x_c] {
            if !boundaries.iter().any(|&b| (b - xc).abs() < tol) {
                return Err(Error::Grid(format!(
                    "x_c = {xc} does not coincide with an element boundary"
                )));
            }
        }
    }

    let (t, w) = lobatto_rule(n_g)?;
    let n_e = boundaries.len() - 1;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut kinds = Vec::new();
    let mut elements = Vec::new();
    let mut index_map = vec![vec![None; n_g]; n_e];

    for i in 0..n_e {
        let (a, b) = (boundaries[i], boundaries[i + 1]);
        let half = 0.5 * (b - a);
        for m in 1..n_g {
            let x = 0.5 * (a + b) + half * t[m];
            if m == n_g - 1 {
                if i == n_e - 1 {
                    continue; // box endpoint dropped
                }
                // bridge between elements i and i+1
                let half_next = 0.5 * (boundaries[i + 2] - boundaries[i + 1]);
                let idx = nodes.len();
                nodes.push(x);
                weights.push(half * w[m] + half_next * w[0]);
                kinds.push(FnKind::Bridge);
                elements.push(i);
                index_map[i][m] = Some(idx);
                index_map[i + 1][0] = Some(idx);
            } else {
                let idx = nodes.len();
                nodes.push(x);
                weights.push(half * w[m]);
                kinds.push(FnKind::Element);
                elements.push(i);
                index_map[i][m] = Some(idx);
            }
        }
    }

    let central: Vec<bool> = nodes.iter().map(|&x| x.abs() < x_c - tol).collect();
    let n_c = central.iter().filter(|&&c| c).count();
    let central_start = central.iter().position(|&c| c).unwrap_or(0);
    // sanity: central functions are contiguous in the left-to-right ordering
    debug_assert!(central[central_start..central_start + n_c].iter().all(|&c| c));

    Ok(FedvrGrid {
        x_s,
        x_c,
        element_boundaries: boundaries.to_vec(),
        n_g,
        nodes,
        weights,
        kinds,
        elements,
        ref_nodes: t,
        ref_weights: w,
        index_map,
        central_start,
        n_c,
    })
}

impl FedvrGrid {
    /// Total number of spatial basis functions `N_b`.
    pub fn n_b(&self) -> usize {
        self.nodes.len()
    }

    /// Number of functions strictly inside `(-x_c, x_c)`.
    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn n_elements(&self) -> usize {
        self.element_boundaries.len() - 1
    }

    /// Index range of the central functions in the left-to-right ordering.
    pub fn central_range(&self) -> std::ops::Range<usize> {
        self.central_start..self.central_start + self.n_c
    }

    pub fn is_central(&self, p: usize) -> bool {
        self.central_range().contains(&p)
    }

    /// Standalone grid for the central region `[-x_c, x_c]` with hard walls.
    ///
    /// Its basis functions coincide with this grid's central functions (the
    /// bridges at `±x_c` become the dropped endpoints), so quantities
    /// computed on the subgrid transfer index-by-index via `central_range`.
    pub fn central_subgrid(&self) -> Result<FedvrGrid> {
        let tol = 1e-9 * self.x_s.max(1.0);
        let sub: Vec<f64> = self
            .element_boundaries
            .iter()
            .copied()
            .filter(|&b| b.abs() < self.x_c + tol)
            .collect();
        // the subgrid's own central split is never used; pick any positive
        // interior boundary (or none) to satisfy construction
        let sub_xc = sub[1..sub.len() - 1]
            .iter()
            .copied()
            .filter(|&b| b > tol)
            .min_by(|a, b| {
                let da = (a - self.x_c / 2.0).abs();
                let db = (b - self.x_c / 2.0).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap_or(0.0);
        let g = build_grid_with_boundaries(&sub, sub_xc, self.n_g)?;
        debug_assert_eq!(g.n_b(), self.n_c);
        Ok(g)
    }

    /// Kinetic-energy matrix `t_pq = 1/2 <χ_p'|χ_q'>` assembled per element
    /// by Gauss-Lobatto quadrature. Nonzero only for functions sharing an
    /// element (bridges couple adjacent elements).
    pub fn kinetic_matrix(&self) -> DMatrix<f64> {
        let n_b = self.n_b();
        let n_g = self.n_g;
        let d = lagrange_derivative_matrix(&self.ref_nodes);
        let mut t = DMatrix::zeros(n_b, n_b);
        for (i, map) in self.index_map.iter().enumerate() {
            let half = 0.5 * (self.element_boundaries[i + 1] - self.element_boundaries[i]);
            // local kinetic on the reference element, scaled to physical width:
            // 1/2 Σ_k w_k f'_m1 f'_m2 with f' = D/half and w = half*w_ref
            for m1 in 0..n_g {
                let Some(p) = map[m1] else { continue };
                for m2 in m1..n_g {
                    let Some(q) = map[m2] else { continue };
                    let mut acc = 0.0;
                    for k in 0..n_g {
                        acc += self.ref_weights[k] * d[(k, m1)] * d[(k, m2)];
                    }
                    let val = 0.5 * acc / half / (self.weights[p] * self.weights[q]).sqrt();
                    t[(p, q)] += val;
                    if p != q {
                        t[(q, p)] += val;
                    }
                }
            }
        }
        t
    }

    /// Diagonal representation `f(x_p)` of a local potential.
    pub fn diagonal_potential(&self, f: impl Fn(f64) -> f64) -> Result<DVector<f64>> {
        let vals: Vec<f64> = self.nodes.iter().map(|&x| f(x)).collect();
        if let Some(p) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "potential not finite at node {p} (x = {})",
                self.nodes[p]
            )));
        }
        Ok(DVector::from_vec(vals))
    }

    /// Evaluate basis function `p` at an arbitrary coordinate.
    pub fn eval_basis(&self, p: usize, x: f64) -> f64 {
        if x < -self.x_s || x > self.x_s {
            return 0.0;
        }
        let e = self.element_of(x);
        let inv_norm = 1.0 / self.weights[p].sqrt();
        let own = self.elements[p];
        match self.kinds[p] {
            FnKind::Element => {
                if e == own {
                    let m = self.local_index(p, own);
                    self.shape_fn(own, m, x) * inv_norm
                } else {
                    0.0
                }
            }
            FnKind::Bridge => {
                if e == own {
                    self.shape_fn(own, self.n_g - 1, x) * inv_norm
                } else if e == own + 1 {
                    self.shape_fn(own + 1, 0, x) * inv_norm
                } else {
                    0.0
                }
            }
        }
    }

    /// Quadrature sum `Σ_p w_p g(x_p)` over all basis-function nodes.
    pub fn quadrature(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }

    /// Text table (index, node, weight, kind, element) for debugging.
    pub fn summary_table(&self) -> String {
        let mut s = String::from("# idx\tnode\tweight\tkind\telement\n");
        for p in 0..self.n_b() {
            let kind = match self.kinds[p] {
                FnKind::Element => "element",
                FnKind::Bridge => "bridge",
            };
            s.push_str(&format!(
                "{p}\t{:.12e}\t{:.12e}\t{kind}\t{}\n",
                self.nodes[p], self.weights[p], self.elements[p]
            ));
        }
        s
    }

    fn element_of(&self, x: f64) -> usize {
        let b = &self.element_boundaries;
        let mut e = b.partition_point(|&v| v <= x);
        e = e.saturating_sub(1);
        e.min(b.len() - 2)
    }

    fn local_index(&self, p: usize, element: usize) -> usize {
        self.index_map[element]
            .iter()
            .position(|&g| g == Some(p))
            .expect("basis function not in its owning element")
    }

    /// Lobatto shape function `f_m(x)` of element `i` (unnormalized).
    fn shape_fn(&self, i: usize, m: usize, x: f64) -> f64 {
        let (a, b) = (self.element_boundaries[i], self.element_boundaries[i + 1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let xm = mid + half * self.ref_nodes[m];
        let mut prod = 1.0;
        for (j, &tj) in self.ref_nodes.iter().enumerate() {
            if j == m {
                continue;
            }
            let xj = mid + half * tj;
            prod *= (x - xj) / (xm - xj);
        }
        prod
    }
}

/// `D[(k, m)] = f_m'(t_k)` for the Lagrange basis on the given nodes.
fn lagrange_derivative_matrix(t: &[f64]) -> DMatrix<f64> {
    let n = t.len();
    let mut d = DMatrix::zeros(n, n);
    for m in 0..n {
        for k in 0..n {
            if k == m {
                d[(k, m)] = (0..n).filter(|&j| j != m).map(|j| 1.0 / (t[m] - t[j])).sum();
            } else {
                let mut p = 1.0 / (t[m] - t[k]);
                for j in 0..n {
                    if j != m && j != k {
                        p *= (t[k] - t[j]) / (t[m] - t[j]);
                    }
                }
                d[(k, m)] = p;
            }
        }
    }
    d
}
