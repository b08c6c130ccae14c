//! Numerical Green's function of `T_n[M]` on `X_k` and its sign check.
//!
//! For each source point `s`,
//!
//! ```text
//! g(t, s) = Σ_{j < n-k} c_j(s) y_j(t)   for t < s
//! g(t, s) = Σ_{i < k}   d_i(s) z_i(t)   for t >= s
//! ```
//!
//! where the `y_j` are canonical solutions from `a` that vanish to order `k`
//! there and the `z_i` are integrated backward from `b` and vanish to order
//! `n-k` there. `c, d` make `g` match to order `n-2` at `t = s` with a unit
//! jump in order `n-1`. Each side satisfies its boundary conditions exactly,
//! so `g` near `a` and `b` carries no cancellation. Under disconjugacy
//! `g(t, s) p(t) >= 0` with `p(t) = (t-a)^k (t-b)^(n-k)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Lu;
use crate::ode::{
    integrate_fundamental, integrate_ivp, integrate_ivp_backward, DenseTrajectory, GridSpec,
    ProblemDef,
};

/// Solution of `T_n[M] v = 0` on `[s, b]` with `v^(n-1)(s) = 1` and all
/// lower derivatives zero at `s`.
pub fn cauchy_solution(p: &ProblemDef, m: f64, s: f64, g: &GridSpec) -> Result<DenseTrajectory> {
    let (a, b) = p.interval();
    if !(s > a && s < b) {
        return Err(Error::InvalidProblem("source point must lie inside (a, b)"));
    }
    let n = p.order();
    let mut init = vec![0.0; n];
    init[n - 1] = 1.0;
    integrate_ivp(p, m, s, &init, g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// `g(t, s)` on `mesh` uniform `t` nodes (endpoints included) and `mesh`
/// interior `s` nodes at cell midpoints.
#[derive(Debug, Clone)]
pub struct GreenGrid {
    pub m: f64,
    pub k: usize,
    pub order: usize,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    /// `values[ti * s.len() + si]`.
    pub values: Vec<f64>,
    /// `p(t)` on the `t` nodes.
    pub p: Vec<f64>,
    /// Largest boundary trace of the unit solutions used near `a` and `b`.
    pub boundary_residual: f64,
    /// Largest mismatch across `t = s` of orders `0..n-2` and of the unit
    /// jump in order `n-1`, relative to the terms that cancel in it.
    pub jump_error: f64,
}

impl GreenGrid {
    pub fn value(&self, ti: usize, si: usize) -> f64 {
        self.values[ti * self.s.len() + si]
    }

    pub fn scale(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn parity(&self) -> Parity {
        if (self.order - self.k).is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

fn relative(sum: f64, magnitude: f64) -> f64 {
    if magnitude > 0.0 {
        sum.abs() / magnitude
    } else {
        0.0
    }
}

pub fn build_green(
    p: &ProblemDef,
    m: f64,
    k: usize,
    mesh: usize,
    g: &GridSpec,
) -> Result<GreenGrid> {
    if mesh < 4 {
        return Err(Error::InvalidProblem(
            "Green's function mesh needs at least 4 nodes",
        ));
    }
    let (a, b) = p.interval();
    let t_nodes = GridSpec { nodes: mesh, ..*g }.nodes_on(a, b);
    let h = (b - a) / mesh as f64;
    let s_nodes: Vec<f64> = (0..mesh).map(|i| a + (i as f64 + 0.5) * h).collect();
    build_green_on(p, m, k, t_nodes, s_nodes, g)
}

/// [`build_green`] on caller-chosen nodes; every `s` must lie in `(a, b)`
/// and every `t` in `[a, b]`.
pub fn build_green_on(
    p: &ProblemDef,
    m: f64,
    k: usize,
    t_nodes: Vec<f64>,
    s_nodes: Vec<f64>,
    g: &GridSpec,
) -> Result<GreenGrid> {
    let n = p.order();
    assert!(k >= 1 && k < n, "k = {k} outside 1..{}", n - 1);
    let ell = n - k;
    let (a, b) = p.interval();
    let fs = integrate_fundamental(p, m, g)?;
    let n2 = n * n;
    let mut state_a = vec![0.0; n2];
    let mut state_b = vec![0.0; n2];
    fs.state_at(a, &mut state_a);
    fs.state_at(b, &mut state_b);

    // rows: orders 0..k-1 at a, then orders 0..ell-1 at b; each row scaled
    // to unit max norm
    let mut rows: Vec<(bool, usize)> = (0..k).map(|d| (false, d)).collect();
    rows.extend((0..ell).map(|d| (true, d)));
    let mut mat = Vec::with_capacity(n2);
    let mut row_scale = Vec::with_capacity(n);
    for &(at_b, d) in &rows {
        let st = if at_b { &state_b } else { &state_a };
        let row: Vec<f64> = (0..n).map(|j| st[j * n + d]).collect();
        let sc = row.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        if sc == 0.0 {
            return Err(Error::SingularBoundary { k, m });
        }
        mat.extend(row.iter().map(|v| v / sc));
        row_scale.push(sc);
    }
    // a pivot at the level of the integration error means W_{n-k}(b) = 0
    let lu = Lu::new(n, mat);
    if lu.pivot_ratio() < 100.0 * g.rel_tol.max(g.abs_tol) {
        return Err(Error::SingularBoundary { k, m });
    }

    if t_nodes.iter().any(|&t| !(a..=b).contains(&t)) {
        return Err(Error::InvalidProblem("t nodes must lie in [a, b]"));
    }
    if s_nodes.iter().any(|&s| !(s > a && s < b)) {
        return Err(Error::InvalidProblem("source point must lie inside (a, b)"));
    }
    // right basis: z_i^(n-1-i)(b) = 1, i < k, so orders 0..ell-1 vanish at b
    let mut init = vec![0.0; n * k];
    for i in 0..k {
        init[i * n + n - 1 - i] = 1.0;
    }
    let z = integrate_ivp_backward(p, m, b, &init, g)?;
    let mut z_b = vec![0.0; n * k];
    z.eval(b, &mut z_b);
    // left basis: canonical columns j < ell, orders 0..k-1 vanish at a
    let mut boundary_residual = 0.0f64;
    for d in 0..k {
        let row = (0..ell).map(|j| state_a[j * n + d]);
        boundary_residual = boundary_residual.max(row.fold(0.0f64, |mx, v| mx.max(v.abs())));
    }
    for d in 0..ell {
        let row = (0..k).map(|i| z_b[i * n + d]);
        boundary_residual = boundary_residual.max(row.fold(0.0f64, |mx, v| mx.max(v.abs())));
    }

    let y_at_t: Vec<Vec<f64>> = t_nodes.iter().map(|&t| fs.dense().state(t)).collect();
    let z_at_t: Vec<Vec<f64>> = t_nodes.iter().map(|&t| z.state(t)).collect();

    let ns = s_nodes.len();
    let mut values = vec![0.0; t_nodes.len() * ns];
    let mut jump_error = 0.0f64;
    let mut y_s = vec![0.0; n2];
    let mut z_s = vec![0.0; n * k];
    for (si, &s) in s_nodes.iter().enumerate() {
        fs.state_at(s, &mut y_s);
        z.eval(s, &mut z_s);
        // columns [-y_0 .. -y_{ell-1} | z_0 .. z_{k-1}] at s, each scaled to
        // unit max norm; rows are derivative orders 0..n-1
        let cols: Vec<Vec<f64>> = (0..ell)
            .map(|j| y_s[j * n..(j + 1) * n].iter().map(|v| -v).collect())
            .chain((0..k).map(|i| z_s[i * n..(i + 1) * n].to_vec()))
            .collect();
        let col_scale: Vec<f64> = cols
            .iter()
            .map(|c| c.iter().fold(0.0f64, |mx, v| mx.max(v.abs())))
            .collect();
        if col_scale.contains(&0.0) {
            return Err(Error::SingularBoundary { k, m });
        }
        let mut mat = Vec::with_capacity(n2);
        for d in 0..n {
            mat.extend((0..n).map(|c| cols[c][d] / col_scale[c]));
        }
        let mut x = vec![0.0; n];
        x[n - 1] = 1.0;
        if !Lu::new(n, mat).solve(&mut x) {
            return Err(Error::SingularBoundary { k, m });
        }
        for (xc, sc) in x.iter_mut().zip(&col_scale) {
            *xc /= sc;
        }

        // continuity of orders 0..n-2 and the unit jump of order n-1
        for d in 0..n {
            let want = if d == n - 1 { 1.0 } else { 0.0 };
            let sum: f64 = (0..n).map(|c| x[c] * cols[c][d]).sum::<f64>() - want;
            let mag: f64 = (0..n).map(|c| (x[c] * cols[c][d]).abs()).sum::<f64>() + want;
            jump_error = jump_error.max(relative(sum, mag));
        }

        for (ti, &t) in t_nodes.iter().enumerate() {
            values[ti * ns + si] = if t < s {
                (0..ell).map(|j| x[j] * y_at_t[ti][j * n]).sum()
            } else {
                (0..k).map(|i| x[ell + i] * z_at_t[ti][i * n]).sum()
            };
        }
    }

    let pvals = t_nodes
        .iter()
        .map(|&t| libm::pow(t - a, k as f64) * libm::pow(t - b, ell as f64))
        .collect();
    Ok(GreenGrid {
        m,
        k,
        order: n,
        t: t_nodes,
        s: s_nodes,
        values,
        p: pvals,
        boundary_residual,
        jump_error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignReport {
    pub k: usize,
    pub m: f64,
    pub parity: Parity,
    pub pass: bool,
    /// Worst relative violation of `g p >= 0` or `g / p > 0`; zero when
    /// neither is violated.
    pub worst_violation: f64,
    pub worst_at: Option<(f64, f64)>,
}

/// Checks `g p >= -tol max|g p|` on the whole grid and
/// `g / p > -tol max|g/p|` where `|p| > 1e-12 max|p|`.
pub fn verify_sign(gg: &GreenGrid, tol: f64) -> SignReport {
    let ns = gg.s.len();
    let pmax = gg.p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let interior = |ti: usize| gg.p[ti].abs() > 1e-12 * pmax;
    let mut prod_scale = 0.0f64;
    let mut ratio_scale = 0.0f64;
    for ti in 0..gg.t.len() {
        for si in 0..ns {
            let gv = gg.value(ti, si);
            prod_scale = prod_scale.max((gv * gg.p[ti]).abs());
            if interior(ti) {
                ratio_scale = ratio_scale.max((gv / gg.p[ti]).abs());
            }
        }
    }
    let mut worst = 0.0f64;
    let mut worst_at = None;
    for (ti, &t) in gg.t.iter().enumerate() {
        for (si, &s) in gg.s.iter().enumerate() {
            let gv = gg.value(ti, si);
            let mut v = relative((gv * gg.p[ti]).min(0.0), prod_scale);
            if interior(ti) {
                v = v.max(relative((gv / gg.p[ti]).min(0.0), ratio_scale));
            }
            if v > worst {
                worst = v;
                worst_at = Some((t, s));
            }
        }
    }
    SignReport {
        k: gg.k,
        m: gg.m,
        parity: gg.parity(),
        pass: worst <= tol,
        worst_violation: worst,
        worst_at,
    }
}
