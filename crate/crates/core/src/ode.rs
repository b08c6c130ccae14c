//! The operator `u^(n) + a_1 u^(n-1) + ... + a_{n-1} u' + (a_n + M) u` as a
//! companion system, and its canonical fundamental system.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::Expr;

#[derive(Debug, Clone)]
enum Coefficient {
    Constant(f64),
    Varying(Expr),
}

/// An n-th order linear operator on `[a, b]` with a reference parameter
/// `M̄` at which the equation is assumed disconjugate.
#[derive(Debug, Clone)]
pub struct ProblemDef {
    exprs: Vec<Expr>,
    coeffs: Vec<Coefficient>,
    a: f64,
    b: f64,
    m_ref: f64,
}

impl ProblemDef {
    /// `coeffs[i - 1]` is `a_i`, the factor of `u^(n-i)`; the order is
    /// `coeffs.len()`.
    pub fn new(coeffs: Vec<Expr>, interval: (f64, f64), m_ref: f64) -> Result<ProblemDef> {
        let (a, b) = interval;
        if coeffs.len() < 2 {
            return Err(Error::InvalidProblem("order must be at least 2"));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidProblem("interval must satisfy a < b"));
        }
        if !m_ref.is_finite() {
            return Err(Error::InvalidProblem("reference parameter must be finite"));
        }
        let mut resolved = Vec::with_capacity(coeffs.len());
        for (i, e) in coeffs.iter().enumerate() {
            let c = if e.is_constant() {
                let v = e.eval(a).map_err(|source| Error::Coefficient {
                    index: i + 1,
                    source,
                })?;
                Coefficient::Constant(v)
            } else {
                Coefficient::Varying(e.clone())
            };
            resolved.push(c);
        }
        Ok(ProblemDef {
            exprs: coeffs,
            coeffs: resolved,
            a,
            b,
            m_ref,
        })
    }

    pub fn order(&self) -> usize {
        self.exprs.len()
    }

    pub fn coefficients(&self) -> &[Expr] {
        &self.exprs
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn m_ref(&self) -> f64 {
        self.m_ref
    }

    /// Same operator with a different reference parameter.
    pub fn with_m_ref(&self, m_ref: f64) -> ProblemDef {
        ProblemDef {
            m_ref,
            ..self.clone()
        }
    }

    /// Same operator on `[a, b_new]`.
    pub fn with_right_end(&self, b_new: f64) -> Result<ProblemDef> {
        ProblemDef::new(self.exprs.clone(), (self.a, b_new), self.m_ref)
    }

    /// Writes `a_1(t) .. a_n(t)` into `out`.
    pub fn eval_coefficients(&self, t: f64, out: &mut [f64]) -> Result<()> {
        for (i, (c, slot)) in self.coeffs.iter().zip(out.iter_mut()).enumerate() {
            *slot = match c {
                Coefficient::Constant(v) => *v,
                Coefficient::Varying(e) => e.eval(t).map_err(|source| Error::Coefficient {
                    index: i + 1,
                    source,
                })?,
            };
        }
        Ok(())
    }
}

/// Output grid and integrator tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nodes: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nodes: 2048,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 64 {
            return Err(Error::InvalidProblem("grid needs at least 64 nodes"));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidProblem("tolerances must be positive"));
        }
        Ok(())
    }

    /// Uniform nodes on `[a, b]`, both endpoints included exactly.
    pub fn nodes_on(&self, a: f64, b: f64) -> Vec<f64> {
        let last = self.nodes - 1;
        let h = (b - a) / last as f64;
        (0..self.nodes)
            .map(|i| if i == last { b } else { a + i as f64 * h })
            .collect()
    }
}

/// Right-hand side of the companion system for one solution.
pub fn companion_rhs(p: &ProblemDef, m: f64, t: f64, state: &[f64]) -> Result<Vec<f64>> {
    let n = p.order();
    assert_eq!(state.len(), n);
    let mut a = vec![0.0; n];
    p.eval_coefficients(t, &mut a)?;
    let mut out = vec![0.0; n];
    companion_apply(&a, m, state, &mut out);
    Ok(out)
}

#[inline]
fn companion_apply(a: &[f64], m: f64, y: &[f64], dy: &mut [f64]) {
    let n = a.len();
    dy[..n - 1].copy_from_slice(&y[1..n]);
    let mut top = -(a[n - 1] + m) * y[0];
    for i in 1..n {
        top -= a[i - 1] * y[n - i];
    }
    dy[n - 1] = top;
}

// Dormand–Prince 5(4) tableau with Hairer's quartic continuous extension.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const MAX_STEPS: usize = 1_000_000;
const OVERFLOW: f64 = 1e300;

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    rcont: Vec<f64>,
}

impl Segment {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let dim = out.len();
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let r = &self.rcont;
        for (i, o) in out.iter_mut().enumerate() {
            *o = r[i]
                + theta
                    * (r[dim + i]
                        + theta1
                            * (r[2 * dim + i]
                                + theta * (r[3 * dim + i] + theta1 * r[4 * dim + i])));
        }
    }
}

/// Piecewise-polynomial solution of an initial value problem.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    dim: usize,
    /// Integration runs in `τ = -t` when set; `start`, `end` are in `τ`.
    reversed: bool,
    start: f64,
    end: f64,
    segments: Vec<Segment>,
}

impl DenseTrajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Initial point in `t`.
    pub fn start(&self) -> f64 {
        self.to_t(self.start)
    }

    /// Final point in `t`.
    pub fn end(&self) -> f64 {
        self.to_t(self.end)
    }

    fn to_t(&self, tau: f64) -> f64 {
        if self.reversed {
            -tau
        } else {
            tau
        }
    }

    pub fn steps(&self) -> usize {
        self.segments.len()
    }

    /// State at `t`, clamped to the integration span.
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        let t = self.to_t(t).clamp(self.start, self.end);
        let idx = self
            .segments
            .partition_point(|s| s.t0 <= t)
            .saturating_sub(1);
        self.segments[idx].eval(t, out);
    }

    pub fn state(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval(t, &mut out);
        out
    }
}

struct Integration {
    last: Vec<f64>,
    dense: Option<DenseTrajectory>,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Adaptive Dormand–Prince 5(4) with PI step control (Hairer's `dopri5`).
fn dopri5<F>(
    t0: f64,
    t1: f64,
    y0: &[f64],
    g: &GridSpec,
    record: bool,
    mut rhs: F,
) -> Result<Integration>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let dim = y0.len();
    let (atol, rtol) = (g.abs_tol, g.rel_tol);
    let span = t1 - t0;
    let mut segments = Vec::new();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut ytmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    rhs(t, &y, &mut k1)?;

    // initial step guess
    let mut h = {
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..dim {
            let sk = atol + rtol * y[i].abs();
            dnf += (k1[i] / sk) * (k1[i] / sk);
            dny += (y[i] / sk) * (y[i] / sk);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            libm::sqrt(dny / dnf) * 0.01
        };
        h = h.min(span);
        for i in 0..dim {
            ytmp[i] = y[i] + h * k1[i];
        }
        rhs(t + h, &ytmp, &mut k2)?;
        let mut der2 = 0.0;
        for i in 0..dim {
            let sk = atol + rtol * y[i].abs();
            let d = (k2[i] - k1[i]) / sk;
            der2 += d * d;
        }
        let der2 = libm::sqrt(der2) / h;
        let der12 = der2.max(libm::sqrt(dnf));
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            libm::pow(0.01 / der12, 0.2)
        };
        (100.0 * h).min(h1).min(span)
    };

    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let safe = 0.9;
    let (facc1, facc2) = (1.0 / 0.2, 1.0 / 10.0);
    let mut facold: f64 = 1e-4;
    let mut rejected = false;
    let mut steps = 0usize;

    loop {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Integration {
                t,
                reason: "too many steps",
            });
        }
        if h.abs() <= 10.0 * f64::EPSILON * t.abs().max(span.abs()) {
            return Err(Error::Integration {
                t,
                reason: "step size underflow",
            });
        }
        let mut last = false;
        if t + 1.01 * h >= t1 {
            h = t1 - t;
            last = true;
        }

        for i in 0..dim {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, &ytmp, &mut k2)?;
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, &ytmp, &mut k3)?;
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, &ytmp, &mut k4)?;
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, &ytmp, &mut k5)?;
        for i in 0..dim {
            ytmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let tph = t + h;
        rhs(tph, &ytmp, &mut k6)?;
        for i in 0..dim {
            ynew[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(tph, &ynew, &mut k7)?;

        let mut err = 0.0;
        for i in 0..dim {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = atol + rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sk) * (e / sk);
        }
        let mut err = libm::sqrt(err / dim as f64);
        if !err.is_finite() {
            err = f64::INFINITY;
        }

        let fac11 = libm::pow(err, expo1);
        if err <= 1.0 {
            let fac = (fac11 / libm::pow(facold, beta) / safe).clamp(facc2, facc1);
            let mut hnew = h / fac;
            facold = err.max(1e-4);
            if record {
                let mut rcont = vec![0.0; 5 * dim];
                for i in 0..dim {
                    let ydiff = ynew[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    rcont[i] = y[i];
                    rcont[dim + i] = ydiff;
                    rcont[2 * dim + i] = bspl;
                    rcont[3 * dim + i] = ydiff - h * k7[i] - bspl;
                    rcont[4 * dim + i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                segments.push(Segment { t0: t, h, rcont });
            }
            core::mem::swap(&mut k1, &mut k7);
            core::mem::swap(&mut y, &mut ynew);
            t = if last { t1 } else { tph };
            if max_norm(&y) > OVERFLOW {
                return Err(Error::Integration {
                    t,
                    reason: "solution overflow",
                });
            }
            if last {
                break;
            }
            if rejected {
                hnew = hnew.min(h);
            }
            rejected = false;
            h = hnew;
        } else {
            h /= facc1.min(fac11 / safe);
            rejected = true;
        }
    }

    let dense = record.then_some(DenseTrajectory {
        dim,
        reversed: false,
        start: t0,
        end: t1,
        segments,
    });
    Ok(Integration { last: y, dense })
}

fn matrix_rhs(p: &ProblemDef, m: f64) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<()> + '_ {
    let n = p.order();
    let mut a = vec![0.0; n];
    move |t, y, dy| {
        p.eval_coefficients(t, &mut a)?;
        for (col, dcol) in y.chunks_exact(n).zip(dy.chunks_exact_mut(n)) {
            companion_apply(&a, m, col, dcol);
        }
        Ok(())
    }
}

/// Initial fundamental matrix, column `j` (0-based) holding `y_{j+1}` with
/// `y_{j+1}^(n-1-j)(a) = 1`.
fn canonical_initial(n: usize) -> Vec<f64> {
    let mut y0 = vec![0.0; n * n];
    for j in 0..n {
        y0[j * n + (n - 1 - j)] = 1.0;
    }
    y0
}

/// The canonical fundamental system `y_1[M] .. y_n[M]` sampled on a grid.
///
/// Solution `j` (0-based here, `y_{j+1}` in the usual numbering) satisfies
/// `y^(n-1-j)(a) = 1` with every other derivative of order below `n` zero.
#[derive(Debug, Clone)]
pub struct FundamentalSystem {
    order: usize,
    m: f64,
    grid: Vec<f64>,
    /// `samples[(node * n + j) * n + d]` is `y_{j+1}^(d)(t_node)`.
    samples: Vec<f64>,
    dense: DenseTrajectory,
    abs_tol: f64,
}

impl FundamentalSystem {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.dense.start, self.dense.end)
    }

    /// `d`-th derivative of solution `j` (0-based) at grid node `node`.
    pub fn value(&self, node: usize, j: usize, d: usize) -> f64 {
        let n = self.order;
        self.samples[(node * n + j) * n + d]
    }

    /// Full `n x n` state at any `t` in `[a, b]`, column-major by solution.
    pub fn state_at(&self, t: f64, out: &mut [f64]) {
        if let Some(node) = self.node_index(t) {
            let n2 = self.order * self.order;
            out.copy_from_slice(&self.samples[node * n2..(node + 1) * n2]);
        } else {
            self.dense.eval(t, out);
        }
    }

    pub fn dense(&self) -> &DenseTrajectory {
        &self.dense
    }

    /// Absolute integration tolerance the samples were computed with.
    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    fn node_index(&self, t: f64) -> Option<usize> {
        let i = self.grid.partition_point(|&x| x < t);
        (i < self.grid.len() && self.grid[i] == t).then_some(i)
    }
}

/// Integrates the canonical fundamental system at parameter `m`.
pub fn integrate_fundamental(p: &ProblemDef, m: f64, g: &GridSpec) -> Result<FundamentalSystem> {
    g.validate()?;
    let n = p.order();
    let (a, b) = p.interval();
    let y0 = canonical_initial(n);
    let run = dopri5(a, b, &y0, g, true, matrix_rhs(p, m))?;
    let dense = run.dense.expect("recorded");
    let grid = g.nodes_on(a, b);
    let n2 = n * n;
    let mut samples = vec![0.0; grid.len() * n2];
    for (node, (&t, chunk)) in grid.iter().zip(samples.chunks_exact_mut(n2)).enumerate() {
        if node == 0 {
            chunk.copy_from_slice(&y0);
        } else if node + 1 == grid.len() {
            chunk.copy_from_slice(&run.last);
        } else {
            dense.eval(t, chunk);
        }
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration {
            t: b,
            reason: "non-finite sample",
        });
    }
    Ok(FundamentalSystem {
        order: n,
        m,
        grid,
        samples,
        dense,
        abs_tol: g.abs_tol,
    })
}

/// Fundamental matrix at `b` only, without dense output.
pub fn fundamental_at_end(p: &ProblemDef, m: f64, g: &GridSpec) -> Result<Vec<f64>> {
    g.validate()?;
    let (a, b) = p.interval();
    let y0 = canonical_initial(p.order());
    Ok(dopri5(a, b, &y0, g, false, matrix_rhs(p, m))?.last)
}

/// Solves one initial value problem `T_n[M] u = 0` from `t0` to `b` with
/// `state0 = (u, u', .., u^(n-1))` at `t0`.
pub fn integrate_ivp(
    p: &ProblemDef,
    m: f64,
    t0: f64,
    state0: &[f64],
    g: &GridSpec,
) -> Result<DenseTrajectory> {
    g.validate()?;
    let (_, b) = p.interval();
    assert_eq!(state0.len(), p.order());
    let run = dopri5(t0, b, state0, g, true, matrix_rhs(p, m))?;
    Ok(run.dense.expect("recorded"))
}

/// Integrates `T_n[M] u = 0` backward from `t0` to `a`. `state0` holds one
/// or more columns `(u, u', .., u^(n-1))` at `t0`; derivatives stay with
/// respect to `t`.
pub fn integrate_ivp_backward(
    p: &ProblemDef,
    m: f64,
    t0: f64,
    state0: &[f64],
    g: &GridSpec,
) -> Result<DenseTrajectory> {
    g.validate()?;
    let (a, _) = p.interval();
    assert!(
        !state0.is_empty() && state0.len().is_multiple_of(p.order()),
        "state0 must hold whole columns"
    );
    let mut forward = matrix_rhs(p, m);
    let rhs = move |tau: f64, y: &[f64], dy: &mut [f64]| {
        forward(-tau, y, dy)?;
        dy.iter_mut().for_each(|v| *v = -*v);
        Ok(())
    };
    let run = dopri5(-t0, -a, state0, g, true, rhs)?;
    let mut dense = run.dense.expect("recorded");
    dense.reversed = true;
    Ok(dense)
}
