//! Wronskians `W_k` of the first `k` canonical solutions, their first zeros
//! right of `a`, and the resulting disconjugacy test.
//!
//! The first zero over all `k` is the first right conjugate point of `a`;
//! the equation is disconjugate on `[a, b]` exactly when no `W_k`,
//! `k = 1..n-1`, vanishes on `(a, b]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::ode::{integrate_fundamental, FundamentalSystem, GridSpec, ProblemDef};
use crate::roots::golden_min;

/// Determinant with rows of derivative orders `rows` and columns
/// `y_1 .. y_k`, read from a column-major `n x n` state.
pub(crate) fn bordered_det(
    n: usize,
    state: &[f64],
    k: usize,
    rows: impl Iterator<Item = usize>,
) -> f64 {
    let mut m = Vec::with_capacity(k * k);
    for d in rows {
        m.extend((0..k).map(|j| state[j * n + d]));
    }
    debug_assert_eq!(m.len(), k * k);
    linalg::det(k, m)
}

pub(crate) fn wronskian_of_state(n: usize, state: &[f64], k: usize) -> f64 {
    bordered_det(n, state, k, 0..k)
}

fn derivative_of_state(n: usize, state: &[f64], k: usize) -> f64 {
    bordered_det(n, state, k, (0..k - 1).chain(core::iter::once(k)))
}

fn check_k(fs: &FundamentalSystem, k: usize) {
    assert!(
        k >= 1 && k < fs.order(),
        "k = {k} outside 1..{}",
        fs.order() - 1
    );
}

/// `W_k(t)`: determinant of `y_j^(d)(t)`, `d = 0..k-1`, `j = 1..k`.
pub fn wronskian_at(fs: &FundamentalSystem, k: usize, t: f64) -> f64 {
    check_k(fs, k);
    let n = fs.order();
    let mut state = vec![0.0; n * n];
    fs.state_at(t, &mut state);
    wronskian_of_state(n, &state, k)
}

/// `d/dt W_k(t)`: the Wronskian with its last row raised from order `k-1`
/// to order `k`.
pub fn wronskian_derivative_at(fs: &FundamentalSystem, k: usize, t: f64) -> f64 {
    check_k(fs, k);
    let n = fs.order();
    let mut state = vec![0.0; n * n];
    fs.state_at(t, &mut state);
    derivative_of_state(n, &state, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroKind {
    SignChange,
    Tangential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub t: f64,
    pub kind: ZeroKind,
}

/// Zero detection settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroOptions {
    /// Scan starts at `a + delta_frac * (b - a)`.
    pub delta_frac: f64,
    /// Relative threshold against `max |W_k|` on the grid; also the
    /// bisection width relative to `b - a`.
    pub tol: f64,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        ZeroOptions {
            delta_frac: 1e-4,
            tol: 1e-9,
        }
    }
}

/// One Wronskian sampled on the grid, with its zeros on `(a, b]`.
#[derive(Debug, Clone)]
pub struct WronskianTrace {
    pub k: usize,
    pub m: f64,
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    pub zeros: Vec<Zero>,
}

/// Zero search over a scalar function; `eval(t, false)` is `W(t)` and
/// `eval(t, true)` is `W'(t)`.
struct Scanner<F> {
    eval: F,
    k: usize,
    tol: f64,
    scale: f64,
    length: f64,
}

impl<F: FnMut(f64, bool) -> f64> Scanner<F> {
    fn w(&mut self, t: f64) -> f64 {
        (self.eval)(t, false)
    }

    fn dw(&mut self, t: f64) -> f64 {
        (self.eval)(t, true)
    }

    fn bisect(&mut self, mut lo: f64, mut hi: f64, mut wlo: f64) -> f64 {
        let width = self.tol * self.length;
        while hi - lo >= width {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let wm = self.w(mid);
            if wm == 0.0 {
                return mid;
            }
            if (wm > 0.0) == (wlo > 0.0) {
                lo = mid;
                wlo = wm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Looks closer at a local minimum of `|W|` on `[lo, hi]` that did not
    /// show a sign change on the grid.
    fn resolve_dip(&mut self, lo: f64, hi: f64) -> Result<Option<Zero>> {
        const SUB: usize = 8;
        let xs: Vec<f64> = (0..=SUB)
            .map(|i| lo + (hi - lo) * i as f64 / SUB as f64)
            .collect();
        let ws: Vec<f64> = xs.iter().map(|&x| self.w(x)).collect();
        for i in 0..SUB {
            if ws[i] * ws[i + 1] < 0.0 {
                let t = self.bisect(xs[i], xs[i + 1], ws[i]);
                return Ok(Some(Zero {
                    t,
                    kind: ZeroKind::SignChange,
                }));
            }
        }
        // minimise the signed value so a dip through zero is not mistaken
        // for a root of |W|
        let side = if ws.iter().sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        };
        let m = (0..=SUB)
            .min_by(|&i, &j| (side * ws[i]).total_cmp(&(side * ws[j])))
            .unwrap_or(0);
        let (l, r) = (xs[m.saturating_sub(1)], xs[(m + 1).min(SUB)]);
        let xtol = 1e-13 * self.length;
        let (t_min, _) = golden_min(|x| Ok::<f64, Error>(side * self.w(x)), l, r, xtol)?;
        let w_min = self.w(t_min);
        let w_left = self.w(l);
        if w_min * w_left < 0.0 {
            let t = self.bisect(l, t_min, w_left);
            return Ok(Some(Zero {
                t,
                kind: ZeroKind::SignChange,
            }));
        }
        let level = w_min.abs();
        let threshold = self.tol * self.scale;
        if level > 10.0 * threshold {
            return Ok(None);
        }
        let slope = self.dw(t_min).abs() * self.length;
        if level <= threshold && slope <= libm::sqrt(self.tol) * self.scale {
            return Ok(Some(Zero {
                t: t_min,
                kind: ZeroKind::Tangential,
            }));
        }
        Err(Error::AmbiguousZero {
            k: self.k,
            t: t_min,
        })
    }
}

/// Size of the change in `W_k` when each of `y_1 .. y_k` picks up `eps`
/// times each later solution: `eps * Σ_{j <= k < i} |W_k with y_j -> y_i|`.
/// Integration errors behave like such perturbed initial data rather than
/// independent errors per entry, which would swamp the large cancellations
/// in `W_k` when solutions grow fast. Below this level the sign of `W_k`
/// carries no information.
fn noise_of_state(n: usize, state: &[f64], k: usize, eps: f64) -> f64 {
    let mut total = 0.0;
    let mut m = Vec::with_capacity(k * k);
    for j in 0..k {
        for i in k..n {
            m.clear();
            for d in 0..k {
                m.extend((0..k).map(|c| state[if c == j { i } else { c } * n + d]));
            }
            total += linalg::det(k, m.clone()).abs();
        }
    }
    eps * total
}

fn scan(
    fs: &FundamentalSystem,
    k: usize,
    delta: f64,
    tol: f64,
    first_only: bool,
) -> Result<(Vec<f64>, Vec<Zero>)> {
    check_k(fs, k);
    let n = fs.order();
    let mut values = Vec::with_capacity(fs.grid().len());
    let mut noise = Vec::with_capacity(fs.grid().len());
    let mut state = vec![0.0; n * n];
    for &t in fs.grid() {
        fs.state_at(t, &mut state);
        values.push(wronskian_of_state(n, &state, k));
        noise.push(noise_of_state(n, &state, k, fs.abs_tol()));
    }
    let mut buf = vec![0.0; n * n];
    let eval = |t: f64, derivative: bool| {
        fs.state_at(t, &mut buf);
        if derivative {
            derivative_of_state(n, &buf, k)
        } else {
            wronskian_of_state(n, &buf, k)
        }
    };
    let samples = Samples {
        grid: fs.grid(),
        values: &values,
        noise: &noise,
    };
    let zeros = scan_samples(&samples, eval, k, delta, tol, first_only)?;
    Ok((values, zeros))
}

struct Samples<'a> {
    grid: &'a [f64],
    values: &'a [f64],
    /// Integration noise level of each value.
    noise: &'a [f64],
}

/// Whether the parabola through three samples around a minimum of `|w|`
/// reaches `level` or changes sign between the outer samples.
fn dip_may_vanish(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64), level: f64) -> bool {
    if p1.1.abs() < level {
        return true;
    }
    let (d01, d12) = ((p1.1 - p0.1) / (p1.0 - p0.0), (p2.1 - p1.1) / (p2.0 - p1.0));
    let curv = (d12 - d01) / (p2.0 - p0.0);
    if curv == 0.0 {
        return false;
    }
    // vertex of w(t) = w1 + s (t - t1) + curv (t - t1)^2
    let slope = d01 + curv * (p1.0 - p0.0);
    let tv = p1.0 - slope / (2.0 * curv);
    if tv <= p0.0 || tv >= p2.0 {
        return false;
    }
    let wv = p1.1 - slope * slope / (4.0 * curv);
    wv * p1.1 <= 0.0 || wv.abs() < level
}

/// Zeros of a function on `[grid[0] + delta, last node]` given its values
/// on the grid. Sign changes and dips that stay within the noise level are
/// not zeros.
fn scan_samples<F>(
    samples: &Samples,
    eval: F,
    k: usize,
    delta: f64,
    tol: f64,
    first_only: bool,
) -> Result<Vec<Zero>>
where
    F: FnMut(f64, bool) -> f64,
{
    assert!(delta > 0.0, "delta must be positive");
    let grid = samples.grid;
    let (a, b) = (grid[0], grid[grid.len() - 1]);
    let scale = samples.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut sc = Scanner {
        eval,
        k,
        tol,
        scale,
        length: b - a,
    };

    let start = a + delta;
    let first = grid.partition_point(|&t| t <= start);
    // the noise at `start` is bounded by that of the next node
    let mut pts: Vec<(f64, f64, f64)> =
        vec![(start, sc.w(start), samples.noise[first.min(grid.len() - 1)])];
    pts.extend((first..grid.len()).map(|i| (grid[i], samples.values[i], samples.noise[i])));

    let mut zeros: Vec<Zero> = Vec::new();
    let last = pts.len() - 1;
    let mut i = 1;
    while i <= last {
        let (t0, w0, n0) = pts[i - 1];
        let (t1, w1, n1) = pts[i];
        let mut found = None;
        if w0 * w1 < 0.0 {
            if w0.abs().max(w1.abs()) > n0.max(n1) {
                found = Some(Zero {
                    t: sc.bisect(t0, t1, w0),
                    kind: ZeroKind::SignChange,
                });
            }
        } else if i == last {
            if w1.abs() <= tol * scale {
                found = Some(Zero {
                    t: b,
                    kind: ZeroKind::Tangential,
                });
            }
        } else {
            let (t2, w2, n2) = pts[i + 1];
            let local_min = w1.abs() <= w0.abs() && w1.abs() <= w2.abs();
            let resolved = w0.abs().max(w2.abs()) > n0.max(n2);
            if local_min
                && resolved
                && w1 * w2 >= 0.0
                && dip_may_vanish((t0, w0), (t1, w1), (t2, w2), 10.0 * tol * scale)
            {
                found = sc.resolve_dip(t0, t2)?;
                // the dip window covers the next cell too
                if found.is_some() {
                    i += 1;
                }
            }
        }
        if let Some(z) = found {
            if zeros.last().is_none_or(|prev| z.t > prev.t) {
                zeros.push(z);
            }
            if first_only {
                break;
            }
        }
        i += 1;
    }
    Ok(zeros)
}

/// First zero of `W_k` on `[a + delta, b]`.
pub fn first_zero(fs: &FundamentalSystem, k: usize, delta: f64, tol: f64) -> Result<Option<Zero>> {
    Ok(scan(fs, k, delta, tol, true)?.1.first().copied())
}

/// `W_k` on the grid together with every zero found on `[a + delta, b]`.
pub fn trace(fs: &FundamentalSystem, k: usize, opts: &ZeroOptions) -> Result<WronskianTrace> {
    let (a, b) = fs.interval();
    let (w, zeros) = scan(fs, k, opts.delta_frac * (b - a), opts.tol, false)?;
    Ok(WronskianTrace {
        k,
        m: fs.m(),
        t: fs.grid().to_vec(),
        w,
        zeros,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisconjugacyReport {
    pub m: f64,
    pub disconjugate: bool,
    /// First right conjugate point of `a`, when it lies in `(a, b]`.
    pub omega: Option<f64>,
    /// Smallest `k` whose `W_k` vanishes at `omega`.
    pub witness_k: Option<usize>,
    /// Further `k` vanishing at the same point, within the bisection width.
    pub tied_k: Vec<usize>,
}

/// Disconjugacy verdict from an already integrated fundamental system.
pub fn disconjugacy_of(fs: &FundamentalSystem, opts: &ZeroOptions) -> Result<DisconjugacyReport> {
    let (a, b) = fs.interval();
    let delta = opts.delta_frac * (b - a);
    let mut firsts: Vec<(usize, f64)> = Vec::new();
    for k in 1..fs.order() {
        if let Some(z) = first_zero(fs, k, delta, opts.tol)? {
            firsts.push((k, z.t));
        }
    }
    let Some(&(witness, omega)) = firsts
        .iter()
        .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
    else {
        return Ok(DisconjugacyReport {
            m: fs.m(),
            disconjugate: true,
            omega: None,
            witness_k: None,
            tied_k: Vec::new(),
        });
    };
    let width = 2.0 * opts.tol * (b - a);
    let tied_k = firsts
        .iter()
        .filter(|&&(k, t)| k != witness && (t - omega).abs() <= width)
        .map(|&(k, _)| k)
        .collect();
    Ok(DisconjugacyReport {
        m: fs.m(),
        disconjugate: false,
        omega: Some(omega),
        witness_k: Some(witness),
        tied_k,
    })
}

/// Decides disconjugacy of `T_n[M] u = 0` on `[a, b]`.
pub fn is_disconjugate(
    p: &ProblemDef,
    m: f64,
    g: &GridSpec,
    opts: &ZeroOptions,
) -> Result<DisconjugacyReport> {
    let fs = integrate_fundamental(p, m, g)?;
    disconjugacy_of(&fs, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use core::f64::consts::PI;

    fn problem(coeffs: &[&str], a: f64, b: f64) -> ProblemDef {
        let exprs = coeffs.iter().map(|s| parse(s).unwrap()).collect();
        ProblemDef::new(exprs, (a, b), 0.0).unwrap()
    }

    #[test]
    fn w1_is_y1() {
        let p = problem(&["0", "0"], 0.25, 1.0);
        let fs = integrate_fundamental(&p, 0.0, &GridSpec::default()).unwrap();
        for t in [0.25, 0.3, 0.777, 1.0] {
            assert!((wronskian_at(&fs, 1, t) - (t - 0.25)).abs() < 1e-12);
            assert!((wronskian_derivative_at(&fs, 1, t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vanishes_at_left_end() {
        let p = problem(&["cos(10*t)", "1", "t", "2"], 0.0, 1.0);
        let fs = integrate_fundamental(&p, 5.0, &GridSpec::default()).unwrap();
        for k in 1..4 {
            assert_eq!(wronskian_at(&fs, k, 0.0), 0.0);
            assert!(wronskian_at(&fs, k, 1e-4) != 0.0, "k = {k}");
        }
    }

    #[test]
    fn sine_first_zero() {
        let p = problem(&["0", "0"], 0.0, 1.5);
        let fs = integrate_fundamental(&p, PI * PI, &GridSpec::default()).unwrap();
        let z = first_zero(&fs, 1, 1.5e-4, 1e-9).unwrap().unwrap();
        assert_eq!(z.kind, ZeroKind::SignChange);
        assert!((z.t - 1.0).abs() < 1e-8, "{}", z.t);
    }

    #[test]
    fn polynomial_equation_has_no_zeros() {
        let p = problem(&["0", "0", "0"], 0.0, 1.0);
        let fs = integrate_fundamental(&p, 0.0, &GridSpec::default()).unwrap();
        for k in 1..3 {
            assert!(first_zero(&fs, k, 1e-4, 1e-9).unwrap().is_none());
        }
    }

    #[test]
    fn dirichlet_sine_verdicts() {
        let p = problem(&["0", "0"], 0.0, 1.0);
        let g = GridSpec::default();
        let opts = ZeroOptions::default();
        let r = is_disconjugate(&p, 9.0, &g, &opts).unwrap();
        assert!(r.disconjugate && r.omega.is_none());
        let r = is_disconjugate(&p, 16.0, &g, &opts).unwrap();
        assert!(!r.disconjugate);
        assert_eq!(r.witness_k, Some(1));
        assert!((r.omega.unwrap() - PI / 4.0).abs() < 1e-8);
    }

    #[test]
    fn zero_exactly_at_right_end_counts() {
        let p = problem(&["0", "0"], 0.0, 1.0);
        let r =
            is_disconjugate(&p, PI * PI, &GridSpec::default(), &ZeroOptions::default()).unwrap();
        assert!(!r.disconjugate);
        assert!((r.omega.unwrap() - 1.0).abs() < 1e-8);
    }

    fn synthetic(
        f: impl Fn(f64) -> f64 + Copy,
        df: impl Fn(f64) -> f64 + Copy,
    ) -> Result<Vec<Zero>> {
        let grid: Vec<f64> = (0..257).map(|i| i as f64 / 256.0).collect();
        let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
        let noise = vec![0.0; grid.len()];
        let eval = move |t: f64, d: bool| if d { df(t) } else { f(t) };
        scan_samples(
            &Samples {
                grid: &grid,
                values: &values,
                noise: &noise,
            },
            eval,
            1,
            1e-4,
            1e-9,
            false,
        )
    }

    #[test]
    fn tangential_dip_is_found() {
        // double zero between grid nodes
        let c = 0.5 + 1.0 / 1024.0;
        let zeros = synthetic(|t| (t - c) * (t - c), |t| 2.0 * (t - c)).unwrap();
        assert_eq!(zeros.len(), 1);
        assert_eq!(zeros[0].kind, ZeroKind::Tangential);
        assert!((zeros[0].t - c).abs() < 1e-5);
    }

    #[test]
    fn close_sign_change_pair_inside_one_cell() {
        let (c1, c2) = (0.3001, 0.3003);
        let zeros = synthetic(|t| (t - c1) * (t - c2), |t| 2.0 * t - c1 - c2).unwrap();
        assert_eq!(zeros[0].kind, ZeroKind::SignChange);
        assert!((zeros[0].t - c1).abs() < 1e-8);
    }

    #[test]
    fn shallow_dip_is_ambiguous() {
        // minimum 5e-9 relative: above the zero threshold, below the 10x band
        let f = |t: f64| (t - 0.6) * (t - 0.6) + 5e-9 * 0.36;
        let err = synthetic(f, |t| 2.0 * (t - 0.6)).unwrap_err();
        assert!(matches!(err, Error::AmbiguousZero { .. }));
    }

    #[test]
    fn deep_but_nonzero_dip_is_not_a_zero() {
        let f = |t: f64| (t - 0.6) * (t - 0.6) + 1e-6;
        assert!(synthetic(f, |t| 2.0 * (t - 0.6)).unwrap().is_empty());
    }
}
