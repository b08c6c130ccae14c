//! Closest-to-zero eigenvalues of `T_n[M̄]` on each `X_k` and the
//! disconjugacy interval they determine.
//!
//! `λ` is an eigenvalue of `T_n[M̄]` on `X_k` exactly when
//! `W_{n-k}[M̄ - λ](b) = 0`, so each eigenvalue is a root of the
//! characteristic function `M ↦ W_{n-k}[M](b)`. Roots are bracketed by
//! scanning `M` away from `M̄` in both directions and refined with Brent's
//! method.
//!
//! For `n > 2` the equation `T_n[M] u = 0` is disconjugate exactly for
//! `M` in `(M̄ - λ_1, M̄ - λ_2)`, where `λ_1` is the smallest of the least
//! positive eigenvalues over `k` with `n - k` even and `λ_2` the largest
//! of the biggest negative eigenvalues over `k` with `n - k` odd. For
//! `n = 2`, `λ_1 = +∞`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Direction, Error, Result};
use crate::ode::{
    fundamental_at_end, integrate_fundamental, FundamentalSystem, GridSpec, ProblemDef,
};
use crate::roots::{brent, golden_min};
use crate::wronskian::{disconjugacy_of, wronskian_of_state, DisconjugacyReport, ZeroOptions};

/// Integration tolerance floor while scanning for sign changes.
const SCAN_TOL: f64 = 1e-8;

/// Parameter scan settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    /// Largest `|M - M̄|` examined.
    pub radius: f64,
    /// Smallest step in `M`; `None` means `max(1, 0.01 |M̄|)`.
    pub step: Option<f64>,
    /// Step in the scaled frequency `|M - M̄|^(1/n) (b - a)`. Consecutive
    /// eigenvalues of one `X_k` are roughly `π` apart in this variable.
    pub freq_step: f64,
    /// Relative tolerance of the refined root in `M`.
    pub rel_tol: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            radius: 1e6,
            step: None,
            freq_step: 0.05,
            rel_tol: 1e-10,
        }
    }
}

impl ScanSettings {
    fn min_step(&self, m_ref: f64) -> f64 {
        self.step.unwrap_or_else(|| (0.01 * m_ref.abs()).max(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverSettings {
    pub grid: GridSpec,
    pub zeros: ZeroOptions,
    pub scan: ScanSettings,
}

impl SolverSettings {
    /// Defaults with the scan radius `10^6 (b - a)^-n`.
    pub fn for_problem(p: &ProblemDef) -> SolverSettings {
        let mut s = SolverSettings::default();
        s.scan.radius = 1e6 / libm::pow(p.length(), p.order() as f64);
        s
    }
}

/// `W_{n-k}[M](b)`; its zeros in `M` are `M̄ - λ` for eigenvalues `λ` of
/// `T_n[M̄]` on `X_k`.
pub fn characteristic(p: &ProblemDef, k: usize, m: f64, g: &GridSpec) -> Result<f64> {
    let n = p.order();
    assert!(k >= 1 && k < n, "k = {k} outside 1..{}", n - 1);
    let state = fundamental_at_end(p, m, g)?;
    Ok(wronskian_of_state(n, &state, n - k))
}

/// A nontrivial solution of the `(k, n-k)` problem at an eigenvalue.
#[derive(Debug, Clone)]
pub struct Eigenfunction {
    pub k: usize,
    pub m: f64,
    pub t: Vec<f64>,
    /// `derivs[d][node]`, `d = 0..n-1`; `derivs[0]` has max-abs 1.
    pub derivs: Vec<Vec<f64>>,
    /// Combination of `y_1 .. y_{n-k}` that forms the solution.
    pub coefficients: Vec<f64>,
}

impl Eigenfunction {
    pub fn values(&self) -> &[f64] {
        &self.derivs[0]
    }

    /// Largest boundary trace of the `(k, n-k)` conditions, each relative
    /// to the maximum of that derivative over the grid.
    pub fn boundary_residual(&self) -> f64 {
        let n = self.derivs.len();
        let last = self.t.len() - 1;
        let rel = |d: usize, node: usize| {
            let scale = self.derivs[d].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale > 0.0 {
                self.derivs[d][node].abs() / scale
            } else {
                0.0
            }
        };
        let at_a = (0..self.k).map(|d| rel(d, 0));
        let at_b = (0..n - self.k).map(|d| rel(d, last));
        at_a.chain(at_b).fold(0.0, f64::max)
    }

    /// Largest magnitude of a sample whose sign opposes the dominant sign,
    /// over nodes in `(a + δ, b - δ)` with `δ = delta_frac (b - a)`.
    pub fn sign_violation(&self, delta_frac: f64) -> f64 {
        let (a, b) = (self.t[0], self.t[self.t.len() - 1]);
        let delta = delta_frac * (b - a);
        let inner = self
            .t
            .iter()
            .zip(self.values())
            .filter(|(&t, _)| t > a + delta && t < b - delta);
        let (mut pos, mut neg) = (0.0f64, 0.0f64);
        for (_, &v) in inner {
            if v > 0.0 {
                pos = pos.max(v);
            } else {
                neg = neg.max(-v);
            }
        }
        pos.min(neg)
    }
}

/// The eigenfunction of `T_n[M]` on `X_k` at a root `m_star` of the
/// characteristic function: the bordered determinant whose upper rows are
/// `y_j^(d)(b)`, `d = 0..n-k-2`, and whose last row is `y_j(t)`,
/// `j = 1..n-k`.
pub fn eigenfunction_samples(
    p: &ProblemDef,
    k: usize,
    m_star: f64,
    g: &GridSpec,
) -> Result<Eigenfunction> {
    let n = p.order();
    assert!(k >= 1 && k < n, "k = {k} outside 1..{}", n - 1);
    let fs = integrate_fundamental(p, m_star, g)?;
    eigenfunction_from(&fs, k)
}

fn eigenfunction_from(fs: &FundamentalSystem, k: usize) -> Result<Eigenfunction> {
    let n = fs.order();
    let m_star = fs.m();
    let ell = n - k;
    let last = fs.grid().len() - 1;
    let state_b: Vec<f64> = (0..n * n).map(|i| fs.value(last, i / n, i % n)).collect();
    let coefficients =
        null_combination(n, &state_b, ell).ok_or(Error::Multiplicity { k, m: m_star })?;

    let nodes = fs.grid().len();
    let mut derivs = vec![vec![0.0; nodes]; n];
    for node in 0..nodes {
        for (d, row) in derivs.iter_mut().enumerate() {
            row[node] = coefficients
                .iter()
                .enumerate()
                .map(|(j, c)| c * fs.value(node, j, d))
                .sum();
        }
    }
    let (argmax, peak) = derivs[0]
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |best, (i, v)| {
            if v.abs() > best.1 {
                (i, v.abs())
            } else {
                best
            }
        });
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::Multiplicity { k, m: m_star });
    }
    let norm = peak.copysign(derivs[0][argmax]);
    for row in derivs.iter_mut() {
        row.iter_mut().for_each(|v| *v /= norm);
    }
    let coefficients = coefficients.iter().map(|c| c / norm).collect();
    Ok(Eigenfunction {
        k,
        m: m_star,
        t: fs.grid().to_vec(),
        derivs,
        coefficients,
    })
}

/// Cofactors along one row of the `ell x ell` matrix `y_j^(d)(b)`. The
/// last row is tried first; if its cofactors vanish (dependent upper rows)
/// the other rows are tried. `None` when every row's cofactors vanish,
/// i.e. the null space has dimension above one.
fn null_combination(n: usize, state_b: &[f64], ell: usize) -> Option<Vec<f64>> {
    if ell == 1 {
        return Some(vec![1.0]);
    }
    let row_norm = |d: usize| (0..ell).fold(0.0f64, |m, j| m.max(state_b[j * n + d].abs()));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for dropped in (0..ell).rev() {
        let rows: Vec<usize> = (0..ell).filter(|&d| d != dropped).collect();
        let scale: f64 = rows.iter().map(|&d| row_norm(d)).product();
        let cof: Vec<f64> = (0..ell)
            .map(|j| {
                let mut minor = Vec::with_capacity((ell - 1) * (ell - 1));
                for &d in &rows {
                    minor.extend((0..ell).filter(|&c| c != j).map(|c| state_b[c * n + d]));
                }
                let sign = if (dropped + j) % 2 == 0 { 1.0 } else { -1.0 };
                sign * crate::linalg::det(ell - 1, minor)
            })
            .collect();
        let size = cof.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
        if size > 1e-8 {
            return Some(cof);
        }
        if best.as_ref().is_none_or(|(s, _)| size > *s) {
            best = Some((size, cof));
        }
    }
    best.filter(|(s, _)| *s > 1e-13).map(|(_, c)| c)
}

#[derive(Debug, Clone)]
pub struct EigenRecord {
    pub k: usize,
    pub lambda: f64,
    /// `M̄ - λ`.
    pub m_star: f64,
    /// `|W_{n-k}[m_star](b)| / max_t |W_{n-k}[m_star](t)|`.
    pub residual: f64,
    pub eigenfunction: Eigenfunction,
}

/// Closest eigenvalue on each side of zero for one `X_k`.
#[derive(Debug, Clone)]
pub struct ClosestEigenvalues {
    pub k: usize,
    /// Least positive eigenvalue, from the downward scan.
    pub positive: Option<EigenRecord>,
    /// Biggest negative eigenvalue, from the upward scan.
    pub negative: Option<EigenRecord>,
    /// Distance `|M - M̄|` covered by each scan.
    pub reached_down: f64,
    pub reached_up: f64,
    /// The scan stopped before the radius because the solutions overflowed.
    pub truncated_down: bool,
    pub truncated_up: bool,
}

struct DirectionScan {
    root: Option<f64>,
    reached: f64,
    truncated: bool,
}

fn scan_direction(
    p: &ProblemDef,
    k: usize,
    dir: Direction,
    c_ref: f64,
    s: &SolverSettings,
) -> Result<DirectionScan> {
    let n = p.order();
    let m_ref = p.m_ref();
    let sign = match dir {
        Direction::Down => -1.0,
        Direction::Up => 1.0,
    };
    let at = |dist: f64| m_ref + sign * dist;
    let min_step = s.scan.min_step(m_ref);
    let radius = s.scan.radius;
    let length = p.length();
    let xtol = |m: f64| s.scan.rel_tol * m.abs().max(1.0);
    let charf = |m: f64| characteristic(p, k, m, &s.grid);
    // the scan only needs signs; brackets are re-checked at full accuracy
    let coarse_grid = GridSpec {
        abs_tol: s.grid.abs_tol.max(SCAN_TOL),
        rel_tol: s.grid.rel_tol.max(SCAN_TOL),
        ..s.grid
    };
    let coarse = |m: f64| characteristic(p, k, m, &coarse_grid);
    let refine = |m0: f64, c0: f64, m1: f64, c1: f64| {
        let (lo, hi, flo, fhi) = if m0 < m1 {
            (m0, m1, c0, c1)
        } else {
            (m1, m0, c1, c0)
        };
        brent(charf, lo, hi, flo, fhi, xtol(lo.abs().max(hi.abs())), 200)
    };

    // last three samples as (distance, value)
    let mut hist: Vec<(f64, f64)> = vec![(0.0, c_ref)];
    let mut dist = 0.0;
    while dist < radius {
        let grow =
            s.scan.freq_step * n as f64 * libm::pow(dist, (n - 1) as f64 / n as f64) / length;
        let next = (dist + min_step.max(grow)).min(radius);
        let c = match coarse(at(next)) {
            Ok(c) if c.is_finite() => c,
            Ok(_) | Err(Error::Integration { .. }) => {
                return Ok(DirectionScan {
                    root: None,
                    reached: dist,
                    truncated: true,
                });
            }
            Err(e) => return Err(e),
        };
        let (prev_d, prev_c) = *hist.last().unwrap();
        if c == 0.0 {
            return Ok(DirectionScan {
                root: Some(at(next)),
                reached: next,
                truncated: false,
            });
        }
        if prev_c * c < 0.0 {
            let (c0, c1) = (charf(at(prev_d))?, charf(at(next))?);
            if c0 * c1 <= 0.0 {
                let root = refine(at(prev_d), c0, at(next), c1)?;
                return Ok(DirectionScan {
                    root: Some(root),
                    reached: next,
                    truncated: false,
                });
            }
        }
        hist.push((next, c));
        if hist.len() > 3 {
            hist.remove(0);
        }
        if hist.len() == 3 {
            let [(d0, c0), (_, c1), (d2, c2)] = [hist[0], hist[1], hist[2]];
            if c1.abs() < c0.abs() && c1.abs() < c2.abs() {
                // a dip without a sign change: either two close roots or a
                // tangential one
                let side = c0.signum();
                let (dm, _) = golden_min(|d| charf(at(d)).map(|c| side * c), d0, d2, xtol(at(d2)))?;
                let cm = charf(at(dm))?;
                let c0 = charf(at(d0))?;
                if cm * c0 <= 0.0 {
                    let root = refine(at(d0), c0, at(dm), cm)?;
                    return Ok(DirectionScan {
                        root: Some(root),
                        reached: next,
                        truncated: false,
                    });
                }
                if cm.abs() <= 1e-8 * c0.abs().max(c2.abs()) {
                    return Err(Error::TangentialRoot { k, m: at(dm) });
                }
            }
        }
        dist = next;
    }
    Ok(DirectionScan {
        root: None,
        reached: dist,
        truncated: false,
    })
}

fn record(p: &ProblemDef, k: usize, m_star: f64, g: &GridSpec) -> Result<EigenRecord> {
    let n = p.order();
    let fs = integrate_fundamental(p, m_star, g)?;
    let eigenfunction = eigenfunction_from(&fs, k)?;
    let mut state = vec![0.0; n * n];
    let mut peak = 0.0f64;
    for &t in fs.grid() {
        fs.state_at(t, &mut state);
        peak = peak.max(wronskian_of_state(n, &state, n - k).abs());
    }
    let at_b = wronskian_of_state(n, &state, n - k).abs();
    let residual = if peak > 0.0 { at_b / peak } else { 0.0 };
    Ok(EigenRecord {
        k,
        lambda: p.m_ref() - m_star,
        m_star,
        residual,
        eigenfunction,
    })
}

/// Closest eigenvalues on `X_k` without checking that `T_n[M̄]` is
/// disconjugate.
pub fn scan_eigenvalues(
    p: &ProblemDef,
    k: usize,
    s: &SolverSettings,
) -> Result<ClosestEigenvalues> {
    let n = p.order();
    assert!(k >= 1 && k < n, "k = {k} outside 1..{}", n - 1);
    if !(s.scan.radius > 0.0 && s.scan.min_step(p.m_ref()) > 0.0 && s.scan.freq_step > 0.0) {
        return Err(Error::InvalidProblem(
            "scan radius and steps must be positive",
        ));
    }
    let c_ref = characteristic(p, k, p.m_ref(), &s.grid)?;
    if c_ref == 0.0 {
        return Err(Error::SingularBoundary { k, m: p.m_ref() });
    }
    let down = scan_direction(p, k, Direction::Down, c_ref, s)?;
    let up = scan_direction(p, k, Direction::Up, c_ref, s)?;
    let positive = down.root.map(|m| record(p, k, m, &s.grid)).transpose()?;
    let negative = up.root.map(|m| record(p, k, m, &s.grid)).transpose()?;
    Ok(ClosestEigenvalues {
        k,
        positive,
        negative,
        reached_down: down.reached,
        reached_up: up.reached,
        truncated_down: down.truncated,
        truncated_up: up.truncated,
    })
}

fn require_disconjugate(p: &ProblemDef, s: &SolverSettings) -> Result<DisconjugacyReport> {
    let fs = integrate_fundamental(p, p.m_ref(), &s.grid)?;
    let report = disconjugacy_of(&fs, &s.zeros)?;
    match (report.omega, report.witness_k) {
        (Some(omega), Some(witness_k)) => Err(Error::NotDisconjugate {
            m: p.m_ref(),
            omega,
            witness_k,
        }),
        _ => Ok(report),
    }
}

/// Least positive and biggest negative eigenvalue of `T_n[M̄]` on `X_k`
/// within the scan radius.
pub fn closest_eigenvalues(
    p: &ProblemDef,
    k: usize,
    s: &SolverSettings,
) -> Result<ClosestEigenvalues> {
    require_disconjugate(p, s)?;
    scan_eigenvalues(p, k, s)
}

/// `(M̄ - λ_1, M̄ - λ_2)` with the `k` attaining each endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisconjugacyInterval {
    pub m_ref: f64,
    /// `-∞` for second order equations.
    pub lower: f64,
    pub upper: f64,
    /// `+∞` for second order equations.
    pub lambda1: f64,
    pub lambda2: f64,
    pub attained_k_lower: Option<usize>,
    pub attained_k_upper: usize,
}

impl DisconjugacyInterval {
    pub fn contains(&self, m: f64) -> bool {
        self.lower < m && m < self.upper
    }

    pub fn is_bounded_below(&self) -> bool {
        self.lower.is_finite()
    }
}

/// Picks `λ_1` and `λ_2` from per-`k` scans ordered by `k = 1..n-1`.
pub fn assemble_interval(
    order: usize,
    m_ref: f64,
    spectrum: &[ClosestEigenvalues],
) -> Result<DisconjugacyInterval> {
    assert_eq!(spectrum.len(), order - 1);
    let pick = |even: bool, dir: Direction| -> Result<Option<(usize, f64)>> {
        let members = spectrum.iter().filter(|c| (order - c.k).is_multiple_of(2) == even);
        let mut best: Option<(usize, f64)> = None;
        let mut missing: Option<(usize, f64)> = None;
        for c in members {
            let (rec, reached) = match dir {
                Direction::Down => (&c.positive, c.reached_down),
                Direction::Up => (&c.negative, c.reached_up),
            };
            match rec {
                Some(r) if best.is_none_or(|(_, l)| r.lambda.abs() < l.abs()) => {
                    best = Some((c.k, r.lambda))
                }
                Some(_) => {}
                None if missing.is_none_or(|(_, d)| reached < d) => {
                    missing = Some((c.k, reached))
                }
                None => {}
            }
        }
        match (best, missing) {
            (None, Some((k, reached))) => Err(Error::Inconclusive {
                k,
                direction: dir,
                reached,
            }),
            (Some((_, l)), Some((k, reached))) if reached < l.abs() => Err(Error::Inconclusive {
                k,
                direction: dir,
                reached,
            }),
            _ => Ok(best),
        }
    };
    let (attained_k_lower, lambda1) = if order == 2 {
        (None, f64::INFINITY)
    } else {
        let (k, l) = pick(true, Direction::Down)?.expect("order > 2 has an even n - k");
        (Some(k), l)
    };
    let (attained_k_upper, lambda2) = pick(false, Direction::Up)?.expect("n - 1 is odd");
    Ok(DisconjugacyInterval {
        m_ref,
        lower: m_ref - lambda1,
        upper: m_ref - lambda2,
        lambda1,
        lambda2,
        attained_k_lower,
        attained_k_upper,
    })
}

/// Everything computed on the way to the interval.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub reference: DisconjugacyReport,
    pub spectrum: Vec<ClosestEigenvalues>,
    pub interval: DisconjugacyInterval,
}

pub fn analyze(p: &ProblemDef, s: &SolverSettings) -> Result<Analysis> {
    let reference = require_disconjugate(p, s)?;
    let spectrum = (1..p.order())
        .map(|k| scan_eigenvalues(p, k, s))
        .collect::<Result<Vec<_>>>()?;
    let interval = assemble_interval(p.order(), p.m_ref(), &spectrum)?;
    Ok(Analysis {
        reference,
        spectrum,
        interval,
    })
}

pub fn disconjugacy_interval(p: &ProblemDef, s: &SolverSettings) -> Result<DisconjugacyInterval> {
    Ok(analyze(p, s)?.interval)
}
