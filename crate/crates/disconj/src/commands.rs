use std::path::{Path, PathBuf};
use std::time::Instant;

use disconj_core::{
    assemble_interval, build_green, disconjugacy_of, integrate_fundamental, scan_eigenvalues,
    trace, verify_sign, Error as CoreError, GreenGrid, WronskianTrace, ZeroKind,
};
use rayon::prelude::*;

use crate::cli::{Cli, Command, ScanArgs};
use crate::error::{exit, CliError, Result};
use crate::problem::{check_settings, Loaded, ProblemFile};
use crate::report::{
    Interval, RunReport, Settings, SignSummary, Spectrum, TraceSummary, TraceZero, Verdict,
};

pub const DEFAULT_SIGN_TOL: f64 = 1e-7;
pub const THREADS_ENV: &str = "DISCONJ_THREADS";

/// Everything a command emits; written by the caller once it has finished.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub file: Option<(PathBuf, String)>,
}

impl Outcome {
    /// `text` goes to `out` when given, otherwise to stdout.
    fn emit(out: Option<PathBuf>, text: String) -> Outcome {
        match out {
            Some(path) => Outcome {
                file: Some((path, text)),
                ..Outcome::default()
            },
            None => Outcome {
                stdout: text,
                ..Outcome::default()
            },
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Check { file, at, tol, out } => check(&file, at, tol, out),
        Command::Interval {
            file,
            scan,
            tol,
            out,
        } => interval(&file, &scan, tol, out),
        Command::Trace {
            file,
            at,
            k,
            tol,
            out,
        } => trace_cmd(&file, at, k, tol, out),
        Command::Green {
            file,
            at,
            k,
            mesh,
            tol,
            out,
        } => green(&file, at, k, mesh, tol, out),
    }
}

fn load(file: &Path, tol: Option<f64>) -> Result<Loaded> {
    let mut l = ProblemFile::read(file)?.load()?;
    if let Some(tol) = tol {
        l.settings.zeros.tol = tol;
    }
    check_settings(&l.settings, l.green_mesh)?;
    Ok(l)
}

fn check_k(l: &Loaded, k: usize) -> Result<()> {
    let n = l.problem.order();
    if k == 0 || k >= n {
        return Err(CliError::input(format!(
            "k = {k} outside 1..={} for order {n}",
            n - 1
        )));
    }
    Ok(())
}

fn elapsed_ms(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1e3 * 1e3).round() / 1e3
}

fn check(file: &Path, at: Option<f64>, tol: Option<f64>, out: Option<PathBuf>) -> Result<Outcome> {
    let start = Instant::now();
    let l = load(file, tol)?;
    let m = at.unwrap_or(l.problem.m_ref());
    let fs = integrate_fundamental(&l.problem, m, &l.settings.grid)?;
    let verdict = disconjugacy_of(&fs, &l.settings.zeros)?;
    let settings = Settings::new(&l.settings, l.problem.m_ref(), l.green_mesh);
    let mut report = RunReport::new("check", l.file, settings, Verdict::from(&verdict));
    report.timing.elapsed_ms = elapsed_ms(start);
    let mut o = Outcome::emit(out, report.to_json());
    if !verdict.disconjugate {
        o.code = exit::NEGATIVE;
    }
    Ok(o)
}

/// Thread pool capped by `DISCONJ_THREADS`; unset or `0` means one thread
/// per core.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::input(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))
}

fn interval(
    file: &Path,
    scan: &ScanArgs,
    tol: Option<f64>,
    out: Option<PathBuf>,
) -> Result<Outcome> {
    let start = Instant::now();
    let mut l = load(file, tol)?;
    if let Some(r) = scan.radius {
        l.settings.scan.radius = r;
    }
    if scan.step.is_some() {
        l.settings.scan.step = scan.step;
    }
    check_settings(&l.settings, l.green_mesh)?;
    let pool = thread_pool()?;

    let p = &l.problem;
    let s = &l.settings;
    let fs = integrate_fundamental(p, p.m_ref(), &s.grid)?;
    let reference = disconjugacy_of(&fs, &s.zeros)?;
    let settings = Settings::new(s, p.m_ref(), l.green_mesh);
    let mut report = RunReport::new(
        "interval",
        l.file.clone(),
        settings,
        Verdict::from(&reference),
    );
    let mut stderr = String::new();

    let code = if let (Some(omega), Some(witness_k)) = (reference.omega, reference.witness_k) {
        let e = CoreError::NotDisconjugate {
            m: p.m_ref(),
            omega,
            witness_k,
        };
        stderr = format!("error: {e}\n");
        exit::NEGATIVE
    } else {
        let spectrum = pool.install(|| {
            (1..p.order())
                .into_par_iter()
                .map(|k| scan_eigenvalues(p, k, s))
                .collect::<std::result::Result<Vec<_>, _>>()
        })?;
        report.spectrum = Some(
            spectrum
                .iter()
                .map(|c| Spectrum::new(p.order(), c))
                .collect(),
        );
        match assemble_interval(p.order(), p.m_ref(), &spectrum) {
            Ok(iv) => {
                report.interval = Some(Interval::from(&iv));
                exit::OK
            }
            Err(e) => {
                let e = CliError::from(e);
                stderr = format!("error: {e}\n");
                e.exit_code()
            }
        }
    };
    report.timing.elapsed_ms = elapsed_ms(start);
    let mut o = Outcome::emit(out, report.to_json());
    o.code = code;
    o.stderr = stderr;
    Ok(o)
}

pub fn trace_csv(tr: &WronskianTrace) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "W"]).expect("in-memory write");
    for (&t, &v) in tr.t.iter().zip(&tr.w) {
        w.serialize((t, v)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

fn trace_cmd(
    file: &Path,
    at: Option<f64>,
    k: usize,
    tol: Option<f64>,
    out: Option<PathBuf>,
) -> Result<Outcome> {
    let l = load(file, tol)?;
    check_k(&l, k)?;
    let m = at.unwrap_or(l.problem.m_ref());
    let fs = integrate_fundamental(&l.problem, m, &l.settings.grid)?;
    let tr = trace(&fs, k, &l.settings.zeros)?;
    let summary = TraceSummary {
        k,
        m,
        samples: tr.t.len(),
        zeros: tr
            .zeros
            .iter()
            .map(|z| TraceZero {
                t: z.t,
                kind: match z.kind {
                    ZeroKind::SignChange => "sign_change",
                    ZeroKind::Tangential => "tangential",
                },
            })
            .collect(),
    };
    let summary = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    let csv = trace_csv(&tr);
    Ok(match out {
        Some(path) => Outcome {
            stdout: summary,
            file: Some((path, csv)),
            ..Outcome::default()
        },
        None => Outcome {
            stdout: csv,
            stderr: summary,
            ..Outcome::default()
        },
    })
}

pub fn green_csv(gg: &GreenGrid) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "s", "g"]).expect("in-memory write");
    for (ti, &t) in gg.t.iter().enumerate() {
        for (si, &s) in gg.s.iter().enumerate() {
            w.serialize((t, s, gg.value(ti, si)))
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

fn green(
    file: &Path,
    at: Option<f64>,
    k: usize,
    mesh: Option<usize>,
    tol: Option<f64>,
    out: Option<PathBuf>,
) -> Result<Outcome> {
    let l = load(file, None)?;
    check_k(&l, k)?;
    let mesh = mesh.unwrap_or(l.green_mesh);
    if mesh < 4 {
        return Err(CliError::input("--mesh needs at least 4 nodes"));
    }
    let tol = tol.unwrap_or(DEFAULT_SIGN_TOL);
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(CliError::input("--tol must be a non-negative number"));
    }
    let m = at.unwrap_or(l.problem.m_ref());
    let gg = build_green(&l.problem, m, k, mesh, &l.settings.grid)?;
    let r = verify_sign(&gg, tol);
    let summary = SignSummary::new(&r, tol, mesh, gg.boundary_residual, gg.jump_error).to_json();
    let csv = green_csv(&gg);
    let mut o = match out {
        Some(path) => Outcome {
            stdout: summary,
            file: Some((path, csv)),
            ..Outcome::default()
        },
        None => Outcome {
            stdout: csv,
            stderr: summary,
            ..Outcome::default()
        },
    };
    if !r.pass {
        o.code = exit::NEGATIVE;
    }
    Ok(o)
}
