//! Test oracles and benchmark sweeps: Monte-Carlo cone volume, seeded
//! parameter sweeps with CSV output, and log-log slope fits.

use crate::driver::{solve, SolveConfig};
use crate::error::{Error, Result};
use crate::instance::{generate_planted_family, Certificate, ConeInstance, PlantedFamily};
use crate::linalg::dot;
use crate::norm::NormState;
use crate::phases::PhaseMode;
use crate::rescale::{sample_ball, RescaleKind};
use crate::rng;
use crate::scalar::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

const MC_CHUNK: usize = 1 << 15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub fraction: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl VolumeEstimate {
    fn from_hits(hits: usize, samples: usize) -> Self {
        let p = hits as f64 / samples as f64;
        Self { fraction: p, stderr: (p * (1.0 - p) / samples as f64).sqrt(), samples }
    }
}

/// Fraction of `B_H = {x : xᵀHx <= 1}` inside the cone `{x : Ax > 0}`.
pub fn mc_volume_fraction<T: Scalar>(
    instance: &ConeInstance<T>,
    norm: &NormState<T>,
    samples: usize,
    seed: u64,
) -> Result<VolumeEstimate> {
    Ok(mc_volume_fractions(&[instance], norm, samples, seed)?[0])
}

/// Several cones measured on the same sample points (common random
/// numbers), so ratios of the estimates have much smaller variance.
pub fn mc_volume_fractions<T: Scalar>(
    instances: &[&ConeInstance<T>],
    norm: &NormState<T>,
    samples: usize,
    seed: u64,
) -> Result<Vec<VolumeEstimate>> {
    let Some(first) = instances.first() else { return Ok(Vec::new()) };
    let n = first.n();
    if samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    if instances.iter().any(|i| i.n() != n) || norm.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: norm.dim() });
    }
    let rows: Vec<_> = instances.iter().map(|i| i.rows().cast::<f64>()).collect();
    let map = norm.inv_sqrt().cast::<f64>();
    let identity = norm.is_identity();
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, rng::MONTE_CARLO, c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut local = vec![0usize; rows.len()];
            let mut u = vec![0.0; n];
            for _ in 0..count {
                sample_ball(&mut r, &mut u);
                let x = if identity { u.clone() } else { map.matvec(&u) };
                for (h, a) in local.iter_mut().zip(&rows) {
                    if a.row_iter().all(|row| dot(row, &x) > 0.0) {
                        *h += 1;
                    }
                }
            }
            local
        })
        .reduce(|| vec![0; rows.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    Ok(hits.into_iter().map(|h| VolumeEstimate::from_hits(h, samples)).collect())
}

/// Least-squares fit of `y = slope x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let k = xs.len();
    if k < 2 || ys.len() != k {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / k as f64;
    let my = ys.iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some(LineFit { slope, intercept: my - slope * mx, points: k })
}

/// Slope of `ln y` against `ln x`; non-positive entries are skipped.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).unzip();
    fit_line(&lx, &ly)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (rx, ry) = (ranks(xs), ranks(ys));
    let k = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / k;
    let my = ry.iter().sum::<f64>() / k;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

/// Parameter grid of a sweep. Every combination of `ns × rhos ×
/// phase_modes × rescale_modes × seeds` is one cell with `m = m_factor · n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchSpec {
    pub ns: Vec<usize>,
    pub m_factor: usize,
    pub rhos: Vec<f64>,
    pub phase_modes: Vec<PhaseMode>,
    pub rescale_modes: Vec<RescaleKind>,
    pub seeds: Vec<u64>,
    pub family: PlantedFamily,
    pub derandomize: bool,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            ns: vec![4, 8, 16],
            m_factor: 4,
            rhos: vec![1e-2],
            phase_modes: vec![PhaseMode::MwuStandard, PhaseMode::MwuModified],
            rescale_modes: vec![RescaleKind::MultiRank],
            seeds: vec![0, 1, 2],
            family: PlantedFamily::Cap,
            derandomize: false,
        }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub rho: f64,
    pub mode: PhaseMode,
    pub rescale: RescaleKind,
    pub phases: usize,
    pub iters: usize,
    pub rescales: usize,
    pub wall_ms: f64,
    pub seed: u64,
    pub status: String,
    /// Iterations of each phase (not part of the CSV).
    #[serde(default)]
    pub phase_iters: Vec<usize>,
}

pub const CSV_HEADER: &str = "n,m,rho,mode,rescale,phases,iters,rescales,wall_ms,seed,status";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub mode: PhaseMode,
    pub rescale: RescaleKind,
    /// `"n"` or `"log_inv_rho"`.
    pub against: String,
    pub fit: LineFit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub threads: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub spec: BenchSpec,
    pub rows: Vec<BenchRow>,
    /// Log-log slopes of total iterations.
    pub fits: Vec<SlopeFit>,
    pub environment: Environment,
}

impl RunReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{:.3},{},{}",
                r.n, r.m, r.rho, r.mode, r.rescale, r.phases, r.iters, r.rescales, r.wall_ms, r.seed, r.status
            );
        }
        s
    }
}

fn run_cell(n: usize, m: usize, rho: f64, mode: PhaseMode, rescale: RescaleKind, seed: u64, spec: &BenchSpec) -> BenchRow {
    let start = Instant::now();
    let mut row = BenchRow {
        n,
        m,
        rho,
        mode,
        rescale,
        phases: 0,
        iters: 0,
        rescales: 0,
        wall_ms: 0.0,
        seed,
        status: String::new(),
        phase_iters: Vec::new(),
    };
    let outcome = generate_planted_family::<f64>(n, m, rho, seed, spec.family).and_then(|(inst, w)| {
        let mut cfg = SolveConfig::new(mode, rescale);
        cfg.seed = seed;
        cfg.rho_hint = Some(w.rho);
        cfg.derandomize = spec.derandomize;
        cfg.record_trace = false;
        solve(&inst, &cfg)
    });
    match outcome {
        Ok(res) => {
            row.phases = res.phases_used;
            row.iters = res.total_iterations;
            row.rescales = res.rescales;
            row.phase_iters = res.phase_iterations;
            row.status = match res.certificate {
                Certificate::Feasible { .. } => "feasible".into(),
                Certificate::DualEvidence { .. } => "dual_evidence".into(),
                Certificate::BudgetExhausted(_) => "budget_exhausted".into(),
            };
        }
        Err(e) => row.status = format!("error: {}", e.to_string().replace([',', '\n'], ";")),
    }
    row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    row
}

/// Runs every cell of `spec` (in parallel), sorts the rows and fits
/// log-log slopes of total iterations against `n` and `ln(1/rho)` per
/// mode pair. Failed cells are kept as flagged rows.
pub fn bench_sweep(spec: &BenchSpec) -> Result<RunReport> {
    if spec.ns.is_empty()
        || spec.rhos.is_empty()
        || spec.phase_modes.is_empty()
        || spec.rescale_modes.is_empty()
        || spec.seeds.is_empty()
    {
        return Err(Error::Config("every sweep grid must be non-empty".into()));
    }
    if spec.m_factor == 0 {
        return Err(Error::Config("m_factor must be at least 1".into()));
    }
    let start = Instant::now();
    let mut cells = Vec::new();
    for &n in &spec.ns {
        for &rho in &spec.rhos {
            for &mode in &spec.phase_modes {
                for &rescale in &spec.rescale_modes {
                    for &seed in &spec.seeds {
                        cells.push((n, spec.m_factor * n, rho, mode, rescale, seed));
                    }
                }
            }
        }
    }
    let mut rows: Vec<BenchRow> = cells
        .into_par_iter()
        .map(|(n, m, rho, mode, rescale, seed)| run_cell(n, m, rho, mode, rescale, seed, spec))
        .collect();
    rows.sort_by(|a, b| {
        (a.n, a.mode.as_str(), a.rescale.as_str(), a.seed)
            .cmp(&(b.n, b.mode.as_str(), b.rescale.as_str(), b.seed))
            .then(a.rho.total_cmp(&b.rho))
    });

    let mut groups: BTreeMap<(&str, &str), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.status == "feasible") {
        groups.entry((r.mode.as_str(), r.rescale.as_str())).or_default().push(r);
    }
    let mut fits = Vec::new();
    for group in groups.values() {
        let (mode, rescale) = (group[0].mode, group[0].rescale);
        let ys: Vec<f64> = group.iter().map(|r| r.iters as f64).collect();
        let ns: Vec<f64> = group.iter().map(|r| r.n as f64).collect();
        if let Some(fit) = log_log_slope(&ns, &ys) {
            fits.push(SlopeFit { mode, rescale, against: "n".into(), fit });
        }
        let lr: Vec<f64> = group.iter().map(|r| (1.0 / r.rho).ln()).collect();
        if let Some(fit) = log_log_slope(&lr, &ys) {
            fits.push(SlopeFit { mode, rescale, against: "log_inv_rho".into(), fit });
        }
    }
    Ok(RunReport {
        spec: spec.clone(),
        rows,
        fits,
        environment: Environment {
            version: env!("CARGO_PKG_VERSION").into(),
            threads: rayon::current_num_threads(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}
