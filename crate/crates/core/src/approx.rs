//! Closed-form mean and variance approximations
//!
//! ```text
//! E(Y)   ~ k gamma q / (1 - q)
//! Var(Y) ~ k gamma q / (1 - q)^2
//! ```
//!
//! i.e. the moments of a sum of `gamma` i.i.d. negative binomials, and the
//! error analysis of these against the exact series moments. Errors are
//! always signed `exact - approx`.

use rayon::prelude::*;

use crate::distribution::DistributionTable;
use crate::error::{Error, Result};
use crate::series::NgnbParams;
use crate::sum::NeumaierSum;

pub fn mean_approx(params: &NgnbParams) -> f64 {
    params.k() * params.gamma() * params.q() / (1.0 - params.q())
}

pub fn var_approx(params: &NgnbParams) -> f64 {
    let p = 1.0 - params.q();
    params.k() * params.gamma() * params.q() / (p * p)
}

/// Asymptotic mean of the four-parameter extended COM-Poisson family,
/// `p^(1/(alpha - beta)) + (1 - alpha + (2 gamma - 1) beta) / (2 (alpha - beta))`,
/// evaluated at the NGNB embedding `alpha = beta = gamma`. The expression
/// divides by `alpha - beta`, so it never exists there.
pub fn ecomp_asymptotic_mean(params: &NgnbParams) -> Result<f64> {
    let (g, p) = (params.gamma(), params.p());
    ecomp_asymptotic_mean_raw(g, p, g, g)
}

fn ecomp_asymptotic_mean_raw(gamma: f64, p: f64, alpha: f64, beta: f64) -> Result<f64> {
    let diff = alpha - beta;
    if diff == 0.0 {
        return Err(Error::Undefined(
            "the extended COM-Poisson asymptotic mean requires alpha != beta".into(),
        ));
    }
    Ok(p.powf(1.0 / diff) + (1.0 - alpha + (2.0 * gamma - 1.0) * beta) / (2.0 * diff))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub params: NgnbParams,
    pub mean_exact: f64,
    pub mean_approx: f64,
    pub var_exact: f64,
    pub var_approx: f64,
    pub mean_error: f64,
    pub var_error: f64,
}

pub fn moment_report(params: &NgnbParams, epsilon: f64) -> Result<MomentReport> {
    let table = DistributionTable::build(*params, epsilon)?;
    let mean_exact = table.mean_exact();
    let var_exact = table.variance_exact();
    let (ma, va) = (mean_approx(params), var_approx(params));
    Ok(MomentReport {
        params: *params,
        mean_exact,
        mean_approx: ma,
        var_exact,
        var_approx: va,
        mean_error: mean_exact - ma,
        var_error: var_exact - va,
    })
}

/// Axis values of a Cartesian `(gamma, q, k)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub gammas: Vec<f64>,
    pub qs: Vec<f64>,
    pub ks: Vec<f64>,
}

impl GridSpec {
    pub fn new(gammas: Vec<f64>, qs: Vec<f64>, ks: Vec<f64>) -> Self {
        Self { gammas, qs, ks }
    }

    pub fn len(&self) -> usize {
        self.gammas.len() * self.qs.len() * self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in canonical `(q, k, gamma)` order, `gamma` fastest.
    pub fn points(&self) -> Result<Vec<NgnbParams>> {
        let mut out = Vec::with_capacity(self.len());
        for &q in &self.qs {
            for &k in &self.ks {
                for &g in &self.gammas {
                    out.push(NgnbParams::new(g, k, q)?);
                }
            }
        }
        Ok(out)
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        write!(f, "gamma=[{}] q=[{}] k=[{}]", join(&self.gammas), join(&self.qs), join(&self.ks))
    }
}

/// Aggregate error statistics over a grid.
///
/// `*_mse` is the mean of squared errors; `*_sd` the sample standard
/// deviation of the errors (divisor `n - 1`, zero for a single point).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub grid: GridSpec,
    pub n_points: usize,
    pub mean_avg_error: f64,
    pub mean_mse: f64,
    pub mean_sd: f64,
    pub var_avg_error: f64,
    pub var_mse: f64,
    pub var_sd: f64,
}

/// Streaming accumulator for the error statistics.
#[derive(Debug, Clone, Default)]
pub struct ErrorAccumulator {
    n: usize,
    mean_sum: NeumaierSum,
    mean_sq: NeumaierSum,
    var_sum: NeumaierSum,
    var_sq: NeumaierSum,
}

impl ErrorAccumulator {
    pub fn push(&mut self, report: &MomentReport) {
        self.n += 1;
        self.mean_sum.add(report.mean_error);
        self.mean_sq.add(report.mean_error * report.mean_error);
        self.var_sum.add(report.var_error);
        self.var_sq.add(report.var_error * report.var_error);
    }

    pub fn finish(&self, grid: GridSpec) -> Result<GridSummary> {
        if self.n == 0 {
            return Err(Error::Domain("empty grid".into()));
        }
        let n = self.n as f64;
        let stats = |sum: &NeumaierSum, sq: &NeumaierSum| {
            let avg = sum.value() / n;
            let mse = sq.value() / n;
            let sd = if self.n > 1 { ((mse - avg * avg).max(0.0) * n / (n - 1.0)).sqrt() } else { 0.0 };
            (avg, mse, sd)
        };
        let (mean_avg_error, mean_mse, mean_sd) = stats(&self.mean_sum, &self.mean_sq);
        let (var_avg_error, var_mse, var_sd) = stats(&self.var_sum, &self.var_sq);
        Ok(GridSummary {
            grid,
            n_points: self.n,
            mean_avg_error,
            mean_mse,
            mean_sd,
            var_avg_error,
            var_mse,
            var_sd,
        })
    }
}

/// Moment reports for every grid point, in canonical order. Points are
/// evaluated in parallel; the order of the result does not depend on it.
pub fn grid_reports(grid: &GridSpec, epsilon: f64) -> Result<Vec<MomentReport>> {
    let points = grid.points()?;
    points.par_iter().map(|p| moment_report(p, epsilon)).collect()
}

pub fn summarize(grid: &GridSpec, reports: &[MomentReport]) -> Result<GridSummary> {
    let mut acc = ErrorAccumulator::default();
    for r in reports {
        acc.push(r);
    }
    acc.finish(grid.clone())
}

/// Streams the grid through an [`ErrorAccumulator`] in chunks, so memory
/// stays bounded however large the grid is. Chunks are evaluated in
/// parallel and folded in canonical order.
pub fn grid_summary(grid: &GridSpec, epsilon: f64) -> Result<GridSummary> {
    const CHUNK: usize = 1024;
    if grid.is_empty() {
        return Err(Error::Domain("empty grid".into()));
    }
    let points = grid.points()?;
    let mut acc = ErrorAccumulator::default();
    for chunk in points.chunks(CHUNK) {
        let reports: Vec<MomentReport> = chunk.par_iter().map(|p| moment_report(p, epsilon)).collect::<Result<_>>()?;
        for r in &reports {
            acc.push(r);
        }
    }
    acc.finish(grid.clone())
}

/// Named grids for the error analysis.
///
/// `GammaLt1` / `GammaGt1` are the ranges stated for the two analyses
/// (q in 0.1..0.8 resp. 0.4..0.8, integer k from 5 to 9); the `*Table`
/// variants use every row of the corresponding tables instead. The
/// remaining presets are the sub-grids on which the published summary
/// figures are actually reproduced; see the README.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridPreset {
    GammaLt1,
    GammaLt1Table,
    GammaLt1VarSubgrid,
    GammaGt1,
    GammaGt1Table,
    GammaGt1MeanSubgrid,
    GammaGt1VarSubgrid,
}

const GAMMAS_LT1: [f64; 7] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const GAMMAS_GT1: [f64; 6] = [1.2, 1.4, 1.5, 1.6, 1.8, 2.0];

fn ks(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(f64::from).collect()
}

fn tenths(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|i| f64::from(i) / 10.0).collect()
}

impl GridPreset {
    pub const ALL: [GridPreset; 7] = [
        GridPreset::GammaLt1,
        GridPreset::GammaLt1Table,
        GridPreset::GammaLt1VarSubgrid,
        GridPreset::GammaGt1,
        GridPreset::GammaGt1Table,
        GridPreset::GammaGt1MeanSubgrid,
        GridPreset::GammaGt1VarSubgrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GridPreset::GammaLt1 => "gamma-lt-1",
            GridPreset::GammaLt1Table => "gamma-lt-1-table",
            GridPreset::GammaLt1VarSubgrid => "gamma-lt-1-var-subgrid",
            GridPreset::GammaGt1 => "gamma-gt-1",
            GridPreset::GammaGt1Table => "gamma-gt-1-table",
            GridPreset::GammaGt1MeanSubgrid => "gamma-gt-1-mean-subgrid",
            GridPreset::GammaGt1VarSubgrid => "gamma-gt-1-var-subgrid",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn grid(self) -> GridSpec {
        match self {
            GridPreset::GammaLt1 => GridSpec::new(GAMMAS_LT1.to_vec(), tenths(1, 8), ks(5, 9)),
            GridPreset::GammaLt1Table => GridSpec::new(GAMMAS_LT1.to_vec(), tenths(1, 9), ks(5, 10)),
            GridPreset::GammaLt1VarSubgrid => GridSpec::new(GAMMAS_LT1[..6].to_vec(), tenths(1, 5), ks(5, 9)),
            GridPreset::GammaGt1 => GridSpec::new(GAMMAS_GT1.to_vec(), tenths(4, 8), ks(5, 9)),
            GridPreset::GammaGt1Table => {
                GridSpec::new(GAMMAS_GT1.to_vec(), vec![0.2, 0.4, 0.5, 0.6, 0.7, 0.8], ks(5, 10))
            }
            GridPreset::GammaGt1MeanSubgrid => GridSpec::new(GAMMAS_GT1[..4].to_vec(), tenths(4, 8), ks(5, 9)),
            GridPreset::GammaGt1VarSubgrid => {
                GridSpec::new(GAMMAS_GT1[..5].to_vec(), vec![0.2, 0.4, 0.5], ks(5, 9))
            }
        }
    }
}

/// Which published table a cell belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PublishedTable {
    One,
    Two,
    Three,
}

impl PublishedTable {
    pub fn from_id(id: u32) -> Option<Self> {
        match id {
            1 => Some(Self::One),
            2 => Some(Self::Two),
            3 => Some(Self::Three),
            _ => None,
        }
    }

    pub fn grid(self) -> GridSpec {
        match self {
            Self::One => GridSpec::new(GAMMAS_LT1.to_vec(), tenths(1, 5), ks(5, 10)),
            Self::Two => GridSpec::new(GAMMAS_LT1.to_vec(), tenths(6, 9), ks(5, 10)),
            Self::Three => GridSpec::new(GAMMAS_GT1.to_vec(), vec![0.2, 0.4, 0.5, 0.6, 0.7, 0.8], ks(5, 10)),
        }
    }
}

/// Rounds to two decimals, halves away from zero.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
