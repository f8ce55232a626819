//! The COM-Poisson law `p(y) ∝ lambda^y / (y!)^gamma` and the NGNB limit
//! towards it as `k -> inf` with `lambda = k^gamma q` held fixed.

use rayon::prelude::*;

use crate::distribution::DistributionTable;
use crate::error::{Error, Result};
use crate::series::{scan_log_terms, NgnbParams, SeriesOptions};
use crate::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComPoissonParams {
    lambda: f64,
    gamma: f64,
}

impl ComPoissonParams {
    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParams(format!("lambda must be positive and finite, got {lambda}")));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidParams(format!("gamma must be finite, got {gamma}")));
        }
        if gamma < 0.0 || (gamma == 0.0 && lambda >= 1.0) {
            return Err(Error::DivergentSeries(format!(
                "sum of lambda^j/(j!)^gamma diverges for lambda={lambda}, gamma={gamma}"
            )));
        }
        Ok(Self { lambda, gamma })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `ln(term(y+1) / term(y))`.
    fn log_ratio(&self, y: u64) -> f64 {
        self.lambda.ln() - self.gamma * ((y + 1) as f64).ln()
    }
}

/// Normalized truncated COM-Poisson probabilities.
#[derive(Debug, Clone)]
pub struct ComPoissonTable {
    params: ComPoissonParams,
    probs: Vec<f64>,
    tail_mass: f64,
    log_z: f64,
}

impl ComPoissonTable {
    pub fn build(params: ComPoissonParams, epsilon: f64) -> Result<Self> {
        Self::build_with(params, &SeriesOptions::with_epsilon(epsilon))
    }

    pub fn build_with(params: ComPoissonParams, options: &SeriesOptions) -> Result<Self> {
        // ratio tends to 0 for gamma > 0 and equals lambda for gamma = 0
        let limit = if params.gamma > 0.0 { 0.0 } else { params.lambda };
        let rho = 0.5 * (1.0 + limit);
        let scan = scan_log_terms(|y| params.log_ratio(y), rho, 2, options, true)?;
        let ln_sum = scan.sum.ln();
        Ok(Self {
            params,
            probs: scan.log_terms.iter().map(|&lt| (lt - ln_sum).exp()).collect(),
            tail_mass: scan.tail / scan.sum,
            log_z: scan.log_sum(),
        })
    }

    pub fn params(&self) -> &ComPoissonParams {
        &self.params
    }

    pub fn pmf(&self, y: u64) -> f64 {
        self.probs.get(y as usize).copied().unwrap_or(0.0)
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }
}

/// Anything exposing truncated probabilities `p(0..=y_max)` plus a bound
/// on the omitted mass.
pub trait ProbabilityTable {
    fn probs(&self) -> &[f64];

    fn tail_mass(&self) -> f64 {
        0.0
    }
}

impl ProbabilityTable for DistributionTable {
    fn probs(&self) -> &[f64] {
        DistributionTable::probs(self)
    }

    fn tail_mass(&self) -> f64 {
        DistributionTable::tail_mass(self)
    }
}

impl ProbabilityTable for ComPoissonTable {
    fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn tail_mass(&self) -> f64 {
        self.tail_mass
    }
}

impl ProbabilityTable for [f64] {
    fn probs(&self) -> &[f64] {
        self
    }
}

impl ProbabilityTable for Vec<f64> {
    fn probs(&self) -> &[f64] {
        self
    }
}

/// Total variation distance `1/2 sum |a(y) - b(y)|` over the union of the
/// two supports. Mass beyond either table is not included; it is bounded by
/// the tables' `tail_mass`, which the truncation keeps below `epsilon`.
pub fn tv_distance<A, B>(a: &A, b: &B) -> f64
where
    A: ProbabilityTable + ?Sized,
    B: ProbabilityTable + ?Sized,
{
    let (pa, pb) = (a.probs(), b.probs());
    let n = pa.len().max(pb.len());
    let acc: NeumaierSum = (0..n)
        .map(|y| {
            let x = pa.get(y).copied().unwrap_or(0.0);
            let z = pb.get(y).copied().unwrap_or(0.0);
            (x - z).abs()
        })
        .collect();
    (0.5 * acc.value()).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub k: f64,
    pub q: f64,
    pub tv: f64,
}

/// TV distance between `NGNB(gamma, k, lambda k^-gamma)` and
/// `COM-Poisson(lambda, gamma)` for each `k`, in input order.
pub fn convergence_profile(gamma: f64, lambda: f64, ks: &[f64], epsilon: f64) -> Result<Vec<ProfilePoint>> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Domain(format!("the limit is only taken for gamma > 0, got {gamma}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if ks.is_empty() {
        return Err(Error::Domain("no k values given".into()));
    }
    if ks.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("k values must be strictly increasing".into()));
    }
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Domain(format!("k must be positive, got {k}")));
        }
        let q = lambda * k.powf(-gamma);
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("induced q = {q} at k = {k} is outside (0, 1)")));
        }
        points.push((k, q));
    }

    let target = ComPoissonTable::build(ComPoissonParams::new(lambda, gamma)?, epsilon)?;
    points
        .par_iter()
        .map(|&(k, q)| {
            let table = DistributionTable::build(NgnbParams::new(gamma, k, q)?, epsilon)?;
            Ok(ProfilePoint { k, q, tv: tv_distance(&table, &target) })
        })
        .collect()
}
