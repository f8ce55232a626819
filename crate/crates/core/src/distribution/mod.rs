//! The normalized NGNB probability table and everything computed from it.

mod fit;
mod sample;
mod shape;

pub use fit::{fit_mle, fit_mle_with, FitBounds, FitOptions, FitResult};
pub use shape::{classify_shape, ShapeClass};

use crate::error::{Error, Result};
use crate::series::{self, geometric_envelope, log_term_ratio, NgnbParams, SeriesOptions};
use crate::sum::NeumaierSum;

/// Below this, `1 - cdf(y - 1)` is replaced by a direct tail sum.
const SURVIVAL_CANCELLATION_THRESHOLD: f64 = 1e-8;
const UNDERFLOW_THRESHOLD: f64 = 1e-300;

/// Truncated, normalized probabilities `P(Y = y)` for `y = 0..=y_max`.
///
/// Built once, immutable afterwards. Truncation is chosen so that the
/// omitted part of both the mass and the second moment is below `epsilon`
/// relative. Probabilities beyond `y_max` are available through
/// [`DistributionTable::pmf`], which continues the ratio recurrence.
#[derive(Debug, Clone)]
pub struct DistributionTable {
    params: NgnbParams,
    options: SeriesOptions,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    /// `P(Y >= y)` by reverse summation, including the mass past `y_max`.
    upper: Vec<f64>,
    tail_mass: f64,
    log_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HazardCurve {
    pub params: NgnbParams,
    pub points: Vec<(u64, f64)>,
}

impl HazardCurve {
    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|&(_, r)| r)
    }
}

impl DistributionTable {
    pub fn build(params: NgnbParams, epsilon: f64) -> Result<Self> {
        Self::build_with(params, &SeriesOptions::with_epsilon(epsilon))
    }

    pub fn build_with(params: NgnbParams, options: &SeriesOptions) -> Result<Self> {
        let scan = series::scan(&params, options, 2, true)?;
        let ln_sum = scan.sum.ln();
        let probs: Vec<f64> = scan.log_terms.iter().map(|&lt| (lt - ln_sum).exp()).collect();

        let mut acc = NeumaierSum::new();
        let cumulative: Vec<f64> = probs
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.value()
            })
            .collect();

        let mut table = Self {
            params,
            options: *options,
            probs,
            cumulative,
            upper: Vec::new(),
            tail_mass: scan.tail / scan.sum,
            log_z: scan.log_sum(),
        };

        let beyond = table.extension_tail(table.y_max() + 1);
        let mut acc = NeumaierSum::new();
        acc.add(beyond);
        let mut upper: Vec<f64> = table
            .probs
            .iter()
            .rev()
            .map(|&p| {
                acc.add(p);
                acc.value()
            })
            .collect();
        upper.reverse();
        table.upper = upper;
        Ok(table)
    }

    pub fn params(&self) -> &NgnbParams {
        &self.params
    }

    pub fn epsilon(&self) -> f64 {
        self.options.epsilon
    }

    pub fn y_max(&self) -> u64 {
        (self.probs.len() - 1) as u64
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Upper bound on `P(Y > y_max)`.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `ln Z(gamma, k, q)`.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    fn rho(&self) -> f64 {
        0.5 * (1.0 + self.params.q())
    }

    /// `ln P(Y = y)` for `y > y_max` by continuing the ratio recurrence.
    fn extended_log_pmf(&self, y: u64) -> f64 {
        let y_max = self.y_max();
        let mut acc = NeumaierSum::new();
        acc.add(self.probs[y_max as usize].ln());
        for j in y_max..y {
            acc.add(log_term_ratio(j, &self.params));
        }
        acc.value()
    }

    /// `sum_{j >= from} P(Y = j)` for `from > y_max`, by direct summation.
    fn extension_tail(&self, from: u64) -> f64 {
        let rho = self.rho();
        let mut t = self.extended_log_pmf(from).exp();
        let mut acc = NeumaierSum::new();
        let mut y = from;
        for _ in 0..self.options.max_terms {
            if t == 0.0 {
                break;
            }
            acc.add(t);
            if t * geometric_envelope(0, y as f64, rho) <= 1e-17 * acc.value() {
                break;
            }
            t *= series::term_ratio(y, &self.params);
            y += 1;
        }
        acc.value()
    }

    /// `P(Y = y)`; past `y_max` the ratio recurrence is continued.
    pub fn pmf(&self, y: u64) -> f64 {
        match self.probs.get(y as usize) {
            Some(&p) => p,
            None => self.extended_log_pmf(y).exp(),
        }
    }

    /// `P(Y <= y)`.
    pub fn cdf(&self, y: u64) -> f64 {
        match self.cumulative.get(y as usize) {
            Some(&c) => c,
            None => *self.cumulative.last().unwrap(),
        }
    }

    /// `P(Y >= y)`.
    pub fn survival(&self, y: u64) -> f64 {
        if y == 0 {
            return 1.0;
        }
        if y > self.y_max() {
            return self.extension_tail(y);
        }
        let s = 1.0 - self.cumulative[y as usize - 1];
        if s < SURVIVAL_CANCELLATION_THRESHOLD {
            self.upper[y as usize]
        } else {
            s
        }
    }

    /// Smallest `y` with `cdf(y) >= u`.
    pub fn quantile(&self, u: f64) -> Result<u64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain(format!("quantile level must lie in [0, 1), got {u}")));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> u64 {
        let idx = self.cumulative.partition_point(|&c| c < u);
        if idx < self.cumulative.len() {
            return idx as u64;
        }
        // u sits in the rounding gap above cumulative[y_max]
        let mut c = *self.cumulative.last().unwrap();
        let mut y = self.y_max();
        let mut t = self.probs[y as usize];
        for _ in 0..self.options.max_terms {
            t *= series::term_ratio(y, &self.params);
            y += 1;
            c += t;
            if c >= u || t == 0.0 {
                break;
            }
        }
        y
    }

    pub fn mean_exact(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(y, &p)| y as f64 * p)
            .collect::<NeumaierSum>()
            .value()
    }

    pub fn variance_exact(&self) -> f64 {
        let mean = self.mean_exact();
        self.probs
            .iter()
            .enumerate()
            .map(|(y, &p)| {
                let d = y as f64 - mean;
                d * d * p
            })
            .collect::<NeumaierSum>()
            .value()
    }

    /// `E[Y (Y - 1) ... (Y - r + 1)]`.
    pub fn factorial_moment(&self, r: u32) -> Result<f64> {
        if r == 0 {
            return Err(Error::Domain("factorial moment order must be >= 1".into()));
        }
        let falling = |y: u64| -> f64 {
            (0..r as u64).map(|i| y as f64 - i as f64).product::<f64>().max(0.0)
        };
        let mut acc: NeumaierSum = self
            .probs
            .iter()
            .enumerate()
            .map(|(y, &p)| falling(y as u64) * p)
            .collect();

        // Past y_max the term ratio is at most rho, and the falling
        // factorial grows by (y + 1) / (y + 1 - r), so the contributions
        // are dominated by a geometric series once that product is < 1.
        let rho = self.rho();
        let mut y = self.y_max();
        let mut t = self.probs[y as usize];
        for _ in 0..self.options.max_terms {
            t *= series::term_ratio(y, &self.params);
            y += 1;
            if t == 0.0 {
                break;
            }
            let c = falling(y) * t;
            acc.add(c);
            let yf = y as f64;
            let growth = (yf + 1.0) / (yf + 1.0 - r as f64);
            let rc = growth * rho;
            if yf + 1.0 > r as f64 && rc < 1.0 && c * rc / (1.0 - rc) <= self.options.epsilon * acc.value() {
                break;
            }
        }
        Ok(acc.value())
    }

    /// Variance over mean.
    pub fn dispersion_index(&self) -> Result<f64> {
        let mean = self.mean_exact();
        if mean < 1e-300 {
            return Err(Error::DegenerateDistribution(format!("mean {mean} is numerically zero")));
        }
        Ok(self.variance_exact() / mean)
    }

    /// Failure rate `r(y) = P(Y = y) / P(Y >= y)`.
    pub fn hazard(&self, y: u64) -> Result<f64> {
        let s = self.survival(y);
        if !(s >= UNDERFLOW_THRESHOLD) {
            return Err(Error::NumericalUnderflow { y });
        }
        Ok((self.pmf(y) / s).min(1.0))
    }

    /// `r(0), ..., r(y_limit)`.
    pub fn hazard_curve(&self, y_limit: u64) -> Result<HazardCurve> {
        let points = (0..=y_limit)
            .map(|y| self.hazard(y).map(|r| (y, r)))
            .collect::<Result<Vec<_>>>()?;
        Ok(HazardCurve { params: self.params, points })
    }

    /// Draws `n` values by inverse transform against the cached cdf.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<u64> {
        sample::inverse_transform(self, n, seed)
    }
}
