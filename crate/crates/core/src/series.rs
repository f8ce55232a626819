//! Term sequence, ratio recurrence, truncation rule and normalizing
//! constant of the NGNB series
//!
//! ```text
//! Z(gamma, k, q) = sum_{y >= 0} C(y + k - 1, y)^gamma q^y
//! ```
//!
//! The binomial is read as `Gamma(y + k) / (Gamma(y + 1) Gamma(k))`, so `k`
//! need not be an integer. Everything is carried in log space.
//!
//! Truncation: the successive-term ratio `((y + k) / (y + 1))^gamma q` is
//! monotone in `y` and tends to `q`. Once it drops below
//! `rho = (1 + q) / 2` it stays below, so the omitted tail after index `y`
//! is bounded by the geometric series `term(y) rho / (1 - rho)`. Scanning
//! stops at the first such `y` where this bound is at most `epsilon` times
//! the partial sum.

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const DEFAULT_MAX_TERMS: u64 = 10_000_000;

/// Parameter triple `(gamma, k, q)`.
///
/// The success probability `p = 1 - q` is available through [`NgnbParams::p`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgnbParams {
    gamma: f64,
    k: f64,
    q: f64,
}

impl NgnbParams {
    pub fn new(gamma: f64, k: f64, q: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidParams(format!("gamma must be finite, got {gamma}")));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParams(format!("k must be finite and > 0, got {k}")));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParams(format!("q must lie in (0, 1), got {q}")));
        }
        Ok(Self { gamma, k, q })
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn k(&self) -> f64 {
        self.k
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    #[inline]
    pub fn p(&self) -> f64 {
        1.0 - self.q
    }
}

/// Tolerance and iteration cap for series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub epsilon: f64,
    pub max_terms: u64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { epsilon: DEFAULT_EPSILON, max_terms: DEFAULT_MAX_TERMS }
    }
}

impl SeriesOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self { epsilon, ..Self::default() }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.max_terms == 0 {
            return Err(Error::Domain("max_terms must be positive".into()));
        }
        Ok(())
    }
}

/// Where the series was cut and how much mass that leaves out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTruncation {
    /// Last index included in the partial sum.
    pub y_max: u64,
    /// Upper bound on the omitted unnormalized tail. May be `inf` when the
    /// series itself is beyond f64 range; see `relative_tail`.
    pub tail_bound: f64,
    /// `tail_bound` divided by the partial sum.
    pub relative_tail: f64,
    pub epsilon: f64,
    /// Natural log of the partial sum up to `y_max`.
    pub log_partial_sum: f64,
}

/// Below this the log-gamma difference is taken directly.
const STIRLING_MIN: f64 = 12.0;

fn stirling_tail(z: f64) -> f64 {
    let r = 1.0 / (z * z);
    (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r * (1.0 / 1680.0 - r / 1188.0)))) / z
}

/// `ln Gamma(z + d) - ln Gamma(z)`. For large `z` the leading Stirling
/// terms are regrouped so that the two large log-gammas are never formed.
fn ln_gamma_shift(z: f64, d: f64) -> f64 {
    let w = z + d;
    if z < STIRLING_MIN || w < STIRLING_MIN {
        return libm::lgamma(w) - libm::lgamma(z);
    }
    (z - 0.5) * (d / z).ln_1p() + d * w.ln() - d + (stirling_tail(w) - stirling_tail(z))
}

/// `ln C(y + k - 1, y)`, pairing the largest log-gamma with the next one.
fn ln_binomial(y: f64, k: f64) -> f64 {
    if y + 1.0 >= k {
        ln_gamma_shift(y + 1.0, k - 1.0) - libm::lgamma(k)
    } else {
        ln_gamma_shift(k, y) - libm::lgamma(y + 1.0)
    }
}

/// `ln[ C(y + k - 1, y)^gamma q^y ]`.
pub fn log_term(y: u64, params: &NgnbParams) -> f64 {
    let yf = y as f64;
    let ln_binom = ln_binomial(yf, params.k);
    let ln_q_part = if y == 0 { 0.0 } else { yf * params.q.ln() };
    params.gamma * ln_binom + ln_q_part
}

/// `ln(term(y + 1) / term(y)) = gamma ln((y + k) / (y + 1)) + ln q`.
#[inline]
pub fn log_term_ratio(y: u64, params: &NgnbParams) -> f64 {
    log_base_ratio(y, params.gamma, params.k) + params.q.ln()
}

#[inline]
fn log_base_ratio(y: u64, gamma: f64, k: f64) -> f64 {
    if gamma == 0.0 {
        0.0
    } else {
        gamma * ((k - 1.0) / (y as f64 + 1.0)).ln_1p()
    }
}

/// `term(y + 1) / term(y) = ((y + k) / (y + 1))^gamma q`.
pub fn term_ratio(y: u64, params: &NgnbParams) -> f64 {
    log_term_ratio(y, params).exp()
}

/// Raw output of a truncated scan over the term sequence.
#[derive(Debug, Clone)]
pub(crate) struct Scan {
    /// `ln term(y) - anchor` for `y = 0..=y_max`; empty unless requested.
    pub log_terms: Vec<f64>,
    /// Largest `ln term(y)` seen.
    pub anchor: f64,
    pub y_max: u64,
    /// Partial sum in units of `exp(anchor)`.
    pub sum: f64,
    /// Tail bound on the plain mass, in units of `exp(anchor)`.
    pub tail: f64,
}

impl Scan {
    pub fn log_sum(&self) -> f64 {
        self.anchor + self.sum.ln()
    }
}

/// `sum_{i >= 1} (y + i)^order rho^i` for `order` in 0..=2.
pub(crate) fn geometric_envelope(order: u32, y: f64, rho: f64) -> f64 {
    let one_minus = 1.0 - rho;
    let s0 = rho / one_minus;
    match order {
        0 => s0,
        1 => y * s0 + rho / (one_minus * one_minus),
        _ => {
            y * y * s0
                + 2.0 * y * rho / (one_minus * one_minus)
                + rho * (1.0 + rho) / (one_minus * one_minus * one_minus)
        }
    }
}

/// Scans a log-term sequence starting at `ln term(0) = 0`, with increments
/// given by `log_ratio(y) = ln(term(y+1)/term(y))`, stopping once the
/// geometric tail bound with ratio `rho` falls below `epsilon` times the
/// partial sum of `y^order term(y)` (and of the plain mass).
///
/// `log_ratio` must be monotone in `y` and converge to a limit below
/// `rho`; the caller picks `rho` accordingly.
pub(crate) fn scan_log_terms<F>(
    log_ratio: F,
    rho: f64,
    order: u32,
    opts: &SeriesOptions,
    keep_terms: bool,
) -> Result<Scan>
where
    F: Fn(u64) -> f64,
{
    opts.validate()?;
    let ln_rho = rho.ln();
    let eps = opts.epsilon;

    let mut log_terms = Vec::new();
    let mut lt = NeumaierSum::new();
    let mut anchor = 0.0_f64;
    let mut mass = NeumaierSum::new();
    let mut moment = NeumaierSum::new();
    let mut y: u64 = 0;

    loop {
        let ln_t = lt.value();
        if keep_terms {
            log_terms.push(ln_t);
        }
        if ln_t > anchor {
            let factor = (anchor - ln_t).exp();
            mass.scale(factor);
            moment.scale(factor);
            anchor = ln_t;
        }
        let t = (ln_t - anchor).exp();
        let yf = y as f64;
        mass.add(t);
        if order > 0 {
            moment.add(yf.powi(order as i32) * t);
        }

        let step = log_ratio(y);
        if step <= ln_rho {
            let tail = t * geometric_envelope(0, yf, rho);
            let mut done = tail <= eps * mass.value();
            if done && order > 0 {
                let m = moment.value();
                done = m > 0.0 && t * geometric_envelope(order, yf, rho) <= eps * m;
            }
            if done {
                if keep_terms {
                    for v in &mut log_terms {
                        *v -= anchor;
                    }
                }
                return Ok(Scan { log_terms, anchor, y_max: y, sum: mass.value(), tail });
            }
        }

        if y + 1 >= opts.max_terms {
            return Err(Error::IterationLimitExceeded { limit: opts.max_terms });
        }
        lt.add(step);
        y += 1;
    }
}

/// Scan of the NGNB series itself.
pub(crate) fn scan(
    params: &NgnbParams,
    opts: &SeriesOptions,
    order: u32,
    keep_terms: bool,
) -> Result<Scan> {
    let rho = 0.5 * (1.0 + params.q);
    let p = *params;
    scan_log_terms(|y| log_term_ratio(y, &p), rho, order, opts, keep_terms)
}

pub fn truncation_point(params: &NgnbParams, epsilon: f64) -> Result<SeriesTruncation> {
    truncation_point_with(params, &SeriesOptions::with_epsilon(epsilon))
}

pub fn truncation_point_with(params: &NgnbParams, opts: &SeriesOptions) -> Result<SeriesTruncation> {
    let s = scan(params, opts, 0, false)?;
    let log_partial_sum = s.log_sum();
    Ok(SeriesTruncation {
        y_max: s.y_max,
        tail_bound: (s.anchor + s.tail.ln()).exp(),
        relative_tail: s.tail / s.sum,
        epsilon: opts.epsilon,
        log_partial_sum,
    })
}

/// `ln Z(gamma, k, q)`; never overflows.
pub fn log_normalizing_constant(params: &NgnbParams, epsilon: f64) -> Result<f64> {
    log_normalizing_constant_with(params, &SeriesOptions::with_epsilon(epsilon))
}

pub fn log_normalizing_constant_with(params: &NgnbParams, opts: &SeriesOptions) -> Result<f64> {
    Ok(scan(params, opts, 0, false)?.log_sum())
}

/// `Z(gamma, k, q)`. Returns [`Error::Overflow`] when `Z` exceeds f64
/// range; [`log_normalizing_constant`] still works there.
pub fn normalizing_constant(params: &NgnbParams, epsilon: f64) -> Result<f64> {
    normalizing_constant_with(params, &SeriesOptions::with_epsilon(epsilon))
}

pub fn normalizing_constant_with(params: &NgnbParams, opts: &SeriesOptions) -> Result<f64> {
    let log_z = log_normalizing_constant_with(params, opts)?;
    let z = log_z.exp();
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::Overflow { log_value: log_z })
    }
}
