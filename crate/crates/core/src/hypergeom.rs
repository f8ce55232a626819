//! Pochhammer symbols and the repeated-parameter hypergeometric series
//! `gFg-1(k, ..., k; 1, ..., 1; z)`.
//!
//! For a positive integer `gamma` the NGNB normalizing series is exactly
//! `gFg-1(k, ..., k; 1, ..., 1; q)`, which gives the pgf as a ratio of two
//! such series and the mean through a second, shifted series. Everything
//! here is evaluated in linear space with its own running-term recurrence,
//! independent of [`crate::series`], so the two routes can check each other.

use crate::error::{Error, Result};
use crate::series::{NgnbParams, SeriesOptions};
use crate::sum::NeumaierSum;

/// Rising factorial `(b)_n = b (b + 1) ... (b + n - 1)`, `(b)_0 = 1`.
pub fn pochhammer(b: f64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if n <= 32 {
        return (0..n).map(|i| b + i as f64).product();
    }
    // a zero factor appears when b is a non-positive integer reached by the product
    if b <= 0.0 && b.fract() == 0.0 && -b < n as f64 {
        return 0.0;
    }
    let (ln_hi, sign_hi) = libm::lgamma_r(b + n as f64);
    let (ln_lo, sign_lo) = libm::lgamma_r(b);
    (sign_hi * sign_lo) as f64 * (ln_hi - ln_lo).exp()
}

/// Arguments of `gFg-1(k, ..., k; 1, ..., 1; z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfqSpec {
    gamma_int: u32,
    k: f64,
    z: f64,
}

impl PfqSpec {
    pub fn new(gamma_int: u32, k: f64, z: f64) -> Result<Self> {
        if gamma_int == 0 {
            return Err(Error::Domain("number of numerator parameters must be >= 1".into()));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParams(format!("k must be finite and > 0, got {k}")));
        }
        if !(z.abs() < 1.0) {
            return Err(Error::Domain(format!("|z| must be < 1, got {z}")));
        }
        Ok(Self { gamma_int, k, z })
    }

    pub fn gamma_int(&self) -> u32 {
        self.gamma_int
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

/// Sums `sum_y t_y` with `t_0 = 1`, `t_{y+1} = t_y * ratio(y)`, where
/// `|ratio(y)|` settles monotonically toward `|z| < 1`. Stops with the
/// geometric tail rule at `rho = (1 + |z|) / 2`.
fn running_series<F: Fn(u64) -> f64>(ratio: F, z: f64, opts: &SeriesOptions) -> Result<f64> {
    opts.validate()?;
    let rho = 0.5 * (1.0 + z.abs());
    let mut acc = NeumaierSum::new();
    let mut t = 1.0_f64;
    let mut y = 0u64;
    loop {
        acc.add(t);
        let r = ratio(y);
        let total = acc.value();
        if !total.is_finite() {
            return Err(Error::Overflow { log_value: f64::INFINITY });
        }
        if t == 0.0 || (r.abs() <= rho && t.abs() * rho / (1.0 - rho) <= opts.epsilon * total.abs()) {
            return Ok(total);
        }
        if y + 1 >= opts.max_terms {
            return Err(Error::IterationLimitExceeded { limit: opts.max_terms });
        }
        t *= r;
        y += 1;
    }
}

/// `gFg-1(k, ..., k; 1, ..., 1; z) = sum_y [(k)_y / y!]^gamma z^y`.
pub fn pfq_repeated(spec: &PfqSpec) -> Result<f64> {
    pfq_repeated_with(spec, &SeriesOptions::default())
}

pub fn pfq_repeated_with(spec: &PfqSpec, opts: &SeriesOptions) -> Result<f64> {
    let PfqSpec { gamma_int, k, z } = *spec;
    let g = gamma_int as i32;
    running_series(|y| ((k + y as f64) / (1.0 + y as f64)).powi(g) * z, z, opts)
}

/// Numerator of the mean:
/// `sum_j [(k+1)_j]^gamma / [(2)_j]^(gamma-1) * q^j / j!`.
fn shifted_series(gamma_int: u32, k: f64, q: f64, opts: &SeriesOptions) -> Result<f64> {
    let g = gamma_int as i32;
    running_series(
        |j| {
            let jf = j as f64;
            ((k + 1.0 + jf) / (jf + 2.0)).powi(g) * ((jf + 2.0) / (jf + 1.0)) * q
        },
        q,
        opts,
    )
}

fn integer_gamma(params: &NgnbParams) -> Result<u32> {
    let g = params.gamma();
    if g >= 1.0 && g.fract() == 0.0 && g <= u32::MAX as f64 {
        Ok(g as u32)
    } else {
        Err(Error::Domain(format!(
            "hypergeometric representation needs a positive integer gamma, got {g}"
        )))
    }
}

/// Probability generating function `E[s^Y]` for integer `gamma >= 1`,
/// as `gFg-1(..; q s) / gFg-1(..; q)`.
pub fn pgf(params: &NgnbParams, s: f64) -> Result<f64> {
    pgf_with(params, s, &SeriesOptions::default())
}

pub fn pgf_with(params: &NgnbParams, s: f64, opts: &SeriesOptions) -> Result<f64> {
    let g = integer_gamma(params)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("s must lie in [0, 1], got {s}")));
    }
    let num = pfq_repeated_with(&PfqSpec::new(g, params.k(), params.q() * s)?, opts)?;
    let den = pfq_repeated_with(&PfqSpec::new(g, params.k(), params.q())?, opts)?;
    Ok(num / den)
}

/// `E[Y] = q k^gamma gFg-1(k+1, ...; 2, ...; q) / gFg-1(k, ...; 1, ...; q)`.
pub fn mean_via_pfq(params: &NgnbParams) -> Result<f64> {
    mean_via_pfq_with(params, &SeriesOptions::default())
}

pub fn mean_via_pfq_with(params: &NgnbParams, opts: &SeriesOptions) -> Result<f64> {
    let g = integer_gamma(params)?;
    let (k, q) = (params.k(), params.q());
    let num = shifted_series(g, k, q, opts)?;
    let den = pfq_repeated_with(&PfqSpec::new(g, k, q)?, opts)?;
    Ok(q * k.powi(g as i32) * num / den)
}
