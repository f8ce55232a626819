//! Maximum-likelihood fitting by coarse grid search followed by
//! golden-section line searches.
//!
//! The search runs in `(gamma, ln k, logit q)`. Refinement starts with
//! golden-section searches along each coordinate axis. After every sweep
//! the net displacement is searched as well and replaces the direction
//! that gained most (Powell's scheme), so the strongly correlated
//! `gamma`/`k` ridge is followed instead of zig-zagged across. The
//! likelihood can have a second mode on the `gamma` boundary, so the best
//! few grid local maxima are all refined and the best result kept.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::{log_normalizing_constant_with, log_term, NgnbParams, SeriesOptions};

const INV_PHI: f64 = 0.618_033_988_749_894_8;
const GOLDEN: f64 = 1.618_033_988_749_895;
/// Directions are reset to the coordinate axes this often.
const RESET_EVERY: usize = 12;
/// Number of grid local maxima refined.
const REFINE_STARTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBounds {
    pub gamma: (f64, f64),
    pub k: (f64, f64),
    pub q: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        Self { gamma: (-3.0, 5.0), k: (0.1, 50.0), q: (0.001, 0.999) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub bounds: FitBounds,
    /// Grid points per axis.
    pub grid_points: usize,
    pub series: SeriesOptions,
    pub max_sweeps: usize,
    /// Sweeps stop once the log-likelihood gain is below this (absolute).
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bounds: FitBounds::default(),
            grid_points: 16,
            series: SeriesOptions::default(),
            max_sweeps: 400,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub params: NgnbParams,
    pub log_likelihood: f64,
    /// Best log-likelihood among the coarse grid points.
    pub grid_log_likelihood: f64,
    pub evaluations: usize,
}

fn logit(q: f64) -> f64 {
    (q / (1.0 - q)).ln()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Objective<'a> {
    /// (value, count) for each distinct observation.
    counts: Vec<(f64, f64)>,
    n: f64,
    series: &'a SeriesOptions,
    lo: [f64; 3],
    hi: [f64; 3],
}

impl Objective<'_> {
    fn params(&self, x: &[f64; 3]) -> Option<NgnbParams> {
        NgnbParams::new(x[0], x[1].exp(), logistic(x[2])).ok()
    }

    fn log_likelihood(&self, x: &[f64; 3]) -> f64 {
        let Some(p) = self.params(x) else {
            return f64::NEG_INFINITY;
        };
        let Ok(log_z) = log_normalizing_constant_with(&p, self.series) else {
            return f64::NEG_INFINITY;
        };
        let ll: f64 = self.counts.iter().map(|&(y, c)| c * log_term(y as u64, &p)).sum::<f64>()
            - self.n * log_z;
        if ll.is_finite() {
            ll
        } else {
            f64::NEG_INFINITY
        }
    }

    fn clamp(&self, x: &mut [f64; 3]) {
        for i in 0..3 {
            x[i] = x[i].clamp(self.lo[i], self.hi[i]);
        }
    }
}

/// Golden-section maximization of `f` on `[a, b]`; returns the best
/// abscissa seen together with its value.
fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64, evals: &mut usize) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    *evals += 2;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        *evals += 1;
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes the objective along `x + t d` inside the box. The bracket is
/// grown from `t = +-1` by golden-ratio steps until the value drops, then
/// narrowed by golden section. Returns the new point only if it improves
/// on `fx`.
fn line_max(obj: &Objective, x: &[f64; 3], fx: f64, d: &[f64; 3], evals: &mut usize) -> Option<([f64; 3], f64)> {
    // feasible interval of t
    let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..3 {
        if d[i] != 0.0 {
            let a = (obj.lo[i] - x[i]) / d[i];
            let b = (obj.hi[i] - x[i]) / d[i];
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
    }
    if !(t_lo <= 0.0 && t_hi >= 0.0) || t_hi - t_lo <= 0.0 {
        return None;
    }
    let at = |t: f64| -> [f64; 3] {
        let mut y: [f64; 3] = std::array::from_fn(|i| x[i] + t * d[i]);
        obj.clamp(&mut y);
        y
    };
    let f = |t: f64| obj.log_likelihood(&at(t));

    let (mut a, mut c) = (t_lo.max(-1.0), t_hi.min(1.0));
    let (fa, fc) = (f(a), f(c));
    *evals += 2;
    if fa > fx || fc > fx {
        // walk outwards in the improving direction until the value drops
        let sign = if fc >= fa { 1.0 } else { -1.0 };
        let limit = if sign > 0.0 { t_hi } else { t_lo };
        let (mut prev, mut cur, mut f_cur) = (0.0, sign * 1.0_f64.min(limit.abs()), fc.max(fa));
        loop {
            let next = (cur + GOLDEN * (cur - prev)).clamp(t_lo, t_hi);
            if next == cur {
                break;
            }
            let f_next = f(next);
            *evals += 1;
            prev = cur;
            cur = next;
            if f_next < f_cur {
                break;
            }
            f_cur = f_next;
        }
        let lo_end = prev - (cur - prev) / GOLDEN;
        if sign > 0.0 {
            a = lo_end.max(0.0);
            c = cur;
        } else {
            a = cur;
            c = lo_end.min(0.0);
        }
    }
    let tol = 1e-9 * (c - a).abs().max(1e-3);
    let (t, v) = golden_max(f, a.min(c), a.max(c), tol, evals);
    (v > fx).then(|| (at(t), v))
}

/// Powell-style refinement from `x`; returns the final point, its
/// log-likelihood and the number of evaluations spent.
fn refine(obj: &Objective, mut x: [f64; 3], mut ll: f64, spacing: &[f64; 3], opts: &FitOptions) -> ([f64; 3], f64, usize) {
    let mut evaluations = 0;
    let axes: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { spacing[i] } else { 0.0 }));
    let mut dirs = axes;
    let mut quiet_sweeps = 0;
    for sweep in 0..opts.max_sweeps {
        if sweep % RESET_EVERY == 0 {
            dirs = axes;
        }
        let start = x;
        let start_ll = ll;
        let mut best_gain = (0, 0.0);

        for (i, d) in dirs.iter().enumerate() {
            let before = ll;
            if let Some((y, v)) = line_max(obj, &x, ll, d, &mut evaluations) {
                x = y;
                ll = v;
            }
            if ll - before > best_gain.1 {
                best_gain = (i, ll - before);
            }
        }

        let disp: [f64; 3] = std::array::from_fn(|i| x[i] - start[i]);
        if disp.iter().any(|&d| d != 0.0) {
            if let Some((y, v)) = line_max(obj, &x, ll, &disp, &mut evaluations) {
                x = y;
                ll = v;
            }
            if best_gain.1 > 0.0 {
                dirs[best_gain.0] = disp;
            }
        }

        if ll - start_ll < opts.tolerance {
            quiet_sweeps += 1;
            if quiet_sweeps >= 2 {
                break;
            }
        } else {
            quiet_sweeps = 0;
        }
    }
    (x, ll, evaluations)
}

pub fn fit_mle(data: &[u64], init: Option<NgnbParams>) -> Result<FitResult> {
    fit_mle_with(data, init, &FitOptions::default())
}

pub fn fit_mle_with(data: &[u64], init: Option<NgnbParams>, opts: &FitOptions) -> Result<FitResult> {
    if data.is_empty() {
        return Err(Error::Domain("cannot fit an empty sample".into()));
    }
    if opts.grid_points < 2 {
        return Err(Error::Domain("grid needs at least two points per axis".into()));
    }
    opts.series.validate()?;
    let b = &opts.bounds;
    let valid_bounds = b.gamma.0 < b.gamma.1
        && b.k.0 > 0.0
        && b.k.0 < b.k.1
        && b.q.0 > 0.0
        && b.q.0 < b.q.1
        && b.q.1 < 1.0;
    if !valid_bounds {
        return Err(Error::Domain(format!("invalid search box {b:?}")));
    }

    let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
    for &y in data {
        *hist.entry(y).or_default() += 1;
    }
    let obj = Objective {
        counts: hist.into_iter().map(|(y, c)| (y as f64, c as f64)).collect(),
        n: data.len() as f64,
        series: &opts.series,
        lo: [b.gamma.0, b.k.0.ln(), logit(b.q.0)],
        hi: [b.gamma.1, b.k.1.ln(), logit(b.q.1)],
    };

    let m = opts.grid_points;
    let spacing: [f64; 3] = std::array::from_fn(|i| (obj.hi[i] - obj.lo[i]) / (m - 1) as f64);
    let axis = |i: usize, j: usize| obj.lo[i] + spacing[i] * j as f64;
    let grid: Vec<[f64; 3]> = (0..m * m * m)
        .map(|idx| [axis(0, idx / (m * m)), axis(1, (idx / m) % m), axis(2, idx % m)])
        .collect();
    let values: Vec<f64> = grid.par_iter().map(|x| obj.log_likelihood(x)).collect();
    let mut evaluations = grid.len();

    let grid_ll = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !grid_ll.is_finite() {
        return Err(Error::FitFailed("log-likelihood is non-finite at every grid point".into()));
    }

    // refine from the best few local maxima of the grid, plus `init`
    let index = |i: [usize; 3]| (i[0] * m + i[1]) * m + i[2];
    let mut starts: Vec<usize> = (0..grid.len())
        .filter(|&idx| {
            let v = values[idx];
            let pos = [idx / (m * m), (idx / m) % m, idx % m];
            v.is_finite()
                && (0..3).all(|a| {
                    let mut lower = pos;
                    let mut upper = pos;
                    let below = pos[a] == 0 || {
                        lower[a] -= 1;
                        values[index(lower)] <= v
                    };
                    let above = pos[a] == m - 1 || {
                        upper[a] += 1;
                        values[index(upper)] <= v
                    };
                    below && above
                })
        })
        .collect();
    starts.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    starts.truncate(REFINE_STARTS);
    let mut seeds: Vec<([f64; 3], f64)> = starts.iter().map(|&i| (grid[i], values[i])).collect();
    if let Some(p) = init {
        let mut x0 = [p.gamma(), p.k().ln(), logit(p.q())];
        obj.clamp(&mut x0);
        let ll0 = obj.log_likelihood(&x0);
        evaluations += 1;
        if ll0.is_finite() {
            seeds.push((x0, ll0));
        }
    }

    let refined: Vec<([f64; 3], f64, usize)> =
        seeds.par_iter().map(|&(x0, ll0)| refine(&obj, x0, ll0, &spacing, opts)).collect();
    let mut x = seeds[0].0;
    let mut ll = seeds[0].1;
    for (xr, llr, ev) in refined {
        evaluations += ev;
        if llr > ll {
            x = xr;
            ll = llr;
        }
    }

    let params = obj.params(&x).ok_or_else(|| Error::FitFailed("optimum left the parameter space".into()))?;
    Ok(FitResult { params, log_likelihood: ll, grid_log_likelihood: grid_ll, evaluations })
}
