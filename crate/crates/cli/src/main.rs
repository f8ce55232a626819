//! `ngnb` command-line tool. Every command writes CSV (comma separated, LF
//! line endings, header row first) to stdout or `--out`.
//!
//! Exit codes: 0 success, 2 usage or domain error, 3 numerical failure.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ngnb::approx::{grid_reports, round2, summarize, GridPreset, GridSpec, PublishedTable};
use ngnb::distribution::fit_mle_with;
use ngnb::distribution::FitOptions;
use ngnb::input::{parse_counts, parse_real_list};
use ngnb::limits::convergence_profile;
use ngnb::{DistributionTable, Error, NgnbParams, SeriesOptions};

const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "ngnb", version, about = "NGNB distribution: exact moments, approximations, limits, fitting")]
struct Cli {
    /// Relative truncation tolerance for every series.
    #[arg(long, global = true, env = "NGNB_EPSILON", default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,

    /// Seed for commands that draw random numbers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write CSV here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Args)]
struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long)]
    k: f64,
    #[arg(long)]
    q: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<NgnbParams, Error> {
        NgnbParams::new(self.gamma, self.k, self.q)
    }
}

/// Comma-separated reals; wrapped so clap treats it as one value.
#[derive(Debug, Clone)]
struct RealList(Vec<f64>);

fn real_list(s: &str) -> Result<RealList, String> {
    parse_real_list(s).map(RealList).map_err(|e| e.to_string())
}

fn table_id(s: &str) -> Result<PublishedTable, String> {
    s.parse::<u32>()
        .ok()
        .and_then(PublishedTable::from_id)
        .ok_or_else(|| format!("table must be 1, 2 or 3, got `{s}`"))
}

fn preset(s: &str) -> Result<GridPreset, String> {
    GridPreset::from_name(s).ok_or_else(|| {
        let names: Vec<_> = GridPreset::ALL.iter().map(|p| p.name()).collect();
        format!("unknown preset `{s}`; expected one of {}", names.join(", "))
    })
}

#[derive(Debug, Subcommand)]
enum Command {
    /// pmf, cdf, survival and hazard for y = 0..=ymax.
    Pmf {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        ymax: u64,
    },
    /// Exact and approximate moments on the axes of one of the three tables.
    Table {
        #[arg(value_parser = table_id)]
        id: PublishedTable,
    },
    /// Error summary of the moment approximations over a grid, then one row per point.
    Errors {
        #[arg(long, value_parser = preset, conflicts_with_all = ["gammas", "qs", "ks"])]
        preset: Option<GridPreset>,
        #[arg(long, value_parser = real_list, allow_hyphen_values = true, requires_all = ["qs", "ks"])]
        gammas: Option<RealList>,
        #[arg(long, value_parser = real_list, requires_all = ["gammas", "ks"])]
        qs: Option<RealList>,
        #[arg(long, value_parser = real_list, requires_all = ["gammas", "qs"])]
        ks: Option<RealList>,
    },
    /// Hazard rates r(0..=ylimit), one column per gamma.
    HazardCurve {
        #[arg(long, value_parser = real_list, allow_hyphen_values = true, default_value = "-2,-1,1,2,3")]
        gammas: RealList,
        #[arg(long, default_value_t = 3.0)]
        k: f64,
        #[arg(long, default_value_t = 0.2)]
        q: f64,
        #[arg(long, default_value_t = 30)]
        ylimit: u64,
    },
    /// Total variation distance to the COM-Poisson limit along k with lambda = k^gamma q fixed.
    Converge {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_parser = real_list)]
        ks: RealList,
    },
    /// Draws by inverse transform.
    Sample {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        n: usize,
    },
    /// Maximum-likelihood fit to a single-column CSV with header `y`.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
}

/// Failure of a command: either a library error or a usage problem found
/// by the tool itself (unreadable file, bad tolerance).
enum Failure {
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn two_dp(x: f64) -> String {
    format!("{:.2}", round2(x))
}

fn cmd_pmf(params: NgnbParams, ymax: u64, eps: f64) -> Result<String, Failure> {
    let table = DistributionTable::build(params, eps)?;
    let mut out = String::from("y,pmf,cdf,survival,hazard\n");
    for y in 0..=ymax {
        let hazard = table.hazard(y)?;
        writeln!(out, "{y},{},{},{},{}", sci(table.pmf(y)), sci(table.cdf(y)), sci(table.survival(y)), sci(hazard))
            .unwrap();
    }
    Ok(out)
}

fn cmd_table(id: PublishedTable, eps: f64) -> Result<String, Failure> {
    let reports = grid_reports(&id.grid(), eps)?;
    let mut out = String::from(
        "q,k,gamma,mean_exact,mean_approx,var_exact,var_approx,\
         mean_exact_2dp,mean_approx_2dp,var_exact_2dp,var_approx_2dp\n",
    );
    for r in &reports {
        let p = r.params;
        let vals = [r.mean_exact, r.mean_approx, r.var_exact, r.var_approx];
        let full: Vec<String> = vals.iter().map(|&v| sci(v)).collect();
        let short: Vec<String> = vals.iter().map(|&v| two_dp(v)).collect();
        writeln!(out, "{},{},{},{},{}", p.q(), p.k(), p.gamma(), full.join(","), short.join(",")).unwrap();
    }
    Ok(out)
}

fn cmd_errors(grid: GridSpec, eps: f64) -> Result<String, Failure> {
    let reports = grid_reports(&grid, eps)?;
    let s = summarize(&grid, &reports)?;
    let mut out = String::from(
        "row,q,k,gamma,mean_exact,mean_approx,mean_error,var_exact,var_approx,var_error,\
         n_points,mean_avg_error,mean_mse,mean_sd,var_avg_error,var_mse,var_sd\n",
    );
    let summary = [s.mean_avg_error, s.mean_mse, s.mean_sd, s.var_avg_error, s.var_mse, s.var_sd];
    let summary: Vec<String> = summary.iter().map(|&v| sci(v)).collect();
    writeln!(out, "summary,,,,,,,,,,{},{}", s.n_points, summary.join(",")).unwrap();
    for r in &reports {
        let p = r.params;
        let vals = [r.mean_exact, r.mean_approx, r.mean_error, r.var_exact, r.var_approx, r.var_error];
        let vals: Vec<String> = vals.iter().map(|&v| sci(v)).collect();
        writeln!(out, "point,{},{},{},{},,,,,,,", p.q(), p.k(), p.gamma(), vals.join(",")).unwrap();
    }
    Ok(out)
}

fn cmd_hazard_curve(gammas: &[f64], k: f64, q: f64, ylimit: u64, eps: f64) -> Result<String, Failure> {
    let params = gammas.iter().map(|&g| NgnbParams::new(g, k, q)).collect::<Result<Vec<_>, _>>()?;
    let curves = params
        .into_iter()
        .map(|p| DistributionTable::build(p, eps)?.hazard_curve(ylimit))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::from("y");
    for g in gammas {
        write!(out, ",gamma={g}").unwrap();
    }
    out.push('\n');
    for y in 0..=ylimit as usize {
        out.push_str(&y.to_string());
        for c in &curves {
            write!(out, ",{}", sci(c.points[y].1)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

fn cmd_converge(gamma: f64, lambda: f64, ks: &[f64], eps: f64) -> Result<String, Failure> {
    let profile = convergence_profile(gamma, lambda, ks, eps)?;
    let mut out = String::from("k,q,tv\n");
    for pt in profile {
        writeln!(out, "{},{},{}", pt.k, sci(pt.q), sci(pt.tv)).unwrap();
    }
    Ok(out)
}

fn cmd_sample(params: NgnbParams, n: usize, seed: u64, eps: f64) -> Result<String, Failure> {
    let draws = DistributionTable::build(params, eps)?.sample(n, seed);
    let mut out = String::with_capacity(2 + 4 * n);
    out.push_str("y\n");
    for y in draws {
        writeln!(out, "{y}").unwrap();
    }
    Ok(out)
}

fn cmd_fit(input: &PathBuf, eps: f64) -> Result<String, Failure> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", input.display())))?;
    let data = parse_counts(&text)?;
    let opts = FitOptions { series: SeriesOptions::with_epsilon(eps), ..FitOptions::default() };
    let r = fit_mle_with(&data, None, &opts)?;
    let p = r.params;
    Ok(format!(
        "gamma,k,q,log_likelihood,n\n{},{},{},{},{}\n",
        sci(p.gamma()),
        sci(p.k()),
        sci(p.q()),
        sci(r.log_likelihood),
        data.len()
    ))
}

fn run(cli: &Cli) -> Result<String, Failure> {
    let eps = cli.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Failure::Usage(format!("--epsilon must lie in (0, 1), got {eps}")));
    }
    match &cli.command {
        Command::Pmf { params, ymax } => cmd_pmf(params.params()?, *ymax, eps),
        Command::Table { id } => cmd_table(*id, eps),
        Command::Errors { preset, gammas, qs, ks } => {
            let grid = match (preset, gammas, qs, ks) {
                (Some(p), _, _, _) => p.grid(),
                (None, Some(g), Some(q), Some(k)) => GridSpec::new(g.0.clone(), q.0.clone(), k.0.clone()),
                _ => return Err(Failure::Usage("give either --preset or all of --gammas, --qs, --ks".into())),
            };
            grid.points()?;
            cmd_errors(grid, eps)
        }
        Command::HazardCurve { gammas, k, q, ylimit } => cmd_hazard_curve(&gammas.0, *k, *q, *ylimit, eps),
        Command::Converge { gamma, lambda, ks } => cmd_converge(*gamma, *lambda, &ks.0, eps),
        Command::Sample { params, n } => cmd_sample(params.params()?, *n, cli.seed, eps),
        Command::Fit { input } => cmd_fit(input, eps),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|csv| match &cli.out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth reporting
            let _ = stdout.write_all(csv.as_bytes());
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: UsageError: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
    }
}
