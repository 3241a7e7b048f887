//! `ltlab` command line: argument parsing, dispatch and exit codes.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or the
//! numerics give up, 2 for usage and input errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ltlab_core::campaign::{run_campaign, CampaignConfig};
use ltlab_core::constants::{c_thm1, constants_entry, named_constants};
use ltlab_core::extremal::{nelder_mead, nelder_mead_restarts, sweep, Objective, SearchFamily, SearchResult, SearchSpace};
use ltlab_core::ltcheck::{check_lt_1d, check_theorem2_separable};
use ltlab_core::report::{emit_report, to_json, OutputFormat};
use ltlab_core::sobolev::{agmon_check, check_sobolev, gram_schmidt, projection_defect, random_system};
use ltlab_core::{Error, Grid, GridFunction, PotentialSpec};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "ltlab", version, about = "Numerical checks of Lieb-Thirring and matrix Sobolev inequalities")]
struct Cli {
    /// Write the report to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Semiclassical constant and bound for (d, gamma), plus the named constants.
    Constants {
        #[arg(long, default_value_t = 1)]
        d: u32,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        json: bool,
    },
    /// Lieb-Thirring check of a potential read from a JSON spec file.
    Check {
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// One or more exponents, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        gamma: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        d: u32,
        /// Second factor of a separable potential (d = 2).
        #[arg(long, value_name = "FILE")]
        sep: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        format: FormatArgs,
    },
    /// Lattice sweep of a potential family.
    Sweep {
        #[command(flatten)]
        search: SearchArgs,
        /// Lattice points per free parameter.
        #[arg(long, default_value_t = 91)]
        points: usize,
        #[command(flatten)]
        format: FormatArgs,
    },
    /// Matrix Sobolev check on an orthonormal system.
    Sobolev {
        /// Random bump functions, orthonormalized.
        #[arg(long, conflicts_with = "gaussian")]
        random: bool,
        /// The normalized Gaussian `pi^{-1/4} exp(-x^2/2)`.
        #[arg(long)]
        gaussian: bool,
        #[arg(long = "N", default_value_t = 1)]
        n: usize,
        #[arg(long = "M", default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sampled pairs for the projection-defect diagnostic.
        #[arg(long, default_value_t = 64)]
        pairs: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        json: bool,
    },
    /// Nelder-Mead search for ratio-maximizing parameters.
    Extremal {
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 500)]
        budget: usize,
        /// Start point, comma separated; defaults to the box centre.
        #[arg(long, value_delimiter = ',')]
        start: Option<Vec<f64>>,
        /// Additional seeded random restarts, run in parallel.
        #[arg(long, default_value_t = 0)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        format: FormatArgs,
    },
    /// Run a JSON campaign config.
    Campaign {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Box half-width.
    #[arg(long = "L", default_value_t = 20.0)]
    half_width: f64,
    /// Grid spacing.
    #[arg(long, default_value_t = 0.01)]
    h: f64,
}

impl GridArgs {
    fn grid(&self) -> ltlab_core::Result<Grid> {
        Grid::with_spacing(self.half_width, self.h)
    }
}

#[derive(Args, Debug)]
struct FormatArgs {
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
}

impl FormatArgs {
    fn format(&self) -> OutputFormat {
        match (self.json, self.csv) {
            (true, _) => OutputFormat::Json,
            (_, true) => OutputFormat::Csv,
            _ => OutputFormat::Human,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Json,
    Csv,
    Human,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
            Format::Human => OutputFormat::Human,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Family {
    Pt,
    GaussianWell,
    TwoGaussian,
    SquareWell,
}

impl Family {
    fn search_family(self) -> SearchFamily {
        match self {
            Family::Pt => SearchFamily::PoschlTeller,
            Family::GaussianWell => SearchFamily::GaussianWell,
            Family::TwoGaussian => SearchFamily::TwoGaussian,
            Family::SquareWell => SearchFamily::SquareWell,
        }
    }

    fn default_box(self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Family::Pt => (vec![0.1, 1.0], vec![1.0, 1.0]),
            Family::GaussianWell => (vec![0.1, 0.3], vec![10.0, 3.0]),
            Family::TwoGaussian => (vec![0.1, 0.3, 0.1, 0.3], vec![5.0, 2.0, 5.0, 2.0]),
            Family::SquareWell => (vec![0.1, 0.2], vec![10.0, 3.0]),
        }
    }
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, value_enum, default_value = "pt")]
    family: Family,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Lower parameter bounds, comma separated.
    #[arg(long, value_delimiter = ',')]
    lower: Option<Vec<f64>>,
    /// Upper parameter bounds, comma separated.
    #[arg(long, value_delimiter = ',')]
    upper: Option<Vec<f64>>,
    /// Required number of bound states.
    #[arg(long)]
    bound_states: Option<usize>,
    #[command(flatten)]
    grid: GridArgs,
}

impl SearchArgs {
    fn objective(&self) -> ltlab_core::Result<Objective> {
        let (lo, hi) = self.family.default_box();
        let mut space = SearchSpace::new(
            self.family.search_family(),
            self.lower.clone().unwrap_or(lo),
            self.upper.clone().unwrap_or(hi),
            self.gamma,
        )?;
        space.bound_states = self.bound_states;
        Objective::new(space, self.grid.grid()?)
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli.command) {
        Ok((text, pass)) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, &text),
                None => out.write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "ltlab: cannot write output: {e}");
                return EXIT_USAGE;
            }
            if pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            let _ = writeln!(err, "ltlab: {e}");
            match e {
                Error::InvalidArgument(_) | Error::Json(_) | Error::Io(_) | Error::Csv(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            }
        }
    }
}

fn read_spec(path: &Path) -> ltlab_core::Result<PotentialSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    PotentialSpec::from_json_str(&text)
}

fn json_line<T: Serialize + ?Sized>(value: &T) -> ltlab_core::Result<String> {
    Ok(to_json(value)? + "\n")
}

/// Returns the report text and whether every check passed.
fn execute(cmd: &Command) -> ltlab_core::Result<(String, bool)> {
    match cmd {
        Command::Constants { d, gamma, json } => {
            let entry = constants_entry(*d, *gamma)?;
            let named = named_constants();
            if *json {
                #[derive(Serialize)]
                struct Out<'a, A, B> {
                    entry: &'a A,
                    named: &'a B,
                }
                return Ok((json_line(&Out { entry: &entry, named: &named })?, true));
            }
            let text = format!(
                "d={} gamma={}\nLcl={:.7}\nbound={:.7}\nc_thm1={:.7}\nc_keller={:.7}\nR={:.7}\n2Lcl_1_1={:.7}\n",
                entry.d, entry.gamma, entry.lcl, entry.bound, named.c_thm1, named.c_keller, named.r, named.twice_lcl_1_1
            );
            Ok((text, true))
        }
        Command::Check { spec, gamma, d, sep, grid, format } => {
            let spec = read_spec(spec)?;
            let grid = grid.grid()?;
            let reports = match (d, sep) {
                (1, None) => gamma.iter().map(|&g| check_lt_1d(&spec, &grid, g)).collect::<Result<Vec<_>, _>>()?,
                (2, Some(sep)) => {
                    let spec2 = read_spec(sep)?;
                    gamma
                        .iter()
                        .map(|&g| check_theorem2_separable(&spec, &spec2, g, &grid))
                        .collect::<Result<Vec<_>, _>>()?
                }
                (2, None) => return Err(Error::InvalidArgument("--d 2 needs --sep SPEC2.json".into())),
                (1, Some(_)) => return Err(Error::InvalidArgument("--sep only applies with --d 2".into())),
                (d, _) => return Err(Error::InvalidArgument(format!("unsupported dimension {d}"))),
            };
            let pass = reports.iter().all(|r| r.pass);
            Ok((emit_report(&reports, format.format())?, pass))
        }
        Command::Sweep { search, points, format } => {
            let objective = search.objective()?;
            search_output(&sweep(&objective, *points)?, format.format())
        }
        Command::Extremal { search, budget, start, restarts, seed, format } => {
            let objective = search.objective()?;
            let space = objective.space();
            let start = start.clone().unwrap_or_else(|| {
                space.lower.iter().zip(&space.upper).map(|(lo, hi)| 0.5 * (lo + hi)).collect()
            });
            let mut best = nelder_mead(&objective, &start, *budget)?;
            for r in nelder_mead_restarts(&objective, *restarts, *seed, *budget)? {
                if r.best_ratio > best.best_ratio {
                    best = r;
                }
            }
            search_output(&best, format.format())
        }
        Command::Sobolev { random, gaussian, n, m, seed, pairs, grid, json } => {
            let grid = grid.grid()?;
            let sys = match (random, gaussian) {
                (_, true) => {
                    let f = GridFunction::from_real_fn(grid, |x| {
                        std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp()
                    });
                    gram_schmidt(&grid, 1, vec![f.values.clone()])?
                }
                (true, false) => random_system(&grid, *n, *m, *seed)?,
                (false, false) => return Err(Error::InvalidArgument("choose --random or --gaussian".into())),
            };
            let report = check_sobolev(&sys);
            let defect = projection_defect(&sys, *pairs, *seed);
            let agmon = if *gaussian { Some(agmon_check(&sys.component(0, 0))) } else { None };
            let pass = report.pass && agmon.as_ref().is_none_or(|a| a.pass);
            if *json {
                #[derive(Serialize)]
                struct Out<'a, R, A> {
                    #[serde(flatten)]
                    report: &'a R,
                    projection_defect: f64,
                    #[serde(skip_serializing_if = "Option::is_none")]
                    agmon: Option<A>,
                }
                return Ok((json_line(&Out { report: &report, projection_defect: defect, agmon })?, pass));
            }
            let mut text = format!(
                "N={} M={} h={} L={}\nlhs={:.10}\nrhs={:.10}\nslack={:.10}\ngram_defect={:.3e}\nprojection_defect={:.3e}\n",
                report.meta.n,
                report.meta.channels,
                report.meta.h,
                report.meta.half_width,
                report.lhs,
                report.rhs,
                report.slack,
                report.meta.gram_defect,
                defect
            );
            if let Some(a) = &agmon {
                text += &format!("agmon_sup={:.10}\nagmon_integral={:.10}\n", a.sup_sq, a.integral);
            }
            text += if pass { "PASS\n" } else { "FAIL\n" };
            Ok((text, pass))
        }
        Command::Campaign { config, format, seed, workers } => {
            let mut cfg = CampaignConfig::load(config)?;
            if let Some(f) = format {
                cfg.format = (*f).into();
            }
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            if workers.is_some() {
                cfg.workers = *workers;
            }
            let reports = run_campaign(&cfg)?;
            let pass = reports.iter().all(|r| r.pass);
            Ok((emit_report(&reports, cfg.format)?, pass))
        }
    }
}

/// A search passes unless a gamma = 1 ratio beats the proven constant.
fn search_output(result: &SearchResult, format: OutputFormat) -> ltlab_core::Result<(String, bool)> {
    let pass = result.gamma != 1.0 || result.best_ratio <= c_thm1() + 1e-6;
    let text = match format {
        OutputFormat::Json => json_line(result)?,
        OutputFormat::Csv => result.trace_csv(),
        OutputFormat::Human => {
            let names = result.family.param_names();
            let params: Vec<String> =
                names.iter().zip(&result.best_params).map(|(n, v)| format!("{n}={v:.6}")).collect();
            format!(
                "family={:?} gamma={}\nbest {}\nratio={:.7}\nevaluations={}\n{}",
                result.family,
                result.gamma,
                params.join(" "),
                result.best_ratio,
                result.evaluations,
                if result.rerun_finer { "re-evaluated on finer grid\n" } else { "" }
            )
        }
    };
    Ok((text, pass))
}
