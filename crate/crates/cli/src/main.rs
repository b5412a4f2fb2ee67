use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use irs_secrecy::experiments::{
    case_study_spec, emit_plot, parse_scheme_list, parse_value_list, run_case_study, run_sweep, SweepResults, SweepSpec,
    SweepVariable, Variant,
};
use irs_secrecy::{ScenarioConfig, Scheme};

const OUT_ENV: &str = "IRS_SECRECY_OUT";

#[derive(Parser)]
#[command(name = "irs-secrecy", version, about = "Monte-Carlo sum secrecy rate experiments for IRS-assisted MISO downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep transmit power or user count and write CSV, SVG and audit JSON.
    Sweep(SweepArgs),
    /// Sum secrecy rate versus K for the default, larger-BS and larger-IRS arrays.
    CaseStudy(CommonArgs),
    /// Render an SVG from a results CSV.
    Plot {
        csv: PathBuf,
        /// Defaults to the CSV path with an .svg extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// ScenarioConfig JSON; unspecified fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = OUT_ENV, default_value = "results")]
    out: PathBuf,
    /// Base seed; per-run seeds are derived from it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 50)]
    realizations: usize,
    /// Comma-separated subset of proposed,baseline1,baseline2.
    #[arg(long)]
    schemes: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// p_max_dbm or num_users.
    #[arg(long, default_value = "p_max_dbm")]
    variable: SweepVariable,
    /// Comma-separated, strictly increasing sweep values.
    #[arg(long)]
    values: Option<String>,
    /// Extra eavesdropper geometries as r_be:r_re pairs, e.g. 200:250,300:350.
    #[arg(long)]
    geometries: Option<String>,
    #[arg(long, default_value = "sweep")]
    name: String,
}

fn load_base(args: &CommonArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ScenarioConfig::from_json_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }
    Ok(cfg)
}

fn schemes(args: &CommonArgs) -> Result<Vec<Scheme>> {
    Ok(match &args.schemes {
        Some(s) => parse_scheme_list(s)?,
        None => Scheme::ALL.to_vec(),
    })
}

fn parse_geometries(s: &str) -> Result<Vec<Variant>> {
    s.split(',')
        .map(|pair| {
            let (be, re) = pair.trim().split_once(':').with_context(|| format!("geometry {pair:?} is not r_be:r_re"))?;
            let be: f64 = be.trim().parse().with_context(|| format!("bad r_be in {pair:?}"))?;
            let re: f64 = re.trim().parse().with_context(|| format!("bad r_re in {pair:?}"))?;
            Ok(Variant::geometry(be, re))
        })
        .collect()
}

fn report(results: &SweepResults, files: &[&Path]) {
    for series in results.series_names() {
        let means: Vec<String> = results
            .spec
            .values
            .iter()
            .map(|&v| results.mean(&series, v).map_or("-".into(), |m| format!("{m:.4}")))
            .collect();
        println!("{series:>18}: {}", means.join(" "));
    }
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn finish(results: &SweepResults) -> Result<()> {
    match results.failures() {
        0 => Ok(()),
        n => bail!("{n} of {} runs failed; see the audit log", results.runs.len()),
    }
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut spec = SweepSpec::new(args.variable, load_base(&args.common)?, &args.common.out);
    spec.name = args.name;
    spec.realizations = args.common.realizations;
    spec.schemes = schemes(&args.common)?;
    if let Some(v) = &args.values {
        spec.values = parse_value_list(v)?;
    }
    if let Some(g) = &args.geometries {
        spec.variants = parse_geometries(g)?;
    }
    let (results, out) = run_sweep(&spec)?;
    let mut files = vec![out.csv.as_path(), out.audit.as_path()];
    files.extend(out.svg.as_deref());
    report(&results, &files);
    finish(&results)
}

fn case_study(args: CommonArgs) -> Result<()> {
    let spec = case_study_spec(load_base(&args)?, schemes(&args)?, args.realizations, &args.out);
    let (results, out) = run_case_study(&spec)?;
    let mut files = vec![out.csv.as_path(), out.audit.as_path()];
    files.extend(out.svg.as_deref());
    report(&results, &files);
    finish(&results)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep(args) => sweep(args),
        Command::CaseStudy(args) => case_study(args),
        Command::Plot { csv, out } => {
            let svg = out.unwrap_or_else(|| csv.with_extension("svg"));
            emit_plot(&csv, &svg)?;
            println!("wrote {}", svg.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
