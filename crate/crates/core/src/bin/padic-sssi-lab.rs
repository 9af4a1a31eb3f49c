use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use padic_sssi::diagnostics;
use padic_sssi::experiment::{self, ExperimentConfig, Scenario};
use padic_sssi::export::{self, Dump};
use padic_sssi::tree::{self, LazyLevels};
use padic_sssi::{Error, IncrementLaw, PadicContext, TreeSpec};

const EXIT_CONFIG: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_CHECK: u8 = 4;
const THREADS_ENV: &str = "PADIC_SSSI_THREADS";

#[derive(Parser)]
#[command(name = "padic-sssi-lab", version, about = "p-adic sssi simulation and almost-periodicity diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 4 when a scenario expectation fails.
        #[arg(long)]
        check: bool,
    },
    /// Simulate one path and dump it.
    Simulate {
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, default_value_t = 0.7)]
        hurst: f64,
        #[arg(long, default_value_t = 12)]
        kmax: usize,
        #[arg(long, value_enum, default_value_t = LawArg::Gaussian)]
        law: LawArg,
        /// Pareto exponent, or Gaussian standard deviation.
        #[arg(long)]
        param: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1024)]
        horizon: usize,
        #[arg(long, value_enum, default_value_t = DumpFormat::Csv)]
        format: DumpFormat,
        /// Output file; stdout when omitted (csv only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the deterministic diagnostics on a sequence read from CSV.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long = "epsilon", default_values_t = vec![0.5])]
        epsilons: Vec<f64>,
        #[arg(long)]
        tau_max: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        /// Translate used for the seminorm profiles.
        #[arg(long, default_value_t = 1)]
        tau: usize,
        #[arg(long)]
        k_max: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    Gaussian,
    Pareto,
    Rademacher,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpFormat {
    Csv,
    Bin,
}

fn exit_code(err: &Error) -> u8 {
    if err.is_resource_cap() {
        EXIT_RESOURCE
    } else {
        match err {
            Error::Io(_) => 1,
            _ => EXIT_CONFIG,
        }
    }
}

fn configure_threads(requested: Option<usize>) {
    let env = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0);
    let n = match (requested, env) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    if let Some(n) = n {
        // a second call fails harmlessly if the pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(config: PathBuf, scenario: Option<String>, seed: Option<u64>, out: Option<PathBuf>, check: bool) -> Result<u8, Error> {
    let mut cfg = ExperimentConfig::from_json_file(&config)?;
    if let Some(s) = scenario {
        cfg.scenario = Some(s.parse::<Scenario>()?);
    }
    if seed.is_some() {
        cfg.seed = seed;
    }
    if out.is_some() {
        cfg.out_dir = out;
    }
    let resolved = cfg.resolve()?;
    configure_threads(resolved.threads);
    let outcome = experiment::run_scenario(&resolved)?;
    outcome.write(&resolved.out_dir)?;
    for c in &outcome.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}: {}", c.name, c.detail);
    }
    for n in &outcome.notes {
        eprintln!("note: {n}");
    }
    if check && !outcome.all_checks_pass() {
        return Ok(EXIT_CHECK);
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    p: u64,
    hurst: f64,
    kmax: usize,
    law: LawArg,
    param: Option<f64>,
    seed: u64,
    horizon: usize,
    format: DumpFormat,
    out: Option<PathBuf>,
) -> Result<u8, Error> {
    let law = match law {
        LawArg::Gaussian => IncrementLaw::Gaussian { sigma: param.unwrap_or(1.0) },
        LawArg::Pareto => IncrementLaw::SymmetricPareto { alpha: param.unwrap_or(1.5) },
        LawArg::Rademacher => IncrementLaw::Rademacher,
    };
    let spec = TreeSpec::new(p, hurst, kmax, law, seed)?;
    configure_threads(None);
    let path = tree::path(&LazyLevels::new(&spec)?, horizon)?;
    match (format, out) {
        (DumpFormat::Csv, None) => export::write_path_csv(&path, io::stdout().lock())?,
        (DumpFormat::Csv, Some(o)) => export::write_path_csv(&path, BufWriter::new(File::create(o)?))?,
        (DumpFormat::Bin, Some(o)) => export::write_binary(&Dump::Path(path), BufWriter::new(File::create(o)?))?,
        (DumpFormat::Bin, None) => {
            return Err(Error::InvalidParameter {
                name: "out",
                reason: "binary dumps need an output file".into(),
            })
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    input: PathBuf,
    p: u64,
    epsilons: Vec<f64>,
    tau_max: Option<usize>,
    q: f64,
    tau: usize,
    k_max: Option<u32>,
    out: Option<PathBuf>,
) -> Result<u8, Error> {
    let f = export::read_series_csv(File::open(&input)?)?;
    if f.len() < 2 {
        return Err(Error::EmptySample);
    }
    let ctx = PadicContext::new(p)?;
    let tau_max = tau_max.unwrap_or((f.len() - 1).min(1000));
    let mut bohr = Vec::new();
    for &eps in &epsilons {
        let r = diagnostics::bohr_translation_set(&f, eps, tau_max)?;
        bohr.push(json!({"epsilon": eps, "tau_max": tau_max, "accepted": r.taus.len(), "max_gap": r.max_gap}));
    }
    let curve = diagnostics::modulus_curve(&f, &ctx);
    let omega: Vec<f64> = match k_max {
        Some(k) => curve.values.iter().copied().take(k as usize + 1).collect(),
        None => curve.values.clone(),
    };
    let u = diagnostics::translate_diff(&f, tau)?;
    let grid = diagnostics::dyadic_grid(u.len());
    let weyl = diagnostics::weyl_profile(&u, q, &grid)?;
    let besi = diagnostics::besicovitch_profile(&u, q, &grid)?;
    let report = json!({
        "version": padic_sssi::VERSION,
        "input": input,
        "length": f.len(),
        "p": p,
        "sup_norm": diagnostics::sup_norm(&f),
        "bohr": bohr,
        "padic_modulus": omega,
        "weyl": weyl,
        "besicovitch": besi,
    });
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("summary.json"), &text)?;
            for prof in [&weyl, &besi] {
                let name = format!("{}.csv", format!("{:?}", prof.kind).to_lowercase());
                let mut w = csv::Writer::from_path(dir.join(name))?;
                w.write_record(["L", "value"])?;
                for (l, v) in prof.l_grid.iter().zip(&prof.values) {
                    w.write_record([l.to_string(), v.to_string()])?;
                }
                w.flush()?;
            }
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, scenario, seed, out, check } => run(config, scenario, seed, out, check),
        Command::Simulate { p, hurst, kmax, law, param, seed, horizon, format, out } => {
            simulate(p, hurst, kmax, law, param, seed, horizon, format, out)
        }
        Command::Analyze { input, p, epsilons, tau_max, q, tau, k_max, out } => {
            analyze(input, p, epsilons, tau_max, q, tau, k_max, out)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
