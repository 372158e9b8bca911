//! Command-line front end: reproducible experiments over the limiting and
//! finite-n move-to-front search-cost laws, with CSV outputs and JSON
//! sidecars recording the fully resolved configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mtfcost::analytic::{
    lru_fault_probability, pac_fault_probability, transient_law, tv_distance_to_stationary,
    SearchCostLaw,
};
use mtfcost::exact::{exact_search_cost_law, exact_stationary_law, EXACT_N_CAP};
use mtfcost::popularity::{
    empirical_measure, make_iid_profile, parse_family, wasserstein1_to_law, Ordering,
    PopularityLaw,
};
use mtfcost::simulate::{batch_stationary, batch_transient, scaled_time};
use mtfcost::stats::{dkw_band, ks_distance, stochastic_order_check, EmpiricalCdf};

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Validation(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "mtfcost", version, about = "Move-to-front search-cost laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density/CDF grid and summary of the limiting law.
    Analytic(CommonArgs),
    /// Monte Carlo sample batches of the finite-n cost.
    Simulate(CommonArgs),
    /// Exact finite-n law (Poisson-binomial mixture).
    Exact(CommonArgs),
    /// Convergence report over an n-ladder.
    Convergence(CommonArgs),
    /// LRU/PAC fault probability.
    Lru(CommonArgs),
    /// Stochastic-order check across the three orderings.
    OrderCheck(CommonArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Config file, flat key=value lines or a JSON object; flags override.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Popularity family, e.g. exp(1), gamma(2), geometric(0.5), pareto(-0.5),
    /// powerlaw(0.5), beta(1,2), dirac(1), bernoulli(0.5), linpush(2).
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// ex | dec | inc
    #[arg(long)]
    ordering: Option<String>,
    /// Scaled time of the limit theorems.
    #[arg(long)]
    t: Option<f64>,
    /// Use the stationary law instead of a finite time.
    #[arg(long)]
    stationary: bool,
    /// Sample count.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cache fraction for the lru command.
    #[arg(long)]
    delta: Option<f64>,
    /// Cross-check outputs against the analytic law; mismatch exits 3.
    #[arg(long)]
    validate: bool,
    /// Use the Pareto incomplete-gamma branch in the lru command.
    #[arg(long)]
    pac: bool,
    /// Fix one weight vector for all samples instead of redrawing.
    #[arg(long)]
    quenched: bool,
    /// n values for the convergence command, comma-separated.
    #[arg(long)]
    ladder: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Fully resolved experiment configuration; serialized verbatim into every
/// JSON sidecar.
#[derive(Clone, Serialize)]
struct Config {
    family: String,
    n: usize,
    ordering: String,
    t: f64,
    stationary: bool,
    m: usize,
    seed: u64,
    delta: f64,
    validate: bool,
    pac: bool,
    quenched: bool,
    ladder: Vec<usize>,
    out: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            family: "exp(1)".into(),
            n: 1000,
            ordering: "ex".into(),
            t: 1.0,
            stationary: false,
            m: 10_000,
            seed: 1,
            delta: 0.5,
            validate: false,
            pac: false,
            quenched: false,
            ladder: vec![125, 250, 500, 1000, 2000],
            out: PathBuf::from("."),
        }
    }
}

fn parse_ladder(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| CliError::Usage(format!("bad ladder entry {p:?}: {e}")))
        })
        .collect()
}

impl Config {
    fn apply_key(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |e: &dyn std::fmt::Display| CliError::Usage(format!("config {key}={value}: {e}"));
        match key {
            "family" => self.family = value.trim_matches('"').to_string(),
            "n" => self.n = value.parse().map_err(|e| bad(&e))?,
            "ordering" => self.ordering = value.trim_matches('"').to_string(),
            "t" => {
                if value == "stationary" {
                    self.stationary = true;
                } else {
                    self.t = value.parse().map_err(|e| bad(&e))?;
                }
            }
            "stationary" => self.stationary = value.parse().map_err(|e| bad(&e))?,
            "m" => self.m = value.parse().map_err(|e| bad(&e))?,
            "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
            "delta" => self.delta = value.parse().map_err(|e| bad(&e))?,
            "validate" => self.validate = value.parse().map_err(|e| bad(&e))?,
            "pac" => self.pac = value.parse().map_err(|e| bad(&e))?,
            "quenched" => self.quenched = value.parse().map_err(|e| bad(&e))?,
            "ladder" => self.ladder = parse_ladder(value.trim_matches('"'))?,
            "out" => self.out = PathBuf::from(value.trim_matches('"')),
            _ => return Err(CliError::Usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)?;
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let value: serde_json::Value = serde_json::from_str(trimmed)
                .map_err(|e| CliError::Usage(format!("bad JSON config: {e}")))?;
            let obj = value
                .as_object()
                .ok_or_else(|| CliError::Usage("config JSON must be an object".into()))?;
            for (k, v) in obj {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                self.apply_key(k, &s)?;
            }
        } else {
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("bad config line {line:?}")))?;
                self.apply_key(k.trim(), v.trim())?;
            }
        }
        Ok(())
    }

    fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        if let Some(path) = &args.config {
            cfg.load_file(path)?;
        }
        if let Some(v) = &args.family {
            cfg.family = v.clone();
        }
        if let Some(v) = args.n {
            cfg.n = v;
        }
        if let Some(v) = &args.ordering {
            cfg.ordering = v.clone();
        }
        if let Some(v) = args.t {
            cfg.t = v;
        }
        if args.stationary {
            cfg.stationary = true;
        }
        if let Some(v) = args.m {
            cfg.m = v;
        }
        if let Some(v) = args.seed {
            cfg.seed = v;
        }
        if let Some(v) = args.delta {
            cfg.delta = v;
        }
        if args.validate {
            cfg.validate = true;
        }
        if args.pac {
            cfg.pac = true;
        }
        if args.quenched {
            cfg.quenched = true;
        }
        if let Some(v) = &args.ladder {
            cfg.ladder = parse_ladder(v)?;
        }
        if let Some(v) = &args.out {
            cfg.out = v.clone();
        }
        Ok(cfg)
    }

    fn law(&self) -> Result<Arc<dyn PopularityLaw>, CliError> {
        parse_family(&self.family).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn ordering_tag(&self) -> Result<Ordering, CliError> {
        self.ordering
            .parse()
            .map_err(|_| CliError::Usage(format!("bad ordering {:?} (ex|dec|inc)", self.ordering)))
    }

    fn search_cost_law(&self) -> Result<SearchCostLaw, CliError> {
        let law = self.law()?;
        if self.stationary {
            SearchCostLaw::stationary(law).map_err(|e| CliError::Usage(e.to_string()))
        } else {
            transient_law(law, self.ordering_tag()?, self.t)
                .map_err(|e| CliError::Usage(e.to_string()))
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn write_sidecar<T: Serialize>(dir: &Path, name: &str, payload: &T) -> Result<PathBuf, CliError> {
    let json = serde_json::to_string_pretty(payload)
        .map_err(|e| CliError::Io(format!("serializing sidecar: {e}")))?;
    write_file(dir, name, &format!("{json}\n"))
}

#[derive(Serialize)]
struct TimeScales {
    /// Scaled time of the limit theorems.
    t: f64,
    /// n·μ·t: the unit-total-rate horizon the samplers consume.
    t_unit_rate: f64,
    /// The same instant in the original time-scale of the raw weights.
    t_original_scale: f64,
}

fn time_scales(cfg: &Config, law: &dyn PopularityLaw) -> Result<TimeScales, CliError> {
    if cfg.stationary {
        return Ok(TimeScales {
            t: f64::INFINITY,
            t_unit_rate: f64::INFINITY,
            t_original_scale: f64::INFINITY,
        });
    }
    let profile = make_iid_profile(law, cfg.n, Ordering::Exchangeable, cfg.seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (unit, original) = scaled_time(&profile, law.mean(), cfg.t)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(TimeScales { t: cfg.t, t_unit_rate: unit, t_original_scale: original })
}

fn cmd_analytic(cfg: &Config) -> Result<(), CliError> {
    let sc = cfg.search_cost_law()?;
    let mut csv = String::from("x,density,cdf\n");
    let points = 201;
    for i in 0..points {
        let x = i as f64 / (points - 1) as f64;
        let _ = writeln!(csv, "{x},{},{}", sc.density(x), sc.cdf(x));
    }
    let grid = write_file(&cfg.out, "analytic.csv", &csv)?;

    let (tv_exact, tv_bound) = if cfg.stationary {
        (0.0, 0.0)
    } else {
        tv_distance_to_stationary(cfg.law()?, cfg.ordering_tag()?, cfg.t)
            .map_err(|e| CliError::Usage(e.to_string()))?
    };
    #[derive(Serialize)]
    struct Summary<'a> {
        config: &'a Config,
        threshold: f64,
        out_mass: f64,
        mean: f64,
        tv_exact: f64,
        tv_bound: f64,
    }
    write_sidecar(
        &cfg.out,
        "analytic.json",
        &Summary {
            config: cfg,
            threshold: sc.threshold,
            out_mass: sc.out_mass,
            mean: sc.mean(),
            tv_exact,
            tv_bound,
        },
    )?;
    println!(
        "analytic: threshold={:.6} out_mass={:.6} tv_exact={tv_exact:.6} grid={}",
        sc.threshold,
        sc.out_mass,
        grid.display()
    );
    Ok(())
}

fn cmd_simulate(cfg: &Config) -> Result<(), CliError> {
    let law = cfg.law()?;
    let ordering = cfg.ordering_tag()?;
    let batch = if cfg.stationary {
        batch_stationary(law.as_ref(), cfg.n, ordering, cfg.m, cfg.seed, cfg.quenched)
    } else {
        batch_transient(law.as_ref(), cfg.n, ordering, cfg.t, cfg.m, cfg.seed, cfg.quenched)
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut csv = String::from("value\n");
    for v in &batch.values {
        let _ = writeln!(csv, "{v}");
    }
    write_file(&cfg.out, "samples.csv", &csv)?;

    #[derive(Serialize)]
    struct Report {
        ks: f64,
        dkw_99: f64,
        out_fraction: f64,
        out_mass_analytic: f64,
        pass: bool,
    }
    let mut report = None;
    if cfg.validate {
        let sc = cfg.search_cost_law()?;
        let ecdf = EmpiricalCdf::new(&batch.values)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let ks = ks_distance(&ecdf, |x| sc.cdf(x));
        let out_fraction =
            batch.values.iter().filter(|v| **v > sc.threshold).count() as f64 / cfg.m as f64;
        // finite-n bias decays like 1/n on top of the DKW fluctuation band.
        let tolerance = dkw_band(cfg.m, 0.99).map_err(|e| CliError::Usage(e.to_string()))?
            + 40.0 / cfg.n as f64;
        let pass = ks <= tolerance;
        report = Some(Report {
            ks,
            dkw_99: dkw_band(cfg.m, 0.99).unwrap(),
            out_fraction,
            out_mass_analytic: sc.out_mass,
            pass,
        });
        if !pass {
            eprintln!("validation failed: KS {ks:.5} > tolerance {tolerance:.5}");
        }
    }

    #[derive(Serialize)]
    struct Sidecar<'a> {
        config: &'a Config,
        descriptor: String,
        times: TimeScales,
        count: usize,
        validation: Option<Report>,
    }
    let failed = report.as_ref().map(|r| !r.pass).unwrap_or(false);
    write_sidecar(
        &cfg.out,
        "samples.json",
        &Sidecar {
            config: cfg,
            descriptor: batch.profile_descriptor.clone(),
            times: time_scales(cfg, law.as_ref())?,
            count: batch.count(),
            validation: report,
        },
    )?;
    println!("simulate: {} samples of {}", batch.count(), batch.profile_descriptor);
    if failed {
        return Err(CliError::Validation("sample batch failed KS validation".into()));
    }
    Ok(())
}

fn cmd_exact(cfg: &Config) -> Result<(), CliError> {
    if cfg.n > EXACT_N_CAP {
        return Err(CliError::Usage(format!(
            "exact oracle capped at n = {EXACT_N_CAP}, got {}",
            cfg.n
        )));
    }
    let law = cfg.law()?;
    let ordering = cfg.ordering_tag()?;
    let profile = make_iid_profile(law.as_ref(), cfg.n, ordering, cfg.seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mu = law.mean();
    let t_unit = cfg.n as f64 * mu * cfg.t;
    let (pe, po) = if cfg.stationary {
        let total = exact_stationary_law(&profile).map_err(|e| CliError::Usage(e.to_string()))?;
        let zeros = mtfcost::exact::DiscretePmf { probs: vec![0.0; cfg.n] };
        (total, zeros)
    } else {
        exact_search_cost_law(&profile, t_unit).map_err(|e| CliError::Usage(e.to_string()))?
    };
    let mut csv = String::from("k,p_equilibrium,p_out,p_total\n");
    for k in 0..cfg.n {
        let e = pe.probs.get(k).copied().unwrap_or(0.0);
        let o = po.probs.get(k).copied().unwrap_or(0.0);
        let _ = writeln!(csv, "{},{e},{o},{}", k + 1, e + o);
    }
    write_file(&cfg.out, "exact.csv", &csv)?;
    #[derive(Serialize)]
    struct Sidecar<'a> {
        config: &'a Config,
        times: TimeScales,
        mean_cost: f64,
        equilibrium_mass: f64,
    }
    let eq_mass: f64 = pe.probs.iter().sum();
    let mean_cost: f64 = (0..cfg.n)
        .map(|k| {
            (k as f64 + 1.0)
                * (pe.probs.get(k).copied().unwrap_or(0.0)
                    + po.probs.get(k).copied().unwrap_or(0.0))
        })
        .sum();
    write_sidecar(
        &cfg.out,
        "exact.json",
        &Sidecar {
            config: cfg,
            times: time_scales(cfg, law.as_ref())?,
            mean_cost,
            equilibrium_mass: eq_mass,
        },
    )?;
    println!("exact: n={} mean_cost={mean_cost:.4} equilibrium_mass={eq_mass:.4}", cfg.n);
    Ok(())
}

fn cmd_convergence(cfg: &Config) -> Result<(), CliError> {
    let law = cfg.law()?;
    let ordering = cfg.ordering_tag()?;
    let sc = cfg.search_cost_law()?;
    let mut csv = String::from("n,w1_empirical_measure,ks_to_analytic,out_mass_error\n");
    let mut rows = vec![];
    for &n in &cfg.ladder {
        let profile = make_iid_profile(law.as_ref(), n, ordering, cfg.seed)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let nu = empirical_measure(&profile, law.mean())
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let w1 = wasserstein1_to_law(&nu, law.as_ref(), 4096);
        let batch = if cfg.stationary {
            batch_stationary(law.as_ref(), n, ordering, cfg.m, cfg.seed, cfg.quenched)
        } else {
            batch_transient(law.as_ref(), n, ordering, cfg.t, cfg.m, cfg.seed, cfg.quenched)
        }
        .map_err(|e| CliError::Usage(e.to_string()))?;
        let ecdf = EmpiricalCdf::new(&batch.values)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let ks = ks_distance(&ecdf, |x| sc.cdf(x));
        let out_frac =
            batch.values.iter().filter(|v| **v > sc.threshold).count() as f64 / cfg.m as f64;
        let out_err = out_frac - sc.out_mass;
        let _ = writeln!(csv, "{n},{w1},{ks},{out_err}");
        rows.push((n, w1, ks, out_err));
        println!("n={n}: W1={w1:.5} KS={ks:.5} out_err={out_err:+.5}");
    }
    write_file(&cfg.out, "convergence.csv", &csv)?;
    #[derive(Serialize)]
    struct Sidecar<'a> {
        config: &'a Config,
        rows: Vec<(usize, f64, f64, f64)>,
    }
    write_sidecar(&cfg.out, "convergence.json", &Sidecar { config: cfg, rows })?;
    Ok(())
}

fn cmd_lru(cfg: &Config) -> Result<(), CliError> {
    let law = cfg.law()?;
    let ordering = cfg.ordering_tag()?;
    let t = if cfg.stationary { f64::INFINITY } else { cfg.t };
    let fault = lru_fault_probability(Arc::clone(&law), ordering, t, cfg.delta)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut pac = None;
    if cfg.pac {
        let alpha = parse_pareto_alpha(&cfg.family)?;
        let value = pac_fault_probability(alpha, cfg.t, cfg.delta)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        // cross-check the closed form against the density-tail route.
        let tail = lru_fault_probability(law, Ordering::Decreasing, cfg.t, cfg.delta)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if (value - tail).abs() > 1e-6 {
            return Err(CliError::Validation(format!(
                "PAC closed form {value} and density tail {tail} disagree"
            )));
        }
        pac = Some(value);
    }
    #[derive(Serialize)]
    struct Sidecar<'a> {
        config: &'a Config,
        fault_probability: f64,
        pac_fault_probability: Option<f64>,
    }
    write_sidecar(
        &cfg.out,
        "lru.json",
        &Sidecar { config: cfg, fault_probability: fault, pac_fault_probability: pac },
    )?;
    match pac {
        Some(p) => println!("{fault:.10} (pac branch {p:.10})"),
        None => println!("{fault:.10}"),
    }
    Ok(())
}

fn parse_pareto_alpha(family: &str) -> Result<f64, CliError> {
    let inner = family
        .trim()
        .strip_prefix("pareto(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| CliError::Usage("--pac requires family=pareto(alpha)".into()))?;
    inner
        .parse()
        .map_err(|e| CliError::Usage(format!("bad pareto alpha {inner:?}: {e}")))
}

fn cmd_order_check(cfg: &Config) -> Result<(), CliError> {
    if cfg.stationary {
        return Err(CliError::Usage("order-check needs a finite t".into()));
    }
    let law = cfg.law()?;
    let make = |ordering| {
        transient_law(Arc::clone(&law), ordering, cfg.t)
            .map_err(|e: mtfcost::analytic::AnalyticError| CliError::Usage(e.to_string()))
    };
    let dec = make(Ordering::Decreasing)?;
    let ex = make(Ordering::Exchangeable)?;
    let inc = make(Ordering::Increasing)?;
    let grid: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let slack = 1e-8;
    // S⁻ ≼ S^ex ≼ S⁺ in the stochastic order: F_dec ≥ F_ex ≥ F_inc.
    let ex_vs_dec = stochastic_order_check(|x| ex.cdf(x), |x| dec.cdf(x), &grid, slack);
    let inc_vs_ex = stochastic_order_check(|x| inc.cdf(x), |x| ex.cdf(x), &grid, slack);
    #[derive(Serialize)]
    struct Sidecar<'a> {
        config: &'a Config,
        max_violation_ex_vs_dec: f64,
        max_violation_inc_vs_ex: f64,
        pass: bool,
    }
    let pass = ex_vs_dec.pass && inc_vs_ex.pass;
    write_sidecar(
        &cfg.out,
        "order_check.json",
        &Sidecar {
            config: cfg,
            max_violation_ex_vs_dec: ex_vs_dec.max_violation,
            max_violation_inc_vs_ex: inc_vs_ex.max_violation,
            pass,
        },
    )?;
    println!(
        "order-check: F_dec >= F_ex (viol {:.2e} at x={}); F_ex >= F_inc (viol {:.2e} at x={})",
        ex_vs_dec.max_violation, ex_vs_dec.worst_x, inc_vs_ex.max_violation, inc_vs_ex.worst_x
    );
    if !pass {
        return Err(CliError::Validation("stochastic order violated".into()));
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let (args, f): (&CommonArgs, fn(&Config) -> Result<(), CliError>) = match &cli.command {
        Command::Analytic(a) => (a, cmd_analytic),
        Command::Simulate(a) => (a, cmd_simulate),
        Command::Exact(a) => (a, cmd_exact),
        Command::Convergence(a) => (a, cmd_convergence),
        Command::Lru(a) => (a, cmd_lru),
        Command::OrderCheck(a) => (a, cmd_order_check),
    };
    let cfg = Config::resolve(args)?;
    f(&cfg)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
