//! Command-line runner: config-driven builds, evaluation, exponent and
//! spectrum estimation, and the verification suite.

pub mod config;
pub mod verify;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::analysis::{
    dim_estimate, exponent_series_many, level_set, write_boxcount_csv, write_dims_json, write_exponents_csv,
    BoxCountSeries, Mode, Selector,
};
use crate::dyadic::DyadicPoint;
use crate::error::{Error, Result};
use crate::expansion::{format_f64, Expansion};
use crate::saturate::Built;

use config::{build, level_kind, resolve, ExperimentConfig, PointConfig};
use verify::{check_file, criteria, report, run_criterion, timings, Filter, Item};

#[derive(Debug, Parser)]
#[command(name = "wavesat", version, about = "Saturating wavelet series on Cantor-type sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving reports and data files.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Comma-separated criterion ids or tags (verify only).
    #[arg(long, global = true)]
    pub filter: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured builder and write the expansion and its certificate.
    Build,
    /// Partial sums and remainders at the configured points.
    Eval {
        /// Evaluate a stored expansion instead of building one.
        #[arg(long)]
        expansion: Option<PathBuf>,
    },
    /// Build, estimate exponents and compare them with the recipe's target.
    Exponents,
    /// Level-set extraction and box-counting dimensions.
    Spectrum,
    /// Run the acceptance suite.
    Verify {
        /// Additional expansion files to load and check.
        #[arg(long)]
        expansion: Vec<PathBuf>,
    },
}

/// Exit status for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Format(_) | Error::Parameter { .. } | Error::RegularityGate(_) | Error::Json(_) => 2,
        _ => 1,
    }
}

/// Run a parsed command line; returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.common.threads {
        // a second initialization only happens in tests, where the first pool is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let result = match &cli.command {
        Command::Build => with_config(&cli.common, cmd_build),
        Command::Eval { expansion } => with_config(&cli.common, |c, cfg| cmd_eval(c, cfg, expansion.as_deref())),
        Command::Exponents => with_config(&cli.common, cmd_exponents),
        Command::Spectrum => with_config(&cli.common, cmd_spectrum),
        Command::Verify { expansion } => cmd_verify(&cli.common, expansion),
    };
    match result {
        Ok(pass) => i32::from(!pass),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn with_config(common: &Common, f: impl FnOnce(&Common, &ExperimentConfig) -> Result<bool>) -> Result<bool> {
    let path = common.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let cfg = ExperimentConfig::load(path)?;
    std::fs::create_dir_all(&common.out_dir)?;
    f(common, &cfg)
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn certificate_items(b: &Built) -> Vec<Item> {
    b.checks.iter().map(|c| Item { name: format!("{}: {}", c.anchor, c.detail), target: "holds".into(), measured: c.holds.to_string(), tolerance: "0".into(), pass: c.holds }).collect()
}

fn run_report(cfg: &ExperimentConfig, b: Option<&Built>, items: &[Item]) -> Value {
    let pass = items.iter().all(|i| i.pass);
    json!({
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "builder": b.map(|b| b.expansion.builder.clone()),
        "target_exponent": b.and_then(|b| b.target_exponent).map(format_f64),
        "checks": items.iter().map(|i| json!({
            "name": i.name, "target": i.target, "measured": i.measured, "tolerance": i.tolerance,
            "status": if i.pass { "PASS" } else { "FAIL" },
        })).collect::<Vec<_>>(),
        "status": if pass { "PASS" } else { "FAIL" },
    })
}

fn print_items(items: &[Item]) {
    for i in items {
        println!("{} {} (target {}, measured {}, tolerance {})", if i.pass { "PASS" } else { "FAIL" }, i.name, i.target, i.measured, i.tolerance);
    }
}

fn cmd_build(common: &Common, cfg: &ExperimentConfig) -> Result<bool> {
    let r = resolve(cfg)?;
    let b = build(cfg, &r)?;
    let out = &common.out_dir;
    write_json(&out.join("expansion.json"), &b.expansion.to_json()?)?;
    write_json(&out.join("certificate.json"), &b.certificate())?;
    let items = certificate_items(&b);
    write_json(&out.join("report.json"), &run_report(cfg, Some(&b), &items))?;
    print_items(&items);
    Ok(items.iter().all(|i| i.pass))
}

fn points_of(cfg_points: Option<&Vec<PointConfig>>, b: Option<&Built>) -> Vec<DyadicPoint> {
    match (cfg_points, b) {
        (Some(ps), _) => ps.iter().map(PointConfig::point).collect(),
        (None, Some(b)) => b.witnesses.clone(),
        (None, None) => vec![DyadicPoint::zero(1, 0)],
    }
}

fn point_label(x: &DyadicPoint) -> String {
    let r = x.reduced();
    r.num.iter().map(|n| format!("{n}/2^{}", r.res)).collect::<Vec<_>>().join(";")
}

fn cmd_eval(common: &Common, cfg: &ExperimentConfig, stored: Option<&Path>) -> Result<bool> {
    let r = resolve(cfg)?;
    let (e, b) = match stored {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|err| Error::Format(format!("{}: {err}", path.display())))?;
            let v: Value = serde_json::from_str(&text).map_err(|err| Error::Format(format!("{}: {err}", path.display())))?;
            (Expansion::from_json(&v).map_err(|err| Error::Format(format!("{}: {err}", path.display())))?, None)
        }
        None => {
            let b = build(cfg, &r)?;
            (b.expansion.clone(), Some(b))
        }
    };
    let pts = points_of(cfg.estimate.as_ref().and_then(|x| x.points.as_ref()), b.as_ref());
    let j_max = cfg.estimate.as_ref().map_or(e.top_level() + 1, |x| x.j_max);
    let mut w = csv::Writer::from_path(common.out_dir.join("eval.csv"))?;
    w.write_record(["x", "j", "P_j", "R_j"])?;
    for x in &pts {
        let (ps, rs) = e.sums(x, j_max)?;
        for j in 0..=j_max as usize {
            w.write_record([point_label(x), j.to_string(), format_f64(ps[j]), format_f64(rs[j])])?;
        }
    }
    w.flush()?;
    Ok(true)
}

fn cmd_exponents(common: &Common, cfg: &ExperimentConfig) -> Result<bool> {
    let r = resolve(cfg)?;
    let est = cfg.estimate.as_ref().ok_or_else(|| Error::Config("exponents needs an \"estimate\" section".into()))?;
    let mode = Mode::parse(&est.mode)?;
    let b = build(cfg, &r)?;
    let pts = points_of(est.points.as_ref(), Some(&b));
    let series = exponent_series_many(&b.expansion, &pts, mode, est.j_min..=est.j_max, est.window)?;
    write_exponents_csv(&common.out_dir.join("exponents.csv"), &series)?;
    let mut items = certificate_items(&b);
    if let Some(target) = b.target_exponent {
        for s in &series {
            let name = format!("{} exponent at x = {} over [{}, {}]", mode.name(), point_label(&s.x), s.window.0, s.window.1);
            items.push(match (s.liminf_est, s.limsup_est) {
                (Some(lo), Some(hi)) => Item {
                    name,
                    target: format_f64(target),
                    measured: format!("[{}, {}]", format_f64(lo), format_f64(hi)),
                    tolerance: format_f64(est.tolerance),
                    pass: (lo - target).abs() <= est.tolerance && (hi - target).abs() <= est.tolerance,
                },
                _ => Item { name, target: format_f64(target), measured: "undefined".into(), tolerance: format_f64(est.tolerance), pass: false },
            });
        }
    }
    write_json(&common.out_dir.join("report.json"), &run_report(cfg, Some(&b), &items))?;
    print_items(&items);
    Ok(items.iter().all(|i| i.pass))
}

fn cmd_spectrum(common: &Common, cfg: &ExperimentConfig) -> Result<bool> {
    let r = resolve(cfg)?;
    let sp = cfg.spectrum.as_ref().ok_or_else(|| Error::Config("spectrum needs a \"spectrum\" section".into()))?;
    let b = build(cfg, &r)?;
    let grid = b.system.endpoint_grid(sp.grid_generation, sp.grid_generation)?;
    let set = level_set(&b.expansion, sp.beta, Mode::parse(&sp.mode)?, level_kind(&sp.kind)?, &grid, sp.j_min..=sp.j_max, sp.tolerance)?;
    let series = BoxCountSeries::for_points(&set, &sp.box_levels);
    write_boxcount_csv(&common.out_dir.join("boxcount.csv"), &series, &Selector::All)?;
    let mut items = vec![Item {
        name: format!("level set size on {} grid points", grid.len()),
        target: "> 0".into(),
        measured: set.len().to_string(),
        tolerance: "0".into(),
        pass: !set.is_empty(),
    }];
    if !set.is_empty() {
        let est = dim_estimate(&series, &Selector::All)?;
        write_dims_json(&common.out_dir.join("dims.json"), &est)?;
        items.push(Item {
            name: "level-set box-count slope".into(),
            target: "reported".into(),
            measured: format_f64(est.least_squares),
            tolerance: "0".into(),
            pass: true,
        });
    }
    write_json(&common.out_dir.join("report.json"), &run_report(cfg, Some(&b), &items))?;
    print_items(&items);
    Ok(items.iter().all(|i| i.pass))
}

fn cmd_verify(common: &Common, files: &[PathBuf]) -> Result<bool> {
    let filter = Filter::parse(common.filter.as_deref());
    let mut outcomes = Vec::new();
    for c in criteria().iter().filter(|c| filter.selects(c)) {
        let o = run_criterion(c);
        println!("{} criterion {}: {}", if o.pass() { "PASS" } else { "FAIL" }, o.id, o.title);
        if let Some(e) = &o.error {
            println!("  error: {e}");
        }
        outcomes.push(o);
    }
    let file_outcomes: Vec<_> = files.iter().map(|p| check_file(p)).collect();
    for f in &file_outcomes {
        println!("{} file {}", if f.pass() { "PASS" } else { "FAIL" }, f.path.display());
        if let Some(e) = &f.error {
            println!("  error: {e}");
        }
    }
    let rep = report(&outcomes, &file_outcomes);
    write_json(&common.out_dir.join("report.json"), &rep)?;
    write_json(&common.out_dir.join("timings.json"), &timings(&outcomes))?;
    Ok(rep["summary"]["failed"] == 0)
}
