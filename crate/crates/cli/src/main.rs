use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rectify_core::group::{estimate_bch_constants, revalidate_bch_constants, AmbientSets, GroupId};
use rectify_core::groupoid::{attach_haar_density, build_core, validate_groupoid};
use rectify_core::harness::{
    persist_run, run_experiment, run_holo_bench, ExperimentConfig, HoloBenchConfig, EXIT_OTHER,
    EXIT_PRECONDITION,
};
use rectify_core::rectifier::{admissible_radius, contraction_threshold};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "rectify",
    version,
    about = "Rectify almost-morphisms of finite groupoids by core averaging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trace.csv and report.json.
    Run {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory; falls back to the config's `output`, then
        /// RECTIFY_OUT_DIR, then `rectify-out/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the BCH constants of a group and re-validate them on a
    /// disjoint seed.
    Constants {
        /// Group tag: u1, so2, so3, su2.
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0xb0c5)]
        seed: u64,
        #[arg(long, default_value_t = 1.25)]
        safety_factor: f64,
        #[arg(long, default_value_t = 1.5)]
        w_radius: f64,
        #[arg(long, default_value_t = 2.5)]
        k_radius: f64,
    },
    /// Run the holomorphic averaging bench.
    BenchHolo {
        #[arg(long)]
        config: PathBuf,
        /// Also write holo_report.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the groupoid, core and density axioms of a config without
    /// running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = match ExperimentConfig::from_json(&read(config)?) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit(EXIT_PRECONDITION));
        }
    };
    let dir = out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os("RECTIFY_OUT_DIR").map(|d| PathBuf::from(d).join(&cfg.name)))
        .unwrap_or_else(|| PathBuf::from("rectify-out").join(&cfg.name));
    let outcome = run_experiment(&cfg);
    persist_run(&outcome, &dir).with_context(|| format!("writing results to {}", dir.display()))?;
    for w in &outcome.report.warnings {
        eprintln!("warning: {w}");
    }
    print_json(&outcome.report)?;
    Ok(exit(outcome.report.exit_code))
}

fn constants(
    group: &str,
    samples: usize,
    seed: u64,
    safety_factor: f64,
    w_radius: f64,
    k_radius: f64,
) -> Result<ExitCode> {
    let id = GroupId::parse(group).with_context(|| format!("unknown group tag {group:?}"))?;
    let alg = rectify_core::group::default_algebra(id)?;
    let sets = AmbientSets::new(w_radius, k_radius)?;
    sets.check_against(&alg)?;
    let k = estimate_bch_constants(&alg, sets, samples, safety_factor, seed)?;
    let check = revalidate_bch_constants(&alg, sets, &k, samples, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    print_json(&json!({
        "algebra": alg,
        "constants": k,
        "admissible_radius": admissible_radius(&k),
        "contraction_threshold": contraction_threshold(&k),
        "revalidation": check,
        "revalidation_passed": check.passed(sets),
    }))?;
    Ok(exit(if check.passed(sets) { 0 } else { EXIT_OTHER }))
}

fn bench_holo(config: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = HoloBenchConfig::from_json(&read(config)?)?;
    let report = run_holo_bench(&cfg)?;
    if let Some(dir) = out {
        fs::create_dir_all(&dir)?;
        let tmp = dir.join(".holo_report.json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(&report)? + "\n")?;
        fs::rename(&tmp, dir.join("holo_report.json"))?;
    }
    print_json(&report)?;
    Ok(exit(if report.pass { 0 } else { EXIT_OTHER }))
}

fn validate(config: &Path) -> Result<ExitCode> {
    let cfg = match ExperimentConfig::from_json(&read(config)?) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit(EXIT_PRECONDITION));
        }
    };
    let g = Arc::new(cfg.groupoid.build()?);
    let groupoid = validate_groupoid(&g);
    let (core, density) = match build_core(g.clone(), &cfg.core.select(&g)) {
        Ok(core) => {
            let density = attach_haar_density(&core, &cfg.density)
                .err()
                .map(|e| e.to_string());
            (None, density)
        }
        Err(e) => (Some(e.to_string()), Some("not checked".to_string())),
    };
    let ok = groupoid.passed && core.is_none() && density.is_none();
    print_json(&json!({
        "name": cfg.name,
        "objects": g.object_count(),
        "arrows": g.arrow_count(),
        "groupoid": groupoid,
        "core_error": core,
        "density_error": density,
        "valid": ok,
    }))?;
    Ok(exit(if ok { 0 } else { EXIT_PRECONDITION }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Constants {
            group,
            samples,
            seed,
            safety_factor,
            w_radius,
            k_radius,
        } => constants(&group, samples, seed, safety_factor, w_radius, k_radius),
        Command::BenchHolo { config, out } => bench_holo(&config, out),
        Command::Validate { config } => validate(&config),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        exit(EXIT_OTHER)
    })
}
