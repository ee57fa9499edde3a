#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod family;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::commands::Report;
use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "phc-lab", version, about = "Numerical checks for pseudo-holomorphic curves near a vanishing circle")]
struct Cli {
    /// Flat key = value config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the summary and diagnostics as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quad_tol: Option<f64>,
    #[arg(long, global = true)]
    ode_tol: Option<f64>,
    #[arg(long, global = true)]
    residual_tol: Option<f64>,
    #[arg(long, global = true)]
    identity_tol: Option<f64>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    circle_length: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cone periods by quadrature, ODE and series.
    Period(commands::PeriodArgs),
    /// Sample a family on a parameter grid and write CSV.
    Surface(commands::SurfaceArgs),
    /// Pseudo-holomorphicity residual of a family.
    Verify(commands::VerifyArgs),
    /// σ(s) and μ(s) profiles around a point of the circle.
    Energy(commands::EnergyArgs),
    /// Limit data of the dilations at a point of the circle.
    Limit(commands::LimitArgs),
    /// Extract graph data and check the graph equations.
    Graph(commands::GraphArgs),
    /// Vertex-model eigenmode.
    Vertex(commands::VertexArgs),
    /// Closed-form geometry identities at random points.
    Identities(commands::IdentitiesArgs),
}

impl Cli {
    fn run_config(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.quad_tol {
            cfg.quad_tol = v;
        }
        if let Some(v) = self.ode_tol {
            cfg.ode_tol = v;
        }
        if let Some(v) = self.residual_tol {
            cfg.residual_tol = v;
        }
        if let Some(v) = self.identity_tol {
            cfg.identity_tol = v;
        }
        if let Some(v) = self.grid {
            cfg.grid = v;
        }
        if let Some(v) = self.circle_length {
            cfg.circle_length = Some(v);
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("PHC_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| anyhow::anyhow!("PHC_LAB_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn usage_error(e: &anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(2)
}

fn print_summary(report: &Report, as_json: bool) {
    if as_json {
        println!("{}", serde_json::to_string_pretty(&report.to_json()).unwrap_or_default());
        return;
    }
    println!("{}: {}", report.command, if report.ok() { "ok" } else { "FAILED" });
    if let Value::Object(map) = &report.summary {
        for (k, v) in map {
            match v {
                Value::String(s) => println!("  {k}: {s}"),
                other => println!("  {k}: {other}"),
            }
        }
    }
    for f in &report.files {
        println!("  wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.run_config() {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    if let Err(e) = init_threads() {
        return usage_error(&e);
    }
    let result = match &cli.command {
        Command::Period(a) => commands::period(a, &cfg),
        Command::Surface(a) => commands::surface(a, &cfg),
        Command::Verify(a) => commands::verify(a, &cfg),
        Command::Energy(a) => commands::energy(a, &cfg),
        Command::Limit(a) => commands::limit(a, &cfg),
        Command::Graph(a) => commands::graph(a, &cfg),
        Command::Vertex(a) => commands::vertex(a, &cfg),
        Command::Identities(a) => commands::identities(a, &cfg),
    };
    match result {
        Ok(report) => {
            print_summary(&report, cli.json);
            if report.ok() {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}", json!({ "command": report.command, "failures": report.failures }));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": format!("{e:#}") }));
            ExitCode::from(1)
        }
    }
}
