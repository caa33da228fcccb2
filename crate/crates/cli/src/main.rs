//! `melnikov3d`: Melnikov grids, perturbed surfaces, zero contours, lobe
//! volumes and displacement checks from the command line.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
//! failures.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use melnikov3d::quadrature::{PanelRule, Truncation};
use melnikov3d::{Error, Result};
use serde_json::{json, Map, Value};

use config::{Command, Kind, PRange};

#[derive(Parser)]
#[command(name = "melnikov3d", version, about = "Melnikov analysis of 2D invariant manifolds in 3D flows")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Melnikov function on a (p, alpha) grid.
    Melnikov(Common),
    /// Leading-order perturbed stable/unstable surfaces.
    Surface(Common),
    /// Zero contours of the Melnikov function.
    Contours(Common),
    /// Lobes between zero contours and their volumes.
    Lobes(Common),
    /// Direct-integration check of the O(eps^2) displacement error.
    Verify(Common),
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Melnikov(c) => (Command::Melnikov, c),
            Sub::Surface(c) => (Command::Surface, c),
            Sub::Contours(c) => (Command::Contours, c),
            Sub::Lobes(c) => (Command::Lobes, c),
            Sub::Verify(c) => (Command::Verify, c),
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Rule {
    Simpson,
    GaussLegendre,
}

#[derive(Args)]
struct Common {
    /// JSON file with config keys; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Flow model (hill-classical, hill-swirl).
    #[arg(long)]
    model: Option<String>,
    /// Rossby number of hill-swirl.
    #[arg(long = "R0")]
    r0: Option<f64>,
    /// Perturbation (gr, none, theta-only, positive-radial).
    #[arg(long)]
    perturbation: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Comma-separated perturbation amplitudes.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    eps: Option<Vec<f64>>,
    /// Grid in p as min:max:n.
    #[arg(long, allow_hyphen_values = true)]
    p: Option<PRange>,
    /// Number of alpha nodes on [0, 1).
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long, value_enum)]
    rule: Option<Rule>,
    /// Cut infinite tails at this distance from p instead of adaptively.
    #[arg(long)]
    truncation_radius: Option<f64>,
    /// Transversality threshold relative to max |grad M|.
    #[arg(long)]
    grad_threshold: Option<f64>,
    /// Polish contour vertices by re-quadrature.
    #[arg(long)]
    refine: bool,
    /// Verification point p,alpha,t (repeatable).
    #[arg(long = "at", value_name = "P,ALPHA,T", allow_hyphen_values = true)]
    at: Vec<String>,
    /// Additional random verification points.
    #[arg(long)]
    random_points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Distance in p between launch and target for verify.
    #[arg(long)]
    launch_depth: Option<f64>,
    /// Only the unstable surface is trusted for p above this (stable: below).
    #[arg(long, allow_hyphen_values = true)]
    p_limit: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_limit: Option<f64>,
    /// Skip the indexed triangle meshes.
    #[arg(long)]
    no_mesh: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a matplotlib script for the outputs.
    #[arg(long)]
    emit_plot_script: bool,
    /// Worker threads.
    #[arg(long, env = "MELNIKOV3D_THREADS")]
    threads: Option<usize>,
}

fn parse_point(s: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidParameter(format!("--at {s:?}: {e}")))?;
    <[f64; 3]>::try_from(v).map_err(|_| Error::InvalidParameter(format!("--at {s:?} needs p,alpha,t")))
}

impl Common {
    /// Only the flags actually given, as config keys.
    fn overrides(&self) -> Result<Map<String, Value>> {
        let mut m = Map::new();
        let mut set = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        if let Some(x) = &self.model {
            set("model", json!(x));
        }
        if let Some(x) = self.r0 {
            set("R0", json!(x));
        }
        if let Some(x) = &self.perturbation {
            set("perturbation", json!(x));
        }
        if let Some(x) = self.t {
            set("t", json!(x));
        }
        if let Some(x) = &self.eps {
            set("eps", json!(x));
        }
        if let Some(x) = self.p {
            set("p_range", json!(x));
        }
        if let Some(x) = self.alpha {
            set("n_alpha", json!(x));
        }
        if let Some(x) = self.kind {
            set("kind", json!(x));
        }
        let mut quad = Map::new();
        if let Some(x) = self.rel_tol {
            quad.insert("rel_tol".into(), json!(x));
        }
        if let Some(x) = self.abs_tol {
            quad.insert("abs_tol".into(), json!(x));
        }
        if let Some(x) = self.rule {
            let rule = match x {
                Rule::Simpson => PanelRule::AdaptiveSimpson,
                Rule::GaussLegendre => PanelRule::GaussLegendre32,
            };
            quad.insert("rule".into(), json!(rule));
        }
        if let Some(radius) = self.truncation_radius {
            quad.insert("truncation".into(), json!(Truncation::Fixed { radius }));
        }
        if !quad.is_empty() {
            set("quadrature", Value::Object(quad));
        }
        if let Some(x) = self.grad_threshold {
            set("grad_threshold", json!(x));
        }
        if self.refine {
            set("refine", json!(true));
        }
        if !self.at.is_empty() {
            let pts = self.at.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>>>()?;
            set("points", json!(pts));
        }
        if let Some(x) = self.random_points {
            set("random_points", json!(x));
        }
        if let Some(x) = self.seed {
            set("seed", json!(x));
        }
        if let Some(x) = self.launch_depth {
            set("launch_depth", json!(x));
        }
        let mut window = Map::new();
        if let Some(x) = self.p_limit {
            window.insert("p_limit".into(), json!(x));
        }
        if let Some(x) = self.t_limit {
            window.insert("t_limit".into(), json!(x));
        }
        if !window.is_empty() {
            set("window", Value::Object(window));
        }
        if self.no_mesh {
            set("mesh", json!(false));
        }
        if let Some(x) = &self.out {
            set("out_dir", json!(x));
        }
        if self.emit_plot_script {
            set("emit_plot_script", json!(true));
        }
        Ok(m)
    }
}

fn load(path: &PathBuf) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<Vec<String>> {
    let (command, common) = cli.command.split();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    let file = common.config.as_ref().map(load).transpose()?;
    let cfg = config::resolve(command, file.as_ref(), &common.overrides()?)?;
    commands::run(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            // unwritable outputs are a configuration problem too
            if e.is_config_error() || matches!(e, Error::Io(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
