use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skewprod::Cx;
use skewprod_cli::commands;
use skewprod_cli::config::{parse_cx, parse_cx3, EstimatorChoice, JobConfig, Preset};

#[derive(Parser)]
#[command(name = "skewprod", version, about = "Parameter spaces of quadratic skew products")]
struct Cli {
    #[command(flatten)]
    job: JobArgs,
    #[command(subcommand)]
    command: Command,
}

/// Overrides for [`JobConfig`] fields, applied on top of `--config`.
#[derive(Args)]
struct JobArgs {
    /// TOML job configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    preset: Option<Preset>,
    #[arg(long, global = true, value_parser = parse_cx, allow_hyphen_values = true)]
    d: Option<Cx>,
    /// Jonsson parameter.
    #[arg(long, global = true)]
    t: Option<f64>,
    #[arg(long, global = true)]
    radius: Option<f64>,
    /// `a;b;c`, each `re[,im]`.
    #[arg(long, global = true, value_parser = parse_cx3, allow_hyphen_values = true)]
    origin: Option<[Cx; 3]>,
    #[arg(long, global = true, value_parser = parse_cx3, allow_hyphen_values = true)]
    direction: Option<[Cx; 3]>,
    #[arg(long, global = true, value_parser = parse_cx, allow_hyphen_values = true)]
    center: Option<Cx>,
    #[arg(long, global = true)]
    half_width: Option<f64>,
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[arg(long, global = true)]
    budget: Option<u32>,
    #[arg(long, global = true)]
    estimator: Option<EstimatorChoice>,
    #[arg(long, global = true)]
    periodic_n: Option<u32>,
    #[arg(long, global = true)]
    mu_count: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    julia_samples: Option<usize>,
    #[arg(long, global = true, value_parser = parse_cx, allow_hyphen_values = true)]
    probe_z: Vec<Cx>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// `L_v` and its `dd^c` on the slice.
    RenderBif,
    /// Mask of parameters whose critical orbit over `z` stays bounded.
    RenderBz {
        #[arg(long, value_parser = parse_cx, allow_hyphen_values = true)]
        z: Cx,
    },
    /// C/D/M label of the parameter at slice coordinate `s`.
    Classify {
        #[arg(long, value_parser = parse_cx, allow_hyphen_values = true, default_value = "0")]
        s: Cx,
    },
    /// Base and vertical Lyapunov exponents at `s`.
    Lyap {
        #[arg(long, value_parser = parse_cx, allow_hyphen_values = true, default_value = "0")]
        s: Cx,
    },
    /// `L_n^v(·, η)` and its `dd^c` on the slice.
    Pern {
        #[arg(long)]
        n: u32,
        #[arg(long, value_parser = parse_cx, allow_hyphen_values = true, default_value = "0")]
        eta: Cx,
    },
    /// Bifurcation measure of the `a = 0` slice pushed to the line at infinity.
    Infinity {
        #[arg(long = "r-list", value_delimiter = ',', required = true)]
        r_list: Vec<f64>,
    },
    /// Component type, topology label and loop lift at `s`.
    Topology {
        #[arg(long, value_parser = parse_cx, allow_hyphen_values = true, default_value = "0")]
        probe: Cx,
    },
    /// Checks on the Jonsson family `g_t` at `--t`.
    Jonsson {
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
    /// HTTP tile and diagnostics server.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

impl JobArgs {
    fn resolve(&self) -> anyhow::Result<JobConfig> {
        let mut c = match &self.config {
            Some(p) => JobConfig::load(p)?,
            None => JobConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f.clone() {
                    c.$f = v;
                }
            )*};
        }
        set!(
            preset,
            t,
            radius,
            resolution,
            budget,
            estimator,
            periodic_n,
            mu_count,
            seed,
            julia_samples,
            output_dir
        );
        if self.d.is_some() {
            c.d = self.d;
        }
        if self.origin.is_some() {
            c.origin = self.origin;
        }
        if self.direction.is_some() {
            c.direction = self.direction;
        }
        if self.center.is_some() {
            c.center = self.center;
        }
        if self.half_width.is_some() {
            c.half_width = self.half_width;
        }
        if self.cache_dir.is_some() {
            c.cache_dir = self.cache_dir.clone();
        }
        if !self.probe_z.is_empty() {
            c.probe_z = self.probe_z.clone();
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = cli.job.resolve()?;
    cfg.validate()?;
    let summary = match cli.command {
        Command::RenderBif => commands::render_bif(&cfg)?,
        Command::RenderBz { z } => commands::render_bz(&cfg, z)?,
        Command::Classify { s } => commands::classify(&cfg, s)?,
        Command::Lyap { s } => commands::lyap(&cfg, s)?,
        Command::Pern { n, eta } => commands::pern(&cfg, n, eta)?,
        Command::Infinity { r_list } => commands::infinity(&cfg, &r_list)?,
        Command::Topology { probe } => commands::topology(&cfg, probe)?,
        Command::Jonsson { samples } => commands::jonsson(&cfg, cfg.t, samples)?,
        Command::Serve { port, host } => {
            let rt = tokio::runtime::Runtime::new()?;
            return rt.block_on(skewprod_cli::server::serve(cfg, &host, port));
        }
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
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
