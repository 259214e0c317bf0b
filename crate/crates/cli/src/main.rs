use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crisscross::bcp::{estimate_bcp, BcpConfig, RbmScheme};
use crisscross::config::Config;
use crisscross::experiments::{convergence_sweep, diagnostics_batch, ld_check, SweepConfig};
use crisscross::params::{compute_threshold_constants, kappa_for, make_r_network, DriftMode};
use crisscross::policy::PolicyKind;
use crisscross::sim::simulate;
use crisscross::Error;

#[derive(Parser)]
#[command(name = "crisscross", version, about = "Crisscross network simulator and heavy-traffic verification harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Grid,
    Bridge,
}

impl From<Scheme> for RbmScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Grid => RbmScheme::Grid,
            Scheme::Bridge => RbmScheme::Bridge,
        }
    }
}

#[derive(Args)]
struct BcpArgs {
    /// Euler step of the limit Brownian motion.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Number of Brownian paths.
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    /// Truncation horizon; `15 / gamma` when absent.
    #[arg(long)]
    bcp_horizon: Option<f64>,
    #[arg(long, value_enum, default_value_t = Scheme::Bridge)]
    scheme: Scheme,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one trajectory and write it as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Heavy-traffic index; the first entry of `r_list` when absent.
        #[arg(long)]
        r: Option<f64>,
        /// Overrides the configured policy.
        #[arg(long)]
        policy: Option<PolicyKind>,
    },
    /// Estimate J* for the configured limits.
    Bcp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bcp: BcpArgs,
    },
    /// Discounted cost of each policy at each r, against J*.
    Converge {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bcp: BcpArgs,
    },
    /// Print the threshold constants and the thresholds of each network.
    Thresholds {
        #[command(flatten)]
        common: Common,
    },
    /// Poisson two-sided deviation frequencies against the Chernoff bound.
    LdCheck {
        #[command(flatten)]
        common: Common,
        /// Poisson rate; `lambda1` of the configuration when absent.
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long = "t", value_delimiter = ',', default_values_t = vec![10.0, 25.0, 50.0])]
        t_grid: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// State-space-collapse diagnostics of the threshold policy at each r.
    Diagnostics {
        #[command(flatten)]
        common: Common,
        /// Scaled time window.
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// Level multiplier of the idle-time integral; the computed
        /// constant when absent.
        #[arg(long)]
        d: Option<f64>,
        /// Replications per r; `replications` of the configuration when
        /// absent.
        #[arg(long)]
        reps: Option<usize>,
    },
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn bcp_config(cfg: &Config, seed: u64, args: &BcpArgs) -> BcpConfig {
    BcpConfig {
        dt: args.dt,
        horizon: args.bcp_horizon.unwrap_or(15.0 / cfg.gamma),
        n_paths: args.paths,
        seed,
        scheme: args.scheme.into(),
    }
}

fn run(cmd: Cmd) -> Result<(Vec<u8>, Option<PathBuf>), Error> {
    let common = match &cmd {
        Cmd::Simulate { common, .. }
        | Cmd::Bcp { common, .. }
        | Cmd::Converge { common, .. }
        | Cmd::Thresholds { common }
        | Cmd::LdCheck { common, .. }
        | Cmd::Diagnostics { common, .. } => common,
    };
    let cfg = Config::load(&common.config)?;
    let seed = common.seed.unwrap_or(cfg.seed);
    let limits = cfg.limits();
    let mut out = Vec::new();

    match &cmd {
        Cmd::Simulate { r, policy, .. } => {
            let r = r.unwrap_or(cfg.r_list[0]);
            let net = make_r_network(limits, r, cfg.ell0, cfg.c, DriftMode::Constant)?;
            let policy = policy.unwrap_or(cfg.primary_policy());
            let tr = simulate(&net, &policy.build(&net), r * r * cfg.horizon, seed)?;
            tr.write_csv(&mut out)?;
        }
        Cmd::Bcp { bcp, .. } => {
            let est = estimate_bcp(&limits, &bcp_config(&cfg, seed, bcp))?;
            let j = est.j_star;
            writeln!(out, "mean,stderr,n_paths,dt,horizon,truncation_bound")?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                j.mean,
                opt(j.stderr),
                j.n_paths,
                est.dt,
                j.horizon,
                j.truncation_bound
            )?;
        }
        Cmd::Converge { bcp, .. } => {
            let sweep = SweepConfig {
                ell0: cfg.ell0,
                c: cfg.c,
                horizon: cfg.horizon,
                replications: cfg.replications,
                seed,
                bcp: bcp_config(&cfg, seed, bcp),
            };
            convergence_sweep(&limits, &cfg.policies(), &cfg.r_list, &sweep)?.write_csv(&mut out)?;
        }
        Cmd::Thresholds { .. } => {
            let k = compute_threshold_constants(limits)?;
            let nets = cfg
                .r_list
                .iter()
                .map(|&r| {
                    let net = make_r_network(limits, r, cfg.ell0, cfg.c, DriftMode::Constant)?;
                    Ok(serde_json::json!({ "r": r, "L": net.lower, "C": net.upper }))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let doc = serde_json::json!({
                "constants": k,
                "ell0": cfg.ell0,
                "c": cfg.c,
                "kappa_for_c": kappa_for(&limits, cfg.c, k.theta3),
                "ell0_below_ell_bar": cfg.ell0 < k.ell_bar,
                "networks": nets,
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            out.push(b'\n');
        }
        Cmd::LdCheck { rate, eps, t_grid, samples, .. } => {
            let rows = ld_check(rate.unwrap_or(limits.lambda[0]), *eps, t_grid, *samples, seed)?;
            writeln!(out, "t,empirical,bound,n_samples")?;
            for row in rows {
                writeln!(out, "{},{},{},{}", row.t, row.empirical, row.bound, row.n_samples)?;
            }
        }
        Cmd::Diagnostics { t_end, d, reps, .. } => {
            let k = compute_threshold_constants(limits)?;
            let d = d.unwrap_or(k.d);
            let mut text = String::from(
                "r,n_reps,collapse_sup1,collapse_sup1_se,collapse_sup3,collapse_sup3_se,idle_mass_y,idle_mass_y_se,\
                 product_sup,product_sup_se,event_frequency,event_level,bound,bound_informative,fluid_deviation,fluid_deviation_se\n",
            );
            for &r in &cfg.r_list {
                let net = make_r_network(limits, r, cfg.ell0, cfg.c, DriftMode::Constant)?;
                let s = diagnostics_batch(&net, &k, d, *t_end, reps.unwrap_or(cfg.replications), seed)?;
                writeln!(
                    text,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    s.r,
                    s.n_reps,
                    s.collapse_sup1.mean,
                    s.collapse_sup1.stderr,
                    s.collapse_sup3.mean,
                    s.collapse_sup3.stderr,
                    s.idle_mass_y.mean,
                    s.idle_mass_y.stderr,
                    s.product_sup.mean,
                    s.product_sup.stderr,
                    s.event_frequency,
                    s.event_level,
                    s.bound.value,
                    s.bound.informative,
                    s.fluid_deviation.mean,
                    s.fluid_deviation.stderr
                )
                .expect("writing to a String");
            }
            out.extend_from_slice(text.as_bytes());
        }
    }
    Ok((out, common.out.clone()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = run(cli.cmd).and_then(|(bytes, path)| {
        match path {
            Some(p) => std::fs::write(p, &bytes)?,
            None => std::io::stdout().write_all(&bytes)?,
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = match &e {
                Error::Config(_) | Error::InvalidLimits(_) | Error::Unusable { .. } => ("config_rejected", 2),
                Error::Domain(_) => ("invalid_argument", 2),
                _ => ("runtime_error", 1),
            };
            eprintln!("{}", serde_json::json!({ "error": kind, "message": e.to_string() }));
            log::debug!("{e:?}");
            ExitCode::from(code)
        }
    }
}
