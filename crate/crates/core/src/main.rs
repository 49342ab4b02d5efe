use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vortexlayer::audit::Calibration;
use vortexlayer::cli::{execute_audit, execute_kinetic, execute_run, DEFAULT_LEVELS};
use vortexlayer::config::{load_config, load_config_file, preset, RunConfig};
use vortexlayer::flux::FluxModel;
use vortexlayer::sweep::{geometric_nus, run_sweep, GridRule, SweepConfig};
use vortexlayer::{Error, Result};

#[derive(Parser)]
#[command(name = "vortexlayer", version, about = "Viscous vortex-layer solver and audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write its run directory.
    Run {
        #[command(flatten)]
        scenario: Scenario,
        /// Print the effective configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Run a viscosity sweep and write bound, distance and layer tables.
    Sweep {
        #[command(flatten)]
        scenario: Scenario,
        /// Comma-separated viscosities, largest first.
        #[arg(long, value_delimiter = ',')]
        nu_list: Option<Vec<f64>>,
        /// `nu/4` refines the grid with the viscosity, `fixed` keeps it.
        #[arg(long, default_value = "nu/4")]
        grid_rule: GridRule,
        /// Upper bound on the cell size under the `nu/4` rule.
        #[arg(long)]
        dx_max: Option<f64>,
    },
    /// Entropy audit of an existing run directory.
    Audit {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LEVELS)]
        n_xi: usize,
        /// Frozen tolerance constants `C1,C2` from a baseline audit.
        #[arg(long, value_delimiter = ',')]
        calibration: Option<Vec<f64>>,
    },
    /// Kinetic identities and trace functionals of an existing run directory.
    Kinetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LEVELS)]
        n_xi: usize,
        /// Comma-separated averaging windows; defaults to T/4, T/8, T/16.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
}

#[derive(Args)]
struct Scenario {
    /// Config file, or `preset:<name>` for a bundled scenario.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    model: Option<FluxModel>,
    #[arg(long)]
    nu: Option<f64>,
    /// Cells per side.
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Scenario {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, self.model) {
            (Some(c), _) => match c.strip_prefix("preset:") {
                Some(name) => preset(name)?,
                None => load_config_file(Path::new(c))?,
            },
            (None, Some(m)) => load_config(&format!("model = \"{m}\""))?,
            (None, None) => {
                return Err(Error::ConfigInvalid(
                    "give --config or --model".to_string(),
                ))
            }
        };
        if let Some(m) = self.model {
            cfg.model = m;
        }
        if let Some(nu) = self.nu {
            cfg.nu = nu;
        }
        if let Some(n) = self.nx {
            cfg.grid.nx = n;
            cfg.grid.ny = n;
        }
        if let Some(t) = self.t_final {
            cfg.t_final = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("VORTEXLAYER_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            scenario,
            print_config,
        } => {
            let cfg = scenario.resolve()?;
            if print_config {
                print!("{}", cfg.to_toml());
                return Ok(ExitCode::SUCCESS);
            }
            let out = execute_run(&cfg, &scenario.out)?;
            let s = &out.summary;
            println!("steps: {}", s.steps);
            println!("t_final: {}", out.trajectory.t_final());
            println!("min omega: {:e}", s.min_omega);
            println!("max omega: {:e}", s.max_omega);
            println!("sup |omega|: {:e}", s.sup_abs);
            println!("sqrt(nu) |grad omega|: {:e}", s.energy_bound);
            println!("worst relative mass defect: {:e}", s.worst_mass_defect);
            println!("final max drift: {}", s.max_drift);
            println!("wrote {}", scenario.out.display());
        }
        Command::Sweep {
            scenario,
            nu_list,
            grid_rule,
            dx_max,
        } => {
            let base = scenario.resolve()?;
            let mut sweep = SweepConfig::new(base, nu_list.unwrap_or_else(|| geometric_nus(6)));
            sweep.grid_rule = grid_rule;
            if let Some(d) = dx_max {
                sweep.dx_max = d;
            }
            let report = run_sweep(&sweep, Some(&scenario.out))?;
            report.write(&scenario.out)?;
            for r in &report.rows {
                println!(
                    "nu = {:<10} {}x{}  sup|omega| = {:.6}  sqrt(nu)|grad omega| = {:.6}  {}",
                    r.nu, r.nx, r.ny, r.sup_abs, r.energy_bound, r.status
                );
            }
            for (k, p) in report.ps.iter().enumerate() {
                let d: Vec<String> = report.consecutive(k).iter().map(|v| format!("{v:.3e}")).collect();
                let verdict = match report.cauchy_verdict(k) {
                    Some(true) => "nonincreasing",
                    Some(false) => "not monotone",
                    None => "too few pairs",
                };
                println!("L{p} consecutive distances [{}]: {verdict}", d.join(", "));
            }
            if report.rows.iter().any(|r| !r.ok()) {
                eprintln!("some sweep runs failed; see sweep_report.csv");
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Audit {
            out,
            n_xi,
            calibration,
        } => {
            let cal = match calibration.as_deref() {
                None => None,
                Some(&[c1, c2]) if c1 >= 0.0 && c2 >= 0.0 => Some(Calibration { c1, c2 }),
                Some(_) => {
                    return Err(Error::ConfigInvalid(
                        "--calibration takes two nonnegative numbers C1,C2".to_string(),
                    ))
                }
            };
            let calibrated = cal.is_some();
            let rep = execute_audit(&out, n_xi, cal)?;
            let derived = Calibration::from_report(&rep);
            println!("pairs: {}", rep.rows.len());
            println!("min residual: {:e} at xi = {}, phi = {}", rep.min_residual, rep.argmin.0, rep.argmin.1);
            println!("dx = {}, dt = {}, tolerance = {:e}", rep.dx, rep.dt, rep.tolerance);
            println!("calibration from this run: {},{}", derived.c1, derived.c2);
            if !calibrated {
                println!("no calibration given: pass column uses the roundoff floor only");
            } else if rep.pass() {
                println!("PASS");
            } else {
                println!("FAIL");
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Kinetic { out, n_xi, eps } => {
            let rep = execute_kinetic(&out, n_xi, eps)?;
            println!("reconstruction error: {:e} (level spacing {:e})", rep.reconstruct_max_error, rep.grid.dxi());
            println!("rho bound: {:e}", rep.rho_bound_max);
            for (k, e) in rep.eps.iter().enumerate() {
                println!("eps = {e}: interior {:e}, boundary {:e}", rep.interior[k], rep.boundary[k]);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    configure_threads();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
