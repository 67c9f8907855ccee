//! Command-line driver: table validation, periodic-orbit solving,
//! Birkhoff normal forms, horseshoe asymptotic fits, rigidity reports,
//! suspension-flow entropy, flexibility sampling, and a deterministic
//! end-to-end pipeline.

mod pipeline;
mod report;

use clap::{Args, Parser, Subcommand};
use entroflex_core::asymptotics::{
    fit_period_expansion, fit_series, fit_trace_expansion, horseshoe_family, rigidity_report,
};
use entroflex_core::billiard::{billiard_step, PhasePoint};
use entroflex_core::config::TableConfig;
use entroflex_core::error::Error as CoreError;
use entroflex_core::normalform::{
    anosov_cocycle_value, extract_birkhoff, return_map_jet_symplectic,
};
use entroflex_core::orbits::{find_periodic_orbit, orbit_flow_exponent};
use entroflex_core::real::Real;
use entroflex_core::suspension::{
    abramov, flexibility_sweep, markov_entropy, parry_measure, sft_entropy, solve_flexibility,
    suspension_htop_with, FlexRegion,
};
use entroflex_core::symbolic::SymbolicWord;
use report::{dec, exit_code_of, SuspensionConfig};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

/// Version of the machine-readable output layout.
pub const JSON_SCHEMA_VERSION: u32 = 1;
/// Significant digits for extended-precision values in reports.
pub const REPORT_DIGITS: usize = 40;

#[derive(Parser)]
#[command(name = "entroflex", version, about = "Dispersing-billiard horseshoe \
asymptotics and suspension-flow entropy toolkit")]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Working precision in bits (>= 64)
    #[arg(long, global = true, default_value_t = 192)]
    pub precision: u32,
    /// Worker threads for within-stage parallelism
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Emit a machine-readable JSON result
    #[arg(long, global = true)]
    pub json: bool,
    /// Output directory for generated artifacts
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Table configuration operations
    Table {
        #[command(subcommand)]
        cmd: TableCmd,
    },
    /// Periodic-orbit operations
    Orbit {
        #[command(subcommand)]
        cmd: OrbitCmd,
    },
    /// Birkhoff normal form operations
    Nf {
        #[command(subcommand)]
        cmd: NfCmd,
    },
    /// Horseshoe family asymptotics
    Horseshoe {
        #[command(subcommand)]
        cmd: HorseshoeCmd,
    },
    /// Entropy-rigidity diagnostics
    Rigidity {
        #[command(subcommand)]
        cmd: RigidityCmd,
    },
    /// Symbolic entropy arithmetic
    Entropy {
        #[command(subcommand)]
        cmd: EntropyCmd,
    },
    /// Entropy flexibility targets
    Flexibility {
        #[command(subcommand)]
        cmd: FlexibilityCmd,
    },
    /// End-to-end experiment pipelines
    Pipeline {
        #[command(subcommand)]
        cmd: PipelineCmd,
    },
}

#[derive(Args)]
struct TableArg {
    /// Path to a table configuration (TOML)
    #[arg(long)]
    table: PathBuf,
}

#[derive(Subcommand)]
enum TableCmd {
    /// Parse a table file and check all geometric invariants
    Validate(TableArg),
}

#[derive(Subcommand)]
enum OrbitCmd {
    /// Solve the periodic orbit of a cyclic symbolic word
    Find {
        #[command(flatten)]
        table: TableArg,
        /// Cyclic word over obstacle labels, e.g. 1213
        #[arg(long)]
        word: String,
    },
    /// Iterate the billiard map from a phase point
    Step {
        #[command(flatten)]
        table: TableArg,
        /// 1-based obstacle label of the starting collision
        #[arg(long)]
        obstacle: usize,
        /// Arclength coordinate of the starting collision
        #[arg(long)]
        s: f64,
        /// Reflection angle (radians) of the starting collision
        #[arg(long)]
        phi: f64,
        #[arg(long, default_value_t = 1)]
        steps: usize,
    },
}

#[derive(Subcommand)]
enum NfCmd {
    /// Extract Birkhoff invariants of the return map at a periodic orbit
    Extract {
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        word: String,
        /// Jet truncation order (invariants through a_{(order-1)/2})
        #[arg(long, default_value_t = 5)]
        order: usize,
    },
}

#[derive(Subcommand)]
enum HorseshoeCmd {
    /// Solve the horseshoe family and fit the asymptotic models
    Scan {
        #[command(flatten)]
        table: TableArg,
        /// Reference periodic block w_O
        #[arg(long)]
        block: String,
        /// Homoclinic connector word w_c
        #[arg(long)]
        connector: String,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        /// Which fits to run: all, period, trace, series
        #[arg(long, default_value = "all")]
        fit: String,
        /// Drift degree P of the series model
        #[arg(long, default_value_t = 2)]
        series_degree: usize,
    },
}

#[derive(Subcommand)]
enum RigidityCmd {
    /// Score an ensemble of periodic orbits against the rigidity identities
    Report {
        #[command(flatten)]
        table: TableArg,
        /// Comma-separated cyclic words, e.g. 12,13,23,123
        #[arg(long)]
        words: String,
    },
}

#[derive(Subcommand)]
enum EntropyCmd {
    /// Entropies of a subshift and its suspension flow
    Suspension {
        /// Path to a symbolic system file (TOML)
        #[arg(long)]
        system: PathBuf,
    },
}

#[derive(Subcommand)]
enum FlexibilityCmd {
    /// Realize one (h_mu, h_top) target
    Sample {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        c_mu: f64,
        #[arg(long)]
        c_top: f64,
        /// Target region: I (c_top <= h) or II (c_top >= h)
        #[arg(long)]
        region: String,
    },
    /// Sweep a two-parameter roof family and emit plot data
    Sweep {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 16)]
        grid: usize,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// Run a full experiment described by a config file
    Run {
        /// Path to an experiment configuration (TOML)
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.precision < 64 {
        eprintln!("error: --precision must be at least 64 bits");
        return ExitCode::from(2);
    }
    if let Some(k) = cli.workers {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .is_err()
        {
            eprintln!("error: cannot configure {k} worker threads");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_of(&e))
        }
    }
}

fn emit(cli: &Cli, command: &str, human: String, result: serde_json::Value) {
    if cli.json {
        let doc = json!({
            "schema_version": JSON_SCHEMA_VERSION,
            "command": command,
            "result": result,
        });
        println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    } else {
        println!("{human}");
    }
}

fn load_table(cli: &Cli, arg: &TableArg) -> Result<entroflex_core::geometry::BilliardTable, CoreError> {
    TableConfig::load(&arg.table)?.build(cli.precision)
}

fn parse_word(s: &str) -> Result<SymbolicWord, CoreError> {
    SymbolicWord::parse(s, true)
}

fn run(cli: &Cli) -> Result<(), CoreError> {
    match &cli.cmd {
        Cmd::Table {
            cmd: TableCmd::Validate(arg),
        } => {
            let cfg = TableConfig::load(&arg.table)?;
            let table = cfg.build(cli.precision)?;
            let rep = table.non_eclipse_check()?;
            let mut human = format!(
                "table {}: {} obstacles, all invariants hold\n",
                arg.table.display(),
                table.m()
            );
            human += &format!("non-eclipse margin: {:.6e}", rep.margin);
            emit(
                cli,
                "table validate",
                human,
                json!({
                    "path": arg.table.display().to_string(),
                    "obstacles": table.m(),
                    "non_eclipse_margin": rep.margin,
                    "valid": true,
                }),
            );
            Ok(())
        }
        Cmd::Orbit {
            cmd: OrbitCmd::Find { table, word },
        } => {
            let t = load_table(cli, table)?;
            let w = parse_word(word)?;
            let orbit = find_periodic_orbit(&t, &w, cli.precision)?;
            let mut human = format!("periodic orbit {w}\n");
            for j in 0..orbit.s.len() {
                human += &format!(
                    "  collision {j}: obstacle {} s = {} phi = {}\n",
                    orbit.obstacles[j] + 1,
                    dec(&orbit.s[j]),
                    dec(&orbit.phi[j])
                );
            }
            human += &format!("lambda       = {}\n", dec(&orbit.lambda));
            human += &format!("LE (per map) = {}\n", dec(&orbit.le));
            human += &format!("flow period  = {}\n", dec(&orbit.flow_period));
            human += &format!("flow exponent= {}\n", dec(&orbit_flow_exponent(&orbit)));
            human += &format!("residual     = {}", dec(&orbit.grad_residual));
            emit(
                cli,
                "orbit find",
                human,
                json!({
                    "word": format!("{w}"),
                    "s": orbit.s.iter().map(dec).collect::<Vec<_>>(),
                    "phi": orbit.phi.iter().map(dec).collect::<Vec<_>>(),
                    "lambda": dec(&orbit.lambda),
                    "le": dec(&orbit.le),
                    "flow_period": dec(&orbit.flow_period),
                    "flow_exponent": dec(&orbit_flow_exponent(&orbit)),
                    "residual": dec(&orbit.grad_residual),
                }),
            );
            Ok(())
        }
        Cmd::Orbit {
            cmd:
                OrbitCmd::Step {
                    table,
                    obstacle,
                    s,
                    phi,
                    steps,
                },
        } => {
            let t = load_table(cli, table)?;
            if *obstacle == 0 || *obstacle > t.m() {
                return Err(CoreError::Validation(format!(
                    "obstacle label {obstacle} out of range 1..={}",
                    t.m()
                )));
            }
            let mut x = PhasePoint::new(
                obstacle - 1,
                Real::from_f64(*s, cli.precision),
                Real::from_f64(*phi, cli.precision),
            );
            let mut human = String::new();
            let mut rows = Vec::new();
            for k in 0..*steps {
                let (next, flight) = billiard_step(&t, &x)?;
                human += &format!(
                    "step {}: obstacle {} s = {} phi = {} flight = {}\n",
                    k + 1,
                    next.obstacle + 1,
                    dec(&next.s),
                    dec(&next.phi),
                    dec(&flight)
                );
                rows.push(json!({
                    "obstacle": next.obstacle + 1,
                    "s": dec(&next.s),
                    "phi": dec(&next.phi),
                    "flight": dec(&flight),
                }));
                x = next;
            }
            human.pop();
            emit(cli, "orbit step", human, json!({ "steps": rows }));
            Ok(())
        }
        Cmd::Nf {
            cmd: NfCmd::Extract { table, word, order },
        } => {
            let t = load_table(cli, table)?;
            let w = parse_word(word)?;
            let orbit = find_periodic_orbit(&t, &w, cli.precision)?;
            let jet = return_map_jet_symplectic(&t, &orbit, 0, *order)?;
            let k = (*order - 1) / 2;
            let nf = extract_birkhoff(&jet, k)?;
            let anosov = anosov_cocycle_value(&nf);
            let mut human = format!("normal form at {w} (order {order})\n");
            human += &format!("lambda   = {}\n", dec(&nf.lambda));
            for (i, a) in nf.a.iter().enumerate() {
                human += &format!("a_{}      = {}\n", i + 1, dec(a));
            }
            human += &format!("anosov   = {}\n", dec(&anosov));
            human += &format!("residual = {}", dec(&nf.residual));
            emit(
                cli,
                "nf extract",
                human,
                json!({
                    "word": format!("{w}"),
                    "order": order,
                    "lambda": dec(&nf.lambda),
                    "a": nf.a.iter().map(dec).collect::<Vec<_>>(),
                    "anosov_cocycle": dec(&anosov),
                    "residual": dec(&nf.residual),
                }),
            );
            Ok(())
        }
        Cmd::Horseshoe {
            cmd:
                HorseshoeCmd::Scan {
                    table,
                    block,
                    connector,
                    n_max,
                    fit,
                    series_degree,
                },
        } => {
            let t = load_table(cli, table)?;
            let w_o = parse_word(block)?;
            let w_c = parse_word(connector)?;
            let fam = horseshoe_family(&t, &w_o, &w_c, *n_max, cli.precision)?;
            let mut human = format!(
                "horseshoe family {w_o}/{w_c}, n = 0..{n_max}, lambda = {}\n",
                dec(&fam.lambda)
            );
            for r in &fam.rows {
                human += &format!(
                    "  n = {:2} period {:3} total_log = {} flow_period = {}\n",
                    r.n,
                    r.map_period,
                    dec(&r.total_log),
                    dec(&r.flow_period)
                );
            }
            let mut fits_json = Vec::new();
            let mut run_fit = |name: &str| -> Result<(), CoreError> {
                let rep = match name {
                    "period" => fit_period_expansion(&fam)?,
                    "trace" => fit_trace_expansion(&fam, &fam.lambda)?,
                    "series" => fit_series(&fam, &fam.lambda, *series_degree)?,
                    other => {
                        return Err(CoreError::Validation(format!(
                            "unknown fit model '{other}' (expected all, period, trace, series)"
                        )))
                    }
                };
                human += &format!("fit {}:\n", rep.model);
                for (cname, v, u) in &rep.coefficients {
                    human += &format!("  {cname} = {} +/- {}\n", dec(v), dec(u));
                }
                if let Some(rr) = &rep.residual_ratio {
                    human += &format!("  residual decay ratio = {}\n", dec(rr));
                }
                fits_json.push(report::fit_to_json(&rep));
                Ok(())
            };
            if fit == "all" {
                for name in ["period", "trace", "series"] {
                    run_fit(name)?;
                }
            } else {
                run_fit(fit)?;
            }
            human.pop();
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)
                    .map_err(|e| CoreError::Validation(format!("cannot create out dir: {e}")))?;
                let csv = report::family_csv(&fam);
                report::write_file(&dir.join("horseshoe.csv"), &csv)?;
            }
            emit(
                cli,
                "horseshoe scan",
                human,
                json!({
                    "block": format!("{w_o}"),
                    "connector": format!("{w_c}"),
                    "lambda": dec(&fam.lambda),
                    "rows": fam.rows.iter().map(report::row_to_json).collect::<Vec<_>>(),
                    "fits": fits_json,
                }),
            );
            Ok(())
        }
        Cmd::Rigidity {
            cmd: RigidityCmd::Report { table, words },
        } => {
            let t = load_table(cli, table)?;
            let parsed: Vec<SymbolicWord> = words
                .split(',')
                .map(|s| parse_word(s.trim()))
                .collect::<Result<_, _>>()?;
            let rep = rigidity_report(&t, &parsed, cli.precision)?;
            let human = report::rigidity_text(&rep);
            emit(cli, "rigidity report", human, report::rigidity_json(&rep));
            Ok(())
        }
        Cmd::Entropy {
            cmd: EntropyCmd::Suspension { system },
        } => {
            let cfg = SuspensionConfig::load(system)?;
            let sys = cfg.build()?;
            let h = sft_entropy(&sys)?;
            let mu = parry_measure(&sys)?;
            let h_parry = markov_entropy(&mu);
            let mut human = format!("subshift on {} states\n", sys.size());
            human += &format!("h_top(shift)        = {h:.15e}\n");
            human += &format!("h(Parry measure)    = {h_parry:.15e}");
            let mut result = json!({
                "states": sys.size(),
                "sft_entropy": format!("{h:.17e}"),
                "parry_entropy": format!("{h_parry:.17e}"),
            });
            if let Some(roof) = sys.roof.clone() {
                let htop = suspension_htop_with(&sys, &roof)?;
                let ab = abramov(&mu, &roof)?;
                human += &format!("\nh_top(suspension)   = {htop:.15e}");
                human += &format!("\nabramov(Parry)      = {ab:.15e}");
                result["suspension_htop"] = json!(format!("{htop:.17e}"));
                result["abramov_parry"] = json!(format!("{ab:.17e}"));
            }
            emit(cli, "entropy suspension", human, result);
            Ok(())
        }
        Cmd::Flexibility {
            cmd:
                FlexibilityCmd::Sample {
                    system,
                    c_mu,
                    c_top,
                    region,
                },
        } => {
            let sys = SuspensionConfig::load(system)?.build()?;
            let region = match region.as_str() {
                "I" | "i" | "1" => FlexRegion::I,
                "II" | "ii" | "2" => FlexRegion::II,
                other => {
                    return Err(CoreError::Validation(format!(
                        "unknown region '{other}' (expected I or II)"
                    )))
                }
            };
            let sol = solve_flexibility(&sys, *c_mu, *c_top, region)?;
            let mut human = format!("target (h_mu, h_top) = ({c_mu}, {c_top})\n");
            human += &format!(
                "achieved ({:.12e}, {:.12e}), residual {:.3e}\n",
                sol.achieved.0, sol.achieved.1, sol.residual
            );
            human += &format!("measure tempering beta = {:.12e}, roof parameter t = {:.12e}", sol.beta, sol.t);
            emit(
                cli,
                "flexibility sample",
                human,
                json!({
                    "target": [c_mu, c_top],
                    "achieved": [format!("{:.17e}", sol.achieved.0), format!("{:.17e}", sol.achieved.1)],
                    "residual": format!("{:.3e}", sol.residual),
                    "beta": sol.beta,
                    "t": sol.t,
                    "transition": sol.measure.p,
                    "stationary": sol.measure.pi,
                    "roof": sol.roof,
                }),
            );
            Ok(())
        }
        Cmd::Flexibility {
            cmd: FlexibilityCmd::Sweep { system, grid },
        } => {
            let sys = SuspensionConfig::load(system)?.build()?;
            let rows = flexibility_sweep(&sys, *grid)?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            std::fs::create_dir_all(&dir)
                .map_err(|e| CoreError::Validation(format!("cannot create out dir: {e}")))?;
            // gnuplot-ready two-column blocks plus a JSON sidecar
            let mut data = String::from("# s t h_mu_flow h_top_flow\n");
            for (s, t, hm, ht) in &rows {
                data += &format!("{s:.6} {t:.6} {hm:.15e} {ht:.15e}\n");
            }
            let data_path = dir.join("flexibility-sweep.dat");
            report::write_file(&data_path, &data)?;
            let sidecar = json!({
                "schema_version": JSON_SCHEMA_VERSION,
                "columns": ["s", "t", "h_mu_flow", "h_top_flow"],
                "rows": rows.len(),
                "description": "boundary sweep of the two-parameter roof family",
            });
            report::write_file(
                &dir.join("flexibility-sweep.json"),
                &serde_json::to_string_pretty(&sidecar).unwrap(),
            )?;
            emit(
                cli,
                "flexibility sweep",
                format!("wrote {} rows to {}", rows.len(), data_path.display()),
                json!({
                    "rows": rows.len(),
                    "data": data_path.display().to_string(),
                }),
            );
            Ok(())
        }
        Cmd::Pipeline {
            cmd: PipelineCmd::Run { config },
        } => pipeline::run(cli, config),
    }
}
