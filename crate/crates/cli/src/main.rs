mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use otfaces::decomposition::{decompose, decomposition_stats, FaceDecomposition};
use otfaces::geometry::faces;
use otfaces::io::{self, CostLiteral};
use otfaces::pipeline::{self, BoxDomain, InstanceConfig, MassMode, Tolerances};
use otfaces::rebuild::{rebuild_plan, RebuildOptions};
use otfaces::transport::Solution;
use otfaces::{
    brute_force_value, solve_kantorovich, verify_duality, CostSpec, DiscreteMeasure, NormSpec,
    TransportPlan,
};

#[derive(Parser)]
#[command(
    name = "otfaces",
    version,
    about = "Optimal transport maps for non-strictly convex costs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded instance and write it as CSV (or JSON by extension).
    Gen(GenArgs),
    /// Solve the Kantorovich problem exactly.
    Solve(SolveArgs),
    /// Split a plan by cost face and print the statistics table.
    Decompose(DecomposeArgs),
    /// Rebuild a decomposed plan into a map.
    Rebuild(RebuildArgs),
    /// Check a solution's duality certificate.
    Verify(VerifyArgs),
    /// Brute-force optimal value for tiny instances.
    Oracle(SolveArgs),
    /// Solve, decompose, rebuild, and verify.
    Pipeline(PipelineArgs),
    /// Draw an instance and plan as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct Instance {
    /// Source measure (CSV `x1,x2,mass`, or JSON).
    #[arg(long)]
    mu: PathBuf,
    /// Target measure.
    #[arg(long)]
    nu: PathBuf,
    /// Cost literal: inline JSON or a file containing it.
    #[arg(long)]
    cost: String,
}

#[derive(Args)]
struct GenArgs {
    /// Instance config (JSON); overrides the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Defaults to `n`.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_enum, default_value_t = MassArg::Equal)]
    mass_mode: MassArg,
    /// Output path for the sources.
    #[arg(long)]
    mu: PathBuf,
    /// Output path for the targets.
    #[arg(long)]
    nu: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MassArg {
    Equal,
    Random,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inst: Instance,
    /// Write the result as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    inst: Instance,
    /// Plan or solution JSON; solved from scratch when absent.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct RebuildArgs {
    #[command(flatten)]
    inst: Instance,
    /// Plan or solution JSON.
    #[arg(long)]
    plan: PathBuf,
    /// Decomposition JSON; recomputed from the plan when absent.
    #[arg(long)]
    decomposition: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    inst: Instance,
    /// Solution JSON with plan and potentials.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Instance config (JSON); overrides the instance flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mu: Option<PathBuf>,
    #[arg(long)]
    nu: Option<PathBuf>,
    #[arg(long)]
    cost: Option<String>,
    /// Duality and geometric tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    inst: Instance,
    /// Plan or solution JSON; solved from scratch when absent.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    svg: PathBuf,
}

fn parse_cost(arg: &str) -> Result<CostSpec> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("reading cost file {arg}"))?
    };
    io::parse_cost(&text).context("parsing cost literal")
}

fn load(inst: &Instance) -> Result<(DiscreteMeasure, DiscreteMeasure, CostSpec)> {
    let mu =
        io::read_measure(&inst.mu).with_context(|| format!("reading {}", inst.mu.display()))?;
    let nu =
        io::read_measure(&inst.nu).with_context(|| format!("reading {}", inst.nu.display()))?;
    Ok((mu, nu, parse_cost(&inst.cost)?))
}

/// Accepts either a bare plan or a solution carrying one.
fn load_plan(path: &Path) -> Result<TransportPlan> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(sol) = io::from_json::<Solution>(&text) {
        return Ok(sol.plan);
    }
    io::from_json::<TransportPlan>(&text)
        .with_context(|| format!("parsing plan {}", path.display()))
}

fn emit<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    if let Some(p) = path {
        io::write_file(p, &io::to_json(value))?;
    }
    Ok(())
}

fn face_list(c: &CostSpec) -> Vec<otfaces::Face> {
    match c {
        CostSpec::HNorm {
            norm: norm @ NormSpec::Polyhedral(_),
            ..
        } => faces(norm),
        _ => Vec::new(),
    }
}

fn verdict(passed: bool) -> ExitCode {
    if passed {
        println!("PASS");
        ExitCode::SUCCESS
    } else {
        println!("FAIL");
        ExitCode::from(2)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Gen(a) => {
            let cfg = match &a.config {
                Some(p) => io::read_json::<InstanceConfig>(p)?,
                None => InstanceConfig {
                    seed: a.seed,
                    n: a.n,
                    m: a.m.unwrap_or(a.n),
                    mass_mode: match a.mass_mode {
                        MassArg::Equal => MassMode::Equal,
                        MassArg::Random => MassMode::Random,
                    },
                    domain: BoxDomain::default(),
                    target_domain: None,
                    cost: CostLiteral::ShiftedSquarePlus,
                    tolerances: Tolerances::default(),
                },
            };
            let (mu, nu) = pipeline::gen(&cfg)?;
            io::write_measure(&a.mu, &mu)?;
            io::write_measure(&a.nu, &nu)?;
            println!("wrote {} sources, {} targets", mu.len(), nu.len());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Solve(a) => {
            let (mu, nu, c) = load(&a.inst)?;
            let sol = solve_kantorovich(&mu, &nu, &c)?;
            println!("value {:?}", sol.value);
            println!(
                "support {} entries, split atoms {}",
                sol.plan.len(),
                sol.plan.split_atoms(mu.len())
            );
            emit(&a.json, &sol)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Oracle(a) => {
            let (mu, nu, c) = load(&a.inst)?;
            let v = brute_force_value(&mu, &nu, &c)?;
            println!("oracle value {v:?}");
            emit(&a.json, &v)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Decompose(a) => {
            let (mu, nu, c) = load(&a.inst)?;
            let plan = match &a.plan {
                Some(p) => load_plan(p)?,
                None => solve_kantorovich(&mu, &nu, &c)?.plan,
            };
            let d = decompose(&plan, &mu, &nu, &c, a.tol)?;
            print_stats(&d);
            emit(&a.json, &d)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Rebuild(a) => {
            let (mu, nu, c) = load(&a.inst)?;
            let plan = load_plan(&a.plan)?;
            let d = match &a.decomposition {
                Some(p) => io::read_json::<FaceDecomposition>(p)?,
                None => decompose(&plan, &mu, &nu, &c, a.tol)?,
            };
            let opts = RebuildOptions {
                geom_tol: a.tol,
                ..RebuildOptions::default()
            };
            let r = rebuild_plan(&plan, &d, &mu, &nu, &c, &opts)?;
            println!(
                "cost before {:?}, after {:?}; split atoms {}; violations {}; blocks {}",
                r.cost_before, r.cost_after, r.split_atoms, r.constraint_violations, r.blocks
            );
            emit(&a.json, &r)?;
            if let Some(p) = &a.svg {
                io::write_file(
                    p,
                    &svg::render(&mu, &nu, &r.new_plan, Some(&d), &face_list(&c)),
                )?;
            }
            Ok(verdict(r.passed))
        }
        Cmd::Verify(a) => {
            let (mu, nu, c) = load(&a.inst)?;
            let sol: Solution = io::read_json(&a.solution)?;
            let r = verify_duality(&sol.plan, &sol.potentials, &mu, &nu, &c, a.tol)?;
            println!(
                "violation {:.3e}, slack {:.3e}, marginals {:.3e}, gap {:.3e}, infeasible entries {}",
                r.max_violation, r.max_slack_on_support, r.marginal_error, r.duality_gap, r.infeasible_entries
            );
            emit(&a.json, &r)?;
            Ok(verdict(r.passed))
        }
        Cmd::Pipeline(a) => {
            let (mu, nu, c, mut tol) = match &a.config {
                Some(p) => {
                    let cfg: InstanceConfig = io::read_json(p)?;
                    let (mu, nu) = pipeline::gen(&cfg)?;
                    (mu, nu, cfg.cost.build()?, cfg.tolerances)
                }
                None => {
                    let (Some(mu), Some(nu), Some(cost)) =
                        (a.mu.clone(), a.nu.clone(), a.cost.clone())
                    else {
                        bail!("pipeline needs --config or all of --mu, --nu, --cost");
                    };
                    let (mu, nu, c) = load(&Instance { mu, nu, cost })?;
                    (mu, nu, c, Tolerances::default())
                }
            };
            if a.config.is_none() {
                if let Some(t) = a.tol {
                    tol.duality = t;
                    tol.geom = t;
                }
            }
            let r = pipeline::run_pipeline(&mu, &nu, &c, &tol)?;
            println!("lp value {:?}", r.lp_value);
            println!(
                "duality: violation {:.3e}, slack {:.3e}, gap {:.3e}",
                r.duality.max_violation, r.duality.max_slack_on_support, r.duality.duality_gap
            );
            match (&r.decomposition, &r.rebuild) {
                (Some(stats), Some(rb)) => {
                    for (k, v) in pipeline::mass_table(stats) {
                        println!("  {k:<12} {v:.6}");
                    }
                    println!(
                        "rebuild: cost after {:?}, violations {}",
                        rb.cost_after, rb.constraint_violations
                    );
                }
                _ => println!("decomposition skipped"),
            }
            println!(
                "split atoms {}, {:.3}s",
                r.split_atoms,
                r.wall_time.as_secs_f64()
            );
            emit(&a.json, &r)?;
            if let Some(p) = &a.svg {
                let d = decompose(&r.final_plan, &mu, &nu, &c, tol.geom).ok();
                io::write_file(
                    p,
                    &svg::render(&mu, &nu, &r.final_plan, d.as_ref(), &face_list(&c)),
                )?;
            }
            Ok(verdict(r.passed))
        }
        Cmd::Plot(a) => {
            let (mu, nu, c) = load(&a.inst)?;
            let plan = match &a.plan {
                Some(p) => load_plan(p)?,
                None => solve_kantorovich(&mu, &nu, &c)?.plan,
            };
            let d = decompose(&plan, &mu, &nu, &c, 1e-9).ok();
            io::write_file(
                &a.svg,
                &svg::render(&mu, &nu, &plan, d.as_ref(), &face_list(&c)),
            )?;
            println!("wrote {}", a.svg.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_stats(d: &FaceDecomposition) {
    let s = decomposition_stats(d);
    println!("{:<12} {:>8} {:>12}", "part", "atoms", "mass");
    println!("{:<12} {:>8} {:>12.6}", "rigid", s.n_rigid, s.rigid_mass);
    for (k, plan) in &d.per_face {
        let atoms = plan
            .targets_per_source(plan.max_index().0)
            .iter()
            .filter(|&&c| c > 0)
            .count();
        println!(
            "{:<12} {:>8} {:>12.6}",
            k.to_string(),
            atoms,
            s.mass_per_face[k]
        );
    }
    println!(
        "{:<12} {:>8} {:>12.6}",
        "ambiguous", s.n_ambiguous, s.ambiguous_mass
    );
    println!("{:<12} {:>8} {:>12.6}", "total", "", s.total_mass);
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
