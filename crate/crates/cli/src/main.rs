use std::fs;
use std::io::Read;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;
use uniclust::exact::ExactOracle;
use uniclust::generate::{generate, Family};
use uniclust::io::{parse_instance, solution_from_ids, write_instance, ObjectiveSpec, RegretFile, ReportFile, VerificationBlock};
use uniclust::solvers::{solve, verify, Pipeline, SolveConfig, SolveReport, Targets, Verification, VERIFY_TOL};
use uniclust::{Error, Instance, Objective};

const EXIT_BOUND: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;

/// Universal clustering: centers chosen before the clients are known.
///
/// Exit codes: 0 success, 1 approximation bound violated, 2 invalid or
/// malformed input, 3 enumeration cap or solver failure.
#[derive(Parser)]
#[command(name = "uniclust", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the pipeline matching the instance's objective and fixed clients.
    Solve {
        /// Instance file, `-` for stdin.
        instance: String,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Accepted for symmetry with `gen`; the solvers are deterministic.
        #[arg(long)]
        seed: Option<u64>,
        /// Check the result on every realization (small instances only).
        #[arg(long)]
        verify: bool,
    },
    /// Exact minimum-regret solution by enumeration.
    Mrs { instance: String },
    /// Exact regret of a given set of centers.
    Regret {
        instance: String,
        /// Comma-separated facility ids.
        #[arg(long, value_delimiter = ',', required = true)]
        centers: Vec<String>,
    },
    /// Write a generated instance to stdout.
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        nf: usize,
        #[arg(long, default_value_t = 8)]
        nc: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// median, means, center, lp:P or lpp:P.
        #[arg(long, default_value = "median")]
        objective: String,
    },
    /// Solve (or read a report) and check the approximation bound exactly.
    Verify {
        instance: String,
        /// A report from `solve`; its solution and targets are checked.
        #[arg(long)]
        report: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Time every applicable pipeline on seeded random instances.
    Bench {
        #[arg(long, default_value_t = 10)]
        instances: u64,
        #[arg(long, default_value_t = 6)]
        nf: usize,
        #[arg(long, default_value_t = 8)]
        nc: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        verify: bool,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::InvalidInstance(_)
            | Error::Malformed(_)
            | Error::UnknownClient(_)
            | Error::UnknownFacility(_)
            | Error::Precondition(_) => EXIT_INPUT,
            _ => EXIT_SOLVER,
        };
        Failure { code, msg: e.to_string() }
    }
}

type CliResult = Result<u8, Failure>;

fn input_failure(msg: String) -> Failure {
    Failure { code: EXIT_INPUT, msg }
}

fn read_text(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| input_failure(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| input_failure(format!("{path}: {e}")))
    }
}

fn load(path: &str) -> Result<Instance, Failure> {
    parse_instance(&read_text(path)?).map_err(|e| {
        let mut f = Failure::from(e);
        f.msg = format!("{path}: {}", f.msg);
        f
    })
}

fn parse_objective(s: &str) -> Result<Objective, Failure> {
    let spec = match s.split_once(':') {
        Some(("lp", p)) => ObjectiveSpec::Lp { lp: p.parse().map_err(|_| input_failure(format!("bad exponent `{p}`")))? },
        Some(("lpp", p)) => ObjectiveSpec::Lpp { lpp: p.parse().map_err(|_| input_failure(format!("bad exponent `{p}`")))? },
        _ => ObjectiveSpec::Named(s.to_string()),
    };
    Ok(spec.to_objective()?)
}

fn bound_code(v: &Verification) -> u8 {
    if v.holds {
        0
    } else {
        EXIT_BOUND
    }
}

fn cmd_solve(path: &str, eps: f64, check: bool) -> CliResult {
    let inst = load(path)?;
    let rep = solve(&inst, &SolveConfig { eps, ..SolveConfig::default() })?;
    let v = if check { Some(verify(&inst, &rep)?) } else { None };
    print!("{}", ReportFile::new(&inst, &rep, v.as_ref()).to_json());
    Ok(v.as_ref().map_or(0, bound_code))
}

fn cmd_mrs(path: &str) -> CliResult {
    let inst = load(path)?;
    let r = ExactOracle::new(&inst, inst.objective())?.minimum_regret()?;
    print!("{}", RegretFile::new(&inst, &r).to_json());
    Ok(0)
}

fn cmd_regret(path: &str, centers: &[String]) -> CliResult {
    let inst = load(path)?;
    let sol = solution_from_ids(&inst, centers)?;
    if sol.is_empty() || sol.len() > inst.k() {
        return Err(input_failure(format!("need between 1 and {} centers", inst.k())));
    }
    let r = ExactOracle::new(&inst, inst.objective())?.regret_of(&sol)?;
    print!("{}", RegretFile::new(&inst, &r).to_json());
    Ok(0)
}

fn cmd_gen(family: &str, seed: u64, nf: usize, nc: usize, k: usize, objective: &str) -> CliResult {
    let fam: Family = family.parse()?;
    let obj = parse_objective(objective)?;
    let inst = generate(fam, seed, nf, nc, k)?.with_objective(obj).validated()?;
    print!("{}", write_instance(&inst));
    Ok(0)
}

fn report_from_file(inst: &Instance, rep: &ReportFile) -> Result<SolveReport, Failure> {
    let pipeline = Pipeline::ALL
        .into_iter()
        .find(|p| p.name() == rep.pipeline)
        .ok_or_else(|| input_failure(format!("unknown pipeline `{}`", rep.pipeline)))?;
    Ok(SolveReport {
        pipeline,
        objective: rep.objective.to_objective()?,
        solution: solution_from_ids(inst, &rep.solution)?,
        fractional: None,
        alpha_target: rep.target.alpha,
        beta_target: rep.target.beta,
        composed_target: rep.composed_target.map(|t| Targets { alpha: t.alpha, beta: t.beta }),
        diagnostics: Default::default(),
    })
}

fn cmd_verify(path: &str, report: Option<&str>, eps: f64) -> CliResult {
    let inst = load(path)?;
    let rep = match report {
        Some(r) => {
            let file = ReportFile::parse(&read_text(r)?)?;
            report_from_file(&inst, &file)?
        }
        None => solve(&inst, &SolveConfig { eps, ..SolveConfig::default() })?,
    };
    let v = verify(&inst, &rep)?;
    let block = VerificationBlock::new(&inst, &v);
    println!("{}", serde_json::to_string_pretty(&block).expect("verification serializes"));
    if !v.holds {
        eprintln!(
            "bound violated on {:?}: excess {} over alpha {} beta {} (tol {VERIFY_TOL})",
            v.worst_realization.ids(&inst),
            v.worst_excess,
            rep.alpha_target,
            rep.beta_target
        );
    }
    Ok(bound_code(&v))
}

fn cmd_bench(instances: u64, nf: usize, nc: usize, k: usize, check: bool) -> CliResult {
    let objectives = [
        ("kmedian", Objective::MEDIAN, false),
        ("lpp", Objective::Lpp(2.0), false),
        ("lp", Objective::Lp(2.0), false),
        ("kcenter", Objective::Center, false),
        ("kmedian_fixed", Objective::MEDIAN, true),
        ("lp_fixed", Objective::Lp(2.0), true),
        ("kcenter_fixed", Objective::Center, true),
    ];
    let mut code = 0;
    for (name, obj, fixed) in objectives {
        let mut times = Vec::new();
        let mut violations = 0;
        for seed in 0..instances {
            let mut inst = generate(Family::RandomEuclidean, seed, nf, nc, k)?.with_objective(obj);
            if fixed {
                inst = inst.with_fixed(vec![0]);
            }
            let t = Instant::now();
            let rep = solve(&inst, &SolveConfig::default())?;
            times.push(t.elapsed().as_secs_f64() * 1e3);
            if check && !verify(&inst, &rep)?.holds {
                violations += 1;
            }
        }
        let mean = times.iter().sum::<f64>() / times.len().max(1) as f64;
        let max = times.iter().copied().fold(0.0, f64::max);
        let mut row = json!({ "pipeline": name, "instances": instances, "mean_ms": mean, "max_ms": max });
        if check {
            row["violations"] = json!(violations);
            if violations > 0 {
                code = EXIT_BOUND;
            }
        }
        println!("{row}");
    }
    Ok(code)
}

fn run(cli: Cli) -> CliResult {
    match cli.cmd {
        Cmd::Solve { instance, eps, seed: _, verify } => cmd_solve(&instance, eps, verify),
        Cmd::Mrs { instance } => cmd_mrs(&instance),
        Cmd::Regret { instance, centers } => cmd_regret(&instance, &centers),
        Cmd::Gen { family, seed, nf, nc, k, objective } => cmd_gen(&family, seed, nf, nc, k, &objective),
        Cmd::Verify { instance, report, eps } => cmd_verify(&instance, report.as_deref(), eps),
        Cmd::Bench { instances, nf, nc, k, verify } => cmd_bench(instances, nf, nc, k, verify),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
