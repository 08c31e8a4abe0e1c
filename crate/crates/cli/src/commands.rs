//! Subcommand schemas and dispatch.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fracspde_core::error::Error as CoreError;
use fracspde_core::fem1d::FemSpace;
use fracspde_core::fracquad::gl_weights;
use fracspde_core::lab::{
    fmt_float, holder_probe, noise_regularity, predicted_holder_exponent, predicted_rates, run_study_with_workers,
    with_workers, HolderPlan, StudyPlan,
};
use fracspde_core::noise::{sample_increments, NoiseModel, StreamKey};
use fracspde_core::stepper::{check_orders, solve_trajectory, InitialData, ModelConfig, NamedInitial, Stepper};
use fracspde_core::verify::run_checks;

use crate::config::{ConfigError, ParamBag};

/// Environment variable consulted for the worker count when `--workers` is absent.
pub const WORKERS_ENV: &str = "FRACSPDE_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "fracspde", version, about = "Stochastic time-fractional diffusion lab")]
pub struct Cli {
    /// flat `key = value` parameter file; flags override its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// write results here instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// worker threads for Monte Carlo studies (default: all available)
    #[arg(long, global = true, env = WORKERS_ENV)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grünwald-Letnikov weights of (1 - ζ)^β
    Weights(WeightsArgs),
    /// one trajectory, every time level
    Solve(SolveArgs),
    /// oracle and invariant checks
    Verify,
    /// temporal convergence study
    ConvergeTime(StudyArgs),
    /// spatial convergence study
    ConvergeSpace(StudyArgs),
    /// empirical temporal Hölder exponent
    Holder(HolderArgs),
    /// predicted convergence exponents
    Rates(RatesArgs),
}

macro_rules! flag_struct {
    ($(#[$meta:meta])* $name:ident { $($field:ident),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, Args)]
        pub struct $name {
            $(
                #[arg(long, allow_negative_numbers = true)]
                pub $field: Option<String>,
            )*
        }

        impl $name {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($field)),*];

            fn flags(&self) -> Vec<(&'static str, Option<String>)> {
                vec![$((stringify!($field), self.$field.clone())),*]
            }
        }
    };
}

flag_struct!(WeightsArgs { beta, count });
flag_struct!(SolveArgs {
    alpha,
    gamma,
    m,
    seed,
    trajectory,
    horizon,
    steps,
    intervals,
    initial,
    zero_noise
});
flag_struct!(StudyArgs {
    alpha,
    gamma,
    m,
    s,
    seed,
    trajectories,
    t_star,
    levels,
    reference,
    intervals,
    steps,
    initial,
    zero_noise,
});
flag_struct!(HolderArgs {
    alpha,
    gamma,
    m,
    seed,
    trajectories,
    mesh,
    t1,
    tau,
    lags
});
flag_struct!(RatesArgs {
    alpha,
    gamma,
    s,
    m,
    initial
});

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_GAMMA: f64 = 0.5;
pub const DEFAULT_M: f64 = 2.0;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRAJECTORIES: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Core(#[from] CoreError),

    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl RunError {
    /// 1 for runtime failures, 2 for bad configuration.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(e) => match e {
                CoreError::Domain { .. }
                | CoreError::Config(_)
                | CoreError::Length { .. }
                | CoreError::Capability(_) => 2,
                _ => 1,
            },
            RunError::Output { .. } => 1,
        }
    }
}

/// Validated, fully merged run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Job,
    pub output: Option<PathBuf>,
    pub workers: usize,
}

#[derive(Debug, Clone)]
pub enum Job {
    Weights {
        beta: f64,
        count: usize,
    },
    Solve {
        config: ModelConfig,
        intervals: usize,
        m: f64,
        seed: u64,
        trajectory: u64,
        zero_noise: bool,
    },
    Verify,
    Study(StudyPlan),
    Holder(HolderPlan),
    Rates {
        alpha: f64,
        gamma: f64,
        s: f64,
        u0_zero: bool,
    },
}

fn parse_initial(bag: &ParamBag, default: &str) -> Result<InitialData, ConfigError> {
    let name: String = bag.get("initial", default.to_string())?;
    if name == "zero" {
        return Ok(InitialData::Zero);
    }
    NamedInitial::from_name(&name).map(InitialData::Named).ok_or_else(|| {
        ConfigError::Invalid(CoreError::Config(format!(
            "unknown initial data `{name}` (expected zero, sin, parabola or step)"
        )))
    })
}

fn require<T: std::str::FromStr>(bag: &ParamBag, key: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    bag.get_opt(key)?
        .ok_or_else(|| ConfigError::Invalid(CoreError::Config(format!("missing required parameter `{key}`"))))
}

/// Merges the config file and the flags, then validates against the subcommand schema.
pub fn parse_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut bag = match &cli.config {
        Some(path) => ParamBag::read_file(path)?,
        None => ParamBag::default(),
    };
    let (keys, flags): (&[&str], Vec<(&str, Option<String>)>) = match &cli.command {
        Command::Weights(a) => (WeightsArgs::KEYS, a.flags()),
        Command::Solve(a) => (SolveArgs::KEYS, a.flags()),
        Command::Verify => (&[], Vec::new()),
        Command::ConvergeTime(a) | Command::ConvergeSpace(a) => (StudyArgs::KEYS, a.flags()),
        Command::Holder(a) => (HolderArgs::KEYS, a.flags()),
        Command::Rates(a) => (RatesArgs::KEYS, a.flags()),
    };
    bag.check_keys(keys)?;
    bag.override_with(flags);

    let command = match &cli.command {
        Command::Weights(_) => {
            let beta = require(&bag, "beta")?;
            let count = require(&bag, "count")?;
            Job::Weights { beta, count }
        }
        Command::Solve(_) => {
            let alpha = bag.get("alpha", DEFAULT_ALPHA)?;
            let gamma = bag.get("gamma", DEFAULT_GAMMA)?;
            let horizon = bag.get("horizon", 1.0)?;
            let steps = bag.get("steps", 100usize)?;
            let initial = parse_initial(&bag, "zero")?;
            let config = ModelConfig::new(alpha, gamma, horizon, steps, initial)?;
            let intervals = bag.get("intervals", 32usize)?;
            FemSpace::new(intervals)?;
            let m = bag.get("m", DEFAULT_M)?;
            NoiseModel::new(m, 1)?;
            Job::Solve {
                config,
                intervals,
                m,
                seed: bag.get("seed", DEFAULT_SEED)?,
                trajectory: bag.get("trajectory", 0u64)?,
                zero_noise: bag.get("zero_noise", false)?,
            }
        }
        Command::Verify => Job::Verify,
        Command::ConvergeTime(_) | Command::ConvergeSpace(_) => {
            let temporal = matches!(cli.command, Command::ConvergeTime(_));
            let alpha = bag.get("alpha", DEFAULT_ALPHA)?;
            let gamma = bag.get("gamma", DEFAULT_GAMMA)?;
            let m = bag.get("m", DEFAULT_M)?;
            let mut plan = if temporal {
                StudyPlan::temporal(alpha, gamma, m)
            } else {
                StudyPlan::spatial(alpha, gamma, m)
            };
            let (fixed_key, other_key) = if temporal {
                ("intervals", "steps")
            } else {
                ("steps", "intervals")
            };
            if bag.contains(other_key) {
                return Err(ConfigError::Invalid(CoreError::Config(format!(
                    "`{other_key}` is refined by this study; set `levels` and `reference` instead"
                ))));
            }
            plan.fixed = bag.get(fixed_key, plan.fixed)?;
            plan.levels = bag.get_list("levels", plan.levels)?;
            plan.reference = bag.get("reference", plan.reference)?;
            plan.trajectories = bag.get("trajectories", DEFAULT_TRAJECTORIES)?;
            plan.t_star = bag.get("t_star", plan.t_star)?;
            plan.seed = bag.get("seed", DEFAULT_SEED)?;
            plan.initial = parse_initial(&bag, "zero")?;
            plan.zero_noise = bag.get("zero_noise", false)?;
            plan.s = bag.get_opt("s")?;
            plan.validate()?;
            Job::Study(plan)
        }
        Command::Holder(_) => {
            let mut plan = HolderPlan::new(
                bag.get("alpha", DEFAULT_ALPHA)?,
                bag.get("gamma", DEFAULT_GAMMA)?,
                bag.get("m", DEFAULT_M)?,
            );
            check_orders(plan.alpha, plan.gamma)?;
            NoiseModel::new(plan.m, 1)?;
            plan.seed = bag.get("seed", DEFAULT_SEED)?;
            plan.trajectories = bag.get("trajectories", DEFAULT_TRAJECTORIES)?;
            plan.mesh = bag.get("mesh", plan.mesh)?;
            plan.t1 = bag.get("t1", plan.t1)?;
            plan.tau = bag.get("tau", plan.tau)?;
            plan.lags = bag.get_list("lags", plan.lags)?;
            Job::Holder(plan)
        }
        Command::Rates(_) => {
            let alpha = bag.get("alpha", DEFAULT_ALPHA)?;
            let gamma = bag.get("gamma", DEFAULT_GAMMA)?;
            let s = match bag.get_opt("s")? {
                Some(s) => s,
                None => noise_regularity(bag.get("m", DEFAULT_M)?),
            };
            let u0_zero = parse_initial(&bag, "zero")?.is_zero();
            predicted_rates(alpha, gamma, s, u0_zero)?;
            Job::Rates {
                alpha,
                gamma,
                s,
                u0_zero,
            }
        }
    };

    let workers = match cli.workers {
        Some(0) => {
            return Err(ConfigError::Invalid(CoreError::Config(
                "workers must be at least 1".into(),
            )));
        }
        Some(w) => w,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    Ok(RunConfig {
        command,
        output: cli.output.clone(),
        workers,
    })
}

/// Executes the job and returns the text to emit plus whether every check passed.
pub fn execute(config: &RunConfig) -> Result<(String, bool), RunError> {
    let mut out = String::new();
    let mut passed = true;
    match &config.command {
        Job::Weights { beta, count } => {
            for w in gl_weights(*beta, *count)? {
                let _ = writeln!(out, "{}", fmt_float(w));
            }
        }
        Job::Solve {
            config: model_config,
            intervals,
            m,
            seed,
            trajectory,
            zero_noise,
        } => {
            let space = FemSpace::new(*intervals)?;
            let sol = if *zero_noise {
                let u0 = model_config.initial().project(&space)?;
                Stepper::new(model_config, &space)?.run(&u0, None, None)?
            } else {
                let model = NoiseModel::for_space(*m, &space)?;
                let key = StreamKey::new(*seed, *trajectory);
                let incs = sample_increments(&model, model_config.steps(), model_config.tau(), key)?;
                solve_trajectory(model_config, &space, &model, &incs)?
            };
            out.push('t');
            for i in 1..=space.dim() {
                let _ = write!(out, ",x_{i}");
            }
            out.push('\n');
            for (n, state) in sol.states().enumerate() {
                out.push_str(&fmt_float(model_config.time(n)));
                for v in state {
                    out.push(',');
                    out.push_str(&fmt_float(*v));
                }
                out.push('\n');
            }
        }
        Job::Verify => {
            let checks = with_workers(config.workers, run_checks)?;
            for c in &checks {
                let _ = writeln!(out, "{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                passed = false;
                let _ = writeln!(out, "# {failed} of {} checks failed", checks.len());
            }
        }
        Job::Study(plan) => {
            out = run_study_with_workers(plan, config.workers)?.to_csv();
        }
        Job::Holder(plan) => {
            out = with_workers(config.workers, || holder_probe(plan))?.to_csv();
        }
        Job::Rates {
            alpha,
            gamma,
            s,
            u0_zero,
        } => {
            let r = predicted_rates(*alpha, *gamma, *s, *u0_zero)?;
            out.push_str("quantity,exponent\n");
            let _ = writeln!(out, "strong_time,{}", r.strong_time);
            let _ = writeln!(out, "strong_space,{}", r.strong_space);
            let _ = writeln!(out, "weak_time,{}", r.weak_time);
            let _ = writeln!(out, "weak_space,{}", r.weak_space);
            let _ = writeln!(
                out,
                "holder,{}",
                fmt_rate_value(predicted_holder_exponent(*alpha, *gamma, *s))
            );
        }
    }
    Ok((out, passed))
}

fn fmt_rate_value(v: f64) -> String {
    let s = format!("{v:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Parses, runs and writes; returns the process exit code.
pub fn run(cli: &Cli) -> Result<u8, RunError> {
    let config = parse_config(cli)?;
    let (text, passed) = execute(&config)?;
    match &config.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| RunError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        })?,
        None => print!("{text}"),
    }
    Ok(if passed { 0 } else { 1 })
}
