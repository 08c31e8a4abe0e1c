//! Monte Carlo convergence studies with common random numbers.
//!
//! Each trajectory `p` draws one Brownian path keyed by `(seed, p)` at the
//! finest resolution. Temporal studies coarsen it by summing blocks of
//! increments; spatial studies give every mesh the leading Karhunen-Loève modes
//! of the same path. Trajectories run in parallel, but every statistic is
//! reduced in trajectory order, so reports are bit-reproducible for any worker
//! count.

use std::fmt::Write as _;
use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem1d::{prolong, FemSpace};
use crate::noise::{coarsen_increments, sample_increments, IncrementMatrix, NoiseModel, NoiseProjector, StreamKey};
use crate::oracle::fit_slope;
use crate::stepper::{check_orders, weak_functional, InitialData, ModelConfig, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    /// refine the time step on a fixed mesh
    Temporal,
    /// refine the mesh at a fixed time step
    Spatial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyPlan {
    pub mode: StudyMode,
    pub alpha: f64,
    pub gamma: f64,
    /// noise eigenvalue decay `m` in `γ_ℓ = ℓ^{-m}`
    pub m: f64,
    /// time step counts (temporal) or interval counts (spatial)
    pub levels: Vec<usize>,
    pub reference: usize,
    pub trajectories: usize,
    pub t_star: f64,
    pub seed: u64,
    /// interval count (temporal) or time step count (spatial)
    pub fixed: usize,
    pub initial: InitialData,
    pub zero_noise: bool,
    /// noise regularity index used for the predicted rates; derived from `m` when unset
    pub s: Option<f64>,
}

impl StudyPlan {
    /// Time refinement at `t* = 0.01` on 100 intervals, `N ∈ {40, …, 640}`, reference 3200.
    pub fn temporal(alpha: f64, gamma: f64, m: f64) -> Self {
        Self {
            mode: StudyMode::Temporal,
            alpha,
            gamma,
            m,
            levels: vec![40, 80, 160, 320, 640],
            reference: 3200,
            trajectories: 100,
            t_star: 0.01,
            seed: 42,
            fixed: 100,
            initial: InitialData::Zero,
            zero_noise: false,
            s: None,
        }
    }

    /// Mesh refinement at `t* = 1` with 200 steps, `M ∈ {10, …, 160}`, reference 480.
    pub fn spatial(alpha: f64, gamma: f64, m: f64) -> Self {
        Self {
            mode: StudyMode::Spatial,
            alpha,
            gamma,
            m,
            levels: vec![10, 20, 40, 80, 160],
            reference: 480,
            trajectories: 100,
            t_star: 1.0,
            seed: 42,
            fixed: 200,
            initial: InitialData::Zero,
            zero_noise: false,
            s: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_orders(self.alpha, self.gamma)?;
        NoiseModel::new(self.m, 1)?;
        if self.levels.is_empty() {
            return Err(Error::Config("a study needs at least one refinement level".into()));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("refinement levels must be strictly increasing".into()));
        }
        let finest = *self.levels.last().expect("non-empty");
        if self.reference <= finest {
            return Err(Error::Config(format!(
                "reference level {} must be finer than every level (finest is {finest})",
                self.reference
            )));
        }
        if let Some(bad) = self
            .levels
            .iter()
            .find(|&&l| l == 0 || !self.reference.is_multiple_of(l))
        {
            return Err(Error::Config(format!(
                "level {bad} does not divide the reference level {}",
                self.reference
            )));
        }
        if self.mode == StudyMode::Spatial && self.levels[0] < 2 {
            return Err(Error::Config("spatial levels need at least 2 intervals".into()));
        }
        if self.mode == StudyMode::Temporal && self.fixed < 2 {
            return Err(Error::Config("the fixed mesh needs at least 2 intervals".into()));
        }
        if self.fixed == 0 {
            return Err(Error::Config("the fixed time step count must be positive".into()));
        }
        if self.trajectories == 0 {
            return Err(Error::Config("at least one trajectory is required".into()));
        }
        if !(self.t_star > 0.0 && self.t_star.is_finite()) {
            return Err(Error::Domain {
                param: "t_star",
                value: self.t_star,
                reason: "evaluation time must be positive",
            });
        }
        if let InitialData::Nodal(_) = self.initial {
            if self.mode == StudyMode::Spatial {
                return Err(Error::Config("nodal initial data cannot be used across meshes".into()));
            }
        }
        Ok(())
    }

    /// `s` for the rate calculator.
    pub fn noise_regularity(&self) -> f64 {
        self.s.unwrap_or_else(|| noise_regularity(self.m))
    }
}

/// Regularity index `s` assigned to `γ_ℓ = ℓ^{-m}`: trace-class noise (`m > 1`)
/// gets `s = 0`, anything rougher the white-noise value `s = 1`.
pub fn noise_regularity(m: f64) -> f64 {
    if m > 1.0 {
        0.0
    } else {
        1.0
    }
}

/// A convergence exponent; `open` marks a rate that holds only as `value - ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub value: f64,
    pub open: bool,
}

impl Rate {
    fn closed(value: f64) -> Self {
        Self { value, open: false }
    }

    fn open(value: f64) -> Self {
        Self { value, open: true }
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.open {
            write!(f, "{}-eps", fmt_rate(self.value))
        } else {
            write!(f, "{}", fmt_rate(self.value))
        }
    }
}

fn fmt_rate(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedRates {
    pub strong_time: Rate,
    pub strong_space: Rate,
    pub weak_time: Rate,
    pub weak_space: Rate,
}

/// Theoretical exponents for `(α, γ)` and noise regularity `s ∈ [0, 1]`.
///
/// `α = 1` is accepted for the classical limit. Nonzero initial data add
/// `O(τ)` and `O(h²)` at a fixed positive time, which caps the exponents at 1 and 2.
pub fn predicted_rates(alpha: f64, gamma: f64, s: f64, u0_zero: bool) -> Result<PredictedRates> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain {
            param: "alpha",
            value: alpha,
            reason: "fractional order alpha must lie in (0, 1]",
        });
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain {
            param: "gamma",
            value: gamma,
            reason: "integration order gamma must lie in [0, 1]",
        });
    }
    if alpha + gamma <= 0.5 {
        return Err(Error::Config(format!(
            "alpha + gamma = {} violates the well-posedness condition alpha + gamma > 1/2",
            alpha + gamma
        )));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain {
            param: "s",
            value: s,
            reason: "noise regularity index must lie in [0, 1]",
        });
    }
    let eta = (1.0 - s / 2.0) * alpha + gamma;
    if eta <= 0.5 {
        return Err(Error::Config(format!(
            "noise with s = {s} is too rough for alpha = {alpha}, gamma = {gamma}"
        )));
    }

    let strong_time = if eta - 0.5 > 1.0 {
        Rate::closed(1.0)
    } else {
        Rate::open(eta - 0.5)
    };

    let strong_space = if gamma > 0.5 {
        Rate::closed(2.0 - s)
    } else if gamma == 0.5 {
        Rate::open(2.0 - s)
    } else {
        Rate::open(2.0 - s - (1.0 - 2.0 * gamma) / alpha)
    };

    let weak_time = if s == 0.0 {
        if alpha + gamma > 1.0 {
            Rate::closed(1.0)
        } else {
            Rate::open(alpha + gamma)
        }
    } else if eta >= 1.0 {
        Rate::closed(1.0)
    } else {
        Rate::open(2.0 * eta - 1.0)
    };

    let inv_p = (1.0 - alpha - gamma + s * alpha / 2.0).max(0.0);
    let loss = (2.0 / alpha) * (inv_p - gamma);
    let weak_space = if loss > 0.0 {
        Rate::open(2.0 - s - loss)
    } else {
        Rate::closed(2.0 - s)
    };

    let mut rates = PredictedRates {
        strong_time,
        strong_space,
        weak_time,
        weak_space,
    };
    if !u0_zero {
        for (r, cap) in [
            (&mut rates.strong_time, 1.0),
            (&mut rates.weak_time, 1.0),
            (&mut rates.strong_space, 2.0),
            (&mut rates.weak_space, 2.0),
        ] {
            if r.value > cap {
                *r = Rate::closed(cap);
            }
        }
    }
    Ok(rates)
}

/// `(1/P Σ_p ‖u_ref^{(p)} - U^{(p)}‖²)^{1/2}` in the reference-space L² norm; level
/// solutions must already live on the reference space.
pub fn strong_error(ref_solutions: &[Vec<f64>], level_solutions: &[Vec<f64>], space_fine: &FemSpace) -> Result<f64> {
    check_pairing(ref_solutions.len(), level_solutions.len())?;
    let mut acc = 0.0;
    let mut diff = vec![0.0; space_fine.dim()];
    for (r, u) in ref_solutions.iter().zip(level_solutions) {
        if r.len() != space_fine.dim() || u.len() != space_fine.dim() {
            return Err(Error::Contract("solutions do not live on the reference space".into()));
        }
        for ((d, a), b) in diff.iter_mut().zip(r).zip(u) {
            *d = a - b;
        }
        acc += space_fine.mass().quad_form(&diff);
    }
    Ok((acc / ref_solutions.len() as f64).sqrt())
}

/// `(1/P) Σ Φ(u_ref) - (1/P) Σ Φ(U)`, each functional evaluated in its own space.
pub fn weak_difference(
    ref_solutions: &[Vec<f64>],
    ref_space: &FemSpace,
    level_solutions: &[Vec<f64>],
    level_space: &FemSpace,
) -> Result<f64> {
    check_pairing(ref_solutions.len(), level_solutions.len())?;
    let mean = |sols: &[Vec<f64>], space: &FemSpace| -> Result<f64> {
        let mut acc = 0.0;
        for v in sols {
            if v.len() != space.dim() {
                return Err(Error::Contract("solution does not match its space".into()));
            }
            acc += weak_functional(space, v);
        }
        Ok(acc / sols.len() as f64)
    };
    Ok(mean(ref_solutions, ref_space)? - mean(level_solutions, level_space)?)
}

/// `|E Φ(u_ref) - E Φ(U)|` estimated by sample means.
pub fn weak_error(
    ref_solutions: &[Vec<f64>],
    ref_space: &FemSpace,
    level_solutions: &[Vec<f64>],
    level_space: &FemSpace,
) -> Result<f64> {
    Ok(weak_difference(ref_solutions, ref_space, level_solutions, level_space)?.abs())
}

fn check_pairing(a: usize, b: usize) -> Result<()> {
    if a != b || a == 0 {
        return Err(Error::Contract(format!(
            "reference and level sample counts differ or are empty ({a} vs {b})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    /// `log(e_i / e_{i+1}) / log(g_{i+1} / g_i)`, the log₂ ratio for doubled grids
    pub ratios: Vec<f64>,
}

/// Least-squares slope of `log e` against `log(1/g)` for step or interval counts `g`.
pub fn fit_rate(errors: &[f64], grid: &[usize]) -> Result<RateFit> {
    if errors.len() != grid.len() {
        return Err(Error::Contract("errors and grid differ in length".into()));
    }
    if errors.len() < 2 {
        return Err(Error::Config("rate fitting needs at least two levels".into()));
    }
    if errors.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Numerical("rate fitting needs positive finite errors".into()));
    }
    let xs: Vec<f64> = grid.iter().map(|&g| -(g as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let rate = fit_slope(&xs, &ys)?;
    let ratios = errors
        .windows(2)
        .zip(grid.windows(2))
        .map(|(e, g)| (e[0] / e[1]).ln() / (g[1] as f64 / g[0] as f64).ln())
        .collect();
    Ok(RateFit { rate, ratios })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelError {
    pub param: usize,
    pub strong: f64,
    pub weak: f64,
    /// signed weak difference, reference minus level
    pub weak_signed: f64,
    pub strong_ratio: Option<f64>,
    pub weak_ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub plan: StudyPlan,
    pub levels: Vec<LevelError>,
    pub fitted_strong: Option<f64>,
    pub fitted_weak: Option<f64>,
    pub predicted: PredictedRates,
    pub trajectories: usize,
    pub seed: u64,
    pub wall_time: Duration,
}

/// 17 significant digits, round-trip exact.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_else(|| "nan".into())
}

impl ErrorReport {
    /// The study table followed by the footer block; wall time is left out so
    /// that reruns compare byte for byte.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,param,strong_error,weak_error,strong_ratio,weak_ratio\n");
        for (i, l) in self.levels.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{},{},{},{},{}",
                l.param,
                fmt_float(l.strong),
                fmt_float(l.weak),
                fmt_opt(l.strong_ratio),
                fmt_opt(l.weak_ratio)
            );
        }
        out.push_str("fitted_strong_rate,fitted_weak_rate,predicted_strong,predicted_weak,trajectories,seed\n");
        let (ps, pw) = match self.plan.mode {
            StudyMode::Temporal => (self.predicted.strong_time, self.predicted.weak_time),
            StudyMode::Spatial => (self.predicted.strong_space, self.predicted.weak_space),
        };
        let _ = writeln!(
            out,
            "{},{},{ps},{pw},{},{}",
            fmt_opt(self.fitted_strong),
            fmt_opt(self.fitted_weak),
            self.trajectories,
            self.seed
        );
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Prepared solver for one refinement level.
struct Level {
    space: FemSpace,
    stepper: Stepper,
    projector: NoiseProjector,
    u0: Vec<f64>,
    /// temporal coarsening factor relative to the sampled path
    factor: usize,
}

impl Level {
    fn new(plan: &StudyPlan, intervals: usize, steps: usize, factor: usize) -> Result<Self> {
        let space = FemSpace::new(intervals)?;
        let config = ModelConfig::new(plan.alpha, plan.gamma, plan.t_star, steps, plan.initial.clone())?;
        let stepper = Stepper::new(&config, &space)?;
        let projector = NoiseProjector::new(&NoiseModel::for_space(plan.m, &space)?, &space)?;
        let u0 = config.initial().project(&space)?;
        Ok(Self {
            space,
            stepper,
            projector,
            u0,
            factor,
        })
    }

    fn solve(&self, path: Option<&IncrementMatrix>) -> Result<Vec<f64>> {
        let sol = match path {
            None => self.stepper.run(&self.u0, None, None)?,
            Some(path) => {
                let coarse;
                let incs = if self.factor == 1 {
                    path
                } else {
                    coarse = coarsen_increments(path, self.factor)?;
                    &coarse
                };
                let loads = self.projector.all_loads(incs)?;
                self.stepper.run(&self.u0, Some(&loads), Some(incs.key()))?
            }
        };
        Ok(sol.into_final_state())
    }
}

struct Trajectory {
    reference: Vec<f64>,
    levels: Vec<Vec<f64>>,
}

/// Runs `plan` on the current rayon pool.
pub fn run_study(plan: &StudyPlan) -> Result<ErrorReport> {
    plan.validate()?;
    let started = Instant::now();
    let (reference, levels) = prepare_levels(plan)?;
    let path_model = NoiseModel::new(plan.m, reference.projector.modes())?;
    let path_steps = reference.stepper.config().steps();
    let tau = reference.stepper.config().tau();

    let trajectories: Vec<Trajectory> = (0..plan.trajectories as u64)
        .into_par_iter()
        .map(|p| -> Result<Trajectory> {
            let path = if plan.zero_noise {
                None
            } else {
                Some(sample_increments(
                    &path_model,
                    path_steps,
                    tau,
                    StreamKey::new(plan.seed, p),
                )?)
            };
            let reference = reference.solve(path.as_ref())?;
            let levels = levels
                .iter()
                .map(|l| l.solve(path.as_ref()))
                .collect::<Result<Vec<_>>>()?;
            Ok(Trajectory { reference, levels })
        })
        .collect::<Result<Vec<_>>>()?;

    let refs: Vec<Vec<f64>> = trajectories.iter().map(|t| t.reference.clone()).collect();
    let mut rows = Vec::with_capacity(levels.len());
    for (i, level) in levels.iter().enumerate() {
        let on_ref: Vec<Vec<f64>> = match plan.mode {
            StudyMode::Temporal => trajectories.iter().map(|t| t.levels[i].clone()).collect(),
            StudyMode::Spatial => trajectories
                .iter()
                .map(|t| prolong(&t.levels[i], &reference.space))
                .collect::<Result<_>>()?,
        };
        let own: Vec<Vec<f64>> = trajectories.iter().map(|t| t.levels[i].clone()).collect();
        let strong = strong_error(&refs, &on_ref, &reference.space)?;
        let weak_signed = weak_difference(&refs, &reference.space, &own, &level.space)?;
        rows.push(LevelError {
            param: plan.levels[i],
            strong,
            weak: weak_signed.abs(),
            weak_signed,
            strong_ratio: None,
            weak_ratio: None,
        });
    }
    let strong: Vec<f64> = rows.iter().map(|r| r.strong).collect();
    let weak: Vec<f64> = rows.iter().map(|r| r.weak).collect();
    let strong_fit = fit_rate(&strong, &plan.levels).ok();
    let weak_fit = fit_rate(&weak, &plan.levels).ok();
    for (i, row) in rows.iter_mut().enumerate().skip(1) {
        row.strong_ratio = strong_fit.as_ref().map(|f| f.ratios[i - 1]);
        row.weak_ratio = weak_fit.as_ref().map(|f| f.ratios[i - 1]);
    }
    let predicted = predicted_rates(plan.alpha, plan.gamma, plan.noise_regularity(), plan.initial.is_zero())?;
    Ok(ErrorReport {
        plan: plan.clone(),
        levels: rows,
        fitted_strong: strong_fit.map(|f| f.rate),
        fitted_weak: weak_fit.map(|f| f.rate),
        predicted,
        trajectories: plan.trajectories,
        seed: plan.seed,
        wall_time: started.elapsed(),
    })
}

/// Runs `plan` on a dedicated pool of `workers` threads.
pub fn run_study_with_workers(plan: &StudyPlan, workers: usize) -> Result<ErrorReport> {
    with_workers(workers, || run_study(plan))
}

/// Runs `f` inside a rayon pool with the given thread count (0 = all cores).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(f)
}

fn prepare_levels(plan: &StudyPlan) -> Result<(Level, Vec<Level>)> {
    match plan.mode {
        StudyMode::Temporal => {
            let reference = Level::new(plan, plan.fixed, plan.reference, 1)?;
            let levels = plan
                .levels
                .iter()
                .map(|&n| Level::new(plan, plan.fixed, n, plan.reference / n))
                .collect::<Result<_>>()?;
            Ok((reference, levels))
        }
        StudyMode::Spatial => {
            let reference = Level::new(plan, plan.reference, plan.fixed, 1)?;
            let levels = plan
                .levels
                .iter()
                .map(|&m| Level::new(plan, m, plan.fixed, 1))
                .collect::<Result<_>>()?;
            Ok((reference, levels))
        }
    }
}

/// Mean-square temporal increments `E‖u(t₁+δ) - u(t₁)‖²` of the zero-data solution.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderPlan {
    pub alpha: f64,
    pub gamma: f64,
    pub m: f64,
    pub mesh: usize,
    pub t1: f64,
    /// time step; every `t₁` and `t₁ + δ` must be a multiple of it
    pub tau: f64,
    /// increments `δ` as multiples of `tau`
    pub lags: Vec<usize>,
    pub trajectories: usize,
    pub seed: u64,
}

impl HolderPlan {
    /// `τ = 2⁻²⁰`, `t₁ = 1024τ`, lags 8τ to 256τ. The exponent only shows once
    /// `λ₁δ^α ≪ 1`, hence the short window.
    pub fn new(alpha: f64, gamma: f64, m: f64) -> Self {
        Self {
            alpha,
            gamma,
            m,
            mesh: 32,
            t1: 1.0 / 1024.0,
            tau: 1.0 / 1_048_576.0,
            lags: vec![8, 16, 32, 64, 128, 256],
            trajectories: 100,
            seed: 42,
        }
    }

    fn start_step(&self) -> Result<usize> {
        let k = (self.t1 / self.tau).round();
        if !(self.t1 >= 0.0) || (k * self.tau - self.t1).abs() > 1e-9 * self.t1.max(self.tau) {
            return Err(Error::Config(format!(
                "t1 = {} is not a multiple of the time step {}",
                self.t1, self.tau
            )));
        }
        Ok(k as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    pub deltas: Vec<f64>,
    pub mean_sq: Vec<f64>,
    pub exponent: f64,
    pub predicted: f64,
    pub trajectories: usize,
    pub seed: u64,
}

impl HolderReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,mean_sq_increment\n");
        for (d, v) in self.deltas.iter().zip(&self.mean_sq) {
            let _ = writeln!(out, "{},{}", fmt_float(*d), fmt_float(*v));
        }
        out.push_str("fitted_exponent,predicted_exponent,trajectories,seed\n");
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_float(self.exponent),
            fmt_float(self.predicted),
            self.trajectories,
            self.seed
        );
        out
    }
}

/// Exponent of `δ ↦ E‖u(t+δ) - u(t)‖²` for `u₀ = 0`: `min(2, 2η - 1)` with
/// `η = (1 - s/2)α + γ`.
pub fn predicted_holder_exponent(alpha: f64, gamma: f64, s: f64) -> f64 {
    (2.0 * ((1.0 - s / 2.0) * alpha + gamma) - 1.0).min(2.0)
}

/// Monte Carlo estimate of the temporal Hölder exponent (in mean square).
pub fn holder_probe(plan: &HolderPlan) -> Result<HolderReport> {
    check_orders(plan.alpha, plan.gamma)?;
    if plan.lags.len() < 2 || plan.lags.windows(2).any(|w| w[1] <= w[0]) || plan.lags[0] == 0 {
        return Err(Error::Config(
            "lags must be positive and strictly increasing, at least two".into(),
        ));
    }
    if plan.trajectories == 0 {
        return Err(Error::Config("at least one trajectory is required".into()));
    }
    if !(plan.tau > 0.0) {
        return Err(Error::Domain {
            param: "tau",
            value: plan.tau,
            reason: "time step must be positive",
        });
    }
    let k1 = plan.start_step()?;
    let steps = k1 + *plan.lags.last().expect("non-empty");
    let space = FemSpace::new(plan.mesh)?;
    let config = ModelConfig::new(
        plan.alpha,
        plan.gamma,
        steps as f64 * plan.tau,
        steps,
        InitialData::Zero,
    )?;
    let stepper = Stepper::new(&config, &space)?;
    let model = NoiseModel::for_space(plan.m, &space)?;
    let projector = NoiseProjector::new(&model, &space)?;
    let zero = vec![0.0; space.dim()];

    let samples: Vec<Vec<f64>> = (0..plan.trajectories as u64)
        .into_par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let incs = sample_increments(&model, steps, config.tau(), StreamKey::new(plan.seed, p))?;
            let loads = projector.all_loads(&incs)?;
            let sol = stepper.run(&zero, Some(&loads), Some(incs.key()))?;
            let base = sol.state(k1);
            Ok(plan
                .lags
                .iter()
                .map(|&lag| {
                    let diff: Vec<f64> = sol.state(k1 + lag).iter().zip(base).map(|(a, b)| a - b).collect();
                    space.mass().quad_form(&diff)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut mean_sq = vec![0.0; plan.lags.len()];
    for s in &samples {
        for (m, v) in mean_sq.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean_sq {
        *m /= plan.trajectories as f64;
    }
    let deltas: Vec<f64> = plan.lags.iter().map(|&l| l as f64 * plan.tau).collect();
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = mean_sq.iter().map(|v| v.ln()).collect();
    let exponent = fit_slope(&xs, &ys)?;
    Ok(HolderReport {
        deltas,
        mean_sq,
        exponent,
        predicted: predicted_holder_exponent(plan.alpha, plan.gamma, noise_regularity(plan.m)),
        trajectories: plan.trajectories,
        seed: plan.seed,
    })
}
