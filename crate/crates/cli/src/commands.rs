//! Subcommand runners: resolve fields, validate, compute, render.

use priorconflict::analytic::{
    binomial_check, nig_lambda_check, nig_mean_shift_check, nig_s1_check, normal_check, BinomialBetaModel,
    MixtureTarget, NigModel, NormalLocationModel,
};
use priorconflict::lasso::{
    critical_values, many_means_power, regression_power_study, LassoStatistic, ManyMeansSetup, RegressionSetup,
    ScoreConvention,
};
use priorconflict::quadrature::DiskGrid;
use priorconflict::quantum::physical::physical_grid;
use priorconflict::quantum::scores::{g1_grid, g2_grid};
use priorconflict::quantum::{
    family_checks, g1_g2_power_study, physical_check, physical_power_study, ExpansionKind, PhysicalOptions,
    TrineGeometry,
};
use priorconflict::{McConfig, Tail, DEFAULT_SEED};

use crate::cli::*;
use crate::config::{Counts, Real, Reals, Resolver, Switch};
use crate::error::{CliError, CliResult, WithSeed};
use crate::output::{self, CritRow, Output};

pub const WORKERS_ENV: &str = "PRIORCONFLICT_WORKERS";

/// Everything a runner needs besides its own arguments.
pub struct Ctx<'a> {
    pub res: Resolver<'a>,
    pub global: &'a GlobalArgs,
    pub out: Output,
}

impl Ctx<'_> {
    pub fn real(&self, flag: Option<Real>, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.res.or(flag, key, Real(default))?.0)
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.res.or(self.global.seed, "seed", DEFAULT_SEED)
    }

    fn workers(&self) -> CliResult<usize> {
        if let Some(w) = self.res.get(self.global.workers, "workers")? {
            return Ok(w);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("workers: {WORKERS_ENV}='{v}' is not a count"))),
            Err(_) => Ok(0),
        }
    }

    pub fn mc(&self, default_draws: usize, default_tail: Tail) -> CliResult<McConfig> {
        let seed = self.seed()?;
        let draws = self.res.or(self.global.draws, "draws", default_draws)?;
        if draws < 100 {
            return Err(CliError::Validation(format!("draws: need at least 100, got {draws}")));
        }
        let alpha = self.res.or(self.global.alpha, "alpha", 0.05)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::Validation(format!("alpha: must lie in (0, 1), got {alpha}")));
        }
        let cfg = McConfig::new(draws, seed)
            .with_workers(self.workers()?)
            .with_alpha(alpha)
            .with_tail(self.res.or(self.global.tail, "tail", default_tail)?);
        cfg.validate().with_seed(seed)?;
        Ok(cfg)
    }

    pub fn reps(&self, default: usize) -> CliResult<usize> {
        let r = self.res.or(self.global.reps, "reps", default)?;
        if r == 0 {
            return Err(CliError::Validation("reps: must be positive".into()));
        }
        Ok(r)
    }

    pub fn format(&self, default: Format) -> CliResult<Format> {
        self.res.or(self.global.format, "format", default)
    }

    /// Reject leftover config keys, then announce the run on stderr.
    pub fn ready(&self, what: &str, cfg: &McConfig) -> CliResult<()> {
        self.res.finish()?;
        eprintln!(
            "priorconflict: {what} ({} draws, seed {}, workers {})",
            cfg.n_draws, cfg.base_seed, cfg.n_workers
        );
        Ok(())
    }
}

fn positive(key: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("{key}: must be positive, got {v}")))
    }
}

pub fn run_check(cmd: &CheckCmd, ctx: &Ctx) -> CliResult<()> {
    let (label, result) = match cmd {
        CheckCmd::Normal(a) => {
            let mu0 = ctx.real(a.mu0, "mu0", 0.0)?;
            let tau0sq = ctx.real(a.tau0sq, "tau0sq", 1.0)?;
            let sigmasq = ctx.real(a.sigmasq, "sigmasq", 1.0)?;
            let y = ctx.res.required::<Reals>(a.y.clone(), "y")?.0;
            let format = ctx.format(Format::Json)?;
            let cfg = ctx.mc(10_000, Tail::Upper)?;
            let seed = cfg.base_seed;
            let base = NormalLocationModel::new(mu0, tau0sq, sigmasq).with_seed(seed)?;
            let (model, ybar) = base.reduce(&y).with_seed(seed)?;
            ctx.ready("normal check", &cfg)?;
            let r = normal_check(&model, ybar, &cfg).with_seed(seed)?;
            return ctx.out.write(&output::checks(&[("normal".into(), r)], format));
        }
        CheckCmd::Binomial(a) => {
            let n = ctx.res.required(a.n, "n")?;
            let y = ctx.res.required(a.y, "y")?;
            let pa = ctx.real(a.a, "a", 1.0)?;
            let pb = ctx.real(a.b, "b", 1.0)?;
            let target = match ctx.res.or(a.target, "target", Target::Jeffreys)? {
                Target::Jeffreys => MixtureTarget::Jeffreys,
                Target::Uniform => MixtureTarget::Uniform,
            };
            let cfg = ctx.mc(10_000, Tail::Lower)?;
            let seed = cfg.base_seed;
            if y > n {
                return Err(CliError::Validation(format!("y: {y} exceeds n = {n}")));
            }
            let model = BinomialBetaModel::new(n, pa, pb, target).with_seed(seed)?;
            ctx.ready("binomial check", &cfg)?;
            ("binomial", binomial_check(&model, y, &cfg).with_seed(seed)?)
        }
        CheckCmd::Nig(a) => {
            let mu0 = ctx.real(a.mu0, "mu0", 0.0)?;
            let lambda0 = ctx.real(a.lambda0, "lambda0", 1.0)?;
            let pa = ctx.real(a.a, "a", 2.0)?;
            let pb = ctx.real(a.b, "b", 1.0)?;
            let y = ctx.res.required::<Reals>(a.y.clone(), "y")?.0;
            let expansion = ctx.res.or(a.expansion, "expansion", NigExpansion::S1)?;
            let n_post = ctx.res.or(a.posterior_draws, "posterior_draws", 200)?;
            let cfg = ctx.mc(10_000, Tail::Upper)?;
            let seed = cfg.base_seed;
            let model = NigModel::new(mu0, lambda0, pa, pb, y.len()).with_seed(seed)?;
            ctx.ready("normal-inverse-gamma check", &cfg)?;
            let r = match expansion {
                NigExpansion::S1 => nig_s1_check(&model, &y, &cfg),
                NigExpansion::Lambda => nig_lambda_check(&model, &y, n_post, &cfg),
                NigExpansion::MeanShift => nig_mean_shift_check(&model, &y, &cfg),
            };
            ("nig", r.with_seed(seed)?)
        }
    };
    let format = ctx.format(Format::Json)?;
    ctx.out.write(&output::checks(&[(label.into(), result)], format))
}

/// q = 0.1, 0.2, ..., 2.0.
pub fn default_q_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 10.0).collect()
}

fn q_grid(ctx: &Ctx, flag: Option<Reals>) -> CliResult<Vec<f64>> {
    let g = ctx.res.or(flag, "q_grid", Reals(default_q_grid()))?.0;
    if let Some(q) = g.iter().find(|q| **q <= 0.0) {
        return Err(CliError::Validation(format!("q_grid: shapes must be positive, got {q}")));
    }
    Ok(g)
}

pub fn crit_row(stat: &str, setup: &ManyMeansSetup, cfg: &McConfig) -> CliResult<CritRow> {
    let statistic = match stat {
        "kurtosis" => LassoStatistic::Kurtosis,
        _ => LassoStatistic::Score(ScoreConvention::Tabulated),
    };
    let (lower, upper) = critical_values(statistic, setup, cfg).with_seed(cfg.base_seed)?;
    Ok(CritRow {
        statistic: stat.into(),
        n: setup.n,
        m: setup.m,
        tau: setup.tau,
        lower,
        upper,
        n_draws: cfg.n_draws,
        seed: cfg.base_seed,
    })
}

pub fn run_lasso(cmd: &LassoCmd, ctx: &Ctx) -> CliResult<()> {
    match cmd {
        LassoCmd::MeansCrit(a) => {
            let n = ctx.res.or(a.n, "n", 10)?;
            let m = ctx.res.or(a.m, "m", 20)?;
            let tau = ctx.real(a.tau, "tau", 1.0)?;
            let which = ctx.res.or(a.statistic, "statistic", StatisticChoice::Both)?;
            let format = ctx.format(Format::Csv)?;
            let cfg = ctx.mc(100_000, Tail::TwoSided)?;
            let setup = ManyMeansSetup::with_prior(n, m, tau, 1.0).with_seed(cfg.base_seed)?;
            ctx.ready("many-means critical values", &cfg)?;
            let stats: &[&str] = match which {
                StatisticChoice::Kurtosis => &["kurtosis"],
                StatisticChoice::Score => &["score"],
                StatisticChoice::Both => &["kurtosis", "score"],
            };
            let rows = stats.iter().map(|s| crit_row(s, &setup, &cfg)).collect::<CliResult<Vec<_>>>()?;
            ctx.out.write(&output::crit_rows(&rows, format))
        }
        LassoCmd::MeansPower(a) => {
            let n = ctx.res.or(a.n, "n", 10)?;
            let m = ctx.res.or(a.m, "m", 20)?;
            let tau = ctx.real(a.tau, "tau", 1.0)?;
            let grid = q_grid(ctx, a.q_grid.clone())?;
            let reps = ctx.reps(500)?;
            let format = ctx.format(Format::Csv)?;
            let cfg = ctx.mc(10_000, Tail::TwoSided)?;
            let setup = ManyMeansSetup::with_prior(n, m, tau, 1.0).with_seed(cfg.base_seed)?;
            ctx.ready("many-means power study", &cfg)?;
            let t = many_means_power(&setup, &grid, reps, &cfg).with_seed(cfg.base_seed)?;
            ctx.out.write(&output::lasso_tables(&[t], format))
        }
        LassoCmd::RegPower(a) => {
            let n = ctx.res.or(a.n, "n", 100)?;
            let p = ctx.res.or(a.p, "p", 25)?;
            let tau = positive("tau", ctx.real(a.tau, "tau", 1.0)?)?;
            let grid = q_grid(ctx, a.q_grid.clone())?;
            let standardize = ctx.res.or(a.standardize, "standardize", Switch(false))?.0;
            let reps = ctx.reps(200)?;
            let format = ctx.format(Format::Csv)?;
            let cfg = ctx.mc(2_000, Tail::TwoSided)?;
            let mut setup = RegressionSetup::new(n, p).with_seed(cfg.base_seed)?.standardized(standardize);
            setup.tau = tau;
            ctx.ready("regression power study", &cfg)?;
            let t = regression_power_study(&setup, &grid, reps, &cfg).with_seed(cfg.base_seed)?;
            ctx.out.write(&output::lasso_tables(&[t], format))
        }
    }
}

fn geometry(ctx: &Ctx, a: &GeometryArgs) -> CliResult<(TrineGeometry, DiskGrid)> {
    let cos_sq = ctx.res.get(a.cos_sq, "cos_sq")?;
    let gamma = ctx.res.get(a.gamma, "gamma")?;
    let radial = ctx.res.or(a.radial, "radial", DiskGrid::DEFAULT_RADIAL)?;
    let angular = ctx.res.or(a.angular, "angular", DiskGrid::DEFAULT_ANGULAR)?;
    let g = match (cos_sq, gamma) {
        (Some(_), Some(_)) => return Err(CliError::Validation("gamma: give either cos_sq or gamma, not both".into())),
        (Some(c), None) => TrineGeometry::from_cos_sq(c.0),
        (None, Some(g)) => TrineGeometry::new(g.0),
        (None, None) => Ok(TrineGeometry::ideal()),
    }
    .map_err(|e| CliError::Validation(format!("cos_sq: {e}")))?;
    let grid = DiskGrid::new(radial, angular).map_err(|e| CliError::Validation(format!("radial/angular: {e}")))?;
    Ok((g, grid))
}

fn counts3(ctx: &Ctx, flag: Option<Counts>) -> CliResult<[u64; 3]> {
    let y = ctx.res.required(flag, "y")?.0;
    <[u64; 3]>::try_from(y.as_slice())
        .map_err(|_| CliError::Validation(format!("y: need three counts, got {}", y.len())))
}

fn proportions(ctx: &Ctx, flag: Option<Reals>) -> CliResult<[f64; 3]> {
    let q = ctx.res.or(flag, "q", Reals(vec![1.0 / 3.0; 3]))?.0;
    <[f64; 3]>::try_from(q.as_slice()).map_err(|_| CliError::Validation(format!("q: need three values, got {}", q.len())))
}

fn physical_opts(ctx: &Ctx, h: Option<Real>, grid: &DiskGrid) -> CliResult<PhysicalOptions> {
    let h = positive("h", ctx.real(h, "h", 1e-3)?)?;
    let (r, a) = grid.shape();
    Ok(PhysicalOptions::default().with_step(h).with_grid(r, a))
}

pub fn run_quantum(cmd: &QuantumCmd, ctx: &Ctx) -> CliResult<()> {
    match cmd {
        QuantumCmd::G1(a) | QuantumCmd::G2(a) => {
            let which = usize::from(matches!(cmd, QuantumCmd::G2(_)));
            let y = counts3(ctx, a.y.clone())?;
            let alpha0 = ctx.real(a.alpha0, "alpha0", 30.0)?;
            let q = proportions(ctx, a.q.clone())?;
            let (geom, grid) = geometry(ctx, &a.geometry)?;
            let format = ctx.format(Format::Json)?;
            let cfg = ctx.mc(10_000, Tail::Upper)?;
            ctx.ready(if which == 0 { "g1 check" } else { "g2 check" }, &cfg)?;
            let rs = family_checks(&y, alpha0, q, &geom, &grid, &cfg).with_seed(cfg.base_seed)?;
            let label = if which == 0 { "g1" } else { "g2" };
            ctx.out.write(&output::checks(&[(label.into(), rs[which].clone())], format))
        }
        QuantumCmd::Physical(a) => {
            let y = counts3(ctx, a.y.clone())?;
            let prior_alpha = positive("prior_alpha", ctx.real(a.prior_alpha, "prior_alpha", 1.0)?)?;
            let (geom, grid) = geometry(ctx, &a.geometry)?;
            let opts = physical_opts(ctx, a.h, &grid)?;
            let format = ctx.format(Format::Json)?;
            let cfg = ctx.mc(10_000, Tail::Upper)?;
            ctx.ready("physical check", &cfg)?;
            let r = physical_check(&y, prior_alpha, &geom, &opts, &cfg).with_seed(cfg.base_seed)?;
            ctx.out.write(&output::checks(&[("physical".into(), r)], format))
        }
        QuantumCmd::Power(a) => {
            let family = ctx.res.or(a.family, "family", PowerFamily::Physical)?;
            let n_trials = ctx.res.or(a.n_trials, "n_trials", 50)?;
            let (geom, grid) = geometry(ctx, &a.geometry)?;
            let gamma_grid = ctx.res.get(a.grid.clone(), "grid")?.map(|r| r.0);
            let alpha0 = ctx.real(a.alpha0, "alpha0", 30.0)?;
            let q = proportions(ctx, a.q.clone())?;
            let prior_alpha = positive("prior_alpha", ctx.real(a.prior_alpha, "prior_alpha", 1.0)?)?;
            let opts = physical_opts(ctx, a.h, &grid)?;
            let reps = ctx.reps(500)?;
            let format = ctx.format(Format::Csv)?;
            let cfg = ctx.mc(10_000, Tail::Upper)?;
            if n_trials == 0 {
                return Err(CliError::Validation("n_trials: must be positive".into()));
            }
            let seed = cfg.base_seed;
            ctx.ready("quantum power study", &cfg)?;
            let curves = match family {
                PowerFamily::Physical => {
                    let gg = gamma_grid.unwrap_or_else(|| physical_grid(&geom));
                    physical_power_study(prior_alpha, &geom, &gg, n_trials, reps, &opts, &cfg).with_seed(seed)?
                }
                PowerFamily::G1 | PowerFamily::G2 => {
                    let (kind, default) = if family == PowerFamily::G1 {
                        (ExpansionKind::G1JeffreysMix, g1_grid())
                    } else {
                        (ExpansionKind::G2LocationShift, g2_grid())
                    };
                    let gg = gamma_grid.unwrap_or(default);
                    g1_g2_power_study(alpha0, q, &geom, kind, &gg, n_trials, reps, &grid, &cfg).with_seed(seed)?
                }
            };
            let context = match family {
                PowerFamily::Physical => String::new(),
                PowerFamily::G1 => ",data=g1".into(),
                PowerFamily::G2 => ",data=g2".into(),
            };
            ctx.out.write(&output::curves(&curves, format, &context))
        }
    }
}
