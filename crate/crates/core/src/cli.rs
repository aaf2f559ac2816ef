//! Command-line front end.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::bc::{self, BcOptions, RegionBoundary};
use crate::cdc::{self, CdcError, CdcOptions};
use crate::channel::{expected_cost, expected_distortion, BcActionSpec, PtpActionSpec};
use crate::config::{self, ConfigError, SpecConfig, VarsConfig};
use crate::gaussian::{self, GaussMode, GaussOptions, GaussPowers};
use crate::mc::{self, EstimateSpec, MiRequest};
use crate::output::{emit_csv, write_manifest, Cell, OutputError, RunManifest, Table};
use crate::probing;
use crate::prob::{conditional_mutual_information, mutual_information};

#[derive(Debug, Parser)]
#[command(name = "actstate", version, about = "Capacity computations for channels with action-dependent states")]
pub struct Cli {
    /// Worker threads for solver restarts (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// One of error, warn, info, debug, trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity-distortion-cost function of a point-to-point spec.
    Cdc(CdcArgs),
    /// Rate-distortion curves of the scalar Gaussian example.
    Gaussian(GaussianArgs),
    /// Capacity-cost region of a degraded broadcast spec.
    BcRegion(BcArgs),
    /// Closed-form region of the binary broadcast example.
    BinaryExample(BinaryArgs),
    /// Region of a broadcast channel with a probing encoder.
    Probing(BcArgs),
    /// Monte Carlo check of a spec and decision variables.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct CdcArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub dist: Option<f64>,
    #[arg(long)]
    pub cost: f64,
    #[arg(long)]
    pub u_size: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Distortion sweep `D0:D1:steps`, inclusive; replaces `--dist`.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Restrict p(x|u,s) to deterministic maps.
    #[arg(long)]
    pub deterministic_x: bool,
    /// Write the achieving variables of the last point as a vars file.
    #[arg(long)]
    pub vars_out: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GaussianArgs {
    /// A `gaussian` config; overrides the power flags.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub pa: f64,
    #[arg(long, default_value_t = 1.0)]
    pub px: f64,
    #[arg(long, default_value_t = 1.0)]
    pub vw: f64,
    #[arg(long, default_value_t = 1.0)]
    pub vz: f64,
    #[arg(long, default_value = "0:1:41")]
    pub d_grid: String,
    #[arg(long, default_value = "joint,message_only,action_independent")]
    pub modes: String,
    #[arg(long, default_value_t = 50)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BcArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub cost: f64,
    #[arg(long)]
    pub u1: Option<usize>,
    #[arg(long)]
    pub u2: Option<usize>,
    #[arg(long, default_value_t = 33)]
    pub mu_grid: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub enum_cap: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BinaryArgs {
    #[arg(long, default_value_t = 0.1)]
    pub n1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub n2t: f64,
    #[arg(long, default_value_t = 0.0)]
    pub b: f64,
    /// Number of equally spaced α values in [0, 0.5].
    #[arg(long, default_value_t = 51)]
    pub alpha_grid: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub vars: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{0}")]
    Usage(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) | CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

impl From<CdcError> for CliError {
    fn from(e: CdcError) -> Self {
        match e {
            CdcError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            CdcError::InvalidOptions(_) => CliError::Usage(e.to_string()),
            other => numerical(other),
        }
    }
}

impl From<bc::BcError> for CliError {
    fn from(e: bc::BcError) -> Self {
        match e {
            bc::BcError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            bc::BcError::InvalidOptions(_) => CliError::Usage(e.to_string()),
            bc::BcError::Model(crate::channel::ModelError::NotDegraded { .. })
            | bc::BcError::Model(crate::channel::ModelError::InvalidConstraint(_)) => CliError::Usage(e.to_string()),
            other => numerical(other),
        }
    }
}

impl From<probing::ProbingError> for CliError {
    fn from(e: probing::ProbingError) -> Self {
        match e {
            probing::ProbingError::Region(r) => r.into(),
            probing::ProbingError::Invalid(_) => CliError::Usage(e.to_string()),
            other => numerical(other),
        }
    }
}

/// Parses `start:stop:steps` into `steps` equally spaced values.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("grid {s:?} must look like start:stop:steps"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() || b < a {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect())
}

fn load_spec(path: &Path) -> Result<config::Loaded<SpecConfig>, CliError> {
    let l = config::parse_config(path)?;
    for w in &l.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(l)
}

fn wrong_kind(path: &Path, want: &str, got: &str) -> CliError {
    CliError::Usage(format!("{}: expected a `{want}` config, found `{got}`", path.display()))
}

/// What a finished run produced, for the manifest.
#[derive(Debug, Clone, Default)]
pub struct RunInfo {
    pub digest: Option<String>,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
}

pub fn run(cli: &Cli) -> Result<RunInfo, CliError> {
    match &cli.command {
        Command::Cdc(a) => run_cdc(a),
        Command::Gaussian(a) => run_gaussian(a),
        Command::BcRegion(a) => run_bc(a, false),
        Command::Probing(a) => run_bc(a, true),
        Command::BinaryExample(a) => run_binary(a),
        Command::Verify(a) => run_verify(a),
    }
}

pub fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Cdc(_) => "cdc",
        Command::Gaussian(_) => "gaussian",
        Command::BcRegion(_) => "bc-region",
        Command::BinaryExample(_) => "binary-example",
        Command::Probing(_) => "probing",
        Command::Verify(_) => "verify",
    }
}

/// Runs the command and writes the manifest next to its first output.
pub fn run_with_manifest(cli: &Cli, args: Vec<String>) -> Result<RunInfo, CliError> {
    let start = Instant::now();
    let info = run(cli)?;
    if let Some(first) = info.outputs.first() {
        let m = RunManifest {
            subcommand: subcommand_name(&cli.command).into(),
            config_digest: info.digest.clone(),
            seed: info.seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s: start.elapsed().as_secs_f64(),
            outputs: info.outputs.iter().map(|p| p.display().to_string()).collect(),
            args,
        };
        write_manifest(&m, first)?;
    }
    Ok(info)
}

fn run_cdc(a: &CdcArgs) -> Result<RunInfo, CliError> {
    let loaded = load_spec(&a.spec)?;
    let SpecConfig::Ptp(spec) = &loaded.value else {
        return Err(wrong_kind(&a.spec, "ptp", loaded.value.kind()));
    };
    let opts = CdcOptions {
        u_size: a.u_size,
        restarts: a.restarts,
        seed: a.seed,
        deterministic_x: a.deterministic_x,
        ..Default::default()
    };
    let grid = match (&a.sweep, a.dist) {
        (Some(s), _) => parse_grid(s)?,
        (None, Some(d)) => vec![d],
        (None, None) => return Err(CliError::Usage("give --dist or --sweep".into())),
    };
    let mut table = Table::new(&["D", "Gamma", "rate_bits", "achieved_D", "achieved_cost", "restarts_used"]);
    let pts = cdc::sweep_cdc(spec, &grid, a.cost, &opts).map_err(|e| match e {
        CdcError::Model(crate::channel::ModelError::InvalidConstraint(m)) => CliError::Usage(m),
        other => other.into(),
    })?;
    for p in &pts {
        table.push(vec![
            p.distortion_budget.into(),
            a.cost.into(),
            p.rate.into(),
            p.result.achieved_distortion.into(),
            p.result.achieved_cost.into(),
            p.result.restarts_used.into(),
        ]);
    }
    emit_csv(&table, &a.out)?;
    let mut outputs = vec![a.out.clone()];
    if let (Some(path), Some(last)) = (&a.vars_out, pts.last()) {
        std::fs::write(path, config::cdc_vars_to_toml(&last.result.achieving_vars))
            .map_err(|e| OutputError::Write { path: path.display().to_string(), msg: e.to_string() })?;
        outputs.push(path.clone());
    }
    Ok(RunInfo { digest: Some(loaded.digest), seed: Some(a.seed), outputs })
}

fn run_gaussian(a: &GaussianArgs) -> Result<RunInfo, CliError> {
    let (powers, digest) = match &a.spec {
        Some(p) => {
            let l = load_spec(p)?;
            match l.value {
                SpecConfig::Gaussian(g) => (g, Some(l.digest)),
                other => return Err(wrong_kind(p, "gaussian", other.kind())),
            }
        }
        None => (GaussPowers::new(a.pa, a.px, a.vw, a.vz).map_err(|e| CliError::Usage(e.to_string()))?, None),
    };
    let grid = parse_grid(&a.d_grid)?;
    let modes = a
        .modes
        .split(',')
        .map(|m| GaussMode::parse(m.trim()).ok_or_else(|| CliError::Usage(format!("unknown mode {m:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = GaussOptions { starts: a.starts, seed: a.seed, ..Default::default() };
    let mut table =
        Table::new(&["D", "mode", "rate_bits", "alpha", "beta", "delta", "g", "achieved_distortion", "feasible"]);
    for mode in modes {
        for p in gaussian::sweep_gauss(&powers, &grid, mode, &opts).map_err(numerical)? {
            let q = p.point;
            table.push(vec![
                p.d.into(),
                mode.name().into(),
                q.rate.into(),
                q.params.alpha.into(),
                q.params.beta.into(),
                q.params.delta.into(),
                q.params.g.into(),
                q.distortion.into(),
                q.feasible.into(),
            ]);
        }
    }
    emit_csv(&table, &a.out)?;
    Ok(RunInfo { digest, seed: Some(a.seed), outputs: vec![a.out.clone()] })
}

fn region_table(region: &RegionBoundary, first: &str) -> Table {
    let mut t = Table::new(&[first, "R1_bits", "R2_bits", "cost", "hull"]);
    for p in &region.points {
        t.push(vec![p.mu.map_or(Cell::Empty, Cell::Num), p.rates.r1.into(), p.rates.r2.into(), p.cost.into(), false.into()]);
    }
    for h in &region.hull {
        t.push(vec![Cell::Empty, h.r1.into(), h.r2.into(), Cell::Empty, true.into()]);
    }
    t
}

fn run_bc(a: &BcArgs, probing_mode: bool) -> Result<RunInfo, CliError> {
    let loaded = load_spec(&a.spec)?;
    let opts = BcOptions {
        u1_size: a.u1,
        u2_size: a.u2,
        mu_grid: a.mu_grid,
        restarts: a.restarts,
        enum_cap: a.enum_cap,
        seed: a.seed,
        ..Default::default()
    };
    let region = match (&loaded.value, probing_mode) {
        (SpecConfig::Bc(spec), false) => bc::solve_bc_region(spec, a.cost, &opts)?,
        (SpecConfig::Probing(spec), true) => probing::probing_region(spec, a.cost, &opts)?,
        (other, false) => return Err(wrong_kind(&a.spec, "bc", other.kind())),
        (other, true) => return Err(wrong_kind(&a.spec, "probing", other.kind())),
    };
    emit_csv(&region_table(&region, "mu"), &a.out)?;
    Ok(RunInfo { digest: Some(loaded.digest), seed: Some(a.seed), outputs: vec![a.out.clone()] })
}

fn run_binary(a: &BinaryArgs) -> Result<RunInfo, CliError> {
    let usage = |e: bc::BcError| CliError::Usage(e.to_string());
    if a.alpha_grid == 0 {
        return Err(CliError::Usage("alpha grid needs at least one point".into()));
    }
    let alphas: Vec<f64> = if a.alpha_grid == 1 {
        vec![0.0]
    } else {
        (0..a.alpha_grid).map(|i| 0.5 * i as f64 / (a.alpha_grid - 1) as f64).collect()
    };
    let mut region = bc::binary_example_region(a.n1, a.n2t, &alphas).map_err(usage)?;
    let spec = bc::binary_example_spec(a.n1, a.n2t, a.b).map_err(usage)?;
    let mut t = Table::new(&["alpha", "R1_bits", "R2_bits", "cost", "hull"]);
    for (p, &alpha) in region.points.iter_mut().zip(&alphas) {
        p.cost = bc::bc_rates(&spec, &bc::binary_scheme_vars(a.b, alpha).map_err(usage)?)?.cost;
        t.push(vec![alpha.into(), p.rates.r1.into(), p.rates.r2.into(), p.cost.into(), false.into()]);
    }
    for h in &region.hull {
        t.push(vec![Cell::Empty, h.r1.into(), h.r2.into(), Cell::Empty, true.into()]);
    }
    emit_csv(&t, &a.out)?;
    Ok(RunInfo { digest: None, seed: None, outputs: vec![a.out.clone()] })
}

fn verify_rows(
    table: &mut Table,
    quantities: &[(&str, f64, f64, Option<f64>)],
    n: usize,
    seed: u64,
) {
    for &(name, analytic, estimate, se) in quantities {
        table.push(vec![name.into(), analytic.into(), estimate.into(), se.map_or(Cell::Empty, Cell::Num), n.into(), seed.into()]);
    }
}

fn mi_req(label: &str, a: usize, b: usize, c: &[usize]) -> MiRequest {
    MiRequest { label: label.into(), a: vec![a], b: vec![b], c: c.to_vec() }
}

fn verify_ptp(spec: &PtpActionSpec, vars: &cdc::CdcDecisionVars, n: usize, seed: u64, t: &mut Table) -> Result<(), CliError> {
    use cdc::axis::*;
    let j = cdc::cdc_joint(spec, vars).map_err(|e| CliError::Usage(e.to_string()))?;
    let i_uy = mutual_information(&j, &[U], &[Y]).map_err(numerical)?;
    let i_us = conditional_mutual_information(&j, &[U], &[S], &[A]).map_err(numerical)?;
    let cost = expected_cost(&j, A, X, &spec.cost).map_err(numerical)?;
    let dist = expected_distortion(&j, S, U, &vars.phi, &spec.distortion).map_err(numerical)?;
    let batch = mc::sample_joint(&j, n, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let est = mc::empirical_estimates(
        &batch,
        &EstimateSpec {
            cost: Some((A, X, spec.cost.clone())),
            distortion: Some((S, U, vars.phi.clone(), spec.distortion.clone())),
            mi: vec![mi_req("I(U;Y)", U, Y, &[]), mi_req("I(U;S|A)", U, S, &[A])],
        },
    )
    .map_err(numerical)?;
    let (c, d) = (est.cost.expect("requested"), est.distortion.expect("requested"));
    verify_rows(
        t,
        &[
            ("I(U;Y)", i_uy, est.mi[0].1, None),
            ("I(U;S|A)", i_us, est.mi[1].1, None),
            ("rate", i_uy - i_us, est.mi[0].1 - est.mi[1].1, None),
            ("cost", cost, c.mean, Some(c.std_error)),
            ("distortion", dist, d.mean, Some(d.std_error)),
        ],
        n,
        seed,
    );
    Ok(())
}

fn verify_bc(spec: &BcActionSpec, vars: &bc::BcDecisionVars, n: usize, seed: u64, t: &mut Table) -> Result<(), CliError> {
    use bc::axis::*;
    let j = bc::bc_joint(spec, vars).map_err(|e| CliError::Usage(e.to_string()))?;
    let ev = bc::bc_rates(spec, vars)?;
    let batch = mc::sample_joint(&j, n, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let est = mc::empirical_estimates(
        &batch,
        &EstimateSpec {
            cost: Some((A, X, spec.cost.clone())),
            distortion: None,
            mi: vec![mi_req("R1", U1, Y1, &[U2]), mi_req("R2", U2, Y2, &[])],
        },
    )
    .map_err(numerical)?;
    let c = est.cost.expect("requested");
    verify_rows(
        t,
        &[("R1", ev.r1, est.mi[0].1, None), ("R2", ev.r2, est.mi[1].1, None), ("cost", ev.cost, c.mean, Some(c.std_error))],
        n,
        seed,
    );
    Ok(())
}

fn run_verify(a: &VerifyArgs) -> Result<RunInfo, CliError> {
    let loaded = load_spec(&a.spec)?;
    let (an, sn, xn) = match &loaded.value {
        SpecConfig::Ptp(s) => (s.sizes.a, s.sizes.s, s.sizes.x),
        SpecConfig::Bc(s) => (s.sizes.a, s.sizes.s, s.sizes.x),
        SpecConfig::Probing(s) => (2, s.s_size() + 1, s.x_size),
        SpecConfig::Gaussian(_) => return Err(CliError::Usage("verify works on discrete specs".into())),
    };
    let vars = config::parse_vars(&a.vars, an, sn, xn)?;
    for w in &vars.warnings {
        log::warn!("{}: {w}", a.vars.display());
    }
    let mut t = Table::new(&["quantity", "analytic", "estimate", "std_error", "n", "seed"]);
    match (&loaded.value, &vars.value) {
        (SpecConfig::Ptp(s), VarsConfig::Cdc(v)) => verify_ptp(s, v, a.n, a.seed, &mut t)?,
        (SpecConfig::Bc(s), VarsConfig::Bc(v)) => verify_bc(s, v, a.n, a.seed, &mut t)?,
        (SpecConfig::Probing(s), VarsConfig::Bc(v)) => {
            let r = probing::reduce_probing(s)?;
            verify_bc(&r.spec, v, a.n, a.seed, &mut t)?
        }
        (s, _) => return Err(CliError::Usage(format!("vars file does not match a `{}` spec", s.kind()))),
    }
    emit_csv(&t, &a.out)?;
    Ok(RunInfo { digest: Some(loaded.digest), seed: Some(a.seed), outputs: vec![a.out.clone()] })
}
