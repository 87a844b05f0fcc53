//! Per-command config shapes, dispatch, and output formatting.
//!
//! Every command follows the same discipline: parse the whole config, build
//! and validate every domain object, run the solves, and only then print.
//! A failure anywhere before printing leaves stdout empty.

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;
use std::io::Read;

use chicap_core::additivity::{
    constrained_additivity_gap, hat_h_superadditivity_gap, prop2_directsum_check,
    prop2_noiseless_check, subadditivity_gap, violation_search, weak_additivity_check,
    GapReport,
};
use chicap_core::capacity::chi_capacity;
use chicap_core::certificate::optimality_certificate;
use chicap_core::opt::config::OptimizerConfig;
use chicap_core::profile::f_alpha_profile;
use chicap_core::records::{
    to_json_line, ChannelRecord, ConstraintRecord, EnsembleRecord, ExtensionRecord, MatrixLit,
    ReportRecord,
};
use chicap_core::shor_cap::prop3_check;

use crate::{Cli, Command, OutputMode};

/// Optimizer overrides accepted in every config file. Command line flags
/// win over these.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptOverrides {
    #[serde(default)]
    restarts: Option<usize>,
    #[serde(default)]
    max_iterations: Option<usize>,
    #[serde(default)]
    ensemble_size: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tol_value: Option<f64>,
    #[serde(default)]
    tol_certificate: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CapacityConfig {
    channel: ChannelRecord,
    constraint: ConstraintRecord,
    #[serde(default)]
    optimizer: OptOverrides,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CertifyConfig {
    channel: ChannelRecord,
    constraint: ConstraintRecord,
    ensemble: EnsembleRecord,
    #[serde(default)]
    optimizer: OptOverrides,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShorConfig {
    extension: ExtensionRecord,
    /// Side channel; the trivial one-dimensional channel when absent.
    #[serde(default)]
    psi: Option<ChannelRecord>,
    /// Constraint on the side input; unconstrained when absent.
    #[serde(default)]
    constraint: Option<ConstraintRecord>,
    /// Index counts to sweep; the extension's own count when absent.
    #[serde(default)]
    d_sweep: Option<Vec<usize>>,
    #[serde(default)]
    optimizer: OptOverrides,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AdditivityConfig {
    phi: ChannelRecord,
    psi: ChannelRecord,
    /// Joint input state: enables the subadditivity and roof gap reports.
    #[serde(default)]
    sigma: Option<MatrixLit>,
    /// Factor constraints: enable the constrained additivity report.
    #[serde(default)]
    a: Option<ConstraintRecord>,
    #[serde(default)]
    b: Option<ConstraintRecord>,
    /// Pinned marginals: enable the noiseless-factor check against psi.
    #[serde(default)]
    rho: Option<MatrixLit>,
    #[serde(default)]
    omega: Option<MatrixLit>,
    /// Mixture base and weight: enable the direct sum chain check (needs
    /// sigma as well).
    #[serde(default)]
    phi0: Option<ChannelRecord>,
    #[serde(default)]
    q: Option<f64>,
    #[serde(default)]
    optimizer: OptOverrides,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeakConfig {
    phi: ChannelRecord,
    #[serde(rename = "A")]
    a: MatrixLit,
    psi: ChannelRecord,
    #[serde(rename = "B")]
    b: MatrixLit,
    gamma: f64,
    #[serde(default = "default_grid")]
    grid: usize,
    #[serde(default)]
    optimizer: OptOverrides,
}

fn default_grid() -> usize {
    11
}

/// Alpha grid: explicit points, or a count spanning the feasible range.
#[derive(Deserialize)]
#[serde(untagged)]
enum GridSpec {
    Points(Vec<f64>),
    Count { n: usize },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileConfig {
    channel: ChannelRecord,
    #[serde(rename = "A")]
    a: MatrixLit,
    grid: GridSpec,
    #[serde(default)]
    optimizer: OptOverrides,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchConfig {
    phi: ChannelRecord,
    psi: ChannelRecord,
    budget: usize,
    #[serde(default)]
    optimizer: OptOverrides,
}

fn read_config(cli: &Cli) -> Result<String> {
    match cli.config.as_deref() {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)
            .with_context(|| format!("cannot read config file {}", p.display())),
        _ => {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .context("cannot read config from stdin")?;
            Ok(text)
        }
    }
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| anyhow!("config parse failed: {e}"))
}

fn build_cfg(cli: &Cli, over: &OptOverrides) -> Result<OptimizerConfig> {
    let mut cfg = OptimizerConfig::default();
    if let Some(v) = over.restarts {
        cfg.restarts = v;
    }
    if let Some(v) = over.max_iterations {
        cfg.max_iterations = v;
    }
    if let Some(v) = over.ensemble_size {
        cfg.ensemble_size = Some(v);
    }
    if let Some(v) = over.seed {
        cfg.seed = v;
    }
    if let Some(v) = over.tol_value {
        cfg.tol_value = v;
    }
    if let Some(v) = over.tol_certificate {
        cfg.tol_certificate = v;
    }
    if let Some(v) = cli.restarts {
        cfg.restarts = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.tol {
        cfg.tol_value = v;
        cfg.tol_certificate = v;
    }
    cfg.validate().map_err(|e| anyhow!("optimizer config invalid: {e}"))?;
    Ok(cfg)
}

pub fn dispatch(cli: &Cli) -> Result<u8> {
    let text = read_config(cli)?;
    match cli.command {
        Command::Capacity => cmd_capacity(cli, &text),
        Command::Certify => cmd_certify(cli, &text),
        Command::ShorCheck => cmd_shor_check(cli, &text),
        Command::Additivity => cmd_additivity(cli, &text),
        Command::WeakAdditivity => cmd_weak_additivity(cli, &text),
        Command::ProfileAlpha => cmd_profile_alpha(cli, &text),
        Command::Search => cmd_search(cli, &text),
    }
}

fn fmt9(x: f64) -> String {
    format!("{x:.9}")
}

fn print_gap_table(rep: &GapReport) {
    let status = match (rep.proven, rep.pass) {
        (true, true) => "pass",
        (true, false) => "FAIL",
        (false, true) => "report: holds",
        (false, false) => "report: VIOLATED",
    };
    println!("{}", rep.quantity);
    println!("  lhs        {}", fmt9(rep.lhs));
    println!("  rhs        {}", fmt9(rep.rhs));
    println!("  gap        {:+.9}", rep.gap);
    println!("  tolerance  {}", fmt9(rep.tolerance));
    println!("  status     {status}");
    for (label, v) in &rep.lines {
        println!("    {label}: {}", fmt9(*v));
    }
    let conv: Vec<String> =
        rep.converged.iter().map(|(l, ok)| format!("{l}={ok}")).collect();
    println!("  converged  {}", conv.join(" "));
    println!("  instance   {} (seed {})", rep.instance, rep.seed);
}

fn print_reports(cli: &Cli, reports: &[GapReport]) -> Result<()> {
    for rep in reports {
        match cli.output {
            OutputMode::Table => print_gap_table(rep),
            OutputMode::Records => {
                println!("{}", to_json_line(&ReportRecord::of_gap(rep))?)
            }
        }
    }
    Ok(())
}

/// Exit code for report-style commands: 0 unless --assert-proven and a
/// settled check failed.
fn report_exit(cli: &Cli, reports: &[GapReport]) -> u8 {
    if cli.assert_proven && reports.iter().any(|r| r.proven && !r.pass) {
        1
    } else {
        0
    }
}

fn cmd_capacity(cli: &Cli, text: &str) -> Result<u8> {
    let config: CapacityConfig = parse(text)?;
    let cfg = build_cfg(cli, &config.optimizer)?;
    let channel = config.channel.to_channel()?;
    let constraint = config.constraint.to_constraint(channel.din())?;
    let r = chi_capacity(&channel, &constraint, &cfg)?;
    match cli.output {
        OutputMode::Table => {
            println!("value            {}", fmt9(r.value));
            println!("certificate gap  {}", fmt9(r.certificate_gap));
            if let Some(m) = r.multiplier {
                println!("multiplier       {}", fmt9(m));
            }
            println!("converged        {}", r.converged);
            println!("iterations       {}", r.iterations);
            println!("ensemble         {} members", r.ensemble.len());
            for (w, s) in r.ensemble.weights().iter().zip(r.ensemble.states()) {
                let rank = s.eigenvalues().iter().filter(|&&l| l > 1e-10).count();
                println!("  weight {}  rank {rank}", fmt9(*w));
            }
        }
        OutputMode::Records => {
            let line = json!({
                "quantity": "chi_capacity",
                "value": r.value,
                "certificate_gap": r.certificate_gap,
                "multiplier": r.multiplier,
                "converged": r.converged,
                "iterations": r.iterations,
                "ensemble": EnsembleRecord::of_ensemble(&r.ensemble),
                "seed": cfg.seed,
            });
            println!("{line}");
        }
    }
    Ok(if r.converged { 0 } else { 3 })
}

fn cmd_certify(cli: &Cli, text: &str) -> Result<u8> {
    let config: CertifyConfig = parse(text)?;
    let cfg = build_cfg(cli, &config.optimizer)?;
    let channel = config.channel.to_channel()?;
    let constraint = config.constraint.to_constraint(channel.din())?;
    let candidate = config.ensemble.to_ensemble()?;
    let out = optimality_certificate(&channel, &constraint, &candidate, &cfg)?;
    let certified = out.gap <= cfg.tol_certificate;
    match cli.output {
        OutputMode::Table => {
            println!("certificate  {}", fmt9(out.value));
            println!("gap          {:+.9}", out.gap);
            if let Some(m) = out.multiplier {
                println!("multiplier   {}", fmt9(m));
            }
            println!("certified    {certified}");
        }
        OutputMode::Records => {
            let line = json!({
                "quantity": "certificate",
                "value": out.value,
                "gap": out.gap,
                "multiplier": out.multiplier,
                "tolerance": cfg.tol_certificate,
                "pass": certified,
                "seed": cfg.seed,
            });
            println!("{line}");
        }
    }
    Ok(if certified { 0 } else { 1 })
}

fn cmd_shor_check(cli: &Cli, text: &str) -> Result<u8> {
    let config: ShorConfig = parse(text)?;
    let cfg = build_cfg(cli, &config.optimizer)?;
    let extension = config.extension.to_extension()?;
    let psi = match &config.psi {
        Some(rec) => rec.to_channel()?,
        None => chicap_core::channel::KrausChannel::trivial(),
    };
    let b = match &config.constraint {
        Some(rec) => rec.to_constraint(psi.din())?,
        None => chicap_core::constraint::ConstraintSet::Full,
    };
    let sweep = config.d_sweep.clone().unwrap_or_else(|| vec![extension.index_count()]);
    if sweep.is_empty() {
        bail!("d_sweep must list at least one index count");
    }

    let mut rows = Vec::with_capacity(sweep.len());
    for &d in &sweep {
        let row = prop3_check(
            extension.base(),
            &psi,
            extension.effect(),
            extension.q(),
            d,
            &b,
            &cfg,
        )?;
        rows.push((d, row));
    }

    let mut all_pass = true;
    for (d, row) in &rows {
        all_pass &= row.pass;
        match cli.output {
            OutputMode::Table => {
                println!(
                    "d={d}  lhs={}  rhs={}  bound={}  pass={}  converged={}",
                    fmt9(row.lhs),
                    fmt9(row.rhs),
                    fmt9(row.bound),
                    row.pass,
                    row.lhs_converged && row.rhs_converged,
                );
            }
            OutputMode::Records => {
                let instance = format!(
                    "extension(base {} -> {}, q={}, d={d}) x side channel {} -> {}",
                    extension.base().din(),
                    extension.base().dout(),
                    extension.q(),
                    psi.din(),
                    psi.dout(),
                );
                println!("{}", to_json_line(&ReportRecord::of_prop3(row, instance, cfg.seed))?);
            }
        }
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_additivity(cli: &Cli, text: &str) -> Result<u8> {
    let config: AdditivityConfig = parse(text)?;
    let cfg = build_cfg(cli, &config.optimizer)?;
    let phi = config.phi.to_channel()?;
    let psi = config.psi.to_channel()?;
    let sigma = config.sigma.as_ref().map(|m| m.to_density()).transpose()?;
    let rho = config.rho.as_ref().map(|m| m.to_density()).transpose()?;
    let omega = config.omega.as_ref().map(|m| m.to_density()).transpose()?;
    let phi0 = config.phi0.as_ref().map(|r| r.to_channel()).transpose()?;
    let ab = match (&config.a, &config.b) {
        (Some(a), Some(b)) => Some((a.to_constraint(phi.din())?, b.to_constraint(psi.din())?)),
        (None, None) => None,
        _ => bail!("constrained additivity needs both a and b"),
    };
    if config.phi0.is_some() != config.q.is_some() {
        bail!("the direct sum check needs both phi0 and q");
    }

    let mut reports = Vec::new();
    if let Some(sigma) = &sigma {
        reports.push(subadditivity_gap(&phi, &psi, sigma, &cfg)?);
        reports.push(hat_h_superadditivity_gap(&phi, &psi, sigma, &cfg)?);
    }
    if let Some((a, b)) = &ab {
        reports.push(constrained_additivity_gap(&phi, a, &psi, b, &cfg)?);
    }
    if let (Some(rho), Some(omega)) = (&rho, &omega) {
        reports.push(prop2_noiseless_check(&psi, rho, omega, &cfg)?);
    }
    if let (Some(phi0), Some(q)) = (&phi0, config.q) {
        let sigma = sigma
            .as_ref()
            .ok_or_else(|| anyhow!("the direct sum check needs sigma"))?;
        reports.push(prop2_directsum_check(phi0, &psi, q, sigma, &cfg)?);
    }
    if reports.is_empty() {
        bail!("config selects no checks; provide sigma, a and b, rho and omega, or phi0 and q");
    }
    print_reports(cli, &reports)?;
    Ok(report_exit(cli, &reports))
}

fn cmd_weak_additivity(cli: &Cli, text: &str) -> Result<u8> {
    let config: WeakConfig = parse(text)?;
    let cfg = build_cfg(cli, &config.optimizer)?;
    let phi = config.phi.to_channel()?;
    let psi = config.psi.to_channel()?;
    let a = config.a.to_effect()?;
    let b = config.b.to_effect()?;
    let rep = weak_additivity_check(&phi, &a, &psi, &b, config.gamma, config.grid, &cfg)?;
    print_reports(cli, std::slice::from_ref(&rep))?;
    Ok(report_exit(cli, std::slice::from_ref(&rep)))
}

fn cmd_profile_alpha(cli: &Cli, text: &str) -> Result<u8> {
    let config: ProfileConfig = parse(text)?;
    let cfg = build_cfg(cli, &config.optimizer)?;
    let channel = config.channel.to_channel()?;
    let a = config.a.to_effect()?;
    let grid = match &config.grid {
        GridSpec::Points(points) => points.clone(),
        GridSpec::Count { n } => {
            if *n < 2 {
                bail!("grid count must be at least 2");
            }
            let lo = a.eigenvalues()[0];
            let step = (1.0 - lo) / (*n - 1) as f64;
            (0..*n)
                .map(|k| if k + 1 == *n { 1.0 } else { lo + step * k as f64 })
                .collect()
        }
    };
    let profile = f_alpha_profile(&channel, &a, &grid, &cfg)?;
    let ok = profile.nondecreasing && profile.concave;
    match cli.output {
        OutputMode::Table => {
            for p in &profile.points {
                println!(
                    "alpha={}  value={}  cert_gap={}  converged={}",
                    fmt9(p.alpha),
                    fmt9(p.value),
                    fmt9(p.certificate_gap),
                    p.converged,
                );
            }
            println!("nondecreasing        {}", profile.nondecreasing);
            println!("concave              {}", profile.concave);
            println!("monotonicity defect  {:.3e}", profile.max_monotonicity_defect);
            println!("concavity defect     {:.3e}", profile.max_concavity_defect);
        }
        OutputMode::Records => {
            for p in &profile.points {
                let line = json!({
                    "quantity": "alpha_profile_point",
                    "alpha": p.alpha,
                    "value": p.value,
                    "certificate_gap": p.certificate_gap,
                    "converged": p.converged,
                    "seed": cfg.seed,
                });
                println!("{line}");
            }
            let line = json!({
                "quantity": "alpha_profile",
                "nondecreasing": profile.nondecreasing,
                "concave": profile.concave,
                "max_monotonicity_defect": profile.max_monotonicity_defect,
                "max_concavity_defect": profile.max_concavity_defect,
                "pass": ok,
                "seed": cfg.seed,
            });
            println!("{line}");
        }
    }
    Ok(if ok { 0 } else { 1 })
}

fn cmd_search(cli: &Cli, text: &str) -> Result<u8> {
    let config: SearchConfig = parse(text)?;
    let cfg = build_cfg(cli, &config.optimizer)?;
    let phi = config.phi.to_channel()?;
    let psi = config.psi.to_channel()?;
    let rep = violation_search(&phi, &psi, config.budget, &cfg)?;
    print_reports(cli, std::slice::from_ref(&rep))?;
    Ok(report_exit(cli, std::slice::from_ref(&rep)))
}
