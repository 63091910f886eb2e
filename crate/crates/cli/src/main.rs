//! Command-line surface: `keyrate`, `threshold`, `region`, and `simulate`
//! subcommands over a strict JSON configuration with override flags.
//!
//! Exit codes: 0 success, 2 parameter error, 3 regime error, 4 internal
//! consistency error. Data goes to stdout (or `--out`); diagnostics to
//! stderr only.

mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use amqd_core::{
    capacity_region, corner_points, keyrate, max_eve_variance, private_region, simulate_block,
    solve_excess_noise_at, svd_private_capacities, tolerable_excess_noise_closed_form, Allocation,
    Direction, Error, Measurement, Reconciliation, Result, SingleCarrierVariant, SolveMethod,
    ThresholdOutcome,
};
use clap::{Args, Parser, Subcommand};

use config::{AllocPolicy, OutputFormat, QuantityKind, RunConfig, SweepAxis, SweepSection};
use emit::{fmt_f64, Table};

#[derive(Parser)]
#[command(
    name = "amqd",
    version,
    about = "Multicarrier CVQKD security analysis: key rates, thresholds, capacity regions, channel simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Secret key rates of the configured protocol variant, optionally swept.
    Keyrate(CommonArgs),
    /// Security thresholds: tolerable excess noise or maximum Eve variance.
    Threshold(CommonArgs),
    /// Multiuser capacity and private-capacity region summary.
    Region(CommonArgs),
    /// Monte Carlo simulation of a multicarrier block.
    Simulate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override: protocol direction (one_way | two_way).
    #[arg(long)]
    protocol: Option<String>,
    /// Override: measurement (hom | het).
    #[arg(long)]
    measurement: Option<String>,
    /// Override: reconciliation (dr | rr).
    #[arg(long)]
    reconciliation: Option<String>,
    /// Override: uniform ensemble gain.
    #[arg(long)]
    tbar: Option<f64>,
    /// Override: Eve EPR variance on every slot.
    #[arg(long = "eve-variance")]
    eve_variance: Option<f64>,
    /// Override: multicarrier modulation variance.
    #[arg(long = "mod-variance")]
    mod_variance: Option<f64>,
    /// Override: slot count as `n` or `n:l`.
    #[arg(long)]
    subchannels: Option<String>,
    /// Override: sub-channel security threshold.
    #[arg(long = "nu-eve")]
    nu_eve: Option<f64>,
    /// Override: sweep as `axis:lo:hi:steps`.
    #[arg(long)]
    sweep: Option<String>,
    /// Override: output format (csv | json).
    #[arg(long)]
    format: Option<String>,
    /// Write the data stream to this path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override: simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override: simulation trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Override: allocation policy (uniform | waterfill).
    #[arg(long)]
    alloc: Option<String>,
    /// Override: per-slot SVD gains as a comma list.
    #[arg(long = "svd-v")]
    svd_v: Option<String>,
    /// Threshold: single-carrier closed-form variant.
    #[arg(long)]
    variant: Option<String>,
    /// Threshold: solved quantity (excess_noise | eve_variance).
    #[arg(long)]
    quantity: Option<String>,
    /// Threshold: sweep all eight protocol variants, adding a variant column.
    #[arg(long, default_value_t = false)]
    all: bool,
    /// Region: number of users.
    #[arg(long)]
    users: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, runner): (&CommonArgs, fn(RunConfig) -> Result<String>) = match &cli.command {
        Command::Keyrate(a) => (a, run_keyrate),
        Command::Threshold(a) if a.all => (a, run_threshold_all),
        Command::Threshold(a) => (a, run_threshold),
        Command::Region(a) => (a, run_region),
        Command::Simulate(a) => (a, run_simulate),
    };
    let outcome = prepare(args).and_then(|cfg| {
        let target = args.out.clone().or_else(|| {
            cfg.output
                .as_ref()
                .and_then(|o| o.path.as_ref())
                .map(PathBuf::from)
        });
        runner(cfg).map(|data| (data, target))
    });
    match outcome {
        Ok((data, target)) => {
            if let Some(path) = target {
                if let Err(e) = std::fs::write(&path, data) {
                    eprintln!("amqd: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                print!("{data}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("amqd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Loads the config and applies every override flag.
fn prepare(args: &CommonArgs) -> Result<RunConfig> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Parameter(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::from_json(&text)?;

    if let Some(p) = &args.protocol {
        cfg.protocol.direction = match p.as_str() {
            "one_way" => Direction::OneWay,
            "two_way" => Direction::TwoWay,
            other => {
                return Err(Error::Parameter(format!(
                    "protocol must be one_way or two_way, got '{other}'"
                )))
            }
        };
    }
    if let Some(m) = &args.measurement {
        cfg.protocol.measurement = match m.as_str() {
            "hom" => Measurement::Hom,
            "het" => Measurement::Het,
            other => {
                return Err(Error::Parameter(format!(
                    "measurement must be hom or het, got '{other}'"
                )))
            }
        };
    }
    if let Some(r) = &args.reconciliation {
        cfg.protocol.reconciliation = match r.as_str() {
            "dr" => Reconciliation::Dr,
            "rr" => Reconciliation::Rr,
            other => {
                return Err(Error::Parameter(format!(
                    "reconciliation must be dr or rr, got '{other}'"
                )))
            }
        };
    }
    if let Some(t) = args.tbar {
        cfg.set_uniform_gain(t)?;
    }
    if let Some(w) = args.eve_variance {
        cfg.set_eve_variance(w)?;
    }
    if let Some(v) = args.mod_variance {
        cfg.protocol.multicarrier_variance = v;
    }
    if let Some(spec) = &args.subchannels {
        let (n, l) = parse_subchannels(spec)?;
        match &mut cfg.ensemble {
            config::EnsembleSection::Uniform { n: cn, l: cl, .. } => {
                *cn = n;
                *cl = l;
            }
            config::EnsembleSection::Explicit { .. } => {
                return Err(Error::Parameter(
                    "subchannel override requires the uniform ensemble shorthand".into(),
                ))
            }
        }
    }
    if let Some(nu) = args.nu_eve {
        match &mut cfg.ensemble {
            config::EnsembleSection::Explicit { nu_eve, .. }
            | config::EnsembleSection::Uniform { nu_eve, .. } => *nu_eve = nu,
        }
    }
    if let Some(s) = &args.sweep {
        cfg.sweep = Some(parse_sweep(s)?);
    }
    if let Some(f) = &args.format {
        let format = match f.as_str() {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            other => {
                return Err(Error::Parameter(format!(
                    "format must be csv or json, got '{other}'"
                )))
            }
        };
        cfg.output = Some(config::OutputSection { format, path: None });
    }
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(trials) = args.trials {
        cfg.trials = Some(trials);
    }
    if let Some(a) = &args.alloc {
        cfg.alloc = Some(match a.as_str() {
            "uniform" => AllocPolicy::Uniform,
            "waterfill" => AllocPolicy::Waterfill,
            other => {
                return Err(Error::Parameter(format!(
                    "alloc must be uniform or waterfill, got '{other}'"
                )))
            }
        });
    }
    if let Some(v) = &args.svd_v {
        let parsed: std::result::Result<Vec<f64>, _> =
            v.split(',').map(|s| s.trim().parse::<f64>()).collect();
        cfg.svd_v = Some(parsed.map_err(|e| Error::Parameter(format!("bad --svd-v list: {e}")))?);
    }
    if let Some(variant) = &args.variant {
        cfg.variant = Some(variant.clone());
    }
    if let Some(q) = &args.quantity {
        cfg.quantity = Some(match q.as_str() {
            "excess_noise" => QuantityKind::ExcessNoise,
            "eve_variance" => QuantityKind::EveVariance,
            other => {
                return Err(Error::Parameter(format!(
                    "quantity must be excess_noise or eve_variance, got '{other}'"
                )))
            }
        });
    }
    if let Some(users) = args.users {
        cfg.users = Some(users);
    }
    Ok(cfg)
}

fn parse_subchannels(spec: &str) -> Result<(usize, Option<usize>)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Parameter(format!("subchannels must be 'n' or 'n:l', got '{spec}'"));
    match parts.as_slice() {
        [n] => Ok((n.parse().map_err(|_| bad())?, None)),
        [n, l] => Ok((
            n.parse().map_err(|_| bad())?,
            Some(l.parse().map_err(|_| bad())?),
        )),
        _ => Err(bad()),
    }
}

fn parse_sweep(spec: &str) -> Result<SweepSection> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(Error::Parameter(format!(
            "sweep must be axis:lo:hi:steps, got '{spec}'"
        )));
    }
    let bad = |what: &str| Error::Parameter(format!("bad sweep {what} in '{spec}'"));
    Ok(SweepSection {
        axis: parts[0].parse()?,
        lo: parts[1].parse().map_err(|_| bad("lo"))?,
        hi: parts[2].parse().map_err(|_| bad("hi"))?,
        steps: parts[3].parse().map_err(|_| bad("steps"))?,
    })
}

fn output_format(cfg: &RunConfig) -> OutputFormat {
    cfg.output
        .as_ref()
        .map(|o| o.format)
        .unwrap_or(OutputFormat::Csv)
}

fn render(table: &Table, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => table.render(),
        OutputFormat::Json => table.render_json(),
    }
}

fn run_keyrate(mut cfg: RunConfig) -> Result<String> {
    let mut table = Table::new(&[
        "T_bar",
        "W_bar",
        "rate_bits",
        "rate_clamped",
        "info_term",
        "eve_term",
    ]);
    let emit_row = |cfg: &RunConfig, table: &mut Table| -> Result<()> {
        let protocol = cfg.build_protocol()?;
        if let Some(warning) = protocol.regime_warning() {
            eprintln!("amqd: warning: {warning}");
        }
        let res = keyrate(&protocol)?;
        let (t_bar, w_bar) = res.parameters_echo;
        table.push(vec![
            fmt_f64(t_bar),
            fmt_f64(w_bar),
            fmt_f64(res.rate_bits),
            fmt_f64(res.rate_clamped()),
            fmt_f64(res.mutual_info_term),
            fmt_f64(res.eve_term),
        ]);
        Ok(())
    };
    match cfg.sweep_points() {
        None => emit_row(&cfg, &mut table)?,
        Some(points) => {
            let axis = cfg.sweep.as_ref().unwrap().axis;
            for v in points {
                cfg.apply_axis(axis, v)?;
                emit_row(&cfg, &mut table)?;
            }
        }
    }
    Ok(render(&table, output_format(&cfg)))
}

fn run_threshold(cfg: RunConfig) -> Result<String> {
    run_threshold_inner(cfg, false)
}

fn run_threshold_all(cfg: RunConfig) -> Result<String> {
    run_threshold_inner(cfg, true)
}

fn run_threshold_inner(cfg: RunConfig, all_variants: bool) -> Result<String> {
    // closed-form single-carrier variants short-circuit the sweep
    if let Some(variant) = cfg.variant.clone() {
        let variant: SingleCarrierVariant = variant.parse()?;
        let r = tolerable_excess_noise_closed_form(variant)?;
        let mut table = Table::new(&["variant", "value", "method", "residual", "status"]);
        table.push(vec![
            variant.to_string(),
            fmt_f64(r.value),
            method_name(r.method).to_string(),
            fmt_f64(r.residual),
            "ok".to_string(),
        ]);
        return Ok(render(&table, output_format(&cfg)));
    }

    let quantity = cfg.quantity.unwrap_or(QuantityKind::ExcessNoise);
    let protocol_probe = cfg.build_protocol()?;
    protocol_probe.check_regime()?;
    let sw0 = protocol_probe.single_carrier_variance;

    if let Some(s) = &cfg.sweep {
        if s.axis != SweepAxis::Tbar {
            return Err(Error::Parameter(
                "threshold sweeps run over the tbar axis".into(),
            ));
        }
    }
    let grid = match cfg.sweep_points() {
        Some(points) => points,
        None => vec![cfg.build_ensemble()?.averaged_fourier_gain()?],
    };

    let variants: Vec<(Direction, Measurement, Reconciliation)> = if all_variants {
        let mut v = Vec::new();
        for d in [Direction::OneWay, Direction::TwoWay] {
            for m in [Measurement::Hom, Measurement::Het] {
                for r in [Reconciliation::Rr, Reconciliation::Dr] {
                    v.push((d, m, r));
                }
            }
        }
        v
    } else {
        vec![(
            protocol_probe.direction,
            protocol_probe.measurement,
            protocol_probe.reconciliation,
        )]
    };

    let header: &'static [&'static str] = match (all_variants, quantity) {
        (false, QuantityKind::ExcessNoise) => &["T_bar", "N_tol", "method", "residual", "status"],
        (false, QuantityKind::EveVariance) => &["T_bar", "W_max", "method", "residual", "status"],
        (true, QuantityKind::ExcessNoise) => {
            &["variant", "T_bar", "N_tol", "method", "residual", "status"]
        }
        (true, QuantityKind::EveVariance) => {
            &["variant", "T_bar", "W_max", "method", "residual", "status"]
        }
    };
    let mut table = Table::new(header);

    for (direction, measurement, reconciliation) in variants {
        let label = format!("{direction}_{measurement}_{reconciliation}");
        match quantity {
            QuantityKind::ExcessNoise => {
                for &t in &grid {
                    let solved = solve_excess_noise_at(
                        direction,
                        measurement,
                        reconciliation,
                        t,
                        sw0,
                        None,
                    )?;
                    let mut row = outcome_row(t, &solved.outcome);
                    if all_variants {
                        row.insert(0, label.clone());
                    }
                    table.push(row);
                }
            }
            QuantityKind::EveVariance => {
                let sweep = max_eve_variance(direction, measurement, reconciliation, &grid)?;
                if !sweep.monotone {
                    eprintln!(
                        "amqd: warning: W_max is not monotone over the requested grid ({label})"
                    );
                }
                for (t, outcome) in &sweep.points {
                    let mut row = outcome_row(*t, outcome);
                    if all_variants {
                        row.insert(0, label.clone());
                    }
                    table.push(row);
                }
            }
        }
    }
    Ok(render(&table, output_format(&cfg)))
}

fn method_name(m: SolveMethod) -> &'static str {
    match m {
        SolveMethod::ClosedForm => "closed_form",
        SolveMethod::Bisection => "bisection",
    }
}

fn outcome_row(t: f64, outcome: &ThresholdOutcome) -> Vec<String> {
    match outcome {
        ThresholdOutcome::Solved(r) => vec![
            fmt_f64(t),
            fmt_f64(r.value),
            method_name(r.method).to_string(),
            fmt_f64(r.residual),
            "ok".to_string(),
        ],
        ThresholdOutcome::NoPositiveRate => vec![
            fmt_f64(t),
            String::new(),
            String::new(),
            String::new(),
            "no_positive_rate".to_string(),
        ],
        ThresholdOutcome::Unbounded => vec![
            fmt_f64(t),
            String::new(),
            String::new(),
            String::new(),
            "unbounded".to_string(),
        ],
    }
}

fn run_region(cfg: RunConfig) -> Result<String> {
    let protocol = cfg.build_protocol()?;
    let ensemble = &protocol.ensemble;
    let users = cfg.users.unwrap_or(2);
    let l = ensemble.selected.len();
    let budget = protocol.multicarrier_variance;
    let alloc = match cfg.alloc.unwrap_or(AllocPolicy::Uniform) {
        AllocPolicy::Uniform => Allocation::uniform(l, budget)?,
        AllocPolicy::Waterfill => Allocation::waterfill(ensemble, budget)?,
    };
    let convention = protocol.quadrature_convention;
    let vacuum = cfg.vacuum_noise.unwrap_or(1.0);

    // eavesdropper terms: supplied directly, or derived from the matching
    // protocol's key-rate decomposition (same channel for every user)
    let eve_terms: Vec<f64> = match &cfg.eve_terms {
        Some(terms) => {
            if terms.len() != users {
                return Err(Error::Parameter(format!(
                    "expected {users} eve_terms, got {}",
                    terms.len()
                )));
            }
            terms.clone()
        }
        None => {
            let res = keyrate(&protocol)?;
            vec![res.eve_term.max(0.0); users]
        }
    };

    let classical = capacity_region(ensemble, &alloc, users, convention)?;
    let corners_c = corner_points(ensemble, &alloc, users, convention)?;
    let private = match &cfg.svd_v {
        None => private_region(ensemble, &alloc, users, &eve_terms, vacuum, convention)?,
        Some(v) => {
            svd_private_capacities(ensemble, &alloc, users, v, &eve_terms, vacuum, convention)?
        }
    };

    let mut table = Table::new(&[
        "user_index",
        "corner_C",
        "corner_P",
        "sum_C",
        "sym_C",
        "sum_P",
        "sym_P",
    ]);
    for (k, corner_c) in corners_c.iter().enumerate() {
        table.push(vec![
            k.to_string(),
            fmt_f64(*corner_c),
            fmt_f64(private.corner_points[k]),
            fmt_f64(classical.sum_capacity),
            fmt_f64(classical.symmetric_capacity),
            fmt_f64(private.noise_form_sum.unwrap_or(0.0)),
            fmt_f64(private.noise_form_symmetric.unwrap_or(0.0)),
        ]);
    }
    Ok(render(&table, output_format(&cfg)))
}

fn run_simulate(cfg: RunConfig) -> Result<String> {
    if let Some(output) = &cfg.output {
        if output.format == OutputFormat::Csv {
            return Err(Error::Parameter(
                "simulate emits a JSON report; csv output is not defined for it".into(),
            ));
        }
    }
    let seed = cfg
        .seed
        .ok_or_else(|| Error::Parameter("simulate requires a seed".into()))?;
    let trials = cfg
        .trials
        .ok_or_else(|| Error::Parameter("simulate requires a trial count".into()))?;
    let protocol = cfg.build_protocol()?;
    let report = simulate_block(&protocol, trials, seed)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Internal(format!("report serialization failed: {e}")))?;
    Ok(format!("{json}\n"))
}
