//! Experiment runner for the C-sign gate simulator. Every command writes
//! CSV with 12 significant digits through an atomic temp-file rename, so
//! outputs are byte-stable across runs and parallelism degrees.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use loqc::acceptance;
use loqc::analysis::{min_fidelity, MinFidelityConfig, SweepAxis, SweepRow};
use loqc::fock::FockError;
use loqc::gates::{build_by_name, ideal_truth_check, EfficiencyConfig, GateSpec};
use loqc::optics::CircuitElement;
use loqc::tuner::{
    crossover_scan, default_landscape_grids, landscape, optimize_eta2, optimize_joint,
    success_cost,
};

const EXIT_VERIFY_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "loqc", about = "Linear-optical C-sign gate experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum fidelity along an efficiency grid.
    Sweep(SweepArgs),
    /// Minimum fidelity over a grid of KLM reflectivity offsets.
    Landscape(LandscapeArgs),
    /// Tune the KLM reflectivities.
    Optimize(OptimizeArgs),
    /// Describe a gate and check its ideal truth table.
    GateInfo(GateInfoArgs),
    /// Run the full verification suite.
    Verify,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Configuration file with `key = value` lines; command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for grid evaluation (0 = all cores). Output does not
    /// depend on this value.
    #[arg(long)]
    jobs: Option<usize>,
    /// Points per angle in the worst-case input search.
    #[arg(long)]
    grid_density: Option<usize>,
    /// Write a companion matplotlib script next to the CSV.
    #[arg(long)]
    emit_plot_script: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Gate name: klm, knill, pjf or ns.
    #[arg(long)]
    gate: Option<String>,
    /// Swept efficiency: detector, source or joint.
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LandscapeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    eta_src: Option<f64>,
    #[arg(long)]
    eta_det: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// eta2, joint, crossover or success-cost.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    eta_src: Option<f64>,
    #[arg(long)]
    eta_det: Option<f64>,
    /// Equal-efficiency grid for crossover / success-cost.
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GateInfoArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    gate: Option<String>,
}

/// Error wrapper distinguishing usage problems (exit 2) from numerical
/// failures (exit 3).
enum CmdError {
    Usage(String),
    Numerical(String),
}

type CmdResult<T> = std::result::Result<T, CmdError>;

fn usage<T>(msg: impl Into<String>) -> CmdResult<T> {
    Err(CmdError::Usage(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Landscape(args) => cmd_landscape(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::GateInfo(args) => cmd_gate_info(args),
        Command::Verify => return cmd_verify(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CmdError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration file

/// `key = value` pairs, one per line, `#` comments. Keys use the flag names
/// (e.g. `gate`, `eta-src`, `grid-density`).
fn load_config(path: Option<&Path>) -> CmdResult<HashMap<String, String>> {
    let mut map = HashMap::new();
    let Some(path) = path else {
        return Ok(map);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CmdError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return usage(format!(
                "config {} line {}: expected key = value",
                path.display(),
                i + 1
            ));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn cfg_parse<T: std::str::FromStr>(cfg: &HashMap<String, String>, key: &str) -> CmdResult<Option<T>> {
    match cfg.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| CmdError::Usage(format!("config key {key}: bad value {v:?}"))),
    }
}

/// Flag value if given, else config value, else default.
fn resolve<T: std::str::FromStr + Clone>(
    flag: Option<T>,
    cfg: &HashMap<String, String>,
    key: &str,
    default: Option<T>,
) -> CmdResult<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some(v) = cfg_parse(cfg, key)? {
        return Ok(v);
    }
    default.ok_or_else(|| CmdError::Usage(format!("missing required option --{key}")))
}

// ---------------------------------------------------------------------------
// Output formatting

/// 12 significant digits, shortest equivalent form (trailing zeros trimmed).
fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (_, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        let trimmed = fixed.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        let (mant, _) = sci.split_once('e').unwrap();
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        format!("{mant}e{exp}")
    }
}

/// Write `content` atomically: temp file in the target directory, then rename.
fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)
            .with_context(|| format!("cannot create {}", tmp.display()))?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
        .with_context(|| format!("cannot rename {} to {}", tmp.display(), path.display()))?;
    Ok(())
}

fn io_err(e: anyhow::Error) -> CmdError {
    CmdError::Usage(format!("{e:#}"))
}

fn emit_plot_script(csv_path: &Path, kind: &str) -> CmdResult<()> {
    let script = format!(
        "#!/usr/bin/env python3\n\
         # Companion plot for {csv}. Usage: python3 this_script.py\n\
         import csv\n\
         import matplotlib.pyplot as plt\n\
         \n\
         with open({csv:?}) as f:\n\
         \x20   rows = list(csv.DictReader(f))\n\
         kind = {kind:?}\n\
         if kind == 'landscape':\n\
         \x20   xs = sorted({{float(r['d_eta1']) for r in rows}})\n\
         \x20   ys = sorted({{float(r['d_eta2']) for r in rows}})\n\
         \x20   z = [[float('nan')] * len(ys) for _ in xs]\n\
         \x20   for r in rows:\n\
         \x20       z[xs.index(float(r['d_eta1']))][ys.index(float(r['d_eta2']))] = float(r['min_fidelity'])\n\
         \x20   plt.imshow(z, origin='lower', aspect='auto',\n\
         \x20              extent=[ys[0], ys[-1], xs[0], xs[-1]])\n\
         \x20   plt.xlabel('d_eta2'); plt.ylabel('d_eta1'); plt.colorbar(label='min_fidelity')\n\
         else:\n\
         \x20   xkey = 'eta_det' if len({{r['eta_det'] for r in rows}}) > 1 else 'eta_src'\n\
         \x20   plt.plot([float(r[xkey]) for r in rows], [float(r['min_fidelity']) for r in rows])\n\
         \x20   plt.xlabel(xkey); plt.ylabel('min_fidelity')\n\
         plt.tight_layout()\n\
         plt.show()\n",
        csv = csv_path.display().to_string(),
        kind = kind,
    );
    let path = csv_path.with_extension("plot.py");
    write_atomic(&path, &script).map_err(io_err)
}

// ---------------------------------------------------------------------------
// Commands

fn make_grid(from: f64, to: f64, step: f64) -> CmdResult<Vec<f64>> {
    if !(step > 0.0) || to < from {
        return usage("need from <= to and step > 0");
    }
    let n = ((to - from) / step + 0.5).floor() as usize;
    Ok((0..=n).map(|i| from + step * i as f64).collect())
}

fn parse_gate(name: &str) -> CmdResult<GateSpec> {
    build_by_name(name).ok_or_else(|| {
        CmdError::Usage(format!("unknown gate {name:?} (choose klm, knill, pjf or ns)"))
    })
}

fn search_config(density: usize) -> MinFidelityConfig {
    MinFidelityConfig {
        grid_density: density,
        ..Default::default()
    }
}

fn run_pool<T: Send, F: Fn(usize) -> std::result::Result<T, FockError> + Sync>(
    jobs: usize,
    n: usize,
    f: F,
) -> std::result::Result<Vec<T>, (usize, FockError)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    // Indexed collect: output order is the grid order whatever the thread count.
    pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| f(i).map_err(|e| (i, e)))
            .collect()
    })
}

fn cmd_sweep(args: SweepArgs) -> CmdResult<()> {
    let cfg = load_config(args.common.config.as_deref())?;
    let gate_name: String = resolve(args.gate, &cfg, "gate", None)?;
    let axis_name: String = resolve(args.axis, &cfg, "axis", Some("detector".into()))?;
    let from = resolve(args.from, &cfg, "from", Some(0.8))?;
    let to = resolve(args.to, &cfg, "to", Some(1.0))?;
    let step = resolve(args.step, &cfg, "step", Some(0.01))?;
    let out: PathBuf = resolve(args.out, &cfg, "out", None)?;
    let jobs = resolve(args.common.jobs, &cfg, "jobs", Some(0usize))?;
    let density = resolve(args.common.grid_density, &cfg, "grid-density", Some(17usize))?;
    let gate = parse_gate(&gate_name)?;
    if gate.logical_dim() != 4 {
        return usage(format!(
            "sweep needs a two-qubit gate; {gate_name:?} acts on a single mode"
        ));
    }
    let axis = match axis_name.as_str() {
        "detector" => SweepAxis::Detector,
        "source" => SweepAxis::Source,
        "joint" => SweepAxis::JointEqual,
        other => return usage(format!("unknown axis {other:?}")),
    };
    let grid = make_grid(from, to, step)?;
    let search = search_config(density);
    let rows: Vec<SweepRow> = run_pool(jobs, grid.len(), |i| {
        min_fidelity(&gate, axis.efficiencies(grid[i]), &search)
    })
    .map_err(|(i, e)| {
        CmdError::Numerical(format!("grid point {} (eta={}): {e}", i, fmt12(grid[i])))
    })?;

    let mut csv = String::from(
        "eta_src,eta_det,min_fidelity,alpha,beta,gamma,success_argmin,success_basis_avg\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt12(r.eta_src),
            fmt12(r.eta_det),
            fmt12(r.min_fidelity),
            fmt12(r.argmin.alpha),
            fmt12(r.argmin.beta),
            fmt12(r.argmin.gamma),
            fmt12(r.success_at_argmin),
            fmt12(r.success_avg_basis),
        ));
    }
    write_atomic(&out, &csv).map_err(io_err)?;
    if args.common.emit_plot_script {
        emit_plot_script(&out, "sweep")?;
    }
    println!("{} rows -> {}", rows.len(), out.display());
    Ok(())
}

fn cmd_landscape(args: LandscapeArgs) -> CmdResult<()> {
    let cfg = load_config(args.common.config.as_deref())?;
    let eta_src = resolve(args.eta_src, &cfg, "eta-src", Some(1.0))?;
    let eta_det = resolve(args.eta_det, &cfg, "eta-det", Some(0.9))?;
    let out: PathBuf = resolve(args.out, &cfg, "out", None)?;
    let density = resolve(args.common.grid_density, &cfg, "grid-density", Some(9usize))?;
    if !(0.0..=1.0).contains(&eta_src) || !(0.0..=1.0).contains(&eta_det) {
        return usage("efficiencies must lie in [0, 1]");
    }
    let eff = EfficiencyConfig::new(eta_src, eta_det);
    let (d1_grid, d2_grid) = default_landscape_grids();
    let values = landscape(eff, &d1_grid, &d2_grid, &search_config(density))
        .map_err(|e| CmdError::Numerical(format!("landscape: {e}")))?;
    let mut csv = String::from("d_eta1,d_eta2,min_fidelity\n");
    for (i, d1) in d1_grid.iter().enumerate() {
        for (j, d2) in d2_grid.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt12(*d1),
                fmt12(*d2),
                fmt12(values[i][j])
            ));
        }
    }
    write_atomic(&out, &csv).map_err(io_err)?;
    if args.common.emit_plot_script {
        emit_plot_script(&out, "landscape")?;
    }
    println!("{} rows -> {}", d1_grid.len() * d2_grid.len(), out.display());
    Ok(())
}

fn cmd_optimize(args: OptimizeArgs) -> CmdResult<()> {
    let cfg = load_config(args.common.config.as_deref())?;
    let mode: String = resolve(args.mode, &cfg, "mode", Some("eta2".into()))?;
    let out: PathBuf = resolve(args.out, &cfg, "out", None)?;
    let num = |e: FockError| CmdError::Numerical(format!("optimize {mode}: {e}"));

    let mut csv =
        String::from("eta_src,eta_det,mode,eta1,eta2,min_fidelity,baseline_fidelity,success_ratio\n");
    let mut push_row = |eff: EfficiencyConfig, mode: &str, r: &loqc::tuner::TuneResult| {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt12(eff.eta_src),
            fmt12(eff.eta_det),
            mode,
            fmt12(r.eta1),
            fmt12(r.eta2),
            fmt12(r.min_fidelity),
            fmt12(r.baseline_min_fidelity),
            fmt12(r.success_at_optimum / r.success_nominal_lossless),
        ));
    };
    match mode.as_str() {
        "eta2" | "joint" => {
            let eta_src = resolve(args.eta_src, &cfg, "eta-src", Some(1.0))?;
            let eta_det = resolve(args.eta_det, &cfg, "eta-det", Some(0.9))?;
            if !(0.0..=1.0).contains(&eta_src) || !(0.0..=1.0).contains(&eta_det) {
                return usage("efficiencies must lie in [0, 1]");
            }
            let eff = EfficiencyConfig::new(eta_src, eta_det);
            let r = if mode == "eta2" {
                optimize_eta2(eff).map_err(num)?
            } else {
                optimize_joint(eff).map_err(num)?
            };
            push_row(eff, &mode, &r);
            println!(
                "{mode} at (src {}, det {}): eta1={} eta2={} min_fidelity={} (baseline {})",
                fmt12(eta_src),
                fmt12(eta_det),
                fmt12(r.eta1),
                fmt12(r.eta2),
                fmt12(r.min_fidelity),
                fmt12(r.baseline_min_fidelity)
            );
        }
        "crossover" => {
            let from = resolve(args.from, &cfg, "from", Some(0.99))?;
            let to = resolve(args.to, &cfg, "to", Some(1.0))?;
            let step = resolve(args.step, &cfg, "step", Some(0.001))?;
            let grid = make_grid(from, to, step)?;
            let (rows, crossover) = crossover_scan(&grid).map_err(num)?;
            for row in &rows {
                csv.push_str(&format!(
                    "{},{},crossover,1,,{},{},\n",
                    fmt12(row.efficiency),
                    fmt12(row.efficiency),
                    fmt12(row.eta2_optimized),
                    fmt12(row.baseline),
                ));
            }
            match crossover {
                Some(x) => println!("eta1=1 tuning stops helping at efficiency {}", fmt12(x)),
                None => println!("eta1=1 tuning helps over the whole grid"),
            }
        }
        "success-cost" => {
            let from = resolve(args.from, &cfg, "from", Some(0.8))?;
            let to = resolve(args.to, &cfg, "to", Some(1.0))?;
            let step = resolve(args.step, &cfg, "step", Some(0.02))?;
            let grid = make_grid(from, to, step)?;
            let rows = success_cost(&grid).map_err(num)?;
            for row in &rows {
                csv.push_str(&format!(
                    "{},{},success-cost,1,,,,{}\n",
                    fmt12(row.efficiency),
                    fmt12(row.efficiency),
                    fmt12(row.ratio),
                ));
            }
        }
        other => return usage(format!("unknown mode {other:?}")),
    }
    write_atomic(&out, &csv).map_err(io_err)?;
    if args.common.emit_plot_script {
        emit_plot_script(&out, "optimize")?;
    }
    println!("-> {}", out.display());
    Ok(())
}

fn cmd_gate_info(args: GateInfoArgs) -> CmdResult<()> {
    let cfg = load_config(args.common.config.as_deref())?;
    let gate_name: String = resolve(args.gate, &cfg, "gate", None)?;
    let spec = parse_gate(&gate_name)?;
    println!("gate:            {}", spec.name);
    println!("modes:           {} (max {} photons)", spec.mode_count, spec.max_total_photons);
    println!("qubit modes:     {:?}", spec.qubit_modes);
    println!("output modes:    {:?}", spec.output_modes);
    println!("ancilla modes:   {:?}", spec.ancilla_modes);
    for (a, occ) in &spec.ancilla_prep {
        println!("ancilla term:    {} x |{}>", fmt12(*a), occ.iter().map(|n| n.to_string()).collect::<String>());
    }
    for el in &spec.elements {
        match el {
            CircuitElement::Beamsplitter(b) => println!(
                "element:         BS eta={} modes={:?} {:?} {:?}",
                fmt12(b.eta),
                b.modes,
                b.convention,
                b.orientation
            ),
            CircuitElement::Loss(l) => {
                println!("element:         loss eta={} mode={}", fmt12(l.efficiency), l.mode)
            }
            CircuitElement::Permutation(p) => println!("element:         permutation {p:?}"),
        }
    }
    println!("detected modes:  {:?}", spec.detected_modes);
    for p in &spec.patterns {
        println!("pattern:         {:?} correction {:?}", p.outcome, p.correction);
    }
    println!("nominal success: {}", fmt12(spec.nominal_success));
    let rep = ideal_truth_check(&spec)
        .map_err(|e| CmdError::Numerical(format!("ideal check for {gate_name}: {e}")))?;
    let worst = rep.fidelities.iter().cloned().fold(1.0f64, f64::min);
    println!(
        "ideal truth:     {} (worst fidelity {}, success {})",
        if rep.pass { "PASS" } else { "FAIL" },
        fmt12(worst),
        fmt12(rep.success_probabilities[0])
    );
    Ok(())
}

fn cmd_verify() -> ExitCode {
    let outcomes = acceptance::run_all();
    print!("{}", acceptance::report(&outcomes));
    if outcomes.iter().all(|o| o.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILURE)
    }
}
