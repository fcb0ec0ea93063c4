//! `rbnsf`: batch driver. Exit status 0 ok, 2 configuration or input error, 3 solver
//! failure, 4 file system error.

mod export;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rbnsf::convergence::{run_cascade, CascadeSpec, CascadeStart};
use rbnsf::diagnostics::{analyze, Quantity, WindowSpec};
use rbnsf::io::{parse_config, resume_archive, run_archive, write_stats, RunArchive, RunSummary, StatsSelection};
use rbnsf::monitors::{StepMonitors, ThetaExtension};
use rbnsf::scheme::State;
use rbnsf::Error;

#[derive(Parser)]
#[command(name = "rbnsf", version, about = "Compressible Rayleigh-Benard runs, statistics and mesh cascades")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fresh run into an archive directory
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Continue an archive from its latest (or a chosen) checkpoint
    Resume {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long = "from-step")]
        from_step: Option<u64>,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Long-time statistics over the archive's snapshots, written to stats/
    Analyze {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        stats: Selection,
        #[arg(long = "M0")]
        m0: Option<usize>,
        #[arg(long = "Mref")]
        m_ref: Option<usize>,
        /// also the O(N^2) time-averaged error family
        #[arg(long)]
        e3: bool,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Successive mesh halving from a config, reporting differences and orders
    Cascade {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(long = "T")]
        t_end: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        /// defaults to the config's `start`
        #[arg(long, value_enum)]
        start: Option<Start>,
        /// directory for cascade.csv and cascade.json
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes manifest.json listing the archive's plot inputs by figure class
    ExportPlotData {
        #[arg(long)]
        archive: PathBuf,
        /// extra cascade tables to list
        #[arg(long)]
        cascade: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Selection {
    All,
    Means,
    Defects,
    Measures,
}

impl From<Selection> for StatsSelection {
    fn from(s: Selection) -> Self {
        match s {
            Selection::All => StatsSelection::All,
            Selection::Means => StatsSelection::Means,
            Selection::Defects => StatsSelection::Defects,
            Selection::Measures => StatsSelection::Measures,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    Initial,
    Stationary,
}

/// Error with the exit status it maps to.
struct Failure {
    code: u8,
    err: Error,
}

/// Config and input problems are 2, anything the solver raises while stepping is 3.
fn classify(err: Error, stepping: bool) -> Failure {
    let code = match &err {
        Error::Io { .. } | Error::Parse { .. } => 4,
        Error::Config(_) => 2,
        _ if stepping => 3,
        _ => 2,
    };
    Failure { code, err }
}

fn input(err: Error) -> Failure {
    classify(err, false)
}

fn read_text(p: &Path) -> Result<String, Failure> {
    fs::read_to_string(p).map_err(|e| input(Error::io(p, e)))
}

fn progress(total: u64, quiet: bool) -> impl FnMut(u64, &State, &StepMonitors) {
    let every = (total / 20).max(1);
    move |k, s, m| {
        if !quiet && (k % every == 0 || k == total) {
            eprintln!(
                "step {k}/{total}  t = {:.4}  mass = {:.12e}  rho [{:.4e}, {:.4e}]  theta [{:.4e}, {:.4e}]",
                s.t, m.mass, m.range.rho_min, m.range.rho_max, m.range.theta_min, m.range.theta_max
            );
        }
    }
}

fn print_summary(s: &RunSummary) {
    println!("steps           {}", s.step);
    println!("t               {}", s.t);
    println!("mass drift      {:.3e} (relative, max)", s.max_relative_mass_drift);
    println!("budget residual {:.3e} (max)", s.max_budget_residual);
    if let Some(v) = s.min_entropy_production {
        println!("entropy prod.   {v:.3e} (min)");
    }
    println!("rho range       [{:.6e}, {:.6e}]", s.range.rho_min, s.range.rho_max);
    println!("theta range     [{:.6e}, {:.6e}]", s.range.theta_min, s.range.theta_max);
    println!("halved steps    {}", s.halved_steps);
    println!("newton / linear {} / {}", s.newton_iterations, s.linear_iterations);
    if s.violation_count > 0 {
        println!("violations      {} (first: {})", s.violation_count, s.violations.join("; "));
    }
}

fn after_run(archive: &RunArchive, result: rbnsf::Result<RunSummary>) -> Result<(), Failure> {
    match result {
        Ok(s) => {
            print_summary(&s);
            Ok(())
        }
        Err(e) => {
            // the partial summary lives in the metadata
            if let Some(s) = archive.read_metadata().ok().and_then(|m| m.summary) {
                eprintln!("run stopped; state up to the failure is archived");
                print_summary(&s);
            }
            Err(classify(e, true))
        }
    }
}

fn cmd_run(config: &Path, out: &Path, t_end: Option<f64>, seed: Option<u64>, quiet: bool) -> Result<(), Failure> {
    let text = read_text(config)?;
    let mut cfg = parse_config(&text).map_err(input)?;
    if t_end.is_some() {
        cfg.t_end = t_end;
    }
    if seed.is_some() {
        cfg.seed = seed;
    }
    let run = cfg.resolve().map_err(input)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    let archive = RunArchive::new(out);
    let mut cb = progress(run.steps() as u64, quiet);
    let r = run_archive(&archive, &text, &run, &mut cb);
    after_run(&archive, r)
}

fn cmd_resume(dir: &Path, t_end: Option<f64>, from: Option<u64>, quiet: bool) -> Result<(), Failure> {
    let archive = RunArchive::new(dir);
    let run = archive.resolved().map_err(input)?;
    let total = t_end.map_or(run.steps() as u64, |t| (t / run.dt()).round() as u64);
    let mut cb = progress(total, quiet);
    let r = resume_archive(&archive, t_end, from, &mut cb);
    after_run(&archive, r)
}

fn cmd_analyze(
    dir: &Path,
    what: StatsSelection,
    m0: Option<usize>,
    m_ref: Option<usize>,
    e3: bool,
    bins: Option<usize>,
) -> Result<(), Failure> {
    let archive = RunArchive::new(dir);
    let run = archive.resolved().map_err(input)?;
    let snaps = archive.snapshots().map_err(input)?;
    let present = rbnsf::diagnostics::SnapshotSource::len(&snaps);
    let cadence = run.stats.cadence.unwrap_or(run.output.snapshot_cadence);
    let last_t = if present == 0 {
        0.0
    } else {
        rbnsf::diagnostics::SnapshotSource::time(&snaps, present - 1).map_err(input)?
    };
    let available = (last_t / cadence + 1e-9).floor() as usize;
    let window = WindowSpec {
        cadence,
        m0: m0.unwrap_or(run.stats.m0),
        m_ref: m_ref.or(run.stats.m_ref).unwrap_or(available),
    };
    window.validate().map_err(input)?;
    let law = run.experiment.law().map_err(input)?;
    let ext = ThetaExtension::linear_blend(&run.grid, &run.params.closure).map_err(input)?;
    let a = analyze(&run.grid, &law, &ext, &snaps, window, e3 || run.stats.e3).map_err(input)?;
    let report = write_stats(&archive.stats_dir(), &run.grid, &a, bins.unwrap_or(run.stats.bins), what).map_err(input)?;
    println!(
        "window m = {}..{} (T_m = m * {}), {} samples, {} files in {}",
        window.m0 + 1,
        window.m_ref,
        cadence,
        a.times.len(),
        report.files.len(),
        archive.stats_dir().display()
    );
    if let (Some(e1), Some(e2)) = (a.e1.last(), a.e2.last()) {
        let th = Quantity::Theta.index();
        println!("E1(theta) = {:.6e}  E2(theta) = {:.6e} at T = {}", e1[th], e2[th], a.times.last().unwrap_or(&0.0));
    }
    if let Some(r) = a.reynolds_l1.last() {
        println!("|R|_L1 = {r:.6e}  |e_fluct|_L1 = {:.6e}", a.fluctuation_l1.last().unwrap_or(&0.0));
    }
    Ok(())
}

fn cmd_cascade(config: &Path, levels: usize, t_end: f64, q: f64, start: Option<Start>, out: Option<&Path>) -> Result<(), Failure> {
    let text = read_text(config)?;
    let run = parse_config(&text).and_then(|c| c.resolve()).map_err(input)?;
    if run.params.wall != Default::default() {
        eprintln!("warning: cascades use the default wall treatment");
    }
    let spec = CascadeSpec {
        experiment: run.experiment.clone(),
        n2_coarse: run.grid.n2(),
        levels,
        t_end,
        dt_over_h: run.dt() / run.grid.h(),
        alpha: run.params.alpha,
        q,
        start: match start {
            None => run.start,
            Some(Start::Initial) => CascadeStart::Initial,
            Some(Start::Stationary) => CascadeStart::Stationary,
        },
        solver: run.solver.clone(),
    };
    let result = run_cascade(&spec).map_err(|e| classify(e, true))?;
    let csv = result.to_csv();
    print!("{csv}");
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| input(Error::io(dir, e)))?;
        let p = dir.join("cascade.csv");
        fs::write(&p, &csv).map_err(|e| input(Error::io(&p, e)))?;
        let p = dir.join("cascade.json");
        let json = serde_json::json!({ "spec": spec, "result": result });
        let text = serde_json::to_string_pretty(&json).map_err(|e| input(Error::config(e.to_string())))?;
        fs::write(&p, text).map_err(|e| input(Error::io(&p, e)))?;
    }
    match &result.failure {
        Some(f) => Err(Failure {
            code: 3,
            err: Error::domain(format!("cascade stopped early: {f}")),
        }),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Run {
            config,
            out,
            t_end,
            seed,
            quiet,
        } => cmd_run(&config, &out, t_end, seed, quiet),
        Cmd::Resume {
            archive,
            t_end,
            from_step,
            quiet,
        } => cmd_resume(&archive, t_end, from_step, quiet),
        Cmd::Analyze {
            archive,
            stats,
            m0,
            m_ref,
            e3,
            bins,
        } => cmd_analyze(&archive, stats.into(), m0, m_ref, e3, bins),
        Cmd::Cascade {
            config,
            levels,
            t_end,
            q,
            start,
            out,
        } => cmd_cascade(&config, levels, t_end, q, start, out.as_deref()),
        Cmd::ExportPlotData { archive, cascade } => export::export(&archive, &cascade).map_err(input),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.err);
            ExitCode::from(f.code)
        }
    }
}
