//! Run archives and the batch driver that fills them.
//!
//! ```text
//! <root>/config.json          the config as given
//! <root>/metadata.json        resolved config, grid, code version, run summary
//! <root>/series.csv
//! <root>/snapshots/snap_<m>.bin (+ .vtk)   state at t = m * snapshot_cadence
//! <root>/checkpoints/ckpt_<step>.bin
//! <root>/stats/               written by the analysis
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::binary::{
    read_checkpoint, read_snapshot_bin, read_snapshot_header, write_checkpoint, write_snapshot_bin, CheckpointTrailer,
};
use super::config::{parse_config, ResolvedRun};
use super::series::{SeriesRow, SeriesWriter};
use super::vtk::VtkData;
use super::METADATA_FORMAT;
use crate::diagnostics::SnapshotSource;
use crate::error::{Error, Result};
use crate::monitors::{mass_total, HypothesisBReport, StepMonitors, ThetaExtension};
use crate::scheme::{State, Stepper};

/// Aggregates over every step taken so far; carried through checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub step: u64,
    pub t: f64,
    pub initial_mass: f64,
    pub range: HypothesisBReport,
    pub max_relative_mass_drift: f64,
    pub max_budget_residual: f64,
    pub min_entropy_production: Option<f64>,
    /// largest `density_decay / density_decay_scale`
    pub max_density_decay_ratio: Option<f64>,
    pub halved_steps: u64,
    pub newton_iterations: u64,
    pub linear_iterations: u64,
    pub violation_count: u64,
    /// first few monitor violations, with their step
    pub violations: Vec<String>,
    pub failure: Option<String>,
}

impl RunSummary {
    fn new(init: &State, initial_mass: f64) -> Self {
        RunSummary {
            step: 0,
            t: init.t,
            initial_mass,
            range: HypothesisBReport::of_state(init),
            max_relative_mass_drift: 0.0,
            max_budget_residual: 0.0,
            min_entropy_production: None,
            max_density_decay_ratio: None,
            halved_steps: 0,
            newton_iterations: 0,
            linear_iterations: 0,
            violation_count: 0,
            violations: Vec::new(),
            failure: None,
        }
    }

    fn observe(&mut self, step: u64, t: f64, m: &StepMonitors, r: &crate::scheme::StepReport, newton_tol: f64) {
        self.step = step;
        self.t = t;
        self.range.merge(&m.range);
        let drift = ((m.mass - self.initial_mass) / self.initial_mass).abs();
        self.max_relative_mass_drift = self.max_relative_mass_drift.max(drift);
        self.max_budget_residual = self.max_budget_residual.max(m.budget);
        let ratio = m.density_decay / m.density_decay_scale;
        self.min_entropy_production = Some(self.min_entropy_production.map_or(m.entropy_production, |v| v.min(m.entropy_production)));
        self.max_density_decay_ratio = Some(self.max_density_decay_ratio.map_or(ratio, |v| v.max(ratio)));
        if r.substeps > 1 {
            self.halved_steps += 1;
        }
        self.newton_iterations += r.newton_iterations as u64;
        self.linear_iterations += r.linear_iterations as u64;
        let v = m.violations(newton_tol);
        if !v.is_empty() {
            self.violation_count += 1;
            if self.violations.len() < 10 {
                self.violations.push(format!("step {step}: {}", v.join("; ")));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub format: String,
    pub code_version: String,
    pub n1: usize,
    pub n2: usize,
    pub h: f64,
    pub dt: f64,
    pub alpha: f64,
    pub seed: u64,
    pub steps: usize,
    pub snapshot_steps: usize,
    pub warnings: Vec<String>,
    /// resolved config; feeding this file back as a config reruns the same archive
    pub config: serde_json::Value,
    pub summary: Option<RunSummary>,
}

/// Paths of one archive directory.
#[derive(Debug, Clone)]
pub struct RunArchive {
    root: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

impl RunArchive {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunArchive { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.json")
    }
    pub fn metadata_path(&self) -> PathBuf {
        self.root.join("metadata.json")
    }
    pub fn series_path(&self) -> PathBuf {
        self.root.join("series.csv")
    }
    pub fn snapshot_dir(&self) -> PathBuf {
        self.root.join("snapshots")
    }
    pub fn checkpoint_dir(&self) -> PathBuf {
        self.root.join("checkpoints")
    }
    pub fn stats_dir(&self) -> PathBuf {
        self.root.join("stats")
    }
    pub fn snapshot_path(&self, m: u64, ext: &str) -> PathBuf {
        self.snapshot_dir().join(format!("snap_{m:06}.{ext}"))
    }
    pub fn checkpoint_path(&self, step: u64) -> PathBuf {
        self.checkpoint_dir().join(format!("ckpt_{step:09}.bin"))
    }

    pub fn read_metadata(&self) -> Result<Metadata> {
        let p = self.metadata_path();
        let text = fs::read_to_string(&p).map_err(io_err(&p))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: p.clone(),
            offset: e.column(),
            msg: e.to_string(),
        })
    }

    fn write_metadata(&self, m: &Metadata) -> Result<()> {
        let text = serde_json::to_string_pretty(m).map_err(|e| Error::config(e.to_string()))?;
        super::binary::write_atomic(&self.metadata_path(), text.as_bytes())
    }

    /// The run described by the archive's metadata.
    pub fn resolved(&self) -> Result<ResolvedRun> {
        let p = self.metadata_path();
        let text = fs::read_to_string(&p).map_err(io_err(&p))?;
        parse_config(&text)?.resolve()
    }

    /// Checkpoint steps present, ascending.
    pub fn checkpoints(&self) -> Result<Vec<u64>> {
        numbered(&self.checkpoint_dir(), "ckpt_", ".bin")
    }

    /// Snapshot indices present, ascending.
    pub fn snapshot_indices(&self) -> Result<Vec<u64>> {
        numbered(&self.snapshot_dir(), "snap_", ".bin")
    }

    pub fn snapshots(&self) -> Result<ArchiveSnapshots> {
        let mut items = Vec::new();
        for m in self.snapshot_indices()? {
            let p = self.snapshot_path(m, "bin");
            let h = read_snapshot_header(&p)?;
            items.push((h.t, p));
        }
        Ok(ArchiveSnapshots { items })
    }

    fn clear_outputs(&self) -> Result<()> {
        for d in [self.snapshot_dir(), self.checkpoint_dir(), self.stats_dir()] {
            if d.exists() {
                fs::remove_dir_all(&d).map_err(io_err(&d))?;
            }
        }
        let s = self.series_path();
        if s.exists() {
            fs::remove_file(&s).map_err(io_err(&s))?;
        }
        Ok(())
    }
}

fn numbered(dir: &Path, prefix: &str, suffix: &str) -> Result<Vec<u64>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for e in fs::read_dir(dir).map_err(io_err(dir))? {
        let e = e.map_err(io_err(dir))?;
        let name = e.file_name();
        let name = name.to_string_lossy();
        if let Some(n) = name.strip_prefix(prefix).and_then(|r| r.strip_suffix(suffix)) {
            if let Ok(n) = n.parse() {
                out.push(n);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Binary snapshots of an archive, in time order, loaded on demand.
#[derive(Debug, Clone)]
pub struct ArchiveSnapshots {
    items: Vec<(f64, PathBuf)>,
}

impl SnapshotSource for ArchiveSnapshots {
    fn len(&self) -> usize {
        self.items.len()
    }
    fn time(&self, i: usize) -> Result<f64> {
        Ok(self.items[i].0)
    }
    fn load(&self, i: usize) -> Result<State> {
        Ok(read_snapshot_bin(&self.items[i].1)?.1)
    }
}

/// Progress callback: step index, state after the step, its monitors.
pub type Progress<'a> = &'a mut dyn FnMut(u64, &State, &StepMonitors);

struct Driver<'a> {
    archive: &'a RunArchive,
    run: &'a ResolvedRun,
    config: serde_json::Value,
    ext: ThetaExtension,
}

impl Driver<'_> {
    fn snapshot(&self, step: u64, s: &State) -> Result<()> {
        let steps = self.run.snapshot_steps as u64;
        if step % steps != 0 {
            return Ok(());
        }
        let m = step / steps;
        let g = &self.run.grid;
        write_snapshot_bin(&self.archive.snapshot_path(m, "bin"), g.n1(), g.n2(), step, s)?;
        if self.run.output.vtk {
            VtkData::of_state(g, s).write(&self.archive.snapshot_path(m, "vtk"))?;
        }
        Ok(())
    }

    fn checkpoint(&self, step: u64, s: &State, summary: &RunSummary) -> Result<()> {
        let g = &self.run.grid;
        let trailer = CheckpointTrailer {
            config: self.config.clone(),
            summary: summary.clone(),
        };
        write_checkpoint(&self.archive.checkpoint_path(step), g.n1(), g.n2(), step, s, &trailer)
    }

    /// Steps `first..=last` from `cur`, the state after step `first - 1`.
    fn advance(
        &self,
        mut cur: State,
        first: u64,
        last: u64,
        summary: &mut RunSummary,
        series: &mut SeriesWriter,
        progress: Progress,
    ) -> Result<State> {
        let run = self.run;
        let mut stepper = Stepper::new(run.grid.clone(), run.params.clone(), run.solver.clone())?;
        let dt = run.dt();
        for k in first..=last {
            let (mut next, report) = match stepper.step(&cur) {
                Ok(r) => r,
                Err(e) => {
                    summary.failure = Some(format!("step {k}: {e}"));
                    series.flush()?;
                    self.checkpoint(k - 1, &cur, summary)?;
                    return Err(e);
                }
            };
            next.t = k as f64 * dt;
            let mut chain = stepper.substeps().to_vec();
            if let Some(end) = chain.last_mut() {
                end.t = next.t;
            }
            let m = StepMonitors::evaluate_chain(stepper.discretization(), &cur, &chain);
            summary.observe(k, next.t, &m, &report, run.solver.newton_tol);
            if k % run.output.series_every as u64 == 0 {
                let row = SeriesRow::new(&run.grid, &run.params.law, &self.ext, k, &next, &m, &report)?;
                series.write(&row)?;
            }
            self.snapshot(k, &next)?;
            if k % run.output.checkpoint_every as u64 == 0 || k == last {
                series.flush()?;
                self.checkpoint(k, &next, summary)?;
            }
            progress(k, &next, &m);
            cur = next;
        }
        series.flush()?;
        Ok(cur)
    }
}

fn metadata_for(run: &ResolvedRun, config: &serde_json::Value, summary: Option<RunSummary>) -> Metadata {
    Metadata {
        format: METADATA_FORMAT.to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        n1: run.grid.n1(),
        n2: run.grid.n2(),
        h: run.grid.h(),
        dt: run.dt(),
        alpha: run.params.alpha,
        seed: run.experiment.perturbation.seed,
        steps: run.steps(),
        snapshot_steps: run.snapshot_steps,
        warnings: run.warnings.clone(),
        config: config.clone(),
        summary,
    }
}

/// Fresh run into `archive`; previous outputs there are replaced.
pub fn run_archive(archive: &RunArchive, config_text: &str, run: &ResolvedRun, progress: Progress) -> Result<RunSummary> {
    let root = archive.root();
    fs::create_dir_all(root).map_err(io_err(root))?;
    archive.clear_outputs()?;
    for d in [archive.snapshot_dir(), archive.checkpoint_dir()] {
        fs::create_dir_all(&d).map_err(io_err(&d))?;
    }
    let cp = archive.config_path();
    fs::write(&cp, config_text).map_err(io_err(&cp))?;
    let config = serde_json::to_value(&run.config).map_err(|e| Error::config(e.to_string()))?;
    archive.write_metadata(&metadata_for(run, &config, None))?;

    let init = run.initial_state()?;
    let mut summary = RunSummary::new(&init, mass_total(&run.grid, &init));
    let driver = Driver {
        archive,
        run,
        config: config.clone(),
        ext: ThetaExtension::linear_blend(&run.grid, &run.params.closure)?,
    };
    let mut series = SeriesWriter::create(&archive.series_path())?;
    driver.snapshot(0, &init)?;
    driver.checkpoint(0, &init, &summary)?;
    let result = driver.advance(init, 1, run.steps() as u64, &mut summary, &mut series, progress);
    archive.write_metadata(&metadata_for(run, &config, Some(summary.clone())))?;
    result.map(|_| summary)
}

/// Continues from the latest checkpoint (or `from_step`), optionally to a new end time.
/// Later outputs are discarded first, so the continuation reproduces an uninterrupted run.
pub fn resume_archive(
    archive: &RunArchive,
    t_end: Option<f64>,
    from_step: Option<u64>,
    progress: Progress,
) -> Result<RunSummary> {
    let meta = archive.read_metadata()?;
    let mut cfg = parse_config(&serde_json::to_string(&meta.config).map_err(|e| Error::config(e.to_string()))?)?;
    if let Some(t) = t_end {
        cfg.t_end = Some(t);
    }
    let run = cfg.resolve()?;
    let steps = archive.checkpoints()?;
    let k = match from_step {
        Some(s) if steps.contains(&s) => s,
        Some(s) => return Err(Error::Range(format!("no checkpoint at step {s}; available: {steps:?}"))),
        None => *steps.last().ok_or_else(|| Error::Range("archive has no checkpoint".into()))?,
    };
    let ck = read_checkpoint(&archive.checkpoint_path(k))?;
    if ck.header.n1 != run.grid.n1() || ck.header.n2 != run.grid.n2() {
        return Err(Error::domain("checkpoint grid differs from the archive config"));
    }
    for s in steps.iter().filter(|s| **s > k) {
        let p = archive.checkpoint_path(*s);
        fs::remove_file(&p).map_err(io_err(&p))?;
    }
    let snap_steps = run.snapshot_steps as u64;
    for m in archive.snapshot_indices()?.into_iter().filter(|m| m * snap_steps > k) {
        for ext in ["bin", "vtk"] {
            let p = archive.snapshot_path(m, ext);
            if p.exists() {
                fs::remove_file(&p).map_err(io_err(&p))?;
            }
        }
    }
    let config = serde_json::to_value(&run.config).map_err(|e| Error::config(e.to_string()))?;
    let mut summary = ck.trailer.summary;
    summary.failure = None;
    let driver = Driver {
        archive,
        run: &run,
        config: config.clone(),
        ext: ThetaExtension::linear_blend(&run.grid, &run.params.closure)?,
    };
    let mut series = SeriesWriter::resume(&archive.series_path(), k)?;
    let last = run.steps() as u64;
    let result = if k < last {
        driver.advance(ck.state, k + 1, last, &mut summary, &mut series, progress).map(|_| ())
    } else {
        Ok(())
    };
    archive.write_metadata(&metadata_for(&run, &config, Some(summary.clone())))?;
    result.map(|_| summary)
}
