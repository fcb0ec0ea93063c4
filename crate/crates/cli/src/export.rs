//! Plot manifest: which archive file feeds which figure class.

use std::path::{Path, PathBuf};

use rbnsf::diagnostics::SnapshotSource;
use rbnsf::io::{RunArchive, SERIES_COLUMNS};
use rbnsf::{Error, Result};
use serde_json::{json, Map, Value};

pub const MANIFEST_FORMAT: &str = "rbnsf-plot-manifest-1";

fn rel(root: &Path, p: &Path) -> String {
    p.strip_prefix(root).unwrap_or(p).to_string_lossy().into_owned()
}

fn listed(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    v.sort();
    Ok(v)
}

pub fn export(dir: &Path, extra_cascades: &[PathBuf]) -> Result<()> {
    let archive = RunArchive::new(dir);
    let meta = archive.read_metadata()?;
    let root = archive.root();
    let mut m = Map::new();
    m.insert("format".into(), json!(MANIFEST_FORMAT));
    m.insert("grid".into(), json!({"n1": meta.n1, "n2": meta.n2, "h": meta.h}));
    m.insert("dt".into(), json!(meta.dt));
    let mut missing = Vec::new();

    if archive.series_path().exists() {
        m.insert("series".into(), json!({"file": "series.csv", "columns": SERIES_COLUMNS}));
    } else {
        missing.push("series");
    }

    let snaps = archive.snapshots()?;
    let mut list = Vec::new();
    for (i, idx) in archive.snapshot_indices()?.into_iter().enumerate() {
        let vtk = archive.snapshot_path(idx, "vtk");
        list.push(json!({
            "m": idx,
            "t": snaps.time(i)?,
            "bin": rel(root, &archive.snapshot_path(idx, "bin")),
            "vtk": if vtk.exists() { Value::from(rel(root, &vtk)) } else { Value::Null },
        }));
    }
    if list.is_empty() {
        missing.push("snapshots");
    }
    m.insert("snapshots".into(), Value::Array(list));

    let stats = archive.stats_dir();
    let classes: [(&str, &[&str]); 4] = [
        ("means", &["mean.vtk", "deviation.vtk", "mean_fields.csv", "deviation_fields.csv", "errors.csv"]),
        ("linecuts", &["linecuts.csv"]),
        ("defects", &["defect.vtk", "defect_fields.csv", "defect_errors.csv"]),
        ("measures", &["functionals.csv", "moments.json"]),
    ];
    for (class, files) in classes {
        let present: Vec<String> = files
            .iter()
            .map(|f| stats.join(f))
            .filter(|p| p.exists())
            .map(|p| rel(root, &p))
            .collect();
        if present.len() < files.len() {
            missing.push(class);
        }
        if !present.is_empty() {
            m.insert(class.into(), json!(present));
        }
    }
    if m.contains_key("linecuts") {
        m.insert("linecut_y".into(), json!(rbnsf::io::CUT_LINES));
    }
    let hists: Vec<Value> = listed(&stats.join("histograms"), "csv")?
        .iter()
        .map(|p| {
            json!({
                "functional": p.file_stem().map(|s| s.to_string_lossy().into_owned()),
                "file": rel(root, p),
            })
        })
        .collect();
    if hists.is_empty() {
        missing.push("histograms");
    }
    m.insert("histograms".into(), Value::Array(hists));

    let mut cascades: Vec<String> = listed(root, "csv")?
        .iter()
        .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("cascade")))
        .map(|p| rel(root, p))
        .collect();
    for p in extra_cascades {
        if !p.exists() {
            return Err(Error::config(format!("cascade table {} does not exist", p.display())));
        }
        cascades.push(p.canonicalize().map_err(|e| Error::io(p, e))?.to_string_lossy().into_owned());
    }
    m.insert("cascades".into(), json!(cascades));
    m.insert("missing".into(), json!(missing));

    let path = root.join("manifest.json");
    let text = serde_json::to_string_pretty(&Value::Object(m)).map_err(|e| Error::config(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    println!("wrote {}", path.display());
    for c in &missing {
        eprintln!("note: no {c} data yet (run `rbnsf analyze` or `rbnsf cascade --out`)");
    }
    Ok(())
}
