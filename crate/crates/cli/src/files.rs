//! Data, phantom and report files, each written with a manifest sidecar.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use smrt::harmonics::sphere_grid;
use smrt::{BoundaryData, Phantom, TGrid};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const SCHEMA: u32 = 1;
const COORD_TOLERANCE: f64 = 1e-12;

/// Grids and provenance stored next to a data CSV as `<file>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSidecar {
    pub schema: u32,
    pub dimension: usize,
    pub angular_resolution: usize,
    pub t_samples: usize,
    pub t_max: f64,
    pub centers: Vec<[f64; 3]>,
    pub provenance: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    schema: u32,
    command: &'a str,
    config: &'a serde_json::Value,
    inputs: &'a [FileDigest],
    output: FileDigest,
    tool_version: &'static str,
    wall_time_seconds: f64,
    timestamp: u64,
}

/// Collects everything a manifest records for one command invocation.
pub struct Run {
    pub command: &'static str,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    started: Instant,
    written: Vec<PathBuf>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest(path: &Path) -> CliResult<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(FileDigest { path: path.display().to_string(), sha256: hex(&Sha256::digest(&bytes)) })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// `path` with `suffix` appended to the full file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

impl Run {
    pub fn new<C: Serialize>(command: &'static str, config: &C) -> Self {
        Self {
            command,
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            inputs: Vec::new(),
            started: Instant::now(),
            written: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.push(digest(path)?);
        Ok(())
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        write_bytes(path, bytes)?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    /// Writes a `schema: 1` JSON report; `body` must serialize to an object.
    pub fn write_report<T: Serialize>(&mut self, path: &Path, body: &T) -> CliResult<()> {
        let text = report_json(self.command, body)?;
        self.write(path, text.as_bytes())
    }

    /// Writes one manifest per output file.
    pub fn finish(self) -> CliResult<()> {
        let wall = self.started.elapsed().as_secs_f64();
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        for path in &self.written {
            let manifest = Manifest {
                schema: SCHEMA,
                command: self.command,
                config: &self.config,
                inputs: &self.inputs,
                output: digest(path)?,
                tool_version: env!("CARGO_PKG_VERSION"),
                wall_time_seconds: wall,
                timestamp,
            };
            let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Input(e.to_string()))?;
            write_bytes(&sibling(path, ".manifest.json"), text.as_bytes())?;
        }
        Ok(())
    }
}

pub fn report_json<T: Serialize>(command: &str, body: &T) -> CliResult<String> {
    let mut value = serde_json::to_value(body).map_err(|e| CliError::Input(e.to_string()))?;
    let serde_json::Value::Object(fields) = &mut value else {
        return Err(CliError::Input("report body is not an object".into()));
    };
    let mut out = serde_json::Map::new();
    out.insert("schema".into(), SCHEMA.into());
    out.insert("command".into(), command.into());
    out.append(fields);
    let mut text = serde_json::to_string_pretty(&out).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn read_phantom(path: &Path) -> CliResult<Phantom> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let ph: Phantom = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: malformed phantom: {e}", path.display())))?;
    ph.validate().map_err(|e| match CliError::from(e) {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok(ph)
}

pub fn data_csv(g: &BoundaryData) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(["center_index", "t", "value"]).map_err(err)?;
    for (i, row) in g.values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            w.write_record([i.to_string(), format!("{:.14e}", g.t_grid.time(j)), format!("{v:.14e}")])
                .map_err(err)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Input(e.to_string()))
}

pub fn data_sidecar(g: &BoundaryData) -> DataSidecar {
    DataSidecar {
        schema: SCHEMA,
        dimension: g.dimension,
        angular_resolution: g.centers.resolution,
        t_samples: g.t_grid.samples,
        t_max: g.t_grid.t_max,
        centers: g.centers.nodes.clone(),
        provenance: g.provenance.clone(),
    }
}

pub fn write_data(run: &mut Run, path: &Path, g: &BoundaryData) -> CliResult<()> {
    run.write(path, &data_csv(g)?)?;
    let side = serde_json::to_string_pretty(&data_sidecar(g)).map_err(|e| CliError::Input(e.to_string()))?;
    run.write(&sibling(path, ".json"), side.as_bytes())
}

/// Reads a data CSV and its sidecar, rebuilding and checking the grids.
pub fn read_data(run: &mut Run, path: &Path) -> CliResult<BoundaryData> {
    let side_path = sibling(path, ".json");
    let text = std::fs::read_to_string(&side_path).map_err(|e| CliError::io(&side_path, e))?;
    let side: DataSidecar = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: malformed sidecar: {e}", side_path.display())))?;
    if side.schema != SCHEMA {
        return Err(CliError::Unsupported(format!("data schema {} (expected {SCHEMA})", side.schema)));
    }
    let centers = sphere_grid(side.dimension, side.angular_resolution)?;
    let t_grid = TGrid::new(side.t_samples, side.t_max)?;
    if centers.len() != side.centers.len()
        || centers
            .nodes
            .iter()
            .zip(&side.centers)
            .any(|(a, b)| a.iter().zip(b).any(|(x, y)| (x - y).abs() > COORD_TOLERANCE))
    {
        return Err(CliError::Input(format!(
            "{}: centers do not match the standard grid of resolution {}",
            side_path.display(),
            side.angular_resolution
        )));
    }
    let mut g = BoundaryData::zeros(centers, t_grid);
    g.provenance = side.provenance;
    let mut seen = vec![vec![false; t_grid.samples]; g.centers.len()];
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if headers != vec!["center_index", "t", "value"] {
        return Err(CliError::Input(format!("{}: expected header center_index,t,value", path.display())));
    }
    let h = t_grid.spacing();
    for (line, rec) in reader.records().enumerate() {
        let at = |msg: String| CliError::Input(format!("{}: line {}: {msg}", path.display(), line + 2));
        let rec = rec.map_err(|e| at(e.to_string()))?;
        let field = |k: usize, name: &str| {
            rec.get(k).ok_or_else(|| at(format!("missing field `{name}`")))
        };
        let i: usize = field(0, "center_index")?.trim().parse().map_err(|e| at(format!("center_index: {e}")))?;
        let t: f64 = field(1, "t")?.trim().parse().map_err(|e| at(format!("t: {e}")))?;
        let v: f64 = field(2, "value")?.trim().parse().map_err(|e| at(format!("value: {e}")))?;
        let j = (t / h).round();
        if i >= g.centers.len() || j < 0.0 || j as usize >= t_grid.samples || (t - j * h).abs() > 1e-9 * h.max(1.0) {
            return Err(at(format!("({i}, {t}) is not a grid node")));
        }
        let j = j as usize;
        if seen[i][j] {
            return Err(at(format!("duplicate sample ({i}, {t})")));
        }
        seen[i][j] = true;
        g.values[i][j] = v;
    }
    let missing = seen.iter().flatten().filter(|s| !**s).count();
    if missing > 0 {
        return Err(CliError::Input(format!("{}: {missing} grid samples missing", path.display())));
    }
    g.validate()?;
    run.input(path)?;
    run.input(&side_path)?;
    Ok(g)
}

/// Tidy CSV from a header and rows of already formatted fields.
pub fn tidy_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Input(e.to_string()))
}

pub fn num(v: f64) -> String {
    format!("{v:.14e}")
}
