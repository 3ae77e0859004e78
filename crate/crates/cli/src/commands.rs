//! One function per subcommand. Each reads its inputs, runs the pipeline
//! stage and writes plain files into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use fleet_anomaly::anomaly::{
    calibrate_null, flag_anomalies, index_series, lagged_ks_sets, AnomalySeries, HourWindow,
    IndexKind, IndexStatus, KsHeatmap, NullCalibration, SampleStore,
};
use fleet_anomaly::density::{density_series, Grid};
use fleet_anomaly::ingest::{
    build_panel, clean, parse_pings, write_pings_csv, CleanConfig, CleanReport, Panel, RecordError,
};
use fleet_anomaly::synth::{generate_fleet, inject_event, select_responders};

use crate::config::{DetectConfig, SimulateConfig};
use crate::error::{CliError, ErrorCode};
use crate::manifest::{Manifest, MANIFEST_FILE};

/// Collects output files so their hashes land in the manifest.
struct OutDir {
    dir: PathBuf,
    manifest: Manifest,
}

impl OutDir {
    fn create(dir: &Path, manifest: Manifest) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.manifest
            .outputs
            .insert(name.into(), crate::manifest::sha256_hex(bytes));
        Ok(())
    }

    fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::new(ErrorCode::Io, e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn finish(self) -> Result<Manifest, CliError> {
        let path = self.dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| CliError::new(ErrorCode::Io, e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(self.manifest)
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::new(ErrorCode::Io, e.to_string())
}

/// Panel from `.csv` (flat cell list) or JSON (anything else).
pub fn read_panel(path: &Path) -> Result<(Panel, Vec<u8>), CliError> {
    let bytes = read_input(path)?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let panel = if is_csv {
        Panel::read_csv(bytes.as_slice())?
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| CliError::new(ErrorCode::InputInvalid, e.to_string()))?;
        Panel::from_json(text)?
    };
    Ok((panel, bytes))
}

/// Run `f` on a pool of `threads` workers (the global pool when `None`).
/// Results never depend on the thread count.
pub fn with_threads<R: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> R + Send,
) -> Result<R, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::config("--threads must be >= 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Serialize)]
struct CleanReportDoc<'a> {
    #[serde(flatten)]
    report: &'a CleanReport,
    record_errors: &'a [RecordError],
}

pub struct CleanOutcome {
    pub report: CleanReport,
    pub record_errors: Vec<RecordError>,
    pub manifest: Manifest,
}

/// `clean`: parse raw pings, apply the cleaning rules, write `cleaned.csv` and
/// `clean_report.json`.
pub fn cmd_clean(input: &Path, config: &CleanConfig, out: &Path) -> Result<CleanOutcome, CliError> {
    config.validate()?;
    let bytes = read_input(input)?;
    let parsed = parse_pings(bytes.as_slice())?;
    let (cleaned, report) = clean(&parsed.pings, config)?;
    let manifest = Manifest::new("clean", config, vec![])?.with_input(input, &bytes);
    let mut dir = OutDir::create(out, manifest)?;
    let mut csv = Vec::new();
    write_pings_csv(&mut csv, &cleaned)?;
    dir.write("cleaned.csv", &csv)?;
    dir.write_json(
        "clean_report.json",
        &CleanReportDoc {
            report: &report,
            record_errors: &parsed.errors,
        },
    )?;
    Ok(CleanOutcome {
        report,
        record_errors: parsed.errors,
        manifest: dir.finish()?,
    })
}

/// `panel`: clean raw pings and interpolate the survivors onto the hourly
/// grid; writes `panel.json`, `panel.csv` and `clean_report.json`.
pub fn cmd_panel(input: &Path, config: &CleanConfig, out: &Path) -> Result<Panel, CliError> {
    config.validate()?;
    let bytes = read_input(input)?;
    let parsed = parse_pings(bytes.as_slice())?;
    let (cleaned, report) = clean(&parsed.pings, config)?;
    let panel = build_panel(&cleaned, config)?;
    let manifest = Manifest::new("panel", config, vec![])?.with_input(input, &bytes);
    let mut dir = OutDir::create(out, manifest)?;
    write_panel(&mut dir, &panel)?;
    dir.write_json(
        "clean_report.json",
        &CleanReportDoc {
            report: &report,
            record_errors: &parsed.errors,
        },
    )?;
    dir.finish()?;
    Ok(panel)
}

fn write_panel(dir: &mut OutDir, panel: &Panel) -> Result<(), CliError> {
    let mut json = panel.to_json()?;
    json.push('\n');
    dir.write("panel.json", json.as_bytes())?;
    let mut csv = Vec::new();
    panel.write_csv(&mut csv)?;
    dir.write("panel.csv", &csv)
}

#[derive(Debug, Serialize)]
struct Truth {
    event: Option<fleet_anomaly::synth::DarkEvent>,
    responders: Vec<String>,
}

/// `simulate`: generate a fleet, optionally inject an event, write the panel
/// plus `truth.json` with the event and responding vessels.
pub fn cmd_simulate(config: &SimulateConfig, out: &Path) -> Result<Panel, CliError> {
    let base = generate_fleet(&config.scenario)?;
    let (panel, responders) = match &config.event {
        Some(ev) => {
            let seed = config.event_seed();
            let who = select_responders(&base, ev, seed)?;
            (inject_event(&base, ev, seed)?, who)
        }
        None => (base, vec![]),
    };
    let mut seeds = vec![config.scenario.seed];
    if config.event.is_some() {
        seeds.push(config.event_seed());
    }
    let mut dir = OutDir::create(out, Manifest::new("simulate", config, seeds)?)?;
    write_panel(&mut dir, &panel)?;
    dir.write_json(
        "truth.json",
        &Truth {
            event: config.event,
            responders: responders
                .iter()
                .map(|&v| panel.vessel_ids()[v].clone())
                .collect(),
        },
    )?;
    dir.finish()?;
    Ok(panel)
}

#[derive(Debug, Clone, Serialize)]
pub struct KindResult {
    pub series: AnomalySeries,
    pub calibration: Option<NullCalibration>,
}

pub struct DetectOutcome {
    pub heatmap: KsHeatmap,
    pub results: Vec<KindResult>,
    pub config: DetectConfig,
    pub manifest: Manifest,
}

#[derive(Serialize)]
struct SeriesDoc<'a> {
    schema: &'static str,
    version: u32,
    start_hour: String,
    lag_hours: usize,
    kind: IndexKind,
    threshold: Option<f64>,
    calibration: &'a Option<NullCalibration>,
    hours: Vec<SeriesRow>,
}

#[derive(Serialize)]
struct SeriesRow {
    hour: usize,
    value: Option<f64>,
    status: IndexStatus,
    flag: bool,
}

fn series_doc<'a>(panel: &Panel, r: &'a KindResult) -> SeriesDoc<'a> {
    SeriesDoc {
        schema: "fleet-anomaly/anomaly-series",
        version: 1,
        start_hour: panel
            .start_hour()
            .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        lag_hours: r.series.lag_hours,
        kind: r.series.kind,
        threshold: r.series.threshold,
        calibration: &r.calibration,
        hours: (0..r.series.len())
            .map(|h| SeriesRow {
                hour: h,
                value: r.series.values[h],
                status: r.series.status[h],
                flag: r.series.flags[h],
            })
            .collect(),
    }
}

/// Core of `detect` without any file I/O.
pub fn detect_panel(
    panel: &Panel,
    config: &DetectConfig,
    threads: Option<usize>,
) -> Result<(KsHeatmap, Vec<KindResult>, DetectConfig), CliError> {
    config.validate()?;
    let resolved = config.resolved(panel)?;
    if panel.n_hours() <= resolved.lag_hours {
        return Err(CliError::new(
            ErrorCode::WindowTooShort,
            format!(
                "panel has {} hours, lag window needs more than {}",
                panel.n_hours(),
                resolved.lag_hours
            ),
        ));
    }
    let lag = resolved.lag_hours;
    let sets = with_threads(threads, || {
        let store = SampleStore::from_panel(panel);
        lagged_ks_sets(&store, lag)
    })?;
    let heatmap = KsHeatmap::from_sets(&sets, lag);
    let nulls = DetectConfig::hour_windows(&resolved.null_windows);
    let events = DetectConfig::hour_windows(&resolved.event_windows);
    let mut results = Vec::new();
    for &kind in &resolved.kinds {
        let series = index_series(&sets, kind, lag);
        let (series, calibration) = if nulls.is_empty() {
            (series, None)
        } else {
            let cal = calibrate_null(&series, &nulls, &events, resolved.percentile)?;
            (flag_anomalies(&series, &cal), Some(cal))
        };
        results.push(KindResult {
            series,
            calibration,
        });
    }
    Ok((heatmap, results, resolved))
}

/// `detect`: lagged KS heatmap plus one series per index kind, calibrated
/// and flagged when null windows are configured. Writes `<kind>.csv`,
/// `<kind>.json`, `heatmap.csv` and the manifest.
pub fn cmd_detect(
    input: &Path,
    config: &DetectConfig,
    threads: Option<usize>,
    out: &Path,
) -> Result<DetectOutcome, CliError> {
    let (panel, bytes) = read_panel(input)?;
    let (heatmap, results, resolved) = detect_panel(&panel, config, threads)?;
    let manifest = Manifest::new("detect", &resolved, vec![])?.with_input(input, &bytes);
    let mut dir = OutDir::create(out, manifest)?;
    for r in &results {
        let name = r.series.kind.name();
        let mut csv = Vec::new();
        r.series.write_csv(&mut csv).map_err(io_err)?;
        dir.write(&format!("{name}.csv"), &csv)?;
        dir.write_json(&format!("{name}.json"), &series_doc(&panel, r))?;
    }
    let mut csv = Vec::new();
    heatmap.write_csv(&mut csv).map_err(io_err)?;
    dir.write("heatmap.csv", &csv)?;
    Ok(DetectOutcome {
        heatmap,
        results,
        config: resolved,
        manifest: dir.finish()?,
    })
}

/// Re-run `detect` from a previous manifest; the input must still hash the same.
pub fn cmd_detect_from_manifest(
    manifest_path: &Path,
    threads: Option<usize>,
    out: &Path,
) -> Result<DetectOutcome, CliError> {
    let m = Manifest::load(manifest_path)?;
    if m.command != "detect" {
        return Err(CliError::config(format!("manifest is for `{}`, not detect", m.command)));
    }
    let input = m
        .input
        .as_ref()
        .ok_or_else(|| CliError::config("manifest has no input"))?;
    let bytes = read_input(Path::new(&input.path))?;
    if crate::manifest::sha256_hex(&bytes) != input.sha256 {
        return Err(CliError::new(
            ErrorCode::InputInvalid,
            format!("{} changed since the manifest was written", input.path),
        ));
    }
    let config: DetectConfig =
        serde_json::from_value(m.config.clone()).map_err(|e| CliError::config(e.to_string()))?;
    cmd_detect(Path::new(&input.path), &config, threads, out)
}

/// `heatmap`: only the lag × time KS matrix.
pub fn cmd_heatmap(
    input: &Path,
    lag_hours: usize,
    threads: Option<usize>,
    out: &Path,
) -> Result<KsHeatmap, CliError> {
    if lag_hours == 0 {
        return Err(CliError::config("lag must be >= 1"));
    }
    let (panel, bytes) = read_panel(input)?;
    let heatmap = with_threads(threads, || {
        fleet_anomaly::anomaly::ks_heatmap(&SampleStore::from_panel(&panel), lag_hours)
    })??;
    #[derive(Serialize)]
    struct Cfg {
        lag_hours: usize,
    }
    let manifest = Manifest::new("heatmap", &Cfg { lag_hours }, vec![])?.with_input(input, &bytes);
    let mut dir = OutDir::create(out, manifest)?;
    let mut csv = Vec::new();
    heatmap.write_csv(&mut csv).map_err(io_err)?;
    dir.write("heatmap.csv", &csv)?;
    dir.finish()?;
    Ok(heatmap)
}

/// Parse a series CSV written by `detect` (`hour,value,flag,threshold`).
pub fn read_series_csv(bytes: &[u8], kind: IndexKind, lag_hours: usize) -> Result<AnomalySeries, CliError> {
    let bad = |m: String| CliError::new(ErrorCode::InputInvalid, m);
    let text = std::str::from_utf8(bytes).map_err(|e| bad(e.to_string()))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("hour,value,flag,threshold") {
        return Err(bad("expected header `hour,value,flag,threshold`".into()));
    }
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut cols = line.split(',');
        let hour: usize = cols
            .next()
            .and_then(|h| h.parse().ok())
            .ok_or_else(|| bad(format!("line {}: bad hour", i + 2)))?;
        if hour != i {
            return Err(bad(format!("line {}: hours must be consecutive from 0", i + 2)));
        }
        let value = match cols.next().unwrap_or("") {
            "" => None,
            v => Some(v.parse::<f64>().map_err(|_| bad(format!("line {}: bad value `{v}`", i + 2)))?),
        };
        values.push(value);
    }
    let n = values.len();
    Ok(AnomalySeries {
        kind,
        lag_hours,
        status: values
            .iter()
            .map(|v| if v.is_some() { IndexStatus::Defined } else { IndexStatus::InsufficientLags })
            .collect(),
        values,
        threshold: None,
        flags: vec![false; n],
    })
}

/// `calibrate`: threshold an existing series against null windows (hour
/// indices). Writes `calibration.json` and `<kind>_flagged.csv`.
pub fn cmd_calibrate(
    input: &Path,
    kind: IndexKind,
    config: &DetectConfig,
    out: &Path,
) -> Result<(AnomalySeries, NullCalibration), CliError> {
    config.validate()?;
    let bytes = read_input(input)?;
    let series = read_series_csv(&bytes, kind, config.lag_hours)?;
    let hours = |ws: &[crate::config::WindowSpec]| -> Result<Vec<HourWindow>, CliError> {
        let hw = DetectConfig::hour_windows(ws);
        if hw.len() != ws.len() {
            return Err(CliError::config(
                "calibrate works on series files, so windows must be hour indices",
            ));
        }
        Ok(hw)
    };
    let nulls = hours(&config.null_windows)?;
    let events = hours(&config.event_windows)?;
    let cal = calibrate_null(&series, &nulls, &events, config.percentile)?;
    let flagged = flag_anomalies(&series, &cal);
    let manifest = Manifest::new("calibrate", config, vec![])?.with_input(input, &bytes);
    let mut dir = OutDir::create(out, manifest)?;
    dir.write_json("calibration.json", &cal)?;
    let mut csv = Vec::new();
    flagged.write_csv(&mut csv).map_err(io_err)?;
    dir.write(&format!("{}_flagged.csv", kind.name()), &csv)?;
    dir.finish()?;
    Ok((flagged, cal))
}

/// `density`: per-hour KDE of between-vessel distances as a CSV matrix with
/// one row per grid distance and one column per hour.
pub fn cmd_density(
    input: &Path,
    grid: Grid,
    bandwidth: Option<f64>,
    threads: Option<usize>,
    out: &Path,
) -> Result<Vec<Option<fleet_anomaly::DensityEstimate>>, CliError> {
    let (panel, bytes) = read_panel(input)?;
    let estimates = with_threads(threads, || density_series(&panel, &grid, bandwidth))?;
    #[derive(Serialize)]
    struct Cfg {
        grid: Grid,
        bandwidth: Option<f64>,
    }
    let manifest = Manifest::new("density", &Cfg { grid, bandwidth }, vec![])?.with_input(input, &bytes);
    let mut dir = OutDir::create(out, manifest)?;
    let mut text = String::from("km");
    for h in 0..estimates.len() {
        text.push_str(&format!(",{h}"));
    }
    text.push('\n');
    for (i, km) in grid.values().iter().enumerate() {
        text.push_str(&km.to_string());
        for est in &estimates {
            text.push(',');
            if let Some(e) = est {
                text.push_str(&e.density[i].to_string());
            }
        }
        text.push('\n');
    }
    dir.write("density.csv", text.as_bytes())?;
    dir.finish()?;
    Ok(estimates)
}
