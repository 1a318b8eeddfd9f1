//! The `synth`, `pipeline` and `report` stages, wired through files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiments::{
    cross_validate, full_data_clustering, robustness_curve, BinsMode, CrossValResult,
    SubsampleCurve, SubsampleMethod,
};
use crate::export::{self, CrossValFile, PcaMeta};
use crate::features::{FeatureKind, FeatureTable};
use crate::ingest::{
    filter_min_duration, generate_raw_sessions, generate_synthetic_fleet, load_directory,
    session_file_name, write_session_log, FleetSpec, SignalKind, UserRecord,
};
use crate::learn::{pca_project, PointSet};

pub const SUMMARY_FILE: &str = "summary.json";
pub const CROSSVAL_JSON: &str = "crossval.json";
pub const CROSSVAL_CSV: &str = "crossval.csv";
pub const FAILED_MARKER: &str = "FAILED";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_DIR: &str = "report";

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Config(_) | Error::InvalidSpec(_) => 2,
        Error::NoData(_)
        | Error::InsufficientData { .. }
        | Error::Parse { .. }
        | Error::Ordering { .. }
        | Error::Schema { .. } => 3,
        Error::MissingResults(_) => 4,
        _ => 1,
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestUser {
    pub user_id: String,
    pub archetype: usize,
    pub sessions: Vec<String>,
    pub hours: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub seed: u64,
    pub archetypes: usize,
    pub session_files: usize,
    pub users: Vec<ManifestUser>,
}

/// Writes one session log per generated session plus `manifest.json`.
pub fn run_synth(spec: &FleetSpec, out: &Path) -> Result<SynthManifest> {
    let sessions = generate_raw_sessions(spec)?;
    create_dir(out)?;
    let mut users: Vec<ManifestUser> = Vec::new();
    for s in &sessions {
        let file = session_file_name(&s.session.user_id, &s.session.session_id);
        write_session_log(&out.join(&file), &s.session)?;
        let hours = s.session.duration() / 3600.0;
        match users.last_mut() {
            Some(u) if u.user_id == s.session.user_id => {
                u.sessions.push(file);
                u.hours += hours;
            }
            _ => users.push(ManifestUser {
                user_id: s.session.user_id.clone(),
                archetype: s.archetype,
                sessions: vec![file],
                hours,
            }),
        }
    }
    let manifest = SynthManifest {
        seed: spec.seed,
        archetypes: spec.archetype_count(),
        session_files: sessions.len(),
        users,
    };
    export::write_json(&out.join(MANIFEST_FILE), &manifest)?;
    info!(
        "wrote {} session files for {} users to {}",
        manifest.session_files,
        manifest.users.len(),
        out.display()
    );
    Ok(manifest)
}

/// Files of one (signal, feature) cell, relative to the results directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFiles {
    pub histograms: String,
    pub clusters: String,
    pub pca: String,
    pub pca_meta: String,
    pub curves: String,
}

impl CellFiles {
    fn new(signal: SignalKind, feature: FeatureKind) -> Self {
        Self {
            histograms: format!("hist/{}", export::histogram_file_name(signal, feature)),
            clusters: format!("clusters/{}", export::clusters_file_name(signal, feature)),
            pca: format!("pca/{}", export::pca_file_name(signal, feature)),
            pca_meta: format!("pca/{}", export::pca_meta_file_name(signal, feature)),
            curves: format!("curves/{}", export::curve_file_name(signal, feature)),
        }
    }

    fn all(&self) -> [&str; 5] {
        [
            &self.histograms,
            &self.clusters,
            &self.pca,
            &self.pca_meta,
            &self.curves,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub signal: SignalKind,
    pub feature: FeatureKind,
    pub users: usize,
    /// Users without a histogram for this cell.
    pub dropped: Vec<String>,
    pub optimal_k: usize,
    pub mean: f64,
    pub std: f64,
    pub explained_variance_ratio: Vec<f64>,
    pub files: CellFiles,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub users_loaded: usize,
    pub users_retained: usize,
    pub min_hours: f64,
    pub ks: Vec<usize>,
    pub trials: usize,
    pub percentages: Vec<f64>,
    pub bins_mode: BinsMode,
    pub crossval_json: String,
    pub crossval_csv: String,
    pub cells: Vec<CellSummary>,
}

fn load_users(config: &RunConfig) -> Result<Vec<UserRecord<f64>>> {
    if let Some(dir) = &config.data_dir {
        if !dir.is_dir() {
            return Err(Error::NoData(format!(
                "no sessions found: {} is not a directory",
                dir.display()
            )));
        }
        return load_directory(dir);
    }
    let path = config
        .fleet_spec
        .as_ref()
        .ok_or_else(|| Error::Config("no data source".into()))?;
    let spec = FleetSpec::load(path).map_err(|e| match e {
        Error::Io { .. } => Error::InvalidSpec(format!("{}: {e}", path.display())),
        other => other,
    })?;
    Ok(generate_synthetic_fleet(&spec)?.users)
}

/// Runs every configured cell and writes its exports under
/// `config.output_dir`. On failure a `FAILED` marker holding the message is
/// left next to whatever was written.
pub fn run_pipeline(config: &RunConfig) -> Result<Summary> {
    config.validate()?;
    let out = &config.output_dir;
    create_dir(out)?;
    let marker = out.join(FAILED_MARKER);
    if marker.exists() {
        std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    let result = pipeline_inner(config, out);
    if let Err(e) = &result {
        let _ = std::fs::write(&marker, format!("{e}\n"));
    }
    result
}

fn pipeline_inner(config: &RunConfig, out: &Path) -> Result<Summary> {
    let users = load_users(config)?;
    let users_loaded = users.len();
    let users = filter_min_duration(users, config.min_hours);
    info!(
        "{} of {} users have at least {} h of data",
        users.len(),
        users_loaded,
        config.min_hours
    );
    if users.is_empty() {
        return Err(Error::NoData(format!(
            "no sessions found from users with at least {} h of data",
            config.min_hours
        )));
    }
    for sub in ["hist", "clusters", "pca", "curves"] {
        create_dir(&out.join(sub))?;
    }

    let opts = config.experiment_options();
    let ks = config.ks();
    let mut cv_cells = Vec::new();
    let mut cells = Vec::new();
    for &signal in &config.signals {
        for &feature in &config.features {
            info!(
                "{signal} {feature}: cross-validating K = {}..{}",
                config.k_min, config.k_max
            );
            let table = FeatureTable::extract(&users, signal, feature);
            let cv = cross_validate(&table, &ks, config.trials, config.seed, &opts)?;
            let k = cv.optimal_k;
            let files = CellFiles::new(signal, feature);

            let (set, clustering) = full_data_clustering(&table, k, config.seed, &opts)?;
            export::write_histograms(&out.join(&files.histograms), &set)?;
            export::write_clustering(&out.join(&files.clusters), &set.user_ids, &clustering)?;
            let projection = pca_project(&PointSet::from_histograms(&set)?, 2)?;
            export::write_pca(
                &out.join(&files.pca),
                &out.join(&files.pca_meta),
                signal,
                feature,
                &projection,
            )?;

            info!("{signal} {feature}: K = {k}, subsampling");
            let curves = SubsampleMethod::ALL
                .iter()
                .map(|&m| {
                    robustness_curve(
                        &table,
                        m,
                        k,
                        &config.percentages,
                        config.trials,
                        config.seed,
                        &opts,
                    )
                })
                .collect::<Result<Vec<SubsampleCurve>>>()?;
            export::write_curves(&out.join(&files.curves), &curves)?;

            let kept: BTreeSet<&str> = set.user_ids.iter().map(String::as_str).collect();
            cells.push(CellSummary {
                signal,
                feature,
                users: set.user_ids.len(),
                dropped: users
                    .iter()
                    .filter(|u| !kept.contains(u.user_id.as_str()))
                    .map(|u| u.user_id.clone())
                    .collect(),
                optimal_k: k,
                mean: cv.mean_at(k).unwrap_or(f64::NAN),
                std: cv.std_at(k).unwrap_or(f64::NAN),
                explained_variance_ratio: projection.explained_variance_ratio.clone(),
                files,
            });
            cv_cells.push(cv);
        }
    }

    let cv = CrossValResult {
        trials: config.trials,
        cells: cv_cells,
    };
    export::write_json(&out.join(CROSSVAL_JSON), &CrossValFile::from(&cv))?;
    export::write_crossval_table(&out.join(CROSSVAL_CSV), &cv)?;

    let summary = Summary {
        seed: config.seed,
        users_loaded,
        users_retained: users.len(),
        min_hours: config.min_hours,
        ks,
        trials: config.trials,
        percentages: config.percentages.clone(),
        bins_mode: config.bins_mode,
        crossval_json: CROSSVAL_JSON.into(),
        crossval_csv: CROSSVAL_CSV.into(),
        cells,
    };
    export::write_json(&out.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct VRow {
    signal: SignalKind,
    feature: FeatureKind,
    k: usize,
    mean: f64,
    std: f64,
    optimal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct ScatterRow {
    signal: SignalKind,
    feature: FeatureKind,
    user_id: String,
    pc1: f64,
    pc2: f64,
    label: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct CurveOut {
    signal: SignalKind,
    feature: FeatureKind,
    method: String,
    percentage: f64,
    mean: f64,
    std: f64,
}

/// The three report files, relative to the results directory.
pub const REPORT_FILES: [&str; 3] = [
    "report/vmeasure_vs_k.csv",
    "report/pca_scatter.csv",
    "report/subsampling.csv",
];

/// Reads a finished results directory and writes tidy plot-data CSVs to
/// `<dir>/report/`. Fails with [`Error::MissingResults`] naming every
/// absent input.
pub fn run_report(dir: &Path) -> Result<Vec<PathBuf>> {
    let summary_path = dir.join(SUMMARY_FILE);
    if !summary_path.is_file() {
        return Err(Error::MissingResults(vec![summary_path
            .display()
            .to_string()]));
    }
    let summary: Summary = export::read_json(&summary_path)?;
    let mut missing: Vec<String> = std::iter::once(summary.crossval_json.as_str())
        .chain(summary.cells.iter().flat_map(|c| c.files.all()))
        .map(|f| dir.join(f))
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    missing.dedup();
    if !missing.is_empty() {
        return Err(Error::MissingResults(missing));
    }

    let report = dir.join(REPORT_DIR);
    create_dir(&report)?;
    let paths: Vec<PathBuf> = REPORT_FILES.iter().map(|f| dir.join(f)).collect();

    let cv: CrossValFile = export::read_json(&dir.join(&summary.crossval_json))?;
    let mut w = csv::Writer::from_path(&paths[0])?;
    for c in &summary.cells {
        let cell = cv
            .signals
            .get(&c.signal.to_string())
            .and_then(|f| f.get(&c.feature.to_string()))
            .ok_or_else(|| {
                Error::MissingResults(vec![format!(
                    "{}: {} {}",
                    summary.crossval_json, c.signal, c.feature
                )])
            })?;
        for s in &cell.k {
            w.serialize(VRow {
                signal: c.signal,
                feature: c.feature,
                k: s.k,
                mean: s.mean,
                std: s.std,
                optimal: s.optimal,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(&paths[0], e))?;

    let mut w = csv::Writer::from_path(&paths[1])?;
    for c in &summary.cells {
        let labels = export::read_clustering(&dir.join(&c.files.clusters))?;
        let coords = export::read_pca(&dir.join(&c.files.pca))?;
        let _: PcaMeta = export::read_json(&dir.join(&c.files.pca_meta))?;
        for p in coords {
            let label = labels
                .iter()
                .find(|l| l.user_id == p.user_id)
                .ok_or_else(|| {
                    Error::Domain(format!(
                        "{}: no label for user {}",
                        c.files.clusters, p.user_id
                    ))
                })?
                .label;
            w.serialize(ScatterRow {
                signal: c.signal,
                feature: c.feature,
                user_id: p.user_id,
                pc1: p.pc1,
                pc2: p.pc2,
                label,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(&paths[1], e))?;

    let mut w = csv::Writer::from_path(&paths[2])?;
    for c in &summary.cells {
        for r in export::read_curves(&dir.join(&c.files.curves))? {
            w.serialize(CurveOut {
                signal: c.signal,
                feature: c.feature,
                method: r.method,
                percentage: r.percentage,
                mean: r.mean,
                std: r.std,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(&paths[2], e))?;
    info!("wrote report to {}", report.display());
    Ok(paths)
}
