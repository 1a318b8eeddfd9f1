//! CSV and JSON files written by the pipeline and read back by the report.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{CrossValCell, CrossValResult, SubsampleCurve};
use crate::features::{FeatureKind, FeatureVector};
use crate::histogram::HistogramSet;
use crate::ingest::SignalKind;
use crate::learn::{Clustering, PcaProjection};
use crate::scalar::Scalar;

pub fn histogram_file_name(signal: SignalKind, feature: FeatureKind) -> String {
    format!("hist_{signal}_f{}.csv", feature.number())
}

pub fn clusters_file_name(signal: SignalKind, feature: FeatureKind) -> String {
    format!("clusters_{signal}_f{}.csv", feature.number())
}

pub fn pca_file_name(signal: SignalKind, feature: FeatureKind) -> String {
    format!("pca_{signal}_f{}.csv", feature.number())
}

pub fn pca_meta_file_name(signal: SignalKind, feature: FeatureKind) -> String {
    format!("pca_{signal}_f{}.json", feature.number())
}

pub fn curve_file_name(signal: SignalKind, feature: FeatureKind) -> String {
    format!("subsampling_{signal}_f{}.csv", feature.number())
}

pub fn feature_file_name(user_id: &str, signal: SignalKind, feature: FeatureKind) -> String {
    format!("feature_{user_id}_{signal}_f{}.csv", feature.number())
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Domain(format!("{}: {other:?}", path.display())),
    })
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Domain(format!("{}: {other:?}", path.display())),
    })
}

/// Single `value` column.
pub fn write_feature_vector<T: Scalar>(path: &Path, v: &FeatureVector<T>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["value"])?;
    for x in &v.values {
        w.write_record([x.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `user_id,b1..bN`, one row per user.
pub fn write_histograms<T: Scalar>(path: &Path, set: &HistogramSet<T>) -> Result<()> {
    let mut w = writer(path)?;
    let header: Vec<String> = std::iter::once("user_id".to_string())
        .chain((1..=set.bins.count).map(|i| format!("b{i}")))
        .collect();
    w.write_record(&header)?;
    for (id, bars) in set.user_ids.iter().zip(&set.bars) {
        let row: Vec<String> = std::iter::once(id.clone())
            .chain(bars.iter().map(|b| b.to_string()))
            .collect();
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub user_id: String,
    pub label: usize,
}

pub fn write_clustering<T>(path: &Path, user_ids: &[String], c: &Clustering<T>) -> Result<()> {
    let mut w = writer(path)?;
    for (id, &label) in user_ids.iter().zip(&c.labels) {
        w.serialize(LabelRow {
            user_id: id.clone(),
            label,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_clustering(path: &Path) -> Result<Vec<LabelRow>> {
    Ok(reader(path)?
        .deserialize()
        .collect::<std::result::Result<_, _>>()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaRow {
    pub user_id: String,
    pub pc1: f64,
    pub pc2: f64,
}

/// JSON sidecar of a PCA export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaMeta {
    pub signal: SignalKind,
    pub feature: FeatureKind,
    pub explained_variance_ratio: Vec<f64>,
    pub ratio_spectrum: Vec<f64>,
}

/// `user_id,pc1,pc2` plus the ratio spectrum as JSON.
pub fn write_pca<T: Scalar>(
    csv_path: &Path,
    json_path: &Path,
    signal: SignalKind,
    feature: FeatureKind,
    p: &PcaProjection<T>,
) -> Result<()> {
    let mut w = writer(csv_path)?;
    for (id, xy) in p.user_ids.iter().zip(&p.coordinates) {
        let coord = |i: usize| xy.get(i).map_or(0.0, |v| v.to_f64_lossy());
        w.serialize(PcaRow {
            user_id: id.clone(),
            pc1: coord(0),
            pc2: coord(1),
        })?;
    }
    w.flush().map_err(|e| Error::io(csv_path, e))?;
    let meta = PcaMeta {
        signal,
        feature,
        explained_variance_ratio: p
            .explained_variance_ratio
            .iter()
            .map(|v| v.to_f64_lossy())
            .collect(),
        ratio_spectrum: p.ratio_spectrum.iter().map(|v| v.to_f64_lossy()).collect(),
    };
    write_json(json_path, &meta)
}

pub fn read_pca(path: &Path) -> Result<Vec<PcaRow>> {
    Ok(reader(path)?
        .deserialize()
        .collect::<std::result::Result<_, _>>()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub method: String,
    pub percentage: f64,
    pub mean: f64,
    pub std: f64,
}

/// `method,percentage,mean,std` for any number of curves of one cell.
pub fn write_curves(path: &Path, curves: &[SubsampleCurve]) -> Result<()> {
    let mut w = writer(path)?;
    for c in curves {
        for ((&p, &m), &s) in c.percentages.iter().zip(&c.mean).zip(&c.std) {
            w.serialize(CurveRow {
                method: c.method.name().to_string(),
                percentage: p,
                mean: m,
                std: s,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_curves(path: &Path) -> Result<Vec<CurveRow>> {
    Ok(reader(path)?
        .deserialize()
        .collect::<std::result::Result<_, _>>()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub mean: f64,
    pub std: f64,
    pub optimal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellScores {
    pub users: usize,
    pub optimal_k: usize,
    pub k: Vec<KScore>,
}

/// Cross-validation results nested by signal, then feature, then K.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValFile {
    pub trials: usize,
    pub signals: BTreeMap<String, BTreeMap<String, CellScores>>,
}

impl From<&CrossValResult> for CrossValFile {
    fn from(r: &CrossValResult) -> Self {
        let mut signals: BTreeMap<String, BTreeMap<String, CellScores>> = BTreeMap::new();
        for c in &r.cells {
            signals
                .entry(c.signal.to_string())
                .or_default()
                .insert(c.feature.to_string(), cell_scores(c));
        }
        Self {
            trials: r.trials,
            signals,
        }
    }
}

fn cell_scores(c: &CrossValCell) -> CellScores {
    CellScores {
        users: c.users,
        optimal_k: c.optimal_k,
        k: c.ks
            .iter()
            .zip(&c.mean)
            .zip(&c.std)
            .map(|((&k, &mean), &std)| KScore {
                k,
                mean,
                std,
                optimal: k == c.optimal_k,
            })
            .collect(),
    }
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Table-style layout: one row per signal, `<f>_k,<f>_mean,<f>_std` per
/// feature at the optimal K.
pub fn write_crossval_table(path: &Path, r: &CrossValResult) -> Result<()> {
    let mut signals: Vec<SignalKind> = Vec::new();
    let mut features: Vec<FeatureKind> = Vec::new();
    for c in &r.cells {
        if !signals.contains(&c.signal) {
            signals.push(c.signal);
        }
        if !features.contains(&c.feature) {
            features.push(c.feature);
        }
    }
    features.sort();
    let mut w = writer(path)?;
    let mut header = vec!["signal".to_string()];
    for f in &features {
        header.extend([format!("{f}_k"), format!("{f}_mean"), format!("{f}_std")]);
    }
    w.write_record(&header)?;
    for s in signals {
        let mut row = vec![s.to_string()];
        for &f in &features {
            match r.cells.iter().find(|c| c.signal == s && c.feature == f) {
                Some(c) => row.extend([
                    c.optimal_k.to_string(),
                    c.mean_at(c.optimal_k).unwrap_or(f64::NAN).to_string(),
                    c.std_at(c.optimal_k).unwrap_or(f64::NAN).to_string(),
                ]),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::SubsampleMethod;

    #[test]
    fn file_names() {
        assert_eq!(
            histogram_file_name(SignalKind::Gas, FeatureKind::DiffQuotient),
            "hist_GAS_f2.csv"
        );
        assert_eq!(
            curve_file_name(SignalKind::LateralAcceleration, FeatureKind::MovingStd),
            "subsampling_LACC_f7.csv"
        );
    }

    #[test]
    fn histogram_matrix_layout() {
        let dir = tempfile::tempdir().unwrap();
        let set = HistogramSet {
            signal: SignalKind::Gas,
            feature: FeatureKind::Values,
            bins: crate::histogram::BinSpec::new(0.0, 1.0, 10).unwrap(),
            user_ids: vec!["u1".into()],
            bars: vec![vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]],
            dropped: vec![],
        };
        let path = dir.path().join("h.csv");
        write_histograms(&path, &set).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "user_id,b1,b2,b3,b4,b5,b6,b7,b8,b9,b10\nu1,0.5,0.5,0,0,0,0,0,0,0,0\n"
        );
    }

    #[test]
    fn clustering_and_curves_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let c = Clustering {
            labels: vec![1, 0],
            k: 2,
            inertia: 0.0f64,
        };
        write_clustering(&path, &["a".into(), "b".into()], &c).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "user_id,label\na,1\nb,0\n"
        );
        assert_eq!(
            read_clustering(&path).unwrap()[0],
            LabelRow {
                user_id: "a".into(),
                label: 1
            }
        );

        let curve = SubsampleCurve {
            signal: SignalKind::Gas,
            feature: FeatureKind::Values,
            method: SubsampleMethod::Contiguous,
            k: 2,
            percentages: vec![100.0, 1.0],
            mean: vec![1.0, 0.5],
            std: vec![0.0, 0.25],
            trials: 3,
        };
        let path = dir.path().join("s.csv");
        write_curves(&path, &[curve]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "method,percentage,mean,std\ncontiguous,100.0,1.0,0.0\ncontiguous,1.0,0.5,0.25\n"
        );
        assert_eq!(read_curves(&path).unwrap().len(), 2);
    }

    #[test]
    fn crossval_json_nesting() {
        let r = CrossValResult {
            trials: 2,
            cells: vec![CrossValCell {
                signal: SignalKind::Gas,
                feature: FeatureKind::DiffQuotient,
                ks: vec![2, 3],
                mean: vec![1.0, 0.5],
                std: vec![0.0, 0.1],
                optimal_k: 2,
                trials: 2,
                users: 4,
            }],
        };
        let f = CrossValFile::from(&r);
        let cell = &f.signals["GAS"]["f2"];
        assert_eq!(cell.optimal_k, 2);
        assert!(cell.k[0].optimal && !cell.k[1].optimal);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_crossval_table(&path, &r).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "signal,f2_k,f2_mean,f2_std\nGAS,2,1,0\n"
        );
    }
}
