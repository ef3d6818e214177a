//! Document formats: JSON system documents, pseudo-orbit files, witness
//! files, modulus-table CSV, and report serialization.
//!
//! Rationals travel as `"p/q"` strings (reduced, bit-exact under round trip).
//! A system document carries `labels`, a `metric` (explicit matrix or
//! coordinate embedding), one of `map`/`maps`, and an optional `class`.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyze::{
    Coverage, EquivalenceReport, ModulusTable, SeparationReport,
};
use crate::construct::{RealizationResult, RealizedSystem};
use crate::pseudo::{shadow_survivors, PseudoOrbit};
use crate::rational::{format_rat, parse_rat, Rat};
use crate::space::{FiniteMetricSpace, Norm, PointId, SpaceError};
use crate::system::{ContinuityClass, NonautonomousSystem, SystemError, SystemMap};

#[derive(Debug, Error)]
pub enum DocError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

fn field_rat(field: &str, s: &str) -> Result<Rat, DocError> {
    parse_rat(s).map_err(|message| DocError::Validation {
        field: field.to_string(),
        message,
    })
}

// ---------------------------------------------------------------------------
// system documents

#[derive(Debug, Clone, Serialize, Deserialize)]
enum MetricDoc {
    #[serde(rename = "matrix")]
    Matrix(Vec<Vec<String>>),
    #[serde(rename = "embedded")]
    Embedded { coords: Vec<Vec<String>>, norm: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MapsDoc {
    preperiod: Vec<Vec<usize>>,
    period: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum ClassDoc {
    Name(String),
    Lipschitz { lipschitz: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SystemDoc {
    labels: Vec<String>,
    metric: MetricDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    map: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    maps: Option<MapsDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    class: Option<ClassDoc>,
}

/// The dynamics carried by a system document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dynamics {
    Map(SystemMap),
    Sequence(NonautonomousSystem),
}

impl Dynamics {
    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        match self {
            Dynamics::Map(f) => f.space(),
            Dynamics::Sequence(f) => f.space(),
        }
    }

    pub fn as_map(&self) -> Option<&SystemMap> {
        match self {
            Dynamics::Map(f) => Some(f),
            Dynamics::Sequence(_) => None,
        }
    }
}

/// A validated system: space, dynamics, and optional continuity class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedSystem {
    pub dynamics: Dynamics,
    pub class: Option<ContinuityClass>,
}

impl LoadedSystem {
    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        self.dynamics.space()
    }
}

pub(crate) fn class_to_doc(class: &ContinuityClass) -> ClassDoc {
    match class {
        ContinuityClass::All => ClassDoc::Name("ALL".into()),
        ContinuityClass::Lipschitz(l) => ClassDoc::Lipschitz {
            lipschitz: format_rat(l),
        },
    }
}

fn class_from_doc(doc: &ClassDoc) -> Result<ContinuityClass, DocError> {
    match doc {
        ClassDoc::Name(s) if s == "ALL" => Ok(ContinuityClass::All),
        ClassDoc::Name(s) => Err(DocError::Validation {
            field: "class".into(),
            message: format!("unknown class {s:?}, expected \"ALL\" or {{\"lipschitz\": \"p/q\"}}"),
        }),
        ClassDoc::Lipschitz { lipschitz } => {
            let bound = field_rat("class.lipschitz", lipschitz)?;
            if bound < crate::rational::rat_int(0) {
                return Err(DocError::Validation {
                    field: "class.lipschitz".into(),
                    message: "Lipschitz bounds must be nonnegative".into(),
                });
            }
            Ok(ContinuityClass::Lipschitz(bound))
        }
    }
}

/// Parses and validates a system document from JSON text.
pub fn load_system(json: &str) -> Result<LoadedSystem, DocError> {
    let doc: SystemDoc = serde_json::from_str(json).map_err(|e| DocError::Parse(e.to_string()))?;
    let space = match &doc.metric {
        MetricDoc::Matrix(rows) => {
            let mut dist = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                let mut out = Vec::with_capacity(row.len());
                for (j, cell) in row.iter().enumerate() {
                    out.push(field_rat(&format!("metric.matrix[{i}][{j}]"), cell)?);
                }
                dist.push(out);
            }
            FiniteMetricSpace::new(doc.labels.clone(), dist)?
        }
        MetricDoc::Embedded { coords, norm } => {
            let norm = match norm.as_str() {
                "L1" => Norm::L1,
                "L2" => Norm::L2,
                "Linf" => Norm::Linf,
                "circle" => Norm::Circle,
                other => {
                    return Err(DocError::Validation {
                        field: "metric.embedded.norm".into(),
                        message: format!("unknown norm {other:?}"),
                    })
                }
            };
            let mut parsed = Vec::with_capacity(coords.len());
            for (i, vector) in coords.iter().enumerate() {
                let mut out = Vec::with_capacity(vector.len());
                for (j, cell) in vector.iter().enumerate() {
                    out.push(field_rat(&format!("metric.embedded.coords[{i}][{j}]"), cell)?);
                }
                parsed.push(out);
            }
            FiniteMetricSpace::from_coords(doc.labels.clone(), parsed, norm)?
        }
    };
    let dynamics = match (&doc.map, &doc.maps) {
        (Some(image), None) => Dynamics::Map(SystemMap::new(space.clone(), image.clone())?),
        (None, Some(maps)) => {
            let build = |images: &[Vec<usize>]| -> Result<Vec<SystemMap>, DocError> {
                images
                    .iter()
                    .map(|im| SystemMap::new(space.clone(), im.clone()).map_err(DocError::from))
                    .collect()
            };
            Dynamics::Sequence(NonautonomousSystem::new(
                build(&maps.preperiod)?,
                build(&maps.period)?,
            )?)
        }
        (None, None) => {
            return Err(DocError::Validation {
                field: "map".into(),
                message: "document needs either \"map\" or \"maps\"".into(),
            })
        }
        (Some(_), Some(_)) => {
            return Err(DocError::Validation {
                field: "map".into(),
                message: "document has both \"map\" and \"maps\"".into(),
            })
        }
    };
    let class = doc.class.as_ref().map(class_from_doc).transpose()?;
    Ok(LoadedSystem { dynamics, class })
}

pub fn load_system_path(path: &Path) -> Result<LoadedSystem, DocError> {
    let text = std::fs::read_to_string(path).map_err(|e| DocError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    load_system(&text)
}

/// Serializes a system in canonical form: explicit matrix metric, reduced
/// rationals, two-space indentation. `load(save(x)) == x`.
pub fn save_system(system: &LoadedSystem) -> String {
    let space = system.space();
    let n = space.len();
    let matrix: Vec<Vec<String>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| format_rat(space.distance(PointId(i), PointId(j))))
                .collect()
        })
        .collect();
    let (map, maps) = match &system.dynamics {
        Dynamics::Map(f) => (Some(f.image_indices()), None),
        Dynamics::Sequence(f) => (
            None,
            Some(MapsDoc {
                preperiod: f.preperiod().iter().map(|m| m.image_indices()).collect(),
                period: f.period().iter().map(|m| m.image_indices()).collect(),
            }),
        ),
    };
    let doc = SystemDoc {
        labels: space.labels().to_vec(),
        metric: MetricDoc::Matrix(matrix),
        map,
        maps,
        class: system.class.as_ref().map(class_to_doc),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("serializable");
    out.push('\n');
    out
}

pub fn save_system_path(system: &LoadedSystem, path: &Path) -> Result<(), DocError> {
    std::fs::write(path, save_system(system)).map_err(|e| DocError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// pseudo-orbit documents

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PseudoOrbitDoc {
    points: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    period: Vec<String>,
    delta: String,
}

/// Parses a pseudo-orbit file (`points` preperiod labels, optional `period`
/// labels, `delta`) against a space.
pub fn load_pseudo_orbit(json: &str, space: &FiniteMetricSpace) -> Result<PseudoOrbit, DocError> {
    let doc: PseudoOrbitDoc =
        serde_json::from_str(json).map_err(|e| DocError::Parse(e.to_string()))?;
    let resolve = |field: &str, labels: &[String]| -> Result<Vec<PointId>, DocError> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                space.point_by_label(l).ok_or_else(|| DocError::Validation {
                    field: format!("{field}[{i}]"),
                    message: format!("unknown label {l:?}"),
                })
            })
            .collect()
    };
    let preperiod = resolve("points", &doc.points)?;
    let period = resolve("period", &doc.period)?;
    let delta = field_rat("delta", &doc.delta)?;
    PseudoOrbit::new(preperiod, period, delta).map_err(|e| DocError::Validation {
        field: "points".into(),
        message: e.to_string(),
    })
}

pub fn save_pseudo_orbit(po: &PseudoOrbit, space: &FiniteMetricSpace) -> String {
    let doc = PseudoOrbitDoc {
        points: po
            .preperiod()
            .iter()
            .map(|p| space.label(*p).to_string())
            .collect(),
        period: po
            .period()
            .iter()
            .map(|p| space.label(*p).to_string())
            .collect(),
        delta: format_rat(po.delta()),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("serializable");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// witness documents

/// A failing-check witness: the pseudo-orbit prefix, its survivor trace, and
/// (for map-quantified properties) the offending nearby map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub epsilon: String,
    pub delta: String,
    pub property: String,
    pub prefix: Vec<String>,
    pub survivor_trace: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample_map: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
}

/// Builds a witness document from a failing prefix; the survivor trace is
/// recomputed so the file replays to the asserted verdict.
pub fn witness_doc(
    f: &SystemMap,
    eps: &Rat,
    delta: &Rat,
    property: &str,
    prefix: &[PointId],
    counterexample_map: Option<&SystemMap>,
    start: Option<PointId>,
) -> WitnessDoc {
    let space = f.space();
    let trace = shadow_survivors(f, prefix, eps);
    WitnessDoc {
        epsilon: format_rat(eps),
        delta: format_rat(delta),
        property: property.to_string(),
        prefix: prefix.iter().map(|p| space.label(*p).to_string()).collect(),
        survivor_trace: trace
            .iter()
            .map(|t| t.iter().map(|p| space.label(p).to_string()).collect())
            .collect(),
        counterexample_map: counterexample_map.map(|m| m.image_indices()),
        start: start.map(|p| space.label(p).to_string()),
    }
}

pub fn witness_to_json(doc: &WitnessDoc) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("serializable");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// realization documents

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RealizationDoc {
    system: SystemDoc,
    start: String,
    rho_bound: String,
}

/// Serializes a realization: the realized system document plus start point
/// and the achieved sup-distance.
pub fn save_realization(result: &RealizationResult, space: &FiniteMetricSpace) -> String {
    let dynamics = match &result.system {
        RealizedSystem::Autonomous(g) => Dynamics::Map(g.clone()),
        RealizedSystem::Nonautonomous(g) => Dynamics::Sequence(g.clone()),
    };
    let loaded = LoadedSystem {
        dynamics,
        class: None,
    };
    let system: SystemDoc =
        serde_json::from_str(&save_system(&loaded)).expect("canonical form parses");
    let doc = RealizationDoc {
        system,
        start: space.label(result.start).to_string(),
        rho_bound: format_rat(&result.rho_bound),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("serializable");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// modulus table CSV

/// Renders the table as CSV with columns
/// `epsilon,delta_shadow,delta_struct,delta_fg,delta_cg,delta_usc`.
/// Sampled semicontinuity coverage is recorded in a leading comment line.
pub fn modulus_table_csv(table: &ModulusTable) -> String {
    let mut out = String::new();
    if let Coverage::Sampled { samples, seed } = &table.usc_coverage {
        out.push_str(&format!("# usc_coverage=sampled samples={samples} seed={seed}\n"));
    }
    out.push_str("epsilon,delta_shadow,delta_struct,delta_fg,delta_cg,delta_usc\n");
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_rat(&row.epsilon),
            row.shadow,
            row.structural,
            row.fg,
            row.cg,
            row.usc
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// report documents

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ImplicationDoc {
    name: String,
    pass: bool,
    detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EquivRowDoc {
    epsilon: String,
    shadow: String,
    structural: String,
    fgpotp: String,
    cgpotp: String,
    usc: String,
    implications: Vec<ImplicationDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EquivReportDoc {
    class: ClassDoc,
    violations: usize,
    rows: Vec<EquivRowDoc>,
}

/// Serializes an equivalence report with per-implication pass/fail entries.
pub fn equivalence_report_json(report: &EquivalenceReport) -> String {
    let doc = EquivReportDoc {
        class: class_to_doc(&report.class),
        violations: report.violations,
        rows: report
            .rows
            .iter()
            .map(|r| EquivRowDoc {
                epsilon: format_rat(&r.moduli.epsilon),
                shadow: r.moduli.shadow.to_string(),
                structural: r.moduli.structural.to_string(),
                fgpotp: r.moduli.fg.to_string(),
                cgpotp: r.moduli.cg.to_string(),
                usc: r.moduli.usc.to_string(),
                implications: r
                    .implications
                    .iter()
                    .map(|i| ImplicationDoc {
                        name: i.name.to_string(),
                        pass: i.pass,
                        detail: i.detail.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("serializable");
    out.push('\n');
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SeparationCandidateDoc {
    system: String,
    epsilon: String,
    delta: String,
    witness_points: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SeparationReportDoc {
    class: ClassDoc,
    completed: bool,
    cells_checked: usize,
    note: String,
    candidates: Vec<SeparationCandidateDoc>,
}

/// Serializes a separation-sweep report; candidates carry their witness
/// pseudo-orbits by label, resolved against their own systems.
pub fn separation_report_json(report: &SeparationReport) -> String {
    let doc = SeparationReportDoc {
        class: class_to_doc(&report.class),
        completed: report.completed,
        cells_checked: report.cells_checked,
        note: report.note.clone(),
        candidates: report
            .candidates
            .iter()
            .map(|c| SeparationCandidateDoc {
                system: c.system.clone(),
                epsilon: format_rat(&c.epsilon),
                delta: format_rat(&c.delta),
                witness_points: c.witness_labels.clone(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("serializable");
    out.push('\n');
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), DocError> {
    std::fs::write(path, text).map_err(|e| DocError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn rotation_doc() -> String {
        r#"{
            "labels": ["0", "1", "2", "3"],
            "metric": {"embedded": {"coords": [["0"], ["1/4"], ["1/2"], ["3/4"]], "norm": "circle"}},
            "map": [1, 2, 3, 0]
        }"#
        .to_string()
    }

    #[test]
    fn load_embedded_rotation() {
        let sys = load_system(&rotation_doc()).unwrap();
        let f = sys.dynamics.as_map().unwrap();
        assert_eq!(*f.space().distance(PointId(0), PointId(1)), rat(1, 4));
        assert_eq!(f.apply(PointId(3)), PointId(0));
        assert!(sys.class.is_none());
    }

    #[test]
    fn save_load_round_trip() {
        let sys = load_system(&rotation_doc()).unwrap();
        let saved = save_system(&sys);
        let reloaded = load_system(&saved).unwrap();
        assert_eq!(sys, reloaded);
        // and the canonical form is a fixpoint
        assert_eq!(saved, save_system(&reloaded));
    }

    #[test]
    fn asymmetric_matrix_rejected_with_pair() {
        let bad = r#"{
            "labels": ["a", "b"],
            "metric": {"matrix": [["0", "1"], ["2", "0"]]},
            "map": [0, 1]
        }"#;
        let err = load_system(bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(0,1)"), "got {msg}");
    }

    #[test]
    fn rational_strings_survive_round_trip() {
        let doc = r#"{
            "labels": ["a", "b"],
            "metric": {"matrix": [["0", "10/20"], ["1/2", "0"]]},
            "map": [1, 0],
            "class": {"lipschitz": "6/4"}
        }"#;
        let sys = load_system(doc).unwrap();
        assert_eq!(sys.class, Some(ContinuityClass::Lipschitz(rat(3, 2))));
        let saved = save_system(&sys);
        assert!(saved.contains("\"1/2\""));
        assert!(saved.contains("\"3/2\""));
        assert_eq!(load_system(&saved).unwrap(), sys);
    }

    #[test]
    fn map_and_maps_are_exclusive() {
        let bad = r#"{
            "labels": ["a"],
            "metric": {"matrix": [["0"]]},
            "map": [0],
            "maps": {"preperiod": [], "period": [[0]]}
        }"#;
        assert!(matches!(
            load_system(bad),
            Err(DocError::Validation { .. })
        ));
        let none = r#"{"labels": ["a"], "metric": {"matrix": [["0"]]}}"#;
        assert!(matches!(
            load_system(none),
            Err(DocError::Validation { .. })
        ));
    }

    #[test]
    fn sequence_document_round_trip() {
        let doc = r#"{
            "labels": ["a", "b"],
            "metric": {"matrix": [["0", "1"], ["1", "0"]]},
            "maps": {"preperiod": [[0, 1]], "period": [[1, 0], [0, 1]]}
        }"#;
        let sys = load_system(doc).unwrap();
        let Dynamics::Sequence(seq) = &sys.dynamics else {
            panic!()
        };
        assert_eq!(seq.preperiod_len(), 1);
        assert_eq!(seq.period_len(), 2);
        assert_eq!(load_system(&save_system(&sys)).unwrap(), sys);
    }

    #[test]
    fn pseudo_orbit_document() {
        let sys = load_system(&rotation_doc()).unwrap();
        let text = r#"{"points": ["0", "0"], "period": ["1", "2"], "delta": "3/10"}"#;
        let po = load_pseudo_orbit(text, sys.space()).unwrap();
        assert_eq!(po.preperiod(), vec![PointId(0); 2]);
        assert_eq!(po.period(), [1, 2].map(PointId).to_vec());
        assert_eq!(*po.delta(), rat(3, 10));
        let saved = save_pseudo_orbit(&po, sys.space());
        let back = load_pseudo_orbit(&saved, sys.space()).unwrap();
        assert_eq!(po, back);
        // unknown labels are named in the diagnostic
        let bad = r#"{"points": ["7"], "delta": "1/2"}"#;
        let err = load_pseudo_orbit(bad, sys.space()).unwrap_err();
        assert!(err.to_string().contains("points[0]"));
    }

    #[test]
    fn every_zoo_system_round_trips() {
        for spec in [
            "rotation:4,1",
            "rotation:6,2",
            "tent:8",
            "logistic:7/2,8",
            "affine:1/2,1/4,6",
            "shift:2,3",
            "random:5,3",
            "random:5,4",
        ] {
            let map = crate::zoo::build_zoo(&spec.parse().unwrap()).unwrap();
            let sys = LoadedSystem {
                dynamics: Dynamics::Map(map),
                class: None,
            };
            let reloaded = load_system(&save_system(&sys)).unwrap();
            assert_eq!(sys, reloaded, "round trip must be identity for {spec}");
        }
    }

    #[test]
    fn witness_doc_replays() {
        let sys = load_system(&rotation_doc()).unwrap();
        let f = sys.dynamics.as_map().unwrap();
        let prefix = vec![PointId(0); 4];
        let doc = witness_doc(f, &rat(2, 5), &rat(3, 10), "shadow", &prefix, None, None);
        assert_eq!(doc.prefix, vec!["0"; 4]);
        assert!(doc.survivor_trace.last().unwrap().is_empty());
        let json = witness_to_json(&doc);
        let back: WitnessDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(back.prefix, doc.prefix);
    }
}
