//! JSON scenario documents: schema, validation pipeline and report.
//!
//! Complex numbers are `[re, im]` arrays and 3-D points are `[x, y, z]`.
//! Validation keeps going after the first problem so that a single run lists
//! every issue with its category and the offending field.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{CertificateReport, GainConfig};
use crate::error::{ErrorCategory, FormationError};
use crate::graph::{build_graph, graph_issues, FormationGraph};
use crate::laplacian::{assemble, localizable, solve_followers, ComplexScalar, LaplacianBlocks, NominalConfig};
use crate::maneuver::{
    LeaderMotion, ManeuverSchedule2D, ManeuverSchedule3D, Piece2D, Piece3D, Plane, Point3, Profile, ShapeProfile,
    CONTINUITY_TOL,
};
use crate::sim::{min_pairwise_distance, FollowerMode, IntegratorConfig, Maneuver, Scenario, State};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub meta: Meta,
    pub graph: GraphSpec,
    pub nominal: NominalSpec,
    pub schedule: Vec<PieceSpec>,
    pub gains: GainsSpec,
    #[serde(default)]
    pub follower_mode: FollowerMode,
    pub initial: InitialSpec,
    pub integrator: IntegratorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub name: String,
    pub dimension: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    pub m: usize,
    /// `[follower, j, k]` triples.
    pub constraint_neighbors: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_comm: Vec<[usize; 2]>,
}

/// 2-D: `r`. 3-D: either `r` with `epsilon`, or `q`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NominalSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<ComplexScalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Point3>>,
}

/// Leader shape of a planar piece. `morph_to` takes a full `n`-agent shape
/// and blends the leaders toward it from the previous piece's shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeSpec {
    Hold(Vec<ComplexScalar>),
    Ramp { from: Vec<ComplexScalar>, to: Vec<ComplexScalar> },
    Smoothstep { from: Vec<ComplexScalar>, to: Vec<ComplexScalar> },
    MorphTo(Vec<ComplexScalar>),
}

/// One schedule piece. Omitted profiles hold the previous piece's final
/// value (identity on the first piece and on every 3-D phase).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    /// `[start, end]`; `end = null` means forever.
    pub interval: (f64, Option<f64>),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Plane>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<Profile<ComplexScalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_translation: Option<Profile<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Profile<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Profile<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaders: Option<LeaderMotion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKeyword {
    Auto,
}

/// A fixed gain or `"auto"` for the certified minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha2 {
    Value(f64),
    Auto(AutoKeyword),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSpec {
    pub alpha1: f64,
    pub alpha2: Alpha2,
    #[serde(default)]
    pub sig_epsilon: f64,
    #[serde(default)]
    pub strict_certificate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// `[x, y]` per agent in 2-D, `[x, y, z]` in 3-D.
    pub positions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

fn default_stride() -> usize {
    10
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub strict: bool,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub record_stride: Option<usize>,
}

impl ScenarioDocument {
    pub fn apply(&mut self, o: &Overrides) {
        self.gains.strict_certificate |= o.strict;
        if let Some(dt) = o.dt {
            self.integrator.dt = dt;
        }
        if let Some(h) = o.horizon {
            self.integrator.horizon = h;
        }
        if let Some(s) = o.record_stride {
            self.integrator.record_stride = s;
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub category: ErrorCategory,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.category, self.field, self.message)
    }
}

/// Every problem found in a document. Never empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioError {
    pub issues: Vec<Issue>,
}

impl ScenarioError {
    fn single(category: ErrorCategory, field: &str, message: impl Into<String>) -> Self {
        Self {
            issues: vec![Issue {
                category,
                field: field.into(),
                message: message.into(),
            }],
        }
    }

    /// Most fundamental category present (document order of [`ErrorCategory`]).
    pub fn category(&self) -> ErrorCategory {
        let rank = |c: ErrorCategory| c as u8;
        self.issues
            .iter()
            .map(|i| i.category)
            .min_by_key(|&c| rank(c))
            .unwrap_or(ErrorCategory::Schema)
    }

    pub fn has(&self, category: ErrorCategory) -> bool {
        self.issues.iter().any(|i| i.category == category)
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, issue) in self.issues.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub name: String,
    pub dimension: usize,
    pub follower_mode: FollowerMode,
    pub localizable: bool,
    /// Largest condition number over the visited phases.
    pub cond: f64,
    pub two_reachable: Vec<usize>,
    pub follower_subgraph_undirected: bool,
    pub certificate: CertificateReport,
    pub strict_certificate: bool,
    pub warnings: Vec<String>,
}

/// A validated scenario together with the document it came from.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub document: ScenarioDocument,
    pub scenario: Scenario,
    pub report: ValidationReport,
}

pub fn read_document(path: &Path) -> Result<ScenarioDocument, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::single(ErrorCategory::Io, &path.display().to_string(), e.to_string()))?;
    parse_document(&text)
}

pub fn parse_document(text: &str) -> Result<ScenarioDocument, ScenarioError> {
    serde_json::from_str(text).map_err(|e| ScenarioError::single(ErrorCategory::Schema, "document", e.to_string()))
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str, overrides: &Overrides) -> Result<LoadedScenario, ScenarioError> {
    let mut doc = parse_document(text)?;
    doc.apply(overrides);
    validate_document(doc)
}

pub fn load_scenario(path: &Path, overrides: &Overrides) -> Result<LoadedScenario, ScenarioError> {
    let mut doc = read_document(path)?;
    doc.apply(overrides);
    validate_document(doc)
}

#[derive(Default)]
struct Collector {
    issues: Vec<Issue>,
    warnings: Vec<String>,
}

impl Collector {
    fn push(&mut self, category: ErrorCategory, field: &str, message: impl Into<String>) {
        self.issues.push(Issue {
            category,
            field: field.into(),
            message: message.into(),
        });
    }

    fn error(&mut self, field: &str, e: FormationError) {
        self.push(e.category(), field, e.to_string());
    }

    fn ok(&self) -> bool {
        self.issues.is_empty()
    }

    fn finish(self) -> ScenarioError {
        ScenarioError { issues: self.issues }
    }
}

/// Runs the full pipeline on a parsed document.
pub fn validate_document(doc: ScenarioDocument) -> Result<LoadedScenario, ScenarioError> {
    let mut c = Collector::default();
    let dim = doc.meta.dimension as usize;
    if dim != 2 && dim != 3 {
        c.push(ErrorCategory::Schema, "meta.dimension", format!("must be 2 or 3, got {dim}"));
        return Err(c.finish());
    }

    // graph
    let g = &doc.graph;
    let triples: Vec<_> = g.constraint_neighbors.iter().map(|t| (t[0], t[1], t[2])).collect();
    let extra: Vec<_> = g.extra_comm.iter().map(|e| (e[0], e[1])).collect();
    let structural = graph_issues(g.n, g.m, &triples, &extra);
    let graph = if structural.is_empty() {
        build_graph(g.n, g.m, &triples, &extra).ok()
    } else {
        for e in structural {
            c.error("graph", e);
        }
        None
    };
    let mut two_reachable = Vec::new();
    let mut undirected = false;
    if let Some(graph) = &graph {
        for i in graph.followers() {
            if graph.is_two_reachable(i) {
                two_reachable.push(i);
            } else {
                c.error("graph.constraint_neighbors", FormationError::NotTwoReachable { follower: i });
            }
        }
        let directed = graph.directed_follower_edges();
        undirected = directed.is_empty();
        if doc.follower_mode == FollowerMode::PositionOnly {
            for (from, to) in directed {
                c.error("graph.extra_comm", FormationError::DirectedFollowerEdge { from, to });
            }
        }
    }

    // gains and integrator
    let alpha2_fixed = match doc.gains.alpha2 {
        Alpha2::Value(v) => Some(v),
        Alpha2::Auto(_) => None,
    };
    let provisional = GainConfig {
        alpha1: doc.gains.alpha1,
        alpha2: alpha2_fixed.unwrap_or(1.0),
        sig_epsilon: doc.gains.sig_epsilon,
    };
    if let Err(e) = provisional.validate() {
        c.error("gains", e);
    }
    let integrator = IntegratorConfig {
        dt: doc.integrator.dt,
        horizon: doc.integrator.horizon,
        record_stride: doc.integrator.record_stride,
    };
    if let Err(e) = integrator.validate() {
        c.error("integrator", e);
    }

    // initial state
    let n = doc.graph.n;
    let initial = initial_state(&doc, dim, n, &mut c);

    // nominal, blocks and schedule
    let maneuver = match dim {
        2 => planar_maneuver(&doc, graph.as_ref(), &mut c),
        _ => spatial_maneuver(&doc, graph.as_ref(), &mut c),
    };

    let (Some(graph), Some(maneuver), Some(initial)) = (graph, maneuver, initial) else {
        return Err(c.finish());
    };
    if !c.ok() {
        return Err(c.finish());
    }

    let t0 = maneuver.start();
    let t_end = t0 + integrator.steps() as f64 * integrator.dt;
    if t_end > maneuver.end() {
        c.push(
            ErrorCategory::Contract,
            "integrator.horizon",
            format!("run ends at {t_end} after the schedule ends at {}", maneuver.end()),
        );
    }
    if dim == 3 {
        for b in maneuver.boundaries(t_end) {
            let k = (b - t0) / integrator.dt;
            if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
                c.push(
                    ErrorCategory::Contract,
                    "integrator.dt",
                    format!("dt = {} does not divide the phase boundary at t = {b}", integrator.dt),
                );
            }
        }
    }
    if !c.ok() {
        return Err(c.finish());
    }

    let mut phases = 1;
    let mut cond = 0.0f64;
    for idx in 0..=maneuver.boundaries(t_end).len() {
        phases = idx + 1;
        cond = cond.max(localizable(maneuver.blocks(idx)).cond);
    }
    log::debug!("{} phase(s) visited, cond = {cond:.3e}", phases);

    let mut sc = Scenario {
        name: doc.meta.name.clone(),
        graph,
        maneuver,
        gains: provisional,
        follower_mode: doc.follower_mode,
        initial,
        integrator,
    };
    let mut certificate = match sc.certificate() {
        Ok(r) => r,
        Err(e) => {
            c.error("gains", e);
            return Err(c.finish());
        }
    };
    if alpha2_fixed.is_none() {
        sc.gains.alpha2 = certificate.alpha2_min;
        certificate.alpha2 = certificate.alpha2_min;
        certificate.passed = true;
    }
    if sc.follower_mode == FollowerMode::PositionOnly && !certificate.passed {
        let e = FormationError::Certificate {
            alpha2: certificate.alpha2,
            alpha2_min: certificate.alpha2_min,
        };
        if doc.gains.strict_certificate {
            c.error("gains.alpha2", e);
        } else {
            log::warn!("{e}");
            c.warnings.push(e.to_string());
        }
    }
    if !c.ok() {
        return Err(c.finish());
    }

    let report = ValidationReport {
        name: sc.name.clone(),
        dimension: dim,
        follower_mode: sc.follower_mode,
        localizable: true,
        cond,
        two_reachable,
        follower_subgraph_undirected: undirected,
        certificate,
        strict_certificate: doc.gains.strict_certificate,
        warnings: c.warnings,
    };
    Ok(LoadedScenario {
        document: doc,
        scenario: sc,
        report,
    })
}

fn initial_state(doc: &ScenarioDocument, dim: usize, n: usize, c: &mut Collector) -> Option<State> {
    let pos = &doc.initial.positions;
    if pos.len() != n {
        c.push(
            ErrorCategory::Schema,
            "initial.positions",
            format!("expected {n} positions, got {}", pos.len()),
        );
        return None;
    }
    if let Some(i) = pos.iter().position(|p| p.len() != dim) {
        c.push(
            ErrorCategory::Schema,
            &format!("initial.positions[{i}]"),
            format!("expected {dim} coordinates"),
        );
        return None;
    }
    let points: Vec<Point3> = pos
        .iter()
        .map(|p| [p[0], p[1], if dim == 3 { p[2] } else { 0.0 }])
        .collect();
    if min_pairwise_distance(&points) == 0.0 {
        c.push(
            ErrorCategory::Assumption,
            "initial.positions",
            "initial positions must be pairwise distinct",
        );
    }
    Some(if dim == 3 {
        State::from_points(&points)
    } else {
        State::planar(points.iter().map(|p| ComplexScalar::new(p[0], p[1])).collect())
    })
}

fn check_len<T>(v: &[T], n: usize, field: &str, c: &mut Collector) -> bool {
    if v.len() == n {
        true
    } else {
        c.push(ErrorCategory::Schema, field, format!("expected {n} entries, got {}", v.len()));
        false
    }
}

fn planar_maneuver(doc: &ScenarioDocument, graph: Option<&FormationGraph>, c: &mut Collector) -> Option<Maneuver> {
    let nom = &doc.nominal;
    if nom.epsilon.is_some() || nom.q.is_some() {
        c.push(ErrorCategory::Schema, "nominal", "2-D scenarios take `r` only");
    }
    let Some(r) = &nom.r else {
        c.push(ErrorCategory::Schema, "nominal.r", "missing");
        return None;
    };
    if !check_len(r, doc.graph.n, "nominal.r", c) {
        return None;
    }
    let cfg = NominalConfig::planar(r.clone());
    let graph = graph?;
    let assumption = cfg.assumption_issues(graph);
    if !assumption.is_empty() {
        for e in assumption {
            c.error("nominal.r", e);
        }
        return None;
    }
    let blocks = match assemble(graph, &cfg) {
        Ok(b) => b,
        Err(e) => {
            c.error("nominal.r", e);
            return None;
        }
    };
    if let Err(e) = blocks.require_localizable() {
        c.error("nominal.r", e);
        return None;
    }
    let pieces = planar_pieces(doc, &cfg, &blocks, c)?;
    let issues = ManeuverSchedule2D::issues(&pieces, graph.m());
    if !issues.is_empty() {
        for e in issues {
            c.error("schedule", e);
        }
        return None;
    }
    let schedule = ManeuverSchedule2D::new(pieces, graph.m()).ok()?;
    Some(Maneuver::Planar { blocks, schedule })
}

fn interval(spec: &PieceSpec) -> (f64, f64) {
    (spec.interval.0, spec.interval.1.unwrap_or(f64::INFINITY))
}

fn end_value<V: crate::maneuver::Linear>(p: &Profile<V>, start: f64, end: f64) -> V {
    p.value(if end.is_finite() { end } else { start }, start, end)
}

fn planar_pieces(
    doc: &ScenarioDocument,
    cfg: &NominalConfig,
    blocks: &LaplacianBlocks,
    c: &mut Collector,
) -> Option<Vec<Piece2D>> {
    let m = blocks.m();
    let n = blocks.n();
    let mut translation = Profile::Constant(ComplexScalar::new(0.0, 0.0));
    let mut scale = Profile::Constant(1.0);
    let mut rotation = Profile::Constant(0.0);
    let mut leaders = cfg.r[..m].to_vec();
    let mut pieces = Vec::with_capacity(doc.schedule.len());
    let start_count = c.issues.len();
    for (idx, spec) in doc.schedule.iter().enumerate() {
        let field = format!("schedule[{idx}]");
        if spec.phase.is_some() || spec.axis_translation.is_some() || spec.leaders.is_some() {
            c.push(
                ErrorCategory::Schema,
                &field,
                "`phase`, `axis_translation` and `leaders` are 3-D fields",
            );
            continue;
        }
        let (start, end) = interval(spec);
        translation = spec
            .translation
            .clone()
            .unwrap_or_else(|| Profile::Constant(end_value(&translation, prev_start(&pieces), prev_end(&pieces))));
        scale = spec
            .scale
            .clone()
            .unwrap_or_else(|| Profile::Constant(end_value(&scale, prev_start(&pieces), prev_end(&pieces))));
        rotation = spec
            .rotation
            .clone()
            .unwrap_or_else(|| Profile::Constant(end_value(&rotation, prev_start(&pieces), prev_end(&pieces))));
        let shape = match &spec.shape {
            None => ShapeProfile::Hold(leaders.clone()),
            Some(ShapeSpec::Hold(v)) => ShapeProfile::Hold(v.clone()),
            Some(ShapeSpec::Ramp { from, to }) => ShapeProfile::Ramp {
                from: from.clone(),
                to: to.clone(),
            },
            Some(ShapeSpec::Smoothstep { from, to }) => ShapeProfile::Smoothstep {
                from: from.clone(),
                to: to.clone(),
            },
            Some(ShapeSpec::MorphTo(target)) => {
                if !check_len(target, n, &format!("{field}.shape.morph_to"), c) {
                    continue;
                }
                if let Ok(solved) = solve_followers(blocks, &target[..m]) {
                    let scale = target.iter().map(|z| z.norm()).fold(1.0, f64::max);
                    if solved
                        .iter()
                        .zip(&target[m..])
                        .any(|(a, b)| (a - b).norm() > CONTINUITY_TOL * scale)
                    {
                        c.warnings.push(format!(
                            "{field}: follower entries of the morph target violate the constraints; \
                             followers follow the leader shape instead"
                        ));
                    }
                }
                ShapeProfile::Smoothstep {
                    from: leaders.clone(),
                    to: target[..m].to_vec(),
                }
            }
        };
        if shape.len() != m || !shape.is_consistent() {
            c.push(ErrorCategory::Schema, &format!("{field}.shape"), format!("needs {m} leader entries"));
            continue;
        }
        leaders = shape.eval(if end.is_finite() { end } else { start }, start, end).0;
        pieces.push(Piece2D {
            start,
            end,
            translation: translation.clone(),
            scale: scale.clone(),
            rotation: rotation.clone(),
            shape,
        });
    }
    (c.issues.len() == start_count).then_some(pieces)
}

fn prev_start(pieces: &[Piece2D]) -> f64 {
    pieces.last().map_or(0.0, |p| p.start)
}

fn prev_end(pieces: &[Piece2D]) -> f64 {
    pieces.last().map_or(1.0, |p| p.end)
}

fn spatial_maneuver(doc: &ScenarioDocument, graph: Option<&FormationGraph>, c: &mut Collector) -> Option<Maneuver> {
    let nom = &doc.nominal;
    let n = doc.graph.n;
    let q: Vec<Point3> = match (&nom.r, &nom.epsilon, &nom.q) {
        (Some(r), Some(eps), None) => {
            if !check_len(r, n, "nominal.r", c) || !check_len(eps, n, "nominal.epsilon", c) {
                return None;
            }
            r.iter().zip(eps).map(|(r, &e)| [r.re, r.im, e]).collect()
        }
        (None, None, Some(q)) => {
            if !check_len(q, n, "nominal.q", c) {
                return None;
            }
            q.clone()
        }
        _ => {
            c.push(
                ErrorCategory::Schema,
                "nominal",
                "3-D scenarios take either `r` with `epsilon`, or `q`",
            );
            return None;
        }
    };
    let graph = graph?;
    let mut pieces = Vec::with_capacity(doc.schedule.len());
    let start_count = c.issues.len();
    for (idx, spec) in doc.schedule.iter().enumerate() {
        let field = format!("schedule[{idx}]");
        if spec.shape.is_some() {
            c.push(ErrorCategory::Schema, &field, "3-D phases take `leaders`, not `shape`");
            continue;
        }
        let (start, end) = interval(spec);
        let Some(plane) = spec.phase else {
            c.push(ErrorCategory::Schema, &format!("{field}.phase"), "missing");
            continue;
        };
        pieces.push(Piece3D {
            start,
            end,
            plane,
            translation: spec
                .translation
                .clone()
                .unwrap_or(Profile::Constant(ComplexScalar::new(0.0, 0.0))),
            axis_translation: spec.axis_translation.clone().unwrap_or(Profile::Constant(0.0)),
            scale: spec.scale.clone().unwrap_or(Profile::Constant(1.0)),
            rotation: spec.rotation.clone().unwrap_or(Profile::Constant(0.0)),
            leaders: spec.leaders.clone().unwrap_or(LeaderMotion::Hold),
        });
    }
    if c.issues.len() != start_count {
        return None;
    }
    match ManeuverSchedule3D::build(graph, &q, pieces) {
        Ok(schedule) => Some(Maneuver::Spatial { schedule }),
        Err(issues) => {
            for e in issues {
                let field = match e.category() {
                    ErrorCategory::Assumption | ErrorCategory::NotLocalizable => "nominal",
                    _ => "schedule",
                };
                c.error(field, e);
            }
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"{
          "meta": {"name": "tri", "dimension": 2},
          "graph": {"n": 3, "m": 2, "constraint_neighbors": [[3, 1, 2]]},
          "nominal": {"r": [[0, 0], [2, 0], [1, 1]]},
          "schedule": [{"interval": [0, null]}],
          "gains": {"alpha1": 2, "alpha2": "auto"},
          "initial": {"positions": [[0, 0], [2, 0], [1, 2]]},
          "integrator": {"dt": 0.01, "horizon": 1}
        }"#
        .into()
    }

    #[test]
    fn minimal_document_validates() {
        let loaded = parse_scenario(&minimal(), &Overrides::default()).unwrap();
        assert_eq!(loaded.report.two_reachable, vec![3]);
        assert!(loaded.report.certificate.passed);
        assert_eq!(loaded.scenario.gains.alpha2, loaded.report.certificate.alpha2_min);
        assert_eq!(loaded.scenario.integrator.record_stride, 10);
    }

    #[test]
    fn round_trip() {
        let loaded = parse_scenario(&minimal(), &Overrides::default()).unwrap();
        let again = parse_scenario(&loaded.document.to_json(), &Overrides::default()).unwrap();
        assert_eq!(loaded.document, again.document);
        assert_eq!(loaded.report, again.report);
    }

    #[test]
    fn schema_errors() {
        let err = parse_scenario("{", &Overrides::default()).unwrap_err();
        assert_eq!(err.category(), ErrorCategory::Schema);
        let typo = minimal().replace("\"alpha1\"", "\"alpha_1\"");
        assert_eq!(parse_scenario(&typo, &Overrides::default()).unwrap_err().category(), ErrorCategory::Schema);
        let bad_dim = minimal().replace("\"dimension\": 2", "\"dimension\": 4");
        assert_eq!(parse_scenario(&bad_dim, &Overrides::default()).unwrap_err().category(), ErrorCategory::Schema);
    }

    #[test]
    fn collects_every_issue() {
        let doc = minimal()
            .replace("[[0, 0], [2, 0], [1, 1]]", "[[0, 0], [2, 0], [0, 0]]")
            .replace("\"alpha1\": 2", "\"alpha1\": -1")
            .replace("\"dt\": 0.01", "\"dt\": 0");
        let err = parse_scenario(&doc, &Overrides::default()).unwrap_err();
        assert!(err.has(ErrorCategory::Assumption));
        assert!(err.has(ErrorCategory::Contract));
        assert!(err.issues.len() >= 3, "{err}");
    }

    #[test]
    fn overrides_apply() {
        let o = Overrides {
            dt: Some(0.005),
            horizon: Some(0.5),
            record_stride: Some(3),
            strict: true,
        };
        let loaded = parse_scenario(&minimal(), &o).unwrap();
        assert_eq!(loaded.scenario.integrator.dt, 0.005);
        assert_eq!(loaded.scenario.integrator.record_stride, 3);
        assert!(loaded.report.strict_certificate);
    }
}
