//! Frame/rule knowledge base: die-type classification, the feature to
//! operation decision table, standard part feature sets and process routes.
//!
//! The knowledge base is also the labeling oracle for synthetic cases: a
//! profile goes in, a complete [`DieDesign`] comes out of
//! [`KnowledgeBase::build_design`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::DecodedDesign;
use crate::domain::{
    parts_for_die_type, DieDesign, DieFeature, DiePart, DiePartKind, DieType, FeatureKind,
    FeaturePlan, MachiningOperation, Operation, PartPlan, PressCapacity, Process, ProcessPlan,
    ProfileSpec, ProfileType,
};

const SHIPPED_KB: &str = include_str!("../data/kb.json");

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("no decision-table row for feature `{feature}` on part `{part}`")]
    NoRule { feature: FeatureKind, part: DiePartKind },
    #[error("invalid knowledge base: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("reading knowledge base: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing knowledge base: {0}")]
    Parse(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Rules
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactValue {
    Number(f64),
    Symbol(String),
}

pub type Facts = BTreeMap<String, FactValue>;

/// Facts describing a profile, keyed by [`ProfileSpec`] field name.
pub fn profile_facts(spec: &ProfileSpec) -> Facts {
    let mut facts = Facts::new();
    let mut num = |k: &str, v: f64| {
        facts.insert(k.to_string(), FactValue::Number(v));
    };
    num("wall_thickness", spec.wall_thickness);
    num("width", spec.width);
    num("height", spec.height);
    num("cross_section_area", spec.cross_section_area);
    num("perimeter", spec.perimeter);
    num("external_perimeter", spec.external_perimeter);
    num("tongue_ratio", spec.tongue_ratio);
    num("shape_class", spec.shape_class as f64);
    if let Some(ccd) = spec.ccd {
        num("ccd", ccd);
    }
    if let Some(er) = spec.extrusion_ratio {
        num("extrusion_ratio", er);
    }
    facts.insert("profile_type".into(), FactValue::Symbol(spec.profile_type.to_string()));
    if let Some(p) = spec.press_capacity {
        facts.insert("press_capacity".into(), FactValue::Symbol(p.to_string()));
    }
    facts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Eq,
    Ne,
    Gt,
    Ge,
    Lt,
    Le,
}

/// Right-hand side of a predicate. `Threshold` names an entry of the
/// knowledge base thresholds and is resolved to a number at load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Operand {
    Number(f64),
    Symbol(String),
    Threshold { threshold: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub fact: String,
    pub op: Comparison,
    pub value: Operand,
}

impl Predicate {
    /// False when the fact is missing or has the wrong type.
    pub fn holds(&self, facts: &Facts) -> bool {
        use std::cmp::Ordering;
        let ordering = match (facts.get(&self.fact), &self.value) {
            (Some(FactValue::Number(a)), Operand::Number(b)) => a.partial_cmp(b),
            (Some(FactValue::Symbol(a)), Operand::Symbol(b)) => Some(a.cmp(b)),
            _ => None,
        };
        let Some(ord) = ordering else { return false };
        match self.op {
            Comparison::Eq => ord == Ordering::Equal,
            Comparison::Ne => ord != Ordering::Equal,
            Comparison::Gt => ord == Ordering::Greater,
            Comparison::Ge => ord != Ordering::Less,
            Comparison::Lt => ord == Ordering::Less,
            Comparison::Le => ord != Ordering::Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consequent {
    Classify(DieType),
    Operations(Vec<Operation>),
}

/// IF all antecedent predicates hold THEN the consequent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    #[serde(default)]
    pub priority: i32,
    pub antecedent: Vec<Predicate>,
    pub consequent: Consequent,
}

impl Rule {
    pub fn fires(&self, facts: &Facts) -> bool {
        !self.antecedent.is_empty() && self.antecedent.iter().all(|p| p.holds(facts))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fired<'a> {
    pub rule_id: &'a str,
    pub consequent: &'a Consequent,
}

/// Single forward pass: every rule whose antecedent holds fires. Results are
/// ordered by descending priority, then ascending rule id.
pub fn evaluate_rules<'a>(facts: &Facts, rules: &'a [Rule]) -> Vec<Fired<'a>> {
    let mut fired: Vec<&Rule> = rules.iter().filter(|r| r.fires(facts)).collect();
    fired.sort_by(|a, b| b.priority.cmp(&a.priority).then_with(|| a.id.cmp(&b.id)));
    fired.into_iter().map(|r| Fired { rule_id: &r.id, consequent: &r.consequent }).collect()
}

// ---------------------------------------------------------------------------
// Knowledge base file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowProvenance {
    /// Copied from the published case-study plan.
    Table4,
    /// Completed by analogy for parts the published plan does not cover.
    Extrapolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub part: DiePartKind,
    pub feature: FeatureKind,
    pub operations: Vec<Operation>,
    pub provenance: RowProvenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tongue_ratio_cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressData {
    /// Container cross-section, cm².
    pub container_area: f64,
    /// Die stack thickness per part, mm.
    pub part_thickness: BTreeMap<DiePartKind, f64>,
}

/// Multi-hole layout rule: use the fewest orifices that keep the
/// extrusion ratio at or below `max_extrusion_ratio`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrificeHeuristic {
    pub max_extrusion_ratio: f64,
    pub max_orifices: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBaseFile {
    pub kb_version: String,
    pub thresholds: Thresholds,
    pub rules: Vec<Rule>,
    pub decision_table: Vec<DecisionRow>,
    pub route_orders: BTreeMap<DiePartKind, Vec<Process>>,
    pub part_feature_sets: BTreeMap<DiePartKind, Vec<FeatureKind>>,
    /// Features a part receives when a design is built from a profile or
    /// from a decoded output vector.
    pub design_features: BTreeMap<DiePartKind, Vec<FeatureKind>>,
    pub presses: BTreeMap<PressCapacity, PressData>,
    pub default_press: PressCapacity,
    pub orifices: OrificeHeuristic,
}

/// Feature sets per part as the output-layer feature nodes define them.
pub fn canonical_feature_set(part: DiePartKind) -> &'static [FeatureKind] {
    use FeatureKind::*;
    match part {
        DiePartKind::Feeder => &[OpenPocketCircular, OpenPocketPlane, EdgeChamfer, TapHole, ClosedPocketPlane],
        DiePartKind::DiePlate => {
            &[OpenPocketCircular, OpenPocketPlane, EdgeChamfer, ThroughHole, DeepHole, ClosedPocketPlane]
        }
        DiePartKind::Backer => &[OpenPocketCircular, OpenPocketPlane, CounterBore, ClosedPocketPlane],
        DiePartKind::Mandrel => &[
            OpenPocketCircular,
            OpenPocketPlane,
            EdgeChamfer,
            TapHole,
            OpenPocketSculptured,
            ClosedPocketSculptured,
        ],
        DiePartKind::DieCap => {
            &[OpenPocketPlane, OpenPocketCircular, EdgeChamfer, CounterBore, ClosedPocketPlane, DeepHole]
        }
    }
}

/// A loaded, checked knowledge base. Immutable after construction.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    file: KnowledgeBaseFile,
    /// Rules with threshold operands resolved to numbers.
    rules: Vec<Rule>,
    table: BTreeMap<(DiePartKind, FeatureKind), DecisionRow>,
    fingerprint: String,
}

impl KnowledgeBase {
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED_KB).expect("shipped knowledge base is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, KbError> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, KbError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_file(file: KnowledgeBaseFile) -> Result<Self, KbError> {
        let mut problems = Vec::new();
        let mut problem = |ok: bool, msg: String| {
            if !ok {
                problems.push(msg);
            }
        };

        let cutoff = file.thresholds.tongue_ratio_cutoff;
        problem(cutoff > 0.0, format!("tongue_ratio_cutoff must be > 0, got {cutoff}"));

        let mut ids = BTreeSet::new();
        let mut rules = Vec::with_capacity(file.rules.len());
        for rule in &file.rules {
            problem(ids.insert(rule.id.as_str()), format!("duplicate rule id `{}`", rule.id));
            problem(!rule.antecedent.is_empty(), format!("rule `{}` has an empty antecedent", rule.id));
            let mut resolved = rule.clone();
            for p in &mut resolved.antecedent {
                if let Operand::Threshold { threshold } = &p.value {
                    match threshold.as_str() {
                        "tongue_ratio_cutoff" => p.value = Operand::Number(cutoff),
                        other => problem(false, format!("rule `{}` names unknown threshold `{other}`", rule.id)),
                    }
                }
            }
            rules.push(resolved);
        }

        let mut table = BTreeMap::new();
        for row in &file.decision_table {
            problem(
                !row.operations.is_empty(),
                format!("decision row ({}, {}) has no operations", row.part, row.feature),
            );
            let dup = table.insert((row.part, row.feature), row.clone()).is_some();
            problem(!dup, format!("decision row ({}, {}) is declared twice", row.part, row.feature));
        }

        for &part in DiePartKind::ALL {
            match file.route_orders.get(&part) {
                Some(order) => {
                    let distinct: BTreeSet<_> = order.iter().collect();
                    problem(
                        order.len() == Process::ALL.len() && distinct.len() == order.len(),
                        format!("route order of `{part}` must list every process exactly once"),
                    );
                    let pos = |p| order.iter().position(|&q| q == p);
                    problem(
                        matches!((pos(Process::HeatTreatment), pos(Process::Grinding)), (Some(h), Some(g)) if h < g),
                        format!("route order of `{part}` must put heat treatment before grinding"),
                    );
                }
                None => problem(false, format!("no route order for `{part}`")),
            }

            let set = file.part_feature_sets.get(&part).map(Vec::as_slice).unwrap_or_default();
            problem(
                set == canonical_feature_set(part),
                format!("feature set of `{part}` differs from the output-layer feature group"),
            );
            let design = file.design_features.get(&part).map(Vec::as_slice).unwrap_or_default();
            let needed: BTreeSet<&FeatureKind> = set.iter().chain(design).collect();
            for feature in needed {
                problem(
                    table.contains_key(&(part, *feature)),
                    format!("no decision row for ({part}, {feature})"),
                );
            }

            for &press in PressCapacity::ALL {
                let thickness = file.presses.get(&press).and_then(|p| p.part_thickness.get(&part));
                problem(
                    thickness.map_or(false, |&t| t > 0.0),
                    format!("press {press} needs a positive `{part}` thickness"),
                );
            }
        }
        for &press in PressCapacity::ALL {
            let area = file.presses.get(&press).map_or(0.0, |p| p.container_area);
            problem(area > 0.0, format!("press {press} needs a positive container area"));
        }
        problem(file.orifices.max_extrusion_ratio > 1.0, "orifices.max_extrusion_ratio must be > 1".into());
        problem(file.orifices.max_orifices >= 1, "orifices.max_orifices must be >= 1".into());

        if !problems.is_empty() {
            return Err(KbError::Invalid(problems));
        }
        let canonical = serde_json::to_vec(&file).expect("knowledge base serializes");
        let fingerprint = hex::encode(Sha256::digest(&canonical));
        Ok(Self { file, rules, table, fingerprint })
    }

    pub fn file(&self) -> &KnowledgeBaseFile {
        &self.file
    }

    /// SHA-256 of the canonical serialization.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn tongue_ratio_cutoff(&self) -> f64 {
        self.file.thresholds.tongue_ratio_cutoff
    }

    pub fn decision_row(&self, feature: FeatureKind, part: DiePartKind) -> Option<&DecisionRow> {
        self.table.get(&(part, feature))
    }

    /// Die type by forward chaining over the classification rules; the first
    /// fired classification wins.
    pub fn classify_die_type(&self, spec: &ProfileSpec) -> DieType {
        let facts = profile_facts(spec);
        evaluate_rules(&facts, &self.rules)
            .into_iter()
            .find_map(|f| match f.consequent {
                Consequent::Classify(t) => Some(*t),
                Consequent::Operations(_) => None,
            })
            .unwrap_or(match spec.profile_type {
                ProfileType::Solid => DieType::Solid,
                ProfileType::SemiHollow => DieType::SemiHollow,
                ProfileType::Hollow => DieType::Hollow,
            })
    }

    pub fn parts_for_die_type(&self, die_type: DieType) -> &'static [DiePartKind] {
        parts_for_die_type(die_type)
    }

    pub fn part_feature_set(&self, part: DiePartKind) -> &[FeatureKind] {
        &self.file.part_feature_sets[&part]
    }

    pub fn design_features(&self, part: DiePartKind) -> &[FeatureKind] {
        self.file.design_features.get(&part).map(Vec::as_slice).unwrap_or_default()
    }

    /// Ordered operations for a feature on a part.
    pub fn select_processes(&self, feature: FeatureKind, part: DiePartKind) -> Result<&[Operation], KbError> {
        self.decision_row(feature, part)
            .map(|r| r.operations.as_slice())
            .ok_or(KbError::NoRule { feature, part })
    }

    pub fn standard_route(&self, part: DiePartKind) -> &[Process] {
        &self.file.route_orders[&part]
    }

    /// Expands every feature of every part into its operation chain and adds
    /// the whole-part heat treatment and grinding steps. Parts come out in
    /// canonical order, features in design order.
    pub fn derive_plan(&self, design: &DieDesign) -> Result<ProcessPlan, KbError> {
        let mut parts: Vec<&DiePart> = design.parts.iter().collect();
        parts.sort_by_key(|p| p.kind);
        let mut plan = ProcessPlan::default();
        for part in parts {
            let features = part
                .features
                .iter()
                .map(|f| {
                    let ops = self.select_processes(f.kind, part.kind)?;
                    Ok(FeaturePlan { feature: f.clone(), operations: ops.iter().map(|&o| o.into()).collect() })
                })
                .collect::<Result<Vec<_>, KbError>>()?;
            plan.parts.push(PartPlan {
                part: part.kind,
                features,
                part_steps: vec![
                    MachiningOperation::from(Operation::HeatTreatment),
                    MachiningOperation::from(Operation::Grinding),
                ],
            });
        }
        Ok(plan)
    }

    pub fn press_for(&self, spec: &ProfileSpec) -> PressCapacity {
        spec.press_capacity.unwrap_or(self.file.default_press)
    }

    pub fn press_data(&self, press: PressCapacity) -> &PressData {
        &self.file.presses[&press]
    }

    /// Fewest orifices keeping the single-hole extrusion ratio within the
    /// configured maximum.
    pub fn num_orifices(&self, spec: &ProfileSpec) -> u32 {
        let container = self.press_data(self.press_for(spec)).container_area;
        let h = &self.file.orifices;
        let needed = (container / (spec.cross_section_area * h.max_extrusion_ratio)).ceil();
        (needed.max(1.0) as u32).min(h.max_orifices)
    }

    /// Container area over total extruded area.
    pub fn derive_extrusion_ratio(&self, spec: &ProfileSpec, num_orifices: u32) -> f64 {
        let container = self.press_data(self.press_for(spec)).container_area;
        container / (f64::from(num_orifices) * spec.cross_section_area)
    }

    fn part_with_design_features(&self, kind: DiePartKind, thickness: f64) -> DiePart {
        DiePart {
            kind,
            thickness,
            features: self.design_features(kind).iter().map(|&k| DieFeature::new(k)).collect(),
        }
    }

    /// Complete die design for a profile from the rules alone.
    pub fn build_design(&self, spec: &ProfileSpec) -> DieDesign {
        let die_type = self.classify_die_type(spec);
        let press = self.press_data(self.press_for(spec));
        let num_orifices = self.num_orifices(spec);
        let extrusion_ratio =
            spec.extrusion_ratio.unwrap_or_else(|| self.derive_extrusion_ratio(spec, num_orifices));
        DieDesign {
            die_type,
            num_orifices,
            extrusion_ratio,
            parts: parts_for_die_type(die_type)
                .iter()
                .map(|&k| self.part_with_design_features(k, press.part_thickness[&k]))
                .collect(),
        }
    }

    /// Full design from a decoded output vector: each part whose feature
    /// group is active receives its design feature set.
    pub fn design_from_decoded(&self, decoded: &DecodedDesign) -> DieDesign {
        DieDesign {
            die_type: decoded.die_type,
            num_orifices: decoded.num_orifices,
            extrusion_ratio: decoded.extrusion_ratio,
            parts: decoded
                .parts
                .iter()
                .map(|p| {
                    if decoded.feature_parts.contains(&p.kind) {
                        self.part_with_design_features(p.kind, p.thickness)
                    } else {
                        DiePart { kind: p.kind, thickness: p.thickness, features: Vec::new() }
                    }
                })
                .collect(),
        }
    }
}
