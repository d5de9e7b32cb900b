//! Domain types shared across the planner: profiles, die features, die
//! designs, machining operations, process plans and stored cases.
//!
//! Units follow the attribute: lengths in mm, cross-section area in cm²,
//! perimeters in cm. Conversions only happen inside the codec and the
//! estimator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Error returned when a canonical enum name does not parse.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} name `{name}`")]
pub struct ParseNameError {
    pub kind: &'static str,
    pub name: String,
}

/// Declares a fieldless enum with a canonical string name per variant,
/// `Display`/`FromStr` over those names and serde support through them.
macro_rules! named_enum {
    (
        $(#[$meta:meta])*
        $vis:vis enum $name:ident as $kind:literal {
            $( $(#[$vmeta:meta])* $variant:ident => $text:literal ),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        $vis enum $name {
            $( $(#[$vmeta])* $variant ),+
        }

        impl $name {
            /// Every variant in canonical order.
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            /// Position of the variant in canonical order.
            pub fn index(self) -> usize {
                self as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = ParseNameError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(ParseNameError { kind: $kind, name: s.to_string() }),
                }
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

named_enum! {
    pub enum ProfileType as "profile type" {
        Solid => "solid",
        SemiHollow => "semi_hollow",
        Hollow => "hollow",
    }
}

named_enum! {
    /// Press capacity in tonnes.
    pub enum PressCapacity as "press capacity" {
        T660 => "660",
        T880 => "880",
        T1800 => "1800",
    }
}

named_enum! {
    pub enum DieType as "die type" {
        Solid => "solid",
        SemiHollow => "semi_hollow",
        Hollow => "hollow",
    }
}

named_enum! {
    /// Die stack components. The canonical order indexes the per-part
    /// segments of the output vector.
    pub enum DiePartKind as "die part" {
        Feeder => "feeder",
        DiePlate => "die_plate",
        Backer => "backer",
        Mandrel => "mandrel",
        DieCap => "die_cap",
    }
}

named_enum! {
    pub enum FeatureCategory as "feature category" {
        Hole => "hole",
        Edge => "edge",
        Groove => "groove",
        Pocket => "pocket",
    }
}

named_enum! {
    /// The fixed die feature taxonomy: four categories with their subkinds.
    pub enum FeatureKind as "feature kind" {
        BlindHole => "blind_hole",
        ThroughHole => "through_hole",
        TapHole => "tap_hole",
        CounterSink => "counter_sink",
        CounterBore => "counter_bore",
        DeepHole => "deep_hole",
        EdgeChamfer => "edge_chamfer",
        EdgeFillet => "edge_fillet",
        VGroove => "v_groove",
        RoundGroove => "round_groove",
        RectangularGroove => "rectangular_groove",
        OpenPocketPlane => "open_pocket_plane",
        OpenPocketCircular => "open_pocket_circular",
        OpenPocketSculptured => "open_pocket_sculptured",
        ClosedPocketPlane => "closed_pocket_plane",
        ClosedPocketCircular => "closed_pocket_circular",
        ClosedPocketSculptured => "closed_pocket_sculptured",
    }
}

impl FeatureKind {
    pub fn category(self) -> FeatureCategory {
        use FeatureKind::*;
        match self {
            BlindHole | ThroughHole | TapHole | CounterSink | CounterBore | DeepHole => {
                FeatureCategory::Hole
            }
            EdgeChamfer | EdgeFillet => FeatureCategory::Edge,
            VGroove | RoundGroove | RectangularGroove => FeatureCategory::Groove,
            OpenPocketPlane | OpenPocketCircular | OpenPocketSculptured | ClosedPocketPlane
            | ClosedPocketCircular | ClosedPocketSculptured => FeatureCategory::Pocket,
        }
    }

    /// Human-readable label as used in printed process plans.
    pub fn label(self) -> &'static str {
        use FeatureKind::*;
        match self {
            BlindHole => "Blind hole",
            ThroughHole => "Through hole",
            TapHole => "Tap",
            CounterSink => "Counter sink",
            CounterBore => "Counter bore",
            DeepHole => "Deep hole",
            EdgeChamfer => "Edge chamfer",
            EdgeFillet => "Edge fillet",
            VGroove => "V groove",
            RoundGroove => "Round groove",
            RectangularGroove => "Rectangular groove",
            OpenPocketPlane => "Open pocket plane",
            OpenPocketCircular => "Open pocket circular",
            OpenPocketSculptured => "Open pocket sculptured",
            ClosedPocketPlane => "Closed pocket plane",
            ClosedPocketCircular => "Closed pocket circular",
            ClosedPocketSculptured => "Closed pocket sculptured",
        }
    }
}

named_enum! {
    /// Machining processes in standard route order.
    pub enum Process as "process" {
        Turning => "turning",
        Facing => "facing",
        Drilling => "drilling",
        Milling => "milling",
        HeatTreatment => "heat_treatment",
        Grinding => "grinding",
        EdmSpark => "edm_spark",
        EdmWire => "edm_wire",
    }
}

named_enum! {
    /// The fixed operation vocabulary. Every operation belongs to exactly
    /// one process.
    pub enum Operation as "operation" {
        RoughTurning => "rough_turning",
        SemiFinishTurning => "semi_finish_turning",
        FinishTurning => "finish_turning",
        RoundChamfering => "round_chamfering",
        RoundGrooving => "round_grooving",
        RoughFacing => "rough_facing",
        SemiFinishFacing => "semi_finish_facing",
        FinishFacing => "finish_facing",
        Centering => "centering",
        Drilling => "drilling",
        Boring => "boring",
        Reaming => "reaming",
        Tapping => "tapping",
        CounterBoring => "counter_boring",
        Countersinking => "countersinking",
        RoughMilling => "rough_milling",
        SemiFinishMilling => "semi_finish_milling",
        FinishMilling => "finish_milling",
        HeatTreatment => "heat_treatment",
        Grinding => "grinding",
        EdmSparking => "edm_sparking",
        RoughWireCutting => "rough_wire_cutting",
        FinishWireCutting => "finish_wire_cutting",
    }
}

impl Operation {
    pub fn process(self) -> Process {
        use Operation::*;
        match self {
            RoughTurning | SemiFinishTurning | FinishTurning | RoundChamfering | RoundGrooving => {
                Process::Turning
            }
            RoughFacing | SemiFinishFacing | FinishFacing => Process::Facing,
            Centering | Drilling | Boring | Reaming | Tapping | CounterBoring | Countersinking => {
                Process::Drilling
            }
            RoughMilling | SemiFinishMilling | FinishMilling => Process::Milling,
            HeatTreatment => Process::HeatTreatment,
            Grinding => Process::Grinding,
            EdmSparking => Process::EdmSpark,
            RoughWireCutting | FinishWireCutting => Process::EdmWire,
        }
    }

    pub fn label(self) -> &'static str {
        use Operation::*;
        match self {
            RoughTurning => "Rough turning",
            SemiFinishTurning => "Semi-finish turning",
            FinishTurning => "Finish turning",
            RoundChamfering => "Round chamfering",
            RoundGrooving => "Round grooving",
            RoughFacing => "Rough facing",
            SemiFinishFacing => "Semi-finish facing",
            FinishFacing => "Finish facing",
            Centering => "Centering",
            Drilling => "Drilling",
            Boring => "Boring",
            Reaming => "Reaming",
            Tapping => "Tapping",
            CounterBoring => "Counter boring",
            Countersinking => "Countersinking",
            RoughMilling => "Rough milling",
            SemiFinishMilling => "Semi-finish milling",
            FinishMilling => "Finish milling",
            HeatTreatment => "Heat treatment",
            Grinding => "Grinding",
            EdmSparking => "EDM sparking",
            RoughWireCutting => "Rough wire cutting",
            FinishWireCutting => "Finish wire cutting",
        }
    }
}

/// The twelve-attribute characterization of an extruded profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub profile_type: ProfileType,
    /// Index into the codec's shape catalog.
    pub shape_class: usize,
    /// General wall thickness, mm.
    pub wall_thickness: f64,
    /// Maximum width, mm.
    pub width: f64,
    /// Maximum height, mm.
    pub height: f64,
    /// Circumscribing circle diameter, mm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ccd: Option<f64>,
    /// Cross-section area, cm².
    pub cross_section_area: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub press_capacity: Option<PressCapacity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrusion_ratio: Option<f64>,
    /// Perimeter, cm.
    pub perimeter: f64,
    /// External perimeter, cm. Zero means the profile has none.
    #[serde(default)]
    pub external_perimeter: f64,
    /// Area of a partially enclosed void divided by its gap squared.
    pub tongue_ratio: f64,
}

/// One violated invariant, named by the invariant itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Every violated invariant of a value; empty when valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn check(&mut self, ok: bool, rule: &str) {
        if !ok {
            self.violations.push(Violation(rule.to_string()));
        }
    }

    pub fn contains(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.0 == rule)
    }
}

/// Checks every [`ProfileSpec`] invariant and lists the violated ones.
pub fn validate_profile(spec: &ProfileSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    // NaN fails every comparison, so it is reported through these checks too.
    report.check(spec.width > 0.0, "width > 0");
    report.check(spec.height > 0.0, "height > 0");
    report.check(spec.wall_thickness > 0.0, "wall_thickness > 0");
    report.check(spec.cross_section_area > 0.0, "cross_section_area > 0");
    report.check(spec.perimeter > 0.0, "perimeter > 0");
    report.check(spec.external_perimeter >= 0.0, "external_perimeter >= 0");
    report.check(spec.tongue_ratio >= 0.0, "tongue_ratio >= 0");
    if let Some(ccd) = spec.ccd {
        report.check(ccd >= spec.width.max(spec.height), "ccd >= max(width, height)");
    }
    if let Some(er) = spec.extrusion_ratio {
        report.check(er > 1.0, "extrusion_ratio > 1");
    }
    report
}

/// Optional feature geometry, consumed only by the estimator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureGeometry {
    /// mm
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
    /// mm
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<f64>,
    /// mm³
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removal_volume: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DieFeature {
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<FeatureGeometry>,
}

impl DieFeature {
    pub fn new(kind: FeatureKind) -> Self {
        Self { kind, attributes: None }
    }

    pub fn removal_volume(&self) -> Option<f64> {
        self.attributes.as_ref().and_then(|a| a.removal_volume)
    }
}

impl From<FeatureKind> for DieFeature {
    fn from(kind: FeatureKind) -> Self {
        Self::new(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiePart {
    pub kind: DiePartKind,
    /// mm
    pub thickness: f64,
    pub features: Vec<DieFeature>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DieDesign {
    pub die_type: DieType,
    pub num_orifices: u32,
    pub extrusion_ratio: f64,
    pub parts: Vec<DiePart>,
}

/// Parts that make up a die of the given type, in canonical order.
pub fn parts_for_die_type(die_type: DieType) -> &'static [DiePartKind] {
    match die_type {
        DieType::Solid | DieType::SemiHollow => {
            &[DiePartKind::Feeder, DiePartKind::DiePlate, DiePartKind::Backer]
        }
        DieType::Hollow => &[DiePartKind::Mandrel, DiePartKind::DieCap],
    }
}

/// Pure predicate for the die-type/part-set invariant: the design's parts
/// are exactly the die type's parts, without duplicates.
pub fn part_set_matches(design: &DieDesign) -> bool {
    let mut kinds: Vec<DiePartKind> = design.parts.iter().map(|p| p.kind).collect();
    kinds.sort();
    kinds == parts_for_die_type(design.die_type)
}

impl DieDesign {
    pub fn part(&self, kind: DiePartKind) -> Option<&DiePart> {
        self.parts.iter().find(|p| p.kind == kind)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        report.check(self.num_orifices >= 1, "num_orifices >= 1");
        report.check(self.extrusion_ratio > 1.0, "extrusion_ratio > 1");
        let mut seen = Vec::new();
        let mut duplicate = false;
        for part in &self.parts {
            duplicate |= seen.contains(&part.kind);
            seen.push(part.kind);
        }
        report.check(!duplicate, "no duplicate part kinds");
        report.check(part_set_matches(self), "parts match die type");
        report.check(self.parts.iter().all(|p| p.thickness > 0.0), "part thickness > 0");
        report.check(
            self.parts
                .iter()
                .flat_map(|p| &p.features)
                .all(|f| f.removal_volume().map_or(true, |v| v > 0.0)),
            "removal_volume > 0",
        );
        report
    }
}

/// One step of a machining plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachiningOperation {
    pub process: Process,
    pub operation: Operation,
    /// minutes
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimated_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimated_cost: Option<f64>,
}

impl From<Operation> for MachiningOperation {
    fn from(operation: Operation) -> Self {
        Self { process: operation.process(), operation, estimated_time: None, estimated_cost: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePlan {
    pub feature: DieFeature,
    pub operations: Vec<MachiningOperation>,
}

/// Where a routed step comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSource {
    /// Index into the part's feature list.
    Feature(usize),
    /// Index into the part's whole-part steps.
    Part(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteStep {
    pub source: StepSource,
    pub operation: Operation,
}

/// Machining plan of one die part.
///
/// `features` lists each feature with its operation chain, in design order.
/// `part_steps` are whole-part steps (heat treatment, grinding) that no
/// feature produces. [`PartPlan::route`] interleaves both into shop order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartPlan {
    pub part: DiePartKind,
    pub features: Vec<FeaturePlan>,
    pub part_steps: Vec<MachiningOperation>,
}

impl PartPlan {
    /// All steps of the part sequenced by process rank under `order`.
    /// The sort is stable, so features keep design order within a rank.
    pub fn route(&self, order: &[Process]) -> Vec<RouteStep> {
        let rank = |p: Process| order.iter().position(|&q| q == p).unwrap_or(order.len());
        let mut steps: Vec<RouteStep> = self
            .features
            .iter()
            .enumerate()
            .flat_map(|(i, f)| {
                f.operations
                    .iter()
                    .map(move |op| RouteStep { source: StepSource::Feature(i), operation: op.operation })
            })
            .chain(
                self.part_steps
                    .iter()
                    .enumerate()
                    .map(|(i, op)| RouteStep { source: StepSource::Part(i), operation: op.operation }),
            )
            .collect();
        steps.sort_by_key(|s| rank(s.operation.process()));
        steps
    }

    pub fn operations(&self) -> impl Iterator<Item = &MachiningOperation> {
        self.features.iter().flat_map(|f| &f.operations).chain(&self.part_steps)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProcessPlan {
    pub parts: Vec<PartPlan>,
    /// minutes
    #[serde(default)]
    pub total_time: f64,
    #[serde(default)]
    pub total_cost: f64,
}

impl ProcessPlan {
    pub fn part(&self, kind: DiePartKind) -> Option<&PartPlan> {
        self.parts.iter().find(|p| p.part == kind)
    }

    /// Checks the plan against the design it claims to come from.
    pub fn validate_against(&self, design: &DieDesign, order: &[Process]) -> ValidationReport {
        let mut report = ValidationReport::default();
        let features_known = self.parts.iter().all(|pp| {
            design.part(pp.part).map_or(false, |dp| {
                pp.features.iter().all(|fp| dp.features.iter().any(|f| f.kind == fp.feature.kind))
            })
        });
        report.check(features_known, "every planned feature appears in the design");
        let consistent = self
            .parts
            .iter()
            .flat_map(|p| p.operations())
            .all(|op| op.operation.process() == op.process);
        report.check(consistent, "operation belongs to its process");
        let rank = |p: Process| order.iter().position(|&q| q == p).unwrap_or(order.len());
        let routed = self.parts.iter().all(|p| {
            let route = p.route(order);
            route.windows(2).all(|w| rank(w[0].operation.process()) <= rank(w[1].operation.process()))
        });
        report.check(routed, "route respects the standard order");
        report
    }
}

named_enum! {
    pub enum CaseProvenance as "case provenance" {
        Industrial => "industrial",
        Synthetic => "synthetic",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub profile: ProfileSpec,
    pub design: DieDesign,
    pub plan: ProcessPlan,
    pub provenance: CaseProvenance,
    /// Seconds since the Unix epoch.
    pub created: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fig29_profile;

    fn round_trip<T>(all: &[T])
    where
        T: Copy + fmt::Display + FromStr + PartialEq + fmt::Debug + Serialize + for<'de> Deserialize<'de>,
        <T as FromStr>::Err: fmt::Debug,
    {
        for &v in all {
            assert_eq!(v.to_string().parse::<T>().unwrap(), v);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(serde_json::from_str::<T>(&json).unwrap(), v);
        }
    }

    #[test]
    fn every_enum_round_trips_through_its_name() {
        round_trip(ProfileType::ALL);
        round_trip(PressCapacity::ALL);
        round_trip(DieType::ALL);
        round_trip(DiePartKind::ALL);
        round_trip(FeatureCategory::ALL);
        round_trip(FeatureKind::ALL);
        round_trip(Process::ALL);
        round_trip(Operation::ALL);
        round_trip(CaseProvenance::ALL);
    }

    #[test]
    fn unknown_name_is_rejected() {
        let err = "porthole".parse::<DieType>().unwrap_err();
        assert_eq!(err.kind, "die type");
        assert!(serde_json::from_str::<DiePartKind>("\"bolster\"").is_err());
    }

    #[test]
    fn enum_cardinalities() {
        assert_eq!(DieType::ALL.len(), 3);
        assert_eq!(DiePartKind::ALL.len(), 5);
        assert_eq!(FeatureKind::ALL.len(), 17);
        let per_category = |c| FeatureKind::ALL.iter().filter(|k| k.category() == c).count();
        assert_eq!(per_category(FeatureCategory::Hole), 6);
        assert_eq!(per_category(FeatureCategory::Edge), 2);
        assert_eq!(per_category(FeatureCategory::Groove), 3);
        assert_eq!(per_category(FeatureCategory::Pocket), 6);
    }

    #[test]
    fn operation_vocabulary_per_process() {
        let count = |p| Operation::ALL.iter().filter(|o| o.process() == p).count();
        assert_eq!(count(Process::Turning), 5);
        assert_eq!(count(Process::Facing), 3);
        assert_eq!(count(Process::Drilling), 7);
        assert_eq!(count(Process::Milling), 3);
        assert_eq!(count(Process::EdmWire), 2);
        assert_eq!(count(Process::HeatTreatment), 1);
        assert_eq!(count(Process::Grinding), 1);
        assert_eq!(count(Process::EdmSpark), 1);
    }

    #[test]
    fn fig29_profile_is_valid() {
        assert!(validate_profile(&fig29_profile()).is_valid());
    }

    #[test]
    fn zero_width_is_reported() {
        let spec = ProfileSpec { width: 0.0, ..fig29_profile() };
        let report = validate_profile(&spec);
        assert_eq!(report.violations, vec![Violation("width > 0".into())]);
    }

    #[test]
    fn small_ccd_is_reported() {
        let spec = ProfileSpec { ccd: Some(10.0), ..fig29_profile() };
        assert!(validate_profile(&spec).contains("ccd >= max(width, height)"));
    }

    #[test]
    fn several_violations_are_all_listed() {
        let spec = ProfileSpec { height: -1.0, perimeter: 0.0, tongue_ratio: -0.5, ..fig29_profile() };
        assert_eq!(validate_profile(&spec).violations.len(), 3);
    }

    #[test]
    fn design_part_set_predicate() {
        let part = |kind| DiePart { kind, thickness: 50.0, features: vec![] };
        let mut design = DieDesign {
            die_type: DieType::Hollow,
            num_orifices: 1,
            extrusion_ratio: 40.0,
            parts: vec![part(DiePartKind::Mandrel), part(DiePartKind::DieCap)],
        };
        assert!(design.validate().is_valid());
        design.die_type = DieType::Solid;
        assert!(design.validate().contains("parts match die type"));
        design.parts = vec![part(DiePartKind::Feeder), part(DiePartKind::DiePlate), part(DiePartKind::DiePlate)];
        assert!(design.validate().contains("no duplicate part kinds"));
    }

    #[test]
    fn route_orders_steps_stably_by_rank() {
        let plan = PartPlan {
            part: DiePartKind::DieCap,
            features: vec![
                FeaturePlan {
                    feature: FeatureKind::ClosedPocketSculptured.into(),
                    operations: vec![Operation::EdmSparking.into()],
                },
                FeaturePlan {
                    feature: FeatureKind::ClosedPocketPlane.into(),
                    operations: vec![Operation::RoughMilling.into(), Operation::FinishMilling.into()],
                },
            ],
            part_steps: vec![Operation::HeatTreatment.into(), Operation::Grinding.into()],
        };
        let route: Vec<Operation> = plan.route(Process::ALL).iter().map(|s| s.operation).collect();
        assert_eq!(
            route,
            vec![
                Operation::RoughMilling,
                Operation::FinishMilling,
                Operation::HeatTreatment,
                Operation::Grinding,
                Operation::EdmSparking
            ]
        );
    }
}
