//! Material-removal-rate formulas and plan time/cost estimation.
//!
//! Turning formulas work in inches (in, in/rev, ft/min, in³/min); milling,
//! grinding and EDM in millimetres. Volumes and rates carry a unit tag and
//! mixing systems is an error unless converted explicitly.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{DieFeature, FeatureKind, Operation, Process, ProcessPlan};

pub const MM3_PER_IN3: f64 = 16_387.064;
pub const SPARK_RATE_RANGE: (f64, f64) = (2.0, 400.0);

#[derive(Debug, thiserror::Error)]
pub enum EstimateError {
    #[error("{name} must be > 0, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },
    #[error("unit mismatch: {left} vs {right}")]
    UnitMismatch { left: String, right: String },
    #[error("spark EDM rate {0} mm³/min is outside [2, 400]")]
    SparkRateOutOfRange(f64),
    #[error("no estimation parameters for {0}")]
    MissingParams(String),
    #[error("invalid estimator config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("estimator config I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("estimator config JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn positive(name: &'static str, value: f64) -> Result<f64, EstimateError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(EstimateError::NonPositiveInput { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitSystem {
    Imperial,
    Metric,
}

/// Removed volume: in³ (imperial) or mm³ (metric).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Volume {
    pub value: f64,
    pub system: UnitSystem,
}

/// Removal rate: in³/min (imperial) or mm³/min (metric).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub system: UnitSystem,
}

fn convert(value: f64, from: UnitSystem, to: UnitSystem) -> f64 {
    match (from, to) {
        (UnitSystem::Imperial, UnitSystem::Metric) => value * MM3_PER_IN3,
        (UnitSystem::Metric, UnitSystem::Imperial) => value / MM3_PER_IN3,
        _ => value,
    }
}

impl Volume {
    pub fn mm3(value: f64) -> Self {
        Self { value, system: UnitSystem::Metric }
    }
    pub fn in3(value: f64) -> Self {
        Self { value, system: UnitSystem::Imperial }
    }
    pub fn to(self, system: UnitSystem) -> Self {
        Self { value: convert(self.value, self.system, system), system }
    }
}

impl Rate {
    pub fn mm3_per_min(value: f64) -> Self {
        Self { value, system: UnitSystem::Metric }
    }
    pub fn in3_per_min(value: f64) -> Self {
        Self { value, system: UnitSystem::Imperial }
    }
    pub fn to(self, system: UnitSystem) -> Self {
        Self { value: convert(self.value, self.system, system), system }
    }
}

impl fmt::Display for Volume {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.system {
            UnitSystem::Imperial => write!(f, "{} in³", self.value),
            UnitSystem::Metric => write!(f, "{} mm³", self.value),
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.system {
            UnitSystem::Imperial => write!(f, "{} in³/min", self.value),
            UnitSystem::Metric => write!(f, "{} mm³/min", self.value),
        }
    }
}

// ---------------------------------------------------------------------------
// Formulas
// ---------------------------------------------------------------------------

/// Turning removal rate πDdfN. D, d in inches, f in in/rev, N in rpm.
pub fn mrr_turning(diameter: f64, depth: f64, feed: f64, spindle: f64) -> Result<Rate, EstimateError> {
    let value = PI
        * positive("D", diameter)?
        * positive("d", depth)?
        * positive("f", feed)?
        * positive("N", spindle)?;
    Ok(Rate::in3_per_min(value))
}

/// Spindle speed 12V/(πD) in rpm, V in ft/min, D in inches.
pub fn spindle_speed(cutting_speed: f64, diameter: f64) -> Result<f64, EstimateError> {
    Ok(12.0 * positive("V", cutting_speed)? / (PI * positive("D", diameter)?))
}

/// Turning removal rate 12dfV, independent of diameter.
pub fn mrr_turning_v(depth: f64, feed: f64, cutting_speed: f64) -> Result<Rate, EstimateError> {
    let value = 12.0 * positive("d", depth)? * positive("f", feed)? * positive("V", cutting_speed)?;
    Ok(Rate::in3_per_min(value))
}

/// Straight turning from outer diameter D_o down to D_f: π(D_o² − D_f²)/4 · f · N.
pub fn mrr_straight_turning(outer: f64, inner: f64, feed: f64, spindle: f64) -> Result<Rate, EstimateError> {
    positive("D_o", outer)?;
    positive("D_f", inner)?;
    if inner > outer {
        return Err(EstimateError::NonPositiveInput { name: "D_o - D_f", value: outer - inner });
    }
    let value = PI * (outer * outer - inner * inner) / 4.0 * positive("f", feed)? * positive("N", spindle)?;
    Ok(Rate::in3_per_min(value))
}

/// Milling cutting speed πDN with D in mm and N in rpm. The result is in
/// mm/min; see [`milling_cutting_speed_m_per_min`] for m/min.
pub fn milling_cutting_speed(diameter: f64, spindle: f64) -> Result<f64, EstimateError> {
    Ok(PI * positive("D", diameter)? * positive("N", spindle)?)
}

/// πDN/1000, the cutting speed in m/min.
pub fn milling_cutting_speed_m_per_min(diameter: f64, spindle: f64) -> Result<f64, EstimateError> {
    Ok(milling_cutting_speed(diameter, spindle)? / 1000.0)
}

/// Feed per tooth v/(Nn) in mm/tooth.
pub fn feed_per_tooth(feed_rate: f64, spindle: f64, teeth: u32) -> Result<f64, EstimateError> {
    if teeth == 0 {
        return Err(EstimateError::NonPositiveInput { name: "n", value: 0.0 });
    }
    Ok(positive("v", feed_rate)? / (positive("N", spindle)? * f64::from(teeth)))
}

/// Milling removal rate wdv in mm³/min.
pub fn mrr_milling(width: f64, depth: f64, feed_rate: f64) -> Result<Rate, EstimateError> {
    Ok(Rate::mm3_per_min(positive("w", width)? * positive("d", depth)? * positive("v", feed_rate)?))
}

/// Surface grinding removal rate dwv in mm³/min.
pub fn mrr_grinding(depth: f64, width: f64, feed_rate: f64) -> Result<Rate, EstimateError> {
    Ok(Rate::mm3_per_min(positive("d", depth)? * positive("w", width)? * positive("v", feed_rate)?))
}

/// Drill removal rate πD²fN/4 in mm³/min (D mm, f mm/rev, N rpm).
pub fn mrr_drilling(diameter: f64, feed: f64, spindle: f64) -> Result<Rate, EstimateError> {
    let d = positive("D", diameter)?;
    Ok(Rate::mm3_per_min(PI * d * d / 4.0 * positive("f", feed)? * positive("N", spindle)?))
}

/// Wire EDM linear speed in mm/min from an area rate (mm²/hr) and the
/// workpiece thickness (mm).
pub fn wire_edm_linear_speed(area_rate: f64, thickness: f64) -> Result<f64, EstimateError> {
    Ok(positive("area_rate", area_rate)? / positive("thickness", thickness)? / 60.0)
}

pub fn check_spark_rate(rate: f64) -> Result<f64, EstimateError> {
    positive("spark_rate", rate)?;
    let (lo, hi) = SPARK_RATE_RANGE;
    if !(lo..=hi).contains(&rate) {
        return Err(EstimateError::SparkRateOutOfRange(rate));
    }
    Ok(rate)
}

/// Minutes to remove `volume` at `rate`.
pub fn machining_time(volume: Volume, rate: Rate) -> Result<f64, EstimateError> {
    if volume.system != rate.system {
        return Err(EstimateError::UnitMismatch { left: volume.to_string(), right: rate.to_string() });
    }
    Ok(positive("volume", volume.value)? / positive("mrr", rate.value)?)
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

const SHIPPED_ESTIMATOR: &str = include_str!("../data/estimator.json");

/// A number with its unit string, checked against the expected unit at load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    pub fn new(value: f64, unit: &str) -> Self {
        Self { value, unit: unit.to_string() }
    }
}

/// How an operation is timed, with its cutting parameters. `share` is the
/// fraction of the feature's removal volume (or wire cut length) the
/// operation accounts for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum OperationModel {
    /// Turning and facing: removal rate 12dfV.
    Turning { share: f64, depth: Quantity, feed: Quantity, cutting_speed: Quantity },
    Drilling { share: f64, diameter: Quantity, feed: Quantity, spindle: Quantity },
    Milling { share: f64, width: Quantity, depth: Quantity, feed_rate: Quantity },
    /// Whole-part grinding of `EstimatorConfig::grinding_volume`.
    Grinding { depth: Quantity, width: Quantity, feed_rate: Quantity },
    EdmSpark { share: f64 },
    EdmWire { share: f64 },
    /// Fixed `EstimatorConfig::heat_treatment_time`.
    HeatTreatment,
}

impl OperationModel {
    fn process_matches(&self, process: Process) -> bool {
        use OperationModel as M;
        matches!(
            (self, process),
            (M::Turning { .. }, Process::Turning | Process::Facing)
                | (M::Drilling { .. }, Process::Drilling)
                | (M::Milling { .. }, Process::Milling)
                | (M::Grinding { .. }, Process::Grinding)
                | (M::EdmSpark { .. }, Process::EdmSpark)
                | (M::EdmWire { .. }, Process::EdmWire)
                | (M::HeatTreatment, Process::HeatTreatment)
        )
    }

    fn quantities(&self) -> Vec<(&'static str, &Quantity, &'static str)> {
        use OperationModel as M;
        match self {
            M::Turning { depth, feed, cutting_speed, .. } => {
                vec![("depth", depth, "in"), ("feed", feed, "in/rev"), ("cutting_speed", cutting_speed, "ft/min")]
            }
            M::Drilling { diameter, feed, spindle, .. } => {
                vec![("diameter", diameter, "mm"), ("feed", feed, "mm/rev"), ("spindle", spindle, "rpm")]
            }
            M::Milling { width, depth, feed_rate, .. } | M::Grinding { width, depth, feed_rate } => {
                vec![("width", width, "mm"), ("depth", depth, "mm"), ("feed_rate", feed_rate, "mm/min")]
            }
            _ => vec![],
        }
    }

    fn share(&self) -> Option<f64> {
        use OperationModel as M;
        match self {
            M::Turning { share, .. }
            | M::Drilling { share, .. }
            | M::Milling { share, .. }
            | M::EdmSpark { share }
            | M::EdmWire { share } => Some(*share),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdmRates {
    pub wire_area_rate: Quantity,
    pub spark_rate: Quantity,
    pub workpiece_thickness: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub estimator_version: String,
    pub hourly_rates: BTreeMap<Process, Quantity>,
    pub setup_time: Quantity,
    pub heat_treatment_time: Quantity,
    pub edm: EdmRates,
    /// Removal volume per feature kind when the design gives none.
    pub feature_volumes: BTreeMap<FeatureKind, Quantity>,
    /// Wire cut length per feature kind when the design gives no diameter.
    pub wire_cut_lengths: BTreeMap<FeatureKind, Quantity>,
    /// Stock ground off each part.
    pub grinding_volume: Quantity,
    pub operations: BTreeMap<Operation, OperationModel>,
}

impl EstimatorConfig {
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED_ESTIMATOR).expect("shipped estimator config is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, EstimateError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, EstimateError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Every unit string and range, all problems at once.
    pub fn validate(&self) -> Result<(), EstimateError> {
        let mut problems = Vec::new();
        let mut check = |name: String, q: &Quantity, unit: &str, allow_zero: bool| {
            if q.unit != unit {
                problems.push(format!("{name}: unit `{}`, expected `{unit}`", q.unit));
            }
            let ok = if allow_zero { q.value >= 0.0 } else { q.value > 0.0 };
            if !ok || !q.value.is_finite() {
                problems.push(format!("{name}: value {} out of range", q.value));
            }
        };
        for (p, q) in &self.hourly_rates {
            check(format!("hourly_rates.{p}"), q, "currency/hr", true);
        }
        check("setup_time".into(), &self.setup_time, "min", true);
        check("heat_treatment_time".into(), &self.heat_treatment_time, "min", false);
        check("edm.wire_area_rate".into(), &self.edm.wire_area_rate, "mm2/hr", false);
        check("edm.spark_rate".into(), &self.edm.spark_rate, "mm3/min", false);
        check("edm.workpiece_thickness".into(), &self.edm.workpiece_thickness, "mm", false);
        for (k, q) in &self.feature_volumes {
            check(format!("feature_volumes.{k}"), q, "mm3", false);
        }
        for (k, q) in &self.wire_cut_lengths {
            check(format!("wire_cut_lengths.{k}"), q, "mm", false);
        }
        check("grinding_volume".into(), &self.grinding_volume, "mm3", false);
        for (op, model) in &self.operations {
            for (field, q, unit) in model.quantities() {
                check(format!("operations.{op}.{field}"), q, unit, false);
            }
        }
        for (op, model) in &self.operations {
            if !model.process_matches(op.process()) {
                problems.push(format!("operations.{op}: model does not fit process {}", op.process()));
            }
            if let Some(share) = model.share() {
                if !(share > 0.0 && share <= 1.0) {
                    problems.push(format!("operations.{op}.share: {share} not in (0, 1]"));
                }
            }
        }
        if let Err(e) = check_spark_rate(self.edm.spark_rate.value) {
            problems.push(format!("edm.spark_rate: {e}"));
        }
        for p in Process::ALL {
            if !self.hourly_rates.contains_key(p) {
                problems.push(format!("hourly_rates: missing {p}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(EstimateError::InvalidConfig(problems))
        }
    }

    fn model(&self, op: Operation) -> Result<&OperationModel, EstimateError> {
        self.operations.get(&op).ok_or_else(|| EstimateError::MissingParams(op.to_string()))
    }

    fn feature_volume(&self, feature: &DieFeature, op: Operation) -> Result<f64, EstimateError> {
        feature
            .removal_volume()
            .or_else(|| self.feature_volumes.get(&feature.kind).map(|q| q.value))
            .ok_or_else(|| EstimateError::MissingParams(format!("{op} on {}: removal volume", feature.kind)))
    }

    fn cut_length(&self, feature: &DieFeature, op: Operation) -> Result<f64, EstimateError> {
        feature
            .attributes
            .as_ref()
            .and_then(|a| a.diameter)
            .map(|d| PI * d)
            .or_else(|| self.wire_cut_lengths.get(&feature.kind).map(|q| q.value))
            .ok_or_else(|| EstimateError::MissingParams(format!("{op} on {}: wire cut length", feature.kind)))
    }

    /// Minutes for `op`, acting on `feature` or on the whole part when `None`.
    pub fn operation_time(&self, op: Operation, feature: Option<&DieFeature>) -> Result<f64, EstimateError> {
        let model = self.model(op)?;
        let need_feature =
            || feature.ok_or_else(|| EstimateError::MissingParams(format!("{op}: needs a feature")));
        use OperationModel as M;
        match model {
            M::Turning { share, depth, feed, cutting_speed } => {
                let volume = Volume::mm3(share * self.feature_volume(need_feature()?, op)?);
                let rate = mrr_turning_v(depth.value, feed.value, cutting_speed.value)?;
                machining_time(volume.to(UnitSystem::Imperial), rate)
            }
            M::Drilling { share, diameter, feed, spindle } => {
                let volume = Volume::mm3(share * self.feature_volume(need_feature()?, op)?);
                machining_time(volume, mrr_drilling(diameter.value, feed.value, spindle.value)?)
            }
            M::Milling { share, width, depth, feed_rate } => {
                let volume = Volume::mm3(share * self.feature_volume(need_feature()?, op)?);
                machining_time(volume, mrr_milling(width.value, depth.value, feed_rate.value)?)
            }
            M::Grinding { depth, width, feed_rate } => machining_time(
                Volume::mm3(self.grinding_volume.value),
                mrr_grinding(depth.value, width.value, feed_rate.value)?,
            ),
            M::EdmSpark { share } => {
                let volume = Volume::mm3(share * self.feature_volume(need_feature()?, op)?);
                let rate = check_spark_rate(self.edm.spark_rate.value)?;
                machining_time(volume, Rate::mm3_per_min(rate))
            }
            M::EdmWire { share } => {
                let length = share * self.cut_length(need_feature()?, op)?;
                let speed =
                    wire_edm_linear_speed(self.edm.wire_area_rate.value, self.edm.workpiece_thickness.value)?;
                Ok(positive("cut length", length)? / speed)
            }
            M::HeatTreatment => Ok(self.heat_treatment_time.value),
        }
    }

    /// (time + setup) / 60 × hourly rate of the operation's process.
    pub fn operation_cost(&self, op: Operation, time: f64) -> Result<f64, EstimateError> {
        let rate = self
            .hourly_rates
            .get(&op.process())
            .ok_or_else(|| EstimateError::MissingParams(format!("hourly rate for {}", op.process())))?;
        Ok((time + self.setup_time.value) / 60.0 * rate.value)
    }
}

/// Fills every operation's time and cost and the plan totals. Total time
/// is machining time only; total cost includes setup.
pub fn estimate_plan(plan: &ProcessPlan, cfg: &EstimatorConfig) -> Result<ProcessPlan, EstimateError> {
    cfg.validate()?;
    let mut out = plan.clone();
    let (mut total_time, mut total_cost) = (0.0, 0.0);
    for part in &mut out.parts {
        for fp in &mut part.features {
            for op in &mut fp.operations {
                let time = cfg.operation_time(op.operation, Some(&fp.feature))?;
                let cost = cfg.operation_cost(op.operation, time)?;
                op.estimated_time = Some(time);
                op.estimated_cost = Some(cost);
                total_time += time;
                total_cost += cost;
            }
        }
        for op in &mut part.part_steps {
            let time = cfg.operation_time(op.operation, None)?;
            let cost = cfg.operation_cost(op.operation, time)?;
            op.estimated_time = Some(time);
            op.estimated_cost = Some(cost);
            total_time += time;
            total_cost += cost;
        }
    }
    out.total_time = total_time;
    out.total_cost = total_cost;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DiePartKind, FeatureGeometry, FeaturePlan, MachiningOperation, PartPlan};
    use crate::fixtures::case_study_design;
    use crate::kb::KnowledgeBase;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn turning_examples() {
        assert!(close(mrr_turning(4.0, 0.1, 0.01, 500.0).unwrap().value, 2.0 * PI, 1e-12));
        assert!(close(spindle_speed(100.0, 4.0).unwrap(), 1200.0 / (4.0 * PI), 1e-12));
        assert!(close(spindle_speed(100.0, 4.0).unwrap(), 95.493, 1e-5));
        assert_eq!(mrr_straight_turning(3.0, 3.0, 0.01, 500.0).unwrap().value, 0.0);
        assert!(mrr_straight_turning(2.0, 3.0, 0.01, 500.0).is_err());
    }

    #[test]
    fn milling_examples() {
        assert_eq!(feed_per_tooth(600.0, 300.0, 2).unwrap(), 1.0);
        assert!(feed_per_tooth(600.0, 300.0, 0).is_err());
        assert!(matches!(mrr_milling(10.0, 0.0, 50.0), Err(EstimateError::NonPositiveInput { name: "d", .. })));
        assert_eq!(mrr_milling(10.0, 2.0, 50.0).unwrap().value, 1000.0);
        assert!(close(milling_cutting_speed(10.0, 1000.0).unwrap(), 10_000.0 * PI, 1e-12));
        assert!(close(milling_cutting_speed_m_per_min(10.0, 1000.0).unwrap(), 10.0 * PI, 1e-12));
        assert_eq!(mrr_grinding(0.02, 20.0, 1000.0).unwrap().value, 400.0);
    }

    #[test]
    fn wire_speeds() {
        assert_eq!(wire_edm_linear_speed(18_000.0, 50.0).unwrap(), 6.0);
        assert_eq!(wire_edm_linear_speed(45_000.0, 150.0).unwrap(), 5.0);
        assert_eq!(wire_edm_linear_speed(60.0, 1.0).unwrap(), 1.0);
        assert!(wire_edm_linear_speed(0.0, 1.0).is_err());
    }

    #[test]
    fn time_examples() {
        assert_eq!(machining_time(Volume::mm3(100.0), Rate::mm3_per_min(10.0)).unwrap(), 10.0);
        assert_eq!(machining_time(Volume::in3(6.2832), Rate::in3_per_min(6.2832)).unwrap(), 1.0);
        assert!(matches!(
            machining_time(Volume::in3(1.0), Rate::mm3_per_min(1.0)),
            Err(EstimateError::UnitMismatch { .. })
        ));
        let v = Volume::in3(1.0).to(UnitSystem::Metric);
        assert_eq!(v.value, MM3_PER_IN3);
    }

    #[test]
    fn spark_rate_range() {
        assert!(check_spark_rate(2.0).is_ok());
        assert!(check_spark_rate(400.0).is_ok());
        assert!(matches!(check_spark_rate(500.0), Err(EstimateError::SparkRateOutOfRange(_))));
    }

    fn one_op_plan(op: Operation, feature: DieFeature) -> ProcessPlan {
        ProcessPlan {
            parts: vec![PartPlan {
                part: DiePartKind::DieCap,
                features: vec![FeaturePlan { feature, operations: vec![MachiningOperation::from(op)] }],
                part_steps: vec![],
            }],
            total_time: 0.0,
            total_cost: 0.0,
        }
    }

    #[test]
    fn single_milling_operation() {
        let mut cfg = EstimatorConfig::shipped();
        cfg.operations.insert(
            Operation::RoughMilling,
            OperationModel::Milling {
                share: 1.0,
                width: Quantity::new(10.0, "mm"),
                depth: Quantity::new(2.0, "mm"),
                feed_rate: Quantity::new(50.0, "mm/min"),
            },
        );
        let feature = DieFeature {
            kind: FeatureKind::ClosedPocketPlane,
            attributes: Some(FeatureGeometry { removal_volume: Some(1000.0), ..Default::default() }),
        };
        let plan = estimate_plan(&one_op_plan(Operation::RoughMilling, feature), &cfg).unwrap();
        let op = &plan.parts[0].features[0].operations[0];
        assert_eq!(op.estimated_time, Some(1.0));
        assert_eq!(plan.total_time, 1.0);
        let rate = cfg.hourly_rates[&Process::Milling].value;
        assert!(close(plan.total_cost, (1.0 + cfg.setup_time.value) / 60.0 * rate, 1e-12));
    }

    #[test]
    fn empty_plan_has_zero_totals() {
        let plan = estimate_plan(&ProcessPlan::default(), &EstimatorConfig::shipped()).unwrap();
        assert_eq!((plan.total_time, plan.total_cost), (0.0, 0.0));
    }

    #[test]
    fn spark_rate_500_rejected() {
        let mut cfg = EstimatorConfig::shipped();
        cfg.edm.spark_rate.value = 500.0;
        let plan = one_op_plan(Operation::EdmSparking, FeatureKind::ClosedPocketSculptured.into());
        assert!(estimate_plan(&plan, &cfg).is_err());
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(matches!(EstimatorConfig::from_json(&text), Err(EstimateError::InvalidConfig(_))));
    }

    #[test]
    fn missing_params_named() {
        let mut cfg = EstimatorConfig::shipped();
        cfg.operations.remove(&Operation::Tapping);
        let plan = one_op_plan(Operation::Tapping, FeatureKind::TapHole.into());
        match estimate_plan(&plan, &cfg) {
            Err(EstimateError::MissingParams(what)) => assert!(what.contains("tapping")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn heat_treatment_is_fixed() {
        let cfg = EstimatorConfig::shipped();
        assert_eq!(cfg.operation_time(Operation::HeatTreatment, None).unwrap(), 240.0);
    }

    #[test]
    fn wrong_unit_rejected_at_load() {
        let mut cfg = EstimatorConfig::shipped();
        cfg.setup_time.unit = "hr".into();
        cfg.edm.workpiece_thickness.unit = "in".into();
        match EstimatorConfig::from_json(&serde_json::to_string(&cfg).unwrap()) {
            Err(EstimateError::InvalidConfig(p)) => assert_eq!(p.len(), 2, "{p:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn case_study_plan_is_fully_estimated() {
        let kb = KnowledgeBase::shipped();
        let plan = kb.derive_plan(&case_study_design()).unwrap();
        let est = estimate_plan(&plan, &EstimatorConfig::shipped()).unwrap();
        let ops: Vec<_> = est.parts.iter().flat_map(|p| p.operations()).collect();
        assert!(ops.iter().all(|o| o.estimated_time.unwrap() > 0.0 && o.estimated_cost.unwrap() > 0.0));
        let sum: f64 = ops.iter().map(|o| o.estimated_time.unwrap()).sum();
        assert!(close(est.total_time, sum, 1e-12));
        assert_eq!(est, estimate_plan(&plan, &EstimatorConfig::shipped()).unwrap());
    }

    proptest! {
        #[test]
        fn turning_formulas_compose(d_ in 0.01f64..20.0, d in 1e-3f64..1.0, f in 1e-4f64..0.1, v in 1.0f64..2000.0) {
            let n = spindle_speed(v, d_).unwrap();
            let a = mrr_turning(d_, d, f, n).unwrap().value;
            let b = mrr_turning_v(d, f, v).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-12 * b);
        }

        #[test]
        fn removal_rates_are_linear_per_factor(a in 0.01f64..100.0, b in 0.01f64..100.0, c in 0.01f64..100.0, e in 0.01f64..100.0, k in 0.1f64..10.0) {
            let lin = |x: f64, y: f64| (x - k * y).abs() <= 1e-12 * x.abs().max(1e-300);
            prop_assert!(lin(mrr_turning(a, k * b, c, e).unwrap().value, mrr_turning(a, b, c, e).unwrap().value));
            prop_assert!(lin(mrr_turning(a, b, k * c, e).unwrap().value, mrr_turning(a, b, c, e).unwrap().value));
            prop_assert!(lin(mrr_turning_v(k * a, b, c).unwrap().value, mrr_turning_v(a, b, c).unwrap().value));
            prop_assert!(lin(mrr_turning_v(a, b, k * c).unwrap().value, mrr_turning_v(a, b, c).unwrap().value));
            let (o, i) = (a + b, a);
            prop_assert!(lin(mrr_straight_turning(o, i, k * c, e).unwrap().value, mrr_straight_turning(o, i, c, e).unwrap().value));
            prop_assert!(lin(mrr_milling(a, k * b, c).unwrap().value, mrr_milling(a, b, c).unwrap().value));
            prop_assert!(lin(mrr_milling(a, b, k * c).unwrap().value, mrr_milling(a, b, c).unwrap().value));
            prop_assert!(lin(mrr_grinding(k * a, b, c).unwrap().value, mrr_grinding(a, b, c).unwrap().value));
            prop_assert!(lin(mrr_grinding(a, b, k * c).unwrap().value, mrr_grinding(a, b, c).unwrap().value));
            prop_assert!(lin(mrr_drilling(a, k * b, c).unwrap().value, mrr_drilling(a, b, c).unwrap().value));
        }

        #[test]
        fn straight_turning_degenerates(outer in 0.1f64..20.0, f in 1e-4f64..0.1, n in 1.0f64..5000.0) {
            prop_assert_eq!(mrr_straight_turning(outer, outer, f, n).unwrap().value, 0.0);
            let near = mrr_straight_turning(outer, outer * (1.0 - 1e-9), f, n).unwrap().value;
            prop_assert!(near < 1e-6 * outer * outer * f * n);
        }

        #[test]
        fn time_decreases_with_rate(v in 1.0f64..1e6, r in 0.1f64..1e4, dr in 1e-3f64..1e3) {
            let slow = machining_time(Volume::mm3(v), Rate::mm3_per_min(r)).unwrap();
            let fast = machining_time(Volume::mm3(v), Rate::mm3_per_min(r + dr)).unwrap();
            prop_assert!(fast < slow);
        }
    }
}
