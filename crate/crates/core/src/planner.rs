//! End-to-end planning: profile → encoded input → network prediction →
//! decoded die design → knowledge-base plan → time and cost.
//!
//! When the network output cannot be decoded the design of the nearest
//! stored case is reused, and with no cases either the knowledge base
//! builds the design directly. The document records which path ran.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::{
    decode_output, encode_design, encode_profile, validate_output, EncodingConfig, OutputDiagnostic, OutputVector,
};
use crate::domain::{validate_profile, DieDesign, ProcessPlan, ProfileSpec};
use crate::estimator::{estimate_plan, EstimatorConfig};
use crate::kb::KnowledgeBase;
use crate::library::{encoded_inputs, rank_by_hamming, Library, LibraryError, Neighbor};
use crate::nn::Mlp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Validate,
    Encode,
    Predict,
    Retrieve,
    Derive,
    Estimate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        f.write_str(s.as_str().expect("stage is a string"))
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct PlanError {
    pub stage: Stage,
    pub message: String,
}

impl PlanError {
    fn at(stage: Stage) -> impl Fn(&dyn fmt::Display) -> Self {
        move |e| Self { stage, message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignSource {
    NnPrediction,
    KnnFallback,
    KbDirect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrailEntry {
    pub stage: Stage,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub profile: ProfileSpec,
    pub design: DieDesign,
    pub plan: ProcessPlan,
    pub source: DesignSource,
    pub trail: Vec<TrailEntry>,
    /// Largest output activation per output segment.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub confidence: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<OutputDiagnostic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_case: Option<Neighbor>,
}

/// Read-only inputs shared by every planning call.
#[derive(Debug, Clone, Copy)]
pub struct Planner<'a> {
    pub codec: &'a EncodingConfig,
    pub kb: &'a KnowledgeBase,
    pub library: Option<&'a Library>,
    pub estimator: &'a EstimatorConfig,
    pub threshold: f64,
}

/// Raw activations, thresholded vector and per-segment confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub raw: Vec<f64>,
    pub binary: OutputVector,
    pub confidence: BTreeMap<String, f64>,
}

pub fn predict(model: &Mlp, spec: &ProfileSpec, codec: &EncodingConfig, threshold: f64) -> Result<Prediction, PlanError> {
    let x = encode_profile(spec, codec).map_err(|e| PlanError::at(Stage::Encode)(&e))?;
    predict_encoded(model, &x.to_f64(), codec, threshold)
}

fn predict_encoded(model: &Mlp, x: &[f64], codec: &EncodingConfig, threshold: f64) -> Result<Prediction, PlanError> {
    let raw = model.forward(x).map_err(|e| PlanError::at(Stage::Predict)(&e))?;
    let bits: Vec<u8> = raw.iter().map(|&y| u8::from(y >= threshold)).collect();
    let binary = OutputVector::try_from(bits).map_err(|e| PlanError::at(Stage::Predict)(&e))?;
    let confidence = codec
        .output
        .iter()
        .map(|seg| (seg.name.clone(), raw[seg.range()].iter().copied().fold(f64::NEG_INFINITY, f64::max)))
        .collect();
    Ok(Prediction { raw, binary, confidence })
}

impl Planner<'_> {
    /// Runs the pipeline. Pure in all arguments.
    pub fn plan(&self, spec: &ProfileSpec, model: Option<&Mlp>) -> Result<PlanDocument, PlanError> {
        let report = validate_profile(spec);
        if !report.is_valid() {
            return Err(PlanError { stage: Stage::Validate, message: format!("{:?}", report.violations) });
        }
        let x = encode_profile(spec, self.codec).map_err(|e| PlanError::at(Stage::Encode)(&e))?;
        let mut trail = vec![TrailEntry { stage: Stage::Encode, outcome: format!("{} active bits", x.count_ones()) }];
        let mut confidence = BTreeMap::new();
        let mut diagnostics = Vec::new();
        let mut matched_case = None;
        let mut chosen: Option<(DieDesign, DesignSource)> = None;

        match model {
            Some(model) => {
                let p = predict_encoded(model, &x.to_f64(), self.codec, self.threshold)?;
                confidence = p.confidence;
                diagnostics = validate_output(&p.binary, self.codec);
                if diagnostics.is_empty() {
                    let decoded = decode_output(&p.binary, self.codec).expect("validated");
                    let design = self.kb.design_from_decoded(&decoded);
                    trail.push(TrailEntry { stage: Stage::Predict, outcome: "decoded network output".into() });
                    chosen = Some((design, DesignSource::NnPrediction));
                } else {
                    let kinds: Vec<String> = diagnostics.iter().map(|d| d.to_string()).collect();
                    trail.push(TrailEntry {
                        stage: Stage::Predict,
                        outcome: format!("undecodable output: {}", kinds.join("; ")),
                    });
                }
            }
            None => trail.push(TrailEntry { stage: Stage::Predict, outcome: "skipped: no model".into() }),
        }

        if chosen.is_none() {
            match self.library.filter(|l| !l.is_empty()) {
                Some(lib) => {
                    let candidates = encoded_inputs(lib, self.codec).map_err(|e| PlanError::at(Stage::Retrieve)(&e))?;
                    let best = rank_by_hamming(&x, &candidates, 1)
                        .map_err(|e: LibraryError| PlanError::at(Stage::Retrieve)(&e))?
                        .remove(0);
                    let case = lib.get(&best.case_id).expect("ranked ids come from the library");
                    trail.push(TrailEntry {
                        stage: Stage::Retrieve,
                        outcome: format!("reused case {} at distance {}", best.case_id, best.distance),
                    });
                    chosen = Some((case.design.clone(), DesignSource::KnnFallback));
                    matched_case = Some(best);
                }
                None => {
                    trail.push(TrailEntry {
                        stage: Stage::Retrieve,
                        outcome: "skipped: empty library, design built from rules".into(),
                    });
                    chosen = Some((self.kb.build_design(spec), DesignSource::KbDirect));
                }
            }
        }

        let (design, source) = chosen.expect("every branch picks a design");
        let plan = self.kb.derive_plan(&design).map_err(|e| PlanError::at(Stage::Derive)(&e))?;
        trail.push(TrailEntry {
            stage: Stage::Derive,
            outcome: format!("{} parts, {} operations", plan.parts.len(), plan.parts.iter().map(|p| p.operations().count()).sum::<usize>()),
        });
        let plan = estimate_plan(&plan, self.estimator).map_err(|e| PlanError::at(Stage::Estimate)(&e))?;
        trail.push(TrailEntry {
            stage: Stage::Estimate,
            outcome: format!("{:.1} min, cost {:.2}", plan.total_time, plan.total_cost),
        });
        Ok(PlanDocument { profile: spec.clone(), design, plan, source, trail, confidence, diagnostics, matched_case })
    }

    /// Plan built from the rules alone, skipping network and library.
    pub fn plan_direct(&self, spec: &ProfileSpec) -> Result<PlanDocument, PlanError> {
        Planner { library: None, ..*self }.plan(spec, None)
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDiff {
    pub segment: String,
    pub expected: Vec<usize>,
    pub predicted: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub case_id: String,
    pub source: Option<DesignSource>,
    pub segments: Vec<SegmentDiff>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cases: usize,
    /// Fraction of all output bits predicted correctly.
    pub bit_accuracy: f64,
    pub segment_bit_accuracy: BTreeMap<String, f64>,
    pub exact_match_rate: f64,
    pub die_type_accuracy: f64,
    /// Cases whose network-predicted plan equals the rules-only plan.
    pub plan_agreement_rate: f64,
    pub disagreements: Vec<Disagreement>,
}

/// Scores `model` over every case of `lib`, in library order.
pub fn evaluate(model: &Mlp, lib: &Library, planner: &Planner<'_>) -> Result<EvalReport, PlanError> {
    if lib.is_empty() {
        return Err(PlanError { stage: Stage::Validate, message: LibraryError::EmptyLibrary.to_string() });
    }
    let codec = planner.codec;
    let mut segment_hits: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let (mut bits_ok, mut bits_all, mut exact, mut die_ok, mut agree) = (0, 0, 0, 0, 0);
    let mut disagreements = Vec::new();
    let nn_only = Planner { library: None, ..*planner };

    for case in lib.cases() {
        let target = encode_design(&case.design, codec).map_err(|e| PlanError::at(Stage::Encode)(&e))?;
        let p = predict(model, &case.profile, codec, planner.threshold)?;
        let mut diffs = Vec::new();
        for seg in &codec.output {
            let r = seg.range();
            let hits = r.clone().filter(|&i| p.binary.as_slice()[i] == target.as_slice()[i]).count();
            let entry = segment_hits.entry(seg.name.clone()).or_default();
            entry.0 += hits;
            entry.1 += r.len();
            bits_ok += hits;
            bits_all += r.len();
            if hits != r.len() {
                diffs.push(SegmentDiff {
                    segment: seg.name.clone(),
                    expected: target.active_in(seg),
                    predicted: p.binary.active_in(seg),
                });
            }
        }
        if diffs.is_empty() {
            exact += 1;
        }
        let die_seg = &codec.output[crate::codec::output::DIE_TYPE];
        if p.binary.active_in(die_seg) == target.active_in(die_seg) {
            die_ok += 1;
        }

        let via_nn = nn_only.plan(&case.profile, Some(model))?;
        let direct = planner.plan_direct(&case.profile)?;
        let agrees = via_nn.source == DesignSource::NnPrediction && via_nn.plan == direct.plan;
        if agrees {
            agree += 1;
        } else {
            disagreements.push(Disagreement { case_id: case.case_id.clone(), source: Some(via_nn.source), segments: diffs });
        }
    }

    let n = lib.len() as f64;
    disagreements.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(EvalReport {
        cases: lib.len(),
        bit_accuracy: bits_ok as f64 / bits_all as f64,
        segment_bit_accuracy: segment_hits.into_iter().map(|(k, (h, t))| (k, h as f64 / t as f64)).collect(),
        exact_match_rate: exact as f64 / n,
        die_type_accuracy: die_ok as f64 / n,
        plan_agreement_rate: agree as f64 / n,
        disagreements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{INPUT_NODES, OUTPUT_NODES};
    use crate::domain::{DiePartKind, DieType};
    use crate::fixtures::{case_study_listing, case_study_profile, fig29_profile, plan_listing};
    use crate::library::{synthetic_library, LibraryMetadata};

    struct World {
        codec: EncodingConfig,
        kb: KnowledgeBase,
        estimator: EstimatorConfig,
    }

    impl World {
        fn new() -> Self {
            Self { codec: EncodingConfig::shipped(), kb: KnowledgeBase::shipped(), estimator: EstimatorConfig::shipped() }
        }

        fn planner<'a>(&'a self, library: Option<&'a Library>) -> Planner<'a> {
            Planner { codec: &self.codec, kb: &self.kb, library, estimator: &self.estimator, threshold: 0.5 }
        }
    }

    /// Network whose outputs are exactly the target bits for one input:
    /// all hidden weights zero, output biases ±10.
    fn memorizer(target: &OutputVector) -> Mlp {
        let mut m = Mlp::zeros(INPUT_NODES, 1, OUTPUT_NODES);
        for (b, &t) in m.b2.iter_mut().zip(target.as_slice()) {
            *b = if t == 1 { 10.0 } else { -10.0 };
        }
        m
    }

    #[test]
    fn direct_plan_for_solid_profile() {
        let w = World::new();
        let doc = w.planner(None).plan(&fig29_profile(), None).unwrap();
        assert_eq!(doc.source, DesignSource::KbDirect);
        assert_eq!(doc.design.die_type, DieType::Solid);
        let parts: Vec<_> = doc.plan.parts.iter().map(|p| p.part).collect();
        assert_eq!(parts, vec![DiePartKind::Feeder, DiePartKind::DiePlate, DiePartKind::Backer]);
        assert!(doc.plan.total_time > 0.0);
        assert!(doc.trail.iter().any(|t| t.stage == Stage::Retrieve));
    }

    #[test]
    fn memorized_case_study_goes_through_the_network() {
        let w = World::new();
        let lib = synthetic_library(1, 0, &w.codec, &w.kb, 0.0).unwrap();
        let target = encode_design(&lib.cases()[0].design, &w.codec).unwrap();
        let model = memorizer(&target);
        let doc = w.planner(Some(&lib)).plan(&case_study_profile(), Some(&model)).unwrap();
        assert_eq!(doc.source, DesignSource::NnPrediction);
        assert!(doc.diagnostics.is_empty());
        assert_eq!(doc.design.num_orifices, 1);
        assert_eq!(doc.design.extrusion_ratio, 40.0);
        assert_eq!(plan_listing(&doc.plan), case_study_listing());

        let report = evaluate(&model, &lib, &w.planner(Some(&lib))).unwrap();
        assert_eq!(report.bit_accuracy, 1.0);
        assert_eq!(report.exact_match_rate, 1.0);
        assert_eq!(report.die_type_accuracy, 1.0);
        assert_eq!(report.plan_agreement_rate, 1.0);
    }

    #[test]
    fn undecodable_output_falls_back_to_library() {
        let w = World::new();
        let lib = synthetic_library(30, 3, &w.codec, &w.kb, 0.0).unwrap();
        // Every output sits at 0.5, so every segment is fully active.
        let model = Mlp::zeros(INPUT_NODES, 4, OUTPUT_NODES);
        let doc = w.planner(Some(&lib)).plan(&case_study_profile(), Some(&model)).unwrap();
        assert_eq!(doc.source, DesignSource::KnnFallback);
        assert!(doc.diagnostics.iter().any(|d| d.segment() == Some("die_type")));
        assert_eq!(doc.matched_case.as_ref().unwrap().distance, 0);
        assert_eq!(plan_listing(&doc.plan), case_study_listing());
    }

    #[test]
    fn empty_library_falls_back_to_rules() {
        let w = World::new();
        let empty = Library::new(LibraryMetadata::for_config(&w.codec, &w.kb));
        let model = Mlp::zeros(INPUT_NODES, 4, OUTPUT_NODES);
        let doc = w.planner(Some(&empty)).plan(&fig29_profile(), Some(&model)).unwrap();
        assert_eq!(doc.source, DesignSource::KbDirect);
        assert!(!doc.diagnostics.is_empty());
    }

    #[test]
    fn plan_is_deterministic() {
        let w = World::new();
        let lib = synthetic_library(10, 3, &w.codec, &w.kb, 0.0).unwrap();
        let model = Mlp::random(INPUT_NODES, 5, OUTPUT_NODES, 0.5, 1);
        let a = serde_json::to_string(&w.planner(Some(&lib)).plan(&fig29_profile(), Some(&model)).unwrap()).unwrap();
        let b = serde_json::to_string(&w.planner(Some(&lib)).plan(&fig29_profile(), Some(&model)).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_model_evaluates() {
        let w = World::new();
        let lib = synthetic_library(10, 3, &w.codec, &w.kb, 0.0).unwrap();
        let model = Mlp::random(INPUT_NODES, 5, OUTPUT_NODES, 0.5, 1);
        let report = evaluate(&model, &lib, &w.planner(Some(&lib))).unwrap();
        assert!((0.0..=1.0).contains(&report.die_type_accuracy));
        assert_eq!(report.cases, 10);
        let empty = Library::new(lib.metadata.clone());
        assert!(evaluate(&model, &empty, &w.planner(None)).is_err());
    }

    #[test]
    fn errors_name_their_stage() {
        let w = World::new();
        let mut spec = fig29_profile();
        spec.width = -1.0;
        assert_eq!(w.planner(None).plan(&spec, None).unwrap_err().stage, Stage::Validate);
        let mut spec = fig29_profile();
        spec.wall_thickness = 30.0;
        assert_eq!(w.planner(None).plan(&spec, None).unwrap_err().stage, Stage::Encode);
        let wrong = Mlp::zeros(10, 2, OUTPUT_NODES);
        assert_eq!(w.planner(None).plan(&fig29_profile(), Some(&wrong)).unwrap_err().stage, Stage::Predict);
    }
}
