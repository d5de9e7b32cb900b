//! Reference profiles and the published hollow-die case study, shared by
//! tests, the CLI and the Python bindings.

use crate::domain::{
    DieDesign, DiePart, DiePartKind, DieType, FeatureKind, ProcessPlan, ProfileSpec, ProfileType,
};

/// Shape catalog index of the rectangular section.
pub const RECTANGULAR: usize = 5;

/// Case id under which the case study is stored in generated corpora.
pub const CASE_STUDY_ID: &str = "industrial-case-study";

/// Solid heat-sink style profile. Its perimeter is read in cm, it has no
/// external perimeter and no press or extrusion ratio is given.
pub fn fig29_profile() -> ProfileSpec {
    ProfileSpec {
        profile_type: ProfileType::Solid,
        shape_class: RECTANGULAR,
        wall_thickness: 2.3,
        width: 24.0,
        height: 15.3,
        ccd: Some(28.5),
        cross_section_area: 1.7,
        press_capacity: None,
        extrusion_ratio: None,
        perimeter: 20.32,
        external_perimeter: 0.0,
        tongue_ratio: 4.0,
    }
}

/// Hollow rectangular case-study profile.
///
/// No wall thickness is published; 2.24 mm is the thin-wall estimate
/// 2 × area / perimeter (2 × 340 mm² / 303.7 mm).
pub fn case_study_profile() -> ProfileSpec {
    ProfileSpec {
        profile_type: ProfileType::Hollow,
        shape_class: RECTANGULAR,
        wall_thickness: 2.24,
        width: 50.0,
        height: 14.7,
        ccd: None,
        cross_section_area: 3.4,
        press_capacity: None,
        extrusion_ratio: None,
        perimeter: 30.37,
        external_perimeter: 19.24,
        tongue_ratio: 1.4,
    }
}

/// Features of the case-study die, per part, in published order.
pub fn case_study_features() -> Vec<(DiePartKind, Vec<FeatureKind>)> {
    use FeatureKind::*;
    vec![
        (DiePartKind::Mandrel, vec![OpenPocketCircular, EdgeChamfer, BlindHole, TapHole, ClosedPocketSculptured]),
        (
            DiePartKind::DieCap,
            vec![OpenPocketCircular, BlindHole, CounterBore, ClosedPocketSculptured, ClosedPocketPlane, DeepHole],
        ),
    ]
}

/// The case-study die: hollow, one cavity, extrusion ratio 40. Part
/// thicknesses are the shipped 660 t die-stack values.
pub fn case_study_design() -> DieDesign {
    let thickness = |k| match k {
        DiePartKind::Mandrel => 75.0,
        _ => 55.0,
    };
    DieDesign {
        die_type: DieType::Hollow,
        num_orifices: 1,
        extrusion_ratio: 40.0,
        parts: case_study_features()
            .into_iter()
            .map(|(kind, features)| DiePart {
                kind,
                thickness: thickness(kind),
                features: features.into_iter().map(Into::into).collect(),
            })
            .collect(),
    }
}

/// Part → feature → operation labels, the shape of a printed plan table.
pub type PlanListing = Vec<(String, Vec<(String, Vec<String>)>)>;

/// Flattens the feature rows of a plan into labels.
pub fn plan_listing(plan: &ProcessPlan) -> PlanListing {
    plan.parts
        .iter()
        .map(|p| {
            let rows = p
                .features
                .iter()
                .map(|f| {
                    let ops = f.operations.iter().map(|o| o.operation.label().to_string()).collect();
                    (f.feature.kind.label().to_string(), ops)
                })
                .collect();
            (p.part.to_string(), rows)
        })
        .collect()
}

/// The published case-study plan, row by row.
pub fn case_study_listing() -> PlanListing {
    let turn_face = [
        "Rough turning",
        "Semi-finish turning",
        "Finish turning",
        "Rough facing",
        "Semi-finish facing",
        "Finish facing",
    ];
    let milling = ["Rough milling", "Semi-finish milling", "Finish milling"];
    let row = |feature: &str, ops: &[&str]| {
        (feature.to_string(), ops.iter().map(|s| s.to_string()).collect::<Vec<_>>())
    };
    vec![
        (
            "mandrel".to_string(),
            vec![
                row("Open pocket circular", &turn_face),
                row("Edge chamfer", &["Round chamfering"]),
                row("Blind hole", &["Centering", "Drilling"]),
                row("Tap", &["Tapping"]),
                row("Closed pocket sculptured", &milling),
            ],
        ),
        (
            "die_cap".to_string(),
            vec![
                row("Open pocket circular", &turn_face),
                row("Blind hole", &["Centering", "Drilling"]),
                row("Counter bore", &["Centering", "Drilling", "Counter boring"]),
                row("Closed pocket sculptured", &["EDM sparking"]),
                row("Closed pocket plane", &milling),
                row("Deep hole", &["Rough wire cutting", "Finish wire cutting"]),
            ],
        ),
    ]
}
