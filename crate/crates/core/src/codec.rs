//! Binary encoding of profiles into the 170-node input vector and of die
//! designs into (and out of) the 93-node output vector.
//!
//! The column layout and the value bins are declarative: they come from an
//! [`EncodingConfigFile`] which is checked once at load. Columns are 1-based
//! everywhere they are exposed.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::domain::{
    parts_for_die_type, DieDesign, DiePartKind, DieType, PressCapacity, ProfileSpec, ProfileType,
    Violation,
};

pub const INPUT_NODES: usize = 170;
pub const OUTPUT_NODES: usize = 93;
pub const SHAPE_CATALOG_SIZE: usize = 20;

const SHIPPED_CONFIG: &str = include_str!("../data/codec.json");

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error("value {value} of segment `{segment}` falls outside every configured bin")]
    BinOutOfRange { segment: String, value: f64 },
    #[error("shape class {0} is not in the shape catalog")]
    UnknownShape(usize),
    #[error("design violates its invariants: {0:?}")]
    InvalidDesign(Vec<Violation>),
    #[error("{0}")]
    Undecodable(OutputDiagnostic),
    #[error("invalid encoding config: {}", join(.0))]
    InvalidConfig(Vec<LayoutDiagnostic>),
    #[error("reading encoding config: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing encoding config: {0}")]
    Parse(#[from] serde_json::Error),
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

// ---------------------------------------------------------------------------
// Bins
// ---------------------------------------------------------------------------

/// Half-open interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value < self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutOfRange;

/// Index of the interval holding `value`. `bins` must be strictly increasing.
pub fn bin_lookup(value: f64, bins: &[Interval]) -> Result<usize, OutOfRange> {
    let i = bins.partition_point(|b| b.hi <= value);
    match bins.get(i) {
        Some(b) if b.contains(value) => Ok(i),
        _ => Err(OutOfRange),
    }
}

/// How a bin decodes back to a scalar.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representative {
    #[default]
    Midpoint,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformBins {
    pub start: f64,
    pub width: f64,
}

/// Bin table as written in the config: either uniform bins (one per node of
/// the segment) or an explicit interval list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<UniformBins>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub representative: Representative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinTable {
    pub intervals: Vec<Interval>,
    pub representative: Representative,
}

impl BinTable {
    pub fn lookup(&self, value: f64) -> Result<usize, OutOfRange> {
        bin_lookup(value, &self.intervals)
    }

    pub fn representative(&self, index: usize) -> f64 {
        let b = self.intervals[index];
        match self.representative {
            Representative::Midpoint => b.midpoint(),
            Representative::Lower => b.lo,
        }
    }

    pub fn representatives(&self) -> Vec<f64> {
        (0..self.intervals.len()).map(|i| self.representative(i)).collect()
    }

    pub fn max_width(&self) -> f64 {
        self.intervals.iter().map(Interval::width).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub name: String,
    /// First column, 1-based.
    pub start: usize,
    pub length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<BinSpec>,
}

/// The encoding config exactly as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingConfigFile {
    pub codec_version: String,
    pub shape_catalog: Vec<String>,
    pub input_segments: Vec<SegmentSpec>,
    pub output_segments: Vec<SegmentSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Input,
    Output,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Input => "input",
            Layer::Output => "output",
        })
    }
}

/// A specific defect found while checking an encoding config.
#[derive(Debug, Clone, PartialEq)]
pub enum LayoutDiagnostic {
    UnknownSegment { layer: Layer, name: String },
    DuplicateSegment { layer: Layer, name: String },
    MissingSegment { layer: Layer, name: String },
    EmptySegment { layer: Layer, name: String },
    Gap { layer: Layer, name: String, expected_start: usize, start: usize },
    Overlap { layer: Layer, name: String, expected_start: usize, start: usize },
    NodeTotal { layer: Layer, expected: usize, found: usize },
    CategoricalLength { layer: Layer, name: String, expected: usize, found: usize },
    MissingBins { layer: Layer, name: String },
    UnexpectedBins { layer: Layer, name: String },
    AmbiguousBins { layer: Layer, name: String },
    BinCount { layer: Layer, name: String, nodes: usize, bins: usize },
    BinOrder { layer: Layer, name: String, index: usize },
    ShapeCatalogSize { found: usize },
    DuplicateShape { name: String },
}

impl fmt::Display for LayoutDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use LayoutDiagnostic::*;
        match self {
            UnknownSegment { layer, name } => write!(f, "{layer} segment `{name}` is not part of the layout"),
            DuplicateSegment { layer, name } => write!(f, "{layer} segment `{name}` is declared twice"),
            MissingSegment { layer, name } => write!(f, "{layer} segment `{name}` is missing"),
            EmptySegment { layer, name } => write!(f, "{layer} segment `{name}` has no nodes"),
            Gap { layer, name, expected_start, start } => write!(
                f,
                "{layer} segment `{name}` starts at column {start}, leaving a gap after column {}",
                expected_start - 1
            ),
            Overlap { layer, name, expected_start, start } => write!(
                f,
                "{layer} segment `{name}` starts at column {start}, overlapping columns up to {}",
                expected_start - 1
            ),
            NodeTotal { layer, expected, found } => {
                write!(f, "{layer} segments cover {found} nodes, expected {expected}")
            }
            CategoricalLength { layer, name, expected, found } => {
                write!(f, "{layer} segment `{name}` has {found} nodes, expected {expected}")
            }
            MissingBins { layer, name } => write!(f, "{layer} segment `{name}` needs a bin table"),
            UnexpectedBins { layer, name } => {
                write!(f, "{layer} segment `{name}` is categorical and takes no bins")
            }
            AmbiguousBins { layer, name } => write!(
                f,
                "{layer} segment `{name}` must give exactly one of `uniform` or `intervals`"
            ),
            BinCount { layer, name, nodes, bins } => {
                write!(f, "{layer} segment `{name}` has {nodes} nodes but {bins} bins")
            }
            BinOrder { layer, name, index } => write!(
                f,
                "{layer} segment `{name}` bin {index} is empty or not strictly after its predecessor"
            ),
            ShapeCatalogSize { found } => {
                write!(f, "shape catalog has {found} entries, expected {SHAPE_CATALOG_SIZE}")
            }
            DuplicateShape { name } => write!(f, "shape `{name}` appears twice in the catalog"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    /// One node per category; the node count is fixed.
    Categorical(usize),
    Numeric,
}

const INPUT_LAYOUT: [(&str, Slot); 12] = [
    ("profile_type", Slot::Categorical(3)),
    ("shape", Slot::Categorical(SHAPE_CATALOG_SIZE)),
    ("thickness", Slot::Numeric),
    ("width", Slot::Numeric),
    ("height", Slot::Numeric),
    ("ccd", Slot::Numeric),
    ("area", Slot::Numeric),
    ("press", Slot::Categorical(3)),
    ("extrusion_ratio", Slot::Numeric),
    ("perimeter", Slot::Numeric),
    ("external_perimeter", Slot::Numeric),
    ("tongue_ratio", Slot::Numeric),
];

const OUTPUT_LAYOUT: [(&str, Slot); 10] = [
    ("die_type", Slot::Categorical(3)),
    ("num_orifices", Slot::Numeric),
    ("extrusion_ratio", Slot::Numeric),
    ("thickness_feeder", Slot::Numeric),
    ("thickness_die", Slot::Numeric),
    ("thickness_back", Slot::Numeric),
    ("thickness_mandrel", Slot::Numeric),
    ("thickness_diecap", Slot::Numeric),
    ("feature_groups", Slot::Categorical(5)),
    ("process_routes", Slot::Categorical(5)),
];

/// Positions of the input segments in [`EncodingConfig::input`].
pub mod input {
    pub const PROFILE_TYPE: usize = 0;
    pub const SHAPE: usize = 1;
    pub const THICKNESS: usize = 2;
    pub const WIDTH: usize = 3;
    pub const HEIGHT: usize = 4;
    pub const CCD: usize = 5;
    pub const AREA: usize = 6;
    pub const PRESS: usize = 7;
    pub const EXTRUSION_RATIO: usize = 8;
    pub const PERIMETER: usize = 9;
    pub const EXTERNAL_PERIMETER: usize = 10;
    pub const TONGUE_RATIO: usize = 11;
}

/// Positions of the output segments in [`EncodingConfig::output`].
pub mod output {
    pub const DIE_TYPE: usize = 0;
    pub const NUM_ORIFICES: usize = 1;
    pub const EXTRUSION_RATIO: usize = 2;
    /// First of the five per-part thickness segments, in part order.
    pub const THICKNESS_FIRST: usize = 3;
    pub const FEATURE_GROUPS: usize = 8;
    pub const PROCESS_ROUTES: usize = 9;
}

/// A checked segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub name: String,
    /// First column, 1-based.
    pub start: usize,
    pub length: usize,
    pub bins: Option<BinTable>,
}

impl Segment {
    /// 0-based storage range of the segment.
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start - 1..self.start - 1 + self.length
    }

    /// 1-based column of the segment's node `index`.
    pub fn column(&self, index: usize) -> usize {
        self.start + index
    }

    pub fn bins(&self) -> &BinTable {
        self.bins.as_ref().expect("numeric segment carries bins")
    }
}

/// A loaded, checked encoding config. Read-only after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingConfig {
    pub codec_version: String,
    pub shape_catalog: Vec<String>,
    /// Input segments in canonical layout order.
    pub input: Vec<Segment>,
    /// Output segments in canonical layout order.
    pub output: Vec<Segment>,
    file: EncodingConfigFile,
}

impl EncodingConfig {
    /// The config shipped with the crate.
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED_CONFIG).expect("shipped codec config is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, CodecError> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, CodecError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_file(file: EncodingConfigFile) -> Result<Self, CodecError> {
        let mut diags = Vec::new();
        if file.shape_catalog.len() != SHAPE_CATALOG_SIZE {
            diags.push(LayoutDiagnostic::ShapeCatalogSize { found: file.shape_catalog.len() });
        }
        let mut seen = BTreeSet::new();
        for shape in &file.shape_catalog {
            if !seen.insert(shape.as_str()) {
                diags.push(LayoutDiagnostic::DuplicateShape { name: shape.clone() });
            }
        }
        let input = check_layer(Layer::Input, &file.input_segments, &INPUT_LAYOUT, INPUT_NODES, &mut diags);
        let output =
            check_layer(Layer::Output, &file.output_segments, &OUTPUT_LAYOUT, OUTPUT_NODES, &mut diags);
        if !diags.is_empty() {
            return Err(CodecError::InvalidConfig(diags));
        }
        Ok(Self {
            codec_version: file.codec_version.clone(),
            shape_catalog: file.shape_catalog.clone(),
            input: input.expect("no diagnostics"),
            output: output.expect("no diagnostics"),
            file,
        })
    }

    pub fn file(&self) -> &EncodingConfigFile {
        &self.file
    }

    pub fn thickness_segment(&self, part: DiePartKind) -> &Segment {
        &self.output[output::THICKNESS_FIRST + part.index()]
    }
}

fn check_layer(
    layer: Layer,
    specs: &[SegmentSpec],
    layout: &[(&str, Slot)],
    total: usize,
    diags: &mut Vec<LayoutDiagnostic>,
) -> Option<Vec<Segment>> {
    let before = diags.len();
    let mut slots: Vec<Option<Segment>> = vec![None; layout.len()];

    for spec in specs {
        let Some(pos) = layout.iter().position(|(n, _)| *n == spec.name) else {
            diags.push(LayoutDiagnostic::UnknownSegment { layer, name: spec.name.clone() });
            continue;
        };
        if slots[pos].is_some() {
            diags.push(LayoutDiagnostic::DuplicateSegment { layer, name: spec.name.clone() });
            continue;
        }
        if spec.length == 0 {
            diags.push(LayoutDiagnostic::EmptySegment { layer, name: spec.name.clone() });
        }
        let bins = match layout[pos].1 {
            Slot::Categorical(expected) => {
                if spec.length != expected {
                    diags.push(LayoutDiagnostic::CategoricalLength {
                        layer,
                        name: spec.name.clone(),
                        expected,
                        found: spec.length,
                    });
                }
                if spec.bins.is_some() {
                    diags.push(LayoutDiagnostic::UnexpectedBins { layer, name: spec.name.clone() });
                }
                None
            }
            Slot::Numeric => check_bins(layer, spec, diags),
        };
        slots[pos] = Some(Segment { name: spec.name.clone(), start: spec.start, length: spec.length, bins });
    }

    for ((name, _), slot) in layout.iter().zip(&slots) {
        if slot.is_none() {
            diags.push(LayoutDiagnostic::MissingSegment { layer, name: name.to_string() });
        }
    }

    // Contiguity: sorted by start, every segment begins where the last ended.
    let mut by_start: Vec<&SegmentSpec> = specs.iter().collect();
    by_start.sort_by_key(|s| s.start);
    let mut expected_start = 1;
    for spec in by_start {
        if spec.start > expected_start {
            diags.push(LayoutDiagnostic::Gap { layer, name: spec.name.clone(), expected_start, start: spec.start });
        } else if spec.start < expected_start {
            diags.push(LayoutDiagnostic::Overlap {
                layer,
                name: spec.name.clone(),
                expected_start,
                start: spec.start,
            });
        }
        expected_start = expected_start.max(spec.start + spec.length);
    }
    let found: usize = specs.iter().map(|s| s.length).sum();
    if found != total || expected_start - 1 != total {
        diags.push(LayoutDiagnostic::NodeTotal { layer, expected: total, found });
    }

    if diags.len() > before {
        return None;
    }
    slots.into_iter().collect()
}

fn check_bins(layer: Layer, spec: &SegmentSpec, diags: &mut Vec<LayoutDiagnostic>) -> Option<BinTable> {
    let name = || spec.name.clone();
    let Some(bins) = &spec.bins else {
        diags.push(LayoutDiagnostic::MissingBins { layer, name: name() });
        return None;
    };
    let intervals: Vec<Interval> = match (&bins.uniform, &bins.intervals) {
        (Some(u), None) => (0..spec.length)
            .map(|i| Interval::new(u.start + i as f64 * u.width, u.start + (i + 1) as f64 * u.width))
            .collect(),
        (None, Some(list)) => list.iter().map(|[lo, hi]| Interval::new(*lo, *hi)).collect(),
        _ => {
            diags.push(LayoutDiagnostic::AmbiguousBins { layer, name: name() });
            return None;
        }
    };
    if intervals.len() != spec.length {
        diags.push(LayoutDiagnostic::BinCount { layer, name: name(), nodes: spec.length, bins: intervals.len() });
    }
    for (i, b) in intervals.iter().enumerate() {
        let after_previous = i == 0 || intervals[i - 1].hi <= b.lo;
        if !(b.lo < b.hi) || !after_previous {
            diags.push(LayoutDiagnostic::BinOrder { layer, name: name(), index: i });
        }
    }
    Some(BinTable { intervals, representative: bins.representative })
}

// ---------------------------------------------------------------------------
// Vectors
// ---------------------------------------------------------------------------

/// Fixed-length 0/1 vector. Serialized as a JSON array of integers.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector<const N: usize>(Vec<u8>);

pub type InputVector = BitVector<INPUT_NODES>;
pub type OutputVector = BitVector<OUTPUT_NODES>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VectorError {
    #[error("expected {expected} values, got {found}")]
    Length { expected: usize, found: usize },
    #[error("column {column} holds {value}, expected 0 or 1")]
    NotBinary { column: usize, value: u8 },
}

impl<const N: usize> BitVector<N> {
    pub const LEN: usize = N;

    pub fn zeros() -> Self {
        Self(vec![0; N])
    }

    /// Value at 1-based `column`.
    pub fn get(&self, column: usize) -> u8 {
        self.0[column - 1]
    }

    /// Sets the 1-based `column` to 1.
    pub fn set(&mut self, column: usize) {
        self.0[column - 1] = 1;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| f64::from(b)).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    /// 1-based columns holding a 1.
    pub fn active_columns(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i + 1).collect()
    }

    pub fn hamming(&self, other: &Self) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// Active node indices (0-based within the segment).
    pub fn active_in(&self, segment: &Segment) -> Vec<usize> {
        self.0[segment.range()].iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect()
    }
}

impl<const N: usize> TryFrom<Vec<u8>> for BitVector<N> {
    type Error = VectorError;

    fn try_from(values: Vec<u8>) -> Result<Self, Self::Error> {
        if values.len() != N {
            return Err(VectorError::Length { expected: N, found: values.len() });
        }
        if let Some((i, &value)) = values.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(VectorError::NotBinary { column: i + 1, value });
        }
        Ok(Self(values))
    }
}

impl<const N: usize> fmt::Debug for BitVector<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector<{N}>{:?}", self.active_columns())
    }
}

impl<const N: usize> Serialize for BitVector<N> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de, const N: usize> Deserialize<'de> for BitVector<N> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = Vec::<u8>::deserialize(deserializer)?;
        Self::try_from(values).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

fn set_bin<const N: usize>(vec: &mut BitVector<N>, seg: &Segment, value: f64) -> Result<(), CodecError> {
    let index = seg
        .bins()
        .lookup(value)
        .map_err(|_| CodecError::BinOutOfRange { segment: seg.name.clone(), value })?;
    vec.set(seg.column(index));
    Ok(())
}

fn profile_type_index(t: ProfileType) -> usize {
    t.index()
}

fn press_index(p: PressCapacity) -> usize {
    p.index()
}

/// Encodes a profile into the input vector: one active node per present
/// attribute, all-zero segments for absent ones.
pub fn encode_profile(spec: &ProfileSpec, cfg: &EncodingConfig) -> Result<InputVector, CodecError> {
    use input::*;
    let seg = |i: usize| &cfg.input[i];
    let mut v = InputVector::zeros();

    v.set(seg(PROFILE_TYPE).column(profile_type_index(spec.profile_type)));
    if spec.shape_class >= cfg.shape_catalog.len() {
        return Err(CodecError::UnknownShape(spec.shape_class));
    }
    v.set(seg(SHAPE).column(spec.shape_class));
    set_bin(&mut v, seg(THICKNESS), spec.wall_thickness)?;
    set_bin(&mut v, seg(WIDTH), spec.width)?;
    set_bin(&mut v, seg(HEIGHT), spec.height)?;
    if let Some(ccd) = spec.ccd {
        set_bin(&mut v, seg(CCD), ccd)?;
    }
    set_bin(&mut v, seg(AREA), spec.cross_section_area)?;
    if let Some(press) = spec.press_capacity {
        v.set(seg(PRESS).column(press_index(press)));
    }
    if let Some(er) = spec.extrusion_ratio {
        set_bin(&mut v, seg(EXTRUSION_RATIO), er)?;
    }
    set_bin(&mut v, seg(PERIMETER), spec.perimeter)?;
    if spec.external_perimeter > 0.0 {
        set_bin(&mut v, seg(EXTERNAL_PERIMETER), spec.external_perimeter)?;
    }
    set_bin(&mut v, seg(TONGUE_RATIO), spec.tongue_ratio)?;
    Ok(v)
}

/// Encodes a die design into the output vector.
pub fn encode_design(design: &DieDesign, cfg: &EncodingConfig) -> Result<OutputVector, CodecError> {
    use output::*;
    let report = design.validate();
    if !report.is_valid() {
        return Err(CodecError::InvalidDesign(report.violations));
    }
    let mut v = OutputVector::zeros();
    v.set(cfg.output[DIE_TYPE].column(design.die_type.index()));
    set_bin(&mut v, &cfg.output[NUM_ORIFICES], f64::from(design.num_orifices))?;
    set_bin(&mut v, &cfg.output[EXTRUSION_RATIO], design.extrusion_ratio)?;
    for part in &design.parts {
        set_bin(&mut v, cfg.thickness_segment(part.kind), part.thickness)?;
        v.set(cfg.output[FEATURE_GROUPS].column(part.kind.index()));
        v.set(cfg.output[PROCESS_ROUTES].column(part.kind.index()));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

/// Why an output vector cannot be decoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputDiagnostic {
    /// A segment that needs exactly one active node has `active` of them.
    AmbiguousSegment { segment: String, active: usize },
    /// Part segments contradict the decoded die type.
    InconsistentParts { die_type: DieType, part: DiePartKind, detail: String },
}

impl fmt::Display for OutputDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputDiagnostic::AmbiguousSegment { segment, active } => {
                write!(f, "segment `{segment}` has {active} active nodes, expected exactly one")
            }
            OutputDiagnostic::InconsistentParts { die_type, part, detail } => {
                write!(f, "part `{part}` contradicts die type `{die_type}`: {detail}")
            }
        }
    }
}

impl OutputDiagnostic {
    pub fn segment(&self) -> Option<&str> {
        match self {
            OutputDiagnostic::AmbiguousSegment { segment, .. } => Some(segment),
            OutputDiagnostic::InconsistentParts { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedPart {
    pub kind: DiePartKind,
    /// Bin representative, mm.
    pub thickness: f64,
}

/// Die design skeleton recovered from an output vector. Features are not
/// encoded individually; the feature-group and route nodes only say which
/// parts carry their standard feature set and route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedDesign {
    pub die_type: DieType,
    pub num_orifices: u32,
    pub extrusion_ratio: f64,
    pub parts: Vec<DecodedPart>,
    pub feature_parts: Vec<DiePartKind>,
    pub route_parts: Vec<DiePartKind>,
}

fn one_hot(vec: &OutputVector, seg: &Segment, diags: &mut Vec<OutputDiagnostic>) -> Option<usize> {
    let active = vec.active_in(seg);
    if active.len() == 1 {
        Some(active[0])
    } else {
        diags.push(OutputDiagnostic::AmbiguousSegment { segment: seg.name.clone(), active: active.len() });
        None
    }
}

/// Lists every violated output-vector invariant; empty iff decodable.
pub fn validate_output(vec: &OutputVector, cfg: &EncodingConfig) -> Vec<OutputDiagnostic> {
    match decode_inner(vec, cfg) {
        Ok(_) => Vec::new(),
        Err(diags) => diags,
    }
}

/// Decodes an output vector back to a design skeleton.
pub fn decode_output(vec: &OutputVector, cfg: &EncodingConfig) -> Result<DecodedDesign, OutputDiagnostic> {
    decode_inner(vec, cfg).map_err(|mut d| d.remove(0))
}

fn decode_inner(vec: &OutputVector, cfg: &EncodingConfig) -> Result<DecodedDesign, Vec<OutputDiagnostic>> {
    use output::*;
    let mut diags = Vec::new();
    let die_type = one_hot(vec, &cfg.output[DIE_TYPE], &mut diags).map(|i| DieType::ALL[i]);
    let orifices = one_hot(vec, &cfg.output[NUM_ORIFICES], &mut diags);
    let ratio = one_hot(vec, &cfg.output[EXTRUSION_RATIO], &mut diags);

    let features = &cfg.output[FEATURE_GROUPS];
    let routes = &cfg.output[PROCESS_ROUTES];
    let mut parts = Vec::new();
    for &kind in DiePartKind::ALL {
        let seg = cfg.thickness_segment(kind);
        let thickness_nodes = vec.active_in(seg);
        let feature_bit = vec.get(features.column(kind.index())) == 1;
        let route_bit = vec.get(routes.column(kind.index())) == 1;
        let Some(die_type) = die_type else { continue };
        if parts_for_die_type(die_type).contains(&kind) {
            let mut missing = Vec::new();
            if !feature_bit {
                missing.push("feature group");
            }
            if !route_bit {
                missing.push("process route");
            }
            if !missing.is_empty() {
                diags.push(OutputDiagnostic::InconsistentParts {
                    die_type,
                    part: kind,
                    detail: format!("required {} node inactive", missing.join(" and ")),
                });
            }
            if thickness_nodes.len() == 1 {
                parts.push(DecodedPart { kind, thickness: seg.bins().representative(thickness_nodes[0]) });
            } else {
                diags.push(OutputDiagnostic::AmbiguousSegment {
                    segment: seg.name.clone(),
                    active: thickness_nodes.len(),
                });
            }
        } else {
            let mut present = Vec::new();
            if !thickness_nodes.is_empty() {
                present.push("thickness");
            }
            if feature_bit {
                present.push("feature group");
            }
            if route_bit {
                present.push("process route");
            }
            if !present.is_empty() {
                diags.push(OutputDiagnostic::InconsistentParts {
                    die_type,
                    part: kind,
                    detail: format!("{} node set for an absent part", present.join(", ")),
                });
            }
        }
    }

    if !diags.is_empty() {
        return Err(diags);
    }
    let die_type = die_type.expect("checked");
    let kinds: Vec<DiePartKind> = parts.iter().map(|p| p.kind).collect();
    Ok(DecodedDesign {
        die_type,
        num_orifices: cfg.output[NUM_ORIFICES].bins().representative(orifices.expect("checked")).round() as u32,
        extrusion_ratio: cfg.output[EXTRUSION_RATIO].bins().representative(ratio.expect("checked")),
        parts,
        feature_parts: kinds.clone(),
        route_parts: kinds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DiePart, FeatureKind};
    use crate::fixtures;

    fn thickness_bins() -> Vec<Interval> {
        (0..10).map(|i| Interval::new(i as f64 * 0.5, (i + 1) as f64 * 0.5)).collect()
    }

    #[test]
    fn bin_lookup_interior_boundary_and_end() {
        let bins = thickness_bins();
        assert_eq!(bin_lookup(2.3, &bins), Ok(4));
        assert_eq!(bin_lookup(0.5, &bins), Ok(1));
        assert_eq!(bin_lookup(0.0, &bins), Ok(0));
        assert_eq!(bin_lookup(5.0, &bins), Err(OutOfRange));
        assert_eq!(bin_lookup(-0.1, &bins), Err(OutOfRange));
        assert_eq!(bin_lookup(f64::NAN, &bins), Err(OutOfRange));
    }

    #[test]
    fn bin_lookup_respects_gaps() {
        let bins = vec![Interval::new(0.0, 1.0), Interval::new(2.0, 3.0)];
        assert_eq!(bin_lookup(1.5, &bins), Err(OutOfRange));
        assert_eq!(bin_lookup(2.0, &bins), Ok(1));
    }

    #[test]
    fn shipped_config_layout() {
        let cfg = EncodingConfig::shipped();
        assert_eq!(cfg.input.iter().map(|s| s.length).sum::<usize>(), INPUT_NODES);
        assert_eq!(cfg.output.iter().map(|s| s.length).sum::<usize>(), OUTPUT_NODES);
        assert_eq!(cfg.input[input::THICKNESS].start, 24);
        assert_eq!(cfg.input[input::TONGUE_RATIO].start, 159);
        assert_eq!(cfg.output[output::FEATURE_GROUPS].start, 84);
        assert_eq!(cfg.output[output::PROCESS_ROUTES].start, 89);
        assert_eq!(cfg.thickness_segment(DiePartKind::DieCap).start, 74);
        let thickness = cfg.input[input::THICKNESS].bins();
        assert!(thickness.intervals.iter().all(|b| (b.width() - 0.5).abs() < 1e-12));
    }

    #[test]
    fn fig29_profile_encodes_solid_with_nine_bits() {
        let cfg = EncodingConfig::shipped();
        let v = encode_profile(&fixtures::fig29_profile(), &cfg).unwrap();
        assert_eq!(v.get(1), 1);
        assert!((2..=8).all(|c| v.get(c) == 0));
        assert_eq!(v.count_ones(), 9);
        // 2.3 mm lands in [2.0, 2.5), the fifth thickness node.
        assert_eq!(v.get(24 + 4), 1);
    }

    #[test]
    fn case_study_profile_encodes_hollow_with_external_perimeter() {
        let cfg = EncodingConfig::shipped();
        let v = encode_profile(&fixtures::case_study_profile(), &cfg).unwrap();
        assert_eq!(v.get(3), 1);
        let ext = &cfg.input[input::EXTERNAL_PERIMETER];
        assert_eq!(v.active_in(ext).len(), 1);
        // 19.24 cm in 5 cm bins starting at 0.
        assert_eq!(v.active_in(ext), vec![3]);
    }

    #[test]
    fn thick_wall_is_out_of_range() {
        let cfg = EncodingConfig::shipped();
        let spec = ProfileSpec { wall_thickness: 99.0, ..fixtures::fig29_profile() };
        match encode_profile(&spec, &cfg) {
            Err(CodecError::BinOutOfRange { segment, value }) => {
                assert_eq!(segment, "thickness");
                assert_eq!(value, 99.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_shape_is_rejected() {
        let cfg = EncodingConfig::shipped();
        let spec = ProfileSpec { shape_class: 20, ..fixtures::fig29_profile() };
        assert!(matches!(encode_profile(&spec, &cfg), Err(CodecError::UnknownShape(20))));
    }

    #[test]
    fn case_study_design_encoding() {
        let cfg = EncodingConfig::shipped();
        let v = encode_design(&fixtures::case_study_design(), &cfg).unwrap();
        assert_eq!(v.get(3), 1);
        assert_eq!(v.get(4), 1);
        let er = &cfg.output[output::EXTRUSION_RATIO];
        let er_cols: Vec<usize> = v.active_in(er).iter().map(|&i| er.column(i)).collect();
        let expected = er.column(er.bins().lookup(40.0).unwrap());
        assert_eq!(er_cols, vec![expected]);
        assert!(er.bins().intervals[expected - er.start].contains(40.0));
        for c in [87, 88, 92, 93] {
            assert_eq!(v.get(c), 1, "column {c}");
        }
        for c in [84, 85, 86, 89, 90, 91] {
            assert_eq!(v.get(c), 0, "column {c}");
        }
        assert!((34..=63).all(|c| v.get(c) == 0));
    }

    fn solid_design() -> DieDesign {
        let part = |kind, thickness| DiePart { kind, thickness, features: vec![FeatureKind::OpenPocketPlane.into()] };
        DieDesign {
            die_type: DieType::Solid,
            num_orifices: 1,
            extrusion_ratio: 60.0,
            parts: vec![
                part(DiePartKind::Feeder, 35.0),
                part(DiePartKind::DiePlate, 45.0),
                part(DiePartKind::Backer, 55.0),
            ],
        }
    }

    #[test]
    fn solid_design_sets_first_three_parts() {
        let cfg = EncodingConfig::shipped();
        let v = encode_design(&solid_design(), &cfg).unwrap();
        assert_eq!(v.get(1), 1);
        for c in [84, 85, 86, 89, 90, 91] {
            assert_eq!(v.get(c), 1);
        }
        assert!((64..=83).all(|c| v.get(c) == 0));
        let decoded = decode_output(&v, &cfg).unwrap();
        assert_eq!(decoded.die_type, DieType::Solid);
        assert_eq!(decoded.num_orifices, 1);
        assert_eq!(decoded.feature_parts, vec![DiePartKind::Feeder, DiePartKind::DiePlate, DiePartKind::Backer]);
        assert_eq!(decoded.extrusion_ratio, 60.0);
        assert_eq!(decoded.parts[1].thickness, 45.0);
    }

    #[test]
    fn too_many_orifices() {
        let cfg = EncodingConfig::shipped();
        let design = DieDesign { num_orifices: 20, ..solid_design() };
        match encode_design(&design, &cfg) {
            Err(CodecError::BinOutOfRange { segment, value }) => {
                assert_eq!(segment, "num_orifices");
                assert_eq!(value, 20.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decode_case_study_round_trip() {
        let cfg = EncodingConfig::shipped();
        let v = encode_design(&fixtures::case_study_design(), &cfg).unwrap();
        let d = decode_output(&v, &cfg).unwrap();
        assert_eq!(d.die_type, DieType::Hollow);
        assert_eq!(d.num_orifices, 1);
        assert_eq!(d.feature_parts, vec![DiePartKind::Mandrel, DiePartKind::DieCap]);
        assert_eq!(d.route_parts, d.feature_parts);
        assert!((d.extrusion_ratio - 40.0).abs() <= 10.0);
    }

    #[test]
    fn all_zero_vector_is_ambiguous() {
        let cfg = EncodingConfig::shipped();
        let err = decode_output(&OutputVector::zeros(), &cfg).unwrap_err();
        assert_eq!(err, OutputDiagnostic::AmbiguousSegment { segment: "die_type".into(), active: 0 });
        let all = validate_output(&OutputVector::zeros(), &cfg);
        assert_eq!(all[0].segment(), Some("die_type"));
    }

    #[test]
    fn two_die_types_are_ambiguous() {
        let cfg = EncodingConfig::shipped();
        let mut v = encode_design(&fixtures::case_study_design(), &cfg).unwrap();
        v.set(1);
        let err = decode_output(&v, &cfg).unwrap_err();
        assert_eq!(err, OutputDiagnostic::AmbiguousSegment { segment: "die_type".into(), active: 2 });
    }

    #[test]
    fn well_formed_vector_validates_clean() {
        let cfg = EncodingConfig::shipped();
        let v = encode_design(&fixtures::case_study_design(), &cfg).unwrap();
        assert!(validate_output(&v, &cfg).is_empty());
    }

    #[test]
    fn feeder_route_on_hollow_die_is_inconsistent() {
        let cfg = EncodingConfig::shipped();
        let mut v = encode_design(&fixtures::case_study_design(), &cfg).unwrap();
        v.set(89);
        let diags = validate_output(&v, &cfg);
        assert_eq!(diags.len(), 1);
        assert!(matches!(
            &diags[0],
            OutputDiagnostic::InconsistentParts { part: DiePartKind::Feeder, die_type: DieType::Hollow, .. }
        ));
    }

    #[test]
    fn vector_json_shape() {
        let v = OutputVector::zeros();
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json.matches(',').count(), 92);
        assert!(serde_json::from_str::<OutputVector>("[0,1]").is_err());
        let mut bad = vec![0u8; 93];
        bad[5] = 2;
        assert_eq!(
            OutputVector::try_from(bad).unwrap_err(),
            VectorError::NotBinary { column: 6, value: 2 }
        );
    }
}
