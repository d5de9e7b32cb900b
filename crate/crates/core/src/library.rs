//! Case library: stored die design cases, Hamming nearest-neighbour
//! retrieval, the synthetic corpus generator and the training set builder.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{self, encode_design, encode_profile, CodecError, EncodingConfig, InputVector, OutputVector};
use crate::domain::{validate_profile, CaseProvenance, CaseRecord, PressCapacity, ProfileSpec, ProfileType};
use crate::fixtures::{case_study_design, case_study_profile, CASE_STUDY_ID};
use crate::kb::KnowledgeBase;
use crate::nn::Sample;

/// File name of the library inside a cases directory.
pub const LIBRARY_FILE: &str = "library.json";

#[derive(Debug, thiserror::Error)]
pub enum LibraryError {
    #[error("library I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("library schema: {0}")]
    SchemaMismatch(String),
    #[error("library was built with codec {found}, active codec is {expected}")]
    VersionMismatch { expected: String, found: String },
    #[error("library is empty")]
    EmptyLibrary,
    #[error("k must be >= 1")]
    InvalidK,
    #[error("case {case_id}: {source}")]
    Encode { case_id: String, source: CodecError },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryMetadata {
    pub codec_version: String,
    pub kb_fingerprint: String,
}

impl LibraryMetadata {
    pub fn for_config(cfg: &EncodingConfig, kb: &KnowledgeBase) -> Self {
        Self { codec_version: cfg.codec_version.clone(), kb_fingerprint: kb.fingerprint().to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryFile {
    pub metadata: LibraryMetadata,
    pub cases: Vec<CaseRecord>,
}

/// Ordered, id-indexed collection of cases.
#[derive(Debug, Clone, PartialEq)]
pub struct Library {
    pub metadata: LibraryMetadata,
    cases: Vec<CaseRecord>,
    index: BTreeMap<String, usize>,
}

fn check_record(record: &CaseRecord, kb: Option<&KnowledgeBase>) -> Result<(), LibraryError> {
    let id = &record.case_id;
    let bad = |what: String| Err(LibraryError::SchemaMismatch(format!("case {id}: {what}")));
    let profile = validate_profile(&record.profile);
    if !profile.is_valid() {
        return bad(format!("invalid profile {:?}", profile.violations));
    }
    let design = record.design.validate();
    if !design.is_valid() {
        return bad(format!("invalid design {:?}", design.violations));
    }
    if let Some(kb) = kb {
        let part = record.plan.parts.first().map(|p| p.part);
        let order = part.map(|p| kb.standard_route(p)).unwrap_or(&[]);
        let plan = record.plan.validate_against(&record.design, order);
        if !plan.is_valid() {
            return bad(format!("invalid plan {:?}", plan.violations));
        }
    }
    Ok(())
}

impl Library {
    pub fn new(metadata: LibraryMetadata) -> Self {
        Self { metadata, cases: Vec::new(), index: BTreeMap::new() }
    }

    /// Appends a case after validating it.
    pub fn add(&mut self, record: CaseRecord) -> Result<(), LibraryError> {
        if self.index.contains_key(&record.case_id) {
            return Err(LibraryError::SchemaMismatch(format!("duplicate case_id {}", record.case_id)));
        }
        check_record(&record, None)?;
        self.index.insert(record.case_id.clone(), self.cases.len());
        self.cases.push(record);
        Ok(())
    }

    pub fn from_cases(metadata: LibraryMetadata, cases: Vec<CaseRecord>) -> Result<Self, LibraryError> {
        let mut lib = Self::new(metadata);
        for case in cases {
            lib.add(case)?;
        }
        Ok(lib)
    }

    pub fn cases(&self) -> &[CaseRecord] {
        &self.cases
    }

    pub fn get(&self, case_id: &str) -> Option<&CaseRecord> {
        self.index.get(case_id).map(|&i| &self.cases[i])
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn to_file(&self) -> LibraryFile {
        LibraryFile { metadata: self.metadata.clone(), cases: self.cases.clone() }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_file()).expect("library serializes");
        text.push('\n');
        text
    }

    /// Parses and validates a library against the active codec.
    pub fn from_json(text: &str, cfg: &EncodingConfig) -> Result<Self, LibraryError> {
        let file: LibraryFile =
            serde_json::from_str(text).map_err(|e| LibraryError::SchemaMismatch(e.to_string()))?;
        if file.metadata.codec_version != cfg.codec_version {
            return Err(LibraryError::VersionMismatch {
                expected: cfg.codec_version.clone(),
                found: file.metadata.codec_version,
            });
        }
        Self::from_cases(file.metadata, file.cases)
    }
}

/// `path` itself when it is a file, else `path/library.json`.
pub fn library_path(path: impl AsRef<Path>) -> PathBuf {
    let path = path.as_ref();
    if path.is_file() {
        path.to_path_buf()
    } else {
        path.join(LIBRARY_FILE)
    }
}

pub fn save_library(lib: &Library, path: impl AsRef<Path>) -> Result<(), LibraryError> {
    std::fs::write(path, lib.to_json())?;
    Ok(())
}

pub fn load_library(path: impl AsRef<Path>, cfg: &EncodingConfig) -> Result<Library, LibraryError> {
    Library::from_json(&std::fs::read_to_string(path)?, cfg)
}

// ---------------------------------------------------------------------------
// Retrieval
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighbor {
    pub case_id: String,
    pub distance: usize,
}

/// The `k` candidates closest to `query` in Hamming distance, ties broken
/// by case id.
pub fn rank_by_hamming(
    query: &InputVector,
    candidates: &[(String, InputVector)],
    k: usize,
) -> Result<Vec<Neighbor>, LibraryError> {
    if k == 0 {
        return Err(LibraryError::InvalidK);
    }
    if candidates.is_empty() {
        return Err(LibraryError::EmptyLibrary);
    }
    let mut ranked: Vec<Neighbor> = candidates
        .iter()
        .map(|(id, v)| Neighbor { case_id: id.clone(), distance: query.hamming(v) })
        .collect();
    ranked.sort_by(|a, b| a.distance.cmp(&b.distance).then_with(|| a.case_id.cmp(&b.case_id)));
    ranked.truncate(k);
    Ok(ranked)
}

pub fn encoded_inputs(lib: &Library, cfg: &EncodingConfig) -> Result<Vec<(String, InputVector)>, LibraryError> {
    lib.cases
        .iter()
        .map(|c| {
            encode_profile(&c.profile, cfg)
                .map(|v| (c.case_id.clone(), v))
                .map_err(|source| LibraryError::Encode { case_id: c.case_id.clone(), source })
        })
        .collect()
}

pub fn nearest_neighbors(
    query: &InputVector,
    lib: &Library,
    k: usize,
    cfg: &EncodingConfig,
) -> Result<Vec<Neighbor>, LibraryError> {
    if lib.is_empty() {
        return Err(LibraryError::EmptyLibrary);
    }
    rank_by_hamming(query, &encoded_inputs(lib, cfg)?, k)
}

// ---------------------------------------------------------------------------
// Training data
// ---------------------------------------------------------------------------

/// Encoded (input, output) pairs in library order.
pub fn build_dataset(lib: &Library, cfg: &EncodingConfig) -> Result<Vec<(InputVector, OutputVector)>, LibraryError> {
    lib.cases
        .iter()
        .map(|c| {
            let wrap = |source| LibraryError::Encode { case_id: c.case_id.clone(), source };
            Ok((encode_profile(&c.profile, cfg).map_err(wrap)?, encode_design(&c.design, cfg).map_err(wrap)?))
        })
        .collect()
}

pub fn to_samples(pairs: &[(InputVector, OutputVector)]) -> Vec<Sample> {
    pairs.iter().map(|(x, t)| (x.to_f64(), t.to_f64())).collect()
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

struct Sampler<'a> {
    rng: ChaCha8Rng,
    cfg: &'a EncodingConfig,
    jitter: f64,
}

impl Sampler<'_> {
    /// Bin index drawn uniformly from `range`.
    fn bin(&mut self, range: std::ops::Range<usize>) -> usize {
        self.rng.gen_range(range)
    }

    /// Representative of bin `i` of input segment `seg`, optionally moved
    /// inside the bin by up to `jitter` half-widths.
    fn value(&mut self, seg: usize, i: usize) -> f64 {
        let table = self.cfg.input[seg].bins();
        let mid = table.intervals[i].midpoint();
        if self.jitter <= 0.0 {
            return mid;
        }
        let half = table.intervals[i].width() / 2.0;
        let offset = self.rng.gen_range(-1.0..1.0) * self.jitter.min(0.99) * half;
        mid + offset
    }

    fn bins(&self, seg: usize) -> usize {
        self.cfg.input[seg].length
    }

    fn profile(&mut self) -> ProfileSpec {
        use codec::input::*;
        let profile_type = *ProfileType::ALL.choose(&mut self.rng).expect("non-empty");
        let shape_class = self.rng.gen_range(0..self.cfg.shape_catalog.len());
        let i = self.bin(0..self.bins(THICKNESS));
        let wall_thickness = self.value(THICKNESS, i);

        // Width and height bins whose diagonal stays inside the CCD table.
        let ccd_bins = self.cfg.input[CCD].bins().clone();
        let (width, height, ccd) = loop {
            let (wi, hi) = (self.bin(0..self.bins(WIDTH)), self.bin(0..self.bins(HEIGHT)));
            let w = self.cfg.input[WIDTH].bins().representative(wi);
            let h = self.cfg.input[HEIGHT].bins().representative(hi);
            if let Ok(ci) = ccd_bins.lookup(w.hypot(h)) {
                let ccd = ccd_bins.representative(ci);
                if ccd >= w.max(h) {
                    break (self.value(WIDTH, wi), self.value(HEIGHT, hi), ccd.max(w.max(h)));
                }
            }
        };
        let width = width.min(ccd);
        let height = height.min(ccd);

        let i = self.bin(0..self.bins(AREA));
        let cross_section_area = self.value(AREA, i);
        let press_capacity = Some(*PressCapacity::ALL.choose(&mut self.rng).expect("non-empty"));
        let pi = self.bin(0..self.bins(PERIMETER));
        let perimeter = self.value(PERIMETER, pi);
        let external_perimeter = if profile_type == ProfileType::Hollow {
            let ei = self.bin(0..(pi + 1).min(self.bins(EXTERNAL_PERIMETER)));
            self.value(EXTERNAL_PERIMETER, ei).min(perimeter)
        } else {
            0.0
        };
        let i = self.bin(0..self.bins(TONGUE_RATIO));
        let tongue_ratio = self.value(TONGUE_RATIO, i);
        ProfileSpec {
            profile_type,
            shape_class,
            wall_thickness,
            width,
            height,
            ccd: Some(ccd),
            cross_section_area,
            press_capacity,
            extrusion_ratio: None,
            perimeter,
            external_perimeter,
            tongue_ratio,
        }
    }
}

/// The published case study as a library record.
pub fn case_study_record(kb: &KnowledgeBase) -> CaseRecord {
    let design = case_study_design();
    let plan = kb.derive_plan(&design).expect("case-study design is covered by the knowledge base");
    CaseRecord {
        case_id: CASE_STUDY_ID.to_string(),
        profile: case_study_profile(),
        design,
        plan,
        provenance: CaseProvenance::Industrial,
        created: 0,
    }
}

/// `n` cases: the case study first, then `n - 1` sampled profiles labelled
/// by the knowledge base. Identical arguments give identical corpora.
/// `jitter` in `[0, 1)` moves numeric attributes off bin representatives.
pub fn generate_synthetic_cases(
    n: usize,
    seed: u64,
    cfg: &EncodingConfig,
    kb: &KnowledgeBase,
    jitter: f64,
) -> Vec<CaseRecord> {
    let mut cases = Vec::with_capacity(n);
    if n == 0 {
        return cases;
    }
    cases.push(case_study_record(kb));
    let mut sampler = Sampler { rng: ChaCha8Rng::seed_from_u64(seed), cfg, jitter };
    let width = (n - 1).to_string().len().max(4);
    for i in 1..n {
        // Redraw the rare jittered profile whose design leaves the output bins.
        let (profile, design) = loop {
            let profile = sampler.profile();
            let design = kb.build_design(&profile);
            if encode_profile(&profile, cfg).is_ok() && encode_design(&design, cfg).is_ok() {
                break (profile, design);
            }
        };
        let plan = kb.derive_plan(&design).expect("built designs use knowledge-base feature sets");
        cases.push(CaseRecord {
            case_id: format!("syn-{i:0width$}"),
            profile,
            design,
            plan,
            provenance: CaseProvenance::Synthetic,
            created: 0,
        });
    }
    cases
}

/// A validated library holding [`generate_synthetic_cases`].
pub fn synthetic_library(
    n: usize,
    seed: u64,
    cfg: &EncodingConfig,
    kb: &KnowledgeBase,
    jitter: f64,
) -> Result<Library, LibraryError> {
    let lib = Library::from_cases(LibraryMetadata::for_config(cfg, kb), generate_synthetic_cases(n, seed, cfg, kb, jitter))?;
    for case in lib.cases() {
        check_record(case, Some(kb))?;
    }
    Ok(lib)
}
