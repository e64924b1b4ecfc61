//! Shared domain types and JSONL record schemas.
//!
//! Records are validated by hand rather than through `serde::Deserialize`
//! so that every violation in a line is reported at once, and so that no
//! partially-typed record ever escapes.

use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::mask::MaskGrid;

/// Image-level forensic label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageVerdict {
    Real,
    Generated,
    Tampered,
}

impl ImageVerdict {
    pub const ALL: [ImageVerdict; 3] = [Self::Real, Self::Generated, Self::Tampered];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Real => "real",
            Self::Generated => "generated",
            Self::Tampered => "tampered",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "real" => Some(Self::Real),
            "generated" => Some(Self::Generated),
            "tampered" => Some(Self::Tampered),
            _ => None,
        }
    }
}

impl fmt::Display for ImageVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a locally tampered region was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ForgeryMethod {
    #[serde(rename = "copy-paste")]
    CopyPaste,
    #[serde(rename = "generation")]
    Generation,
}

impl ForgeryMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CopyPaste => "copy-paste",
            Self::Generation => "generation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "copy-paste" => Some(Self::CopyPaste),
            "generation" => Some(Self::Generation),
            _ => None,
        }
    }

    /// Maps a concrete tampering technique name onto the binary method label.
    ///
    /// Content-reuse edits (copy-move, splicing) are copy-paste; anything
    /// synthesized (rendering, GAN, diffusion, large generative models) is
    /// generation. Returns `None` for unknown technique names.
    pub fn from_technique(technique: &str) -> Option<Self> {
        let t = technique.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        match t.as_str() {
            "copy-paste" | "copy-move" | "copymove" | "splicing" | "splice" => Some(Self::CopyPaste),
            "generation" | "rendering" | "render" | "gan" | "diffusion" | "gpt-4o" | "gpt4o"
            | "srnet" | "sr-net" | "diffute" | "anytext" | "textdiffuser" | "udifftext" => {
                Some(Self::Generation)
            }
            _ => None,
        }
    }
}

impl fmt::Display for ForgeryMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evaluation split of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    /// In-domain test split.
    Test,
    /// Cross-image-style.
    Cis,
    /// Cross-tampering-method.
    Ctm,
    /// Cross-language.
    Cl,
}

impl Subset {
    pub const ALL: [Subset; 4] = [Self::Test, Self::Cis, Self::Ctm, Self::Cl];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Test => "test",
            Self::Cis => "cis",
            Self::Ctm => "ctm",
            Self::Cl => "cl",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Self::Test => "Test",
            Self::Cis => "CIS",
            Self::Ctm => "CTM",
            Self::Cl => "CL",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "test" => Some(Self::Test),
            "cis" => Some(Self::Cis),
            "ctm" => Some(Self::Ctm),
            "cl" => Some(Self::Cl),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BBoxError {
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("coordinates must be non-negative")]
    Negative,
    #[error("degenerate box: need x1 < x2 and y1 < y2")]
    Degenerate,
}

/// Axis-aligned box `[x1, y1, x2, y2]` in pixels, origin top-left.
///
/// Always has strictly positive area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, BBoxError> {
        if ![x1, y1, x2, y2].iter().all(|v| v.is_finite()) {
            return Err(BBoxError::NonFinite);
        }
        if x1 < 0.0 || y1 < 0.0 {
            return Err(BBoxError::Negative);
        }
        if !(x1 < x2 && y1 < y2) {
            return Err(BBoxError::Degenerate);
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }
    pub fn x2(&self) -> f64 {
        self.x2
    }
    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    /// Shifts the box by `(dx, dy)`; fails if it would leave the non-negative quadrant.
    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self, BBoxError> {
        Self::new(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)
    }

    /// Parses `[x1, y1, x2, y2]`.
    pub fn from_json(v: &Value) -> Result<Self, String> {
        let arr = v
            .as_array()
            .ok_or_else(|| "expected an array [x1, y1, x2, y2]".to_string())?;
        if arr.len() != 4 {
            return Err(format!("expected 4 coordinates, got {}", arr.len()));
        }
        let mut c = [0.0; 4];
        for (slot, item) in c.iter_mut().zip(arr) {
            *slot = item
                .as_f64()
                .ok_or_else(|| "coordinates must be numbers".to_string())?;
        }
        Self::new(c[0], c[1], c[2], c[3]).map_err(|e| e.to_string())
    }
}

impl Serialize for BBox {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(4))?;
        for v in self.to_array() {
            // integral coordinates print as JSON integers
            if v.fract() == 0.0 && v.abs() < 9.0e15 {
                seq.serialize_element(&(v as i64))?;
            } else {
                seq.serialize_element(&v)?;
            }
        }
        seq.end()
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.x1, self.y1, self.x2, self.y2)
    }
}

/// One violation found while validating a raw JSON record.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field}: {reason}")]
pub struct SchemaError {
    pub field: String,
    pub reason: String,
}

impl SchemaError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// All violations of a single record.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct SchemaErrors(pub Vec<SchemaError>);

/// A model output for one image (or one region of an image).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub id: String,
    pub verdict: ImageVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<ForgeryMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    pub reasoning: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_output: Option<String>,
    /// Unknown fields carried through untouched.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl PredictionRecord {
    pub fn real(id: impl Into<String>, reasoning: impl Into<String>) -> Self {
        Self::untampered(id, ImageVerdict::Real, reasoning)
    }

    pub fn untampered(
        id: impl Into<String>,
        verdict: ImageVerdict,
        reasoning: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            verdict,
            method: None,
            text: None,
            bbox: None,
            reasoning: reasoning.into(),
            raw_output: None,
            extra: Map::new(),
        }
    }

    pub fn tampered(
        id: impl Into<String>,
        method: ForgeryMethod,
        text: impl Into<String>,
        bbox: BBox,
        reasoning: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            verdict: ImageVerdict::Tampered,
            method: Some(method),
            text: Some(text.into()),
            bbox: Some(bbox),
            reasoning: reasoning.into(),
            raw_output: None,
            extra: Map::new(),
        }
    }

    pub fn from_json(raw: &Value) -> Result<Self, SchemaErrors> {
        let mut v = Validator::new(raw)?;
        let id = v.required_str("id");
        let verdict = v.verdict();
        let (method, text, bbox) = v.tamper_fields(verdict);
        let reasoning = v.required_str("reasoning");
        let raw_output = v.optional_str("raw_output");
        let extra = v.extra(&[
            "id",
            "verdict",
            "method",
            "text",
            "bbox",
            "reasoning",
            "raw_output",
        ]);
        v.finish()?;
        Ok(Self {
            id: id.unwrap_or_default(),
            verdict: verdict.unwrap_or(ImageVerdict::Real),
            method,
            text,
            bbox,
            reasoning: reasoning.unwrap_or_default(),
            raw_output,
            extra,
        })
    }
}

/// Gold label for one image (or one region of an image).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthRecord {
    pub id: String,
    pub subset: Subset,
    pub verdict: ImageVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<ForgeryMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskGrid>,
    pub reasoning_annotation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl GroundTruthRecord {
    pub fn from_json(raw: &Value) -> Result<Self, SchemaErrors> {
        let mut v = Validator::new(raw)?;
        let id = v.required_str("id");
        let subset = v.subset();
        let verdict = v.verdict();
        let (method, text, bbox) = v.tamper_fields(verdict);
        let mask = v.mask(verdict);
        let reasoning_annotation = v.required_str("reasoning_annotation");
        let language = v.optional_str("language");
        let domain = v.optional_str("domain");
        let extra = v.extra(&[
            "id",
            "subset",
            "verdict",
            "method",
            "text",
            "bbox",
            "mask",
            "reasoning_annotation",
            "language",
            "domain",
        ]);
        v.finish()?;
        Ok(Self {
            id: id.unwrap_or_default(),
            subset: subset.unwrap_or(Subset::Test),
            verdict: verdict.unwrap_or(ImageVerdict::Real),
            method,
            text,
            bbox,
            mask,
            reasoning_annotation: reasoning_annotation.unwrap_or_default(),
            language,
            domain,
            extra,
        })
    }
}

/// One text instance reported by an OCR engine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OcrInstance {
    pub text: String,
    pub bbox: BBox,
}

/// OCR result for one image, in the engine's document order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OcrLayout {
    pub id: String,
    pub instances: Vec<OcrInstance>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl OcrLayout {
    pub fn from_json(raw: &Value) -> Result<Self, SchemaErrors> {
        let mut v = Validator::new(raw)?;
        let id = v.required_str("id");
        let mut instances = Vec::new();
        match v.obj.get("instances") {
            None | Some(Value::Null) => v.err("instances", "missing required field"),
            Some(Value::Array(items)) => {
                for (i, item) in items.iter().enumerate() {
                    let field = format!("instances[{i}]");
                    let Some(obj) = item.as_object() else {
                        v.err(&field, "expected an object {text, bbox}");
                        continue;
                    };
                    let text = match obj.get("text") {
                        Some(Value::String(s)) => Some(s.clone()),
                        _ => {
                            v.err(format!("{field}.text"), "expected a string");
                            None
                        }
                    };
                    let bbox = match obj.get("bbox") {
                        Some(b) => match BBox::from_json(b) {
                            Ok(b) => Some(b),
                            Err(reason) => {
                                v.err(format!("{field}.bbox"), reason);
                                None
                            }
                        },
                        None => {
                            v.err(format!("{field}.bbox"), "missing required field");
                            None
                        }
                    };
                    if let (Some(text), Some(bbox)) = (text, bbox) {
                        instances.push(OcrInstance { text, bbox });
                    }
                }
            }
            Some(_) => v.err("instances", "expected an array"),
        }
        let extra = v.extra(&["id", "instances"]);
        v.finish()?;
        Ok(Self {
            id: id.unwrap_or_default(),
            instances,
            extra,
        })
    }
}

/// Which schema a raw JSON object is validated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Prediction,
    GroundTruth,
    Ocr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Prediction(PredictionRecord),
    GroundTruth(GroundTruthRecord),
    Ocr(OcrLayout),
}

/// Validates a raw JSON object against the schema for `kind`.
///
/// Returns either a fully typed record or every violation found.
pub fn validate_record(raw: &Value, kind: RecordKind) -> Result<Record, SchemaErrors> {
    match kind {
        RecordKind::Prediction => PredictionRecord::from_json(raw).map(Record::Prediction),
        RecordKind::GroundTruth => GroundTruthRecord::from_json(raw).map(Record::GroundTruth),
        RecordKind::Ocr => OcrLayout::from_json(raw).map(Record::Ocr),
    }
}

/// Image key of a (possibly per-region) record id: everything before the first `#`.
///
/// Multi-region images are stored as several records `img#0`, `img#1`, ...
pub fn image_key(id: &str) -> &str {
    id.split_once('#').map_or(id, |(key, _)| key)
}

struct Validator<'a> {
    obj: &'a Map<String, Value>,
    errors: Vec<SchemaError>,
}

impl<'a> Validator<'a> {
    fn new(raw: &'a Value) -> Result<Self, SchemaErrors> {
        match raw.as_object() {
            Some(obj) => Ok(Self {
                obj,
                errors: Vec::new(),
            }),
            None => Err(SchemaErrors(vec![SchemaError::new(
                "<record>",
                "expected a JSON object",
            )])),
        }
    }

    fn err(&mut self, field: impl Into<String>, reason: impl Into<String>) {
        self.errors.push(SchemaError::new(field, reason));
    }

    fn present(&self, field: &str) -> Option<&'a Value> {
        self.obj.get(field).filter(|v| !v.is_null())
    }

    fn required_str(&mut self, field: &str) -> Option<String> {
        match self.present(field) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.err(field, "expected a string");
                None
            }
            None => {
                self.err(field, "missing required field");
                None
            }
        }
    }

    fn optional_str(&mut self, field: &str) -> Option<String> {
        match self.present(field) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.err(field, "expected a string");
                None
            }
            None => None,
        }
    }

    fn verdict(&mut self) -> Option<ImageVerdict> {
        let s = self.required_str("verdict")?;
        let v = ImageVerdict::parse(&s);
        if v.is_none() {
            self.err(
                "verdict",
                format!("unknown verdict {s:?}; expected real, generated or tampered"),
            );
        }
        v
    }

    fn subset(&mut self) -> Option<Subset> {
        let s = self.required_str("subset")?;
        let v = Subset::parse(&s);
        if v.is_none() {
            self.err(
                "subset",
                format!("unknown subset {s:?}; expected test, cis, ctm or cl"),
            );
        }
        v
    }

    /// `method`, `text`, `bbox`: required for tampered, forbidden otherwise.
    fn tamper_fields(
        &mut self,
        verdict: Option<ImageVerdict>,
    ) -> (Option<ForgeryMethod>, Option<String>, Option<BBox>) {
        let Some(verdict) = verdict else {
            return (None, None, None);
        };
        if verdict != ImageVerdict::Tampered {
            for field in ["method", "text", "bbox"] {
                if self.present(field).is_some() {
                    self.err(field, format!("must be absent for a {verdict} image"));
                }
            }
            return (None, None, None);
        }
        let method = self.required_str("method").and_then(|s| {
            let m = ForgeryMethod::parse(&s);
            if m.is_none() {
                self.err(
                    "method",
                    format!("unknown method {s:?}; expected copy-paste or generation"),
                );
            }
            m
        });
        let text = self.required_str("text");
        let bbox = match self.present("bbox") {
            Some(b) => match BBox::from_json(b) {
                Ok(b) => Some(b),
                Err(reason) => {
                    self.err("bbox", reason);
                    None
                }
            },
            None => {
                self.err("bbox", "missing required field");
                None
            }
        };
        (method, text, bbox)
    }

    fn mask(&mut self, verdict: Option<ImageVerdict>) -> Option<MaskGrid> {
        let raw = self.present("mask")?;
        if verdict.is_some_and(|v| v != ImageVerdict::Tampered) {
            self.err("mask", "must be absent for an untampered image");
            return None;
        }
        match MaskGrid::from_json(raw) {
            Ok(m) => Some(m),
            Err(reason) => {
                self.err("mask", reason);
                None
            }
        }
    }

    fn extra(&self, known: &[&str]) -> Map<String, Value> {
        self.obj
            .iter()
            .filter(|(k, _)| !known.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    fn finish(self) -> Result<(), SchemaErrors> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(SchemaErrors(self.errors))
        }
    }
}
