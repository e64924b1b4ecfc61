//! The five per-completion rewards, their weighted composite, and
//! group-relative advantage normalization for an external RL trainer.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::iou;
use crate::model::{BBox, ForgeryMethod, GroundTruthRecord, ImageVerdict, PredictionRecord};
use crate::parser::{parse_completion, AnswerPayload, ParsedOutput};
use crate::text_metrics::normed_levenshtein;

/// IoU must strictly exceed this for the localization reward to pay out.
pub const LOC_IOU_THRESHOLD: f64 = 0.5;
/// Below this population std a group is treated as constant.
pub const ADVANTAGE_STD_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewardError {
    #[error("prediction id {pred:?} does not match ground-truth id {gt:?}")]
    IdMismatch { pred: String, gt: String },
    #[error("advantage groups need at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("invalid reward weights: {0}")]
    BadWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardWeights {
    pub cls: f64,
    pub method: f64,
    pub loc: f64,
    pub ocr: f64,
    pub format: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            cls: 1.0,
            method: 1.0,
            loc: 1.0,
            ocr: 1.0,
            format: 1.0,
        }
    }
}

impl RewardWeights {
    pub fn total(&self) -> f64 {
        self.cls + self.method + self.loc + self.ocr + self.format
    }
}

/// Parses `cls=1,method=0.5,...`; unspecified components keep weight 1.
impl FromStr for RewardWeights {
    type Err = RewardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut w = Self::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| RewardError::BadWeights(format!("expected key=value, got {part:?}")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| RewardError::BadWeights(format!("bad number in {part:?}")))?;
            if !(value.is_finite() && value >= 0.0) {
                return Err(RewardError::BadWeights(format!(
                    "weight for {key} must be finite and non-negative"
                )));
            }
            let slot = match key.trim() {
                "cls" => &mut w.cls,
                "method" => &mut w.method,
                "loc" => &mut w.loc,
                "ocr" => &mut w.ocr,
                "format" => &mut w.format,
                other => return Err(RewardError::BadWeights(format!("unknown component {other:?}"))),
            };
            *slot = value;
        }
        Ok(w)
    }
}

impl fmt::Display for RewardWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cls={},method={},loc={},ocr={},format={}",
            self.cls, self.method, self.loc, self.ocr, self.format
        )
    }
}

/// Per-completion scores. `None` marks a component that does not apply
/// because the ground truth is not tampered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardVector {
    pub id: String,
    pub r_cls: f64,
    pub r_method: Option<f64>,
    pub r_loc: Option<f64>,
    pub r_ocr: Option<f64>,
    pub r_format: f64,
    pub composite: f64,
}

pub fn reward_cls(pred: ImageVerdict, gt: ImageVerdict) -> f64 {
    if pred == gt {
        1.0
    } else {
        0.0
    }
}

pub fn reward_method(
    pred: Option<ForgeryMethod>,
    gt: ForgeryMethod,
    gt_verdict: ImageVerdict,
) -> Option<f64> {
    (gt_verdict == ImageVerdict::Tampered).then(|| if pred == Some(gt) { 1.0 } else { 0.0 })
}

/// The IoU itself when it strictly exceeds 0.5, else 0.
pub fn reward_loc(pred: Option<&BBox>, gt: &BBox, gt_verdict: ImageVerdict) -> Option<f64> {
    (gt_verdict == ImageVerdict::Tampered).then(|| {
        let v = pred.map_or(0.0, |p| iou(p, gt));
        if v > LOC_IOU_THRESHOLD {
            v
        } else {
            0.0
        }
    })
}

pub fn reward_ocr(pred_text: Option<&str>, gt_text: &str, gt_verdict: ImageVerdict) -> Option<f64> {
    (gt_verdict == ImageVerdict::Tampered)
        .then(|| pred_text.map_or(0.0, |t| 1.0 - normed_levenshtein(t, gt_text)))
}

pub fn reward_format(parsed: &ParsedOutput) -> f64 {
    if parsed.tags_ok && parsed.payload_ok {
        1.0
    } else {
        0.0
    }
}

/// Scores one answer. Region fields of an answer that does not claim
/// tampering are ignored, so a non-tampered verdict earns nothing on the
/// method, localization and OCR rewards.
pub fn score_answer(
    id: &str,
    answer: &AnswerPayload,
    format: f64,
    gt: &GroundTruthRecord,
    weights: &RewardWeights,
) -> RewardVector {
    let flagged = answer.verdict == Some(ImageVerdict::Tampered);
    let r_cls = answer.verdict.map_or(0.0, |v| reward_cls(v, gt.verdict));
    let (mut r_method, mut r_loc, mut r_ocr) = (None, None, None);
    if gt.verdict == ImageVerdict::Tampered {
        r_method = gt.method.and_then(|m| {
            reward_method(answer.method.filter(|_| flagged), m, gt.verdict)
        });
        r_loc = gt.bbox.as_ref().and_then(|b| {
            reward_loc(answer.bbox.as_ref().filter(|_| flagged), b, gt.verdict)
        });
        r_ocr = gt.text.as_deref().and_then(|t| {
            reward_ocr(answer.text.as_deref().filter(|_| flagged), t, gt.verdict)
        });
    }
    let composite = weights.cls * r_cls
        + r_method.map_or(0.0, |r| weights.method * r)
        + r_loc.map_or(0.0, |r| weights.loc * r)
        + r_ocr.map_or(0.0, |r| weights.ocr * r)
        + weights.format * format;
    RewardVector {
        id: id.to_owned(),
        r_cls,
        r_method,
        r_loc,
        r_ocr,
        r_format: format,
        composite,
    }
}

/// All five rewards for a parsed prediction; answer fields come from the
/// record, format compliance from the parse.
pub fn reward_all(
    pred: &PredictionRecord,
    parsed: &ParsedOutput,
    gt: &GroundTruthRecord,
    weights: &RewardWeights,
) -> Result<RewardVector, RewardError> {
    check_ids(&pred.id, &gt.id)?;
    Ok(score_answer(
        &pred.id,
        &AnswerPayload::from(pred),
        reward_format(parsed),
        gt,
        weights,
    ))
}

/// Rewards straight from a raw completion, including malformed ones.
pub fn reward_completion(
    id: &str,
    raw: &str,
    gt: &GroundTruthRecord,
    weights: &RewardWeights,
) -> Result<RewardVector, RewardError> {
    check_ids(id, &gt.id)?;
    let parsed = parse_completion(raw);
    Ok(score_answer(id, &parsed.answer, reward_format(&parsed), gt, weights))
}

fn check_ids(pred: &str, gt: &str) -> Result<(), RewardError> {
    if pred == gt {
        Ok(())
    } else {
        Err(RewardError::IdMismatch {
            pred: pred.to_owned(),
            gt: gt.to_owned(),
        })
    }
}

/// `(r - mean) / std` with population std; a constant group maps to zeros.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, RewardError> {
    if rewards.len() < 2 {
        return Err(RewardError::GroupTooSmall(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < ADVANTAGE_STD_EPS {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// Advantages for consecutive groups of `group_size` rewards.
pub fn batch_advantages(rewards: &[f64], group_size: usize) -> Result<Vec<f64>, RewardError> {
    if group_size < 2 {
        return Err(RewardError::GroupTooSmall(group_size));
    }
    let mut out = Vec::with_capacity(rewards.len());
    for chunk in rewards.chunks(group_size) {
        out.extend(group_advantages(chunk)?);
    }
    Ok(out)
}

/// One unit of batch work: a completion (parsed record or raw text) and its gold label.
#[derive(Debug, Clone, Copy)]
pub enum RewardItem<'a> {
    Parsed {
        pred: &'a PredictionRecord,
        parsed: &'a ParsedOutput,
        gt: &'a GroundTruthRecord,
    },
    Raw {
        id: &'a str,
        raw: &'a str,
        gt: &'a GroundTruthRecord,
    },
}

/// Parallel, order-preserving batch scoring.
pub fn reward_batch(
    items: &[RewardItem<'_>],
    weights: &RewardWeights,
) -> Vec<Result<RewardVector, RewardError>> {
    items
        .par_iter()
        .map(|item| match *item {
            RewardItem::Parsed { pred, parsed, gt } => reward_all(pred, parsed, gt, weights),
            RewardItem::Raw { id, raw, gt } => reward_completion(id, raw, gt, weights),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Subset;
    use crate::parser::render_completion;
    use serde_json::Map;

    fn b(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    fn tampered_gt() -> GroundTruthRecord {
        GroundTruthRecord {
            id: "x".into(),
            subset: Subset::Test,
            verdict: ImageVerdict::Tampered,
            method: Some(ForgeryMethod::CopyPaste),
            text: Some("INVOICE".into()),
            bbox: Some(b(10.0, 10.0, 110.0, 40.0)),
            mask: None,
            reasoning_annotation: "seams".into(),
            language: None,
            domain: None,
            extra: Map::new(),
        }
    }

    fn real_gt() -> GroundTruthRecord {
        GroundTruthRecord {
            verdict: ImageVerdict::Real,
            method: None,
            text: None,
            bbox: None,
            ..tampered_gt()
        }
    }

    fn with_parse(p: &PredictionRecord) -> ParsedOutput {
        parse_completion(&render_completion(p))
    }

    #[test]
    fn cls_examples() {
        use ImageVerdict::*;
        assert_eq!(reward_cls(Tampered, Tampered), 1.0);
        assert_eq!(reward_cls(Real, Generated), 0.0);
        assert_eq!(reward_cls(Generated, Tampered), 0.0);
    }

    #[test]
    fn method_examples() {
        use ForgeryMethod::*;
        assert_eq!(reward_method(Some(CopyPaste), CopyPaste, ImageVerdict::Tampered), Some(1.0));
        assert_eq!(reward_method(Some(Generation), CopyPaste, ImageVerdict::Tampered), Some(0.0));
        assert_eq!(reward_method(None, CopyPaste, ImageVerdict::Tampered), Some(0.0));
        assert_eq!(reward_method(Some(CopyPaste), CopyPaste, ImageVerdict::Real), None);
    }

    #[test]
    fn loc_examples() {
        let gt = b(0.0, 0.0, 10.0, 10.0);
        // IoU 0.6: 60 / 100
        let six = b(0.0, 0.0, 6.0, 10.0);
        assert!((reward_loc(Some(&six), &gt, ImageVerdict::Tampered).unwrap() - 0.6).abs() < 1e-15);
        let half = b(0.0, 0.0, 5.0, 10.0);
        assert_eq!(reward_loc(Some(&half), &gt, ImageVerdict::Tampered), Some(0.0));
        assert_eq!(reward_loc(None, &gt, ImageVerdict::Tampered), Some(0.0));
        assert_eq!(reward_loc(Some(&gt), &gt, ImageVerdict::Generated), None);
    }

    #[test]
    fn ocr_examples() {
        assert_eq!(reward_ocr(Some("PAID"), "PAID", ImageVerdict::Tampered), Some(1.0));
        let v = reward_ocr(Some("INV0ICE"), "INVOICE", ImageVerdict::Tampered).unwrap();
        assert!((v - 6.0 / 7.0).abs() < 1e-12);
        assert_eq!(reward_ocr(None, "PAID", ImageVerdict::Tampered), Some(0.0));
    }

    #[test]
    fn format_examples() {
        let p = PredictionRecord::real("x", "fine");
        assert_eq!(reward_format(&with_parse(&p)), 1.0);
        let truncated = render_completion(&p).replace("</answer>", "");
        assert_eq!(reward_format(&parse_completion(&truncated)), 0.0);
        assert_eq!(reward_format(&parse_completion("<think>a</think><answer>{oops</answer>")), 0.0);
    }

    #[test]
    fn composite_perfect_tampered() {
        let gt = tampered_gt();
        let p = PredictionRecord::tampered("x", ForgeryMethod::CopyPaste, "INVOICE", gt.bbox.unwrap(), "seams");
        let r = reward_all(&p, &with_parse(&p), &gt, &RewardWeights::default()).unwrap();
        assert_eq!(r.composite, 5.0);
    }

    #[test]
    fn composite_perfect_real() {
        let p = PredictionRecord::real("x", "ok");
        let r = reward_all(&p, &with_parse(&p), &real_gt(), &RewardWeights::default()).unwrap();
        assert_eq!((r.r_method, r.r_loc, r.r_ocr), (None, None, None));
        assert_eq!(r.composite, 2.0);
    }

    #[test]
    fn composite_missed_tampering() {
        let p = PredictionRecord::real("x", "ok");
        let r = reward_all(&p, &with_parse(&p), &tampered_gt(), &RewardWeights::default()).unwrap();
        assert_eq!(
            (r.r_cls, r.r_method, r.r_loc, r.r_ocr, r.r_format),
            (0.0, Some(0.0), Some(0.0), Some(0.0), 1.0)
        );
        assert_eq!(r.composite, 1.0);
    }

    #[test]
    fn weights_apply() {
        let gt = tampered_gt();
        let p = PredictionRecord::tampered("x", ForgeryMethod::CopyPaste, "INVOICE", gt.bbox.unwrap(), "");
        let w: RewardWeights = "cls=2, format=0.5,loc=0".parse().unwrap();
        let r = reward_all(&p, &with_parse(&p), &gt, &w).unwrap();
        assert_eq!(r.composite, 2.0 + 1.0 + 0.0 + 1.0 + 0.5);
        assert!("cls=-1".parse::<RewardWeights>().is_err());
        assert!("speed=1".parse::<RewardWeights>().is_err());
    }

    #[test]
    fn id_mismatch() {
        let p = PredictionRecord::real("y", "ok");
        assert!(matches!(
            reward_all(&p, &with_parse(&p), &real_gt(), &RewardWeights::default()),
            Err(RewardError::IdMismatch { .. })
        ));
    }

    #[test]
    fn raw_garbage_gets_defined_reward() {
        let r = reward_completion("x", "I think it's fake", &tampered_gt(), &RewardWeights::default()).unwrap();
        assert_eq!(r.composite, 0.0);
        assert_eq!(r.r_loc, Some(0.0));
    }

    #[test]
    fn advantages_examples() {
        assert_eq!(group_advantages(&[1.0, 0.0, 1.0, 0.0]).unwrap(), vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(group_advantages(&[2.5; 4]).unwrap(), vec![0.0; 4]);
        assert_eq!(group_advantages(&[3.0]), Err(RewardError::GroupTooSmall(1)));
        assert_eq!(
            batch_advantages(&[1.0, 0.0, 5.0, 5.0], 2).unwrap(),
            vec![1.0, -1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn batch_preserves_order() {
        let gt = tampered_gt();
        let raws: Vec<String> = (0..50).map(|i| format!("garbage {i}")).collect();
        let p = PredictionRecord::tampered("x", ForgeryMethod::CopyPaste, "INVOICE", gt.bbox.unwrap(), "");
        let parsed = with_parse(&p);
        let mut items: Vec<RewardItem> = raws
            .iter()
            .map(|raw| RewardItem::Raw { id: "x", raw, gt: &gt })
            .collect();
        items.insert(17, RewardItem::Parsed { pred: &p, parsed: &parsed, gt: &gt });
        let out = reward_batch(&items, &RewardWeights::default());
        for (i, r) in out.iter().enumerate() {
            let expected = if i == 17 { 5.0 } else { 0.0 };
            assert_eq!(r.as_ref().unwrap().composite, expected);
        }
    }
}
