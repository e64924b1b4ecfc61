//! Inference-time OCR rectification of predicted tampered-text boxes.
//!
//! The predicted text is matched against every OCR instance in normed
//! Levenshtein space. Instances within the threshold are candidates; the
//! candidates at the minimum distance are the matches. A unique match
//! donates its box directly. Several matches are ranked by Distance-IoU
//! against the predicted box, ties going to the lowest instance index.
//! With no candidate the predicted box is kept.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::diou;
use crate::model::{BBox, ImageVerdict, OcrLayout, PredictionRecord};
use crate::text_metrics::normed_levenshtein;

pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectifyConfig {
    match_threshold: f64,
}

impl Default for RectifyConfig {
    fn default() -> Self {
        Self {
            match_threshold: DEFAULT_MATCH_THRESHOLD,
        }
    }
}

impl RectifyConfig {
    pub fn new(match_threshold: f64) -> Result<Self, RectifyError> {
        if !(0.0..=1.0).contains(&match_threshold) {
            return Err(RectifyError::BadThreshold(match_threshold));
        }
        Ok(Self { match_threshold })
    }

    pub fn match_threshold(&self) -> f64 {
        self.match_threshold
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RectifyError {
    #[error("record {0:?} is not a tampered prediction with text and box")]
    NotTampered(String),
    #[error("prediction id {pred:?} does not match layout id {layout:?}")]
    IdMismatch { pred: String, layout: String },
    #[error("match threshold {0} outside [0, 1]")]
    BadThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RectifySource {
    /// Exactly one instance at the minimum distance.
    OcrUnique,
    /// Several instances tied at the minimum distance; best DIoU won.
    OcrDiou,
    /// No instance within the threshold (or nothing to rectify).
    KeptOriginal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectifyOutcome {
    pub final_bbox: BBox,
    pub source: RectifySource,
    pub matched_index: Option<usize>,
    /// Normed Levenshtein distance of the winning instance.
    pub match_distance: Option<f64>,
}

pub fn rectify(
    pred: &PredictionRecord,
    layout: &OcrLayout,
    cfg: &RectifyConfig,
) -> Result<RectifyOutcome, RectifyError> {
    if pred.id != layout.id {
        return Err(RectifyError::IdMismatch {
            pred: pred.id.clone(),
            layout: layout.id.clone(),
        });
    }
    let (Some(text), Some(bbox), ImageVerdict::Tampered) = (&pred.text, &pred.bbox, pred.verdict)
    else {
        return Err(RectifyError::NotTampered(pred.id.clone()));
    };

    let mut best_distance = f64::INFINITY;
    let mut matched: Vec<usize> = Vec::new();
    for (i, inst) in layout.instances.iter().enumerate() {
        let d = normed_levenshtein(&inst.text, text);
        if d > cfg.match_threshold {
            continue;
        }
        if d < best_distance {
            best_distance = d;
            matched.clear();
        }
        if d == best_distance {
            matched.push(i);
        }
    }

    let outcome = match matched.as_slice() {
        [] => RectifyOutcome {
            final_bbox: *bbox,
            source: RectifySource::KeptOriginal,
            matched_index: None,
            match_distance: None,
        },
        &[only] => RectifyOutcome {
            final_bbox: layout.instances[only].bbox,
            source: RectifySource::OcrUnique,
            matched_index: Some(only),
            match_distance: Some(best_distance),
        },
        many => {
            // strict `>` keeps the lowest index on DIoU ties
            let mut winner = many[0];
            let mut best = diou(&layout.instances[winner].bbox, bbox);
            for &i in &many[1..] {
                let score = diou(&layout.instances[i].bbox, bbox);
                if score > best {
                    best = score;
                    winner = i;
                }
            }
            RectifyOutcome {
                final_bbox: layout.instances[winner].bbox,
                source: RectifySource::OcrDiou,
                matched_index: Some(winner),
                match_distance: Some(best_distance),
            }
        }
    };
    Ok(outcome)
}

/// Audit line for one record of a batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectifyAudit {
    pub id: String,
    /// `None` for records that were passed through without rectification.
    pub outcome: Option<RectifyOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Rectifies every tampered prediction that has a layout; everything else
/// passes through unchanged. Output order matches input order.
pub fn rectify_batch(
    preds: &[PredictionRecord],
    layouts: &[OcrLayout],
    cfg: &RectifyConfig,
) -> Vec<(PredictionRecord, RectifyAudit)> {
    let by_id: HashMap<&str, &OcrLayout> = layouts.iter().map(|l| (l.id.as_str(), l)).collect();
    preds
        .par_iter()
        .map(|pred| {
            let mut audit = RectifyAudit {
                id: pred.id.clone(),
                outcome: None,
                warning: None,
            };
            if pred.verdict != ImageVerdict::Tampered {
                return (pred.clone(), audit);
            }
            let Some(layout) = by_id.get(pred.id.as_str()) else {
                audit.warning = Some(format!("no OCR layout for {:?}; box kept", pred.id));
                audit.outcome = pred.bbox.map(|b| RectifyOutcome {
                    final_bbox: b,
                    source: RectifySource::KeptOriginal,
                    matched_index: None,
                    match_distance: None,
                });
                return (pred.clone(), audit);
            };
            match rectify(pred, layout, cfg) {
                Ok(outcome) => {
                    let mut out = pred.clone();
                    out.bbox = Some(outcome.final_bbox);
                    audit.outcome = Some(outcome);
                    (out, audit)
                }
                Err(e) => {
                    audit.warning = Some(e.to_string());
                    (pred.clone(), audit)
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ForgeryMethod, OcrInstance};
    use serde_json::Map;

    fn b(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    fn pred(text: &str, bbox: BBox) -> PredictionRecord {
        PredictionRecord::tampered("img", ForgeryMethod::Generation, text, bbox, "")
    }

    fn layout(items: &[(&str, BBox)]) -> OcrLayout {
        OcrLayout {
            id: "img".into(),
            instances: items
                .iter()
                .map(|(t, b)| OcrInstance {
                    text: (*t).into(),
                    bbox: *b,
                })
                .collect(),
            extra: Map::new(),
        }
    }

    #[test]
    fn unique_exact_match() {
        let a = b(10.0, 10.0, 90.0, 30.0);
        let l = layout(&[("TOTAL 100", a), ("DATE", b(10.0, 50.0, 60.0, 70.0))]);
        let out = rectify(&pred("TOTAL 100", b(400.0, 400.0, 420.0, 410.0)), &l, &RectifyConfig::default())
            .unwrap();
        assert_eq!(out.source, RectifySource::OcrUnique);
        assert_eq!(out.final_bbox, a);
        assert_eq!((out.matched_index, out.match_distance), (Some(0), Some(0.0)));
    }

    #[test]
    fn duplicate_texts_resolved_by_diou() {
        let a = b(0.0, 0.0, 40.0, 20.0);
        let c = b(100.0, 100.0, 140.0, 120.0);
        let l = layout(&[("ACME", a), ("OTHER", b(50.0, 50.0, 60.0, 60.0)), ("ACME", c)]);
        // overlaps C with IoU 0.6 and A not at all
        let out = rectify(&pred("ACME", b(108.0, 100.0, 148.0, 120.0)), &l, &RectifyConfig::default())
            .unwrap();
        assert_eq!(out.source, RectifySource::OcrDiou);
        assert_eq!(out.final_bbox, c);
        assert_eq!(out.matched_index, Some(2));
    }

    #[test]
    fn diou_tie_goes_to_lowest_index() {
        let a = b(0.0, 0.0, 10.0, 10.0);
        let c = b(20.0, 0.0, 30.0, 10.0);
        let l = layout(&[("X1", c), ("X1", a)]);
        // predicted box centred exactly between the two
        let out = rectify(&pred("X1", b(10.0, 0.0, 20.0, 10.0)), &l, &RectifyConfig::default()).unwrap();
        assert_eq!(out.matched_index, Some(0));
    }

    #[test]
    fn no_candidate_keeps_original() {
        let original = b(5.0, 5.0, 25.0, 15.0);
        let l = layout(&[("HELLO", b(0.0, 0.0, 10.0, 10.0)), ("WORLD", b(0.0, 20.0, 10.0, 30.0))]);
        let out = rectify(&pred("TOTAL", original), &l, &RectifyConfig::default()).unwrap();
        assert_eq!(out.source, RectifySource::KeptOriginal);
        assert_eq!(out.final_bbox, original);
    }

    #[test]
    fn threshold_is_inclusive() {
        let hit = b(0.0, 0.0, 10.0, 10.0);
        // 1 edit in 5 chars = 0.2 exactly
        let l = layout(&[("ABCDE", hit)]);
        let out = rectify(&pred("ABCDX", b(50.0, 50.0, 60.0, 60.0)), &l, &RectifyConfig::default()).unwrap();
        assert_eq!(out.source, RectifySource::OcrUnique);
        // 0.2 + epsilon is rejected
        let cfg = RectifyConfig::new(0.2 - 1e-12).unwrap();
        let out = rectify(&pred("ABCDX", b(50.0, 50.0, 60.0, 60.0)), &l, &cfg).unwrap();
        assert_eq!(out.source, RectifySource::KeptOriginal);
        // 1 edit in 4 chars = 0.25
        let l4 = layout(&[("ABCD", hit)]);
        let out = rectify(&pred("ABCX", b(50.0, 50.0, 60.0, 60.0)), &l4, &RectifyConfig::default()).unwrap();
        assert_eq!(out.source, RectifySource::KeptOriginal);
    }

    #[test]
    fn closest_text_wins_over_box_overlap() {
        let exact = b(300.0, 300.0, 340.0, 320.0);
        let near_box = b(0.0, 0.0, 40.0, 20.0);
        let l = layout(&[("INVOICE", near_box), ("INVOICES", exact)]);
        let out = rectify(&pred("INVOICES", near_box), &l, &RectifyConfig::default()).unwrap();
        assert_eq!(out.final_bbox, exact);
        assert_eq!(out.source, RectifySource::OcrUnique);
    }

    #[test]
    fn case_and_whitespace_sensitive() {
        let l = layout(&[("total", b(0.0, 0.0, 10.0, 10.0))]);
        let out = rectify(&pred("TOTAL", b(50.0, 50.0, 60.0, 60.0)), &l, &RectifyConfig::default()).unwrap();
        assert_eq!(out.source, RectifySource::KeptOriginal);
    }

    #[test]
    fn errors() {
        let l = layout(&[]);
        let real = PredictionRecord::real("img", "");
        assert!(matches!(rectify(&real, &l, &RectifyConfig::default()), Err(RectifyError::NotTampered(_))));
        let mut other = pred("A", b(0.0, 0.0, 1.0, 1.0));
        other.id = "zzz".into();
        assert!(matches!(rectify(&other, &l, &RectifyConfig::default()), Err(RectifyError::IdMismatch { .. })));
        assert!(RectifyConfig::new(1.5).is_err());
    }

    #[test]
    fn batch_scope_rules() {
        let a = b(10.0, 10.0, 50.0, 30.0);
        let mut missing = pred("X", b(0.0, 0.0, 5.0, 5.0));
        missing.id = "nolayout".into();
        let preds = vec![
            PredictionRecord::real("img", "fine"),
            pred("TOTAL", b(0.0, 0.0, 5.0, 5.0)),
            missing.clone(),
        ];
        let out = rectify_batch(&preds, &[layout(&[("TOTAL", a)])], &RectifyConfig::default());
        assert_eq!(out[0].0, preds[0]);
        assert!(out[0].1.outcome.is_none());
        assert_eq!(out[1].0.bbox, Some(a));
        assert_eq!(out[2].0, missing);
        assert!(out[2].1.warning.is_some());
        assert_eq!(out[2].1.outcome.as_ref().unwrap().source, RectifySource::KeptOriginal);
        assert!(rectify_batch(&[], &[], &RectifyConfig::default()).is_empty());
    }
}
