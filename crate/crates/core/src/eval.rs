//! Benchmark metrics over prediction / ground-truth files.
//!
//! Four metrics are reported per evaluation subset, as percentages with one
//! decimal:
//!
//! - **Cls.** accuracy of the real / generated / tampered verdict, over all images;
//! - **OCR** mean `1 - normed Levenshtein` of the tampered text;
//! - **Loc.** mean IoU of the tampered-text box;
//! - **Res.** mean of cosine, Rouge-L and BLEU between predicted reasoning
//!   and the gold annotation, over all images.
//!
//! OCR and Loc. average over tampered images by default; an image whose
//! tampering the model did not flag scores 0 on both.
//!
//! Multi-region images are several records whose ids share an image key
//! (`img#0`, `img#1`, ...). Regions are paired greedily by IoU; unpaired
//! gold regions score 0 and unpaired predicted regions are counted as
//! false positives.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::iou;
use crate::model::{image_key, BBox, GroundTruthRecord, ImageVerdict, PredictionRecord, Subset};
use crate::text_metrics::{
    bleu, normed_levenshtein, rouge_l, tokenize, SimilarityProvider, TermFrequencyCosine, BLEU_MAX_N,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("prediction id {pred:?} does not match ground-truth id {gt:?}")]
    IdMismatch { pred: String, gt: String },
    #[error("unknown report format {0:?}; expected json, csv or md")]
    UnknownFormat(String),
    #[error("unknown denominator {0:?}; expected tampered or all")]
    UnknownDenominator(String),
}

/// Which images OCR and Loc. average over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    /// Tampered ground-truth images only.
    #[default]
    Tampered,
    /// Every image; an untampered image scores 1 when the model also
    /// leaves it unflagged and 0 otherwise.
    All,
}

impl FromStr for Denominator {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tampered" => Ok(Self::Tampered),
            "all" => Ok(Self::All),
            other => Err(EvalError::UnknownDenominator(other.to_owned())),
        }
    }
}

/// Reasoning-quality scorer: mean of a similarity, Rouge-L and BLEU.
#[derive(Clone)]
pub struct ResScorer {
    similarity: Arc<dyn SimilarityProvider>,
}

impl Default for ResScorer {
    fn default() -> Self {
        Self::new(Arc::new(TermFrequencyCosine))
    }
}

impl std::fmt::Debug for ResScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ResScorer").finish_non_exhaustive()
    }
}

impl ResScorer {
    pub fn new(similarity: Arc<dyn SimilarityProvider>) -> Self {
        Self { similarity }
    }

    /// 0 when either text has no tokens.
    pub fn score(&self, hyp: &str, reference: &str) -> f64 {
        let (h, r) = (tokenize(hyp), tokenize(reference));
        if h.is_empty() || r.is_empty() {
            return 0.0;
        }
        let sim = self.similarity.similarity(&h, &r);
        let rl = rouge_l(&h, &r).unwrap_or(0.0);
        let bl = bleu(&h, &r, BLEU_MAX_N).unwrap_or(0.0);
        (sim + rl + bl) / 3.0
    }
}

/// Per-image metric tuple in `[0, 1]`; `None` where a metric does not apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageScore {
    pub cls: f64,
    pub ocr: Option<f64>,
    pub loc: Option<f64>,
    pub res: f64,
    pub false_positive_regions: usize,
}

/// Scores a single-region image with default options.
pub fn score_image(
    pred: Option<&PredictionRecord>,
    gt: &GroundTruthRecord,
) -> Result<ImageScore, EvalError> {
    if let Some(p) = pred {
        if p.id != gt.id {
            return Err(EvalError::IdMismatch {
                pred: p.id.clone(),
                gt: gt.id.clone(),
            });
        }
    }
    let preds: Vec<&PredictionRecord> = pred.into_iter().collect();
    Ok(score_image_group(
        &preds,
        &[gt],
        &ResScorer::default(),
        Denominator::Tampered,
    ))
}

fn flagged(p: &PredictionRecord) -> bool {
    p.verdict == ImageVerdict::Tampered && p.bbox.is_some()
}

/// Scores all region records of one image. `gts` must be non-empty.
pub fn score_image_group(
    preds: &[&PredictionRecord],
    gts: &[&GroundTruthRecord],
    res: &ResScorer,
    denominator: Denominator,
) -> ImageScore {
    let gt_verdict = if gts.iter().any(|g| g.verdict == ImageVerdict::Tampered) {
        ImageVerdict::Tampered
    } else {
        gts[0].verdict
    };
    let flagged_preds: Vec<&PredictionRecord> = preds.iter().copied().filter(|p| flagged(p)).collect();
    let pred_verdict = if flagged_preds.is_empty() {
        preds.first().map(|p| p.verdict)
    } else {
        Some(ImageVerdict::Tampered)
    };

    let cls = if pred_verdict == Some(gt_verdict) { 1.0 } else { 0.0 };
    let res_score = match preds.first() {
        Some(p) => res.score(&p.reasoning, &gts[0].reasoning_annotation),
        None => 0.0,
    };

    if gt_verdict != ImageVerdict::Tampered {
        let unflagged = if flagged_preds.is_empty() && !preds.is_empty() { 1.0 } else { 0.0 };
        let region = (denominator == Denominator::All).then_some(unflagged);
        return ImageScore {
            cls,
            ocr: region,
            loc: region,
            res: res_score,
            false_positive_regions: flagged_preds.len(),
        };
    }

    let gt_regions: Vec<&GroundTruthRecord> = gts
        .iter()
        .copied()
        .filter(|g| g.verdict == ImageVerdict::Tampered && g.bbox.is_some())
        .collect();
    let pred_boxes: Vec<BBox> = flagged_preds.iter().filter_map(|p| p.bbox).collect();
    let gt_boxes: Vec<BBox> = gt_regions.iter().filter_map(|g| g.bbox).collect();
    let matching = match_multi_region(&pred_boxes, &gt_boxes);

    let (mut ocr_sum, mut loc_sum) = (0.0, 0.0);
    for &(pi, gi) in &matching.pairs {
        let (p, g) = (flagged_preds[pi], gt_regions[gi]);
        ocr_sum += match (&p.text, &g.text) {
            (Some(pt), Some(gt)) => 1.0 - normed_levenshtein(pt, gt),
            _ => 0.0,
        };
        loc_sum += iou(&pred_boxes[pi], &gt_boxes[gi]);
    }
    let n = gt_regions.len().max(1) as f64;
    ImageScore {
        cls,
        ocr: Some(ocr_sum / n),
        loc: Some(loc_sum / n),
        res: res_score,
        false_positive_regions: matching.unmatched_preds.len(),
    }
}

/// One-to-one pairing of predicted and gold regions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct RegionMatching {
    /// `(pred_index, gt_index)` in matching order.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_preds: Vec<usize>,
    pub unmatched_gts: Vec<usize>,
}

/// Greedy matching by descending IoU (ties: lower gt index, then lower
/// pred index). Zero-IoU pairs are still matched while both sides have
/// free regions.
pub fn match_multi_region(preds: &[BBox], gts: &[BBox]) -> RegionMatching {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(preds.len() * gts.len());
    for (pi, p) in preds.iter().enumerate() {
        for (gi, g) in gts.iter().enumerate() {
            candidates.push((iou(p, g), gi, pi));
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pred_used = vec![false; preds.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut pairs = Vec::new();
    for (_, gi, pi) in candidates {
        if !pred_used[pi] && !gt_used[gi] {
            pred_used[pi] = true;
            gt_used[gi] = true;
            pairs.push((pi, gi));
        }
    }
    RegionMatching {
        pairs,
        unmatched_preds: (0..preds.len()).filter(|&i| !pred_used[i]).collect(),
        unmatched_gts: (0..gts.len()).filter(|&i| !gt_used[i]).collect(),
    }
}

/// One evaluated image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredImage {
    pub key: String,
    pub subset: Subset,
    pub verdict: ImageVerdict,
    pub missing_prediction: bool,
    pub score: ImageScore,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetMetrics {
    pub cls_acc: f64,
    /// `None` when no image falls in the OCR/Loc. denominator.
    pub ocr_score: Option<f64>,
    pub loc_iou: Option<f64>,
    pub res_score: f64,
    pub n_images: usize,
    pub n_real: usize,
    pub n_generated: usize,
    pub n_tampered: usize,
    pub n_missing_predictions: usize,
    pub n_false_positive_regions: usize,
}

/// Metrics per subset; a subset with no images is `None` (absent, not zero).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub label: String,
    pub denominator: Denominator,
    pub test: Option<SubsetMetrics>,
    pub cis: Option<SubsetMetrics>,
    pub ctm: Option<SubsetMetrics>,
    pub cl: Option<SubsetMetrics>,
}

impl MetricReport {
    pub fn subset(&self, s: Subset) -> Option<&SubsetMetrics> {
        match s {
            Subset::Test => self.test.as_ref(),
            Subset::Cis => self.cis.as_ref(),
            Subset::Ctm => self.ctm.as_ref(),
            Subset::Cl => self.cl.as_ref(),
        }
    }

    fn subset_mut(&mut self, s: Subset) -> &mut Option<SubsetMetrics> {
        match s {
            Subset::Test => &mut self.test,
            Subset::Cis => &mut self.cis,
            Subset::Ctm => &mut self.ctm,
            Subset::Cl => &mut self.cl,
        }
    }
}

/// Order-independent mean: values are sorted before summation.
fn stable_mean(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    Some(values.into_iter().sum::<f64>() / n)
}

fn percent(mean: f64) -> f64 {
    (mean * 1000.0).round() / 10.0
}

/// Per-subset means x 100, rounded to one decimal.
pub fn aggregate(images: &[ScoredImage], label: &str, denominator: Denominator) -> MetricReport {
    let mut report = MetricReport {
        label: label.to_owned(),
        denominator,
        test: None,
        cis: None,
        ctm: None,
        cl: None,
    };
    for subset in Subset::ALL {
        let members: Vec<&ScoredImage> = images.iter().filter(|i| i.subset == subset).collect();
        if members.is_empty() {
            continue;
        }
        let count = |v: ImageVerdict| members.iter().filter(|i| i.verdict == v).count();
        let cls = stable_mean(members.iter().map(|i| i.score.cls).collect()).unwrap_or(0.0);
        let res = stable_mean(members.iter().map(|i| i.score.res).collect()).unwrap_or(0.0);
        let ocr = stable_mean(members.iter().filter_map(|i| i.score.ocr).collect());
        let loc = stable_mean(members.iter().filter_map(|i| i.score.loc).collect());
        *report.subset_mut(subset) = Some(SubsetMetrics {
            cls_acc: percent(cls),
            ocr_score: ocr.map(percent),
            loc_iou: loc.map(percent),
            res_score: percent(res),
            n_images: members.len(),
            n_real: count(ImageVerdict::Real),
            n_generated: count(ImageVerdict::Generated),
            n_tampered: count(ImageVerdict::Tampered),
            n_missing_predictions: members.iter().filter(|i| i.missing_prediction).count(),
            n_false_positive_regions: members.iter().map(|i| i.score.false_positive_regions).sum(),
        });
    }
    report
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub label: String,
    pub denominator: Denominator,
    pub res: ResScorer,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            label: "textshield".into(),
            denominator: Denominator::Tampered,
            res: ResScorer::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: MetricReport,
    pub images: Vec<ScoredImage>,
    /// Prediction ids whose image key has no ground truth, in input order.
    pub unmatched_prediction_ids: Vec<String>,
}

/// Groups records by image key, scores images in parallel and reduces
/// sequentially. The result does not depend on the worker count.
pub fn evaluate(
    preds: &[PredictionRecord],
    gts: &[GroundTruthRecord],
    opts: &EvalOptions,
) -> EvalOutcome {
    let mut gt_groups: Vec<(&str, Vec<&GroundTruthRecord>)> = Vec::new();
    let mut gt_index: HashMap<&str, usize> = HashMap::new();
    for g in gts {
        let key = image_key(&g.id);
        match gt_index.get(key) {
            Some(&i) => gt_groups[i].1.push(g),
            None => {
                gt_index.insert(key, gt_groups.len());
                gt_groups.push((key, vec![g]));
            }
        }
    }
    let mut pred_groups: HashMap<&str, Vec<&PredictionRecord>> = HashMap::new();
    let mut unmatched_prediction_ids = Vec::new();
    for p in preds {
        let key = image_key(&p.id);
        if gt_index.contains_key(key) {
            pred_groups.entry(key).or_default().push(p);
        } else {
            unmatched_prediction_ids.push(p.id.clone());
        }
    }

    let images: Vec<ScoredImage> = gt_groups
        .par_iter()
        .map(|(key, group)| {
            let preds = pred_groups.get(key).map(Vec::as_slice).unwrap_or(&[]);
            let score = score_image_group(preds, group, &opts.res, opts.denominator);
            ScoredImage {
                key: (*key).to_owned(),
                subset: group[0].subset,
                verdict: if group.iter().any(|g| g.verdict == ImageVerdict::Tampered) {
                    ImageVerdict::Tampered
                } else {
                    group[0].verdict
                },
                missing_prediction: preds.is_empty(),
                score,
            }
        })
        .collect();
    let report = aggregate(&images, &opts.label, opts.denominator);
    EvalOutcome {
        report,
        images,
        unmatched_prediction_ids,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "md" | "markdown" => Ok(Self::Markdown),
            other => Err(EvalError::UnknownFormat(other.to_owned())),
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{v:.1}"))
}

/// Deterministic serialization of one or more runs.
///
/// JSON emits a single object for one report and an array otherwise;
/// markdown emits one row per run with subsets as column groups.
pub fn emit_report(reports: &[MetricReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = if let [one] = reports {
                serde_json::to_string_pretty(one)
            } else {
                serde_json::to_string_pretty(reports)
            }
            .expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = String::from(
                "label,subset,cls,ocr,loc,res,n_images,n_real,n_generated,n_tampered,n_missing_predictions,n_false_positive_regions\n",
            );
            for r in reports {
                for subset in Subset::ALL {
                    let Some(m) = r.subset(subset) else { continue };
                    let opt = |v: Option<f64>| v.map(|v| format!("{v:.1}")).unwrap_or_default();
                    let _ = writeln!(
                        s,
                        "{},{},{:.1},{},{},{:.1},{},{},{},{},{},{}",
                        csv_field(&r.label),
                        subset.as_str(),
                        m.cls_acc,
                        opt(m.ocr_score),
                        opt(m.loc_iou),
                        m.res_score,
                        m.n_images,
                        m.n_real,
                        m.n_generated,
                        m.n_tampered,
                        m.n_missing_predictions,
                        m.n_false_positive_regions
                    );
                }
            }
            s
        }
        ReportFormat::Markdown => {
            let mut header = String::from("| Method |");
            let mut rule = String::from("|---|");
            for subset in Subset::ALL {
                for metric in ["Cls.", "OCR", "Loc.", "Res."] {
                    let _ = write!(header, " {} {metric} |", subset.display_name());
                    rule.push_str("---:|");
                }
            }
            let mut s = format!("{header}\n{rule}\n");
            for r in reports {
                let _ = write!(s, "| {} |", r.label.replace('|', "\\|"));
                for subset in Subset::ALL {
                    let m = r.subset(subset);
                    for v in [
                        m.map(|m| m.cls_acc),
                        m.and_then(|m| m.ocr_score),
                        m.and_then(|m| m.loc_iou),
                        m.map(|m| m.res_score),
                    ] {
                        let _ = write!(s, " {} |", cell(v));
                    }
                }
                s.push('\n');
            }
            s
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ForgeryMethod;
    use serde_json::Map;

    fn b(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    fn gt_tampered(id: &str, subset: Subset, bbox: BBox) -> GroundTruthRecord {
        GroundTruthRecord {
            id: id.into(),
            subset,
            verdict: ImageVerdict::Tampered,
            method: Some(ForgeryMethod::Generation),
            text: Some("PAID".into()),
            bbox: Some(bbox),
            mask: None,
            reasoning_annotation: "the glyph spacing is uneven".into(),
            language: None,
            domain: None,
            extra: Map::new(),
        }
    }

    fn gt_real(id: &str, subset: Subset) -> GroundTruthRecord {
        GroundTruthRecord {
            verdict: ImageVerdict::Real,
            method: None,
            text: None,
            bbox: None,
            ..gt_tampered(id, subset, b(0.0, 0.0, 1.0, 1.0))
        }
    }

    fn perfect(gt: &GroundTruthRecord) -> PredictionRecord {
        PredictionRecord::tampered(
            gt.id.clone(),
            gt.method.unwrap(),
            gt.text.clone().unwrap(),
            gt.bbox.unwrap(),
            gt.reasoning_annotation.clone(),
        )
    }

    #[test]
    fn perfect_tampered_image() {
        let gt = gt_tampered("a", Subset::Test, b(0.0, 0.0, 10.0, 10.0));
        let s = score_image(Some(&perfect(&gt)), &gt).unwrap();
        assert_eq!((s.cls, s.ocr, s.loc), (1.0, Some(1.0), Some(1.0)));
        assert!((s.res - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unflagged_tampering_scores_zero() {
        let gt = gt_tampered("a", Subset::Test, b(0.0, 0.0, 10.0, 10.0));
        let p = PredictionRecord::real("a", "the glyph spacing is uneven");
        let s = score_image(Some(&p), &gt).unwrap();
        assert_eq!((s.cls, s.ocr, s.loc), (0.0, Some(0.0), Some(0.0)));
        assert!(s.res > 0.99);
    }

    #[test]
    fn real_image_has_no_region_metrics() {
        let gt = gt_real("r", Subset::Test);
        let s = score_image(Some(&PredictionRecord::real("r", "x")), &gt).unwrap();
        assert_eq!((s.cls, s.ocr, s.loc), (1.0, None, None));
    }

    #[test]
    fn id_mismatch() {
        let gt = gt_real("r", Subset::Test);
        assert!(score_image(Some(&PredictionRecord::real("q", "x")), &gt).is_err());
    }

    #[test]
    fn loc_mean_over_tampered() {
        let g1 = gt_tampered("a", Subset::Test, b(0.0, 0.0, 10.0, 10.0));
        let g2 = gt_tampered("b", Subset::Test, b(0.0, 0.0, 10.0, 10.0));
        let mut p1 = perfect(&g1);
        p1.bbox = Some(b(0.0, 0.0, 4.0, 10.0)); // IoU 0.4
        let mut p2 = perfect(&g2);
        p2.bbox = Some(b(0.0, 0.0, 8.0, 10.0)); // IoU 0.8
        let real = gt_real("c", Subset::Test);
        let out = evaluate(
            &[p1, p2, PredictionRecord::real("c", "")],
            &[g1, g2, real],
            &EvalOptions::default(),
        );
        let m = out.report.test.unwrap();
        assert_eq!(m.loc_iou, Some(60.0));
        assert_eq!(m.cls_acc, 100.0);
        assert_eq!((m.n_real, m.n_tampered, m.n_images), (1, 2, 3));
        assert!(out.report.cis.is_none());
    }

    #[test]
    fn all_missing_predictions() {
        let gts = vec![gt_real("a", Subset::Cl), gt_tampered("b", Subset::Cl, b(0.0, 0.0, 2.0, 2.0))];
        let out = evaluate(&[], &gts, &EvalOptions::default());
        let m = out.report.cl.unwrap();
        assert_eq!((m.cls_acc, m.n_missing_predictions), (0.0, 2));
        assert_eq!(m.loc_iou, Some(0.0));
    }

    #[test]
    fn unmatched_predictions_reported() {
        let out = evaluate(
            &[PredictionRecord::real("ghost", "")],
            &[gt_real("a", Subset::Test)],
            &EvalOptions::default(),
        );
        assert_eq!(out.unmatched_prediction_ids, vec!["ghost".to_string()]);
    }

    #[test]
    fn denominator_all() {
        let gts = vec![gt_real("a", Subset::Test), gt_tampered("b", Subset::Test, b(0.0, 0.0, 2.0, 2.0))];
        let preds = vec![PredictionRecord::real("a", ""), PredictionRecord::real("b", "")];
        let opts = EvalOptions {
            denominator: Denominator::All,
            ..EvalOptions::default()
        };
        let m = evaluate(&preds, &gts, &opts).report.test.unwrap();
        assert_eq!(m.loc_iou, Some(50.0));
        assert_eq!("all".parse::<Denominator>().unwrap(), Denominator::All);
    }

    #[test]
    fn multi_region_matching() {
        let g = [b(0.0, 0.0, 10.0, 10.0)];
        let one = match_multi_region(&[b(0.0, 0.0, 10.0, 10.0)], &g);
        assert_eq!(one.pairs, vec![(0, 0)]);

        let two = match_multi_region(&[b(50.0, 50.0, 60.0, 60.0), b(1.0, 0.0, 10.0, 10.0)], &g);
        assert_eq!(two.pairs, vec![(1, 0)]);
        assert_eq!(two.unmatched_preds, vec![0]);

        let none = match_multi_region(&[], &[g[0], b(20.0, 20.0, 30.0, 30.0)]);
        assert!(none.pairs.is_empty());
        assert_eq!(none.unmatched_gts, vec![0, 1]);
    }

    #[test]
    fn multi_region_image_scoring() {
        let g0 = gt_tampered("img#0", Subset::Test, b(0.0, 0.0, 10.0, 10.0));
        let g1 = gt_tampered("img#1", Subset::Test, b(50.0, 50.0, 60.0, 60.0));
        let mut p_extra = perfect(&g0);
        p_extra.id = "img#9".into();
        p_extra.bbox = Some(b(200.0, 200.0, 210.0, 210.0));
        let out = evaluate(&[perfect(&g0), p_extra], &[g0, g1], &EvalOptions::default());
        assert_eq!(out.images.len(), 1);
        let s = out.images[0].score;
        // one gt region perfect, the other matched to a far box
        assert_eq!(s.loc, Some(0.5));
        assert_eq!(s.false_positive_regions, 0);
        let m = out.report.test.unwrap();
        assert_eq!(m.n_images, 1);
    }

    #[test]
    fn report_formats() {
        let gts = vec![gt_tampered("a", Subset::Ctm, b(0.0, 0.0, 10.0, 10.0))];
        let preds = vec![perfect(&gts[0])];
        let report = evaluate(&preds, &gts, &EvalOptions::default()).report;
        let json = emit_report(std::slice::from_ref(&report), ReportFormat::Json);
        assert_eq!(json, emit_report(std::slice::from_ref(&report), ReportFormat::Json));
        let keys: Vec<&str> = ["\"label\"", "\"denominator\"", "\"test\"", "\"cis\"", "\"ctm\"", "\"cl\""]
            .into_iter()
            .collect();
        let positions: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));

        let md = emit_report(&[report.clone(), MetricReport { label: "other".into(), ..report.clone() }], ReportFormat::Markdown);
        let rows: Vec<&str> = md.lines().collect();
        assert_eq!(rows.len(), 4);
        assert!(rows[2].starts_with("| textshield | - | - | - | - | - | - | - | - | 100.0 | 100.0 | 100.0 | 100.0 |"));

        let csv = emit_report(&[report], ReportFormat::Csv);
        assert_eq!(csv.lines().nth(1).unwrap(), "textshield,ctm,100.0,100.0,100.0,100.0,1,0,0,1,0,0");
        assert_eq!("xml".parse::<ReportFormat>(), Err(EvalError::UnknownFormat("xml".into())));
    }
}
