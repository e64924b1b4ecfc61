//! Deterministic synthetic corpora: ground truth, OCR layouts and noisy
//! predictions for exercising rectification and the evaluation harness.
//!
//! OCR layout boxes coincide with the ground-truth boxes. Predicted texts
//! get `floor(text_noise * len)` substitutions and predicted boxes are
//! displaced so each IoU with the gold box is drawn uniformly from
//! `target_iou +- iou_spread`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Map;

use crate::model::{
    BBox, ForgeryMethod, GroundTruthRecord, ImageVerdict, OcrInstance, OcrLayout, PredictionRecord,
    Subset,
};
use crate::text_metrics::normed_levenshtein;

const ALPHABET: &[u8] = b"ABCDEFGHJKLMNPQRSTUVWXYZ0123456789";
const WORDS: &[&str] = &[
    "the", "stroke", "width", "of", "digits", "is", "uneven", "near", "total", "amount", "font",
    "kerning", "differs", "from", "surrounding", "text", "background", "texture", "shows", "a",
    "blurred", "patch", "edges", "are", "sharp", "lighting", "consistent", "no", "visible",
    "artifacts", "color", "bleeding", "around", "characters", "baseline", "shifted", "compression",
    "noise", "pattern", "breaks", "at", "this", "region", "image", "looks", "natural", "printed",
    "receipt", "invoice", "date", "field", "signature",
];
const CHAR_W: f64 = 18.0;
const LINE_H: f64 = 40.0;
const LINE_PITCH: f64 = 110.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureParams {
    pub n: usize,
    pub seed: u64,
    /// Fraction of characters substituted in predicted tampered texts.
    pub text_noise: f64,
    /// Centre of the IoU band for predicted boxes; 1 disables jitter.
    pub target_iou: f64,
    pub iou_spread: f64,
    pub real_fraction: f64,
    pub generated_fraction: f64,
    /// Probability of a second OCR instance repeating the tampered text elsewhere.
    pub duplicate_rate: f64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: 7,
            text_noise: 0.1,
            target_iou: 0.35,
            iou_spread: 0.05,
            real_fraction: 0.2,
            generated_fraction: 0.1,
            duplicate_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixtures {
    pub groundtruth: Vec<GroundTruthRecord>,
    pub layouts: Vec<OcrLayout>,
    pub predictions: Vec<PredictionRecord>,
}

fn random_word(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(5..=12);
    (0..len)
        .map(|_| *ALPHABET.choose(rng).expect("non-empty alphabet") as char)
        .collect()
}

/// Substitutes `floor(rate * len)` distinct positions.
fn corrupt(rng: &mut ChaCha8Rng, text: &str, rate: f64) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let edits = (rate * chars.len() as f64).floor() as usize;
    let mut positions: Vec<usize> = (0..chars.len()).collect();
    positions.shuffle(rng);
    for &i in positions.iter().take(edits) {
        loop {
            let c = *ALPHABET.choose(rng).expect("non-empty alphabet") as char;
            if c != chars[i] {
                chars[i] = c;
                break;
            }
        }
    }
    chars.into_iter().collect()
}

fn sentence(rng: &mut ChaCha8Rng) -> Vec<&'static str> {
    let len = rng.gen_range(8..=20);
    (0..len)
        .map(|_| *WORDS.choose(rng).expect("non-empty word list"))
        .collect()
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn line_box(rng: &mut ChaCha8Rng, line: usize, chars: usize) -> BBox {
    let x1 = round2(rng.gen_range(250.0..600.0));
    let y1 = 60.0 + LINE_PITCH * line as f64;
    BBox::new(x1, y1, x1 + CHAR_W * chars as f64, y1 + LINE_H).expect("fixture box is valid")
}

/// Displaces a box so that its IoU with the original is `iou`.
///
/// A shift leaving overlap fraction `a` of the area gives IoU `a / (2 - a)`,
/// so `a = 2 iou / (1 + iou)`, split between the axes as `a^l * a^(1-l)`.
fn jitter(rng: &mut ChaCha8Rng, gt: &BBox, iou: f64) -> BBox {
    if iou >= 1.0 {
        return *gt;
    }
    let overlap = 2.0 * iou / (1.0 + iou);
    let split: f64 = rng.gen_range(0.0..1.0);
    let dx = gt.width() * (1.0 - overlap.powf(split));
    let dy = gt.height() * (1.0 - overlap.powf(1.0 - split));
    let sx = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let sy = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    gt.translated(sx * dx, sy * dy)
        .expect("fixture boxes sit far enough from the origin")
}

pub fn generate(params: &FixtureParams) -> Fixtures {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut out = Fixtures {
        groundtruth: Vec::with_capacity(params.n),
        layouts: Vec::with_capacity(params.n),
        predictions: Vec::with_capacity(params.n),
    };
    for i in 0..params.n {
        let id = format!("img{i:05}");
        let subset = *Subset::ALL.choose(&mut rng).expect("four subsets");
        let roll: f64 = rng.gen_range(0.0..1.0);
        let verdict = if roll < params.real_fraction {
            ImageVerdict::Real
        } else if roll < params.real_fraction + params.generated_fraction {
            ImageVerdict::Generated
        } else {
            ImageVerdict::Tampered
        };

        let lines = rng.gen_range(3..=7);
        let target_line = rng.gen_range(0..lines);
        let target_text = random_word(&mut rng);
        let mut instances = Vec::with_capacity(lines + 1);
        for line in 0..lines {
            let text = if line == target_line {
                target_text.clone()
            } else {
                // distractors stay far from the target in edit space
                loop {
                    let w = random_word(&mut rng);
                    if normed_levenshtein(&w, &target_text) > 0.5 {
                        break w;
                    }
                }
            };
            let bbox = line_box(&mut rng, line, text.chars().count());
            instances.push(OcrInstance { text, bbox });
        }
        if verdict == ImageVerdict::Tampered && rng.gen_bool(params.duplicate_rate) {
            let bbox = line_box(&mut rng, lines + 1, target_text.chars().count());
            instances.push(OcrInstance {
                text: target_text.clone(),
                bbox,
            });
        }
        let gt_box = instances[target_line].bbox;

        let reasoning = sentence(&mut rng);
        let pred_reasoning: Vec<&str> = reasoning
            .iter()
            .map(|&w| {
                if rng.gen_bool(params.text_noise.clamp(0.0, 1.0)) {
                    *WORDS.choose(&mut rng).expect("non-empty word list")
                } else {
                    w
                }
            })
            .collect();
        let reasoning = reasoning.join(" ");
        let pred_reasoning = pred_reasoning.join(" ");

        let method = if rng.gen_bool(0.5) {
            ForgeryMethod::CopyPaste
        } else {
            ForgeryMethod::Generation
        };
        let tampered = verdict == ImageVerdict::Tampered;
        out.groundtruth.push(GroundTruthRecord {
            id: id.clone(),
            subset,
            verdict,
            method: tampered.then_some(method),
            text: tampered.then(|| target_text.clone()),
            bbox: tampered.then_some(gt_box),
            mask: None,
            reasoning_annotation: reasoning,
            language: Some("en".into()),
            domain: None,
            extra: Map::new(),
        });

        let pred = if tampered {
            let iou = if params.target_iou >= 1.0 {
                1.0
            } else {
                let lo = (params.target_iou - params.iou_spread).max(0.01);
                let hi = (params.target_iou + params.iou_spread).min(0.99);
                if lo < hi {
                    rng.gen_range(lo..hi)
                } else {
                    lo
                }
            };
            PredictionRecord::tampered(
                id.clone(),
                method,
                corrupt(&mut rng, &target_text, params.text_noise),
                jitter(&mut rng, &gt_box, iou),
                pred_reasoning,
            )
        } else {
            PredictionRecord::untampered(id.clone(), verdict, pred_reasoning)
        };
        out.predictions.push(pred);
        out.layouts.push(OcrLayout {
            id,
            instances,
            extra: Map::new(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::iou;

    #[test]
    fn deterministic() {
        let p = FixtureParams {
            n: 50,
            ..FixtureParams::default()
        };
        assert_eq!(generate(&p), generate(&p));
        let other = generate(&FixtureParams { seed: 8, ..p.clone() });
        assert_ne!(generate(&p), other);
    }

    #[test]
    fn jitter_hits_requested_iou() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gt = BBox::new(300.0, 300.0, 480.0, 340.0).unwrap();
        for target in [0.1, 0.35, 0.5, 0.9] {
            let j = jitter(&mut rng, &gt, target);
            assert!((iou(&gt, &j) - target).abs() < 1e-9, "{target}");
        }
    }

    #[test]
    fn text_noise_is_bounded() {
        let f = generate(&FixtureParams {
            n: 200,
            ..FixtureParams::default()
        });
        for (g, p) in f.groundtruth.iter().zip(&f.predictions) {
            if let (Some(gt), Some(pt)) = (&g.text, &p.text) {
                assert!(normed_levenshtein(gt, pt) <= 0.1);
            }
        }
    }

    #[test]
    fn ocr_boxes_equal_gold_boxes() {
        let f = generate(&FixtureParams {
            n: 100,
            ..FixtureParams::default()
        });
        for (g, l) in f.groundtruth.iter().zip(&f.layouts) {
            if let Some(b) = g.bbox {
                assert!(l.instances.iter().any(|i| i.bbox == b && Some(&i.text) == g.text.as_ref()));
            }
        }
    }
}
