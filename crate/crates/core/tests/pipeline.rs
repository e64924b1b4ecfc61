use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use textshield_core::eval::{emit_report, evaluate, EvalOptions, ReportFormat};
use textshield_core::fixtures::{generate, FixtureParams};
use textshield_core::io::{parse_jsonl, to_jsonl};
use textshield_core::model::{GroundTruthRecord, OcrLayout, PredictionRecord};
use textshield_core::rectify::{rectify_batch, RectifyConfig, RectifySource};

fn small_corpus() -> textshield_core::fixtures::Fixtures {
    generate(&FixtureParams {
        n: 300,
        ..FixtureParams::default()
    })
}

fn all_formats(preds: &[PredictionRecord], gts: &[GroundTruthRecord]) -> Vec<String> {
    let outcome = evaluate(preds, gts, &EvalOptions::default());
    [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown]
        .map(|f| emit_report(std::slice::from_ref(&outcome.report), f))
        .to_vec()
}

#[test]
fn evaluation_ignores_record_order() {
    let f = small_corpus();
    let reference = all_formats(&f.predictions, &f.groundtruth);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let mut preds = f.predictions.clone();
        let mut gts = f.groundtruth.clone();
        preds.shuffle(&mut rng);
        gts.shuffle(&mut rng);
        assert_eq!(all_formats(&preds, &gts), reference);
    }
}

#[test]
fn evaluation_ignores_worker_count() {
    let f = small_corpus();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| all_formats(&f.predictions, &f.groundtruth))
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn rectification_only_moves_localization() {
    let f = small_corpus();
    let cfg = RectifyConfig::new(0.2).unwrap();
    let rectified: Vec<PredictionRecord> = rectify_batch(&f.predictions, &f.layouts, &cfg)
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    let before = evaluate(&f.predictions, &f.groundtruth, &EvalOptions::default()).report;
    let after = evaluate(&rectified, &f.groundtruth, &EvalOptions::default()).report;
    for (b, a) in [
        (&before.test, &after.test),
        (&before.cis, &after.cis),
        (&before.ctm, &after.ctm),
        (&before.cl, &after.cl),
    ] {
        let (b, a) = (b.as_ref().unwrap(), a.as_ref().unwrap());
        assert_eq!(b.cls_acc, a.cls_acc);
        assert_eq!(b.ocr_score, a.ocr_score);
        assert_eq!(b.res_score, a.res_score);
        assert!(a.loc_iou.unwrap() > b.loc_iou.unwrap());
        assert!(a.loc_iou.unwrap() >= 95.0);
    }
}

#[test]
fn duplicated_texts_are_resolved_by_diou() {
    let f = generate(&FixtureParams {
        n: 400,
        duplicate_rate: 1.0,
        ..FixtureParams::default()
    });
    let cfg = RectifyConfig::new(0.2).unwrap();
    let results = rectify_batch(&f.predictions, &f.layouts, &cfg);
    let diou_wins = results
        .iter()
        .filter(|(_, a)| a.outcome.as_ref().map(|o| o.source) == Some(RectifySource::OcrDiou))
        .count();
    assert!(diou_wins > 0);
    for ((p, audit), gt) in results.iter().zip(&f.groundtruth) {
        if audit.outcome.as_ref().map(|o| o.source) == Some(RectifySource::OcrDiou) {
            assert_eq!(p.bbox, gt.bbox, "{}", p.id);
        }
    }
}

#[test]
fn fixtures_survive_jsonl() {
    let f = small_corpus();
    let reload = |text: String| -> Vec<serde_json::Value> {
        parse_jsonl(&text).unwrap().into_iter().map(|(_, v)| v).collect()
    };
    for (v, g) in reload(to_jsonl(&f.groundtruth)).iter().zip(&f.groundtruth) {
        assert_eq!(&GroundTruthRecord::from_json(v).unwrap(), g);
    }
    for (v, l) in reload(to_jsonl(&f.layouts)).iter().zip(&f.layouts) {
        assert_eq!(&OcrLayout::from_json(v).unwrap(), l);
    }
    for (v, p) in reload(to_jsonl(&f.predictions)).iter().zip(&f.predictions) {
        assert_eq!(&PredictionRecord::from_json(v).unwrap(), p);
    }
}
