use std::collections::HashMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use serde_json::Value;

use textshield_core::eval::{self, Denominator, EvalOptions, ReportFormat, ResScorer};
use textshield_core::fixtures::{self, FixtureParams};
use textshield_core::geometry;
use textshield_core::io::{self, read_groundtruth, read_layouts, read_predictions, to_jsonl};
use textshield_core::mask::{self, MaskError};
use textshield_core::model::{BBox, GroundTruthRecord, PredictionRecord, SchemaError, SchemaErrors};
use textshield_core::parser::{parse_completion, ParsedOutput};
use textshield_core::rectify::{rectify_batch, RectifyConfig};
use textshield_core::rewards::{batch_advantages, reward_batch, RewardItem, RewardVector, RewardWeights};
use textshield_core::text_metrics::{self, tokenize, BLEU_MAX_N};

use crate::args::{
    DenominatorArg, EvaluateArgs, FixturesCommand, MaskCommand, MetricsArgs, ParseArgs, Primitive,
    RectifyArgs, ReportKind, RewardArgs,
};
use crate::output::{emit, require_input, require_output_dir, write_atomic};
use crate::CliError;

fn check_outputs<'a>(paths: impl IntoIterator<Item = Option<&'a PathBuf>>) -> Result<(), CliError> {
    paths
        .into_iter()
        .flatten()
        .try_for_each(|p| require_output_dir(p))
}

fn schema_failure(path: &Path, problems: &[(usize, SchemaErrors)]) -> CliError {
    let mut msg = format!("{}: {} invalid record(s)", path.display(), problems.len());
    for (line, errs) in problems.iter().take(20) {
        msg.push_str(&format!("\n  line {line}: {errs}"));
    }
    CliError::Input(msg)
}

struct RawCompletion {
    id: String,
    raw: String,
}

fn read_raw_completions(path: &Path) -> Result<Vec<RawCompletion>, CliError> {
    io::read_records(path, |v| {
        let field = |k: &str| match v.get(k) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(SchemaError::new(k, "expected a string")),
            None => Err(SchemaError::new(k, "missing required field")),
        };
        match (field("id"), field("raw")) {
            (Ok(id), Ok(raw)) => Ok(RawCompletion { id, raw }),
            (a, b) => Err(SchemaErrors([a.err(), b.err()].into_iter().flatten().collect())),
        }
    })
    .map_err(Into::into)
}

#[derive(Serialize)]
struct ParseDiagnostics<'a> {
    id: &'a str,
    format_ok: bool,
    tags_ok: bool,
    payload_ok: bool,
    diagnostics: &'a [String],
}

pub fn parse(a: ParseArgs) -> Result<(), CliError> {
    require_input(&a.input)?;
    let diag_path = a.diagnostics.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".diagnostics.jsonl");
        p.into()
    });
    check_outputs([Some(&a.out), Some(&diag_path)])?;

    let raws = read_raw_completions(&a.input)?;
    let parsed: Vec<ParsedOutput> = {
        use rayon::prelude::*;
        raws.par_iter().map(|r| parse_completion(&r.raw)).collect()
    };
    let mut preds = Vec::new();
    let mut diags = Vec::with_capacity(raws.len());
    for (r, p) in raws.iter().zip(&parsed) {
        if let Some(rec) = p.to_prediction(&r.id, Some(&r.raw)) {
            preds.push(rec);
        }
        diags.push(ParseDiagnostics {
            id: &r.id,
            format_ok: p.format_ok,
            tags_ok: p.tags_ok,
            payload_ok: p.payload_ok,
            diagnostics: &p.diagnostics,
        });
    }
    let dropped = raws.len() - preds.len();
    if dropped > 0 {
        warn!("{dropped} of {} completions had no usable answer", raws.len());
    }
    write_atomic(&a.out, to_jsonl(&preds).as_bytes())?;
    write_atomic(&diag_path, to_jsonl(&diags).as_bytes())?;
    info!("parsed {} completions into {}", raws.len(), a.out.display());
    Ok(())
}

#[allow(clippy::large_enum_variant)]
enum RewardInput {
    Record {
        pred: PredictionRecord,
        parsed: ParsedOutput,
    },
    Raw(RawCompletion),
}

impl RewardInput {
    fn id(&self) -> &str {
        match self {
            Self::Record { pred, .. } => &pred.id,
            Self::Raw(r) => &r.id,
        }
    }
}

/// Lines carrying `raw` without `verdict` are completions; the rest are records.
fn read_reward_inputs(path: &Path) -> Result<Vec<RewardInput>, CliError> {
    let values = io::read_jsonl_values(path)?;
    let mut out = Vec::with_capacity(values.len());
    let mut problems = Vec::new();
    let mut without_raw = 0usize;
    for (line, v) in values {
        let is_raw = v.get("raw").is_some() && v.get("verdict").is_none();
        if is_raw {
            match (v.get("id").and_then(Value::as_str), v.get("raw").and_then(Value::as_str)) {
                (Some(id), Some(raw)) => out.push(RewardInput::Raw(RawCompletion {
                    id: id.to_owned(),
                    raw: raw.to_owned(),
                })),
                _ => problems.push((
                    line,
                    SchemaErrors(vec![SchemaError::new("id/raw", "expected strings")]),
                )),
            }
            continue;
        }
        match PredictionRecord::from_json(&v) {
            Ok(pred) => {
                // format compliance can only be judged on the raw completion
                let parsed = match &pred.raw_output {
                    Some(raw) => parse_completion(raw),
                    None => {
                        without_raw += 1;
                        ParsedOutput::default()
                    }
                };
                out.push(RewardInput::Record { pred, parsed });
            }
            Err(e) => problems.push((line, e)),
        }
    }
    if !problems.is_empty() {
        return Err(schema_failure(path, &problems));
    }
    if without_raw > 0 {
        warn!("{without_raw} prediction(s) lack raw_output; their format reward is 0");
    }
    Ok(out)
}

fn index_groundtruth(gts: &[GroundTruthRecord]) -> Result<HashMap<&str, &GroundTruthRecord>, CliError> {
    let mut by_id = HashMap::with_capacity(gts.len());
    for g in gts {
        if by_id.insert(g.id.as_str(), g).is_some() {
            return Err(CliError::Consistency(format!("duplicate ground-truth id {:?}", g.id)));
        }
    }
    Ok(by_id)
}

#[derive(Serialize)]
struct RewardLine<'a> {
    #[serde(flatten)]
    rewards: &'a RewardVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    advantage: Option<f64>,
}

pub fn reward(a: RewardArgs) -> Result<(), CliError> {
    require_input(&a.pred)?;
    require_input(&a.gt)?;
    check_outputs([a.out.as_ref()])?;
    let weights: RewardWeights = a.weights.parse().map_err(|e| CliError::Usage(format!("--weights: {e}")))?;
    if let Some(g) = a.group_size {
        if g < 2 {
            return Err(CliError::Usage("--group-size must be at least 2".into()));
        }
    }

    let inputs = read_reward_inputs(&a.pred)?;
    let gts = read_groundtruth(&a.gt)?;
    let by_id = index_groundtruth(&gts)?;

    let mut items = Vec::with_capacity(inputs.len());
    for input in &inputs {
        let gt = by_id
            .get(input.id())
            .ok_or_else(|| CliError::Consistency(format!("no ground truth for prediction id {:?}", input.id())))?;
        items.push(match input {
            RewardInput::Record { pred, parsed } => RewardItem::Parsed { pred, parsed, gt },
            RewardInput::Raw(r) => RewardItem::Raw {
                id: &r.id,
                raw: &r.raw,
                gt,
            },
        });
    }
    let vectors = reward_batch(&items, &weights)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Consistency(e.to_string()))?;

    let advantages = match a.group_size {
        Some(g) => {
            if vectors.len() % g != 0 {
                return Err(CliError::Consistency(format!(
                    "{} predictions do not split into groups of {g}",
                    vectors.len()
                )));
            }
            let composites: Vec<f64> = vectors.iter().map(|v| v.composite).collect();
            Some(batch_advantages(&composites, g).map_err(|e| CliError::Usage(e.to_string()))?)
        }
        None => None,
    };
    let lines = vectors.iter().enumerate().map(|(i, rewards)| RewardLine {
        rewards,
        group: a.group_size.map(|g| i / g),
        advantage: advantages.as_ref().map(|adv| adv[i]),
    });
    emit(a.out.as_deref(), &to_jsonl(lines))
}

pub fn rectify(a: RectifyArgs) -> Result<(), CliError> {
    require_input(&a.pred)?;
    require_input(&a.ocr)?;
    check_outputs([a.out.as_ref(), a.audit.as_ref()])?;
    let cfg = RectifyConfig::new(a.threshold).map_err(|e| CliError::Usage(e.to_string()))?;
    let preds = read_predictions(&a.pred)?;
    let layouts = read_layouts(&a.ocr)?;
    let results = rectify_batch(&preds, &layouts, &cfg);
    for (_, audit) in &results {
        if let Some(w) = &audit.warning {
            warn!("{w}");
        }
    }
    if let Some(audit) = &a.audit {
        write_atomic(audit, to_jsonl(results.iter().map(|(_, au)| au)).as_bytes())?;
    }
    emit(a.out.as_deref(), &to_jsonl(results.iter().map(|(p, _)| p)))
}

pub fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    require_input(&a.pred)?;
    require_input(&a.gt)?;
    if let Some(ocr) = &a.ocr {
        require_input(ocr)?;
    }
    check_outputs([a.out.as_ref()])?;

    let mut preds = read_predictions(&a.pred)?;
    let gts = read_groundtruth(&a.gt)?;
    if a.rectified {
        let ocr = a.ocr.as_ref().expect("clap enforces --ocr with --rectified");
        let cfg = RectifyConfig::new(a.threshold).map_err(|e| CliError::Usage(e.to_string()))?;
        let layouts = read_layouts(ocr)?;
        preds = rectify_batch(&preds, &layouts, &cfg)
            .into_iter()
            .map(|(p, audit)| {
                if let Some(w) = audit.warning {
                    warn!("{w}");
                }
                p
            })
            .collect();
    }

    let opts = EvalOptions {
        label: a.label.clone(),
        denominator: match a.denominator {
            DenominatorArg::Tampered => Denominator::Tampered,
            DenominatorArg::All => Denominator::All,
        },
        res: ResScorer::default(),
    };
    let outcome = eval::evaluate(&preds, &gts, &opts);
    let unmatched = &outcome.unmatched_prediction_ids;
    for id in unmatched.iter().take(20) {
        warn!("prediction {id:?} has no ground truth");
    }
    if unmatched.len() > a.max_unmatched {
        return Err(CliError::Consistency(format!(
            "{} prediction id(s) without ground truth (budget {})",
            unmatched.len(),
            a.max_unmatched
        )));
    }
    let format = match a.report {
        ReportKind::Md => ReportFormat::Markdown,
        ReportKind::Json => ReportFormat::Json,
        ReportKind::Csv => ReportFormat::Csv,
    };
    emit(a.out.as_deref(), &eval::emit_report(&[outcome.report], format))
}

fn mask_error(e: MaskError) -> CliError {
    CliError::Input(e.to_string())
}

pub fn mask(cmd: MaskCommand) -> Result<(), CliError> {
    match cmd {
        MaskCommand::Encode { input, bbox } => {
            require_input(&input)?;
            let m = mask::load_mask(&input).map_err(mask_error)?;
            let mut out = mask::encode_mask_string(&m);
            out.push('\n');
            if bbox {
                let b = mask::min_bbox(&m).map_err(mask_error)?;
                out.push_str(&serde_json::to_string(&b).expect("bbox serializes"));
                out.push('\n');
            }
            emit(None, &out)
        }
        MaskCommand::Decode { string, input, out } => {
            check_outputs([Some(&out)])?;
            let bits = match (string, input) {
                (Some(s), _) => s,
                (None, Some(path)) => {
                    require_input(&path)?;
                    std::fs::read_to_string(&path)
                        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
                        .trim()
                        .to_owned()
                }
                (None, None) => return Err(CliError::Usage("give --string or --input".into())),
            };
            let m = mask::decode_mask_string(&bits).map_err(mask_error)?;
            write_atomic(&out, &mask::write_pgm(&m))
        }
    }
}

fn parse_box(s: &str) -> Result<BBox, CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("box {s:?}: expected x1,y1,x2,y2")))?;
    let [x1, y1, x2, y2] = parts[..] else {
        return Err(CliError::Usage(format!("box {s:?}: expected 4 numbers")));
    };
    BBox::new(x1, y1, x2, y2).map_err(|e| CliError::Usage(format!("box {s:?}: {e}")))
}

pub fn metrics(a: MetricsArgs) -> Result<(), CliError> {
    let second = || {
        a.b.as_deref()
            .ok_or_else(|| CliError::Usage("this primitive takes two operands".into()))
    };
    let metric_err = |e: text_metrics::MetricError| CliError::Usage(e.to_string());
    let value: Value = match a.primitive {
        Primitive::Lev => text_metrics::levenshtein(&a.a, second()?).into(),
        Primitive::Nlev => text_metrics::normed_levenshtein(&a.a, second()?).into(),
        Primitive::Tokenize => tokenize(&a.a).tokens.into(),
        Primitive::Bleu => text_metrics::bleu(&tokenize(&a.a), &tokenize(second()?), BLEU_MAX_N)
            .map_err(metric_err)?
            .into(),
        Primitive::Rouge => text_metrics::rouge_l(&tokenize(&a.a), &tokenize(second()?))
            .map_err(metric_err)?
            .into(),
        Primitive::Cosine => text_metrics::cosine_sim(&tokenize(&a.a), &tokenize(second()?)).into(),
        Primitive::Res => ResScorer::default().score(&a.a, second()?).into(),
        Primitive::Iou => geometry::iou(&parse_box(&a.a)?, &parse_box(second()?)?).into(),
        Primitive::Diou => {
            serde_json::to_value(geometry::geom_scalars(&parse_box(&a.a)?, &parse_box(second()?)?))
                .expect("scalars serialize")
        }
    };
    emit(None, &format!("{value}\n"))
}

pub fn fixtures(cmd: FixturesCommand) -> Result<(), CliError> {
    let FixturesCommand::Gen {
        seed,
        n,
        out_dir,
        text_noise,
        target_iou,
        iou_spread,
        duplicate_rate,
    } = cmd;
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    for (name, v) in [
        ("--text-noise", text_noise),
        ("--target-iou", target_iou),
        ("--iou-spread", iou_spread),
        ("--duplicate-rate", duplicate_rate),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::Usage(format!("{name} must lie in [0, 1]")));
        }
    }
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Output(format!("{}: {e}", out_dir.display())))?;
    let f = fixtures::generate(&FixtureParams {
        n,
        seed,
        text_noise,
        target_iou,
        iou_spread,
        duplicate_rate,
        ..FixtureParams::default()
    });
    write_atomic(&out_dir.join("groundtruth.jsonl"), to_jsonl(&f.groundtruth).as_bytes())?;
    write_atomic(&out_dir.join("ocr.jsonl"), to_jsonl(&f.layouts).as_bytes())?;
    write_atomic(&out_dir.join("predictions.jsonl"), to_jsonl(&f.predictions).as_bytes())?;
    info!("wrote {n} fixture images to {}", out_dir.display());
    Ok(())
}
