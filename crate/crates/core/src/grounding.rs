//! Training-target builders for continual pre-training: OCR reference
//! grounding pairs on real images and three-part targets (description,
//! box, mask string) for tampered regions.

use serde::Serialize;
use thiserror::Error;

use crate::mask::{encode_mask_string, min_bbox, MaskError, MaskGrid};
use crate::model::{BBox, GroundTruthRecord, ImageVerdict, OcrLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundingDirection {
    /// Given a box, read its text.
    BoxToText,
    /// Given a text, locate its box.
    TextToBox,
}

#[derive(Debug, Error, PartialEq)]
pub enum GroundingError {
    #[error("grounding pairs are only built for real images (got {0})")]
    NotRealImage(ImageVerdict),
    #[error("instance index {index} out of range for a layout of {len} instances")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("layout id {layout:?} does not match record id {record:?}")]
    IdMismatch { record: String, layout: String },
}

/// Fields a grounding prompt is conditioned on.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum GroundingPrompt {
    BoxToText { bbox: BBox },
    TextToBox { text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum GroundingTarget {
    Text { text: String },
    Box { bbox: BBox },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundingPair {
    pub id: String,
    pub prompt: GroundingPrompt,
    pub target: GroundingTarget,
}

pub fn make_grounding_pair(
    gt: &GroundTruthRecord,
    layout: &OcrLayout,
    direction: GroundingDirection,
    instance_index: usize,
) -> Result<GroundingPair, GroundingError> {
    if gt.verdict != ImageVerdict::Real {
        return Err(GroundingError::NotRealImage(gt.verdict));
    }
    if gt.id != layout.id {
        return Err(GroundingError::IdMismatch {
            record: gt.id.clone(),
            layout: layout.id.clone(),
        });
    }
    let inst = layout
        .instances
        .get(instance_index)
        .ok_or(GroundingError::IndexOutOfRange {
            index: instance_index,
            len: layout.instances.len(),
        })?;
    let (prompt, target) = match direction {
        GroundingDirection::BoxToText => (
            GroundingPrompt::BoxToText { bbox: inst.bbox },
            GroundingTarget::Text {
                text: inst.text.clone(),
            },
        ),
        GroundingDirection::TextToBox => (
            GroundingPrompt::TextToBox {
                text: inst.text.clone(),
            },
            GroundingTarget::Box { bbox: inst.bbox },
        ),
    };
    Ok(GroundingPair {
        id: gt.id.clone(),
        prompt,
        target,
    })
}

/// Three-part supervision for one tampered region. The description comes
/// from an external captioning model and is passed through verbatim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForensicTarget {
    pub description: String,
    pub bbox: BBox,
    pub mask_string: String,
}

pub fn forensic_target(description: &str, mask: &MaskGrid) -> Result<ForensicTarget, MaskError> {
    Ok(ForensicTarget {
        description: description.to_owned(),
        bbox: min_bbox(mask)?,
        mask_string: encode_mask_string(mask),
    })
}
