//! Axis-aligned box arithmetic in continuous pixel coordinates.

use serde::Serialize;

use crate::model::BBox;

/// Overlap area of two boxes (0 when disjoint or touching).
pub fn intersection_area(a: &BBox, b: &BBox) -> f64 {
    let w = (a.x2().min(b.x2()) - a.x1().max(b.x1())).max(0.0);
    let h = (a.y2().min(b.y2()) - a.y1().max(b.y1())).max(0.0);
    w * h
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = intersection_area(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).min(1.0)
}

/// Smallest box containing both inputs.
pub fn enclosing(a: &BBox, b: &BBox) -> BBox {
    BBox::new(
        a.x1().min(b.x1()),
        a.y1().min(b.y1()),
        a.x2().max(b.x2()),
        a.y2().max(b.y2()),
    )
    .expect("enclosing box of two valid boxes is valid")
}

/// Squared Euclidean distance between box centers.
pub fn center_distance_sq(a: &BBox, b: &BBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).powi(2) + (ay - by).powi(2)
}

/// IoU, Distance-IoU and their ingredients for one box pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeomScalars {
    pub iou: f64,
    pub diou: f64,
    /// Distance between centers.
    pub rho: f64,
    /// Diagonal of the enclosing box.
    pub c: f64,
}

pub fn geom_scalars(a: &BBox, b: &BBox) -> GeomScalars {
    let iou = iou(a, b);
    let rho_sq = center_distance_sq(a, b);
    let enc = enclosing(a, b);
    let c_sq = enc.width().powi(2) + enc.height().powi(2);
    GeomScalars {
        iou,
        diou: iou - rho_sq / c_sq,
        rho: rho_sq.sqrt(),
        c: c_sq.sqrt(),
    }
}

/// Distance-IoU: `iou - rho^2 / c^2`. Negative for distant boxes; never clamped.
pub fn diou(a: &BBox, b: &BBox) -> f64 {
    geom_scalars(a, b).diou
}
