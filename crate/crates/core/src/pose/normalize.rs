use serde::{Deserialize, Serialize};

use crate::ingest::{KeypointFrame, KEYPOINT_COUNT};
use crate::time::Timestamp;

/// Detections below this confidence are treated as missing.
pub const MIN_CONFIDENCE: f64 = 0.1;

/// Maps the 14 feature keypoints onto the 18-point skeleton, and names the
/// joints that define the torso.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoseLayout {
    /// `points[k - 1]` is the skeleton index of feature keypoint `k`.
    pub points: [usize; 14],
    pub neck: usize,
    pub r_hip: usize,
    pub l_hip: usize,
}

impl Default for PoseLayout {
    fn default() -> Self {
        PoseLayout { points: [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14], neck: 1, r_hip: 8, l_hip: 11 }
    }
}

/// Point state after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointState {
    Observed,
    Carried,
    Missing,
}

/// A skeleton in torso units with the neck at the origin. The pixel origin
/// and scale are kept so displacements between frames can be measured.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFrame {
    pub t: Timestamp,
    pub points: [[f64; 2]; KEYPOINT_COUNT],
    pub state: [PointState; KEYPOINT_COUNT],
    pub origin_px: [f64; 2],
    pub scale_px: f64,
    pub valid: bool,
}

impl NormalizedFrame {
    fn invalid(t: Timestamp) -> Self {
        NormalizedFrame {
            t,
            points: [[0.0; 2]; KEYPOINT_COUNT],
            state: [PointState::Missing; KEYPOINT_COUNT],
            origin_px: [0.0; 2],
            scale_px: 1.0,
            valid: false,
        }
    }

    /// Pixel position of point `j`.
    pub fn pixel(&self, j: usize) -> [f64; 2] {
        [self.origin_px[0] + self.scale_px * self.points[j][0], self.origin_px[1] + self.scale_px * self.points[j][1]]
    }

    pub fn is_usable(&self, j: usize) -> bool {
        self.state[j] != PointState::Missing
    }
}

fn observed(frame: &KeypointFrame, j: usize) -> Option<[f64; 2]> {
    let p = frame.points[j];
    (p.c >= MIN_CONFIDENCE && p.x.is_finite() && p.y.is_finite()).then_some([p.x, p.y])
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Translates the skeleton so the neck is the origin and divides by the
/// neck to mid-hip distance. Missing points reuse the previous frame's
/// normalized position; a missing neck or torso scale reuses the previous
/// frame's. Without a usable previous frame such a frame is invalid.
pub fn normalize_skeleton(frame: &KeypointFrame, prev: Option<&NormalizedFrame>, layout: &PoseLayout) -> NormalizedFrame {
    let prev = prev.filter(|p| p.valid);
    let neck = observed(frame, layout.neck);
    let origin = match (neck, prev) {
        (Some(n), _) => n,
        (None, Some(p)) => p.origin_px,
        (None, None) => return NormalizedFrame::invalid(frame.t),
    };
    let hips: Vec<[f64; 2]> = [layout.r_hip, layout.l_hip].iter().filter_map(|&j| observed(frame, j)).collect();
    let measured = if hips.is_empty() {
        None
    } else {
        let mid = [hips.iter().map(|h| h[0]).sum::<f64>() / hips.len() as f64, hips.iter().map(|h| h[1]).sum::<f64>() / hips.len() as f64];
        Some(dist(origin, mid)).filter(|s| *s > 1e-9 && s.is_finite())
    };
    let scale = match (measured, prev) {
        (Some(s), _) => s,
        (None, Some(p)) => p.scale_px,
        (None, None) => return NormalizedFrame::invalid(frame.t),
    };

    let mut out = NormalizedFrame {
        t: frame.t,
        points: [[0.0; 2]; KEYPOINT_COUNT],
        state: [PointState::Missing; KEYPOINT_COUNT],
        origin_px: origin,
        scale_px: scale,
        valid: true,
    };
    for j in 0..KEYPOINT_COUNT {
        if let Some(p) = observed(frame, j) {
            out.points[j] = [(p[0] - origin[0]) / scale, (p[1] - origin[1]) / scale];
            out.state[j] = PointState::Observed;
        } else if let Some(pf) = prev.filter(|pf| pf.is_usable(j)) {
            out.points[j] = pf.points[j];
            out.state[j] = PointState::Carried;
        }
    }
    if neck.is_none() {
        out.points[layout.neck] = [0.0, 0.0];
        out.state[layout.neck] = PointState::Carried;
    }
    out
}

/// Normalizes a time-ordered stream of one person's frames, chaining the
/// carry-forward state.
pub fn normalize_stream(frames: &[KeypointFrame], layout: &PoseLayout) -> Vec<NormalizedFrame> {
    let mut out: Vec<NormalizedFrame> = Vec::with_capacity(frames.len());
    for f in frames {
        let n = normalize_skeleton(f, out.last(), layout);
        out.push(n);
    }
    out
}
