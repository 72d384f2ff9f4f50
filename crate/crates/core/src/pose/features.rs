use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::normalize::{NormalizedFrame, PointState, PoseLayout};
use crate::time::Timestamp;

pub const POSE_FEATURE_COUNT: usize = 52;

/// Column offsets of each feature family inside a row.
pub const EU_OFFSET: usize = 0;
pub const EU1_OFFSET: usize = 14;
pub const POR_OFFSET: usize = 26;
pub const ANG_OFFSET: usize = 39;

/// Canonical pose feature names:
/// `eu_1..eu_14`, `eu_1_3..eu_1_14`, `por_2_1..por_14_1`, `ang_1_2..ang_1_14`.
pub fn pose_feature_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let mut v: Vec<String> = (1..=14).map(|i| format!("eu_{i}")).collect();
        v.extend((3..=14).map(|j| format!("eu_1_{j}")));
        v.extend((2..=14).map(|j| format!("por_{j}_1")));
        v.extend((2..=14).map(|j| format!("ang_1_{j}")));
        v
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseFeatureRow {
    pub t: Timestamp,
    #[serde(with = "values_serde")]
    pub values: [f64; POSE_FEATURE_COUNT],
    pub valid: bool,
}

mod values_serde {
    use super::POSE_FEATURE_COUNT;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64; POSE_FEATURE_COUNT], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; POSE_FEATURE_COUNT], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into().map_err(|v: Vec<f64>| serde::de::Error::invalid_length(v.len(), &"52 values"))
    }
}

impl PoseFeatureRow {
    pub fn invalid(t: Timestamp) -> Self {
        PoseFeatureRow { t, values: [0.0; POSE_FEATURE_COUNT], valid: false }
    }

    /// Displacement of feature keypoint `i` (1-based) since the previous frame.
    pub fn eu(&self, i: usize) -> f64 {
        self.values[EU_OFFSET + i - 1]
    }

    pub fn eu1(&self, j: usize) -> f64 {
        self.values[EU1_OFFSET + j - 3]
    }

    pub fn por(&self, j: usize) -> f64 {
        self.values[POR_OFFSET + j - 2]
    }

    pub fn ang(&self, j: usize) -> f64 {
        self.values[ANG_OFFSET + j - 2]
    }
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Row features for `curr` given the preceding frame.
///
/// `eu_i` is the keypoint's pixel displacement divided by the mean torso
/// length of the two frames, so it is expressed in body units and does
/// not depend on frame order. Points that are missing or carried forward
/// in either frame contribute `eu_i = 0`. Distances and angles relative to
/// the neck come from the normalized frame.
pub fn extract_pose_features(curr: &NormalizedFrame, prev: Option<&NormalizedFrame>, layout: &PoseLayout) -> PoseFeatureRow {
    if !curr.valid {
        return PoseFeatureRow::invalid(curr.t);
    }
    let mut v = [0.0; POSE_FEATURE_COUNT];
    let k = |i: usize| layout.points[i - 1];
    let neck = curr.points[k(1)];

    if let Some(p) = prev.filter(|p| p.valid) {
        let unit = 0.5 * (curr.scale_px + p.scale_px);
        for i in 1..=14 {
            let j = k(i);
            if curr.state[j] == PointState::Observed && p.state[j] == PointState::Observed {
                let (a, b) = (curr.pixel(j), p.pixel(j));
                v[EU_OFFSET + i - 1] = norm([a[0] - b[0], a[1] - b[1]]) / unit;
            }
        }
    }

    let hips: Vec<[f64; 2]> = [layout.r_hip, layout.l_hip]
        .iter()
        .filter(|&&j| curr.is_usable(j))
        .map(|&j| curr.points[j])
        .collect();
    let torso = if hips.is_empty() {
        1.0
    } else {
        let n = hips.len() as f64;
        let mid = [hips.iter().map(|h| h[0]).sum::<f64>() / n, hips.iter().map(|h| h[1]).sum::<f64>() / n];
        let d = norm([mid[0] - neck[0], mid[1] - neck[1]]);
        if d > 1e-9 { d } else { 1.0 }
    };

    for i in 2..=14 {
        let j = k(i);
        if !curr.is_usable(j) {
            continue;
        }
        let d = [curr.points[j][0] - neck[0], curr.points[j][1] - neck[1]];
        let dist = norm(d);
        if i >= 3 {
            v[EU1_OFFSET + i - 3] = dist;
        }
        v[POR_OFFSET + i - 2] = dist / torso;
        v[ANG_OFFSET + i - 2] = if dist > 0.0 { d[0].atan2(d[1]) } else { 0.0 };
    }
    PoseFeatureRow { t: curr.t, values: v, valid: true }
}

/// Feature rows for a normalized stream; the first row has no displacement.
pub fn extract_stream(frames: &[NormalizedFrame], layout: &PoseLayout) -> Vec<PoseFeatureRow> {
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| extract_pose_features(f, i.checked_sub(1).map(|p| &frames[p]), layout))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{KEYPOINT_COUNT};
    use std::f64::consts::FRAC_PI_2;

    fn nf(points: &[(usize, f64, f64)]) -> NormalizedFrame {
        let mut f = NormalizedFrame {
            t: Timestamp(0),
            points: [[0.0; 2]; KEYPOINT_COUNT],
            state: [PointState::Observed; KEYPOINT_COUNT],
            origin_px: [0.0; 2],
            scale_px: 1.0,
            valid: true,
        };
        f.points[8] = [0.0, 1.0];
        f.points[11] = [0.0, 1.0];
        for &(j, x, y) in points {
            f.points[j] = [x, y];
        }
        f
    }

    #[test]
    fn names_count() {
        let n = pose_feature_names();
        assert_eq!(n.len(), POSE_FEATURE_COUNT);
        assert_eq!(n[0], "eu_1");
        assert_eq!(n[EU1_OFFSET], "eu_1_3");
        assert_eq!(n[POR_OFFSET], "por_2_1");
        assert_eq!(n[ANG_OFFSET], "ang_1_2");
        assert_eq!(n[51], "ang_1_14");
    }

    #[test]
    fn identical_frames_have_zero_displacement() {
        let l = PoseLayout::default();
        let f = nf(&[(3, 0.3, 0.4)]);
        let row = extract_pose_features(&f, Some(&f), &l);
        assert!((1..=14).all(|i| row.eu(i) == 0.0));
    }

    #[test]
    fn three_four_five() {
        let l = PoseLayout::default();
        let row = extract_pose_features(&nf(&[(3, 3.0, 4.0)]), None, &l);
        assert_eq!(row.eu1(3), 5.0);
        assert_eq!(row.por(3), 5.0);
    }

    #[test]
    fn angle_convention() {
        let l = PoseLayout::default();
        let row = extract_pose_features(&nf(&[(5, 0.0, 2.0), (6, 2.0, 0.0)]), None, &l);
        assert_eq!(row.ang(5), 0.0);
        assert_eq!(row.ang(6), FRAC_PI_2);
    }

    #[test]
    fn displacement_symmetric_in_time() {
        let l = PoseLayout::default();
        let mut a = nf(&[(4, 0.5, 0.5)]);
        a.scale_px = 80.0;
        a.origin_px = [10.0, 20.0];
        let mut b = nf(&[(4, 0.7, 0.1)]);
        b.scale_px = 95.0;
        b.origin_px = [14.0, 18.0];
        let ab = extract_pose_features(&a, Some(&b), &l);
        let ba = extract_pose_features(&b, Some(&a), &l);
        for i in 1..=14 {
            assert!((ab.eu(i) - ba.eu(i)).abs() < 1e-12);
        }
        assert!(ab.eu(4) > 0.0);
    }

    #[test]
    fn carried_point_zeroes_displacement() {
        let l = PoseLayout::default();
        let a = nf(&[(4, 0.5, 0.5)]);
        let mut b = nf(&[(4, 0.9, 0.5)]);
        b.state[4] = PointState::Carried;
        let row = extract_pose_features(&b, Some(&a), &l);
        assert!(row.valid);
        assert_eq!(row.eu(4), 0.0);
    }

    #[test]
    fn invalid_frame_gives_invalid_row() {
        let l = PoseLayout::default();
        let mut a = nf(&[]);
        a.valid = false;
        let row = extract_pose_features(&a, None, &l);
        assert!(!row.valid);
        assert!(row.values.iter().all(|v| *v == 0.0));
    }
}
