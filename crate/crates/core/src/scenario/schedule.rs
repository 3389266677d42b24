use alloc::vec::Vec;

use super::DriveCycle;
use crate::driver::{LaneChange, LaneGeometry, LateralReference};

/// Lane changes every `interval` metres of nominal cycle distance, alternating
/// left and right.
///
/// A change is anchored at `k · interval`. If the nominal trace comes to a
/// stop while the change would be under way, it is moved to start where the
/// vehicle pulls away again. Changes that would still be running at the end
/// of the cycle are dropped. `interval <= 0` disables lane changes.
pub fn schedule_lane_changes(cycle: &DriveCycle, interval: f64, lane: &LaneGeometry) -> LateralReference {
    if interval.is_nan() || interval <= 0.0 {
        return LateralReference::straight();
    }
    let cum = cycle.cumulative_distance();
    let total = cum[cum.len() - 1];
    // arc lengths where the trace stands still after having moved
    let mut stops: Vec<f64> = cycle
        .samples()
        .zip(&cum)
        .filter(|((_, v), &s)| *v == 0.0 && s > 0.0)
        .map(|(_, &s)| s)
        .collect();
    stops.dedup();

    let mut segments = Vec::new();
    let mut k = 1u32;
    let mut earliest = 0.0f64;
    loop {
        let anchor = interval * k as f64;
        if anchor >= total {
            break;
        }
        k += 1;
        let mut start = anchor.max(earliest);
        while let Some(&stop) = stops.iter().find(|&&s| s > start && s < start + lane.length) {
            start = stop;
        }
        let end = start + lane.length;
        if end > total {
            break;
        }
        let direction = if segments.len() % 2 == 0 { 1.0 } else { -1.0 };
        segments.push(LaneChange { start, length: lane.length, delta_y: direction * lane.width });
        earliest = end;
    }
    LateralReference { segments }
}
