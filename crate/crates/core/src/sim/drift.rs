use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, PoseSE3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FaultKind {
    /// The estimator reports it can no longer be trusted.
    OdometryConfidenceLoss,
    /// Sudden estimate jump, reported as a confidence loss.
    PoseJump { dx: f64, dy: f64, dyaw: f64 },
    /// The wheels spin but the robot does not move.
    Immobilize { duration: f64 },
    /// Every scan comes back empty.
    SensorBlackout { duration: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedFault {
    pub time: f64,
    pub kind: FaultKind,
}

/// Localization error model. Axes are `[x, y, z, yaw]`; sigmas are random-walk
/// rates in m/√s (rad/√s for yaw).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DriftModel {
    #[serde(default)]
    pub sigma: [f64; 4],
    #[serde(default)]
    pub bias: [f64; 4],
    #[serde(default)]
    pub fault_script: Vec<ScriptedFault>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DriftState {
    walk: [f64; 4],
    fired: usize,
}

impl DriftState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn walk(&self) -> [f64; 4] {
        self.walk
    }

    /// Scripted faults with `time <= now` not yet fired, in script order.
    /// Pose jumps are applied to the accumulated error.
    pub fn due_faults(&mut self, drift: &DriftModel, now: f64) -> Vec<ScriptedFault> {
        let mut script: Vec<&ScriptedFault> = drift.fault_script.iter().collect();
        script.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut out = Vec::new();
        while self.fired < script.len() && script[self.fired].time <= now + 1e-9 {
            let f = *script[self.fired];
            if let FaultKind::PoseJump { dx, dy, dyaw } = f.kind {
                self.walk[0] += dx;
                self.walk[1] += dy;
                self.walk[3] += dyaw;
            }
            out.push(f);
            self.fired += 1;
        }
        out
    }
}

/// Advances the random walk by `dt` and returns the estimated pose. Roll and
/// pitch are passed through: they come from the gravity-referenced IMU.
pub fn perturb_pose(
    true_pose: &PoseSE3,
    drift: &DriftModel,
    state: &mut DriftState,
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> PoseSE3 {
    let scale = dt.max(0.0).sqrt();
    for (axis, walk) in state.walk.iter_mut().enumerate() {
        let n: f64 = rng.sample(StandardNormal);
        *walk += drift.sigma[axis] * scale * n;
    }
    let e = |axis: usize| state.walk[axis] + drift.bias[axis];
    PoseSE3 {
        x: true_pose.x + e(0),
        y: true_pose.y + e(1),
        z: true_pose.z + e(2),
        roll: true_pose.roll,
        pitch: true_pose.pitch,
        yaw: normalize_angle(true_pose.yaw + e(3)),
    }
}
