use serde::{Deserialize, Serialize};

use super::TraversabilityError;

fn default_max_yaw_rate() -> f64 {
    1.0
}

/// Geometry and thresholds of one platform. Every traversability metric is
/// parameterised by this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub name: String,
    pub footprint_length: f64,
    pub footprint_width: f64,
    pub ground_clearance: f64,
    pub body_height: f64,
    /// Tip-over limit on the angle between surface normal and gravity.
    pub max_slope: f64,
    /// A footprint is blocked when strictly more obstacle points than this
    /// fall inside the body box.
    pub collision_point_threshold: usize,
    /// Ground points per m² below which the footprint is treated as a
    /// negative obstacle (high-fidelity value).
    pub min_ground_density: f64,
    /// Points needed under the footprint before a plane is fitted
    /// (high-fidelity value).
    pub min_support_points: usize,
    /// Linear speed limit in m/s.
    pub max_speed: f64,
    /// Turn-rate limit in rad/s.
    #[serde(default = "default_max_yaw_rate")]
    pub max_yaw_rate: f64,
}

impl RobotModel {
    /// Skid-steer wheeled platform (Husky A200 class), 1.0 m/s.
    pub fn husky() -> Self {
        Self {
            name: "husky".into(),
            footprint_length: 1.0,
            footprint_width: 0.7,
            ground_clearance: 0.13,
            body_height: 0.39,
            ..Self::template(1.0)
        }
    }

    /// Tracked platform (Telemax Pro class), 1.1 m/s.
    pub fn telemax() -> Self {
        Self {
            name: "telemax".into(),
            footprint_length: 1.0,
            footprint_width: 0.6,
            ground_clearance: 0.10,
            body_height: 0.50,
            ..Self::template(1.1)
        }
    }

    /// Ackermann RC car (X-Maxx class), 22 m/s.
    pub fn xmaxx() -> Self {
        Self {
            name: "xmaxx".into(),
            footprint_length: 0.8,
            footprint_width: 0.55,
            ground_clearance: 0.10,
            body_height: 0.30,
            max_yaw_rate: 2.0,
            ..Self::template(22.0)
        }
    }

    /// Quadruped (Spot class), 1.6 m/s.
    pub fn spot() -> Self {
        Self {
            name: "spot".into(),
            footprint_length: 1.1,
            footprint_width: 0.5,
            ground_clearance: 0.30,
            body_height: 0.70,
            ..Self::template(1.6)
        }
    }

    fn template(max_speed: f64) -> Self {
        Self {
            name: String::new(),
            footprint_length: 1.0,
            footprint_width: 0.7,
            ground_clearance: 0.13,
            body_height: 0.4,
            max_slope: 30f64.to_radians(),
            collision_point_threshold: 5,
            min_ground_density: 50.0,
            min_support_points: 20,
            max_speed,
            max_yaw_rate: default_max_yaw_rate(),
        }
    }

    /// Looks up one of the shipped presets by name.
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "husky" => Some(Self::husky()),
            "telemax" => Some(Self::telemax()),
            "xmaxx" | "x-maxx" => Some(Self::xmaxx()),
            "spot" => Some(Self::spot()),
            _ => None,
        }
    }

    pub fn footprint_area(&self) -> f64 {
        self.footprint_length * self.footprint_width
    }

    pub fn validate(&self) -> Result<(), TraversabilityError> {
        let positive = [
            self.footprint_length,
            self.footprint_width,
            self.ground_clearance,
            self.body_height,
            self.max_slope,
            self.min_ground_density,
            self.max_speed,
            self.max_yaw_rate,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(TraversabilityError::InvalidModel("dimensions and limits must be positive"));
        }
        if self.collision_point_threshold == 0 || self.min_support_points == 0 {
            return Err(TraversabilityError::InvalidModel("point thresholds must be positive"));
        }
        if self.ground_clearance >= self.body_height {
            return Err(TraversabilityError::InvalidModel(
                "ground clearance must be below body height",
            ));
        }
        if self.max_slope >= std::f64::consts::FRAC_PI_2 {
            return Err(TraversabilityError::InvalidModel("max slope must be below 90 degrees"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    High,
    Mid,
    Low,
}

impl Tier {
    pub fn label(self) -> &'static str {
        match self {
            Tier::High => "high",
            Tier::Mid => "mid",
            Tier::Low => "low",
        }
    }
}

/// How finely a costmap tier resolves hazards.
///
/// The body collision box starts at `max(ground_clearance, collision_margin)`
/// above the settled plane, so features shorter than the margin are ignored at
/// coarse tiers. Density and support thresholds scale with `density_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityLevel {
    pub tier: Tier,
    pub collision_margin: f64,
    /// Height of the smallest positive feature this tier is meant to report.
    pub min_detectable_feature: f64,
    pub density_scale: f64,
}

impl FidelityLevel {
    pub fn high() -> Self {
        Self {
            tier: Tier::High,
            collision_margin: 0.0,
            min_detectable_feature: 0.0,
            density_scale: 1.0,
        }
    }

    pub fn mid() -> Self {
        Self {
            tier: Tier::Mid,
            collision_margin: 0.15,
            min_detectable_feature: 0.15,
            density_scale: (0.10f64 / 0.25).powi(2),
        }
    }

    pub fn low() -> Self {
        Self {
            tier: Tier::Low,
            collision_margin: 0.30,
            min_detectable_feature: 0.30,
            density_scale: (0.10f64 / 0.50).powi(2),
        }
    }

    pub fn for_tier(tier: Tier) -> Self {
        match tier {
            Tier::High => Self::high(),
            Tier::Mid => Self::mid(),
            Tier::Low => Self::low(),
        }
    }

    /// Bottom of the collision box above the settled plane.
    pub fn box_bottom(&self, model: &RobotModel) -> f64 {
        model.ground_clearance.max(self.collision_margin)
    }

    pub fn min_ground_density(&self, model: &RobotModel) -> f64 {
        model.min_ground_density * self.density_scale
    }

    /// Never below three: a plane needs three points.
    pub fn min_support_points(&self, model: &RobotModel) -> usize {
        ((model.min_support_points as f64 * self.density_scale).round() as usize).max(3)
    }
}
