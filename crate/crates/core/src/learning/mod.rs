//! Learning the desired direction, compliant axes and gains from demonstrations.

pub mod compliance;
pub mod controller;
pub mod demonstration;
pub mod direction;
pub mod polygon;

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_util;

pub use compliance::{
    bic, build_stiffness, log_likelihood, mean_actual_direction, model_likelihood, pca_residuals,
    project_to_compliance_plane, select_compliant_axes, ComplianceModel,
};
pub use controller::{assemble_controller, LearnedController};
pub use demonstration::{Demonstration, Dimension, Sample};
pub use direction::{
    actual_directions, choose_desired_direction, intersect_direction_sets, ContactDetection,
    DirectionPair, DirectionSet, DirectionWindow, Intersection,
};

/// Tunables of the learning pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningParams {
    /// Perpendicular widening of spatial sets [rad].
    pub alpha: f64,
    /// Share of sets allowed to miss the consensus direction.
    pub outlier_fraction: f64,
    /// Demonstration uncertainty in projected units.
    pub sigma: f64,
    /// Stiffness of non-compliant axes [N/m].
    pub k_stiff: f64,
    /// Stiffness of compliant axes relative to `k_stiff`.
    pub compliance_ratio: f64,
    /// D_d [N·s/m].
    #[serde(with = "serde_util::matrix2")]
    pub damping: Matrix2<f64>,
    /// Rate the demonstrations are averaged down to [Hz].
    pub learn_rate: f64,
    /// Smallest per-sample displacement that defines a motion direction [m].
    pub min_motion: f64,
    /// Contact is declared above this many estimator noise deviations.
    pub contact_noise_multiple: f64,
    /// Lower bound on the contact threshold [N].
    pub contact_force_floor: f64,
    /// Consecutive samples above the threshold needed to declare contact.
    pub contact_run: usize,
    /// Padding of planar sectors [rad].
    pub angle_tolerance: f64,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self {
            alpha: 10f64.to_radians(),
            outlier_fraction: 0.1,
            sigma: 0.15,
            k_stiff: 4e4,
            compliance_ratio: 0.1,
            damping: Matrix2::new(2.0e3, 0.0, 0.0, 2.4e3),
            learn_rate: 25.0,
            min_motion: 1e-3,
            contact_noise_multiple: 3.0,
            contact_force_floor: 1.0,
            contact_run: 3,
            angle_tolerance: 1e-6,
        }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (
                self.alpha >= 0.0 && self.alpha < std::f64::consts::FRAC_PI_2,
                "alpha must lie in [0, π/2)",
            ),
            (
                (0.0..0.5).contains(&self.outlier_fraction),
                "outlier_fraction must lie in [0, 0.5)",
            ),
            (self.sigma > 0.0, "sigma must be positive"),
            (self.k_stiff > 0.0, "k_stiff must be positive"),
            (
                self.compliance_ratio > 0.0 && self.compliance_ratio <= 1.0,
                "compliance_ratio must lie in (0, 1]",
            ),
            (self.learn_rate > 0.0, "learn_rate must be positive"),
            (self.min_motion > 0.0, "min_motion must be positive"),
            (
                self.contact_noise_multiple >= 0.0,
                "contact_noise_multiple must be non-negative",
            ),
            (
                self.contact_force_floor >= 0.0,
                "contact_force_floor must be non-negative",
            ),
            (self.contact_run >= 1, "contact_run must be at least 1"),
            (
                self.angle_tolerance >= 0.0,
                "angle_tolerance must be non-negative",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Config(msg.into()));
            }
        }
        Ok(())
    }

    /// Contact detection for an estimator with the given noise level.
    pub fn contact_detection(&self, noise_std: f64) -> ContactDetection {
        ContactDetection {
            threshold: (self.contact_noise_multiple * noise_std).max(self.contact_force_floor),
            run_length: self.contact_run,
        }
    }
}

/// Direction pairs of one demonstration after resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoDirections {
    pub resampled: Demonstration,
    pub pairs: Vec<DirectionPair>,
    /// No contact was detected, so every moving sample was used.
    pub free_space: bool,
}

/// Resamples (when faster than the learning rate) and extracts direction pairs,
/// using only the in-contact portion when contact was detected.
pub fn demonstration_directions(
    demo: &Demonstration,
    params: &LearningParams,
    noise_std: f64,
) -> Result<DemoDirections> {
    let resampled = if demo.sample_rate > params.learn_rate {
        demo.resample(params.learn_rate)?
    } else {
        demo.clone()
    };
    let detection = params.contact_detection(noise_std);
    let pairs = actual_directions(&resampled, params.min_motion, &detection, true);
    if !pairs.is_empty() {
        return Ok(DemoDirections {
            resampled,
            pairs,
            free_space: false,
        });
    }
    let pairs = actual_directions(&resampled, params.min_motion, &detection, false);
    if pairs.is_empty() {
        return Err(Error::NoMotion);
    }
    Ok(DemoDirections {
        resampled,
        pairs,
        free_space: true,
    })
}

/// Result of desired-direction learning.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionLearning {
    pub direction: Vector3<f64>,
    pub intersection: Intersection,
    pub sets: Vec<DirectionSet>,
    pub demos: Vec<DemoDirections>,
    /// Planar samples whose motion and force directions were opposite.
    pub skipped: usize,
}

/// Learns the desired direction from one or more demonstrations; the sets of
/// all demonstrations are pooled before intersecting.
pub fn learn_desired_direction(
    demos: &[Demonstration],
    params: &LearningParams,
    noise_std: f64,
) -> Result<DirectionLearning> {
    params.validate()?;
    let dimension = check_dimension(demos)?;
    let demos = demos
        .iter()
        .map(|d| demonstration_directions(d, params, noise_std))
        .collect::<Result<Vec<_>>>()?;
    let mut sets = Vec::new();
    let mut skipped = 0;
    let threshold = params.contact_detection(noise_std).threshold;
    for pair in demos.iter().flat_map(|d| d.pairs.iter()) {
        if pair.force_magnitude <= threshold {
            sets.push(DirectionSet::around(pair.motion, params.alpha, dimension));
            continue;
        }
        match DirectionSet::build(pair.motion, pair.force, params.alpha, dimension) {
            Ok(s) => sets.push(s),
            Err(Error::DegenerateSector) if dimension == Dimension::Spatial => {
                sets.push(DirectionSet::cone_around(pair.motion, params.alpha));
            }
            Err(Error::DegenerateSector) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if sets.is_empty() {
        return Err(Error::NoMotion);
    }
    let intersection =
        intersect_direction_sets(&sets, params.outlier_fraction, params.angle_tolerance)?;
    let direction = choose_desired_direction(&intersection.window);
    Ok(DirectionLearning {
        direction,
        intersection,
        sets,
        demos,
        skipped,
    })
}

fn check_dimension(demos: &[Demonstration]) -> Result<Dimension> {
    let first = demos
        .first()
        .ok_or_else(|| Error::invalid("at least one demonstration is required"))?;
    if demos.iter().any(|d| d.dimension != first.dimension) {
        return Err(Error::invalid("demonstrations mix planar and spatial data"));
    }
    Ok(first.dimension)
}

/// Everything learned from a set of demonstrations.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningOutcome {
    pub direction: DirectionLearning,
    pub compliance: ComplianceModel,
}

/// Desired direction followed by compliant-axis selection.
pub fn learn(
    demos: &[Demonstration],
    params: &LearningParams,
    noise_std: f64,
) -> Result<LearningOutcome> {
    let direction = learn_desired_direction(demos, params, noise_std)?;
    let means = direction
        .demos
        .iter()
        .map(|d| mean_actual_direction(&d.pairs))
        .collect::<Result<Vec<_>>>()?;
    let dimension = check_dimension(demos)?;
    let compliance = select_compliant_axes(&means, &direction.direction, dimension, params.sigma)?;
    Ok(LearningOutcome {
        direction,
        compliance,
    })
}

impl LearningOutcome {
    /// Planar controller for the reproduction; starts where the first
    /// demonstration's used samples begin.
    pub fn controller(
        &self,
        params: &LearningParams,
        trajectory_length: f64,
    ) -> Result<LearnedController> {
        if self.compliance.dimension != Dimension::Planar {
            return Err(Error::invalid("only planar controllers can be reproduced"));
        }
        let d = self.direction.direction;
        let compliant: Vec<Vector2<f64>> = self
            .compliance
            .compliant_directions
            .iter()
            .map(|c| Vector2::new(c.x, c.y))
            .collect();
        let mut ctrl = assemble_controller(
            Vector2::new(d.x, d.y),
            &compliant,
            params.k_stiff,
            params.compliance_ratio,
            params.damping,
            trajectory_length,
        )?;
        ctrl.bic = self.compliance.bic.clone();
        ctrl.start = self.direction.demos.first().and_then(|d| {
            let first = d.pairs.first()?;
            let p = d.resampled.samples[first.index].position;
            Some([p.x, p.y])
        });
        Ok(ctrl)
    }
}
