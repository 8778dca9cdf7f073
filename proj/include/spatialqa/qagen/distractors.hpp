#pragma once

#include <string>
#include <vector>

#include "spatialqa/common/rng.hpp"
#include "spatialqa/geometry/box3d.hpp"
#include "spatialqa/geometry/motion.hpp"
#include "spatialqa/geometry/transform.hpp"

namespace spatialqa::qagen {

struct MetricBands {
    double near_lo = 0.85, near_hi = 0.95;   // and its mirror 1.05..1.15
    double broad_lo = 0.50, broad_hi = 0.90;  // and 1.10..1.80
    double near_up_lo = 1.05, near_up_hi = 1.15;
    double broad_up_lo = 1.10, broad_up_hi = 1.80;
    int draws_per_slot = 64;
    int decimals = 2;  // display rounding used for distinctness
};

/// Metric distractors: first from the near band, the rest from the broad band,
/// then gt +/- 0.5, 1.0, 1.5, ... (clamped positive). Values are returned
/// rounded to the display precision and are pairwise distinct and distinct
/// from gt after rounding. Throws DomainError if gt <= 0 or n < 1.
std::vector<double> metric_distractors(double gt, int n, Rng& rng, const MetricBands& bands = {});

/// Smallest positive value a clamped fallback can take at the given precision.
double metric_floor(int decimals);

struct IntrinsicsRatios {
    double focal = 0.25;
    double principal = 0.20;
    double skew = 0.10;
};

/// Each distractor perturbs fx, fy by up to +/-25%, cx, cy by +/-20% and skew
/// by +/-10% (relative). Always differs from the ground truth in fx or cx.
std::vector<geometry::CameraIntrinsics> intrinsics_distractors(const geometry::CameraIntrinsics& k, Rng& rng,
                                                               int count = 3, const IntrinsicsRatios& r = {});

enum class ExtrinsicsStrategy { AxisPermutation = 0, TranslationNoise = 1, SmallRotation = 2 };

struct ExtrinsicsDistractor {
    geometry::RigidTransform transform;
    ExtrinsicsStrategy strategy;
};

/// Each distractor uses a uniformly chosen strategy: right-multiplying the
/// rotation by a non-identity cube rotation (axis swap / sign flip, det stays
/// +1), adding translation noise with the rotation untouched, or a 5 to 15
/// degree rotation about a random axis followed by re-orthonormalization. All
/// differ from `t` by more than 1e-3 in some element.
std::vector<ExtrinsicsDistractor> extrinsics_distractors(const geometry::RigidTransform& t, Rng& rng,
                                                         int count = 3);
ExtrinsicsDistractor extrinsics_distractor(const geometry::RigidTransform& t, ExtrinsicsStrategy s, Rng& rng);

/// Outcome of one corruption draw over a motion report.
struct MotionCorruption {
    std::string sentence;
    std::vector<std::string> fragments;
    int flipped = 0;
    int omitted = 0;
    int fabricated = 0;
};

/// One corrupted description: changed DOFs are flipped with p = 0.7 and
/// omitted otherwise, ignored DOFs are fabricated as motion with p = 0.3.
MotionCorruption corrupt_motion(const geometry::MotionReport& report, Rng& rng);

/// Generic backfill sentences.
const std::vector<std::string>& generic_motions();

/// `count` distinct corrupted descriptions, none equal to describe_motion(report);
/// backfilled from generic_motions() when draws run dry.
std::vector<std::string> motion_distractors(const geometry::MotionReport& report, Rng& rng, int count = 3);

/// Relative element noise of 5 to 20 percent with random sign, then renormalized.
std::vector<Eigen::Matrix3d> homography_distractors(const Eigen::Matrix3d& h, Rng& rng, int count = 3,
                                                    double rel_lo = 0.05, double rel_hi = 0.20);

/// Corner sets with per-coordinate noise proportional to the box size.
std::vector<std::array<geometry::Vec3, 8>> box_distractors(const geometry::Box3D& box, Rng& rng, int count = 3);

}  // namespace spatialqa::qagen
