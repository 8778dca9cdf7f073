#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "spatialqa/geometry/transform.hpp"

namespace spatialqa::geometry {

/// Degrees of freedom in fixed reporting order.
enum class Dof { Roll = 0, Pitch, Yaw, X, Y, Z };
inline constexpr std::array<Dof, 6> kAllDofs = {Dof::Roll, Dof::Pitch, Dof::Yaw,
                                               Dof::X,    Dof::Y,     Dof::Z};

enum class MotionState { Stationary, Ignored, Changed };

std::string_view to_string(Dof d);
std::string_view to_string(MotionState s);

/// Bands: magnitude > high is changed, magnitude < low is stationary, anything
/// in [low, high] is ignored.
struct MotionThresholds {
    double rotation_high_deg = 10.0;
    double rotation_low_deg = 5.0;
    double translation_high_m = 0.10;
    double translation_low_m = 0.05;

    /// Throws ConfigError when a high threshold is not above its low threshold.
    void validate() const;
};

struct DofMotion {
    MotionState state = MotionState::Stationary;
    /// Signed magnitude: degrees for rotations, meters for translations.
    double value = 0.0;
    /// +1 / -1 from the sign of value (0 when exactly zero).
    int sign = 0;
};

/// Per-DOF motion classification of a camera movement.
struct MotionReport {
    std::array<DofMotion, 6> dofs{};

    const DofMotion& operator[](Dof d) const { return dofs[static_cast<int>(d)]; }
    DofMotion& operator[](Dof d) { return dofs[static_cast<int>(d)]; }
    bool any_changed() const;
};

inline constexpr std::string_view kStationarySentence = "The camera remained stationary.";

/// Classifies the camera movement `motion`: its rotation is the orientation of
/// the second camera expressed in the first camera's frame, its translation the
/// second camera's center in the first camera's frame. Rotation is split as
/// R = Ry(yaw) Rx(pitch) Rz(roll).
///
/// Direction convention (OpenCV axes): +x right, +y down, +z forward;
/// positive yaw turns toward the right, positive pitch tilts up, positive roll
/// rolls right (clockwise as seen by the camera).
MotionReport classify_motion(const RigidTransform& motion, const MotionThresholds& thresholds = {});

/// Camera movement between two world-to-camera extrinsics.
RigidTransform camera_motion_between(const RigidTransform& first, const RigidTransform& second);

/// Verb phrase for one DOF moving in direction `sign`, e.g. "rolled left".
std::string motion_fragment(Dof dof, int sign);

/// Sentence from an ordered list of fragments; the stationary sentence when empty.
std::string sentence_from_fragments(const std::vector<std::string>& fragments);

/// Canonical description listing only changed DOFs in reporting order.
std::string describe_motion(const MotionReport& report);

}  // namespace spatialqa::geometry
