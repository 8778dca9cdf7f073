#pragma once

#include <array>
#include <string>

#include "spatialqa/geometry/transform.hpp"

namespace spatialqa::geometry {

/// Oriented 3D box in camera coordinates. Local axes: x width, y height,
/// z length; yaw rotates about the camera y (vertical) axis.
struct Box3D {
    Vec3 center = Vec3::Zero();      // meters
    Vec3 size = Vec3::Ones();        // (width, height, length), meters
    double yaw = 0.0;                // radians, (-pi, pi]
    std::string label;

    /// Throws ValidationError on non-positive sizes or non-finite fields.
    void validate() const;

    /// Corner i has local signs (bit0 -> x, bit1 -> y, bit2 -> z): 0 is -, 1 is +.
    std::array<Vec3, 8> corners() const;
    /// Inverse of corners() for corners in that order; yaw follows the
    /// averaged width-edge direction, sizes the averaged edge lengths.
    static Box3D from_corners(const std::array<Vec3, 8>& corners, std::string label = {});
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double radians);

struct BoxMetrics {
    double center_distance = 0.0;  // meters
    Vec3 size_a = Vec3::Zero();
    Vec3 size_b = Vec3::Zero();
    double depth_a = 0.0;          // center z of a
    double depth_b = 0.0;
};

BoxMetrics box_metrics(const Box3D& a, const Box3D& b);
/// Metrics against the camera origin (zero-size point at (0,0,0)).
BoxMetrics box_metrics(const Box3D& a);

}  // namespace spatialqa::geometry
