#include "spatialqa/geometry/box3d.hpp"

#include <cmath>
#include <numbers>

#include "spatialqa/common/errors.hpp"

namespace spatialqa::geometry {

double wrap_angle(double a) {
    constexpr double kPi = std::numbers::pi;
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

void Box3D::validate() const {
    if (!center.allFinite() || !size.allFinite() || !std::isfinite(yaw)) {
        throw ValidationError("box fields must be finite");
    }
    if ((size.array() <= 0.0).any()) {
        throw ValidationError("box sizes must be positive");
    }
}

std::array<Vec3, 8> Box3D::corners() const {
    const RotationMatrix r = rotation_y(yaw);
    std::array<Vec3, 8> out;
    for (int i = 0; i < 8; ++i) {
        const Vec3 local((i & 1 ? 0.5 : -0.5) * size.x(), (i & 2 ? 0.5 : -0.5) * size.y(),
                         (i & 4 ? 0.5 : -0.5) * size.z());
        out[i] = center + r * local;
    }
    return out;
}

Box3D Box3D::from_corners(const std::array<Vec3, 8>& c, std::string label) {
    Box3D box;
    box.label = std::move(label);
    Vec3 sum = Vec3::Zero();
    for (const auto& p : c) sum += p;
    box.center = sum / 8.0;

    // Average the four parallel edges along each local axis.
    Vec3 ax = Vec3::Zero(), ay = Vec3::Zero(), az = Vec3::Zero();
    for (int i = 0; i < 8; ++i) {
        if (!(i & 1)) ax += c[i | 1] - c[i];
        if (!(i & 2)) ay += c[i | 2] - c[i];
        if (!(i & 4)) az += c[i | 4] - c[i];
    }
    ax /= 4.0;
    ay /= 4.0;
    az /= 4.0;
    box.size = Vec3(ax.norm(), ay.norm(), az.norm());
    // Width axis is Ry(yaw) * e_x = (cos yaw, 0, -sin yaw).
    box.yaw = wrap_angle(std::atan2(-ax.z(), ax.x()));
    box.validate();
    return box;
}

BoxMetrics box_metrics(const Box3D& a, const Box3D& b) {
    BoxMetrics m;
    m.center_distance = (a.center - b.center).norm();
    m.size_a = a.size;
    m.size_b = b.size;
    m.depth_a = a.center.z();
    m.depth_b = b.center.z();
    return m;
}

BoxMetrics box_metrics(const Box3D& a) {
    BoxMetrics m;
    m.center_distance = a.center.norm();
    m.size_a = a.size;
    m.depth_a = a.center.z();
    return m;
}

}  // namespace spatialqa::geometry
