#include "spatialqa/geometry/motion.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "spatialqa/common/errors.hpp"

namespace spatialqa::geometry {

std::string_view to_string(Dof d) {
    switch (d) {
        case Dof::Roll: return "roll";
        case Dof::Pitch: return "pitch";
        case Dof::Yaw: return "yaw";
        case Dof::X: return "x";
        case Dof::Y: return "y";
        case Dof::Z: return "z";
    }
    return "?";
}

std::string_view to_string(MotionState s) {
    switch (s) {
        case MotionState::Stationary: return "stationary";
        case MotionState::Ignored: return "ignored";
        case MotionState::Changed: return "changed";
    }
    return "?";
}

void MotionThresholds::validate() const {
    if (!(rotation_high_deg > rotation_low_deg)) {
        throw ConfigError("rotation high threshold must exceed the low threshold");
    }
    if (!(translation_high_m > translation_low_m)) {
        throw ConfigError("translation high threshold must exceed the low threshold");
    }
    if (rotation_low_deg < 0.0 || translation_low_m < 0.0) {
        throw ConfigError("motion thresholds must be non-negative");
    }
}

bool MotionReport::any_changed() const {
    for (const auto& d : dofs) {
        if (d.state == MotionState::Changed) return true;
    }
    return false;
}

namespace {

DofMotion classify_one(double value, double low, double high) {
    DofMotion m;
    m.value = value;
    m.sign = value > 0.0 ? 1 : (value < 0.0 ? -1 : 0);
    const double mag = std::abs(value);
    if (mag > high) {
        m.state = MotionState::Changed;
    } else if (mag < low) {
        m.state = MotionState::Stationary;
    } else {
        m.state = MotionState::Ignored;
    }
    return m;
}

}  // namespace

MotionReport classify_motion(const RigidTransform& motion, const MotionThresholds& th) {
    th.validate();
    const EulerYXZ e = to_euler_yxz(motion.rotation);
    constexpr double kDeg = 180.0 / std::numbers::pi;
    MotionReport r;
    r[Dof::Roll] = classify_one(e.roll * kDeg, th.rotation_low_deg, th.rotation_high_deg);
    r[Dof::Pitch] = classify_one(e.pitch * kDeg, th.rotation_low_deg, th.rotation_high_deg);
    r[Dof::Yaw] = classify_one(e.yaw * kDeg, th.rotation_low_deg, th.rotation_high_deg);
    r[Dof::X] = classify_one(motion.translation.x(), th.translation_low_m, th.translation_high_m);
    r[Dof::Y] = classify_one(motion.translation.y(), th.translation_low_m, th.translation_high_m);
    r[Dof::Z] = classify_one(motion.translation.z(), th.translation_low_m, th.translation_high_m);
    return r;
}

RigidTransform camera_motion_between(const RigidTransform& first, const RigidTransform& second) {
    // relative_transform maps camera-1 points into camera 2; its inverse is the
    // pose of camera 2 in camera-1 coordinates.
    return relative_transform(first, second).inverse();
}

std::string motion_fragment(Dof dof, int sign) {
    const bool pos = sign >= 0;
    switch (dof) {
        case Dof::Roll: return pos ? "rolled right" : "rolled left";
        // Rx(+a) tilts the optical axis toward -y, which is up.
        case Dof::Pitch: return pos ? "pitched up" : "pitched down";
        case Dof::Yaw: return pos ? "yawed right" : "yawed left";
        case Dof::X: return pos ? "moved right" : "moved left";
        case Dof::Y: return pos ? "moved down" : "moved up";
        case Dof::Z: return pos ? "moved forward" : "moved backward";
    }
    return {};
}

std::string sentence_from_fragments(const std::vector<std::string>& fragments) {
    if (fragments.empty()) return std::string(kStationarySentence);
    std::string s = "The camera ";
    for (std::size_t i = 0; i < fragments.size(); ++i) {
        if (i > 0) s += (i + 1 == fragments.size()) ? " and " : ", ";
        s += fragments[i];
    }
    s += ".";
    return s;
}

std::string describe_motion(const MotionReport& report) {
    std::vector<std::string> fragments;
    for (Dof d : kAllDofs) {
        if (report[d].state == MotionState::Changed) {
            fragments.push_back(motion_fragment(d, report[d].sign));
        }
    }
    return sentence_from_fragments(fragments);
}

}  // namespace spatialqa::geometry
