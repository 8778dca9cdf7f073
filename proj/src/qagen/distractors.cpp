#include "spatialqa/qagen/distractors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"
#include "spatialqa/geometry/homography.hpp"
#include "spatialqa/geometry/symmetry.hpp"

namespace spatialqa::qagen {

using geometry::Dof;
using geometry::MotionState;

namespace {

double round_to(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

// Draw from [lo, hi]·gt ∪ [up_lo, up_hi]·gt, picking a side by relative width.
double draw_two_band(double gt, double lo, double hi, double up_lo, double up_hi, Rng& rng) {
    const double w_lo = hi - lo;
    const double w_up = up_hi - up_lo;
    const double u = rng.uniform(0.0, w_lo + w_up);
    return u < w_lo ? gt * (lo + u) : gt * (up_lo + (u - w_lo));
}

bool in_two_band(double v, double gt, double lo, double hi, double up_lo, double up_hi) {
    return (v >= gt * lo && v <= gt * hi) || (v >= gt * up_lo && v <= gt * up_hi);
}

}  // namespace

double metric_floor(int decimals) { return std::pow(10.0, -decimals); }

std::vector<double> metric_distractors(double gt, int n, Rng& rng, const MetricBands& b) {
    if (!(gt > 0.0) || !std::isfinite(gt)) throw DomainError("metric ground truth must be positive");
    if (n < 1) throw DomainError("distractor count must be >= 1");

    const auto key = [&](double v) { return format_fixed(v, b.decimals); };
    std::set<std::string> used = {key(gt)};
    std::vector<double> out;

    auto try_band = [&](double lo, double hi, double up_lo, double up_hi) {
        for (int d = 0; d < b.draws_per_slot; ++d) {
            const double v = round_to(draw_two_band(gt, lo, hi, up_lo, up_hi, rng), b.decimals);
            if (v <= 0.0 || !in_two_band(v, gt, lo, hi, up_lo, up_hi)) continue;
            if (used.insert(key(v)).second) {
                out.push_back(v);
                return true;
            }
        }
        return false;
    };

    if (!try_band(b.near_lo, b.near_hi, b.near_up_lo, b.near_up_hi)) {
        try_band(b.broad_lo, b.broad_hi, b.broad_up_lo, b.broad_up_hi);
    }
    while (static_cast<int>(out.size()) < n) {
        if (!try_band(b.broad_lo, b.broad_hi, b.broad_up_lo, b.broad_up_hi)) break;
    }
    // Fixed offsets, alternating sides, growing until filled.
    for (int k = 1; static_cast<int>(out.size()) < n; ++k) {
        const double off = 0.5 * k;
        for (double v : {gt - off, gt + off}) {
            if (static_cast<int>(out.size()) >= n) break;
            const double c = round_to(std::max(v, metric_floor(b.decimals)), b.decimals);
            if (used.insert(key(c)).second) out.push_back(c);
        }
        if (k > 10000) throw GenerationError("metric distractor fallback did not converge");
    }
    return out;
}

std::vector<geometry::CameraIntrinsics> intrinsics_distractors(const geometry::CameraIntrinsics& k, Rng& rng,
                                                               int count, const IntrinsicsRatios& r) {
    k.validate();
    std::vector<geometry::CameraIntrinsics> out;
    std::set<std::string> seen;
    const auto key = [](const geometry::CameraIntrinsics& c) {
        return format_fixed(c.fx, 1) + "," + format_fixed(c.fy, 1) + "," + format_fixed(c.cx, 1) + "," +
               format_fixed(c.cy, 1) + "," + format_fixed(c.skew, 3);
    };
    seen.insert(key(k));
    for (int guard = 0; static_cast<int>(out.size()) < count; ++guard) {
        if (guard > 1000) throw GenerationError("could not produce distinct intrinsics distractors");
        geometry::CameraIntrinsics d = k;
        d.fx = k.fx * (1.0 + rng.uniform(-r.focal, r.focal));
        d.fy = k.fy * (1.0 + rng.uniform(-r.focal, r.focal));
        d.cx = k.cx * (1.0 + rng.uniform(-r.principal, r.principal));
        d.cy = k.cy * (1.0 + rng.uniform(-r.principal, r.principal));
        d.skew = k.skew * (1.0 + rng.uniform(-r.skew, r.skew));
        // Keep clear of the ground truth at display precision.
        if (std::abs(d.fx - k.fx) < 0.05 || std::abs(d.cx - k.cx) < 0.05) continue;
        if (seen.insert(key(d)).second) out.push_back(d);
    }
    return out;
}

namespace {

double max_abs_diff(const geometry::RigidTransform& a, const geometry::RigidTransform& b) {
    return (a.matrix4() - b.matrix4()).cwiseAbs().maxCoeff();
}

geometry::RotationMatrix axis_angle(const geometry::Vec3& axis, double radians) {
    return geometry::RotationMatrix::orthonormalized(
        Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix());
}

}  // namespace

ExtrinsicsDistractor extrinsics_distractor(const geometry::RigidTransform& t, ExtrinsicsStrategy s, Rng& rng) {
    geometry::RigidTransform d = t;
    switch (s) {
        case ExtrinsicsStrategy::AxisPermutation: {
            const auto& rots = geometry::cube_rotation_matrices();
            const auto& p = rots[1 + rng.index(rots.size() - 1)];
            d.rotation = geometry::RotationMatrix::orthonormalized(t.rotation.matrix() * p.cast<double>());
            break;
        }
        case ExtrinsicsStrategy::TranslationNoise: {
            const double scale = std::max(0.2, 0.3 * t.translation.norm());
            for (int i = 0; i < 3; ++i) d.translation[i] += rng.sign() * rng.uniform(0.25, 1.0) * scale;
            break;
        }
        case ExtrinsicsStrategy::SmallRotation: {
            geometry::Vec3 axis(rng.normal(), rng.normal(), rng.normal());
            if (axis.norm() < 1e-9) axis = geometry::Vec3::UnitY();
            const double angle = rng.uniform(5.0, 15.0) * std::numbers::pi / 180.0 * rng.sign();
            d.rotation = geometry::RotationMatrix::orthonormalized(
                (axis_angle(axis, angle) * t.rotation).matrix());
            break;
        }
    }
    return {d, s};
}

std::vector<ExtrinsicsDistractor> extrinsics_distractors(const geometry::RigidTransform& t, Rng& rng, int count) {
    std::vector<ExtrinsicsDistractor> out;
    for (int guard = 0; static_cast<int>(out.size()) < count; ++guard) {
        if (guard > 1000) throw GenerationError("could not produce distinct extrinsics distractors");
        const auto s = static_cast<ExtrinsicsStrategy>(rng.index(3));
        auto d = extrinsics_distractor(t, s, rng);
        if (max_abs_diff(d.transform, t) <= 1e-3) continue;
        bool dup = false;
        for (const auto& o : out) dup = dup || max_abs_diff(o.transform, d.transform) <= 1e-3;
        if (!dup) out.push_back(std::move(d));
    }
    return out;
}

MotionCorruption corrupt_motion(const geometry::MotionReport& report, Rng& rng) {
    MotionCorruption c;
    for (Dof d : geometry::kAllDofs) {
        const auto& m = report[d];
        if (m.state == MotionState::Changed) {
            if (rng.bernoulli(0.7)) {
                c.fragments.push_back(geometry::motion_fragment(d, -m.sign));
                ++c.flipped;
            } else {
                ++c.omitted;
            }
        } else if (m.state == MotionState::Ignored) {
            if (rng.bernoulli(0.3)) {
                const int sign = m.sign != 0 ? m.sign : 1;
                c.fragments.push_back(geometry::motion_fragment(d, rng.bernoulli(0.5) ? sign : -sign));
                ++c.fabricated;
            }
        }
    }
    c.sentence = geometry::sentence_from_fragments(c.fragments);
    return c;
}

const std::vector<std::string>& generic_motions() {
    static const std::vector<std::string> kGeneric = {
        "The camera moved forward.",  "The camera moved backward.", "The camera moved left.",
        "The camera moved right.",    "The camera moved up.",       "The camera moved down.",
        "The camera yawed left.",     "The camera yawed right.",    "The camera pitched up.",
        "The camera pitched down.",   "The camera rolled left.",    "The camera rolled right.",
        "The camera remained stationary.",
    };
    return kGeneric;
}

std::vector<std::string> motion_distractors(const geometry::MotionReport& report, Rng& rng, int count) {
    const std::string correct = geometry::describe_motion(report);
    std::set<std::string> used = {correct};
    std::vector<std::string> out;
    bool corruptible = false;
    for (const auto& m : report.dofs) {
        corruptible = corruptible || m.state != MotionState::Stationary;
    }
    if (corruptible) {
        for (int draw = 0; draw < 20 * count && static_cast<int>(out.size()) < count; ++draw) {
            auto c = corrupt_motion(report, rng);
            if (used.insert(c.sentence).second) out.push_back(std::move(c.sentence));
        }
    }
    if (static_cast<int>(out.size()) < count) {
        std::vector<std::string> generic = generic_motions();
        rng.shuffle(std::span<std::string>(generic));
        for (const auto& g : generic) {
            if (static_cast<int>(out.size()) >= count) break;
            if (used.insert(g).second) out.push_back(g);
        }
    }
    return out;
}

std::vector<Eigen::Matrix3d> homography_distractors(const Eigen::Matrix3d& h, Rng& rng, int count, double rel_lo,
                                                    double rel_hi) {
    const Eigen::Matrix3d base = geometry::Homography::normalize(h);
    std::vector<Eigen::Matrix3d> out;
    std::set<std::string> seen;
    const auto key = [](const Eigen::Matrix3d& m) {
        std::string k;
        for (int i = 0; i < 9; ++i) k += format_fixed(m(i / 3, i % 3), 4) + ",";
        return k;
    };
    seen.insert(key(base));
    for (int guard = 0; static_cast<int>(out.size()) < count; ++guard) {
        if (guard > 1000) throw GenerationError("could not produce distinct homography distractors");
        Eigen::Matrix3d p = base;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) p(i, j) *= 1.0 + rng.sign() * rng.uniform(rel_lo, rel_hi);
        if (std::abs(p.determinant()) <= 1e-9) continue;
        p = geometry::Homography::normalize(p);
        if (seen.insert(key(p)).second) out.push_back(p);
    }
    return out;
}

std::vector<std::array<geometry::Vec3, 8>> box_distractors(const geometry::Box3D& box, Rng& rng, int count) {
    box.validate();
    const auto truth = box.corners();
    const double sigma = 0.1 * box.size.mean();
    std::vector<std::array<geometry::Vec3, 8>> out;
    std::set<std::string> seen;
    const auto key = [](const std::array<geometry::Vec3, 8>& c) {
        std::string k;
        for (const auto& p : c)
            for (int i = 0; i < 3; ++i) k += format_fixed(p[i], 2) + ",";
        return k;
    };
    seen.insert(key(truth));
    for (int guard = 0; static_cast<int>(out.size()) < count; ++guard) {
        if (guard > 1000) throw GenerationError("could not produce distinct box distractors");
        auto c = truth;
        // A shared offset plus per-coordinate jitter keeps the shape box-like.
        const geometry::Vec3 shift(rng.normal() * sigma, rng.normal() * sigma, rng.normal() * sigma);
        for (auto& p : c) {
            for (int i = 0; i < 3; ++i) p[i] += shift[i] + rng.normal() * 0.25 * sigma;
        }
        if (seen.insert(key(c)).second) out.push_back(c);
    }
    return out;
}

}  // namespace spatialqa::qagen
