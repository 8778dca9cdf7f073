#include "spatialqa/geometry/homography.hpp"

#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <limits>

#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/rng.hpp"

namespace spatialqa::geometry {

Eigen::Matrix3d Homography::normalize(const Eigen::Matrix3d& h) {
    if (!h.allFinite()) throw ValidationError("homography has non-finite elements");
    if (std::abs(h(2, 2)) > 1e-9) return h / h(2, 2);
    const double norm = h.norm();
    if (norm == 0.0) throw ValidationError("homography is the zero matrix");
    Eigen::Matrix3d out = h / norm;
    for (int i = 0; i < 9; ++i) {
        const double v = out(i / 3, i % 3);
        if (std::abs(v) > 1e-12) {
            if (v < 0) out = -out;
            break;
        }
    }
    return out;
}

Homography::Homography(const Eigen::Matrix3d& h) : h_(normalize(h)) {
    if (std::abs(h_.determinant()) <= 1e-9) {
        throw ValidationError("homography is singular");
    }
}

Vec2 Homography::apply(const Vec2& p) const {
    const Eigen::Vector3d q = h_ * p.homogeneous();
    return q.hnormalized();
}

double Homography::reprojection_error(const PointMatch& m) const {
    const Eigen::Vector3d q = h_ * m.src.homogeneous();
    if (std::abs(q.z()) < 1e-15) return std::numeric_limits<double>::infinity();
    return (q.hnormalized() - m.dst).norm();
}

namespace {

/// Similarity taking points to centroid 0, mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(std::span<const Vec2> pts) {
    Vec2 c = Vec2::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += (p - c).norm();
    mean_dist /= static_cast<double>(pts.size());
    const double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
    Eigen::Matrix3d t;
    t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
    return t;
}

}  // namespace

Eigen::Matrix3d fit_homography_dlt(std::span<const PointMatch> matches) {
    if (matches.size() < 4) {
        throw InsufficientDataError("homography needs at least 4 matches");
    }
    std::vector<Vec2> src;
    std::vector<Vec2> dst;
    src.reserve(matches.size());
    dst.reserve(matches.size());
    for (const auto& m : matches) {
        if (!m.src.allFinite() || !m.dst.allFinite()) {
            throw ValidationError("match coordinates must be finite");
        }
        src.push_back(m.src);
        dst.push_back(m.dst);
    }
    const Eigen::Matrix3d ts = normalizing_transform(src);
    const Eigen::Matrix3d td = normalizing_transform(dst);

    Eigen::MatrixXd a(2 * matches.size(), 9);
    for (std::size_t i = 0; i < matches.size(); ++i) {
        const Eigen::Vector3d p = ts * src[i].homogeneous();
        const Eigen::Vector3d q = td * dst[i].homogeneous();
        const double x = p.x() / p.z(), y = p.y() / p.z();
        const double u = q.x() / q.z(), v = q.y() / q.z();
        a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    return td.inverse() * hn * ts;
}

bool is_degenerate_sample(std::span<const Vec2> pts) {
    // Scale-aware collinearity: triangle area against the squared extent.
    double extent = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            extent = std::max(extent, (pts[i] - pts[j]).squaredNorm());
        }
    }
    if (extent < 1e-18) return true;
    static constexpr std::array<std::array<int, 3>, 4> kTriples = {{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};
    for (const auto& t : kTriples) {
        const Vec2 u = pts[t[1]] - pts[t[0]];
        const Vec2 w = pts[t[2]] - pts[t[0]];
        const double cross = u.x() * w.y() - u.y() * w.x();
        if (std::abs(cross) < 1e-6 * extent) return true;
    }
    return false;
}

RansacResult ransac_homography(std::span<const PointMatch> matches, const RansacOptions& options) {
    if (matches.size() < 4) {
        throw InsufficientDataError("RANSAC homography needs at least 4 matches");
    }
    for (const auto& m : matches) {
        if (!m.src.allFinite() || !m.dst.allFinite()) {
            throw ValidationError("match coordinates must be finite");
        }
    }
    if (!(options.reproj_threshold > 0.0) || options.iterations < 1) {
        throw ConfigError("RANSAC needs a positive threshold and iteration count");
    }

    const std::size_t n = matches.size();
    Rng rng(options.seed);

    auto count_inliers = [&](const Eigen::Matrix3d& h, std::vector<bool>* mask) {
        Homography hh;
        try {
            hh = Homography(h);
        } catch (const ValidationError&) {
            return -1;
        }
        int count = 0;
        if (mask) mask->assign(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            if (hh.reprojection_error(matches[i]) <= options.reproj_threshold) {
                ++count;
                if (mask) (*mask)[i] = true;
            }
        }
        return count;
    };

    int best_count = -1;
    Eigen::Matrix3d best = Eigen::Matrix3d::Identity();
    std::array<std::size_t, 4> idx{};
    std::array<PointMatch, 4> sample;
    std::array<Vec2, 4> src_pts;
    std::array<Vec2, 4> dst_pts;

    for (int it = 0; it < options.iterations; ++it) {
        bool found = false;
        for (int attempt = 0; attempt <= options.max_degenerate_redraws && !found; ++attempt) {
            // Four distinct indices.
            for (int k = 0; k < 4; ++k) {
                bool dup = true;
                while (dup) {
                    idx[k] = rng.index(n);
                    dup = false;
                    for (int j = 0; j < k; ++j) dup = dup || idx[j] == idx[k];
                }
                sample[k] = matches[idx[k]];
                src_pts[k] = sample[k].src;
                dst_pts[k] = sample[k].dst;
            }
            found = !is_degenerate_sample(src_pts) && !is_degenerate_sample(dst_pts);
        }
        if (!found) continue;
        const Eigen::Matrix3d h = fit_homography_dlt(sample);
        const int c = count_inliers(h, nullptr);
        if (c > best_count) {
            best_count = c;
            best = h;
        }
    }
    if (best_count < 4) {
        throw InsufficientDataError("RANSAC found no non-degenerate model with 4 or more inliers");
    }

    std::vector<bool> mask;
    count_inliers(best, &mask);
    std::vector<PointMatch> inliers;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask[i]) inliers.push_back(matches[i]);
    }
    RansacResult result;
    const Eigen::Matrix3d refit = fit_homography_dlt(inliers);
    std::vector<bool> refit_mask;
    const int refit_count = count_inliers(refit, &refit_mask);
    if (refit_count >= best_count) {
        result.homography = Homography(refit);
        result.inlier_count = refit_count;
        result.inlier_mask = std::move(refit_mask);
    } else {
        result.homography = Homography(best);
        result.inlier_count = best_count;
        result.inlier_mask = std::move(mask);
    }
    return result;
}

}  // namespace spatialqa::geometry
