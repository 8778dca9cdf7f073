#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <span>
#include <vector>

namespace spatialqa::geometry {

using Vec2 = Eigen::Vector2d;

struct PointMatch {
    Vec2 src;  // pixels in the first image
    Vec2 dst;  // pixels in the second image
};

/// Projective map between image planes in canonical scale: divided by h33 when
/// |h33| > 1e-9, otherwise by the Frobenius norm with the first nonzero
/// element made positive.
class Homography {
public:
    Homography() : h_(Eigen::Matrix3d::Identity()) {}
    /// Normalizes; throws ValidationError if singular after normalization.
    explicit Homography(const Eigen::Matrix3d& h);

    static Eigen::Matrix3d normalize(const Eigen::Matrix3d& h);

    const Eigen::Matrix3d& matrix() const { return h_; }
    double operator()(int r, int c) const { return h_(r, c); }
    Vec2 apply(const Vec2& p) const;
    /// Euclidean distance between H(src) and dst.
    double reprojection_error(const PointMatch& m) const;

private:
    Eigen::Matrix3d h_;
};

struct RansacOptions {
    double reproj_threshold = 5.0;  // pixels
    int iterations = 2000;
    std::uint64_t seed = 0;
    /// Bound on redraws of degenerate minimal samples per iteration.
    int max_degenerate_redraws = 100;
};

struct RansacResult {
    Homography homography;
    int inlier_count = 0;
    std::vector<bool> inlier_mask;
};

/// Normalized direct linear transform over all given matches (least squares
/// for more than four). Throws InsufficientDataError below four matches.
Eigen::Matrix3d fit_homography_dlt(std::span<const PointMatch> matches);

/// True if any three of the four points are (near) collinear.
bool is_degenerate_sample(std::span<const Vec2> four_points);

/// RANSAC over 4-point normalized DLT samples. Inliers have reprojection error
/// <= threshold; the best consensus set is refit with DLT. Deterministic for a
/// given seed.
RansacResult ransac_homography(std::span<const PointMatch> matches, const RansacOptions& options = {});

}  // namespace spatialqa::geometry
