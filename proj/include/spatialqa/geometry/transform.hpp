#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace spatialqa::geometry {

using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kRotationTolerance = 1e-6;

/// Proper rotation: orthonormal with determinant +1 (both within 1e-6).
class RotationMatrix {
public:
    RotationMatrix() : m_(Mat3::Identity()) {}
    /// Throws ValidationError if `m` is not a proper rotation.
    explicit RotationMatrix(const Mat3& m);

    static RotationMatrix identity() { return {}; }
    /// Nearest proper rotation (SVD polar factor); input must be nonsingular.
    static RotationMatrix orthonormalized(const Mat3& m);
    static bool is_valid(const Mat3& m, double tol = kRotationTolerance);

    const Mat3& matrix() const { return m_; }
    double operator()(int r, int c) const { return m_(r, c); }
    RotationMatrix transpose() const;
    RotationMatrix operator*(const RotationMatrix& other) const;
    Vec3 operator*(const Vec3& v) const { return m_ * v; }

private:
    struct Unchecked {};
    RotationMatrix(const Mat3& m, Unchecked) : m_(m) {}
    Mat3 m_;
};

/// Rotations about the camera axes in the OpenCV frame (x right, y down, z forward).
RotationMatrix rotation_x(double radians);
RotationMatrix rotation_y(double radians);
RotationMatrix rotation_z(double radians);

/// Euler angles for the intrinsic y-x-z order: R = Ry(yaw) * Rx(pitch) * Rz(roll).
struct EulerYXZ {
    double yaw = 0.0;    // about y
    double pitch = 0.0;  // about x
    double roll = 0.0;   // about z
};
RotationMatrix from_euler_yxz(const EulerYXZ& e);
EulerYXZ to_euler_yxz(const RotationMatrix& r);

/// x' = R x + t.
struct RigidTransform {
    RotationMatrix rotation;
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }
    /// From a 3x4 or the top three rows of a 4x4 matrix. Validates the rotation block.
    static RigidTransform from_matrix(const Eigen::MatrixXd& m);

    Mat4 matrix4() const;
    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    RigidTransform inverse() const;
    /// (*this ∘ other): apply `other` first.
    RigidTransform operator*(const RigidTransform& other) const;
};

/// Pixel projection parameters.
struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    double skew = 0.0;

    Mat3 matrix() const;
    /// Throws ValidationError unless fx > 0, fy > 0 and, when bounds are given,
    /// the principal point lies inside the image.
    void validate(int width = 0, int height = 0) const;
};

struct CameraPose {
    CameraIntrinsics intrinsics;
    RigidTransform extrinsic;  // world -> camera
};

/// Transform mapping camera-a coordinates to camera-b coordinates, for
/// world-to-camera extrinsics a and b: b ∘ a⁻¹.
RigidTransform relative_transform(const RigidTransform& a, const RigidTransform& b);

}  // namespace spatialqa::geometry
