#include "spatialqa/geometry/transform.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

#include "spatialqa/common/errors.hpp"

namespace spatialqa::geometry {

bool RotationMatrix::is_valid(const Mat3& m, double tol) {
    if (!m.allFinite()) return false;
    const Mat3 gram = m.transpose() * m;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(m.determinant() - 1.0) <= tol;
}

RotationMatrix::RotationMatrix(const Mat3& m) : m_(m) {
    if (!is_valid(m)) {
        throw ValidationError("matrix is not a proper rotation (orthonormal, det +1)");
    }
}

RotationMatrix RotationMatrix::orthonormalized(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
    return RotationMatrix(svd.matrixU() * d * svd.matrixV().transpose());
}

RotationMatrix RotationMatrix::transpose() const {
    return RotationMatrix(m_.transpose(), Unchecked{});
}

RotationMatrix RotationMatrix::operator*(const RotationMatrix& other) const {
    return RotationMatrix(m_ * other.m_, Unchecked{});
}

RotationMatrix rotation_x(double a) {
    Mat3 m;
    m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
    return RotationMatrix(m);
}

RotationMatrix rotation_y(double a) {
    Mat3 m;
    m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
    return RotationMatrix(m);
}

RotationMatrix rotation_z(double a) {
    Mat3 m;
    m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return RotationMatrix(m);
}

RotationMatrix from_euler_yxz(const EulerYXZ& e) {
    return rotation_y(e.yaw) * rotation_x(e.pitch) * rotation_z(e.roll);
}

EulerYXZ to_euler_yxz(const RotationMatrix& rot) {
    // R = Ry(a) Rx(b) Rz(c):
    //   R(1,2) = -sin b
    //   R(0,2) =  cos b sin a,  R(2,2) = cos b cos a
    //   R(1,0) =  cos b sin c,  R(1,1) = cos b cos c
    const Mat3& r = rot.matrix();
    EulerYXZ e;
    const double sb = std::clamp(-r(1, 2), -1.0, 1.0);
    e.pitch = std::asin(sb);
    if (std::abs(sb) < 1.0 - 1e-12) {
        e.yaw = std::atan2(r(0, 2), r(2, 2));
        e.roll = std::atan2(r(1, 0), r(1, 1));
    } else {
        // Gimbal lock: fold everything into yaw.
        e.roll = 0.0;
        e.yaw = std::atan2(-r(2, 0), r(0, 0));
    }
    return e;
}

RigidTransform RigidTransform::from_matrix(const Eigen::MatrixXd& m) {
    if (m.cols() != 4 || (m.rows() != 3 && m.rows() != 4)) {
        throw ValidationError("rigid transform matrix must be 3x4 or 4x4");
    }
    if (m.rows() == 4) {
        Eigen::RowVector4d last = m.row(3);
        if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > kRotationTolerance) {
            throw ValidationError("4x4 rigid transform must end with row [0 0 0 1]");
        }
    }
    RigidTransform t;
    t.rotation = RotationMatrix(Mat3(m.block<3, 3>(0, 0)));
    t.translation = m.block<3, 1>(0, 3);
    return t;
}

Mat4 RigidTransform::matrix4() const {
    Mat4 m = Mat4::Identity();
    m.block<3, 3>(0, 0) = rotation.matrix();
    m.block<3, 1>(0, 3) = translation;
    return m;
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
    RigidTransform out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
}

Mat3 CameraIntrinsics::matrix() const {
    Mat3 k;
    k << fx, skew, cx, 0, fy, cy, 0, 0, 1;
    return k;
}

void CameraIntrinsics::validate(int width, int height) const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw ValidationError("focal lengths must be positive");
    }
    if (width > 0 && (cx < 0.0 || cx > width)) {
        throw ValidationError("principal point x outside image bounds");
    }
    if (height > 0 && (cy < 0.0 || cy > height)) {
        throw ValidationError("principal point y outside image bounds");
    }
}

RigidTransform relative_transform(const RigidTransform& a, const RigidTransform& b) {
    // Rotations were validated on construction; RotationMatrix cannot hold anything else.
    return b * a.inverse();
}

}  // namespace spatialqa::geometry
