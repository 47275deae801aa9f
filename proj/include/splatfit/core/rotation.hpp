#pragma once

#include "splatfit/core/linalg.hpp"

#include <cmath>

namespace splatfit {

// Quaternions are stored as Vec4 in (w, x, y, z) order. Free functions below
// implement the raw algebra plus the adjoints the optimizer needs; the
// Rotation class wraps a unit quaternion for the rigid-transform API.

inline Vec4 quat_identity() { return Vec4(1.0, 0.0, 0.0, 0.0); }

inline Vec4 quat_normalize(const Vec4& q) { return q / q.norm(); }

// Adjoint of q_n = q / |q|.
inline Vec4 quat_normalize_backward(const Vec4& q_raw, const Vec4& d_qn) {
    const double n = q_raw.norm();
    const Vec4 qn = q_raw / n;
    return (d_qn - qn * qn.dot(d_qn)) / n;
}

inline Vec4 quat_conjugate(const Vec4& q) {
    return Vec4(q[0], -q[1], -q[2], -q[3]);
}

// Hamilton product a*b.
inline Vec4 quat_multiply(const Vec4& a, const Vec4& b) {
    return Vec4(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

// Left matrix L(a) with a*b = L(a)·b.
inline Eigen::Matrix4d quat_left_matrix(const Vec4& a) {
    Eigen::Matrix4d L;
    L << a[0], -a[1], -a[2], -a[3],
         a[1],  a[0], -a[3],  a[2],
         a[2],  a[3],  a[0], -a[1],
         a[3], -a[2],  a[1],  a[0];
    return L;
}

// Right matrix R(b) with a*b = R(b)·a.
inline Eigen::Matrix4d quat_right_matrix(const Vec4& b) {
    Eigen::Matrix4d R;
    R << b[0], -b[1], -b[2], -b[3],
         b[1],  b[0],  b[3], -b[2],
         b[2], -b[3],  b[0],  b[1],
         b[3],  b[2], -b[1],  b[0];
    return R;
}

inline void quat_multiply_backward(const Vec4& a, const Vec4& b, const Vec4& d_out,
                                   Vec4& d_a, Vec4& d_b) {
    d_a += quat_right_matrix(b).transpose() * d_out;
    d_b += quat_left_matrix(a).transpose() * d_out;
}

// Rotation matrix of a unit quaternion (caller must pass normalized q).
inline Mat3 quat_to_matrix_unit(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 R;
    R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return R;
}

// d(loss)/dq for q unit, given d(loss)/dR.
inline Vec4 quat_to_matrix_unit_backward(const Vec4& q, const Mat3& dR) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Vec4 dq;
    dq[0] = 2 * (-z * dR(0, 1) + y * dR(0, 2) + z * dR(1, 0) - x * dR(1, 2) -
                 y * dR(2, 0) + x * dR(2, 1));
    dq[1] = 2 * (y * dR(0, 1) + z * dR(0, 2) + y * dR(1, 0) - 2 * x * dR(1, 1) -
                 w * dR(1, 2) + z * dR(2, 0) + w * dR(2, 1) - 2 * x * dR(2, 2));
    dq[2] = 2 * (-2 * y * dR(0, 0) + x * dR(0, 1) + w * dR(0, 2) + x * dR(1, 0) +
                 z * dR(1, 2) - w * dR(2, 0) + z * dR(2, 1) - 2 * y * dR(2, 2));
    dq[3] = 2 * (-2 * z * dR(0, 0) - w * dR(0, 1) + x * dR(0, 2) + w * dR(1, 0) -
                 2 * z * dR(1, 1) + y * dR(1, 2) + x * dR(2, 0) + y * dR(2, 1));
    return dq;
}

// Rotation matrix of an arbitrary (non-zero) quaternion; normalizes first.
inline Mat3 quat_to_matrix(const Vec4& q) {
    return quat_to_matrix_unit(quat_normalize(q));
}

inline Vec4 quat_to_matrix_backward(const Vec4& q_raw, const Mat3& dR) {
    const Vec4 qn = quat_normalize(q_raw);
    return quat_normalize_backward(q_raw, quat_to_matrix_unit_backward(qn, dR));
}

namespace detail {
// k(t) = sin(t/2)/t and m(t) = k'(t)/t, series-expanded near zero.
inline void axis_angle_coeffs(double theta, double& w, double& k, double& m) {
    if (theta < 1e-6) {
        const double t2 = theta * theta;
        w = 1.0 - t2 / 8.0 + t2 * t2 / 384.0;
        k = 0.5 - t2 / 48.0 + t2 * t2 / 3840.0;
        m = -1.0 / 24.0 + t2 / 960.0;
    } else {
        w = std::cos(0.5 * theta);
        k = std::sin(0.5 * theta) / theta;
        m = (0.5 * theta * std::cos(0.5 * theta) - std::sin(0.5 * theta)) /
            (theta * theta * theta);
    }
}
}  // namespace detail

// Rotation by angle |phi| about axis phi/|phi|; smooth at phi -> 0.
inline Vec4 axis_angle_to_quat(const Vec3& phi) {
    double w, k, m;
    detail::axis_angle_coeffs(phi.norm(), w, k, m);
    return Vec4(w, k * phi[0], k * phi[1], k * phi[2]);
}

inline Vec3 axis_angle_to_quat_backward(const Vec3& phi, const Vec4& d_q) {
    double w, k, m;
    detail::axis_angle_coeffs(phi.norm(), w, k, m);
    const Vec3 d_vec(d_q[1], d_q[2], d_q[3]);
    return k * d_vec + m * phi * phi.dot(d_vec) - 0.5 * k * d_q[0] * phi;
}

inline Vec3 quat_to_axis_angle(const Vec4& q_in) {
    Vec4 q = quat_normalize(q_in);
    if (q[0] < 0.0) q = -q;  // canonical hemisphere
    const Vec3 v(q[1], q[2], q[3]);
    const double s = v.norm();
    const double theta = 2.0 * std::atan2(s, q[0]);
    if (s < 1e-9) return 2.0 * v;  // small-angle limit of theta/sin(theta/2)
    return (theta / s) * v;
}

// Unit-quaternion rotation value type.
class Rotation {
public:
    Rotation() : q_(quat_identity()) {}
    explicit Rotation(const Vec4& wxyz) : q_(quat_normalize(wxyz)) {}

    static Rotation identity() { return Rotation(); }
    static Rotation from_axis_angle(const Vec3& phi) {
        Rotation r;
        r.q_ = axis_angle_to_quat(phi);
        return r;
    }

    const Vec4& quat() const { return q_; }
    Mat3 matrix() const { return quat_to_matrix_unit(q_); }
    Vec3 to_axis_angle() const { return quat_to_axis_angle(q_); }

    Rotation inverse() const {
        Rotation r;
        r.q_ = quat_conjugate(q_);
        return r;
    }

    Rotation operator*(const Rotation& rhs) const {
        return Rotation(quat_multiply(q_, rhs.q_));
    }

    Vec3 operator*(const Vec3& p) const { return matrix() * p; }

private:
    Vec4 q_;
};

}  // namespace splatfit
