#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gaitopt {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Raised when the Euler-rate map is evaluated at (or numerically near) gimbal lock.
struct SingularConfiguration : std::domain_error {
    using std::domain_error::domain_error;
};

struct LegSpec {
    Vec3 nominal_foot_body = Vec3::Zero(); ///< nominal foot position, body frame [m]
    Vec3 kin_box_halfextents = Vec3::Constant(0.1); ///< half-extents of the reachable box around the nominal [m]
    double f_normal_max = 1000.; ///< upper bound on the normal contact force [N]
};

/// Single rigid body with mass-less legs. Inertia is expressed in the body frame.
struct RobotModel {
    std::string name;
    double mass = 1.;
    Mat3 inertia = Mat3::Identity();
    std::vector<LegSpec> legs;
    Vec3 gravity = Vec3(0., 0., -9.81);

    size_t num_legs() const { return legs.size(); }
    double weight() const { return mass * gravity.norm(); }

    /// Throws std::invalid_argument if any invariant is broken.
    void validate() const;
};

struct BodyState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 euler_zyx = Vec3::Zero(); ///< (yaw, pitch, roll)
    Vec3 angular_velocity_body = Vec3::Zero();
};

struct Wrench {
    Vec3 force;
    Vec3 torque; ///< about the body position, world frame
};

struct Accelerations {
    Vec3 linear;
    Vec3 angular_body;
};

/// R = Rz(yaw) * Ry(pitch) * Rx(roll), with euler = (yaw, pitch, roll).
Mat3 rotation_from_euler(const Vec3& euler_zyx);

/// Partial derivatives dR/d(yaw), dR/d(pitch), dR/d(roll).
std::array<Mat3, 3> rotation_partials(const Vec3& euler_zyx);

/// T(euler) such that omega_body = T * d(euler)/dt. Throws SingularConfiguration
/// when |pitch| is within 1e-6 of pi/2.
Mat3 euler_rate_matrix(const Vec3& euler_zyx);

/// Same as euler_rate_matrix but without the singularity check.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> euler_rate_matrix_unchecked(const Eigen::Matrix<Scalar, 3, 1>& euler)
{
    using std::cos;
    using std::sin;
    const Scalar sp = sin(euler[1]), cp = cos(euler[1]);
    const Scalar sr = sin(euler[2]), cr = cos(euler[2]);
    Eigen::Matrix<Scalar, 3, 3> T;
    T << -sp, Scalar(0.), Scalar(1.),
        cp * sr, cr, Scalar(0.),
        cp * cr, -sr, Scalar(0.);
    return T;
}

Wrench total_wrench(const RobotModel& model, const Vec3& body_pos, std::span<const Vec3> foot_positions, std::span<const Vec3> foot_forces);

/// Newton-Euler: linear acceleration (world) and angular acceleration (body frame).
Accelerations accelerations(const RobotModel& model, const BodyState& state, std::span<const Vec3> foot_positions, std::span<const Vec3> foot_forces);

inline Mat3 skew(const Vec3& v)
{
    Mat3 S;
    S << 0., -v[2], v[1],
        v[2], 0., -v[0],
        -v[1], v[0], 0.;
    return S;
}

} // namespace gaitopt
