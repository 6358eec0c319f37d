#include <gaitopt/model.hpp>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace gaitopt {

void RobotModel::validate() const
{
    if (!(mass > 0.) || !std::isfinite(mass))
        throw std::invalid_argument("robot '" + name + "': mass must be positive");
    if (!inertia.allFinite() || (inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1. + inertia.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("robot '" + name + "': inertia must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 0.)
        throw std::invalid_argument("robot '" + name + "': inertia must be positive definite");
    if (legs.empty())
        throw std::invalid_argument("robot '" + name + "': at least one leg is required");
    for (const auto& leg : legs) {
        if (!leg.nominal_foot_body.allFinite())
            throw std::invalid_argument("robot '" + name + "': non-finite nominal foot position");
        if ((leg.kin_box_halfextents.array() <= 0.).any())
            throw std::invalid_argument("robot '" + name + "': kinematic box half-extents must be positive");
        if (!(leg.f_normal_max > 0.))
            throw std::invalid_argument("robot '" + name + "': f_normal_max must be positive");
    }
    if (!gravity.allFinite())
        throw std::invalid_argument("robot '" + name + "': non-finite gravity");
}

Mat3 rotation_from_euler(const Vec3& e)
{
    return (Eigen::AngleAxisd(e[0], Vec3::UnitZ())
        * Eigen::AngleAxisd(e[1], Vec3::UnitY())
        * Eigen::AngleAxisd(e[2], Vec3::UnitX()))
        .toRotationMatrix();
}

std::array<Mat3, 3> rotation_partials(const Vec3& e)
{
    const Mat3 Rz = Eigen::AngleAxisd(e[0], Vec3::UnitZ()).toRotationMatrix();
    const Mat3 Ry = Eigen::AngleAxisd(e[1], Vec3::UnitY()).toRotationMatrix();
    const Mat3 Rx = Eigen::AngleAxisd(e[2], Vec3::UnitX()).toRotationMatrix();
    // d/da Rot(axis, a) = skew(axis) * Rot(axis, a)
    return {skew(Vec3::UnitZ()) * Rz * Ry * Rx,
        Rz * skew(Vec3::UnitY()) * Ry * Rx,
        Rz * Ry * skew(Vec3::UnitX()) * Rx};
}

Mat3 euler_rate_matrix(const Vec3& e)
{
    if (std::abs(std::abs(e[1]) - std::numbers::pi / 2.) < 1e-6)
        throw SingularConfiguration("euler_rate_matrix: pitch at gimbal lock");
    return euler_rate_matrix_unchecked<double>(e);
}

Wrench total_wrench(const RobotModel& model, const Vec3& body_pos, std::span<const Vec3> foot_positions, std::span<const Vec3> foot_forces)
{
    if (foot_positions.size() != model.num_legs() || foot_forces.size() != model.num_legs())
        throw std::invalid_argument("total_wrench: expected " + std::to_string(model.num_legs()) + " feet and forces");

    Wrench w{model.mass * model.gravity, Vec3::Zero()};
    for (size_t i = 0; i < foot_forces.size(); ++i) {
        w.force += foot_forces[i];
        w.torque += (foot_positions[i] - body_pos).cross(foot_forces[i]);
    }
    return w;
}

Accelerations accelerations(const RobotModel& model, const BodyState& state, std::span<const Vec3> foot_positions, std::span<const Vec3> foot_forces)
{
    const Wrench w = total_wrench(model, state.position, foot_positions, foot_forces);
    const Mat3 R = rotation_from_euler(state.euler_zyx);
    const Vec3& omega = state.angular_velocity_body;
    Accelerations acc;
    acc.linear = w.force / model.mass;
    acc.angular_body = model.inertia.llt().solve(R.transpose() * w.torque - omega.cross(model.inertia * omega));
    return acc;
}

} // namespace gaitopt
