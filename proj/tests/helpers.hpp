#pragma once

#include <cmath>
#include <random>

#include <gaitopt/model.hpp>

namespace gaitopt::testing {

inline RobotModel quadruped(double mass = 30.)
{
    RobotModel r;
    r.name = "test-quadruped";
    r.mass = mass;
    r.inertia = Vec3(0.946438, 1.94478, 2.01835).asDiagonal();
    for (double sx : {1., -1.})
        for (double sy : {1., -1.}) {
            LegSpec leg;
            leg.nominal_foot_body = Vec3(0.34 * sx, 0.19 * sy, -0.42);
            leg.kin_box_halfextents = Vec3(0.15, 0.1, 0.1);
            leg.f_normal_max = 1000.;
            r.legs.push_back(leg);
        }
    return r;
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng), u(rng)};
}

} // namespace gaitopt::testing
