#pragma once

#include <array>

#include <Eigen/Core>

#include <gaitopt/model.hpp>

namespace gaitopt {

/// Height field z = h(x, y) with a constant friction coefficient.
class Terrain {
public:
    enum class Kind {
        Flat,
        Step
    };

    /// Plane z = height.
    static Terrain flat(double friction = 0.5, double height = 0.);
    /// Step of `height` rising along +x around `x`; `smoothing` is the 10-90% rise distance.
    static Terrain step(double x, double height, double smoothing = 0.02, double friction = 0.5);

    Kind kind() const { return _kind; }
    double friction() const { return _mu; }
    double step_x() const { return _x0; }
    double step_height() const { return _h; }
    double smoothing() const { return _smoothing; }

    double height(double x, double y) const;
    /// (dh/dx, dh/dy)
    Eigen::Vector2d gradient(double x, double y) const;
    /// [[h_xx, h_xy], [h_xy, h_yy]]
    Eigen::Matrix2d hessian(double x, double y) const;

    /// Unit surface normal.
    Vec3 normal(double x, double y) const;
    /// Orthonormal frame {normal, tangent1, tangent2} at (x, y).
    std::array<Vec3, 3> frame(double x, double y) const;

private:
    Terrain(Kind kind, double mu, double x0, double h, double smoothing);

    Kind _kind;
    double _mu;
    double _x0;
    double _h; ///< step height, or plane height for Flat
    double _smoothing;
    double _w; ///< tanh length scale
};

/// Frame from the height gradient; templated so callers can push derivatives through it.
template <typename Scalar>
std::array<Eigen::Matrix<Scalar, 3, 1>, 3> terrain_frame_from_gradient(const Scalar& hx, const Scalar& hy)
{
    using std::sqrt;
    using V = Eigen::Matrix<Scalar, 3, 1>;
    V n(-hx, -hy, Scalar(1.));
    n /= sqrt(Scalar(1.) + hx * hx + hy * hy);
    V t1(Scalar(1.), Scalar(0.), hx);
    t1 /= sqrt(Scalar(1.) + hx * hx);
    V t2 = n.cross(t1);
    return {n, t1, t2};
}

} // namespace gaitopt
