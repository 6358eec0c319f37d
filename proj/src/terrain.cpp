#include <gaitopt/terrain.hpp>

#include <cmath>
#include <stdexcept>

namespace gaitopt {

Terrain::Terrain(Kind kind, double mu, double x0, double h, double smoothing)
    : _kind(kind), _mu(mu), _x0(x0), _h(h), _smoothing(smoothing)
{
    if (!(mu > 0.))
        throw std::invalid_argument("Terrain: friction coefficient must be positive");
    if (kind == Kind::Step && !(smoothing > 0.))
        throw std::invalid_argument("Terrain: step smoothing must be positive");
    // tanh rises from 10% to 90% over 2 * atanh(0.8) * w
    _w = kind == Kind::Step ? smoothing / (2. * std::atanh(0.8)) : 1.;
}

Terrain Terrain::flat(double friction, double height) { return Terrain(Kind::Flat, friction, 0., height, 0.); }

Terrain Terrain::step(double x, double height, double smoothing, double friction) { return Terrain(Kind::Step, friction, x, height, smoothing); }

double Terrain::height(double x, double) const
{
    if (_kind == Kind::Flat)
        return _h;
    return 0.5 * _h * (1. + std::tanh((x - _x0) / _w));
}

Eigen::Vector2d Terrain::gradient(double x, double) const
{
    if (_kind == Kind::Flat)
        return Eigen::Vector2d::Zero();
    const double th = std::tanh((x - _x0) / _w);
    return {0.5 * _h * (1. - th * th) / _w, 0.};
}

Eigen::Matrix2d Terrain::hessian(double x, double) const
{
    Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
    if (_kind == Kind::Step) {
        const double th = std::tanh((x - _x0) / _w);
        H(0, 0) = -_h * (1. - th * th) * th / (_w * _w);
    }
    return H;
}

Vec3 Terrain::normal(double x, double y) const { return frame(x, y)[0]; }

std::array<Vec3, 3> Terrain::frame(double x, double y) const
{
    const Eigen::Vector2d g = gradient(x, y);
    return terrain_frame_from_gradient<double>(g[0], g[1]);
}

} // namespace gaitopt
