#include <gaitopt/spline.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gaitopt {

HermiteSpline::HermiteSpline(std::vector<HermiteNode> nodes)
    : HermiteSpline(nodes, std::vector<NodeVariables>(nodes.size(), NodeVariables::pinned(nodes.empty() ? 0 : nodes.front().value.size())))
{
}

HermiteSpline::HermiteSpline(std::vector<HermiteNode> nodes, std::vector<NodeVariables> variables)
    : _nodes(std::move(nodes)), _vars(std::move(variables))
{
    if (_nodes.size() < 2)
        throw std::invalid_argument("HermiteSpline: at least two nodes are required");
    if (_vars.size() != _nodes.size())
        throw std::invalid_argument("HermiteSpline: variable map size mismatch");
    _dim = static_cast<size_t>(_nodes.front().value.size());
    if (_dim == 0)
        throw std::invalid_argument("HermiteSpline: dimension must be positive");
    for (size_t k = 0; k < _nodes.size(); ++k) {
        const auto& n = _nodes[k];
        if (!std::isfinite(n.time))
            throw std::invalid_argument("HermiteSpline: non-finite node time");
        if (static_cast<size_t>(n.value.size()) != _dim || static_cast<size_t>(n.derivative.size()) != _dim)
            throw std::invalid_argument("HermiteSpline: inconsistent node dimension");
        if (_vars[k].value.size() != _dim || _vars[k].derivative.size() != _dim)
            throw std::invalid_argument("HermiteSpline: inconsistent variable map dimension");
        if (k > 0 && !(n.time > _nodes[k - 1].time))
            throw std::invalid_argument("HermiteSpline: node times must be strictly increasing");
    }
}

SegmentBasis HermiteSpline::basis(double t) const
{
    const double t0 = start_time(), t1 = end_time();
    if (!(t >= t0 && t <= t1))
        throw std::out_of_range("HermiteSpline: t=" + std::to_string(t) + " outside [" + std::to_string(t0) + ", " + std::to_string(t1) + "]");

    auto it = std::upper_bound(_nodes.begin(), _nodes.end(), t, [](double v, const HermiteNode& n) { return v < n.time; });
    size_t k = static_cast<size_t>(std::distance(_nodes.begin(), it));
    k = std::clamp<size_t>(k, 1, _nodes.size() - 1) - 1;

    const double dt = _nodes[k + 1].time - _nodes[k].time;
    const double s = (t - _nodes[k].time) / dt;
    const double s2 = s * s, s3 = s2 * s;

    SegmentBasis b;
    b.segment = k;
    b.w[0] = {2. * s3 - 3. * s2 + 1., dt * (s3 - 2. * s2 + s), -2. * s3 + 3. * s2, dt * (s3 - s2)};
    b.w[1] = {(6. * s2 - 6. * s) / dt, 3. * s2 - 4. * s + 1., (-6. * s2 + 6. * s) / dt, 3. * s2 - 2. * s};
    b.w[2] = {(12. * s - 6.) / (dt * dt), (6. * s - 4.) / dt, (-12. * s + 6.) / (dt * dt), (6. * s - 2.) / dt};
    return b;
}

HermiteSpline::Sample HermiteSpline::_eval(double t, std::span<const double> x, bool use_x) const
{
    const SegmentBasis b = basis(t);
    const size_t k = b.segment;
    Sample out{Eigen::VectorXd(_dim), Eigen::VectorXd(_dim), Eigen::VectorXd(_dim)};
    for (size_t d = 0; d < _dim; ++d) {
        const double c[4] = {
            use_x ? node_value(k, d, x) : _nodes[k].value[d],
            use_x ? node_derivative(k, d, x) : _nodes[k].derivative[d],
            use_x ? node_value(k + 1, d, x) : _nodes[k + 1].value[d],
            use_x ? node_derivative(k + 1, d, x) : _nodes[k + 1].derivative[d]};
        // value weights sum to one and rate weights cancel, so a held segment
        // (equal endpoints, zero slopes) evaluates to its endpoint exactly
        double r[3];
        for (size_t o = 0; o < 3; ++o)
            r[o] = b.w[o][2] * (c[2] - c[0]) + b.w[o][1] * c[1] + b.w[o][3] * c[3];
        r[0] += c[0];
        out.value[d] = r[0];
        out.d1[d] = r[1];
        out.d2[d] = r[2];
    }
    return out;
}

HermiteSpline::Sample HermiteSpline::eval(double t) const { return _eval(t, {}, false); }

HermiteSpline::Sample HermiteSpline::eval(double t, std::span<const double> x) const { return _eval(t, x, true); }

std::vector<Sensitivity> HermiteSpline::eval_sensitivities(double t) const
{
    const SegmentBasis b = basis(t);
    const size_t k = b.segment;
    std::vector<Sensitivity> out;
    auto add = [&](int var, size_t dim, size_t col) {
        if (var < 0)
            return;
        for (auto& s : out) {
            if (s.var == var && s.dim == dim) {
                s.value += b.w[0][col];
                s.d1 += b.w[1][col];
                s.d2 += b.w[2][col];
                return;
            }
        }
        out.push_back({var, dim, b.w[0][col], b.w[1][col], b.w[2][col]});
    };
    for (size_t d = 0; d < _dim; ++d) {
        add(_vars[k].value[d], d, 0);
        add(_vars[k].derivative[d], d, 1);
        add(_vars[k + 1].value[d], d, 2);
        add(_vars[k + 1].derivative[d], d, 3);
    }
    return out;
}

HermiteSpline HermiteSpline::bound(std::span<const double> x) const
{
    HermiteSpline copy = *this;
    for (size_t k = 0; k < _nodes.size(); ++k) {
        for (size_t d = 0; d < _dim; ++d) {
            copy._nodes[k].value[d] = node_value(k, d, x);
            copy._nodes[k].derivative[d] = node_derivative(k, d, x);
        }
    }
    return copy;
}

} // namespace gaitopt
