#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace gaitopt {

struct HermiteNode {
    double time = 0.;
    Eigen::VectorXd value;
    Eigen::VectorXd derivative;
};

/// Which node entries are optimization variables. Index -1 marks a pinned constant.
/// The same variable index may appear in several entries (shared variables).
struct NodeVariables {
    std::vector<int> value;
    std::vector<int> derivative;

    static NodeVariables pinned(size_t dim) { return {std::vector<int>(dim, -1), std::vector<int>(dim, -1)}; }
};

/// Cubic Hermite weights on one segment. Rows: value, first derivative, second
/// derivative. Columns: v_k, d_k, v_{k+1}, d_{k+1} (derivative columns already
/// carry the segment-length factor).
struct SegmentBasis {
    size_t segment = 0;
    std::array<std::array<double, 4>, 3> w{};
};

/// d(value, d1, d2)[dim] / d x[var]
struct Sensitivity {
    int var = -1;
    size_t dim = 0;
    double value = 0.;
    double d1 = 0.;
    double d2 = 0.;
};

class HermiteSpline {
public:
    struct Sample {
        Eigen::VectorXd value;
        Eigen::VectorXd d1;
        Eigen::VectorXd d2;
    };

    HermiteSpline() = default;
    /// All entries pinned.
    explicit HermiteSpline(std::vector<HermiteNode> nodes);
    HermiteSpline(std::vector<HermiteNode> nodes, std::vector<NodeVariables> variables);

    size_t dimension() const { return _dim; }
    size_t num_nodes() const { return _nodes.size(); }
    const std::vector<HermiteNode>& nodes() const { return _nodes; }
    const std::vector<NodeVariables>& variables() const { return _vars; }
    double start_time() const { return _nodes.front().time; }
    double end_time() const { return _nodes.back().time; }

    /// Segment containing t; interior node times belong to the later segment.
    /// Throws std::out_of_range outside [start_time, end_time].
    SegmentBasis basis(double t) const;

    Sample eval(double t) const;
    /// Evaluate with the free entries read from x.
    Sample eval(double t, std::span<const double> x) const;

    /// Sensitivities w.r.t. every free entry touching t, merged per (var, dim).
    std::vector<Sensitivity> eval_sensitivities(double t) const;

    /// Copy with the free entries overwritten from x.
    HermiteSpline bound(std::span<const double> x) const;

    /// Value of entry (node, dim) from x if free, from the stored node otherwise.
    double node_value(size_t node, size_t dim, std::span<const double> x) const
    {
        const int v = _vars[node].value[dim];
        return v < 0 ? _nodes[node].value[dim] : x[static_cast<size_t>(v)];
    }
    double node_derivative(size_t node, size_t dim, std::span<const double> x) const
    {
        const int v = _vars[node].derivative[dim];
        return v < 0 ? _nodes[node].derivative[dim] : x[static_cast<size_t>(v)];
    }

private:
    Sample _eval(double t, std::span<const double> x, bool use_x) const;

    size_t _dim = 0;
    std::vector<HermiteNode> _nodes;
    std::vector<NodeVariables> _vars;
};

} // namespace gaitopt
