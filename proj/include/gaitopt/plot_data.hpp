#pragma once

#include <string>
#include <vector>

namespace gaitopt {

struct CurvePoint {
    int iteration = 0;
    double median = 0.;
    double p25 = 0.;
    double p75 = 0.;
    size_t replicates = 0;
};

/// Per-iteration median and quartiles across replicate best-J series. Shorter
/// series (early termination) carry their last value forward.
std::vector<CurvePoint> optimization_curve(const std::vector<std::vector<double>>& series);

struct Quartiles {
    double q1 = 0.;
    double median = 0.;
    double q3 = 0.;
    double min = 0.;
    double max = 0.;
    size_t n = 0;
};

Quartiles quartiles(const std::vector<double>& values);

/// Files written by emit_plot_data.
struct PlotFiles {
    std::vector<std::string> curves; ///< one per (scenario, objective, variant)
    std::string wall_time;
};

/// Scans `results_dir` recursively for run outputs (summary.json + timing.json) and
/// writes curve_<scenario>_<objective>_<variant>.csv and wall_time.csv into `out_dir`
/// (defaults to `results_dir`/plots). Throws std::runtime_error when no runs are found.
PlotFiles emit_plot_data(const std::string& results_dir, const std::string& out_dir = "");

} // namespace gaitopt
