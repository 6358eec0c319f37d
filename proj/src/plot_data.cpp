#include <gaitopt/plot_data.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include <gaitopt/stats.hpp>

namespace gaitopt {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kMethod = "# percentile method: linear interpolation between order statistics, rank = q/100*(n-1)\n";

json read_json(const fs::path& p)
{
    std::ifstream in(p);
    if (!in)
        throw std::runtime_error("cannot read '" + p.string() + "'");
    return json::parse(in);
}

std::string sanitize(std::string s)
{
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
            c = '_';
    return s.empty() ? "unnamed" : s;
}

} // namespace

std::vector<CurvePoint> optimization_curve(const std::vector<std::vector<double>>& series)
{
    size_t len = 0;
    for (const auto& s : series)
        len = std::max(len, s.size());
    std::vector<CurvePoint> out;
    for (size_t k = 0; k < len; ++k) {
        std::vector<double> v;
        for (const auto& s : series)
            if (!s.empty())
                v.push_back(s[std::min(k, s.size() - 1)]);
        CurvePoint p;
        p.iteration = static_cast<int>(k);
        p.median = percentile(v, 50.);
        p.p25 = percentile(v, 25.);
        p.p75 = percentile(v, 75.);
        p.replicates = v.size();
        out.push_back(p);
    }
    return out;
}

Quartiles quartiles(const std::vector<double>& values)
{
    Quartiles q;
    q.n = values.size();
    q.q1 = percentile(values, 25.);
    q.median = percentile(values, 50.);
    q.q3 = percentile(values, 75.);
    q.min = *std::min_element(values.begin(), values.end());
    q.max = *std::max_element(values.begin(), values.end());
    return q;
}

PlotFiles emit_plot_data(const std::string& results_dir, const std::string& out_dir)
{
    if (!fs::is_directory(results_dir))
        throw std::runtime_error("'" + results_dir + "' is not a directory");

    std::vector<fs::path> summaries;
    for (const auto& e : fs::recursive_directory_iterator(results_dir))
        if (e.is_regular_file() && e.path().filename() == "summary.json")
            summaries.push_back(e.path());
    std::sort(summaries.begin(), summaries.end());

    using Key = std::tuple<std::string, std::string, std::string>;
    std::map<Key, std::vector<std::vector<double>>> curves;
    std::map<Key, std::vector<double>> times;
    size_t n_runs = 0;

    for (const auto& path : summaries) {
        const json s = read_json(path);
        const Key key{s.value("scenario", std::string()), s.value("objective", std::string()), s.value("heuristic", true) ? "heuristic" : "no_heuristic"};
        for (const auto& r : s.at("runs")) {
            curves[key].push_back(r.at("best_so_far_J").get<std::vector<double>>());
            ++n_runs;
        }
        const fs::path timing = path.parent_path() / "timing.json";
        if (fs::exists(timing)) {
            const json t = read_json(timing);
            for (const auto& r : t.at("runs"))
                times[key].push_back(r.at("wall_time_s").get<double>());
        }
    }
    if (n_runs == 0)
        throw std::runtime_error("no runs found under '" + results_dir + "'");

    const fs::path out = out_dir.empty() ? fs::path(results_dir) / "plots" : fs::path(out_dir);
    fs::create_directories(out);
    PlotFiles files;

    for (const auto& [key, series] : curves) {
        const auto& [scenario, objective, variant] = key;
        const fs::path p = out / ("curve_" + sanitize(scenario) + "_" + sanitize(objective) + "_" + variant + ".csv");
        std::ofstream f(p);
        f.precision(17);
        f << kMethod << "# best-so-far J across replicates; finished runs carry their last value forward\n";
        f << "iteration,median_J,p25_J,p75_J,replicates\n";
        for (const auto& c : optimization_curve(series))
            f << c.iteration << ',' << c.median << ',' << c.p25 << ',' << c.p75 << ',' << c.replicates << '\n';
        files.curves.push_back(p.string());
    }

    const fs::path wp = out / "wall_time.csv";
    std::ofstream w(wp);
    w.precision(17);
    w << kMethod << "scenario,objective,variant,n,min_s,q1_s,median_s,q3_s,max_s\n";
    for (const auto& [key, v] : times) {
        if (v.empty())
            continue;
        const auto q = quartiles(v);
        w << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << q.n << ',' << q.min << ',' << q.q1 << ',' << q.median << ','
          << q.q3 << ',' << q.max << '\n';
    }
    files.wall_time = wp.string();
    return files;
}

} // namespace gaitopt
