#include <gaitopt/schedule.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gaitopt {

void ScheduleConfig::validate() const
{
    if (num_legs == 0)
        throw std::invalid_argument("ScheduleConfig: num_legs must be positive");
    if (min_stance < 1 || max_stance < min_stance)
        throw std::invalid_argument("ScheduleConfig: need 1 <= min_stance <= max_stance");
    if (!(min_log_duration <= max_log_duration))
        throw std::invalid_argument("ScheduleConfig: min_log_duration > max_log_duration");
}

int GaitCandidate::total_stance() const { return std::accumulate(stance_counts.begin(), stance_counts.end(), 0); }

size_t duration_index(size_t leg, size_t phase, const ScheduleConfig& config)
{
    if (leg >= config.num_legs || phase >= config.phases_per_leg())
        throw std::out_of_range("duration_index: (leg " + std::to_string(leg) + ", phase " + std::to_string(phase) + ") out of range");
    return leg * config.phases_per_leg() + phase;
}

PhaseSchedule decode(const GaitCandidate& candidate, const ScheduleConfig& config)
{
    config.validate();
    if (candidate.stance_counts.size() != config.num_legs)
        throw std::invalid_argument("decode: stance_counts size does not match leg count");
    if (static_cast<size_t>(candidate.log_durations.size()) != config.duration_vector_size())
        throw std::invalid_argument("decode: log_durations size does not match layout");

    PhaseSchedule schedule;
    schedule.legs.resize(config.num_legs);
    for (size_t leg = 0; leg < config.num_legs; ++leg) {
        const int n = candidate.stance_counts[leg];
        if (n < config.min_stance || n > config.max_stance)
            throw std::invalid_argument("decode: stance count " + std::to_string(n) + " for leg " + std::to_string(leg) + " outside [" + std::to_string(config.min_stance) + ", " + std::to_string(config.max_stance) + "]");
        double t = 0.;
        auto& phases = schedule.legs[leg];
        for (size_t p = 0; p < static_cast<size_t>(2 * n - 1); ++p) {
            const double d = std::exp(candidate.log_durations[static_cast<Eigen::Index>(duration_index(leg, p, config))]);
            phases.push_back({p % 2 == 0, t, t + d});
            t += d;
        }
        schedule.horizon = std::max(schedule.horizon, t);
    }
    // shorter legs hold their final stance until the common horizon
    for (auto& phases : schedule.legs)
        phases.back().end = schedule.horizon;
    return schedule;
}

size_t PhaseSchedule::phase_index(size_t leg, double t) const
{
    if (leg >= legs.size())
        throw std::out_of_range("PhaseSchedule: leg index out of range");
    if (!(t >= 0. && t <= horizon))
        throw std::out_of_range("PhaseSchedule: t=" + std::to_string(t) + " outside [0, " + std::to_string(horizon) + "]");
    const auto& phases = legs[leg];
    auto it = std::upper_bound(phases.begin(), phases.end(), t, [](double v, const Phase& p) { return v < p.end; });
    if (it == phases.end())
        return phases.size() - 1;
    return static_cast<size_t>(std::distance(phases.begin(), it));
}

bool in_contact(const PhaseSchedule& schedule, size_t leg, double t)
{
    return schedule.legs[leg][schedule.phase_index(leg, t)].is_contact;
}

size_t contact_count(const PhaseSchedule& schedule, double t)
{
    size_t n = 0;
    for (size_t leg = 0; leg < schedule.num_legs(); ++leg)
        n += in_contact(schedule, leg, t) ? 1 : 0;
    return n;
}

void validate_schedule(const PhaseSchedule& schedule)
{
    if (schedule.legs.empty())
        throw std::invalid_argument("PhaseSchedule: no legs");
    if (!(schedule.horizon > 0.))
        throw std::invalid_argument("PhaseSchedule: horizon must be positive");
    for (size_t leg = 0; leg < schedule.legs.size(); ++leg) {
        const auto& phases = schedule.legs[leg];
        const std::string where = "PhaseSchedule leg " + std::to_string(leg) + ": ";
        if (phases.empty() || !phases.front().is_contact || !phases.back().is_contact)
            throw std::invalid_argument(where + "must start and end in stance");
        if (phases.front().start != 0. || phases.back().end != schedule.horizon)
            throw std::invalid_argument(where + "phases must tile [0, horizon]");
        for (size_t p = 0; p < phases.size(); ++p) {
            if (!(phases[p].duration() > 0.))
                throw std::invalid_argument(where + "non-positive phase duration");
            if (p > 0 && (phases[p].is_contact == phases[p - 1].is_contact || phases[p].start != phases[p - 1].end))
                throw std::invalid_argument(where + "phases must alternate without gaps");
        }
    }
}

PhaseSchedule standing_schedule(size_t num_legs, double horizon)
{
    PhaseSchedule s;
    s.horizon = horizon;
    s.legs.assign(num_legs, std::vector<Phase>{{true, 0., horizon}});
    return s;
}

} // namespace gaitopt
