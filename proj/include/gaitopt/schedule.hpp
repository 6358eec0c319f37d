#pragma once

#include <vector>

#include <Eigen/Core>

namespace gaitopt {

/// Layout of the gait decision vector.
struct ScheduleConfig {
    size_t num_legs = 4;
    int min_stance = 1;
    int max_stance = 7;
    double min_log_duration = -2.5;
    double max_log_duration = -1.;

    /// Phases per leg in the flat duration vector: 2 * max_stance - 1.
    size_t phases_per_leg() const { return static_cast<size_t>(2 * max_stance - 1); }
    size_t duration_vector_size() const { return num_legs * phases_per_leg(); }
    size_t num_categories() const { return static_cast<size_t>(max_stance - min_stance + 1); }

    void validate() const;
};

/// z = (z^c, z^d): log-durations in the fixed-size layout, and stance counts per leg.
struct GaitCandidate {
    Eigen::VectorXd log_durations;
    std::vector<int> stance_counts;

    int total_stance() const;
};

struct Phase {
    bool is_contact = true;
    double start = 0.;
    double end = 0.;

    double duration() const { return end - start; }
};

/// Alternating stance/swing phases per leg, all legs tiling [0, horizon].
struct PhaseSchedule {
    std::vector<std::vector<Phase>> legs;
    double horizon = 0.;

    size_t num_legs() const { return legs.size(); }
    /// Index of the phase containing t: phases are half-open [start, end) except t = horizon.
    size_t phase_index(size_t leg, double t) const;
};

size_t duration_index(size_t leg, size_t phase, const ScheduleConfig& config);

/// exp() of the leg's log-durations, before any horizon reconciliation.
PhaseSchedule decode(const GaitCandidate& candidate, const ScheduleConfig& config);

bool in_contact(const PhaseSchedule& schedule, size_t leg, double t);

/// Number of legs in contact at t.
size_t contact_count(const PhaseSchedule& schedule, double t);

/// Throws std::invalid_argument if alternation, tiling or positivity is broken.
void validate_schedule(const PhaseSchedule& schedule);

/// Single stance phase per leg over [0, horizon].
PhaseSchedule standing_schedule(size_t num_legs, double horizon);

} // namespace gaitopt
