// DoS attack traces: generation under the averaged frequency/duration budgets
// or the intermittent sleep/burst pattern, prefix verification, CSV round-trip.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resilq/constants.hpp"

namespace resilq {

enum class AttackModel { average, intermittent };

struct AttackParams {
    AttackModel kind = AttackModel::average;
    AttackRates avg;        // frequency/duration budgets (average model)
    int burst_cap = 0;      // optional cap on sampled periods per attack, 0 = none
    int n_min = 1;          // intermittent: minimum attack-free periods between bursts
    int n_max = 1;          // intermittent: maximum burst length in periods
};

struct AttackInterval {
    double start = 0.0;
    double duration = 0.0;
    double end() const { return start + duration; }
};

// Off-intervals of the link, in continuous time; transmission at a sampling
// instant fails iff the instant lies inside one of them.
struct AttackTrace {
    std::vector<AttackInterval> intervals;
    double horizon = 0.0;

    bool attacked_at(double t) const;
    // Sampled periods hit by interval i: count of sampling instants in [start, end).
    int sampled_periods(std::size_t i, double tau_s) const;
};

struct AttackVerdict {
    bool valid = true;
    double at = 0.0;    // prefix end (or interval position) of the first violation
    std::string reason; // empty when valid
};

// Deterministic for a fixed seed; throws std::runtime_error when the rejection
// budget (1e5 redraws) is exhausted without an admissible trace.
AttackTrace generate_attack(const AttackParams& params, double tau_s, double horizon,
                            std::uint64_t seed);

// Worst-case sleep/burst calendar, phase-locked at t = 0: each cycle of
// n_min + n_max sampling periods keeps the first n_min instants attack-free
// and loses the remaining n_max. This is the exact pattern the calendar
// codec prices; a randomly phased trace of the same class is outside its
// coverage even though the trigger codec absorbs either.
AttackTrace periodic_attack(int n_min, int n_max, double tau_s, double horizon);

// Checks well-formedness, then the model constraints over every prefix ending
// at a sampling instant; reports the earliest violation.
AttackVerdict verify_attack(const AttackTrace& trace, const AttackParams& params,
                            double tau_s);

std::string attack_to_csv(const AttackTrace& trace);
AttackTrace attack_from_csv(const std::string& csv, double horizon);

} // namespace resilq
