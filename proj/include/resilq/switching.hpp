// Switching signals: dwell-time generation/validation, the sampled-transmission
// controller view under attacks, and the fixed periodic schedule used by the
// zoom strategies.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resilq/attack.hpp"

namespace resilq {

struct SwitchEvent {
    double t = 0.0;
    int mode = 0;
};

struct SwitchingSignal {
    std::vector<SwitchEvent> events; // first event at t = 0 carries the initial mode
    double tau_d = 0.0;
    bool aligned = false; // every switch on a sampling instant
    int N_max = 1;        // declared cap on asynchronous periods per switch

    int mode_at(double t) const; // plant mode sigma(t)
};

struct SwitchVerdict {
    bool valid = true;
    double at = 0.0;
    std::string reason;
};

// Random switches with gaps drawn in [tau_d, 2 tau_d]. When align is set the
// instants land on sampling instants; otherwise they are snapped to the t̄
// derivation grid (grid_points offsets per period) so tabulated one-period
// maps apply exactly. Deterministic for a fixed seed.
SwitchingSignal generate_switching(int num_modes, double tau_d, double horizon,
                                   bool align, double tau_s, int grid_points,
                                   std::uint64_t seed);

// Periodic schedule with exact period tau_d cycling through the modes,
// starting in mode 0 at t = 0; tau_d must be a whole number of periods.
SwitchingSignal virtue_switching(int num_modes, double tau_d, double horizon,
                                 double tau_s);

SwitchVerdict validate_switching(const SwitchingSignal& sig, int num_modes,
                                 double tau_s);

// Mode as of the most recent successful transmission instant <= t: sampling
// instants outside attack intervals transmit, the first event seeds the value.
int controller_mode_at(const SwitchingSignal& sig, const AttackTrace& trace,
                       double t, double tau_s);

// Worst asynchronous span: for each switch, the number of sampling instants in
// (t_s, t*] where t* is the first attack-free sampling instant >= t_s.
int max_async_periods(const SwitchingSignal& sig, const AttackTrace& trace,
                      double tau_s);

std::string switching_to_csv(const SwitchingSignal& sig);
SwitchingSignal switching_from_csv(const std::string& csv);

} // namespace resilq
