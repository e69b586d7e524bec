#pragma once

#include <string>
#include <vector>

#include "resilq/attack.hpp"
#include "resilq/constants.hpp"
#include "resilq/plant.hpp"
#include "resilq/quantizer.hpp"
#include "resilq/switching.hpp"

namespace resilq {

// Which codec/controller combination closes the loop.
enum class Strategy {
    tracking,         // predictor-driven control, predictor-centered boxes
    tracking_aligned, // same, with switches restricted to sampling instants
    active_range,     // predictor-driven control, origin-centered envelope
    passive_range,    // held-output control, origin-centered envelope
    schedule_range,   // no acknowledgments, worst-case calendar envelope
    trigger_range,    // no acknowledgments, event-triggered envelope
};

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

// The derived-constant pointers must be set for the strategies that need
// them (s2 for active_range, fits+s3 for passive_range, s4 for the two
// acknowledgment-free variants); the tracking codecs run off the model alone.
struct SimParams {
    Strategy strategy = Strategy::tracking;
    int N = 3;
    double E0 = 1.0;
    Vec x0;
    double horizon = 10.0;
    int n_min = 1;      // calendar phases of the acknowledgment-free codecs
    int n_max = 1;
    double tau_d = 1.0; // calendar switch spacing of the acknowledgment-free codecs
    const Strategy2Constants* s2 = nullptr;
    const Strategy3Constants* s3 = nullptr;
    const Strategy4Constants* s4 = nullptr;
    const FitSet* fits = nullptr;
};

// One sampling instant. `x` is the plant state at t_k; `xhat` the controller
// model right after the instant (empty for the held-output strategies);
// `symbol` is what the sensor encoded whether or not the link delivered it.
struct SimRow {
    int k = 0;
    double t = 0.0;
    bool attacked = false;
    int mode = 0;     // plant mode sigma(t_k), right-continuous
    int mode_hat = 0; // controller gain mode right after the instant
    int step_case = 0; // transition case of the step ending here; 0 when none applies
    bool switched_inside = false;
    bool switched_at_end = false;
    bool msg_switched = false;
    int async_periods = 0;
    bool flag = false;
    int zoom_age = 0;
    double E = 0.0;
    long long symbol = 0;
    double u_norm = 0.0; // ||u|| applied right after the instant
    Vec x, xhat;
};

struct SimResult {
    std::vector<SimRow> rows;
    int uniformity_violations = 0; // sensor/controller range mismatches at deliveries
    int delivered_count = 0;
    int attacked_count = 0;
    int zoom_count = 0; // trigger-codec zoom-outs
    double max_norm = 0.0;
    double final_norm = 0.0;
};

// Runs the closed loop over floor(horizon / tau_s) periods. Plant and model
// advance by exact matrix exponentials, split at the switch offset when a
// switch falls inside a period. Throws SaturationError when the state leaves
// the quantizer range (a certificate violation) and ProtocolError on inputs
// the loop cannot represent (two switches in one period, missing constants).
SimResult simulate(const DiscretizedModel& dm, const SimParams& par,
                   const AttackTrace& attack, const SwitchingSignal& switching);

std::string trace_to_csv(const SimResult& res);

// Re-derives from the recorded rows what the run promised and returns one
// line per violation (empty = clean): range membership, per-cell decode
// error at delivered instants, attack/mode bookkeeping against the input
// traces, the open-loop error flow across synchronized clear periods, and
// the held-input discrete step across switch-free periods.
std::vector<std::string> replay_invariants(const DiscretizedModel& dm,
                                           const SimParams& par,
                                           const AttackTrace& attack,
                                           const SwitchingSignal& switching,
                                           const SimResult& res);

} // namespace resilq
