#pragma once

#include <string>
#include <vector>

#include "resilq/constants.hpp"
#include "resilq/sim.hpp"

namespace resilq {

// Unified admissibility inputs. Each strategy reads the fields it prices:
// N everywhere; N_max in the tracking family; n_max in the burst averages of
// the origin-centered family and the no-ACK calendar; n_min in the calendar
// alone; dos wherever acknowledgments make the attack budget observable (the
// no-ACK family prices (n_min, n_max) instead).
struct CertParams {
    int N = 3;
    int N_max = 1;
    int n_max = 1;
    int n_min = 1;
    double tau_d = 1.0;
    AttackRates dos;
};

struct Certificate {
    Strategy strategy = Strategy::tracking;
    CertParams inputs;
    std::vector<Condition> conditions;
    bool satisfied = false;
    // Closed-form floors where the derivation exposes one; strategies that
    // price the parameter only through the rate aggregate leave the field 0
    // (solve_envelope recovers the boundary there).
    double range_floor = 0.0; // minimum admissible quantization level
    double dwell_floor = 0.0; // minimum admissible dwell time, seconds
    double decay_base = 0.0;  // per-step range division of the tracking law
};

Certificate check(const DiscretizedModel& dm, const FitSet& fits,
                  Strategy strategy, const CertParams& par);

// Parameters the envelope solver may free. The continuous three relax the
// conditions as they grow, which makes bisection on the verdict sound. The
// level does not relax monotonically in general (the zoom-out budget and the
// edge-cell factor grow with it), so levels are scanned exactly instead.
enum class FreeParam { level, dwell, attack_spacing, attack_budget };

const char* free_param_name(FreeParam f);

struct EnvelopeResult {
    bool feasible = false;
    double value = 0.0;  // minimal admissible value of the freed parameter
    std::string binding; // least-satisfied condition at the top of the bounds
    Certificate at_value;
};

// Minimal admissible value of one freed parameter inside [lo, hi], all other
// inputs fixed at `par`. Levels move on the odd-integer grid; the continuous
// parameters bisect to rel_tol. Infeasible bounds come back with the binding
// condition instead of a value.
EnvelopeResult solve_envelope(const DiscretizedModel& dm, const FitSet& fits,
                              Strategy strategy, CertParams par,
                              FreeParam free_par, double lo, double hi,
                              double rel_tol = 1e-3);

struct EnvelopePoint {
    double outer = 0.0;
    EnvelopeResult inner;
};

// Feasibility boundary with two freed parameters: the outer one sweeps its
// bounds on an even grid while the inner one is minimized at each sample.
std::vector<EnvelopePoint> sweep_envelope(const DiscretizedModel& dm,
                                          const FitSet& fits, Strategy strategy,
                                          CertParams par, FreeParam outer,
                                          double lo_outer, double hi_outer,
                                          int samples, FreeParam inner,
                                          double lo_inner, double hi_inner,
                                          double rel_tol = 1e-3);

} // namespace resilq
