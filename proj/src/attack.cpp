#include "resilq/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

namespace resilq {

namespace {

constexpr double kTol = 1e-9;

double unit_draw(std::mt19937_64& rng) {
    // 53-bit mantissa draw; avoids distribution-implementation drift.
    return double(rng() >> 11) * 0x1.0p-53;
}

double draw_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * unit_draw(rng);
}

AttackVerdict fail(double at, std::string reason) {
    AttackVerdict v;
    v.valid = false;
    v.at = at;
    v.reason = std::move(reason);
    return v;
}

AttackVerdict check_well_formed(const AttackTrace& trace) {
    double prev_end = -1.0;
    for (const AttackInterval& iv : trace.intervals) {
        if (iv.duration <= 0.0) return fail(iv.start, "non-positive duration");
        if (iv.start < -kTol) return fail(iv.start, "interval before time zero");
        if (iv.start < prev_end - kTol)
            return fail(iv.start, "intervals overlap or are out of order");
        if (iv.end() > trace.horizon + kTol)
            return fail(iv.start, "interval exceeds horizon");
        prev_end = iv.end();
    }
    return {};
}

// Attacked time within [0, t].
double attacked_measure(const AttackTrace& trace, double t) {
    double acc = 0.0;
    for (const AttackInterval& iv : trace.intervals) {
        if (iv.start >= t) break;
        acc += std::min(iv.end(), t) - iv.start;
    }
    return acc;
}

int onsets_before(const AttackTrace& trace, double t) {
    int n = 0;
    for (const AttackInterval& iv : trace.intervals)
        if (iv.start <= t + kTol) ++n;
    return n;
}

} // namespace

bool AttackTrace::attacked_at(double t) const {
    for (const AttackInterval& iv : intervals) {
        if (t < iv.start - kTol) return false;
        if (t < iv.end() - kTol) return true;
    }
    return false;
}

int AttackTrace::sampled_periods(std::size_t i, double tau_s) const {
    const AttackInterval& iv = intervals[i];
    const int first = int(std::ceil(iv.start / tau_s - kTol));
    const int last = int(std::ceil(iv.end() / tau_s - kTol)) - 1; // end exclusive
    return std::max(0, last - first + 1);
}

AttackVerdict verify_attack(const AttackTrace& trace, const AttackParams& params,
                            double tau_s) {
    AttackVerdict wf = check_well_formed(trace);
    if (!wf.valid) return wf;

    if (params.kind == AttackModel::intermittent) {
        double prev_end = -1e300;
        for (std::size_t i = 0; i < trace.intervals.size(); ++i) {
            const AttackInterval& iv = trace.intervals[i];
            if (iv.duration > params.n_max * tau_s + kTol)
                return fail(iv.start, "burst longer than the period cap");
            if (i > 0 && iv.start - prev_end < params.n_min * tau_s - kTol)
                return fail(iv.start, "gap shorter than the sleep floor");
            prev_end = iv.end();
        }
        return {};
    }

    const AttackRates& r = params.avg;
    if (params.burst_cap > 0) {
        for (std::size_t i = 0; i < trace.intervals.size(); ++i)
            if (trace.sampled_periods(i, tau_s) > params.burst_cap)
                return fail(trace.intervals[i].start,
                            "burst longer than the period cap");
    }
    const int K = int(std::floor(trace.horizon / tau_s + kTol));
    int failed_before = 0; // sampled failures among instants strictly before t_k
    for (int k = 0; k <= K; ++k) {
        const double t = k * tau_s;
        if (onsets_before(trace, t) > r.n0 + t / r.tau_D + kTol)
            return fail(t, "onset frequency budget exceeded");
        if (attacked_measure(trace, t) > r.kappa + t / r.T + kTol)
            return fail(t, "attack duration budget exceeded");
        if (failed_before * tau_s > r.kappa_bar(tau_s) + t * r.inv_T_bar(tau_s) + kTol)
            return fail(t, "sampled-failure budget exceeded");
        if (trace.attacked_at(t)) ++failed_before;
    }
    return {};
}

AttackTrace generate_attack(const AttackParams& params, double tau_s, double horizon,
                            std::uint64_t seed) {
    if (horizon <= 0.0) throw std::invalid_argument("horizon must be positive");
    std::mt19937_64 rng(seed);
    AttackTrace trace;
    trace.horizon = horizon;

    int budget = 100000;
    if (params.kind == AttackModel::intermittent) {
        const double sleep = params.n_min * tau_s;
        const double burst_max = params.n_max * tau_s;
        double t = draw_in(rng, 0.0, sleep); // initial offset
        while (true) {
            const double dur = draw_in(rng, 0.5 * tau_s, burst_max);
            if (t + dur > horizon) break;
            trace.intervals.push_back({t, dur});
            t += dur + sleep + draw_in(rng, 0.0, sleep);
        }
    } else {
        const AttackRates& r = params.avg;
        // Sustainable duty cycle: at most one onset per tau_D, at most 1/T of
        // the elapsed time attacked; target half of each budget.
        double dur_target = std::max(0.5 * r.tau_D / r.T, tau_s);
        if (params.burst_cap > 0)
            dur_target = std::min(dur_target, (params.burst_cap - 1) * tau_s);
        while (true) {
            const double last_end =
                trace.intervals.empty() ? 0.0 : trace.intervals.back().end();
            const double gap = draw_in(rng, r.tau_D, 2.0 * r.tau_D);
            double dur = draw_in(rng, 0.5 * dur_target, dur_target);
            if (params.burst_cap > 0)
                dur = std::min(dur, (params.burst_cap - 1) * tau_s);
            AttackInterval cand{last_end + gap, dur};
            if (cand.start >= horizon) break;
            if (cand.end() > horizon) cand.duration = horizon - cand.start;
            if (cand.duration <= 0.0) break;
            trace.intervals.push_back(cand);
            AttackTrace upto = trace;
            upto.horizon = std::min(horizon, cand.end() + tau_s);
            if (!verify_attack(upto, params, tau_s).valid) {
                trace.intervals.pop_back();
                if (--budget <= 0)
                    throw std::runtime_error(
                        "attack generation: rejection budget exhausted");
            }
        }
    }
    AttackVerdict v = verify_attack(trace, params, tau_s);
    if (!v.valid)
        throw std::runtime_error("attack generation produced an invalid trace: " +
                                 v.reason);
    return trace;
}

AttackTrace periodic_attack(int n_min, int n_max, double tau_s, double horizon) {
    if (horizon <= 0.0) throw std::invalid_argument("horizon must be positive");
    if (n_min < 1 || n_max < 1)
        throw std::invalid_argument("calendar phases must be at least one period");
    AttackTrace trace;
    trace.horizon = horizon;
    const int cycle = n_min + n_max;
    // half-period margins keep the covered sampling instants away from the
    // interval boundaries
    for (int c = 0;; ++c) {
        const double start = (double(c) * cycle + n_min - 0.5) * tau_s;
        if (start >= horizon) break;
        const double dur = std::min(n_max * tau_s, horizon - start);
        trace.intervals.push_back({start, dur});
    }
    return trace;
}

std::string attack_to_csv(const AttackTrace& trace) {
    std::string out = "start_s,duration_s\n";
    char buf[96];
    for (const AttackInterval& iv : trace.intervals) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", iv.start, iv.duration);
        out += buf;
    }
    return out;
}

AttackTrace attack_from_csv(const std::string& csv, double horizon) {
    AttackTrace trace;
    trace.horizon = horizon;
    std::istringstream in(csv);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.rfind("start_s", 0) == 0) continue;
        }
        AttackInterval iv;
        if (std::sscanf(line.c_str(), "%lg,%lg", &iv.start, &iv.duration) != 2)
            throw std::runtime_error("attack CSV: malformed line: " + line);
        trace.intervals.push_back(iv);
    }
    AttackVerdict wf = check_well_formed(trace);
    if (!wf.valid) throw std::runtime_error("attack CSV: " + wf.reason);
    return trace;
}

} // namespace resilq
