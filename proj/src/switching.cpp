#include "resilq/switching.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

namespace resilq {

namespace {

constexpr double kTol = 1e-9;

SwitchVerdict sfail(double at, std::string reason) {
    SwitchVerdict v;
    v.valid = false;
    v.at = at;
    v.reason = std::move(reason);
    return v;
}

bool on_multiple(double t, double step) {
    const double r = t / step;
    return std::abs(r - std::round(r)) < 1e-6;
}

// First attack-free sampling instant >= t.
double first_clear_instant(const AttackTrace& trace, double t, double tau_s) {
    int k = int(std::ceil(t / tau_s - kTol));
    while (trace.attacked_at(k * tau_s)) ++k;
    return k * tau_s;
}

} // namespace

int SwitchingSignal::mode_at(double t) const {
    int m = events.empty() ? 0 : events.front().mode;
    for (const SwitchEvent& ev : events) {
        if (ev.t > t + kTol) break;
        m = ev.mode;
    }
    return m;
}

SwitchingSignal generate_switching(int num_modes, double tau_d, double horizon,
                                   bool align, double tau_s, int grid_points,
                                   std::uint64_t seed) {
    if (num_modes < 1) throw std::invalid_argument("need at least one mode");
    if (tau_d <= 0.0) throw std::invalid_argument("dwell time must be positive");
    std::mt19937_64 rng(seed);
    auto unit = [&rng] { return double(rng() >> 11) * 0x1.0p-53; };

    const double snap = align ? tau_s : tau_s / (grid_points - 1);
    SwitchingSignal sig;
    sig.tau_d = tau_d;
    sig.aligned = align;
    sig.events.push_back({0.0, 0});
    if (num_modes == 1) return sig;

    double t = 0.0;
    int mode = 0;
    while (true) {
        const double gap = tau_d * (1.0 + unit());
        // Snap upward so the dwell bound survives rounding.
        double next = std::ceil((t + gap) / snap - kTol) * snap;
        if (next >= horizon) break;
        int step = 1 + int(unit() * (num_modes - 1));
        mode = (mode + step) % num_modes;
        sig.events.push_back({next, mode});
        t = next;
    }
    return sig;
}

SwitchingSignal virtue_switching(int num_modes, double tau_d, double horizon,
                                 double tau_s) {
    if (!on_multiple(tau_d, tau_s))
        throw std::invalid_argument("schedule period must be a whole number of periods");
    SwitchingSignal sig;
    sig.tau_d = tau_d;
    sig.aligned = true;
    int mode = 0;
    for (double t = 0.0; t < horizon; t += tau_d) {
        sig.events.push_back({t, mode});
        mode = (mode + 1) % num_modes;
    }
    return sig;
}

SwitchVerdict validate_switching(const SwitchingSignal& sig, int num_modes,
                                 double tau_s) {
    if (sig.events.empty()) return sfail(0.0, "no initial mode");
    if (std::abs(sig.events.front().t) > kTol)
        return sfail(sig.events.front().t, "first event must be at time zero");
    for (std::size_t i = 0; i < sig.events.size(); ++i) {
        const SwitchEvent& ev = sig.events[i];
        if (ev.mode < 0 || ev.mode >= num_modes)
            return sfail(ev.t, "mode index out of range");
        if (i > 0) {
            if (ev.mode == sig.events[i - 1].mode)
                return sfail(ev.t, "consecutive events carry the same mode");
            if (ev.t - sig.events[i - 1].t < sig.tau_d - kTol)
                return sfail(ev.t, "dwell time violated");
        }
        if (sig.aligned && !on_multiple(ev.t, tau_s))
            return sfail(ev.t, "switch off the sampling lattice");
    }
    return {};
}

int controller_mode_at(const SwitchingSignal& sig, const AttackTrace& trace,
                       double t, double tau_s) {
    int k = int(std::floor(t / tau_s + kTol));
    for (; k >= 0; --k) {
        const double tk = k * tau_s;
        if (!trace.attacked_at(tk)) return sig.mode_at(tk);
    }
    return sig.events.empty() ? 0 : sig.events.front().mode;
}

int max_async_periods(const SwitchingSignal& sig, const AttackTrace& trace,
                      double tau_s) {
    int worst = 0;
    for (std::size_t i = 1; i < sig.events.size(); ++i) {
        const double ts = sig.events[i].t;
        const double clear = first_clear_instant(trace, ts, tau_s);
        // Sampling instants strictly after the switch, up to and including the
        // first clear one.
        const int lo = int(std::floor(ts / tau_s + kTol)) + 1;
        const int hi = int(std::round(clear / tau_s));
        worst = std::max(worst, hi - lo + 1);
    }
    return worst;
}

std::string switching_to_csv(const SwitchingSignal& sig) {
    std::string out = "time_s,mode\n";
    char buf[64];
    for (const SwitchEvent& ev : sig.events) {
        std::snprintf(buf, sizeof(buf), "%.17g,%d\n", ev.t, ev.mode);
        out += buf;
    }
    return out;
}

SwitchingSignal switching_from_csv(const std::string& csv) {
    SwitchingSignal sig;
    std::istringstream in(csv);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.rfind("time_s", 0) == 0) continue;
        }
        SwitchEvent ev;
        if (std::sscanf(line.c_str(), "%lg,%d", &ev.t, &ev.mode) != 2)
            throw std::runtime_error("switching CSV: malformed line: " + line);
        sig.events.push_back(ev);
    }
    return sig;
}

} // namespace resilq
