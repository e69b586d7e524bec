#include "resilq/cert.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace resilq {

namespace {

CertParams with_value(CertParams par, FreeParam f, double v) {
    switch (f) {
    case FreeParam::level: par.N = static_cast<int>(v); break;
    case FreeParam::dwell: par.tau_d = v; break;
    case FreeParam::attack_spacing: par.dos.tau_D = v; break;
    case FreeParam::attack_budget: par.dos.T = v; break;
    }
    return par;
}

std::string binding_name(const std::vector<Condition>& cs) {
    const Condition* worst = nullptr;
    for (const Condition& c : cs) {
        if (c.satisfied) continue;
        if (!worst || c.lhs - c.rhs > worst->lhs - worst->rhs) worst = &c;
    }
    return worst ? worst->name : "";
}

} // namespace

const char* free_param_name(FreeParam f) {
    switch (f) {
    case FreeParam::level: return "level";
    case FreeParam::dwell: return "dwell";
    case FreeParam::attack_spacing: return "attack-spacing";
    case FreeParam::attack_budget: return "attack-budget";
    }
    return "?";
}

Certificate check(const DiscretizedModel& dm, const FitSet& fits,
                  Strategy strategy, const CertParams& par) {
    Certificate cert;
    cert.strategy = strategy;
    cert.inputs = par;
    switch (strategy) {
    case Strategy::tracking: {
        Strategy1Params p;
        p.N = par.N;
        p.N_max = par.N_max;
        p.tau_d = par.tau_d;
        p.dos = par.dos;
        Strategy1Constants c = derive_strategy1(dm, fits, p);
        cert.conditions = std::move(c.conditions);
        cert.satisfied = c.satisfied;
        cert.range_floor = c.Gamma;
        cert.dwell_floor = c.dwell_floor;
        cert.decay_base = c.b;
        break;
    }
    case Strategy::tracking_aligned: {
        Strategy1Params p;
        p.N = par.N;
        p.N_max = par.N_max;
        p.tau_d = par.tau_d;
        p.dos = par.dos;
        AlignedConstants c = derive_aligned(dm, fits, p);
        cert.conditions = std::move(c.conditions);
        cert.satisfied = c.satisfied;
        cert.range_floor = c.Gamma;
        cert.dwell_floor = c.dwell_floor;
        break;
    }
    case Strategy::active_range: {
        Strategy2Params p;
        p.N = par.N;
        p.N_max = par.N_max;
        p.n_max = par.n_max;
        p.tau_d = par.tau_d;
        p.dos = par.dos;
        Strategy2Constants c = derive_strategy2(dm, fits, p);
        cert.conditions = std::move(c.conditions);
        cert.satisfied = c.satisfied;
        cert.range_floor = c.range_floor;
        cert.dwell_floor = c.dwell_floor;
        break;
    }
    case Strategy::passive_range: {
        Strategy3Params p;
        p.N = par.N;
        p.tau_d = par.tau_d;
        p.dos = par.dos;
        Strategy3Constants c = derive_strategy3(dm, fits, p);
        cert.conditions = std::move(c.conditions);
        cert.satisfied = c.satisfied;
        cert.range_floor = c.range_floor;
        break;
    }
    case Strategy::schedule_range:
    case Strategy::trigger_range: {
        Strategy4Params p;
        p.N = par.N;
        p.n_min = par.n_min;
        p.n_max = par.n_max;
        p.tau_d = par.tau_d;
        Strategy4Constants c = derive_strategy4(dm, fits, p);
        cert.range_floor = c.range_floor;
        if (strategy == Strategy::schedule_range) {
            cert.conditions = std::move(c.tt_conditions);
            cert.satisfied = c.tt_satisfied;
        } else {
            cert.conditions = std::move(c.et_conditions);
            cert.satisfied = c.et_satisfied;
        }
        break;
    }
    }
    return cert;
}

EnvelopeResult solve_envelope(const DiscretizedModel& dm, const FitSet& fits,
                              Strategy strategy, CertParams par,
                              FreeParam free_par, double lo, double hi,
                              double rel_tol) {
    if (!(lo > 0.0) || !(hi >= lo))
        throw std::invalid_argument("envelope bounds must satisfy 0 < lo <= hi");
    if (!(rel_tol > 0.0))
        throw std::invalid_argument("envelope tolerance must be positive");

    const auto probe = [&](double v) {
        return check(dm, fits, strategy, with_value(par, free_par, v));
    };

    EnvelopeResult res;
    if (free_par == FreeParam::level) {
        long long bot = static_cast<long long>(std::ceil(lo));
        if (bot < 3) bot = 3;
        if (bot % 2 == 0) ++bot;
        long long top = static_cast<long long>(std::floor(hi));
        if (top % 2 == 0) --top;
        if (top < bot)
            throw std::invalid_argument("no odd level inside the bounds");

        // exact scan: the level's effect on the conditions is not monotone,
        // so bisection could skip over the true minimum
        for (long long n = bot; n <= top; n += 2) {
            Certificate at_n = probe(static_cast<double>(n));
            if (at_n.satisfied) {
                res.feasible = true;
                res.value = static_cast<double>(n);
                res.at_value = std::move(at_n);
                return res;
            }
            if (n == top) {
                res.value = static_cast<double>(top);
                res.binding = binding_name(at_n.conditions);
                res.at_value = std::move(at_n);
            }
        }
        return res;
    }

    Certificate at_top = probe(hi);
    if (!at_top.satisfied) {
        res.value = hi;
        res.binding = binding_name(at_top.conditions);
        res.at_value = std::move(at_top);
        return res;
    }
    Certificate at_bot = probe(lo);
    if (at_bot.satisfied) {
        res.feasible = true;
        res.value = lo;
        res.at_value = std::move(at_bot);
        return res;
    }
    double bad = lo, good = hi;
    while (good - bad > rel_tol * good) {
        const double mid = 0.5 * (bad + good);
        if (probe(mid).satisfied)
            good = mid;
        else
            bad = mid;
    }
    res.feasible = true;
    res.value = good;
    res.at_value = probe(good);
    return res;
}

std::vector<EnvelopePoint> sweep_envelope(const DiscretizedModel& dm,
                                          const FitSet& fits, Strategy strategy,
                                          CertParams par, FreeParam outer,
                                          double lo_outer, double hi_outer,
                                          int samples, FreeParam inner,
                                          double lo_inner, double hi_inner,
                                          double rel_tol) {
    if (outer == inner)
        throw std::invalid_argument("sweep parameters must differ");
    if (samples < 2)
        throw std::invalid_argument("sweep needs at least two samples");

    std::vector<EnvelopePoint> pts;
    pts.reserve(static_cast<size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        double v = lo_outer + (hi_outer - lo_outer) * i / (samples - 1);
        if (outer == FreeParam::level) {
            long long n = std::llround(v);
            if (n < 3) n = 3;
            if (n % 2 == 0) ++n;
            v = static_cast<double>(n);
        }
        EnvelopePoint pt;
        pt.outer = v;
        pt.inner = solve_envelope(dm, fits, strategy, with_value(par, outer, v),
                                  inner, lo_inner, hi_inner, rel_tol);
        pts.push_back(std::move(pt));
    }
    return pts;
}

} // namespace resilq
