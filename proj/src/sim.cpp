#include "resilq/sim.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <tuple>
#include <utility>

namespace resilq {

namespace {

bool is_tracking(Strategy s) {
    return s == Strategy::tracking || s == Strategy::tracking_aligned;
}

bool is_predictor(Strategy s) { return is_tracking(s) || s == Strategy::active_range; }

int num_steps(double horizon, double tau_s) {
    if (!(horizon > 0.0)) throw ProtocolError("horizon must be positive");
    int steps = static_cast<int>(std::llround(horizon / tau_s));
    if (steps < 1) throw ProtocolError("horizon shorter than one sampling period");
    return steps;
}

// Mode/duration pieces covering one sampling period [t_k, t_{k+1}). A switch
// exactly at t_{k+1} does not split the flow; more than one switch in the
// period cannot be represented by the codecs' single switched flag.
struct PeriodSegments {
    int modes[2] = {0, 0};
    double durs[2] = {0.0, 0.0};
    int count = 1;
    bool switched_inside = false;
    bool switched_at_end = false;
    int mode_end = 0; // sigma(t_{k+1}), right-continuous
};

PeriodSegments scan_period(const SwitchingSignal& sig, double t0, double t1) {
    const double eps = 1e-9 * (t1 - t0);
    PeriodSegments ps;
    ps.modes[0] = sig.mode_at(t0);
    ps.durs[0] = t1 - t0;
    int hits = 0;
    for (const auto& ev : sig.events) {
        if (ev.t <= t0 + eps) continue;
        if (ev.t > t1 + eps) break;
        if (++hits > 1) throw ProtocolError("two switches inside one sampling period");
        if (std::abs(ev.t - t1) <= eps) {
            ps.switched_at_end = true;
        } else {
            ps.switched_inside = true;
            ps.durs[0] = ev.t - t0;
            ps.modes[1] = ev.mode;
            ps.durs[1] = t1 - ev.t;
            ps.count = 2;
        }
    }
    ps.mode_end = sig.mode_at(t1 + eps);
    return ps;
}

// e^{Acal_pq dur} on [x; xhat]. Full-period mismatched flows reuse the matrix
// the codecs replay with, so the simulated plant and the reconciliation
// arithmetic agree bit for bit; everything else is computed once and cached.
class CoupledCache {
public:
    explicit CoupledCache(const DiscretizedModel& dm) : dm_(dm) {}

    const Matrix& get(int p, int q, double dur) {
        const double tau = dm_.plant().tau_s();
        const bool full = std::abs(dur - tau) <= 1e-12 * tau;
        if (full && p != q) return dm_.pair(p, q).exp_acal;
        const auto key = std::make_tuple(p, q, full ? -1.0 : dur);
        auto it = cache_.find(key);
        if (it == cache_.end())
            it = cache_.emplace(key, expm(dm_.acal(p, q) * (full ? tau : dur))).first;
        return it->second;
    }

private:
    const DiscretizedModel& dm_;
    std::map<std::tuple<int, int, double>, Matrix> cache_;
};

// e^{[[A_p, B_p], [0, 0]] dur} on [x; u]: advances the plant under a held
// input without needing the input-response integral at every offset.
class HeldCache {
public:
    explicit HeldCache(const SwitchedPlant& plant) : plant_(plant) {}

    const Matrix& get(int p, double dur) {
        const double tau = plant_.tau_s();
        const bool full = std::abs(dur - tau) <= 1e-12 * tau;
        const auto key = std::make_pair(p, full ? -1.0 : dur);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            const int nx = plant_.nx(), nu = plant_.nu();
            const Mode& m = plant_.mode(p);
            Matrix gen(nx + nu, nx + nu);
            for (int i = 0; i < nx; ++i) {
                for (int j = 0; j < nx; ++j) gen(i, j) = m.A(i, j);
                for (int j = 0; j < nu; ++j) gen(i, nx + j) = m.B(i, j);
            }
            it = cache_.emplace(key, expm(gen * (full ? tau : dur))).first;
        }
        return it->second;
    }

private:
    const SwitchedPlant& plant_;
    std::map<std::pair<int, double>, Matrix> cache_;
};

struct RowInputs {
    int k = 0;
    double t = 0.0;
    bool attacked = false;
    int mode = 0;
    int mode_hat = 0;
    int step_case = 0;
    bool switched_inside = false;
    bool switched_at_end = false;
    double E = 0.0;
    double u_norm = 0.0;
};

void push_row(SimResult& res, const RowInputs& in, const Message& msg, const Vec& x,
              const Vec& xhat) {
    SimRow r;
    r.k = in.k;
    r.t = in.t;
    r.attacked = in.attacked;
    r.mode = in.mode;
    r.mode_hat = in.mode_hat;
    r.step_case = in.step_case;
    r.switched_inside = in.switched_inside;
    r.switched_at_end = in.switched_at_end;
    r.msg_switched = msg.switched;
    r.async_periods = msg.async_periods;
    r.flag = msg.flag;
    r.zoom_age = msg.zoom_age;
    r.E = in.E;
    r.symbol = msg.symbol;
    r.u_norm = in.u_norm;
    r.x = x;
    r.xhat = xhat;
    res.rows.push_back(std::move(r));
    const double norm = vec_inf_norm(x);
    res.max_norm = std::max(res.max_norm, norm);
    res.final_norm = norm;
    if (in.attacked)
        ++res.attacked_count;
    else
        ++res.delivered_count;
}

int initial_mode(const SwitchingSignal& sig) {
    if (sig.events.empty() || sig.events.front().t != 0.0)
        throw ProtocolError("switching signal must start with a mode at t = 0");
    return sig.events.front().mode;
}

// Predictor-driven strategies: u(t) = K_{sigma_hat} xhat(t) applied
// continuously, plant and model integrated as one coupled flow. After every
// step the model half is re-based to the codec's value so the controller in
// the loop is exactly the decoder's arithmetic, not a numerical twin of it.
SimResult run_predictor(const DiscretizedModel& dm, const SimParams& par,
                        const AttackTrace& attack, const SwitchingSignal& sig) {
    const SwitchedPlant& plant = dm.plant();
    const int nx = plant.nx();
    const double tau = plant.tau_s();
    const int steps = num_steps(par.horizon, tau);
    const bool origin = par.strategy == Strategy::active_range;
    const bool aligned = par.strategy == Strategy::tracking_aligned;
    const int mode0 = initial_mode(sig);

    std::optional<TrackingEncoder> tenc;
    std::optional<TrackingDecoder> tdec;
    std::optional<ActiveRangeEncoder> aenc;
    std::optional<ActiveRangeDecoder> adec;
    if (origin) {
        aenc.emplace(dm, *par.s2, par.N, par.E0, mode0);
        adec.emplace(dm, *par.s2, par.N, par.E0, mode0);
    } else {
        tenc.emplace(dm, par.N, par.E0, mode0, aligned);
        tdec.emplace(dm, par.N, par.E0, mode0, aligned);
    }

    SimResult res;
    res.rows.reserve(steps + 1);

    const bool atk0 = attack.attacked_at(0.0);
    Message msg = origin ? aenc->initial(par.x0, atk0) : tenc->initial(par.x0, atk0);
    std::optional<Vec> out = origin ? adec->initial(atk0 ? nullptr : &msg)
                                    : tdec->initial(atk0 ? nullptr : &msg);
    Vec x = par.x0;
    Vec xhat = origin ? (out ? *out : Vec(nx, 0.0)) : tdec->xhat();
    int mode_hat = origin ? adec->mode_hat() : tdec->mode_hat();

    RowInputs in;
    in.t = 0.0;
    in.attacked = atk0;
    in.mode = mode0;
    in.mode_hat = mode_hat;
    in.E = origin ? aenc->E() : tenc->E();
    in.u_norm = vec_inf_norm(matvec(plant.mode(mode_hat).K, xhat));
    push_row(res, in, msg, x, xhat);

    CoupledCache cache(dm);
    Vec z(2 * nx);
    for (int k = 0; k < steps; ++k) {
        const double t0 = k * tau, t1 = (k + 1) * tau;
        const PeriodSegments ps = scan_period(sig, t0, t1);
        const int q = mode_hat; // gain held through the period
        for (int i = 0; i < nx; ++i) {
            z[i] = x[i];
            z[nx + i] = xhat[i];
        }
        for (int s = 0; s < ps.count; ++s)
            z = matvec(cache.get(ps.modes[s], q, ps.durs[s]), z);
        x.assign(z.begin(), z.begin() + nx);

        const bool atk = attack.attacked_at(t1);
        EncoderEvents ev{ps.mode_end, ps.switched_inside, ps.switched_at_end, atk};
        if (origin) {
            msg = aenc->step(x, ev);
            out = adec->step(atk ? nullptr : &msg);
            in.step_case = static_cast<int>(aenc->last_case());
            if (!atk && aenc->E() != adec->E()) ++res.uniformity_violations;
            if (out)
                xhat = *out;
            else
                xhat = matvec(dm.mode(q).Ad, xhat); // model coasts under the old gain
            mode_hat = adec->mode_hat();
            in.E = aenc->E();
        } else {
            msg = tenc->step(x, ev);
            out = tdec->step(atk ? nullptr : &msg);
            in.step_case = static_cast<int>(tenc->last_case());
            if (!atk &&
                !(tenc->E() == tdec->E() && tenc->center() == tdec->center() &&
                  tenc->xhat() == tdec->xhat() && tenc->mode_hat() == tdec->mode_hat()))
                ++res.uniformity_violations;
            xhat = tdec->xhat();
            mode_hat = tdec->mode_hat();
            in.E = tenc->E();
        }

        in.k = k + 1;
        in.t = t1;
        in.attacked = atk;
        in.mode = ps.mode_end;
        in.mode_hat = mode_hat;
        in.switched_inside = ps.switched_inside;
        in.switched_at_end = ps.switched_at_end;
        in.u_norm = vec_inf_norm(matvec(plant.mode(mode_hat).K, xhat));
        push_row(res, in, msg, x, xhat);
    }
    return res;
}

// Held-output strategies: the input is recomputed from delivered symbols
// only, zeroed through outages, and constant across each period, so the
// plant advances on [x; u] with the input rows frozen.
SimResult run_held(const DiscretizedModel& dm, const SimParams& par,
                   const AttackTrace& attack, const SwitchingSignal& sig) {
    const SwitchedPlant& plant = dm.plant();
    const int nx = plant.nx(), nu = plant.nu();
    const double tau = plant.tau_s();
    const int steps = num_steps(par.horizon, tau);
    const int mode0 = initial_mode(sig);
    const Vec origin_center(nx, 0.0);

    std::optional<PassiveRangeEncoder> penc;
    std::optional<PassiveRangeDecoder> pdec;
    std::optional<ScheduleRange> srange;
    std::optional<TriggerRangeEncoder> genc;
    std::optional<TriggerRangeDecoder> gdec;

    SimResult res;
    res.rows.reserve(steps + 1);

    const bool atk0 = attack.attacked_at(0.0);
    Message msg;
    std::optional<Vec> out;
    double E_now = 0.0;
    int mode_hat = mode0;

    switch (par.strategy) {
    case Strategy::passive_range:
        penc.emplace(dm, *par.fits, *par.s3, par.N, par.E0, mode0);
        pdec.emplace(dm, *par.fits, *par.s3, par.N, par.E0, mode0);
        msg = penc->initial(par.x0, atk0);
        out = pdec->initial(atk0 ? nullptr : &msg);
        E_now = penc->E();
        mode_hat = pdec->mode_hat();
        break;
    case Strategy::schedule_range:
        srange.emplace(*par.s4, tau, par.tau_d, par.n_min, par.n_max, par.E0);
        E_now = srange->E();
        msg = Message{};
        msg.mode = mode0;
        msg.symbol = encode_box(par.x0, origin_center, E_now, par.N);
        if (!atk0) out = decode_box(msg.symbol, origin_center, E_now, par.N, nx);
        break;
    case Strategy::trigger_range:
        genc.emplace(*par.s4, par.n_min, par.n_max, par.E0);
        gdec.emplace(*par.s4, par.n_min, par.n_max, par.E0);
        msg = genc->initial(par.x0);
        msg.symbol = encode_box(par.x0, origin_center, genc->E(), par.N);
        out = gdec->initial(atk0 ? nullptr : &msg, nx, par.N);
        E_now = genc->E();
        break;
    default:
        throw ProtocolError("held loop called with a predictor strategy");
    }

    Vec x = par.x0;
    Vec u = out ? matvec(plant.mode(mode_hat).K, *out) : Vec(nu, 0.0);

    RowInputs in;
    in.t = 0.0;
    in.attacked = atk0;
    in.mode = mode0;
    in.mode_hat = mode_hat;
    in.E = E_now;
    in.u_norm = vec_inf_norm(u);
    push_row(res, in, msg, x, Vec{});

    HeldCache cache(plant);
    Vec w(nx + nu);
    for (int k = 0; k < steps; ++k) {
        const double t0 = k * tau, t1 = (k + 1) * tau;
        const PeriodSegments ps = scan_period(sig, t0, t1);
        for (int i = 0; i < nx; ++i) w[i] = x[i];
        for (int i = 0; i < nu; ++i) w[nx + i] = u[i];
        for (int s = 0; s < ps.count; ++s)
            w = matvec(cache.get(ps.modes[s], ps.durs[s]), w);
        x.assign(w.begin(), w.begin() + nx);

        const bool atk = attack.attacked_at(t1);
        in.step_case = 0;
        switch (par.strategy) {
        case Strategy::passive_range: {
            EncoderEvents ev{ps.mode_end, ps.switched_inside, ps.switched_at_end, atk};
            msg = penc->step(x, ev);
            out = pdec->step(atk ? nullptr : &msg);
            in.step_case = static_cast<int>(penc->last_case());
            if (!atk && penc->E() != pdec->E()) ++res.uniformity_violations;
            E_now = penc->E();
            mode_hat = pdec->mode_hat();
            break;
        }
        case Strategy::schedule_range:
            srange->step();
            E_now = srange->E();
            msg = Message{};
            msg.k = k + 1;
            msg.mode = ps.mode_end;
            msg.switched = ps.switched_inside || ps.switched_at_end;
            msg.symbol = encode_box(x, origin_center, E_now, par.N);
            out.reset();
            if (!atk) out = decode_box(msg.symbol, origin_center, E_now, par.N, nx);
            mode_hat = ps.mode_end;
            break;
        case Strategy::trigger_range: {
            const bool sw = ps.switched_at_end; // calendar switches sit on the lattice
            msg = genc->step(vec_inf_norm(x), sw);
            msg.symbol = encode_box(x, origin_center, genc->E(), par.N);
            out = gdec->step(atk ? nullptr : &msg, sw, nx, par.N);
            res.zoom_count += genc->zoomed_now();
            if (!atk && genc->E() != gdec->E()) ++res.uniformity_violations;
            E_now = genc->E();
            mode_hat = ps.mode_end;
            break;
        }
        default:
            break;
        }
        u = out ? matvec(plant.mode(mode_hat).K, *out) : Vec(nu, 0.0);

        in.k = k + 1;
        in.t = t1;
        in.attacked = atk;
        in.mode = ps.mode_end;
        in.mode_hat = mode_hat;
        in.switched_inside = ps.switched_inside;
        in.switched_at_end = ps.switched_at_end;
        in.E = E_now;
        in.u_norm = vec_inf_norm(u);
        push_row(res, in, msg, x, Vec{});
    }
    return res;
}

void append_fmt(std::string& out, const char* fmt, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, fmt, v);
    out += buf;
}

} // namespace

const char* strategy_name(Strategy s) {
    switch (s) {
    case Strategy::tracking: return "tracking";
    case Strategy::tracking_aligned: return "tracking-aligned";
    case Strategy::active_range: return "active-range";
    case Strategy::passive_range: return "passive-range";
    case Strategy::schedule_range: return "schedule-range";
    case Strategy::trigger_range: return "trigger-range";
    }
    return "?";
}

Strategy strategy_from_name(const std::string& name) {
    for (Strategy s : {Strategy::tracking, Strategy::tracking_aligned,
                       Strategy::active_range, Strategy::passive_range,
                       Strategy::schedule_range, Strategy::trigger_range})
        if (name == strategy_name(s)) return s;
    throw ProtocolError("unknown strategy: " + name);
}

SimResult simulate(const DiscretizedModel& dm, const SimParams& par,
                   const AttackTrace& attack, const SwitchingSignal& switching) {
    if (static_cast<int>(par.x0.size()) != dm.plant().nx())
        throw ProtocolError("initial state has the wrong dimension");
    switch (par.strategy) {
    case Strategy::active_range:
        if (!par.s2) throw ProtocolError("active-range run needs its derived constants");
        break;
    case Strategy::passive_range:
        if (!par.fits || !par.s3)
            throw ProtocolError("passive-range run needs the held fits and constants");
        break;
    case Strategy::schedule_range:
    case Strategy::trigger_range:
        if (!par.s4)
            throw ProtocolError("acknowledgment-free run needs its derived constants");
        break;
    default:
        break;
    }
    return is_predictor(par.strategy) ? run_predictor(dm, par, attack, switching)
                                      : run_held(dm, par, attack, switching);
}

std::string trace_to_csv(const SimResult& res) {
    std::string out = "k,t,attacked,mode,mode_hat,case,switch_inside,switch_end,"
                      "msg_switch,async_periods,flag,zoom_age,E,symbol,u_norm";
    const std::size_t nx = res.rows.empty() ? 0 : res.rows.front().x.size();
    const bool has_xhat = !res.rows.empty() && !res.rows.front().xhat.empty();
    for (std::size_t i = 0; i < nx; ++i) out += ",x" + std::to_string(i);
    if (has_xhat)
        for (std::size_t i = 0; i < nx; ++i) out += ",xhat" + std::to_string(i);
    out += "\n";
    for (const SimRow& r : res.rows) {
        out += std::to_string(r.k);
        append_fmt(out, ",%.17g", r.t);
        out += r.attacked ? ",1" : ",0";
        out += "," + std::to_string(r.mode) + "," + std::to_string(r.mode_hat) + "," +
               std::to_string(r.step_case);
        out += r.switched_inside ? ",1" : ",0";
        out += r.switched_at_end ? ",1" : ",0";
        out += r.msg_switched ? ",1" : ",0";
        out += "," + std::to_string(r.async_periods);
        out += r.flag ? ",1" : ",0";
        out += "," + std::to_string(r.zoom_age);
        append_fmt(out, ",%.17g", r.E);
        out += "," + std::to_string(r.symbol);
        append_fmt(out, ",%.17g", r.u_norm);
        for (double v : r.x) append_fmt(out, ",%.17g", v);
        if (has_xhat)
            for (double v : r.xhat) append_fmt(out, ",%.17g", v);
        out += "\n";
    }
    return out;
}

std::vector<std::string> replay_invariants(const DiscretizedModel& dm,
                                           const SimParams& par,
                                           const AttackTrace& attack,
                                           const SwitchingSignal& switching,
                                           const SimResult& res) {
    std::vector<std::string> bad;
    auto complain = [&bad](int k, const std::string& what) {
        bad.push_back("k=" + std::to_string(k) + ": " + what);
    };
    const SwitchedPlant& plant = dm.plant();
    const int nx = plant.nx(), nu = plant.nu();
    const double tau = plant.tau_s();
    const double slack = 1.0 + 2e-7; // matches the codec saturation tolerance
    const bool tracking = is_tracking(par.strategy);
    const Vec origin_center(nx, 0.0);

    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const SimRow& r = res.rows[i];
        if (r.attacked != attack.attacked_at(r.t))
            complain(r.k, "attack flag disagrees with the attack trace");
        if (r.mode != switching.mode_at(r.t + 1e-9 * tau))
            complain(r.k, "plant mode disagrees with the switching signal");

        // same resolution floor as the codec guard: bounds below the roundoff
        // of the offset subtraction cannot be enforced in doubles
        const double floor_tol = 1e-12 * vec_inf_norm(r.x);
        if (!tracking && vec_inf_norm(r.x) > r.E * slack + floor_tol)
            complain(r.k, "state outside the origin-centered range");
        if (!r.attacked) {
            if (tracking) {
                const Vec err = vec_sub(r.x, r.xhat);
                if (vec_inf_norm(err) > (r.E / par.N) * slack + floor_tol)
                    complain(r.k, "delivered-step model error exceeds one cell");
            } else {
                const Vec c = decode_box(r.symbol, origin_center, r.E, par.N, nx);
                if (vec_inf_norm(vec_sub(r.x, c)) > (r.E / par.N) * slack + floor_tol)
                    complain(r.k, "delivered symbol decodes outside its cell");
            }
        }

        if (i + 1 == res.rows.size()) continue;
        const SimRow& s = res.rows[i + 1];
        const bool no_switch =
            !s.switched_inside && !s.switched_at_end && s.mode == r.mode;
        if (!no_switch) continue;
        if (tracking && r.mode_hat == r.mode) {
            // with the gain matched and no switch, the model error flows
            // open-loop across the period regardless of what the link does
            const Vec err = vec_sub(r.x, r.xhat);
            const Vec want = matvec(dm.mode(r.mode).Ad_hat, err);
            const Vec got = vec_sub(s.x, matvec(dm.mode(r.mode_hat).Ad, r.xhat));
            const double scale = std::max(1.0, vec_inf_norm(r.x));
            if (vec_inf_norm(vec_sub(got, want)) > 1e-9 * scale)
                complain(s.k, "synchronized error flow deviates from the open-loop map");
        }
        if (!is_predictor(par.strategy)) {
            // held input: one period is the exact discrete step on [x; u]
            Vec u(nu, 0.0);
            if (!r.attacked) {
                const Vec c = decode_box(r.symbol, origin_center, r.E, par.N, nx);
                u = matvec(plant.mode(r.mode_hat).K, c);
            }
            const ModeMaps& mm = dm.mode(r.mode);
            const Vec want = vec_add(matvec(mm.Ad_hat, r.x), matvec(mm.Bd_hat, u));
            const double scale =
                std::max({1.0, vec_inf_norm(r.x), vec_inf_norm(u)});
            if (vec_inf_norm(vec_sub(s.x, want)) > 1e-9 * scale)
                complain(s.k, "held step deviates from the discrete-time map");
        }
    }
    return bad;
}

} // namespace resilq
