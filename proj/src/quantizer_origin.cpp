#include "resilq/quantizer.hpp"

#include <algorithm>
#include <cmath>

#include "resilq/linalg.hpp"

namespace resilq {

namespace {

constexpr double kRangeTol = 1e-7;

// Shared step bookkeeping of the origin codecs: classify the transition,
// resolve the mode pair a switch law needs, and decide whether a stale-gain
// episode opens or closes. The caller applies its own factor table.
struct OriginStep {
    StepCase c = StepCase::c1;
    int p = 0, q = 0;
    bool enter_async = false;
    bool close_async = false;
    bool sy_next = true, ack_next = true;
};

OriginStep plan_step(bool sy, bool ack, bool in_async, int mode_hat, int mode_k,
                     const EncoderEvents& ev) {
    OriginStep st;
    st.ack_next = !ev.attacked;
    const bool mismatch_start = mode_hat != mode_k;
    st.sy_next = !(mismatch_start || ev.switched_inside);
    st.c = classify_case(sy, st.sy_next, ack, st.ack_next);
    if (in_async && (ev.switched_inside || ev.switched_at_end))
        throw ProtocolError("second switch during one outage");
    st.p = ev.plant_mode;
    st.q = mode_hat;
    if (st.ack_next) {
        st.close_async = in_async || st.c == StepCase::c3 || st.c == StepCase::c6;
    } else if (!in_async && (st.c == StepCase::c4 || st.c == StepCase::c5)) {
        st.enter_async = true;
    }
    return st;
}

void check_norm(double norm, double E) {
    if (norm > E * (1.0 + kRangeTol))
        throw SaturationError("state outside the quantizer range");
}

} // namespace

// ---------------------------------------------------------------------------
// Origin codec, model-driven loop

ActiveRangeEncoder::ActiveRangeEncoder(const DiscretizedModel& dm,
                                       const Strategy2Constants& sc, int N, double E0,
                                       int mode0)
    : sc_(sc), nx_(dm.plant().nx()), N_(N), E_(E0), mode_hat_(mode0), mode_k_(mode0) {
    if (!(E0 > 0.0)) throw ProtocolError("range must be positive");
}

Message ActiveRangeEncoder::initial(const Vec& x0, bool attacked) {
    if (k_ >= 0) throw ProtocolError("codec already started");
    Message m;
    m.k = 0;
    m.mode = mode_k_;
    m.symbol = encode_box(x0, Vec(nx_, 0.0), E_, N_);
    ack_ = !attacked;
    k_ = 0;
    return m;
}

Message ActiveRangeEncoder::step(const Vec& x_next, const EncoderEvents& ev) {
    if (k_ < 0) throw ProtocolError("step before the initial instant");
    const OriginStep st = plan_step(sy_, ack_, in_async_, mode_hat_, mode_k_, ev);

    switch (st.c) {
    case StepCase::c1:
        E_ *= transient_subcase(st.c, ack_km1_) ? sc_.L1[mode_k_] : sc_.L2[mode_k_];
        break;
    case StepCase::c2:
        E_ *= sc_.L3[mode_k_];
        break;
    case StepCase::c3:
        E_ *= sc_.L4(st.p, st.q);
        break;
    case StepCase::c4:
    case StepCase::c5:
    case StepCase::c6:
        E_ *= sc_.L5(st.p, st.q);
        break;
    case StepCase::c7:
    case StepCase::c8:
        if (!in_async_) throw ProtocolError("stale-gain step without an open episode");
        E_ *= sc_.L6(pair_p_, pair_q_);
        break;
    }

    if (in_async_ && (st.c == StepCase::c7 || st.c == StepCase::c8)) ++n_count_;
    Message m;
    m.symbol = encode_box(x_next, Vec(nx_, 0.0), E_, N_);
    m.mode = ev.plant_mode;
    if (st.ack_next) {
        if (st.close_async) {
            m.switched = true;
            m.async_periods = in_async_ ? n_count_ : 0;
            in_async_ = false;
        }
        mode_hat_ = ev.plant_mode;
    } else if (st.enter_async) {
        in_async_ = true;
        pair_p_ = st.p;
        pair_q_ = st.q;
        n_count_ = 0;
    }

    mode_k_ = ev.plant_mode;
    sy_ = st.sy_next;
    ack_km1_ = ack_;
    ack_ = st.ack_next;
    last_case_ = st.c;
    m.k = ++k_;
    return m;
}

ActiveRangeDecoder::ActiveRangeDecoder(const DiscretizedModel& dm,
                                       const Strategy2Constants& sc, int N, double E0,
                                       int mode0)
    : sc_(sc), nx_(dm.plant().nx()), N_(N), E_(E0), mode_hat_(mode0), hist_cap_(512) {
    if (!(E0 > 0.0)) throw ProtocolError("range must be positive");
}

void ActiveRangeDecoder::push_hist() {
    hist_.push_back(E_);
    if (hist_.size() > hist_cap_) {
        hist_.pop_front();
        ++hist_base_;
    }
}

double ActiveRangeDecoder::hist_at(int idx) const {
    const int rel = idx - hist_base_;
    if (idx < 0 || rel < 0 || rel >= int(hist_.size()))
        throw ProtocolError("reconciliation reaches past recorded history");
    return hist_[std::size_t(rel)];
}

std::optional<Vec> ActiveRangeDecoder::initial(const Message* msg) {
    if (k_ >= 0) throw ProtocolError("codec already started");
    k_ = 0;
    std::optional<Vec> out;
    if (msg) {
        if (msg->k != 0) throw ProtocolError("message index out of step");
        out = decode_box(msg->symbol, Vec(nx_, 0.0), E_, N_, nx_);
        mode_hat_ = msg->mode;
        ack_ = true;
    }
    push_hist();
    return out;
}

std::optional<Vec> ActiveRangeDecoder::step(const Message* msg) {
    if (k_ < 0) throw ProtocolError("step before the initial instant");
    const int cur = k_ + 1;
    if (msg && msg->k != cur) throw ProtocolError("message index out of step");

    if (!msg || !msg->switched) {
        if (ack_)
            E_ *= transient_subcase(StepCase::c1, ack_km1_) ? sc_.L1[mode_hat_]
                                                           : sc_.L2[mode_hat_];
        else
            E_ *= sc_.L3[mode_hat_];
    } else if (msg->async_periods == 0) {
        E_ *= ack_ ? sc_.L4(msg->mode, mode_hat_) : sc_.L5(msg->mode, mode_hat_);
    } else {
        const int n = msg->async_periods;
        double e = hist_at(cur - n - 1);
        e *= sc_.L5(msg->mode, mode_hat_);
        for (int i = 0; i < n; ++i) e *= sc_.L6(msg->mode, mode_hat_);
        E_ = e;
    }

    std::optional<Vec> out;
    if (msg) {
        out = decode_box(msg->symbol, Vec(nx_, 0.0), E_, N_, nx_);
        mode_hat_ = msg->mode;
    }
    ack_km1_ = ack_;
    ack_ = msg != nullptr;
    k_ = cur;
    push_hist();
    return out;
}

// ---------------------------------------------------------------------------
// Origin codec, held-output loop

PassiveRangeEncoder::PassiveRangeEncoder(const DiscretizedModel& dm, const FitSet& fits,
                                         const Strategy3Constants& sc, int N, double E0,
                                         int mode0)
    : sc_(sc), nx_(dm.plant().nx()), N_(N), E_(E0), mode_hat_(mode0), mode_k_(mode0) {
    if (!(E0 > 0.0)) throw ProtocolError("range must be positive");
    const int m = dm.plant().num_modes();
    xi_hat_.resize(m);
    eta_hat_.resize(m);
    u_hat_.assign(m, std::vector<double>(m, 0.0));
    for (int p = 0; p < m; ++p) {
        xi_hat_[p] = fits.async_hat[p].rho;
        eta_hat_[p] = fits.async_hat[p].lambda;
        for (int q = 0; q < m; ++q)
            if (p != q) u_hat_[p][q] = std::max(sc.U3(p, q), sc.U4(p, q));
    }
}

Message PassiveRangeEncoder::initial(const Vec& x0, bool attacked) {
    if (k_ >= 0) throw ProtocolError("codec already started");
    Message m;
    m.k = 0;
    m.mode = mode_k_;
    m.symbol = encode_box(x0, Vec(nx_, 0.0), E_, N_);
    ack_ = !attacked;
    k_ = 0;
    return m;
}

Message PassiveRangeEncoder::step(const Vec& x_next, const EncoderEvents& ev) {
    if (k_ < 0) throw ProtocolError("step before the initial instant");
    const OriginStep st = plan_step(sy_, ack_, in_async_, mode_hat_, mode_k_, ev);

    switch (st.c) {
    case StepCase::c1:
        E_ *= transient_subcase(st.c, ack_km1_) ? sc_.U1[mode_k_] : sc_.U2[mode_k_];
        break;
    case StepCase::c2:
        E_ *= transient_subcase(st.c, ack_km1_) ? xi_hat_[mode_k_] * eta_hat_[mode_k_]
                                                : eta_hat_[mode_k_];
        break;
    case StepCase::c3:
        E_ *= sc_.U3(st.p, st.q);
        break;
    case StepCase::c4:
    case StepCase::c5:
        E_ *= u_hat_[st.p][st.q] * sc_.xi_tilde[st.p];
        break;
    case StepCase::c6:
        E_ *= sc_.U4(st.p, st.q);
        break;
    case StepCase::c7:
    case StepCase::c8:
        if (!in_async_) throw ProtocolError("stale-gain step without an open episode");
        E_ *= eta_hat_[mode_k_];
        break;
    }

    if (in_async_ && (st.c == StepCase::c7 || st.c == StepCase::c8)) ++n_count_;
    Message m;
    m.symbol = encode_box(x_next, Vec(nx_, 0.0), E_, N_);
    m.mode = ev.plant_mode;
    if (st.ack_next) {
        if (st.close_async) {
            m.switched = true;
            m.async_periods = in_async_ ? n_count_ : 0;
            in_async_ = false;
        }
        mode_hat_ = ev.plant_mode;
    } else if (st.enter_async) {
        in_async_ = true;
        pair_p_ = st.p;
        pair_q_ = st.q;
        n_count_ = 0;
    }

    mode_k_ = ev.plant_mode;
    sy_ = st.sy_next;
    ack_km1_ = ack_;
    ack_ = st.ack_next;
    last_case_ = st.c;
    m.k = ++k_;
    return m;
}

PassiveRangeDecoder::PassiveRangeDecoder(const DiscretizedModel& dm, const FitSet& fits,
                                         const Strategy3Constants& sc, int N, double E0,
                                         int mode0)
    : sc_(sc), nx_(dm.plant().nx()), N_(N), E_(E0), mode_hat_(mode0), hist_cap_(512) {
    if (!(E0 > 0.0)) throw ProtocolError("range must be positive");
    const int m = dm.plant().num_modes();
    xi_hat_.resize(m);
    eta_hat_.resize(m);
    u_hat_.assign(m, std::vector<double>(m, 0.0));
    for (int p = 0; p < m; ++p) {
        xi_hat_[p] = fits.async_hat[p].rho;
        eta_hat_[p] = fits.async_hat[p].lambda;
        for (int q = 0; q < m; ++q)
            if (p != q) u_hat_[p][q] = std::max(sc.U3(p, q), sc.U4(p, q));
    }
}

void PassiveRangeDecoder::push_hist() {
    hist_.push_back(E_);
    if (hist_.size() > hist_cap_) {
        hist_.pop_front();
        ++hist_base_;
    }
}

double PassiveRangeDecoder::hist_at(int idx) const {
    const int rel = idx - hist_base_;
    if (idx < 0 || rel < 0 || rel >= int(hist_.size()))
        throw ProtocolError("reconciliation reaches past recorded history");
    return hist_[std::size_t(rel)];
}

std::optional<Vec> PassiveRangeDecoder::initial(const Message* msg) {
    if (k_ >= 0) throw ProtocolError("codec already started");
    k_ = 0;
    std::optional<Vec> out;
    if (msg) {
        if (msg->k != 0) throw ProtocolError("message index out of step");
        out = decode_box(msg->symbol, Vec(nx_, 0.0), E_, N_, nx_);
        mode_hat_ = msg->mode;
        ack_ = true;
    }
    push_hist();
    return out;
}

std::optional<Vec> PassiveRangeDecoder::step(const Message* msg) {
    if (k_ < 0) throw ProtocolError("step before the initial instant");
    const int cur = k_ + 1;
    if (msg && msg->k != cur) throw ProtocolError("message index out of step");

    if (!msg || !msg->switched) {
        if (ack_)
            E_ *= transient_subcase(StepCase::c1, ack_km1_) ? sc_.U1[mode_hat_]
                                                           : sc_.U2[mode_hat_];
        else
            E_ *= transient_subcase(StepCase::c2, ack_km1_)
                      ? xi_hat_[mode_hat_] * eta_hat_[mode_hat_]
                      : eta_hat_[mode_hat_];
    } else if (msg->async_periods == 0) {
        E_ *= ack_ ? sc_.U3(msg->mode, mode_hat_) : sc_.U4(msg->mode, mode_hat_);
    } else {
        const int n = msg->async_periods;
        const int p = msg->mode;
        double e = hist_at(cur - n - 1);
        e *= u_hat_[p][mode_hat_] * sc_.xi_tilde[p];
        for (int i = 0; i < n; ++i) e *= eta_hat_[p];
        E_ = e;
    }

    std::optional<Vec> out;
    if (msg) {
        out = decode_box(msg->symbol, Vec(nx_, 0.0), E_, N_, nx_);
        mode_hat_ = msg->mode;
    }
    ack_km1_ = ack_;
    ack_ = msg != nullptr;
    k_ = cur;
    push_hist();
    return out;
}

// ---------------------------------------------------------------------------
// Acknowledgment-free codec, calendar variant

ScheduleRange::ScheduleRange(const Strategy4Constants& sc, double tau_s, double tau_d,
                             int n_min, int n_max, double E0)
    : sc_(sc), E_(E0), period_(n_min + n_max), n_min_(n_min) {
    if (!(E0 > 0.0)) throw ProtocolError("range must be positive");
    if (n_min < 1 || n_max < 1) throw ProtocolError("calendar needs positive phases");
    const double ratio = tau_d / tau_s;
    switch_every_ = int(std::lround(ratio));
    if (switch_every_ < 1 || std::abs(ratio - switch_every_) > 1e-9)
        throw ProtocolError("calendar switch off the sampling lattice");
}

int ScheduleRange::phase_of(int k) const {
    const int r = k % period_;
    if (r == 0) return 0;
    if (r < n_min_) return 1;
    if (r == n_min_) return 2;
    return 3;
}

void ScheduleRange::step() {
    switch (phase_of(k_)) {
    case 0: E_ *= sc_.phi1; break;
    case 1: E_ *= sc_.phi2; break;
    case 2: E_ *= sc_.phi3; break;
    default: E_ *= sc_.phi4; break;
    }
    ++k_;
    if (k_ % switch_every_ == 0) E_ *= sc_.phi5;
}

// ---------------------------------------------------------------------------
// Acknowledgment-free codec, trigger variant

TriggerRangeEncoder::TriggerRangeEncoder(const Strategy4Constants& sc, int n_min,
                                         int n_max, double E0)
    : sc_(sc), n_max_(n_max), E_(E0), E0_(E0),
      hist_cap_(std::size_t(n_min + 2 * n_max + 4)) {
    if (!(E0 > 0.0)) throw ProtocolError("range must be positive");
    if (n_min < 1 || n_max < 1) throw ProtocolError("calendar needs positive phases");
}

void TriggerRangeEncoder::push_hist() {
    hist_.push_back(E_);
    if (hist_.size() > hist_cap_) {
        hist_.pop_front();
        ++hist_base_;
    }
}

double TriggerRangeEncoder::hist_at(int idx) const {
    if (idx < 0) return E0_;  // startup back-references fall back to the initial range
    const int rel = idx - hist_base_;
    if (rel < 0 || rel >= int(hist_.size()))
        throw ProtocolError("zoom reaches past recorded history");
    return hist_[std::size_t(rel)];
}

Message TriggerRangeEncoder::initial(const Vec& x0) {
    if (!hist_.empty()) throw ProtocolError("codec already started");
    check_norm(vec_inf_norm(x0), E_);
    push_hist();
    Message m;
    m.k = 0;
    return m;
}

Message TriggerRangeEncoder::step(double x_next_norm, bool switch_now) {
    if (hist_.empty()) throw ProtocolError("step before the initial instant");
    zoomed_now_ = false;
    if (x_next_norm > sc_.phi2 * E_) {
        E_ = sc_.phi1 * E_ + sc_.phi_mismatch * hist_at(k_ - n_max_);
        last_zoom_ = k_ + 1;
        zoomed_now_ = true;
    } else if (k_ == 0 || switch_now) {
        E_ *= sc_.phi1;
    } else {
        E_ *= sc_.phi2;
    }
    check_norm(x_next_norm, E_);
    ++k_;
    push_hist();
    Message m;
    m.k = k_;
    m.flag = last_zoom_ >= 0;
    m.zoom_age = m.flag ? k_ - last_zoom_ : 0;
    return m;
}

TriggerRangeDecoder::TriggerRangeDecoder(const Strategy4Constants& sc, int n_min,
                                         int n_max, double E0)
    : sc_(sc), n_max_(n_max), E_(E0), E0_(E0),
      hist_cap_(std::size_t(n_min + 2 * n_max + 4)) {
    if (!(E0 > 0.0)) throw ProtocolError("range must be positive");
}

void TriggerRangeDecoder::push_hist(bool switch_now) {
    hist_.push_back(E_);
    switch_hist_.push_back(switch_now);
    if (hist_.size() > hist_cap_) {
        hist_.pop_front();
        switch_hist_.pop_front();
        ++hist_base_;
    }
}

double TriggerRangeDecoder::hist_at(int idx) const {
    if (idx < 0) return E0_;
    const int rel = idx - hist_base_;
    if (rel < 0 || rel >= int(hist_.size()))
        throw ProtocolError("zoom reaches past recorded history");
    return hist_[std::size_t(rel)];
}

bool TriggerRangeDecoder::switch_at(int idx) const {
    const int rel = idx - hist_base_;
    if (rel < 0 || rel >= int(switch_hist_.size()))
        throw ProtocolError("zoom reaches past recorded history");
    return switch_hist_[std::size_t(rel)];
}

std::optional<Vec> TriggerRangeDecoder::initial(const Message* msg, int nx, int N) {
    if (!hist_.empty()) throw ProtocolError("codec already started");
    push_hist(false);
    if (!msg) return std::nullopt;
    if (msg->k != 0) throw ProtocolError("message index out of step");
    return decode_box(msg->symbol, Vec(nx, 0.0), E_, N, nx);
}

std::optional<Vec> TriggerRangeDecoder::step(const Message* msg, bool switch_now, int nx,
                                             int N) {
    if (hist_.empty()) throw ProtocolError("step before the initial instant");
    const int cur = k_ + 1;
    if (msg && msg->k != cur) throw ProtocolError("message index out of step");

    bool reconciled = false;
    if (msg && msg->flag) {
        const int zoom_idx = cur - msg->zoom_age;
        if (zoom_idx > handled_zoom_) {
            if (zoom_idx < 1) throw ProtocolError("zoom predates the run");
            // Replay the envelope from just before the zoom: the zoom step
            // itself, then the calendar schedule up to the present instant.
            double e = sc_.phi1 * hist_at(zoom_idx - 1) +
                       sc_.phi_mismatch * hist_at(zoom_idx - 1 - n_max_);
            for (int j = zoom_idx; j < cur; ++j) {
                const bool sw = (j + 1 == cur) ? switch_now : switch_at(j + 1);
                e *= sw ? sc_.phi1 : sc_.phi2;
            }
            E_ = e;
            handled_zoom_ = zoom_idx;
            reconciled = true;
        }
    }
    if (!reconciled) {
        if (k_ == 0 || switch_now)
            E_ *= sc_.phi1;
        else
            E_ *= sc_.phi2;
    }
    k_ = cur;
    push_hist(switch_now);
    if (!msg) return std::nullopt;
    return decode_box(msg->symbol, Vec(nx, 0.0), E_, N, nx);
}

} // namespace resilq
