#include "resilq/quantizer.hpp"

#include <cmath>
#include <limits>

#include "resilq/linalg.hpp"

namespace resilq {

namespace {

// Relative slack on range membership. The invariant bounds hold exactly in
// real arithmetic; this absorbs the last-ulp wobble of the two flow paths
// without hiding a genuine escape.
constexpr double kRangeTol = 1e-7;

// Absolute resolution floor. Once the range has contracted below the roundoff
// of the offset subtraction (~eps * |x|), cells are no longer representable
// in doubles and the roundoff itself would read as an escape; a violation at
// that scale is resolution exhaustion, not a certificate failure. Genuine
// escapes are O(E) and stay detectable whenever E carries information at all.
constexpr double kResolutionTol = 1e-12;

void check_levels(int N) {
    if (N < 3 || N % 2 == 0) throw ProtocolError("quantization level must be odd and >= 3");
}

long long symbol_count(int N, int nx) {
    long long total = 1;
    for (int d = 0; d < nx; ++d) {
        if (total > std::numeric_limits<long long>::max() / N)
            throw ProtocolError("symbol space overflows");
        total *= N;
    }
    return total;
}

Vec stacked(const Vec& v) {
    Vec z(2 * v.size());
    for (std::size_t i = 0; i < v.size(); ++i) z[i] = z[i + v.size()] = v[i];
    return z;
}

Vec first_block(const Vec& z, int nx) { return Vec(z.begin(), z.begin() + nx); }

} // namespace

long long encode_box(const Vec& x, const Vec& center, double E, int N) {
    check_levels(N);
    if (!(E > 0.0)) throw ProtocolError("range must be positive");
    if (!std::isfinite(E)) throw ProtocolError("range is not finite");
    if (x.size() != center.size()) throw ProtocolError("state/center dimension mismatch");
    const int nx = int(x.size());
    symbol_count(N, nx);
    // roundoff in the offsets scales with the whole vectors (each component
    // mixes through the flow maps), so the floor does too
    const double floor_tol =
        kResolutionTol * std::max(vec_inf_norm(x), vec_inf_norm(center));
    long long sym = 0, stride = 1;
    for (int d = 0; d < nx; ++d) {
        const double off = x[d] - center[d];
        if (std::abs(off) > E * (1.0 + kRangeTol) + floor_tol)
            throw SaturationError("state outside the quantizer range");
        // clamp before the integer cast: below the resolution floor the cell
        // ratio can dwarf the symbol range
        const double cellf = std::floor((off + E) * N / (2.0 * E));
        const long long cell =
            !(cellf > 0.0) ? 0 : (cellf >= N - 1 ? N - 1 : (long long)cellf);
        sym += cell * stride;
        stride *= N;
    }
    return sym + 1;
}

Vec decode_box(long long symbol, const Vec& center, double E, int N, int nx) {
    check_levels(N);
    if (!(E > 0.0)) throw ProtocolError("range must be positive");
    if (int(center.size()) != nx) throw ProtocolError("center dimension mismatch");
    if (symbol < 1 || symbol > symbol_count(N, nx))
        throw ProtocolError("symbol out of range");
    long long s = symbol - 1;
    Vec x(nx);
    const double cell = 2.0 * E / N;
    for (int d = 0; d < nx; ++d) {
        x[d] = center[d] - E + (double(s % N) + 0.5) * cell;
        s /= N;
    }
    return x;
}

StepCase classify_case(bool sy_k, bool sy_k1, bool ack_k, bool ack_k1) {
    if (sy_k1) {
        if (ack_k) return StepCase::c1;
        if (sy_k) return StepCase::c2;
        throw UnreachableCaseError("resynchronized without a delivery");
    }
    if (sy_k) {
        if (ack_k) return ack_k1 ? StepCase::c3 : StepCase::c4;
        return ack_k1 ? StepCase::c6 : StepCase::c5;
    }
    if (ack_k) throw UnreachableCaseError("gain mismatch right after a delivery");
    return ack_k1 ? StepCase::c8 : StepCase::c7;
}

bool transient_subcase(StepCase c, std::optional<bool> ack_km1) {
    if (c == StepCase::c1) return !ack_km1.has_value() || !*ack_km1;
    if (c == StepCase::c2) return !ack_km1.has_value() || *ack_km1;
    return false;
}

// ---------------------------------------------------------------------------
// Tracking codec

TrackingEncoder::TrackingEncoder(const DiscretizedModel& dm, int N, double E0, int mode0,
                                 bool aligned)
    : dm_(dm), N_(N), aligned_(aligned), E_(E0) {
    check_levels(N);
    if (!(E0 > 0.0)) throw ProtocolError("range must be positive");
    const int nx = dm.plant().nx();
    center_.assign(nx, 0.0);
    xhat_.assign(nx, 0.0);
    mode_hat_ = mode_k_ = mode0;
}

Message TrackingEncoder::initial(const Vec& x0, bool attacked) {
    if (k_ >= 0) throw ProtocolError("codec already started");
    Message m;
    m.k = 0;
    m.mode = mode_k_;
    m.symbol = encode_box(x0, center_, E_, N_);
    if (!attacked) {
        xhat_ = decode_box(m.symbol, center_, E_, N_, int(center_.size()));
        ack_ = true;
    }
    k_ = 0;
    return m;
}

Message TrackingEncoder::step(const Vec& x_next, const EncoderEvents& ev) {
    if (k_ < 0) throw ProtocolError("step before the initial instant");
    const bool ack_next = !ev.attacked;
    const bool mismatch_start = mode_hat_ != mode_k_;
    const bool sy_next = !(mismatch_start || ev.switched_inside);
    StepCase c = classify_case(sy_, sy_next, ack_, ack_next);
    if (aligned_) {
        if (ev.switched_inside) throw ProtocolError("switch off the sampling lattice");
        if (c == StepCase::c3 || c == StepCase::c4)
            throw UnreachableCaseError("partial-period switch on the lattice");
        if (c == StepCase::c5) c = StepCase::c7;
        if (c == StepCase::c6) c = StepCase::c8;
    }
    if (in_async_ && (ev.switched_inside || ev.switched_at_end))
        throw ProtocolError("second switch during one outage");
    // Lattice switches enter the stale-gain regime at the step start: the
    // auxiliary flow picks the model state up right at the switch instant.
    if (aligned_ && !in_async_ && mismatch_start) {
        in_async_ = true;
        pair_p_ = mode_k_;
        pair_q_ = mode_hat_;
        n_count_ = 0;
        aux_ = stacked(xhat_);
    }

    switch (c) {
    case StepCase::c1:
        E_ *= dm_.mode(mode_k_).Gamma / N_;
        break;
    case StepCase::c2:
        E_ *= dm_.mode(mode_k_).Gamma;
        break;
    case StepCase::c3:
    case StepCase::c4:
    case StepCase::c5:
    case StepCase::c6: {
        const PairTables& pt = dm_.pair(ev.plant_mode, mode_hat_);
        const double g1 = pt.gamma_hat1 + pt.gamma2 * double(N_) / (N_ - 1);
        E_ = g1 * E_ + pt.gamma2 * vec_inf_norm(center_);
        break;
    }
    case StepCase::c7:
    case StepCase::c8:
        if (!in_async_) throw ProtocolError("stale-gain step without an open episode");
        E_ *= dm_.pair(pair_p_, pair_q_).gamma3;
        break;
    }

    const Vec xhat_adv = matvec(dm_.mode(mode_hat_).Ad, xhat_);
    if (c == StepCase::c7 || c == StepCase::c8) {
        aux_ = matvec(dm_.pair(pair_p_, pair_q_).exp_acal, aux_);
        ++n_count_;
        center_ = first_block(aux_, dm_.plant().nx());
    } else {
        center_ = xhat_adv;
    }

    Message m;
    m.symbol = encode_box(x_next, center_, E_, N_);
    m.mode = ev.plant_mode;

    if (ack_next) {
        xhat_ = decode_box(m.symbol, center_, E_, N_, int(center_.size()));
        if (in_async_) {
            m.switched = true;
            m.async_periods = n_count_;
            in_async_ = false;
        } else if (c == StepCase::c3 || c == StepCase::c6) {
            m.switched = true;
            m.async_periods = 0;
        }
        mode_hat_ = ev.plant_mode;
    } else {
        xhat_ = xhat_adv;
        if (!aligned_ && (c == StepCase::c4 || c == StepCase::c5)) {
            in_async_ = true;
            pair_p_ = ev.plant_mode;
            pair_q_ = mode_hat_;
            n_count_ = 0;
            aux_ = stacked(xhat_);
        }
    }

    mode_k_ = ev.plant_mode;
    sy_ = sy_next;
    ack_ = ack_next;
    last_case_ = c;
    m.k = ++k_;
    return m;
}

TrackingDecoder::TrackingDecoder(const DiscretizedModel& dm, int N, double E0, int mode0,
                                 bool aligned)
    : dm_(dm), N_(N), aligned_(aligned), E_(E0), mode_hat_(mode0), hist_cap_(512) {
    check_levels(N);
    if (!(E0 > 0.0)) throw ProtocolError("range must be positive");
    const int nx = dm.plant().nx();
    center_.assign(nx, 0.0);
    xhat_.assign(nx, 0.0);
}

void TrackingDecoder::push_hist() {
    hist_.push_back({E_, vec_inf_norm(center_), xhat_});
    if (hist_.size() > hist_cap_) {
        hist_.pop_front();
        ++hist_base_;
    }
}

const TrackingDecoder::Snapshot& TrackingDecoder::hist_at(int idx) const {
    const int rel = idx - hist_base_;
    if (idx < 0 || rel < 0 || rel >= int(hist_.size()))
        throw ProtocolError("reconciliation reaches past recorded history");
    return hist_[std::size_t(rel)];
}

std::optional<Vec> TrackingDecoder::initial(const Message* msg) {
    if (k_ >= 0) throw ProtocolError("codec already started");
    k_ = 0;
    std::optional<Vec> out;
    if (msg) {
        if (msg->k != 0) throw ProtocolError("message index out of step");
        out = decode_box(msg->symbol, center_, E_, N_, int(center_.size()));
        xhat_ = *out;
        mode_hat_ = msg->mode;
        ack_ = true;
    }
    push_hist();
    return out;
}

std::optional<Vec> TrackingDecoder::step(const Message* msg) {
    if (k_ < 0) throw ProtocolError("step before the initial instant");
    const int cur = k_ + 1;
    if (msg && msg->k != cur) throw ProtocolError("message index out of step");
    const Vec xhat_adv = matvec(dm_.mode(mode_hat_).Ad, xhat_);
    const double Gamma = dm_.mode(mode_hat_).Gamma;
    std::optional<Vec> out;

    if (!msg || !msg->switched) {
        // With no delivery the step is treated as switch-free; a switch the
        // outage hid is repaired by the reconciliation that reports it.
        E_ *= ack_ ? Gamma / N_ : Gamma;
        center_ = xhat_adv;
    } else if (msg->async_periods == 0) {
        if (aligned_) throw ProtocolError("partial-period reconciliation on the lattice");
        const PairTables& pt = dm_.pair(msg->mode, mode_hat_);
        const double g1 = pt.gamma_hat1 + pt.gamma2 * double(N_) / (N_ - 1);
        E_ = g1 * E_ + pt.gamma2 * vec_inf_norm(center_);
        center_ = xhat_adv;
    } else {
        const int n = msg->async_periods;
        const PairTables& pt = dm_.pair(msg->mode, mode_hat_);
        if (aligned_) {
            E_ = hist_at(cur - n).E;
        } else {
            const Snapshot& base = hist_at(cur - n - 1);
            const double g1 = pt.gamma_hat1 + pt.gamma2 * double(N_) / (N_ - 1);
            E_ = g1 * base.E + pt.gamma2 * base.center_norm;
        }
        for (int i = 0; i < n; ++i) E_ *= pt.gamma3;
        Vec z = stacked(hist_at(cur - n).xhat);
        for (int i = 0; i < n; ++i) z = matvec(pt.exp_acal, z);
        center_ = first_block(z, dm_.plant().nx());
    }

    if (msg) {
        out = decode_box(msg->symbol, center_, E_, N_, int(center_.size()));
        xhat_ = *out;
        mode_hat_ = msg->mode;
        ack_ = true;
    } else {
        xhat_ = xhat_adv;
        ack_ = false;
    }
    k_ = cur;
    push_hist();
    return out;
}

} // namespace resilq
