#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "resilq/constants.hpp"
#include "resilq/plant.hpp"

namespace resilq {

// The state left the quantizer range: the stability certificate was violated
// at runtime. Never masked by clamping; simulations abort on it.
struct SaturationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The two codecs disagree about the protocol (symbol out of range, missing
// reconciliation data, malformed side information).
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A synchrony/acknowledgment combination the closed loop cannot produce.
struct UnreachableCaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Box arithmetic. The range [center - E, center + E]^n is split into N equal
// cells per axis; symbols are 1-based, axis 0 fastest. A boundary point
// belongs to the cell whose lower edge it sits on, except the top edge of the
// range which folds into the last cell.

long long encode_box(const Vec& x, const Vec& center, double E, int N);
Vec decode_box(long long symbol, const Vec& center, double E, int N, int nx);

// ---------------------------------------------------------------------------
// Per-step transition classifier. A step spans (t_k, t_{k+1}]; sy_k means the
// controller gain matched the plant mode throughout [t_{k-1}, t_k), ack_k
// that the transmission at t_k got through. Combinations that would need a
// resync without a delivery, or a mismatch right after one, throw.

enum class StepCase { c1 = 1, c2, c3, c4, c5, c6, c7, c8 };

StepCase classify_case(bool sy_k, bool sy_k1, bool ack_k, bool ack_k1);

// Whether the transient flavor of a zoom step applies: recovery steps (c1)
// are transient right after an outage (ack_{k-1} = 0), outage onsets (c2)
// right after a delivery (ack_{k-1} = 1). With no history yet, both are.
bool transient_subcase(StepCase c, std::optional<bool> ack_km1);

// ---------------------------------------------------------------------------
// What the sensor emits each sampling instant. Reaches the decoder only when
// the link is up; `switched`/`async_periods` close a reconciliation after an
// outage hid a plant switch, `flag`/`zoom_age` replay a trigger zoom-out for
// the acknowledgment-free codec.

struct Message {
    int k = 0;
    long long symbol = 0;
    int mode = 0;
    bool switched = false;  // a switch happened since the last delivery
    int async_periods = 0;  // gain-mismatched periods the reconciliation spans
    bool flag = false;      // a trigger zoom-out happened at some point
    int zoom_age = 0;       // periods since that zoom-out
};

// Sensor-side events of one step. `switched_inside` is a plant switch strictly
// inside (t_k, t_{k+1}); `switched_at_end` one exactly at t_{k+1} (the lattice
// case). At most one switch per period; a second one during an outage throws.
struct EncoderEvents {
    int plant_mode = 0;  // sigma at t_{k+1}, right-continuous
    bool switched_inside = false;
    bool switched_at_end = false;
    bool attacked = false;  // link down at t_{k+1}
};

// ---------------------------------------------------------------------------
// Tracking codec: the range follows the controller's model state, so both
// machines mirror the predictor with identical arithmetic (same matrix-vector
// products in the same order) and stay bit-for-bit uniform while the link
// behaves. `aligned` restricts switches to delivery instants being the only
// sync points (lattice switching): mid-period switches become errors and
// reconciliations skip the partial-period factor.

class TrackingEncoder {
public:
    TrackingEncoder(const DiscretizedModel& dm, int N, double E0, int mode0,
                    bool aligned = false);

    Message initial(const Vec& x0, bool attacked);
    Message step(const Vec& x_next, const EncoderEvents& ev);

    double E() const { return E_; }
    const Vec& center() const { return center_; }
    const Vec& xhat() const { return xhat_; }
    int mode_hat() const { return mode_hat_; }
    int k() const { return k_; }
    StepCase last_case() const { return last_case_; }

private:
    const DiscretizedModel& dm_;
    int N_;
    bool aligned_;
    double E_;
    Vec center_, xhat_;
    int mode_hat_, mode_k_;
    bool sy_ = true, ack_ = false;
    int k_ = -1;
    StepCase last_case_ = StepCase::c1;
    // reconciliation bookkeeping while the gain is stale
    bool in_async_ = false;
    int pair_p_ = 0, pair_q_ = 0, n_count_ = 0;
    Vec aux_;  // [plant; model] flow that carries the center across the outage

    Message finish_step(const Vec& x_next, bool attacked, int new_mode, bool switched,
                        int async_periods);
};

class TrackingDecoder {
public:
    TrackingDecoder(const DiscretizedModel& dm, int N, double E0, int mode0,
                    bool aligned = false);

    // Delivery status at t_0; a delivered message yields the first box center.
    std::optional<Vec> initial(const Message* msg);
    // Advance across one period; decode when a message arrived.
    std::optional<Vec> step(const Message* msg);

    double E() const { return E_; }
    const Vec& center() const { return center_; }
    const Vec& xhat() const { return xhat_; }
    int mode_hat() const { return mode_hat_; }
    int k() const { return k_; }

private:
    struct Snapshot {
        double E;
        double center_norm;
        Vec xhat;  // value right after the instant, reset included
    };

    const DiscretizedModel& dm_;
    int N_;
    bool aligned_;
    double E_;
    Vec center_, xhat_;
    int mode_hat_;
    bool ack_ = false;
    int k_ = -1;
    std::deque<Snapshot> hist_;
    std::size_t hist_cap_;

    void push_hist();
    const Snapshot& hist_at(int idx) const;  // idx counted from instant 0
    int hist_base_ = 0;
};

// ---------------------------------------------------------------------------
// Origin codec, model-driven loop: the range is a scalar envelope around the
// origin and grows/shrinks by precomputed per-mode factors. The controller
// keeps integrating its model through outages.

class ActiveRangeEncoder {
public:
    ActiveRangeEncoder(const DiscretizedModel& dm, const Strategy2Constants& sc, int N,
                       double E0, int mode0);

    Message initial(const Vec& x0, bool attacked);
    Message step(const Vec& x_next, const EncoderEvents& ev);

    double E() const { return E_; }
    int mode_hat() const { return mode_hat_; }
    int k() const { return k_; }
    StepCase last_case() const { return last_case_; }

private:
    const Strategy2Constants& sc_;
    int nx_, N_;
    double E_;
    int mode_hat_, mode_k_;
    bool sy_ = true, ack_ = false;
    std::optional<bool> ack_km1_;
    int k_ = -1;
    StepCase last_case_ = StepCase::c1;
    bool in_async_ = false;
    int pair_p_ = 0, pair_q_ = 0, n_count_ = 0;
};

class ActiveRangeDecoder {
public:
    ActiveRangeDecoder(const DiscretizedModel& dm, const Strategy2Constants& sc, int N,
                       double E0, int mode0);

    std::optional<Vec> initial(const Message* msg);
    std::optional<Vec> step(const Message* msg);

    double E() const { return E_; }
    int mode_hat() const { return mode_hat_; }
    int k() const { return k_; }

private:
    const Strategy2Constants& sc_;
    int nx_, N_;
    double E_;
    int mode_hat_;
    bool ack_ = false;
    std::optional<bool> ack_km1_;
    int k_ = -1;
    std::deque<double> hist_;
    std::size_t hist_cap_;
    int hist_base_ = 0;

    void push_hist();
    double hist_at(int idx) const;
};

// ---------------------------------------------------------------------------
// Origin codec, held-output loop: the control is recomputed only from
// delivered symbols and zeroed during outages, so the factors come from the
// held closed-loop fits. Transient flavors are keyed the opposite way from
// the model-driven codec on outage onsets.

class PassiveRangeEncoder {
public:
    PassiveRangeEncoder(const DiscretizedModel& dm, const FitSet& fits,
                        const Strategy3Constants& sc, int N, double E0, int mode0);

    Message initial(const Vec& x0, bool attacked);
    Message step(const Vec& x_next, const EncoderEvents& ev);

    double E() const { return E_; }
    int mode_hat() const { return mode_hat_; }
    int k() const { return k_; }
    StepCase last_case() const { return last_case_; }

private:
    const Strategy3Constants& sc_;
    std::vector<double> xi_hat_, eta_hat_;
    std::vector<std::vector<double>> u_hat_;  // worst of the two switch-step factors
    int nx_, N_;
    double E_;
    int mode_hat_, mode_k_;
    bool sy_ = true, ack_ = false;
    std::optional<bool> ack_km1_;
    int k_ = -1;
    StepCase last_case_ = StepCase::c1;
    bool in_async_ = false;
    int pair_p_ = 0, pair_q_ = 0, n_count_ = 0;
};

class PassiveRangeDecoder {
public:
    PassiveRangeDecoder(const DiscretizedModel& dm, const FitSet& fits,
                        const Strategy3Constants& sc, int N, double E0, int mode0);

    std::optional<Vec> initial(const Message* msg);
    std::optional<Vec> step(const Message* msg);

    double E() const { return E_; }
    int mode_hat() const { return mode_hat_; }
    int k() const { return k_; }

private:
    const Strategy3Constants& sc_;
    std::vector<double> xi_hat_, eta_hat_;
    std::vector<std::vector<double>> u_hat_;
    int nx_, N_;
    double E_;
    int mode_hat_;
    bool ack_ = false;
    std::optional<bool> ack_km1_;
    int k_ = -1;
    std::deque<double> hist_;
    std::size_t hist_cap_;
    int hist_base_ = 0;

    void push_hist();
    double hist_at(int idx) const;
};

// ---------------------------------------------------------------------------
// Acknowledgment-free codec, calendar variant: one shared envelope follows a
// fixed worst-case attack calendar (n_min clear periods, n_max attacked ones)
// regardless of what the link actually does, with a growth bump at each
// calendar switching instant. Both sides read the same instance.

class ScheduleRange {
public:
    ScheduleRange(const Strategy4Constants& sc, double tau_s, double tau_d, int n_min,
                  int n_max, double E0);

    void step();

    double E() const { return E_; }
    int k() const { return k_; }
    // which calendar phase the instant sits in: 0 first clear, 1 later clear,
    // 2 first attacked, 3 later attacked
    int phase_of(int k) const;

private:
    const Strategy4Constants& sc_;
    double E_;
    int k_ = 0;
    int period_;       // calendar length in sampling periods
    int n_min_;
    int switch_every_; // sampling periods between calendar switching instants
};

// Acknowledgment-free codec, trigger variant: the envelope contracts until the
// measured state pierces the predicted shrink, then zooms out once using the
// range from n_max periods back. The decoder replays the zoom from its own
// history when the flag reaches it; both sides know the switching calendar.

class TriggerRangeEncoder {
public:
    TriggerRangeEncoder(const Strategy4Constants& sc, int n_min, int n_max, double E0);

    Message initial(const Vec& x0);
    Message step(double x_next_norm, bool switch_now);

    double E() const { return E_; }
    int k() const { return k_; }
    bool zoomed_now() const { return zoomed_now_; }

private:
    const Strategy4Constants& sc_;
    int n_max_;
    double E_, E0_;
    int k_ = 0;
    int last_zoom_ = -1;  // instant index of the latest zoom-out, -1 if none
    bool zoomed_now_ = false;
    std::deque<double> hist_;
    std::size_t hist_cap_;
    int hist_base_ = 0;

    void push_hist();
    double hist_at(int idx) const;  // negative indices fall back to E0
};

class TriggerRangeDecoder {
public:
    TriggerRangeDecoder(const Strategy4Constants& sc, int n_min, int n_max, double E0);

    std::optional<Vec> initial(const Message* msg, int nx, int N);
    std::optional<Vec> step(const Message* msg, bool switch_now, int nx, int N);

    double E() const { return E_; }
    int k() const { return k_; }

private:
    const Strategy4Constants& sc_;
    int n_max_;
    double E_, E0_;
    int k_ = 0;
    int handled_zoom_ = -1;
    std::deque<double> hist_;
    std::deque<bool> switch_hist_;  // switch_now per instant, index-aligned with hist_
    std::size_t hist_cap_;
    int hist_base_ = 0;

    void push_hist(bool switch_now);
    double hist_at(int idx) const;
    bool switch_at(int idx) const;
};

} // namespace resilq
