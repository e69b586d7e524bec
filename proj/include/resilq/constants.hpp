#pragma once

#include <string>
#include <vector>

#include "resilq/plant.hpp"

namespace resilq {

// Envelope fits consumed by the admissibility arithmetic. mode[p] bounds
// powers of the synchronous closed-loop step, mode_hat[p] the held closed-loop
// step, async_hat[p] the held open-loop step, and cross[p][q] the zero-padded
// full-period map of a switch landing mid-period (plant already in p, gain
// still q; diagonal entries unused). Derivations treat the values as given, so
// callers may pass computed fits or externally supplied ones.
struct FitSet {
    std::vector<DecayFit> mode;
    std::vector<DecayFit> mode_hat;
    std::vector<DecayFit> async_hat;
    std::vector<std::vector<DecayFit>> cross;
};

FitSet fits_from_model(const DiscretizedModel& dm);

// Average-constraint attack budget: at most n0 + span/tau_D bursts and
// kappa + span/T attacked seconds over any span. The sampled-data equivalents
// used by the derivations are kappa_bar = kappa + tau_s (n0 + 1) and
// 1/T_bar = 1/T + tau_s/tau_D.
struct AttackRates {
    double tau_D = 1.0;
    double T = 2.0;
    double n0 = 1.0;
    double kappa = 0.0;

    double kappa_bar(double tau_s) const { return kappa + tau_s * (n0 + 1.0); }
    double inv_T_bar(double tau_s) const { return 1.0 / T + tau_s / tau_D; }
};

// One admissibility condition: satisfied iff lhs <= rhs + tol. Discrete
// conditions (parity and the like) encode the violation count in lhs.
struct Condition {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
};

Condition make_condition(std::string name, double lhs, double rhs);
bool all_satisfied(const std::vector<Condition>& cs);

// ---------------------------------------------------------------------------
// Strategy 1: predictor-driven controller, quantizer centered on the predicted
// state, switching announcements share the attacked link.

struct Strategy1Params {
    int N = 3;      // quantization level per axis (odd)
    int N_max = 1;  // worst-case asynchronous periods per switch
    double tau_d = 1.0;
    AttackRates dos;
};

struct Strategy1Constants {
    std::vector<double> Gamma_p;  // open-loop growth per period
    std::vector<double> Bd_norm;  // predictor input-map norm
    std::vector<double> nu;       // per-mode contraction
    std::vector<double> nu_hat;
    double Gamma = 0.0;
    double Gamma_bar = 0.0;   // worst growth across a switch burst
    double Gamma_bar2 = 0.0;  // worst center-jump coefficient
    Matrix gamma1, gamma3;    // per ordered pair growth factors
    Matrix mu1, mu2, mu3;     // per ordered pair switch-step factors
    double a = 0.0;           // zoom-out budget N^{kappa_bar/tau_s}
    double b = 0.0;           // reported decay base (per-step range division)
    double b_growth = 0.0;    // decay base before the per-step division
    double dwell_floor = 0.0; // seconds
    std::vector<Condition> conditions;
    bool satisfied = false;
};

Strategy1Constants derive_strategy1(const DiscretizedModel& dm, const FitSet& fits,
                                    const Strategy1Params& par);

// Aligned variant: switching instants are announced out of band, so the
// controller is never in the wrong mode outside attack intervals.
struct AlignedConstants {
    double Gamma = 0.0;
    double Gamma_hat = 0.0;   // worst one-period coupled growth over all pairs
    double rate_lhs = 0.0;    // admissibility aggregate, must be <= 0
    double dwell_floor = 0.0; // seconds
    std::vector<Condition> conditions;
    bool satisfied = false;
};

AlignedConstants derive_aligned(const DiscretizedModel& dm, const FitSet& fits,
                                const Strategy1Params& par);

// ---------------------------------------------------------------------------
// Strategy 2: quantizer centered on the origin, predictor-driven controller.

struct Strategy2Params {
    int N = 3;
    int N_max = 1;
    int n_max = 1; // consecutive attacked periods the burst average covers
    double tau_d = 1.0;
    AttackRates dos;
};

struct Strategy2Constants {
    std::vector<double> Bd_norm, Gamma_p;
    std::vector<double> Psi_hi, Psi_lo; // burst-averaged range growth extrema
    std::vector<double> L1, L2, L3;     // per-mode growth/contraction factors
    Matrix L4, L5, L6;                  // per ordered pair switch factors
    double L1_bar = 0.0, L2_bar = 0.0, L3_bar = 0.0;
    double L5_bar = 0.0, L6_bar = 0.0;
    double range_floor = 0.0; // minimum admissible N
    double rate_lhs = 0.0;    // admissibility aggregate, must be <= 0
    double dwell_floor = 0.0; // seconds
    std::vector<Condition> conditions;
    bool satisfied = false;
};

Strategy2Constants derive_strategy2(const DiscretizedModel& dm, const FitSet& fits,
                                    const Strategy2Params& par);

// ---------------------------------------------------------------------------
// Strategy 3: zero-order-hold controller that outputs nothing during attacks,
// quantizer centered on the origin.

struct Strategy3Params {
    int N = 3;
    double tau_d = 1.0;
    AttackRates dos;
};

struct Strategy3Constants {
    std::vector<double> BdK_hat_norm;
    std::vector<double> U1, U2, xi_tilde;
    Matrix U3, U4; // per ordered pair held-step growth factors
    double U1_bar = 0.0, U2_bar = 0.0;
    double xi_bar = 0.0, eta_bar = 0.0;
    double U_tilde = 0.0;     // worst range increase a switch can cause
    double range_floor = 0.0; // minimum admissible N
    double rate_lhs = 0.0;    // admissibility aggregate, must be <= 0
    std::vector<Condition> conditions;
    bool satisfied = false;
};

Strategy3Constants derive_strategy3(const DiscretizedModel& dm, const FitSet& fits,
                                    const Strategy3Params& par);

// ---------------------------------------------------------------------------
// Strategy 4: no acknowledgments at all. The time-triggered variant assumes a
// worst-case periodic attack/switch calendar; the event-triggered variant
// zooms out when the decoded symbol pins the state to the range boundary.

struct Strategy4Params {
    int N = 3;
    int n_min = 1; // guaranteed attack-free periods between bursts
    int n_max = 1; // worst-case burst length in periods
    double tau_d = 1.0;
};

struct Strategy4Constants {
    std::vector<double> BdK_hat_norm;
    double phi1 = 0.0, phi2 = 0.0, phi3 = 0.0, phi4 = 0.0, phi5 = 0.0;
    double phi_mismatch = 0.0; // held-vs-driven divergence over one burst
    double T_cal = 0.0;        // assumed calendar period, (n_min + n_max) tau_s
    double range_floor = 0.0;
    double tt_rate_lhs = 0.0; // log aggregate for the calendar law, < 0
    double et_rate_lhs = 0.0; // growth aggregate for the trigger law, <= 1
    std::vector<Condition> tt_conditions, et_conditions;
    bool tt_satisfied = false;
    bool et_satisfied = false;
};

Strategy4Constants derive_strategy4(const DiscretizedModel& dm, const FitSet& fits,
                                    const Strategy4Params& par);

} // namespace resilq
