#pragma once

#include <vector>

#include "resilq/linalg.hpp"
#include "resilq/matrix.hpp"

namespace resilq {

// One operating mode of the switched plant: continuous-time dynamics
// xdot = A x + B u together with the state-feedback gain that the controller
// applies whenever it believes this mode is active.
struct Mode {
    Matrix A; // nx x nx
    Matrix B; // nx x nu
    Matrix K; // nu x nx
};

// Immutable description of the sampled switched plant. Construction validates
// shape consistency across modes; everything downstream may assume it.
class SwitchedPlant {
public:
    SwitchedPlant(std::vector<Mode> modes, double tau_s, double e0);

    int nx() const { return nx_; }
    int nu() const { return nu_; }
    int num_modes() const { return static_cast<int>(modes_.size()); }
    double tau_s() const { return tau_s_; }
    double e0() const { return e0_; }
    const Mode& mode(int p) const { return modes_.at(p); }

private:
    std::vector<Mode> modes_;
    double tau_s_;
    double e0_;
    int nx_ = 0;
    int nu_ = 0;
};

// Exact one-period maps and envelope fits for a single mode.
struct ModeMaps {
    Matrix Abar;    // A + B K, continuous closed loop under the matching gain
    Matrix Ad;      // e^{Abar tau_s}; the predictor-driven sync step is x' = Ad x - Bd e
    Matrix Bd;      // integral_0^{tau_s} e^{Abar (tau_s-s)} B K e^{A s} ds
    Matrix Ad_hat;  // e^{A tau_s}, open-loop step
    Matrix Bd_hat;  // integral_0^{tau_s} e^{A s} B ds
    Matrix Acl_hat; // Ad_hat + Bd_hat K, zero-order-hold closed loop
    double Gamma = 0.0; // ||Ad_hat||, open-loop growth per period
    DecayFit rho_lambda;     // ||Ad^k||      <= rho * lambda^k
    DecayFit rho_lambda_hat; // ||Acl_hat^k|| <= rho * lambda^k
    DecayFit xi_eta_hat;     // ||Ad_hat^k||  <= xi * eta^k
};

// Norm tables for one ordered mode pair (p = plant mode after the switch,
// q = mode the controller is still applying). Offsets run over the uniform
// grid tbar_j = j * tau_s / (G - 1); tbar is the time spent in mode p before
// the period ends, so tbar = tau_s means the whole period was asynchronous.
// Switch generators snap switch offsets to this same grid, which makes the
// tabulated maxima dominate every transition a simulation can realize.
struct PairTables {
    std::vector<double> mz_norm;       // ||e^{Acal_pq tbar} e^{Acal_qq (tau_s-tbar)}||
    std::vector<double> mz_minus_sync; // ||same flow - blkdiag(Ad_q, Ad_q)||
    std::vector<double> wide_norm;     // ||[W_L W_R](tbar)||, state row of the coupled flow
    std::vector<double> a_hat_norm;    // ||e^{A_p tbar} e^{A_q (tau_s-tbar)}||
    std::vector<double> bk_hat_norm;   // ||Bhat_pq(tbar) K_q||

    double gamma_hat1 = 0.0;  // max of mz_norm
    double gamma2 = 0.0;      // max of mz_minus_sync
    double a_bb = 0.0;        // max of wide_norm (shared by the A- and B-type maxima)
    double wl_max = 0.0;      // max over the grid of ||W_L(tbar)|| alone
    double wr_max = 0.0;      // max over the grid of ||W_R(tbar)|| alone
    double upsilon4 = 0.0;    // max of a_hat_norm
    double bk_hat_max = 0.0;  // max of bk_hat_norm
    double wr_norm_end = 0.0; // ||W_R(tau_s)||, the error block of the full-period map
    double wide_end = 0.0;    // ||[W_L W_R](tau_s)||
    double gamma3 = 0.0;      // ||e^{Acal_pq tau_s}|| in [x; xhat] coordinates
    double gamma3_xe = 0.0;   // same flow expressed in [x; x - xhat] coordinates

    DecayFit xi_eta;  // envelope of powers of the zero-padded full-period map
    Matrix exp_acal;  // e^{Acal_pq tau_s}, advances the reconciliation auxiliary
    Matrix atilde_sq; // [[W_L(tau_s), W_R(tau_s)], [0, 0]]
};

// All discrete-time data derived from a plant: per-mode one-period maps,
// per-ordered-pair offset tables, and the decay-envelope fits used by the
// admissibility checks. Pair (p, q) is stored plant-first: p is the mode the
// plant switched into, q the mode the controller still runs.
class DiscretizedModel {
public:
    explicit DiscretizedModel(const SwitchedPlant& plant, int grid_points = 1001,
                              unsigned fit_kmax = 1000);

    const SwitchedPlant& plant() const { return plant_; }
    const ModeMaps& mode(int p) const { return modes_.at(p); }
    const PairTables& pair(int p, int q) const { return pairs_.at(index(p, q)); }
    // Coupled generator [[A_p, B_p K_q], [0, Abar_q]] acting on [x; xhat].
    const Matrix& acal(int p, int q) const { return acal_.at(index(p, q)); }

    int grid_points() const { return grid_points_; }
    // Grid spacing; switch offsets inside a period are multiples of this.
    double dt() const { return plant_.tau_s() / (grid_points_ - 1); }
    unsigned fit_kmax() const { return fit_kmax_; }

private:
    int index(int p, int q) const;

    SwitchedPlant plant_;
    int grid_points_;
    unsigned fit_kmax_;
    std::vector<ModeMaps> modes_;
    std::vector<PairTables> pairs_;
    std::vector<Matrix> acal_;
};

// Conjugates a 2n x 2n matrix from [x; xhat] to [x; x - xhat] coordinates
// (the change of basis is an involution, so the same call maps back).
Matrix to_error_coords(const Matrix& m);

} // namespace resilq
