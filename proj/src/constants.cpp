#include "resilq/constants.hpp"

#include <cmath>
#include <limits>

namespace resilq {

namespace {

constexpr double kTol = 1e-9;
const double kInf = std::numeric_limits<double>::infinity();

bool odd_level(int n) { return n >= 3 && n % 2 == 1; }

// Growth of the held one-period ratio: max over modes of rho~ lam^ + rho^ ||BK||/N
// and its un-inflated twin; shared by the blind-strategy factors.
struct HeldFactors {
    double with_transient; // rho~ lam^ + rho^ ||BK|| / N
    double steady;         // lam^ + rho^ ||BK|| / N
};

HeldFactors held_factors(const DecayFit& f, double bk_norm, int N) {
    const double rho_t = std::max(f.rho, 1.0);
    return {rho_t * f.lambda + f.rho * bk_norm / N, f.lambda + f.rho * bk_norm / N};
}

} // namespace

Condition make_condition(std::string name, double lhs, double rhs) {
    Condition c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.satisfied = lhs <= rhs + kTol;
    return c;
}

bool all_satisfied(const std::vector<Condition>& cs) {
    for (const Condition& c : cs)
        if (!c.satisfied) return false;
    return true;
}

FitSet fits_from_model(const DiscretizedModel& dm) {
    const int m = dm.plant().num_modes();
    FitSet f;
    f.mode.reserve(m);
    f.mode_hat.reserve(m);
    f.async_hat.reserve(m);
    f.cross.assign(m, std::vector<DecayFit>(m));
    for (int p = 0; p < m; ++p) {
        f.mode.push_back(dm.mode(p).rho_lambda);
        f.mode_hat.push_back(dm.mode(p).rho_lambda_hat);
        f.async_hat.push_back(dm.mode(p).xi_eta_hat);
        for (int q = 0; q < m; ++q) f.cross[p][q] = dm.pair(p, q).xi_eta;
    }
    return f;
}

Strategy1Constants derive_strategy1(const DiscretizedModel& dm, const FitSet& fits,
                                    const Strategy1Params& par) {
    const SwitchedPlant& pl = dm.plant();
    const int m = pl.num_modes();
    const double tau_s = pl.tau_s();
    const int N = par.N;
    Strategy1Constants c;

    c.Gamma_p.resize(m);
    c.Bd_norm.resize(m);
    for (int p = 0; p < m; ++p) {
        c.Gamma_p[p] = dm.mode(p).Gamma;
        c.Bd_norm[p] = inf_norm(dm.mode(p).Bd);
        c.Gamma = std::max(c.Gamma, c.Gamma_p[p]);
    }

    c.gamma1 = Matrix::zeros(m, m);
    c.gamma3 = Matrix::zeros(m, m);
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) {
            const PairTables& pt = dm.pair(p, q);
            c.gamma1(p, q) = pt.gamma_hat1 + pt.gamma2 * double(N) / (N - 1);
            c.gamma3(p, q) = pt.gamma3;
            c.Gamma_bar2 = std::max(c.Gamma_bar2, pt.gamma2);
        }
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) {
            if (p == q) continue;
            for (int mm = 0; mm < par.N_max; ++mm)
                c.Gamma_bar = std::max(
                    c.Gamma_bar, std::pow(c.gamma3(p, q), mm - 1) * c.gamma1(p, q));
        }

    c.a = std::pow(N, par.dos.kappa_bar(tau_s) / tau_s);
    const double core = c.Gamma_bar / std::pow(c.Gamma, par.N_max);
    c.b_growth = std::pow(core, tau_s / par.tau_d) *
                 std::pow(N, par.dos.inv_T_bar(tau_s)) * c.Gamma / N;
    c.b = c.b_growth / N;

    c.nu.resize(m);
    c.nu_hat.resize(m);
    for (int p = 0; p < m; ++p) {
        const double drift = fits.mode[p].rho * c.Bd_norm[p] / N + c.b;
        c.nu[p] = std::max(fits.mode[p].lambda, drift);
        c.nu_hat[p] = std::max(fits.mode[p].rho * fits.mode[p].lambda, drift);
    }

    c.mu1 = Matrix::zeros(m, m);
    c.mu2 = Matrix::zeros(m, m);
    c.mu3 = Matrix::zeros(m, m);
    c.dwell_floor = 0.0;
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) {
            if (p == q) continue;
            const PairTables& pt = dm.pair(p, q);
            const DecayFit& xf = fits.cross[p][q];
            c.mu1(p, q) = std::max(pt.wl_max + c.a * c.Gamma_bar2,
                                   pt.wr_max + c.b + c.a * c.Gamma_bar2);
            c.mu2(p, q) = std::max(xf.rho * xf.lambda,
                                   xf.rho * pt.wr_norm_end + c.b);
            c.mu3(p, q) = std::max(xf.lambda, xf.rho * pt.wr_norm_end + c.b);
            if (c.nu[p] >= 1.0) {
                c.dwell_floor = kInf;
                continue;
            }
            const double num = (par.N_max - 1) * std::log(c.nu[p] / c.mu3(p, q)) -
                               std::log(c.nu_hat[p] * c.mu2(p, q) * c.mu1(p, q) /
                                        c.mu3(p, q));
            c.dwell_floor = std::max(c.dwell_floor, num / std::log(c.nu[p]) * tau_s);
        }

    c.conditions.push_back(
        make_condition("range-parity", odd_level(N) ? 0.0 : 1.0, 0.0));
    c.conditions.push_back(make_condition("range-exceeds-growth", c.Gamma, N));
    double nu_worst = 0.0;
    for (double v : c.nu) nu_worst = std::max(nu_worst, v);
    c.conditions.push_back(make_condition("mode-contraction", nu_worst, 1.0 - kTol));
    c.conditions.push_back(make_condition("range-decay", c.b_growth, 1.0 - kTol));
    const double rate_lhs = (tau_s / par.tau_d) * std::log(core) +
                            (par.dos.inv_T_bar(tau_s) - 1.0) * std::log(N) +
                            std::log(c.Gamma);
    c.conditions.push_back(
        make_condition("rate-balance", rate_lhs, std::log(c.b_growth)));
    c.conditions.push_back(make_condition("dwell-floor", c.dwell_floor, par.tau_d));
    c.satisfied = all_satisfied(c.conditions);
    return c;
}

AlignedConstants derive_aligned(const DiscretizedModel& dm, const FitSet& fits,
                                const Strategy1Params& par) {
    const SwitchedPlant& pl = dm.plant();
    const int m = pl.num_modes();
    const double tau_s = pl.tau_s();
    AlignedConstants c;

    for (int p = 0; p < m; ++p) c.Gamma = std::max(c.Gamma, dm.mode(p).Gamma);
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q)
            c.Gamma_hat = std::max(c.Gamma_hat, dm.pair(p, q).gamma3);

    c.rate_lhs = (par.N_max * tau_s / par.tau_d) * std::log(c.Gamma_hat / c.Gamma) +
                 (par.dos.inv_T_bar(tau_s) - 1.0) * std::log(par.N) +
                 std::log(c.Gamma);

    c.dwell_floor = 0.0;
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) {
            if (p == q) continue;
            if (fits.mode[p].lambda >= 1.0) {
                c.dwell_floor = kInf;
                continue;
            }
            const double num =
                std::log(fits.mode[p].rho * fits.cross[p][q].rho) +
                par.N_max * std::log(fits.cross[p][q].lambda / fits.mode[p].lambda);
            c.dwell_floor =
                std::max(c.dwell_floor, num / -std::log(fits.mode[p].lambda) * tau_s);
        }

    c.conditions.push_back(
        make_condition("range-parity", odd_level(par.N) ? 0.0 : 1.0, 0.0));
    c.conditions.push_back(make_condition("range-exceeds-growth", c.Gamma, par.N));
    c.conditions.push_back(make_condition("rate", c.rate_lhs, 0.0));
    c.conditions.push_back(make_condition("dwell-floor", c.dwell_floor, par.tau_d));
    c.satisfied = all_satisfied(c.conditions);
    return c;
}

Strategy2Constants derive_strategy2(const DiscretizedModel& dm, const FitSet& fits,
                                    const Strategy2Params& par) {
    const SwitchedPlant& pl = dm.plant();
    const int m = pl.num_modes();
    const double tau_s = pl.tau_s();
    const int N = par.N;
    Strategy2Constants c;

    c.Bd_norm.resize(m);
    c.Gamma_p.resize(m);
    c.Psi_hi.resize(m);
    c.Psi_lo.resize(m);
    c.L1.resize(m);
    c.L2.resize(m);
    c.L3.resize(m);
    c.range_floor = 0.0;
    for (int p = 0; p < m; ++p) {
        c.Bd_norm[p] = inf_norm(dm.mode(p).Bd);
        c.Gamma_p[p] = dm.mode(p).Gamma;
        const double rho = fits.mode[p].rho;
        const double lam = fits.mode[p].lambda;
        c.range_floor = std::max(
            c.range_floor, lam < 1.0 ? rho * c.Bd_norm[p] / (1.0 - lam) : kInf);

        // Range growth over an attacked burst of length l, relative to the
        // value recorded just before the burst; the recursion alternates one
        // contraction step with open-loop growth of the stale center.
        double hi = 0.0, lo = kInf;
        for (int l = 1; l <= par.n_max; ++l) {
            double s = rho * std::pow(lam, l);
            for (int j = 0; j < l; ++j)
                s += rho * std::pow(lam, l - 1 - j) * c.Bd_norm[p] *
                     std::pow(c.Gamma_p[p], j) / N;
            hi = std::max(hi, s);
            lo = std::min(lo, s);
        }
        c.Psi_hi[p] = std::max(1.0, hi);
        c.Psi_lo[p] = lo;
        c.L1[p] = rho * lam + rho * c.Bd_norm[p] / N;
        c.L2[p] = lam + rho * c.Bd_norm[p] / N;
        c.L3[p] = std::pow(c.Psi_hi[p], 1.0 / par.n_max);
        c.L1_bar = std::max(c.L1_bar, c.L1[p]);
        c.L2_bar = std::max(c.L2_bar, c.L2[p]);
        c.L3_bar = std::max(c.L3_bar, c.L3[p]);
    }

    c.L4 = Matrix::zeros(m, m);
    c.L5 = Matrix::zeros(m, m);
    c.L6 = Matrix::zeros(m, m);
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) {
            c.L4(p, q) = dm.pair(p, q).gamma_hat1;
            const double scale = std::max(
                (1.0 - fits.mode[q].lambda * c.Psi_lo[q] / c.Psi_hi[q]) /
                    (fits.mode[q].rho * c.Bd_norm[q]),
                1.0);
            c.L5(p, q) = scale * c.L4(p, q);
            c.L6(p, q) = dm.pair(p, q).gamma3_xe;
            if (p != q) {
                c.L5_bar = std::max(c.L5_bar, c.L5(p, q));
                c.L6_bar = std::max(c.L6_bar, c.L6(p, q));
            }
        }

    c.rate_lhs = (1.0 / par.tau_d) * (std::log(c.L5_bar / c.L6_bar) +
                                      par.N_max * std::log(c.L6_bar / c.L3_bar)) +
                 (1.0 / par.dos.tau_D) * std::log(c.L1_bar / c.L2_bar) +
                 (1.0 / (par.dos.T * tau_s) + 1.0 / par.dos.tau_D) *
                     std::log(c.L3_bar / c.L2_bar) +
                 (1.0 / tau_s) * std::log(c.L2_bar);

    c.dwell_floor = 0.0;
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) {
            if (p == q) continue;
            if (fits.mode[p].lambda >= 1.0) {
                c.dwell_floor = kInf;
                continue;
            }
            const double num =
                std::log(fits.mode[p].rho * fits.cross[p][q].rho *
                         dm.pair(p, q).wl_max) +
                par.N_max * (std::log(fits.cross[p][q].lambda) -
                             std::log(fits.mode[p].lambda));
            c.dwell_floor =
                std::max(c.dwell_floor, num / -std::log(fits.mode[p].lambda) * tau_s);
        }

    c.conditions.push_back(
        make_condition("range-parity", odd_level(N) ? 0.0 : 1.0, 0.0));
    c.conditions.push_back(make_condition("range-floor", c.range_floor, N));
    c.conditions.push_back(make_condition("rate", c.rate_lhs, 0.0));
    c.conditions.push_back(make_condition("dwell-floor", c.dwell_floor, par.tau_d));
    c.satisfied = all_satisfied(c.conditions);
    return c;
}

Strategy3Constants derive_strategy3(const DiscretizedModel& dm, const FitSet& fits,
                                    const Strategy3Params& par) {
    const SwitchedPlant& pl = dm.plant();
    const int m = pl.num_modes();
    const double tau_s = pl.tau_s();
    const int N = par.N;
    Strategy3Constants c;

    c.BdK_hat_norm.resize(m);
    c.U1.resize(m);
    c.U2.resize(m);
    c.xi_tilde.resize(m);
    c.range_floor = 0.0;
    for (int p = 0; p < m; ++p) {
        c.BdK_hat_norm[p] = inf_norm(dm.mode(p).Bd_hat * pl.mode(p).K);
        const DecayFit& f = fits.mode_hat[p];
        c.range_floor = std::max(
            c.range_floor,
            f.lambda < 1.0 ? f.rho * c.BdK_hat_norm[p] / (1.0 - f.lambda) : kInf);
        c.U1[p] = f.rho * f.lambda + f.rho * c.BdK_hat_norm[p] / N;
        c.U2[p] = f.lambda + f.rho * c.BdK_hat_norm[p] / N;
        c.xi_tilde[p] = std::max(fits.async_hat[p].rho, 1.0);
        c.U1_bar = std::max(c.U1_bar, c.U1[p]);
        c.U2_bar = std::max(c.U2_bar, c.U2[p]);
        c.xi_bar = std::max(c.xi_bar, c.xi_tilde[p]);
        c.eta_bar = std::max(c.eta_bar, fits.async_hat[p].lambda);
    }

    c.U3 = Matrix::zeros(m, m);
    c.U4 = Matrix::zeros(m, m);
    c.U_tilde = 0.0;
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) {
            if (p == q) continue;
            const PairTables& pt = dm.pair(p, q);
            double u3 = 0.0;
            for (std::size_t j = 0; j < pt.a_hat_norm.size(); ++j)
                u3 = std::max(u3, pt.a_hat_norm[j] +
                                      pt.bk_hat_norm[j] * double(N - 1) / N);
            c.U3(p, q) = u3;
            c.U4(p, q) = pt.upsilon4;
            const double u_hat = std::max(u3, pt.upsilon4);
            c.U_tilde = std::max(c.U_tilde, std::max(u_hat * c.xi_tilde[p],
                                                     u3 * c.U1[p] / c.U2[p]));
        }

    c.rate_lhs = (1.0 / par.tau_d) * std::log(c.U_tilde / c.U2_bar) +
                 (1.0 / par.dos.tau_D) * std::log(c.U1_bar * c.xi_bar / c.U2_bar) +
                 (1.0 / (par.dos.T * tau_s) + 1.0 / par.dos.tau_D) *
                     std::log(c.eta_bar / c.U2_bar) +
                 (1.0 / tau_s) * std::log(c.U2_bar);

    c.conditions.push_back(
        make_condition("range-parity", odd_level(N) ? 0.0 : 1.0, 0.0));
    c.conditions.push_back(make_condition("range-floor", c.range_floor, N));
    c.conditions.push_back(make_condition("rate", c.rate_lhs, 0.0));
    c.satisfied = all_satisfied(c.conditions);
    return c;
}

Strategy4Constants derive_strategy4(const DiscretizedModel& dm, const FitSet& fits,
                                    const Strategy4Params& par) {
    const SwitchedPlant& pl = dm.plant();
    const int m = pl.num_modes();
    const double tau_s = pl.tau_s();
    const int N = par.N;
    Strategy4Constants c;

    c.BdK_hat_norm.resize(m);
    c.range_floor = 0.0;
    for (int p = 0; p < m; ++p) {
        c.BdK_hat_norm[p] = inf_norm(dm.mode(p).Bd_hat * pl.mode(p).K);
        const DecayFit& f = fits.mode_hat[p];
        c.range_floor = std::max(
            c.range_floor,
            f.lambda < 1.0 ? f.rho * c.BdK_hat_norm[p] / (1.0 - f.lambda) : kInf);
        const HeldFactors hf = held_factors(f, c.BdK_hat_norm[p], N);
        c.phi1 = std::max(c.phi1, hf.with_transient);
        c.phi2 = std::max(c.phi2, hf.steady);
        c.phi3 = std::max(c.phi3, std::max(fits.async_hat[p].rho, 1.0) *
                                      fits.async_hat[p].lambda);
        c.phi4 = std::max(c.phi4, fits.async_hat[p].lambda);
        c.phi5 = std::max({c.phi5, fits.async_hat[p].rho,
                           hf.with_transient / hf.steady, 1.0});
    }

    c.T_cal = (par.n_min + par.n_max) * tau_s;
    c.tt_rate_lhs = std::log(c.phi1 * c.phi3) + (par.n_min - 1) * std::log(c.phi2) +
                    (par.n_max - 1) * std::log(c.phi4) +
                    (c.T_cal / par.tau_d) * std::log(c.phi5);

    // Worst mismatch between the driven and the held trajectory over one
    // attacked burst: l periods, switch after k of them (new mode p, old q).
    c.phi_mismatch = 0.0;
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) {
            const Matrix& clp = dm.mode(p).Acl_hat;
            const Matrix& clq = dm.mode(q).Acl_hat;
            const Matrix& adp = dm.mode(p).Ad_hat;
            const Matrix& adq = dm.mode(q).Ad_hat;
            const Matrix bkp = dm.mode(p).Bd_hat * pl.mode(p).K;
            const Matrix bkq = dm.mode(q).Bd_hat * pl.mode(q).K;
            for (int l = 1; l <= par.n_max; ++l)
                for (int k = 0; k < l; ++k) {
                    const Matrix wx =
                        powm(clp, l - k) * powm(clq, k) - powm(adp, l - k) * powm(adq, k);
                    double we = c.BdK_hat_norm[p];
                    for (int i = 0; i <= k; ++i)
                        we += inf_norm(powm(clp, l - k) * powm(clq, k - i) * bkq);
                    for (int i = k + 1; i <= l - 1; ++i)
                        we += inf_norm(powm(clp, l - i) * bkp);
                    c.phi_mismatch =
                        std::max(c.phi_mismatch, inf_norm(wx) + we / N);
                }
        }

    const double e1 = c.T_cal / par.tau_d;
    const double e2 = c.T_cal * (1.0 / tau_s - 1.0 / par.tau_d) - 1.0;
    const double e3 = par.n_min - 1.0 - c.T_cal / par.tau_d;
    c.et_rate_lhs = std::pow(c.phi1, e1) * (std::pow(c.phi2, e2) * c.phi1 +
                                            std::pow(c.phi2, e3) * c.phi_mismatch);

    c.tt_conditions.push_back(
        make_condition("range-parity", odd_level(N) ? 0.0 : 1.0, 0.0));
    c.tt_conditions.push_back(make_condition("range-floor", c.range_floor, N));
    c.tt_conditions.push_back(make_condition("rate", c.tt_rate_lhs, 0.0));
    c.tt_satisfied = all_satisfied(c.tt_conditions);

    c.et_conditions.push_back(
        make_condition("range-parity", odd_level(N) ? 0.0 : 1.0, 0.0));
    c.et_conditions.push_back(make_condition("range-floor", c.range_floor, N));
    c.et_conditions.push_back(make_condition("burst-below-sleep", par.n_max,
                                             par.n_min - 1.0));
    c.et_conditions.push_back(make_condition("trigger-rate", c.et_rate_lhs, 1.0));
    c.et_satisfied = all_satisfied(c.et_conditions);
    return c;
}

} // namespace resilq
