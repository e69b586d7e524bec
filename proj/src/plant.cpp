#include "resilq/plant.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <utility>

namespace resilq {

SwitchedPlant::SwitchedPlant(std::vector<Mode> modes, double tau_s, double e0)
    : modes_(std::move(modes)), tau_s_(tau_s), e0_(e0) {
    if (modes_.empty()) throw std::invalid_argument("plant needs at least one mode");
    if (!(tau_s_ > 0.0)) throw std::invalid_argument("sampling period must be positive");
    if (!(e0_ > 0.0)) throw std::invalid_argument("initial quantizer range must be positive");
    nx_ = static_cast<int>(modes_[0].A.rows());
    nu_ = static_cast<int>(modes_[0].B.cols());
    for (const Mode& md : modes_) {
        if (static_cast<int>(md.A.rows()) != nx_ || static_cast<int>(md.A.cols()) != nx_ ||
            static_cast<int>(md.B.rows()) != nx_ || static_cast<int>(md.B.cols()) != nu_ ||
            static_cast<int>(md.K.rows()) != nu_ || static_cast<int>(md.K.cols()) != nx_) {
            throw std::invalid_argument("mode matrix shapes are inconsistent");
        }
    }
}

Matrix to_error_coords(const Matrix& m) {
    assert(m.rows() == m.cols() && m.rows() % 2 == 0);
    const std::size_t n = m.rows() / 2;
    Matrix t = Matrix::zeros(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        t(i, i) = 1.0;
        t(n + i, i) = 1.0;
        t(n + i, n + i) = -1.0;
    }
    return t * m * t; // t is its own inverse
}

int DiscretizedModel::index(int p, int q) const {
    const int m = plant_.num_modes();
    assert(p >= 0 && p < m && q >= 0 && q < m);
    return p * m + q;
}

DiscretizedModel::DiscretizedModel(const SwitchedPlant& plant, int grid_points,
                                   unsigned fit_kmax)
    : plant_(plant), grid_points_(grid_points), fit_kmax_(fit_kmax) {
    if (grid_points_ < 2) throw std::invalid_argument("offset grid needs at least two points");
    const int n = plant_.nx();
    const int nu = plant_.nu();
    const int m = plant_.num_modes();
    const double tau = plant_.tau_s();
    const double h = dt();
    const int g = grid_points_;

    modes_.reserve(m);
    for (int p = 0; p < m; ++p) {
        const Mode& md = plant_.mode(p);
        ModeMaps mm;
        mm.Abar = md.A + md.B * md.K;
        mm.Ad = expm(mm.Abar * tau);
        mm.Bd = conv_integral(mm.Abar, md.B * md.K, md.A, tau);
        mm.Ad_hat = expm(md.A * tau);
        mm.Bd_hat = conv_integral(md.A, md.B, Matrix::zeros(nu, nu), tau);
        mm.Acl_hat = mm.Ad_hat + mm.Bd_hat * md.K;
        mm.Gamma = inf_norm(mm.Ad_hat);
        mm.rho_lambda = decay_fit(mm.Ad, fit_kmax_);
        mm.rho_lambda_hat = decay_fit(mm.Acl_hat, fit_kmax_);
        mm.xi_eta_hat = decay_fit(mm.Ad_hat, fit_kmax_);
        modes_.push_back(std::move(mm));
    }

    acal_.reserve(m * m);
    for (int p = 0; p < m; ++p) {
        for (int q = 0; q < m; ++q) {
            acal_.push_back(block2x2(plant_.mode(p).A, plant_.mode(p).B * plant_.mode(q).K,
                                     Matrix::zeros(n, n), modes_[q].Abar));
        }
    }

    // Grid caches shared across pairs: open-loop powers, input integrals, and
    // coupled synchronous powers, all at multiples of the grid spacing. The
    // j-th entry is the flow over j grid steps, built by exact accumulation,
    // so every tabulated offset is a true matrix exponential product.
    std::vector<std::vector<Matrix>> op(m), ih(m), sy(m);
    for (int p = 0; p < m; ++p) {
        const Mode& md = plant_.mode(p);
        const Matrix step = expm(md.A * h);
        const Matrix istep = conv_integral(md.A, md.B, Matrix::zeros(nu, nu), h);
        const Matrix sstep = expm(acal_[index(p, p)] * h);
        op[p].reserve(g);
        ih[p].reserve(g);
        sy[p].reserve(g);
        op[p].push_back(Matrix::identity(n));
        ih[p].push_back(Matrix::zeros(n, nu));
        sy[p].push_back(Matrix::identity(2 * n));
        for (int j = 1; j < g; ++j) {
            ih[p].push_back(ih[p][j - 1] + op[p][j - 1] * istep);
            op[p].push_back(op[p][j - 1] * step);
            sy[p].push_back(sy[p][j - 1] * sstep);
        }
    }

    pairs_.resize(m * m);
    for (int p = 0; p < m; ++p) {
        for (int q = 0; q < m; ++q) {
            PairTables pt;
            pt.mz_norm.resize(g);
            pt.mz_minus_sync.resize(g);
            pt.wide_norm.resize(g);
            pt.a_hat_norm.resize(g);
            pt.bk_hat_norm.resize(g);

            const Matrix sync_full = block2x2(modes_[q].Ad, Matrix::zeros(n, n),
                                              Matrix::zeros(n, n), modes_[q].Ad);
            const Matrix fstep = expm(acal_[index(p, q)] * h);
            const Matrix& kq = plant_.mode(q).K;
            Matrix f = Matrix::identity(2 * n);
            for (int j = 0; j < g; ++j) {
                if (j > 0) f = f * fstep;
                const Matrix mz = f * sy[q][g - 1 - j];
                pt.mz_norm[j] = inf_norm(mz);
                pt.mz_minus_sync[j] = inf_norm(mz - sync_full);
                const Matrix m11 = mz.block(0, 0, n, n);
                const Matrix m12 = mz.block(0, n, n, n);
                const Matrix wide = hcat(m11 + m12, m12 * -1.0);
                pt.wide_norm[j] = inf_norm(wide);
                pt.wl_max = std::max(pt.wl_max, inf_norm(m11 + m12));
                pt.wr_max = std::max(pt.wr_max, inf_norm(m12));
                pt.a_hat_norm[j] = inf_norm(op[p][j] * op[q][g - 1 - j]);
                pt.bk_hat_norm[j] = inf_norm((op[p][j] * ih[q][g - 1 - j] + ih[p][j]) * kq);
                if (j == g - 1) {
                    pt.exp_acal = mz;
                    pt.wr_norm_end = inf_norm(m12); // ||-m12|| == ||m12||
                    pt.wide_end = pt.wide_norm[j];
                    pt.atilde_sq = vcat(wide, Matrix::zeros(n, 2 * n));
                }
            }
            for (int j = 0; j < g; ++j) {
                pt.gamma_hat1 = std::max(pt.gamma_hat1, pt.mz_norm[j]);
                pt.gamma2 = std::max(pt.gamma2, pt.mz_minus_sync[j]);
                pt.a_bb = std::max(pt.a_bb, pt.wide_norm[j]);
                pt.upsilon4 = std::max(pt.upsilon4, pt.a_hat_norm[j]);
                pt.bk_hat_max = std::max(pt.bk_hat_max, pt.bk_hat_norm[j]);
            }
            pt.gamma3 = inf_norm(pt.exp_acal);
            pt.gamma3_xe = inf_norm(to_error_coords(pt.exp_acal));
            pt.xi_eta = decay_fit(pt.atilde_sq, fit_kmax_);
            pairs_[index(p, q)] = std::move(pt);
        }
    }
}

} // namespace resilq
