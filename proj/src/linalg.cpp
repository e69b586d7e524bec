#include "resilq/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace resilq {

double inf_norm(const Matrix& m) {
    double best = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) row += std::abs(m(i, j));
        best = std::max(best, row);
    }
    return best;
}

double max_abs(const Matrix& m) {
    double best = 0.0;
    for (double v : m.flat()) best = std::max(best, std::abs(v));
    return best;
}

double vec_inf_norm(const Vec& v) {
    double best = 0.0;
    for (double x : v) best = std::max(best, std::abs(x));
    return best;
}

Vec matvec(const Matrix& m, const Vec& v) {
    assert(m.cols() == v.size());
    Vec out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i] += m(i, j) * v[j];
    return out;
}

Vec vec_add(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vec vec_sub(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Matrix solve(Matrix a, Matrix b) {
    assert(a.is_square() && a.rows() == b.rows());
    const std::size_t n = a.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        assert(std::abs(a(piv, col)) > 0.0 && "singular system");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(col, j), b(piv, j));
        }
        const double inv = 1.0 / a(col, col);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col) * inv;
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            for (std::size_t j = 0; j < b.cols(); ++j) b(r, j) -= f * b(col, j);
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        const double inv = 1.0 / a(r, r);
        for (std::size_t j = 0; j < b.cols(); ++j) b(r, j) *= inv;
    }
    return b;
}

Matrix expm(const Matrix& a) {
    assert(a.is_square());
    const std::size_t n = a.rows();
    if (n == 0) return a;

    // Degree-13 Pade coefficients and its validity threshold (Higham 2005).
    static const double pc[14] = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0,  129060195264000.0,   10559470521600.0,
        670442572800.0,      33522128640.0,       1323241920.0,
        40840800.0,          960960.0,            16380.0,
        182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    int squarings = 0;
    Matrix x = a;
    const double nrm = inf_norm(a);
    if (nrm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
        x *= std::ldexp(1.0, -squarings);
    }

    const Matrix id = Matrix::identity(n);
    const Matrix x2 = x * x;
    const Matrix x4 = x2 * x2;
    const Matrix x6 = x2 * x4;

    Matrix u = x * (x6 * (pc[13] * x6 + pc[11] * x4 + pc[9] * x2) + pc[7] * x6 +
                    pc[5] * x4 + pc[3] * x2 + pc[1] * id);
    Matrix v = x6 * (pc[12] * x6 + pc[10] * x4 + pc[8] * x2) + pc[6] * x6 +
               pc[4] * x4 + pc[2] * x2 + pc[0] * id;

    Matrix r = solve(v - u, v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

Matrix powm(const Matrix& m, unsigned n) {
    assert(m.is_square());
    Matrix result = Matrix::identity(m.rows());
    Matrix base = m;
    while (n > 0) {
        if (n & 1u) result = result * base;
        n >>= 1u;
        if (n > 0) base = base * base;
    }
    return result;
}

Matrix conv_integral(const Matrix& a_left, const Matrix& b, const Matrix& a_right,
                     double tau) {
    assert(a_left.is_square() && a_right.is_square());
    assert(a_left.rows() == b.rows() && b.cols() == a_right.rows());
    const std::size_t n1 = a_left.rows(), n2 = a_right.rows();
    Matrix c(n1 + n2, n1 + n2);
    c.set_block(0, 0, a_left);
    c.set_block(0, n1, b);
    c.set_block(n1, n1, a_right);
    return expm(c * tau).block(0, n1, n1, n2);
}

double spectral_radius(const Matrix& m) {
    assert(m.is_square());
    Matrix q = m;
    double nrm = inf_norm(q);
    if (!(nrm > 0.0)) return 0.0;
    double log_scale = std::log(nrm);
    q *= 1.0 / nrm;
    double power = 1.0;
    double est = std::exp(log_scale / power);
    for (int j = 0; j < 60; ++j) {
        q = q * q;
        power *= 2.0;
        log_scale *= 2.0;
        nrm = inf_norm(q);
        if (!(nrm > 0.0)) return 0.0; // nilpotent once rounding is past
        log_scale += std::log(nrm);
        q *= 1.0 / nrm;
        const double next = std::exp(log_scale / power);
        const bool settled = std::abs(next - est) <= 1e-13 * std::max(1.0, next);
        est = next;
        if (settled) break;
    }
    return est;
}

DecayFit decay_fit(const Matrix& m, unsigned kmax) {
    assert(m.is_square());
    const double radius = spectral_radius(m);
    double lambda;
    if (radius < 1e-12) {
        lambda = 1e-3;
    } else {
        lambda = radius * 1.001;
        if (radius < 1.0 && lambda >= 1.0) lambda = 0.5 * (1.0 + radius);
    }

    // Peak of ||m^k|| / lambda^k, tracked in log scale so transients of
    // unstable-but-fitted matrices cannot overflow the power.
    double best_log = 0.0; // k = 0: ||I|| / lambda^0 = 1
    Matrix p = m;
    double log_scale = 0.0;
    const double log_lambda = std::log(lambda);
    for (unsigned k = 1; k <= kmax; ++k) {
        const double nrm = inf_norm(p);
        if (!(nrm > 0.0)) break;
        log_scale += std::log(nrm);
        best_log = std::max(best_log, log_scale - static_cast<double>(k) * log_lambda);
        p *= 1.0 / nrm;
        if (k < kmax) p = p * m;
    }
    return DecayFit{std::exp(best_log), lambda};
}

double decay_margin(const Matrix& m, double rho, double lambda, unsigned kmax) {
    assert(m.is_square());
    if (!(rho > 0.0) || !(lambda > 0.0)) {
        return max_abs(m) > 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / rho;
    }
    const double log_rho = std::log(rho);
    const double log_lambda = std::log(lambda);
    double best_log = -log_rho; // k = 0
    Matrix p = m;
    double log_scale = 0.0;
    for (unsigned k = 1; k <= kmax; ++k) {
        const double nrm = inf_norm(p);
        if (!(nrm > 0.0)) break;
        log_scale += std::log(nrm);
        best_log = std::max(best_log,
                            log_scale - log_rho - static_cast<double>(k) * log_lambda);
        p *= 1.0 / nrm;
        if (k < kmax) p = p * m;
    }
    return std::exp(best_log);
}

} // namespace resilq
