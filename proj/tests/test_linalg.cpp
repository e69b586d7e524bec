#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "resilq/linalg.hpp"

using namespace resilq;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                     double span = 2.0) {
    std::uniform_real_distribution<double> dist(-span, span);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

// Dense RK4 on X' = aX, X(0) = I; the independent reference for expm.
Matrix rk4_expm(const Matrix& a, double t, int steps) {
    Matrix x = Matrix::identity(a.rows());
    const double h = t / steps;
    for (int i = 0; i < steps; ++i) {
        Matrix k1 = a * x;
        Matrix k2 = a * (x + (h / 2) * k1);
        Matrix k3 = a * (x + (h / 2) * k2);
        Matrix k4 = a * (x + h * k3);
        x += (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

// Dense RK4 on the pair E' = a_r E, Y' = a_l Y + b E from (I, 0); Y(tau) is
// the convolution integral of e^{a_l s} b e^{a_r s} terms by construction.
Matrix rk4_conv(const Matrix& a_l, const Matrix& b, const Matrix& a_r, double tau,
                int steps) {
    Matrix e = Matrix::identity(a_r.rows());
    Matrix y = Matrix::zeros(a_l.rows(), a_r.cols());
    const double h = tau / steps;
    for (int i = 0; i < steps; ++i) {
        Matrix ke1 = a_r * e;
        Matrix ky1 = a_l * y + b * e;
        Matrix ke2 = a_r * (e + (h / 2) * ke1);
        Matrix ky2 = a_l * (y + (h / 2) * ky1) + b * (e + (h / 2) * ke1);
        Matrix ke3 = a_r * (e + (h / 2) * ke2);
        Matrix ky3 = a_l * (y + (h / 2) * ky2) + b * (e + (h / 2) * ke2);
        Matrix ke4 = a_r * (e + h * ke3);
        Matrix ky4 = a_l * (y + h * ky3) + b * (e + h * ke3);
        e += (h / 6) * (ke1 + 2.0 * ke2 + 2.0 * ke3 + ke4);
        y += (h / 6) * (ky1 + 2.0 * ky2 + 2.0 * ky3 + ky4);
    }
    return y;
}

double rel_err(const Matrix& got, const Matrix& want) {
    return inf_norm(got - want) / std::max(1e-300, inf_norm(want));
}

} // namespace

TEST_CASE("inf_norm is the max absolute row sum") {
    Matrix m{{1.0, -2.0, 3.0}, {-4.0, 0.5, 0.25}};
    CHECK(inf_norm(m) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(max_abs(m) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(inf_norm(Matrix::zeros(3, 3)) == 0.0);
}

TEST_CASE("solve recovers the multiplier of a known product") {
    std::mt19937_64 rng(0x5eed0001);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix a = random_matrix(rng, 4, 4);
        a += 3.0 * Matrix::identity(4); // keep it comfortably nonsingular
        Matrix x = random_matrix(rng, 4, 3);
        Matrix b = a * x;
        CHECK(rel_err(solve(a, b), x) < 1e-11);
    }
}

TEST_CASE("expm of a diagonal matrix is elementwise exp") {
    Matrix a{{0.7, 0.0}, {0.0, -1.3}};
    Matrix e = expm(a);
    CHECK(e(0, 0) == doctest::Approx(std::exp(0.7)).epsilon(1e-13));
    CHECK(e(1, 1) == doctest::Approx(std::exp(-1.3)).epsilon(1e-13));
    CHECK(std::abs(e(0, 1)) < 1e-16);
    CHECK(std::abs(e(1, 0)) < 1e-16);
}

TEST_CASE("expm of a nilpotent matrix truncates exactly") {
    Matrix n{{0.0, 2.5}, {0.0, 0.0}};
    Matrix e = expm(n);
    CHECK(e(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e(0, 1) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(e(1, 0) == doctest::Approx(0.0));
    CHECK(e(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("expm(a) expm(-a) is the identity") {
    std::mt19937_64 rng(0x5eed0002);
    Matrix a = random_matrix(rng, 5, 5);
    CHECK(rel_err(expm(a) * expm(-1.0 * a), Matrix::identity(5)) < 1e-12);
}

TEST_CASE("expm matches dense RK4 integration") {
    std::mt19937_64 rng(0x5eed0003);

    SUBCASE("well-conditioned 4x4") {
        Matrix a = random_matrix(rng, 4, 4);
        CHECK(rel_err(expm(a), rk4_expm(a, 1.0, 100000)) < 1e-9);
    }
    SUBCASE("unstable 2x2") {
        Matrix a{{3.4, 1.5}, {3.1, -3.2}};
        CHECK(rel_err(expm(a), rk4_expm(a, 1.0, 100000)) < 1e-9);
    }
    SUBCASE("large norm exercises the squaring phase") {
        Matrix a = random_matrix(rng, 3, 3, 20.0);
        CHECK(inf_norm(a) > 5.4); // otherwise no squaring happens
        CHECK(rel_err(expm(a), rk4_expm(a, 1.0, 400000)) < 1e-8);
    }
}

TEST_CASE("powm equals repeated multiplication") {
    std::mt19937_64 rng(0x5eed0004);
    Matrix m = random_matrix(rng, 3, 3, 0.8);
    Matrix naive = Matrix::identity(3);
    for (int i = 0; i < 13; ++i) naive = naive * m;
    CHECK(rel_err(powm(m, 13), naive) < 1e-13);
    CHECK(rel_err(powm(m, 0), Matrix::identity(3)) == 0.0);
}

TEST_CASE("conv_integral matches dense RK4 integration") {
    std::mt19937_64 rng(0x5eed0005);

    SUBCASE("rectangular middle factor") {
        Matrix al = random_matrix(rng, 3, 3);
        Matrix b = random_matrix(rng, 3, 2);
        Matrix ar = random_matrix(rng, 2, 2);
        CHECK(rel_err(conv_integral(al, b, ar, 0.7), rk4_conv(al, b, ar, 0.7, 100000)) <
              1e-9);
    }
    SUBCASE("square factors, longer horizon") {
        Matrix al = random_matrix(rng, 4, 4);
        Matrix b = random_matrix(rng, 4, 4);
        Matrix ar = random_matrix(rng, 4, 4);
        CHECK(rel_err(conv_integral(al, b, ar, 1.3), rk4_conv(al, b, ar, 1.3, 200000)) <
              1e-9);
    }
}

TEST_CASE("conv_integral with zero right factor is the forced-response integral") {
    // For diagonal a the integral has the closed form a^{-1}(e^{a tau} - I) b.
    Matrix a{{0.9, 0.0}, {0.0, -0.4}};
    Matrix b{{1.0, 2.0}, {-1.5, 0.5}};
    const double tau = 0.6;
    Matrix got = conv_integral(a, b, Matrix::zeros(2, 2), tau);
    for (std::size_t i = 0; i < 2; ++i) {
        const double aii = a(i, i);
        const double factor = (std::exp(aii * tau) - 1.0) / aii;
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(got(i, j) == doctest::Approx(factor * b(i, j)).epsilon(1e-12));
    }
}

TEST_CASE("spectral_radius recovers known eigenvalues") {
    CHECK(spectral_radius(Matrix{{0.3, 0.0}, {0.0, -0.9}}) ==
          doctest::Approx(0.9).epsilon(1e-10));
    // Purely imaginary pair at radius 0.8: power iteration would stall,
    // the squaring route must not.
    CHECK(spectral_radius(Matrix{{0.0, -0.8}, {0.8, 0.0}}) ==
          doctest::Approx(0.8).epsilon(1e-10));
    // Similarity transform of diag(1.3, 0.2, -0.7) by a unitriangular matrix.
    Matrix s{{1.0, 1.0, 0.0}, {0.0, 1.0, 1.0}, {0.0, 0.0, 1.0}};
    Matrix si{{1.0, -1.0, 1.0}, {0.0, 1.0, -1.0}, {0.0, 0.0, 1.0}};
    Matrix d{{1.3, 0.0, 0.0}, {0.0, 0.2, 0.0}, {0.0, 0.0, -0.7}};
    CHECK(spectral_radius(s * d * si) == doctest::Approx(1.3).epsilon(1e-10));
    CHECK(spectral_radius(Matrix{{0.0, 5.0}, {0.0, 0.0}}) == 0.0);
}

TEST_CASE("decay_fit yields a valid envelope, checked by direct powering") {
    std::mt19937_64 rng(0x5eed0006);
    std::vector<Matrix> cases;
    cases.push_back(Matrix{{0.9, 1.0}, {0.0, 0.9}}); // defective: large transient
    cases.push_back(Matrix{{0.0, -0.95}, {0.95, 0.0}});
    for (int trial = 0; trial < 4; ++trial) {
        Matrix m = random_matrix(rng, 4, 4);
        m *= 0.9 / spectral_radius(m);
        cases.push_back(m);
    }
    for (const Matrix& m : cases) {
        DecayFit fit = decay_fit(m);
        CHECK(fit.rho >= 1.0);
        CHECK(fit.lambda > spectral_radius(m));
        CHECK(fit.lambda < 1.0);
        CHECK(decay_margin(m, fit.rho, fit.lambda, 2000) <= 1.0 + 1e-9);
    }
}

TEST_CASE("decay_fit on a scaled identity peaks at k = 0") {
    DecayFit fit = decay_fit(0.5 * Matrix::identity(3));
    CHECK(fit.lambda == doctest::Approx(0.5005).epsilon(1e-9));
    CHECK(fit.rho == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("decay_margin flags an envelope that is too tight") {
    // Claim geometric decay at 0.5 for the identity: fails immediately.
    CHECK(decay_margin(Matrix::identity(2), 1.0, 0.5, 100) > 1e20);
    // The same claim with a generous kmax=0 window only sees k = 0.
    CHECK(decay_margin(Matrix::identity(2), 1.0, 0.5, 0) == doctest::Approx(1.0));
}
