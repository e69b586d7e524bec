#pragma once

#include <vector>

#include "resilq/matrix.hpp"

namespace resilq {

using Vec = std::vector<double>;

// Induced infinity norm: max absolute row sum.
double inf_norm(const Matrix& m);

// Largest absolute entry.
double max_abs(const Matrix& m);

double vec_inf_norm(const Vec& v);
Vec matvec(const Matrix& m, const Vec& v);
Vec vec_add(const Vec& a, const Vec& b);
Vec vec_sub(const Vec& a, const Vec& b);

// Solves a * x = b by Gaussian elimination with partial pivoting.
Matrix solve(Matrix a, Matrix b);

// Matrix exponential, scaling-and-squaring with a degree-13 Pade approximant.
Matrix expm(const Matrix& a);

Matrix powm(const Matrix& m, unsigned n);

// ∫_0^tau exp(a_left (tau - s)) b exp(a_right s) ds, computed exactly (to
// expm accuracy) as the off-diagonal block of a block-triangular exponential.
Matrix conv_integral(const Matrix& a_left, const Matrix& b, const Matrix& a_right,
                     double tau);

// Gelfand limit ||m^k||^{1/k} via repeated squaring with log-scaled
// renormalization, so powers far past overflow stay representable.
double spectral_radius(const Matrix& m);

struct DecayFit {
    double rho = 1.0;
    double lambda = 0.0;
};

// Fits ||m^k|| <= rho * lambda^k for all k >= 0. lambda sits just above the
// spectral radius (kept below 1 when the radius allows it) so rho is the
// finite peak of ||m^k|| / lambda^k; rho >= 1 always, from k = 0.
DecayFit decay_fit(const Matrix& m, unsigned kmax = 1000);

// Worst ratio ||m^k|| / (rho * lambda^k) over 0 <= k <= kmax. A value above 1
// means the claimed envelope fails inside that range.
double decay_margin(const Matrix& m, double rho, double lambda, unsigned kmax);

} // namespace resilq
