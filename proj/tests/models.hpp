// Benchmark models shared across the test-suite, with the published decay
// envelopes used as fit overrides where a test exercises the override path.
#pragma once

#include <vector>

#include "resilq/constants.hpp"
#include "resilq/plant.hpp"

namespace testmodels {

struct Envelopes {
    std::vector<double> rho, lambda;          // per mode, open-loop family
    std::vector<std::vector<double>> xi, eta; // per ordered pair
    std::vector<double> rho_hat, lambda_hat;  // per mode, closed-loop family
    std::vector<double> xi_hat, eta_hat;      // per mode, held-input family
};

struct Model {
    resilq::SwitchedPlant plant;
    Envelopes env;
};

// VTOL airframe, two airspeed modes, four states / two inputs.
inline Model vtol() {
    using resilq::Matrix;
    Matrix a1{{-0.0366, 0.0271, 0.0188, -0.4555},
              {0.0482, -1.0100, 0.0024, -4.0208},
              {0.1002, 0.3681, -0.7070, 1.4200},
              {0.0, 0.0, 1.0, 0.0}};
    Matrix a2{{-0.0366, 0.0271, 0.0188, -0.4555},
              {0.0482, -1.0100, 0.0024, -4.0208},
              {0.1002, 0.5047, -0.7070, 2.5460},
              {0.0, 0.0, 1.0, 0.0}};
    Matrix b1{{0.4422, 0.1761}, {3.5446, -7.5922}, {-5.5200, 4.4900}, {0.0, 0.0}};
    Matrix b2{{0.4422, 0.1761}, {5.1120, -7.5922}, {-5.5200, 4.4900}, {0.0, 0.0}};
    Matrix k1{{0.0077, 0.0742, 0.2070, 0.2516}, {-0.0123, 0.0620, 0.1266, 0.1317}};
    Matrix k2{{-0.0030, -0.0055, 0.2631, 0.4130},
              {-0.0471, 0.1000, 0.2202, -0.3283}};
    Envelopes e;
    e.rho = {3.8927, 3.8620};
    e.lambda = {0.9602, 0.9609};
    e.xi = {{0, 1.1687}, {0.5751, 0}};
    e.eta = {{0, 1.0216}, {1.0922, 0}};
    e.rho_hat = {3.1096, 3.8799};
    e.lambda_hat = {0.9822, 0.9607};
    e.xi_hat = {1.0930, 1.0599};
    e.eta_hat = {1.1004, 1.1029};
    return Model{resilq::SwitchedPlant({{a1, b1, k1}, {a2, b2, k2}}, 0.05, 1.0), e};
}

// Planar system, both modes open-loop unstable.
inline Model planar() {
    using resilq::Matrix;
    Matrix a1{{3.3968, 1.4663}, {3.0711, -3.2308}};
    Matrix a2{{-0.2915, -3.4221}, {-0.2891, -3.6517}};
    Matrix bb{{0.9207, -1.2808}, {1.7131, 0.9749}};
    Matrix k1{{-3.6011, -2.5837}, {4.1549, -1.1392}};
    Matrix k2{{-2.0251, -0.9775}, {3.7468, -2.4542}};
    Envelopes e;
    e.rho_hat = {1.0986, 1.1158};
    e.lambda_hat = {0.375, 0.35};
    e.xi_hat = {1.4421, 0.1};
    e.eta_hat = {1.0314, 1.4979};
    return Model{resilq::SwitchedPlant({{a1, bb, k1}, {a2, bb, k2}}, 0.1, 1.0), e};
}

// Four-state system with strongly dissimilar modes.
inline Model fourstate() {
    using resilq::Matrix;
    Matrix a1{{0.56, 0.35, -0.30, -0.60},
              {-0.10, -0.64, -0.64, -0.73},
              {0.04, -0.25, -0.42, 0.57},
              {0.30, 0.57, -0.58, -0.50}};
    Matrix a2{{-0.50, -0.64, -0.74, 0.30},
              {0.560, 0.35, -0.30, -1.26},
              {-0.60, 0.57, -0.80, -0.60},
              {0.40, -0.25, 0.42, -1.57}};
    Matrix b1{{1.91, 1.58}, {0.69, -0.62}, {-1.05, -1.82}, {-0.20, 0.39}};
    Matrix b2{{1.27, -1.28}, {1.32, 0.50}, {-1.13, 1.21}, {-1.85, 1.17}};
    Matrix k1{{-1.4037, -0.2758, -0.1832, 0.0781},
              {-0.8063, 0.1959, 0.3296, -0.3401}};
    Matrix k2{{-0.2191, -0.3600, 0.2030, 0.4401},
              {0.2208, -0.8859, 0.1664, 0.8850}};
    Envelopes e;
    e.rho = {1.0233, 1.0781};
    e.lambda = {0.9482, 0.9684};
    e.xi = {{0, 1.8257}, {1.4856, 0}};
    e.eta = {{0, 1.1879}, {1.2069, 0}};
    e.rho_hat = {1.9587, 1.9391};
    e.lambda_hat = {0.9533, 0.9543};
    e.xi_hat = {1.1490, 1.2481};
    e.eta_hat = {1.0991, 1.1041};
    return Model{resilq::SwitchedPlant({{a1, b1, k1}, {a2, b2, k2}}, 0.1, 1.0), e};
}

// Replace the self-derived fits with the published envelopes (all families the
// model carries; the open-loop family is absent for the planar model).
inline resilq::FitSet with_envelopes(const resilq::DiscretizedModel& dm,
                                     const Envelopes& env) {
    resilq::FitSet f = resilq::fits_from_model(dm);
    const int m = dm.plant().num_modes();
    for (int p = 0; p < m; ++p) {
        if (!env.rho.empty()) f.mode[p] = {env.rho[p], env.lambda[p]};
        f.mode_hat[p] = {env.rho_hat[p], env.lambda_hat[p]};
        f.async_hat[p] = {env.xi_hat[p], env.eta_hat[p]};
        for (int q = 0; q < m; ++q)
            if (p != q && !env.xi.empty())
                f.cross[p][q] = {env.xi[p][q], env.eta[p][q]};
    }
    return f;
}

} // namespace testmodels
