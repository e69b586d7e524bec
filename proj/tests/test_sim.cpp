#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "models.hpp"
#include "resilq/sim.hpp"

using namespace resilq;

namespace {

// Fixed-step classic fourth-order integration of zdot = M z, used as the
// independent oracle for the exponential-map integrator inside the loop.
Vec rk4(const Matrix& m, Vec z, double duration, int substeps) {
    const double h = duration / substeps;
    const std::size_t n = z.size();
    Vec k1, k2, k3, k4, tmp(n);
    for (int s = 0; s < substeps; ++s) {
        k1 = matvec(m, z);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + 0.5 * h * k1[i];
        k2 = matvec(m, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + 0.5 * h * k2[i];
        k3 = matvec(m, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + h * k3[i];
        k4 = matvec(m, tmp);
        for (std::size_t i = 0; i < n; ++i)
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return z;
}

struct Seg {
    int mode;
    double dur;
};

std::vector<Seg> oracle_segments(const SwitchingSignal& sig, double t0, double t1) {
    const double eps = 1e-9 * (t1 - t0);
    std::vector<Seg> segs{{sig.mode_at(t0), t1 - t0}};
    for (const auto& ev : sig.events) {
        if (ev.t <= t0 + eps || ev.t > t1 + eps) continue;
        if (std::abs(ev.t - t1) <= eps) continue; // lattice switch: no split
        segs[0].dur = ev.t - t0;
        segs.push_back({ev.mode, t1 - ev.t});
    }
    return segs;
}

// Re-integrates every recorded period of a predictor-driven run from the row
// data alone and compares the plant block against the next row.
void check_predictor_flow(const DiscretizedModel& dm, const SwitchingSignal& sig,
                          const SimResult& res) {
    const int nx = dm.plant().nx();
    REQUIRE(res.rows.size() > 1);
    for (std::size_t i = 0; i + 1 < res.rows.size(); ++i) {
        const SimRow& r = res.rows[i];
        const SimRow& s = res.rows[i + 1];
        Vec z(2 * nx);
        for (int j = 0; j < nx; ++j) {
            z[j] = r.x[j];
            z[nx + j] = r.xhat[j];
        }
        for (const Seg& seg : oracle_segments(sig, r.t, s.t))
            z = rk4(dm.acal(seg.mode, r.mode_hat), z, seg.dur, 256);
        double err = 0.0;
        for (int j = 0; j < nx; ++j) err = std::max(err, std::abs(z[j] - s.x[j]));
        REQUIRE(err <= 1e-9 * std::max(1.0, vec_inf_norm(r.x)));
    }
}

Matrix held_generator(const Mode& m, int nx, int nu) {
    Matrix g(nx + nu, nx + nu);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nx; ++j) g(i, j) = m.A(i, j);
        for (int j = 0; j < nu; ++j) g(i, nx + j) = m.B(i, j);
    }
    return g;
}

// Same oracle for the held-output runs: the input over a period is decoded
// from the recorded symbol (zero when the link was down) and frozen.
void check_held_flow(const DiscretizedModel& dm, const SwitchingSignal& sig,
                     const SimResult& res, int N) {
    const SwitchedPlant& plant = dm.plant();
    const int nx = plant.nx(), nu = plant.nu();
    const Vec origin(nx, 0.0);
    REQUIRE(res.rows.size() > 1);
    for (std::size_t i = 0; i + 1 < res.rows.size(); ++i) {
        const SimRow& r = res.rows[i];
        const SimRow& s = res.rows[i + 1];
        Vec u(nu, 0.0);
        if (!r.attacked) {
            const Vec c = decode_box(r.symbol, origin, r.E, N, nx);
            u = matvec(plant.mode(r.mode_hat).K, c);
        }
        Vec w(nx + nu);
        for (int j = 0; j < nx; ++j) w[j] = r.x[j];
        for (int j = 0; j < nu; ++j) w[nx + j] = u[j];
        for (const Seg& seg : oracle_segments(sig, r.t, s.t))
            w = rk4(held_generator(plant.mode(seg.mode), nx, nu), w, seg.dur, 256);
        double err = 0.0;
        for (int j = 0; j < nx; ++j) err = std::max(err, std::abs(w[j] - s.x[j]));
        REQUIRE(err <= 1e-9 * std::max({1.0, vec_inf_norm(r.x), vec_inf_norm(u)}));
    }
}

void require_clean(const DiscretizedModel& dm, const SimParams& par,
                   const AttackTrace& atk, const SwitchingSignal& sig,
                   const SimResult& res) {
    REQUIRE(res.uniformity_violations == 0);
    const auto bad = replay_invariants(dm, par, atk, sig, res);
    for (const auto& line : bad) MESSAGE(line);
    REQUIRE(bad.empty());
}

AttackTrace no_attack(double horizon) {
    AttackTrace t;
    t.horizon = horizon;
    return t;
}

SwitchingSignal single_mode(double horizon) {
    SwitchingSignal sig;
    sig.events = {{0.0, 0}};
    sig.tau_d = horizon;
    sig.aligned = true;
    sig.N_max = 0;
    return sig;
}

} // namespace

TEST_CASE("strategy names round-trip and reject garbage") {
    for (Strategy s : {Strategy::tracking, Strategy::tracking_aligned,
                       Strategy::active_range, Strategy::passive_range,
                       Strategy::schedule_range, Strategy::trigger_range})
        CHECK(strategy_from_name(strategy_name(s)) == s);
    CHECK_THROWS_AS((void)strategy_from_name("zeno"), ProtocolError);
}

TEST_CASE("tracking loop on one mode matches a high-resolution integration") {
    auto m = testmodels::planar();
    SwitchedPlant plant({m.plant.mode(0)}, 0.1, 1.0);
    DiscretizedModel dm(plant, 101, 200);

    SimParams par;
    par.strategy = Strategy::tracking;
    par.N = 9;
    par.E0 = 2.0;
    par.x0 = {0.4, -0.3};
    par.horizon = 2.0;

    AttackTrace atk;
    atk.horizon = par.horizon;
    atk.intervals = {{0.25, 0.3}}; // instants 0.3, 0.4, 0.5 lost
    SwitchingSignal sig = single_mode(par.horizon);

    SimResult res = simulate(dm, par, atk, sig);
    REQUIRE(res.rows.size() == 21);
    CHECK(res.attacked_count == 3);
    CHECK(res.delivered_count == 18);
    require_clean(dm, par, atk, sig, res);
    check_predictor_flow(dm, sig, res);
    // strongly contracting closed loop: the burst is long forgotten
    CHECK(res.final_norm < 1e-3);
    CHECK(res.max_norm <= 2.0);
}

TEST_CASE("tracking loop splits mid-period switches exactly") {
    auto m = testmodels::planar();
    DiscretizedModel dm(m.plant, 101, 200);

    SimParams par;
    par.strategy = Strategy::tracking;
    par.N = 9;
    par.E0 = 2.0;
    par.x0 = {0.4, -0.3};
    par.horizon = 3.0;

    AttackTrace atk;
    atk.horizon = par.horizon;
    atk.intervals = {{1.02, 0.23}, {2.31, 0.15}};
    SwitchingSignal sig =
        generate_switching(2, 0.7, par.horizon, false, 0.1, dm.grid_points(), 11);

    SimResult res = simulate(dm, par, atk, sig);
    REQUIRE(res.rows.size() == 31);
    int inside = 0;
    for (const auto& r : res.rows) inside += r.switched_inside;
    CHECK(inside >= 1); // the generator did place switches off the lattice
    CHECK(res.attacked_count == 3);
    require_clean(dm, par, atk, sig, res);
    check_predictor_flow(dm, sig, res);
}

TEST_CASE("aligned tracking keeps every switch on the lattice") {
    auto m = testmodels::vtol();
    DiscretizedModel dm(m.plant, 101, 200);

    SimParams par;
    par.strategy = Strategy::tracking_aligned;
    par.N = 15;
    par.E0 = 1.0;
    par.x0 = {0.1, 0.1, 0.05, -0.05};
    par.horizon = 6.0;

    AttackTrace atk;
    atk.horizon = par.horizon;
    atk.intervals = {{1.33, 0.08}, {3.01, 0.12}};
    SwitchingSignal sig =
        generate_switching(2, 3.0, par.horizon, true, 0.05, dm.grid_points(), 7);

    SimResult res = simulate(dm, par, atk, sig);
    REQUIRE(res.rows.size() == 121);
    int inside = 0, at_end = 0;
    for (const auto& r : res.rows) {
        inside += r.switched_inside;
        at_end += r.switched_at_end;
    }
    CHECK(inside == 0);
    CHECK(at_end >= 1);
    require_clean(dm, par, atk, sig, res);
    check_predictor_flow(dm, sig, res);
}

TEST_CASE("model-driven envelope run respects its certified range") {
    auto m = testmodels::fourstate();
    DiscretizedModel dm(m.plant, 101, 400);
    FitSet fits = testmodels::with_envelopes(dm, m.env);

    Strategy2Params sp;
    sp.N = 105;
    sp.N_max = 1;
    sp.n_max = 18;
    sp.tau_d = 9.0;
    sp.dos = {5.0, 10.0, 1.0, 0.0};
    Strategy2Constants sc = derive_strategy2(dm, fits, sp);
    REQUIRE(sc.satisfied);

    SimParams par;
    par.strategy = Strategy::active_range;
    par.N = sp.N;
    par.E0 = 1.0;
    par.x0 = {0.3, -0.2, 0.25, -0.15};
    par.horizon = 12.0;
    par.s2 = &sc;

    AttackParams ap;
    ap.kind = AttackModel::average;
    ap.avg = sp.dos;
    ap.burst_cap = sp.n_max;
    AttackTrace atk = generate_attack(ap, 0.1, par.horizon, 23);
    SwitchingSignal sig =
        generate_switching(2, sp.tau_d, par.horizon, false, 0.1, dm.grid_points(), 5);

    SimResult res = simulate(dm, par, atk, sig);
    REQUIRE(res.rows.size() == 121);
    CHECK(res.attacked_count >= 1);
    require_clean(dm, par, atk, sig, res);
    check_predictor_flow(dm, sig, res);
}

TEST_CASE("held-output envelope run matches the oracle and its discrete map") {
    auto m = testmodels::fourstate();
    DiscretizedModel dm(m.plant, 101, 400);
    FitSet fits = testmodels::with_envelopes(dm, m.env);

    Strategy3Params sp;
    sp.N = 155;
    sp.tau_d = 2.0;
    sp.dos = {2.0, 4.0, 1.0, 0.0};
    Strategy3Constants sc = derive_strategy3(dm, fits, sp);

    SimParams par;
    par.strategy = Strategy::passive_range;
    par.N = sp.N;
    par.E0 = 1.0;
    par.x0 = {0.2, -0.15, 0.1, -0.1};
    par.horizon = 6.0;
    par.fits = &fits;
    par.s3 = &sc;

    AttackParams ap;
    ap.kind = AttackModel::average;
    ap.avg = sp.dos;
    AttackTrace atk = generate_attack(ap, 0.1, par.horizon, 31);
    SwitchingSignal sig =
        generate_switching(2, sp.tau_d, par.horizon, false, 0.1, dm.grid_points(), 13);

    SimResult res = simulate(dm, par, atk, sig);
    REQUIRE(res.rows.size() == 61);
    CHECK(res.attacked_count >= 1);
    require_clean(dm, par, atk, sig, res);
    check_held_flow(dm, sig, res, par.N);
    for (const auto& r : res.rows)
        if (r.attacked) CHECK(r.u_norm == 0.0); // output silenced through outages
}

TEST_CASE("calendar envelope contracts through a worst-case burst pattern") {
    auto m = testmodels::planar();
    DiscretizedModel dm(m.plant, 101, 400);
    FitSet fits = fits_from_model(dm);

    Strategy4Params sp;
    sp.N = 3;
    sp.n_min = 10;
    sp.n_max = 4;
    sp.tau_d = 2.0;
    Strategy4Constants sc = derive_strategy4(dm, fits, sp);
    REQUIRE(sc.tt_satisfied);

    SimParams par;
    par.strategy = Strategy::schedule_range;
    par.N = sp.N;
    par.E0 = 1.0;
    par.x0 = {0.05, -0.04};
    par.horizon = 28.0;
    par.n_min = sp.n_min;
    par.n_max = sp.n_max;
    par.tau_d = sp.tau_d;
    par.s4 = &sc;

    // the calendar codec prices exactly the phase-locked worst-case pattern;
    // a randomly phased burst train of the same class is outside its coverage
    AttackTrace atk = periodic_attack(sp.n_min, sp.n_max, 0.1, par.horizon);
    SwitchingSignal sig = virtue_switching(2, sp.tau_d, par.horizon, 0.1);

    SimResult res = simulate(dm, par, atk, sig);
    REQUIRE(res.rows.size() == 281);
    CHECK(res.attacked_count == 80); // 20 cycles of 4 lost instants
    require_clean(dm, par, atk, sig, res);
    check_held_flow(dm, sig, res, par.N);
    CHECK(res.rows.back().E < par.E0);
    CHECK(res.final_norm < vec_inf_norm(par.x0));
}

TEST_CASE("trigger envelope zooms out under bursts and recovers") {
    auto m = testmodels::planar();
    DiscretizedModel dm(m.plant, 101, 400);
    FitSet fits = fits_from_model(dm);

    Strategy4Params sp;
    sp.N = 3;
    sp.n_min = 10;
    sp.n_max = 4;
    sp.tau_d = 2.0;
    Strategy4Constants sc = derive_strategy4(dm, fits, sp);

    SimParams par;
    par.strategy = Strategy::trigger_range;
    par.N = sp.N;
    par.E0 = 1.0;
    par.x0 = {0.05, -0.04};
    par.horizon = 28.0;
    par.n_min = sp.n_min;
    par.n_max = sp.n_max;
    par.tau_d = sp.tau_d;
    par.s4 = &sc;

    AttackParams ap;
    ap.kind = AttackModel::intermittent;
    ap.n_min = sp.n_min;
    ap.n_max = sp.n_max;
    AttackTrace atk = generate_attack(ap, 0.1, par.horizon, 41);
    SwitchingSignal sig = virtue_switching(2, sp.tau_d, par.horizon, 0.1);

    SimResult res = simulate(dm, par, atk, sig);
    REQUIRE(res.rows.size() == 281);
    require_clean(dm, par, atk, sig, res);
    check_held_flow(dm, sig, res, par.N);
    CHECK(res.zoom_count >= 1);
    // zoom bookkeeping reaches the decoder: flags only at or after a zoom
    for (const auto& r : res.rows)
        if (r.flag) CHECK(r.zoom_age >= 0);
}

TEST_CASE("traces are deterministic and numerically lossless") {
    auto m = testmodels::planar();
    DiscretizedModel dm(m.plant, 101, 200);

    SimParams par;
    par.strategy = Strategy::tracking;
    par.N = 9;
    par.E0 = 2.0;
    par.x0 = {0.4, -0.3};
    par.horizon = 2.0;

    AttackTrace atk;
    atk.horizon = par.horizon;
    atk.intervals = {{0.25, 0.3}};
    SwitchingSignal sig = single_mode(par.horizon);

    SimResult a = simulate(dm, par, atk, sig);
    SimResult b = simulate(dm, par, atk, sig);
    const std::string csv_a = trace_to_csv(a);
    const std::string csv_b = trace_to_csv(b);
    REQUIRE(csv_a == csv_b);

    // header carries the model-state columns for a predictor-driven run
    const std::string header = csv_a.substr(0, csv_a.find('\n'));
    CHECK(header ==
          "k,t,attacked,mode,mode_hat,case,switch_inside,switch_end,msg_switch,"
          "async_periods,flag,zoom_age,E,symbol,u_norm,x0,x1,xhat0,xhat1");

    // %.17g round-trips the stored doubles exactly: re-parse row 0's x0
    std::size_t pos = csv_a.find('\n') + 1;
    for (int comma = 0; comma < 15; ++comma) pos = csv_a.find(',', pos) + 1;
    const double back = std::strtod(csv_a.c_str() + pos, nullptr);
    REQUIRE(back == a.rows[0].x[0]);

    // held-output runs do not carry model-state columns
    FitSet fits = fits_from_model(dm);
    Strategy4Params sp;
    sp.N = 3;
    sp.n_min = 10;
    sp.n_max = 4;
    sp.tau_d = 2.0;
    Strategy4Constants sc = derive_strategy4(dm, fits, sp);
    SimParams hp;
    hp.strategy = Strategy::schedule_range;
    hp.N = 3;
    hp.E0 = 1.0;
    hp.x0 = {0.05, -0.04};
    hp.horizon = 2.0;
    hp.n_min = sp.n_min;
    hp.n_max = sp.n_max;
    hp.tau_d = sp.tau_d;
    hp.s4 = &sc;
    SimResult h = simulate(dm, hp, no_attack(2.0), virtue_switching(2, 2.0, 2.0, 0.1));
    const std::string hcsv = trace_to_csv(h);
    CHECK(hcsv.substr(0, hcsv.find('\n')) ==
          "k,t,attacked,mode,mode_hat,case,switch_inside,switch_end,msg_switch,"
          "async_periods,flag,zoom_age,E,symbol,u_norm,x0,x1");
}

TEST_CASE("simulate rejects inconsistent inputs") {
    auto m = testmodels::planar();
    DiscretizedModel dm(m.plant, 101, 200);
    AttackTrace atk = no_attack(1.0);
    SwitchingSignal sig = single_mode(1.0);

    SimParams par;
    par.strategy = Strategy::tracking;
    par.N = 9;
    par.E0 = 2.0;
    par.x0 = {0.1, 0.0};
    par.horizon = 1.0;

    SimParams bad = par;
    bad.x0 = {0.1};
    CHECK_THROWS_AS((void)simulate(dm, bad, atk, sig), ProtocolError);

    bad = par;
    bad.horizon = 0.04;
    CHECK_THROWS_AS((void)simulate(dm, bad, atk, sig), ProtocolError);

    bad = par;
    bad.strategy = Strategy::active_range;
    CHECK_THROWS_AS((void)simulate(dm, bad, atk, sig), ProtocolError);
    bad.strategy = Strategy::passive_range;
    CHECK_THROWS_AS((void)simulate(dm, bad, atk, sig), ProtocolError);
    bad.strategy = Strategy::schedule_range;
    CHECK_THROWS_AS((void)simulate(dm, bad, atk, sig), ProtocolError);

    // two switches inside one sampling period cannot be transmitted
    SwitchingSignal crowded;
    crowded.events = {{0.0, 0}, {0.31, 1}, {0.38, 0}};
    crowded.tau_d = 0.07;
    crowded.N_max = 1;
    SimParams tp = par;
    tp.horizon = 0.5;
    CHECK_THROWS_AS((void)simulate(dm, tp, atk, crowded), ProtocolError);
}
