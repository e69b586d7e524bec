#include "resilq/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace resilq {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ScenarioError(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

const json& need(const json& j, const char* key, const std::string& path) {
    const auto it = j.find(key);
    if (it == j.end()) fail(join(path, key), "missing");
    return *it;
}

double num(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

std::string str(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

double opt_num(const json& j, const char* key, double dflt, const std::string& path) {
    const auto it = j.find(key);
    return it == j.end() ? dflt : num(*it, join(path, key));
}

int opt_int(const json& j, const char* key, int dflt, const std::string& path) {
    const auto it = j.find(key);
    return it == j.end() ? dflt : integer(*it, join(path, key));
}

Matrix mat(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].empty())
            fail(path + "[" + std::to_string(r) + "]", "expected a non-empty row");
        if (r == 0)
            cols = j[r].size();
        else if (j[r].size() != cols)
            fail(path + "[" + std::to_string(r) + "]", "ragged row");
    }
    Matrix m = Matrix::zeros(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            m(r, c) = num(j[r][c], path + "[" + std::to_string(r) + "][" +
                                       std::to_string(c) + "]");
    return m;
}

Vec vec(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v[i] = num(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

DecayFit fit(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object with rho and lambda");
    DecayFit f;
    f.rho = num(need(j, "rho", path), join(path, "rho"));
    f.lambda = num(need(j, "lambda", path), join(path, "lambda"));
    if (!(f.rho > 0.0) || !(f.lambda >= 0.0))
        fail(path, "rho must be positive and lambda non-negative");
    return f;
}

std::vector<DecayFit> fit_family(const json& j, std::size_t m, const std::string& path) {
    if (!j.is_array() || j.size() != m)
        fail(path, "expected one fit per mode (" + std::to_string(m) + ")");
    std::vector<DecayFit> fs(m);
    for (std::size_t i = 0; i < m; ++i)
        fs[i] = fit(j[i], path + "[" + std::to_string(i) + "]");
    return fs;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError(path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string resolve(const Scenario& sc, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(sc.base_dir) / p).string();
}

json vec_json(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

json mat_json(const Matrix& m) {
    json a = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        a.push_back(std::move(row));
    }
    return a;
}

json fit_json(const DecayFit& f) { return {{"rho", f.rho}, {"lambda", f.lambda}}; }

json fits_json(const FitSet& f) {
    json mode = json::array(), mode_hat = json::array(), async_hat = json::array();
    for (const DecayFit& d : f.mode) mode.push_back(fit_json(d));
    for (const DecayFit& d : f.mode_hat) mode_hat.push_back(fit_json(d));
    for (const DecayFit& d : f.async_hat) async_hat.push_back(fit_json(d));
    json cross = json::array();
    for (std::size_t p = 0; p < f.cross.size(); ++p) {
        json row = json::array();
        for (std::size_t q = 0; q < f.cross[p].size(); ++q)
            row.push_back(p == q ? json() : fit_json(f.cross[p][q]));
        cross.push_back(std::move(row));
    }
    return {{"mode", mode}, {"mode_hat", mode_hat}, {"async_hat", async_hat},
            {"cross", cross}};
}

json conditions_json(const std::vector<Condition>& cs) {
    json arr = json::array();
    for (const Condition& c : cs)
        arr.push_back({{"name", c.name},
                       {"lhs", c.lhs},
                       {"rhs", c.rhs},
                       {"residual", c.lhs - c.rhs},
                       {"satisfied", c.satisfied}});
    return arr;
}

json cert_json_obj(const Certificate& c) {
    return {{"strategy", strategy_name(c.strategy)},
            {"satisfied", c.satisfied},
            {"inputs",
             {{"N", c.inputs.N},
              {"N_max", c.inputs.N_max},
              {"n_max", c.inputs.n_max},
              {"n_min", c.inputs.n_min},
              {"tau_d", c.inputs.tau_d},
              {"dos",
               {{"tau_D", c.inputs.dos.tau_D},
                {"T", c.inputs.dos.T},
                {"n0", c.inputs.dos.n0},
                {"kappa", c.inputs.dos.kappa}}}}},
            {"range_floor", c.range_floor},
            {"dwell_floor", c.dwell_floor},
            {"decay_base", c.decay_base},
            {"conditions", conditions_json(c.conditions)}};
}

} // namespace

Scenario scenario_from_json(const std::string& text, const std::string& name,
                            const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(name + ": not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ScenarioError(name + ": top level must be an object");

    Scenario sc;
    sc.name = name;
    sc.base_dir = base_dir;

    // ---- plant ----
    const std::string pp = "plant";
    const json& plant = need(j, "plant", "");
    sc.tau_s = num(need(plant, "tau_s", pp), pp + ".tau_s");
    if (!(sc.tau_s > 0.0)) fail(pp + ".tau_s", "must be positive");
    sc.E0 = opt_num(plant, "E0", 1.0, pp);
    if (!(sc.E0 > 0.0)) fail(pp + ".E0", "must be positive");

    const json& modes = need(plant, "modes", pp);
    if (!modes.is_array() || modes.empty())
        fail(pp + ".modes", "expected a non-empty array");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const std::string mp = pp + ".modes[" + std::to_string(i) + "]";
        if (!modes[i].is_object()) fail(mp, "expected an object");
        Mode md;
        md.A = mat(need(modes[i], "A", mp), mp + ".A");
        md.B = mat(need(modes[i], "B", mp), mp + ".B");
        md.K = mat(need(modes[i], "K", mp), mp + ".K");
        sc.modes.push_back(std::move(md));
    }
    const std::size_t nx = sc.modes[0].A.rows();
    const std::size_t nu = sc.modes[0].B.cols();
    for (std::size_t i = 0; i < sc.modes.size(); ++i) {
        const std::string mp = pp + ".modes[" + std::to_string(i) + "]";
        const Mode& md = sc.modes[i];
        if (md.A.rows() != nx || md.A.cols() != nx)
            fail(mp + ".A", "expected " + std::to_string(nx) + "x" + std::to_string(nx));
        if (md.B.rows() != nx || md.B.cols() != nu)
            fail(mp + ".B", "expected " + std::to_string(nx) + "x" + std::to_string(nu));
        if (md.K.rows() != nu || md.K.cols() != nx)
            fail(mp + ".K", "expected " + std::to_string(nu) + "x" + std::to_string(nx));
    }

    // ---- grid ----
    if (j.contains("grid")) {
        const json& g = j["grid"];
        sc.grid_points = opt_int(g, "points", 1001, "grid");
        sc.fit_kmax = opt_int(g, "fit_kmax", 1000, "grid");
        if (sc.grid_points < 2) fail("grid.points", "need at least two offsets");
        if (sc.fit_kmax < 1) fail("grid.fit_kmax", "must be positive");
    }

    // ---- strategy ----
    const std::string sp = "strategy";
    const json& st = need(j, "strategy", "");
    const std::string kind = str(need(st, "kind", sp), sp + ".kind");
    try {
        sc.strategy = strategy_from_name(kind);
    } catch (const std::exception&) {
        fail(sp + ".kind", "unknown strategy '" + kind + "'");
    }
    sc.cert.N = integer(need(st, "N", sp), sp + ".N");
    if (sc.cert.N < 3 || sc.cert.N % 2 == 0)
        fail(sp + ".N", "level must be an odd integer >= 3");
    sc.cert.N_max = opt_int(st, "N_max", 1, sp);
    sc.cert.n_max = opt_int(st, "n_max", 1, sp);
    sc.cert.n_min = opt_int(st, "n_min", 1, sp);
    sc.cert.tau_d = opt_num(st, "tau_d", 1.0, sp);
    if (sc.cert.N_max < 1) fail(sp + ".N_max", "must be at least one period");
    if (sc.cert.n_max < 1) fail(sp + ".n_max", "must be at least one period");
    if (sc.cert.n_min < 1) fail(sp + ".n_min", "must be at least one period");
    if (!(sc.cert.tau_d > 0.0)) fail(sp + ".tau_d", "must be positive");
    if (st.contains("dos")) {
        const json& d = st["dos"];
        const std::string dp = sp + ".dos";
        sc.cert.dos.tau_D = opt_num(d, "tau_D", sc.cert.dos.tau_D, dp);
        sc.cert.dos.T = opt_num(d, "T", sc.cert.dos.T, dp);
        sc.cert.dos.n0 = opt_num(d, "n0", sc.cert.dos.n0, dp);
        sc.cert.dos.kappa = opt_num(d, "kappa", sc.cert.dos.kappa, dp);
        if (!(sc.cert.dos.tau_D > 0.0)) fail(dp + ".tau_D", "must be positive");
        if (!(sc.cert.dos.T > 0.0)) fail(dp + ".T", "must be positive");
        if (sc.cert.dos.n0 < 0.0) fail(dp + ".n0", "must be non-negative");
        if (sc.cert.dos.kappa < 0.0) fail(dp + ".kappa", "must be non-negative");
    }

    // ---- attack ----
    if (j.contains("attack")) {
        const json& at = j["attack"];
        const std::string ap = "attack";
        const std::string ak = str(need(at, "kind", ap), ap + ".kind");
        if (ak == "none")
            sc.attack_kind = AttackSource::none;
        else if (ak == "average")
            sc.attack_kind = AttackSource::average;
        else if (ak == "intermittent")
            sc.attack_kind = AttackSource::intermittent;
        else if (ak == "periodic")
            sc.attack_kind = AttackSource::periodic;
        else if (ak == "file")
            sc.attack_kind = AttackSource::file;
        else
            fail(ap + ".kind",
                 "expected none, average, intermittent, periodic, or file");
        sc.burst_cap = opt_int(at, "burst_cap", 0, ap);
        if (sc.burst_cap < 0) fail(ap + ".burst_cap", "must be non-negative");
        if (sc.attack_kind == AttackSource::file)
            sc.attack_path = str(need(at, "path", ap), ap + ".path");
    }

    // ---- switching ----
    if (j.contains("switching")) {
        const json& sw = j["switching"];
        const std::string wp = "switching";
        const std::string wk = str(need(sw, "kind", wp), wp + ".kind");
        if (wk == "none")
            sc.switch_kind = SwitchSource::none;
        else if (wk == "random")
            sc.switch_kind = SwitchSource::random;
        else if (wk == "virtue")
            sc.switch_kind = SwitchSource::virtue;
        else if (wk == "file")
            sc.switch_kind = SwitchSource::file;
        else
            fail(wp + ".kind", "expected none, random, virtue, or file");
        if (sc.switch_kind == SwitchSource::file)
            sc.switch_path = str(need(sw, "path", wp), wp + ".path");
    }

    // ---- sim ----
    const json& sim = need(j, "sim", "");
    sc.x0 = vec(need(sim, "x0", "sim"), "sim.x0");
    if (sc.x0.size() != nx)
        fail("sim.x0", "expected " + std::to_string(nx) + " entries");
    sc.horizon = num(need(sim, "horizon", "sim"), "sim.horizon");
    if (sc.horizon < 0.0) fail("sim.horizon", "must be non-negative");
    if (sim.contains("seed")) {
        const json& s = sim["seed"];
        if (!s.is_number_unsigned()) fail("sim.seed", "expected a non-negative integer");
        sc.seed = s.get<std::uint64_t>();
    }

    // ---- overrides ----
    if (j.contains("overrides") && j["overrides"].contains("fits")) {
        const json& f = j["overrides"]["fits"];
        const std::string fp = "overrides.fits";
        const std::size_t m = sc.modes.size();
        if (f.contains("mode")) sc.ov_mode = fit_family(f["mode"], m, fp + ".mode");
        if (f.contains("mode_hat"))
            sc.ov_mode_hat = fit_family(f["mode_hat"], m, fp + ".mode_hat");
        if (f.contains("async_hat"))
            sc.ov_async_hat = fit_family(f["async_hat"], m, fp + ".async_hat");
        if (f.contains("cross")) {
            const json& cr = f["cross"];
            if (!cr.is_array() || cr.size() != m)
                fail(fp + ".cross", "expected one row per mode");
            sc.ov_cross.assign(m, std::vector<DecayFit>(m, DecayFit{0.0, 0.0}));
            for (std::size_t p = 0; p < m; ++p) {
                const std::string rp = fp + ".cross[" + std::to_string(p) + "]";
                if (!cr[p].is_array() || cr[p].size() != m)
                    fail(rp, "expected one entry per mode");
                for (std::size_t q = 0; q < m; ++q) {
                    if (p == q || cr[p][q].is_null()) continue;
                    sc.ov_cross[p][q] =
                        fit(cr[p][q], rp + "[" + std::to_string(q) + "]");
                }
            }
        }
    }

    return sc;
}

Scenario load_scenario(const std::string& path) {
    const std::filesystem::path p(path);
    const std::string dir = p.has_parent_path() ? p.parent_path().string() : ".";
    return scenario_from_json(read_file(path), p.stem().string(), dir);
}

DiscretizedModel discretize(const Scenario& sc) {
    return DiscretizedModel(SwitchedPlant(sc.modes, sc.tau_s, sc.E0), sc.grid_points,
                            static_cast<unsigned>(sc.fit_kmax));
}

FitSet scenario_fits(const Scenario& sc, const DiscretizedModel& dm) {
    FitSet f = fits_from_model(dm);
    const int m = dm.plant().num_modes();
    for (int p = 0; p < m; ++p) {
        if (!sc.ov_mode.empty()) f.mode[p] = sc.ov_mode[p];
        if (!sc.ov_mode_hat.empty()) f.mode_hat[p] = sc.ov_mode_hat[p];
        if (!sc.ov_async_hat.empty()) f.async_hat[p] = sc.ov_async_hat[p];
        if (!sc.ov_cross.empty())
            for (int q = 0; q < m; ++q)
                if (p != q && sc.ov_cross[p][q].rho > 0.0)
                    f.cross[p][q] = sc.ov_cross[p][q];
    }
    return f;
}

AttackTrace scenario_attack(const Scenario& sc, std::uint64_t seed) {
    switch (sc.attack_kind) {
    case AttackSource::none: {
        AttackTrace t;
        t.horizon = sc.horizon;
        return t;
    }
    case AttackSource::average: {
        AttackParams p;
        p.kind = AttackModel::average;
        p.avg = sc.cert.dos;
        p.burst_cap = sc.burst_cap;
        return generate_attack(p, sc.tau_s, sc.horizon, seed);
    }
    case AttackSource::intermittent: {
        AttackParams p;
        p.kind = AttackModel::intermittent;
        p.avg = sc.cert.dos;
        p.burst_cap = sc.burst_cap;
        p.n_min = sc.cert.n_min;
        p.n_max = sc.cert.n_max;
        return generate_attack(p, sc.tau_s, sc.horizon, seed);
    }
    case AttackSource::periodic:
        return periodic_attack(sc.cert.n_min, sc.cert.n_max, sc.tau_s, sc.horizon);
    case AttackSource::file:
        return attack_from_csv(read_file(resolve(sc, sc.attack_path)), sc.horizon);
    }
    throw ScenarioError("unreachable attack kind");
}

SwitchingSignal scenario_switching(const Scenario& sc, std::uint64_t seed) {
    const int m = static_cast<int>(sc.modes.size());
    const bool aligned = sc.strategy == Strategy::tracking_aligned;
    switch (sc.switch_kind) {
    case SwitchSource::none: {
        SwitchingSignal sig;
        sig.events = {{0.0, 0}};
        sig.tau_d = sc.cert.tau_d;
        sig.aligned = true;
        sig.N_max = sc.cert.N_max;
        return sig;
    }
    case SwitchSource::random:
        return generate_switching(m, sc.cert.tau_d, sc.horizon, aligned, sc.tau_s,
                                  sc.grid_points, seed);
    case SwitchSource::virtue:
        return virtue_switching(m, sc.cert.tau_d, sc.horizon, sc.tau_s);
    case SwitchSource::file: {
        SwitchingSignal sig = switching_from_csv(read_file(resolve(sc, sc.switch_path)));
        const SwitchVerdict v = validate_switching(sig, m, sc.tau_s);
        if (!v.valid) throw ScenarioError(sc.switch_path + ": " + v.reason);
        return sig;
    }
    }
    throw ScenarioError("unreachable switching kind");
}

RunOutput run_scenario(const Scenario& sc, const DiscretizedModel& dm) {
    RunOutput out;
    out.attack = scenario_attack(sc, sc.seed);
    out.switching = scenario_switching(sc, sc.seed + 1);
    const FitSet fits = scenario_fits(sc, dm);
    out.certificate = check(dm, fits, sc.strategy, sc.cert);

    SimParams par;
    par.strategy = sc.strategy;
    par.N = sc.cert.N;
    par.E0 = sc.E0;
    par.x0 = sc.x0;
    par.horizon = sc.horizon;
    par.n_min = sc.cert.n_min;
    par.n_max = sc.cert.n_max;
    par.tau_d = sc.cert.tau_d;

    std::optional<Strategy2Constants> s2;
    std::optional<Strategy3Constants> s3;
    std::optional<Strategy4Constants> s4;
    switch (sc.strategy) {
    case Strategy::active_range: {
        Strategy2Params p;
        p.N = sc.cert.N;
        p.N_max = sc.cert.N_max;
        p.n_max = sc.cert.n_max;
        p.tau_d = sc.cert.tau_d;
        p.dos = sc.cert.dos;
        s2.emplace(derive_strategy2(dm, fits, p));
        par.s2 = &*s2;
        break;
    }
    case Strategy::passive_range: {
        Strategy3Params p;
        p.N = sc.cert.N;
        p.tau_d = sc.cert.tau_d;
        p.dos = sc.cert.dos;
        s3.emplace(derive_strategy3(dm, fits, p));
        par.s3 = &*s3;
        par.fits = &fits;
        break;
    }
    case Strategy::schedule_range:
    case Strategy::trigger_range: {
        Strategy4Params p;
        p.N = sc.cert.N;
        p.n_min = sc.cert.n_min;
        p.n_max = sc.cert.n_max;
        p.tau_d = sc.cert.tau_d;
        s4.emplace(derive_strategy4(dm, fits, p));
        par.s4 = &*s4;
        break;
    }
    default:
        break;
    }

    out.result = simulate(dm, par, out.attack, out.switching);
    out.violations = replay_invariants(dm, par, out.attack, out.switching, out.result);
    return out;
}

std::string certificate_to_json(const Certificate& cert) {
    return cert_json_obj(cert).dump(2) + "\n";
}

std::string constants_to_json(const Scenario& sc, const DiscretizedModel& dm,
                              const FitSet& fits) {
    json t;
    switch (sc.strategy) {
    case Strategy::tracking: {
        Strategy1Params p;
        p.N = sc.cert.N;
        p.N_max = sc.cert.N_max;
        p.tau_d = sc.cert.tau_d;
        p.dos = sc.cert.dos;
        Strategy1Constants c = derive_strategy1(dm, fits, p);
        t = {{"Gamma_p", vec_json(c.Gamma_p)},
             {"Bd_norm", vec_json(c.Bd_norm)},
             {"nu", vec_json(c.nu)},
             {"nu_hat", vec_json(c.nu_hat)},
             {"Gamma", c.Gamma},
             {"Gamma_bar", c.Gamma_bar},
             {"Gamma_bar2", c.Gamma_bar2},
             {"gamma1", mat_json(c.gamma1)},
             {"gamma3", mat_json(c.gamma3)},
             {"mu1", mat_json(c.mu1)},
             {"mu2", mat_json(c.mu2)},
             {"mu3", mat_json(c.mu3)},
             {"a", c.a},
             {"b", c.b},
             {"b_growth", c.b_growth},
             {"dwell_floor", c.dwell_floor},
             {"conditions", conditions_json(c.conditions)},
             {"satisfied", c.satisfied}};
        break;
    }
    case Strategy::tracking_aligned: {
        Strategy1Params p;
        p.N = sc.cert.N;
        p.N_max = sc.cert.N_max;
        p.tau_d = sc.cert.tau_d;
        p.dos = sc.cert.dos;
        AlignedConstants c = derive_aligned(dm, fits, p);
        t = {{"Gamma", c.Gamma},
             {"Gamma_hat", c.Gamma_hat},
             {"rate_lhs", c.rate_lhs},
             {"dwell_floor", c.dwell_floor},
             {"conditions", conditions_json(c.conditions)},
             {"satisfied", c.satisfied}};
        break;
    }
    case Strategy::active_range: {
        Strategy2Params p;
        p.N = sc.cert.N;
        p.N_max = sc.cert.N_max;
        p.n_max = sc.cert.n_max;
        p.tau_d = sc.cert.tau_d;
        p.dos = sc.cert.dos;
        Strategy2Constants c = derive_strategy2(dm, fits, p);
        t = {{"Bd_norm", vec_json(c.Bd_norm)},
             {"Gamma_p", vec_json(c.Gamma_p)},
             {"Psi_hi", vec_json(c.Psi_hi)},
             {"Psi_lo", vec_json(c.Psi_lo)},
             {"L1", vec_json(c.L1)},
             {"L2", vec_json(c.L2)},
             {"L3", vec_json(c.L3)},
             {"L4", mat_json(c.L4)},
             {"L5", mat_json(c.L5)},
             {"L6", mat_json(c.L6)},
             {"L1_bar", c.L1_bar},
             {"L2_bar", c.L2_bar},
             {"L3_bar", c.L3_bar},
             {"L5_bar", c.L5_bar},
             {"L6_bar", c.L6_bar},
             {"range_floor", c.range_floor},
             {"rate_lhs", c.rate_lhs},
             {"dwell_floor", c.dwell_floor},
             {"conditions", conditions_json(c.conditions)},
             {"satisfied", c.satisfied}};
        break;
    }
    case Strategy::passive_range: {
        Strategy3Params p;
        p.N = sc.cert.N;
        p.tau_d = sc.cert.tau_d;
        p.dos = sc.cert.dos;
        Strategy3Constants c = derive_strategy3(dm, fits, p);
        t = {{"BdK_hat_norm", vec_json(c.BdK_hat_norm)},
             {"U1", vec_json(c.U1)},
             {"U2", vec_json(c.U2)},
             {"xi_tilde", vec_json(c.xi_tilde)},
             {"U3", mat_json(c.U3)},
             {"U4", mat_json(c.U4)},
             {"U1_bar", c.U1_bar},
             {"U2_bar", c.U2_bar},
             {"xi_bar", c.xi_bar},
             {"eta_bar", c.eta_bar},
             {"U_tilde", c.U_tilde},
             {"range_floor", c.range_floor},
             {"rate_lhs", c.rate_lhs},
             {"conditions", conditions_json(c.conditions)},
             {"satisfied", c.satisfied}};
        break;
    }
    case Strategy::schedule_range:
    case Strategy::trigger_range: {
        Strategy4Params p;
        p.N = sc.cert.N;
        p.n_min = sc.cert.n_min;
        p.n_max = sc.cert.n_max;
        p.tau_d = sc.cert.tau_d;
        Strategy4Constants c = derive_strategy4(dm, fits, p);
        t = {{"BdK_hat_norm", vec_json(c.BdK_hat_norm)},
             {"phi1", c.phi1},
             {"phi2", c.phi2},
             {"phi3", c.phi3},
             {"phi4", c.phi4},
             {"phi5", c.phi5},
             {"phi_mismatch", c.phi_mismatch},
             {"T_cal", c.T_cal},
             {"range_floor", c.range_floor},
             {"tt_rate_lhs", c.tt_rate_lhs},
             {"et_rate_lhs", c.et_rate_lhs},
             {"tt_conditions", conditions_json(c.tt_conditions)},
             {"et_conditions", conditions_json(c.et_conditions)},
             {"tt_satisfied", c.tt_satisfied},
             {"et_satisfied", c.et_satisfied}};
        break;
    }
    }
    const json root = {{"scenario", sc.name},
                       {"strategy", strategy_name(sc.strategy)},
                       {"fits", fits_json(fits)},
                       {"tables", t}};
    return root.dump(2) + "\n";
}

std::string summary_to_json(const Scenario& sc, const RunOutput& out) {
    const SimResult& r = out.result;
    const double init = sc.x0.empty() ? 0.0 : vec_inf_norm(sc.x0);
    json jv = json::array();
    for (const std::string& v : out.violations) jv.push_back(v);
    const json s = {{"scenario", sc.name},
                    {"strategy", strategy_name(sc.strategy)},
                    {"seed", sc.seed},
                    {"tau_s", sc.tau_s},
                    {"horizon", sc.horizon},
                    {"rows", r.rows.size()},
                    {"attacked", r.attacked_count},
                    {"delivered", r.delivered_count},
                    {"zoom_outs", r.zoom_count},
                    {"uniformity_violations", r.uniformity_violations},
                    {"invariant_violations", jv},
                    {"initial_norm", init},
                    {"max_norm", r.max_norm},
                    {"final_norm", r.final_norm},
                    {"contraction", init > 0.0 ? r.final_norm / init : 0.0},
                    {"final_range", r.rows.empty() ? 0.0 : r.rows.back().E},
                    {"certificate", cert_json_obj(out.certificate)}};
    return s.dump(2) + "\n";
}

std::string envelope_to_json(const EnvelopeResult& res, const std::string& freed) {
    const json j = {{"free", freed},
                    {"feasible", res.feasible},
                    {"value", res.value},
                    {"binding", res.binding},
                    {"certificate", cert_json_obj(res.at_value)}};
    return j.dump(2) + "\n";
}

namespace {

void svg_fmt(std::string& out, const char* fmt, ...) {
    char buf[160];
    va_list ap;
    va_start(ap, fmt);
    vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    out += buf;
}

} // namespace

std::string svg_plot(const std::string& title, const std::vector<Series>& series,
                     bool log_y) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};
    constexpr double left = 70, right = 840, top = 40, bottom = 390;

    struct Pt {
        double x, y;
    };
    std::vector<std::vector<Pt>> pts(series.size());
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool any = false;
    for (std::size_t i = 0; i < series.size(); ++i)
        for (const auto& [t, v] : series[i].pts) {
            if (!std::isfinite(t) || !std::isfinite(v)) continue;
            if (log_y && v <= 0.0) continue;
            const double y = log_y ? std::log10(v) : v;
            if (!std::isfinite(y)) continue;
            if (!any) {
                xmin = xmax = t;
                ymin = ymax = y;
                any = true;
            }
            xmin = std::min(xmin, t);
            xmax = std::max(xmax, t);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
            pts[i].push_back({t, y});
        }

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 860 430\" "
           "font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect width=\"860\" height=\"430\" fill=\"#ffffff\"/>\n";
    out += "<text x=\"430\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
           title + "</text>\n";
    if (!any) {
        out += "<text x=\"430\" y=\"215\" text-anchor=\"middle\">no data</text>\n</svg>\n";
        return out;
    }
    if (xmax - xmin <= 0.0) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin <= 0.0) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const auto X = [&](double t) {
        return left + (t - xmin) / (xmax - xmin) * (right - left);
    };
    const auto Y = [&](double y) {
        return bottom - (y - ymin) / (ymax - ymin) * (bottom - top);
    };

    svg_fmt(out,
            "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
            "stroke=\"#333333\"/>\n",
            left, top, right - left, bottom - top);
    svg_fmt(out, "<text x=\"%g\" y=\"412\" text-anchor=\"start\">%.4g</text>\n", left,
            xmin);
    svg_fmt(out, "<text x=\"%g\" y=\"412\" text-anchor=\"end\">%.4g</text>\n", right,
            xmax);
    const double ylo = log_y ? std::pow(10.0, ymin) : ymin;
    const double yhi = log_y ? std::pow(10.0, ymax) : ymax;
    svg_fmt(out, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.3g</text>\n", left - 6,
            bottom + 4, ylo);
    svg_fmt(out, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.3g</text>\n", left - 6,
            top + 4, yhi);

    for (std::size_t i = 0; i < series.size(); ++i) {
        if (pts[i].empty()) continue;
        const char* color = palette[i % 6];
        out += "<polyline fill=\"none\" stroke=\"";
        out += color;
        out += "\" stroke-width=\"1.5\" points=\"";
        for (const Pt& p : pts[i]) svg_fmt(out, "%.2f,%.2f ", X(p.x), Y(p.y));
        out += "\"/>\n";
        svg_fmt(out, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\" fill=\"%s\">",
                right - 8, top + 16 + 16.0 * double(i), color);
        out += series[i].label + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

std::vector<std::pair<std::string, std::string>> scenario_plots(const RunOutput& out) {
    const auto& rows = out.result.rows;
    std::vector<Series> st;
    if (!rows.empty()) {
        const std::size_t nx = rows.front().x.size();
        st.resize(nx);
        for (std::size_t d = 0; d < nx; ++d) st[d].label = "x" + std::to_string(d);
        for (const SimRow& r : rows)
            for (std::size_t d = 0; d < nx; ++d) st[d].pts.push_back({r.t, r.x[d]});
    }
    std::vector<Series> rg(2);
    rg[0].label = "range";
    rg[1].label = "state norm";
    for (const SimRow& r : rows) {
        rg[0].pts.push_back({r.t, r.E});
        rg[1].pts.push_back({r.t, vec_inf_norm(r.x)});
    }
    return {{"state", svg_plot("state components", st, false)},
            {"range", svg_plot("quantizer range and state norm", rg, true)}};
}

} // namespace resilq
