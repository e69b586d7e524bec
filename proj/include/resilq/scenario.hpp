// Scenario files: one JSON document describing plant, strategy, attack, and
// switching, plus the emitters that turn a finished run into its artifacts
// (trace CSV, summary/certificate JSON, SVG plots).
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "resilq/cert.hpp"
#include "resilq/sim.hpp"

namespace resilq {

struct ScenarioError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class AttackSource { none, average, intermittent, periodic, file };
enum class SwitchSource { none, random, virtue, file };

struct Scenario {
    std::string name;     // stem of the file, used in reports
    std::string base_dir; // directory the file came from; anchors relative paths

    std::vector<Mode> modes;
    double tau_s = 0.0;
    double E0 = 1.0;
    int grid_points = 1001;
    int fit_kmax = 1000;

    Strategy strategy = Strategy::tracking;
    CertParams cert; // n_min/n_max double as the calendar phases of the no-ACK codecs

    AttackSource attack_kind = AttackSource::none;
    int burst_cap = 0; // cap on sampled periods per burst, 0 = none
    std::string attack_path;

    SwitchSource switch_kind = SwitchSource::none;
    std::string switch_path;

    Vec x0;
    double horizon = 10.0;
    std::uint64_t seed = 1;

    // Decay-fit overrides; an empty family falls back to the self-derived fit.
    std::vector<DecayFit> ov_mode, ov_mode_hat, ov_async_hat;
    std::vector<std::vector<DecayFit>> ov_cross; // diagonal entries unused
};

// Parses and validates; error messages carry the JSON path of the offending
// field. `name` seeds Scenario::name, `base_dir` the relative-path anchor.
Scenario scenario_from_json(const std::string& text, const std::string& name,
                            const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

DiscretizedModel discretize(const Scenario& sc);
FitSet scenario_fits(const Scenario& sc, const DiscretizedModel& dm);

// The attack trace draws from the given seed, the switching signal from its
// successor, so one recorded scenario seed pins both streams.
AttackTrace scenario_attack(const Scenario& sc, std::uint64_t seed);
SwitchingSignal scenario_switching(const Scenario& sc, std::uint64_t seed);

struct RunOutput {
    AttackTrace attack;
    SwitchingSignal switching;
    Certificate certificate;
    SimResult result;
    std::vector<std::string> violations; // replay findings, empty = clean
};

RunOutput run_scenario(const Scenario& sc, const DiscretizedModel& dm);

std::string certificate_to_json(const Certificate& cert);
std::string constants_to_json(const Scenario& sc, const DiscretizedModel& dm,
                              const FitSet& fits);
std::string summary_to_json(const Scenario& sc, const RunOutput& out);
std::string envelope_to_json(const EnvelopeResult& res, const std::string& freed);

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> pts;
};

// Minimal self-contained line plot; log scale drops non-positive values.
std::string svg_plot(const std::string& title, const std::vector<Series>& series,
                     bool log_y);

// name -> document: "state" (components, linear) and "range" (envelope and
// state norm, log scale).
std::vector<std::pair<std::string, std::string>> scenario_plots(const RunOutput& out);

} // namespace resilq
