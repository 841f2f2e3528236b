#pragma once

// Experiment configuration: a schema-versioned JSON tree declaring a model
// and run parameters, plus the realization of that model into conditional
// maps and channels.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "metachan/models.hpp"
#include "metachan/trajectory.hpp"

namespace metachan {

/// Operator given either by name (sigma_x, sigma_y, sigma_z, sigma_plus,
/// sigma_minus, identity, zero -- all 2x2) or as an explicit row-major
/// [re, im] matrix.
struct OperatorSpec {
    std::string name;  // empty when an explicit matrix is given
    Operator matrix;

    Operator realize() const;
};

struct SingleQubitModel {
    OperatorSpec b{"sigma_z", {}};
    OperatorSpec c{"sigma_x", {}};
    double gamma = 0.0;
    double delta_phi = 1.5707963267948966;
    double t = 1.0;
};

struct JumpSpec {
    OperatorSpec op;
    double rate = 0.0;  // 1/ms
};

struct SpinBathModel {
    std::vector<SpinSite> spins;
    double larmor_khz = 0.0;
    bool include_zeeman = false;
    double gyromagnetic_mhz_per_t = 10.7084;
    double delta_phi = 1.5707963267948966;
    double t_ms = 1.0;
};

struct DdModel {
    std::vector<SpinSite> spins;
    double delta_omega_khz = 0.0;
    double delta_phi = 1.5707963267948966;
    double t_ms = 1.0;
};

struct GammaScan {
    double from = 0.0;
    double to = 0.0;
    int steps = 0;
};

struct RunParams {
    int samples = 10000;
    std::vector<long> rounds;
    std::vector<long> checkpoints;
    int bins = 81;
    std::uint64_t seed = 1;
    std::vector<double> thresholds{-0.5, -0.15, 0.15, 0.5};
    double eps_unit = 1e-10;
    std::optional<int> truncation_l;
    std::string rho0 = "maximally_mixed";  // or "ground"
    std::optional<Operator> rho0_matrix;
    std::string observables = "sigma_z";  // "sigma_z" | "fidelity_b_eigenstates" | "none"
    std::optional<std::pair<long, long>> x_window;
    unsigned long long step_budget = kDefaultStepBudget;
    bool emit_trajectories = false;
};

struct ExperimentConfig {
    int schema = 1;
    std::string model;  // single_qubit | spin_bath | dd_effective | dissipative | kraus
    std::string output = "out";
    SingleQubitModel single_qubit;
    std::vector<JumpSpec> jumps;  // dissipative model only
    SpinBathModel spin_bath;
    DdModel dd_effective;
    std::vector<Operator> kraus_operators;  // kraus model only
    std::optional<GammaScan> gamma_scan;    // spectrum command only
    RunParams run;
};

nlohmann::json operator_to_json(const Operator& op);
Operator operator_from_json(const nlohmann::json& j);

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// A config realized into operators and maps ready for analysis.
struct BuiltModel {
    Eigen::Index dim = 0;
    Operator b;
    Operator c;
    double gamma = 0.0;
    double t = 1.0;
    SuperOp average_natural;                // M-hat_0 + M-hat_1
    std::optional<QuantumChannel> channel;  // present for Kraus-backed models
    std::optional<ConditionalMaps> maps;    // absent for the raw-kraus model
    std::vector<Operator> b_eigenprojectors;
};

BuiltModel build_model(const ExperimentConfig& cfg);

/// Initial state named in the run parameters.
Operator initial_state(const ExperimentConfig& cfg, Eigen::Index dim);

/// Observable set named in the run parameters.
std::vector<ObservableSpec> observable_set(const ExperimentConfig& cfg, const BuiltModel& model);

}  // namespace metachan
