#include "metachan/config.hpp"

#include <cmath>
#include <fstream>

namespace metachan {

using nlohmann::json;

namespace {

Operator named_operator(const std::string& name) {
    if (name == "sigma_x") return pauli_x();
    if (name == "sigma_y") return pauli_y();
    if (name == "sigma_z") return pauli_z();
    if (name == "identity") return identity(2);
    if (name == "zero") return Operator::Zero(2, 2);
    if (name == "sigma_minus") {  // |1><0|: relaxation that takes |0> into |1>
        Operator s = Operator::Zero(2, 2);
        s(1, 0) = 1.0;
        return s;
    }
    if (name == "sigma_plus") {
        Operator s = Operator::Zero(2, 2);
        s(0, 1) = 1.0;
        return s;
    }
    throw ConfigError("unknown operator name: " + name);
}

OperatorSpec operator_spec_from_json(const json& j) {
    if (j.is_string()) return {j.get<std::string>(), {}};
    return {"", operator_from_json(j)};
}

json operator_spec_to_json(const OperatorSpec& spec) {
    if (!spec.name.empty()) return spec.name;
    return operator_to_json(spec.matrix);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<T>();
}

Eigen::Vector3d vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v(0), v(1), v(2)}); }

std::vector<SpinSite> spins_from_json(const json& j, bool need_positions) {
    std::vector<SpinSite> out;
    for (const auto& s : j) {
        SpinSite site;
        site.hyperfine_khz = vec3_from_json(s.at("hyperfine_khz"));
        if (s.contains("position_nm"))
            site.position_nm = vec3_from_json(s.at("position_nm"));
        else if (need_positions)
            throw ConfigError("spin_bath spins need position_nm");
        out.push_back(site);
    }
    if (out.empty()) throw ConfigError("model needs at least one spin");
    return out;
}

json spins_to_json(const std::vector<SpinSite>& spins) {
    json out = json::array();
    for (const auto& s : spins)
        out.push_back({{"hyperfine_khz", vec3_to_json(s.hyperfine_khz)},
                       {"position_nm", vec3_to_json(s.position_nm)}});
    return out;
}

}  // namespace

Operator OperatorSpec::realize() const {
    if (!name.empty()) return named_operator(name);
    if (matrix.size() == 0) throw ConfigError("empty operator specification");
    return matrix;
}

json operator_to_json(const Operator& op) {
    json data = json::array();
    for (Eigen::Index i = 0; i < op.rows(); ++i)
        for (Eigen::Index j = 0; j < op.cols(); ++j)
            data.push_back(json::array({op(i, j).real(), op(i, j).imag()}));
    return {{"dim", op.rows()}, {"data", data}};
}

Operator operator_from_json(const json& j) {
    if (!j.contains("dim") || !j.contains("data"))
        throw ConfigError("matrix spec needs 'dim' and 'data'");
    const auto d = j.at("dim").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (d < 1 || static_cast<Eigen::Index>(data.size()) != d * d)
        throw ConfigError("matrix data length must be dim^2");
    Operator op(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index k = 0; k < d; ++k) {
            const auto& cell = data[i * d + k];
            op(i, k) = Complex(cell[0].get<double>(), cell[1].get<double>());
        }
    return op;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.schema = get_or<int>(j, "schema", 1);
    if (cfg.schema != 1) throw ConfigError("unsupported schema version");
    if (!j.contains("model")) throw ConfigError("config needs a 'model'");
    cfg.model = j.at("model").get<std::string>();
    cfg.output = get_or<std::string>(j, "output", "out");

    if (cfg.model == "single_qubit" || cfg.model == "dissipative") {
        const auto& m = j.at(cfg.model);
        cfg.single_qubit.b = operator_spec_from_json(m.at("b"));
        cfg.single_qubit.c = operator_spec_from_json(m.at("c"));
        cfg.single_qubit.gamma = get_or<double>(m, "gamma", 0.0);
        cfg.single_qubit.delta_phi = get_or<double>(m, "delta_phi", 1.5707963267948966);
        cfg.single_qubit.t = get_or<double>(m, "t", 1.0);
        if (cfg.model == "dissipative") {
            for (const auto& jm : m.at("jumps"))
                cfg.jumps.push_back(
                    {operator_spec_from_json(jm.at("op")), jm.at("rate").get<double>()});
        }
    } else if (cfg.model == "spin_bath") {
        const auto& m = j.at("spin_bath");
        cfg.spin_bath.spins = spins_from_json(m.at("spins"), true);
        cfg.spin_bath.larmor_khz = get_or<double>(m, "larmor_khz", 0.0);
        cfg.spin_bath.include_zeeman = get_or<bool>(m, "include_zeeman", false);
        cfg.spin_bath.gyromagnetic_mhz_per_t = get_or<double>(m, "gyromagnetic_mhz_per_t", 10.7084);
        cfg.spin_bath.delta_phi = get_or<double>(m, "delta_phi", 1.5707963267948966);
        cfg.spin_bath.t_ms = get_or<double>(m, "t_ms", 1.0);
    } else if (cfg.model == "dd_effective") {
        const auto& m = j.at("dd_effective");
        cfg.dd_effective.spins = spins_from_json(m.at("spins"), false);
        cfg.dd_effective.delta_omega_khz = get_or<double>(m, "delta_omega_khz", 0.0);
        cfg.dd_effective.delta_phi = get_or<double>(m, "delta_phi", 1.5707963267948966);
        cfg.dd_effective.t_ms = get_or<double>(m, "t_ms", 1.0);
    } else if (cfg.model == "kraus") {
        for (const auto& km : j.at("kraus").at("operators"))
            cfg.kraus_operators.push_back(operator_from_json(km));
        if (cfg.kraus_operators.empty()) throw ConfigError("kraus model needs operators");
    } else {
        throw ConfigError("unknown model: " + cfg.model);
    }

    if (j.contains("gamma_scan") && !j.at("gamma_scan").is_null()) {
        const auto& g = j.at("gamma_scan");
        GammaScan scan{g.at("from").get<double>(), g.at("to").get<double>(),
                       g.at("steps").get<int>()};
        if (scan.steps < 2) throw ConfigError("gamma_scan needs at least 2 steps");
        if (cfg.model != "single_qubit") throw ConfigError("gamma_scan is single_qubit only");
        cfg.gamma_scan = scan;
    }

    if (j.contains("run")) {
        const auto& r = j.at("run");
        cfg.run.samples = get_or<int>(r, "samples", 10000);
        cfg.run.rounds = get_or<std::vector<long>>(r, "rounds", {});
        cfg.run.checkpoints = get_or<std::vector<long>>(r, "checkpoints", {});
        cfg.run.bins = get_or<int>(r, "bins", 81);
        cfg.run.seed = get_or<std::uint64_t>(r, "seed", 1);
        cfg.run.thresholds =
            get_or<std::vector<double>>(r, "thresholds", {-0.5, -0.15, 0.15, 0.5});
        cfg.run.eps_unit = get_or<double>(r, "eps_unit", 1e-10);
        if (r.contains("l") && !r.at("l").is_null())
            cfg.run.truncation_l = r.at("l").get<int>();
        if (r.contains("rho0") && r.at("rho0").is_object())
            cfg.run.rho0_matrix = operator_from_json(r.at("rho0"));
        else
            cfg.run.rho0 = get_or<std::string>(r, "rho0", "maximally_mixed");
        cfg.run.observables = get_or<std::string>(r, "observables", "sigma_z");
        if (r.contains("x_window") && !r.at("x_window").is_null()) {
            const auto& w = r.at("x_window");
            cfg.run.x_window = std::make_pair(w[0].get<long>(), w[1].get<long>());
        }
        cfg.run.step_budget =
            get_or<unsigned long long>(r, "step_budget", kDefaultStepBudget);
        cfg.run.emit_trajectories = get_or<bool>(r, "emit_trajectories", false);
    }

    if (cfg.run.samples < 1) throw ConfigError("run.samples must be positive");
    for (std::size_t i = 1; i < cfg.run.rounds.size(); ++i)
        if (cfg.run.rounds[i] <= cfg.run.rounds[i - 1])
            throw ConfigError("run.rounds must be strictly increasing");
    for (const long r : cfg.run.rounds)
        if (r < 1) throw ConfigError("run.rounds must be positive");
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema"] = cfg.schema;
    j["model"] = cfg.model;
    j["output"] = cfg.output;

    if (cfg.model == "single_qubit" || cfg.model == "dissipative") {
        json m;
        m["b"] = operator_spec_to_json(cfg.single_qubit.b);
        m["c"] = operator_spec_to_json(cfg.single_qubit.c);
        m["gamma"] = cfg.single_qubit.gamma;
        m["delta_phi"] = cfg.single_qubit.delta_phi;
        m["t"] = cfg.single_qubit.t;
        if (cfg.model == "dissipative") {
            json jumps = json::array();
            for (const auto& jm : cfg.jumps)
                jumps.push_back({{"op", operator_spec_to_json(jm.op)}, {"rate", jm.rate}});
            m["jumps"] = jumps;
        }
        j[cfg.model] = m;
    } else if (cfg.model == "spin_bath") {
        j["spin_bath"] = {{"spins", spins_to_json(cfg.spin_bath.spins)},
                          {"larmor_khz", cfg.spin_bath.larmor_khz},
                          {"include_zeeman", cfg.spin_bath.include_zeeman},
                          {"gyromagnetic_mhz_per_t", cfg.spin_bath.gyromagnetic_mhz_per_t},
                          {"delta_phi", cfg.spin_bath.delta_phi},
                          {"t_ms", cfg.spin_bath.t_ms}};
    } else if (cfg.model == "dd_effective") {
        json spins = json::array();
        for (const auto& s : cfg.dd_effective.spins)
            spins.push_back({{"hyperfine_khz", vec3_to_json(s.hyperfine_khz)}});
        j["dd_effective"] = {{"spins", spins},
                             {"delta_omega_khz", cfg.dd_effective.delta_omega_khz},
                             {"delta_phi", cfg.dd_effective.delta_phi},
                             {"t_ms", cfg.dd_effective.t_ms}};
    } else if (cfg.model == "kraus") {
        json ops = json::array();
        for (const auto& k : cfg.kraus_operators) ops.push_back(operator_to_json(k));
        j["kraus"] = {{"operators", ops}};
    }

    if (cfg.gamma_scan)
        j["gamma_scan"] = {{"from", cfg.gamma_scan->from},
                           {"to", cfg.gamma_scan->to},
                           {"steps", cfg.gamma_scan->steps}};

    json r;
    r["samples"] = cfg.run.samples;
    r["rounds"] = cfg.run.rounds;
    r["checkpoints"] = cfg.run.checkpoints;
    r["bins"] = cfg.run.bins;
    r["seed"] = cfg.run.seed;
    r["thresholds"] = cfg.run.thresholds;
    r["eps_unit"] = cfg.run.eps_unit;
    if (cfg.run.truncation_l) r["l"] = *cfg.run.truncation_l;
    if (cfg.run.rho0_matrix)
        r["rho0"] = operator_to_json(*cfg.run.rho0_matrix);
    else
        r["rho0"] = cfg.run.rho0;
    r["observables"] = cfg.run.observables;
    if (cfg.run.x_window)
        r["x_window"] = json::array({cfg.run.x_window->first, cfg.run.x_window->second});
    r["step_budget"] = cfg.run.step_budget;
    r["emit_trajectories"] = cfg.run.emit_trajectories;
    j["run"] = r;
    return j;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return config_to_json(a) == config_to_json(b);
}

BuiltModel build_model(const ExperimentConfig& cfg) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    BuiltModel model;
    try {
        if (cfg.model == "single_qubit" || cfg.model == "dissipative") {
            RimSpec spec{cfg.single_qubit.b.realize(), cfg.single_qubit.c.realize(),
                         cfg.single_qubit.gamma, cfg.single_qubit.delta_phi, cfg.single_qubit.t};
            model.b = spec.b;
            model.c = spec.c;
            model.gamma = spec.gamma;
            model.t = spec.t;
            model.dim = spec.b.rows();
            if (cfg.model == "dissipative") {
                LindbladSpec diss;
                for (const auto& jm : cfg.jumps) diss.jumps.emplace_back(jm.op.realize(), jm.rate);
                model.maps = dissipative_rim_maps(spec, diss);
                model.average_natural = model.maps->sum();
            } else {
                RimChannel rim = rim_channel(spec);
                model.average_natural = rim.channel.natural();
                model.channel = std::move(rim.channel);
                model.maps = std::move(rim.maps);
            }
        } else if (cfg.model == "spin_bath" || cfg.model == "dd_effective") {
            SpinSystem sys;
            double delta_phi, t;
            Operator b, c;
            if (cfg.model == "spin_bath") {
                sys.sites = cfg.spin_bath.spins;
                sys.larmor_khz = cfg.spin_bath.larmor_khz;
                sys.gyromagnetic_mhz_per_t = cfg.spin_bath.gyromagnetic_mhz_per_t;
                auto h = spin_bath_hamiltonians(sys, cfg.spin_bath.include_zeeman);
                b = std::move(h.b);
                c = std::move(h.c);
                delta_phi = cfg.spin_bath.delta_phi;
                t = cfg.spin_bath.t_ms;
            } else {
                sys.sites = cfg.dd_effective.spins;
                auto h = dd_effective_hamiltonians(sys, two_pi * cfg.dd_effective.delta_omega_khz);
                b = std::move(h.b);
                c = std::move(h.c);
                delta_phi = cfg.dd_effective.delta_phi;
                t = cfg.dd_effective.t_ms;
            }
            RimSpec spec{std::move(b), std::move(c), 1.0, delta_phi, t};
            model.b = spec.b;
            model.c = spec.c;
            model.gamma = 1.0;
            model.t = t;
            model.dim = sys.dim();
            RimChannel rim = rim_channel(spec);
            model.average_natural = rim.channel.natural();
            model.channel = std::move(rim.channel);
            model.maps = std::move(rim.maps);
        } else if (cfg.model == "kraus") {
            QuantumChannel ch = QuantumChannel::from_kraus_unchecked(cfg.kraus_operators);
            model.dim = ch.dim();
            model.b = Operator::Zero(model.dim, model.dim);
            model.c = model.b;
            model.average_natural = ch.natural();
            model.channel = std::move(ch);
        } else {
            throw ConfigError("unknown model: " + cfg.model);
        }
    } catch (const DimensionError& e) {
        throw ConfigError(std::string("model realization failed: ") + e.what());
    }

    if (model.b.size() > 0 && max_abs(model.b) > 0) {
        Eigen::SelfAdjointEigenSolver<Operator> es(model.b);
        for (Eigen::Index i = 0; i < model.dim; ++i)
            model.b_eigenprojectors.push_back(es.eigenvectors().col(i) *
                                              es.eigenvectors().col(i).adjoint());
    }
    return model;
}

Operator initial_state(const ExperimentConfig& cfg, Eigen::Index dim) {
    if (cfg.run.rho0_matrix) {
        if (cfg.run.rho0_matrix->rows() != dim)
            throw ConfigError("rho0 matrix dimension does not match the model");
        return *cfg.run.rho0_matrix;
    }
    if (cfg.run.rho0 == "maximally_mixed") return identity(dim) / double(dim);
    if (cfg.run.rho0 == "ground") return basis_projector(0, dim);
    throw ConfigError("unknown rho0: " + cfg.run.rho0);
}

std::vector<ObservableSpec> observable_set(const ExperimentConfig& cfg, const BuiltModel& model) {
    if (cfg.run.observables == "none") return {};
    if (cfg.run.observables == "sigma_z") {
        if (model.dim != 2) throw ConfigError("observables=sigma_z needs a qubit target");
        return {ObservableSpec::expectation("sigma_z", pauli_z())};
    }
    if (cfg.run.observables == "fidelity_b_eigenstates") {
        std::vector<ObservableSpec> out;
        for (std::size_t i = 0; i < model.b_eigenprojectors.size(); ++i)
            out.push_back(ObservableSpec::fidelity_target("F" + std::to_string(i + 1),
                                                          model.b_eigenprojectors[i]));
        if (out.empty()) throw ConfigError("fidelity observables need a nonzero B");
        return out;
    }
    throw ConfigError("unknown observable set: " + cfg.run.observables);
}

}  // namespace metachan
