#include "metachan/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "metachan/metastable.hpp"
#include "metachan/spectral.hpp"
#include "metachan/version.hpp"

namespace metachan {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num17(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

/// Staged output directory: files accumulate in memory, land as <name>.tmp,
/// and are renamed into place only when the whole command succeeded.
class OutputStage {
  public:
    explicit OutputStage(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content) {
        files_.emplace_back(name, std::move(content));
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [name, content] : files_) out.push_back(name);
        return out;
    }

    void commit() {
        fs::create_directories(dir_);
        std::vector<fs::path> temps;
        try {
            for (const auto& [name, content] : files_) {
                const fs::path tmp = dir_ / (name + ".tmp");
                std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                if (!out) throw NumericalError("cannot write " + tmp.string());
                out << content;
                out.close();
                temps.push_back(tmp);
            }
            for (std::size_t i = 0; i < files_.size(); ++i)
                fs::rename(temps[i], dir_ / files_[i].first);
        } catch (...) {
            for (const auto& tmp : temps) {
                std::error_code ec;
                fs::remove(tmp, ec);
            }
            throw;
        }
    }

  private:
    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

ExperimentConfig apply_overrides(ExperimentConfig cfg, const CommandOptions& opt) {
    if (opt.seed) cfg.run.seed = *opt.seed;
    if (opt.out_dir) cfg.output = *opt.out_dir;
    if (opt.emit_trajectories) cfg.run.emit_trajectories = *opt.emit_trajectories;
    return cfg;
}

json region_entry(double gamma, const SpectrumClassification& cls) {
    json entry;
    entry["gamma"] = gamma;
    entry["n"] = cls.n_unit;
    switch (cls.status) {
        case RegionStatus::Found: {
            entry["status"] = "found";
            entry["l"] = cls.region->l;
            entry["mu_prime"] = cls.region->mu_prime;
            entry["mu_double_prime"] = cls.region->mu_double_prime;
            entry["gap_ratio"] = cls.region->gap_ratio;
            break;
        }
        case RegionStatus::NoDecayingEigenvalue:
            entry["status"] = "absent_no_decaying_eigenvalue";
            break;
        case RegionStatus::NoAdmissibleGap:
            entry["status"] = "absent_no_admissible_gap";
            break;
    }
    return entry;
}

const char* class_name(PointKind kind) {
    switch (kind) {
        case PointKind::Fixed: return "fixed";
        case PointKind::Rotating: return "rotating";
        case PointKind::Metastable: return "metastable";
        case PointKind::Decaying: return "decaying";
    }
    return "?";
}

void append_spectrum_block(std::string& csv, double gamma, const SpectralData& sd,
                           const SpectrumClassification& cls) {
    for (Eigen::Index i = 0; i < sd.size(); ++i) {
        const Complex lam = sd.eigenvalues(i);
        csv += num17(gamma) + "," + std::to_string(i + 1) + "," + num17(lam.real()) + "," +
               num17(lam.imag()) + "," + num17(std::abs(lam)) + "," +
               class_name(cls.classes[i].kind) + "\n";
    }
}

json manifest_json(const ExperimentConfig& cfg, const std::string& command,
                   const std::vector<std::string>& files, const std::string& started) {
    json m;
    m["schema"] = 1;
    m["tool"] = "metachan";
    m["version"] = kVersion;
    m["command"] = command;
    m["config_hash"] =
        hex64(fnv1a64(config_to_json(cfg).dump() + "|" + std::to_string(cfg.run.seed)));
    m["started_utc"] = started;
    m["finished_utc"] = utc_now();
    m["files"] = files;
    return m;
}

std::string gnuplot_header(const std::string& title) {
    return "set terminal pngcairo size 900,600\nset grid\nset title '" + title + "'\n";
}

SpectralData decompose_checked(const BuiltModel& model) {
    SpectralData sd = spectral_decompose(model.average_natural);
    if (!sd.diagonalizable)
        throw PreconditionError(
            "channel flagged non-diagonalizable (eigenvector condition number " +
            std::to_string(sd.cond_eigvec) + ")");
    return sd;
}

struct SimulationArtifacts {
    EnsembleResult ensemble;
    std::vector<long> rounds;
};

SimulationArtifacts run_simulation(const ExperimentConfig& cfg, const BuiltModel& model,
                                   const CommandOptions& opt) {
    if (!model.maps) throw PreconditionError("model provides no conditional maps to sample");
    if (cfg.run.rounds.empty()) throw ConfigError("simulate needs run.rounds");

    EnsembleSpec spec;
    spec.rho0 = initial_state(cfg, model.dim);
    spec.m_max = cfg.run.rounds.back();
    spec.n_samples = cfg.run.samples;
    spec.checkpoints = cfg.run.checkpoints;
    spec.x_rounds = cfg.run.rounds;
    spec.observables = observable_set(cfg, model);
    spec.master_seed = cfg.run.seed;
    spec.threads = opt.threads;
    spec.keep_outcomes = cfg.run.emit_trajectories || cfg.run.x_window.has_value();
    spec.step_budget = cfg.run.step_budget;

    return {run_ensemble(*model.maps, spec), cfg.run.rounds};
}

std::string histogram_csv(const Histogram& hist) {
    std::string csv = "bin_left,bin_right,bin_center,count\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i)
        csv += num17(hist.bin_edges[i]) + "," + num17(hist.bin_edges[i + 1]) + "," +
               num17((hist.bin_edges[i] + hist.bin_edges[i + 1]) / 2.0) + "," +
               std::to_string(hist.counts[i]) + "\n";
    return csv;
}

std::string rle_outcomes(const std::vector<std::uint8_t>& outcomes) {
    std::string out;
    std::size_t i = 0;
    while (i < outcomes.size()) {
        std::size_t j = i;
        while (j + 1 < outcomes.size() && outcomes[j + 1] == outcomes[i]) ++j;
        if (!out.empty()) out += ",";
        out += std::to_string(int(outcomes[i])) + ":" + std::to_string(j - i + 1);
        i = j + 1;
    }
    return out;
}

}  // namespace

int cmd_spectrum(const ExperimentConfig& raw_cfg, const CommandOptions& opt) {
    const ExperimentConfig cfg = apply_overrides(raw_cfg, opt);
    OutputStage stage(cfg.output);

    std::string csv = "gamma,index,re,im,modulus,class\n";
    json region;
    if (cfg.gamma_scan) {
        json entries = json::array();
        const GammaScan scan = *cfg.gamma_scan;
        for (int s = 0; s < scan.steps; ++s) {
            const double gamma =
                scan.from + (scan.to - scan.from) * double(s) / double(scan.steps - 1);
            ExperimentConfig step = cfg;
            step.single_qubit.gamma = gamma;
            const BuiltModel model = build_model(step);
            const SpectralData sd = decompose_checked(model);
            const SpectrumClassification cls =
                classify_spectrum(sd, cfg.run.eps_unit, cfg.run.truncation_l);
            append_spectrum_block(csv, gamma, sd, cls);
            csv += "\n";  // gnuplot block separator
            entries.push_back(region_entry(gamma, cls));
        }
        region["scan"] = entries;
    } else {
        const BuiltModel model = build_model(cfg);
        const SpectralData sd = decompose_checked(model);
        const SpectrumClassification cls =
            classify_spectrum(sd, cfg.run.eps_unit, cfg.run.truncation_l);
        append_spectrum_block(csv, model.gamma, sd, cls);
        region = region_entry(model.gamma, cls);
    }
    region["schema"] = 1;

    stage.add("spectrum.csv", csv);
    stage.add("region.json", region.dump(2) + "\n");
    stage.add("plot_spectrum.gp",
              gnuplot_header("channel spectrum") +
                  "set output 'spectrum.png'\nset datafile separator ','\n"
                  "set size ratio -1\nset xlabel 'Re'\nset ylabel 'Im'\n"
                  "set parametric\nset trange [0:2*pi]\n"
                  "plot cos(t),sin(t) w l lc 'gray' notitle, "
                  "'spectrum.csv' every ::1 u 3:4 w p pt 7 title 'eigenvalues'\n");

    const std::string started = utc_now();
    auto files = stage.names();
    files.push_back("manifest.json");
    stage.add("manifest.json", manifest_json(cfg, "spectrum", files, started).dump(2) + "\n");
    stage.commit();
    return 0;
}

int cmd_ems(const ExperimentConfig& raw_cfg, const CommandOptions& opt) {
    const ExperimentConfig cfg = apply_overrides(raw_cfg, opt);
    OutputStage stage(cfg.output);

    const BuiltModel model = build_model(cfg);
    const SpectralData sd = decompose_checked(model);
    const SpectrumClassification cls =
        classify_spectrum(sd, cfg.run.eps_unit, cfg.run.truncation_l);
    if (cls.status != RegionStatus::Found)
        throw PreconditionError("no metastable region detected and no l override given");

    json out;
    out["schema"] = 1;
    out["region"] = region_entry(model.gamma, cls);
    if (model.dim == 2) {
        const MetastableManifold mm = ems_qubit(sd);
        out["approximate"] = false;
        out["h"] = mm.h;
        out["c2_max"] = mm.c2_max;
        out["c2_min"] = mm.c2_min;
        out["dual_min_eigenvalue"] = mm.dual_min_eigenvalue;
        json states = json::array(), duals = json::array(), purity = json::array();
        for (const auto& rho : mm.ems) {
            states.push_back(operator_to_json(rho));
            purity.push_back((rho * rho).trace().real());
        }
        for (const auto& p : mm.duals) duals.push_back(operator_to_json(p));
        out["states"] = states;
        out["duals"] = duals;
        out["purity"] = purity;
    } else {
        if (!model.channel)
            throw PreconditionError("midpoint EMS candidates need a Kraus-backed channel");
        const auto candidates = ems_candidates(*model.channel, *cls.region,
                                               model.b_eigenprojectors);
        out["approximate"] = true;
        out["m_star"] = std::llround(
            std::sqrt(cls.region->mu_prime * cls.region->mu_double_prime));
        json states = json::array(), purity = json::array();
        for (const auto& rho : candidates) {
            states.push_back(operator_to_json(rho));
            purity.push_back((rho * rho).trace().real());
        }
        out["states"] = states;
        out["purity"] = purity;
    }

    stage.add("ems.json", out.dump(2) + "\n");
    const std::string started = utc_now();
    auto files = stage.names();
    files.push_back("manifest.json");
    stage.add("manifest.json", manifest_json(cfg, "ems", files, started).dump(2) + "\n");
    stage.commit();
    return 0;
}

int cmd_simulate(const ExperimentConfig& raw_cfg, const CommandOptions& opt) {
    const ExperimentConfig cfg = apply_overrides(raw_cfg, opt);
    OutputStage stage(cfg.output);

    const BuiltModel model = build_model(cfg);
    SimulationArtifacts sim = run_simulation(cfg, model, opt);
    const EnsembleResult& ens = sim.ensemble;

    std::string hist_list;
    for (const long m : sim.rounds) {
        const Histogram hist = polarization_histogram(ens, cfg.run.bins, {{1, m}});
        const std::string name = "histogram_m" + std::to_string(m) + ".csv";
        stage.add(name, histogram_csv(hist));
        hist_list += "  '" + name + "' u 3:4 w boxes title 'm=" + std::to_string(m) + "', \\\n";
    }
    if (cfg.run.x_window) {
        const Histogram hist = polarization_histogram(ens, cfg.run.bins, cfg.run.x_window);
        stage.add("histogram_window.csv", histogram_csv(hist));
    }

    if (!cfg.run.checkpoints.empty() && !ens.params.observables.empty()) {
        const ClassCurves curves = classify_and_average(ens, cfg.run.thresholds);
        std::string csv = "round,class,class_lo,class_hi,population,observable,mean\n";
        for (std::size_t k = 0; k < curves.intervals.size(); ++k)
            for (std::size_t cp = 0; cp < curves.rounds.size(); ++cp)
                for (std::size_t o = 0; o < ens.params.observables.size(); ++o)
                    csv += std::to_string(curves.rounds[cp]) + "," + std::to_string(k) + "," +
                           num17(curves.intervals[k].first) + "," +
                           num17(curves.intervals[k].second) + "," +
                           std::to_string(curves.population[k]) + "," +
                           ens.params.observables[o].name + "," +
                           num17(curves.mean[k][cp][o]) + "\n";
        stage.add("class_means.csv", csv);
        stage.add("plot_class_means.gp",
                  gnuplot_header("per-class observable means") +
                      "set output 'class_means.png'\nset datafile separator ','\n"
                      "set logscale x\nset xlabel 'round m'\nset ylabel 'mean'\n"
                      "plot 'class_means.csv' every ::1 u 1:7 w lp title 'class means'\n");
    }

    if (cfg.run.emit_trajectories) {
        std::string jsonl;
        for (std::size_t i = 0; i < ens.records.size(); ++i) {
            const auto& rec = ens.records[i];
            json line;
            line["index"] = i;
            line["x"] = rec.polarization;
            line["outcomes_rle"] = rle_outcomes(rec.outcomes);
            line["observables"] = rec.observables;
            jsonl += line.dump() + "\n";
        }
        stage.add("trajectories.jsonl", jsonl);
    }

    if (!hist_list.empty()) {
        stage.add("plot_histograms.gp",
                  gnuplot_header("measurement polarization statistics") +
                      "set output 'histograms.png'\nset datafile separator ','\n"
                      "set style fill solid 0.6\nset xlabel 'X'\nset ylabel 'count'\n"
                      "plot \\\n" + hist_list + "  1/0 notitle\n");
    }

    const std::string started = utc_now();
    auto files = stage.names();
    files.push_back("manifest.json");
    stage.add("manifest.json", manifest_json(cfg, "simulate", files, started).dump(2) + "\n");
    stage.commit();
    return 0;
}

int cmd_validate(const ExperimentConfig& raw_cfg, const CommandOptions& opt) {
    const ExperimentConfig cfg = apply_overrides(raw_cfg, opt);
    OutputStage stage(cfg.output);

    const BuiltModel model = build_model(cfg);
    json out;
    out["schema"] = 1;
    std::vector<std::string> offenders;

    const ValidityReport report = model.channel ? validate(*model.channel)
                                                : validate_natural(model.average_natural,
                                                                   model.dim);
    out["trace_preserving"] = report.trace_preserving;
    out["tp_residual"] = report.tp_residual;
    out["completely_positive"] = report.completely_positive;
    out["choi_min_eigenvalue"] = report.choi_min_eigenvalue;
    out["unital"] = report.unital;
    out["unitality_residual"] = report.unitality_residual;
    if (!report.trace_preserving) offenders.push_back("trace_preserving");
    if (!report.completely_positive) offenders.push_back("completely_positive");
    // Unitality is a theorem only for the closed-system RIM family; target
    // relaxation and injected Kraus sets may legitimately break it.
    const bool unital_expected =
        cfg.model == "single_qubit" || cfg.model == "spin_bath" || cfg.model == "dd_effective";
    if (unital_expected && !report.unital) offenders.push_back("unital");

    if (model.maps) {
        double branch_residual =
            (model.maps->sum().adjoint() * vectorize(identity(model.dim)) -
             vectorize(identity(model.dim)))
                .cwiseAbs()
                .maxCoeff();
        out["branch_completeness_residual"] = branch_residual;
        if (branch_residual > 1e-10) offenders.push_back("branch_completeness");
        json cp = json::array();
        for (const auto& m : model.maps->maps) {
            const Operator choi = choi_from_natural(m, model.dim);
            Eigen::SelfAdjointEigenSolver<Operator> es(((choi + choi.adjoint()) / 2.0).eval(),
                                                       Eigen::EigenvaluesOnly);
            cp.push_back(es.eigenvalues().minCoeff());
            if (es.eigenvalues().minCoeff() < -1e-10)
                offenders.push_back("conditional_map_cp");
        }
        out["conditional_choi_min_eigenvalues"] = cp;
    }

    const SpectralData sd = spectral_decompose(model.average_natural);
    out["diagonalizable"] = sd.diagonalizable;
    out["cond_eigvec"] = sd.cond_eigvec;
    if (sd.diagonalizable) {
        const Eigen::MatrixXcd gram = sd.left.adjoint() * sd.right;
        const double biorth =
            max_abs(gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols()));
        out["biorthonormality_residual"] = biorth;
        if (biorth > 1e-8) offenders.push_back("biorthonormality");
    }

    if (model.channel && report.unital && sd.diagonalizable) {
        double commutation = 0.0;
        const FixedPointStructure fps = fixed_point_space(sd, *model.channel);
        for (const auto& rho : fps.basis)
            for (const auto& m : model.channel->kraus())
                commutation = std::max(commutation, max_abs(commutator(rho, m)));
        out["fixed_point_commutation_residual"] = commutation;
        if (commutation > 1e-8) offenders.push_back("fixed_point_commutation");
    }

    out["offenders"] = offenders;
    out["ok"] = offenders.empty();
    stage.add("validity.json", out.dump(2) + "\n");
    const std::string started = utc_now();
    auto files = stage.names();
    files.push_back("manifest.json");
    stage.add("manifest.json", manifest_json(cfg, "validate", files, started).dump(2) + "\n");
    stage.commit();
    return offenders.empty() ? 0 : 4;
}

int run_command(const std::string& command, const std::string& config_path,
                const CommandOptions& opt) {
    std::string phase = "config";
    try {
        const ExperimentConfig cfg = load_config_file(config_path);
        phase = "analysis";
        if (command == "spectrum") return cmd_spectrum(cfg, opt);
        if (command == "ems") return cmd_ems(cfg, opt);
        if (command == "simulate") return cmd_simulate(cfg, opt);
        if (command == "validate") return cmd_validate(cfg, opt);
        std::fprintf(stderr, "metachan: unknown command '%s'\n", command.c_str());
        return 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "metachan: config error: %s\n", e.what());
        return 1;
    } catch (const BudgetError& e) {
        std::fprintf(stderr, "metachan: budget exceeded: %s\n", e.what());
        return 3;
    } catch (const PreconditionError& e) {
        std::fprintf(stderr, "metachan: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "metachan: %s failure: %s\n", phase.c_str(), e.what());
        return 2;
    }
}

}  // namespace metachan
