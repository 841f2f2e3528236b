#pragma once

// Monte Carlo unraveling of sequential channels into measurement
// trajectories: polarization statistics, histograms, trajectory
// classification and per-class observable curves.
//
// Determinism contract: every trajectory owns a Philox stream keyed by
// (master_seed, index) and ensemble aggregation is an ordered reduction, so
// results are bit-identical at any thread count.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metachan/models.hpp"
#include "metachan/rng.hpp"

namespace metachan {

inline constexpr unsigned long long kDefaultStepBudget = 1ull << 33;

struct ObservableSpec {
    enum class Kind { Expectation, FidelityTarget };
    Kind kind = Kind::Expectation;
    std::string name;
    Operator op;  // Hermitian observable, or the reference state for fidelity

    static ObservableSpec expectation(std::string name, Operator op) {
        return {Kind::Expectation, std::move(name), std::move(op)};
    }
    static ObservableSpec fidelity_target(std::string name, Operator state) {
        return {Kind::FidelityTarget, std::move(name), std::move(state)};
    }
};

struct TrajectoryRecord {
    std::vector<std::uint8_t> outcomes;  // kept only when requested
    double polarization = 0.0;           // X = (m0 - m1) / (2m) over the full record
    std::vector<double> x_snapshots;     // X after each round in x_rounds
    std::vector<std::vector<double>> observables;  // [checkpoint][observable]
    Operator final_state;
};

struct EnsembleSpec {
    Operator rho0;
    long m_max = 1;
    int n_samples = 1;
    std::vector<long> checkpoints;  // rounds at which observables are recorded
    std::vector<long> x_rounds;     // rounds at which X snapshots are recorded
    std::vector<ObservableSpec> observables;
    std::uint64_t master_seed = 1;
    int threads = 0;  // 0 = hardware concurrency
    bool keep_outcomes = false;
    unsigned long long step_budget = kDefaultStepBudget;
};

struct EnsembleResult {
    std::vector<TrajectoryRecord> records;
    std::vector<Operator> mean_state_per_checkpoint;
    std::uint64_t rng_seed = 0;
    EnsembleSpec params;
};

/// One conditional trajectory of m rounds driven by the given stream.
TrajectoryRecord sample_trajectory(const ConditionalMaps& maps, const Operator& rho0, long m,
                                   PhiloxStream& rng, const std::vector<long>& checkpoints = {},
                                   const std::vector<ObservableSpec>& observables = {},
                                   const std::vector<long>& x_rounds = {},
                                   bool keep_outcomes = true);

EnsembleResult run_ensemble(const ConditionalMaps& maps, const EnsembleSpec& spec);

struct Histogram {
    std::vector<double> bin_edges;  // uniform over [-1/2, 1/2], size counts+1
    std::vector<long> counts;
    long m = 0;  // last round entering X
};

/// Histogram of X over an inclusive 1-based round window (default: the full
/// record). The effective bin count never exceeds the window length, so a bin
/// is at least one X quantum (1/m) wide.
Histogram polarization_histogram(const EnsembleResult& ens, int bins,
                                 std::optional<std::pair<long, long>> window = {});

/// Smoothed-local-maxima peak detection: 3-bin moving average (window
/// truncated at the edges), runs of equal values count once, prominence
/// >= `prominence` of the total count.
std::vector<int> histogram_peaks(const Histogram& hist, double prominence = 0.05);

double bin_center(const Histogram& hist, int index);

struct ClassCurves {
    std::vector<std::pair<double, double>> intervals;  // class X ranges
    std::vector<long> population;
    std::vector<long> rounds;  // = ensemble checkpoints
    // mean[class][checkpoint][observable]; NaN for empty classes
    std::vector<std::vector<std::vector<double>>> mean;
};

/// Split trajectories by full-record X using the given interval boundaries
/// (must start at -1/2, end at 1/2, strictly increase). A record exactly on
/// an inner boundary joins the interval on the zero side.
ClassCurves classify_and_average(const EnsembleResult& ens, const std::vector<double>& thresholds);

}  // namespace metachan
