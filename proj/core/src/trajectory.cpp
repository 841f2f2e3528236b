#include "metachan/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace metachan {

namespace {

double trace_of_vec(const HsVector& v, Eigen::Index d) {
    Complex tr = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) tr += v(i * d + i);
    return tr.real();
}

double evaluate_observable(const ObservableSpec& obs, const Operator& rho) {
    if (obs.kind == ObservableSpec::Kind::Expectation)
        return (obs.op * rho).trace().real();
    return fidelity(rho, obs.op);
}

int effective_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

namespace {

TrajectoryRecord sample_impl(const ConditionalMaps& maps, const Operator& rho0, long m,
                             PhiloxStream& rng, const std::vector<long>& checkpoints,
                             const std::vector<ObservableSpec>& observables,
                             const std::vector<long>& x_rounds, bool keep_outcomes,
                             std::vector<Operator>* checkpoint_states) {
    const Eigen::Index d = maps.dim;
    if (rho0.rows() != d || rho0.cols() != d)
        throw DimensionError("sample_trajectory: state dimension mismatch");
    if (m < 1) throw PreconditionError("sample_trajectory: at least one round");
    if (!is_psd(rho0, 1e-8) || std::abs(rho0.trace().real() - 1.0) > 1e-8)
        throw PreconditionError("sample_trajectory: rho0 must be a unit-trace PSD state");

    TrajectoryRecord rec;
    if (keep_outcomes) rec.outcomes.reserve(m);
    rec.x_snapshots.reserve(x_rounds.size());
    rec.observables.reserve(checkpoints.size());

    HsVector state = vectorize(rho0);
    HsVector branch0(d * d), branch1(d * d);
    std::size_t next_cp = 0, next_x = 0;
    long m0 = 0;

    // Checkpoints at round 0 record the initial state.
    while (next_cp < checkpoints.size() && checkpoints[next_cp] == 0) {
        std::vector<double> vals;
        vals.reserve(observables.size());
        for (const auto& obs : observables) vals.push_back(evaluate_observable(obs, rho0));
        rec.observables.push_back(std::move(vals));
        if (checkpoint_states) checkpoint_states->push_back(rho0);
        ++next_cp;
    }

    for (long round = 1; round <= m; ++round) {
        branch0.noalias() = maps.maps[0] * state;
        branch1.noalias() = maps.maps[1] * state;
        double p0 = trace_of_vec(branch0, d);
        double p1 = trace_of_vec(branch1, d);
        if (std::abs(p0 + p1 - 1.0) > 1e-8)
            throw NumericalError("sample_trajectory: branch probabilities sum to " +
                                 std::to_string(p0 + p1) + " (invalid conditional maps)");
        if (p0 < -1e-12 || p1 < -1e-12)
            throw NumericalError("sample_trajectory: negative branch probability");
        p0 = std::clamp(p0, 0.0, 1.0);
        p1 = std::clamp(p1, 0.0, 1.0);
        const double norm = p0 + p1;
        p0 /= norm;

        const int outcome = rng.next_double() < p0 ? 0 : 1;
        const double p = outcome == 0 ? p0 : 1.0 - p0;
        state = (outcome == 0 ? branch0 : branch1) / std::max(p * norm, 1e-300);
        if (outcome == 0) ++m0;
        if (keep_outcomes) rec.outcomes.push_back(static_cast<std::uint8_t>(outcome));

        while (next_x < x_rounds.size() && x_rounds[next_x] == round) {
            rec.x_snapshots.push_back((2.0 * m0 - round) / (2.0 * round));
            ++next_x;
        }
        if (next_cp < checkpoints.size() && checkpoints[next_cp] == round) {
            Operator rho = devectorize(state);
            rho = ((rho + rho.adjoint()) / 2.0).eval();
            std::vector<double> vals;
            vals.reserve(observables.size());
            for (const auto& obs : observables) vals.push_back(evaluate_observable(obs, rho));
            rec.observables.push_back(std::move(vals));
            if (checkpoint_states) checkpoint_states->push_back(std::move(rho));
            ++next_cp;
        }
    }

    rec.polarization = (2.0 * m0 - m) / (2.0 * m);
    Operator rho = devectorize(state);
    rec.final_state = ((rho + rho.adjoint()) / 2.0).eval();
    return rec;
}

}  // namespace

TrajectoryRecord sample_trajectory(const ConditionalMaps& maps, const Operator& rho0, long m,
                                   PhiloxStream& rng, const std::vector<long>& checkpoints,
                                   const std::vector<ObservableSpec>& observables,
                                   const std::vector<long>& x_rounds, bool keep_outcomes) {
    std::vector<long> cps = checkpoints;
    std::sort(cps.begin(), cps.end());
    std::vector<long> xr = x_rounds;
    std::sort(xr.begin(), xr.end());
    return sample_impl(maps, rho0, m, rng, cps, observables, xr, keep_outcomes, nullptr);
}

EnsembleResult run_ensemble(const ConditionalMaps& maps, const EnsembleSpec& spec) {
    if (spec.n_samples < 1) throw PreconditionError("run_ensemble: need at least one sample");
    const unsigned long long steps =
        static_cast<unsigned long long>(spec.n_samples) *
        static_cast<unsigned long long>(spec.m_max);
    if (steps > spec.step_budget)
        throw BudgetError("run_ensemble: " + std::to_string(steps) +
                          " steps exceed the budget of " + std::to_string(spec.step_budget));

    std::vector<long> checkpoints = spec.checkpoints;
    std::sort(checkpoints.begin(), checkpoints.end());
    std::vector<long> x_rounds = spec.x_rounds;
    std::sort(x_rounds.begin(), x_rounds.end());

    EnsembleResult result;
    result.rng_seed = spec.master_seed;
    result.params = spec;
    result.records.resize(spec.n_samples);

    // Per-trajectory conditional states at each checkpoint, accumulated into a
    // fixed number of index blocks so the reduction order is independent of
    // the thread count.
    const int n_blocks = 64;
    const Eigen::Index d = maps.dim;
    std::vector<std::vector<Operator>> block_sums(
        n_blocks, std::vector<Operator>(checkpoints.size(), Operator::Zero(d, d)));

    const int n_threads = std::min(effective_threads(spec.threads), spec.n_samples);
    const auto worker = [&](int block) {
        const int lo = static_cast<int>(std::int64_t(block) * spec.n_samples / n_blocks);
        const int hi = static_cast<int>(std::int64_t(block + 1) * spec.n_samples / n_blocks);
        std::vector<Operator> states;
        for (int idx = lo; idx < hi; ++idx) {
            PhiloxStream rng(spec.master_seed, static_cast<std::uint64_t>(idx));
            states.clear();
            result.records[idx] =
                sample_impl(maps, spec.rho0, spec.m_max, rng, checkpoints, spec.observables,
                            x_rounds, spec.keep_outcomes, &states);
            for (std::size_t cp = 0; cp < states.size(); ++cp)
                block_sums[block][cp] += states[cp];
        }
    };

    if (n_threads <= 1) {
        for (int block = 0; block < n_blocks; ++block) worker(block);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next_block{0};
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                for (int block = next_block.fetch_add(1); block < n_blocks;
                     block = next_block.fetch_add(1))
                    worker(block);
            });
        for (auto& th : pool) th.join();
    }

    // Block partial sums are accumulated in index order and combined in block
    // order, so the mean is bit-identical at any thread count.
    result.mean_state_per_checkpoint.assign(checkpoints.size(), Operator::Zero(d, d));
    for (std::size_t cp = 0; cp < checkpoints.size(); ++cp) {
        for (int block = 0; block < n_blocks; ++block)
            result.mean_state_per_checkpoint[cp] += block_sums[block][cp];
        result.mean_state_per_checkpoint[cp] /= double(spec.n_samples);
    }
    result.params.checkpoints = checkpoints;
    result.params.x_rounds = x_rounds;
    return result;
}

Histogram polarization_histogram(const EnsembleResult& ens, int bins,
                                 std::optional<std::pair<long, long>> window) {
    if (bins < 2) throw PreconditionError("polarization_histogram: need at least 2 bins");
    const long m_max = ens.params.m_max;
    const long start = window ? window->first : 1;
    const long end = window ? window->second : m_max;
    if (start < 1 || end > m_max || end < start)
        throw PreconditionError("polarization_histogram: empty or out-of-range window");
    const long length = end - start + 1;

    std::vector<double> xs;
    xs.reserve(ens.records.size());
    if (!window || (start == 1 && end == m_max)) {
        for (const auto& rec : ens.records) xs.push_back(rec.polarization);
    } else if (start == 1) {
        // A prefix window [1, end] matches an X snapshot when one was taken.
        const auto& rounds = ens.params.x_rounds;
        const auto it = std::find(rounds.begin(), rounds.end(), end);
        if (it != rounds.end()) {
            const auto k = static_cast<std::size_t>(it - rounds.begin());
            for (const auto& rec : ens.records) xs.push_back(rec.x_snapshots[k]);
        }
    }
    if (xs.empty()) {
        for (const auto& rec : ens.records) {
            if (static_cast<long>(rec.outcomes.size()) < end)
                throw PreconditionError(
                    "polarization_histogram: windowed X needs stored outcomes");
            long m0 = 0;
            for (long r = start; r <= end; ++r) m0 += rec.outcomes[r - 1] == 0 ? 1 : 0;
            xs.push_back((2.0 * m0 - length) / (2.0 * length));
        }
    }

    const int bins_used = static_cast<int>(std::min<long>(bins, std::max<long>(length, 2)));
    Histogram hist;
    hist.m = end;
    hist.counts.assign(bins_used, 0);
    hist.bin_edges.resize(bins_used + 1);
    for (int i = 0; i <= bins_used; ++i) hist.bin_edges[i] = -0.5 + double(i) / bins_used;
    for (const double x : xs) {
        int idx = static_cast<int>(std::floor((x + 0.5) * bins_used));
        idx = std::clamp(idx, 0, bins_used - 1);
        ++hist.counts[idx];
    }
    return hist;
}

std::vector<int> histogram_peaks(const Histogram& hist, double prominence) {
    const int n = static_cast<int>(hist.counts.size());
    long total = 0;
    for (const long c : hist.counts) total += c;
    std::vector<double> smooth(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = hist.counts[i];
        int span = 1;
        if (i > 0) {
            s += hist.counts[i - 1];
            ++span;
        }
        if (i + 1 < n) {
            s += hist.counts[i + 1];
            ++span;
        }
        smooth[i] = s / span;  // truncated window at the edges
    }

    std::vector<int> peaks;
    const double floor_value = prominence * double(total);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && smooth[j + 1] == smooth[i]) ++j;
        const double left = i > 0 ? smooth[i - 1] : 0.0;
        const double right = j + 1 < n ? smooth[j + 1] : 0.0;
        if (smooth[i] > left && smooth[i] > right && smooth[i] >= floor_value)
            peaks.push_back((i + j) / 2);
        i = j + 1;
    }
    return peaks;
}

double bin_center(const Histogram& hist, int index) {
    return (hist.bin_edges[index] + hist.bin_edges[index + 1]) / 2.0;
}

ClassCurves classify_and_average(const EnsembleResult& ens,
                                 const std::vector<double>& thresholds) {
    if (thresholds.size() < 2 || std::abs(thresholds.front() + 0.5) > 1e-12 ||
        std::abs(thresholds.back() - 0.5) > 1e-12)
        throw PreconditionError("classify_and_average: boundaries must span [-1/2, 1/2]");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (thresholds[i] <= thresholds[i - 1])
            throw PreconditionError("classify_and_average: boundaries must strictly increase");

    const int n_classes = static_cast<int>(thresholds.size()) - 1;
    const std::size_t checkpoints_count =
        ens.records.empty() ? 0 : ens.records.front().observables.size();
    const std::size_t n_obs = ens.params.observables.size();

    ClassCurves out;
    for (int k = 0; k < n_classes; ++k) out.intervals.emplace_back(thresholds[k], thresholds[k + 1]);
    out.population.assign(n_classes, 0);
    out.rounds = ens.params.checkpoints;
    std::sort(out.rounds.begin(), out.rounds.end());
    out.mean.assign(n_classes, std::vector<std::vector<double>>(
                                   checkpoints_count, std::vector<double>(n_obs, 0.0)));

    const auto classify = [&](double x) {
        for (int k = 0; k < n_classes; ++k) {
            const double lo = thresholds[k], hi = thresholds[k + 1];
            if (x == lo) {
                // Exact boundary: join the interval on the zero side.
                if (k == 0) return 0;
                return lo < 0 ? k : k - 1;
            }
            if (x > lo && x < hi) return k;
        }
        return n_classes - 1;  // x == +1/2
    };

    for (const auto& rec : ens.records) {
        const int k = classify(rec.polarization);
        ++out.population[k];
        for (std::size_t cp = 0; cp < rec.observables.size(); ++cp)
            for (std::size_t o = 0; o < rec.observables[cp].size(); ++o)
                out.mean[k][cp][o] += rec.observables[cp][o];
    }
    for (int k = 0; k < n_classes; ++k)
        for (auto& per_cp : out.mean[k])
            for (auto& v : per_cp)
                v = out.population[k] > 0 ? v / out.population[k]
                                          : std::numeric_limits<double>::quiet_NaN();
    return out;
}

}  // namespace metachan
