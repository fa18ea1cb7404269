#include "photonsim/error_models.hpp"

#include <cmath>
#include <future>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

namespace photonsim::errors {

void ErrorParams::validate() const {
    if (sigma < 0.0 || sigma > 1.0) throw std::invalid_argument("sigma must lie in [0, 1]");
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("p must lie in [0, 1)");
    if (delta < 0.0) throw std::invalid_argument("delta must be non-negative");
}

std::uint64_t split_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> indices) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed ^ 0x2545f4914f6cdd1dULL);
    for (std::uint64_t idx : indices) h = mix(h ^ mix(idx));
    return h;
}

namespace {

ModelPrediction predict_with_config(const device::DeviceConfig& config, device::GraphStateKind kind,
                                    const device::SimOptions& opts) {
    auto group = graph::generators_from_graph(device::state_graph(kind));
    ModelPrediction pred;
    pred.expectations.assign(group.size(), 1.0);
    for (std::size_t mask = 1; mask < group.size(); ++mask) {
        const auto& el = group.elements[mask];
        device::OutcomeDistribution dist = device::measure_setting(config, opts, el);
        pred.truncated = pred.truncated || dist.truncated;
        pred.setting_probs[el.setting()] = dist.raw;
        double num = 0.0, den = 0.0;
        for (int j = 0; j < 16; ++j) {
            num += graph::outcome_eigenvalue(el, static_cast<unsigned>(j)) * dist.raw[j];
            den += dist.raw[j];
        }
        if (den <= 0.0) throw std::runtime_error("zero postselected probability for setting " + el.setting());
        pred.expectations[mask] = el.sign * num / den;
    }
    pred.fidelity = graph::fidelity(pred.expectations).value;
    return pred;
}

}  // namespace

ModelPrediction predict_distinguishability(device::GraphStateKind kind, double sigma) {
    ErrorParams{sigma, 0.0, 0.0}.validate();
    device::DeviceConfig cfg = device::ideal_config(device::rpeg_for(kind));
    device::set_sigma(cfg, sigma);
    return predict_with_config(cfg, kind, device::SimOptions{});
}

ModelPrediction predict_multiphoton(device::GraphStateKind kind, double p, int cutoff) {
    ErrorParams{1.0, p, 0.0}.validate();
    device::SimOptions opts;
    opts.max_pairs_per_source = 2;
    opts.threshold = true;
    opts.cutoff = cutoff;
    if (opts.effective_cutoff() < 6) throw std::invalid_argument("multiphoton model needs a cutoff of at least 6 photons");
    device::DeviceConfig cfg = device::ideal_config(device::rpeg_for(kind), p, opts.max_pairs_per_source);

    // Emission patterns: the four one-pair-per-Bell-source patterns make up
    // the coherent working sector; every other pattern is a separate
    // incoherent contamination branch (their mutual coherence is not
    // maintained by multimode pair sources).
    std::vector<device::FockState> branches;
    device::FockState good(device::kPhysicalModes, 1, opts.effective_cutoff());
    const int max_total = opts.effective_cutoff() / 2;
    std::array<int, 4> n{};
    for (n[0] = 0; n[0] <= opts.max_pairs_per_source; ++n[0])
        for (n[1] = 0; n[1] <= opts.max_pairs_per_source; ++n[1])
            for (n[2] = 0; n[2] <= opts.max_pairs_per_source; ++n[2])
                for (n[3] = 0; n[3] <= opts.max_pairs_per_source; ++n[3]) {
                    int total = n[0] + n[1] + n[2] + n[3];
                    if (total < 2 || total > max_total) continue;  // fewer than two pairs cannot make a fourfold
                    device::FockState term = device::emission_pattern_state(cfg, n, opts);
                    bool bell_sector = total == 2 && n[0] + n[1] == 1;
                    if (bell_sector) {
                        for (const auto& [occ, amp] : term.amplitudes()) good.add_amplitude(occ, amp);
                    } else {
                        branches.push_back(std::move(term));
                    }
                }
    branches.push_back(std::move(good));

    auto group = graph::generators_from_graph(device::state_graph(kind));
    ModelPrediction pred;
    pred.expectations.assign(group.size(), 1.0);
    for (std::size_t mask = 1; mask < group.size(); ++mask) {
        const auto& el = group.elements[mask];
        std::array<double, 16> probs{};
        bool truncated = false;
        for (const auto& branch : branches) {
            device::OutcomeDistribution dist = device::measure_setting_state(branch, cfg, opts, el);
            truncated = truncated || dist.truncated;
            for (int j = 0; j < 16; ++j) probs[j] += dist.raw[j];
        }
        pred.truncated = pred.truncated || truncated;
        pred.setting_probs[el.setting()] = probs;
        double num = 0.0, den = 0.0;
        for (int j = 0; j < 16; ++j) {
            num += graph::outcome_eigenvalue(el, static_cast<unsigned>(j)) * probs[j];
            den += probs[j];
        }
        if (den <= 0.0) throw std::runtime_error("zero postselected probability for setting " + el.setting());
        pred.expectations[mask] = el.sign * num / den;
    }
    pred.fidelity = graph::fidelity(pred.expectations).value;
    return pred;
}

ModelPrediction predict_phase_error(device::GraphStateKind kind, double delta, int n_samples,
                                    std::uint64_t seed) {
    ErrorParams{1.0, 0.0, delta}.validate();
    if (n_samples < 1) throw std::invalid_argument("need at least one Monte Carlo sample");

    auto group = graph::generators_from_graph(device::state_graph(kind));
    const device::DeviceConfig base = device::ideal_config(device::rpeg_for(kind));
    const device::SimOptions opts;

    ModelPrediction pred;
    pred.expectations.assign(group.size(), 1.0);

    for (std::size_t mask = 1; mask < group.size(); ++mask) {
        const auto& el = group.elements[mask];
        // per-sample probabilities, filled in parallel but reduced in
        // sample order so the result is independent of the thread count
        std::vector<std::array<double, 16>> per_sample(n_samples);

        auto worker = [&](int lo, int hi) {
            for (int s = lo; s < hi; ++s) {
                std::array<double, 16> row{};
                for (int outcome = 0; outcome < 16; ++outcome) {
                    device::DeviceConfig cfg = base;
                    std::mt19937_64 rng(split_seed(seed, {mask, static_cast<std::uint64_t>(s),
                                                          static_cast<std::uint64_t>(outcome)}));
                    std::normal_distribution<double> normal(0.0, delta);
                    for (int site = 0; site < device::kPhaseSiteCount; ++site)
                        cfg.phase_offsets[site] += normal(rng);
                    device::OutcomeDistribution dist = device::measure_setting(cfg, opts, el);
                    row[outcome] = dist.raw[outcome];
                }
                per_sample[s] = row;
            }
        };

        unsigned n_threads = std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
        if (n_samples < 64) n_threads = 1;
        std::vector<std::future<void>> futures;
        int chunk = (n_samples + static_cast<int>(n_threads) - 1) / static_cast<int>(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) {
            int lo = static_cast<int>(t) * chunk;
            int hi = std::min(n_samples, lo + chunk);
            if (lo >= hi) break;
            futures.push_back(std::async(std::launch::async, worker, lo, hi));
        }
        for (auto& f : futures) f.get();

        std::array<double, 16> mean{};
        for (int s = 0; s < n_samples; ++s)
            for (int j = 0; j < 16; ++j) mean[j] += per_sample[s][j];
        for (int j = 0; j < 16; ++j) mean[j] /= static_cast<double>(n_samples);

        pred.setting_probs[el.setting()] = mean;
        double num = 0.0, den = 0.0;
        for (int j = 0; j < 16; ++j) {
            num += graph::outcome_eigenvalue(el, static_cast<unsigned>(j)) * mean[j];
            den += mean[j];
        }
        if (den <= 0.0) throw std::runtime_error("zero postselected probability for setting " + el.setting());
        pred.expectations[mask] = el.sign * num / den;
    }
    pred.fidelity = graph::fidelity(pred.expectations).value;
    return pred;
}

G2Result purity_from_g2(double g2_zero) {
    if (g2_zero < 1.0 || g2_zero > 2.0)
        throw std::invalid_argument("g2(0) must lie in [1, 2] for a thermal marginal");
    return {g2_zero, g2_zero - 1.0};
}

void write_expectation_grid_csv(std::ostream& os, const std::string& parameter_name,
                                const std::vector<double>& parameters,
                                const std::vector<ModelPrediction>& predictions,
                                const graph::StabilizerGroup& group) {
    if (parameters.size() != predictions.size()) throw std::invalid_argument("grid size mismatch");
    os << parameter_name << ",stabilizer_label,expectation\n";
    for (std::size_t i = 0; i < parameters.size(); ++i) {
        for (std::size_t mask = 0; mask < group.size(); ++mask) {
            os << parameters[i] << ',' << group.elements[mask].to_string() << ','
               << predictions[i].expectations[mask] << '\n';
        }
    }
}

void write_fidelity_grid_csv(std::ostream& os, const std::string& parameter_name,
                             const std::vector<double>& parameters,
                             const std::vector<ModelPrediction>& predictions) {
    if (parameters.size() != predictions.size()) throw std::invalid_argument("grid size mismatch");
    os << parameter_name << ",fidelity\n";
    for (std::size_t i = 0; i < parameters.size(); ++i)
        os << parameters[i] << ',' << predictions[i].fidelity << '\n';
}

}  // namespace photonsim::errors
