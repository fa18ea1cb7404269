#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "photonsim/graph.hpp"

namespace photonsim::bayes {

/// Discretized parameter axis, strictly increasing.
struct ParameterGrid {
    std::vector<double> values;
    std::string model_tag;

    void validate() const;
    std::size_t size() const { return values.size(); }
};

ParameterGrid make_grid(double lo, double hi, double step, std::string tag);
ParameterGrid default_sigma_grid();  // [0.5, 1.0] step 0.005
ParameterGrid default_p_grid();      // [0, 0.10] step 0.001
ParameterGrid default_delta_grid();  // [0, 0.5] rad step 0.005

/// Per-setting fourfold outcome probabilities, as produced by the error
/// models (raw, normalized per setting before use).
using SettingProbs = std::map<std::string, std::array<double, 16>>;
using ModelFn = std::function<SettingProbs(double)>;

inline constexpr double kProbabilityFloor = 1e-12;

struct LikelihoodResult {
    std::vector<double> log_likelihoods;
    /// Set when a model probability of zero met a nonzero observed count
    /// and was floored instead of sending the log-likelihood to -inf.
    bool floored = false;
};

/// log L(theta_k) = sum_i log P(x_i | theta_k, pi_i) with P the multinomial
/// likelihood of each setting's observed outcome counts under the model's
/// normalized outcome distribution. Constant terms independent of theta are
/// dropped. Settings present in the data but absent from the model throw.
LikelihoodResult log_likelihoods(const ModelFn& model, const ParameterGrid& grid,
                                 const graph::CountsTable& data);

/// Same quantity with the model's outcome probabilities replaced by
/// frequencies over n_sim simulated datasets per setting (the sampling
/// estimator of the likelihood; noisier but assumption-free).
LikelihoodResult log_likelihoods_sampled(const ModelFn& model, const ParameterGrid& grid,
                                         const graph::CountsTable& data, int n_sim_per_setting,
                                         std::uint64_t seed);

struct GaussianFit {
    double mean = 0.0;
    double std_dev = 0.0;
    bool converged = false;
};

/// Least-squares normal fit over the grid (weighted parabola in log
/// probability; exact on a sampled Gaussian). Degenerate posteriors are
/// flagged and fall back to the raw moments.
GaussianFit gaussian_summary(const std::vector<double>& grid_values,
                             const std::vector<double>& probabilities);

struct Posterior {
    ParameterGrid grid;
    std::vector<double> probabilities;  // normalized to 1
    GaussianFit gaussian;
    double raw_mean = 0.0;
    double raw_std = 0.0;
    bool degenerate = false;

    void write_csv(std::ostream& os) const;
};

/// Bayes's rule over the grid with a log-sum-exp normalization. The prior
/// defaults to uniform; a non-null prior must match the grid size.
Posterior posterior(const ParameterGrid& grid, const std::vector<double>& log_likelihoods,
                    const std::vector<double>* prior = nullptr);

}  // namespace photonsim::bayes
