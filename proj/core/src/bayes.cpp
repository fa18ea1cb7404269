#include "photonsim/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace photonsim::bayes {

void ParameterGrid::validate() const {
    if (values.empty()) throw std::invalid_argument("empty parameter grid");
    for (std::size_t k = 1; k < values.size(); ++k)
        if (values[k] <= values[k - 1]) throw std::invalid_argument("grid values must be strictly increasing");
}

ParameterGrid make_grid(double lo, double hi, double step, std::string tag) {
    if (step <= 0.0 || hi < lo) throw std::invalid_argument("bad grid bounds");
    ParameterGrid g;
    g.model_tag = std::move(tag);
    for (double v = lo; v <= hi + 0.5 * step; v += step) g.values.push_back(std::min(v, hi));
    if (g.values.size() >= 2 && g.values.back() == g.values[g.values.size() - 2]) g.values.pop_back();
    g.validate();
    return g;
}

ParameterGrid default_sigma_grid() { return make_grid(0.5, 1.0, 0.005, "sigma"); }
ParameterGrid default_p_grid() { return make_grid(0.0, 0.10, 0.001, "p"); }
ParameterGrid default_delta_grid() { return make_grid(0.0, 0.5, 0.005, "delta"); }

namespace {

double setting_log_likelihood(const std::array<double, 16>& model_probs,
                              const std::vector<std::int64_t>& counts, bool& floored) {
    double total_model = 0.0;
    for (double q : model_probs) total_model += q;
    if (total_model <= 0.0) throw std::invalid_argument("model distribution is empty for a measured setting");
    double ll = 0.0;
    for (int j = 0; j < 16; ++j) {
        if (counts[j] == 0) continue;
        double q = model_probs[j] / total_model;
        if (q < kProbabilityFloor) {
            q = kProbabilityFloor;
            floored = true;
        }
        ll += static_cast<double>(counts[j]) * std::log(q);
    }
    return ll;
}

}  // namespace

LikelihoodResult log_likelihoods(const ModelFn& model, const ParameterGrid& grid,
                                 const graph::CountsTable& data) {
    grid.validate();
    auto settings = data.settings();
    if (settings.empty()) throw std::invalid_argument("counts table is empty");

    LikelihoodResult res;
    res.log_likelihoods.reserve(grid.size());
    for (double value : grid.values) {
        SettingProbs probs = model(value);
        double ll = 0.0;
        for (const auto& setting : settings) {
            auto it = probs.find(setting);
            if (it == probs.end())
                throw std::invalid_argument("model provides no distribution for setting " + setting);
            ll += setting_log_likelihood(it->second, data.outcome_vector(setting, 4), res.floored);
        }
        res.log_likelihoods.push_back(ll);
    }
    return res;
}

LikelihoodResult log_likelihoods_sampled(const ModelFn& model, const ParameterGrid& grid,
                                         const graph::CountsTable& data, int n_sim_per_setting,
                                         std::uint64_t seed) {
    grid.validate();
    if (n_sim_per_setting < 1) throw std::invalid_argument("need at least one simulated dataset");
    auto settings = data.settings();
    if (settings.empty()) throw std::invalid_argument("counts table is empty");

    std::mt19937_64 rng(seed);
    LikelihoodResult res;
    res.log_likelihoods.reserve(grid.size());
    for (double value : grid.values) {
        SettingProbs probs = model(value);
        double ll = 0.0;
        for (const auto& setting : settings) {
            auto it = probs.find(setting);
            if (it == probs.end())
                throw std::invalid_argument("model provides no distribution for setting " + setting);
            // frequency estimate of the outcome distribution from simulated draws
            std::array<double, 16> freq{};
            std::discrete_distribution<int> draw(it->second.begin(), it->second.end());
            for (int s = 0; s < n_sim_per_setting; ++s) freq[draw(rng)] += 1.0;
            for (auto& f : freq) f /= static_cast<double>(n_sim_per_setting);
            ll += setting_log_likelihood(freq, data.outcome_vector(setting, 4), res.floored);
        }
        res.log_likelihoods.push_back(ll);
    }
    return res;
}

GaussianFit gaussian_summary(const std::vector<double>& grid_values,
                             const std::vector<double>& probabilities) {
    if (grid_values.size() != probabilities.size()) throw std::invalid_argument("size mismatch");
    if (grid_values.size() < 3) throw std::invalid_argument("need at least three grid points to fit");

    double peak = *std::max_element(probabilities.begin(), probabilities.end());
    if (peak <= 0.0) throw std::invalid_argument("probabilities are all zero");

    // weighted least squares of log p against a parabola; weights p^2 make
    // this the Gauss-Newton step of the direct nonlinear fit
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k < grid_values.size(); ++k) {
        double p = probabilities[k];
        if (p < peak * 1e-8) continue;
        double x = grid_values[k];
        double w = p * p;
        double logp = std::log(p);
        Eigen::Vector3d row(1.0, x, x * x);
        m += w * row * row.transpose();
        rhs += w * logp * row;
    }
    Eigen::Vector3d sol = m.ldlt().solve(rhs);
    double c2 = sol(2);
    GaussianFit fit;
    if (c2 < -1e-12) {
        fit.mean = -sol(1) / (2.0 * c2);
        fit.std_dev = std::sqrt(-1.0 / (2.0 * c2));
        fit.converged = true;
    }
    return fit;
}

Posterior posterior(const ParameterGrid& grid, const std::vector<double>& log_likelihoods,
                    const std::vector<double>* prior) {
    grid.validate();
    if (log_likelihoods.size() != grid.size())
        throw std::invalid_argument("log-likelihood count does not match the grid");
    if (prior && prior->size() != grid.size()) throw std::invalid_argument("prior does not match the grid");

    std::vector<double> logp(log_likelihoods);
    for (std::size_t k = 0; k < logp.size(); ++k) {
        if (prior) {
            if ((*prior)[k] < 0.0) throw std::invalid_argument("negative prior");
            logp[k] += (*prior)[k] > 0.0 ? std::log((*prior)[k]) : -std::numeric_limits<double>::infinity();
        }
        if (std::isnan(logp[k])) throw std::invalid_argument("NaN log-likelihood");
    }
    double m = *std::max_element(logp.begin(), logp.end());
    if (!std::isfinite(m)) throw std::invalid_argument("all likelihoods vanish");
    double lse = 0.0;
    for (double v : logp) lse += std::exp(v - m);
    lse = m + std::log(lse);

    Posterior post;
    post.grid = grid;
    post.probabilities.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) post.probabilities[k] = std::exp(logp[k] - lse);

    double mean = 0.0, second = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        mean += post.probabilities[k] * grid.values[k];
        second += post.probabilities[k] * grid.values[k] * grid.values[k];
    }
    post.raw_mean = mean;
    post.raw_std = std::sqrt(std::max(0.0, second - mean * mean));

    if (grid.size() >= 3) {
        post.gaussian = gaussian_summary(grid.values, post.probabilities);
        post.degenerate = !post.gaussian.converged;
        if (post.degenerate) {
            post.gaussian.mean = post.raw_mean;
            post.gaussian.std_dev = post.raw_std;
        }
    } else {
        post.degenerate = true;
        post.gaussian.mean = post.raw_mean;
        post.gaussian.std_dev = post.raw_std;
    }
    return post;
}

void Posterior::write_csv(std::ostream& os) const {
    os << "parameter,probability\n";
    for (std::size_t k = 0; k < grid.size(); ++k) os << grid.values[k] << ',' << probabilities[k] << '\n';
}

}  // namespace photonsim::bayes
