#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "photonsim/device.hpp"
#include "photonsim/graph.hpp"

namespace photonsim::errors {

/// The three independently modelled device error parameters.
struct ErrorParams {
    double sigma = 1.0;   // pairwise heralded interference visibility, [0, 1]
    double p = 0.0;       // pair probability per pulse, [0, 1)
    double delta = 0.0;   // phase-offset standard deviation, radians

    void validate() const;
};

struct ModelPrediction {
    std::vector<double> expectations;  // signed <element> by generator mask
    double fidelity = 0.0;
    /// Raw fourfold probability per logical outcome for every measured
    /// setting (keyed by the setting's letter string).
    std::map<std::string, std::array<double, 16>> setting_probs;
    bool truncated = false;
};

/// Partial-distinguishability model: first-order pairs, no phase error,
/// photon internal states dephased to pairwise visibility sigma.
ModelPrediction predict_distinguishability(device::GraphStateKind kind, double sigma);

/// Multiphoton-contamination model: perfectly indistinguishable photons,
/// two pairs per source admitted, threshold detectors on the four
/// monitored outputs only (extra photons elsewhere escape undetected).
/// Contamination emission patterns are accumulated as incoherent branches;
/// only the one-pair-per-Bell-source patterns interfere. The default
/// ten-photon cutoff is where the contamination series has converged.
ModelPrediction predict_multiphoton(device::GraphStateKind kind, double p, int cutoff = 10);

/// Thermo-optic phase error: every heater site receives an independent
/// N(0, delta) offset, redrawn for each Monte Carlo sample of each
/// measurement configuration. Deterministic under a fixed seed.
ModelPrediction predict_phase_error(device::GraphStateKind kind, double delta, int n_samples = 10000,
                                    std::uint64_t seed = 1);

struct G2Result {
    double g2_zero = 1.0;
    double purity = 0.0;  // heralded purity = g2(0) - 1
};

/// Single-source relation between the unheralded second-order correlation
/// at zero delay and the heralded spectral purity. Valid for g2 in [1, 2].
G2Result purity_from_g2(double g2_zero);

/// (parameter, stabilizer_label, expectation) rows over a parameter grid.
void write_expectation_grid_csv(std::ostream& os, const std::string& parameter_name,
                                const std::vector<double>& parameters,
                                const std::vector<ModelPrediction>& predictions,
                                const graph::StabilizerGroup& group);

/// (parameter, fidelity) rows.
void write_fidelity_grid_csv(std::ostream& os, const std::string& parameter_name,
                             const std::vector<double>& parameters,
                             const std::vector<ModelPrediction>& predictions);

/// Deterministic seed stream splitting shared by the Monte Carlo code and
/// the sampling harness: a splitmix64 chain over (seed, indices...).
std::uint64_t split_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> indices);

}  // namespace photonsim::errors
