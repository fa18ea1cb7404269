#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "photonsim/bayes.hpp"
#include "photonsim/calibration.hpp"
#include "photonsim/device.hpp"
#include "photonsim/error_models.hpp"
#include "photonsim/graph.hpp"

namespace photonsim::experiment {

enum class ExperimentKind { Sim, Hom, Stabilizers, Mermin, Project, Bell, Bayes, Calibrate, Loss };

std::string kind_name(ExperimentKind kind);
ExperimentKind kind_from_name(const std::string& name);

/// Raised for malformed configs (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// Raised for numeric failures during a run (CLI exit code 3).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BayesBlock {
    std::string model = "sigma";  // sigma | p | delta
    bayes::ParameterGrid grid;    // empty -> model default
    std::string data_csv;         // counts to fit; empty -> synthesize
    double true_value = 0.82;     // synthesis parameter
    std::int64_t counts_per_setting = 176;
    bool sampled_likelihood = false;  // frequency estimator instead of exact multinomial
    int sampled_datasets = 1000;
    int mc_samples = 400;  // Monte Carlo samples per grid point for the delta model
};

struct CalibrateBlock {
    std::string fringe_csv;  // (voltage, current, transmission)
    std::string power_csv;   // (configuration_id, power_mW)
    double crosstalk_rad_per_mw = 0.003;
    std::vector<double> dial_targets;  // radians
    double v_max = 8.0;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Stabilizers;
    device::DeviceConfig device_config = device::ideal_config(device::RpegMode::Fusion);
    device::SimOptions options;
    double integration_time = 1.0;  // seconds
    double rate_scale = 1.0;        // Hz per unit postselected probability
    std::uint64_t seed = 1;
    bool exact = false;  // infinite-count mode: derive from probabilities directly

    // error parameters applied to the device before running (sigma < 1
    // dephases the sources; p > 0 re-derives the squeezing amplitudes)
    std::optional<double> sigma;
    std::optional<double> pair_probability;

    device::GraphStateKind state_kind = device::GraphStateKind::Star4;
    std::set<int> project_remove = {2};         // 0-based qubits projected onto |0>
    std::vector<double> hom_phases;             // empty -> 41 points over one period
    int bell_pair = 0;                          // 0 = qubits (1,3), 1 = qubits (2,4)
    std::optional<double> match_rate_mhz;       // calibrate rate_scale to this fourfold rate (mHz)
    BayesBlock bayes;
    CalibrateBlock calibrate;
    std::vector<cal::LossEntry> loss_entries;  // empty -> default signal path

    void validate() const;
};

/// Parses the JSON experiment file: {"device": {...}, "experiment": {...}}.
/// Both blocks are optional and default sensibly.
ExperimentSpec parse_spec(const std::string& json_text);
ExperimentSpec load_spec(const std::filesystem::path& file);

struct DerivedValue {
    std::string name;
    double value = 0.0;
    double error = 0.0;
};

struct RunReport {
    std::string kind;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string version;
    bool exact = false;
    bool truncated = false;

    graph::CountsTable counts;
    std::vector<DerivedValue> derived;
    std::vector<graph::MerminResult> mermin;
    std::vector<device::FringeSample> fringe;
    std::optional<bayes::Posterior> posterior;
    std::vector<std::pair<std::string, std::string>> notes;

    std::optional<double> value(const std::string& name) const;
};

RunReport run(const ExperimentSpec& spec);

enum class ExportFormat { Csv, StructuredText, All };

/// Writes counts.csv / fringe.csv / posterior.csv and summary.json into the
/// directory; returns the files written. Payloads are byte-identical for
/// identical reports.
std::vector<std::filesystem::path> export_report(const RunReport& report,
                                                 const std::filesystem::path& out_dir,
                                                 ExportFormat format = ExportFormat::All);

/// Recomputes fidelity and Mermin values from an exported counts.csv,
/// exactly reproducing the report's derived numbers.
std::vector<DerivedValue> derive_from_counts(const graph::CountsTable& counts,
                                             device::GraphStateKind state_kind);

/// Statistical error of one expectation estimate from N multinomial counts.
double expectation_error(double expectation, std::int64_t total_counts);

/// Poisson count sampling, one stream per (setting, outcome): the mean is
/// probability * rate_scale * integration_time.
graph::CountsTable sample_counts(const bayes::SettingProbs& setting_probs, double rate_scale,
                                 double integration_time, std::uint64_t seed, int n_qubits = 4);

/// rate_scale making the mean per-setting fourfold rate of this experiment
/// equal the requested rate.
double calibrate_rate_scale(const bayes::SettingProbs& setting_probs, double target_rate_hz);

/// Default output directory: $PHOTONSIM_OUT if set, else the current
/// directory.
std::filesystem::path default_out_dir();

}  // namespace photonsim::experiment
