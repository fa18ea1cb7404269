#include "photonsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace photonsim::experiment {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kPi = std::numbers::pi;

using errors::split_seed;
using nlohmann::json;

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

std::string outcome_bits(int idx, int n_qubits) {
    std::string s;
    for (int q = 0; q < n_qubits; ++q) s.push_back(((idx >> (n_qubits - 1 - q)) & 1) ? '1' : '0');
    return s;
}

}  // namespace

std::string kind_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Sim: return "sim";
        case ExperimentKind::Hom: return "hom";
        case ExperimentKind::Stabilizers: return "stab";
        case ExperimentKind::Mermin: return "mermin";
        case ExperimentKind::Project: return "project";
        case ExperimentKind::Bell: return "bell";
        case ExperimentKind::Bayes: return "bayes";
        case ExperimentKind::Calibrate: return "cal";
        case ExperimentKind::Loss: return "loss";
    }
    return "?";
}

ExperimentKind kind_from_name(const std::string& name) {
    for (auto k : {ExperimentKind::Sim, ExperimentKind::Hom, ExperimentKind::Stabilizers,
                   ExperimentKind::Mermin, ExperimentKind::Project, ExperimentKind::Bell,
                   ExperimentKind::Bayes, ExperimentKind::Calibrate, ExperimentKind::Loss}) {
        if (kind_name(k) == name) return k;
    }
    throw ConfigError("unknown experiment kind: " + name);
}

void ExperimentSpec::validate() const {
    if (integration_time <= 0.0) throw ConfigError("integration_time must be positive");
    if (rate_scale <= 0.0) throw ConfigError("rate_scale must be positive");
    if (sigma && (*sigma < 0.0 || *sigma > 1.0)) throw ConfigError("sigma must lie in [0, 1]");
    if (pair_probability && (*pair_probability < 0.0 || *pair_probability >= 1.0))
        throw ConfigError("pair probability must lie in [0, 1)");
    if (bell_pair != 0 && bell_pair != 1) throw ConfigError("bell_pair must be 0 or 1");
    if (project_remove.empty() || project_remove.size() > 3) throw ConfigError("project requires 1..3 removed qubits");
    for (int q : project_remove)
        if (q < 0 || q > 3) throw ConfigError("projected qubits must lie in 0..3");
}

ExperimentSpec parse_spec(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentSpec spec;
    try {
        const json& e = j.contains("experiment") ? j["experiment"] : json::object();
        if (e.contains("kind")) spec.kind = kind_from_name(e["kind"].get<std::string>());
        if (e.contains("state")) {
            std::string s = e["state"].get<std::string>();
            if (s == "s4")
                spec.state_kind = device::GraphStateKind::Star4;
            else if (s == "l4")
                spec.state_kind = device::GraphStateKind::Line4;
            else
                throw ConfigError("state must be s4 or l4");
        }
        spec.integration_time = e.value("integration_time", 1.0);
        spec.rate_scale = e.value("rate_scale", 1.0);
        spec.seed = e.value("seed", std::uint64_t{1});
        spec.exact = e.value("exact", false);
        spec.options.max_pairs_per_source = e.value("max_pairs", 1);
        spec.options.threshold = e.value("threshold", false);
        spec.options.cutoff = e.value("cutoff", 0);
        if (e.contains("sigma")) spec.sigma = e["sigma"].get<double>();
        if (e.contains("p")) spec.pair_probability = e["p"].get<double>();
        if (e.contains("match_rate_mhz")) spec.match_rate_mhz = e["match_rate_mhz"].get<double>();
        if (e.contains("remove")) {
            spec.project_remove.clear();
            for (int q : e["remove"]) spec.project_remove.insert(q - 1);  // config lists 1-based qubits
        }
        if (e.contains("hom_phases")) spec.hom_phases = e["hom_phases"].get<std::vector<double>>();
        spec.bell_pair = e.value("bell_pair", 1) - 1;
        if (e.contains("bayes")) {
            const json& b = e["bayes"];
            spec.bayes.model = b.value("model", std::string("sigma"));
            spec.bayes.data_csv = b.value("data_csv", std::string());
            spec.bayes.true_value = b.value("true_value", 0.82);
            spec.bayes.counts_per_setting = b.value("counts_per_setting", std::int64_t{176});
            spec.bayes.sampled_likelihood = b.value("sampled_likelihood", false);
            spec.bayes.sampled_datasets = b.value("sampled_datasets", 1000);
            spec.bayes.mc_samples = b.value("mc_samples", 400);
            if (b.contains("grid")) {
                const json& g = b["grid"];
                spec.bayes.grid = bayes::make_grid(g.at("min").get<double>(), g.at("max").get<double>(),
                                                   g.at("step").get<double>(), spec.bayes.model);
            }
        }
        if (e.contains("cal")) {
            const json& c = e["cal"];
            spec.calibrate.fringe_csv = c.value("fringe_csv", std::string());
            spec.calibrate.power_csv = c.value("power_csv", std::string());
            spec.calibrate.crosstalk_rad_per_mw = c.value("crosstalk_rad_per_mw", 0.003);
            spec.calibrate.v_max = c.value("v_max", 8.0);
            if (c.contains("dial_targets")) spec.calibrate.dial_targets = c["dial_targets"].get<std::vector<double>>();
        }
        if (e.contains("loss")) {
            for (const auto& entry : e["loss"])
                spec.loss_entries.push_back({entry.at("label").get<std::string>(), entry.at("db").get<double>()});
        }
        if (j.contains("device")) {
            spec.device_config = device::config_from_json(j["device"].dump());
        } else {
            spec.device_config = device::ideal_config(device::rpeg_for(spec.state_kind), 0.03,
                                                      spec.options.max_pairs_per_source);
        }
        if (spec.kind == ExperimentKind::Stabilizers || spec.kind == ExperimentKind::Mermin ||
            spec.kind == ExperimentKind::Project)
            spec.device_config.rpeg = device::rpeg_for(spec.state_kind);
        if (spec.pair_probability)
            device::set_pair_probability(spec.device_config, *spec.pair_probability,
                                         spec.options.max_pairs_per_source);
        if (spec.sigma) device::set_sigma(spec.device_config, *spec.sigma);
    } catch (const json::exception& e2) {
        throw ConfigError(std::string("bad experiment config: ") + e2.what());
    } catch (const std::invalid_argument& e2) {
        throw ConfigError(e2.what());
    }
    spec.validate();
    return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

std::optional<double> RunReport::value(const std::string& name) const {
    for (const auto& d : derived)
        if (d.name == name) return d.value;
    return std::nullopt;
}

double expectation_error(double expectation, std::int64_t total_counts) {
    if (total_counts <= 0) return 0.0;
    double var = std::max(0.0, 1.0 - expectation * expectation) / static_cast<double>(total_counts);
    return std::sqrt(var);
}

graph::CountsTable sample_counts(const bayes::SettingProbs& setting_probs, double rate_scale,
                                 double integration_time, std::uint64_t seed, int n_qubits) {
    graph::CountsTable table;
    std::uint64_t setting_idx = 0;
    const int n_outcomes = 1 << n_qubits;
    for (const auto& [setting, probs] : setting_probs) {
        for (int j = 0; j < n_outcomes; ++j) {
            double mean = probs[j] * rate_scale * integration_time;
            std::int64_t c = 0;
            if (mean > 0.0) {
                std::mt19937_64 rng(split_seed(seed, {setting_idx, static_cast<std::uint64_t>(j)}));
                c = std::poisson_distribution<std::int64_t>(mean)(rng);
            }
            table.add(setting, outcome_bits(j, n_qubits), c);
        }
        ++setting_idx;
    }
    return table;
}

double calibrate_rate_scale(const bayes::SettingProbs& setting_probs, double target_rate_hz) {
    if (setting_probs.empty()) throw NumericError("no settings to calibrate against");
    double mean_total = 0.0;
    for (const auto& [setting, probs] : setting_probs) {
        double t = 0.0;
        for (double p : probs) t += p;
        mean_total += t;
    }
    mean_total /= static_cast<double>(setting_probs.size());
    if (mean_total <= 0.0) throw NumericError("zero postselected probability; cannot calibrate rate");
    return target_rate_hz / mean_total;
}

std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv("PHOTONSIM_OUT")) return env;
    return ".";
}

namespace {

std::string config_hash_for(const ExperimentSpec& spec) {
    std::ostringstream os;
    os << device::to_json(spec.device_config) << '|' << kind_name(spec.kind) << '|'
       << spec.options.max_pairs_per_source << '|' << spec.options.threshold << '|'
       << spec.options.effective_cutoff() << '|' << spec.integration_time << '|' << spec.rate_scale << '|'
       << spec.exact;
    return hex64(fnv1a(os.str()));
}

RunReport base_report(const ExperimentSpec& spec) {
    RunReport r;
    r.kind = kind_name(spec.kind);
    r.seed = spec.seed;
    r.config_hash = config_hash_for(spec);
    r.version = kVersion;
    r.exact = spec.exact;
    return r;
}

struct GroupMeasurement {
    std::vector<double> expectations;  // signed, by generator mask
    std::vector<double> errors;
    graph::CountsTable counts;
    bayes::SettingProbs probs;
    bool truncated = false;
};

// measures every non-identity group element; expectations come from exact
// probabilities in infinite-count mode and from sampled counts otherwise
GroupMeasurement measure_group(const ExperimentSpec& spec, const graph::StabilizerGroup& group) {
    GroupMeasurement m;
    m.expectations.assign(group.size(), 1.0);
    m.errors.assign(group.size(), 0.0);
    for (std::size_t mask = 1; mask < group.size(); ++mask) {
        const auto& el = group.elements[mask];
        auto dist = device::measure_setting(spec.device_config, spec.options, el);
        m.truncated = m.truncated || dist.truncated;
        m.probs[el.setting()] = dist.raw;
    }
    if (spec.exact) {
        for (std::size_t mask = 1; mask < group.size(); ++mask) {
            const auto& el = group.elements[mask];
            const auto& probs = m.probs[el.setting()];
            double num = 0.0, den = 0.0;
            for (int j = 0; j < 16; ++j) {
                num += graph::outcome_eigenvalue(el, static_cast<unsigned>(j)) * probs[j];
                den += probs[j];
            }
            if (den <= 0.0) throw NumericError("zero postselected probability for setting " + el.setting());
            m.expectations[mask] = el.sign * num / den;
        }
        return m;
    }
    double rate = spec.rate_scale;
    if (spec.match_rate_mhz) rate = calibrate_rate_scale(m.probs, *spec.match_rate_mhz * 1e-3);
    m.counts = sample_counts(m.probs, rate, spec.integration_time, spec.seed);
    for (std::size_t mask = 1; mask < group.size(); ++mask) {
        const auto& el = group.elements[mask];
        std::int64_t total = m.counts.total(el.setting());
        if (total == 0) throw NumericError("no counts collected for setting " + el.setting());
        m.expectations[mask] = graph::expectation_from_counts(m.counts, el);
        m.errors[mask] = expectation_error(m.expectations[mask], total);
    }
    return m;
}

void append_fidelity_block(RunReport& r, const GroupMeasurement& m, const graph::StabilizerGroup& group) {
    auto fid = graph::fidelity(m.expectations);
    double var_sum = 0.0;
    for (double e : m.errors) var_sum += e * e;
    double f_err = std::sqrt(var_sum) / static_cast<double>(group.size());
    r.derived.push_back({"fidelity", fid.value, f_err});
    r.derived.push_back({"witness_exceeded", fid.witness ? 1.0 : 0.0, 0.0});
    for (std::size_t mask = 1; mask < group.size(); ++mask)
        r.derived.push_back({"<" + group.elements[mask].to_string() + ">", m.expectations[mask], m.errors[mask]});
}

RunReport run_stabilizers(const ExperimentSpec& spec, bool with_mermin) {
    auto g = device::state_graph(spec.state_kind);
    auto group = graph::generators_from_graph(g);
    auto m = measure_group(spec, group);

    RunReport r = base_report(spec);
    r.truncated = m.truncated;
    r.counts = m.counts;
    append_fidelity_block(r, m, group);

    if (with_mermin) {
        auto variants = graph::two_setting_variants(g);
        auto all = graph::mermin_two_setting_all(group, m.expectations, variants);
        for (auto& res : all) r.mermin.push_back(res);
        // attach statistical errors per variant from the term expectations
        for (auto& res : r.mermin) {
            double var = 0.0;
            for (const auto& [label, value] : res.terms) {
                // term label carries the mask name; find matching element error
                for (std::size_t mask = 0; mask < group.size(); ++mask) {
                    if (label.rfind(group.elements[mask].to_string() + " ", 0) == 0) {
                        var += m.errors[mask] * m.errors[mask];
                        break;
                    }
                }
            }
            r.derived.push_back({"M_II[" + res.variant + "]", res.value, std::sqrt(var)});
        }
        auto m3 = graph::mermin_three_setting(m.expectations);
        double var_sum = 0.0;
        for (double e : m.errors) var_sum += e * e;
        r.mermin.push_back(m3);
        r.derived.push_back({"M_III", m3.value, std::sqrt(var_sum)});
    }
    return r;
}

RunReport run_sim(const ExperimentSpec& spec) {
    auto dist = device::simulate(spec.device_config, spec.options);
    RunReport r = base_report(spec);
    r.truncated = dist.truncated;
    r.derived.push_back({"postselected_probability", dist.total, 0.0});
    for (int j = 0; j < 16; ++j) r.derived.push_back({"p_" + outcome_bits(j, 4), dist.raw[j], 0.0});
    if (!spec.exact) {
        bayes::SettingProbs probs{{"rails", dist.raw}};
        r.counts = sample_counts(probs, spec.rate_scale, spec.integration_time, spec.seed);
    }
    return r;
}

RunReport run_hom(const ExperimentSpec& spec) {
    std::vector<double> phases = spec.hom_phases;
    if (phases.empty()) {
        for (int i = 0; i < 41; ++i) phases.push_back(2.0 * kPi * i / 40.0);
    }
    auto samples = device::hom_fringe(spec.device_config, phases, spec.options);

    RunReport r = base_report(spec);
    double scale = spec.rate_scale * spec.integration_time;
    if (!spec.exact) {
        // per-point Poisson counts, refit on the sampled fringe
        std::vector<device::FringeSample> counted;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            double mean = samples[i].probability * scale;
            std::mt19937_64 rng(split_seed(spec.seed, {static_cast<std::uint64_t>(i)}));
            double c = mean > 0.0 ? static_cast<double>(std::poisson_distribution<std::int64_t>(mean)(rng)) : 0.0;
            counted.push_back({samples[i].phase, c});
        }
        r.fringe = counted;
    } else {
        r.fringe = samples;
        for (auto& s : r.fringe) s.probability *= scale;
    }
    auto vis = device::hom_visibility(r.fringe);
    double n_max = vis.fit.offset + vis.fit.amplitude;
    double n_min = std::max(0.0, vis.fit.offset - vis.fit.amplitude);
    double v_err = 0.0, vhom_err = 0.0;
    if (!spec.exact && n_max > 0.0) {
        double s_max = std::sqrt(std::max(n_max, 1.0)), s_min = std::sqrt(std::max(n_min, 1.0));
        double denom = (n_max + n_min) * (n_max + n_min);
        v_err = 2.0 * std::sqrt(n_min * n_min * s_max * s_max + n_max * n_max * s_min * s_min) / denom;
        vhom_err = 2.0 * std::sqrt(s_min * s_min / (n_max * n_max) +
                                   n_min * n_min * s_max * s_max / (n_max * n_max * n_max * n_max));
    }
    r.derived.push_back({"visibility", vis.visibility, v_err});
    r.derived.push_back({"v_hom", vis.v_hom, vhom_err});
    r.derived.push_back({"fit_amplitude", vis.fit.amplitude, 0.0});
    r.derived.push_back({"fit_offset", vis.fit.offset, 0.0});
    r.derived.push_back({"fit_residual_rms", vis.fit.residual_rms, 0.0});
    return r;
}

RunReport run_project(const ExperimentSpec& spec) {
    if (spec.state_kind != device::GraphStateKind::Star4)
        throw ConfigError("the projection protocol is defined on the star state");
    auto full_graph = device::state_graph(spec.state_kind);
    auto residual_graph = graph::project_zero(full_graph, spec.project_remove);
    auto residual_group = graph::generators_from_graph(residual_graph);
    const int m = residual_graph.n;

    // kept qubits in original order
    std::vector<int> kept;
    for (int q = 0; q < 4; ++q)
        if (!spec.project_remove.count(q)) kept.push_back(q);

    RunReport r = base_report(spec);
    std::vector<double> expectations(residual_group.size(), 1.0);
    std::vector<double> errs(residual_group.size(), 0.0);
    double projection_probability = 0.0;
    bool projection_prob_set = false;

    bayes::SettingProbs probs_by_setting;
    std::vector<graph::PauliString> full_settings(residual_group.size(),
                                                  graph::PauliString(std::vector<graph::Pauli>(4, graph::Pauli::I)));
    for (std::size_t mask = 0; mask < residual_group.size(); ++mask) {
        const auto& el = residual_group.elements[mask];
        std::vector<graph::Pauli> letters(4, graph::Pauli::Z);  // removed qubits read out in Z
        for (int k = 0; k < m; ++k) letters[kept[k]] = el.letters[k];
        full_settings[mask] = graph::PauliString(letters, el.sign);
        auto dist = device::measure_setting(spec.device_config, spec.options, full_settings[mask]);
        r.truncated = r.truncated || dist.truncated;
        probs_by_setting[full_settings[mask].setting()] = dist.raw;
    }

    graph::CountsTable counts;
    double rate = spec.rate_scale;
    if (spec.match_rate_mhz) rate = calibrate_rate_scale(probs_by_setting, *spec.match_rate_mhz * 1e-3);
    if (!spec.exact) counts = sample_counts(probs_by_setting, rate, spec.integration_time, spec.seed);
    r.counts = counts;

    for (std::size_t mask = 0; mask < residual_group.size(); ++mask) {
        const auto& full = full_settings[mask];
        const auto& probs = probs_by_setting[full.setting()];
        // condition on |0> outcomes for every removed qubit
        double num = 0.0, den = 0.0, total_setting = 0.0;
        std::int64_t cnum = 0, cden = 0;
        auto counts_vec = spec.exact ? std::vector<std::int64_t>{} : counts.outcome_vector(full.setting(), 4);
        for (int j = 0; j < 16; ++j) {
            bool conditioned = true;
            for (int q : spec.project_remove)
                if ((j >> (3 - q)) & 1) conditioned = false;
            total_setting += probs[j];
            if (!conditioned) continue;
            // eigenvalue over kept qubits only
            int lambda = 1;
            for (int k = 0; k < m; ++k) {
                if (residual_group.elements[mask].letters[k] == graph::Pauli::I) continue;
                if ((j >> (3 - kept[k])) & 1) lambda = -lambda;
            }
            num += lambda * probs[j];
            den += probs[j];
            if (!spec.exact) {
                cnum += lambda * counts_vec[j];
                cden += counts_vec[j];
            }
        }
        if (den <= 0.0) throw NumericError("projection removed all probability for setting " + full.setting());
        if (mask == 0 && total_setting > 0.0) {
            projection_probability = den / total_setting;
            projection_prob_set = true;
        }
        if (spec.exact) {
            expectations[mask] = residual_group.elements[mask].sign * num / den;
        } else {
            if (cden == 0) throw NumericError("no conditioned counts for setting " + full.setting());
            expectations[mask] = residual_group.elements[mask].sign * static_cast<double>(cnum) /
                                 static_cast<double>(cden);
            errs[mask] = expectation_error(expectations[mask], cden);
        }
    }
    if (projection_prob_set) r.derived.push_back({"projection_probability", projection_probability, 0.0});

    auto fid = graph::fidelity(expectations);
    double var_sum = 0.0;
    for (double e : errs) var_sum += e * e;
    r.derived.push_back({"fidelity", fid.value, std::sqrt(var_sum) / static_cast<double>(residual_group.size())});
    r.derived.push_back({"witness_exceeded", fid.witness ? 1.0 : 0.0, 0.0});
    for (std::size_t mask = 1; mask < residual_group.size(); ++mask)
        r.derived.push_back(
            {"<" + residual_group.elements[mask].to_string() + ">", expectations[mask], errs[mask]});

    auto m3 = graph::mermin_three_setting(expectations);
    r.mermin.push_back(m3);
    r.derived.push_back({"M_III", m3.value, std::sqrt(var_sum)});
    if (m >= 3) {
        auto variants = graph::two_setting_variants(residual_graph);
        auto all = graph::mermin_two_setting_all(residual_group, expectations, variants);
        for (auto& res : all) r.derived.push_back({"M_II[" + res.variant + "]", res.value, 0.0});
        r.mermin.insert(r.mermin.end(), all.begin(), all.end());
    }
    return r;
}

RunReport run_bell(const ExperimentSpec& spec) {
    device::DeviceConfig cfg = spec.device_config;
    cfg.rpeg = device::RpegMode::Bar;
    int qa = spec.bell_pair == 0 ? 0 : 1;
    int qb = spec.bell_pair == 0 ? 2 : 3;
    // pump only this pair's sources
    for (int s = 0; s < 4; ++s) {
        bool keep = spec.bell_pair == 0 ? (s == 0 || s == 1) : (s == 2 || s == 3);
        if (!keep) cfg.sources[s].xi = 0.0;
    }

    struct TwoDial {
        std::string name;
        double theta_a, phi_a, theta_b, phi_b;
        bool stabilizer;  // contributes to fidelity
        double sign;      // stabilizer sign (for -YY)
    };
    std::vector<TwoDial> dials = {
        {"XX", kPi / 2, 0.0, kPi / 2, 0.0, true, 1.0},
        {"YY", kPi / 2, kPi / 2, kPi / 2, kPi / 2, true, -1.0},
        {"ZZ", 0.0, 0.0, 0.0, 0.0, true, 1.0},
        {"CHSH_Z_B+", 0.0, 0.0, kPi / 4, 0.0, false, 1.0},
        {"CHSH_Z_B-", 0.0, 0.0, -kPi / 4, 0.0, false, 1.0},
        {"CHSH_X_B+", kPi / 2, 0.0, kPi / 4, 0.0, false, 1.0},
        {"CHSH_X_B-", kPi / 2, 0.0, -kPi / 4, 0.0, false, 1.0},
    };

    RunReport r = base_report(spec);
    bayes::SettingProbs probs_by_setting;
    for (const auto& dial : dials) {
        device::DeviceConfig c2 = cfg;
        for (int q = 0; q < 4; ++q) c2.analysis[q] = device::QubitAnalysis{};
        c2.analysis[qa] = {dial.phi_a, dial.theta_a, 0};
        c2.analysis[qb] = {dial.phi_b, dial.theta_b, 0};
        auto state = device::evolve_through_device(device::build_bell_pairs(c2, spec.options), c2);
        std::array<double, 16> probs{};  // only 4 used: index (ba<<1)|bb
        for (int ba = 0; ba < 2; ++ba) {
            for (int bb = 0; bb < 2; ++bb) {
                std::map<int, int> pattern;
                pattern[device::qubit_rail(qa, ba)] = 1;
                pattern[device::qubit_rail(qa, 1 - ba)] = 0;
                pattern[device::qubit_rail(qb, bb)] = 1;
                pattern[device::qubit_rail(qb, 1 - bb)] = 0;
                auto ps = fock::postselect(state, pattern, spec.options.threshold);
                probs[(ba << 1) | bb] = ps.probability;
            }
        }
        probs_by_setting[dial.name] = probs;
    }

    graph::CountsTable counts;
    if (!spec.exact) {
        double rate = spec.rate_scale;
        if (spec.match_rate_mhz) rate = calibrate_rate_scale(probs_by_setting, *spec.match_rate_mhz * 1e-3);
        counts = sample_counts(probs_by_setting, rate, spec.integration_time, spec.seed, 2);
        r.counts = counts;
    }

    auto correlation = [&](const std::string& name, double& err) -> double {
        if (spec.exact) {
            const auto& p = probs_by_setting[name];
            double num = p[0] - p[1] - p[2] + p[3];
            double den = p[0] + p[1] + p[2] + p[3];
            if (den <= 0.0) throw NumericError("zero probability in bell setting " + name);
            err = 0.0;
            return num / den;
        }
        auto v = counts.outcome_vector(name, 2);
        std::int64_t den = v[0] + v[1] + v[2] + v[3];
        if (den == 0) throw NumericError("no counts in bell setting " + name);
        double e = static_cast<double>(v[0] - v[1] - v[2] + v[3]) / static_cast<double>(den);
        err = expectation_error(e, den);
        return e;
    };

    double exx, eyy, ezz;
    double err_xx, err_yy, err_zz;
    exx = correlation("XX", err_xx);
    eyy = correlation("YY", err_yy);
    ezz = correlation("ZZ", err_zz);
    double fid = (1.0 + exx - eyy + ezz) / 4.0;
    double fid_err = std::sqrt(err_xx * err_xx + err_yy * err_yy + err_zz * err_zz) / 4.0;
    r.derived.push_back({"fidelity", fid, fid_err});
    r.derived.push_back({"<XX>", exx, err_xx});
    r.derived.push_back({"<-YY>", -eyy, err_yy});
    r.derived.push_back({"<ZZ>", ezz, err_zz});
    // M_III for the pair = 1 + <XX> + <-YY> + <ZZ>
    graph::MerminResult m3;
    m3.variant = "III";
    m3.value = 1.0 + exx - eyy + ezz;
    m3.classical_bound = 2.0;
    m3.quantum_bound = 4.0;
    r.mermin.push_back(m3);
    r.derived.push_back({"M_III", m3.value, 4.0 * fid_err});

    double e1, e2, e3, e4, s1, s2, s3, s4;
    e1 = correlation("CHSH_Z_B+", s1);
    e2 = correlation("CHSH_Z_B-", s2);
    e3 = correlation("CHSH_X_B+", s3);
    e4 = correlation("CHSH_X_B-", s4);
    graph::MerminResult chsh;
    chsh.variant = "CHSH";
    chsh.value = e1 + e2 + e3 - e4;
    chsh.classical_bound = 2.0;
    chsh.quantum_bound = 2.0 * std::sqrt(2.0);
    chsh.terms = {{"E(Z,B+)", e1}, {"E(Z,B-)", e2}, {"E(X,B+)", e3}, {"E(X,B-)", e4}};
    r.mermin.push_back(chsh);
    r.derived.push_back({"CHSH", chsh.value, std::sqrt(s1 * s1 + s2 * s2 + s3 * s3 + s4 * s4)});
    return r;
}

RunReport run_bayes(const ExperimentSpec& spec) {
    const auto& b = spec.bayes;
    auto kind = spec.state_kind;

    bayes::ParameterGrid grid = b.grid;
    if (grid.values.empty()) {
        if (b.model == "sigma")
            grid = bayes::default_sigma_grid();
        else if (b.model == "p")
            grid = bayes::default_p_grid();
        else if (b.model == "delta")
            grid = bayes::default_delta_grid();
        else
            throw ConfigError("bayes model must be sigma, p or delta");
    }

    std::map<double, bayes::SettingProbs> cache;
    bayes::ModelFn model = [&, kind](double value) -> bayes::SettingProbs {
        auto it = cache.find(value);
        if (it != cache.end()) return it->second;
        errors::ModelPrediction pred;
        if (b.model == "sigma")
            pred = errors::predict_distinguishability(kind, value);
        else if (b.model == "p")
            pred = errors::predict_multiphoton(kind, value);
        else if (b.model == "delta")
            pred = errors::predict_phase_error(kind, value, b.mc_samples, split_seed(spec.seed, {0xDE17A}));
        else
            throw ConfigError("bayes model must be sigma, p or delta");
        cache.emplace(value, pred.setting_probs);
        return pred.setting_probs;
    };

    graph::CountsTable data;
    if (!b.data_csv.empty()) {
        std::ifstream in(b.data_csv);
        if (!in) throw ConfigError("cannot open counts CSV " + b.data_csv);
        data = graph::CountsTable::read_csv(in);
    } else {
        // synthesize counts at the true parameter, fixed totals per setting
        auto truth = model(b.true_value);
        std::uint64_t setting_idx = 0;
        for (const auto& [setting, probs] : truth) {
            std::mt19937_64 rng(split_seed(spec.seed, {0x5A17, setting_idx++}));
            std::discrete_distribution<int> draw(probs.begin(), probs.end());
            std::vector<std::int64_t> c(16, 0);
            for (std::int64_t n = 0; n < b.counts_per_setting; ++n) ++c[draw(rng)];
            for (int j = 0; j < 16; ++j) data.add(setting, outcome_bits(j, 4), c[j]);
        }
    }

    bayes::LikelihoodResult ll;
    if (b.sampled_likelihood)
        ll = bayes::log_likelihoods_sampled(model, grid, data, b.sampled_datasets,
                                            split_seed(spec.seed, {0xF2E9}));
    else
        ll = bayes::log_likelihoods(model, grid, data);

    auto post = bayes::posterior(grid, ll.log_likelihoods);

    RunReport r = base_report(spec);
    r.counts = data;
    r.posterior = post;
    std::size_t map_idx = static_cast<std::size_t>(
        std::max_element(post.probabilities.begin(), post.probabilities.end()) - post.probabilities.begin());
    r.derived.push_back({"posterior_mean", post.gaussian.mean, post.gaussian.std_dev});
    r.derived.push_back({"posterior_std", post.gaussian.std_dev, 0.0});
    r.derived.push_back({"raw_mean", post.raw_mean, post.raw_std});
    r.derived.push_back({"map_estimate", grid.values[map_idx], 0.0});
    r.notes.emplace_back("model", b.model);
    r.notes.emplace_back("likelihood", b.sampled_likelihood ? "sampled" : "multinomial");
    if (ll.floored) r.notes.emplace_back("flag", "model probability floor reached");
    if (post.degenerate) r.notes.emplace_back("flag", "degenerate posterior; raw moments reported");
    return r;
}

RunReport run_calibrate(const ExperimentSpec& spec) {
    const auto& c = spec.calibrate;
    RunReport r = base_report(spec);
    if (c.fringe_csv.empty() && c.power_csv.empty())
        throw ConfigError("cal requires fringe_csv and/or power_csv");
    if (!c.fringe_csv.empty()) {
        std::ifstream in(c.fringe_csv);
        if (!in) throw ConfigError("cannot open fringe CSV " + c.fringe_csv);
        std::vector<cal::IvSample> iv_samples;
        std::vector<cal::PowerSample> fringe_samples;
        cal::read_fringe_csv(in, iv_samples, fringe_samples);
        try {
            auto iv = cal::fit_iv(iv_samples);
            auto fringe = cal::fit_fringe(fringe_samples);
            r.derived.push_back({"fringe_amplitude", fringe.amplitude, 0.0});
            r.derived.push_back({"fringe_rad_per_watt", fringe.rad_per_watt, 0.0});
            r.derived.push_back({"fringe_phi0", fringe.phi0, 0.0});
            r.derived.push_back({"fringe_offset", fringe.offset, 0.0});
            r.derived.push_back({"fringe_residual_rms", fringe.residual_rms, 0.0});
            r.derived.push_back({"iv_rho1", iv.rho1, 0.0});
            r.derived.push_back({"iv_rho2", iv.rho2, 0.0});
            r.derived.push_back({"iv_rho3", iv.rho3, 0.0});
            for (std::size_t i = 0; i < c.dial_targets.size(); ++i) {
                double v = cal::dial_phase(c.dial_targets[i], fringe, iv, {0.0, c.v_max});
                r.derived.push_back({"dial_voltage[" + std::to_string(i) + "]", v, 0.0});
                double achieved = fringe.rad_per_watt * iv.power(v) + fringe.phi0;
                r.derived.push_back(
                    {"dial_phase_error[" + std::to_string(i) + "]",
                     std::remainder(achieved - c.dial_targets[i], 2.0 * kPi), 0.0});
            }
        } catch (const std::invalid_argument& e) {
            throw NumericError(e.what());
        }
    }
    if (!c.power_csv.empty()) {
        std::ifstream in(c.power_csv);
        if (!in) throw ConfigError("cannot open power CSV " + c.power_csv);
        auto powers = cal::read_power_csv(in);
        auto stats = cal::power_stats(powers);
        r.derived.push_back({"power_mean_mw", stats.mean, 0.0});
        r.derived.push_back({"power_mad_mw", stats.mean_abs_dev, 0.0});
        r.derived.push_back({"power_std_mw", stats.std_dev, 0.0});
        r.derived.push_back(
            {"crosstalk_phase_error_mad", cal::crosstalk_phase_error(stats.mean_abs_dev, c.crosstalk_rad_per_mw), 0.0});
        r.derived.push_back(
            {"crosstalk_phase_error_std", cal::crosstalk_phase_error(stats.std_dev, c.crosstalk_rad_per_mw), 0.0});
    }
    return r;
}

RunReport run_loss(const ExperimentSpec& spec) {
    auto entries = spec.loss_entries.empty() ? cal::default_signal_path() : spec.loss_entries;
    auto budget = cal::loss_total(entries);
    RunReport r = base_report(spec);
    r.derived.push_back({"total_db", budget.total_db, 0.0});
    for (const auto& e : budget.entries) r.notes.emplace_back(e.label, std::to_string(e.db) + " dB");
    return r;
}

}  // namespace

RunReport run(const ExperimentSpec& spec_in) {
    ExperimentSpec spec = spec_in;
    spec.validate();
    // the spec's error parameters always win over the raw device block
    if (spec.pair_probability)
        device::set_pair_probability(spec.device_config, *spec.pair_probability,
                                     spec.options.max_pairs_per_source);
    if (spec.sigma) device::set_sigma(spec.device_config, *spec.sigma);
    switch (spec.kind) {
        case ExperimentKind::Sim: return run_sim(spec);
        case ExperimentKind::Hom: return run_hom(spec);
        case ExperimentKind::Stabilizers: return run_stabilizers(spec, false);
        case ExperimentKind::Mermin: return run_stabilizers(spec, true);
        case ExperimentKind::Project: return run_project(spec);
        case ExperimentKind::Bell: return run_bell(spec);
        case ExperimentKind::Bayes: return run_bayes(spec);
        case ExperimentKind::Calibrate: return run_calibrate(spec);
        case ExperimentKind::Loss: return run_loss(spec);
    }
    throw ConfigError("unhandled experiment kind");
}

std::vector<DerivedValue> derive_from_counts(const graph::CountsTable& counts,
                                             device::GraphStateKind state_kind) {
    auto g = device::state_graph(state_kind);
    auto group = graph::generators_from_graph(g);
    std::vector<double> expectations(group.size(), 1.0);
    std::vector<double> errs(group.size(), 0.0);
    for (std::size_t mask = 1; mask < group.size(); ++mask) {
        const auto& el = group.elements[mask];
        expectations[mask] = graph::expectation_from_counts(counts, el);
        errs[mask] = expectation_error(expectations[mask], counts.total(el.setting()));
    }
    std::vector<DerivedValue> out;
    auto fid = graph::fidelity(expectations);
    double var_sum = 0.0;
    for (double e : errs) var_sum += e * e;
    out.push_back({"fidelity", fid.value, std::sqrt(var_sum) / static_cast<double>(group.size())});
    out.push_back({"witness_exceeded", fid.witness ? 1.0 : 0.0, 0.0});
    for (std::size_t mask = 1; mask < group.size(); ++mask)
        out.push_back({"<" + group.elements[mask].to_string() + ">", expectations[mask], errs[mask]});
    return out;
}

std::vector<std::filesystem::path> export_report(const RunReport& report,
                                                 const std::filesystem::path& out_dir, ExportFormat format) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;

    bool want_csv = format == ExportFormat::Csv || format == ExportFormat::All;
    bool want_text = format == ExportFormat::StructuredText || format == ExportFormat::All;

    if (want_csv && !report.counts.entries().empty()) {
        auto path = out_dir / "counts.csv";
        std::ofstream os(path);
        report.counts.write_csv(os);
        written.push_back(path);
    }
    if (want_csv && !report.fringe.empty()) {
        auto path = out_dir / "fringe.csv";
        std::ofstream os(path);
        os << "phase_rad,counts\n";
        for (const auto& s : report.fringe) os << s.phase << ',' << s.probability << '\n';
        written.push_back(path);
    }
    if (want_csv && report.posterior) {
        auto path = out_dir / "posterior.csv";
        std::ofstream os(path);
        report.posterior->write_csv(os);
        written.push_back(path);
    }
    if (want_text) {
        json j;
        j["kind"] = report.kind;
        j["seed"] = report.seed;
        j["config_hash"] = report.config_hash;
        j["version"] = report.version;
        j["exact"] = report.exact;
        j["truncated"] = report.truncated;
        json jd = json::object();
        for (const auto& d : report.derived) jd[d.name] = {{"value", d.value}, {"error", d.error}};
        j["derived"] = jd;
        if (!report.mermin.empty()) {
            json jm = json::array();
            for (const auto& m : report.mermin) {
                json e = {{"variant", m.variant},
                          {"value", m.value},
                          {"classical_bound", m.classical_bound},
                          {"quantum_bound", m.quantum_bound}};
                json terms = json::array();
                for (const auto& [label, value] : m.terms) terms.push_back({{"term", label}, {"value", value}});
                e["terms"] = terms;
                jm.push_back(e);
            }
            j["mermin"] = jm;
        }
        if (!report.notes.empty()) {
            json jn = json::array();
            for (const auto& [k, v] : report.notes) jn.push_back({{"key", k}, {"value", v}});
            j["notes"] = jn;
        }
        auto path = out_dir / "summary.json";
        std::ofstream os(path);
        os << j.dump(2) << '\n';
        written.push_back(path);
    }
    return written;
}

}  // namespace photonsim::experiment
