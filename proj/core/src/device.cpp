#include "photonsim/device.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace photonsim::device {

namespace {
constexpr double kPi = std::numbers::pi;
// central/outer MZI internal phase giving a 1/3 stay-probability splitter
const double kCzTheta = 2.0 * std::acos(1.0 / std::sqrt(3.0));
}  // namespace

Eigen::Matrix2cd coupler() {
    Eigen::Matrix2cd c;
    const cd i{0.0, 1.0};
    c << 1.0, i, i, 1.0;
    return c / std::sqrt(2.0);
}

Eigen::Matrix2cd mzi(double theta) {
    Eigen::Matrix2cd inner = Eigen::Matrix2cd::Identity();
    inner(1, 1) = std::exp(cd{0.0, theta});
    return coupler().conjugate() * inner * coupler();
}

Eigen::Matrix2cd phase_shifter(double phi) {
    Eigen::Matrix2cd p = Eigen::Matrix2cd::Identity();
    p(1, 1) = std::exp(cd{0.0, -phi});
    return p;
}

std::string rpeg_name(RpegMode mode) {
    switch (mode) {
        case RpegMode::Fusion: return "fusion";
        case RpegMode::ControlledZ: return "cz";
        case RpegMode::Bar: return "bar";
    }
    return "?";
}

RpegMode rpeg_from_name(const std::string& name) {
    if (name == "fusion") return RpegMode::Fusion;
    if (name == "cz") return RpegMode::ControlledZ;
    if (name == "bar") return RpegMode::Bar;
    throw std::invalid_argument("unknown rpeg mode: " + name);
}

double DeviceConfig::phase_offset(int site) const {
    if (site < 0 || site >= kPhaseSiteCount) throw std::out_of_range("phase site out of range");
    if (phase_offsets.empty()) return 0.0;
    if (static_cast<int>(phase_offsets.size()) != kPhaseSiteCount)
        throw std::invalid_argument("phase_offsets must list every heater site");
    return phase_offsets[site];
}

std::array<double, 16> OutcomeDistribution::conditioned() const {
    std::array<double, 16> c{};
    if (total > 0.0)
        for (int i = 0; i < 16; ++i) c[i] = raw[i] / total;
    return c;
}

double pair_probability_for_xi(double xi_abs, int max_pairs) {
    double s = xi_abs * xi_abs;
    double denom = 0.0, pw = 1.0;
    for (int k = 0; k <= max_pairs; ++k) {
        denom += pw;
        pw *= s;
    }
    return s / denom;
}

double xi_for_pair_probability(double p, int max_pairs) {
    if (max_pairs < 1) throw std::invalid_argument("max_pairs must be >= 1");
    if (p < 0.0) throw std::invalid_argument("pair probability must be non-negative");
    if (p == 0.0) return 0.0;
    double lo = 0.0, hi = 0.999;
    if (p >= pair_probability_for_xi(std::sqrt(hi), max_pairs))
        throw std::invalid_argument("pair probability too large for this truncation");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (pair_probability_for_xi(std::sqrt(mid), max_pairs) < p ? lo : hi) = mid;
    }
    return std::sqrt(0.5 * (lo + hi));
}

DeviceConfig ideal_config(RpegMode mode, double pair_probability, int max_pairs) {
    DeviceConfig c;
    c.rpeg = mode;
    double xi = xi_for_pair_probability(pair_probability, max_pairs);
    for (int s = 0; s < 4; ++s) {
        c.sources[s].xi = xi;
        c.sources[s].signal_mode = kSourceSignalMode[s];
        c.sources[s].idler_mode = kSourceIdlerMode[s];
        c.sources[s].internal = InternalState();
    }
    return c;
}

void set_pair_probability(DeviceConfig& config, double p, int max_pairs) {
    double xi = xi_for_pair_probability(p, max_pairs);
    for (auto& s : config.sources) s.xi = xi;
}

void set_sigma(DeviceConfig& config, double sigma) {
    std::vector<InternalState> states(4);
    auto dephased = fock::dephase_internal(states, sigma);
    for (int s = 0; s < 4; ++s) config.sources[s].internal = dephased[s];
}

namespace {

int required_internal_dim(const DeviceConfig& config) {
    int d = 1;
    for (const auto& s : config.sources) {
        bool beyond_first = false;
        for (int l = 1; l < s.internal.dim(); ++l)
            if (std::abs(s.internal.amps(l)) > 1e-15) beyond_first = true;
        if (beyond_first) d = std::max(d, s.internal.dim());
    }
    return d;
}

InternalState truncated_internal(const InternalState& is, int dim) {
    if (is.dim() == dim) return is;
    if (is.dim() < dim) {
        Eigen::VectorXcd a = Eigen::VectorXcd::Zero(dim);
        a.head(is.dim()) = is.amps;
        return InternalState(a);
    }
    return InternalState(is.amps.head(dim).eval());
}

}  // namespace

FockState build_bell_pairs(const DeviceConfig& config, const SimOptions& opts) {
    const int d = required_internal_dim(config);
    FockState state = fock::vacuum(kPhysicalModes, d, opts.effective_cutoff());
    for (int s = 0; s < 4; ++s) {
        const auto& src = config.sources[s];
        if (src.signal_mode == src.idler_mode) throw std::invalid_argument("source modes must be distinct");
        cd pump_phase = std::exp(cd{0.0, 2.0 * config.phase_offset(kPumpPhase0 + s)});
        fock::apply_two_mode_squeezer(state, src.xi * pump_phase, src.signal_mode, src.idler_mode,
                                      opts.max_pairs_per_source, truncated_internal(src.internal, d),
                                      truncated_internal(src.internal, d));
    }
    return state;
}

namespace {

// internal phases of the three gate MZIs: {center, outer A, outer B}
std::array<double, 3> rpeg_thetas(RpegMode mode, const std::array<double, 3>& offsets) {
    std::array<double, 3> t = offsets;
    switch (mode) {
        case RpegMode::Fusion: t[0] += kPi; break;
        case RpegMode::ControlledZ:
            t[0] += kCzTheta;
            t[1] += kCzTheta;
            t[2] += kCzTheta;
            break;
        case RpegMode::Bar: break;
    }
    return t;
}

}  // namespace

ModeUnitary rpeg_unitary(RpegMode mode, const std::array<double, 3>& offsets) {
    auto t = rpeg_thetas(mode, offsets);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(6, 6);
    m.block<2, 2>(0, 0) = mzi(t[1]);  // (dumpA, q1r0)
    m.block<2, 2>(2, 2) = mzi(t[0]);  // (q1r1, q2r1)
    m.block<2, 2>(4, 4) = mzi(t[2]);  // (q2r0, dumpB)
    return ModeUnitary(m);
}

const std::vector<int>& rpeg_mode_list() {
    static const std::vector<int> modes = {kDumpA, qubit_rail(0, 0), qubit_rail(0, 1),
                                           qubit_rail(1, 1), qubit_rail(1, 0), kDumpB};
    return modes;
}

ModeUnitary analysis_unitary(const QubitAnalysis& setting, double theta_offset, double phi_offset) {
    Eigen::Matrix2cd u = mzi(setting.theta_y + theta_offset) * phase_shifter(setting.phi_z + phi_offset);
    return ModeUnitary(u);
}

FockState evolve_through_device(FockState state, const DeviceConfig& config) {
    // the gate block is diagonal over its three MZIs; applying them
    // pairwise avoids the six-mode expansion
    auto t = rpeg_thetas(config.rpeg, {config.phase_offset(kRpegCenter), config.phase_offset(kRpegOuterA),
                                       config.phase_offset(kRpegOuterB)});
    state = fock::apply_physical_unitary(state, ModeUnitary(mzi(t[1])), {kDumpA, qubit_rail(0, 0)});
    state = fock::apply_physical_unitary(state, ModeUnitary(mzi(t[0])), {qubit_rail(0, 1), qubit_rail(1, 1)});
    state = fock::apply_physical_unitary(state, ModeUnitary(mzi(t[2])), {qubit_rail(1, 0), kDumpB});
    for (int q = 0; q < 4; ++q) {
        ModeUnitary u = analysis_unitary(config.analysis[q], config.phase_offset(analysis_theta_site(q)),
                                         config.phase_offset(analysis_phi_site(q)));
        state = fock::apply_physical_unitary(state, u, {qubit_rail(q, 0), qubit_rail(q, 1)});
    }
    return state;
}

OutcomeDistribution detection_probabilities(const FockState& analyzed, bool threshold) {
    OutcomeDistribution dist;
    dist.truncated = analyzed.truncated();
    const int d = analyzed.internal_dim();
    for (const auto& [occ, amp] : analyzed.amplitudes()) {
        double w = std::norm(amp);
        std::array<int, 4> n0{}, n1{};
        for (int q = 0; q < 4; ++q) {
            for (int l = 0; l < d; ++l) {
                n0[q] += occ.counts[qubit_rail(q, 0) * d + l];
                n1[q] += occ.counts[qubit_rail(q, 1) * d + l];
            }
        }
        if (!threshold) {
            int idx = 0;
            bool ok = true;
            for (int q = 0; q < 4 && ok; ++q) {
                if (n0[q] + n1[q] != 1)
                    ok = false;
                else
                    idx |= n1[q] << (3 - q);
            }
            if (ok) dist.raw[idx] += w;
        } else {
            // every pattern whose rails all clicked gets this key's weight
            std::array<int, 4> choices{};
            for (int q = 0; q < 4; ++q) {
                choices[q] = (n0[q] > 0 ? 1 : 0) | (n1[q] > 0 ? 2 : 0);
                if (choices[q] == 0) break;
            }
            if (choices[0] && choices[1] && choices[2] && choices[3]) {
                for (int idx = 0; idx < 16; ++idx) {
                    bool match = true;
                    for (int q = 0; q < 4 && match; ++q) {
                        int bit = (idx >> (3 - q)) & 1;
                        match = (choices[q] >> bit) & 1;
                    }
                    if (match) dist.raw[idx] += w;
                }
            }
        }
    }
    for (double p : dist.raw) dist.total += p;
    return dist;
}

OutcomeDistribution simulate(const DeviceConfig& config, const SimOptions& opts) {
    return detection_probabilities(evolve_through_device(build_bell_pairs(config, opts), config),
                                   opts.threshold);
}

OutcomeDistribution simulate_state(const FockState& prepared, const DeviceConfig& config,
                                   const SimOptions& opts) {
    return detection_probabilities(evolve_through_device(prepared, config), opts.threshold);
}

FockState emission_pattern_state(const DeviceConfig& config, const std::array<int, 4>& pairs,
                                 const SimOptions& opts) {
    if (required_internal_dim(config) != 1)
        throw std::invalid_argument("emission patterns require trivial internal states");
    FockState st(kPhysicalModes, 1, opts.effective_cutoff());
    fock::Occupation occ(kPhysicalModes);
    cd amp{1.0, 0.0};
    for (int s = 0; s < 4; ++s) {
        if (pairs[s] < 0) throw std::invalid_argument("pair counts must be non-negative");
        occ.counts[config.sources[s].signal_mode] += pairs[s];
        occ.counts[config.sources[s].idler_mode] += pairs[s];
        cd pump_phase = std::exp(cd{0.0, 2.0 * config.phase_offset(kPumpPhase0 + s)});
        for (int k = 0; k < pairs[s]; ++k) amp *= config.sources[s].xi * pump_phase;
    }
    if (occ.total() > st.cutoff()) throw std::invalid_argument("emission pattern exceeds the photon cutoff");
    st.add_amplitude(occ, amp);
    return st;
}

fock::Postselection coincidence_sector(const FockState& state) {
    FockState kept(state.mode_count(), state.internal_dim(), state.cutoff());
    if (state.truncated()) kept.mark_truncated();
    const int d = state.internal_dim();
    double prob = 0.0;
    for (const auto& [occ, amp] : state.amplitudes()) {
        bool ok = true;
        for (int q = 0; q < 4 && ok; ++q) {
            int n = 0;
            for (int r = 0; r < 2; ++r)
                for (int l = 0; l < d; ++l) n += occ.counts[qubit_rail(q, r) * d + l];
            ok = n == 1;
        }
        for (int dump : {kDumpA, kDumpB})
            for (int l = 0; l < d && ok; ++l) ok = occ.counts[dump * d + l] == 0;
        if (ok) {
            prob += std::norm(amp);
            kept.add_amplitude(occ, amp);
        }
    }
    if (prob <= 0.0) return {FockState(state.mode_count(), state.internal_dim(), state.cutoff()), 0.0};
    kept.scale(1.0 / std::sqrt(prob));
    return {std::move(kept), prob};
}

double gate_success_probability(RpegMode mode) {
    DeviceConfig cfg = ideal_config(mode);
    SimOptions opts;
    FockState st = build_bell_pairs(cfg, opts);
    double before = coincidence_sector(st).probability;
    st = fock::apply_physical_unitary(st, rpeg_unitary(mode), rpeg_mode_list());
    double after = coincidence_sector(st).probability;
    if (before <= 0.0) throw std::runtime_error("empty coincidence sector");
    return after / before;
}

std::array<bool, 4> local_frame(RpegMode mode) {
    switch (mode) {
        case RpegMode::Fusion: return {true, true, true, false};
        case RpegMode::ControlledZ: return {false, false, true, true};
        case RpegMode::Bar: return {false, false, false, false};
    }
    return {false, false, false, false};
}

MeasurementDial dial_for(graph::Pauli letter, bool h_frame) {
    using graph::Pauli;
    Pauli dev = letter;
    bool flip = false;
    if (h_frame) {
        // H X H = Z, H Z H = X, H Y H = -Y
        if (letter == Pauli::X)
            dev = Pauli::Z;
        else if (letter == Pauli::Z)
            dev = Pauli::X;
        else if (letter == Pauli::Y)
            flip = true;
    }
    switch (dev) {
        case Pauli::I:
        case Pauli::Z: return {0.0, 0.0, flip};
        case Pauli::X: return {kPi / 2.0, 0.0, flip};
        case Pauli::Y: return {kPi / 2.0, kPi / 2.0, flip};
    }
    return {};
}

namespace {

int apply_dials(DeviceConfig& cfg, const graph::PauliString& logical_setting) {
    if (logical_setting.size() != 4) throw std::invalid_argument("settings must cover four qubits");
    auto frame = local_frame(cfg.rpeg);
    int flip_mask = 0;
    for (int q = 0; q < 4; ++q) {
        MeasurementDial dial = dial_for(logical_setting.letters[q], frame[q]);
        cfg.analysis[q].theta_y = dial.theta;
        cfg.analysis[q].phi_z = dial.phi;
        if (dial.flip) flip_mask |= 1 << (3 - q);
    }
    return flip_mask;
}

OutcomeDistribution remap_flips(const OutcomeDistribution& rails, int flip_mask) {
    OutcomeDistribution logical;
    logical.total = rails.total;
    logical.truncated = rails.truncated;
    for (int idx = 0; idx < 16; ++idx) logical.raw[idx ^ flip_mask] = rails.raw[idx];
    return logical;
}

}  // namespace

OutcomeDistribution measure_setting(const DeviceConfig& config, const SimOptions& opts,
                                    const graph::PauliString& logical_setting) {
    DeviceConfig cfg = config;
    int flip_mask = apply_dials(cfg, logical_setting);
    return remap_flips(simulate(cfg, opts), flip_mask);
}

OutcomeDistribution measure_setting_state(const FockState& prepared, const DeviceConfig& config,
                                          const SimOptions& opts,
                                          const graph::PauliString& logical_setting) {
    DeviceConfig cfg = config;
    int flip_mask = apply_dials(cfg, logical_setting);
    return remap_flips(simulate_state(prepared, cfg, opts), flip_mask);
}

std::vector<double> device_expectations(const DeviceConfig& config, const SimOptions& opts,
                                        const graph::StabilizerGroup& group) {
    std::vector<double> out(group.size(), 1.0);
    for (std::size_t mask = 1; mask < group.size(); ++mask) {
        const auto& el = group.elements[mask];
        OutcomeDistribution dist = measure_setting(config, opts, el);
        double num = 0.0, den = 0.0;
        for (int j = 0; j < 16; ++j) {
            num += graph::outcome_eigenvalue(el, static_cast<unsigned>(j)) * dist.raw[j];
            den += dist.raw[j];
        }
        if (den <= 0.0) throw std::runtime_error("zero postselected probability for setting " + el.setting());
        out[mask] = el.sign * num / den;
    }
    return out;
}

graph::Graph state_graph(GraphStateKind kind) {
    switch (kind) {
        case GraphStateKind::Star4: return graph::Graph::star(4, 3);
        case GraphStateKind::Line4: return graph::Graph::path({2, 0, 1, 3});
    }
    throw std::invalid_argument("unknown state kind");
}

RpegMode rpeg_for(GraphStateKind kind) {
    return kind == GraphStateKind::Star4 ? RpegMode::Fusion : RpegMode::ControlledZ;
}

double logical_sector_fidelity(const FockState& state, const Eigen::VectorXcd& logical,
                               RpegMode frame_mode) {
    if (logical.size() != 16) throw std::invalid_argument("logical target must be a four-qubit vector");
    // map the target into device rail coordinates: |dev> = (prod_f H_f) |logical>
    Eigen::VectorXcd dev = logical;
    auto frame = local_frame(frame_mode);
    for (int q = 0; q < 4; ++q) {
        if (!frame[q]) continue;
        Eigen::VectorXcd next = Eigen::VectorXcd::Zero(16);
        for (int z = 0; z < 16; ++z) {
            int mask = 1 << (3 - q);
            int z0 = z & ~mask;
            double sgn = (z & mask) ? -1.0 : 1.0;
            next(z) = (dev(z0) + sgn * dev(z0 | mask)) / std::sqrt(2.0);
        }
        dev = next;
    }

    const int d = state.internal_dim();
    std::unordered_map<long, cd> acc;
    for (const auto& [occ, amp] : state.amplitudes()) {
        int z = 0;
        long label_key = 0;
        bool ok = true;
        for (int q = 0; q < 4 && ok; ++q) {
            int found = -1, label = -1, n = 0;
            for (int r = 0; r < 2; ++r) {
                for (int l = 0; l < d; ++l) {
                    int c = occ.counts[qubit_rail(q, r) * d + l];
                    n += c;
                    if (c == 1) {
                        found = r;
                        label = l;
                    }
                }
            }
            ok = n == 1;
            if (ok) {
                z |= found << (3 - q);
                label_key = label_key * d + label;
            }
        }
        for (int dump : {kDumpA, kDumpB})
            for (int l = 0; l < d && ok; ++l) ok = occ.counts[dump * d + l] == 0;
        if (!ok) continue;
        acc[label_key] += std::conj(dev(z)) * amp;
    }
    double norm2 = state.norm2();
    if (norm2 <= 0.0) return 0.0;
    double f = 0.0;
    for (const auto& [key, a] : acc) f += std::norm(a);
    return f / norm2;
}

std::vector<FringeSample> hom_fringe(const DeviceConfig& config, const std::vector<double>& phase_sweep,
                                     const SimOptions& opts) {
    DeviceConfig cfg = config;
    cfg.rpeg = RpegMode::Bar;
    cfg.sources[0].xi = 0.0;
    cfg.sources[3].xi = 0.0;
    for (auto& a : cfg.analysis) a = QubitAnalysis{};

    std::vector<FringeSample> out;
    out.reserve(phase_sweep.size());
    double base = config.phase_offset(kRpegCenter);
    for (double phase : phase_sweep) {
        cfg.phase_offsets[kRpegCenter] = base + phase;
        OutcomeDistribution dist = simulate(cfg, opts);
        out.push_back({phase, dist.raw[15]});  // both signals and both heralds on rail 1
    }
    return out;
}

HomVisibility hom_visibility(const std::vector<FringeSample>& samples) {
    std::vector<cal::PowerSample> fit_samples;
    fit_samples.reserve(samples.size());
    for (const auto& s : samples) fit_samples.push_back({s.phase, s.probability});
    HomVisibility res;
    res.fit = cal::fit_fringe(fit_samples);
    double n_max = res.fit.offset + res.fit.amplitude;
    double n_min = std::max(0.0, res.fit.offset - res.fit.amplitude);
    auto vp = visibility_conversion(n_max, n_min);
    res.visibility = vp.v;
    res.v_hom = vp.v_hom;
    return res;
}

VisibilityPair visibility_conversion(double n_max, double n_min) {
    if (n_max <= 0.0) throw std::invalid_argument("n_max must be positive");
    if (n_min < 0.0 || n_min > n_max) throw std::invalid_argument("need n_max >= n_min >= 0");
    return {(n_max - n_min) / (n_max + n_min), (n_max - 2.0 * n_min) / n_max};
}

std::string to_json(const DeviceConfig& config) {
    nlohmann::json j;
    for (const auto& s : config.sources) {
        nlohmann::json js;
        js["xi_re"] = s.xi.real();
        js["xi_im"] = s.xi.imag();
        js["signal"] = s.signal_mode;
        js["idler"] = s.idler_mode;
        if (s.internal.dim() > 1) {
            for (int l = 0; l < s.internal.dim(); ++l) {
                js["internal_re"].push_back(s.internal.amps(l).real());
                js["internal_im"].push_back(s.internal.amps(l).imag());
            }
        }
        j["sources"].push_back(js);
    }
    j["rpeg"] = rpeg_name(config.rpeg);
    for (const auto& a : config.analysis) {
        j["analysis"].push_back({{"phi_z", a.phi_z}, {"theta_y", a.theta_y}, {"monitor", a.monitored}});
    }
    j["phase_offsets"] = config.phase_offsets;
    return j.dump(2);
}

DeviceConfig config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("device config is not valid JSON: ") + e.what());
    }
    DeviceConfig c;
    try {
    if (!j.contains("sources") || j["sources"].size() != 4)
        throw std::invalid_argument("config needs exactly four sources");
    for (int s = 0; s < 4; ++s) {
        const auto& js = j["sources"][s];
        c.sources[s].xi = cd{js.at("xi_re").get<double>(), js.at("xi_im").get<double>()};
        c.sources[s].signal_mode = js.at("signal").get<int>();
        c.sources[s].idler_mode = js.at("idler").get<int>();
        if (js.contains("internal_re")) {
            auto re = js["internal_re"].get<std::vector<double>>();
            auto im = js["internal_im"].get<std::vector<double>>();
            Eigen::VectorXcd a(re.size());
            for (std::size_t l = 0; l < re.size(); ++l) a(l) = cd{re[l], im[l]};
            c.sources[s].internal = InternalState(a);
        }
    }
    c.rpeg = rpeg_from_name(j.at("rpeg").get<std::string>());
    if (!j.contains("analysis") || j["analysis"].size() != 4)
        throw std::invalid_argument("config needs four analysis settings");
    for (int q = 0; q < 4; ++q) {
        const auto& ja = j["analysis"][q];
        c.analysis[q].phi_z = ja.at("phi_z").get<double>();
        c.analysis[q].theta_y = ja.at("theta_y").get<double>();
        c.analysis[q].monitored = ja.at("monitor").get<int>();
        if (c.analysis[q].monitored != 0 && c.analysis[q].monitored != 1)
            throw std::invalid_argument("monitored rail must be 0 or 1");
    }
    if (j.contains("phase_offsets")) {
        c.phase_offsets = j["phase_offsets"].get<std::vector<double>>();
        if (!c.phase_offsets.empty() && static_cast<int>(c.phase_offsets.size()) != kPhaseSiteCount)
            throw std::invalid_argument("phase_offsets must list every heater site");
    }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad device config: ") + e.what());
    }
    return c;
}

}  // namespace photonsim::device
