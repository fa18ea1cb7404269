#pragma once

#include <array>
#include <string>
#include <vector>

#include "photonsim/calibration.hpp"
#include "photonsim/fock.hpp"
#include "photonsim/graph.hpp"

namespace photonsim::device {

using fock::cd;
using fock::FockState;
using fock::InternalState;
using fock::ModeUnitary;

// Physical mode layout. Each qubit q (0-based) is dual-rail encoded on
// modes 2q and 2q+1; two auxiliary rails absorb the light the
// entangling-gate splitters tap off.
inline constexpr int kPhysicalModes = 10;
inline constexpr int kDumpA = 8;
inline constexpr int kDumpB = 9;
inline constexpr int qubit_rail(int qubit, int rail) { return 2 * qubit + rail; }

// The demultiplexer groups the four pair sources so that sources 0/1 feed
// the Bell pair on qubits (1,3) and sources 3/2 feed qubits (2,4), with
// the signals of sources 1 and 2 meeting on the central gate splitter.
inline constexpr std::array<int, 4> kSourceSignalMode = {0, 1, 3, 2};
inline constexpr std::array<int, 4> kSourceIdlerMode = {4, 5, 7, 6};

// Thermo-optic phase-shifter sites, one offset slot per heater.
inline constexpr int kPumpPhase0 = 0;  // .. kPumpPhase0+3
inline constexpr int kRpegCenter = 4;
inline constexpr int kRpegOuterA = 5;
inline constexpr int kRpegOuterB = 6;
inline constexpr int kAnalysisBase = 7;  // phi_z then theta_y per qubit
inline constexpr int kPhaseSiteCount = 15;
inline constexpr int analysis_phi_site(int qubit) { return kAnalysisBase + 2 * qubit; }
inline constexpr int analysis_theta_site(int qubit) { return kAnalysisBase + 2 * qubit + 1; }

/// 2x2 50:50 coupler [[1, i], [i, 1]]/sqrt(2).
Eigen::Matrix2cd coupler();

/// Mach-Zehnder with internal phase theta: conj(C) * diag(1, e^{i theta}) * C.
/// The second coupler carries the conjugate convention so theta = 0 is the
/// identity and theta = pi the full crossing.
Eigen::Matrix2cd mzi(double theta);

/// Z-rotation dial: diag(1, e^{-i phi}).
Eigen::Matrix2cd phase_shifter(double phi);

struct SourceSpec {
    cd xi{0.0, 0.0};
    int signal_mode = 0;
    int idler_mode = 0;
    InternalState internal;  // carried by both photons of a pair
};

enum class RpegMode { Fusion, ControlledZ, Bar };

std::string rpeg_name(RpegMode mode);
RpegMode rpeg_from_name(const std::string& name);

struct QubitAnalysis {
    double phi_z = 0.0;
    double theta_y = 0.0;
    int monitored = 0;  // output rail wired to this qubit's detector
};

using AnalysisSetting = std::array<QubitAnalysis, 4>;

struct DeviceConfig {
    std::array<SourceSpec, 4> sources;
    RpegMode rpeg = RpegMode::Fusion;
    AnalysisSetting analysis{};
    std::vector<double> phase_offsets = std::vector<double>(kPhaseSiteCount, 0.0);

    double phase_offset(int site) const;
};

struct SimOptions {
    int max_pairs_per_source = 1;
    bool threshold = false;  // non-number-resolving detectors on the monitored rails only
    int cutoff = 0;          // 0 = default: 4 photons at first order, 6 with multiphoton

    int effective_cutoff() const { return cutoff > 0 ? cutoff : (max_pairs_per_source > 1 ? 6 : 4); }
};

/// Probabilities of the sixteen fourfold coincidence patterns. Pattern bit
/// order is most-significant = qubit 1; a bit gives the rail that clicked.
struct OutcomeDistribution {
    std::array<double, 16> raw{};
    double total = 0.0;
    bool truncated = false;

    std::array<double, 16> conditioned() const;
};

/// D1 mapping between the per-pulse pair probability and the squeezing
/// amplitude: p = s / sum_{k<=max_pairs} s^k with s = |xi|^2.
double xi_for_pair_probability(double p, int max_pairs);
double pair_probability_for_xi(double xi_abs, int max_pairs);

DeviceConfig ideal_config(RpegMode mode, double pair_probability = 0.03, int max_pairs = 1);
void set_pair_probability(DeviceConfig& config, double p, int max_pairs);
void set_sigma(DeviceConfig& config, double sigma);

/// Pumps the four squeezers coherently on the shared ten-mode space. The
/// pair amplitude picks up twice the pump-path phase offset (two pump
/// photons convert per pair).
FockState build_bell_pairs(const DeviceConfig& config, const SimOptions& opts = {});

/// Six-mode gate block over [dumpA, q1r0, q1r1, q2r1, q2r0, dumpB]:
/// fusion = central crossing (postselected parity check, success 1/2),
/// controlled-Z = three 1/3 splitters (postselected CZ, success 1/9),
/// bar = all pass-through. Offsets are the three heater errors.
ModeUnitary rpeg_unitary(RpegMode mode, const std::array<double, 3>& offsets = {0.0, 0.0, 0.0});

/// The gate's global mode list, matching rpeg_unitary's row order.
const std::vector<int>& rpeg_mode_list();

/// Per-qubit analysis chain MZI(theta) * PS(phi) on the qubit's two rails.
ModeUnitary analysis_unitary(const QubitAnalysis& setting, double theta_offset = 0.0,
                             double phi_offset = 0.0);

/// Full pipeline: sources, gate, analysis, then all sixteen coincidence
/// patterns (exact or threshold detection per opts).
OutcomeDistribution simulate(const DeviceConfig& config, const SimOptions& opts = {});

/// Same pipeline on an externally prepared pre-gate state.
OutcomeDistribution simulate_state(const FockState& prepared, const DeviceConfig& config,
                                   const SimOptions& opts = {});

/// Applies the gate and analysis stages without detection.
FockState evolve_through_device(FockState state, const DeviceConfig& config);

/// Coincidence-pattern probabilities of an analyzed state in one pass.
/// Exact mode requires exactly one photon on the pattern rail and none on
/// the partner rail; threshold mode credits every rail holding at least
/// one photon (a key may then contribute to several patterns).
OutcomeDistribution detection_probabilities(const FockState& analyzed, bool threshold);

/// The series term with exactly `pairs[i]` photon pairs in source i:
/// amplitude prod_i (xi_i e^{2 i pump_i})^{pairs[i]}. Requires trivial
/// internal states (used by the multiphoton contamination model).
FockState emission_pattern_state(const DeviceConfig& config, const std::array<int, 4>& pairs,
                                 const SimOptions& opts);

/// Postselected success probability of the configured gate on the ideal
/// four-photon Bell-product sector.
double gate_success_probability(RpegMode mode);

// -- logical-frame measurement ------------------------------------------

/// Local frame relating device rails to the logical graph-state basis,
/// fixed per gate mode (true = Hadamard on that qubit).
std::array<bool, 4> local_frame(RpegMode mode);

struct MeasurementDial {
    double theta = 0.0;
    double phi = 0.0;
    bool flip = false;  // recorded outcome bit is the rail bit XOR flip
};

/// Analysis dial measuring the given logical Pauli letter through the
/// frame. Identity letters dial the Z basis and contribute no sign.
MeasurementDial dial_for(graph::Pauli letter, bool h_frame);

/// Outcome distribution for one logical Pauli setting, re-indexed to
/// logical outcome bits (bit 0 = +1 eigenvector of that qubit's letter).
OutcomeDistribution measure_setting(const DeviceConfig& config, const SimOptions& opts,
                                    const graph::PauliString& logical_setting);

/// Same, starting from an externally prepared pre-gate state.
OutcomeDistribution measure_setting_state(const FockState& prepared, const DeviceConfig& config,
                                          const SimOptions& opts,
                                          const graph::PauliString& logical_setting);

/// <element> for every stabilizer group element from exact simulated
/// probabilities (identity element reports +1).
std::vector<double> device_expectations(const DeviceConfig& config, const SimOptions& opts,
                                        const graph::StabilizerGroup& group);

enum class GraphStateKind { Star4, Line4 };

graph::Graph state_graph(GraphStateKind kind);
RpegMode rpeg_for(GraphStateKind kind);

/// Fidelity of the one-photon-per-qubit sector with a logical target
/// state, internal labels traced out. `state` must already be
/// postselected onto that sector.
double logical_sector_fidelity(const FockState& state, const Eigen::VectorXcd& logical,
                               RpegMode frame_mode);

/// Exact-pattern postselection onto the one-photon-per-qubit sector.
fock::Postselection coincidence_sector(const FockState& state);

// -- interference fringe --------------------------------------------------

struct FringeSample {
    double phase = 0.0;
    double probability = 0.0;
};

/// Heralded two-photon interference between the signals of sources 1 and 2
/// (0-based) on the central gate MZI: idlers herald, the central phase is
/// swept, coincidences are fourfold.
std::vector<FringeSample> hom_fringe(const DeviceConfig& config, const std::vector<double>& phase_sweep,
                                     const SimOptions& opts = {});

struct HomVisibility {
    double visibility = 0.0;  // (Nmax - Nmin) / (Nmax + Nmin)
    double v_hom = 0.0;       // (Nmax - 2 Nmin) / Nmax
    cal::FringeFit fit;
};

HomVisibility hom_visibility(const std::vector<FringeSample>& samples);

struct VisibilityPair {
    double v = 0.0;
    double v_hom = 0.0;
};

/// V = (n_max - n_min)/(n_max + n_min) and the dip-equivalent
/// V_hom = (n_max - 2 n_min)/n_max. Requires n_max >= n_min >= 0, n_max > 0.
VisibilityPair visibility_conversion(double n_max, double n_min);

// -- serialization ---------------------------------------------------------

std::string to_json(const DeviceConfig& config);
DeviceConfig config_from_json(const std::string& text);

}  // namespace photonsim::device
