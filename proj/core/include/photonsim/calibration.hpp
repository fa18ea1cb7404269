#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace photonsim::cal {

/// Fitted transmission fringe T(P) = A sin(f P + phi0) + c, with P the
/// dissipated heater power in watts.
struct FringeFit {
    double amplitude = 0.0;   // A > 0
    double rad_per_watt = 0.0;  // f > 0
    double phi0 = 0.0;
    double offset = 0.0;  // c
    double residual_rms = 0.0;
};

/// Heater current polynomial I(V) = rho1 V + rho2 V^2 + rho3 V^3.
struct IvFit {
    double rho1 = 0.0;
    double rho2 = 0.0;
    double rho3 = 0.0;

    double current(double v) const { return rho1 * v + rho2 * v * v + rho3 * v * v * v; }
    double power(double v) const { return current(v) * v; }
};

struct PowerSample {
    double power_w = 0.0;
    double transmission = 0.0;
};

struct IvSample {
    double voltage = 0.0;
    double current = 0.0;
};

/// Least-squares sinusoid fit. The frequency is located by a dense scan
/// with a linear solve of (A, phi0, c) at each candidate, then refined;
/// this doubles as the multi-start over phi0. Throws when the samples
/// carry no fringe or are too few (< 8) to constrain the model.
FringeFit fit_fringe(const std::vector<PowerSample>& samples);

/// Plain linear least squares for the IV polynomial.
IvFit fit_iv(const std::vector<IvSample>& samples);

struct VoltageRange {
    double v_min = 0.0;
    double v_max = 0.0;
};

/// Smallest non-negative voltage with f * I(V) * V + phi_c = phi_d modulo
/// 2*pi inside the range. Roots of the quartic are located by safeguarded
/// bracketing and polished to better than 1e-9 rad. Throws when no branch
/// of the target is reachable.
double dial_phase(double phi_d, const FringeFit& fringe, const IvFit& iv, const VoltageRange& range);

/// Phase offset produced by a power deviation through the thermal
/// cross-talk coefficient (rad/mW * mW).
double crosstalk_phase_error(double power_deviation_mw, double coefficient_rad_per_mw);

struct LossEntry {
    std::string label;
    double db = 0.0;
};

struct LossBudget {
    std::vector<LossEntry> entries;
    double total_db = 0.0;
};

LossBudget loss_total(const std::vector<LossEntry>& entries);

/// Reference per-component losses measured on the die's test structures.
namespace component_db {
inline constexpr double kGratingCoupler = 4.0;
inline constexpr double kMmi = 0.65;
inline constexpr double kStraightPerCm = 3.0;
inline constexpr double kSpiralPerCm = 7.5;
inline constexpr double kOffChip = 3.0;
}  // namespace component_db

/// Signal-photon path budget: off-chip losses, one input grating, two MMIs,
/// half the source spiral (1.2 cm) and the routing straights (2/3 cm).
std::vector<LossEntry> default_signal_path();

/// Mean, mean absolute deviation and standard deviation of dissipated
/// powers over chip configurations. Both dispersion statistics are
/// reported since "average deviation" admits either reading.
struct PowerStats {
    double mean = 0.0;
    double mean_abs_dev = 0.0;
    double std_dev = 0.0;
    std::size_t count = 0;
};

PowerStats power_stats(const std::vector<double>& powers_mw);

/// CSV ingestion: (configuration_id, power_mW) with a header row.
std::vector<double> read_power_csv(std::istream& is);
/// CSV ingestion: (voltage, current, transmission) with a header row.
void read_fringe_csv(std::istream& is, std::vector<IvSample>& iv, std::vector<PowerSample>& fringe);

}  // namespace photonsim::cal
