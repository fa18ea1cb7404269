#include "photonsim/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace photonsim::cal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// For a fixed frequency the model is linear in (a, b, c) with
// T = a sin(f P) + b cos(f P) + c; returns the residual SSE.
double linear_fit_at_frequency(const std::vector<PowerSample>& samples, double f, double* a_out,
                               double* b_out, double* c_out) {
    const auto n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd m(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, 0) = std::sin(f * samples[i].power_w);
        m(i, 1) = std::cos(f * samples[i].power_w);
        m(i, 2) = 1.0;
        y(i) = samples[i].transmission;
    }
    Eigen::Vector3d sol = (m.transpose() * m).ldlt().solve(m.transpose() * y);
    if (a_out) *a_out = sol(0);
    if (b_out) *b_out = sol(1);
    if (c_out) *c_out = sol(2);
    return (m * sol - y).squaredNorm();
}

}  // namespace

FringeFit fit_fringe(const std::vector<PowerSample>& samples) {
    if (samples.size() < 8) throw std::invalid_argument("need at least 8 fringe samples");

    double p_min = samples[0].power_w, p_max = samples[0].power_w;
    double t_min = samples[0].transmission, t_max = samples[0].transmission;
    for (const auto& s : samples) {
        p_min = std::min(p_min, s.power_w);
        p_max = std::max(p_max, s.power_w);
        t_min = std::min(t_min, s.transmission);
        t_max = std::max(t_max, s.transmission);
    }
    const double span = p_max - p_min;
    if (span <= 0.0) throw std::invalid_argument("fringe samples cover no power span");
    if (t_max - t_min < 1e-12) throw std::invalid_argument("samples carry no fringe");

    // coarse frequency scan: between half a period and ~16 periods over the span
    const double f_lo = 0.5 * kTwoPi / span;
    const double f_hi = 16.0 * kTwoPi / span;
    const int n_scan = 2048;
    double best_f = f_lo, best_sse = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n_scan; ++i) {
        double f = f_lo + (f_hi - f_lo) * i / n_scan;
        double sse = linear_fit_at_frequency(samples, f, nullptr, nullptr, nullptr);
        if (sse < best_sse) {
            best_sse = sse;
            best_f = f;
        }
    }
    // golden-section refinement around the best scan point
    double lo = std::max(f_lo, best_f - (f_hi - f_lo) / n_scan);
    double hi = std::min(f_hi, best_f + (f_hi - f_lo) / n_scan);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double s1 = linear_fit_at_frequency(samples, x1, nullptr, nullptr, nullptr);
    double s2 = linear_fit_at_frequency(samples, x2, nullptr, nullptr, nullptr);
    for (int it = 0; it < 200 && hi - lo > 1e-14 * best_f; ++it) {
        if (s1 < s2) {
            hi = x2;
            x2 = x1;
            s2 = s1;
            x1 = hi - gr * (hi - lo);
            s1 = linear_fit_at_frequency(samples, x1, nullptr, nullptr, nullptr);
        } else {
            lo = x1;
            x1 = x2;
            s1 = s2;
            x2 = lo + gr * (hi - lo);
            s2 = linear_fit_at_frequency(samples, x2, nullptr, nullptr, nullptr);
        }
    }
    double f = 0.5 * (lo + hi);
    double a, b, c;
    double sse = linear_fit_at_frequency(samples, f, &a, &b, &c);

    double amplitude = std::hypot(a, b);
    if (amplitude < 1e-9 * std::max(1.0, std::abs(c)))
        throw std::invalid_argument("samples carry no fringe");
    // a sin(fP) + b cos(fP) = A sin(fP + phi0)
    double phi0 = std::atan2(b, a);
    if (phi0 < 0.0) phi0 += kTwoPi;

    FringeFit fit;
    fit.amplitude = amplitude;
    fit.rad_per_watt = f;
    fit.phi0 = phi0;
    fit.offset = c;
    fit.residual_rms = std::sqrt(sse / static_cast<double>(samples.size()));
    return fit;
}

IvFit fit_iv(const std::vector<IvSample>& samples) {
    if (samples.size() < 3) throw std::invalid_argument("need at least 3 IV samples");
    const auto n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd m(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = samples[i].voltage;
        m(i, 0) = v;
        m(i, 1) = v * v;
        m(i, 2) = v * v * v;
        y(i) = samples[i].current;
    }
    Eigen::Vector3d sol = (m.transpose() * m).ldlt().solve(m.transpose() * y);
    return {sol(0), sol(1), sol(2)};
}

namespace {

// phase delivered at voltage v
double forward_phase(double v, const FringeFit& fringe, const IvFit& iv) {
    return fringe.rad_per_watt * iv.power(v) + fringe.phi0;
}

}  // namespace

double dial_phase(double phi_d, const FringeFit& fringe, const IvFit& iv, const VoltageRange& range) {
    if (range.v_min < 0.0 || range.v_max <= range.v_min)
        throw std::invalid_argument("invalid voltage range");
    if (fringe.rad_per_watt <= 0.0) throw std::invalid_argument("fringe fit has non-positive frequency");

    const int n_grid = 4096;
    auto root_in = [&](double target, double lo, double hi) {
        // bisection on g(v) = phase(v) - target, then Newton polish
        auto g = [&](double v) { return forward_phase(v, fringe, iv) - target; };
        double glo = g(lo), ghi = g(hi);
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
            double mid = 0.5 * (lo + hi);
            double gm = g(mid);
            if ((glo <= 0.0) == (gm <= 0.0)) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
                ghi = gm;
            }
        }
        double v = 0.5 * (lo + hi);
        for (int it = 0; it < 4; ++it) {
            double d = fringe.rad_per_watt *
                       (2.0 * iv.rho1 * v + 3.0 * iv.rho2 * v * v + 4.0 * iv.rho3 * v * v * v);
            if (std::abs(d) < 1e-30) break;
            v -= g(v) / d;
        }
        return v;
    };

    // phase range over the voltage interval sets which 2*pi branches to try
    double ph_lo = std::numeric_limits<double>::infinity();
    double ph_hi = -std::numeric_limits<double>::infinity();
    std::vector<double> grid_phase(n_grid + 1);
    for (int i = 0; i <= n_grid; ++i) {
        double v = range.v_min + (range.v_max - range.v_min) * i / n_grid;
        grid_phase[i] = forward_phase(v, fringe, iv);
        ph_lo = std::min(ph_lo, grid_phase[i]);
        ph_hi = std::max(ph_hi, grid_phase[i]);
    }
    int k_min = static_cast<int>(std::floor((ph_lo - phi_d) / kTwoPi)) - 1;
    int k_max = static_cast<int>(std::ceil((ph_hi - phi_d) / kTwoPi)) + 1;

    double best = std::numeric_limits<double>::infinity();
    for (int k = k_min; k <= k_max; ++k) {
        double target = phi_d + kTwoPi * k;
        if (target < ph_lo - 1e-12 || target > ph_hi + 1e-12) continue;
        for (int i = 0; i < n_grid; ++i) {
            double a = grid_phase[i] - target, b = grid_phase[i + 1] - target;
            if (a == 0.0) {
                best = std::min(best, range.v_min + (range.v_max - range.v_min) * i / n_grid);
            } else if ((a < 0.0) != (b < 0.0)) {
                double lo = range.v_min + (range.v_max - range.v_min) * i / n_grid;
                double hi = range.v_min + (range.v_max - range.v_min) * (i + 1) / n_grid;
                best = std::min(best, root_in(target, lo, hi));
            }
        }
        if (grid_phase[n_grid] == target) best = std::min(best, range.v_max);
    }
    if (!std::isfinite(best)) throw std::invalid_argument("target phase unreachable within the voltage range");
    return best;
}

double crosstalk_phase_error(double power_deviation_mw, double coefficient_rad_per_mw) {
    if (power_deviation_mw < 0.0 || coefficient_rad_per_mw < 0.0)
        throw std::invalid_argument("crosstalk inputs must be non-negative");
    return power_deviation_mw * coefficient_rad_per_mw;
}

LossBudget loss_total(const std::vector<LossEntry>& entries) {
    LossBudget b;
    b.entries = entries;
    for (const auto& e : entries) b.total_db += e.db;
    return b;
}

std::vector<LossEntry> default_signal_path() {
    using namespace component_db;
    return {
        {"off-chip", kOffChip},
        {"input grating coupler", kGratingCoupler},
        {"MMI", kMmi},
        {"MMI", kMmi},
        {"source spiral (half, 1.2 cm)", kSpiralPerCm * 1.2},
        {"routing straights (0.6667 cm)", kStraightPerCm * 0.6667},
    };
}

PowerStats power_stats(const std::vector<double>& powers_mw) {
    if (powers_mw.empty()) throw std::invalid_argument("no power samples");
    PowerStats s;
    s.count = powers_mw.size();
    for (double p : powers_mw) s.mean += p;
    s.mean /= static_cast<double>(s.count);
    double var = 0.0;
    for (double p : powers_mw) {
        s.mean_abs_dev += std::abs(p - s.mean);
        var += (p - s.mean) * (p - s.mean);
    }
    s.mean_abs_dev /= static_cast<double>(s.count);
    s.std_dev = s.count > 1 ? std::sqrt(var / static_cast<double>(s.count - 1)) : 0.0;
    return s;
}

std::vector<double> read_power_csv(std::istream& is) {
    std::vector<double> out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (first && line.find_first_not_of("-+.0123456789eE, \t") != std::string::npos) {
            first = false;
            continue;  // header
        }
        first = false;
        std::stringstream ss(line);
        std::string id, power;
        if (!std::getline(ss, id, ',') || !std::getline(ss, power))
            throw std::runtime_error("malformed power CSV line: " + line);
        out.push_back(std::stod(power));
    }
    return out;
}

void read_fringe_csv(std::istream& is, std::vector<IvSample>& iv, std::vector<PowerSample>& fringe) {
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (first && line.find_first_not_of("-+.0123456789eE, \t") != std::string::npos) {
            first = false;
            continue;
        }
        first = false;
        std::stringstream ss(line);
        std::string v, i, t;
        if (!std::getline(ss, v, ',') || !std::getline(ss, i, ',') || !std::getline(ss, t))
            throw std::runtime_error("malformed fringe CSV line: " + line);
        double voltage = std::stod(v), current = std::stod(i), trans = std::stod(t);
        iv.push_back({voltage, current});
        fringe.push_back({voltage * current, trans});
    }
}

}  // namespace photonsim::cal
