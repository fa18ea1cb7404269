#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace photonsim::fock {

using cd = std::complex<double>;

inline constexpr double kPruneTol = 1e-12;    // amplitudes below this are dropped
inline constexpr double kUnitaryTol = 1e-10;  // entrywise tolerance for U†U = I
inline constexpr double kNormTol = 1e-9;

/// Photon counts per effective mode. An effective mode is one
/// (physical mode, internal label) pair; the layout is
/// effective_index = physical_mode * internal_dim + label.
struct Occupation {
    std::vector<std::uint8_t> counts;

    Occupation() = default;
    explicit Occupation(std::size_t n_modes) : counts(n_modes, 0) {}

    int total() const {
        int t = 0;
        for (auto c : counts) t += c;
        return t;
    }
    bool operator==(const Occupation& o) const { return counts == o.counts; }
};

struct OccupationHash {
    std::size_t operator()(const Occupation& o) const {
        // FNV-1a over the count bytes
        std::uint64_t h = 1469598103934665603ULL;
        for (auto c : o.counts) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

/// Single-photon internal (spectral) state over the internal-label basis.
struct InternalState {
    Eigen::VectorXcd amps;

    InternalState() : amps(Eigen::VectorXcd::Ones(1)) {}
    explicit InternalState(Eigen::VectorXcd a);

    int dim() const { return static_cast<int>(amps.size()); }
};

/// A unitary on a set of modes, checked to kUnitaryTol at construction.
class ModeUnitary {
  public:
    explicit ModeUnitary(Eigen::MatrixXcd m);

    int dim() const { return static_cast<int>(mat_.rows()); }
    const Eigen::MatrixXcd& matrix() const { return mat_; }
    cd operator()(int i, int j) const { return mat_(i, j); }

    static ModeUnitary identity(int dim) { return ModeUnitary(Eigen::MatrixXcd::Identity(dim, dim)); }

  private:
    Eigen::MatrixXcd mat_;
};

/// Sparse multimode bosonic state with a total-photon cutoff.
///
/// Amplitudes are stored per occupation vector over effective modes
/// (physical x internal label). States may be sub-normalized after
/// postselection and super-normalized as raw squeezer series; norm
/// bookkeeping is up to the caller.
class FockState {
  public:
    using AmplitudeMap = std::unordered_map<Occupation, cd, OccupationHash>;

    FockState(int mode_count, int internal_dim, int cutoff);

    int mode_count() const { return mode_count_; }
    int internal_dim() const { return internal_dim_; }
    int effective_mode_count() const { return mode_count_ * internal_dim_; }
    int cutoff() const { return cutoff_; }
    bool truncated() const { return truncated_; }
    void mark_truncated() { truncated_ = true; }

    int effective_index(int physical_mode, int label) const;

    const AmplitudeMap& amplitudes() const { return amps_; }
    cd amplitude(const Occupation& occ) const;

    /// Adds into the stored amplitude; drops terms above the cutoff and
    /// flags the truncation instead of failing.
    void add_amplitude(const Occupation& occ, cd value);

    double norm2() const;
    void scale(cd factor);
    void normalize();
    void prune(double tol = kPruneTol);

    std::size_t term_count() const { return amps_.size(); }

  private:
    int mode_count_;
    int internal_dim_;
    int cutoff_;
    bool truncated_ = false;
    AmplitudeMap amps_;
};

struct Postselection {
    FockState state;
    double probability = 0.0;
};

/// All-zero occupation with unit amplitude.
FockState vacuum(int mode_count, int internal_dim, int cutoff);

/// Unnormalized two-mode squeezed series sum_k xi^k |k,k> on the given
/// physical modes of a fresh state. Both photons of pair k carry the
/// corresponding internal state. Throws if 2*max_pairs exceeds the cutoff.
FockState two_mode_squeezed(int mode_count, int internal_dim, int cutoff, cd xi, int signal_mode,
                            int idler_mode, int max_pairs,
                            const InternalState& signal_internal = InternalState(),
                            const InternalState& idler_internal = InternalState());

/// In-place product with a squeezer series acting on (signal, idler) of an
/// existing state; used to pump several sources on a shared mode space.
void apply_two_mode_squeezer(FockState& state, cd xi, int signal_mode, int idler_mode,
                             int max_pairs, const InternalState& signal_internal = InternalState(),
                             const InternalState& idler_internal = InternalState());

/// Evolves the state by U on the listed effective modes via the multiphoton
/// homomorphism a†_j -> sum_k U_kj a†_k.
FockState apply_unitary(const FockState& state, const ModeUnitary& u, const std::vector<int>& effective_modes);

/// Same, with U acting identically on every internal label of the listed
/// physical modes (U ⊗ I_internal).
FockState apply_physical_unitary(const FockState& state, const ModeUnitary& u,
                                 const std::vector<int>& physical_modes);

/// Concatenates the mode lists of two states. Internal dims must match.
/// The combined cutoff defaults to the sum of both budgets; a smaller
/// explicit cutoff truncates and flags.
FockState tensor(const FockState& a, const FockState& b, int cutoff = -1);

/// Projects onto a detection pattern over physical modes. Photon counts are
/// aggregated over internal labels; kept amplitudes stay label-coherent.
///
/// Exact mode: every listed mode must hold exactly the stated count.
/// Threshold mode: count >= 1 means "at least one photon" (click) and
/// count 0 means "no photon" (no click); unlisted modes are unmonitored.
/// A zero-probability pattern returns probability 0 and an empty state.
Postselection postselect(const FockState& state, const std::map<int, int>& pattern, bool threshold);

cd overlap(const FockState& a, const FockState& b);

/// Internal amplitude overlap lambda(sigma) between any two heralded
/// photons such that a heralded two-photon interference fringe on a
/// balanced Mach-Zehnder shows visibility sigma. Solving the fringe model
/// (1 + L) / (3 - L) = sigma for the probability-level overlap L = lambda^2
/// gives L = (3 sigma - 1) / (1 + sigma); a pure-state model cannot reach
/// fringe visibilities below 1/3, so lambda clamps to 0 there.
double pairwise_overlap_from_visibility(double sigma);

/// Replaces source i's photon internal state with
/// sqrt(s)|0> + sqrt(1-s)|i>, s chosen so every pair of heralded photons
/// interferes with fringe visibility sigma.
std::vector<InternalState> dephase_internal(const std::vector<InternalState>& states, double sigma);

}  // namespace photonsim::fock
