#include "photonsim/fock.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace photonsim::fock {

namespace {

double factorial(int n) {
    static const double table[] = {1., 1., 2., 6., 24., 120., 720., 5040., 40320., 362880., 3628800., 39916800., 479001600.};
    if (n < 0) throw std::invalid_argument("factorial of negative number");
    if (n < static_cast<int>(sizeof(table) / sizeof(table[0]))) return table[n];
    double f = table[12];
    for (int k = 13; k <= n; ++k) f *= k;
    return f;
}

}  // namespace

InternalState::InternalState(Eigen::VectorXcd a) : amps(std::move(a)) {
    if (amps.size() < 1) throw std::invalid_argument("internal state needs at least one label");
    if (std::abs(amps.norm() - 1.0) > kUnitaryTol)
        throw std::invalid_argument("internal state must be unit norm");
}

ModeUnitary::ModeUnitary(Eigen::MatrixXcd m) : mat_(std::move(m)) {
    if (mat_.rows() != mat_.cols()) throw std::invalid_argument("mode unitary must be square");
    Eigen::MatrixXcd gram = mat_.adjoint() * mat_;
    gram -= Eigen::MatrixXcd::Identity(mat_.rows(), mat_.cols());
    if (gram.cwiseAbs().maxCoeff() > kUnitaryTol)
        throw std::invalid_argument("matrix is not unitary within tolerance");
}

FockState::FockState(int mode_count, int internal_dim, int cutoff)
    : mode_count_(mode_count), internal_dim_(internal_dim), cutoff_(cutoff) {
    if (mode_count < 1) throw std::invalid_argument("mode_count must be >= 1");
    if (internal_dim < 1) throw std::invalid_argument("internal_dim must be >= 1");
    if (cutoff < 0) throw std::invalid_argument("cutoff must be >= 0");
}

int FockState::effective_index(int physical_mode, int label) const {
    if (physical_mode < 0 || physical_mode >= mode_count_) throw std::out_of_range("physical mode out of range");
    if (label < 0 || label >= internal_dim_) throw std::out_of_range("internal label out of range");
    return physical_mode * internal_dim_ + label;
}

cd FockState::amplitude(const Occupation& occ) const {
    auto it = amps_.find(occ);
    return it == amps_.end() ? cd{0.0, 0.0} : it->second;
}

void FockState::add_amplitude(const Occupation& occ, cd value) {
    if (static_cast<int>(occ.counts.size()) != effective_mode_count())
        throw std::invalid_argument("occupation length does not match effective mode count");
    if (occ.total() > cutoff_) {
        truncated_ = true;
        return;
    }
    auto [it, inserted] = amps_.try_emplace(occ, value);
    if (!inserted) it->second += value;
}

double FockState::norm2() const {
    double n = 0.0;
    for (const auto& [occ, a] : amps_) n += std::norm(a);
    return n;
}

void FockState::scale(cd factor) {
    for (auto& [occ, a] : amps_) a *= factor;
}

void FockState::normalize() {
    double n = std::sqrt(norm2());
    if (n <= 0.0) throw std::runtime_error("cannot normalize a zero state");
    scale(1.0 / n);
}

void FockState::prune(double tol) {
    for (auto it = amps_.begin(); it != amps_.end();) {
        if (std::abs(it->second) < tol)
            it = amps_.erase(it);
        else
            ++it;
    }
}

FockState vacuum(int mode_count, int internal_dim, int cutoff) {
    FockState st(mode_count, internal_dim, cutoff);
    st.add_amplitude(Occupation(static_cast<std::size_t>(mode_count) * internal_dim), 1.0);
    return st;
}

namespace {

// Distributes n photons of one internal-superposed creation operator
// A† = sum_l c_l a†_{mode,l} onto an occupation, i.e. expands (A†)^n.
// Calls sink(occupation_delta, coefficient) for every resulting monomial;
// the coefficient already contains the multinomial weight.
void expand_internal_power(const FockState& st, int physical_mode, const InternalState& internal, int n,
                           const std::function<void(const std::vector<std::pair<int, int>>&, cd)>& sink) {
    const int d = internal.dim();
    std::vector<std::pair<int, int>> placement;  // (effective mode, count)
    std::function<void(int, int, cd)> rec = [&](int label, int remaining, cd coeff) {
        if (label == d - 1) {
            cd c = coeff * std::pow(internal.amps(label), remaining) / factorial(remaining);
            if (remaining > 0) placement.emplace_back(st.effective_index(physical_mode, label), remaining);
            sink(placement, c * factorial(n));
            if (remaining > 0) placement.pop_back();
            return;
        }
        for (int m = 0; m <= remaining; ++m) {
            cd c = coeff * std::pow(internal.amps(label), m) / factorial(m);
            if (m > 0) placement.emplace_back(st.effective_index(physical_mode, label), m);
            rec(label + 1, remaining - m, c);
            if (m > 0) placement.pop_back();
        }
    };
    rec(0, n, cd{1.0, 0.0});
}

void check_internal_dim(const FockState& st, const InternalState& is) {
    if (is.dim() > st.internal_dim())
        throw std::invalid_argument("internal state dimension exceeds the state's internal_dim");
}

InternalState padded(const InternalState& is, int dim) {
    if (is.dim() == dim) return is;
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(dim);
    a.head(is.dim()) = is.amps;
    return InternalState(a);
}

}  // namespace

namespace {

// -1 unless the internal state occupies a single label
int single_support_label(const InternalState& is) {
    int label = -1;
    for (int l = 0; l < is.dim(); ++l) {
        if (std::abs(is.amps(l)) <= 1e-15) continue;
        if (label >= 0) return -1;
        label = l;
    }
    return label;
}

}  // namespace

void apply_two_mode_squeezer(FockState& state, cd xi, int signal_mode, int idler_mode, int max_pairs,
                             const InternalState& signal_internal, const InternalState& idler_internal) {
    if (signal_mode == idler_mode) throw std::invalid_argument("signal and idler modes must differ");
    if (2 * max_pairs > state.cutoff()) throw std::invalid_argument("2*max_pairs exceeds the photon cutoff");
    check_internal_dim(state, signal_internal);
    check_internal_dim(state, idler_internal);
    const InternalState sig = padded(signal_internal, state.internal_dim());
    const InternalState idl = padded(idler_internal, state.internal_dim());

    FockState out(state.mode_count(), state.internal_dim(), state.cutoff());
    if (state.truncated()) out.mark_truncated();

    const int ls = single_support_label(sig);
    const int li = single_support_label(idl);
    if (ls >= 0 && li >= 0) {
        const int sig_eff = state.effective_index(signal_mode, ls);
        const int idl_eff = state.effective_index(idler_mode, li);
        const cd cs = sig.amps(ls), ci = idl.amps(li);
        for (const auto& [occ, amp] : state.amplitudes()) {
            for (int k = 0; k <= max_pairs; ++k) {
                if (occ.total() + 2 * k > state.cutoff()) {
                    if (k > 0) out.mark_truncated();
                    break;
                }
                Occupation o = occ;
                const int n0 = o.counts[sig_eff], m0 = o.counts[idl_eff];
                o.counts[sig_eff] = static_cast<std::uint8_t>(n0 + k);
                o.counts[idl_eff] = static_cast<std::uint8_t>(m0 + k);
                double bose = std::sqrt(factorial(n0 + k) / factorial(n0) * factorial(m0 + k) / factorial(m0));
                out.add_amplitude(o, amp * std::pow(xi * cs * ci, k) / factorial(k) * bose);
            }
        }
        out.prune();
        state = std::move(out);
        return;
    }

    for (const auto& [occ, amp] : state.amplitudes()) {
        for (int k = 0; k <= max_pairs; ++k) {
            if (occ.total() + 2 * k > state.cutoff()) {
                if (k > 0) out.mark_truncated();
                break;
            }
            // (xi A† B†)^k / k! acting on this term
            cd pref = std::pow(xi, k) / factorial(k);
            expand_internal_power(state, signal_mode, sig, k, [&](const auto& sig_placement, cd cs) {
                expand_internal_power(state, idler_mode, idl, k, [&](const auto& idl_placement, cd ci) {
                    Occupation o = occ;
                    // creation-operator bose factors: (a†)^m on |n> gives sqrt((n+m)!/n!)
                    double bose = 1.0;
                    auto place = [&](const std::pair<int, int>& pl) {
                        int idx = pl.first, m = pl.second;
                        int n0 = o.counts[idx];
                        bose *= std::sqrt(factorial(n0 + m) / factorial(n0));
                        o.counts[idx] = static_cast<std::uint8_t>(n0 + m);
                    };
                    for (const auto& pl : sig_placement) place(pl);
                    for (const auto& pl : idl_placement) place(pl);
                    out.add_amplitude(o, amp * pref * cs * ci * bose);
                });
            });
        }
    }
    out.prune();
    state = std::move(out);
}

FockState two_mode_squeezed(int mode_count, int internal_dim, int cutoff, cd xi, int signal_mode,
                            int idler_mode, int max_pairs, const InternalState& signal_internal,
                            const InternalState& idler_internal) {
    FockState st = vacuum(mode_count, internal_dim, cutoff);
    apply_two_mode_squeezer(st, xi, signal_mode, idler_mode, max_pairs, signal_internal, idler_internal);
    return st;
}

namespace {

// two-mode special case: expands (U00 a† + U10 b†)^{n_a} (U01 a† + U11 b†)^{n_b}
// with binomial bookkeeping and no scratch allocations
void apply_two_mode(const FockState& state, const ModeUnitary& u, int mode_a, int mode_b, FockState& out) {
    const cd u00 = u(0, 0), u10 = u(1, 0), u01 = u(0, 1), u11 = u(1, 1);
    for (const auto& [occ, amp] : state.amplitudes()) {
        const int na = occ.counts[mode_a], nb = occ.counts[mode_b];
        const int n = na + nb;
        if (n == 0) {
            out.add_amplitude(occ, amp);
            continue;
        }
        const double in_fact = factorial(na) * factorial(nb);
        Occupation o = occ;
        for (int ma = 0; ma <= n; ++ma) {
            const int mb = n - ma;
            cd coeff{0.0, 0.0};
            const int j_lo = std::max(0, ma - nb), j_hi = std::min(na, ma);
            for (int j = j_lo; j <= j_hi; ++j) {
                // j photons of mode a staying in a, ma-j arriving from b
                double comb = factorial(na) / (factorial(j) * factorial(na - j)) * factorial(nb) /
                              (factorial(ma - j) * factorial(nb - ma + j));
                coeff += comb * std::pow(u00, j) * std::pow(u10, na - j) * std::pow(u01, ma - j) *
                         std::pow(u11, nb - ma + j);
            }
            if (coeff == cd{0.0, 0.0}) continue;
            o.counts[mode_a] = static_cast<std::uint8_t>(ma);
            o.counts[mode_b] = static_cast<std::uint8_t>(mb);
            out.add_amplitude(o, amp * coeff * std::sqrt(factorial(ma) * factorial(mb) / in_fact));
        }
    }
}

}  // namespace

FockState apply_unitary(const FockState& state, const ModeUnitary& u, const std::vector<int>& effective_modes) {
    const int k = static_cast<int>(effective_modes.size());
    if (u.dim() != k) throw std::invalid_argument("unitary dimension does not match mode subset size");
    for (int m : effective_modes)
        if (m < 0 || m >= state.effective_mode_count()) throw std::out_of_range("effective mode index out of range");

    FockState out(state.mode_count(), state.internal_dim(), state.cutoff());
    if (state.truncated()) out.mark_truncated();

    if (k == 2) {
        apply_two_mode(state, u, effective_modes[0], effective_modes[1], out);
        out.prune();
        return out;
    }

    std::vector<int> n_in(k);
    for (const auto& [occ, amp] : state.amplitudes()) {
        int total_sub = 0;
        for (int j = 0; j < k; ++j) {
            n_in[j] = occ.counts[effective_modes[j]];
            total_sub += n_in[j];
        }
        if (total_sub == 0) {
            out.add_amplitude(occ, amp);
            continue;
        }

        // Expand prod_j (sum_k U_kj a†_k)^{n_j}. Partial monomials are kept
        // as occupation deltas over the subset with polynomial coefficients.
        struct Partial {
            std::vector<int> counts;
            cd coeff;
        };
        std::vector<Partial> partials{{std::vector<int>(k, 0), cd{1.0, 0.0}}};
        std::vector<Partial> next;
        for (int j = 0; j < k; ++j) {
            int nj = n_in[j];
            if (nj == 0) continue;
            next.clear();
            // compositions of nj over k output slots
            std::vector<int> comp(k, 0);
            std::function<void(int, int)> compose = [&](int slot, int remaining) {
                if (slot == k - 1) {
                    comp[slot] = remaining;
                    cd term = factorial(nj);
                    for (int s = 0; s < k; ++s) {
                        if (comp[s] == 0) continue;
                        term *= std::pow(u(s, j), comp[s]) / factorial(comp[s]);
                        if (term == cd{0.0, 0.0}) break;
                    }
                    if (term != cd{0.0, 0.0}) {
                        for (const auto& p : partials) {
                            Partial q = p;
                            for (int s = 0; s < k; ++s) q.counts[s] += comp[s];
                            q.coeff *= term;
                            next.push_back(std::move(q));
                        }
                    }
                    comp[slot] = 0;
                    return;
                }
                for (int m = 0; m <= remaining; ++m) {
                    comp[slot] = m;
                    compose(slot + 1, remaining - m);
                }
                comp[slot] = 0;
            };
            compose(0, nj);
            partials.swap(next);
        }

        double in_fact = 1.0;
        for (int j = 0; j < k; ++j) in_fact *= factorial(n_in[j]);
        for (const auto& p : partials) {
            Occupation o = occ;
            double out_fact = 1.0;
            for (int s = 0; s < k; ++s) {
                o.counts[effective_modes[s]] = static_cast<std::uint8_t>(p.counts[s]);
                out_fact *= factorial(p.counts[s]);
            }
            out.add_amplitude(o, amp * p.coeff * std::sqrt(out_fact / in_fact));
        }
    }
    out.prune();
    return out;
}

FockState apply_physical_unitary(const FockState& state, const ModeUnitary& u,
                                 const std::vector<int>& physical_modes) {
    FockState cur = state;
    for (int label = 0; label < state.internal_dim(); ++label) {
        std::vector<int> eff;
        eff.reserve(physical_modes.size());
        for (int m : physical_modes) eff.push_back(state.effective_index(m, label));
        cur = apply_unitary(cur, u, eff);
    }
    return cur;
}

FockState tensor(const FockState& a, const FockState& b, int cutoff) {
    if (a.internal_dim() != b.internal_dim())
        throw std::invalid_argument("tensor requires matching internal dimensions");
    int budget = a.cutoff() + b.cutoff();
    int effective_cutoff = cutoff < 0 ? budget : cutoff;
    FockState out(a.mode_count() + b.mode_count(), a.internal_dim(), effective_cutoff);
    if (a.truncated() || b.truncated()) out.mark_truncated();

    const std::size_t na = static_cast<std::size_t>(a.effective_mode_count());
    for (const auto& [oa, va] : a.amplitudes()) {
        for (const auto& [ob, vb] : b.amplitudes()) {
            Occupation o(static_cast<std::size_t>(out.effective_mode_count()));
            std::copy(oa.counts.begin(), oa.counts.end(), o.counts.begin());
            std::copy(ob.counts.begin(), ob.counts.end(), o.counts.begin() + na);
            out.add_amplitude(o, va * vb);
        }
    }
    return out;
}

Postselection postselect(const FockState& state, const std::map<int, int>& pattern, bool threshold) {
    for (const auto& [mode, count] : pattern) {
        if (mode < 0 || mode >= state.mode_count()) throw std::out_of_range("pattern mode out of range");
        if (count < 0) throw std::invalid_argument("pattern counts must be non-negative");
    }

    FockState kept(state.mode_count(), state.internal_dim(), state.cutoff());
    if (state.truncated()) kept.mark_truncated();
    double prob = 0.0;
    const int d = state.internal_dim();
    for (const auto& [occ, amp] : state.amplitudes()) {
        bool match = true;
        for (const auto& [mode, count] : pattern) {
            int n = 0;
            for (int l = 0; l < d; ++l) n += occ.counts[mode * d + l];
            if (threshold ? (count > 0 ? n < 1 : n != 0) : (n != count)) {
                match = false;
                break;
            }
        }
        if (match) {
            prob += std::norm(amp);
            kept.add_amplitude(occ, amp);
        }
    }
    if (prob <= 0.0) return {FockState(state.mode_count(), state.internal_dim(), state.cutoff()), 0.0};
    kept.scale(1.0 / std::sqrt(prob));
    return {std::move(kept), prob};
}

cd overlap(const FockState& a, const FockState& b) {
    if (a.mode_count() != b.mode_count() || a.internal_dim() != b.internal_dim())
        throw std::invalid_argument("overlap requires identical mode structure");
    // iterate the smaller map
    const FockState& small = a.term_count() <= b.term_count() ? a : b;
    const FockState& large = a.term_count() <= b.term_count() ? b : a;
    cd s{0.0, 0.0};
    for (const auto& [occ, amp] : small.amplitudes()) {
        cd other = large.amplitude(occ);
        if (&small == &a)
            s += std::conj(amp) * other;
        else
            s += std::conj(other) * amp;
    }
    return s;
}

double pairwise_overlap_from_visibility(double sigma) {
    if (sigma < 0.0 || sigma > 1.0) throw std::invalid_argument("sigma must lie in [0, 1]");
    double l2 = (3.0 * sigma - 1.0) / (1.0 + sigma);
    return l2 <= 0.0 ? 0.0 : std::sqrt(l2);
}

std::vector<InternalState> dephase_internal(const std::vector<InternalState>& states, double sigma) {
    double lambda = pairwise_overlap_from_visibility(sigma);
    const int n = static_cast<int>(states.size());
    std::vector<InternalState> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXcd a = Eigen::VectorXcd::Zero(n + 1);
        a(0) = std::sqrt(lambda);
        a(i + 1) = std::sqrt(1.0 - lambda);
        out.emplace_back(std::move(a));
    }
    return out;
}

}  // namespace photonsim::fock
