#include "photonsim/fock.hpp"

#include <gtest/gtest.h>

#include <complex>
#include <functional>
#include <random>

namespace {

using namespace photonsim::fock;

Eigen::Matrix2cd balanced_coupler() {
    Eigen::Matrix2cd c;
    c << cd{1, 0}, cd{0, 1}, cd{0, 1}, cd{1, 0};
    return c / std::sqrt(2.0);
}

Occupation occ(std::initializer_list<int> counts) {
    Occupation o;
    for (int c : counts) o.counts.push_back(static_cast<std::uint8_t>(c));
    return o;
}

Eigen::MatrixXcd haar_unitary(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXcd g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = cd{normal(rng), normal(rng)};
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
    return q;
}

FockState random_state(int modes, int max_photons, int terms, std::mt19937_64& rng) {
    FockState st(modes, 1, max_photons);
    std::uniform_int_distribution<int> mode(0, modes - 1);
    std::uniform_int_distribution<int> photons(0, max_photons);
    std::normal_distribution<double> normal;
    for (int t = 0; t < terms; ++t) {
        Occupation o(static_cast<std::size_t>(modes));
        int n = photons(rng);
        for (int p = 0; p < n; ++p) ++o.counts[mode(rng)];
        st.add_amplitude(o, cd{normal(rng), normal(rng)});
    }
    st.prune();
    if (st.norm2() == 0.0) st.add_amplitude(Occupation(static_cast<std::size_t>(modes)), 1.0);
    st.normalize();
    return st;
}

// independent oracle: <m| U_hom |n> from the matrix permanent of U with
// columns repeated per input photon and rows per output photon
cd permanent(const Eigen::MatrixXcd& m) {
    const int n = static_cast<int>(m.rows());
    if (n == 0) return 1.0;
    std::vector<int> cols(n);
    for (int i = 0; i < n; ++i) cols[i] = i;
    cd sum = 0.0;
    std::function<cd(int, std::vector<int>&)> expand = [&](int row, std::vector<int>& free_cols) -> cd {
        if (row == n) return 1.0;
        cd acc = 0.0;
        for (std::size_t i = 0; i < free_cols.size(); ++i) {
            int c = free_cols[i];
            std::vector<int> rest = free_cols;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
            acc += m(row, c) * expand(row + 1, rest);
        }
        return acc;
    };
    return expand(0, cols);
}

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

cd transition_amplitude_oracle(const Eigen::MatrixXcd& u, const std::vector<int>& in_counts,
                               const std::vector<int>& out_counts) {
    int n = 0;
    for (int c : in_counts) n += c;
    Eigen::MatrixXcd sub(n, n);
    int row = 0;
    for (std::size_t k = 0; k < out_counts.size(); ++k)
        for (int r = 0; r < out_counts[k]; ++r, ++row)
            for (int col = 0, j = 0; j < static_cast<int>(in_counts.size()); ++j)
                for (int c = 0; c < in_counts[j]; ++c, ++col) sub(row, col) = u(static_cast<int>(k), j);
    double norm = 1.0;
    for (int c : in_counts) norm *= factorial(c);
    for (int c : out_counts) norm *= factorial(c);
    return permanent(sub) / std::sqrt(norm);
}

TEST(FockState, VacuumExamples) {
    auto v = vacuum(2, 1, 2);
    EXPECT_EQ(v.term_count(), 1u);
    EXPECT_NEAR(std::abs(v.amplitude(occ({0, 0})) - cd{1.0, 0.0}), 0.0, 1e-15);

    EXPECT_NEAR(vacuum(8, 1, 4).norm2(), 1.0, 1e-15);

    auto z = vacuum(1, 1, 0);
    EXPECT_NEAR(std::abs(z.amplitude(occ({0}))), 1.0, 1e-15);
}

TEST(FockState, ConstructorValidation) {
    EXPECT_THROW(FockState(0, 1, 2), std::invalid_argument);
    EXPECT_THROW(FockState(2, 0, 2), std::invalid_argument);
    EXPECT_THROW(FockState(2, 1, -1), std::invalid_argument);
}

TEST(TwoModeSqueezed, ZeroSqueezingIsVacuum) {
    auto s = two_mode_squeezed(2, 1, 4, 0.0, 0, 1, 2);
    EXPECT_EQ(s.term_count(), 1u);
    EXPECT_NEAR(std::abs(s.amplitude(occ({0, 0}))), 1.0, 1e-15);
}

TEST(TwoModeSqueezed, GeometricSeries) {
    auto s = two_mode_squeezed(2, 1, 4, 0.2, 0, 1, 2);
    EXPECT_NEAR(std::abs(s.amplitude(occ({0, 0})) - cd{1.0, 0.0}), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(s.amplitude(occ({1, 1})) - cd{0.2, 0.0}), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(s.amplitude(occ({2, 2})) - cd{0.04, 0.0}), 0.0, 1e-14);
}

TEST(TwoModeSqueezed, PairProbabilityAtOperatingPoint) {
    // normalized single-pair weight at xi = sqrt(0.03) stays within 1e-3 of 0.03
    double xi = std::sqrt(0.03);
    auto s = two_mode_squeezed(2, 1, 4, xi, 0, 1, 2);
    double p = std::norm(s.amplitude(occ({1, 1}))) / s.norm2();
    EXPECT_NEAR(p, 0.03, 1e-3);
}

TEST(TwoModeSqueezed, CutoffViolationThrows) {
    EXPECT_THROW(two_mode_squeezed(2, 1, 2, 0.1, 0, 1, 2), std::invalid_argument);
}

TEST(ApplyUnitary, SinglePhotonConvention) {
    ModeUnitary c(balanced_coupler());
    FockState one(2, 1, 2);
    one.add_amplitude(occ({1, 0}), 1.0);
    auto out = apply_unitary(one, c, {0, 1});
    EXPECT_NEAR(std::abs(out.amplitude(occ({1, 0})) - cd{1.0 / std::sqrt(2.0), 0.0}), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(out.amplitude(occ({0, 1})) - cd{0.0, 1.0 / std::sqrt(2.0)}), 0.0, 1e-12);
}

TEST(ApplyUnitary, HomCancellation) {
    ModeUnitary c(balanced_coupler());
    FockState st(2, 1, 2);
    st.add_amplitude(occ({1, 1}), 1.0);
    auto out = apply_unitary(st, c, {0, 1});
    EXPECT_LT(std::abs(out.amplitude(occ({1, 1}))), 1e-14);
}

TEST(ApplyUnitary, TwoPhotonSplitterProbabilities) {
    ModeUnitary c(balanced_coupler());
    FockState st(2, 1, 2);
    st.add_amplitude(occ({2, 0}), 1.0);
    auto out = apply_unitary(st, c, {0, 1});
    // oracle: permanent-based transition amplitudes
    for (auto [out_counts, expected] : std::vector<std::pair<std::vector<int>, double>>{
             {{2, 0}, 0.25}, {{1, 1}, 0.5}, {{0, 2}, 0.25}}) {
        cd oracle = transition_amplitude_oracle(balanced_coupler(), {2, 0}, out_counts);
        Occupation o;
        for (int v : out_counts) o.counts.push_back(static_cast<std::uint8_t>(v));
        EXPECT_NEAR(std::norm(oracle), expected, 1e-12);
        EXPECT_NEAR(std::abs(out.amplitude(o) - oracle), 0.0, 1e-12);
    }
}

TEST(ApplyUnitary, MatchesPermanentOracleOnRandomCases) {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 20; ++rep) {
        int dim = 2 + static_cast<int>(rng() % 3);  // 2..4 modes
        Eigen::MatrixXcd u = haar_unitary(dim, rng);
        // random input occupation with up to 4 photons
        std::vector<int> in(dim, 0);
        int photons = 1 + static_cast<int>(rng() % 4);
        for (int p = 0; p < photons; ++p) ++in[rng() % dim];

        FockState st(dim, 1, 6);
        Occupation o_in;
        for (int v : in) o_in.counts.push_back(static_cast<std::uint8_t>(v));
        st.add_amplitude(o_in, 1.0);
        std::vector<int> modes(dim);
        for (int m = 0; m < dim; ++m) modes[m] = m;
        auto out = apply_unitary(st, ModeUnitary(u), modes);

        for (const auto& [o_out, amp] : out.amplitudes()) {
            std::vector<int> outc(o_out.counts.begin(), o_out.counts.end());
            cd oracle = transition_amplitude_oracle(u, in, outc);
            EXPECT_NEAR(std::abs(amp - oracle), 0.0, 1e-10);
        }
    }
}

TEST(ApplyUnitary, SinglePhotonSectorReproducesMatrix) {
    std::mt19937_64 rng(5);
    Eigen::MatrixXcd u = haar_unitary(4, rng);
    for (int j = 0; j < 4; ++j) {
        FockState st(4, 1, 1);
        Occupation o(4);
        o.counts[j] = 1;
        st.add_amplitude(o, 1.0);
        auto out = apply_unitary(st, ModeUnitary(u), {0, 1, 2, 3});
        for (int k = 0; k < 4; ++k) {
            Occupation ok(4);
            ok.counts[k] = 1;
            EXPECT_NEAR(std::abs(out.amplitude(ok) - u(k, j)), 0.0, 1e-12);
        }
    }
}

TEST(ApplyUnitary, PreservesNormForHaarUnitaries) {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 8; ++rep) {
        int dim = 2 + static_cast<int>(rng() % 7);  // up to 8
        auto st = random_state(dim, 4, 24, rng);
        std::vector<int> modes(dim);
        for (int m = 0; m < dim; ++m) modes[m] = m;
        auto out = apply_unitary(st, ModeUnitary(haar_unitary(dim, rng)), modes);
        EXPECT_NEAR(out.norm2(), st.norm2(), 1e-9);
    }
}

TEST(ApplyUnitary, ComposesAsHomomorphism) {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 6; ++rep) {
        int dim = 2 + static_cast<int>(rng() % 3);
        auto st = random_state(dim, 4, 16, rng);
        Eigen::MatrixXcd u = haar_unitary(dim, rng);
        Eigen::MatrixXcd v = haar_unitary(dim, rng);
        std::vector<int> modes(dim);
        for (int m = 0; m < dim; ++m) modes[m] = m;

        auto uv = apply_unitary(st, ModeUnitary(u * v), modes);
        auto sequential = apply_unitary(apply_unitary(st, ModeUnitary(v), modes), ModeUnitary(u), modes);
        for (const auto& [o, amp] : uv.amplitudes())
            EXPECT_NEAR(std::abs(amp - sequential.amplitude(o)), 0.0, 1e-9);
        for (const auto& [o, amp] : sequential.amplitudes())
            EXPECT_NEAR(std::abs(amp - uv.amplitude(o)), 0.0, 1e-9);
    }
}

TEST(ApplyUnitary, RejectsBadInput) {
    FockState st = vacuum(2, 1, 2);
    Eigen::Matrix2cd not_unitary;
    not_unitary << 1.0, 0.5, 0.0, 1.0;
    EXPECT_THROW(ModeUnitary{not_unitary}, std::invalid_argument);
    EXPECT_THROW(apply_unitary(st, ModeUnitary::identity(2), {0, 5}), std::out_of_range);
    EXPECT_THROW(apply_unitary(st, ModeUnitary::identity(3), {0, 1}), std::invalid_argument);
}

TEST(Tensor, VacuumTimesVacuumIsVacuum) {
    auto t = tensor(vacuum(2, 1, 2), vacuum(3, 1, 2));
    EXPECT_EQ(t.mode_count(), 5);
    EXPECT_EQ(t.term_count(), 1u);
    EXPECT_NEAR(t.norm2(), 1.0, 1e-15);
}

TEST(Tensor, SinglePhotons) {
    FockState a(1, 1, 1), b(1, 1, 1);
    a.add_amplitude(occ({1}), 1.0);
    b.add_amplitude(occ({1}), 1.0);
    auto t = tensor(a, b);
    EXPECT_NEAR(std::abs(t.amplitude(occ({1, 1}))), 1.0, 1e-15);
}

TEST(Tensor, NormFactorizes) {
    std::mt19937_64 rng(21);
    auto a = random_state(3, 3, 12, rng);
    auto b = random_state(2, 2, 8, rng);
    a.scale(0.7);
    b.scale(1.1);
    auto t = tensor(a, b);
    EXPECT_NEAR(t.norm2(), a.norm2() * b.norm2(), 1e-12);
    EXPECT_FALSE(t.truncated());
}

TEST(Tensor, ExplicitCutoffTruncatesAndFlags) {
    FockState a(1, 1, 2), b(1, 1, 2);
    a.add_amplitude(occ({2}), 1.0);
    b.add_amplitude(occ({2}), 1.0);
    auto t = tensor(a, b, 3);
    EXPECT_TRUE(t.truncated());
    EXPECT_EQ(t.term_count(), 0u);
    EXPECT_THROW(tensor(a, FockState(1, 2, 2)), std::invalid_argument);
}

TEST(Postselect, HomDipHasZeroCoincidence) {
    ModeUnitary c(balanced_coupler());
    FockState st(2, 1, 2);
    st.add_amplitude(occ({1, 1}), 1.0);
    auto out = apply_unitary(st, c, {0, 1});
    auto ps = postselect(out, {{0, 1}, {1, 1}}, false);
    EXPECT_EQ(ps.probability, 0.0);
    EXPECT_EQ(ps.state.term_count(), 0u);
}

TEST(Postselect, WholeSupportReturnsSquaredNorm) {
    FockState st(2, 1, 3);
    st.add_amplitude(occ({2, 1}), 0.6);
    auto ps = postselect(st, {{0, 2}, {1, 1}}, false);
    EXPECT_NEAR(ps.probability, 0.36, 1e-12);
    EXPECT_NEAR(ps.state.norm2(), 1.0, 1e-12);
}

TEST(Postselect, HeraldedPairProbability) {
    // conditioning a squeezer on one signal plus one idler returns p(1+O(p))
    for (double p : {0.01, 0.03, 0.05}) {
        double xi = std::sqrt(p);
        auto s = two_mode_squeezed(2, 1, 4, xi, 0, 1, 2);
        double norm2 = s.norm2();
        auto ps = postselect(s, {{0, 1}, {1, 1}}, false);
        double prob = ps.probability / norm2;
        EXPECT_NEAR(prob, p, 3.0 * p * p);
    }
}

TEST(Postselect, PartitionsProbabilityOverExactPatterns) {
    std::mt19937_64 rng(33);
    auto st = random_state(3, 3, 20, rng);
    for (int n = 0; n <= 3; ++n) {
        // sector weight computed directly
        double sector = 0.0;
        for (const auto& [o, amp] : st.amplitudes())
            if (o.total() == n) sector += std::norm(amp);
        // sum of all exact patterns with n photons over 3 modes
        double summed = 0.0;
        for (int a = 0; a <= n; ++a) {
            for (int b = 0; a + b <= n; ++b) {
                int c = n - a - b;
                summed += postselect(st, {{0, a}, {1, b}, {2, c}}, false).probability;
            }
        }
        EXPECT_NEAR(summed, sector, 1e-9);
    }
}

TEST(Postselect, ThresholdSemantics) {
    FockState st(2, 1, 4);
    st.add_amplitude(occ({2, 0}), std::sqrt(0.5));
    st.add_amplitude(occ({1, 1}), std::sqrt(0.3));
    st.add_amplitude(occ({0, 1}), std::sqrt(0.2));
    // click on mode 0 regardless of photon number
    EXPECT_NEAR(postselect(st, {{0, 1}}, true).probability, 0.8, 1e-12);
    // click on mode 0 and no click on mode 1
    EXPECT_NEAR(postselect(st, {{0, 1}, {1, 0}}, true).probability, 0.5, 1e-12);
    EXPECT_THROW(postselect(st, {{7, 1}}, false), std::out_of_range);
}

TEST(Postselect, KeepsInternalLabelsCoherent) {
    FockState st(2, 2, 2);
    st.add_amplitude(occ({1, 0, 1, 0}), std::sqrt(0.5));  // labels (0, 0)
    st.add_amplitude(occ({0, 1, 0, 1}), std::sqrt(0.5));  // labels (1, 1)
    auto ps = postselect(st, {{0, 1}, {1, 1}}, false);
    EXPECT_NEAR(ps.probability, 1.0, 1e-12);
    EXPECT_EQ(ps.state.term_count(), 2u);  // label structure retained
}

TEST(Overlap, SelfAndOrthogonal) {
    std::mt19937_64 rng(41);
    auto st = random_state(3, 3, 15, rng);
    st.scale(0.9);
    EXPECT_NEAR(std::abs(overlap(st, st) - cd{st.norm2(), 0.0}), 0.0, 1e-12);

    FockState a(2, 1, 1), b(2, 1, 1);
    a.add_amplitude(occ({1, 0}), 1.0);
    b.add_amplitude(occ({0, 1}), 1.0);
    EXPECT_EQ(overlap(a, b), (cd{0.0, 0.0}));
    EXPECT_THROW(overlap(a, FockState(3, 1, 1)), std::invalid_argument);
}

TEST(DephaseInternal, LimitsAndPairwiseOverlap) {
    std::vector<InternalState> in(4);
    auto full = dephase_internal(in, 1.0);
    for (const auto& s : full) {
        EXPECT_NEAR(std::abs(s.amps(0)), 1.0, 1e-12);
    }
    auto none = dephase_internal(in, 0.0);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            EXPECT_NEAR(std::abs(none[i].amps.dot(none[j].amps)), 0.0, 1e-12);

    double sigma = 0.82;
    auto mid = dephase_internal(in, sigma);
    double lambda = pairwise_overlap_from_visibility(sigma);
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(mid[i].amps.norm(), 1.0, 1e-12);
        for (int j = i + 1; j < 4; ++j) {
            cd ov = mid[i].amps.dot(mid[j].amps);
            EXPECT_NEAR(std::abs(ov), lambda, 1e-12);
        }
    }
    EXPECT_THROW(dephase_internal(in, 1.5), std::invalid_argument);
    EXPECT_THROW(dephase_internal(in, -0.1), std::invalid_argument);
}

TEST(DephaseInternal, VisibilityMappingEndpoints) {
    EXPECT_NEAR(pairwise_overlap_from_visibility(1.0), 1.0, 1e-12);
    EXPECT_EQ(pairwise_overlap_from_visibility(1.0 / 3.0), 0.0);
    EXPECT_EQ(pairwise_overlap_from_visibility(0.0), 0.0);
    double l = pairwise_overlap_from_visibility(0.82);
    EXPECT_NEAR(l * l, (3.0 * 0.82 - 1.0) / 1.82, 1e-12);
}

TEST(Squeezer, CarriesInternalStates) {
    // photons of a pair carry the source's internal state coherently
    Eigen::VectorXcd a(2);
    a << std::sqrt(0.8), std::sqrt(0.2);
    InternalState internal{a};
    auto s = two_mode_squeezed(2, 2, 2, 0.1, 0, 1, 1, internal, internal);
    // |1,1> sector decomposes over label pairs with product amplitudes
    double w = 0.0;
    for (const auto& [o, amp] : s.amplitudes())
        if (o.total() == 2) w += std::norm(amp);
    EXPECT_NEAR(w, 0.01, 1e-12);
}

}  // namespace
