#include "photonsim/graph.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <unordered_set>

namespace {

using namespace photonsim::graph;

Eigen::Matrix2cd pauli_matrix(Pauli p) {
    Eigen::Matrix2cd m;
    const std::complex<double> i{0.0, 1.0};
    switch (p) {
        case Pauli::I: m << 1, 0, 0, 1; break;
        case Pauli::X: m << 0, 1, 1, 0; break;
        case Pauli::Y: m << 0, -i, i, 0; break;
        case Pauli::Z: m << 1, 0, 0, -1; break;
    }
    return m;
}

Eigen::MatrixXcd pauli_string_matrix(const PauliString& p) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
    for (Pauli letter : p.letters) {
        Eigen::MatrixXcd next(m.rows() * 2, m.cols() * 2);
        Eigen::Matrix2cd letter_m = pauli_matrix(letter);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) next.block(a * m.rows(), b * m.cols(), m.rows(), m.cols()) = m * letter_m(a, b);
        m = next;
    }
    return static_cast<double>(p.sign) * m;
}

Eigen::VectorXcd random_state_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXcd v(Eigen::Index(1) << n);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::complex<double>{normal(rng), normal(rng)};
    v.normalize();
    return v;
}

TEST(PauliString, ParseAndPrint) {
    auto p = PauliString::from_string("-YZZY");
    EXPECT_EQ(p.sign, -1);
    EXPECT_EQ(p.to_string(), "-YZZY");
    EXPECT_EQ(p.setting(), "YZZY");
    EXPECT_EQ(PauliString::from_string("XIIZ").to_string(), "+XIIZ");
    EXPECT_THROW(PauliString::from_string("XQ"), std::invalid_argument);
    EXPECT_THROW(PauliString::from_string(""), std::invalid_argument);
}

TEST(PauliString, MultiplicationMatchesMatrixOracle) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> letter(0, 3);
    for (int rep = 0; rep < 50; ++rep) {
        int n = 1 + static_cast<int>(rng() % 4);
        std::vector<Pauli> la(n), lb(n);
        for (int k = 0; k < n; ++k) {
            la[k] = static_cast<Pauli>(letter(rng));
            lb[k] = static_cast<Pauli>(letter(rng));
        }
        PauliString a(la, rng() % 2 ? 1 : -1), b(lb, rng() % 2 ? 1 : -1);
        if (!a.commutes_with(b)) continue;  // product of anticommuting strings is not Hermitian
        auto ab = multiply(a, b);
        Eigen::MatrixXcd oracle = pauli_string_matrix(a) * pauli_string_matrix(b);
        EXPECT_NEAR((pauli_string_matrix(ab) - oracle).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    }
}

TEST(PauliString, ImaginaryProductThrows) {
    auto x = PauliString::from_string("X");
    auto z = PauliString::from_string("Z");
    EXPECT_FALSE(x.commutes_with(z));
    EXPECT_THROW(multiply(x, z), std::invalid_argument);
}

TEST(Graph, Basics) {
    Graph g(4);
    g.add_edge(0, 1);
    g.add_edge(1, 0);  // duplicate collapses
    EXPECT_EQ(g.edges.size(), 1u);
    EXPECT_THROW(g.add_edge(2, 2), std::invalid_argument);
    EXPECT_THROW(g.add_edge(0, 7), std::out_of_range);
    EXPECT_EQ(g.neighbors(1), std::vector<int>{0});
}

TEST(Generators, StarMatchesPublishedList) {
    auto grp = generators_from_graph(Graph::star(4, 3));
    EXPECT_EQ(grp.generators[0].to_string(), "+XIIZ");
    EXPECT_EQ(grp.generators[1].to_string(), "+IXIZ");
    EXPECT_EQ(grp.generators[2].to_string(), "+IIXZ");
    EXPECT_EQ(grp.generators[3].to_string(), "+ZZZX");
    EXPECT_EQ(grp.elements.size(), 16u);
    EXPECT_EQ(grp.elements[0].to_string(), "+IIII");
}

TEST(Generators, LineMatchesPublishedList) {
    auto grp = generators_from_graph(Graph::path({2, 0, 1, 3}));
    EXPECT_EQ(grp.generators[0].to_string(), "+XZZI");
    EXPECT_EQ(grp.generators[1].to_string(), "+ZXIZ");
    EXPECT_EQ(grp.generators[2].to_string(), "+ZIXI");
    EXPECT_EQ(grp.generators[3].to_string(), "+IZIX");
}

TEST(Generators, SingleVertex) {
    auto grp = generators_from_graph(Graph(1));
    ASSERT_EQ(grp.generators.size(), 1u);
    EXPECT_EQ(grp.generators[0].to_string(), "+X");
    ASSERT_EQ(grp.elements.size(), 2u);
    EXPECT_EQ(grp.elements[1].to_string(), "+X");
}

TEST(Generators, OversizedGraphThrows) { EXPECT_THROW(generators_from_graph(Graph(17)), std::invalid_argument); }

TEST(StabilizerGroup, ClosureWithSigns) {
    for (const Graph& g : {Graph::star(4, 3), Graph::path({2, 0, 1, 3})}) {
        auto grp = generators_from_graph(g);
        std::unordered_set<std::string> members;
        for (const auto& el : grp.elements) members.insert(el.to_string());
        for (const auto& a : grp.elements) {
            for (const auto& b : grp.elements) {
                auto ab = multiply(a, b);
                EXPECT_TRUE(members.count(ab.to_string())) << ab.to_string();
            }
        }
    }
}

TEST(StabilizerGroup, GeneratorsCommute) {
    auto grp = generators_from_graph(Graph::star(6, 0));
    for (const auto& a : grp.generators)
        for (const auto& b : grp.generators) EXPECT_TRUE(a.commutes_with(b));
}

TEST(IdealStateVector, SmallExamples) {
    auto plus = ideal_state_vector(Graph(1));
    EXPECT_NEAR(std::abs(plus(0) - std::complex<double>{1 / std::sqrt(2.0), 0}), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(plus(1) - std::complex<double>{1 / std::sqrt(2.0), 0}), 0.0, 1e-14);

    Graph edge(2);
    edge.add_edge(0, 1);
    auto v = ideal_state_vector(edge);
    EXPECT_NEAR(std::abs(v(0) - std::complex<double>{0.5, 0}), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(v(1) - std::complex<double>{0.5, 0}), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(v(2) - std::complex<double>{0.5, 0}), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(v(3) + std::complex<double>{0.5, 0}), 0.0, 1e-14);
}

TEST(IdealStateVector, EveryElementStabilizes) {
    std::mt19937_64 rng(3);
    std::vector<Graph> graphs = {Graph::star(4, 3), Graph::path({2, 0, 1, 3}), Graph::star(6, 2),
                                 Graph::path({0, 1, 2, 3, 4, 5}), Graph(1)};
    // a handful of random graphs up to six vertices
    for (int rep = 0; rep < 12; ++rep) {
        int n = 2 + static_cast<int>(rng() % 5);
        Graph g(n);
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
                if (rng() % 2) g.add_edge(a, b);
        graphs.push_back(g);
    }
    for (const auto& g : graphs) {
        auto grp = generators_from_graph(g);
        auto vec = ideal_state_vector(g);
        for (const auto& el : grp.elements) {
            auto w = apply_pauli(vec, el);
            EXPECT_LT((w - vec).norm(), 1e-10) << el.to_string();
        }
    }
}

TEST(Expectations, AllCountsOnPlusOutcome) {
    CountsTable t;
    t.add("XIIZ", "0000", 250);
    EXPECT_DOUBLE_EQ(expectation_from_counts(t, PauliString::from_string("XIIZ")), 1.0);
}

TEST(Expectations, UniformCountsAverageToZero) {
    CountsTable t;
    for (int j = 0; j < 16; ++j) {
        std::string bits;
        for (int q = 0; q < 4; ++q) bits.push_back(((j >> (3 - q)) & 1) ? '1' : '0');
        t.add("ZZZX", bits, 10);
    }
    EXPECT_DOUBLE_EQ(expectation_from_counts(t, PauliString::from_string("ZZZX")), 0.0);
}

TEST(Expectations, IdentityLettersContributePlusOne) {
    // outcome bits on identity positions must not affect the eigenvalue
    auto op = PauliString::from_string("XIIZ");
    EXPECT_EQ(outcome_eigenvalue(op, 0b0000), 1);
    EXPECT_EQ(outcome_eigenvalue(op, 0b0110), 1);
    EXPECT_EQ(outcome_eigenvalue(op, 0b1000), -1);
    EXPECT_EQ(outcome_eigenvalue(op, 0b0001), -1);
    EXPECT_EQ(outcome_eigenvalue(op, 0b1001), 1);
}

TEST(Expectations, SignedElementAndErrors) {
    CountsTable t;
    t.add("YZZY", "0000", 75);
    t.add("YZZY", "1000", 25);
    auto el = PauliString::from_string("-YZZY");
    EXPECT_DOUBLE_EQ(expectation_from_counts(t, el), -0.5);
    EXPECT_THROW(expectation_from_counts(t, PauliString::from_string("XXXX")), std::invalid_argument);
    CountsTable empty;
    empty.add("XXXX", "0000", 0);
    EXPECT_THROW(expectation_from_counts(empty, PauliString::from_string("XXXX")), std::invalid_argument);
}

TEST(Expectations, CountsFormulaMatchesProjectorOracle) {
    // lambda products against direct matrix evaluation on random states
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> letter(0, 3);
    for (int rep = 0; rep < 25; ++rep) {
        int n = 2 + static_cast<int>(rng() % 3);
        std::vector<Pauli> letters(n);
        for (auto& l : letters) l = static_cast<Pauli>(letter(rng));
        PauliString op(letters, rng() % 2 ? 1 : -1);
        auto psi = random_state_vector(n, rng);

        // projective outcome probabilities in the op's eigenbasis
        Eigen::MatrixXcd basis = Eigen::MatrixXcd::Identity(1, 1);
        for (Pauli l : letters) {
            Eigen::Matrix2cd eig;
            const std::complex<double> i{0.0, 1.0};
            switch (l) {
                case Pauli::I:
                case Pauli::Z: eig << 1, 0, 0, 1; break;                      // |0>, |1>
                case Pauli::X: eig << 1, 1, 1, -1; eig /= std::sqrt(2.0); break;  // |+>, |->
                case Pauli::Y: eig << 1, 1, i, -i; eig /= std::sqrt(2.0); break;  // |y+>, |y->
            }
            Eigen::MatrixXcd next(basis.rows() * 2, basis.cols() * 2);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    next.block(a * basis.rows(), b * basis.cols(), basis.rows(), basis.cols()) = basis * eig(a, b);
            basis = next;
        }
        double expectation = 0.0;
        for (unsigned j = 0; j < (1u << n); ++j) {
            std::complex<double> amp = basis.col(j).adjoint() * psi;
            expectation += outcome_eigenvalue(op, j) * std::norm(amp);
        }
        expectation *= op.sign;

        std::complex<double> direct = (psi.adjoint() * pauli_string_matrix(op) * psi)(0, 0);
        EXPECT_NEAR(expectation, direct.real(), 1e-10);
    }
}

TEST(Fidelity, MeanAndWitness) {
    std::vector<double> ones(16, 1.0);
    auto f = fidelity(ones);
    EXPECT_DOUBLE_EQ(f.value, 1.0);
    EXPECT_TRUE(f.witness);

    std::vector<double> low(16, 0.4);
    EXPECT_FALSE(fidelity(low).witness);
    EXPECT_THROW(fidelity({}), std::invalid_argument);
}

TEST(Mermin, ThreeSettingIsScaledFidelity) {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> ex(16);
        ex[0] = 1.0;
        for (int k = 1; k < 16; ++k) ex[k] = u(rng);
        auto m3 = mermin_three_setting(ex);
        auto f = fidelity(ex);
        EXPECT_DOUBLE_EQ(m3.value, 16.0 * f.value);
        EXPECT_DOUBLE_EQ(m3.classical_bound, 12.0);
        EXPECT_DOUBLE_EQ(m3.quantum_bound, 16.0);
    }
    // bounds for the projected sizes
    EXPECT_DOUBLE_EQ(mermin_three_setting(std::vector<double>(8, 1.0)).classical_bound, 6.0);
    EXPECT_DOUBLE_EQ(mermin_three_setting(std::vector<double>(4, 1.0)).classical_bound, 2.0);
}

TEST(Mermin, StarVariantsOnIdealState) {
    auto g = Graph::star(4, 3);
    auto grp = generators_from_graph(g);
    auto variants = two_setting_variants(g);
    EXPECT_EQ(variants.size(), 10u);
    std::vector<double> ones(16, 1.0);
    auto all = mermin_two_setting_all(grp, ones, variants);
    ASSERT_EQ(all.size(), variants.size() + 1);
    for (const auto& r : all) {
        EXPECT_DOUBLE_EQ(r.value, 4.0);
        EXPECT_DOUBLE_EQ(r.classical_bound, 2.0);
        EXPECT_DOUBLE_EQ(r.quantum_bound, 4.0);
    }
    EXPECT_EQ(all.back().variant.rfind("best:", 0), 0u);
}

TEST(Mermin, LineVariantTermStructure) {
    auto g = Graph::path({2, 0, 1, 3});
    auto variants = two_setting_variants(g);
    EXPECT_EQ(variants.size(), 5u);
    // the base construction g1(1+g2)(1+g3) in the published labeling:
    // generator indices by vertex are g1 -> bit0, g2 -> bit1, g3 -> bit2, g4 -> bit3
    auto find = [&](const std::string& name) {
        for (const auto& v : variants)
            if (v.name == name) return v;
        throw std::runtime_error("missing variant " + name);
    };
    auto base = find("II");
    std::set<unsigned> base_masks(base.masks.begin(), base.masks.end());
    EXPECT_EQ(base_masks, (std::set<unsigned>{0b0001, 0b0011, 0b0101, 0b0111}));
    auto sub = find("II.g2*g4");
    std::set<unsigned> sub_masks(sub.masks.begin(), sub.masks.end());
    EXPECT_EQ(sub_masks, (std::set<unsigned>{0b0001, 0b1011, 0b0101, 0b1111}));
    auto shift = find("II'.shift");
    std::set<unsigned> shift_masks(shift.masks.begin(), shift.masks.end());
    EXPECT_EQ(shift_masks, (std::set<unsigned>{0b0101, 0b1100, 0b1001, 0b0110}));
}

TEST(Mermin, MaxVariantFlagged) {
    auto g = Graph::star(4, 3);
    auto grp = generators_from_graph(g);
    auto variants = two_setting_variants(g);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> ex(16);
    ex[0] = 1.0;
    for (int k = 1; k < 16; ++k) ex[k] = u(rng);
    auto all = mermin_two_setting_all(grp, ex, variants);
    double best = -1e9;
    for (std::size_t i = 0; i + 1 < all.size(); ++i) best = std::max(best, all[i].value);
    EXPECT_DOUBLE_EQ(all.back().value, best);
}

TEST(Mermin, UnknownVariantRejected) {
    auto grp = generators_from_graph(Graph::star(4, 3));
    MerminVariant bogus{"bogus", {1, 2, 4, 99}};
    std::vector<double> ones(16, 1.0);
    EXPECT_THROW(mermin_two_setting(grp, ones, bogus), std::invalid_argument);
    Graph square(4);
    square.add_edge(0, 1);
    square.add_edge(1, 2);
    square.add_edge(2, 3);
    square.add_edge(3, 0);
    EXPECT_THROW(two_setting_variants(square), std::invalid_argument);
}

TEST(ProjectZero, PublishedExamples) {
    auto star = Graph::star(4, 3);
    // removing qubit 3 (0-based 2) leaves the star on {1,2,4}
    auto res = project_zero(star, {2});
    EXPECT_EQ(res.n, 3);
    EXPECT_EQ(res.edges.size(), 2u);
    EXPECT_TRUE(res.has_edge(0, 2));
    EXPECT_TRUE(res.has_edge(1, 2));
    // removing qubits {2,3} leaves the edge {1,4}
    auto pair = project_zero(star, {1, 2});
    EXPECT_EQ(pair.n, 2);
    EXPECT_TRUE(pair.has_edge(0, 1));
    // empty removal set leaves the graph unchanged
    auto same = project_zero(star, {});
    EXPECT_EQ(same.n, 4);
    EXPECT_EQ(same.edges, star.edges);
    EXPECT_THROW(project_zero(star, {0, 1, 2, 3}), std::invalid_argument);
}

TEST(ProjectZero, GraphRuleMatchesStateVector) {
    for (const Graph& g : {Graph::star(4, 3), Graph::path({2, 0, 1, 3})}) {
        auto vec = ideal_state_vector(g);
        for (int a = 0; a < 4; ++a) {
            for (int b = -1; b < 4; ++b) {
                std::set<int> removal{a};
                if (b >= 0) {
                    if (b == a) continue;
                    removal.insert(b);
                }
                auto residual = project_zero(g, removal);
                auto expected = ideal_state_vector(residual);
                auto [projected, prob] = project_zero_state(vec, 4, removal);
                ASSERT_GT(prob, 0.0);
                double fid = std::norm((expected.adjoint() * projected)(0, 0));
                EXPECT_NEAR(fid, 1.0, 1e-10);
            }
        }
    }
}

TEST(CountsTable, CsvRoundTrip) {
    CountsTable t;
    t.add("XIIZ", "0000", 12);
    t.add("XIIZ", "0101", 3);
    t.add("ZZZX", "1111", 7);
    std::stringstream ss;
    t.write_csv(ss);
    auto back = CountsTable::read_csv(ss);
    EXPECT_EQ(back.counts("XIIZ", "0101"), 3);
    EXPECT_EQ(back.counts("ZZZX", "1111"), 7);
    EXPECT_EQ(back.total("XIIZ"), 15);
    std::stringstream again;
    back.write_csv(again);
    std::stringstream first;
    t.write_csv(first);
    EXPECT_EQ(first.str(), again.str());
}

TEST(CountsTable, MostSignificantBitIsQubitOne) {
    CountsTable t;
    t.add("ZZZZ", "1000", 5);  // qubit 1 gave the -1 outcome
    auto v = t.outcome_vector("ZZZZ", 4);
    EXPECT_EQ(v[0b1000], 5);
    EXPECT_EQ(outcome_eigenvalue(PauliString::from_string("ZIII"), 0b1000), -1);
    EXPECT_EQ(outcome_eigenvalue(PauliString::from_string("IIIZ"), 0b1000), 1);
}

}  // namespace
