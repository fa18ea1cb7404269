#include "photonsim/error_models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace {

using namespace photonsim;
using namespace photonsim::errors;
using device::GraphStateKind;

TEST(ErrorParams, Validation) {
    EXPECT_NO_THROW((ErrorParams{1.0, 0.0, 0.0}.validate()));
    EXPECT_THROW((ErrorParams{1.2, 0.0, 0.0}.validate()), std::invalid_argument);
    EXPECT_THROW((ErrorParams{1.0, 1.0, 0.0}.validate()), std::invalid_argument);
    EXPECT_THROW((ErrorParams{1.0, 0.0, -0.1}.validate()), std::invalid_argument);
}

TEST(Distinguishability, IdealLimit) {
    for (auto kind : {GraphStateKind::Star4, GraphStateKind::Line4}) {
        auto pred = predict_distinguishability(kind, 1.0);
        EXPECT_NEAR(pred.fidelity, 1.0, 1e-9);
    }
}

TEST(Distinguishability, AtPublishedEstimate) {
    auto pred = predict_distinguishability(GraphStateKind::Star4, 0.82);
    EXPECT_GE(pred.fidelity, 0.73);
    EXPECT_LE(pred.fidelity, 0.83);
    EXPECT_EQ(pred.setting_probs.size(), 15u);
}

TEST(Distinguishability, FullyDistinguishableKeepsClassicalCorrelations) {
    auto pred = predict_distinguishability(GraphStateKind::Star4, 0.0);
    auto group = graph::generators_from_graph(device::state_graph(GraphStateKind::Star4));
    for (std::size_t mask = 1; mask < group.size(); ++mask) {
        bool has_xy = false;
        for (auto l : group.elements[mask].letters)
            if (l == graph::Pauli::X || l == graph::Pauli::Y) has_xy = true;
        if (has_xy)
            EXPECT_LT(std::abs(pred.expectations[mask]), 0.05) << group.elements[mask].to_string();
        else
            EXPECT_NEAR(pred.expectations[mask], 1.0, 1e-9) << group.elements[mask].to_string();
    }
}

TEST(Multiphoton, VanishingPairRateIsIdeal) {
    auto pred = predict_multiphoton(GraphStateKind::Star4, 1e-9);
    EXPECT_NEAR(pred.fidelity, 1.0, 1e-6);
}

TEST(Multiphoton, AtPublishedEstimate) {
    auto pred = predict_multiphoton(GraphStateKind::Star4, 0.036);
    EXPECT_GE(pred.fidelity, 0.73);
    EXPECT_LE(pred.fidelity, 0.83);
}

TEST(Multiphoton, FidelityMonotoneInPairRate) {
    double prev = 1.1;
    for (double p : {0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08}) {
        double f = predict_multiphoton(GraphStateKind::Star4, p).fidelity;
        EXPECT_LT(f, prev + 1e-12) << "p=" << p;
        prev = f;
    }
}

TEST(Multiphoton, CutoffPreconditions) {
    EXPECT_THROW(predict_multiphoton(GraphStateKind::Star4, 0.03, 4), std::invalid_argument);
    // the six-photon truncation is accepted but under-counts contamination
    auto coarse = predict_multiphoton(GraphStateKind::Star4, 0.036, 6);
    auto converged = predict_multiphoton(GraphStateKind::Star4, 0.036, 10);
    EXPECT_GT(coarse.fidelity, converged.fidelity);
    EXPECT_TRUE(coarse.truncated);
}

TEST(PhaseError, ZeroDeltaIsExactlyIdeal) {
    auto pred = predict_phase_error(GraphStateKind::Star4, 0.0, 16, 3);
    EXPECT_NEAR(pred.fidelity, 1.0, 1e-9);
}

TEST(PhaseError, AtPublishedEstimate) {
    auto pred = predict_phase_error(GraphStateKind::Star4, 0.185, 400, 7);
    EXPECT_GE(pred.fidelity, 0.73);
    EXPECT_LE(pred.fidelity, 0.83);
}

TEST(PhaseError, DeterministicUnderFixedSeed) {
    auto a = predict_phase_error(GraphStateKind::Star4, 0.15, 64, 11);
    auto b = predict_phase_error(GraphStateKind::Star4, 0.15, 64, 11);
    ASSERT_EQ(a.expectations.size(), b.expectations.size());
    for (std::size_t k = 0; k < a.expectations.size(); ++k)
        EXPECT_EQ(a.expectations[k], b.expectations[k]);  // bit-identical
    auto c = predict_phase_error(GraphStateKind::Star4, 0.15, 64, 12);
    bool differs = false;
    for (std::size_t k = 0; k < a.expectations.size(); ++k)
        if (a.expectations[k] != c.expectations[k]) differs = true;
    EXPECT_TRUE(differs);
}

TEST(PhaseError, FidelityMonotoneInDelta) {
    double prev = 1.1;
    for (double delta : {0.0, 0.08, 0.16, 0.24, 0.32}) {
        double f = predict_phase_error(GraphStateKind::Star4, delta, 256, 5).fidelity;
        EXPECT_LT(f, prev + 5e-3) << "delta=" << delta;  // Monte Carlo slack
        prev = f;
    }
}

TEST(PhaseError, StandardErrorShrinksWithSamples) {
    // spread of repeated estimates scales roughly as 1/sqrt(n)
    auto spread = [](int n_samples, int repeats) {
        std::vector<double> f;
        for (int r = 0; r < repeats; ++r)
            f.push_back(predict_phase_error(GraphStateKind::Star4, 0.185, n_samples, 100 + r).fidelity);
        double mean = 0.0;
        for (double v : f) mean += v;
        mean /= f.size();
        double var = 0.0;
        for (double v : f) var += (v - mean) * (v - mean);
        return std::sqrt(var / (f.size() - 1));
    };
    double s_small = spread(25, 10);
    double s_large = spread(400, 10);
    ASSERT_GT(s_small, 0.0);
    ASSERT_GT(s_large, 0.0);
    double ratio = s_small / s_large;  // expect about 4
    EXPECT_GT(ratio, 1.6);
    EXPECT_LT(ratio, 10.0);
}

TEST(PurityFromG2, Relation) {
    EXPECT_DOUBLE_EQ(purity_from_g2(2.0).purity, 1.0);
    EXPECT_DOUBLE_EQ(purity_from_g2(1.82).purity, 0.82);
    EXPECT_DOUBLE_EQ(purity_from_g2(1.0).purity, 0.0);
    EXPECT_THROW(purity_from_g2(0.9), std::invalid_argument);
    EXPECT_THROW(purity_from_g2(2.3), std::invalid_argument);
}

TEST(GridExport, CsvShapes) {
    auto group = graph::generators_from_graph(device::state_graph(GraphStateKind::Star4));
    std::vector<double> params = {0.9, 1.0};
    std::vector<ModelPrediction> preds;
    for (double s : params) preds.push_back(predict_distinguishability(GraphStateKind::Star4, s));

    std::stringstream grid_csv;
    write_expectation_grid_csv(grid_csv, "sigma", params, preds, group);
    std::string line;
    std::getline(grid_csv, line);
    EXPECT_EQ(line, "sigma,stabilizer_label,expectation");
    int rows = 0;
    while (std::getline(grid_csv, line)) ++rows;
    EXPECT_EQ(rows, 32);

    std::stringstream fid_csv;
    write_fidelity_grid_csv(fid_csv, "sigma", params, preds);
    std::getline(fid_csv, line);
    EXPECT_EQ(line, "sigma,fidelity");
}

TEST(SeedSplitting, StableAndDistinct) {
    auto a = split_seed(1, {2, 3});
    EXPECT_EQ(a, split_seed(1, {2, 3}));
    EXPECT_NE(a, split_seed(1, {3, 2}));
    EXPECT_NE(a, split_seed(2, {2, 3}));
}

}  // namespace
