#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "bitsmooth/bim.hpp"
#include "bitsmooth/errors.hpp"
#include "oracles.hpp"

using namespace bitsmooth;

namespace {

const double phi = std::numbers::phi;

GaussMarkovModel make(double alpha, double sigma_z, double sigma_eta = 1.0, double sigma0 = 1.0) {
    GaussMarkovModel m;
    m.alpha = alpha;
    m.sigma_z = sigma_z;
    m.sigma_eta = sigma_eta;
    m.sigma0 = sigma0;
    return m;
}

InfoMatrix one(double v) { return InfoMatrix::Constant(1, 1, v); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct GridPoint {
    double alpha, sigma_z, sigma_eta;
};

std::vector<GridPoint> parameter_grid() {
    std::vector<GridPoint> g;
    for (double a : {0.5, 0.9, 0.99})
        for (double sz : {0.1, 1.0, 10.0})
            for (double se : {0.1, 1.0, 10.0}) g.push_back({a, sz, se});
    return g;
}

}  // namespace

TEST(BimStep, FilterExamples) {
    const auto d = scalar_transition_info(make(1.0, 1.0));
    EXPECT_DOUBLE_EQ(filter_bim_step(1.0, d, 1.0), 1.5);
    const auto dm = transition_info(make(1.0, 1.0));
    EXPECT_NEAR(filter_bim_step(one(1.0), dm, one(1.0))(0, 0), 1.5, 1e-15);

    const auto d0 = scalar_transition_info(make(0.0, 2.0));
    for (double j : {0.01, 1.0, 1e6}) EXPECT_DOUBLE_EQ(filter_bim_step(j, d0, 0.3), 0.25 + 0.3);
}

TEST(BimStep, FilterGoldenRatio) {
    const auto d = scalar_transition_info(make(1.0, 1.0));
    const double brute = oracle::iterate([](double j) { return 2.0 - 1.0 / (j + 1.0); }, 1.0, 200);
    const double root = oracle::positive_root(1.0, -1.0, -1.0);
    EXPECT_NEAR(brute, root, 1e-14);
    double j = 1.0;
    for (int i = 0; i < 200; ++i) j = filter_bim_step(j, d, 1.0);
    EXPECT_NEAR(j, root, 1e-14);
    EXPECT_NEAR(j, 1.6180340, 1e-7);
}

TEST(BimStep, PredictExamples) {
    const auto d1 = scalar_transition_info(make(1.0, 1.0));
    EXPECT_DOUBLE_EQ(predict_bim_step(1.0, d1), 0.5);
    const auto d0 = scalar_transition_info(make(0.0, 1.0));
    EXPECT_DOUBLE_EQ(predict_bim_step(42.0, d0), 1.0);
    EXPECT_NEAR(predict_bim_step(one(1.0), transition_info(make(1.0, 1.0)))(0, 0), 0.5, 1e-15);
}

TEST(BimStep, GainExamples) {
    const auto d = scalar_transition_info(make(1.0, 1.0));
    EXPECT_DOUBLE_EQ(smoothing_gain_step(0.0, d, 1.0), 0.5);
    const double brute =
        oracle::iterate([](double kappa) { return 1.0 - 1.0 / (2.0 + kappa); }, 0.0, 200);
    EXPECT_NEAR(brute, phi - 1.0, 1e-14);
    double kappa = 0.0;
    for (int i = 0; i < 200; ++i) kappa = smoothing_gain_step(kappa, d, 1.0);
    EXPECT_NEAR(kappa, oracle::positive_root(1.0, 1.0, -1.0), 1e-14);
}

TEST(BimStep, SingularInnerMatrixThrowsWithBlock) {
    TransitionInfo d = transition_info(make(1.0, 1.0));
    d.d11 = one(-1.0);
    try {
        filter_bim_step(one(1.0), d, one(1.0), 17);
        FAIL() << "expected NumericalDegeneracy";
    } catch (const NumericalDegeneracy& e) {
        EXPECT_EQ(e.block(), 17);
    }
    EXPECT_THROW(predict_bim_step(one(1.0), d, 3), NumericalDegeneracy);
}

TEST(BimStep, MatrixFormMatchesScalarOnTwoDimensionalDecoupledModel) {
    // Two independent scalar models stacked block-diagonally.
    const auto a = transition_info(make(0.9, 0.5));
    const auto b = transition_info(make(0.3, 2.0));
    auto stack = [](const InfoMatrix& x, const InfoMatrix& y) {
        InfoMatrix m = InfoMatrix::Zero(2, 2);
        m(0, 0) = x(0, 0);
        m(1, 1) = y(0, 0);
        return m;
    };
    TransitionInfo d{stack(a.d11, b.d11), stack(a.d12, b.d12), stack(a.d21, b.d21),
                     stack(a.d22, b.d22)};
    InfoMatrix j = stack(one(2.0), one(0.7));
    const InfoMatrix f = stack(one(1.0), one(4.0));
    const InfoMatrix out = filter_bim_step(j, d, f);
    EXPECT_NEAR(out(0, 0), filter_bim_step(2.0, a.scalar(), 1.0), 1e-13);
    EXPECT_NEAR(out(1, 1), filter_bim_step(0.7, b.scalar(), 4.0), 1e-13);
    EXPECT_EQ(out(0, 1), 0.0);
}

TEST(BimSequence, FilterUnquantizedExamples) {
    const auto m = make(1.0, 1.0);
    const auto one_step = filter_bim_sequence(m, MeasurementChannel::Unquantized, 1);
    ASSERT_EQ(one_step.values.size(), 2u);
    EXPECT_DOUBLE_EQ(one_step.scalar_at(0), 1.0);
    EXPECT_DOUBLE_EQ(one_step.scalar_at(1), 1.5);

    const auto seq = filter_bim_sequence(m, MeasurementChannel::Unquantized, 60);
    EXPECT_EQ(seq.kind, BimKind::Filter);
    EXPECT_EQ(seq.anchor_block, 60);
    EXPECT_NEAR(seq.scalar_at(60), phi, 1e-10);
    EXPECT_THROW(seq.at(61), std::out_of_range);
}

TEST(BimSequence, FilterMatchesJointInformationOracle) {
    for (auto ch : {MeasurementChannel::Unquantized, MeasurementChannel::OneBit}) {
        const auto m = make(0.95, 0.4, 0.8, 1.7);
        const auto fims = expected_fim_sequence(m, ch, 40);
        const auto seq = filter_bim_sequence(m, ch, 40);
        for (std::int64_t k = 1; k <= 40; k += 3) {
            const auto joint = oracle::joint_information(m.alpha, m.sigma_z, m.sigma0, fims, k);
            EXPECT_LT(rel(seq.scalar_at(k), oracle::marginal_information(joint, k)), 1e-11);
        }
    }
}

TEST(BimSequence, OneBitNeverExceedsUnquantized) {
    for (const auto& p : parameter_grid()) {
        const auto m = make(p.alpha, p.sigma_z, p.sigma_eta);
        const auto unq = filter_bim_sequence(m, MeasurementChannel::Unquantized, 50);
        const auto q = filter_bim_sequence(m, MeasurementChannel::OneBit, 50);
        const auto fu = expected_fim_sequence(m, MeasurementChannel::Unquantized, 50);
        const auto fq = expected_fim_sequence(m, MeasurementChannel::OneBit, 50);
        const auto su = smooth_bim_sequence(unq, transition_info(m), fu);
        const auto sq = smooth_bim_sequence(q, transition_info(m), fq);
        for (std::int64_t k = 0; k <= 50; ++k) EXPECT_LE(q.scalar_at(k), unq.scalar_at(k));
        for (std::int64_t l = 0; l < 50; ++l) EXPECT_LE(sq.scalar_at(l), su.scalar_at(l));
        const auto pu = predict_bim(unq.at(50), transition_info(m), 20, 50);
        const auto pq = predict_bim(q.at(50), transition_info(m), 20, 50);
        for (std::int64_t l = 51; l <= 70; ++l) EXPECT_LE(pq.scalar_at(l), pu.scalar_at(l));
    }
}

TEST(BimSequence, ExpectedFimSequence) {
    const auto m = make(0.9, 1.0, 2.0);
    const auto fu = expected_fim_sequence(m, MeasurementChannel::Unquantized, 5);
    ASSERT_EQ(fu.size(), 6u);
    EXPECT_EQ(fu[0], 0.0);
    for (std::size_t k = 1; k < fu.size(); ++k) EXPECT_DOUBLE_EQ(fu[k], 0.25);
    const auto fq = expected_fim_sequence(m, MeasurementChannel::OneBit, 5);
    for (std::size_t k = 1; k < fq.size(); ++k)
        EXPECT_DOUBLE_EQ(fq[k], expected_fq(state_moments(m, k), 2.0));
}

TEST(BimPredict, Examples) {
    const auto d = transition_info(make(0.9, 1.0));
    const auto seq = predict_bim(one(10.0), d, 10000, 7);
    EXPECT_EQ(seq.kind, BimKind::Predict);
    EXPECT_EQ(seq.values.front().block, 8);
    EXPECT_EQ(seq.values.back().block, 10007);
    const double brute = oracle::iterate(
        [](double j) { return 1.0 - (0.81) / (0.81 + j); }, 10.0, 10000);
    EXPECT_NEAR(brute, 0.19, 1e-12);
    EXPECT_LT(rel(seq.scalar_at(10007), 0.19), 1e-9);

    EXPECT_DOUBLE_EQ(predict_bim(one(3.0), transition_info(make(0.0, 1.0)), 1).scalar_at(1), 1.0);
    EXPECT_DOUBLE_EQ(predict_bim(one(1.0), transition_info(make(1.0, 1.0)), 1).scalar_at(1), 0.5);
}

TEST(BimPredict, MonotoneDecayToStationaryInformation) {
    for (double alpha : {0.5, 0.9, 0.99}) {
        for (double sz : {0.1, 1.0}) {
            const auto m = make(alpha, sz);
            const double limit = (1.0 - alpha * alpha) / (sz * sz);
            const auto seq = predict_bim(one(50.0 / (sz * sz)), transition_info(m), 10000);
            double prev = 50.0 / (sz * sz);
            for (const auto& e : seq.values) {
                const double v = e.info(0, 0);
                EXPECT_LE(v, prev);
                EXPECT_GE(v, limit * (1.0 - 1e-12));
                prev = v;
            }
            EXPECT_LT(rel(prev, limit), 1e-9);
        }
    }
}

TEST(BimSmooth, BackwardSingleStepIsFilterPlusInitialGain) {
    const auto m = make(0.9, 0.5, 2.0);
    const auto d = transition_info(m);
    const auto seq = filter_bim_sequence(m, MeasurementChannel::Unquantized, 10);
    const auto fims = expected_fim_sequence(m, MeasurementChannel::Unquantized, 10);
    const auto s = scalar_transition_info(m);
    const double kappa0 = s.d11 - s.d12 * s.d21 / (s.d22 + fims[10]);
    EXPECT_LT(rel(smooth_bim_backward(seq, d, 9)(0, 0), seq.scalar_at(9) + kappa0), 1e-12);
    EXPECT_LT(rel(smoothing_gain(d, std::span<const double>(fims), 9, 10).kappa(0, 0), kappa0),
              1e-12);
}

TEST(BimSmooth, BackwardMatchesJointInformationOracle) {
    for (auto ch : {MeasurementChannel::Unquantized, MeasurementChannel::OneBit}) {
        const auto m = make(0.97, 0.3, 1.1, 2.0);
        const auto seq = filter_bim_sequence(m, ch, 30);
        const auto fims = expected_fim_sequence(m, ch, 30);
        const auto joint = oracle::joint_information(m.alpha, m.sigma_z, m.sigma0, fims, 30);
        for (std::int64_t l = 0; l < 30; l += 4) {
            const double expected = oracle::marginal_information(joint, l);
            EXPECT_LT(rel(smooth_bim_backward(seq, transition_info(m), l)(0, 0), expected), 1e-10);
        }
    }
}

TEST(BimSmooth, MemorylessProcessGainsNothing) {
    const auto m = make(0.0, 0.7, 0.5);
    const auto d = transition_info(m);
    const auto seq = filter_bim_sequence(m, MeasurementChannel::Unquantized, 8);
    const auto fims = expected_fim_sequence(m, MeasurementChannel::Unquantized, 8);
    for (std::int64_t l = 0; l < 8; ++l) {
        EXPECT_EQ(smooth_bim_backward(seq, d, l)(0, 0), seq.scalar_at(l));
        EXPECT_EQ(smoothing_gain(d, std::span<const double>(fims), l, 8).kappa(0, 0), 0.0);
    }
}

TEST(BimSmooth, GainGoldenRatioLimit) {
    const auto m = make(1.0, 1.0);
    const auto fims = expected_fim_sequence(m, MeasurementChannel::Unquantized, 201);
    const auto d = transition_info(m);
    EXPECT_DOUBLE_EQ(smoothing_gain(d, std::span<const double>(fims), 200, 201).kappa(0, 0), 0.5);
    const auto g = smoothing_gain(d, std::span<const double>(fims), 0, 201);
    EXPECT_EQ(g.lag_from, 0);
    EXPECT_EQ(g.anchor, 201);
    EXPECT_NEAR(g.kappa(0, 0), phi - 1.0, 1e-12);

    const auto seq = filter_bim_sequence(m, MeasurementChannel::Unquantized, 201);
    EXPECT_NEAR(smooth_bim_compact(seq, smoothing_gain(d, std::span<const double>(fims), 100, 201))(0, 0),
                std::sqrt(5.0), 1e-12);
}

TEST(BimSmooth, CompactWithZeroGainIsFilter) {
    const auto seq = filter_bim_sequence(make(0.9, 1.0), MeasurementChannel::Unquantized, 5);
    SmoothingGain zero{3, 5, one(0.0)};
    EXPECT_EQ(smooth_bim_compact(seq, zero)(0, 0), seq.scalar_at(3));
}

TEST(BimSmooth, CompactEqualsBackwardOnGrid) {
    for (const auto& p : parameter_grid()) {
        for (auto ch : {MeasurementChannel::Unquantized, MeasurementChannel::OneBit}) {
            const auto m = make(p.alpha, p.sigma_z, p.sigma_eta);
            const auto d = transition_info(m);
            const auto full = filter_bim_sequence(m, ch, 50);
            const auto fims = expected_fim_sequence(m, ch, 50);
            double worst = 0.0;
            for (std::int64_t k = 1; k <= 50; ++k) {
                BimSequence seq = full;
                seq.anchor_block = k;
                seq.values.resize(static_cast<std::size_t>(k) + 1);
                for (std::int64_t l = 0; l < k; ++l) {
                    const double compact =
                        smooth_bim_compact(seq, smoothing_gain(d, std::span<const double>(fims), l, k))(0, 0);
                    const double backward = smooth_bim_backward(seq, d, l)(0, 0);
                    worst = std::max(worst, rel(compact, backward));
                }
            }
            EXPECT_LT(worst, 1e-10) << "alpha=" << p.alpha << " sigma_z=" << p.sigma_z
                                    << " sigma_eta=" << p.sigma_eta << " " << to_string(ch);
        }
    }
}

TEST(BimSmooth, InformationOrdering) {
    for (const auto& p : parameter_grid()) {
        const auto m = make(p.alpha, p.sigma_z, p.sigma_eta);
        const auto d = transition_info(m);
        const auto seq = filter_bim_sequence(m, MeasurementChannel::OneBit, 40);
        const auto fims = expected_fim_sequence(m, MeasurementChannel::OneBit, 40);
        for (std::int64_t l = 0; l < 40; l += 3) {
            double prev = seq.scalar_at(l);
            for (std::int64_t k = l + 1; k <= 40; ++k) {
                const double j = seq.scalar_at(l) +
                                 smoothing_gain(d, std::span<const double>(fims), l, k).kappa(0, 0);
                EXPECT_GE(j, prev * (1.0 - 1e-14));
                prev = j;
            }
        }
    }
}

TEST(BimSmooth, SequenceCoversAllBlocks) {
    const auto m = make(0.9, 1.0);
    const auto seq = filter_bim_sequence(m, MeasurementChannel::Unquantized, 12);
    const auto fims = expected_fim_sequence(m, MeasurementChannel::Unquantized, 12);
    const auto s = smooth_bim_sequence(seq, transition_info(m), fims);
    EXPECT_EQ(s.kind, BimKind::Smooth);
    EXPECT_EQ(s.anchor_block, 12);
    ASSERT_EQ(s.values.size(), 12u);
    for (std::int64_t l = 0; l < 12; ++l)
        EXPECT_LT(rel(s.scalar_at(l), smooth_bim_backward(seq, transition_info(m), l)(0, 0)), 1e-12);
}
