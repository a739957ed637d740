#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qdqn/circuit.hpp"
#include "qdqn/statevec.hpp"

namespace qdqn {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(StateVector, ZeroStateOneQubit) {
    StateVector s(1);
    ASSERT_EQ(s.size(), 2U);
    EXPECT_EQ(s[0], Complex(1.0, 0.0));
    EXPECT_EQ(s[1], Complex(0.0, 0.0));
}

TEST(StateVector, ZeroStateTwoQubits) {
    StateVector s(2);
    ASSERT_EQ(s.size(), 4U);
    EXPECT_EQ(s[0], Complex(1.0));
    for (std::size_t i = 1; i < 4; ++i) {
        EXPECT_EQ(s[i], Complex(0.0));
    }
}

TEST(StateVector, ZeroStateIsNormalized) {
    for (std::size_t n = 1; n <= 10; ++n) {
        EXPECT_NEAR(StateVector(n).norm(), 1.0, 1e-15);
    }
}

TEST(StateVector, RejectsBadWidth) {
    EXPECT_THROW(StateVector(0), std::invalid_argument);
    EXPECT_THROW(StateVector(31), std::invalid_argument);
}

TEST(StateVector, RxPiFlipsBit) {
    StateVector s(1);
    s.apply_rotation(Axis::X, 0, kPi);
    EXPECT_NEAR(std::norm(s[1]), 1.0, 1e-15);
    EXPECT_NEAR(s[1].real(), 0.0, 1e-15);
    EXPECT_NEAR(s[1].imag(), -1.0, 1e-15);
}

TEST(StateVector, RyHalfPiGivesEqualSuperposition) {
    StateVector s(1);
    s.apply_rotation(Axis::Y, 0, kPi / 2);
    // [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]] applied to [1, 0]
    EXPECT_NEAR(s[0].real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s[1].real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s[0].imag(), 0.0, 1e-15);
    EXPECT_NEAR(s[1].imag(), 0.0, 1e-15);
}

TEST(StateVector, RzKeepsZeroPopulation) {
    for (double t : {-3.0, -0.5, 0.0, 0.7, 2.0, 10.0}) {
        StateVector s(1);
        s.apply_rotation(Axis::Z, 0, t);
        EXPECT_NEAR(std::norm(s[0]), 1.0, 1e-15);
    }
}

TEST(StateVector, RotationRejectsBadInput) {
    StateVector s(2);
    EXPECT_THROW(s.apply_rotation(Axis::X, 2, 0.1), std::out_of_range);
    EXPECT_THROW(s.apply_rotation(Axis::X, 0, std::nan("")), std::invalid_argument);
    EXPECT_THROW(s.apply_rotation(Axis::Y, 0, INFINITY), std::invalid_argument);
}

TEST(StateVector, CzOnOneOneFlipsSign) {
    StateVector s(2);
    s.apply_rotation(Axis::X, 0, kPi);
    s.apply_rotation(Axis::X, 1, kPi);
    const Complex before = s[3];
    s.apply_cz(0, 1);
    EXPECT_NEAR(std::abs(s[3] + before), 0.0, 1e-15);
}

TEST(StateVector, CzOnZeroIsIdentity) {
    StateVector s(2);
    s.apply_cz(0, 1);
    EXPECT_EQ(s[0], Complex(1.0));
}

TEST(StateVector, CzIsInvolution) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    StateVector s(3);
    for (std::size_t q = 0; q < 3; ++q) {
        s.apply_rotation(Axis::Y, q, u(rng));
        s.apply_rotation(Axis::Z, q, u(rng));
    }
    StateVector orig = s;
    s.apply_cz(0, 2);
    s.apply_cz(0, 2);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(std::abs(s[i] - orig[i]), 0.0, 1e-15);
    }
}

TEST(StateVector, CzRejectsSameQubit) {
    StateVector s(2);
    EXPECT_THROW(s.apply_cz(1, 1), std::invalid_argument);
    EXPECT_THROW(s.apply_cz(0, 5), std::out_of_range);
}

TEST(Expectation, ZOnZeroIsOne) {
    EXPECT_DOUBLE_EQ(expectation(StateVector(1), ZObservable({0})), 1.0);
}

TEST(Expectation, ZAfterRyIsCosine) {
    for (double t : {0.0, 0.3, 1.0, kPi / 2, 2.5, kPi}) {
        StateVector s(1);
        s.apply_rotation(Axis::Y, 0, t);
        EXPECT_NEAR(expectation(s, ZObservable({0})), std::cos(t), 1e-12);
    }
}

TEST(Expectation, ParityOfZeroOneIsMinusOne) {
    StateVector s(2);
    s.apply_rotation(Axis::X, 0, kPi); // |01> with qubit 0 set
    EXPECT_NEAR(expectation(s, ZObservable({0, 1})), -1.0, 1e-15);
}

TEST(ZObservableTest, SortsAndRejectsDuplicates) {
    ZObservable o({3, 1});
    EXPECT_EQ(o.qubits(), (std::vector<std::size_t>{1, 3}));
    EXPECT_EQ(o.mask(), 0b1010U);
    EXPECT_THROW(ZObservable({1, 1}), std::invalid_argument);
    EXPECT_THROW(o.validate(3), std::out_of_range);
    EXPECT_NO_THROW(o.validate(4));
}

class RandomCircuits : public ::testing::TestWithParam<std::size_t> {};

TEST_P(RandomCircuits, NormPreservedAndExpectationsBounded) {
    std::mt19937_64 rng(GetParam());
    std::uniform_int_distribution<std::size_t> width(1, 12);
    const std::size_t n = width(rng);
    std::uniform_int_distribution<std::size_t> qubit(0, n - 1);
    std::uniform_int_distribution<int> kind(0, 3);
    std::uniform_real_distribution<double> angle(-10.0, 10.0);
    StateVector s(n);
    for (int g = 0; g < 200; ++g) {
        const int k = kind(rng);
        if (k == 3 && n > 1) {
            const std::size_t a = qubit(rng);
            std::size_t b = qubit(rng);
            while (b == a) {
                b = qubit(rng);
            }
            s.apply_cz(a, b);
        } else {
            s.apply_rotation(static_cast<Axis>(k % 3), qubit(rng), angle(rng));
        }
    }
    EXPECT_LT(std::abs(s.norm() - 1.0), 1e-10);
    for (std::size_t q = 0; q < n; ++q) {
        const double e = expectation(s, ZObservable({q}));
        EXPECT_LE(std::abs(e), 1.0 + 1e-12);
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomCircuits, ::testing::Range<std::size_t>(0, 20));

TEST(StateVector, RotationsCompose) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
        StateVector prep(2);
        prep.apply_rotation(Axis::Y, 0, 0.4);
        prep.apply_rotation(Axis::X, 1, 1.1);
        prep.apply_cz(0, 1);
        const double a = u(rng);
        const double b = u(rng);
        StateVector s1 = prep;
        s1.apply_rotation(axis, 1, a);
        s1.apply_rotation(axis, 1, b);
        StateVector s2 = prep;
        s2.apply_rotation(axis, 1, a + b);
        for (std::size_t i = 0; i < s1.size(); ++i) {
            EXPECT_NEAR(std::abs(s1[i] - s2[i]), 0.0, 1e-12);
        }
    }
}

TEST(StateVector, ProductStatesFactorize) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    StateVector s(4);
    for (std::size_t q = 0; q < 4; ++q) {
        s.apply_rotation(Axis::X, q, u(rng));
        s.apply_rotation(Axis::Y, q, u(rng));
        s.apply_rotation(Axis::Z, q, u(rng));
    }
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            EXPECT_NEAR(expectation(s, ZObservable({i, j})),
                        expectation(s, ZObservable({i})) * expectation(s, ZObservable({j})),
                        1e-10);
        }
    }
}

TEST(StateVector, PauliMatrixElementMatchesExplicitProduct) {
    StateVector a(3);
    StateVector b(3);
    a.apply_rotation(Axis::Y, 0, 0.3);
    a.apply_rotation(Axis::X, 2, 1.3);
    b.apply_rotation(Axis::X, 1, -0.8);
    b.apply_rotation(Axis::Y, 2, 2.1);
    for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
        for (std::size_t q = 0; q < 3; ++q) {
            StateVector pb = b;
            pb.apply_pauli(axis, q);
            const Complex want = inner_product(a, pb);
            const Complex got = pauli_matrix_element(a, b, axis, q);
            EXPECT_NEAR(std::abs(want - got), 0.0, 1e-14);
        }
    }
}

TEST(CircuitTest, CzRingTopology) {
    Circuit c2(2);
    c2.add_cz_ring();
    ASSERT_EQ(c2.size(), 1U);
    Circuit c4(4);
    c4.add_cz_ring();
    ASSERT_EQ(c4.size(), 4U);
    EXPECT_EQ(c4.gates()[3].q0, 3U);
    EXPECT_EQ(c4.gates()[3].q1, 0U);
    Circuit c1(1);
    c1.add_cz_ring();
    EXPECT_EQ(c1.size(), 0U);
}

TEST(CircuitTest, AngleIsLinearCombination) {
    Gate g;
    g.terms = {{0, 1, 2.0}, {1, kNoIndex, 0.5}, {kNoIndex, 0, -1.0}};
    const std::vector<double> p{3.0, 4.0};
    const std::vector<double> x{0.25, 10.0};
    EXPECT_DOUBLE_EQ(g.angle(p, x), 2.0 * 3.0 * 10.0 + 0.5 * 4.0 - 0.25);
}

TEST(CircuitTest, ExtentsTrackReferencedIndices) {
    Circuit c(2);
    EXPECT_EQ(c.param_extent(), 0U);
    c.add_rotation(Axis::X, 0, {{4, 2, 1.0}});
    c.add_rotation(Axis::Y, 1, {{1, kNoIndex, 1.0}});
    EXPECT_EQ(c.param_extent(), 5U);
    EXPECT_EQ(c.feature_extent(), 3U);
}

} // namespace
} // namespace qdqn
