#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "immac/errors.hpp"
#include "immac/fock.hpp"
#include "immac/kraus.hpp"
#include "immac/numeric.hpp"
#include "immac/quasidist.hpp"
#include "oracles.hpp"

using namespace immac;

namespace {

const double kSqrt2 = std::sqrt(2.0);

FockVector coherent(double r, double phi = 0.0) {
    return coherent_fock(CoherentParams(r, phi), default_cutoff(r * r)).state.normalized();
}

FockVector amplified(double g, std::size_t N, double abar) {
    const AmplifierSpec s(g, N, 0);
    return apply_to_coherent(extended_kraus(s, default_apply_cutoff(s, abar)), g, abar).branch.out;
}

}  // namespace

TEST(husimi_q, coherent_closed_form) {
    const auto v = coherent(1.2, 0.7);
    const Complex a0 = std::polar(1.2, 0.7);
    for (Complex b : {Complex(0, 0), Complex(1, -1), a0, Complex(-2, 0.5)}) {
        EXPECT_NEAR(husimi_q(v, b), std::exp(-std::norm(b - a0)) / kPi, 1e-13);
    }
}

TEST(husimi_q, number_state_ring) {
    // Q of |n> is |beta|^{2n} e^{-|beta|^2} / (n! pi)
    const auto v = FockVector::number_state(4, 10);
    for (double r : {0.5, 2.0, 3.0}) {
        EXPECT_NEAR(husimi_q(v, std::polar(r, 1.1)), oracle::poisson_pmf(r * r, 4) / kPi, 1e-14);
    }
}

TEST(q_distribution, coherent_peak) {
    const auto q = q_distribution(coherent(1.0, 0.3));
    const auto pk = q.peak();
    EXPECT_NEAR(std::abs(pk.location - std::polar(1.0, 0.3)), 0.0, 1e-3);
    EXPECT_NEAR(pk.value, 1.0 / kPi, 1e-6);
    EXPECT_FALSE(q.warning().has_value());
}

TEST(q_distribution, amplified_inside_disk) {
    const auto q = q_distribution(amplified(3.0, 9, 0.5));
    EXPECT_NEAR(std::abs(q.peak().location - Complex(1.5, 0.0)), 0.0, 0.05);
    EXPECT_NEAR(q.peak().value * kPi, 1.0, 0.05);
}

TEST(q_distribution, flattened_on_the_arc) {
    const auto q = q_distribution(amplified(3.0, 9, 1.5));
    // mass hugs |beta| ~ 3 and the peak is far below a coherent state's
    EXPECT_LT(q.peak().value * kPi, 0.8);
    EXPECT_NEAR(std::abs(q.peak().location), 3.0, 0.6);
    const double on_arc = husimi_q(amplified(3.0, 9, 1.5), std::polar(3.2, 0.5));
    const double off_arc = husimi_q(amplified(3.0, 9, 1.5), Complex(4.5, 0.0));
    EXPECT_GT(on_arc, off_arc);
}

TEST(q_distribution, guards) {
    FockVector v(3);
    v[0] = 2.0;
    EXPECT_THROW(q_distribution(v), DomainError);
    EXPECT_THROW(q_distribution(coherent(1.0), GridSpec{{0, 0}, 3.0, 2}), DomainError);
    EXPECT_THROW(q_distribution(coherent(1.0), GridSpec{{0, 0}, 0.0, 11}), DomainError);
}

TEST(q_distribution, small_grid_warns) {
    const auto q = q_distribution(coherent(2.0), GridSpec{{0, 0}, 1.0, 41});
    EXPECT_TRUE(q.warning().has_value());
    EXPECT_LT(q.mass(), 0.997);
}

TEST(quadrature_snr, coherent) {
    for (double a : {0.3, 1.0, 2.5}) {
        const auto s = quadrature_snr(coherent(a, 0.9));
        EXPECT_NEAR(s.snr1, kSqrt2 * a, 1e-10);
        EXPECT_NEAR(s.snr2, kSqrt2 * a, 1e-10);
        EXPECT_NEAR(s.var1, 1.0, 1e-10);
        EXPECT_NEAR(s.var2, 1.0, 1e-10);
    }
    EXPECT_THROW(quadrature_snr(FockVector::vacuum(4)), UndefinedPhaseError);
    EXPECT_THROW(quadrature_snr(FockVector::number_state(3, 6)), UndefinedPhaseError);
}

TEST(quadrature_snr, amplified_inside_disk) {
    const auto s = quadrature_snr(amplified(3.0, 9, 0.5));
    EXPECT_NEAR(s.snr1 / (kSqrt2 * 1.5), 1.0, 0.02);
}

TEST(number_snr, examples) {
    for (double a : {0.5, 1.0, 3.0}) EXPECT_NEAR(number_snr(coherent(a)), a, 1e-10);
    EXPECT_EQ(number_snr(FockVector::number_state(5, 8)), std::numeric_limits<double>::infinity());
}

TEST(snr_report, number_snr_witness) {
    // sqrt(p) SNR_N exceeds the input SNR somewhere in (1, 3) for g = 3, N = 9.
    const AmplifierSpec s(3.0, 9, 0);
    bool found = false;
    for (double a = 1.05; a < 3.0; a += 0.05) {
        const auto r = snr_report(s, a);
        if (r.root_p_snr_n > a) found = true;
    }
    EXPECT_TRUE(found);
    EXPECT_THROW(snr_report(s.with_k(1), 1.0), ConfigurationError);
}

// ---- properties ----

TEST(quasidist_properties, default_grid_captures_mass) {
    for (auto [g, N] : std::vector<std::pair<double, std::size_t>>{{kSqrt2, 2}, {3.0, 9}}) {
        for (double a : {0.0, 0.5, 1.5, 3.0, 5.0}) {
            const auto q = q_distribution(amplified(g, N, a));
            EXPECT_GE(q.mass(), 0.997) << g << " " << a;
            EXPECT_LE(q.mass(), 1.0 + 1e-9);
        }
    }
}

TEST(quasidist_properties, inside_disk_looks_coherent) {
    for (auto [g, N] : std::vector<std::pair<double, std::size_t>>{{kSqrt2, 4}, {3.0, 9}, {2.0, 16}}) {
        const double top = (std::sqrt(static_cast<double>(N)) - 1.0) / g;
        for (double a = 0.1; a <= top; a += 0.1) {
            const auto pk = q_distribution(amplified(g, N, a)).peak();
            EXPECT_LE(std::abs(pk.location - Complex(g * a, 0.0)), 0.05) << g << " " << a;
            EXPECT_NEAR(pk.value * kPi, 1.0, 0.05) << g << " " << a;
        }
    }
}

TEST(quasidist_properties, resolvability) {
    for (std::size_t N : {2u, 9u}) {
        const double top = 2.0 * std::sqrt(static_cast<double>(N));
        for (int i = 1; i <= 40; ++i) {
            const double a = top * i / 40;
            const auto r = snr_report(AmplifierSpec(3.0, N, 0), a);
            EXPECT_LE(r.root_p_snr1, kSqrt2 * a * (1 + 1e-12)) << N << " " << a;
            EXPECT_LE(r.root_p_snr2, kSqrt2 * a * (1 + 1e-12)) << N << " " << a;
        }
    }
}

TEST(quasidist_properties, resolvability_overshoot_at_low_gain) {
    // At g = sqrt(2) the filtered output is amplitude-squeezed (antinormal
    // var1 < 1) and sqrt(p) SNR1 passes sqrt(2) abar by about 1% just
    // outside the disk. Reference: 40-digit direct evaluation at abar = 1.8.
    const auto r = snr_report(AmplifierSpec(kSqrt2, 2, 0), 1.8);
    EXPECT_NEAR(r.root_p_snr1 / (kSqrt2 * 1.8), 1.0100023765503716, 1e-10);
    EXPECT_NEAR(r.p, 0.9071815686154006, 1e-13);
    for (std::size_t N : {2u, 9u}) {
        const double top = 2.0 * std::sqrt(static_cast<double>(N));
        for (int i = 1; i <= 40; ++i) {
            const double a = top * i / 40;
            const auto q = snr_report(AmplifierSpec(kSqrt2, N, 0), a);
            EXPECT_LE(q.root_p_snr2, kSqrt2 * a * (1 + 1e-12)) << N << " " << a;
            EXPECT_LE(q.root_p_snr1, kSqrt2 * a * 1.011) << N << " " << a;
            if (kSqrt2 * a <= std::sqrt(static_cast<double>(N)) - 1.0) {
                EXPECT_LE(q.root_p_snr1, kSqrt2 * a) << N << " " << a;
            }
        }
    }
}
