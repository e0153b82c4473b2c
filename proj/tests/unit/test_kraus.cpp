#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "immac/errors.hpp"
#include "immac/kraus.hpp"
#include "immac/numeric.hpp"
#include "oracles.hpp"

using namespace immac;

namespace {

const double kSqrt2 = std::sqrt(2.0);

double rel(double a, double b) { return b == 0.0 ? std::abs(a) : std::abs(a - b) / std::abs(b); }

std::vector<double> grid(double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i <= n; ++i) v.push_back(hi * i / n);
    return v;
}

}  // namespace

TEST(amplifier_spec, validation) {
    EXPECT_THROW(AmplifierSpec(1.0, 3, 0), DomainError);
    EXPECT_THROW(AmplifierSpec(0.5, 3, 0), DomainError);
    EXPECT_EQ(AmplifierSpec(2.0, 3, 1).with_k(4).k(), 4u);
}

TEST(restricted_kraus, vacuum_only_region) {
    for (double g : {1.1, 2.0, 7.0}) {
        const auto kr = restricted_kraus(AmplifierSpec(g, 0, 0), 5);
        EXPECT_EQ(kr.element(0), 1.0);
        for (std::size_t n = 1; n <= 5; ++n) EXPECT_EQ(kr.element(n), 0.0);
    }
}

TEST(restricted_kraus, small_example) {
    const auto kr = restricted_kraus(AmplifierSpec(2.0, 1, 0), 4);
    EXPECT_NEAR(kr.element(0), 0.5, 1e-16);
    EXPECT_EQ(kr.element(1), 1.0);
    EXPECT_EQ(kr.element(2), 0.0);
}

TEST(restricted_kraus, oracle_elements) {
    for (double g : {kSqrt2, 3.0}) {
        for (std::size_t N : {0u, 4u, 9u, 25u, 40u}) {
            for (std::size_t k : {0u, 1u, 3u}) {
                const auto kr = restricted_kraus(AmplifierSpec(g, N, k), N + k + 5);
                for (std::size_t n = 0; n <= N + 5; ++n) {
                    const double want = static_cast<double>(oracle::kraus_element(g, N, k, n, false));
                    EXPECT_LE(rel(kr.element(n), want), 1e-13) << g << " " << N << " " << k << " " << n;
                }
            }
        }
    }
}

TEST(restricted_kraus, largest_gram_entry_is_one_at_N) {
    for (std::size_t k : {0u, 1u, 2u}) {
        const AmplifierSpec s(3.0, 9, k);
        const auto kr = restricted_kraus(s, 30);
        double best = 0;
        std::size_t at = 0;
        for (std::size_t m = 0; m <= 30; ++m) {
            if (kr.gram_diagonal(m) > best) {
                best = kr.gram_diagonal(m);
                at = m;
            }
        }
        EXPECT_EQ(best, 1.0);
        EXPECT_EQ(at, 9 + k);  // input index N + k, output index N
    }
}

TEST(restricted_kraus, cutoff_guard) {
    EXPECT_THROW(restricted_kraus(AmplifierSpec(2.0, 5, 2), 6), TruncationError);
    EXPECT_THROW(extended_kraus(AmplifierSpec(2.0, 5, 2), 6), TruncationError);
    EXPECT_NO_THROW(extended_kraus(AmplifierSpec(2.0, 5, 2), 7));
}

TEST(extended_kraus, identity_tail_for_k0) {
    const auto kr = extended_kraus(AmplifierSpec(3.0, 9, 0), 60);
    for (std::size_t n = 10; n <= 60; ++n) EXPECT_EQ(kr.element(n), 1.0);
    EXPECT_NEAR(kr.element(0) / std::pow(3.0, -9), 1.0, 1e-14);
}

TEST(extended_kraus, profile_is_unimodal) {
    for (std::size_t k : {0u, 1u, 3u}) {
        const AmplifierSpec s(2.0, 6, k);
        const auto kr = extended_kraus(s, 40);
        for (std::size_t n = 1; n <= 6; ++n) EXPECT_GE(kr.profile(n), kr.profile(n - 1) * (1 - 1e-14));
        for (std::size_t n = 7; n + k <= 40; ++n) EXPECT_LE(kr.profile(n), kr.profile(n - 1) * (1 + 1e-14));
        for (std::size_t n = 0; n + k <= 40; ++n) EXPECT_LE(kr.profile(n), kr.profile(6) * (1 + 1e-14));
    }
}

TEST(apply, vacuum_input) {
    const AmplifierSpec s(3.0, 9, 0);
    const auto r = apply(extended_kraus(s, 30), FockVector::vacuum(30));
    EXPECT_NEAR(r.prob / std::pow(3.0, -18), 1.0, 1e-13);
    EXPECT_FALSE(r.zero);
    EXPECT_NEAR(std::abs(r.out[0]), 1.0, 1e-15);

    const auto r1 = apply(extended_kraus(s.with_k(1), 30), FockVector::vacuum(30));
    EXPECT_TRUE(r1.zero);
    EXPECT_EQ(r1.prob, 0.0);
    EXPECT_EQ(r1.out.norm2(), 0.0);
}

TEST(apply, coherent_matches_closed_form) {
    const AmplifierSpec s(3.0, 9, 0);
    const auto c = apply_to_coherent(extended_kraus(s, default_apply_cutoff(s, 0.5)), 3.0, 0.5);
    EXPECT_NEAR(c.branch.prob, success_prob_extended(s, 0.5), 1e-10);
    const auto o = oracle::kraus_on_coherent(3.0, 9, 0, 0.5);
    EXPECT_LE(rel(c.branch.prob, o.p), 1e-12);
    EXPECT_LE(rel(c.fidelity, o.F), 1e-12);
}

TEST(apply, cutoff_compatibility) {
    const auto kr = extended_kraus(AmplifierSpec(2.0, 3, 0), 10);
    EXPECT_THROW(apply(kr, FockVector::vacuum(11)), ConfigurationError);
    EXPECT_NO_THROW(apply(kr, FockVector::vacuum(4)));
}

TEST(success_prob_restricted, examples) {
    EXPECT_NEAR(success_prob_restricted(AmplifierSpec(3.0, 9, 0), 0.0) / std::pow(3.0, -18), 1.0, 1e-14);
    EXPECT_EQ(success_prob_restricted(AmplifierSpec(3.0, 9, 2), 0.0), 0.0);
    const double want =
        static_cast<double>(exp(oracle::Real(-1)) / oracle::pow_int(3, 18) * oracle::truncated_exp(9, 9));
    EXPECT_LE(rel(success_prob_restricted(AmplifierSpec(3.0, 9, 0), 1.0), want), 1e-13);
    for (std::size_t k : {0u, 1u, 2u}) {
        for (double a : {0.2, 0.8, 1.7}) {
            const auto o = oracle::kraus_on_coherent(3.0, 9, k, a, false);
            EXPECT_LE(rel(success_prob_restricted(AmplifierSpec(3.0, 9, k), a), o.p), 1e-12);
        }
    }
}

TEST(fidelity_restricted, examples) {
    const AmplifierSpec s(3.0, 9, 0);
    EXPECT_EQ(fidelity_restricted(s, 0.0), 1.0);
    EXPECT_NEAR(fidelity_restricted(s, 1.0), oracle::poisson_cdf(9.0, 9), 1e-14);
    EXPECT_NEAR(fidelity_restricted(s, 1.0), 0.5874, 1e-4);
    EXPECT_LT(fidelity_restricted(s, 3.0), 1e-20);
    // independent of k, and equal to the matrix overlap for the restricted operator
    for (std::size_t k : {1u, 2u}) {
        EXPECT_EQ(fidelity_restricted(s.with_k(k), 0.6), fidelity_restricted(s, 0.6));
        const auto o = oracle::kraus_on_coherent(3.0, 9, k, 0.6, false);
        EXPECT_LE(rel(fidelity_restricted(s, 0.6), o.F), 1e-12);
    }
}

TEST(fidelity_chernoff_bounds, examples) {
    const AmplifierSpec s(3.0, 9, 0);
    const auto b0 = fidelity_chernoff_bounds(s, 0.0);
    EXPECT_EQ(b0.side, BoundSide::lower);
    EXPECT_EQ(b0.bound, 1.0);
    const auto b1 = fidelity_chernoff_bounds(s, 0.8);
    EXPECT_EQ(b1.side, BoundSide::lower);
    EXPECT_LE(b1.bound, oracle::poisson_cdf(5.76, 9));
    EXPECT_LT(b1.bound, 0.8);
    const auto b2 = fidelity_chernoff_bounds(s, 2.0);
    EXPECT_EQ(b2.side, BoundSide::upper);
    EXPECT_GE(b2.bound, oracle::poisson_cdf(36.0, 9));
    const auto bN0 = fidelity_chernoff_bounds(AmplifierSpec(2.0, 0, 0), 1.0);
    EXPECT_EQ(bN0.side, BoundSide::upper);
    EXPECT_NEAR(bN0.bound, std::exp(-4.0), 1e-15);
}

TEST(success_prob_extended, examples) {
    for (std::size_t N : {0u, 2u, 9u}) {
        const double g = 3.0;
        EXPECT_NEAR(success_prob_extended(AmplifierSpec(g, N, 0), 0.0) / std::pow(g, -2.0 * N), 1.0, 1e-14);
    }
    for (std::size_t N : {2u, 9u}) {
        const double a = std::sqrt(4.0 * N);
        EXPECT_GT(success_prob_extended(AmplifierSpec(3.0, N, 0), a), 0.99);
    }
    const AmplifierSpec s(3.0, 9, 0);
    const auto c = apply_to_coherent(extended_kraus(s, default_apply_cutoff(s, 1.5)), 3.0, 1.5);
    EXPECT_NEAR(c.branch.prob, success_prob_extended(s, 1.5), 1e-10);
}

TEST(success_prob_extended, oracle_sweep) {
    for (double g : {kSqrt2, 3.0}) {
        for (std::size_t N : {2u, 4u, 9u}) {
            for (std::size_t k : {0u, 1u, 2u, 3u}) {
                for (double a : {0.0, 0.1, 0.7, 1.5, 3.0, 4.5}) {
                    const auto o = oracle::kraus_on_coherent(g, N, k, a);
                    const AmplifierSpec s(g, N, k);
                    EXPECT_LE(rel(success_prob_extended(s, a), o.p), 1e-12) << g << N << k << a;
                    if (o.p > 0) EXPECT_LE(rel(fidelity_extended(s, a), o.F), 1e-12) << g << N << k << a;
                }
            }
        }
    }
}

TEST(fidelity_extended, examples) {
    const AmplifierSpec s(3.0, 9, 0);
    EXPECT_NEAR(fidelity_extended(s, 0.0), 1.0, 1e-15);
    EXPECT_GT(fidelity_extended(s, 2.0 / 3.0), 0.95);
    EXPECT_LT(fidelity_extended(s, 4.0 / 3.0), 0.2);
}

TEST(fidelity_extended, finite_limit_at_origin_for_k_positive) {
    for (std::size_t k : {1u, 2u, 4u}) {
        const AmplifierSpec s(2.0, 3, k);
        const double f0 = fidelity_extended(s, 0.0);
        EXPECT_TRUE(std::isfinite(f0));
        EXPECT_NEAR(f0, 1.0, 1e-14);
        EXPECT_NEAR(fidelity_extended(s, 1e-4), f0, 1e-6);
    }
}

TEST(pfp_and_do_nothing, examples) {
    const AmplifierSpec s(3.0, 9, 0);
    const auto r0 = pfp_and_do_nothing(s, 0.0);
    EXPECT_NEAR(r0.pfp / std::pow(3.0, -18), 1.0, 1e-13);
    EXPECT_EQ(r0.nothing, 1.0);
    const AmplifierSpec s2(kSqrt2, 4, 0);
    const auto r1 = pfp_and_do_nothing(s2, 1.0);
    EXPECT_LE(r1.pfp, std::exp(-std::pow(kSqrt2 - 1, 2)));
    const auto o = oracle::kraus_on_coherent(kSqrt2, 4, 0, 1.0);
    EXPECT_LE(rel(r1.pfp, o.pfp), 1e-12);
    // far outside the disk the operator acts as the identity on the input
    const AmplifierSpec s3(1.2, 2, 0);
    const auto r2 = pfp_and_do_nothing(s3, 8.0);
    EXPECT_NEAR(r2.pfp / r2.nothing, 1.0, 1e-6);
    EXPECT_THROW(pfp_and_do_nothing(s.with_k(1), 1.0), ConfigurationError);
}

TEST(verify_monotonicity, figure_panels) {
    const auto r1 = verify_monotonicity(kSqrt2, 4, 2, grid(4.0, 80));
    EXPECT_TRUE(r1.ok()) << r1.violations.size();
    EXPECT_GT(r1.checks, 1000u);
    const auto r2 = verify_monotonicity(3.0, 9, 2, grid(4.5, 90));
    EXPECT_TRUE(r2.ok()) << r2.violations.size();
    EXPECT_GE(r2.min_q_entry, -1e-14);
    EXPECT_LE(r2.max_g_sum, 1e-14);
}

TEST(verify_monotonicity, q_difference_with_itself_is_zero) {
    const AmplifierSpec s(3.0, 9, 1);
    for (double d : diagonal_difference(s, s, 40)) EXPECT_EQ(d, 0.0);
}

TEST(verify_monotonicity, q_matches_closed_form) {
    // Q_k is diagonal with weight N!/(N+k)! g^{2(n-N)} (n+k)!/n! (1 - n/((N+k+1) g^2)) at n+k, n <= N.
    const double g = 2.0;
    const std::size_t N = 5, k = 1;
    const auto q = diagonal_difference(AmplifierSpec(g, N, k), AmplifierSpec(g, N, k + 1), 30);
    for (std::size_t n = 0; n <= N; ++n) {
        const oracle::Real w = oracle::factorial(N) / oracle::factorial(N + k) * oracle::pow_int(g, 2 * n) /
                               oracle::pow_int(g, 2 * N) * oracle::factorial(n + k) / oracle::factorial(n) *
                               (1 - oracle::Real(n) / ((N + k + 1) * g * g));
        EXPECT_NEAR(q[n + k], static_cast<double>(w), 1e-14);
    }
    for (std::size_t m = N + k + 1; m <= 30; ++m) EXPECT_NEAR(q[m], 0.0, 1e-15);
    for (std::size_t m = 0; m < k; ++m) EXPECT_EQ(q[m], 0.0);
}

TEST(verify_monotonicity, g_pair_regions) {
    const AmplifierSpec s(3.0, 9, 1);
    EXPECT_EQ(g_pair_sum(s, 2.0, 2, 7), 0.0);  // both inside the disk
    EXPECT_LE(g_pair_sum(s, 2.0, 5, 14), 0.0);
    EXPECT_LE(g_pair_sum(s, 3.0, 12, 20), 0.0);
    EXPECT_THROW(verify_monotonicity(3.0, 9, 0, grid(1.0, 4)), DomainError);
}

TEST(rotation_covariance, theta_zero_is_exact) {
    const auto rep = verify_rotation_covariance(extended_kraus(AmplifierSpec(2.0, 4, 2), 30), 1);
    EXPECT_EQ(rep.max_deviation, 0.0);
}

TEST(rotation_covariance, random_trials) {
    for (std::size_t k : {0u, 1u, 2u}) {
        const auto rep = verify_rotation_covariance(extended_kraus(AmplifierSpec(3.0, 9, k), 40), 25);
        EXPECT_TRUE(rep.ok()) << rep.max_deviation;
        EXPECT_EQ(rep.trials, 25u);
    }
}

TEST(rotation_covariance, matrix_oracle_k2) {
    // Dense-matrix check of R(t) U psi = e^{2it} U R(t) psi at t = 1.3.
    const auto kr = extended_kraus(AmplifierSpec(2.0, 3, 2), 12);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    std::vector<Complex> psi(13);
    for (auto& c : psi) c = Complex(n01(rng), n01(rng));
    const double t = 1.3;
    std::vector<std::vector<double>> U(13, std::vector<double>(13, 0.0));
    for (std::size_t n = 0; n + 2 <= 12; ++n) U[n][n + 2] = kr.element(n);
    double dev = 0;
    for (std::size_t n = 0; n <= 12; ++n) {
        Complex lhs{}, rhs{};
        for (std::size_t m = 0; m <= 12; ++m) {
            lhs += std::polar(1.0, n * t) * U[n][m] * psi[m];
            rhs += U[n][m] * std::polar(1.0, m * t) * psi[m];
        }
        dev += std::norm(lhs - std::polar(1.0, -2 * t) * rhs);
    }
    EXPECT_LE(std::sqrt(dev), 1e-12);
}

// ---- properties ----

TEST(kraus_properties, trace_decreasing) {
    for (double g : {kSqrt2, 2.0, 3.0}) {
        for (std::size_t N = 0; N <= 25; ++N) {
            for (std::size_t k = 0; k <= 4; ++k) {
                const auto kr = extended_kraus(AmplifierSpec(g, N, k), N + k + 40);
                for (std::size_t m = 0; m <= kr.cutoff(); ++m) {
                    EXPECT_GE(kr.gram_diagonal(m), 0.0);
                    EXPECT_LE(kr.gram_diagonal(m), 1.0 + 1e-12);
                }
            }
        }
    }
}

TEST(kraus_properties, single_strip) {
    const auto kr = extended_kraus(AmplifierSpec(2.0, 4, 3), 20);
    EXPECT_EQ(kr.offset(), 3u);
    EXPECT_EQ(kr.rows(), 18u);
    EXPECT_EQ(kr.element(18), 0.0);
}

TEST(kraus_properties, closed_form_matches_matrix) {
    for (auto [g, N] : std::vector<std::pair<double, std::size_t>>{{kSqrt2, 2}, {kSqrt2, 4}, {3.0, 9}}) {
        const double top = std::sqrt(static_cast<double>(N)) + 3.0;
        for (double a : grid(top, 50)) {
            for (std::size_t k = 0; k <= 2; ++k) {
                const AmplifierSpec s(g, N, k);
                const auto c = apply_to_coherent(extended_kraus(s, default_apply_cutoff(s, a)), g, a);
                const double p = success_prob_extended(s, a);
                EXPECT_NEAR(c.branch.prob, p, 1e-10 * std::max(p, 1e-300) + (p == 0 ? 1e-300 : 0));
                if (!c.branch.zero) EXPECT_NEAR(c.fidelity, fidelity_extended(s, a), 1e-10);
            }
        }
    }
}

TEST(kraus_properties, extension_and_do_nothing) {
    for (auto [g, N] : std::vector<std::pair<double, std::size_t>>{{kSqrt2, 2}, {kSqrt2, 4}, {3.0, 9}}) {
        const AmplifierSpec s(g, N, 0);
        for (double a : grid(2.0 * std::sqrt(static_cast<double>(N)), 80)) {
            EXPECT_GE(fidelity_extended(s, a), fidelity_restricted(s, a) * (1 - 1e-12));
            const auto r = pfp_and_do_nothing(s, a);
            EXPECT_LE(r.pfp, r.nothing * (1 + 1e-12));
            EXPECT_NO_THROW(fidelity_chernoff_bounds(s, a));
        }
    }
}

TEST(kraus_properties, large_amplitude_poisson_tail) {
    for (std::size_t k : {0u, 1u, 2u}) {
        const AmplifierSpec s(3.0, 4, k);
        for (double a2 : {30.0, 50.0, 80.0}) {
            const double a = std::sqrt(a2);
            EXPECT_NEAR(success_prob_extended(s, a), poisson_sf(4 + k + 1, a2), 1e-6);
        }
    }
}

TEST(kraus_properties, p0_ascends_on_plot_grids) {
    for (auto [g, N] : std::vector<std::pair<double, std::size_t>>{{kSqrt2, 2}, {kSqrt2, 4}, {3.0, 9}}) {
        double prev = 0;
        for (double a : grid(1.5 * std::sqrt(static_cast<double>(N)), 120)) {
            const double p = success_prob_extended(AmplifierSpec(g, N, 0), a);
            EXPECT_GE(p, prev * (1 - 1e-12));
            prev = p;
        }
    }
}
