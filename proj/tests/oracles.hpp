#pragma once

// Independent reference implementations in 50-digit arithmetic. They use
// plain forward recurrences and direct sums, deliberately unlike the log-space
// code in the library.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cstddef>
#include <vector>

namespace oracle {

using Real = boost::multiprecision::cpp_bin_float_50;

inline Real factorial(std::size_t n) {
    Real f = 1;
    for (std::size_t j = 2; j <= n; ++j) f *= j;
    return f;
}

inline Real pow_int(Real x, std::size_t n) {
    Real r = 1;
    for (std::size_t j = 0; j < n; ++j) r *= x;
    return r;
}

inline double poisson_pmf(double lambda, std::size_t n) {
    const Real l = lambda;
    return static_cast<double>(exp(-l) * pow_int(l, n) / factorial(n));
}

/// sum_{n=0}^N x^n/n!
inline Real truncated_exp(Real x, std::size_t N) {
    Real term = 1, sum = 1;
    for (std::size_t n = 1; n <= N; ++n) {
        term *= x / n;
        sum += term;
    }
    return sum;
}

inline double poisson_cdf(double lambda, std::size_t N) {
    const Real l = lambda;
    return static_cast<double>(exp(-l) * truncated_exp(l, N));
}

/// Pr[n >= n0], summed until terms are negligible at 50 digits.
inline double poisson_sf(double lambda, std::size_t n0) {
    const Real l = lambda;
    Real term = exp(-l) * pow_int(l, n0) / factorial(n0);
    Real sum = 0;
    for (std::size_t n = n0; n < n0 + 4000; ++n) {
        sum += term;
        term *= l / (n + 1);
        if (n > lambda && term < sum * Real("1e-40")) break;
    }
    return static_cast<double>(sum);
}

/// q_r = M e^{-l} sum_k l^{kM+r}/(kM+r)!.
inline double q_r(double abar, std::size_t M, std::size_t r) {
    const Real l = Real(abar) * abar;
    Real term = 1, sum = 0;  // term = l^n / n!
    for (std::size_t n = 0; n < 4000; ++n) {
        if (n > 0) term *= l / n;
        if (n % M == r) sum += term;
        if (n > 2 * abar * abar + 50 && term < Real("1e-60")) break;
    }
    return static_cast<double>(M * exp(-l) * sum);
}

inline double usd_success(double abar, std::size_t M) {
    double best = 2.0;
    for (std::size_t r = 0; r < M; ++r) best = std::min(best, q_r(abar, M, r));
    return best;
}

inline double theta3(double z, double q) {
    Real s = 1;
    for (int j = 1; j < 200; ++j) {
        s += 2 * pow(Real(q), j * j) * cos(Real(2 * j) * z);
    }
    return static_cast<double>(s);
}

/// Element <n|Upsilon_k|n+k> (extended) or P_N K_k (restricted) in high precision.
inline Real kraus_element(Real g, std::size_t N, std::size_t k, std::size_t n, bool extended) {
    if (n > N) return extended ? Real(1) : Real(0);
    return sqrt(factorial(N) / factorial(N + k)) * pow_int(g, n) / pow_int(g, N) *
           sqrt(factorial(n + k) / factorial(n));
}

struct KrausOnCoherent {
    double p;
    double F;
    double pfp;
};

/// Direct matrix application of Upsilon_k to |abar> and overlap with |g abar>.
inline KrausOnCoherent kraus_on_coherent(double gain, std::size_t N, std::size_t k, double abar,
                                         bool extended = true) {
    const Real g = gain, a = abar;
    const std::size_t D = static_cast<std::size_t>(gain * gain * abar * abar + 20 * gain * abar + 80) + N + k;
    // coherent amplitudes by recurrence c_n = c_{n-1} a / sqrt(n)
    std::vector<Real> cin(D + k + 1), cout(D + 1);
    cin[0] = exp(-a * a / 2);
    for (std::size_t n = 1; n < cin.size(); ++n) cin[n] = cin[n - 1] * a / sqrt(Real(n));
    cout[0] = exp(-g * g * a * a / 2);
    for (std::size_t n = 1; n <= D; ++n) cout[n] = cout[n - 1] * g * a / sqrt(Real(n));
    Real p = 0, amp = 0;
    for (std::size_t n = 0; n <= D; ++n) {
        const Real o = kraus_element(g, N, k, n, extended) * cin[n + k];
        p += o * o;
        amp += cout[n] * o;
    }
    KrausOnCoherent r;
    r.p = static_cast<double>(p);
    r.F = p > 0 ? static_cast<double>(amp * amp / p) : 0.0;
    r.pfp = static_cast<double>(amp * amp);
    return r;
}

}  // namespace oracle
