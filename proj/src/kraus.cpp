#include "immac/kraus.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "immac/errors.hpp"
#include "immac/numeric.hpp"
#include "immac/parallel.hpp"

namespace immac {

AmplifierSpec::AmplifierSpec(double gain, std::size_t N, std::size_t k) : gain_(gain), N_(N), k_(k) {
    if (!(gain > 1.0) || !std::isfinite(gain)) throw DomainError("amplifier gain must exceed 1");
}

StripKraus make_strip(std::size_t k, std::size_t cutoff, std::vector<double> elements) {
    StripKraus s;
    s.k_ = k;
    s.cutoff_ = cutoff;
    s.elements_ = std::move(elements);
    return s;
}

double StripKraus::profile(std::size_t n) const {
    const double e = element(n);
    if (e == 0.0) return 0.0;
    return std::exp(std::log(e) - 0.5 * (log_factorial(n + k_) - log_factorial(n)));
}

double StripKraus::gram_diagonal(std::size_t m) const {
    if (m < k_) return 0.0;
    const double e = element(m - k_);
    return e * e;
}

namespace {

void check_abar(double abar) {
    if (!(abar >= 0.0) || !std::isfinite(abar)) throw DomainError("abar must be finite and >= 0");
}

// Elements of P_N K_k for n = 0..min(N, rows-1). The ratio
// (n+k)! N! / (n! (N+k)!) = prod_{j=n+1}^{N} j/(j+k) is accumulated downward
// from n = N, where the element is exactly one.
std::vector<double> disk_elements(const AmplifierSpec& spec, std::size_t rows) {
    std::vector<double> e(rows, 0.0);
    const std::size_t N = spec.N(), k = spec.k();
    const double lg = std::log(spec.gain());
    double log_ratio = 0.0;
    for (std::size_t n = N + 1; n-- > 0;) {
        if (n < N) {
            log_ratio += std::log(static_cast<double>(n + 1) / static_cast<double>(n + 1 + k));
        }
        if (n < rows) {
            e[n] = n == N ? 1.0
                          : std::exp(-static_cast<double>(N - n) * lg + 0.5 * log_ratio);
        }
    }
    return e;
}

StripKraus build(const AmplifierSpec& spec, std::size_t cutoff, bool extend) {
    if (cutoff < spec.N() + spec.k()) {
        throw TruncationError("operator cutoff must be at least N + k");
    }
    const std::size_t rows = cutoff - spec.k() + 1;
    auto e = disk_elements(spec, rows);
    if (extend) {
        for (std::size_t n = spec.N() + 1; n < rows; ++n) e[n] = 1.0;
    }
    return make_strip(spec.k(), cutoff, std::move(e));
}

// sum_{n>N} exp(n * log_x - w(n)) in log space, stopping once past the peak
// and the terms have dropped below 1e-18 of the partial sum.
template <class Weight>
double log_tail(std::size_t N, double log_x, double peak, Weight w) {
    LogSumAccumulator acc;
    if (log_x == kNegInf) return kNegInf;
    const double log_tol = std::log(1e-18);
    const std::size_t hard_stop =
        N + 1 + static_cast<std::size_t>(peak + 40.0 * std::sqrt(std::max(peak, 1.0)) + 200.0);
    for (std::size_t n = N + 1; n < hard_stop; ++n) {
        const double t = static_cast<double>(n) * log_x - w(n);
        acc.add(t);
        if (static_cast<double>(n) > peak && t <= acc.log_value() + log_tol) break;
    }
    return acc.log_value();
}

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

struct Series {
    double log_sp;  // log S_p
    double log_sa;  // log S_A
};

// p_k = e^{-l} l^k S_p,  <g a|U_k|a> = e^{-(g^2+1) l/2} abar^k S_A,  l = abar^2.
Series series(const AmplifierSpec& spec, double abar) {
    const std::size_t N = spec.N(), k = spec.k();
    const double g = spec.gain(), lg = std::log(g);
    const double lambda = abar * abar;
    const double Nd = static_cast<double>(N);
    const double log_ratio = log_factorial(N) - log_factorial(N + k);
    const double log_eN = log_truncated_exp(g * g * lambda, N);
    const double log_lambda = lambda > 0.0 ? std::log(lambda) : kNegInf;

    const double head_p = log_ratio - 2.0 * Nd * lg + log_eN;
    const double tail_p = log_tail(N, log_lambda, lambda,
                                   [k](std::size_t n) { return log_factorial(n + k); });
    const double head_a = 0.5 * log_ratio - Nd * lg + log_eN;
    const double tail_a = log_tail(N, log_lambda + lg, g * lambda, [k](std::size_t n) {
        return 0.5 * (log_factorial(n) + log_factorial(n + k));
    });
    return {log_add(head_p, tail_p), log_add(head_a, tail_a)};
}

}  // namespace

StripKraus restricted_kraus(const AmplifierSpec& spec, std::size_t cutoff) {
    return build(spec, cutoff, false);
}

StripKraus extended_kraus(const AmplifierSpec& spec, std::size_t cutoff) {
    return build(spec, cutoff, true);
}

std::size_t default_apply_cutoff(const AmplifierSpec& spec, double abar) {
    check_abar(abar);
    const double g = spec.gain();
    const double m = std::max(g * g * abar * abar, abar * abar);
    const auto rule = static_cast<std::size_t>(std::ceil(m + 12.0 * std::sqrt(m) + 25.0)) + spec.k();
    return std::max(rule, spec.N() + spec.k());
}

BranchResult apply(const StripKraus& kr, const FockVector& input) {
    if (input.cutoff() > kr.cutoff()) {
        throw ConfigurationError("input cutoff exceeds the operator cutoff");
    }
    FockVector out(kr.cutoff());
    CompensatedSum norm;
    const std::size_t k = kr.offset();
    for (std::size_t n = 0; n < kr.rows(); ++n) {
        out[n] = kr.element(n) * input.at_or_zero(n + k);
        norm.add(std::norm(out[n]));
    }
    BranchResult r;
    r.prob = norm.value();
    if (r.prob == 0.0) {
        r.zero = true;
        r.out = FockVector(kr.cutoff());
        return r;
    }
    const double s = 1.0 / std::sqrt(r.prob);
    for (std::size_t n = 0; n < kr.rows(); ++n) out[n] *= s;
    r.out = std::move(out);
    return r;
}

CoherentBranch apply_to_coherent(const StripKraus& kr, double gain, double abar) {
    check_abar(abar);
    const auto in = coherent_fock(CoherentParams(abar, 0.0), kr.cutoff()).state;
    CoherentBranch c;
    c.branch = apply(kr, in);
    if (!c.branch.zero) {
        const auto target = coherent_fock(CoherentParams(gain * abar, 0.0), kr.cutoff()).state;
        c.fidelity = std::norm(overlap(target, c.branch.out));
    }
    return c;
}

double success_prob_restricted(const AmplifierSpec& spec, double abar) {
    check_abar(abar);
    const std::size_t N = spec.N(), k = spec.k();
    const double lambda = abar * abar, g = spec.gain();
    const double lp = log_factorial(N) - log_factorial(N + k) - lambda +
                      power_log(lambda, static_cast<double>(k)) -
                      2.0 * static_cast<double>(N) * std::log(g) +
                      log_truncated_exp(g * g * lambda, N);
    return std::exp(lp);
}

double fidelity_restricted(const AmplifierSpec& spec, double abar) {
    check_abar(abar);
    const double g = spec.gain();
    return poisson_cdf(spec.N(), g * g * abar * abar);
}

ChernoffFidelity fidelity_chernoff_bounds(const AmplifierSpec& spec, double abar) {
    check_abar(abar);
    const double g = spec.gain();
    const double x = g * g * abar * abar;
    const double Nd = static_cast<double>(spec.N());
    ChernoffFidelity r{};
    r.fidelity = fidelity_restricted(spec, abar);
    if (x <= Nd) {
        r.side = BoundSide::lower;
        const double n1 = Nd + 1.0;
        r.bound = x == 0.0 ? 1.0 : 1.0 - std::exp(-x + n1 * (1.0 + std::log(x) - std::log(n1)));
        if (r.bound > r.fidelity + 1e-12) throw std::logic_error("Chernoff lower bound exceeds fidelity");
    } else {
        r.side = BoundSide::upper;
        // N = 0 is the limit (e x / N)^N -> 1, leaving e^{-x}.
        const double lb = spec.N() == 0 ? -x : Nd * (1.0 + std::log(x) - std::log(Nd)) - x;
        r.bound = std::exp(lb);
        if (r.bound < r.fidelity * (1.0 - 1e-12)) throw std::logic_error("Chernoff upper bound below fidelity");
    }
    return r;
}

double success_prob_extended(const AmplifierSpec& spec, double abar) {
    check_abar(abar);
    // Only |0> -> |0> survives at the origin; skip the exp(log) round trip.
    if (abar == 0.0) return spec.k() == 0 ? std::pow(spec.gain(), -2.0 * static_cast<double>(spec.N())) : 0.0;
    const double lambda = abar * abar;
    const Series s = series(spec, abar);
    return std::exp(-lambda + power_log(lambda, static_cast<double>(spec.k())) + s.log_sp);
}

double fidelity_extended(const AmplifierSpec& spec, double abar) {
    check_abar(abar);
    const double g = spec.gain();
    const Series s = series(spec, abar);
    return std::exp(-g * g * abar * abar + 2.0 * s.log_sa - s.log_sp);
}

PfpResult pfp_and_do_nothing(const AmplifierSpec& spec, double abar) {
    check_abar(abar);
    if (spec.k() != 0) throw ConfigurationError("probability-fidelity product is defined for k = 0");
    const double g = spec.gain(), lambda = abar * abar;
    const Series s = series(spec, abar);
    PfpResult r{};
    r.pfp = std::exp(-(g * g + 1.0) * lambda + 2.0 * s.log_sa);
    r.nothing = std::exp(-(g - 1.0) * (g - 1.0) * lambda);
    if (r.pfp > r.nothing * (1.0 + 1e-12)) {
        throw std::logic_error("probability-fidelity product exceeded the do-nothing value");
    }
    return r;
}

std::vector<double> diagonal_difference(const AmplifierSpec& a, const AmplifierSpec& b,
                                        std::size_t cutoff) {
    const auto ka = extended_kraus(a, cutoff);
    const auto kb = extended_kraus(b, cutoff);
    std::vector<double> d(cutoff + 1);
    for (std::size_t m = 0; m <= cutoff; ++m) d[m] = ka.gram_diagonal(m) - kb.gram_diagonal(m);
    return d;
}

namespace {

double log_profile(const AmplifierSpec& spec, std::size_t n) {
    const std::size_t N = spec.N(), k = spec.k();
    if (n <= N) {
        return 0.5 * (log_factorial(N) - log_factorial(N + k)) -
               static_cast<double>(N - n) * std::log(spec.gain());
    }
    return 0.5 * (log_factorial(n) - log_factorial(n + k));
}

double h2(const AmplifierSpec& spec, std::size_t n) {
    const std::size_t top = std::max(n, spec.N());
    return 1.0 / static_cast<double>(top + spec.k() + 1);
}

}  // namespace

double g_pair_sum(const AmplifierSpec& spec, double abar, std::size_t m, std::size_t n) {
    check_abar(abar);
    const double dh = h2(spec, m) - h2(spec, n);
    if (dh == 0.0) return 0.0;
    const double lambda = abar * abar;
    const double lg = std::log(spec.gain());
    const double lfm = log_profile(spec, m), lfn = log_profile(spec, n);
    // g^m f(n) - g^n f(m) = e^b expm1(a - b)
    const double a = static_cast<double>(m) * lg + lfn;
    const double b = static_cast<double>(n) * lg + lfm;
    const double bracket_log = b + std::log(std::abs(std::expm1(a - b)));
    const double bracket_sign = a >= b ? 1.0 : -1.0;
    if (a == b) return 0.0;
    const double log_pm = log_poisson_pmf({lambda, m});
    const double log_pn = log_poisson_pmf({lambda, n});
    const double lmag = log_pm + log_pn + lfm + lfn + bracket_log + std::log(std::abs(dh));
    return bracket_sign * (dh > 0.0 ? 1.0 : -1.0) * std::exp(lmag);
}

MonotonicityReport verify_monotonicity(double gain, std::size_t N, std::size_t k_max,
                                       std::span<const double> abar_grid, std::uint64_t seed) {
    if (k_max < 1) throw DomainError("monotonicity needs at least two k values");
    if (abar_grid.empty()) throw DomainError("abar grid is empty");
    MonotonicityReport rep;
    rep.min_q_entry = std::numeric_limits<double>::infinity();
    rep.max_g_sum = -std::numeric_limits<double>::infinity();
    auto flag = [&](const char* what, std::size_t k, double abar, std::size_t n, std::size_t m,
                    double v) { rep.violations.push_back({what, k, abar, n, m, v}); };

    // G pairs: every m < n <= N + 15, then 200 random pairs reaching well past N.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t n = 1; n <= N + 15; ++n) {
        for (std::size_t m = 0; m < n; ++m) pairs.emplace_back(m, n);
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_m(0, N + 200), pick_n(N + 16, N + 400);
    for (int i = 0; i < 200; ++i) {
        std::size_t m = pick_m(rng), n = pick_n(rng);
        if (m == n) ++n;
        if (m > n) std::swap(m, n);
        pairs.emplace_back(m, n);
    }

    const std::size_t q_cut = N + k_max + 16;
    for (std::size_t k = 0; k <= k_max; ++k) {
        const AmplifierSpec sk(gain, N, k);
        if (k < k_max) {
            const auto q = diagonal_difference(sk, sk.with_k(k + 1), q_cut);
            for (std::size_t m = 0; m < q.size(); ++m) {
                ++rep.checks;
                rep.min_q_entry = std::min(rep.min_q_entry, q[m]);
                if (q[m] < -1e-14) flag("Q_k", k, 0.0, m, m, q[m]);
            }
        }
        // f_k rises to its maximum at n = N, then never rises again.
        double prev = kNegInf;
        for (std::size_t n = 0; n <= N + 40; ++n) {
            const double lf = log_profile(sk, n);
            const bool bad = n <= N ? lf < prev - 1e-13 : lf > prev + 1e-13;
            ++rep.checks;
            if (bad) flag("profile", k, 0.0, n, n, lf - prev);
            prev = lf;
        }
    }

    struct PointResult {
        std::vector<Violation> v;
        std::size_t checks = 0;
        double max_g = -std::numeric_limits<double>::infinity();
        double gap = 0.0;
    };
    const auto results = parallel_map(abar_grid.size(), [&](std::size_t i) {
        PointResult r;
        const double abar = abar_grid[i];
        std::vector<double> p(k_max + 1), F(k_max + 1);
        for (std::size_t k = 0; k <= k_max; ++k) {
            const AmplifierSpec sk(gain, N, k);
            p[k] = success_prob_extended(sk, abar);
            F[k] = fidelity_extended(sk, abar);
        }
        for (std::size_t k = 0; k < k_max; ++k) {
            r.checks += 2;
            if (p[k + 1] > p[k] * (1.0 + 1e-12)) r.v.push_back({"p_k", k, abar, 0, 0, p[k + 1] - p[k]});
            if (F[k + 1] > F[k] * (1.0 + 1e-12)) r.v.push_back({"F_k", k, abar, 0, 0, F[k + 1] - F[k]});
        }
        r.gap = F[0] - F[1];
        const double fr = fidelity_restricted(AmplifierSpec(gain, N, 0), abar);
        ++r.checks;
        if (F[0] < fr * (1.0 - 1e-12)) r.v.push_back({"F_0>=restricted", 0, abar, 0, 0, F[0] - fr});
        for (std::size_t k = 0; k < k_max; ++k) {
            const AmplifierSpec sk(gain, N, k);
            for (const auto& [m, n] : pairs) {
                const double gs = g_pair_sum(sk, abar, m, n);
                ++r.checks;
                r.max_g = std::max(r.max_g, gs);
                if (gs > 1e-14) r.v.push_back({"G_sum", k, abar, n, m, gs});
            }
        }
        return r;
    });
    for (const auto& r : results) {
        rep.violations.insert(rep.violations.end(), r.v.begin(), r.v.end());
        rep.checks += r.checks;
        rep.max_g_sum = std::max(rep.max_g_sum, r.max_g);
        rep.max_fidelity_gap = std::max(rep.max_fidelity_gap, r.gap);
    }
    return rep;
}

CovarianceReport verify_rotation_covariance(const StripKraus& kr, std::size_t trials,
                                            std::uint64_t seed) {
    if (trials < 1) throw DomainError("need at least one trial");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    const std::size_t D = kr.cutoff();
    const double k = static_cast<double>(kr.offset());

    CovarianceReport rep;
    rep.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        const double theta = t == 0 ? 0.0 : angle(rng);
        FockVector psi(D);
        for (std::size_t n = 0; n <= D; ++n) psi[n] = Complex(gauss(rng), gauss(rng));
        psi = psi.normalized();
        FockVector rotated(D);
        for (std::size_t n = 0; n <= D; ++n) {
            rotated[n] = std::polar(1.0, static_cast<double>(n) * theta) * psi[n];
        }
        FockVector a(D), b(D);
        const Complex comp = std::polar(1.0, -k * theta);
        for (std::size_t n = 0; n < kr.rows(); ++n) {
            a[n] = std::polar(1.0, static_cast<double>(n) * theta) * kr.element(n) * psi[n + kr.offset()];
            b[n] = comp * kr.element(n) * rotated[n + kr.offset()];
        }
        double dev = 0.0;
        for (std::size_t n = 0; n <= D; ++n) dev += std::norm(a[n] - b[n]);
        rep.max_deviation = std::max(rep.max_deviation, std::sqrt(dev));
    }
    return rep;
}

}  // namespace immac
