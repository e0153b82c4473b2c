#include "immac/fock.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "immac/errors.hpp"
#include "immac/numeric.hpp"

namespace immac {

double log_sum_exp(std::span<const double> log_terms) {
    LogSumAccumulator acc;
    for (double l : log_terms) acc.add(l);
    return acc.log_value();
}

FockVector::FockVector(std::vector<Complex> amps) : amps_(std::move(amps)) {
    if (amps_.empty()) amps_.emplace_back(0.0, 0.0);
}

FockVector FockVector::number_state(std::size_t n, std::size_t cutoff) {
    if (n > cutoff) {
        throw TruncationError("number state |" + std::to_string(n) + "> above cutoff " +
                              std::to_string(cutoff));
    }
    FockVector v(cutoff);
    v[n] = 1.0;
    return v;
}

double FockVector::norm2() const {
    CompensatedSum s;
    for (const auto& c : amps_) s.add(std::norm(c));
    return s.value();
}

bool FockVector::is_normalized(double tol) const { return std::abs(norm2() - 1.0) <= tol; }

FockVector FockVector::normalized() const {
    const double n2 = norm2();
    if (!(n2 > 0.0)) throw DegenerateStateError("cannot normalize a zero-norm Fock vector");
    const double inv = 1.0 / std::sqrt(n2);
    FockVector out(*this);
    for (auto& c : out.amps_) c *= inv;
    return out;
}

FockVector FockVector::resized(std::size_t cutoff) const {
    std::vector<Complex> amps(cutoff + 1, Complex{});
    std::copy_n(amps_.begin(), std::min(amps_.size(), amps.size()), amps.begin());
    return FockVector(std::move(amps));
}

CoherentParams::CoherentParams(double abar, double phi) : abar_(abar), phi_(phi) {
    if (!(abar >= 0.0) || !std::isfinite(abar)) {
        throw DomainError("coherent amplitude must be finite and nonnegative");
    }
    if (!std::isfinite(phi)) throw DomainError("coherent phase must be finite");
    phi_ = std::fmod(phi, 2.0 * kPi);
    if (phi_ < 0.0) phi_ += 2.0 * kPi;
    if (phi_ >= 2.0 * kPi) phi_ = 0.0;
}

std::size_t default_cutoff(double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("Poisson mean must be nonnegative");
    return static_cast<std::size_t>(std::ceil(lambda + 12.0 * std::sqrt(lambda) + 25.0));
}

double log_poisson_pmf(const PoissonQuery& q) {
    if (!(q.mean >= 0.0)) throw DomainError("Poisson mean must be nonnegative");
    if (q.mean == 0.0) return q.n == 0 ? 0.0 : kNegInf;
    const double n = static_cast<double>(q.n);
    return -q.mean + n * std::log(q.mean) - log_factorial(q.n);
}

double poisson_cdf(std::size_t N, double lambda) {
    CompensatedSum s;
    for (std::size_t n = 0; n <= N; ++n) s.add(std::exp(log_poisson_pmf({lambda, n})));
    return std::min(1.0, s.value());
}

double poisson_sf(std::size_t n0, double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("Poisson mean must be nonnegative");
    CompensatedSum s;
    const double hard_stop = lambda + 40.0 * std::sqrt(lambda) + 200.0;
    for (std::size_t n = n0;; ++n) {
        const double term = std::exp(log_poisson_pmf({lambda, n}));
        s.add(term);
        const double nd = static_cast<double>(n);
        if (nd > lambda && term <= 1e-18 * s.value()) break;
        if (nd > hard_stop + static_cast<double>(n0)) break;
    }
    return s.value();
}

double truncated_exp(double x, std::size_t N) {
    if (!(x >= 0.0)) throw DomainError("truncated_exp requires x >= 0");
    CompensatedSum s;
    double term = 1.0;
    s.add(term);
    for (std::size_t n = 1; n <= N; ++n) {
        term *= x / static_cast<double>(n);
        s.add(term);
    }
    return s.value();
}

double log_truncated_exp(double x, std::size_t N) {
    if (!(x >= 0.0)) throw DomainError("log_truncated_exp requires x >= 0");
    if (x == 0.0) return 0.0;
    const double lx = std::log(x);
    LogSumAccumulator acc;
    for (std::size_t n = 0; n <= N; ++n) acc.add(static_cast<double>(n) * lx - log_factorial(n));
    return acc.log_value();
}

CoherentFock coherent_fock(const CoherentParams& p, std::size_t cutoff) {
    FockVector v(cutoff);
    const double abar = p.abar();
    if (abar == 0.0) {
        v[0] = 1.0;
        return {std::move(v), 0.0};
    }
    const double la = std::log(abar);
    const double half_lambda = 0.5 * abar * abar;
    for (std::size_t n = 0; n <= cutoff; ++n) {
        const double nd = static_cast<double>(n);
        const double mag = std::exp(-half_lambda + nd * la - 0.5 * log_factorial(n));
        v[n] = std::polar(mag, nd * p.phi());
    }
    return {std::move(v), poisson_sf(cutoff + 1, abar * abar)};
}

Complex overlap(const FockVector& u, const FockVector& v) {
    const std::size_t n = std::min(u.size(), v.size());
    CompensatedSum re;
    CompensatedSum im;
    for (std::size_t i = 0; i < n; ++i) {
        const Complex t = std::conj(u[i]) * v[i];
        re.add(t.real());
        im.add(t.imag());
    }
    return {re.value(), im.value()};
}

StateMoments state_moments(const FockVector& v) {
    const double n2 = v.norm2();
    if (!(n2 > 0.0)) throw DegenerateStateError("moments of a zero-norm state are undefined");
    CompensatedSum a_re, a_im, a2_re, a2_im, n1, nsq;
    const std::size_t D = v.cutoff();
    for (std::size_t n = 0; n <= D; ++n) {
        const double nd = static_cast<double>(n);
        const double p = std::norm(v[n]);
        n1.add(nd * p);
        nsq.add(nd * nd * p);
        if (n + 1 <= D) {
            const Complex t = std::conj(v[n]) * std::sqrt(nd + 1.0) * v[n + 1];
            a_re.add(t.real());
            a_im.add(t.imag());
        }
        if (n + 2 <= D) {
            const Complex t = std::conj(v[n]) * std::sqrt((nd + 1.0) * (nd + 2.0)) * v[n + 2];
            a2_re.add(t.real());
            a2_im.add(t.imag());
        }
    }
    return {Complex{a_re.value(), a_im.value()} / n2, Complex{a2_re.value(), a2_im.value()} / n2,
            n1.value() / n2, nsq.value() / n2, n2};
}

FockVector circle_projection_check(double abar, int n, std::size_t K, std::size_t cutoff) {
    const std::size_t abs_n = static_cast<std::size_t>(std::abs(n));
    if (K < 4 * (cutoff + abs_n) || K == 0) {
        throw AliasingError("circle quadrature needs K >= 4 (cutoff + |n|); got K = " +
                            std::to_string(K));
    }
    std::vector<CompensatedSum> re(cutoff + 1), im(cutoff + 1);
    const double inv_k = 1.0 / static_cast<double>(K);
    for (std::size_t j = 0; j < K; ++j) {
        const double phi = 2.0 * kPi * static_cast<double>(j) * inv_k;
        const auto coh = coherent_fock(CoherentParams(abar, phi), cutoff);
        const Complex weight = std::polar(inv_k, -static_cast<double>(n) * phi);
        for (std::size_t m = 0; m <= cutoff; ++m) {
            const Complex t = weight * coh.state[m];
            re[m].add(t.real());
            im[m].add(t.imag());
        }
    }
    FockVector out(cutoff);
    for (std::size_t m = 0; m <= cutoff; ++m) out[m] = {re[m].value(), im[m].value()};
    return out;
}

FockVector circle_projection_check(double abar, int n, std::size_t cutoff) {
    const std::size_t abs_n = static_cast<std::size_t>(std::abs(n));
    return circle_projection_check(abar, n, 8 * (cutoff + abs_n + 1), cutoff);
}

}  // namespace immac
