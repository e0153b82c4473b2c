#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace immac {

using Complex = std::complex<double>;

/// Complex amplitudes c_0..c_D over number states with an explicit cutoff D.
class FockVector {
public:
    FockVector() : amps_(1, Complex{0.0, 0.0}) {}
    explicit FockVector(std::size_t cutoff) : amps_(cutoff + 1, Complex{0.0, 0.0}) {}
    explicit FockVector(std::vector<Complex> amps);

    static FockVector number_state(std::size_t n, std::size_t cutoff);
    static FockVector vacuum(std::size_t cutoff) { return number_state(0, cutoff); }

    std::size_t cutoff() const { return amps_.size() - 1; }
    std::size_t size() const { return amps_.size(); }

    const Complex& operator[](std::size_t n) const { return amps_[n]; }
    Complex& operator[](std::size_t n) { return amps_[n]; }
    /// Amplitude with zero padding above the cutoff.
    Complex at_or_zero(std::size_t n) const { return n < amps_.size() ? amps_[n] : Complex{}; }

    std::span<const Complex> amplitudes() const { return amps_; }

    double norm2() const;
    bool is_normalized(double tol = 1e-12) const;
    /// Throws DegenerateStateError on a zero vector.
    FockVector normalized() const;
    FockVector resized(std::size_t cutoff) const;

private:
    std::vector<Complex> amps_;
};

/// Coherent amplitude abar * exp(i phi), abar >= 0, phi wrapped into [0, 2pi).
class CoherentParams {
public:
    CoherentParams(double abar, double phi);

    double abar() const { return abar_; }
    double phi() const { return phi_; }
    Complex alpha() const { return std::polar(abar_, phi_); }

private:
    double abar_;
    double phi_;
};

struct PoissonQuery {
    double mean;
    std::size_t n;
};

struct CoherentFock {
    FockVector state;
    double truncation_weight;  // Poisson mass above the cutoff
};

struct StateMoments {
    Complex mean_a;
    Complex mean_a2;
    double mean_n;
    double mean_n2;
    double norm2;  // squared norm of the state as given
};

/// ceil(lambda + 12 sqrt(lambda) + 25); keeps Poisson tails far below 1e-12.
std::size_t default_cutoff(double lambda);

CoherentFock coherent_fock(const CoherentParams& p, std::size_t cutoff);

double log_poisson_pmf(const PoissonQuery& q);
/// Pr[n <= N | lambda].
double poisson_cdf(std::size_t N, double lambda);
/// Pr[n >= n0 | lambda], summed directly from n0 upward.
double poisson_sf(std::size_t n0, double lambda);

/// e_N(x) = sum_{n=0}^N x^n / n!.
double truncated_exp(double x, std::size_t N);
/// log e_N(x), safe where e_N itself overflows.
double log_truncated_exp(double x, std::size_t N);

/// sum conj(u_n) v_n, shorter vector zero-padded.
Complex overlap(const FockVector& u, const FockVector& v);

/// Moments of the normalized state. Throws DegenerateStateError on zero norm.
StateMoments state_moments(const FockVector& v);

/// K-point trapezoid of  int dphi/2pi e^{-i n phi} |abar e^{i phi}>  truncated at cutoff.
FockVector circle_projection_check(double abar, int n, std::size_t K, std::size_t cutoff);
/// Same with K = 8 (cutoff + |n| + 1).
FockVector circle_projection_check(double abar, int n, std::size_t cutoff);

}  // namespace immac
