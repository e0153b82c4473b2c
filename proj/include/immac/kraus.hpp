#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "immac/fock.hpp"

namespace immac {

/// Phase-insensitive approximate immaculate amplifier: gain g > 1, output
/// high-fidelity disk of N photons, strip offset k.
class AmplifierSpec {
public:
    AmplifierSpec(double gain, std::size_t N, std::size_t k = 0);

    double gain() const { return gain_; }
    std::size_t N() const { return N_; }
    std::size_t k() const { return k_; }
    AmplifierSpec with_k(std::size_t k) const { return AmplifierSpec(gain_, N_, k); }

private:
    double gain_;
    std::size_t N_;
    std::size_t k_;
};

/// Single-strip operator sum_n e(n) |n><n+k| with e(n) = f(n) sqrt((n+k)!/n!).
/// Stored as the element profile over n = 0..cutoff-k, never as a matrix.
class StripKraus {
public:
    std::size_t offset() const { return k_; }
    /// Largest input number state the operator acts on.
    std::size_t cutoff() const { return cutoff_; }
    std::size_t rows() const { return elements_.size(); }

    /// <n|K|n+k>; zero for n > cutoff - k.
    double element(std::size_t n) const { return n < elements_.size() ? elements_[n] : 0.0; }
    /// f(n); zero where the operator vanishes.
    double profile(std::size_t n) const;
    /// (K^dagger K)_{mm} = element(m-k)^2.
    double gram_diagonal(std::size_t m) const;

private:
    friend StripKraus make_strip(std::size_t, std::size_t, std::vector<double>);
    std::size_t k_ = 0;
    std::size_t cutoff_ = 0;
    std::vector<double> elements_;
};

/// P_N K_k: zero above n = N. Throws TruncationError if cutoff < N + k.
StripKraus restricted_kraus(const AmplifierSpec& spec, std::size_t cutoff);
/// Upsilon_k: P_N K_k plus sum_{n>N} |n><n+k|.
StripKraus extended_kraus(const AmplifierSpec& spec, std::size_t cutoff);

/// Cutoff keeping both the input and the amplified-target Poisson tails
/// below 1e-12, and at least N + k.
std::size_t default_apply_cutoff(const AmplifierSpec& spec, double abar);

struct BranchResult {
    FockVector out;  // normalized, or all zeros when zero is set
    double prob = 0.0;
    bool zero = false;
};

/// Throws ConfigurationError when the input cutoff exceeds the operator's.
BranchResult apply(const StripKraus& kr, const FockVector& input);

/// Matrix-level evaluation on |abar>: apply() followed by |<g abar|out>|^2.
struct CoherentBranch {
    BranchResult branch;
    double fidelity = 0.0;
};
CoherentBranch apply_to_coherent(const StripKraus& kr, double gain, double abar);

double success_prob_restricted(const AmplifierSpec& spec, double abar);
/// Pr[n <= N | g^2 abar^2], independent of k.
double fidelity_restricted(const AmplifierSpec& spec, double abar);

enum class BoundSide { lower, upper };

struct ChernoffFidelity {
    double bound;
    BoundSide side;
    double fidelity;
};

/// Lower bound for g^2 abar^2 <= N, upper bound above; throws std::logic_error
/// if the bound fails to sandwich the exact fidelity.
ChernoffFidelity fidelity_chernoff_bounds(const AmplifierSpec& spec, double abar);

double success_prob_extended(const AmplifierSpec& spec, double abar);
/// Finite at abar = 0 for every k: the abar^{2k} factors cancel analytically.
double fidelity_extended(const AmplifierSpec& spec, double abar);

struct PfpResult {
    double pfp;
    double nothing;  // e^{-(g-1)^2 abar^2}
};

/// Requires k = 0. Throws std::logic_error if pfp exceeds the do-nothing value.
PfpResult pfp_and_do_nothing(const AmplifierSpec& spec, double abar);

/// Diagonal of Upsilon_k^dagger Upsilon_k - Upsilon_{k2}^dagger Upsilon_{k2} on m = 0..cutoff.
std::vector<double> diagonal_difference(const AmplifierSpec& a, const AmplifierSpec& b,
                                        std::size_t cutoff);

/// G(m,n) + G(n,m) for the Upsilon_k profile at Poisson mean abar^2.
double g_pair_sum(const AmplifierSpec& spec, double abar, std::size_t m, std::size_t n);

struct Violation {
    std::string check;
    std::size_t k = 0;
    double abar = 0.0;
    std::size_t n = 0;
    std::size_t m = 0;
    double value = 0.0;
};

struct MonotonicityReport {
    std::vector<Violation> violations;
    std::size_t checks = 0;
    double min_q_entry = 0.0;
    double max_g_sum = 0.0;
    double max_fidelity_gap = 0.0;  // max over the grid of F_0 - F_1
    bool ok() const { return violations.empty(); }
};

/// Certificate for k = 0..k_max on the abar grid: p_k and F_k
/// nonincreasing in k, Q_k >= -1e-14, sampled G pair sums <= 1e-14,
/// F_0 >= restricted fidelity, and the unimodal f_k profile.
MonotonicityReport verify_monotonicity(double gain, std::size_t N, std::size_t k_max,
                                       std::span<const double> abar_grid,
                                       std::uint64_t seed = 0x5eed1234ULL);

struct CovarianceReport {
    std::size_t trials = 0;
    double max_deviation = 0.0;
    bool ok() const { return max_deviation <= 1e-12; }
};

/// Random states and angles: ||R(t) K psi - e^{-ikt} K R(t) psi||, R(t) = e^{i t a^dagger a}.
CovarianceReport verify_rotation_covariance(const StripKraus& kr, std::size_t trials,
                                            std::uint64_t seed = 0x5eed1234ULL);

}  // namespace immac
