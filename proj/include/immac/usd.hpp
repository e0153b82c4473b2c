#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "immac/fock.hpp"

namespace immac {

/// M coherent states |abar e^{i phi_j}>, phi_j = 2 pi j / M.
class SymmetricEnsemble {
public:
    SymmetricEnsemble(double abar, std::size_t M);

    double abar() const { return abar_; }
    std::size_t size() const { return M_; }
    double phase(std::size_t j) const;
    Complex alpha(std::size_t j) const { return std::polar(abar_, phase(j)); }

private:
    double abar_;
    std::size_t M_;
};

/// q_r = M c_r^2 for r = 0..M-1; the USD success probability is min_r q_r.
struct UsdSpectrum {
    std::vector<double> q;
    std::size_t argmin_r = 0;
    double success = 0.0;
    double log_success = 0.0;  // log(success), finite even when success underflows
};

double q_r_exact(const SymmetricEnsemble& e, std::size_t r);
double log_q_r_exact(const SymmetricEnsemble& e, std::size_t r);

/// Optimal USD success probability, ties broken toward the smallest r.
UsdSpectrum usd_success(const SymmetricEnsemble& e);

/// Leading (k = 0) term of q_{M-1}: M e^{-abar^2} abar^{2(M-1)} / (M-1)!.
double usd_success_dense(const SymmetricEnsemble& e);

/// sum_{k>=1} abar^{2(kM+M-1)} / (kM+M-1)!, the part dropped by the dense formula.
double usd_exact_remainder(const SymmetricEnsemble& e);

/// (e abar^2 / (2M-1))^{2M-1}; requires 2M - 1 > abar^2.
double chernoff_remainder(const SymmetricEnsemble& e);

/// theta_3(z, q) = 1 + 2 sum_{j>=1} q^{j^2} cos(2 j z), 0 <= q < 1.
double jacobi_theta3(double z, double nome);

enum class SparseMode { leading, theta };

/// Large-amplitude approximation of the USD success probability.
double usd_success_sparse(const SymmetricEnsemble& e, SparseMode mode);

enum class EpsilonMode { analytic, numeric };

/// -ln(eps/2) / (2 pi^2).
double a_of_epsilon_analytic(double eps);

struct EpsilonSample {
    double eps = 0.0;
    std::size_t M = 0;
    double a = 0.0;  // abar^2 / M^2
    bool converged = false;
    double residual = 0.0;  // P - (1 - eps) at the returned amplitude
};

/// Bisects on abar at fixed M for usd_success = 1 - eps.
EpsilonSample a_of_epsilon_numeric(double eps, std::size_t M);

double a_of_epsilon(double eps, EpsilonMode mode, std::size_t M = 20);

struct EpsilonPoint {
    double eps;
    double a;
};

struct EpsilonFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
    std::vector<EpsilonPoint> samples;  // aggregated a at each eps
    // Diagnostics (numeric mode only).
    std::vector<EpsilonSample> per_m;
    double mean_slope = 0.0;  // fit of the plain M-average
    double mean_intercept = 0.0;
    double max_m_scatter = 0.0;  // max over eps of (max_M a - min_M a)
    std::vector<EpsilonSample> failures;  // non-converged bisections
};

/// Least-squares fit a = slope ln(eps) + intercept. Numeric mode aggregates
/// the M grid at each eps by its median.
EpsilonFit fit_a_epsilon(std::span<const double> eps_grid, std::span<const std::size_t> M_grid,
                         EpsilonMode mode = EpsilonMode::numeric);

struct TwoStateBound {
    double p_before;
    double p_after;
    double bound;
};

/// Minimum-error discrimination of |alpha>, |beta> before and after gain g,
/// and the implied ceiling on an immaculate amplifier's working probability.
TwoStateBound helstrom_two(Complex alpha, Complex beta, double gain);

/// Same with unambiguous discrimination; bound is the Helstrom bound squared.
TwoStateBound usd_two(Complex alpha, Complex beta, double gain);

struct UsdAmpBound {
    double ratio;                      // P(abar, M) / P(g abar, M)
    double dense_input_sparse_output;  // P_dense(abar, M)
    double dense_dense;                // e^{(g^2-1) abar^2} / g^{2(M-1)}
    double disk;                       // 1 / g^{2(M-1)}
};

UsdAmpBound amplifier_usd_bound(const SymmetricEnsemble& e, double gain);

/// Rotation eigenbasis |gamma_r> of the ensemble span and the dual vectors
/// <alpha_j^perp| alpha_k> = delta_jk. Immutable after construction.
class ReciprocalBasis {
public:
    std::size_t cutoff() const { return cutoff_; }
    std::size_t size() const { return gamma_.size(); }
    double abar() const { return abar_; }

    const FockVector& gamma(std::size_t r) const { return gamma_.at(r); }
    double c(std::size_t r) const { return c_.at(r); }
    const FockVector& dual(std::size_t j) const { return dual_.at(j); }

private:
    friend ReciprocalBasis build_reciprocal_basis(const SymmetricEnsemble&,
                                                  std::optional<std::size_t>);
    std::size_t cutoff_ = 0;
    double abar_ = 0.0;
    std::vector<FockVector> gamma_;
    std::vector<double> c_;
    std::vector<FockVector> dual_;
};

/// Throws NearDegenerateError when some c_r^2 <= 1e-14.
ReciprocalBasis build_reciprocal_basis(const SymmetricEnsemble& e,
                                       std::optional<std::size_t> cutoff = std::nullopt);

/// Eigenvalues (ascending) of E_fail = I - P sum_j |alpha_j^perp><alpha_j^perp|
/// restricted to the span of the ensemble.
std::vector<double> usd_failure_spectrum(const ReciprocalBasis& basis, const SymmetricEnsemble& e);

struct UsdBranch {
    double prob;
    FockVector out;
};

/// Discriminate-then-prepare amplifier: branch j fires with probability
/// P |<alpha_j^perp|input>|^2 and emits |g alpha_j>.
std::vector<UsdBranch> usd_amp_apply(const ReciprocalBasis& basis, const SymmetricEnsemble& e,
                                     double gain, const FockVector& input);

}  // namespace immac
