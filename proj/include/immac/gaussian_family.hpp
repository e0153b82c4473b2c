#pragma once

#include <cstddef>

#include "immac/fock.hpp"

namespace immac {

/// Deterministic phase-insensitive amplifier with amplitude gain g and
/// thermal-form ancilla parameter mu^2. mu^2 = 1 is the ideal linear
/// amplifier, 1/2 the perfect amplifier, 0 the immaculate one. Specs with
/// mu^2 < 1 are valid objects but not completely positive maps.
class GaussianAmpSpec {
public:
    GaussianAmpSpec(double gain, double mu2);

    double gain() const { return gain_; }
    double mu2() const { return mu2_; }
    bool physical() const { return mu2_ >= 1.0; }

private:
    double gain_;
    double mu2_;
};

/// Output mean and complex-amplitude variances under the three orderings.
struct GaussianOutputStats {
    Complex mean;
    double var_p;  // normally ordered
    double var_w;  // symmetric, var_p + 1/2
    double var_q;  // antinormal, var_p + 1
};

GaussianOutputStats output_stats(const GaussianAmpSpec& spec, Complex alpha);

/// Fidelity of the Gaussian output with |g alpha>: 1 / (mu^2 (g^2 - 1) + 1).
double fidelity_mu(const GaussianAmpSpec& spec);

/// Uncertainty-principle ceiling on the working probability: mu^2 + (1 - mu^2) / g^2.
double success_bound_mu(const GaussianAmpSpec& spec);

/// success_bound_mu * fidelity_mu; equal to 1/g^2 for every mu^2.
double pfp_bound(const GaussianAmpSpec& spec);

/// sqrt(2) abar, the input SNR that bounds sqrt(p) * SNR_out.
double snr_resolvability_bound(double abar);

/// Optimal Gaussian 1 -> M cloning fidelity M / (2M - 1).
double cloning_fidelity(std::size_t M);

}  // namespace immac
