#include "immac/gaussian_family.hpp"

#include <cmath>

#include "immac/errors.hpp"

namespace immac {

GaussianAmpSpec::GaussianAmpSpec(double gain, double mu2) : gain_(gain), mu2_(mu2) {
    if (!(gain > 1.0) || !std::isfinite(gain)) throw DomainError("amplifier gain must exceed 1");
    if (!(mu2 >= 0.0) || !std::isfinite(mu2)) throw DomainError("mu^2 must be nonnegative");
}

GaussianOutputStats output_stats(const GaussianAmpSpec& spec, Complex alpha) {
    const double g = spec.gain();
    const double var_p = spec.mu2() * (g * g - 1.0);
    return {g * alpha, var_p, var_p + 0.5, var_p + 1.0};
}

double fidelity_mu(const GaussianAmpSpec& spec) {
    const double g = spec.gain();
    return 1.0 / (spec.mu2() * (g * g - 1.0) + 1.0);
}

double success_bound_mu(const GaussianAmpSpec& spec) {
    const double g2 = spec.gain() * spec.gain();
    return spec.mu2() + (1.0 - spec.mu2()) / g2;
}

double pfp_bound(const GaussianAmpSpec& spec) {
    const double pfp = success_bound_mu(spec) * fidelity_mu(spec);
    const double target = 1.0 / (spec.gain() * spec.gain());
    if (std::abs(pfp - target) > 1e-12) {
        throw std::logic_error("probability-fidelity product departed from 1/g^2");
    }
    return pfp;
}

double snr_resolvability_bound(double abar) {
    if (!(abar >= 0.0)) throw DomainError("amplitude must be nonnegative");
    return std::sqrt(2.0) * abar;
}

double cloning_fidelity(std::size_t M) {
    if (M == 0) throw DomainError("cloning needs at least one output copy");
    const double m = static_cast<double>(M);
    return m / (2.0 * m - 1.0);
}

}  // namespace immac
