#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "immac/fock.hpp"
#include "immac/kraus.hpp"

namespace immac {

/// Square lattice of points x points in the beta plane.
struct GridSpec {
    Complex center{0.0, 0.0};
    double half_width = 3.0;
    std::size_t points = 201;
};

/// 201 x 201 points, half-width max(3, |<a>| + 4), centered on the origin.
GridSpec default_grid(const FockVector& state);

struct QPeak {
    Complex location;
    double value;
};

class QGrid {
public:
    const std::vector<double>& re_axis() const { return re_; }
    const std::vector<double>& im_axis() const { return im_; }
    /// Q at (re_axis[i], im_axis[j]).
    double at(std::size_t i, std::size_t j) const { return values_[j * re_.size() + i]; }
    const std::vector<double>& values() const { return values_; }

    double cell_area() const;
    double mass() const;
    /// Grid maximum refined by a parabola through log Q on each axis, with Q
    /// re-evaluated at the refined point.
    QPeak peak() const { return peak_; }
    /// Set when the captured mass is below 0.997.
    const std::optional<std::string>& warning() const { return warning_; }

private:
    friend QGrid q_distribution(const FockVector&, const GridSpec&);
    std::vector<double> re_, im_, values_;
    QPeak peak_{};
    std::optional<std::string> warning_;
};

/// |<beta|psi>|^2 / pi, evaluated in log space.
double husimi_q(const FockVector& state, Complex beta);

/// Requires a normalized state.
QGrid q_distribution(const FockVector& state, const GridSpec& grid);
inline QGrid q_distribution(const FockVector& state) { return q_distribution(state, default_grid(state)); }

struct QuadratureSnr {
    double snr1;  // along arg<a>
    double snr2;  // orthogonal
    double var1;  // antinormally ordered variances
    double var2;
};

/// Throws UndefinedPhaseError when <a> = 0.
QuadratureSnr quadrature_snr(const FockVector& state);

/// <n> / Delta n; +infinity for number eigenstates.
double number_snr(const FockVector& state);

struct SnrReport {
    double snr1;
    double snr2;
    double snr_n;
    double p;
    double root_p_snr1;
    double root_p_snr2;
    double root_p_snr_n;
};

/// Upsilon_0 applied to |abar>; requires k = 0. The cutoff defaults to
/// default_apply_cutoff. The sqrt(2) abar ceiling is not enforced here: at
/// g = sqrt(2) the amplitude quadrature comes out squeezed and root_p_snr1
/// overshoots it by up to about 1% (see the verify suite).
SnrReport snr_report(const AmplifierSpec& spec, double abar,
                     std::optional<std::size_t> cutoff = std::nullopt);

}  // namespace immac
