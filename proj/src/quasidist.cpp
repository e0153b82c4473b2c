#include "immac/quasidist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "immac/errors.hpp"
#include "immac/numeric.hpp"
#include "immac/parallel.hpp"

namespace immac {

namespace {

void require_normalized(const FockVector& state) {
    if (!state.is_normalized(1e-10)) throw DomainError("state must be normalized");
}

std::vector<double> log_sqrt_factorials(std::size_t D) {
    std::vector<double> t(D + 1);
    for (std::size_t n = 0; n <= D; ++n) t[n] = 0.5 * log_factorial(n);
    return t;
}

double husimi_with_table(const FockVector& state, Complex beta, const std::vector<double>& lsf) {
    const double r = std::abs(beta);
    const std::size_t D = state.cutoff();
    if (r == 0.0) return std::norm(state[0]) / kPi;
    const double lr = std::log(r);
    const double phi = std::arg(beta);
    // The n-th term has magnitude r^n / sqrt(n!) |psi_n|; scale by the largest.
    double lmax = kNegInf;
    for (std::size_t n = 0; n <= D; ++n) {
        if (state[n] != Complex{}) lmax = std::max(lmax, static_cast<double>(n) * lr - lsf[n]);
    }
    if (lmax == kNegInf) return 0.0;
    Complex s{};
    for (std::size_t n = 0; n <= D; ++n) {
        if (state[n] == Complex{}) continue;
        const double nd = static_cast<double>(n);
        s += std::polar(std::exp(nd * lr - lsf[n] - lmax), -nd * phi) * state[n];
    }
    const double a2 = std::norm(s);
    if (a2 == 0.0) return 0.0;
    return std::exp(std::log(a2) + 2.0 * lmax - r * r) / kPi;
}

}  // namespace

GridSpec default_grid(const FockVector& state) {
    const auto m = state_moments(state);
    GridSpec g;
    g.half_width = std::max(3.0, std::abs(m.mean_a) + 4.0);
    return g;
}

double QGrid::cell_area() const {
    const double dx = re_.size() > 1 ? re_[1] - re_[0] : 0.0;
    const double dy = im_.size() > 1 ? im_[1] - im_[0] : 0.0;
    return dx * dy;
}

double QGrid::mass() const {
    CompensatedSum s;
    for (double v : values_) s.add(v);
    return s.value() * cell_area();
}

double husimi_q(const FockVector& state, Complex beta) {
    return husimi_with_table(state, beta, log_sqrt_factorials(state.cutoff()));
}

QGrid q_distribution(const FockVector& state, const GridSpec& spec) {
    require_normalized(state);
    if (spec.points < 3) throw DomainError("Q grid needs at least 3 points per axis");
    if (!(spec.half_width > 0.0)) throw DomainError("Q grid half-width must be positive");
    const std::size_t P = spec.points;
    QGrid q;
    const double h = 2.0 * spec.half_width / static_cast<double>(P - 1);
    for (std::size_t i = 0; i < P; ++i) {
        q.re_.push_back(spec.center.real() - spec.half_width + h * static_cast<double>(i));
        q.im_.push_back(spec.center.imag() - spec.half_width + h * static_cast<double>(i));
    }
    const auto lsf = log_sqrt_factorials(state.cutoff());
    const auto rows = parallel_map(P, [&](std::size_t j) {
        std::vector<double> row(P);
        for (std::size_t i = 0; i < P; ++i) {
            row[i] = husimi_with_table(state, Complex(q.re_[i], q.im_[j]), lsf);
        }
        return row;
    });
    q.values_.reserve(P * P);
    for (const auto& row : rows) q.values_.insert(q.values_.end(), row.begin(), row.end());

    const auto it = std::max_element(q.values_.begin(), q.values_.end());
    const std::size_t idx = static_cast<std::size_t>(it - q.values_.begin());
    const std::size_t i = idx % P, j = idx / P;
    auto shift = [&](double l, double c, double r) {
        if (!(l > 0.0 && c > 0.0 && r > 0.0)) return 0.0;
        const double ll = std::log(l), lc = std::log(c), lr = std::log(r);
        const double den = ll - 2.0 * lc + lr;
        if (den >= 0.0) return 0.0;
        return std::clamp(0.5 * (ll - lr) / den, -0.5, 0.5);
    };
    double x = q.re_[i], y = q.im_[j];
    if (i > 0 && i + 1 < P) x += h * shift(q.at(i - 1, j), q.at(i, j), q.at(i + 1, j));
    if (j > 0 && j + 1 < P) y += h * shift(q.at(i, j - 1), q.at(i, j), q.at(i, j + 1));
    const Complex loc(x, y);
    q.peak_ = {loc, husimi_with_table(state, loc, lsf)};

    const double mass = q.mass();
    if (mass < 0.997) {
        q.warning_ = "Q grid captures mass " + std::to_string(mass) + " < 0.997; widen the grid";
    }
    return q;
}

QuadratureSnr quadrature_snr(const FockVector& state) {
    require_normalized(state);
    const auto m = state_moments(state);
    const double amp = std::abs(m.mean_a);
    if (!(amp > 1e-15)) throw UndefinedPhaseError("<a> = 0: quadrature frame undefined");
    const double theta = std::arg(m.mean_a);
    const double rot = (m.mean_a2 * std::polar(1.0, -2.0 * theta)).real();
    // Symmetric-ordering variances plus the half quantum to antinormal order.
    const double var1 = rot + m.mean_n + 0.5 - 2.0 * amp * amp + 0.5;
    const double var2 = -rot + m.mean_n + 0.5 + 0.5;
    const double signal = std::sqrt(2.0) * amp;
    return {signal / std::sqrt(var1), signal / std::sqrt(var2), var1, var2};
}

double number_snr(const FockVector& state) {
    require_normalized(state);
    const double n2 = state.norm2();
    CompensatedSum mean;
    for (std::size_t n = 0; n <= state.cutoff(); ++n) mean.add(static_cast<double>(n) * std::norm(state[n]));
    const double mu = mean.value() / n2;
    CompensatedSum var;
    for (std::size_t n = 0; n <= state.cutoff(); ++n) {
        const double d = static_cast<double>(n) - mu;
        var.add(d * d * std::norm(state[n]));
    }
    const double sd = std::sqrt(std::max(0.0, var.value() / n2));
    if (sd <= 1e-14 * std::max(mu, 1.0)) return std::numeric_limits<double>::infinity();
    return mu / sd;
}

SnrReport snr_report(const AmplifierSpec& spec, double abar, std::optional<std::size_t> cutoff) {
    if (spec.k() != 0) throw ConfigurationError("SNR report is defined for the k = 0 amplifier");
    const auto kr = extended_kraus(spec, cutoff.value_or(default_apply_cutoff(spec, abar)));
    const auto c = apply_to_coherent(kr, spec.gain(), abar);
    if (c.branch.zero) throw DegenerateStateError("amplifier branch has zero probability");
    const auto q = quadrature_snr(c.branch.out);
    SnrReport r{};
    r.p = c.branch.prob;
    r.snr1 = q.snr1;
    r.snr2 = q.snr2;
    r.snr_n = number_snr(c.branch.out);
    const double rp = std::sqrt(r.p);
    r.root_p_snr1 = rp * r.snr1;
    r.root_p_snr2 = rp * r.snr2;
    r.root_p_snr_n = rp * r.snr_n;
    return r;
}

}  // namespace immac
