#include "immac/usd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "immac/errors.hpp"
#include "immac/numeric.hpp"
#include "immac/parallel.hpp"

namespace immac {

namespace {

// log sum_{k>=0} lambda^{kM+r} / (kM+r)!  (no e^{-lambda} factor), summed in
// log space until the next term is below 1e-18 of the partial sum and the
// index has passed the Poisson peak.
double log_periodic_series(double lambda, std::size_t M, std::size_t r, std::size_t k0 = 0) {
    LogSumAccumulator acc;
    const double log_lambda = lambda > 0.0 ? std::log(lambda) : kNegInf;
    const double log_tol = std::log(1e-18);
    for (std::size_t k = k0;; ++k) {
        const std::size_t n = k * M + r;
        double log_term;
        if (lambda == 0.0) {
            log_term = n == 0 ? 0.0 : kNegInf;
        } else {
            log_term = static_cast<double>(n) * log_lambda - log_factorial(n);
        }
        acc.add(log_term);
        if (static_cast<double>(n) > lambda && log_term <= acc.log_value() + log_tol) break;
    }
    return acc.log_value();
}

double log_usd_success(const SymmetricEnsemble& e) { return usd_success(e).log_success; }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Line {
    double slope;
    double intercept;
    double rms;
};

Line fit_line(const std::vector<EpsilonPoint>& pts) {
    if (pts.size() == 1) {
        // One abscissa cannot fix a slope; pin it to the analytic one and
        // interpolate the point exactly.
        const double slope = -1.0 / (2.0 * kPi * kPi);
        return {slope, pts[0].a - slope * std::log(pts[0].eps), 0.0};
    }
    double sx = 0, sy = 0;
    for (const auto& p : pts) {
        sx += std::log(p.eps);
        sy += p.a;
    }
    const double n = static_cast<double>(pts.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& p : pts) {
        const double dx = std::log(p.eps) - mx;
        sxx += dx * dx;
        sxy += dx * (p.a - my);
    }
    if (sxx == 0.0) throw DomainError("epsilon grid must contain distinct values");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss = 0;
    for (const auto& p : pts) {
        const double r = p.a - (slope * std::log(p.eps) + intercept);
        ss += r * r;
    }
    return {slope, intercept, std::sqrt(ss / n)};
}

}  // namespace

SymmetricEnsemble::SymmetricEnsemble(double abar, std::size_t M) : abar_(abar), M_(M) {
    if (!(abar >= 0.0) || !std::isfinite(abar)) throw DomainError("abar must be finite and >= 0");
    if (M == 0) throw DomainError("ensemble needs at least one state");
}

double SymmetricEnsemble::phase(std::size_t j) const {
    return 2.0 * kPi * static_cast<double>(j % M_) / static_cast<double>(M_);
}

double log_q_r_exact(const SymmetricEnsemble& e, std::size_t r) {
    if (r >= e.size()) throw DomainError("q_r index must satisfy 0 <= r < M");
    const double lambda = e.abar() * e.abar();
    return std::log(static_cast<double>(e.size())) - lambda +
           log_periodic_series(lambda, e.size(), r);
}

double q_r_exact(const SymmetricEnsemble& e, std::size_t r) { return std::exp(log_q_r_exact(e, r)); }

UsdSpectrum usd_success(const SymmetricEnsemble& e) {
    UsdSpectrum s;
    const std::size_t M = e.size();
    s.q.resize(M);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < M; ++r) {
        const double lq = log_q_r_exact(e, r);
        s.q[r] = std::exp(lq);
        if (lq < best) {
            best = lq;
            s.argmin_r = r;
        }
    }
    s.log_success = best;
    s.success = std::exp(best);
    return s;
}

double usd_success_dense(const SymmetricEnsemble& e) {
    if (e.size() < 2) throw DomainError("dense approximation needs M >= 2");
    const double lambda = e.abar() * e.abar();
    return static_cast<double>(e.size()) * std::exp(log_poisson_pmf({lambda, e.size() - 1}));
}

double usd_exact_remainder(const SymmetricEnsemble& e) {
    const double lambda = e.abar() * e.abar();
    return std::exp(log_periodic_series(lambda, e.size(), e.size() - 1, 1));
}

double chernoff_remainder(const SymmetricEnsemble& e) {
    const double lambda = e.abar() * e.abar();
    const double x = 2.0 * static_cast<double>(e.size()) - 1.0;
    if (!(x > lambda)) {
        throw RegimeError("Chernoff remainder bound needs 2M - 1 > abar^2");
    }
    const double bound = lambda == 0.0 ? 0.0 : std::exp(x * (1.0 + std::log(lambda) - std::log(x)));
    const double remainder = usd_exact_remainder(e);
    if (remainder > bound * (1.0 + 1e-12)) {
        throw std::logic_error("Chernoff bound fell below the exact series remainder");
    }
    return bound;
}

double jacobi_theta3(double z, double nome) {
    if (!(nome >= 0.0)) throw DomainError("theta_3 nome must be >= 0");
    if (!(nome < 1.0)) throw DivergenceError("theta_3 series diverges for nome >= 1");
    if (nome == 0.0) return 1.0;
    const double lq = std::log(nome);
    CompensatedSum s;
    for (long j = 1;; ++j) {
        const double w = std::exp(static_cast<double>(j * j) * lq);
        if (w < 1e-18) break;
        s.add(2.0 * w * std::cos(2.0 * static_cast<double>(j) * z));
    }
    return 1.0 + s.value();
}

double usd_success_sparse(const SymmetricEnsemble& e, SparseMode mode) {
    if (!(e.abar() > 0.0)) throw RegimeError("sparse approximation needs abar > 0");
    const double M = static_cast<double>(e.size());
    const double ratio2 = e.abar() * e.abar() / (M * M);
    const double nome = std::exp(-2.0 * kPi * kPi * ratio2);
    if (mode == SparseMode::leading) return 1.0 - 2.0 * nome;
    // abar/m = abar^2/M = [abar^2/M] + aleph, half-integers rounded up.
    const double x = e.abar() * e.abar() / M;
    const double aleph = x - std::floor(x + 0.5);
    const double r = std::floor(M * (aleph + 0.5) + 0.5);
    return jacobi_theta3(kPi * (r / M - aleph), nome);
}

double a_of_epsilon_analytic(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
    return -std::log(eps / 2.0) / (2.0 * kPi * kPi);
}

EpsilonSample a_of_epsilon_numeric(double eps, std::size_t M) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
    if (M < 2) throw DomainError("numeric a(eps) needs M >= 2");
    const double target = 1.0 - eps;
    const double Md = static_cast<double>(M);
    auto P = [&](double abar) { return usd_success(SymmetricEnsemble(abar, M)).success; };

    double lo = 0.0;
    double hi = 2.0 * Md * std::sqrt(a_of_epsilon_analytic(eps));
    for (int grow = 0; P(hi) < target && grow < 20; ++grow) hi *= 2.0;

    // Bisect to a tight bracket; convergence is judged by |P - (1 - eps)| < 1e-6.
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        mid = 0.5 * (lo + hi);
        if (P(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid = 0.5 * (lo + hi);
    EpsilonSample s;
    s.eps = eps;
    s.M = M;
    s.a = mid * mid / (Md * Md);
    s.residual = P(mid) - target;
    s.converged = std::abs(s.residual) < 1e-6;
    return s;
}

double a_of_epsilon(double eps, EpsilonMode mode, std::size_t M) {
    if (mode == EpsilonMode::analytic) return a_of_epsilon_analytic(eps);
    return a_of_epsilon_numeric(eps, M).a;
}

EpsilonFit fit_a_epsilon(std::span<const double> eps_grid, std::span<const std::size_t> M_grid,
                         EpsilonMode mode) {
    if (eps_grid.empty()) throw DomainError("epsilon grid is empty");
    for (double eps : eps_grid) {
        if (!(eps >= 1e-5 * (1 - 1e-12) && eps <= 0.5 * (1 + 1e-12))) {
            throw DomainError("fit epsilon values must lie in [1e-5, 0.5]");
        }
    }
    EpsilonFit fit;
    if (mode == EpsilonMode::analytic) {
        for (double eps : eps_grid) fit.samples.push_back({eps, a_of_epsilon_analytic(eps)});
        const Line l = fit_line(fit.samples);
        fit.slope = fit.mean_slope = l.slope;
        fit.intercept = fit.mean_intercept = l.intercept;
        fit.residual_rms = l.rms;
        return fit;
    }
    if (M_grid.empty()) throw DomainError("M grid is empty");
    for (std::size_t M : M_grid) {
        if (M < 2 || M > 40) throw DomainError("fit M values must lie in [2, 40]");
    }
    const std::size_t ne = eps_grid.size(), nm = M_grid.size();
    fit.per_m = parallel_map(ne * nm, [&](std::size_t i) {
        return a_of_epsilon_numeric(eps_grid[i / nm], M_grid[i % nm]);
    });
    std::vector<EpsilonPoint> mean_pts;
    for (std::size_t ie = 0; ie < ne; ++ie) {
        std::vector<double> as;
        for (std::size_t im = 0; im < nm; ++im) {
            const auto& s = fit.per_m[ie * nm + im];
            if (!s.converged) fit.failures.push_back(s);
            as.push_back(s.a);
        }
        const auto [mn, mx] = std::minmax_element(as.begin(), as.end());
        fit.max_m_scatter = std::max(fit.max_m_scatter, *mx - *mn);
        double sum = 0;
        for (double a : as) sum += a;
        mean_pts.push_back({eps_grid[ie], sum / static_cast<double>(nm)});
        fit.samples.push_back({eps_grid[ie], median(std::move(as))});
    }
    const Line l = fit_line(fit.samples);
    fit.slope = l.slope;
    fit.intercept = l.intercept;
    fit.residual_rms = l.rms;
    const Line lm = fit_line(mean_pts);
    fit.mean_slope = lm.slope;
    fit.mean_intercept = lm.intercept;
    return fit;
}

TwoStateBound helstrom_two(Complex alpha, Complex beta, double gain) {
    if (!(gain >= 1.0)) throw DomainError("gain must be >= 1");
    const double d2 = std::norm(alpha - beta);
    const double before = -std::expm1(-d2);
    const double after = -std::expm1(-gain * gain * d2);
    const double bound = d2 == 0.0 ? 1.0 / gain : std::sqrt(before / after);
    return {0.5 * (1.0 + std::sqrt(before)), 0.5 * (1.0 + std::sqrt(after)), bound};
}

TwoStateBound usd_two(Complex alpha, Complex beta, double gain) {
    if (!(gain >= 1.0)) throw DomainError("gain must be >= 1");
    const double d2 = std::norm(alpha - beta);
    const double before = -std::expm1(-d2);
    const double after = -std::expm1(-gain * gain * d2);
    const double bound = d2 == 0.0 ? 1.0 / (gain * gain) : before / after;
    return {before, after, bound};
}

UsdAmpBound amplifier_usd_bound(const SymmetricEnsemble& e, double gain) {
    if (!(gain > 1.0)) throw DomainError("amplifier gain must exceed 1");
    const std::size_t M = e.size();
    const double lg = std::log(gain);
    const double lambda = e.abar() * e.abar();
    const double m1 = static_cast<double>(M - 1);
    UsdAmpBound b{};
    b.disk = std::exp(-2.0 * m1 * lg);
    b.dense_dense = std::exp((gain * gain - 1.0) * lambda - 2.0 * m1 * lg);
    b.dense_input_sparse_output = M >= 2 ? usd_success_dense(e) : 1.0;
    if (M == 1) {
        b.ratio = 1.0;
    } else if (e.abar() == 0.0) {
        b.ratio = b.disk;  // closing-circle limit
    } else {
        const SymmetricEnsemble amplified(gain * e.abar(), M);
        b.ratio = std::exp(log_usd_success(e) - log_usd_success(amplified));
    }
    return b;
}

ReciprocalBasis build_reciprocal_basis(const SymmetricEnsemble& e, std::optional<std::size_t> cutoff) {
    const std::size_t M = e.size();
    const std::size_t D = cutoff.value_or(default_cutoff(e.abar() * e.abar()));
    if (D + 1 < M) throw TruncationError("cutoff too small to hold M independent states");

    ReciprocalBasis b;
    b.cutoff_ = D;
    b.abar_ = e.abar();
    const auto coh = coherent_fock(CoherentParams(e.abar(), 0.0), D).state;

    // c_r |gamma_r> = (1/M) sum_j e^{-i 2 pi r j / M} |alpha_j>. The phase sum over j
    // is M on n = r (mod M) and zero elsewhere, so the combination is evaluated
    // exactly as a residue-class comb of |alpha_0>.
    for (std::size_t r = 0; r < M; ++r) {
        const double c2 = q_r_exact(e, r) / static_cast<double>(M);
        if (!(c2 > 1e-14)) {
            throw NearDegenerateError("c_" + std::to_string(r) + "^2 = " + std::to_string(c2) +
                                      " below 1e-14; ensemble too close to linear dependence");
        }
        const double c = std::sqrt(c2);
        FockVector g(D);
        for (std::size_t n = r; n <= D; n += M) g[n] = coh[n] / c;
        b.gamma_.push_back(std::move(g));
        b.c_.push_back(c);
    }
    for (std::size_t j = 0; j < M; ++j) {
        FockVector d(D);
        for (std::size_t r = 0; r < M; ++r) {
            const double ang = 2.0 * kPi * static_cast<double>((r * j) % M) / static_cast<double>(M);
            const Complex w = std::polar(1.0 / (static_cast<double>(M) * b.c_[r]), ang);
            const auto& g = b.gamma_[r];
            for (std::size_t n = r; n <= D; n += M) d[n] += w * g[n];
        }
        b.dual_.push_back(std::move(d));
    }
    return b;
}

std::vector<double> usd_failure_spectrum(const ReciprocalBasis& basis, const SymmetricEnsemble& e) {
    if (basis.size() != e.size() || basis.abar() != e.abar()) {
        throw ConfigurationError("reciprocal basis was built for a different ensemble");
    }
    const std::size_t M = e.size();
    const double P = usd_success(e).success;
    Eigen::MatrixXcd fail = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(M),
                                                       static_cast<Eigen::Index>(M));
    for (std::size_t j = 0; j < M; ++j) {
        std::vector<Complex> proj(M);
        for (std::size_t r = 0; r < M; ++r) proj[r] = overlap(basis.gamma(r), basis.dual(j));
        for (std::size_t r = 0; r < M; ++r) {
            for (std::size_t s = 0; s < M; ++s) {
                fail(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) -=
                    P * proj[r] * std::conj(proj[s]);
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(fail, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

std::vector<UsdBranch> usd_amp_apply(const ReciprocalBasis& basis, const SymmetricEnsemble& e,
                                     double gain, const FockVector& input) {
    if (basis.size() != e.size() || basis.abar() != e.abar()) {
        throw ConfigurationError("reciprocal basis was built for a different ensemble");
    }
    if (!(gain >= 1.0)) throw DomainError("gain must be >= 1");
    const double P = usd_success(e).success;
    const double out_abar = gain * e.abar();
    const std::size_t out_cutoff = default_cutoff(out_abar * out_abar);
    std::vector<UsdBranch> branches;
    branches.reserve(e.size());
    for (std::size_t j = 0; j < e.size(); ++j) {
        const double prob = P * std::norm(overlap(basis.dual(j), input));
        branches.push_back({prob, coherent_fock(CoherentParams(out_abar, e.phase(j)), out_cutoff).state});
    }
    return branches;
}

}  // namespace immac
