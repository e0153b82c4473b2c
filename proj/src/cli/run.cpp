#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "immac/cli.hpp"
#include "immac/errors.hpp"
#include "immac/fock.hpp"
#include "immac/gaussian_family.hpp"
#include "immac/kraus.hpp"
#include "immac/numeric.hpp"
#include "immac/parallel.hpp"
#include "immac/quasidist.hpp"
#include "immac/usd.hpp"

namespace immac::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Panel {
    double g;
    std::size_t N;
};

const std::map<Subcommand, std::string>& names() {
    static const std::map<Subcommand, std::string> m = {
        {Subcommand::fig3, "fig3"},           {Subcommand::fig4, "fig4"},
        {Subcommand::fig5, "fig5"},           {Subcommand::fig6, "fig6"},
        {Subcommand::fig7, "fig7"},           {Subcommand::fig8, "fig8"},
        {Subcommand::fig9, "fig9"},           {Subcommand::usd_table, "usd-table"},
        {Subcommand::bounds, "bounds"},       {Subcommand::verify, "verify"},
    };
    return m;
}

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", x);
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return v;
}

std::vector<double> default_eps_grid() {
    std::vector<double> v;
    for (double l : linspace(std::log(1e-5), std::log(0.5), 10)) v.push_back(std::exp(l));
    v.back() = 0.5;
    return v;
}

std::vector<std::size_t> range(std::size_t a, std::size_t b, std::size_t step = 1) {
    std::vector<std::size_t> v;
    for (std::size_t m = a; m <= b; m += step) v.push_back(m);
    return v;
}

std::string panel_tag(const Panel& p) { return fmt::format("g{:.4g}_N{}", p.g, p.N); }

std::vector<Panel> panels(const RunConfig& c, std::vector<Panel> defaults) {
    if (c.g && c.N) return {{*c.g, *c.N}};
    if (c.g || c.N) throw UsageError("--g and --N must be given together");
    return defaults;
}

std::vector<double> alpha_grid(const RunConfig& c, std::size_t N) {
    if (c.alpha) return linspace(c.alpha->min, c.alpha->max, c.alpha->steps);
    return linspace(0.0, 1.5 * std::sqrt(static_cast<double>(N)), 121);
}

std::vector<double> alpha_grid(const RunConfig& c, double lo, double hi) {
    if (c.alpha) return linspace(c.alpha->min, c.alpha->max, c.alpha->steps);
    return linspace(lo, hi, 121);
}

std::optional<std::size_t> checked_cutoff(const RunConfig& c, const AmplifierSpec& spec,
                                          double abar_max) {
    if (!c.cutoff) return std::nullopt;
    const std::size_t rule = default_apply_cutoff(spec, abar_max);
    if (*c.cutoff < rule) {
        throw UsageError(fmt::format("--cutoff {} is below the automatic rule {} for g={} N={} abar={}",
                                     *c.cutoff, rule, spec.gain(), spec.N(), abar_max));
    }
    return c.cutoff;
}

Dataset make(const RunConfig& c, std::string name, std::vector<std::string> columns) {
    Dataset d;
    d.name = std::move(name);
    d.metadata = c.echo();
    d.metadata.insert(d.metadata.begin(), {"dataset", d.name});
    d.columns = std::move(columns);
    return d;
}

template <class T>
double try_or_nan(T&& f) {
    try {
        return f();
    } catch (const Error&) {
        return kNaN;
    }
}

// ---- figures ---------------------------------------------------------------

void fig3(const RunConfig& c, RunResult& out) {
    const auto eps = c.eps.empty() ? default_eps_grid() : c.eps;
    const auto Ms = c.M.empty() ? range(2, 40, 2) : c.M;
    const auto fit = fit_a_epsilon(eps, Ms, EpsilonMode::numeric);
    const auto analytic = fit_a_epsilon(eps, {}, EpsilonMode::analytic);

    auto samples = make(c, "fig3_samples", {"eps", "a_numeric", "a_numeric_mean", "a_analytic"});
    for (std::size_t i = 0; i < eps.size(); ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < Ms.size(); ++j) sum += fit.per_m[i * Ms.size() + j].a;
        samples.rows.push_back({eps[i], fit.samples[i].a, sum / static_cast<double>(Ms.size()),
                                a_of_epsilon_analytic(eps[i])});
    }

    auto per_m = make(c, "fig3_per_m", {"eps", "M", "a", "converged", "residual"});
    for (const auto& s : fit.per_m) {
        per_m.rows.push_back({s.eps, static_cast<double>(s.M), s.a, s.converged ? 1.0 : 0.0, s.residual});
    }

    auto fits = make(c, "fig3_fit", {"method", "slope", "intercept", "residual_rms"});
    fits.metadata.emplace_back("max_m_scatter", num(fit.max_m_scatter));
    fits.metadata.emplace_back("bisection_failures", std::to_string(fit.failures.size()));
    fits.rows.push_back({std::string("numeric_median"), fit.slope, fit.intercept, fit.residual_rms});
    fits.rows.push_back({std::string("numeric_mean"), fit.mean_slope, fit.mean_intercept, kNaN});
    fits.rows.push_back({std::string("analytic"), analytic.slope, analytic.intercept, analytic.residual_rms});

    // Past eps = 0.5 the analytic curve is expected to separate from the numerics.
    const std::vector<double> wide = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
    const auto wide_samples = parallel_map(wide.size() * Ms.size(), [&](std::size_t i) {
        return a_of_epsilon_numeric(wide[i / Ms.size()], Ms[i % Ms.size()]).a;
    });
    auto breakdown = make(c, "fig3_breakdown", {"eps", "a_numeric", "a_analytic", "relative_deviation"});
    for (std::size_t i = 0; i < wide.size(); ++i) {
        std::vector<double> as(wide_samples.begin() + static_cast<long>(i * Ms.size()),
                               wide_samples.begin() + static_cast<long>((i + 1) * Ms.size()));
        std::sort(as.begin(), as.end());
        const std::size_t n = as.size();
        const double med = n % 2 ? as[n / 2] : 0.5 * (as[n / 2 - 1] + as[n / 2]);
        const double an = a_of_epsilon_analytic(wide[i]);
        breakdown.rows.push_back({wide[i], med, an, std::abs(an - med) / med});
    }
    out.datasets = {std::move(fits), std::move(samples), std::move(per_m), std::move(breakdown)};
}

std::vector<Cell> fig4_row(std::size_t M, double alpha2) {
    const SymmetricEnsemble e(std::sqrt(alpha2), M);
    const double dense = M >= 2 ? usd_success_dense(e) : kNaN;
    const double sparse = try_or_nan([&] { return usd_success_sparse(e, SparseMode::leading); });
    return {static_cast<double>(M), alpha2, usd_success(e).success, dense, sparse};
}

void fig4(const RunConfig& c, RunResult& out) {
    const std::vector<std::string> cols = {"M", "alpha2", "exact", "dense_approx", "sparse_approx"};
    const auto Ms = c.M.empty() ? range(2, 12) : c.M;
    const auto a2 = c.alpha2.empty() ? std::vector<double>{0.5, 1.0, 2.0, 4.0} : c.alpha2;
    auto fixed_a = make(c, "fig4_fixed_alpha2", cols);
    const auto rows = parallel_map(Ms.size() * a2.size(),
                                   [&](std::size_t i) { return fig4_row(Ms[i / a2.size()], a2[i % a2.size()]); });
    fixed_a.rows = rows;

    const auto Mf = c.M.empty() ? std::vector<std::size_t>{4, 8, 16} : c.M;
    std::vector<double> sweep;
    if (c.alpha) {
        for (double a : linspace(c.alpha->min, c.alpha->max, c.alpha->steps)) sweep.push_back(a * a);
    } else {
        sweep = linspace(0.0, 20.0, 121);
    }
    auto fixed_m = make(c, "fig4_fixed_M", cols);
    fixed_m.rows = parallel_map(Mf.size() * sweep.size(), [&](std::size_t i) {
        return fig4_row(Mf[i / sweep.size()], sweep[i % sweep.size()]);
    });
    out.datasets = {std::move(fixed_a), std::move(fixed_m)};
}

void fig5(const RunConfig& c, RunResult& out) {
    const auto ks = c.k.empty() ? std::vector<std::size_t>{0, 1, 2} : c.k;
    for (const auto& p : panels(c, {{std::sqrt(2.0), 4}, {3.0, 9}})) {
        std::vector<std::string> cols = {"alpha"};
        for (auto k : ks) cols.push_back(fmt::format("p{}", k));
        for (auto k : ks) cols.push_back(fmt::format("F{}", k));
        auto d = make(c, "fig5_" + panel_tag(p), cols);
        const auto alphas = alpha_grid(c, p.N);
        d.rows = parallel_map(alphas.size(), [&](std::size_t i) {
            std::vector<Cell> row = {alphas[i]};
            for (auto k : ks) row.emplace_back(success_prob_extended(AmplifierSpec(p.g, p.N, k), alphas[i]));
            for (auto k : ks) row.emplace_back(fidelity_extended(AmplifierSpec(p.g, p.N, k), alphas[i]));
            return row;
        });
        out.datasets.push_back(std::move(d));
    }
}

void fig6(const RunConfig& c, RunResult& out) {
    for (const auto& p : panels(c, {{std::sqrt(2.0), 2}, {std::sqrt(2.0), 4}, {3.0, 9}})) {
        auto d = make(c, "fig6_" + panel_tag(p),
                      {"alpha", "F0_ext", "p0_ext", "F_restricted", "p_restricted", "pfp", "do_nothing"});
        const AmplifierSpec spec(p.g, p.N, 0);
        const auto alphas = alpha_grid(c, p.N);
        d.rows = parallel_map(alphas.size(), [&](std::size_t i) {
            const double a = alphas[i];
            const auto pf = pfp_and_do_nothing(spec, a);
            return std::vector<Cell>{a,
                                     fidelity_extended(spec, a),
                                     success_prob_extended(spec, a),
                                     fidelity_restricted(spec, a),
                                     success_prob_restricted(spec, a),
                                     pf.pfp,
                                     pf.nothing};
        });
        out.datasets.push_back(std::move(d));
    }
}

void fig7(const RunConfig& c, RunResult& out) {
    const auto ps = panels(c, {{3.0, 9}});
    const auto alphas = c.alpha_values.empty() ? std::vector<double>{0.5, 1.5, 3.0, 5.0} : c.alpha_values;
    for (const auto& p : ps) {
        const AmplifierSpec spec(p.g, p.N, 0);
        for (double a : alphas) {
            const auto cut = checked_cutoff(c, spec, a).value_or(default_apply_cutoff(spec, a));
            const auto branch = apply_to_coherent(extended_kraus(spec, cut), p.g, a).branch;
            auto d = make(c, fmt::format("fig7_{}_a{:g}", panel_tag(p), a), {"re", "im", "Q"});
            if (branch.zero) throw DegenerateStateError("amplifier output has zero probability");
            const auto q = q_distribution(branch.out);
            d.metadata.emplace_back("input_alpha", num(a));
            d.metadata.emplace_back("success_prob", num(branch.prob));
            d.metadata.emplace_back("peak_re", num(q.peak().location.real()));
            d.metadata.emplace_back("peak_im", num(q.peak().location.imag()));
            d.metadata.emplace_back("peak_Q", num(q.peak().value));
            d.metadata.emplace_back("mass", num(q.mass()));
            if (q.warning()) d.metadata.emplace_back("warning", *q.warning());
            const auto& re = q.re_axis();
            const auto& im = q.im_axis();
            d.rows.reserve(re.size() * im.size());
            for (std::size_t i = 0; i < re.size(); ++i) {
                for (std::size_t j = 0; j < im.size(); ++j) d.rows.push_back({re[i], im[j], q.at(i, j)});
            }
            out.datasets.push_back(std::move(d));
        }
    }
}

void fig8_9(const RunConfig& c, RunResult& out, bool number) {
    for (const auto& p : panels(c, {{std::sqrt(2.0), 2}, {3.0, 9}})) {
        const AmplifierSpec spec(p.g, p.N, 0);
        const auto alphas = alpha_grid(c, p.N);
        const double amax = *std::max_element(alphas.begin(), alphas.end());
        const auto cut = checked_cutoff(c, spec, amax);
        std::vector<std::string> cols =
            number ? std::vector<std::string>{"alpha", "p", "snr_n", "root_p_snr_n", "input_snr_n", "target_snr_n"}
                   : std::vector<std::string>{"alpha", "p", "snr1", "snr2", "root_p_snr1", "root_p_snr2",
                                              "input_snr", "target_snr"};
        auto d = make(c, fmt::format("{}_{}", number ? "fig9" : "fig8", panel_tag(p)), cols);
        d.rows = parallel_map(alphas.size(), [&](std::size_t i) {
            const double a = alphas[i];
            // No phase reference at the origin: SNR columns are written as nan.
            SnrReport r{kNaN, kNaN, kNaN, success_prob_extended(spec, a), kNaN, kNaN, kNaN};
            if (a > 0.0) r = snr_report(spec, a, cut);
            if (number) {
                return std::vector<Cell>{a, r.p, r.snr_n, r.root_p_snr_n, a, p.g * a};
            }
            const double in = std::sqrt(2.0) * a;
            return std::vector<Cell>{a, r.p, r.snr1, r.snr2, r.root_p_snr1, r.root_p_snr2, in, p.g * in};
        });
        out.datasets.push_back(std::move(d));
    }
}

void usd_table(const RunConfig& c, RunResult& out) {
    const auto Ms = c.M.empty() ? std::vector<std::size_t>{2, 3, 4, 5, 6, 8, 12, 16} : c.M;
    const double g = c.g.value_or(2.0);
    if (!(g > 1.0)) throw UsageError("--g must exceed 1");
    const auto alphas = alpha_grid(c, 0.0, 6.0);
    auto d = make(c, "usd_table",
                  {"M", "alpha", "success", "argmin_r", "dense_approx", "sparse_leading", "sparse_theta",
                   "exact_remainder", "chernoff_remainder", "amp_ratio", "amp_dense_dense", "amp_disk"});
    d.metadata.emplace_back("amp_gain", num(g));
    d.rows = parallel_map(Ms.size() * alphas.size(), [&](std::size_t i) {
        const std::size_t M = Ms[i / alphas.size()];
        const double a = alphas[i % alphas.size()];
        const SymmetricEnsemble e(a, M);
        const auto s = usd_success(e);
        const auto b = amplifier_usd_bound(e, g);
        return std::vector<Cell>{
            static_cast<double>(M),
            a,
            s.success,
            static_cast<double>(s.argmin_r),
            M >= 2 ? usd_success_dense(e) : kNaN,
            try_or_nan([&] { return usd_success_sparse(e, SparseMode::leading); }),
            try_or_nan([&] { return usd_success_sparse(e, SparseMode::theta); }),
            usd_exact_remainder(e),
            try_or_nan([&] { return chernoff_remainder(e); }),
            b.ratio,
            b.dense_dense,
            b.disk};
    });
    out.datasets.push_back(std::move(d));
}

void bounds(const RunConfig& c, RunResult& out) {
    const double g = c.g.value_or(2.0);
    if (!(g > 1.0)) throw UsageError("--g must exceed 1");
    auto two = make(c, "bounds_two_state",
                    {"alpha", "helstrom_before", "helstrom_after", "helstrom_bound", "usd_before", "usd_after",
                     "usd_bound"});
    two.metadata.emplace_back("pair", "alpha, -alpha");
    for (double a : alpha_grid(c, 0.0, 3.0)) {
        const auto h = helstrom_two(Complex(a, 0), Complex(-a, 0), g);
        const auto u = usd_two(Complex(a, 0), Complex(-a, 0), g);
        two.rows.push_back({a, h.p_before, h.p_after, h.bound, u.p_before, u.p_after, u.bound});
    }
    auto mu = make(c, "bounds_mu2", {"mu2", "fidelity", "success_bound", "pfp", "inv_g2", "physical"});
    for (double m2 : linspace(0.0, 2.0, 21)) {
        const GaussianAmpSpec s(g, m2);
        mu.rows.push_back({m2, fidelity_mu(s), success_bound_mu(s), pfp_bound(s), 1.0 / (g * g),
                           s.physical() ? 1.0 : 0.0});
    }
    auto clone = make(c, "bounds_cloning", {"M", "fidelity"});
    for (auto M : c.M.empty() ? range(1, 20) : c.M) {
        clone.rows.push_back({static_cast<double>(M), cloning_fidelity(M)});
    }
    out.datasets = {std::move(two), std::move(mu), std::move(clone)};
}

// ---- verify ----------------------------------------------------------------

struct Suite {
    std::string name;
    double tolerance;
    std::size_t cases = 0;
    double worst = 0.0;  // largest observed violation measure (<= 0 is clean)
    std::vector<std::string> violations{};

    // value is the signed excess over the tolerance-free limit; positive
    // beyond tolerance counts as a violation.
    void check(double excess, const std::string& where) {
        ++cases;
        if (cases == 1 || excess > worst) worst = excess;
        if (!(excess <= tolerance)) violations.push_back(fmt::format("{} excess={}", where, num(excess)));
    }
};

template <class Fn>
void guarded(Suite& s, const std::string& where, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        ++s.cases;
        s.violations.push_back(fmt::format("{} threw: {}", where, e.what()));
    }
}

std::vector<Suite> run_suites(const RunConfig& c) {
    std::vector<Suite> suites;
    const auto kpanels = panels(c, {{std::sqrt(2.0), 2}, {std::sqrt(2.0), 4}, {3.0, 9}});

    {
        Suite s{"coherent_truncation", 1e-12};
        for (double a : linspace(0.0, 4.0, 41)) {
            const auto cf = coherent_fock(CoherentParams(a, 0.3), default_cutoff(a * a));
            s.check(cf.truncation_weight, fmt::format("abar={}", a));
            s.check(std::abs(cf.state.norm2() + cf.truncation_weight - 1.0), fmt::format("norm abar={}", a));
        }
        suites.push_back(std::move(s));
    }
    {
        Suite s{"coherent_overlap", 1e-10};
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> r(0.0, 3.0), ph(0.0, 2 * kPi);
        for (int t = 0; t < 50; ++t) {
            const CoherentParams a(r(rng), ph(rng)), b(r(rng), ph(rng));
            const std::size_t D = default_cutoff(9.0);
            const double ov = std::norm(overlap(coherent_fock(a, D).state, coherent_fock(b, D).state));
            s.check(std::abs(ov - std::exp(-std::norm(a.alpha() - b.alpha()))), fmt::format("trial {}", t));
        }
        suites.push_back(std::move(s));
    }
    {
        Suite s{"circle_projection", 1e-10};
        for (double a : {0.5, 1.0, 2.0}) {
            const std::size_t D = default_cutoff(a * a);
            for (int n = -5; n <= 10; ++n) {
                guarded(s, fmt::format("abar={} n={}", a, n), [&] {
                    const auto v = circle_projection_check(a, n, D);
                    if (n < 0) {
                        s.check(std::sqrt(v.norm2()), fmt::format("abar={} n={}", a, n));
                    } else {
                        const auto c0 = coherent_fock(CoherentParams(a, 0.0), D).state;
                        FockVector want(D);
                        want[static_cast<std::size_t>(n)] = c0[static_cast<std::size_t>(n)];
                        double d = 0;
                        for (std::size_t m = 0; m <= D; ++m) d += std::norm(v[m] - want[m]);
                        s.check(std::sqrt(d), fmt::format("abar={} n={}", a, n));
                    }
                });
            }
        }
        suites.push_back(std::move(s));
    }
    {
        Suite s{"mu2_family", 1e-12};
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> gg(1.0, 10.0), mm(0.0, 3.0);
        for (int t = 0; t < 200; ++t) {
            const double g = gg(rng), m2 = mm(rng);
            if (g <= 1.0) continue;
            guarded(s, fmt::format("g={} mu2={}", g, m2), [&] {
                s.check(std::abs(pfp_bound(GaussianAmpSpec(g, m2)) - 1.0 / (g * g)), "pfp");
            });
        }
        for (double g : {1.5, 3.0}) {
            double prev = -1.0;
            for (double m2 : linspace(0.0, 3.0, 31)) {
                const GaussianAmpSpec spec(g, m2);
                s.check(prev - success_bound_mu(spec), fmt::format("success bound g={} mu2={}", g, m2));
                prev = success_bound_mu(spec);
                const auto st = output_stats(spec, Complex(1.0, 0.5));
                s.check(std::abs((st.var_q - st.var_w) - (st.var_w - st.var_p)) + std::abs(st.var_w - st.var_p - 0.5),
                        fmt::format("variance ladder g={} mu2={}", g, m2));
            }
        }
        for (std::size_t M = 1; M < 40; ++M) {
            s.check(cloning_fidelity(M + 1) - cloning_fidelity(M), fmt::format("cloning M={}", M));
            s.check(0.5 - cloning_fidelity(M), fmt::format("cloning floor M={}", M));
        }
        suites.push_back(std::move(s));
    }
    {
        Suite s{"usd_spectrum", 1e-10};
        for (std::size_t M = 2; M <= 40; M += 2) {
            for (double a : linspace(0.0, 6.0, 25)) {
                const auto sp = usd_success(SymmetricEnsemble(a, M));
                double sum = 0;
                for (double q : sp.q) sum += q;
                s.check(std::abs(sum - static_cast<double>(M)), fmt::format("sum q M={} abar={}", M, a));
                if (a > 0) {
                    const double mx = *std::max_element(sp.q.begin(), sp.q.end());
                    s.check(std::max({-sp.success, sp.success - 1.0, 1.0 - mx}),
                            fmt::format("ordering M={} abar={}", M, a));
                }
            }
        }
        for (std::size_t M = 2; M <= 12; ++M) {
            double prev = 0;
            for (double a : linspace(0.0, 6.0, 121)) {
                const double P = usd_success(SymmetricEnsemble(a, M)).success;
                s.check(prev - P, fmt::format("monotone M={} abar={}", M, a));
                prev = P;
            }
        }
        suites.push_back(std::move(s));
    }
    {
        Suite s{"usd_chernoff", 0.0};
        for (std::size_t M = 2; M <= 20; ++M) {
            for (double a : linspace(0.05, 6.0, 60)) {
                const SymmetricEnsemble e(a, M);
                if (!(2.0 * static_cast<double>(M) - 1.0 > a * a)) continue;
                guarded(s, fmt::format("M={} abar={}", M, a), [&] {
                    s.check(usd_exact_remainder(e) - chernoff_remainder(e) * (1 + 1e-12),
                            fmt::format("M={} abar={}", M, a));
                });
            }
        }
        suites.push_back(std::move(s));
    }
    {
        Suite s{"usd_amp_bound", 1e-4};
        for (std::size_t M = 2; M <= 6; ++M) {
            for (double g : {1.5, 2.0, 3.0}) {
                const double lim = std::pow(g, -2.0 * static_cast<double>(M - 1));
                const double r = amplifier_usd_bound(SymmetricEnsemble(1e-3, M), g).ratio;
                s.check(std::abs(r - lim) / lim, fmt::format("M={} g={}", M, g));
            }
        }
        suites.push_back(std::move(s));
    }
    {
        Suite s{"two_state_square", 1e-12};
        for (double g : {1.5, 2.0, 3.0}) {
            for (double a : linspace(0.0, 3.0, 31)) {
                const auto h = helstrom_two(Complex(a, 0), Complex(-a, 0), g);
                const auto u = usd_two(Complex(a, 0), Complex(-a, 0), g);
                s.check(std::abs(u.bound - h.bound * h.bound), fmt::format("g={} abar={}", g, a));
            }
        }
        suites.push_back(std::move(s));
    }
    {
        Suite s{"usd_dual_basis", 1e-8};
        for (std::size_t M = 2; M <= 8; ++M) {
            for (double a : {1.0, 1.5, 2.0, 2.5, 3.0}) {
                guarded(s, fmt::format("M={} abar={}", M, a), [&] {
                    const SymmetricEnsemble e(a, M);
                    const auto b = build_reciprocal_basis(e);
                    for (std::size_t j = 0; j < M; ++j) {
                        for (std::size_t k = 0; k < M; ++k) {
                            const auto ak = coherent_fock(CoherentParams(a, e.phase(k)), b.cutoff()).state;
                            const Complex ip = overlap(b.dual(j), ak);
                            s.check(std::abs(ip - (j == k ? 1.0 : 0.0)),
                                    fmt::format("M={} abar={} j={} k={}", M, a, j, k));
                        }
                    }
                    const auto ev = usd_failure_spectrum(b, e);
                    s.check(-ev.front(), fmt::format("E_fail >= 0 M={} abar={}", M, a));
                });
            }
        }
        suites.push_back(std::move(s));
    }
    {
        Suite s{"kraus_trace_decreasing", 1e-12};
        for (double g : {std::sqrt(2.0), 2.0, 3.0}) {
            for (std::size_t N = 0; N <= 25; ++N) {
                for (std::size_t k = 0; k <= 4; ++k) {
                    const auto kr = extended_kraus(AmplifierSpec(g, N, k), N + k + 30);
                    for (std::size_t m = 0; m <= kr.cutoff(); ++m) {
                        const double d = kr.gram_diagonal(m);
                        s.check(std::max(-d, d - 1.0), fmt::format("g={} N={} k={} m={}", g, N, k, m));
                    }
                }
            }
        }
        suites.push_back(std::move(s));
    }
    {
        Suite s{"kraus_closed_form_vs_matrix", 1e-10};
        Suite chern{"kraus_chernoff_sandwich", 0.0};
        Suite dn{"kraus_do_nothing", 0.0};
        for (const auto& p : kpanels) {
            const double top = std::sqrt(static_cast<double>(p.N)) + 3.0;
            for (double a : linspace(0.0, top, 61)) {
                for (std::size_t k = 0; k <= 2; ++k) {
                    const AmplifierSpec spec(p.g, p.N, k);
                    const auto m = apply_to_coherent(extended_kraus(spec, default_apply_cutoff(spec, a)), p.g, a);
                    const double pc = success_prob_extended(spec, a);
                    const double fc = fidelity_extended(spec, a);
                    const auto where = fmt::format("{} k={} abar={}", panel_tag(p), k, a);
                    s.check(pc > 0 ? std::abs(m.branch.prob - pc) / pc : m.branch.prob, "p " + where);
                    if (!m.branch.zero) s.check(std::abs(m.fidelity - fc), "F " + where);
                }
                const AmplifierSpec s0(p.g, p.N, 0);
                guarded(chern, fmt::format("{} abar={}", panel_tag(p), a), [&] {
                    const auto b = fidelity_chernoff_bounds(s0, a);
                    chern.check(b.side == BoundSide::lower ? b.bound - b.fidelity - 1e-12
                                                           : b.fidelity - b.bound - 1e-12 * b.fidelity,
                                fmt::format("{} abar={}", panel_tag(p), a));
                });
                guarded(dn, fmt::format("{} abar={}", panel_tag(p), a), [&] {
                    const auto r = pfp_and_do_nothing(s0, a);
                    dn.check(r.pfp - r.nothing * (1 + 1e-12), fmt::format("{} abar={}", panel_tag(p), a));
                });
            }
        }
        suites.push_back(std::move(s));
        suites.push_back(std::move(chern));
        suites.push_back(std::move(dn));
    }
    {
        Suite s{"kraus_monotonicity", 0.0};
        for (const auto& p : kpanels) {
            const auto grid = linspace(0.0, 1.5 * std::sqrt(static_cast<double>(p.N)), 121);
            const auto rep = verify_monotonicity(p.g, p.N, 3, grid);
            s.cases += rep.checks;
            for (const auto& v : rep.violations) {
                s.violations.push_back(fmt::format("{} {} k={} abar={} n={} m={} value={}", panel_tag(p), v.check,
                                                   v.k, v.abar, v.n, v.m, num(v.value)));
            }
            s.worst = std::max(s.worst, rep.max_g_sum);
        }
        suites.push_back(std::move(s));
    }
    {
        Suite s{"kraus_rotation_covariance", 1e-12};
        for (const auto& p : kpanels) {
            for (std::size_t k = 0; k <= 2; ++k) {
                const auto kr = extended_kraus(AmplifierSpec(p.g, p.N, k), p.N + k + 30);
                const auto rep = verify_rotation_covariance(kr, 20);
                s.check(rep.max_deviation, fmt::format("{} k={}", panel_tag(p), k));
            }
        }
        suites.push_back(std::move(s));
    }
    {
        Suite s{"snr_resolvability", 0.0};
        for (const auto& p : panels(c, {{std::sqrt(2.0), 2}, {3.0, 9}})) {
            const AmplifierSpec spec(p.g, p.N, 0);
            const auto grid = linspace(0.0, 2.0 * std::sqrt(static_cast<double>(p.N)), 81);
            for (std::size_t i = 1; i < grid.size(); ++i) {
                const double a = grid[i];
                guarded(s, fmt::format("{} abar={}", panel_tag(p), a), [&] {
                    const auto r = snr_report(spec, a);
                    const double b = std::sqrt(2.0) * a * (1 + 1e-12);
                    s.check(std::max(r.root_p_snr1, r.root_p_snr2) - b, fmt::format("{} abar={}", panel_tag(p), a));
                });
            }
        }
        suites.push_back(std::move(s));
    }
    return suites;
}

void verify(const RunConfig& c, RunResult& out) {
    const auto suites = run_suites(c);
    auto report = make(c, "verify_report", {"suite", "cases", "violations", "worst_excess", "tolerance"});
    auto viol = make(c, "verify_violations", {"suite", "detail"});
    for (const auto& s : suites) {
        report.rows.push_back({s.name, static_cast<double>(s.cases), static_cast<double>(s.violations.size()),
                               s.worst, s.tolerance});
        for (const auto& v : s.violations) viol.rows.push_back({s.name, v});
        if (!s.violations.empty()) out.verify_ok = false;
    }
    out.datasets = {std::move(report), std::move(viol)};
}

std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return num(*d);
    return std::get<std::string>(c);
}

// ---- argument parsing --------------------------------------------------------

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    return parts;
}

double to_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + s + "'");
    }
    if (used != s.size()) throw UsageError("not a number: '" + s + "'");
    return v;
}

std::size_t to_count(const std::string& s) {
    const double v = to_double(s);
    if (!(v >= 0) || v != std::floor(v) || v > 1e9) throw UsageError("not a nonnegative integer: '" + s + "'");
    return static_cast<std::size_t>(v);
}

// "2..12", "2..40:2" or "2,4,8".
std::vector<std::size_t> parse_counts(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& part : split(s, ',')) {
        const auto dots = part.find("..");
        if (dots == std::string::npos) {
            out.push_back(to_count(part));
            continue;
        }
        std::string hi = part.substr(dots + 2);
        std::size_t step = 1;
        if (const auto colon = hi.find(':'); colon != std::string::npos) {
            step = to_count(hi.substr(colon + 1));
            hi = hi.substr(0, colon);
        }
        const std::size_t a = to_count(part.substr(0, dots)), b = to_count(hi);
        if (step == 0 || b < a) throw UsageError("empty range '" + part + "'");
        for (std::size_t m = a; m <= b; m += step) out.push_back(m);
    }
    if (out.empty()) throw UsageError("empty list '" + s + "'");
    return out;
}

std::vector<double> parse_reals(const std::string& s) {
    std::vector<double> out;
    for (const auto& part : split(s, ',')) out.push_back(to_double(part));
    if (out.empty()) throw UsageError("empty list '" + s + "'");
    return out;
}

// "min:max:steps" or "min:max".
AlphaRange parse_alpha(const std::string& s) {
    const auto parts = split(s, ':');
    if (parts.size() < 2 || parts.size() > 3) throw UsageError("--alpha expects min:max[:steps]");
    AlphaRange r;
    r.min = to_double(parts[0]);
    r.max = to_double(parts[1]);
    if (parts.size() == 3) r.steps = to_count(parts[2]);
    return r;
}

}  // namespace

std::string to_string(Subcommand s) { return names().at(s); }

void RunConfig::validate() const {
    if (alpha) {
        if (alpha->steps < 2) throw UsageError("alpha sweeps need at least 2 steps");
        if (!(alpha->min >= 0.0) || !(alpha->max > alpha->min)) {
            throw UsageError("alpha range must satisfy 0 <= min < max");
        }
    }
    if (g && !(*g > 1.0)) throw UsageError("--g must exceed 1");
    for (double a : alpha_values) {
        if (!(a > 0.0)) throw UsageError("--alpha-values entries must be positive");
    }
    for (double a : alpha2) {
        if (!(a >= 0.0)) throw UsageError("--alpha2 entries must be nonnegative");
    }
    for (double e : eps) {
        if (!(e >= 1e-5 && e <= 0.5)) throw UsageError("--eps entries must lie in [1e-5, 0.5]");
    }
    if (subcommand == Subcommand::fig3) {
        for (auto m : M) {
            if (m < 2 || m > 40) throw UsageError("fig3 --M values must lie in [2, 40]");
        }
    } else {
        for (auto m : M) {
            if (m == 0) throw UsageError("--M values must be positive");
        }
    }
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
    auto join = [](const auto& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ",") + num(static_cast<double>(x));
        return s.empty() ? std::string("default") : s;
    };
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("subcommand", to_string(subcommand));
    e.emplace_back("g", g ? num(*g) : "default");
    e.emplace_back("N", N ? std::to_string(*N) : "default");
    e.emplace_back("M", join(M));
    e.emplace_back("k", join(k));
    e.emplace_back("alpha", alpha ? fmt::format("{}:{}:{}", num(alpha->min), num(alpha->max), alpha->steps)
                                  : "default");
    e.emplace_back("alpha_values", join(alpha_values));
    e.emplace_back("alpha2", join(alpha2));
    e.emplace_back("eps", join(eps));
    e.emplace_back("cutoff", cutoff ? std::to_string(*cutoff) : "auto");
    e.emplace_back("format", format == Format::csv ? "csv" : "json");
    return e;
}

RunResult compute(const RunConfig& config) {
    config.validate();
    RunResult r;
    switch (config.subcommand) {
        case Subcommand::fig3: fig3(config, r); break;
        case Subcommand::fig4: fig4(config, r); break;
        case Subcommand::fig5: fig5(config, r); break;
        case Subcommand::fig6: fig6(config, r); break;
        case Subcommand::fig7: fig7(config, r); break;
        case Subcommand::fig8: fig8_9(config, r, false); break;
        case Subcommand::fig9: fig8_9(config, r, true); break;
        case Subcommand::usd_table: usd_table(config, r); break;
        case Subcommand::bounds: bounds(config, r); break;
        case Subcommand::verify: verify(config, r); break;
    }
    return r;
}

std::string render_csv(const Dataset& d) {
    std::string s;
    for (const auto& [k, v] : d.metadata) s += fmt::format("# {}={}\n", k, v);
    for (std::size_t i = 0; i < d.columns.size(); ++i) s += (i ? "," : "") + d.columns[i];
    s += '\n';
    for (const auto& row : d.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + cell_text(row[i]);
        s += '\n';
    }
    return s;
}

std::string render_json(const Dataset& d) {
    nlohmann::ordered_json j;
    j["metadata"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : d.metadata) j["metadata"][k] = v;
    j["columns"] = d.columns;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : d.rows) {
        auto r = nlohmann::ordered_json::array();
        for (const auto& c : row) {
            if (const auto* x = std::get_if<double>(&c)) {
                // JSON has no nan/inf; they become null.
                if (std::isfinite(*x)) {
                    r.push_back(*x);
                } else {
                    r.push_back(nullptr);
                }
            } else {
                r.push_back(std::get<std::string>(c));
            }
        }
        j["rows"].push_back(std::move(r));
    }
    return j.dump(1) + "\n";
}

std::vector<std::filesystem::path> write_datasets(const RunResult& result, const RunConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + config.out_dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    for (const auto& d : result.datasets) {
        const bool csv = config.format == Format::csv;
        const auto path = config.out_dir / (d.name + (csv ? ".csv" : ".json"));
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + path.string() + " for writing");
        f << (csv ? render_csv(d) : render_json(d));
        f.close();
        if (!f) throw IoError("write failed for " + path.string());
        written.push_back(path);
    }
    return written;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    RunResult result;
    try {
        result = compute(config);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    try {
        for (const auto& p : write_datasets(result, config)) out << p.string() << '\n';
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return 3;
    }
    if (config.subcommand == Subcommand::verify) {
        const auto& report = result.datasets.front();
        for (const auto& row : report.rows) {
            const double v = std::get<double>(row[2]);
            out << fmt::format("{:<30} cases={:<8} violations={}\n", std::get<std::string>(row[0]),
                               num(std::get<double>(row[1])), num(v));
        }
        if (!result.verify_ok) {
            err << "verification failed; see verify_violations\n";
            return 1;
        }
    }
    return 0;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Probabilistic immaculate amplification: figure datasets and bound checks", "immac"};
    app.require_subcommand(1);

    std::string g, N, M, k, alpha, alpha_values, alpha2, eps, cutoff, out_dir, format = "csv";
    std::map<CLI::App*, Subcommand> subs;
    for (const auto& [sc, name] : names()) {
        auto* s = app.add_subcommand(name, "write the " + name + " dataset(s)");
        s->add_option("--g", g, "amplitude gain g > 1");
        s->add_option("--N", N, "high-fidelity disk size N (photons)");
        s->add_option("--M", M, "state counts: 2..12, 2..40:2 or 2,4,8");
        s->add_option("--k", k, "strip offsets, same syntax as --M");
        s->add_option("--alpha", alpha, "amplitude sweep min:max[:steps]");
        s->add_option("--alpha-values", alpha_values, "comma list of input amplitudes (fig7)");
        s->add_option("--alpha2", alpha2, "comma list of abar^2 values (fig4)");
        s->add_option("--eps", eps, "comma list of epsilon values (fig3)");
        s->add_option("--cutoff", cutoff, "Fock cutoff override (>= automatic rule)");
        s->add_option("--out", out_dir, "output directory (default $IMMAC_OUT_DIR or .)");
        s->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        subs[s] = sc;
    }

    try {
        std::vector<std::string> args;
        for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    RunConfig c;
    try {
        for (auto* s : app.get_subcommands()) c.subcommand = subs.at(s);
        if (!g.empty()) c.g = to_double(g);
        if (!N.empty()) c.N = to_count(N);
        if (!M.empty()) c.M = parse_counts(M);
        if (!k.empty()) c.k = parse_counts(k);
        if (!alpha.empty()) c.alpha = parse_alpha(alpha);
        if (!alpha_values.empty()) c.alpha_values = parse_reals(alpha_values);
        if (!alpha2.empty()) c.alpha2 = parse_reals(alpha2);
        if (!eps.empty()) c.eps = parse_reals(eps);
        if (!cutoff.empty()) c.cutoff = to_count(cutoff);
        c.format = format == "json" ? Format::json : Format::csv;
        if (!out_dir.empty()) {
            c.out_dir = out_dir;
        } else if (const char* env = std::getenv("IMMAC_OUT_DIR"); env && *env) {
            c.out_dir = env;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    }
    return run(c, out, err);
}

}  // namespace immac::cli
