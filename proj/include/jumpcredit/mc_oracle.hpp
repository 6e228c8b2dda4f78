#ifndef JUMPCREDIT_MC_ORACLE_HPP
#define JUMPCREDIT_MC_ORACLE_HPP

#include <jumpcredit/errors.hpp>
#include <jumpcredit/levy_models.hpp>
#include <jumpcredit/parallel.hpp>
#include <jumpcredit/pricing.hpp>
#include <jumpcredit/quadrature.hpp>
#include <jumpcredit/special_fn.hpp>

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

namespace jumpcredit {

    struct McEstimate {
        double estimate = 0.0;
        double std_error = 0.0;
        std::uint64_t n_paths = 0;
        std::uint64_t seed = 0;
    };

    namespace mc {

        inline std::uint64_t splitmix64(std::uint64_t& state) {
            std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
            return z ^ (z >> 31);
        }

        //! Independent stream for (seed, index): the draws of path i never depend on other paths.
        class PathRng {
          public:
            PathRng(std::uint64_t seed, std::uint64_t index) {
                std::uint64_t s = seed;
                const std::uint64_t a = splitmix64(s);
                std::uint64_t t = index ^ 0xD1B54A32D192ED03ull;
                state_ = a ^ splitmix64(t);
            }

            std::uint64_t next() { return splitmix64(state_); }

            //! Uniform on the open interval (0, 1).
            double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

            double normal() {
                const double u1 = uniform();
                const double u2 = uniform();
                return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
            }

          private:
            std::uint64_t state_;
        };

        //! log of a Gamma(shape, 1) variate; Marsaglia-Tsang, with the shape+1 boost below 1.
        inline double log_gamma_variate(PathRng& rng, double shape) {
            double log_boost = 0.0;
            double a = shape;
            if (a < 1.0) {
                log_boost = std::log(rng.uniform()) / a;
                a += 1.0;
            }
            const double d = a - 1.0 / 3.0;
            const double c = 1.0 / std::sqrt(9.0 * d);
            for (;;) {
                double x, v;
                do {
                    x = rng.normal();
                    v = 1.0 + c * x;
                } while (v <= 0.0);
                v = v * v * v;
                const double u = rng.uniform();
                const double x2 = x * x;
                if (u < 1.0 - 0.0331 * x2 * x2 || std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v)))
                    return std::log(d * v) + log_boost;
            }
        }

        inline double gamma_variate(PathRng& rng, double shape) { return std::exp(log_gamma_variate(rng, shape)); }

        //! Inverse Gaussian with the given mean and shape (Michael-Schucany-Haas).
        inline double inverse_gaussian_variate(PathRng& rng, double mean, double shape) {
            const double n = rng.normal();
            const double w = mean * n * n / (2.0 * shape);
            // smaller root of the quadratic, written without cancellation
            const double x = mean / (1.0 + w + std::sqrt(w * (2.0 + w)));
            const double u = rng.uniform();
            return u <= mean / (mean + x) ? x : mean * mean / x;
        }

        inline double draw_increment(const ModelParams& params, double dt, PathRng& rng) {
            switch (params.kind()) {
                case ModelKind::Merton: return params.as<MertonParams>().sigma * std::sqrt(dt) * rng.normal();
                case ModelKind::NegGamma: {
                    const auto& g = params.as<NegGammaParams>();
                    return -gamma_variate(rng, g.rho * dt) / g.lambda;
                }
                case ModelKind::NegIG: {
                    const auto& g = params.as<NegIGParams>();
                    return -inverse_gaussian_variate(rng, g.mu * dt, g.lambda * dt * dt);
                }
                case ModelKind::SymVG: {
                    const auto& v = params.as<SymVGParams>();
                    const double clock = v.nu * gamma_variate(rng, dt / v.nu);
                    return v.sigma * std::sqrt(clock) * rng.normal();
                }
            }
            return 0.0;
        }

        //! Running count, mean and centered sum of squares; merged with Chan's update.
        struct Accumulator {
            double n = 0.0;
            double mean = 0.0;
            double m2 = 0.0;

            void add(double x) {
                n += 1.0;
                const double d = x - mean;
                mean += d / n;
                m2 += d * (x - mean);
            }

            static Accumulator merge(const Accumulator& a, const Accumulator& b) {
                if (a.n == 0.0) return b;
                if (b.n == 0.0) return a;
                Accumulator r;
                r.n = a.n + b.n;
                const double d = b.mean - a.mean;
                r.mean = a.mean + d * b.n / r.n;
                r.m2 = a.m2 + b.m2 + d * d * a.n * b.n / r.n;
                return r;
            }

            McEstimate estimate(std::uint64_t seed) const {
                const double var = n > 1.0 ? m2 / (n - 1.0) : 0.0;
                return {mean, std::sqrt(var / n), static_cast<std::uint64_t>(n), seed};
            }
        };

        //! Pairwise merge over blocks in index order, independent of how blocks were scheduled.
        inline Accumulator pairwise(const std::vector<Accumulator>& blocks, std::size_t lo, std::size_t hi) {
            if (hi - lo == 1) return blocks[lo];
            const std::size_t mid = lo + (hi - lo) / 2;
            return Accumulator::merge(pairwise(blocks, lo, mid), pairwise(blocks, mid, hi));
        }

        inline constexpr std::size_t kBlock = 4096;

        //! Evaluates n_stats statistics per path (stat(i, X, out)) and reduces each to an estimate.
        template <std::size_t NStats, class Stat>
        std::array<McEstimate, NStats> reduce_paths(const ModelParams& params, double T, std::uint64_t n_paths,
                                                    std::uint64_t seed, Stat stat) {
            const std::size_t nblocks = static_cast<std::size_t>((n_paths + kBlock - 1) / kBlock);
            std::vector<std::array<Accumulator, NStats>> acc(nblocks);
            jumpcredit::detail::parallel_for(nblocks, [&](std::size_t b) {
                const std::uint64_t lo = b * kBlock;
                const std::uint64_t hi = std::min<std::uint64_t>(n_paths, lo + kBlock);
                for (std::uint64_t i = lo; i < hi; ++i) {
                    PathRng rng(seed, i);
                    const double x = draw_increment(params, T, rng);
                    std::array<double, NStats> out;
                    stat(x, out);
                    for (std::size_t s = 0; s < NStats; ++s) acc[b][s].add(out[s]);
                }
            });
            std::array<McEstimate, NStats> res;
            for (std::size_t s = 0; s < NStats; ++s) {
                std::vector<Accumulator> col(nblocks);
                for (std::size_t b = 0; b < nblocks; ++b) col[b] = acc[b][s];
                res[s] = pairwise(col, 0, nblocks).estimate(seed);
            }
            return res;
        }

    }

    //! i.i.d. draws of X_dt; element i comes from stream (seed, i).
    inline std::vector<double> simulate_increments(const ModelParams& params, double dt, std::size_t n,
                                                   std::uint64_t seed) {
        if (!(dt > 0.0)) throw DomainError("simulate_increments: dt must be positive");
        std::vector<double> x(n);
        detail::parallel_for((n + mc::kBlock - 1) / mc::kBlock, [&](std::size_t b) {
            const std::size_t hi = std::min(n, (b + 1) * mc::kBlock);
            for (std::size_t i = b * mc::kBlock; i < hi; ++i) {
                mc::PathRng rng(seed, i);
                x[i] = mc::draw_increment(params, dt, rng);
            }
        });
        return x;
    }

    //! Discounted payoff, default indicator and martingale test statistic from the same terminal draws.
    struct TerminalEstimates {
        McEstimate equity;
        McEstimate default_probability;
        McEstimate martingale;
    };

    inline TerminalEstimates mc_terminal(const ModelParams& params, double asset_value, const DebtSpec& debt,
                                         double pd_rate, std::uint64_t n_paths, std::uint64_t seed) {
        debt.validate();
        if (n_paths < 100) throw DomainError("Monte Carlo needs at least 100 paths");
        const double T = debt.maturity;
        const double omega = martingale_adjustment(params);
        const double disc = std::exp(-debt.rate * T);
        const double fwd = asset_value * std::exp((debt.rate + omega) * T);
        const double k_pd = distance_input(params, asset_value, debt, pd_rate);
        const auto est = mc::reduce_paths<3>(params, T, n_paths, seed, [&](double x, std::array<double, 3>& out) {
            out[0] = disc * std::max(fwd * std::exp(x) - debt.face_value, 0.0);
            out[1] = x < -k_pd ? 1.0 : 0.0;
            out[2] = std::exp(omega * T + x);
        });
        return {est[0], est[1], est[2]};
    }

    inline McEstimate mc_equity_value(const ModelParams& params, double asset_value, const DebtSpec& debt,
                                      std::uint64_t n_paths, std::uint64_t seed) {
        return mc_terminal(params, asset_value, debt, debt.rate, n_paths, seed).equity;
    }

    inline McEstimate mc_default_probability(const ModelParams& params, double asset_value, const DebtSpec& debt,
                                             double rate, std::uint64_t n_paths, std::uint64_t seed) {
        if (params.one_sided() && distance_input(params, asset_value, debt, rate) <= 0.0)
            return {1.0, 0.0, n_paths, seed};
        return mc_terminal(params, asset_value, debt, rate, n_paths, seed).default_probability;
    }

    //! Mean of e^{omega T + X_T}; should be 1.
    inline McEstimate mc_martingale_check(const ModelParams& params, double T, std::uint64_t n_paths,
                                          std::uint64_t seed) {
        const double omega = martingale_adjustment(params);
        return mc::reduce_paths<1>(params, T, n_paths, seed, [&](double x, std::array<double, 1>& out) {
            out[0] = std::exp(omega * T + x);
        })[0];
    }

    namespace mc::detail {

        //! Root of a monotone function on [lo, hi] to near machine precision.
        template <class F>
        double bracketed_root(F f, double lo, double hi) {
            double flo = f(lo);
            double fhi = f(hi);
            if (flo == 0.0) return lo;
            if (fhi == 0.0) return hi;
            if ((flo > 0.0) == (fhi > 0.0)) throw DomainError("quantile: root not bracketed");
            std::uintmax_t iters = 200;
            const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                             boost::math::tools::eps_tolerance<double>(50), iters);
            return 0.5 * (r.first + r.second);
        }

        inline double log_add(double a, double b) {
            if (a < b) std::swap(a, b);
            if (b == -std::numeric_limits<double>::infinity()) return a;
            return a + std::log1p(std::exp(b - a));
        }

        //! log P(a, e^u) and log Q(a, e^u), valid when e^u underflows.
        inline double log_lower_gamma(double a, double u) {
            const double z = std::exp(u);
            if (z < a + 1.0) {
                double term = 1.0 / a, sum = term, ap = a;
                for (int n = 1; n < 100000; ++n) {
                    ap += 1.0;
                    term *= z / ap;
                    sum += term;
                    if (term < sum * 1e-17) break;
                }
                return a * u - z - log_abs_gamma(a) + std::log(sum);
            }
            return std::log1p(-reg_upper_gamma(a, z));
        }

        inline double log_upper_gamma(double a, double u) {
            const double z = std::exp(u);
            if (z < a + 1.0) return std::log1p(-std::exp(log_lower_gamma(a, u)));
            return std::log(reg_upper_gamma(a, z));
        }

        inline double log_shuster_phi(double y, double t, double lambda, double mu) {
            const double s = t * std::sqrt(lambda / y);
            const double r = y / (mu * t);
            return log_add(log_std_normal_cdf(s * (r - 1.0)),
                           2.0 * lambda * t / mu + log_std_normal_cdf(-s * (r + 1.0)));
        }

        //! P[X_t > x] for symVG, x >= 0, using X = Z1 - Z2 with Z_i ~ Gamma(t/nu, rate c).
        inline double symvg_upper_tail(const SymVGParams& v, double x, double t) {
            const double a = t / v.nu;
            const double c = std::sqrt(2.0 / v.nu) / v.sigma;
            const double lg = log_abs_gamma(a);
            const auto f = [&](double w) {
                if (w <= 0.0) return 0.0;
                return reg_upper_gamma(a, c * x + w) * std::exp((a - 1.0) * std::log(w) - w - lg);
            };
            return quad::upper(f, 0.0, 1e-15, 1e-12).value;
        }

        //! Expands hi until f changes sign relative to f(lo).
        template <class F>
        double bracket_up(F f, double lo, double step) {
            const bool s = f(lo) > 0.0;
            double hi = lo + step;
            for (int i = 0; (f(hi) > 0.0) == s; ++i) {
                if (i > 200) throw DomainError("quantile: could not bracket");
                step *= 2.0;
                hi = lo + step;
            }
            return hi;
        }

    }

    //! Quantile of X_t: the x with P[X_t <= x] = p.
    inline double increment_quantile(const ModelParams& params, double p, double t) {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("increment_quantile: p must lie in (0,1)");
        if (!(t > 0.0)) throw DomainError("increment_quantile: t must be positive");
        using namespace mc::detail;
        switch (params.kind()) {
            case ModelKind::Merton:
                return params.as<MertonParams>().sigma * std::sqrt(t) * inverse_std_normal_cdf(p);
            case ModelKind::NegGamma: {
                // p = Q(a, -lambda x); solve in u = log z
                const auto& g = params.as<NegGammaParams>();
                const double a = g.rho * t;
                const auto f = p <= 0.5 ? std::function<double(double)>([&](double u) { return log_upper_gamma(a, u) - std::log(p); })
                                        : std::function<double(double)>([&](double u) { return std::log(1.0 - p) - log_lower_gamma(a, u); });
                // f decreasing in u in both forms
                double lo = std::log(a) - 1.0, hi = lo + 1.0;
                while (f(lo) < 0.0) lo -= 2.0 * (1.0 + std::fabs(lo));
                while (f(hi) > 0.0) hi += 1.0;
                const double u = bracketed_root(f, lo, hi);
                return -std::exp(u) / g.lambda;
            }
            case ModelKind::NegIG: {
                // p = 1 - phi(y), y = -x
                const auto& g = params.as<NegIGParams>();
                const auto f = p <= 0.5
                    ? std::function<double(double)>([&](double u) {
                          return std::log(shuster_phi_complement(std::exp(u), t, g.lambda, g.mu)) - std::log(p);
                      })
                    : std::function<double(double)>([&](double u) {
                          return std::log(1.0 - p) - log_shuster_phi(std::exp(u), t, g.lambda, g.mu);
                      });
                const double m = std::log(g.mu * t);
                double lo = m - 1.0, hi = m + 1.0;
                while (f(lo) < 0.0) lo -= 1.0;
                while (f(hi) > 0.0) hi += 1.0;
                return -std::exp(bracketed_root(f, lo, hi));
            }
            case ModelKind::SymVG: {
                if (p == 0.5) return 0.0;
                const auto& v = params.as<SymVGParams>();
                const double tail = p > 0.5 ? 1.0 - p : p;
                const auto f = [&](double x) { return std::log(symvg_upper_tail(v, x, t)) - std::log(tail); };
                const double hi = bracket_up(f, 0.0, v.sigma * std::sqrt(t));
                const double x = bracketed_root(f, 0.0, hi);
                return p > 0.5 ? x : -x;
            }
        }
        return 0.0;
    }

    enum class StratifiedOrder {
        Shuffled,  // seeded Fisher-Yates permutation
        Balanced   // greedy order keeping the running sum near zero
    };

    //! n increments whose empirical distribution matches X_dt stratum by stratum: the midpoint quantile of each
    //! of the n equal-probability strata, except the two outermost, which are placed to reproduce the stratum's
    //! contribution to the fourth central moment.
    inline std::vector<double> stratified_increments(const ModelParams& params, double dt, std::size_t n,
                                                     std::uint64_t seed,
                                                     StratifiedOrder order = StratifiedOrder::Shuffled) {
        if (n < 4) throw DomainError("stratified_increments: need n >= 4");
        const double N = static_cast<double>(n);
        std::vector<double> x(n);
        const bool symmetric = params.kind() == ModelKind::Merton || params.kind() == ModelKind::SymVG;
        const std::size_t half = symmetric ? n / 2 : n;
        detail::parallel_for(half, [&](std::size_t i) {
            x[i] = increment_quantile(params, (static_cast<double>(i) + 0.5) / N, dt);
        });
        if (symmetric) {
            for (std::size_t i = half; i < n; ++i) x[i] = -x[n - 1 - i];
            if (n % 2) x[n / 2] = 0.0;
        }

        const double m = expected_increment(params, dt);
        const auto fourth = [&](double y) {
            const double lf = log_density(params, y, dt);
            if (lf == -std::numeric_limits<double>::infinity()) return 0.0;
            const double d = std::fabs(y - m);
            return d == 0.0 ? 0.0 : std::exp(4.0 * std::log(d) + lf);
        };
        // stratum integrals only need accuracy relative to the whole fourth moment
        const auto mom = model_moments(params);
        const double var_dt = mom.variance * dt;
        const double abs_tol = 1e-10 * (mom.excess_kurtosis / dt + 3.0) * var_dt * var_dt;
        {
            // lowest stratum (-inf, q(1/n)]
            const double q = increment_quantile(params, 1.0 / N, dt);
            const auto g = [&](double u) { return fourth(q - u); };
            const double i4 = quad::upper(g, 0.0, abs_tol, 1e-6).value;
            x[0] = m - std::pow(N * i4, 0.25);
        }
        {
            // highest stratum [q(1-1/n), sup]
            const double q = increment_quantile(params, 1.0 - 1.0 / N, dt);
            double i4;
            if (params.one_sided()) {
                const auto g = [&](double y, double yc) { return fourth(y > 0.5 * q ? -yc : y); };
                i4 = quad::finite(g, q, 0.0, abs_tol, 1e-6).value;
            } else {
                i4 = quad::upper([&](double u) { return fourth(q + u); }, 0.0, abs_tol, 1e-6).value;
            }
            x[n - 1] = m + std::pow(N * i4, 0.25);
        }

        if (order == StratifiedOrder::Shuffled) {
            mc::PathRng rng(seed, 0);
            for (std::size_t i = n - 1; i > 0; --i) {
                const std::size_t j = static_cast<std::size_t>(rng.next() % (i + 1));
                std::swap(x[i], x[j]);
            }
            return x;
        }
        // Balanced: demeaned values taken largest-first from the side that pulls the running sum back to 0
        std::sort(x.begin(), x.end());
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / N;
        std::vector<double> out;
        out.reserve(n);
        std::size_t lo = 0, hi = n;
        double s = 0.0;
        while (lo < hi) {
            const double v = s > 0.0 ? x[lo++] : x[--hi];
            out.push_back(v);
            s += v - mean;
        }
        return out;
    }

}

#endif
