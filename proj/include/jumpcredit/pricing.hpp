#ifndef JUMPCREDIT_PRICING_HPP
#define JUMPCREDIT_PRICING_HPP

#include <jumpcredit/errors.hpp>
#include <jumpcredit/levy_models.hpp>
#include <jumpcredit/quadrature.hpp>
#include <jumpcredit/special_fn.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace jumpcredit {

    //! Zero-coupon debt: face value K due at T (years), flat continuously compounded rate r.
    struct DebtSpec {
        double face_value;
        double maturity;
        double rate = 0.0;

        void validate() const {
            if (!(face_value > 0.0) || !std::isfinite(face_value)) throw DomainError("debt face value must be positive");
            if (!(maturity > 0.0) || !std::isfinite(maturity)) throw DomainError("debt maturity must be positive");
            if (!std::isfinite(rate)) throw DomainError("rate must be finite");
        }
        double discounted_face() const { return face_value * std::exp(-rate * maturity); }
    };

    struct SeriesControl {
        int n_max = 15;
        double pole_epsilon = 1e-9;
        // symVG: price by quadrature where the truncated series has not settled or loses digits to cancellation
        bool quadrature_fallback = false;
    };

    //! k = ln(V_A/K) + (rate + omega) T.
    inline double distance_input(const ModelParams& params, double asset_value, const DebtSpec& debt, double rate) {
        if (!(asset_value > 0.0)) throw DomainError("asset value must be positive");
        return std::log(asset_value / debt.face_value) + (rate + martingale_adjustment(params)) * debt.maturity;
    }

    namespace detail {

        inline bool near_pole(double x, double eps) {
            const double n = std::nearbyint(x);
            return n <= 0.0 && std::fabs(x - n) < eps;
        }

        inline bool is_pole(double x) { return x <= 0.0 && x == std::nearbyint(x); }

        //! Gamma(num)/Gamma(den) as (log magnitude, sign); den at a pole gives a zero (sign 0).
        struct SignedLog {
            double log_abs;
            int sign;
        };

        inline SignedLog gamma_ratio(double num, double den) {
            if (is_pole(den)) return {-std::numeric_limits<double>::infinity(), 0};
            int sn = 1;
            int sd = 1;
            const double ln = log_abs_gamma(num, &sn);
            const double ld = log_abs_gamma(den, &sd);
            return {ln - ld, sn * sd};
        }

        inline double first_arg(int n1, int n2, double t_nu) { return (-n1 + n2 + 1) / 2.0 + t_nu; }
        inline double second_arg(int n1, int n2, double t_nu) { return -2.0 * n1 - n2 - 1.0 - 2.0 * t_nu; }

    }

    //! One term a_{n1,n2}(X, Y) of the symVG double series.
    inline double symvg_coefficient(int n1, int n2, double X, double Y, double t_nu, double pole_epsilon = 1e-9) {
        if (n1 < 0 || n2 < 1) throw DomainError("symvg_coefficient: need n1 >= 0, n2 >= 1");
        if (Y == 0.0) throw DomainError("symvg_coefficient: Y must be nonzero");
        const double g1 = detail::first_arg(n1, n2, t_nu);
        const double g2 = detail::second_arg(n1, n2, t_nu);
        if (detail::near_pole(g1, pole_epsilon) || detail::near_pole(g2, pole_epsilon))
            throw PoleProximity("symvg_coefficient: Gamma argument next to a pole");
        const double ratio = -X / Y;
        const double e2 = 2.0 * n1 + 1.0 + 2.0 * t_nu;
        if (ratio < 0.0 && e2 != std::nearbyint(e2))
            throw DomainError("symvg_coefficient: -X/Y must be nonnegative for a non-integer power");
        const double lfact = log_abs_gamma(n1 + 1.0);
        const double alt = n1 % 2 ? -1.0 : 1.0;

        double first = 0.0;
        const auto r1 = detail::gamma_ratio(g1, (-n1 + n2) / 2.0 + 1.0);
        if (r1.sign != 0) first = r1.sign * std::exp(r1.log_abs - lfact) * std::pow(ratio, n1) * std::pow(Y, n2);

        double second = 0.0;
        const auto r2 = detail::gamma_ratio(g2, -n1 + 0.5 - t_nu);
        if (r2.sign != 0 && ratio != 0.0)
            second = 2.0 * r2.sign * std::exp(r2.log_abs - lfact) * std::pow(ratio, e2) * std::pow(-X, n2);
        return alt * (first + second);
    }

    //! Truncated symVG series for one (sigma, nu, T), collapsed into two power series in r = |k|/sigma_nu.
    class SymVGSeries {
      public:
        SymVGSeries(const SymVGParams& p, double maturity, const SeriesControl& ctrl = {})
        : p_(p), ctrl_(ctrl) {
            if (ctrl.n_max < 1) throw DomainError("n_max must be at least 1");
            if (!(maturity > 0.0)) throw DomainError("maturity must be positive");
            maturity_requested_ = maturity;
            maturity_ = maturity;
            for (int attempt = 0; has_pole(maturity_); ++attempt) {
                if (attempt > 10000) throw PoleProximity("symVG series: could not move T off the Gamma poles");
                maturity_ += 1e-9;
            }
            t_nu_ = maturity_ / p.nu - 0.5;
            sigma_nu_ = p.sigma * std::sqrt(p.nu / 2.0);
            log_gamma_t_ = log_abs_gamma(maturity_ / p.nu);
            build(+1, neg_);
            build(-1, pos_);
        }

        double maturity_used() const { return maturity_; }
        bool perturbed() const { return maturity_ != maturity_requested_; }
        double t_nu() const { return t_nu_; }
        double sigma_nu() const { return sigma_nu_; }

        //! Equity value for asset value V_A; k is taken at the (possibly perturbed) maturity.
        double value(double asset_value, double face_value, double rate, double omega) const {
            return std::max(raw_value(asset_value, face_value, rate, omega), 0.0);
        }

        //! Truncated series without the floor at zero; a diverging truncation shows up here.
        double raw_value(double asset_value, double face_value, double rate, double omega) const {
            return evaluate(asset_value, face_value, rate, omega).value;
        }

        //! Series value with an error estimate: rounding bound of the alternating sum plus the last terms kept.
        struct Estimate {
            double value;
            double error;
        };

        Estimate evaluate(double asset_value, double face_value, double rate, double omega) const {
            const double k = std::log(asset_value / face_value) + (rate + omega) * maturity_;
            const double disc = face_value * std::exp(-rate * maturity_);
            const double pre = disc / (2.0 * std::exp(log_gamma_t_));
            const auto s = k <= 0.0 ? neg_.eval(-k / sigma_nu_, t_nu_) : pos_.eval(k / sigma_nu_, t_nu_);
            const double err = pre * (64.0 * std::numeric_limits<double>::epsilon() * s.abs_sum + s.last_terms);
            if (k <= 0.0) return {pre * s.sum, err};
            return {asset_value - disc - pre * s.sum, err};
        }

      private:
        struct Branch {
            std::vector<double> a;  // coefficient of r^{n1}
            std::vector<double> b;  // coefficient of r^{1+2 T_nu} r^{2 n1 + n2}

            struct Sum {
                double sum;
                double abs_sum;     // same series with absolute coefficients
                double last_terms;  // magnitude of the highest-order terms kept
            };

            Sum eval(double r, double t_nu) const {
                double s1 = 0.0, m1 = 0.0;
                for (auto it = a.rbegin(); it != a.rend(); ++it) {
                    s1 = s1 * r + *it;
                    m1 = m1 * r + std::fabs(*it);
                }
                double last = a.empty() ? 0.0 : std::fabs(a.back()) * std::pow(r, static_cast<double>(a.size() - 1));
                if (r == 0.0) return {s1, m1, last};
                double s2 = 0.0, m2 = 0.0;
                for (auto it = b.rbegin(); it != b.rend(); ++it) {
                    s2 = s2 * r + *it;
                    m2 = m2 * r + std::fabs(*it);
                }
                const double lead = std::pow(r, 1.0 + 2.0 * t_nu);
                if (!b.empty()) last += lead * std::fabs(b.back()) * std::pow(r, static_cast<double>(b.size() - 1));
                return {s1 + lead * s2, m1 + lead * m2, last};
            }
        };

        bool has_pole(double maturity) const {
            const double t_nu = maturity / p_.nu - 0.5;
            for (int n1 = 0; n1 <= ctrl_.n_max; ++n1) {
                for (int n2 = 1; n2 <= ctrl_.n_max; ++n2) {
                    if (detail::near_pole(detail::first_arg(n1, n2, t_nu), ctrl_.pole_epsilon)) return true;
                    if (detail::near_pole(detail::second_arg(n1, n2, t_nu), ctrl_.pole_epsilon)) return true;
                }
            }
            return false;
        }

        void build(int y_sign, Branch& br) const {
            const int n = ctrl_.n_max;
            br.a.assign(n + 1, 0.0);
            br.b.assign(3 * n + 1, 0.0);
            const double log_y = std::log(sigma_nu_);
            for (int n1 = 0; n1 <= n; ++n1) {
                const double lfact = log_abs_gamma(n1 + 1.0);
                const int alt = n1 % 2 ? -1 : 1;
                for (int n2 = 1; n2 <= n; ++n2) {
                    const int ysgn = (y_sign < 0 && n2 % 2) ? -1 : 1;
                    const auto r1 = detail::gamma_ratio(detail::first_arg(n1, n2, t_nu_), (-n1 + n2) / 2.0 + 1.0);
                    if (r1.sign != 0)
                        br.a[n1] += alt * ysgn * r1.sign * std::exp(r1.log_abs - lfact + n2 * log_y);
                    const auto r2 = detail::gamma_ratio(detail::second_arg(n1, n2, t_nu_), -n1 + 0.5 - t_nu_);
                    if (r2.sign != 0)
                        br.b[2 * n1 + n2] += 2.0 * alt * ysgn * r2.sign * std::exp(r2.log_abs - lfact + n2 * log_y);
                }
            }
            for (double c : br.a)
                if (!std::isfinite(c)) throw DomainError("symVG series: coefficients overflow, lower n_max");
            for (double c : br.b)
                if (!std::isfinite(c)) throw DomainError("symVG series: coefficients overflow, lower n_max");
        }

        SymVGParams p_;
        SeriesControl ctrl_;
        double maturity_requested_ = 0.0;
        double maturity_ = 0.0;
        double t_nu_ = 0.0;
        double sigma_nu_ = 0.0;
        double log_gamma_t_ = 0.0;
        Branch neg_;
        Branch pos_;
    };

    //! Smallest truncation >= ctrl.n_max (in steps of 10, at most cap) for which the symVG series value is
    //! stable to rel_tol * V_A and inside the call bounds at both ends of [v_lo, v_hi].
    //! Large |k| / sigma_nu needs many more terms than the default.
    inline int sufficient_series_terms(const SymVGParams& p, const DebtSpec& debt, double v_lo, double v_hi,
                                       const SeriesControl& ctrl = {}, double rel_tol = 1e-10, int cap = 150) {
        debt.validate();
        const double omega = martingale_adjustment(ModelParams::sym_vg(p.sigma, p.nu));
        const double disc = debt.discounted_face();
        const std::array<double, 2> assets{v_lo, v_hi};
        const auto values = [&](const SymVGSeries& s) {
            std::array<double, 2> out{};
            for (std::size_t i = 0; i < 2; ++i) out[i] = s.raw_value(assets[i], debt.face_value, debt.rate, omega);
            return out;
        };
        const auto plausible = [&](const std::array<double, 2>& v) {
            for (std::size_t i = 0; i < 2; ++i) {
                const double slack = 1e-8 * assets[i];
                if (!(v[i] >= std::max(0.0, assets[i] - disc) - slack && v[i] <= assets[i] + slack)) return false;
            }
            return true;
        };
        SeriesControl c = ctrl;
        auto prev = values(SymVGSeries(p, debt.maturity, c));
        while (c.n_max < cap) {
            SeriesControl next = c;
            next.n_max = std::min(cap, c.n_max + 10);
            const auto cur = values(SymVGSeries(p, debt.maturity, next));
            if (plausible(prev) && std::fabs(cur[0] - prev[0]) <= rel_tol * v_lo
                && std::fabs(cur[1] - prev[1]) <= rel_tol * v_hi)
                return c.n_max;
            prev = cur;
            c = next;
        }
        throw NoSolution("symVG series does not settle within " + std::to_string(cap) + " terms");
    }

    //! Equity value with the maturity actually used (differs from T only after a pole perturbation).
    struct Valuation {
        double value;
        double maturity_used;
        bool perturbed;
    };

    //! Closed-form pricer for one (params, debt) pair; caches the symVG series tables.
    class EquityPricer {
      public:
        EquityPricer(const ModelParams& params, const DebtSpec& debt, const SeriesControl& ctrl = {})
        : params_(params), debt_(debt), ctrl_(ctrl) {
            debt_.validate();
            omega_ = martingale_adjustment(params_);
            if (params_.kind() == ModelKind::SymVG) series_.emplace(params_.as<SymVGParams>(), debt_.maturity, ctrl_);
        }

        const ModelParams& params() const { return params_; }
        const DebtSpec& debt() const { return debt_; }
        double omega() const { return omega_; }
        double maturity_used() const { return series_ ? series_->maturity_used() : debt_.maturity; }
        bool perturbed() const { return series_ && series_->perturbed(); }

        double distance(double asset_value) const {
            return std::log(asset_value / debt_.face_value) + (debt_.rate + omega_) * debt_.maturity;
        }

        //! Smallest asset value with positive equity for one-sided models, 0 otherwise.
        double boundary() const {
            if (!params_.one_sided()) return 0.0;
            return debt_.face_value * std::exp(-(debt_.rate + omega_) * debt_.maturity);
        }

        double value(double asset_value) const {
            if (!(asset_value > 0.0)) throw DomainError("asset value must be positive");
            const double T = debt_.maturity;
            const double disc = debt_.discounted_face();
            const double k = distance(asset_value);
            switch (params_.kind()) {
                case ModelKind::Merton: {
                    const double s = params_.as<MertonParams>().sigma * std::sqrt(T);
                    const double d2 = k / s;
                    return std::max(0.0, asset_value * std_normal_cdf(d2 + s) - disc * std_normal_cdf(d2));
                }
                case ModelKind::NegGamma: {
                    if (k <= 0.0) return 0.0;
                    const auto& g = params_.as<NegGammaParams>();
                    const double a = g.rho * T;
                    return std::max(0.0, asset_value * reg_lower_gamma(a, (g.lambda + 1.0) * k)
                                             - disc * reg_lower_gamma(a, g.lambda * k));
                }
                case ModelKind::NegIG: {
                    if (k <= 0.0) return 0.0;
                    const auto& g = params_.as<NegIGParams>();
                    const double s = std::sqrt(1.0 + 2.0 * g.mu * g.mu / g.lambda);
                    return std::max(0.0, asset_value * shuster_phi(k * s, T, g.lambda * s, g.mu)
                                             - disc * shuster_phi(k, T, g.lambda, g.mu));
                }
                case ModelKind::SymVG: {
                    const auto e = series_->evaluate(asset_value, debt_.face_value, debt_.rate, omega_);
                    if (ctrl_.quadrature_fallback
                        && !(e.error <= 1e-10 * std::max(asset_value, debt_.face_value) && std::isfinite(e.value)))
                        return quadrature_value(asset_value);
                    return std::max(e.value, 0.0);
                }
            }
            return 0.0;
        }

        //! dV_E/dV_A; closed form except symVG (central difference, h = 1e-6 V_A).
        double delta(double asset_value) const {
            const double k = distance(asset_value);
            const double T = debt_.maturity;
            switch (params_.kind()) {
                case ModelKind::Merton: {
                    const double s = params_.as<MertonParams>().sigma * std::sqrt(T);
                    return std_normal_cdf(k / s + s);
                }
                case ModelKind::NegGamma: {
                    if (k <= 0.0) return 0.0;
                    const auto& g = params_.as<NegGammaParams>();
                    return reg_lower_gamma(g.rho * T, (g.lambda + 1.0) * k);
                }
                case ModelKind::NegIG: {
                    if (k <= 0.0) return 0.0;
                    const auto& g = params_.as<NegIGParams>();
                    const double s = std::sqrt(1.0 + 2.0 * g.mu * g.mu / g.lambda);
                    return shuster_phi(k * s, T, g.lambda * s, g.mu);
                }
                case ModelKind::SymVG: {
                    const double h = 1e-6 * asset_value;
                    return (value(asset_value + h) - value(asset_value - h)) / (2.0 * h);
                }
            }
            return 0.0;
        }

        //! Asset value whose equity value equals equity_value: safeguarded Newton on a Jensen bracket.
        double invert(double equity_value) const {
            if (!(equity_value > 0.0) || !std::isfinite(equity_value))
                throw DomainError("observed equity value must be positive");
            const double disc = debt_.discounted_face();
            // V_A - K e^{-rT} <= price <= V_A
            double lo = std::max(equity_value, boundary());
            double hi = equity_value + disc;
            for (int i = 0; value(hi) < equity_value; ++i) {
                if (i > 60) throw NoSolution("equity value not attainable");
                lo = hi;
                hi *= 2.0;
            }
            for (int i = 0; value(lo) > equity_value; ++i) {
                if (i > 60) throw NoSolution("equity value not attainable");
                hi = lo;
                lo *= 0.5;
            }
            double x = hi;
            constexpr double eps = std::numeric_limits<double>::epsilon();
            for (int it = 0; it < 300; ++it) {
                const double f = value(x) - equity_value;
                if (f == 0.0) return x;
                if (f > 0.0) hi = std::min(hi, x);
                else lo = std::max(lo, x);
                const double d = delta(x);
                double xn = x - f / d;
                if (!(d > 0.0) || !(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
                if (std::fabs(xn - x) <= 2.0 * eps * x || hi - lo <= 2.0 * eps * hi) {
                    x = xn;
                    break;
                }
                x = xn;
            }
            // near the one-sided boundary the price is so flat in relative terms that a machine-precision bracket
            // is the best attainable answer
            const double resid = std::fabs(value(x) - equity_value);
            if (!(resid <= 1e-9 * equity_value) && !(hi - lo <= 8.0 * eps * hi))
                throw NoSolution("equity inversion did not reach 1e-9 relative accuracy");
            return x;
        }

      private:
        double quadrature_value(double asset_value) const;

        ModelParams params_;
        DebtSpec debt_;
        SeriesControl ctrl_;
        double omega_ = 0.0;
        std::optional<SymVGSeries> series_;
    };

    inline Valuation equity_valuation(const ModelParams& params, double asset_value, const DebtSpec& debt,
                                      const SeriesControl& ctrl = {}) {
        const EquityPricer pricer(params, debt, ctrl);
        return {pricer.value(asset_value), pricer.maturity_used(), pricer.perturbed()};
    }

    inline double equity_value(const ModelParams& params, double asset_value, const DebtSpec& debt,
                               const SeriesControl& ctrl = {}) {
        return EquityPricer(params, debt, ctrl).value(asset_value);
    }

    inline double equity_delta(const ModelParams& params, double asset_value, const DebtSpec& debt,
                               const SeriesControl& ctrl = {}) {
        return EquityPricer(params, debt, ctrl).delta(asset_value);
    }

    inline double invert_equity(const ModelParams& params, double equity_value, const DebtSpec& debt,
                                const SeriesControl& ctrl = {}) {
        return EquityPricer(params, debt, ctrl).invert(equity_value);
    }

    //! K e^{-rT} * integral over (-k, inf) of (e^{k+x} - 1) f(x, T) dx, absolute tolerance 1e-10 K.
    inline double equity_value_quadrature(const ModelParams& params, double asset_value, const DebtSpec& debt) {
        debt.validate();
        const double T = debt.maturity;
        const double k = distance_input(params, asset_value, debt, debt.rate);
        const double disc = debt.discounted_face();
        const double tol = 1e-10 * debt.face_value / disc;
        if (params.one_sided() && k <= 0.0) return 0.0;

        // (e^{k+x} - 1) f(x) without overflow in the far right tail
        const auto payoff_density = [&](double x) {
            const double lf = log_density(params, x, T);
            if (lf == -std::numeric_limits<double>::infinity()) return 0.0;
            const double m = k + x;
            if (m < 1.0) return std::expm1(m) * std::exp(lf);
            return std::exp(m + lf) - std::exp(lf);
        };

        double integral = 0.0;
        if (k > 0.0) {
            // [-k, 0]: use the endpoint distance so both ends are resolved exactly
            const auto left = [&](double x, double xc) {
                if (x < -0.5 * k) {
                    const double m = -xc;  // k + x
                    const double lf = log_density(params, x, T);
                    return std::expm1(m) * std::exp(lf);
                }
                return payoff_density(-xc);
            };
            integral += quad::finite(left, -k, 0.0, 0.5 * tol).value;
            if (!params.one_sided()) integral += quad::upper(payoff_density, 0.0, 0.5 * tol).value;
        } else {
            integral = quad::upper(payoff_density, -k, tol).value;
        }
        return std::max(0.0, disc * integral);
    }

    inline double EquityPricer::quadrature_value(double asset_value) const {
        return equity_value_quadrature(params_, asset_value, debt_);
    }

}

#endif
