#ifndef JUMPCREDIT_LEVY_MODELS_HPP
#define JUMPCREDIT_LEVY_MODELS_HPP

#include <jumpcredit/errors.hpp>
#include <jumpcredit/quadrature.hpp>
#include <jumpcredit/special_fn.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace jumpcredit {

    enum class ModelKind { Merton, NegGamma, NegIG, SymVG };

    inline std::string_view to_string(ModelKind k) {
        switch (k) {
            case ModelKind::Merton: return "merton";
            case ModelKind::NegGamma: return "neggamma";
            case ModelKind::NegIG: return "negig";
            case ModelKind::SymVG: return "symvg";
        }
        return "?";
    }

    inline ModelKind model_kind_from_string(std::string_view s) {
        if (s == "merton") return ModelKind::Merton;
        if (s == "neggamma") return ModelKind::NegGamma;
        if (s == "negig") return ModelKind::NegIG;
        if (s == "symvg") return ModelKind::SymVG;
        throw DomainError("unknown model '" + std::string(s) + "'");
    }

    inline bool is_one_sided(ModelKind k) { return k == ModelKind::NegGamma || k == ModelKind::NegIG; }

    struct MertonParams {
        double sigma;
    };

    struct NegGammaParams {
        double lambda;  // rate
        double rho;     // shape
    };

    struct NegIGParams {
        double lambda;  // shape
        double mu;      // mean
    };

    struct SymVGParams {
        double sigma;
        double nu;
    };

    struct MomentSummary {
        double mean = 0.0;
        double variance = 0.0;
        double skewness = 0.0;
        double excess_kurtosis = 0.0;
    };

    //! Validated parameter set of one of the four models.
    class ModelParams {
      public:
        using Payload = std::variant<MertonParams, NegGammaParams, NegIGParams, SymVGParams>;

        ModelParams(MertonParams p) : payload_(p) { validate(); }
        ModelParams(NegGammaParams p) : payload_(p) { validate(); }
        ModelParams(NegIGParams p) : payload_(p) { validate(); }
        ModelParams(SymVGParams p) : payload_(p) { validate(); }

        static ModelParams merton(double sigma) { return MertonParams{sigma}; }
        static ModelParams neg_gamma(double lambda, double rho) { return NegGammaParams{lambda, rho}; }
        static ModelParams neg_ig(double lambda, double mu) { return NegIGParams{lambda, mu}; }
        static ModelParams sym_vg(double sigma, double nu) { return SymVGParams{sigma, nu}; }

        //! Build from the raw vector returned by values().
        static ModelParams from_values(ModelKind kind, const std::vector<double>& v) {
            const auto need = [&](std::size_t n) {
                if (v.size() != n) throw DomainError("wrong number of parameters for " + std::string(to_string(kind)));
            };
            switch (kind) {
                case ModelKind::Merton: need(1); return merton(v[0]);
                case ModelKind::NegGamma: need(2); return neg_gamma(v[0], v[1]);
                case ModelKind::NegIG: need(2); return neg_ig(v[0], v[1]);
                case ModelKind::SymVG: need(2); return sym_vg(v[0], v[1]);
            }
            throw DomainError("unknown model");
        }

        ModelKind kind() const { return static_cast<ModelKind>(payload_.index()); }
        bool one_sided() const { return is_one_sided(kind()); }
        const Payload& payload() const { return payload_; }

        template <class T>
        const T& as() const { return std::get<T>(payload_); }

        //! Parameter vector in declaration order; Algorithm 1 measures steps on it.
        std::vector<double> values() const {
            return std::visit(
                [](const auto& p) -> std::vector<double> {
                    using T = std::decay_t<decltype(p)>;
                    if constexpr (std::is_same_v<T, MertonParams>) return {p.sigma};
                    else if constexpr (std::is_same_v<T, NegGammaParams>) return {p.lambda, p.rho};
                    else if constexpr (std::is_same_v<T, NegIGParams>) return {p.lambda, p.mu};
                    else return {p.sigma, p.nu};
                },
                payload_);
        }

        static std::vector<std::string> names(ModelKind kind) {
            switch (kind) {
                case ModelKind::Merton: return {"sigma"};
                case ModelKind::NegGamma: return {"lambda", "rho"};
                case ModelKind::NegIG: return {"lambda", "mu"};
                case ModelKind::SymVG: return {"sigma", "nu"};
            }
            return {};
        }

        bool operator==(const ModelParams& o) const { return kind() == o.kind() && values() == o.values(); }

      private:
        void validate() const {
            const auto pos = [](double x) { return std::isfinite(x) && x > 0.0; };
            bool ok = false;
            std::visit(
                [&](const auto& p) {
                    using T = std::decay_t<decltype(p)>;
                    if constexpr (std::is_same_v<T, MertonParams>) ok = pos(p.sigma);
                    else if constexpr (std::is_same_v<T, NegGammaParams>) ok = pos(p.lambda) && pos(p.rho);
                    else if constexpr (std::is_same_v<T, NegIGParams>) ok = pos(p.lambda) && pos(p.mu);
                    else ok = pos(p.sigma) && pos(p.nu) && p.sigma * p.sigma * p.nu / 2.0 < 1.0;
                },
                payload_);
            if (!ok) throw DomainError("invalid " + std::string(to_string(kind())) + " parameters");
        }

        Payload payload_;
    };

    //! kappa(p) = log E[e^{p X_1}].
    inline double cumulant_gen(const ModelParams& params, double p) {
        switch (params.kind()) {
            case ModelKind::Merton: {
                const double s = params.as<MertonParams>().sigma;
                return 0.5 * s * s * p * p;
            }
            case ModelKind::NegGamma: {
                const auto& g = params.as<NegGammaParams>();
                if (!(p > -g.lambda)) throw DomainError("cumulant_gen: p outside the NegGamma strip");
                return -g.rho * std::log1p(p / g.lambda);
            }
            case ModelKind::NegIG: {
                const auto& g = params.as<NegIGParams>();
                const double z = 2.0 * p * g.mu * g.mu / g.lambda;
                if (!(z > -1.0)) throw DomainError("cumulant_gen: p outside the NegIG strip");
                // (l/m)(1 - sqrt(1+z)) rewritten to avoid cancellation near p = 0
                return -2.0 * p * g.mu / (1.0 + std::sqrt(1.0 + z));
            }
            case ModelKind::SymVG: {
                const auto& v = params.as<SymVGParams>();
                const double z = v.sigma * v.sigma * v.nu * p * p / 2.0;
                if (!(z < 1.0)) throw DomainError("cumulant_gen: p outside the symVG strip");
                return -std::log1p(-z) / v.nu;
            }
        }
        return 0.0;
    }

    //! omega such that e^{omega t + X_t} is a martingale.
    inline double martingale_adjustment(const ModelParams& params) { return -cumulant_gen(params, 1.0); }

    inline double expected_increment(const ModelParams& params, double dt) {
        switch (params.kind()) {
            case ModelKind::NegGamma: {
                const auto& g = params.as<NegGammaParams>();
                return -g.rho / g.lambda * dt;
            }
            case ModelKind::NegIG: return -params.as<NegIGParams>().mu * dt;
            default: return 0.0;
        }
    }

    namespace detail {

        inline double symvg_log_density(const SymVGParams& v, double ax, double t) {
            const double a = t / v.nu;
            const double order = a - 0.5;
            const double c = std::sqrt(2.0 / v.nu) / v.sigma;
            const double base = std::numbers::ln2 - kLogSqrt2Pi - std::log(v.sigma) - log_abs_gamma(a)
                                - a * std::log(v.nu);
            if (ax == 0.0) {
                if (order <= 0.0) return std::numeric_limits<double>::infinity();
                // (z/s)^order K_order(c z) -> Gamma(order) 2^{order-1} (s c)^{-order}, s c = 2/nu
                return base + log_abs_gamma(order) + (order - 1.0) * std::numbers::ln2
                       - order * std::log(2.0 / v.nu);
            }
            return base + order * std::log(ax / (v.sigma * std::sqrt(2.0 / v.nu))) + log_bessel_k(order, c * ax);
        }

    }

    //! log f(x, t); -inf outside the support.
    inline double log_density(const ModelParams& params, double x, double t) {
        if (!(t > 0.0)) throw DomainError("density: t must be positive");
        constexpr double ninf = -std::numeric_limits<double>::infinity();
        switch (params.kind()) {
            case ModelKind::Merton: {
                const double s = params.as<MertonParams>().sigma * std::sqrt(t);
                return -0.5 * (x / s) * (x / s) - std::log(s) - detail::kLogSqrt2Pi;
            }
            case ModelKind::NegGamma: {
                if (x >= 0.0) return ninf;
                const auto& g = params.as<NegGammaParams>();
                const double a = g.rho * t;
                const double y = -g.lambda * x;
                return std::log(g.lambda) + (a - 1.0) * std::log(y) - y - log_abs_gamma(a);
            }
            case ModelKind::NegIG: {
                if (x >= 0.0) return ninf;
                const auto& g = params.as<NegIGParams>();
                const double y = -x;
                const double d = y - g.mu * t;
                return 0.5 * std::log(g.lambda * t * t / (2.0 * std::numbers::pi)) - 1.5 * std::log(y)
                       - g.lambda * d * d / (2.0 * g.mu * g.mu * y);
            }
            case ModelKind::SymVG: return detail::symvg_log_density(params.as<SymVGParams>(), std::fabs(x), t);
        }
        return ninf;
    }

    //! Density of X_t. For symVG with t/nu <= 1/2 the value at x = 0 is +inf (integrable).
    inline double density(const ModelParams& params, double x, double t) { return std::exp(log_density(params, x, t)); }

    inline double cdf(const ModelParams& params, double x, double t) {
        if (!(t > 0.0)) throw DomainError("cdf: t must be positive");
        switch (params.kind()) {
            case ModelKind::Merton:
                return std_normal_cdf(x / (params.as<MertonParams>().sigma * std::sqrt(t)));
            case ModelKind::NegGamma: {
                if (x >= 0.0) return 1.0;
                const auto& g = params.as<NegGammaParams>();
                return reg_upper_gamma(g.rho * t, -g.lambda * x);
            }
            case ModelKind::NegIG: {
                if (x >= 0.0) return 1.0;
                const auto& g = params.as<NegIGParams>();
                return shuster_phi_complement(-x, t, g.lambda, g.mu);
            }
            case ModelKind::SymVG: {
                if (x == 0.0) return 0.5;
                const auto& v = params.as<SymVGParams>();
                const double a = std::fabs(x);
                const auto f = [&](double y) { return std::exp(detail::symvg_log_density(v, y, t)); };
                double tail;
                if (a <= v.sigma * std::sqrt(t)) {
                    tail = 0.5 - quad::finite(f, 0.0, a, 1e-11).value;
                } else {
                    tail = quad::upper(f, a, 1e-12).value;
                }
                tail = std::clamp(tail, 0.0, 0.5);
                return x < 0.0 ? tail : 1.0 - tail;
            }
        }
        return 0.0;
    }

    inline MomentSummary model_moments(const ModelParams& params) {
        MomentSummary m;
        m.mean = expected_increment(params, 1.0);
        switch (params.kind()) {
            case ModelKind::Merton: {
                const double s = params.as<MertonParams>().sigma;
                m.variance = s * s;
                break;
            }
            case ModelKind::NegGamma: {
                const auto& g = params.as<NegGammaParams>();
                m.variance = g.rho / (g.lambda * g.lambda);
                m.skewness = -2.0 / std::sqrt(g.rho);
                m.excess_kurtosis = 6.0 / g.rho;
                break;
            }
            case ModelKind::NegIG: {
                const auto& g = params.as<NegIGParams>();
                m.variance = g.mu * g.mu * g.mu / g.lambda;
                m.skewness = -3.0 * std::sqrt(g.mu / g.lambda);
                m.excess_kurtosis = 15.0 * g.mu / g.lambda;
                break;
            }
            case ModelKind::SymVG: {
                const auto& v = params.as<SymVGParams>();
                m.variance = v.sigma * v.sigma;
                m.excess_kurtosis = 3.0 * v.nu;
                break;
            }
        }
        return m;
    }

    //! Inverse moment map from (variance, excess kurtosis) of unit-time increments.
    inline ModelParams params_from_moments(ModelKind kind, double variance, double excess_kurtosis) {
        if (!(variance > 0.0) || !std::isfinite(variance)) throw DomainError("params_from_moments: variance must be positive");
        if (kind != ModelKind::Merton && !(excess_kurtosis > 0.0)) throw NonPositiveKurtosis(excess_kurtosis);
        switch (kind) {
            case ModelKind::Merton: return ModelParams::merton(std::sqrt(variance));
            case ModelKind::NegGamma: {
                const double rho = 6.0 / excess_kurtosis;
                return ModelParams::neg_gamma(std::sqrt(rho / variance), rho);
            }
            case ModelKind::NegIG: {
                // mu^3/lambda = v and 15 mu/lambda = k give mu^2 = 15 v / k
                const double mu = std::sqrt(15.0 * variance / excess_kurtosis);
                return ModelParams::neg_ig(15.0 * mu / excess_kurtosis, mu);
            }
            case ModelKind::SymVG: return ModelParams::sym_vg(std::sqrt(variance), excess_kurtosis / 3.0);
        }
        throw DomainError("unknown model");
    }

}

#endif
