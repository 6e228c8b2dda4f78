#ifndef JUMPCREDIT_CALIBRATION_HPP
#define JUMPCREDIT_CALIBRATION_HPP

#include <jumpcredit/errors.hpp>
#include <jumpcredit/levy_models.hpp>
#include <jumpcredit/metrics.hpp>
#include <jumpcredit/parallel.hpp>
#include <jumpcredit/pricing.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jumpcredit {

    using Date = std::chrono::year_month_day;

    struct Observation {
        Date date;
        double value;
    };

    //! Observed equity values for one issuer, spacing dt between consecutive observations.
    struct EquitySeries {
        std::vector<Observation> observations;
        double dt = 1.0;
        DebtSpec debt{1.0, 1.0, 0.0};

        static constexpr std::size_t min_length = 30;

        void validate() const {
            debt.validate();
            if (!(dt > 0.0)) throw DomainError("series spacing must be positive");
            if (observations.size() < min_length)
                throw TooShort("equity series needs at least " + std::to_string(min_length) + " observations", 0);
            for (std::size_t i = 0; i < observations.size(); ++i) {
                if (!(observations[i].value > 0.0)) throw NonPositivePrice("equity values must be positive", 0);
                if (i && !(observations[i - 1].date < observations[i].date))
                    throw NonMonotoneDates("observation dates must be strictly increasing", 0);
            }
        }

        std::vector<double> values() const {
            std::vector<double> v;
            v.reserve(observations.size());
            for (const auto& o : observations) v.push_back(o.value);
            return v;
        }
    };

    inline std::vector<double> log_returns(std::span<const double> values) {
        if (values.size() < 2) throw DomainError("log_returns: need at least two values");
        std::vector<double> r(values.size() - 1);
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!(values[i] > 0.0)) throw DomainError("log_returns: values must be positive");
        for (std::size_t i = 0; i + 1 < values.size(); ++i) r[i] = std::log(values[i + 1] / values[i]);
        return r;
    }

    inline std::vector<double> log_returns(const EquitySeries& series) { return log_returns(series.values()); }

    //! Population central moments.
    inline MomentSummary sample_moments(std::span<const double> x) {
        if (x.size() < 4) throw DomainError("sample_moments: need at least four values");
        const double n = static_cast<double>(x.size());
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= n;
        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (double v : x) {
            const double d = v - mean;
            const double d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        if (!(m2 > 0.0)) throw DegenerateSeries("sample_moments: zero variance");
        return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
    }

    //! How per-period sample moments become unit-time model moments.
    //! Levy: variance / dt and kurtosis * dt (exact cumulant scaling of a Levy process).
    //! AnnualizedVariance: variance / dt, kurtosis taken as is.
    //! Both agree at dt = 1.
    enum class MomentScaling { Levy, AnnualizedVariance };

    struct CalibrationOptions {
        double tolerance = 1e-3;
        int max_iter = 100;
        SeriesControl series{};
        bool clamp_kurtosis = true;
        MomentScaling scaling = MomentScaling::Levy;
        std::optional<ModelParams> initial{};  // overrides the moment-map seed
        bool extend_series = true;             // symVG: raise n_max when the series has not settled
    };

    struct TraceEntry {
        std::vector<double> params;
        std::vector<std::string> events;
    };

    struct CalibrationResult {
        ModelParams params;
        std::vector<double> implied_assets;
        int iterations = 0;
        bool converged = false;
        std::optional<double> actual_drift;
        std::vector<TraceEntry> trace;
        std::vector<std::string> warnings;
        double last_step = 0.0;
    };

    class NotConverged : public std::runtime_error {
      public:
        explicit NotConverged(CalibrationResult result)
        : std::runtime_error("calibration did not converge in " + std::to_string(result.iterations) + " iterations"),
          result_(std::make_shared<const CalibrationResult>(std::move(result))) {}
        const CalibrationResult& result() const { return *result_; }

      private:
        std::shared_ptr<const CalibrationResult> result_;
    };

    namespace detail {

        inline constexpr double kKurtosisFloor = 1e-4;

        //! Moment map applied to per-period sample moments; logs clamping and projection events.
        inline ModelParams moment_step(ModelKind kind, const MomentSummary& m, double dt, MomentScaling scaling,
                                       bool clamp, std::vector<std::string>& events) {
            const double v = m.variance / dt;
            double kurt = scaling == MomentScaling::Levy ? m.excess_kurtosis * dt : m.excess_kurtosis;
            if (kind != ModelKind::Merton && !(kurt > 0.0)) {
                if (!clamp) throw NonPositiveKurtosis(kurt);
                events.push_back("excess kurtosis " + std::to_string(kurt) + " clamped to 1e-4");
                kurt = kKurtosisFloor;
            }
            if (kind == ModelKind::SymVG) {
                const double sigma = std::sqrt(v);
                double nu = kurt / 3.0;
                if (!(sigma * sigma * nu / 2.0 < 1.0)) {
                    nu = 0.99 * 2.0 / (sigma * sigma);
                    events.push_back("nu projected to 0.99*2/sigma^2");
                }
                return ModelParams::sym_vg(sigma, nu);
            }
            return params_from_moments(kind, v, kurt);
        }

        inline std::vector<double> invert_all(const ModelParams& params, const std::vector<double>& equity,
                                              const DebtSpec& debt, const SeriesControl& ctrl) {
            const EquityPricer pricer(params, debt, ctrl);
            std::vector<double> assets(equity.size());
            parallel_for(equity.size(), [&](std::size_t i) { assets[i] = pricer.invert(equity[i]); });
            return assets;
        }

        //! symVG truncation good for every asset value the equity range can imply (E <= V_A <= E + K e^{-rT}).
        inline SeriesControl series_for(const ModelParams& params, const std::vector<double>& equity,
                                        const DebtSpec& debt, const CalibrationOptions& opt,
                                        std::vector<std::string>& events) {
            if (params.kind() != ModelKind::SymVG || !opt.extend_series) return opt.series;
            const auto [lo, hi] = std::minmax_element(equity.begin(), equity.end());
            SeriesControl c = opt.series;
            c.quadrature_fallback = true;
            try {
                c.n_max = sufficient_series_terms(params.as<SymVGParams>(), debt, *lo, *hi + debt.discounted_face(),
                                                  opt.series);
            } catch (const NoSolution&) {
                c.n_max = std::max(opt.series.n_max, 60);
                events.push_back("series truncation capped at " + std::to_string(c.n_max) +
                                 "; quadrature used where the series has not settled");
                return c;
            }
            if (c.n_max != opt.series.n_max) events.push_back("series truncation raised to " + std::to_string(c.n_max));
            return c;
        }

        inline double sup_norm_step(const std::vector<double>& a, const std::vector<double>& b) {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::fabs(a[i] - b[i]));
            return s;
        }

    }

    //! Moment-matching fixed point: invert equity, take implied-asset log-return moments, map back to parameters.
    //! Throws NotConverged (carrying the partial result) after max_iter steps.
    inline CalibrationResult calibrate(ModelKind kind, const EquitySeries& series, const CalibrationOptions& opt = {}) {
        series.validate();
        if (!(opt.tolerance > 0.0) || opt.max_iter < 1) throw DomainError("calibrate: bad tolerance or max_iter");
        const std::vector<double> equity = series.values();

        std::vector<std::string> events;
        std::optional<ModelParams> current;
        if (opt.initial) {
            if (opt.initial->kind() != kind) throw DomainError("calibrate: initial parameters of the wrong model");
            current = *opt.initial;
            events.push_back("seed: user supplied");
        } else {
            const auto m = sample_moments(log_returns(equity));
            current = detail::moment_step(kind, m, series.dt, opt.scaling, true, events);
            events.insert(events.begin(), "seed: moment map of equity log returns");
        }

        CalibrationResult res{*current, {}, 0, false, std::nullopt, {}, {}, 0.0};
        res.trace.push_back({current->values(), events});
        for (const auto& e : events)
            if (e.find("clamped") != std::string::npos || e.find("projected") != std::string::npos)
                res.warnings.push_back("seed: " + e);

        for (int it = 1; it <= opt.max_iter; ++it) {
            std::vector<std::string> ev;
            const auto ctrl = detail::series_for(*current, equity, series.debt, opt, ev);
            const auto assets = detail::invert_all(*current, equity, series.debt, ctrl);
            const auto m = sample_moments(log_returns(assets));
            const ModelParams next = detail::moment_step(kind, m, series.dt, opt.scaling, opt.clamp_kurtosis, ev);
            for (const auto& e : ev)
                if (e.find("truncation") == std::string::npos)
                    res.warnings.push_back("iteration " + std::to_string(it) + ": " + e);
            const double step = detail::sup_norm_step(next.values(), current->values());
            res.trace.push_back({next.values(), ev});
            res.iterations = it;
            res.last_step = step;
            current = next;
            if (step < opt.tolerance) {
                res.converged = true;
                break;
            }
        }

        res.params = *current;
        std::vector<std::string> final_events;
        const auto final_ctrl = detail::series_for(*current, equity, series.debt, opt, final_events);
        res.implied_assets = detail::invert_all(*current, equity, series.debt, final_ctrl);
        const auto r = log_returns(res.implied_assets);
        double mean = 0.0;
        for (double x : r) mean += x;
        mean /= static_cast<double>(r.size());
        res.actual_drift = actual_drift(*current, mean, series.dt);
        if (!res.converged) throw NotConverged(std::move(res));
        return res;
    }

}

#endif
