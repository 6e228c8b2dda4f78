#ifndef JUMPCREDIT_METRICS_HPP
#define JUMPCREDIT_METRICS_HPP

#include <jumpcredit/levy_models.hpp>
#include <jumpcredit/pricing.hpp>

#include <cmath>
#include <string_view>
#include <vector>

namespace jumpcredit {

    enum class Measure { RiskNeutral, Actual };

    inline std::string_view to_string(Measure m) { return m == Measure::RiskNeutral ? "risk-neutral" : "actual"; }

    //! Which drift enters the distance to default: r (risk-neutral) or the estimated r-bar (actual).
    struct MeasureTag {
        Measure kind = Measure::RiskNeutral;
        double rate = 0.0;

        static MeasureTag risk_neutral(double r) { return {Measure::RiskNeutral, r}; }
        static MeasureTag actual(double r_bar) { return {Measure::Actual, r_bar}; }
    };

    struct DefaultReport {
        double distance;
        double probability;
        MeasureTag measure;
        double horizon;
        ModelKind model;

        //! Percentage rounded to 0.01 pp, the precision of published tables.
        double probability_pct_rounded() const { return std::round(probability * 1e4) / 100.0; }
    };

    //! P[X_T < -distance]; exactly 1 for one-sided models once distance <= 0.
    inline double default_probability(const ModelParams& params, double distance, double T) {
        if (!(T > 0.0)) throw DomainError("default_probability: horizon must be positive");
        if (params.one_sided() && distance <= 0.0) return 1.0;
        return std::clamp(cdf(params, -distance, T), 0.0, 1.0);
    }

    //! r-bar = (mean log return - E[X_dt]) / dt - omega.
    inline double actual_drift(const ModelParams& params, double mean_log_return, double dt) {
        if (!(dt > 0.0)) throw DomainError("actual_drift: dt must be positive");
        return (mean_log_return - expected_increment(params, dt)) / dt - martingale_adjustment(params);
    }

    inline DefaultReport default_report(const ModelParams& params, double asset_value, double face_value,
                                        const MeasureTag& measure, double horizon) {
        const DebtSpec debt{face_value, horizon, measure.rate};
        debt.validate();
        const double k = distance_input(params, asset_value, debt, measure.rate);
        return {k, default_probability(params, k, horizon), measure, horizon, params.kind()};
    }

    //! Reports at each horizon with parameters held fixed.
    inline std::vector<DefaultReport> term_structure(const ModelParams& params, double asset_value, double face_value,
                                                     const MeasureTag& measure, const std::vector<double>& horizons) {
        if (horizons.empty()) throw DomainError("term_structure: no horizons");
        for (std::size_t i = 0; i < horizons.size(); ++i) {
            if (!(horizons[i] > 0.0)) throw DomainError("term_structure: horizons must be positive");
            if (i && !(horizons[i] > horizons[i - 1])) throw DomainError("term_structure: horizons must increase");
        }
        std::vector<DefaultReport> out;
        out.reserve(horizons.size());
        for (double h : horizons) out.push_back(default_report(params, asset_value, face_value, measure, h));
        return out;
    }

    //! Evenly spaced horizons on (0, max_horizon].
    inline std::vector<double> default_horizon_grid(int points = 40, double max_horizon = 10.0) {
        if (points < 1 || !(max_horizon > 0.0)) throw DomainError("horizon grid: need points >= 1, max > 0");
        std::vector<double> h(points);
        for (int i = 0; i < points; ++i) h[i] = max_horizon * (i + 1) / points;
        return h;
    }

}

#endif
