#ifndef JUMPCREDIT_IO_HPP
#define JUMPCREDIT_IO_HPP

#include <jumpcredit/calibration.hpp>
#include <jumpcredit/errors.hpp>
#include <jumpcredit/levy_models.hpp>
#include <jumpcredit/metrics.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace jumpcredit::io {

    namespace fs = std::filesystem;

    inline constexpr const char* kFixtureDirEnv = "JUMPCREDIT_FIXTURE_DIR";

    inline std::string_view trim(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
        return s;
    }

    inline std::optional<Date> try_parse_date(std::string_view s) {
        s = trim(s);
        if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
        int y = 0;
        unsigned m = 0, d = 0;
        const auto ok = [](std::from_chars_result r, const char* end) { return r.ec == std::errc{} && r.ptr == end; };
        if (!ok(std::from_chars(s.data(), s.data() + 4, y), s.data() + 4)) return std::nullopt;
        if (!ok(std::from_chars(s.data() + 5, s.data() + 7, m), s.data() + 7)) return std::nullopt;
        if (!ok(std::from_chars(s.data() + 8, s.data() + 10, d), s.data() + 10)) return std::nullopt;
        const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
        if (!date.ok()) return std::nullopt;
        return date;
    }

    inline Date parse_date(std::string_view s) {
        if (auto d = try_parse_date(s)) return *d;
        throw ParseError("invalid ISO date '" + std::string(s) + "'", 0);
    }

    inline std::string format_date(const Date& d) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                      static_cast<unsigned>(d.day()));
        return buf;
    }

    inline std::optional<double> try_parse_double(std::string_view s) {
        s = trim(s);
        if (s.empty()) return std::nullopt;
        double v = 0.0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
        return v;
    }

    //! Shortest text that parses back to the same double.
    inline std::string format_double(double v) {
        char buf[32];
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, r.ptr);
    }

    //! Observation window: everything, the latest 252 / 504 observations, or an inclusive date range.
    struct Window {
        enum class Kind { All, OneYear, TwoYears, Range } kind = Kind::All;
        Date from{};
        Date to{};

        static Window parse(std::string_view s) {
            s = trim(s);
            if (s.empty() || s == "all") return {};
            if (s == "1y") return {Kind::OneYear};
            if (s == "2y") return {Kind::TwoYears};
            const auto colon = s.find(':');
            if (colon != std::string_view::npos) {
                const auto a = try_parse_date(s.substr(0, colon));
                const auto b = try_parse_date(s.substr(colon + 1));
                if (a && b && *a <= *b) return {Kind::Range, *a, *b};
            }
            throw ParseError("invalid window '" + std::string(s) + "' (use 1y, 2y, all or FROM:TO)", 0);
        }

        std::string str() const {
            switch (kind) {
                case Kind::All: return "all";
                case Kind::OneYear: return "1y";
                case Kind::TwoYears: return "2y";
                case Kind::Range: return format_date(from) + ":" + format_date(to);
            }
            return "all";
        }

        std::vector<Observation> apply(const std::vector<Observation>& obs) const {
            std::size_t keep = obs.size();
            switch (kind) {
                case Kind::All: return obs;
                case Kind::OneYear: keep = 252; break;
                case Kind::TwoYears: keep = 504; break;
                case Kind::Range: {
                    std::vector<Observation> out;
                    for (const auto& o : obs)
                        if (o.date >= from && o.date <= to) out.push_back(o);
                    return out;
                }
            }
            const std::size_t start = obs.size() > keep ? obs.size() - keep : 0;
            return {obs.begin() + static_cast<std::ptrdiff_t>(start), obs.end()};
        }
    };

    //! Relative paths that do not exist are retried under $JUMPCREDIT_FIXTURE_DIR.
    inline fs::path resolve_input(const fs::path& p, const fs::path& base = {}) {
        if (p.is_absolute()) return p;
        if (!base.empty() && fs::exists(base / p)) return base / p;
        if (fs::exists(p)) return p;
        if (const char* dir = std::getenv(kFixtureDirEnv); dir && *dir && fs::exists(fs::path(dir) / p))
            return fs::path(dir) / p;
        return base.empty() ? p : base / p;
    }

    //! Reads `date,value` rows (header required, ISO dates strictly increasing, values positive).
    inline std::vector<Observation> read_equity_csv(std::istream& in) {
        std::vector<Observation> obs;
        std::string line;
        std::size_t lineno = 0;
        bool header = false;
        while (std::getline(in, line)) {
            ++lineno;
            const auto t = trim(line);
            if (t.empty()) continue;
            if (!header) {
                std::string h(t);
                std::transform(h.begin(), h.end(), h.begin(), [](unsigned char c) { return std::tolower(c); });
                h.erase(std::remove(h.begin(), h.end(), ' '), h.end());
                if (h != "date,value") throw ParseError("expected header 'date,value'", lineno);
                header = true;
                continue;
            }
            const auto comma = t.find(',');
            if (comma == std::string_view::npos || t.find(',', comma + 1) != std::string_view::npos)
                throw ParseError("expected two fields 'date,value'", lineno);
            const auto date = try_parse_date(t.substr(0, comma));
            if (!date) throw ParseError("invalid ISO date", lineno);
            const auto value = try_parse_double(t.substr(comma + 1));
            if (!value || !std::isfinite(*value)) throw ParseError("invalid number", lineno);
            if (!(*value > 0.0)) throw NonPositivePrice("equity value must be positive", lineno);
            if (!obs.empty()) {
                if (*date == obs.back().date) throw NonMonotoneDates("duplicate date", lineno);
                if (*date < obs.back().date) throw NonMonotoneDates("dates must be increasing", lineno);
            }
            obs.push_back({*date, *value});
        }
        if (!header) throw ParseError("empty file: header 'date,value' required", lineno ? lineno : 1);
        return obs;
    }

    inline EquitySeries load_equity_series(const fs::path& path, const Window& window, const DebtSpec& debt,
                                           double dt = 1.0) {
        const fs::path p = resolve_input(path);
        std::ifstream in(p);
        if (!in) throw ParseError("cannot open equity file " + p.string(), 0);
        EquitySeries s;
        s.observations = window.apply(read_equity_csv(in));
        s.debt = debt;
        s.dt = dt;
        if (s.observations.size() < EquitySeries::min_length)
            throw TooShort("equity series has " + std::to_string(s.observations.size()) + " observations, need "
                               + std::to_string(EquitySeries::min_length),
                           0);
        return s;
    }

    inline void write_equity_csv(std::ostream& out, const std::vector<Observation>& obs) {
        out << "date,value\n";
        for (const auto& o : obs) out << format_date(o.date) << ',' << format_double(o.value) << '\n';
    }

    enum class MeasureChoice { RiskNeutral, Actual, Both };

    inline MeasureChoice measure_choice_from_string(std::string_view s) {
        if (s == "risk-neutral" || s == "rn") return MeasureChoice::RiskNeutral;
        if (s == "actual") return MeasureChoice::Actual;
        if (s == "both") return MeasureChoice::Both;
        throw ParseError("invalid measure '" + std::string(s) + "' (risk-neutral, actual, both)", 0);
    }

    //! One issuer's batch job. Stored as JSON; see README for the schema.
    struct IssuerConfig {
        std::string ticker;
        double debt_face_value = 0.0;
        std::vector<double> maturities{1.0};
        double risk_free_rate = 0.0;
        std::vector<ModelKind> models;
        fs::path equity_csv;
        MeasureChoice measure = MeasureChoice::RiskNeutral;
        Window window{};
        double dt = 1.0;
        MomentScaling scaling = MomentScaling::Levy;

        void validate() const {
            if (ticker.empty()) throw ParseError("issuer without ticker", 0);
            if (!(debt_face_value > 0.0)) throw ParseError(ticker + ": debt_face_value must be positive", 0);
            if (maturities.empty()) throw ParseError(ticker + ": no maturities", 0);
            for (std::size_t i = 0; i < maturities.size(); ++i) {
                if (!(maturities[i] > 0.0)) throw ParseError(ticker + ": maturities must be positive", 0);
                if (i && !(maturities[i] > maturities[i - 1]))
                    throw ParseError(ticker + ": maturities must be strictly increasing", 0);
            }
            if (models.empty()) throw ParseError(ticker + ": no models", 0);
            if (!(dt > 0.0)) throw ParseError(ticker + ": dt must be positive", 0);
        }
    };

    inline MomentScaling scaling_from_string(std::string_view s) {
        if (s == "levy") return MomentScaling::Levy;
        if (s == "annualized-variance") return MomentScaling::AnnualizedVariance;
        throw ParseError("invalid moment scaling '" + std::string(s) + "' (levy, annualized-variance)", 0);
    }

    inline std::string_view to_string(MomentScaling s) {
        return s == MomentScaling::Levy ? "levy" : "annualized-variance";
    }

    inline IssuerConfig issuer_from_json(const nlohmann::json& j, const fs::path& base) {
        IssuerConfig c;
        try {
            c.ticker = j.at("ticker").get<std::string>();
            c.debt_face_value = j.at("debt_face_value").get<double>();
            if (j.contains("maturities")) c.maturities = j.at("maturities").get<std::vector<double>>();
            c.risk_free_rate = j.value("risk_free_rate", 0.0);
            for (const auto& m : j.at("models")) c.models.push_back(model_kind_from_string(m.get<std::string>()));
            c.equity_csv = resolve_input(j.at("equity_csv").get<std::string>(), base);
            c.measure = measure_choice_from_string(j.value("measure", std::string("risk-neutral")));
            c.window = Window::parse(j.value("window", std::string("all")));
            c.dt = j.value("dt", 1.0);
            c.scaling = scaling_from_string(j.value("moment_scaling", std::string("levy")));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("config: ") + e.what(), 0);
        } catch (const DomainError& e) {
            throw ParseError(std::string("config: ") + e.what(), 0);
        }
        c.validate();
        return c;
    }

    //! Config document: {"issuers": [ {...}, ... ]}.
    inline std::vector<IssuerConfig> load_config(const fs::path& path) {
        const fs::path p = resolve_input(path);
        std::ifstream in(p);
        if (!in) throw ParseError("cannot open config " + p.string(), 0);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("config: ") + e.what(), 0);
        }
        if (!j.contains("issuers") || !j.at("issuers").is_array()) throw ParseError("config: 'issuers' array missing", 0);
        std::vector<IssuerConfig> out;
        for (const auto& item : j.at("issuers")) out.push_back(issuer_from_json(item, p.parent_path()));
        return out;
    }

    //! One row of a report: issuer x model x calibration maturity x measure.
    struct ReportRow {
        std::string ticker;
        ModelKind model = ModelKind::Merton;
        double maturity = 1.0;
        Measure measure = Measure::RiskNeutral;
        std::vector<double> params;
        double implied_asset_value = 0.0;
        double rate = 0.0;
        double distance = 0.0;
        double probability = 0.0;
        int iterations = 0;
        bool converged = false;
        std::vector<std::string> warnings;

        double probability_pct() const { return std::round(probability * 1e4) / 100.0; }
    };

    struct ReportDocument {
        std::vector<ReportRow> rows;
    };

    inline const char* kReportHeader =
        "ticker,model,maturity,measure,param_1,param_2,implied_asset_value,rate,distance,probability,"
        "probability_pct,iterations,converged,warnings";

    inline void write_report_csv(std::ostream& out, const ReportDocument& doc) {
        out << kReportHeader << '\n';
        for (const auto& r : doc.rows) {
            out << r.ticker << ',' << to_string(r.model) << ',' << format_double(r.maturity) << ','
                << to_string(r.measure) << ',' << (r.params.size() > 0 ? format_double(r.params[0]) : "") << ','
                << (r.params.size() > 1 ? format_double(r.params[1]) : "") << ',' << format_double(r.implied_asset_value)
                << ',' << format_double(r.rate) << ',' << format_double(r.distance) << ','
                << format_double(r.probability) << ',';
            char pct[32];
            std::snprintf(pct, sizeof pct, "%.2f", r.probability_pct());
            out << pct << ',' << r.iterations << ',' << (r.converged ? "true" : "false") << ',' << r.warnings.size()
                << '\n';
        }
    }

    inline std::vector<std::string> split_csv_line(std::string_view line) {
        std::vector<std::string> f;
        std::size_t start = 0;
        for (;;) {
            const auto c = line.find(',', start);
            f.emplace_back(trim(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start)));
            if (c == std::string_view::npos) break;
            start = c + 1;
        }
        return f;
    }

    //! Parses write_report_csv output; warnings come back as a count of placeholders.
    inline ReportDocument read_report_csv(std::istream& in) {
        ReportDocument doc;
        std::string line;
        std::size_t lineno = 0;
        if (!std::getline(in, line) || trim(line) != kReportHeader) throw ParseError("unexpected report header", 1);
        ++lineno;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            const auto f = split_csv_line(line);
            if (f.size() != 14) throw ParseError("expected 14 fields", lineno);
            const auto num = [&](const std::string& s) {
                const auto v = try_parse_double(s);
                if (!v) throw ParseError("invalid number '" + s + "'", lineno);
                return *v;
            };
            ReportRow r;
            r.ticker = f[0];
            try {
                r.model = model_kind_from_string(f[1]);
            } catch (const DomainError&) {
                throw ParseError("invalid model", lineno);
            }
            r.maturity = num(f[2]);
            if (f[3] == "risk-neutral") r.measure = Measure::RiskNeutral;
            else if (f[3] == "actual") r.measure = Measure::Actual;
            else throw ParseError("invalid measure", lineno);
            if (!f[4].empty()) r.params.push_back(num(f[4]));
            if (!f[5].empty()) r.params.push_back(num(f[5]));
            r.implied_asset_value = num(f[6]);
            r.rate = num(f[7]);
            r.distance = num(f[8]);
            r.probability = num(f[9]);
            r.iterations = static_cast<int>(num(f[11]));
            r.converged = f[12] == "true";
            r.warnings.assign(static_cast<std::size_t>(num(f[13])), std::string("warning"));
            doc.rows.push_back(std::move(r));
        }
        return doc;
    }

    inline nlohmann::json params_to_json(const ModelParams& p) {
        nlohmann::json j;
        j["model"] = std::string(to_string(p.kind()));
        const auto names = ModelParams::names(p.kind());
        const auto vals = p.values();
        for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = vals[i];
        return j;
    }

    inline nlohmann::json report_to_json(const ReportDocument& doc) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : doc.rows) {
            nlohmann::json j;
            j["ticker"] = r.ticker;
            j["model"] = std::string(to_string(r.model));
            j["maturity"] = r.maturity;
            j["measure"] = std::string(to_string(r.measure));
            const auto names = ModelParams::names(r.model);
            nlohmann::json params;
            for (std::size_t i = 0; i < names.size() && i < r.params.size(); ++i) params[names[i]] = r.params[i];
            j["params"] = params;
            j["implied_asset_value"] = r.implied_asset_value;
            j["rate"] = r.rate;
            j["distance"] = r.distance;
            j["probability"] = r.probability;
            j["probability_pct"] = r.probability_pct();
            j["iterations"] = r.iterations;
            j["converged"] = r.converged;
            j["warnings"] = r.warnings;
            rows.push_back(std::move(j));
        }
        return nlohmann::json{{"rows", rows}};
    }

}

#endif
