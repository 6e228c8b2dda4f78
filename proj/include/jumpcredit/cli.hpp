#ifndef JUMPCREDIT_CLI_HPP
#define JUMPCREDIT_CLI_HPP

#include <jumpcredit/calibration.hpp>
#include <jumpcredit/io.hpp>
#include <jumpcredit/mc_oracle.hpp>
#include <jumpcredit/metrics.hpp>
#include <jumpcredit/pricing.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace jumpcredit::cli {

    enum ExitCode { kOk = 0, kFailure = 1, kInputError = 2, kNotConverged = 3 };

    namespace detail {

        inline std::string fmt(const char* f, double v) {
            char buf[64];
            std::snprintf(buf, sizeof buf, f, v);
            return buf;
        }

        struct ModelOptions {
            std::string model;
            std::optional<double> sigma, lambda, rho, mu, nu;

            void add(CLI::App& app, bool with_params = true) {
                app.add_option("--model", model, "merton | neggamma | negig | symvg")->required();
                if (!with_params) return;
                app.add_option("--sigma", sigma, "Merton / symVG scale");
                app.add_option("--lambda", lambda, "NegGamma rate or NegIG shape");
                app.add_option("--rho", rho, "NegGamma shape");
                app.add_option("--mu", mu, "NegIG mean");
                app.add_option("--nu", nu, "symVG clock variance");
            }

            ModelKind kind() const { return model_kind_from_string(model); }

            ModelParams params() const {
                const auto need = [](const std::optional<double>& v, const char* name) {
                    if (!v) throw DomainError(std::string("missing --") + name);
                    return *v;
                };
                switch (kind()) {
                    case ModelKind::Merton: return ModelParams::merton(need(sigma, "sigma"));
                    case ModelKind::NegGamma: return ModelParams::neg_gamma(need(lambda, "lambda"), need(rho, "rho"));
                    case ModelKind::NegIG: return ModelParams::neg_ig(need(lambda, "lambda"), need(mu, "mu"));
                    case ModelKind::SymVG: return ModelParams::sym_vg(need(sigma, "sigma"), need(nu, "nu"));
                }
                throw DomainError("unknown model");
            }
        };

        struct CalibrationFlags {
            double dt = 1.0;
            std::string scaling = "levy";
            double tol = 1e-3;
            int max_iter = 100;
            int n_max = 15;
            std::string window = "all";

            void add(CLI::App& app) {
                app.add_option("--dt", dt, "spacing between observations in the units of T")->check(CLI::PositiveNumber);
                app.add_option("--moment-scaling", scaling, "levy | annualized-variance");
                app.add_option("--tol", tol, "sup-norm step tolerance")->check(CLI::PositiveNumber);
                app.add_option("--max-iter", max_iter, "iteration cap")->check(CLI::PositiveNumber);
                app.add_option("--nmax", n_max, "symVG series truncation")->check(CLI::PositiveNumber);
                app.add_option("--window", window, "1y | 2y | all | YYYY-MM-DD:YYYY-MM-DD");
            }

            CalibrationOptions options() const {
                CalibrationOptions o;
                o.tolerance = tol;
                o.max_iter = max_iter;
                o.series.n_max = n_max;
                o.scaling = io::scaling_from_string(scaling);
                return o;
            }
        };

        inline std::vector<double> parse_list(const std::string& s) {
            std::vector<double> v;
            std::stringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ',')) {
                const auto d = io::try_parse_double(item);
                if (!d) throw ParseError("invalid number '" + item + "' in list", 0);
                v.push_back(*d);
            }
            if (v.empty()) throw ParseError("empty list", 0);
            return v;
        }

        inline MeasureTag measure_tag(const std::string& measure, std::optional<double> r_bar, double r) {
            const auto m = io::measure_choice_from_string(measure);
            if (m == io::MeasureChoice::Both) throw DomainError("choose one measure here: risk-neutral or actual");
            if (m == io::MeasureChoice::Actual) {
                if (!r_bar) throw DomainError("--rbar is required with --measure actual");
                return MeasureTag::actual(*r_bar);
            }
            return MeasureTag::risk_neutral(r);
        }

        inline nlohmann::json trace_json(const CalibrationResult& r) {
            nlohmann::json t = nlohmann::json::array();
            for (const auto& e : r.trace) t.push_back({{"params", e.params}, {"events", e.events}});
            return t;
        }

        inline void write_file(const std::string& path, const std::string& text) {
            std::ofstream f(path);
            if (!f) throw ParseError("cannot write " + path, 0);
            f << text;
        }

        inline std::vector<io::ReportRow> run_issuer(const io::IssuerConfig& c, const CalibrationOptions& base) {
            const auto obs_series = io::load_equity_series(c.equity_csv, c.window, {c.debt_face_value, 1.0, c.risk_free_rate}, c.dt);
            std::vector<io::ReportRow> rows;
            for (ModelKind kind : c.models) {
                for (double T : c.maturities) {
                    EquitySeries s = obs_series;
                    s.debt = {c.debt_face_value, T, c.risk_free_rate};
                    CalibrationOptions o = base;
                    o.scaling = c.scaling;
                    CalibrationResult r = [&] {
                        try {
                            return calibrate(kind, s, o);
                        } catch (const NotConverged& e) {
                            return e.result();
                        }
                    }();
                    const double va = r.implied_assets.back();
                    const auto add = [&](Measure m, double rate) {
                        io::ReportRow row;
                        row.ticker = c.ticker;
                        row.model = kind;
                        row.maturity = T;
                        row.measure = m;
                        row.params = r.params.values();
                        row.implied_asset_value = va;
                        row.rate = rate;
                        const auto rep = default_report(r.params, va, c.debt_face_value, {m, rate}, T);
                        row.distance = rep.distance;
                        row.probability = rep.probability;
                        row.iterations = r.iterations;
                        row.converged = r.converged;
                        row.warnings = r.warnings;
                        if (!r.converged) row.warnings.push_back("not converged");
                        rows.push_back(std::move(row));
                    };
                    if (c.measure != io::MeasureChoice::Actual) add(Measure::RiskNeutral, c.risk_free_rate);
                    if (c.measure != io::MeasureChoice::RiskNeutral) add(Measure::Actual, *r.actual_drift);
                }
            }
            return rows;
        }

        inline void error_json(std::ostream& err, const std::string& type, const std::string& message,
                               nlohmann::json extra = nlohmann::json::object()) {
            extra["error"] = type;
            extra["message"] = message;
            err << extra.dump() << '\n';
        }

    }

    //! Entry point shared by the executable and the tests. args excludes the program name.
    inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
        using namespace detail;
        CLI::App app{"Structural credit model toolkit with pure-jump asset dynamics", "jumpcredit"};
        app.require_subcommand(1);

        // price
        ModelOptions price_model;
        double price_va = 0, price_k = 0, price_t = 0, price_r = 0;
        int price_nmax = 15, price_precision = 3;
        bool price_quad = false;
        auto* price = app.add_subcommand("price", "equity value for explicit parameters");
        price_model.add(*price);
        price->add_option("--va", price_va, "asset value")->required()->check(CLI::PositiveNumber);
        price->add_option("--k", price_k, "debt face value")->required()->check(CLI::PositiveNumber);
        price->add_option("--t", price_t, "debt maturity (years)")->required()->check(CLI::PositiveNumber);
        price->add_option("--r", price_r, "risk-free rate");
        price->add_option("--nmax", price_nmax, "symVG series truncation")->check(CLI::PositiveNumber);
        price->add_option("--precision", price_precision, "decimals printed")->check(CLI::Range(0, 17));
        price->add_flag("--quadrature", price_quad, "also print the quadrature oracle value");

        // pd
        ModelOptions pd_model;
        double pd_va = 0, pd_k = 0, pd_r = 0;
        std::optional<double> pd_rbar;
        std::string pd_horizons = "1", pd_measure = "risk-neutral";
        auto* pd = app.add_subcommand("pd", "default probabilities at given horizons");
        pd_model.add(*pd);
        pd->add_option("--va", pd_va, "asset value")->required()->check(CLI::PositiveNumber);
        pd->add_option("--k", pd_k, "debt face value")->required()->check(CLI::PositiveNumber);
        pd->add_option("--r", pd_r, "risk-free rate");
        pd->add_option("--horizons", pd_horizons, "comma separated horizons in years");
        pd->add_option("--measure", pd_measure, "risk-neutral | actual");
        pd->add_option("--rbar", pd_rbar, "actual drift (with --measure actual)");

        // term-structure
        ModelOptions ts_model;
        double ts_va = 0, ts_k = 0, ts_r = 0, ts_max = 10.0;
        int ts_points = 40;
        std::optional<double> ts_rbar;
        std::string ts_measure = "risk-neutral";
        auto* ts = app.add_subcommand("term-structure", "dense default-probability curve as CSV");
        ts_model.add(*ts);
        ts->add_option("--va", ts_va, "asset value")->required()->check(CLI::PositiveNumber);
        ts->add_option("--k", ts_k, "debt face value")->required()->check(CLI::PositiveNumber);
        ts->add_option("--r", ts_r, "risk-free rate");
        ts->add_option("--points", ts_points, "grid size")->check(CLI::PositiveNumber);
        ts->add_option("--max-horizon", ts_max, "last horizon (years)")->check(CLI::PositiveNumber);
        ts->add_option("--measure", ts_measure, "risk-neutral | actual");
        ts->add_option("--rbar", ts_rbar, "actual drift (with --measure actual)");

        // calibrate
        ModelOptions cal_model;
        CalibrationFlags cal_flags;
        std::string cal_equity, cal_config, cal_out_params, cal_out_assets, cal_out_dir;
        double cal_k = 0, cal_t = 1.0, cal_r = 0;
        auto* cal = app.add_subcommand("calibrate", "fit model parameters to an equity series");
        cal->add_option("--model", cal_model.model, "merton | neggamma | negig | symvg");
        cal->add_option("--equity", cal_equity, "CSV with date,value rows");
        cal->add_option("--k", cal_k, "debt face value")->check(CLI::PositiveNumber);
        cal->add_option("--t", cal_t, "debt maturity (years)")->check(CLI::PositiveNumber);
        cal->add_option("--r", cal_r, "risk-free rate");
        cal_flags.add(*cal);
        cal->add_option("--out-params", cal_out_params, "write parameters JSON here (default: stdout)");
        cal->add_option("--out-assets", cal_out_assets, "write implied asset values CSV here");
        cal->add_option("--config", cal_config, "batch mode: issuer config JSON");
        cal->add_option("--out-dir", cal_out_dir, "batch mode: directory for report.json and report.csv");

        // mc-validate
        ModelOptions mc_model;
        double mc_va = 0, mc_k = 0, mc_t = 0, mc_r = 0;
        std::uint64_t mc_paths = 1000000, mc_seed = 42;
        int mc_nmax = 15;
        auto* mcv = app.add_subcommand("mc-validate", "closed form versus Monte Carlo");
        mc_model.add(*mcv);
        mcv->add_option("--va", mc_va, "asset value")->required()->check(CLI::PositiveNumber);
        mcv->add_option("--k", mc_k, "debt face value")->required()->check(CLI::PositiveNumber);
        mcv->add_option("--t", mc_t, "debt maturity (years)")->required()->check(CLI::PositiveNumber);
        mcv->add_option("--r", mc_r, "risk-free rate");
        mcv->add_option("--paths", mc_paths, "number of paths")->check(CLI::Range(100ull, 1000000000ull));
        mcv->add_option("--seed", mc_seed, "RNG seed");
        mcv->add_option("--nmax", mc_nmax, "symVG series truncation")->check(CLI::PositiveNumber);

        // sweep-maturity
        ModelOptions sw_model;
        CalibrationFlags sw_flags;
        std::string sw_equity, sw_maturities = "1,2,3,5,7,10,15";
        double sw_k = 0, sw_r = 0;
        auto* sw = app.add_subcommand("sweep-maturity", "calibrated parameters as a function of T");
        sw_model.add(*sw, false);
        sw->add_option("--equity", sw_equity, "CSV with date,value rows")->required();
        sw->add_option("--k", sw_k, "debt face value")->required()->check(CLI::PositiveNumber);
        sw->add_option("--r", sw_r, "risk-free rate");
        sw->add_option("--maturities", sw_maturities, "comma separated maturities");
        sw_flags.add(*sw);

        std::vector<std::string> argv_store{"jumpcredit"};
        argv_store.insert(argv_store.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : argv_store) argv.push_back(a.c_str());

        try {
            try {
                app.parse(static_cast<int>(argv.size()), argv.data());
            } catch (const CLI::Success& e) {
                return app.exit(e, out, err);
            } catch (const CLI::ParseError& e) {
                if (e.get_exit_code() == 0) return app.exit(e, out, err);
                error_json(err, "UsageError", e.what());
                return kInputError;
            }

            if (price->parsed()) {
                const auto p = price_model.params();
                const DebtSpec debt{price_k, price_t, price_r};
                SeriesControl ctrl;
                ctrl.n_max = price_nmax;
                const auto v = equity_valuation(p, price_va, debt, ctrl);
                const std::string f = "%." + std::to_string(price_precision) + "f";
                out << fmt(f.c_str(), v.value) << '\n';
                if (price_quad) out << fmt(f.c_str(), equity_value_quadrature(p, price_va, debt)) << '\n';
                if (v.perturbed) err << "note: maturity moved to " << io::format_double(v.maturity_used)
                                     << " to avoid a Gamma pole\n";
                return kOk;
            }

            if (pd->parsed()) {
                const auto p = pd_model.params();
                const auto tag = measure_tag(pd_measure, pd_rbar, pd_r);
                const auto hs = parse_list(pd_horizons);
                out << "horizon,measure,distance,probability,probability_pct\n";
                for (const auto& r : term_structure(p, pd_va, pd_k, tag, hs)) {
                    out << io::format_double(r.horizon) << ',' << to_string(r.measure.kind) << ','
                        << fmt("%.10g", r.distance) << ',' << fmt("%.6f", r.probability) << ','
                        << fmt("%.2f", r.probability_pct_rounded()) << '\n';
                }
                return kOk;
            }

            if (ts->parsed()) {
                const auto p = ts_model.params();
                const auto tag = measure_tag(ts_measure, ts_rbar, ts_r);
                out << "horizon,distance,probability\n";
                for (const auto& r : term_structure(p, ts_va, ts_k, tag, default_horizon_grid(ts_points, ts_max)))
                    out << fmt("%.10g", r.horizon) << ',' << fmt("%.12g", r.distance) << ','
                        << fmt("%.12g", r.probability) << '\n';
                return kOk;
            }

            if (cal->parsed()) {
                if (!cal_config.empty()) {
                    const auto issuers = io::load_config(cal_config);
                    io::ReportDocument doc;
                    const auto base = cal_flags.options();
                    for (const auto& c : issuers) {
                        auto rows = run_issuer(c, base);
                        doc.rows.insert(doc.rows.end(), rows.begin(), rows.end());
                    }
                    std::ostringstream csv;
                    io::write_report_csv(csv, doc);
                    const std::string js = io::report_to_json(doc).dump(2) + "\n";
                    if (cal_out_dir.empty()) {
                        out << csv.str();
                    } else {
                        std::filesystem::create_directories(cal_out_dir);
                        write_file((std::filesystem::path(cal_out_dir) / "report.csv").string(), csv.str());
                        write_file((std::filesystem::path(cal_out_dir) / "report.json").string(), js);
                    }
                    for (const auto& r : doc.rows)
                        if (!r.converged) {
                            error_json(err, "NotConverged", r.ticker + " " + std::string(to_string(r.model))
                                                                + " did not converge",
                                       {{"ticker", r.ticker}, {"maturity", r.maturity}});
                            return kNotConverged;
                        }
                    return kOk;
                }
                if (cal_model.model.empty() || cal_equity.empty() || !(cal_k > 0.0))
                    throw DomainError("calibrate needs --model, --equity and --k (or --config)");
                const auto kind = cal_model.kind();
                const auto series = io::load_equity_series(cal_equity, io::Window::parse(cal_flags.window),
                                                           {cal_k, cal_t, cal_r}, cal_flags.dt);
                CalibrationResult r = [&] {
                    try {
                        return calibrate(kind, series, cal_flags.options());
                    } catch (const NotConverged& e) {
                        error_json(err, "NotConverged", e.what(),
                                   {{"iterations", e.result().iterations},
                                    {"last_step", e.result().last_step},
                                    {"trace", trace_json(e.result())}});
                        throw;
                    }
                }();
                nlohmann::json j = io::params_to_json(r.params);
                j["iterations"] = r.iterations;
                j["converged"] = r.converged;
                j["last_step"] = r.last_step;
                j["actual_drift"] = *r.actual_drift;
                j["implied_asset_value"] = r.implied_assets.back();
                j["warnings"] = r.warnings;
                j["trace"] = trace_json(r);
                if (cal_out_params.empty()) out << j.dump(2) << '\n';
                else write_file(cal_out_params, j.dump(2) + "\n");
                if (!cal_out_assets.empty()) {
                    std::vector<Observation> assets;
                    for (std::size_t i = 0; i < series.observations.size(); ++i)
                        assets.push_back({series.observations[i].date, r.implied_assets[i]});
                    std::ostringstream csv;
                    io::write_equity_csv(csv, assets);
                    write_file(cal_out_assets, csv.str());
                }
                return kOk;
            }

            if (mcv->parsed()) {
                const auto p = mc_model.params();
                const DebtSpec debt{mc_k, mc_t, mc_r};
                SeriesControl ctrl;
                ctrl.n_max = mc_nmax;
                const auto est = mc_terminal(p, mc_va, debt, mc_r, mc_paths, mc_seed);
                const double price_cf = equity_value(p, mc_va, debt, ctrl);
                const double pd_cf = default_probability(p, distance_input(p, mc_va, debt, mc_r), mc_t);
                out << "quantity,closed_form,mc_estimate,std_error,z\n";
                const auto row = [&](const char* name, double cf, const McEstimate& e) {
                    const double z = e.std_error > 0.0 ? (e.estimate - cf) / e.std_error : 0.0;
                    out << name << ',' << fmt("%.10g", cf) << ',' << fmt("%.10g", e.estimate) << ','
                        << fmt("%.4g", e.std_error) << ',' << fmt("%.3f", z) << '\n';
                };
                row("equity", price_cf, est.equity);
                row("default_probability", pd_cf, est.default_probability);
                row("martingale", 1.0, est.martingale);
                return kOk;
            }

            if (sw->parsed()) {
                const auto kind = sw_model.kind();
                const auto mats = parse_list(sw_maturities);
                const auto base = io::load_equity_series(sw_equity, io::Window::parse(sw_flags.window), {sw_k, 1.0, sw_r},
                                                         sw_flags.dt);
                const auto names = ModelParams::names(kind);
                out << "maturity";
                for (const auto& n : names) out << ',' << n;
                out << ",iterations,converged,implied_asset_value\n";
                bool all_converged = true;
                for (double T : mats) {
                    EquitySeries s = base;
                    s.debt = {sw_k, T, sw_r};
                    CalibrationResult r = [&] {
                        try {
                            return calibrate(kind, s, sw_flags.options());
                        } catch (const NotConverged& e) {
                            return e.result();
                        }
                    }();
                    all_converged = all_converged && r.converged;
                    out << io::format_double(T);
                    for (double v : r.params.values()) out << ',' << fmt("%.10g", v);
                    out << ',' << r.iterations << ',' << (r.converged ? "true" : "false") << ','
                        << fmt("%.10g", r.implied_assets.back()) << '\n';
                }
                if (!all_converged) {
                    error_json(err, "NotConverged", "at least one maturity did not converge");
                    return kNotConverged;
                }
                return kOk;
            }
        } catch (const NotConverged&) {
            return kNotConverged;
        } catch (const IntegrationError& e) {
            error_json(err, "IntegrationError", e.what());
            return kNotConverged;
        } catch (const ParseError& e) {
            error_json(err, "ParseError", e.what(), {{"line", e.line()}});
            return kInputError;
        } catch (const NonPositiveKurtosis& e) {
            error_json(err, "NonPositiveKurtosis", e.what());
            return kInputError;
        } catch (const DomainError& e) {
            error_json(err, "DomainError", e.what());
            return kInputError;
        } catch (const NoSolution& e) {
            error_json(err, "NoSolution", e.what());
            return kInputError;
        } catch (const std::exception& e) {
            error_json(err, "Error", e.what());
            return kFailure;
        }
        return kInputError;
    }

}

#endif
