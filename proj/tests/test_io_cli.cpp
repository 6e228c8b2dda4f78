#include <jumpcredit/cli.hpp>
#include <jumpcredit/io.hpp>

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace jumpcredit;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

    const fs::path kData = JUMPCREDIT_DATA_DIR;

    struct Run {
        int code;
        std::string out;
        std::string err;
    };

    Run run(std::vector<std::string> args) {
        std::ostringstream out, err;
        const int code = cli::run_command(args, out, err);
        return {code, out.str(), err.str()};
    }

    std::string csv_with(const std::vector<std::string>& rows) {
        std::string s = "date,value\n";
        for (const auto& r : rows) s += r + "\n";
        return s;
    }

    fs::path temp_dir(const std::string& name) {
        const auto d = fs::temp_directory_path() / ("jumpcredit_test_" + name);
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }

    std::vector<std::string> lines(const std::string& s) {
        std::vector<std::string> out;
        std::istringstream in(s);
        for (std::string l; std::getline(in, l);) out.push_back(l);
        return out;
    }

}

TEST_CASE("equity CSV parsing reports the failing line") {
    std::istringstream ok(csv_with({"2024-01-02,10.5", "2024-01-03, 11", "", "2024-01-05,12.25"}));
    const auto obs = io::read_equity_csv(ok);
    REQUIRE(obs.size() == 3);
    CHECK(obs[1].value == 11.0);
    CHECK(io::format_date(obs[2].date) == "2024-01-05");

    // header is line 1, so the sixth data row is line 7
    std::istringstream neg(csv_with({"2024-01-02,1", "2024-01-03,1", "2024-01-04,1", "2024-01-05,1", "2024-01-08,1",
                                     "2024-01-09,-1"}));
    try {
        io::read_equity_csv(neg);
        FAIL("expected NonPositivePrice");
    } catch (const NonPositivePrice& e) {
        CHECK(e.line() == 7);
    }
    std::istringstream dup(csv_with({"2024-01-02,1", "2024-01-02,2"}));
    CHECK_THROWS_AS(io::read_equity_csv(dup), NonMonotoneDates);
    std::istringstream back(csv_with({"2024-01-03,1", "2024-01-02,2"}));
    CHECK_THROWS_AS(io::read_equity_csv(back), NonMonotoneDates);
    std::istringstream bad_date(csv_with({"2024-13-02,1"}));
    try {
        io::read_equity_csv(bad_date);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    std::istringstream bad_num(csv_with({"2024-01-02,abc"}));
    CHECK_THROWS_AS(io::read_equity_csv(bad_num), ParseError);
    std::istringstream no_header("2024-01-02,1\n");
    CHECK_THROWS_AS(io::read_equity_csv(no_header), ParseError);
    std::istringstream empty("");
    CHECK_THROWS_AS(io::read_equity_csv(empty), ParseError);
}

TEST_CASE("equity CSV round trip is exact") {
    std::vector<Observation> obs;
    for (int i = 0; i < 40; ++i)
        obs.push_back({Date{std::chrono::sys_days{std::chrono::days{19500 + i}}}, 100.0 / 3.0 + i * 0.1});
    std::ostringstream out;
    io::write_equity_csv(out, obs);
    std::istringstream in(out.str());
    const auto back = io::read_equity_csv(in);
    REQUIRE(back.size() == obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        CHECK(back[i].date == obs[i].date);
        CHECK(back[i].value == obs[i].value);
    }
}

TEST_CASE("windows") {
    CHECK(io::Window::parse("1y").kind == io::Window::Kind::OneYear);
    CHECK(io::Window::parse("all").kind == io::Window::Kind::All);
    const auto r = io::Window::parse("2023-02-01:2023-03-01");
    CHECK(r.kind == io::Window::Kind::Range);
    CHECK(r.str() == "2023-02-01:2023-03-01");
    CHECK_THROWS_AS(io::Window::parse("3y"), ParseError);
    CHECK_THROWS_AS(io::Window::parse("2023-03-01:2023-02-01"), ParseError);

    std::vector<Observation> obs;
    for (int i = 0; i < 600; ++i) obs.push_back({Date{std::chrono::sys_days{std::chrono::days{18000 + i}}}, 1.0 + i});
    const auto one = io::Window::parse("1y").apply(obs);
    REQUIRE(one.size() == 252);
    CHECK(one.back().value == 600.0);
    CHECK(one.front().value == 349.0);
    CHECK(io::Window::parse("2y").apply(obs).size() == 504);
    CHECK(io::Window::parse("all").apply(obs).size() == 600);
}

TEST_CASE("shipped fixtures and config") {
    const auto cfg = io::load_config(kData / "issuers.json");
    REQUIRE(cfg.size() == 15);
    CHECK(cfg[0].ticker == "SAP GY");
    CHECK(cfg[0].debt_face_value == 16196.0);
    CHECK(cfg[0].models.size() == 4);
    CHECK(cfg[0].maturities == std::vector<double>{1.0, 5.0, 10.0, 15.0});
    CHECK(cfg[0].scaling == MomentScaling::AnnualizedVariance);
    const auto get = std::find_if(cfg.begin(), cfg.end(), [](const auto& c) { return c.ticker == "GET FP"; });
    REQUIRE(get != cfg.end());
    CHECK(get->debt_face_value == 4998.0);
    for (const auto& c : cfg) {
        INFO(c.ticker);
        const auto s = io::load_equity_series(c.equity_csv, c.window, {c.debt_face_value, 1.0, 0.0}, c.dt);
        CHECK(s.observations.size() == 252);
        CHECK_NOTHROW(s.validate());
    }
    CHECK_THROWS_AS(io::load_config(kData / "does_not_exist.json"), ParseError);
}

TEST_CASE("report CSV round trip") {
    io::ReportDocument doc;
    io::ReportRow r;
    r.ticker = "SAP GY";
    r.model = ModelKind::NegGamma;
    r.maturity = 5.0;
    r.measure = Measure::Actual;
    r.params = {3.2801234567891, 0.88812345678901};
    r.implied_asset_value = 180913.123456789012;
    r.rate = 0.0123456789012;
    r.distance = 2.64961234567891;
    r.probability = 1.23456789012e-4;
    r.iterations = 7;
    r.converged = true;
    r.warnings = {"a", "b"};
    doc.rows.push_back(r);
    r.model = ModelKind::Merton;
    r.params = {0.25};
    r.converged = false;
    r.warnings.clear();
    doc.rows.push_back(r);
    std::ostringstream out;
    io::write_report_csv(out, doc);
    std::istringstream in(out.str());
    const auto back = io::read_report_csv(in);
    REQUIRE(back.rows.size() == 2);
    const auto close = [](double a, double b) { return std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(b)); };
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& a = back.rows[i];
        const auto& b = doc.rows[i];
        CHECK(a.ticker == b.ticker);
        CHECK(a.model == b.model);
        CHECK(a.measure == b.measure);
        CHECK(a.params.size() == b.params.size());
        for (std::size_t j = 0; j < a.params.size(); ++j) CHECK(close(a.params[j], b.params[j]));
        CHECK(close(a.implied_asset_value, b.implied_asset_value));
        CHECK(close(a.rate, b.rate));
        CHECK(close(a.distance, b.distance));
        CHECK(close(a.probability, b.probability));
        CHECK(a.iterations == b.iterations);
        CHECK(a.converged == b.converged);
        CHECK(a.warnings.size() == b.warnings.size());
    }
    std::istringstream bad(std::string(io::kReportHeader) + "\nSAP GY,neggamma,1\n");
    CHECK_THROWS_AS(io::read_report_csv(bad), ParseError);
}

TEST_CASE("price command") {
    const auto r = run({"price", "--model", "symvg", "--sigma", "0.2402", "--nu", "3.2453", "--va", "11666.7", "--k",
                        "4998", "--t", "1"});
    CHECK(r.code == 0);
    CHECK(r.out == "6676.847\n");
    const auto r7 = run({"price", "--model", "symvg", "--sigma", "0.2402", "--nu", "3.2453", "--va", "11666.7", "--k",
                         "4998", "--t", "1", "--nmax", "7"});
    CHECK(r7.out == "6693.990\n");
    const auto missing = run({"price", "--model", "neggamma", "--lambda", "3", "--va", "100", "--k", "50", "--t", "1"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("\"error\"") != std::string::npos);
    CHECK(run({"price", "--model", "bogus", "--va", "1", "--k", "1", "--t", "1"}).code == 2);
    CHECK(run({"price", "--model", "merton", "--sigma", "0.2", "--va", "-5", "--k", "1", "--t", "1"}).code == 2);
    CHECK(run({"no-such-command"}).code == 2);
}

TEST_CASE("pd and term-structure commands") {
    const auto below = run({"pd", "--model", "neggamma", "--lambda", "3.28", "--rho", "0.888", "--va", "100", "--k",
                            "200"});
    REQUIRE(below.code == 0);
    const auto bl = lines(below.out);
    REQUIRE(bl.size() == 2);
    CHECK(bl[0] == "horizon,measure,distance,probability,probability_pct");
    CHECK(bl[1].find(",1.000000,100.00") != std::string::npos);

    const auto sap = run({"pd", "--model", "neggamma", "--lambda", "3.28", "--rho", "0.888", "--va", "180913", "--k",
                          "16196", "--horizons", "1,5"});
    const auto sl = lines(sap.out);
    REQUIRE(sl.size() == 3);
    CHECK(sl[1].substr(sl[1].rfind(',') + 1) == "0.01");

    const auto ts = run({"term-structure", "--model", "negig", "--lambda", "2", "--mu", "0.5", "--va", "150", "--k",
                         "100", "--points", "20", "--max-horizon", "5"});
    REQUIRE(ts.code == 0);
    const auto tl = lines(ts.out);
    REQUIRE(tl.size() == 21);
    double prev = -1.0;
    for (std::size_t i = 1; i < tl.size(); ++i) {
        const double p = std::stod(tl[i].substr(tl[i].rfind(',') + 1));
        CHECK(p >= prev);
        prev = p;
    }
    CHECK(run({"pd", "--model", "merton", "--sigma", "0.2", "--va", "1", "--k", "1", "--measure", "both"}).code == 2);
}

TEST_CASE("calibrate command") {
    const auto equity = (kData / "fixtures" / "sap_gy_synthetic.csv").string();
    const std::vector<std::string> base{"calibrate", "--model", "neggamma", "--equity", equity, "--k", "16196",
                                        "--t", "1", "--dt", "0.003968253968253968", "--moment-scaling",
                                        "annualized-variance"};
    const auto ok = run(base);
    REQUIRE(ok.code == 0);
    const auto j = nlohmann::json::parse(ok.out);
    CHECK(j.at("converged").get<bool>());
    CHECK(j.at("lambda").get<double>() == Approx(3.280).epsilon(0.15));
    CHECK(j.at("implied_asset_value").get<double>() == Approx(180913.0).epsilon(1e-3));
    CHECK(ok.out == run(base).out);  // identical output across runs

    auto capped = base;
    capped.insert(capped.end(), {"--max-iter", "1", "--tol", "1e-12"});
    const auto nc = run(capped);
    CHECK(nc.code == 3);
    const auto e = nlohmann::json::parse(nc.err);
    CHECK(e.at("error") == "NotConverged");
    CHECK(e.at("iterations") == 1);
    CHECK(e.at("trace").size() == 2);

    const auto dir = temp_dir("cal");
    {
        std::ofstream f(dir / "short.csv");
        f << csv_with({"2024-01-02,1", "2024-01-03,2"});
    }
    CHECK(run({"calibrate", "--model", "merton", "--equity", (dir / "short.csv").string(), "--k", "1", "--t", "1"}).code
          == 2);
    {
        std::ofstream f(dir / "neg.csv");
        f << csv_with({"2024-01-02,1", "2024-01-03,-2"});
    }
    const auto neg = run({"calibrate", "--model", "merton", "--equity", (dir / "neg.csv").string(), "--k", "1", "--t",
                          "1"});
    CHECK(neg.code == 2);
    CHECK(nlohmann::json::parse(neg.err).at("line") == 3);
}

TEST_CASE("batch calibration writes both reports") {
    const auto dir = temp_dir("batch");
    nlohmann::json cfg;
    cfg["issuers"] = nlohmann::json::array();
    cfg["issuers"].push_back({{"ticker", "GET FP"},
                              {"debt_face_value", 4998},
                              {"maturities", {1, 5}},
                              {"models", {"merton", "neggamma"}},
                              {"equity_csv", (kData / "fixtures" / "get_fp_synthetic.csv").string()},
                              {"measure", "both"},
                              {"dt", 1.0 / 252.0},
                              {"moment_scaling", "annualized-variance"}});
    {
        std::ofstream f(dir / "cfg.json");
        f << cfg.dump();
    }
    const auto r = run({"calibrate", "--config", (dir / "cfg.json").string(), "--out-dir", (dir / "out").string()});
    REQUIRE(r.code == 0);
    std::ifstream csv(dir / "out" / "report.csv");
    const auto doc = io::read_report_csv(csv);
    CHECK(doc.rows.size() == 2 * 2 * 2);  // models x maturities x measures
    for (const auto& row : doc.rows) CHECK(row.converged);
    std::ifstream js(dir / "out" / "report.json");
    const auto j = nlohmann::json::parse(js);
    CHECK(j.dump().find("GET FP") != std::string::npos);

    {
        std::ofstream f(dir / "broken.json");
        f << "{\"issuers\": [ {\"ticker\": \"X\" ";
    }
    CHECK(run({"calibrate", "--config", (dir / "broken.json").string()}).code == 2);
}

TEST_CASE("mc-validate and sweep-maturity commands") {
    const auto mc = run({"mc-validate", "--model", "neggamma", "--lambda", "3.28", "--rho", "0.888", "--va", "180913",
                         "--k", "16196", "--t", "1", "--paths", "20000", "--seed", "1"});
    REQUIRE(mc.code == 0);
    const auto ml = lines(mc.out);
    REQUIRE(ml.size() == 4);
    CHECK(ml[0] == "quantity,closed_form,mc_estimate,std_error,z");
    CHECK(ml[1].rfind("equity,", 0) == 0);
    CHECK(ml[3].rfind("martingale,", 0) == 0);
    CHECK(mc.out == run({"mc-validate", "--model", "neggamma", "--lambda", "3.28", "--rho", "0.888", "--va", "180913",
                         "--k", "16196", "--t", "1", "--paths", "20000", "--seed", "1"})
                        .out);

    const auto sw = run({"sweep-maturity", "--model", "merton", "--equity",
                         (kData / "fixtures" / "sap_gy_synthetic.csv").string(), "--k", "16196", "--maturities",
                         "1,5"});
    REQUIRE(sw.code == 0);
    CHECK(lines(sw.out).size() == 3);
}
