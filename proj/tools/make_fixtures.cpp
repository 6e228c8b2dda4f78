// Regenerates data/fixtures/*.csv and data/issuers.json.
// Each issuer gets 252 daily equity values: a NegGamma asset path with its published annual parameters,
// priced into equity with a one-year maturity at its reported debt level.

#include <jumpcredit/io.hpp>
#include <jumpcredit/mc_oracle.hpp>
#include <jumpcredit/pricing.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

using namespace jumpcredit;
namespace fs = std::filesystem;

namespace {

    struct Issuer {
        const char* ticker;
        double face_value;
        double asset_value;
        double lambda;
        double rho;
    };

    // NegGamma fits and debt levels (EUR millions) for the fifteen issuers.
    constexpr Issuer kIssuers[] = {
        {"SAP GY", 16196, 180913, 3.280, 0.888}, {"MRK GY", 14180, 70763, 3.224, 0.645},
        {"AI FP", 14730, 78928, 3.194, 0.559},   {"SU FP", 8473, 71471, 2.200, 0.510},
        {"CRH LN", 10525, 33935, 2.700, 0.684},  {"DAI GY", 161780, 213453, 6.736, 0.530},
        {"VIE FP", 16996, 27243, 4.102, 0.452},  {"SRG IM", 14774, 29527, 2.834, 0.310},
        {"AMP IM", 1339, 8627, 1.784, 0.414},    {"FR FP", 4879, 11379, 2.746, 0.774},
        {"EO FP", 4838, 9993, 3.786, 1.129},     {"GET FP", 4998, 11658, 3.230, 0.612},
        {"LHA GY", 10106, 14635, 4.074, 0.784},  {"PIA IM", 609, 1491, 4.138, 1.050},
        {"CO FP", 14308, 16445, 11.896, 0.745},
    };

    constexpr std::size_t kRows = 252;
    constexpr double kDt = 1.0 / 252.0;

    std::string file_stem(const std::string& ticker) {
        std::string s;
        for (char c : ticker) s += c == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s + "_synthetic";
    }

    std::uint64_t ticker_seed(const std::string& ticker) {
        std::uint64_t h = 1469598103934665603ull;  // FNV-1a
        for (unsigned char c : ticker) h = (h ^ c) * 1099511628211ull;
        return h;
    }

    std::vector<Date> weekdays(Date start, std::size_t n) {
        std::vector<Date> out;
        std::chrono::sys_days d{start};
        while (out.size() < n) {
            const std::chrono::weekday w{d};
            if (w != std::chrono::Saturday && w != std::chrono::Sunday) out.emplace_back(d);
            d += std::chrono::days{1};
        }
        return out;
    }

}

int main(int argc, char** argv) {
    CLI::App app{"Regenerate the synthetic issuer fixtures"};
    std::string out_dir = "data";
    app.add_option("--out", out_dir, "output directory (fixtures/ and issuers.json go here)");
    CLI11_PARSE(app, argc, argv);

    const fs::path root(out_dir);
    fs::create_directories(root / "fixtures");
    const auto dates = weekdays(std::chrono::year{2023} / std::chrono::January / 2, kRows);

    nlohmann::json issuers = nlohmann::json::array();
    for (const auto& is : kIssuers) {
        const std::string ticker = is.ticker;
        const auto annual = ModelParams::neg_gamma(is.lambda, is.rho);
        const auto m = model_moments(annual);
        const auto daily = params_from_moments(ModelKind::NegGamma, m.variance * kDt, m.excess_kurtosis);
        auto x = stratified_increments(daily, 1.0, kRows - 1, ticker_seed(ticker), StratifiedOrder::Balanced);
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(x.size());

        // Path ends at the published asset value.
        std::vector<double> log_path(kRows, 0.0);
        for (std::size_t i = 0; i + 1 < kRows; ++i) log_path[i + 1] = log_path[i] + x[i] - mean;
        const double shift = std::log(is.asset_value) - log_path.back();

        const EquityPricer pricer(annual, DebtSpec{is.face_value, 1.0, 0.0});
        std::vector<Observation> obs;
        for (std::size_t i = 0; i < kRows; ++i) obs.push_back({dates[i], pricer.value(std::exp(log_path[i] + shift))});

        const std::string name = file_stem(ticker) + ".csv";
        std::ofstream f(root / "fixtures" / name);
        io::write_equity_csv(f, obs);
        std::cout << name << ": last equity " << obs.back().value << '\n';

        issuers.push_back({{"ticker", ticker},
                           {"debt_face_value", is.face_value},
                           {"maturities", {1, 5, 10, 15}},
                           {"risk_free_rate", 0.0},
                           {"models", {"merton", "neggamma", "negig", "symvg"}},
                           {"equity_csv", "fixtures/" + name},
                           {"measure", "both"},
                           {"window", "all"},
                           {"dt", kDt},
                           {"moment_scaling", "annualized-variance"}});
    }
    std::ofstream cfg(root / "issuers.json");
    cfg << nlohmann::json{{"issuers", issuers}}.dump(2) << '\n';
}
