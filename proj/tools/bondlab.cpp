#include "bondlab/harness.hpp"
#include "bondlab/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace bondlab;

namespace {

nlohmann::json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
}

std::vector<TradeRecord> load_trades(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    FilterReport r;
    return parse_trades(f, r);
}

std::vector<BondMaster> load_master(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    FilterReport r;
    return parse_master(f, r);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bondlab: corporate bond factor pipeline"};
    app.require_subcommand(1);

    std::string trades, master, out, report;
    auto* ingest = app.add_subcommand("ingest", "clean TRACE trades and the bond master");
    ingest->add_option("--trades", trades, "raw trade file")->required();
    ingest->add_option("--master", master, "bond master file")->required();
    ingest->add_option("--out", out, "directory for cleaned files")->required();
    ingest->add_option("--report", report, "filter report (JSON)")->required();

    std::string clean, riskfree, ratings, curve, holidays;
    auto* panel = app.add_subcommand("panel", "build the monthly bond panel from cleaned files");
    panel->add_option("--clean", clean, "directory written by ingest")->required();
    panel->add_option("--riskfree", riskfree, "monthly risk-free rates")->required();
    panel->add_option("--ratings", ratings, "rating history")->required();
    panel->add_option("--curve", curve, "government zero curve");
    panel->add_option("--holidays", holidays, "holiday list");
    panel->add_option("--out", out, "output directory")->required();

    std::string config;
    auto* run = app.add_subcommand("run", "run the full pipeline");
    run->add_option("--config", config, "run config (JSON)")->required();

    auto* synth = app.add_subcommand("synth", "generate a synthetic universe");
    synth->add_option("--config", config, "synthetic config (JSON)")->required();
    synth->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*ingest) {
            auto r = run_ingest(trades, master);
            write_ingest(r, out, report);
            std::cout << "kept " << r.trades.size() << " trades on " << r.master.size() << " bonds\n";
        } else if (*panel) {
            namespace fs = std::filesystem;
            BusinessCalendar cal = holidays.empty() ? BusinessCalendar() : BusinessCalendar::from_file(holidays);
            auto t = load_trades((fs::path(clean) / "trades.csv").string());
            auto m = load_master((fs::path(clean) / "master.csv").string());
            auto r = run_panel(t, m, riskfree, ratings, curve, cal);
            fs::create_directories(out);
            std::ofstream pf(fs::path(out) / "panel.csv", std::ios::binary), df(fs::path(out) / "daily.csv", std::ios::binary);
            if (!pf || !df) throw ConfigError("cannot write to " + out);
            write_panel(pf, r.panel);
            write_daily(df, r.daily);
            std::cout << "panel: " << r.panel.rows.size() << " bond-months\n";
        } else if (*run) {
            auto b = run_pipeline(load_run_config(config));
            for (const auto& f : b.files) std::cout << f.name << ' ' << f.checksum << '\n';
        } else if (*synth) {
            auto u = gen_universe(synthetic_config_from_json(read_json(config)));
            write_universe(u, out);
            std::cout << "wrote " << u.trades.size() << " trade records for " << u.master.size() << " bonds\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
