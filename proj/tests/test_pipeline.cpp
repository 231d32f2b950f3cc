#include "bondlab/harness.hpp"
#include "bondlab/pipeline.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bondlab;
namespace fs = std::filesystem;

namespace {

const fs::path& data_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "bondlab_pipeline_test";
        fs::remove_all(d);
        SyntheticConfig c;
        c.seed = 11;
        c.bonds = 150;
        c.months = 60;
        write_universe(gen_universe(c), (d / "data").string());
        return d;
    }();
    return dir;
}

nlohmann::json base_config(const std::string& out) {
    return {{"inputs",
             {{"trades", "data/trades.csv"},
              {"master", "data/master.csv"},
              {"ratings", "data/ratings.csv"},
              {"riskfree", "data/riskfree.csv"},
              {"curve", "data/curve.csv"},
              {"factors", "data/factors.csv"}}},
            {"output", out},
            {"seed", 5},
            {"chi2_draws", 2000},
            {"bootstrap_reps", 100},
            {"multi_reps", 200}};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(BONDLAB_CLI) + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
    auto c = run_config_from_json(base_config("out"), "/x/y");
    CHECK(c.trades == "/x/y/data/trades.csv");
    CHECK(c.output == "/x/y/out");
    CHECK(c.chi2_draws == 2000);
    auto j = base_config("out");
    j["inputs"].erase("trades");
    CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
    j = base_config("out");
    j["chi2_draws"] = 10;
    CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
    j = base_config("out");
    j["seed"] = "abc";
    CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
    j = base_config("out");
    j["tables"] = {{"table4", false}};
    j["gls"] = false;
    j["signals"] = {{"illiq_min_pairs", 3}};
    auto g = run_config_from_json(j);
    CHECK_FALSE(g.table4);
    CHECK(g.table3);
    CHECK_FALSE(g.gls);
    CHECK(g.signals.illiq.min_pairs == 3);
    CHECK_THROWS_AS(load_run_config("/nonexistent/run.json"), ConfigError);
}

TEST_CASE("full run writes every output and is byte-identical on re-run") {
    const fs::path d = data_dir();
    auto cfg = run_config_from_json(base_config("out1"), d.string());
    auto a = run_pipeline(cfg);
    std::vector<std::string> names;
    for (const auto& f : a.files) names.push_back(f.name);
    for (const char* want : {"filter_report.json", "panel.csv", "factors.csv", "test_assets.csv", "table1.csv",
                             "table2.csv", "table3.csv", "table4.csv", "table5.csv", "table6.csv", "frontier.csv"})
        CHECK(std::find(names.begin(), names.end(), want) != names.end());
    CHECK(fs::exists(d / "out1" / "manifest.json"));

    auto cfg2 = run_config_from_json(base_config("out2"), d.string());
    auto b = run_pipeline(cfg2);
    REQUIRE(a.files.size() == b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) {
        CHECK(a.files[i].checksum == b.files[i].checksum);
        CHECK(slurp(d / "out1" / a.files[i].name) == slurp(d / "out2" / b.files[i].name));
    }
    CHECK(slurp(d / "out1" / "manifest.json") == slurp(d / "out2" / "manifest.json"));

    auto m = nlohmann::json::parse(slurp(d / "out1" / "manifest.json"));
    CHECK(m["seed"] == 5);
    CHECK(m["config_hash"] == a.config_hash);

    // the filter report balances stage by stage
    auto fr = nlohmann::json::parse(slurp(d / "out1" / "filter_report.json"));
    REQUIRE(fr.is_array() == false);
    for (const auto& st : fr["stages"]) {
        long long removed = 0;
        for (const auto& r : st["removed"]) removed += r["count"].get<long long>();
        CHECK(st["input"].get<long long>() == st["output"].get<long long>() + removed);
    }

    // tables are long CSVs with the standard header
    for (const char* t : {"table2.csv", "table3.csv", "table6.csv"}) {
        std::istringstream in(slurp(d / "out1" / t));
        std::string header;
        std::getline(in, header);
        CHECK(header == "panel,row,column,value");
    }
}

TEST_CASE("GLS toggle and table toggles gate the outputs") {
    const fs::path d = data_dir();
    auto j = base_config("out_ols");
    j["gls"] = false;
    j["tables"] = {{"table4", false}, {"frontier", false}};
    auto b = run_pipeline(run_config_from_json(j, d.string()));
    std::string t3 = slurp(d / "out_ols" / "table3.csv");
    CHECK(t3.find("\nOLS,") != std::string::npos);
    CHECK(t3.find("\nGLS") == std::string::npos);
    for (const auto& f : b.files) {
        CHECK(f.name != "table4.csv");
        CHECK(f.name != "frontier.csv");
    }
}

TEST_CASE("stage errors keep their category") {
    const fs::path d = data_dir();
    auto j = base_config("out_bad");
    j["inputs"]["riskfree"] = "data/missing_rf.csv";
    CHECK_THROWS_AS(run_pipeline(run_config_from_json(j, d.string())), ConfigError);
    {
        std::ofstream f(d / "data" / "short_rf.csv");
        f << "month,rf\n2004-08,0.1\n";
    }
    j["inputs"]["riskfree"] = "data/short_rf.csv";
    try {
        run_pipeline(run_config_from_json(j, d.string()));
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("risk-free") != std::string::npos);
    }
}

TEST_CASE("command line exit codes") {
    const fs::path d = data_dir();
    const std::string dd = (d / "data").string();
    CHECK(run_cli("") == 2);
    CHECK(run_cli("run") == 2);
    CHECK(run_cli("run --config " + (d / "nope.json").string()) == 2);
    {
        std::ofstream f(d / "broken.json");
        f << "{ not json";
    }
    CHECK(run_cli("run --config " + (d / "broken.json").string()) == 2);
    CHECK(run_cli("ingest --trades " + dd + "/trades.csv --master " + dd + "/master.csv --out " +
                  (d / "clean").string() + " --report " + (d / "clean" / "report.json").string()) == 0);
    CHECK(fs::exists(d / "clean" / "trades.csv"));
    CHECK(fs::exists(d / "clean" / "report.json"));
    CHECK(run_cli("panel --clean " + (d / "clean").string() + " --riskfree " + dd + "/riskfree.csv --ratings " + dd +
                  "/ratings.csv --curve " + dd + "/curve.csv --out " + (d / "panel").string()) == 0);
    CHECK(fs::exists(d / "panel" / "panel.csv"));
    CHECK(run_cli("panel --clean " + (d / "clean").string() + " --riskfree " + (d / "data" / "short_rf.csv").string() +
                  " --ratings " + dd + "/ratings.csv --out " + (d / "panel2").string()) == 3);
    {
        std::ofstream f(d / "synth.json");
        f << R"({"seed": 3, "bonds": 5, "months": 4})";
    }
    CHECK(run_cli("synth --config " + (d / "synth.json").string() + " --out " + (d / "syn").string()) == 0);
    CHECK(fs::exists(d / "syn" / "truth_returns.csv"));
    {
        std::ofstream f(d / "synth_bad.json");
        f << R"({"bonds": -1})";
    }
    CHECK(run_cli("synth --config " + (d / "synth_bad.json").string() + " --out " + (d / "syn2").string()) == 2);
    // a singular factor covariance is rejected when the config is validated
    {
        std::ofstream f(d / "synth_sing.json");
        f << R"({"seed": 3, "bonds": 5, "months": 4, "factor_mean": [0.1, 0.1], "factor_cov": [[1, 1], [1, 1]]})";
    }
    CHECK(run_cli("synth --config " + (d / "synth_sing.json").string() + " --out " + (d / "syn3").string()) == 2);
}
