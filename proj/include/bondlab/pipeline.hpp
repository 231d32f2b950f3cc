#pragma once

// End-to-end orchestration: raw files -> cleaned trades -> panel -> factors ->
// test assets -> inference tables.

#include "bondlab/csr.hpp"
#include "bondlab/factors.hpp"
#include "bondlab/ingest.hpp"
#include "bondlab/returns.hpp"
#include "bondlab/signals.hpp"
#include "bondlab/testassets.hpp"

namespace bondlab {

struct RunConfig {
    // inputs
    std::string trades, master, ratings, riskfree, curve, factors;
    std::string industry_map;        // optional; FF12 on SIC codes otherwise
    std::string holidays;            // optional
    std::string reference_factors;   // optional, for the replication comparison in table 1
    std::string output = "out";

    std::uint64_t seed = 1;
    int threads = 0;  // 0 = leave the OpenMP default
    int hac_lags = 3;
    int fm_lags = 12;
    long long chi2_draws = 100000;
    int bootstrap_reps = 1000;
    int bootstrap_block = 6;
    int multi_reps = 2000;
    double multi_block = 4.0;
    double rank_threshold = 1e-3;
    std::optional<MonthId> sample_start, sample_end;

    bool gls = true;
    bool table1 = true, table2 = true, table3 = true, table4 = true, table5 = true, table6 = true;
    bool frontier = true;

    PanelOptions panel{};
    SignalOptions signals{};
    LiquidityOptions liquidity{};
    int sort_bins = 5;

    nlohmann::json raw;  // the document as read, hashed into the manifest
};

/// Relative paths are taken relative to base_dir.
RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

struct ReportFile {
    std::string name;
    std::string checksum;  // FNV-1a 64, hex
    std::size_t bytes = 0;
};

struct ReportBundle {
    std::string output_dir;
    std::vector<ReportFile> files;
    std::string config_hash;
    std::vector<std::string> notes;
};

/// Ingest stage alone: parse, TRACE filters, cancel/correct/reverse, FISD filters, universe.
struct IngestResult {
    std::vector<TradeRecord> trades;
    std::vector<BondMaster> master;
    std::vector<FilterReport> reports;
    nlohmann::json report_json() const;
};
IngestResult run_ingest(const std::string& trades_path, const std::string& master_path);
void write_ingest(const IngestResult& r, const std::string& out_dir, const std::string& report_path);

/// Daily prices, monthly panel and formation signals from cleaned inputs.
struct PanelResult {
    DailySeries daily;
    ReturnPanel panel;
};
PanelResult run_panel(const std::vector<TradeRecord>& trades, const std::vector<BondMaster>& master,
                      const std::string& riskfree, const std::string& ratings, const std::string& curve,
                      const BusinessCalendar& cal, const PanelOptions& popt = {}, const SignalOptions& sopt = {});

ReportBundle run_pipeline(const RunConfig& cfg);

}  // namespace bondlab
