#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "medaug/config.hpp"
#include "medaug/errors.hpp"
#include "medaug/experiment.hpp"

using namespace medaug;
namespace fs = std::filesystem;

namespace {

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// small but real: every strategy exercises the full pipeline
std::string base_config(const std::string& out_dir, const std::string& mode,
                        const std::string& extra) {
    return "[run]\n"
           "mode = " + mode + "\n"
           "seeds = 11, 12\n"
           "output_dir = " + out_dir + "\n"
           "[benchmark]\n"
           "n_docs = 240\n"
           "content_vocab = 60\n"
           "positive_phrases = 4\n"
           "negative_phrases = 4\n"
           "len_min = 8\n"
           "len_max = 14\n"
           "positive_prior = 0.25\n"
           "[generator]\n"
           "d_model = 16\n"
           "n_heads = 2\n"
           "n_blocks = 1\n"
           "context_len = 40\n"
           "ffn_mult = 2\n"
           "epochs = 1\n"
           "batch_size = 8\n"
           "[classifier]\n"
           "embed_dim = 12\n"
           "hidden_dim = 16\n"
           "epochs = 3\n"
           "batch_size = 16\n"
           "[augmentation]\n"
           "counts = 24\n"
           "top_k = 20\n"
           "max_len = 16\n" +
           extra;
}

ResultTable run_into(const std::string& dir, const std::string& mode,
                     const std::string& extra) {
    fs::remove_all(dir);
    ExperimentConfig cfg = parse_experiment_config(base_config(dir, mode, extra));
    return run_experiment(cfg);
}

std::map<std::string, std::map<std::uint64_t, nlohmann::json>> records_by_strategy(
    const std::string& dir) {
    std::map<std::string, std::map<std::uint64_t, nlohmann::json>> out;
    std::istringstream in(read_all(dir + "/runs.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
        nlohmann::json rec = nlohmann::json::parse(line);
        out[rec.at("strategy")][rec.at("seed").get<std::uint64_t>()] = rec;
    }
    return out;
}

}  // namespace

TEST_CASE("compare_strategies produces one row per strategy with artifacts") {
    const std::string dir = "exp_out_compare";
    ResultTable table = run_into(
        dir, "compare_strategies",
        "[strategies]\nlist = none, base, confidence_filter, medaug\n[distill]\ntaus = 1\n");

    REQUIRE(table.rows.size() == 4);
    CHECK(table.with_test);
    CHECK(table.rows[0].strategy == "none");
    CHECK(table.rows[0].params == "count=0");
    CHECK(table.rows[1].strategy == "base");
    CHECK(table.rows[1].params == "count=24");
    CHECK(table.rows[2].strategy == "confidence_filter");
    CHECK(table.rows[2].params == "count=24 keep=0.5");
    CHECK(table.rows[3].strategy == "medaug");
    CHECK(table.rows[3].params == "count=24 tau=1");
    for (const ResultRow& row : table.rows) {
        CHECK(row.n_seeds == 2);
        CHECK(row.with_test);
        CHECK(row.valid_auroc.mean > 0.5);  // learned something
        CHECK(row.valid_auroc.stddev >= 0.0);
    }

    CHECK(fs::exists(dir + "/results.csv"));
    CHECK(fs::exists(dir + "/runs.jsonl"));
    CHECK(fs::exists(dir + "/summary.md"));

    std::string csv = read_all(dir + "/results.csv");
    CHECK(csv.rfind("strategy,params,seeds,valid_auroc_mean", 0) == 0);
    CHECK(csv.find("test_rp80_std") != std::string::npos);
    CHECK(csv == table.to_csv());

    // 4 cells x 2 seeds, cell-major
    auto recs = records_by_strategy(dir);
    CHECK(recs.size() == 4);
    for (const auto& [strategy, by_seed] : recs) {
        CHECK(by_seed.size() == 2);
        for (const auto& [seed, rec] : by_seed) {
            CHECK(rec.contains("valid"));
            CHECK(rec.contains("test"));
            CHECK(rec.at("sizes").at("train") == 192);
            if (strategy == "none") CHECK(rec.at("sizes").at("synthetic") == 0);
            if (strategy == "base") {
                CHECK(rec.at("sizes").at("synthetic") == 24);
                CHECK(rec.at("sizes").at("combined") == 216);
            }
            if (strategy == "medaug") {
                CHECK(rec.at("tau") == 1.0);
                CHECK(rec.at("kl_scope") == "all_samples");
            }
            if (strategy == "confidence_filter") CHECK(rec.at("keep_fraction") == 0.5);
        }
    }

    // both seeds saw the same config, different corpora
    std::string summary = read_all(dir + "/summary.md");
    CHECK(summary.find("mode: compare_strategies") != std::string::npos);
    CHECK(summary.find(table.to_markdown()) != std::string::npos);

    std::string report = report_from_run_dir(dir);
    CHECK(report == "# Run report\n\n- mode: compare_strategies\n\n" + table.to_markdown());
}

TEST_CASE("reruns are byte-identical, whatever the worker count") {
    const std::string dir = "exp_out_rerun";
    run_into(dir, "compare_strategies", "[strategies]\nlist = none, base\n");
    std::string csv_one = read_all(dir + "/results.csv");
    std::string jsonl_one = read_all(dir + "/runs.jsonl");
    std::string summary_one = read_all(dir + "/summary.md");

    run_into(dir, "compare_strategies", "[strategies]\nlist = none, base\n");
    CHECK(read_all(dir + "/results.csv") == csv_one);
    CHECK(read_all(dir + "/runs.jsonl") == jsonl_one);
    CHECK(read_all(dir + "/summary.md") == summary_one);

    setenv("MEDAUG_THREADS", "2", 1);
    run_into(dir, "compare_strategies", "[strategies]\nlist = none, base\n");
    setenv("MEDAUG_THREADS", "1", 1);
    std::string jsonl_two_workers = read_all(dir + "/runs.jsonl");
    run_into(dir, "compare_strategies", "[strategies]\nlist = none, base\n");
    unsetenv("MEDAUG_THREADS");
    CHECK(jsonl_two_workers == jsonl_one);
    CHECK(read_all(dir + "/runs.jsonl") == jsonl_one);
}

TEST_CASE("medaug with tau zero matches base exactly") {
    const std::string dir = "exp_out_tau0";
    ResultTable table = run_into(dir, "compare_strategies",
                                 "[strategies]\nlist = base, medaug\n[distill]\ntaus = 0\n");
    REQUIRE(table.rows.size() == 2);
    const ResultRow& base = table.rows[0];
    const ResultRow& medaug_row = table.rows[1];
    CHECK(medaug_row.valid_auroc.mean == base.valid_auroc.mean);
    CHECK(medaug_row.valid_auprc.mean == base.valid_auprc.mean);
    CHECK(medaug_row.valid_rp80.mean == base.valid_rp80.mean);
    CHECK(medaug_row.test_auroc.mean == base.test_auroc.mean);

    // the trained students are literally the same model
    auto recs = records_by_strategy(dir);
    for (std::uint64_t seed : {11ULL, 12ULL})
        CHECK(recs.at("base").at(seed).at("hashes").at("student") ==
              recs.at("medaug").at(seed).at("hashes").at("student"));
}

TEST_CASE("synth_count sweeps counts without touching the test set") {
    const std::string dir = "exp_out_counts";
    fs::remove_all(dir);
    ExperimentConfig cfg = parse_experiment_config(base_config(dir, "synth_count", "")
                                                   + "[strategies]\nlist = base\n");
    cfg.synth_counts = {8, 16};
    ResultTable table = run_experiment(cfg);

    REQUIRE(table.rows.size() == 2);
    CHECK_FALSE(table.with_test);
    CHECK(table.rows[0].params == "count=8");
    CHECK(table.rows[1].params == "count=16");
    for (const ResultRow& row : table.rows) CHECK_FALSE(row.with_test);

    std::string csv = read_all(dir + "/results.csv");
    CHECK(csv.find("test_auroc") == std::string::npos);
    auto recs = records_by_strategy(dir);
    for (const auto& [seed, rec] : recs.at("base"))
        CHECK_FALSE(rec.contains("test"));
}

TEST_CASE("finetune_modes enumerates prompt and balance combinations") {
    const std::string dir = "exp_out_modes";
    ResultTable table = run_into(dir, "finetune_modes", "");
    REQUIRE(table.rows.size() == 4);
    CHECK(table.rows[0].params == "prompt=with_context balanced=yes count=24");
    CHECK(table.rows[1].params == "prompt=with_context balanced=no count=24");
    CHECK(table.rows[2].params == "prompt=without_context balanced=yes count=24");
    CHECK(table.rows[3].params == "prompt=without_context balanced=no count=24");
    for (const ResultRow& row : table.rows) CHECK(row.strategy == "base");
}

TEST_CASE("model_size sweeps generator width") {
    const std::string dir = "exp_out_width";
    fs::remove_all(dir);
    ExperimentConfig cfg = parse_experiment_config(
        base_config(dir, "model_size", "[strategies]\nlist = base\n"));
    cfg.d_model_sweep = {8, 16};
    ResultTable table = run_experiment(cfg);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].params == "d_model=8 count=24");
    CHECK(table.rows[1].params == "d_model=16 count=24");

    std::vector<std::size_t> widths;
    std::istringstream in(read_all(dir + "/runs.jsonl"));
    std::string line;
    while (std::getline(in, line))
        widths.push_back(nlohmann::json::parse(line).at("d_model"));
    CHECK(std::count(widths.begin(), widths.end(), 8) == 2);   // one per seed
    CHECK(std::count(widths.begin(), widths.end(), 16) == 2);
}

TEST_CASE("a none-only run never generates anything") {
    const std::string dir = "exp_out_none";
    ResultTable table = run_into(dir, "compare_strategies", "[strategies]\nlist = none\n");
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].strategy == "none");
    auto recs = records_by_strategy(dir);
    for (const auto& [seed, rec] : recs.at("none")) {
        CHECK(rec.at("sizes").at("synthetic") == 0);
        CHECK(rec.at("sizes").at("combined") == rec.at("sizes").at("train"));
    }
}

TEST_CASE("report rebuilding rejects broken run dirs") {
    CHECK_THROWS_AS(report_from_run_dir("no_such_dir"), IoError);

    fs::create_directories("exp_out_bad");
    {
        std::ofstream out("exp_out_bad/runs.jsonl");
        out << "not json\n";
    }
    try {
        report_from_run_dir("exp_out_bad");
        FAIL("expected a ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
    }

    {
        std::ofstream out("exp_out_bad/runs.jsonl");
        out << "{\"strategy\": \"base\"}\n";
    }
    CHECK_THROWS_AS(report_from_run_dir("exp_out_bad"), ParseError);

    {
        std::ofstream out("exp_out_bad/runs.jsonl");
    }
    CHECK_THROWS_AS(report_from_run_dir("exp_out_bad"), ValidationError);
    fs::remove_all("exp_out_bad");
}
