#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

struct CmdResult {
    int status = -1;
    std::string out;
    std::string err;
};

CmdResult run_cli(const std::string& args) {
    static int counter = 0;
    std::string out_path = "cli_stdout_" + std::to_string(counter) + ".txt";
    std::string err_path = "cli_stderr_" + std::to_string(counter) + ".txt";
    ++counter;
    std::string cmd =
        std::string(MEDAUG_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
    int rc = std::system(cmd.c_str());
    CmdResult result;
    result.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    std::remove(out_path.c_str());
    std::remove(err_path.c_str());
    return result;
}

const std::string dir = "cli_scratch";

std::string gen_model_flags() {
    return "--d-model 16 --n-heads 2 --n-blocks 1 --context-len 40 --ffn-mult 2";
}

}  // namespace

TEST_CASE("the full command chain works end to end") {
    fs::remove_all(dir);
    fs::create_directories(dir);

    CmdResult gen = run_cli(
        "corpus gen --n-docs 260 --content-vocab 60 --positive-phrases 4 "
        "--negative-phrases 4 --len-min 8 --len-max 14 --positive-prior 0.25 --seed 5 "
        "--out " + dir + "/all.jsonl --split-dir " + dir + "/split");
    REQUIRE(gen.status == 0);
    CHECK(gen.out.find("generated 260 docs") != std::string::npos);
    CHECK(gen.out.find("wrote split 208/26/26") != std::string::npos);
    CHECK(fs::exists(dir + "/all.jsonl"));
    CHECK(count_lines(slurp(dir + "/split/train.jsonl")) == 208);
    CHECK(count_lines(slurp(dir + "/split/valid.jsonl")) == 26);
    CHECK(count_lines(slurp(dir + "/split/test.jsonl")) == 26);

    CmdResult lm = run_cli(
        "lm train --corpus " + dir + "/split/train.jsonl --out " + dir + "/gen.ckpt "
        "--balanced " + gen_model_flags() + " --epochs 1 --batch-size 8 --seed 7");
    REQUIRE(lm.status == 0);
    CHECK(lm.out.find("trained on") != std::string::npos);
    CHECK(lm.out.find("train perplexity") != std::string::npos);
    REQUIRE(fs::exists(dir + "/gen.ckpt"));

    std::string sample_args =
        "lm sample --ckpt " + dir + "/gen.ckpt --count 3 --label 1 --max-len 20 --seed 9";
    CmdResult sample = run_cli(sample_args);
    REQUIRE(sample.status == 0);
    CHECK(count_lines(sample.out) == 3);
    CHECK(sample.out.rfind("1\t", 0) == 0);
    CHECK(run_cli(sample_args).out == sample.out);  // same seed, same text

    CmdResult clf = run_cli(
        "clf train --corpus " + dir + "/split/train.jsonl --out " + dir + "/clf.ckpt "
        "--embed-dim 12 --hidden-dim 16 --epochs 4 --batch-size 16 --seed 11 "
        "--eval " + dir + "/split/valid.jsonl");
    REQUIRE(clf.status == 0);
    CHECK(clf.out.find("trained 4 epochs") != std::string::npos);
    CHECK(clf.out.find("auroc=") != std::string::npos);

    CmdResult eval = run_cli(
        "eval --ckpt " + dir + "/clf.ckpt --corpus " + dir + "/split/test.jsonl "
        "--roc " + dir + "/roc.csv --pr " + dir + "/pr.csv --scores " + dir + "/scores.csv");
    REQUIRE(eval.status == 0);
    CHECK(eval.out.find("auroc=") != std::string::npos);
    CHECK(slurp(dir + "/roc.csv").rfind("threshold,x,y\n", 0) == 0);
    CHECK(slurp(dir + "/pr.csv").rfind("threshold,x,y\n", 0) == 0);
    std::string scores = slurp(dir + "/scores.csv");
    CHECK(scores.rfind("id,label,score\n", 0) == 0);
    CHECK(count_lines(scores) == 27);  // header + 26 docs

    CmdResult augment = run_cli(
        "augment --ckpt " + dir + "/gen.ckpt --train " + dir + "/split/train.jsonl "
        "--out " + dir + "/combined.jsonl --report " + dir + "/aug.json "
        "--count 10 --strategy confidence_filter --keep-fraction 0.5 --max-len 20 --seed 13");
    REQUIRE(augment.status == 0);
    CHECK(augment.out.find("confidence_filter: requested 10, realized 10, kept 5, combined 213")
          != std::string::npos);
    CHECK(count_lines(slurp(dir + "/combined.jsonl")) == 213);
    nlohmann::json aug_report = nlohmann::json::parse(slurp(dir + "/aug.json"));
    CHECK(aug_report.at("strategy") == "confidence_filter");
    CHECK(aug_report.at("kept") == 5);

    CmdResult distill = run_cli(
        "distill --train " + dir + "/split/train.jsonl --valid " + dir + "/split/valid.jsonl "
        "--test " + dir + "/split/test.jsonl --out " + dir + "/student.ckpt "
        "--report " + dir + "/pipeline.json --count 10 --max-len 20 " + gen_model_flags() +
        " --gen-epochs 1 --gen-batch-size 8 --embed-dim 12 --hidden-dim 16 "
        "--clf-epochs 3 --clf-batch-size 16 --tau 1 --seed 15");
    REQUIRE(distill.status == 0);
    CHECK(distill.out.find("valid: auroc=") != std::string::npos);
    CHECK(distill.out.find("test: auroc=") != std::string::npos);
    REQUIRE(fs::exists(dir + "/student.ckpt"));
    nlohmann::json pipeline = nlohmann::json::parse(slurp(dir + "/pipeline.json"));
    CHECK(pipeline.at("stages").size() == 5);

    {
        std::ofstream ini(dir + "/exp.ini");
        ini << "[run]\n"
               "mode = compare_strategies\n"
               "seeds = 21\n"
               "output_dir = " << dir << "/run\n"
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
               "counts = 8\n"
               "top_k = 20\n"
               "max_len = 16\n"
               "[strategies]\n"
               "list = none, base\n";
    }
    CmdResult experiment = run_cli("experiment run --config " + dir + "/exp.ini");
    REQUIRE(experiment.status == 0);
    CHECK(experiment.out.find("| strategy |") != std::string::npos);
    CHECK(experiment.out.find("| none |") != std::string::npos);
    CHECK(experiment.out.find("| base |") != std::string::npos);
    CHECK(experiment.out.find("run artifacts in " + dir + "/run") != std::string::npos);
    CHECK(fs::exists(dir + "/run/results.csv"));
    CHECK(fs::exists(dir + "/run/runs.jsonl"));
    CHECK(fs::exists(dir + "/run/summary.md"));

    CmdResult report = run_cli("report --run-dir " + dir + "/run");
    REQUIRE(report.status == 0);
    CHECK(report.out.rfind("# Run report", 0) == 0);
    CHECK(report.out.find("mode: compare_strategies") != std::string::npos);
    CHECK(report.out.find("| none |") != std::string::npos);

    fs::remove_all(dir);
}

TEST_CASE("failures exit nonzero with a reason on stderr") {
    fs::remove_all(dir);
    fs::create_directories(dir);

    CmdResult unknown = run_cli("frobnicate");
    CHECK(unknown.status != 0);
    CHECK(!unknown.err.empty());

    CmdResult bare = run_cli("");
    CHECK(bare.status != 0);

    CmdResult missing_cfg = run_cli("experiment run --config " + dir + "/absent.ini");
    CHECK(missing_cfg.status == 1);
    CHECK(missing_cfg.err.find("medaug: error:") != std::string::npos);

    {
        std::ofstream ini(dir + "/bad.ini");
        ini << "[run]\nmode = sideways\nseeds = 1\noutput_dir = " << dir << "/run\n";
    }
    CmdResult bad_cfg = run_cli("experiment run --config " + dir + "/bad.ini");
    CHECK(bad_cfg.status == 1);
    CHECK(bad_cfg.err.find("line 2") != std::string::npos);

    CmdResult no_dest = run_cli("corpus gen --n-docs 50");
    CHECK(no_dest.status == 1);
    CHECK(no_dest.err.find("--out and/or --split-dir") != std::string::npos);

    CmdResult gen = run_cli(
        "corpus gen --n-docs 120 --content-vocab 40 --positive-phrases 4 "
        "--negative-phrases 4 --len-min 8 --len-max 14 --seed 3 --out " + dir + "/c.jsonl");
    REQUIRE(gen.status == 0);
    CmdResult lm = run_cli(
        "lm train --corpus " + dir + "/c.jsonl --out " + dir + "/g.ckpt --balanced " +
        gen_model_flags() + " --epochs 1 --batch-size 8 --seed 3");
    REQUIRE(lm.status == 0);

    CmdResult bad_label = run_cli(
        "lm sample --ckpt " + dir + "/g.ckpt --label 2 --max-len 20");
    CHECK(bad_label.status == 1);
    CHECK(bad_label.err.find("medaug: error:") != std::string::npos);

    // near-argmax sampling repeats itself; dedup cannot reach the target
    CmdResult starved = run_cli(
        "augment --ckpt " + dir + "/g.ckpt --train " + dir + "/c.jsonl "
        "--out " + dir + "/x.jsonl --count 400 --temperature 0.000000001 --max-len 20 --seed 3");
    CHECK(starved.status == 1);
    CHECK(starved.err.find("medaug: error:") != std::string::npos);
    CHECK(starved.err.find("400") != std::string::npos);

    fs::remove_all(dir);
}
