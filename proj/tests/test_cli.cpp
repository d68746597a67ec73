#include "doctest.h"

#include "dmtl/checkpoint.hpp"
#include "dmtl/cli.hpp"
#include "dmtl/run_config.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dmtl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dmtl-cli-test-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string p(const fs::path& path) { return path.string(); }

// Small synthetic corpus, labels, and sessions in `dir`.
void synth_inputs(const fs::path& dir) {
    REQUIRE(run({"synth", "--seed", "2", "--pairs", "120", "--out", p(dir / "pairs.tsv"), "--sessions",
                 p(dir / "sessions.jsonl"), "--groups", "5", "--emotion-sessions", p(dir / "emo.jsonl"),
                 "--emotion-groups", "3", "--emotion-utterances", "16"})
                .code == 0);
    REQUIRE(run({"label", "--in", p(dir / "pairs.tsv"), "--out", p(dir / "labeled.tsv")}).code == 0);
}

std::vector<std::string> quick_train(const fs::path& dir, const std::string& out, const std::string& lambda) {
    return {"train", "--pairs", p(dir / "labeled.tsv"), "--out", p(dir / out), "--epochs", "2",
            "--batch-size", "16", "--lambda", lambda, "--seed", "5"};
}

}  // namespace

TEST_CASE("help, version and usage errors") {
    CHECK(run({"--help"}).code == 0);
    const auto version = run({"--version"});
    CHECK(version.code == 0);
    CHECK(version.out.find(kToolVersion) != std::string::npos);
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"train", "--no-such-flag"}).code == 2);

    const auto missing = run({"label", "--in", "/nonexistent/pairs.tsv", "--out", "/tmp/x.tsv"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("/nonexistent/pairs.tsv") != std::string::npos);
}

TEST_CASE("synth and label write artifacts with their run document") {
    const fs::path dir = scratch("synth");
    synth_inputs(dir);
    for (const char* f : {"pairs.tsv", "sessions.jsonl", "emo.jsonl", "labeled.tsv"}) {
        REQUIRE(fs::exists(dir / f));
        const json side = json::parse(slurp(dir / (std::string(f) + ".run.json")));
        CHECK(side["tool_version"] == kToolVersion);
        CHECK(side["settings"].is_object());
    }
    CHECK(lines_of(slurp(dir / "pairs.tsv")).size() == 120);
    CHECK(lines_of(slurp(dir / "sessions.jsonl")).size() == 20);

    const auto stats = run({"label", "--in", p(dir / "pairs.tsv"), "--out", p(dir / "again.tsv"), "--stats"});
    REQUIRE(stats.code == 0);
    const json j = json::parse(stats.out);
    CHECK(j["positive"].get<int>() + j["negative"].get<int>() + j["unlabeled"].get<int>() == 120);
    CHECK(j["total"] == 120);
    CHECK(j["run"]["command"] == "label");
    CHECK(slurp(dir / "again.tsv") == slurp(dir / "labeled.tsv"));
}

TEST_CASE("prepare turns a corpus into pairs and a vocabulary") {
    const fs::path dir = scratch("prepare");
    {
        std::ofstream corpus(dir / "corpus.txt");
        corpus << "Hi there!\nI don't know.\nMe neither.\n\nNew scene.\nOk.\n";
    }
    const auto r = run({"prepare", "--in", p(dir / "corpus.txt"), "--out", p(dir / "pairs.tsv"), "--vocab",
                        p(dir / "vocab.txt")});
    REQUIRE(r.code == 0);
    const auto pairs = lines_of(slurp(dir / "pairs.tsv"));
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[1] == "i do not know\tme neither");
    CHECK(pairs[2] == "new scene\tok");
    CHECK(fs::exists(dir / "vocab.txt.run.json"));
    CHECK(run({"prepare", "--in", p(dir / "absent.txt"), "--out", p(dir / "p.tsv"), "--vocab", p(dir / "v.txt")}).code == 2);
}

TEST_CASE("train writes checkpoints and a loss trace reproducibly") {
    const fs::path dir = scratch("train");
    synth_inputs(dir);
    CHECK(run({"train", "--pairs", p(dir / "labeled.tsv"), "--out", p(dir / "bad"), "--lambda", "1.5"}).code == 2);

    REQUIRE(run(quick_train(dir, "m", "0.5")).code == 0);
    for (const char* f : {"epoch-000.ckpt", "epoch-001.ckpt", "epoch-002.ckpt", "best.ckpt", "loss.csv",
                          "loss.csv.run.json", "summary.json", "vocab.txt"}) {
        CHECK(fs::exists(dir / "m" / f));
    }
    const auto loss = lines_of(slurp(dir / "m" / "loss.csv"));
    CHECK(loss.size() == 4);
    CHECK(loss[0] == "epoch,step,learning_rate,loss,l1,l2,heldout_l1");

    const Checkpoint ckpt = load_checkpoint(dir / "m" / "epoch-002.ckpt");
    CHECK(ckpt.config.lambda == 0.5);
    CHECK(ckpt.config.epochs == 2);
    CHECK(ckpt.run_config["settings"]["seed"] == 5);
    CHECK(ckpt.tool_version == kToolVersion);

    const std::string first = slurp(dir / "m" / "best.ckpt");
    const std::string first_loss = slurp(dir / "m" / "loss.csv");
    REQUIRE(run(quick_train(dir, "m", "0.5")).code == 0);
    CHECK(slurp(dir / "m" / "best.ckpt") == first);
    CHECK(slurp(dir / "m" / "loss.csv") == first_loss);
}

TEST_CASE("lambda = 1 trains a baseline whose head stays at initialization") {
    const fs::path dir = scratch("baseline");
    synth_inputs(dir);
    REQUIRE(run(quick_train(dir, "base", "1")).code == 0);
    const Checkpoint start = load_checkpoint(dir / "base" / "epoch-000.ckpt");
    const Checkpoint end = load_checkpoint(dir / "base" / "epoch-002.ckpt");
    REQUIRE(start.parameters.size() == end.parameters.size());
    bool other_moved = false;
    for (std::size_t i = 0; i < start.parameters.size(); ++i) {
        if (start.parameters[i].name.rfind("head.", 0) == 0) {
            CHECK(start.parameters[i].data == end.parameters[i].data);
        } else {
            other_moved |= start.parameters[i].data != end.parameters[i].data;
        }
    }
    CHECK(other_moved);
}

TEST_CASE("config file with section and flag precedence") {
    const fs::path dir = scratch("config");
    synth_inputs(dir);
    {
        std::ofstream cfg(dir / "run.json");
        cfg << R"({"lambda": 0.25, "seed": 9, "train": {"epochs": 1, "lambda": 0.3}, "synth": {"pairs": 7}})";
    }
    const std::vector<std::string> base{"--config", p(dir / "run.json"), "train", "--pairs", p(dir / "labeled.tsv"),
                                        "--batch-size", "32"};
    auto args = base;
    args.insert(args.end(), {"--out", p(dir / "a")});
    REQUIRE(run(args).code == 0);
    Checkpoint a = load_checkpoint(dir / "a" / "best.ckpt");
    CHECK(a.config.lambda == 0.3);  // section beats top level
    CHECK(a.config.epochs == 1);
    CHECK(a.config.seed == 9);

    args = base;
    args.insert(args.end(), {"--out", p(dir / "b"), "--lambda", "0.75"});
    REQUIRE(run(args).code == 0);
    CHECK(load_checkpoint(dir / "b" / "best.ckpt").config.lambda == 0.75);  // flag beats file

    {
        std::ofstream cfg(dir / "typo.json");
        cfg << R"({"train": {"epoch": 1}})";
    }
    const auto typo = run({"--config", p(dir / "typo.json"), "train", "--pairs", p(dir / "labeled.tsv"), "--out",
                           p(dir / "c")});
    CHECK(typo.code == 2);
    CHECK(typo.err.find("epoch") != std::string::npos);
    CHECK(run({"--config", p(dir / "absent.json"), "synth", "--out", p(dir / "s.tsv")}).code == 2);
}

TEST_CASE("embed exports binary and CSV matrices with a manifest") {
    const fs::path dir = scratch("embed");
    synth_inputs(dir);
    REQUIRE(run(quick_train(dir, "m", "0.5")).code == 0);
    const std::string ckpt = p(dir / "m" / "best.ckpt");
    REQUIRE(run({"embed", "--checkpoint", ckpt, "--sessions", p(dir / "sessions.jsonl"), "--out", p(dir / "e.bin")}).code == 0);
    const std::string bin = slurp(dir / "e.bin");
    REQUIRE(bin.size() >= 16);
    std::uint64_t count = 0, dim = 0;
    for (int i = 7; i >= 0; --i) {
        count = (count << 8) | static_cast<unsigned char>(bin[static_cast<std::size_t>(i)]);
        dim = (dim << 8) | static_cast<unsigned char>(bin[static_cast<std::size_t>(8 + i)]);
    }
    CHECK(dim == 32);  // 2 layers x 2 directions x 8
    CHECK(bin.size() == 16 + 4 * count * dim);
    const json manifest = json::parse(slurp(dir / "e.bin.manifest.json"));
    CHECK(manifest["count"] == count);
    CHECK(manifest["sentences"].size() == count);
    CHECK(manifest["run"]["command"] == "embed");

    {
        std::ofstream text(dir / "lines.txt");
        text << "I love the dog\n\nwhat about the car\n";
    }
    REQUIRE(run({"embed", "--checkpoint", ckpt, "--in", p(dir / "lines.txt"), "--out", p(dir / "e.csv"), "--format",
                 "csv"})
                .code == 0);
    const auto rows = lines_of(slurp(dir / "e.csv"));
    CHECK(rows.size() == 3);  // header + two sentences
    CHECK(parse_csv_line(rows[1]).size() == 32);
    CHECK(run({"embed", "--checkpoint", ckpt, "--in", p(dir / "lines.txt"), "--out", p(dir / "x"), "--format", "npy"}).code == 2);
    CHECK(run({"embed", "--checkpoint", ckpt, "--out", p(dir / "x")}).code == 2);
}

TEST_CASE("eval writes per-fold rows and an aggregate row") {
    const fs::path dir = scratch("eval");
    synth_inputs(dir);
    REQUIRE(run(quick_train(dir, "m", "0.5")).code == 0);
    const std::string ckpt = p(dir / "m" / "best.ckpt");
    const auto r = run({"eval", "--checkpoint", ckpt, "--sessions", p(dir / "sessions.jsonl"), "--method", "knn",
                        "--behavior", "positivity", "--neighbors", "3", "--out", p(dir / "ev")});
    REQUIRE(r.code == 0);
    const auto folds = lines_of(slurp(dir / "ev" / "folds.jsonl"));
    const auto agg = lines_of(slurp(dir / "ev" / "aggregate.csv"));
    REQUIRE(agg.size() == 2);
    const auto header = parse_csv_line(agg[0]);
    const auto row = parse_csv_line(agg[1]);
    REQUIRE(header.size() == row.size());
    CHECK(row[4] == std::to_string(folds.size()));
    double sum = 0.0;
    for (const auto& line : folds) {
        const json j = json::parse(line);
        CHECK(j["behavior"] == "positivity");
        CHECK(j["method"] == "knn");
        sum += j["accuracy"].get<double>();
    }
    CHECK(std::stod(row[5]) == doctest::Approx(sum / static_cast<double>(folds.size())).epsilon(1e-12));
    CHECK(fs::exists(dir / "ev" / "aggregate.csv.run.json"));

    CHECK(run({"eval", "--checkpoint", ckpt, "--sessions", p(dir / "sessions.jsonl"), "--method", "svm", "--out",
               p(dir / "x")})
              .code == 2);
    const auto emo = run({"eval", "--checkpoint", ckpt, "--sessions", p(dir / "emo.jsonl"), "--method", "emotion",
                          "--out", p(dir / "emo")});
    CHECK(emo.code == 0);
    CHECK(lines_of(slurp(dir / "emo" / "folds.jsonl")).size() == 3);
}

TEST_CASE("report tables models by behavior") {
    const fs::path dir = scratch("report");
    auto write_agg = [&](const std::string& name, const std::string& rows) {
        std::ofstream f(dir / name);
        f << "model,checkpoint,behavior,method,folds,mean_accuracy,se_accuracy,mean_wa,se_wa,mean_mae\n" << rows;
    };
    write_agg("one.csv", "A,a.ckpt,positivity,knn,5,0.8,0.1,0.8,0.1,\n");
    const auto single = run({"report", "--results", p(dir / "one.csv"), "--out", p(dir / "single")});
    REQUIRE(single.code == 0);
    const auto csv = lines_of(slurp(dir / "single.csv"));
    REQUIRE(csv.size() == 2);
    CHECK(csv[0] == "model,method,positivity,positivity_se,mean");
    CHECK(csv[1] == "A,knn,0.8,0.1,0.8");
    CHECK(fs::exists(dir / "single.txt.run.json"));

    write_agg("two.csv",
              "B,b1.ckpt,positivity,knn,5,0.6,0.1,0.6,0.1,\n"
              "B,b2.ckpt,positivity,knn,5,0.8,0.1,0.8,0.1,\n"
              "B,b1.ckpt,negativity,knn,5,0.5,0.2,0.5,0.2,\n"
              "\"C, tuned\",c.ckpt,negativity,knn,5,0.9,0.05,0.9,0.05,\n");
    REQUIRE(run({"report", "--results", p(dir / "one.csv"), "--results", p(dir / "two.csv"), "--out", p(dir / "multi")}).code == 0);
    const auto multi = lines_of(slurp(dir / "multi.csv"));
    REQUIRE(multi.size() == 4);
    CHECK(multi[0] == "model,method,negativity,negativity_se,positivity,positivity_se,mean");
    CHECK(multi[1] == "A,knn,,,0.8,0.1,0.8");  // missing cell stays blank
    // Two checkpoints pool to their mean with the standard error across them.
    const auto b = parse_csv_line(multi[2]);
    CHECK(b[0] == "B");
    CHECK(std::stod(b[4]) == doctest::Approx(0.7));
    CHECK(std::stod(b[5]) == doctest::Approx(0.1));
    CHECK(std::stod(b[6]) == doctest::Approx((0.5 + 0.7) / 2.0));
    CHECK(parse_csv_line(multi[3])[0] == "C, tuned");

    CHECK(run({"report", "--results", p(dir / "none.csv")}).code == 2);
    CHECK(run({"report", "--results", p(dir / "one.csv"), "--metric", "f1"}).code == 2);
}
