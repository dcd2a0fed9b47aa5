#include "ckd/cli.hpp"

#include "ckd/importance.hpp"
#include "ckd/metrics.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sys/wait.h>

namespace ckd::cli {
namespace {

using testing::read_file;
using testing::TempDir;
using testing::write_file;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

int invoke_binary(const std::string& args) {
    const std::string cmd = std::string(CKDNET_BINARY) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t data_rows(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    std::getline(in, line);
    while (std::getline(in, line)) n += line.empty() ? 0 : 1;
    return n;
}

std::string last_line(const std::string& s) {
    auto trimmed = s;
    while (!trimmed.empty() && trimmed.back() == '\n') trimmed.pop_back();
    return trimmed.substr(trimmed.rfind('\n') + 1);
}

// gen + train with defaults into `dir`; returns train's stdout.
std::string gen_and_train(const TempDir& dir, std::vector<std::string> extra = {}) {
    EXPECT_EQ(invoke({"gen", "--out", (dir / "data.csv").string()}).code, 0);
    std::vector<std::string> args{"train",      "--data",  (dir / "data.csv").string(),
                                  "--model",    (dir / "model.txt").string(),
                                  "--test-out", (dir / "test.csv").string()};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = invoke(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return r.out;
}

TEST(Gen, WritesBalancedDeterministicFile) {
    TempDir dir;
    const auto a = dir / "a.csv";
    const auto b = dir / "b.csv";
    const auto r = invoke({"gen", "--n", "400", "--ckd-fraction", "0.5", "--seed", "7", "--out", a.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("ckd=200, notckd=200"), std::string::npos);
    EXPECT_EQ(data_rows(a), 400u);
    const auto d = load_csv(a, DataSchema::ckd_default());
    EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 1), 200);

    ASSERT_EQ(invoke({"gen", "--n", "400", "--ckd-fraction", "0.5", "--seed", "7", "--out", b.string()}).code, 0);
    EXPECT_EQ(read_file(a), read_file(b));
}

TEST(Gen, UsageErrors) {
    TempDir dir;
    EXPECT_EQ(invoke({"gen", "--ckd-fraction", "1.5", "--out", (dir / "x.csv").string()}).code, kExitUsage);
    EXPECT_EQ(invoke({"gen", "--ckd-fraction", "1.0", "--out", (dir / "x.csv").string()}).code, kExitUsage);
    EXPECT_EQ(invoke({"gen"}).code, kExitUsage);
    EXPECT_EQ(invoke({}).code, kExitUsage);
    EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(invoke({"gen", "--out", (dir / "no/such/dir/x.csv").string()}).code, kExitRuntime);
}

TEST(Train, DefaultRunWritesHundredCurveRowsAndSidecar) {
    TempDir dir;
    const auto out = gen_and_train(dir);
    EXPECT_NE(out.find("metrics: accuracy="), std::string::npos);
    EXPECT_EQ(read_file(dir / "curves.csv").substr(0, 44), "epoch,train_loss,train_acc,val_loss,val_acc\n");
    EXPECT_EQ(data_rows(dir / "curves.csv"), 100u);
    const auto log = read_curves(dir / "curves.csv");
    ASSERT_EQ(log.epochs.size(), 100u);
    EXPECT_LT(log.epochs.back().train_loss, log.epochs.front().train_loss);
    EXPECT_TRUE(log.epochs.back().val_accuracy.has_value());
    EXPECT_NO_THROW(load_model(dir / "model.txt"));
    EXPECT_EQ(read_stats(stats_path_for(dir / "model.txt")).mean.size(), kFeatureCount);
}

TEST(Train, EpochFlagAndDeterminism) {
    TempDir dir;
    ASSERT_EQ(invoke({"gen", "--out", (dir / "data.csv").string()}).code, 0);
    const auto train_to = [&](const std::string& model, const std::string& curves) {
        return invoke({"train", "--data", (dir / "data.csv").string(), "--model", (dir / model).string(),
                       "--curves", (dir / curves).string(), "--epochs", "5"});
    };
    ASSERT_EQ(train_to("m1.txt", "c1.csv").code, 0);
    ASSERT_EQ(train_to("m2.txt", "c2.csv").code, 0);
    EXPECT_EQ(data_rows(dir / "c1.csv"), 5u);
    EXPECT_EQ(read_file(dir / "m1.txt"), read_file(dir / "m2.txt"));
    EXPECT_EQ(read_file(dir / "c1.csv"), read_file(dir / "c2.csv"));
}

TEST(Train, Errors) {
    TempDir dir;
    EXPECT_EQ(invoke({"train", "--data", (dir / "none.csv").string(), "--model", (dir / "m").string()}).code,
              kExitRuntime);
    write_file(dir / "d.csv", "Age,Class\n1,ckd\n");
    const auto r = invoke({"train", "--data", (dir / "d.csv").string(), "--model", (dir / "m").string()});
    EXPECT_EQ(r.code, kExitRuntime);
    EXPECT_NE(r.err.find("missing column"), std::string::npos);
    EXPECT_EQ(invoke({"train", "--model", "m"}).code, kExitUsage);
    EXPECT_EQ(invoke({"train", "--data", "d", "--model", "m", "--hidden", "3"}).code, kExitUsage);
    EXPECT_EQ(invoke({"train", "--data", "d", "--model", "m", "--epochs", "0"}).code, kExitUsage);
}

TEST(Train, ConfigFileWithFlagOverride) {
    TempDir dir;
    ASSERT_EQ(invoke({"gen", "--out", (dir / "data.csv").string()}).code, 0);
    write_file(dir / "run.cfg", "# short run\nepochs = 3\nlr=0.05\nhidden=8,4\n");
    ASSERT_EQ(invoke({"train", "--config", (dir / "run.cfg").string(), "--data", (dir / "data.csv").string(),
                      "--model", (dir / "m.txt").string()})
                  .code,
              0);
    EXPECT_EQ(data_rows(dir / "curves.csv"), 3u);
    EXPECT_EQ(load_model(dir / "m.txt").layers()[0].out_dim(), 8u);

    ASSERT_EQ(invoke({"train", "--config", (dir / "run.cfg").string(), "--epochs", "4", "--data",
                      (dir / "data.csv").string(), "--model", (dir / "m.txt").string()})
                  .code,
              0);
    EXPECT_EQ(data_rows(dir / "curves.csv"), 4u);

    write_file(dir / "bad.cfg", "epochs\n");
    EXPECT_EQ(invoke({"train", "--config", (dir / "bad.cfg").string(), "--data", "x", "--model", "y"}).code,
              kExitUsage);
}

TEST(Eval, HeldOutSplitReprintsTrainMetrics) {
    TempDir dir;
    const auto train_out = gen_and_train(dir);
    const auto r = invoke({"eval", "--model", (dir / "model.txt").string(), "--data",
                           (dir / "test.csv").string(), "--out", (dir / "report.txt").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(last_line(r.out), last_line(train_out));

    std::ifstream in(dir / "report.txt");
    const auto report = read_report(in);
    EXPECT_GE(*report.accuracy, 0.95);
    const auto text = read_file(dir / "report.txt");
    EXPECT_NE(text.find("confusion\tpredicted_negative\tpredicted_positive\n"), std::string::npos);
    EXPECT_NE(text.find("actual_negative\t"), std::string::npos);
}

TEST(Eval, ScoreFileWithTableThreeCounts) {
    TempDir dir;
    std::string scores = "score,label\n";
    for (int i = 0; i < 29; ++i) scores += "0.1,0\n";
    for (int i = 0; i < 30; ++i) scores += "0.9,1\n";
    scores += "0.3,1\n";
    write_file(dir / "scores.csv", scores);
    const auto r = invoke({"eval", "--scores", (dir / "scores.csv").string(), "--out", (dir / "r.txt").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto text = read_file(dir / "r.txt");
    EXPECT_NE(text.find("accuracy\t0.9833333333333333\n"), std::string::npos);
    EXPECT_NE(text.find("precision\t1\n"), std::string::npos);
    EXPECT_NE(text.find("actual_negative\t29\t0\nactual_positive\t1\t30\n"), std::string::npos);
}

TEST(Eval, SingleClassFileReportsUndefined) {
    TempDir dir;
    gen_and_train(dir, {"--epochs", "5"});
    const auto full = load_csv(dir / "test.csv", DataSchema::ckd_default());
    std::vector<std::size_t> healthy;
    for (std::size_t r = 0; r < full.rows(); ++r) {
        if (full.labels[r] == 0) healthy.push_back(r);
    }
    write_csv(full.subset(healthy), dir / "healthy.csv");
    const auto r = invoke({"eval", "--model", (dir / "model.txt").string(), "--data",
                           (dir / "healthy.csv").string(), "--out", (dir / "r.txt").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(read_file(dir / "r.txt").find("undefined"), std::string::npos);
}

TEST(Eval, MissingSidecarIsRuntimeError) {
    TempDir dir;
    gen_and_train(dir, {"--epochs", "2"});
    std::filesystem::remove(stats_path_for(dir / "model.txt"));
    const auto r = invoke({"eval", "--model", (dir / "model.txt").string(), "--data",
                           (dir / "test.csv").string(), "--out", (dir / "r.txt").string()});
    EXPECT_EQ(r.code, kExitRuntime);
    EXPECT_NE(r.err.find("--stats"), std::string::npos);
    EXPECT_EQ(invoke({"eval", "--out", (dir / "r.txt").string()}).code, kExitUsage);
}

TEST(Importance, RanksAndIsDeterministic) {
    TempDir dir;
    gen_and_train(dir);
    const auto base = std::vector<std::string>{"importance", "--model", (dir / "model.txt").string(),
                                               "--data", (dir / "test.csv").string()};
    auto with = [&](std::vector<std::string> extra) {
        auto args = base;
        args.insert(args.end(), extra.begin(), extra.end());
        return invoke(args);
    };
    ASSERT_EQ(with({"--out", (dir / "imp.csv").string()}).code, 0);
    const auto r = read_importance_csv(dir / "imp.csv");
    ASSERT_EQ(r.entries.size(), kFeatureCount);
    EXPECT_EQ((std::set<std::string>{r.entries[0].feature, r.entries[1].feature}),
              (std::set<std::string>{"Creatinine", "Bicarbonate"}));

    ASSERT_EQ(with({"--repeats", "1", "--seed", "3", "--out", (dir / "a.csv").string()}).code, 0);
    ASSERT_EQ(with({"--repeats", "1", "--seed", "3", "--out", (dir / "b.csv").string()}).code, 0);
    EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "b.csv"));
    EXPECT_EQ(with({"--scoring", "auc", "--out", (dir / "c.csv").string()}).code, kExitUsage);
}

TEST(Importance, DimensionMismatchIsRuntimeError) {
    TempDir dir;
    gen_and_train(dir, {"--epochs", "2"});
    write_file(dir / "narrow.txt", "ckdmlp-model v1\n1\n3 1 sigmoid\n0.1 0.2 0.3\n0\n");
    write_file(dir / "narrow.txt.stats", read_file(stats_path_for(dir / "model.txt")));
    const auto r = invoke({"importance", "--model", (dir / "narrow.txt").string(), "--data",
                           (dir / "test.csv").string(), "--out", (dir / "x.csv").string()});
    EXPECT_EQ(r.code, kExitRuntime);
    EXPECT_NE(r.err.find("inputs"), std::string::npos);
}

TEST(Binary, ExitCodesPerSubcommand) {
    TempDir dir;
    const std::string d = dir.path().string();
    EXPECT_EQ(invoke_binary("--help"), 0);
    EXPECT_EQ(invoke_binary(""), 2);
    EXPECT_EQ(invoke_binary("gen --ckd-fraction 1.5 --out " + d + "/x.csv"), 2);
    EXPECT_EQ(invoke_binary("gen --out " + d + "/data.csv"), 0);
    EXPECT_EQ(invoke_binary("train --data " + d + "/data.csv"), 2);
    EXPECT_EQ(invoke_binary("train --data " + d + "/missing.csv --model " + d + "/m.txt"), 1);
    EXPECT_EQ(invoke_binary("train --epochs 3 --data " + d + "/data.csv --model " + d + "/m.txt"), 0);
    EXPECT_EQ(invoke_binary("eval --model " + d + "/m.txt --data " + d + "/data.csv"), 2);
    EXPECT_EQ(invoke_binary("eval --model " + d + "/absent.txt --data " + d + "/data.csv --out " + d + "/r.txt"), 1);
    EXPECT_EQ(invoke_binary("eval --model " + d + "/m.txt --data " + d + "/data.csv --out " + d + "/r.txt"), 0);
    EXPECT_EQ(invoke_binary("importance --model " + d + "/m.txt --out " + d + "/i.csv"), 2);
    EXPECT_EQ(invoke_binary("importance --model " + d + "/m.txt --data " + d + "/nope.csv --out " + d + "/i.csv"), 1);
    EXPECT_EQ(invoke_binary("importance --repeats 2 --model " + d + "/m.txt --data " + d + "/data.csv --out " + d + "/i.csv"), 0);
}

TEST(Chain, EveryEmittedFileParsesBack) {
    TempDir dir;
    gen_and_train(dir);
    ASSERT_EQ(invoke({"eval", "--model", (dir / "model.txt").string(), "--data", (dir / "test.csv").string(),
                      "--out", (dir / "report.txt").string()})
                  .code,
              0);
    ASSERT_EQ(invoke({"importance", "--model", (dir / "model.txt").string(), "--data",
                      (dir / "test.csv").string(), "--out", (dir / "imp.csv").string()})
                  .code,
              0);
    EXPECT_EQ(load_csv(dir / "data.csv", DataSchema::ckd_default()).rows(), 400u);
    EXPECT_EQ(load_csv(dir / "test.csv", DataSchema::ckd_default()).rows(), 120u);
    EXPECT_NO_THROW(load_model(dir / "model.txt"));
    EXPECT_NO_THROW(read_stats(stats_path_for(dir / "model.txt")));
    EXPECT_EQ(read_curves(dir / "curves.csv").epochs.size(), 100u);
    std::ifstream report(dir / "report.txt");
    EXPECT_NO_THROW(read_report(report));
    EXPECT_EQ(read_importance_csv(dir / "imp.csv").entries.size(), kFeatureCount);
}

} // namespace
} // namespace ckd::cli
