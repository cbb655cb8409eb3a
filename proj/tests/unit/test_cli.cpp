#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ganbench/data_io.hpp"
#include "ganbench/metrics.hpp"
#include "support/digits.hpp"
#include "support/tmpdir.hpp"

using namespace ganbench;
using testsupport::ScopedTempDir;
using testsupport::write_digit_corpus;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    if (!fs::exists(p)) return "";
    const std::vector<std::uint8_t> bytes = read_file(p);
    return std::string(bytes.begin(), bytes.end());
}

// Runs the installed benchmark binary with `args`, capturing both streams.
CliResult run_cli_bin(const ScopedTempDir& tmp, const std::string& args) {
    static int counter = 0;
    const fs::path out = tmp.file("cli-stdout-" + std::to_string(counter) + ".txt");
    const fs::path err = tmp.file("cli-stderr-" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd =
        std::string(GANBENCH_BIN) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// A schema-complete report fixture with chosen headline metrics.
json fixture_report(const std::string& model, double precision, double recall, double accuracy, double f1,
                    const std::vector<RocPoint>& points, double auc_value) {
    EvalReport r;
    r.model = model;
    r.seed = 1;
    r.summary.precision = precision;
    r.summary.recall = recall;
    r.summary.accuracy = accuracy;
    r.summary.f1 = f1;
    r.summary.per_class = {{precision, recall, f1}, {precision, recall, f1}};
    r.counts.per_class = {{40, 5, 5, 50}, {50, 5, 5, 40}};
    r.counts.n = 100;
    r.positive_class = 0;
    r.roc = points;
    r.roc_auc = auc_value;
    r.per_class_auc = {auc_value, auc_value};
    r.macro_auc = auc_value;
    r.config_echo = json::object();
    const json j = report_to_json(r);
    validate_report(j);
    return j;
}

const std::vector<RocPoint> kDiagonal = {{0.0, 0.0}, {1.0, 1.0}};

json toy_svm_config(const std::string& name, int seed) {
    return {
        {"name", name},
        {"task", "classifier"},
        {"seed", seed},
        {"dataset", {{"kind", "toy"}, {"samples", 256}, {"modes", 8}}},
        {"model", {{"model", "linear-svm"}, {"in_dim", 2}, {"classes", 8}}},
        {"train",
         {{"batch", 32}, {"epochs", 30}, {"loss", "softmax"}, {"opt", {{"kind", "sgd"}, {"lr", 0.5}}}}},
    };
}

json toy_gan_config(const std::string& name, int seed) {
    return {
        {"name", name},
        {"task", "gan"},
        {"seed", seed},
        {"dataset", {{"kind", "toy"}, {"samples", 64}, {"modes", 8}}},
        {"generator", {{"model", "mlp-generator"}, {"noise_dim", 4}, {"out_dim", 2}, {"hidden", 8}}},
        {"discriminator", {{"model", "mlp-discriminator"}, {"in_dim", 2}, {"hidden", 8}}},
        {"gan", {{"noise_dim", 4}, {"batch", 16}, {"total_steps", 3}}},
    };
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("version and argument errors") {
    ScopedTempDir tmp;
    CHECK(run_cli_bin(tmp, "--version").code == 0);
    CHECK(run_cli_bin(tmp, "").code == 2);
    CHECK(run_cli_bin(tmp, "frobnicate").code == 2);
    CHECK(run_cli_bin(tmp, "train").code == 2);          // missing --config
    CHECK(run_cli_bin(tmp, "prepare --dataset mnist").code == 2);  // missing --dir
}

TEST_CASE("prepare: toy is self-contained, missing files are data errors") {
    ScopedTempDir tmp;
    const CliResult toy = run_cli_bin(tmp, "prepare --dataset toy");
    CHECK(toy.code == 0);
    CHECK(contains(toy.out, "ok, synthetic"));

    const fs::path empty = tmp.file("empty");
    fs::create_directories(empty);
    const CliResult missing = run_cli_bin(tmp, "prepare --dataset mnist --dir " + empty.string());
    CHECK(missing.code == 3);
    CHECK(contains(missing.err, "missing dataset file"));

    CHECK(run_cli_bin(tmp, "prepare --dataset imagenet --dir " + empty.string()).code == 2);
}

TEST_CASE("prepare manifest lifecycle: bootstrap, verify, catch corruption") {
    ScopedTempDir tmp;
    const fs::path dir = tmp.file("digits");
    write_digit_corpus(dir, 24, 12, 9);

    const CliResult no_manifest = run_cli_bin(tmp, "prepare --dataset mnist --dir " + dir.string());
    CHECK(no_manifest.code == 0);
    CHECK(contains(no_manifest.out, "checksum verification skipped"));
    CHECK(contains(no_manifest.out, "ok, 24 train / 12 test (28x28, 10 classes)"));

    const CliResult wrote =
        run_cli_bin(tmp, "prepare --dataset mnist --dir " + dir.string() + " --write-manifest");
    CHECK(wrote.code == 0);
    CHECK(fs::exists(dir / "manifest.sha256"));

    const CliResult verified = run_cli_bin(tmp, "prepare --dataset mnist --dir " + dir.string());
    CHECK(verified.code == 0);
    CHECK(contains(verified.out, "verified 4 checksums"));

    // Flip one pixel byte; verification must now fail with a data error.
    const fs::path victim = dir / "train-images-idx3-ubyte";
    std::vector<std::uint8_t> bytes = read_file(victim);
    bytes[60] ^= 0xFF;
    write_file(victim, bytes);
    const CliResult corrupt = run_cli_bin(tmp, "prepare --dataset mnist --dir " + dir.string());
    CHECK(corrupt.code == 3);
    CHECK(contains(corrupt.err, "checksum mismatch"));
}

TEST_CASE("train: config errors are usage errors, absent files are data errors") {
    ScopedTempDir tmp;

    const fs::path broken = tmp.file("broken.json");
    write_text_file(broken, "{this is not json");
    const CliResult parse = run_cli_bin(tmp, "train --config " + broken.string());
    CHECK(parse.code == 2);
    CHECK(contains(parse.err, "config parse failure"));

    const fs::path seedless = tmp.file("seedless.json");
    json cfg = toy_svm_config("x", 1);
    cfg.erase("seed");
    write_text_file(seedless, cfg.dump());
    CHECK(run_cli_bin(tmp, "train --config " + seedless.string()).code == 2);

    const fs::path weird = tmp.file("weird.json");
    json wcfg = toy_svm_config("x", 1);
    wcfg["task"] = "diffusion";
    write_text_file(weird, wcfg.dump());
    CHECK(run_cli_bin(tmp, "train --config " + weird.string()).code == 2);

    CHECK(run_cli_bin(tmp, "train --config " + tmp.file("nope.json").string()).code == 3);
}

TEST_CASE("classifier train/eval/compare/roc pipeline on the toy mixture") {
    ScopedTempDir tmp;
    const fs::path cfg_path = tmp.file("svm.json");
    write_text_file(cfg_path, toy_svm_config("svm-toy", 3).dump(2));
    const fs::path out1 = tmp.file("run1");

    const CliResult train =
        run_cli_bin(tmp, "train --config " + cfg_path.string() + " --out-dir " + out1.string());
    CHECK(train.code == 0);
    CHECK(contains(train.out, "trained svm-toy"));
    const fs::path ckpt = out1 / "svm-toy.ckpt";
    REQUIRE(fs::exists(ckpt));
    CHECK(slurp(out1 / "svm-toy.diagnostics.csv").rfind("step,loss\n", 0) == 0);

    const json manifest = json::parse(slurp(out1 / "svm-toy.manifest.json"));
    CHECK(manifest["verb"] == "train");
    CHECK(manifest["artifacts"].size() == 2);
    for (const json& a : manifest["artifacts"]) {
        const fs::path p = out1 / a["path"].get<std::string>();
        CHECK(sha256_file(p) == a["sha256"].get<std::string>());
    }

    const fs::path report_path = tmp.file("report.json");
    const fs::path roc_path = tmp.file("roc.csv");
    const CliResult eval = run_cli_bin(tmp, "eval --checkpoint " + ckpt.string() + " --config " +
                                                cfg_path.string() + " --split test --out " +
                                                report_path.string() + " --roc-csv " + roc_path.string());
    CHECK(eval.code == 0);
    CHECK(contains(eval.out, "evaluated linear-svm on 256 test samples"));
    const json report = json::parse(slurp(report_path));
    validate_report(report);
    CHECK(report["seed"] == 3);
    CHECK(report["config"]["name"] == "svm-toy");
    CHECK(slurp(roc_path).rfind("fpr,tpr\n", 0) == 0);

    const fs::path table_path = tmp.file("table.md");
    const CliResult compare =
        run_cli_bin(tmp, "compare " + report_path.string() + " --out " + table_path.string());
    CHECK(compare.code == 0);
    const std::string table = slurp(table_path);
    CHECK(table.rfind("| Model | Precision | Recall | Accuracy | F1 |\n|---|---|---|---|---|\n", 0) == 0);
    CHECK(contains(table, "| linear-svm | "));

    const fs::path curves_csv = tmp.file("curves.csv");
    const fs::path curves_svg = tmp.file("curves.svg");
    const CliResult roc =
        run_cli_bin(tmp, "roc " + report_path.string() + " " + report_path.string() + " --out-csv " +
                             curves_csv.string() + " --out-svg " + curves_svg.string());
    CHECK(roc.code == 0);
    CHECK(contains(roc.out, "coincide pointwise"));
    CHECK(slurp(curves_csv).rfind("curve,fpr,tpr\n", 0) == 0);
    CHECK(contains(slurp(curves_svg), "<svg"));

    // Re-running the identical config yields byte-identical checkpoint and
    // report (timestamps live only in run manifests).
    const fs::path out2 = tmp.file("run2");
    CHECK(run_cli_bin(tmp, "train --config " + cfg_path.string() + " --out-dir " + out2.string()).code == 0);
    CHECK(sha256_file(out2 / "svm-toy.ckpt") == sha256_file(ckpt));
    const fs::path report2_path = tmp.file("report2.json");
    CHECK(run_cli_bin(tmp, "eval --checkpoint " + (out2 / "svm-toy.ckpt").string() + " --config " +
                               cfg_path.string() + " --split test --out " + report2_path.string())
              .code == 0);
    CHECK(sha256_file(report2_path) == sha256_file(report_path));
}

TEST_CASE("gan training, generation, and kind checks") {
    ScopedTempDir tmp;
    const fs::path cfg_path = tmp.file("gan.json");
    write_text_file(cfg_path, toy_gan_config("tiny", 5).dump(2));
    const fs::path out = tmp.file("ganrun");

    const CliResult train =
        run_cli_bin(tmp, "train --config " + cfg_path.string() + " --out-dir " + out.string());
    CHECK(train.code == 0);
    CHECK(contains(train.out, "equilibrium"));
    const fs::path g_ckpt = out / "tiny.g.ckpt";
    const fs::path d_ckpt = out / "tiny.d.ckpt";
    REQUIRE(fs::exists(g_ckpt));
    REQUIRE(fs::exists(d_ckpt));
    CHECK(slurp(out / "tiny.diagnostics.csv").rfind("step,d_loss,g_loss,mean_d_real,mean_d_fake\n", 0) == 0);

    // Generation is deterministic in the seed.
    const fs::path gen1 = tmp.file("gen1");
    const fs::path gen2 = tmp.file("gen2");
    const CliResult g1 = run_cli_bin(
        tmp, "generate --checkpoint " + g_ckpt.string() + " --count 3 --seed 11 --out " + gen1.string());
    CHECK(g1.code == 0);
    CHECK(run_cli_bin(tmp, "generate --checkpoint " + g_ckpt.string() + " --count 3 --seed 11 --out " +
                               gen2.string())
              .code == 0);
    REQUIRE(fs::exists(gen1 / "sample_0000.pgm"));
    CHECK(sha256_file(gen1 / "sample_0000.pgm") == sha256_file(gen2 / "sample_0000.pgm"));
    CHECK(fs::exists(gen1 / "manifest.json"));

    // Kind gates: a discriminator cannot generate, a generator cannot be
    // evaluated as a classifier, and count must be positive.
    CHECK(run_cli_bin(tmp, "generate --checkpoint " + d_ckpt.string() + " --count 1 --out " +
                               tmp.file("nope1").string())
              .code == 2);
    const CliResult bad_eval =
        run_cli_bin(tmp, "eval --checkpoint " + g_ckpt.string() + " --config " + cfg_path.string() +
                             " --out " + tmp.file("nope2.json").string());
    CHECK(bad_eval.code == 2);
    CHECK(contains(bad_eval.err, "not a classifier"));
    CHECK(run_cli_bin(tmp, "generate --checkpoint " + g_ckpt.string() + " --count 0 --out " +
                               tmp.file("nope3").string())
              .code == 2);
    CHECK(run_cli_bin(tmp, "eval --checkpoint " + tmp.file("absent.ckpt").string() + " --config " +
                               cfg_path.string() + " --out " + tmp.file("nope4.json").string())
              .code == 3);
}

TEST_CASE("batchnorm with batch size one is rejected up front") {
    ScopedTempDir tmp;
    const fs::path dir = tmp.file("digits");
    write_digit_corpus(dir, 16, 8, 4);

    json cfg = {
        {"name", "bn1"},
        {"task", "classifier"},
        {"seed", 2},
        {"dataset", {{"kind", "mnist"}, {"dir", dir.string()}, {"train_count", 8}}},
        {"model",
         {{"model", "resnet"}, {"channels", 1}, {"size", 28}, {"classes", 10}, {"blocks", 1}, {"width", 2}}},
        {"train", {{"batch", 1}, {"epochs", 1}}},
    };
    const fs::path cfg_path = tmp.file("bn1.json");
    write_text_file(cfg_path, cfg.dump());
    const CliResult r = run_cli_bin(tmp, "train --config " + cfg_path.string() + " --out-dir " +
                                             tmp.file("out").string());
    CHECK(r.code == 2);
    CHECK(contains(r.err, "batchnorm"));
}

TEST_CASE("numeric blow-up exits with the numeric code and the last good step") {
    ScopedTempDir tmp;
    json cfg = toy_svm_config("boom", 1);
    cfg["train"] = {{"batch", 32}, {"epochs", 5}, {"loss", "hinge"},
                    {"opt", {{"kind", "sgd"}, {"lr", 1e308}}}};
    const fs::path cfg_path = tmp.file("boom.json");
    write_text_file(cfg_path, cfg.dump());
    const fs::path out = tmp.file("out");

    const CliResult r = run_cli_bin(tmp, "train --config " + cfg_path.string() + " --out-dir " + out.string());
    CHECK(r.code == 4);
    CHECK(contains(r.err, "numeric failure"));
    CHECK(contains(r.err, "last good step"));
    CHECK(fs::exists(out / "boom.diagnostics.csv"));
}

TEST_CASE("compare rounds metric cells to two decimals, ties to even") {
    ScopedTempDir tmp;
    const fs::path a = tmp.file("svm.json");
    const fs::path b = tmp.file("resnet.json");
    const fs::path c = tmp.file("cgan.json");
    write_text_file(a, fixture_report("SVM", 0.85, 0.80, 0.82, 0.82, kDiagonal, 0.5).dump(2));
    // The harmonic mean of 0.92 and 0.91 is 0.914972..., below the tie.
    const double f1_resnet = 2.0 * 0.92 * 0.91 / (0.92 + 0.91);
    write_text_file(b, fixture_report("ResNet", 0.92, 0.91, 0.92, f1_resnet, kDiagonal, 0.5).dump(2));
    const double f1_cgan = 2.0 * 0.95 * 0.93 / (0.95 + 0.93);  // 0.9398...
    write_text_file(c, fixture_report("CGAN", 0.95, 0.93, 0.125, f1_cgan, kDiagonal, 0.5).dump(2));

    const CliResult r =
        run_cli_bin(tmp, "compare " + a.string() + " " + b.string() + " " + c.string());
    CHECK(r.code == 0);
    CHECK(contains(r.out, "| SVM | 0.85 | 0.80 | 0.82 | 0.82 |"));
    CHECK(contains(r.out, "| ResNet | 0.92 | 0.91 | 0.92 | 0.91 |"));
    // 0.125 is an exact tie: round half to even gives 0.12.
    CHECK(contains(r.out, "| CGAN | 0.95 | 0.93 | 0.12 | 0.94 |"));
}

TEST_CASE("compare rejects malformed or inconsistent reports as data errors") {
    ScopedTempDir tmp;
    const fs::path broken = tmp.file("broken.json");
    write_text_file(broken, "{never valid");
    const CliResult parse = run_cli_bin(tmp, "compare " + broken.string());
    CHECK(parse.code == 3);
    CHECK(contains(parse.err, "malformed report"));

    json missing = fixture_report("x", 0.5, 0.5, 0.5, 0.5, kDiagonal, 0.5);
    missing.erase("metrics");
    const fs::path missing_path = tmp.file("missing.json");
    write_text_file(missing_path, missing.dump());
    CHECK(run_cli_bin(tmp, "compare " + missing_path.string()).code == 3);

    json range = fixture_report("x", 0.5, 0.5, 0.5, 0.5, kDiagonal, 0.5);
    range["metrics"]["accuracy"] = 1.5;
    const fs::path range_path = tmp.file("range.json");
    write_text_file(range_path, range.dump());
    CHECK(run_cli_bin(tmp, "compare " + range_path.string()).code == 3);
}

TEST_CASE("roc dominance classification across fixture curves") {
    ScopedTempDir tmp;
    const std::vector<RocPoint> perfect = {{0.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
    const std::vector<RocPoint> early = {{0.0, 0.0}, {0.05, 0.5}, {0.5, 0.6}, {1.0, 1.0}};
    const std::vector<RocPoint> late = {{0.0, 0.0}, {0.2, 0.9}, {1.0, 1.0}};

    const fs::path pa = tmp.file("alpha.json");
    const fs::path pb = tmp.file("beta.json");
    const fs::path pc = tmp.file("gamma.json");
    write_text_file(pa, fixture_report("alpha", 0.9, 0.9, 0.9, 0.9, perfect, 1.0).dump());
    write_text_file(pb, fixture_report("beta", 0.6, 0.6, 0.6, 0.6, early, 0.62).dump());
    write_text_file(pc, fixture_report("gamma", 0.7, 0.7, 0.7, 0.7, late, 0.85).dump());

    const CliResult r = run_cli_bin(tmp, "roc " + pa.string() + " " + pb.string() + " " + pc.string());
    CHECK(r.code == 0);
    CHECK(contains(r.out, "dominance: alpha dominates beta pointwise"));
    CHECK(contains(r.out, "dominance: alpha dominates gamma pointwise"));
    // beta is higher at fpr 0.05, gamma is higher at fpr 0.2: they cross.
    CHECK(contains(r.out, "dominance: beta and gamma cross"));
}

}  // TEST_SUITE
