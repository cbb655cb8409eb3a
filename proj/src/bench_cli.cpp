#include "ganbench/bench_cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "ganbench/autograd.hpp"
#include "ganbench/checkpoint.hpp"
#include "ganbench/errors.hpp"
#include "ganbench/gan.hpp"
#include "ganbench/metrics.hpp"
#include "ganbench/models.hpp"
#include "ganbench/train.hpp"

namespace ganbench::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Runs a verb body and maps the error taxonomy onto exit codes.
template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kUsage;
    }
}

std::string now_iso8601() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Experiment configs are user input: parse failures are usage errors.
json load_config_json(const fs::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ContractError("config parse failure in " + path.string() + ": " + e.what());
    }
}

// Reports are data produced by earlier runs: parse failures are data errors.
json load_report_json(const fs::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw FormatError("malformed report " + path.string() + ": " + e.what());
    }
}

std::uint64_t require_seed(const json& cfg) {
    if (!cfg.contains("seed") || !cfg["seed"].is_number_integer() || cfg["seed"].get<std::int64_t>() < 0) {
        throw ContractError("config requires a non-negative integer \"seed\"");
    }
    return cfg["seed"].get<std::uint64_t>();
}

std::size_t jsize(const json& j, const char* key, std::size_t fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j[key].is_number_integer() || j[key].get<std::int64_t>() < 0) {
        throw ContractError(std::string("config field \"") + key + "\" must be a non-negative integer");
    }
    return j[key].get<std::size_t>();
}

double jnum(const json& j, const char* key, double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ContractError(std::string("config field \"") + key + "\" must be a number");
    return j[key].get<double>();
}

std::string jstr(const json& j, const char* key, const std::string& fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j[key].is_string()) throw ContractError(std::string("config field \"") + key + "\" must be a string");
    return j[key].get<std::string>();
}

OptimizerConfig opt_from_json(const json& j, OptimizerConfig base) {
    if (j.is_null()) return base;
    base.kind = optimizer_kind_from_string(jstr(j, "kind", to_string(base.kind)));
    base.lr = jnum(j, "lr", base.lr);
    base.beta1 = jnum(j, "beta1", base.beta1);
    base.beta2 = jnum(j, "beta2", base.beta2);
    base.eps = jnum(j, "eps", base.eps);
    return base;
}

TrainConfig train_config_from_json(const json& j, std::uint64_t seed) {
    TrainConfig c;
    c.seed = seed;
    c.batch = jsize(j, "batch", c.batch);
    c.epochs = jsize(j, "epochs", c.epochs);
    c.loss = cls_loss_from_string(jstr(j, "loss", "softmax"));
    c.margin = jnum(j, "margin", c.margin);
    c.l2 = jnum(j, "l2", c.l2);
    c.opt = opt_from_json(j.is_object() && j.contains("opt") ? j["opt"] : json(), c.opt);
    return c;
}

GanConfig gan_config_from_json(const json& j, std::uint64_t seed) {
    GanConfig c;
    c.seed = seed;
    c.noise_dim = jsize(j, "noise_dim", c.noise_dim);
    c.d_steps = jsize(j, "d_steps", c.d_steps);
    c.batch = jsize(j, "batch", c.batch);
    c.total_steps = jsize(j, "total_steps", c.total_steps);
    c.gen_loss = gen_loss_form_from_string(jstr(j, "gen_loss", "non-saturating"));
    c.g_opt = opt_from_json(j.is_object() && j.contains("g_opt") ? j["g_opt"] : json(), c.g_opt);
    c.d_opt = opt_from_json(j.is_object() && j.contains("d_opt") ? j["d_opt"] : json(), c.d_opt);
    return c;
}

// Seed offsets keep model initialization streams independent of the data
// and training streams while staying derivable from the one config seed.
constexpr std::uint64_t kClassifierInitOffset = 1000003;
constexpr std::uint64_t kGeneratorInitOffset = 1000003;
constexpr std::uint64_t kDiscriminatorInitOffset = 2000003;

std::vector<std::uint8_t> must_read(const fs::path& path, const std::string& what) {
    if (!fs::exists(path)) throw IoError("missing " + what + ": " + path.string());
    return read_file(path);
}

LabeledDataset load_idx_pair(const fs::path& dir, const std::string& images_name,
                             const std::string& labels_name) {
    const auto images = must_read(dir / images_name, "dataset file");
    const auto labels = must_read(dir / labels_name, "dataset file");
    LabeledDataset ds = parse_idx(images, labels);
    ds.name = images_name;
    return ds;
}

LabeledDataset concat_datasets(std::vector<LabeledDataset> parts) {
    if (parts.empty()) throw ContractError("dataset file list is empty");
    if (parts.size() == 1) return std::move(parts.front());
    LabeledDataset out = parts.front();
    std::vector<double> values(out.images.values());
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const LabeledDataset& p = parts[i];
        Shape expect = out.images.shape();
        Shape got = p.images.shape();
        expect[0] = got[0] = 0;
        if (expect != got || p.num_classes != out.num_classes) {
            throw ConsistencyError("dataset parts disagree on shape or class count");
        }
        values.insert(values.end(), p.images.values().begin(), p.images.values().end());
        out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    }
    Shape shape = out.images.shape();
    shape[0] = out.labels.size();
    out.images = Tensor::from(shape, std::move(values));
    return out;
}

LabeledDataset subset(const LabeledDataset& raw, std::size_t count, std::uint64_t seed,
                      std::size_t per_class_cap) {
    if (count == 0 && per_class_cap == 0) return raw;
    SplitSpec spec;
    spec.seed = seed;
    spec.test_count = 0;
    spec.train_count = count;
    spec.per_class_cap = per_class_cap;
    return split(raw, spec).first;
}

}  // namespace

LabeledDataset load_dataset_side(const json& config, const std::string& side) {
    if (side != "train" && side != "test") {
        throw ContractError("split must be \"train\" or \"test\", got \"" + side + "\"");
    }
    if (!config.contains("dataset") || !config["dataset"].is_object()) {
        throw ContractError("config requires a \"dataset\" object");
    }
    const json& d = config["dataset"];
    const std::string kind = jstr(d, "kind", "");
    const std::uint64_t base_seed = config.contains("seed") ? require_seed(config) : 0;
    const std::uint64_t split_seed = jsize(d, "split_seed", base_seed);
    const std::size_t count = side == "train" ? jsize(d, "train_count", 0) : jsize(d, "test_count", 0);
    const std::size_t cap = side == "train" ? jsize(d, "per_class_cap", 0) : 0;

    if (kind == "toy") {
        const std::size_t samples = jsize(d, "samples", 4096);
        const std::size_t modes = jsize(d, "modes", 8);
        return make_toy_mixture(samples, modes, jsize(d, "seed", base_seed));
    }
    if (kind == "mnist") {
        const fs::path dir = jstr(d, "dir", "");
        if (dir.empty()) throw ContractError("mnist dataset config requires \"dir\"");
        const LabeledDataset raw =
            side == "train" ? load_idx_pair(dir, "train-images-idx3-ubyte", "train-labels-idx1-ubyte")
                            : load_idx_pair(dir, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte");
        return normalize(subset(raw, count, split_seed, cap));
    }
    if (kind == "cifar10") {
        const fs::path dir = jstr(d, "dir", "");
        if (dir.empty()) throw ContractError("cifar10 dataset config requires \"dir\"");
        std::vector<std::string> files;
        if (side == "train") {
            if (d.contains("files")) {
                if (!d["files"].is_array()) throw ContractError("dataset \"files\" must be an array");
                for (const json& f : d["files"]) files.push_back(f.get<std::string>());
            } else {
                files = {"data_batch_1.bin"};
            }
        } else {
            files = {"test_batch.bin"};
        }
        std::vector<LabeledDataset> parts;
        for (const std::string& f : files) {
            LabeledDataset part = parse_cifar10(must_read(dir / f, "dataset file"));
            part.name = f;
            parts.push_back(std::move(part));
        }
        return normalize(subset(concat_datasets(std::move(parts)), count, split_seed, cap));
    }
    throw ContractError("unknown dataset kind \"" + kind + "\"");
}

std::string format_2dp(double v) {
    if (!std::isfinite(v)) throw NumericError("cannot format non-finite value");
    // Scale, then round with ties to even so 0.125 -> 0.12 and 0.135 -> 0.14
    // deterministically across platforms.
    const long long cents = std::llrint(v * 100.0);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", static_cast<double>(cents) / 100.0);
    return buf;
}

namespace {

json artifact_list(const std::vector<fs::path>& files) {
    json list = json::array();
    for (const fs::path& p : files) {
        list.push_back({{"path", p.filename().string()},
                        {"sha256", sha256_file(p)},
                        {"bytes", fs::file_size(p)}});
    }
    return list;
}

void write_run_manifest(const fs::path& path, const std::string& verb, const json& config,
                        const std::string& started, const std::vector<fs::path>& artifacts) {
    json m;
    m["version"] = kVersion;
    m["verb"] = verb;
    m["config"] = config;
    m["started"] = started;
    m["finished"] = now_iso8601();
    m["artifacts"] = artifact_list(artifacts);
    write_text_file(path, m.dump(2) + "\n");
}

// ---------------------------------------------------------------- prepare

void verify_or_write_manifest(const fs::path& dir, const std::vector<std::string>& files,
                              bool write_manifest) {
    const fs::path manifest_path = dir / "manifest.sha256";
    if (write_manifest) {
        std::vector<ManifestEntry> entries;
        for (const std::string& f : files) {
            if (fs::exists(dir / f)) entries.push_back({sha256_file(dir / f), f});
        }
        write_text_file(manifest_path, render_manifest(entries));
        std::cout << "wrote " << manifest_path.string() << " (" << entries.size() << " entries)\n";
        return;
    }
    if (!fs::exists(manifest_path)) {
        std::cout << "note: no manifest.sha256 in " << dir.string()
                  << "; checksum verification skipped (use --write-manifest to create one)\n";
        return;
    }
    const std::vector<std::uint8_t> bytes = read_file(manifest_path);
    const auto entries = parse_manifest(std::string(bytes.begin(), bytes.end()));
    for (const ManifestEntry& e : entries) {
        const fs::path p = dir / e.filename;
        if (!fs::exists(p)) throw IoError("manifest lists missing file: " + p.string());
        const std::string got = sha256_file(p);
        if (got != e.sha256) {
            throw ConsistencyError("checksum mismatch for " + e.filename + ": manifest " + e.sha256 +
                                   ", file " + got);
        }
    }
    std::cout << "verified " << entries.size() << " checksums against " << manifest_path.string() << "\n";
}

}  // namespace

int cmd_prepare(const PrepareOptions& opt) {
    return guarded([&]() -> int {
        if (opt.dataset == "toy") {
            const LabeledDataset ds = make_toy_mixture(1024, 8, 0);
            std::cout << "ok, synthetic " << ds.num_classes << "-mode mixture; generated on demand, "
                      << "nothing to verify\n";
            return kOk;
        }
        if (opt.dataset == "mnist") {
            const std::vector<std::string> files = {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                                                    "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"};
            verify_or_write_manifest(opt.dir, files, opt.write_manifest);
            const LabeledDataset train = load_idx_pair(opt.dir, files[0], files[1]);
            const LabeledDataset test = load_idx_pair(opt.dir, files[2], files[3]);
            std::cout << "ok, " << train.size() << " train / " << test.size() << " test ("
                      << train.images.dim(2) << "x" << train.images.dim(3) << ", " << train.num_classes
                      << " classes)\n";
            return kOk;
        }
        if (opt.dataset == "cifar10") {
            const std::vector<std::string> files = {"data_batch_1.bin", "data_batch_2.bin",
                                                    "data_batch_3.bin", "data_batch_4.bin",
                                                    "data_batch_5.bin", "test_batch.bin"};
            verify_or_write_manifest(opt.dir, files, opt.write_manifest);
            std::size_t train_count = 0;
            std::size_t height = 0, width = 0, classes = 0;
            for (std::size_t i = 0; i + 1 < files.size(); ++i) {
                const fs::path p = opt.dir / files[i];
                if (!fs::exists(p)) continue;
                const LabeledDataset part = parse_cifar10(read_file(p));
                train_count += part.size();
                height = part.images.dim(2);
                width = part.images.dim(3);
                classes = part.num_classes;
            }
            if (train_count == 0) throw IoError("no data_batch_*.bin files in " + opt.dir.string());
            const LabeledDataset test = parse_cifar10(must_read(opt.dir / files.back(), "dataset file"));
            std::cout << "ok, " << train_count << " train / " << test.size() << " test (" << height << "x"
                      << width << ", " << classes << " classes)\n";
            return kOk;
        }
        throw ContractError("unknown dataset \"" + opt.dataset + "\" (expected mnist, cifar10, or toy)");
    });
}

// ------------------------------------------------------------------ train

namespace {

ModelSpec build_from(const json& cfg, const char* key, std::uint64_t seed) {
    if (!cfg.contains(key) || !cfg[key].is_object()) {
        throw ContractError(std::string("config requires a \"") + key + "\" model object");
    }
    return build_model_from_config(cfg[key], seed);
}

void forbid_batchnorm_batch1(const ModelSpec& model, std::size_t batch) {
    if (batch < 2 && !model.bn_states.empty()) {
        throw ContractError("batch size " + std::to_string(batch) +
                            " is incompatible with batchnorm (need >= 2 samples per batch)");
    }
}

int train_gan_task(const json& cfg, std::uint64_t seed, const std::string& name, const fs::path& out_dir,
                   const std::string& started) {
    const LabeledDataset data = load_dataset_side(cfg, "train");
    ModelSpec g = build_from(cfg, "generator", seed + kGeneratorInitOffset);
    ModelSpec d = build_from(cfg, "discriminator", seed + kDiscriminatorInitOffset);
    const GanConfig gcfg = gan_config_from_json(cfg.contains("gan") ? cfg["gan"] : json(), seed);
    if (gcfg.total_steps == 0) throw ContractError("gan config requires total_steps >= 1");

    GanTrainer trainer(g, d, data, gcfg);
    const fs::path diag_path = out_dir / (name + ".diagnostics.csv");
    try {
        trainer.run();
    } catch (const NumericError&) {
        write_text_file(diag_path, diagnostics_csv(trainer.diagnostics()));
        std::cerr << "last good step: "
                  << (trainer.steps_done() == 0 ? std::string("none")
                                                : std::to_string(trainer.diagnostics().records.back().step))
                  << " (diagnostics written to " << diag_path.string() << ")\n";
        throw;
    }

    const fs::path g_path = out_dir / (name + ".g.ckpt");
    const fs::path d_path = out_dir / (name + ".d.ckpt");
    save_checkpoint(g, g_path);
    save_checkpoint(d, d_path);
    write_text_file(diag_path, diagnostics_csv(trainer.diagnostics()));
    const fs::path manifest = out_dir / (name + ".manifest.json");
    write_run_manifest(manifest, "train", cfg, started, {g_path, d_path, diag_path});

    const GanRecord& last = trainer.diagnostics().records.back();
    const EquilibriumReport eq = equilibrium_report(trainer.diagnostics(), std::min<std::size_t>(100, trainer.steps_done()));
    std::cout << "trained " << name << " for " << trainer.steps_done() << " steps; final d_loss "
              << last.d_loss << ", g_loss " << last.g_loss << "\n";
    std::cout << "equilibrium (last " << eq.window << "): mean D(x) " << eq.mean_d_real << ", mean D(G(z)) "
              << eq.mean_d_fake << "\n";
    std::cout << "artifacts: " << g_path.string() << ", " << d_path.string() << ", " << diag_path.string()
              << ", " << manifest.string() << "\n";
    return kOk;
}

int train_classifier_task(const json& cfg, std::uint64_t seed, const std::string& name,
                          const fs::path& out_dir, const std::string& started) {
    const LabeledDataset data = load_dataset_side(cfg, "train");
    const char* key = cfg.contains("classifier") ? "classifier" : "model";
    ModelSpec model = build_from(cfg, key, seed + kClassifierInitOffset);
    const TrainConfig tcfg = train_config_from_json(cfg.contains("train") ? cfg["train"] : json(), seed);
    forbid_batchnorm_batch1(model, tcfg.batch);

    const fs::path diag_path = out_dir / (name + ".diagnostics.csv");
    TrainLog partial;
    TrainLog log;
    try {
        log = train_classifier(model, data, tcfg, &partial);
    } catch (const NumericError&) {
        write_text_file(diag_path, train_csv(partial));
        std::cerr << "last good step: "
                  << (partial.records.empty() ? std::string("none")
                                              : std::to_string(partial.records.back().step))
                  << " (loss curve written to " << diag_path.string() << ")\n";
        throw;
    }

    const fs::path ckpt_path = out_dir / (name + ".ckpt");
    save_checkpoint(model, ckpt_path);
    write_text_file(diag_path, train_csv(log));
    const fs::path manifest = out_dir / (name + ".manifest.json");
    write_run_manifest(manifest, "train", cfg, started, {ckpt_path, diag_path});

    std::cout << "trained " << name << " for " << log.records.size() << " steps; final loss "
              << (log.records.empty() ? 0.0 : log.records.back().loss) << "\n";
    std::cout << "artifacts: " << ckpt_path.string() << ", " << diag_path.string() << ", "
              << manifest.string() << "\n";
    return kOk;
}

int train_gan_classifier_task(const json& cfg, std::uint64_t seed, const std::string& name,
                              const fs::path& out_dir, const std::string& started) {
    const LabeledDataset data = load_dataset_side(cfg, "train");
    ModelSpec classifier = build_from(cfg, "classifier", seed + kClassifierInitOffset);

    GanClassifierConfig gc;
    gc.cls = train_config_from_json(cfg.contains("train") ? cfg["train"] : json(), seed);
    gc.gan = gan_config_from_json(cfg.contains("gan") ? cfg["gan"] : json(), seed);
    gc.adv_weight = jnum(cfg, "adv_weight", 1.0);
    forbid_batchnorm_batch1(classifier, gc.cls.batch);

    ModelSpec generator;
    const bool wants_generator = gc.adv_weight > 0.0 || cfg.contains("generator");
    if (wants_generator) generator = build_from(cfg, "generator", seed + kGeneratorInitOffset);

    const fs::path diag_path = out_dir / (name + ".diagnostics.csv");
    const fs::path gan_diag_path = out_dir / (name + ".gan.csv");
    GanClassifierResult partial;
    GanClassifierResult result;
    try {
        result = train_gan_classifier(classifier, wants_generator ? &generator : nullptr, data, gc, &partial);
    } catch (const NumericError&) {
        write_text_file(diag_path, train_csv(partial.cls_log));
        std::cerr << "last good step: "
                  << (partial.cls_log.records.empty()
                          ? std::string("none")
                          : std::to_string(partial.cls_log.records.back().step))
                  << " (loss curve written to " << diag_path.string() << ")\n";
        throw;
    }

    const fs::path ckpt_path = out_dir / (name + ".ckpt");
    save_checkpoint(classifier, ckpt_path);
    write_text_file(diag_path, train_csv(result.cls_log));
    std::vector<fs::path> artifacts = {ckpt_path, diag_path};
    if (gc.adv_weight > 0.0 && wants_generator) {
        const fs::path g_path = out_dir / (name + ".g.ckpt");
        save_checkpoint(generator, g_path);
        write_text_file(gan_diag_path, diagnostics_csv(result.gan_diag));
        artifacts.push_back(g_path);
        artifacts.push_back(gan_diag_path);
    }
    const fs::path manifest = out_dir / (name + ".manifest.json");
    write_run_manifest(manifest, "train", cfg, started, artifacts);

    std::cout << "trained " << name << " for " << result.cls_log.records.size() << " steps; final loss "
              << (result.cls_log.records.empty() ? 0.0 : result.cls_log.records.back().loss) << "\n";
    std::cout << "artifacts:";
    for (const fs::path& a : artifacts) std::cout << " " << a.string();
    std::cout << " " << manifest.string() << "\n";
    return kOk;
}

}  // namespace

int cmd_train(const TrainOptions& opt) {
    return guarded([&]() -> int {
        const json cfg = load_config_json(opt.config);
        const std::uint64_t seed = require_seed(cfg);
        const std::string name = jstr(cfg, "name", "run");
        const std::string task = jstr(cfg, "task", "classifier");
        std::error_code ec;
        fs::create_directories(opt.out_dir, ec);
        if (ec) throw IoError("cannot create output directory " + opt.out_dir.string());
        const std::string started = now_iso8601();

        if (task == "gan") return train_gan_task(cfg, seed, name, opt.out_dir, started);
        if (task == "classifier") return train_classifier_task(cfg, seed, name, opt.out_dir, started);
        if (task == "gan-classifier") return train_gan_classifier_task(cfg, seed, name, opt.out_dir, started);
        throw ContractError("unknown task \"" + task + "\" (expected gan, classifier, or gan-classifier)");
    });
}

// ------------------------------------------------------------------- eval

int cmd_eval(const EvalOptions& opt) {
    return guarded([&]() -> int {
        ModelSpec model = load_checkpoint(opt.checkpoint);
        static const std::vector<std::string> kClassifierKinds = {"cnn", "resnet", "linear-svm",
                                                                  "gan-classifier"};
        if (std::find(kClassifierKinds.begin(), kClassifierKinds.end(), model.kind) ==
            kClassifierKinds.end()) {
            throw ContractError("checkpoint kind \"" + model.kind + "\" is not a classifier");
        }
        const json cfg = load_config_json(opt.config);
        const std::uint64_t seed = require_seed(cfg);
        const LabeledDataset data = load_dataset_side(cfg, opt.split);
        const std::size_t positive =
            opt.positive_class >= 0 ? std::size_t(opt.positive_class) : jsize(cfg, "positive_class", 0);

        EvalReport report = evaluate_classifier(model, data, positive);
        report.seed = seed;
        report.config_echo = cfg;
        const json j = report_to_json(report);
        validate_report(j);
        if (opt.out.empty()) throw ContractError("eval requires --out");
        write_text_file(opt.out, j.dump(2) + "\n");
        if (!opt.roc_csv.empty()) write_text_file(opt.roc_csv, roc_csv(report.roc));

        std::cout << "evaluated " << model.kind << " on " << data.size() << " " << opt.split
                  << " samples: accuracy " << format_2dp(report.summary.accuracy) << ", macro f1 "
                  << format_2dp(report.summary.f1) << ", auc(class " << positive << ") "
                  << format_2dp(report.roc_auc) << " -> " << opt.out.string() << "\n";
        for (const std::string& w : report.summary.warnings) std::cout << "warning: " << w << "\n";
        return kOk;
    });
}

// ---------------------------------------------------------------- compare

int cmd_compare(const CompareOptions& opt) {
    return guarded([&]() -> int {
        if (opt.reports.empty()) throw ContractError("compare requires at least one report");
        std::string table = "| Model | Precision | Recall | Accuracy | F1 |\n";
        table += "|---|---|---|---|---|\n";
        for (const fs::path& path : opt.reports) {
            const json j = load_report_json(path);
            validate_report(j);
            const EvalReport r = report_from_json(j);
            table += "| " + r.model + " | " + format_2dp(r.summary.precision) + " | " +
                     format_2dp(r.summary.recall) + " | " + format_2dp(r.summary.accuracy) + " | " +
                     format_2dp(r.summary.f1) + " |\n";
        }
        std::cout << table;
        if (!opt.out.empty()) {
            write_text_file(opt.out, table);
            std::cout << "wrote " << opt.out.string() << "\n";
        }
        return kOk;
    });
}

// -------------------------------------------------------------------- roc

namespace {

// Upper envelope of a curve: max tpr at each distinct fpr, linear between.
struct Envelope {
    std::vector<double> fpr, tpr;
};

Envelope envelope_of(const std::vector<RocPoint>& points) {
    Envelope e;
    for (const RocPoint& p : points) {
        if (!e.fpr.empty() && p.fpr == e.fpr.back()) {
            e.tpr.back() = std::max(e.tpr.back(), p.tpr);
        } else {
            e.fpr.push_back(p.fpr);
            e.tpr.push_back(p.tpr);
        }
    }
    return e;
}

double envelope_at(const Envelope& e, double f) {
    if (e.fpr.empty()) return 0.0;
    if (f <= e.fpr.front()) return e.tpr.front();
    if (f >= e.fpr.back()) return e.tpr.back();
    const auto it = std::upper_bound(e.fpr.begin(), e.fpr.end(), f);
    const std::size_t hi = std::size_t(it - e.fpr.begin());
    const std::size_t lo = hi - 1;
    const double span = e.fpr[hi] - e.fpr[lo];
    const double t = span == 0.0 ? 1.0 : (f - e.fpr[lo]) / span;
    return e.tpr[lo] + t * (e.tpr[hi] - e.tpr[lo]);
}

bool dominates(const Envelope& a, const Envelope& b, const std::vector<double>& grid) {
    for (double f : grid) {
        if (envelope_at(a, f) < envelope_at(b, f) - 1e-12) return false;
    }
    return true;
}

}  // namespace

int cmd_roc(const RocOptions& opt) {
    return guarded([&]() -> int {
        if (opt.reports.empty()) throw ContractError("roc requires at least one report");
        std::vector<std::pair<std::string, std::vector<RocPoint>>> curves;
        for (const fs::path& path : opt.reports) {
            const json j = load_report_json(path);
            validate_report(j);
            const EvalReport r = report_from_json(j);
            curves.emplace_back(r.model, r.roc);
        }

        if (!opt.out_csv.empty()) {
            std::string csv = "curve,fpr,tpr\n";
            char buf[96];
            for (const auto& [name, points] : curves) {
                for (const RocPoint& p : points) {
                    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g\n", name.c_str(), p.fpr, p.tpr);
                    csv += buf;
                }
            }
            write_text_file(opt.out_csv, csv);
            std::cout << "wrote " << opt.out_csv.string() << "\n";
        }
        if (!opt.out_svg.empty()) {
            write_text_file(opt.out_svg, roc_svg(curves));
            std::cout << "wrote " << opt.out_svg.string() << "\n";
        }

        // Pairwise dominance on the union grid of the two curves' fprs.
        for (std::size_t i = 0; i < curves.size(); ++i) {
            for (std::size_t k = i + 1; k < curves.size(); ++k) {
                const Envelope a = envelope_of(curves[i].second);
                const Envelope b = envelope_of(curves[k].second);
                std::vector<double> grid = a.fpr;
                grid.insert(grid.end(), b.fpr.begin(), b.fpr.end());
                std::sort(grid.begin(), grid.end());
                grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
                const bool ab = dominates(a, b, grid);
                const bool ba = dominates(b, a, grid);
                const std::string& na = curves[i].first;
                const std::string& nb = curves[k].first;
                if (ab && ba) {
                    std::cout << "dominance: " << na << " and " << nb << " coincide pointwise\n";
                } else if (ab) {
                    std::cout << "dominance: " << na << " dominates " << nb << " pointwise\n";
                } else if (ba) {
                    std::cout << "dominance: " << nb << " dominates " << na << " pointwise\n";
                } else {
                    std::cout << "dominance: " << na << " and " << nb << " cross\n";
                }
            }
        }
        return kOk;
    });
}

// --------------------------------------------------------------- generate

int cmd_generate(const GenerateOptions& opt) {
    return guarded([&]() -> int {
        ModelSpec model = load_checkpoint(opt.checkpoint);
        if (model.kind != "generator" && model.kind != "mlp-generator") {
            throw ContractError("checkpoint kind \"" + model.kind + "\" cannot generate images");
        }
        if (opt.count == 0) throw ContractError("count must be >= 1");
        if (model.input_shape.size() != 1) {
            throw ContractError("generator input must be a flat noise vector");
        }
        Rng rng(opt.seed);
        const Tensor noise = sample_noise(rng, opt.count, model.input_shape[0]);
        Tape tape;
        const std::vector<Variable> bound = bind(tape, model.params, false);
        const Variable z = tape.constant(noise);
        const Tensor images = model_forward(model, tape, bound, z, false).main.value;

        const std::vector<fs::path> files = export_images(images, opt.out_dir);
        json cfg;
        cfg["checkpoint"] = opt.checkpoint.string();
        cfg["count"] = opt.count;
        cfg["seed"] = opt.seed;
        cfg["model"] = model.config;
        write_run_manifest(opt.out_dir / "manifest.json", "generate", cfg, now_iso8601(), files);
        std::cout << "wrote " << files.size() << " images to " << opt.out_dir.string() << "\n";
        return kOk;
    });
}

// ---------------------------------------------------------------- run_cli

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"adversarial-training benchmark toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    PrepareOptions prepare;
    std::string prepare_dir;
    auto* p = app.add_subcommand("prepare", "Verify and summarize a dataset directory");
    p->add_option("--dataset", prepare.dataset, "Dataset kind: mnist, cifar10, or toy")->required();
    p->add_option("--dir", prepare_dir, "Directory holding the dataset files");
    p->add_flag("--write-manifest", prepare.write_manifest, "Record current checksums instead of verifying");

    TrainOptions train;
    std::string train_config, train_out_dir = ".";
    auto* t = app.add_subcommand("train", "Train a model from a JSON experiment config");
    t->add_option("--config", train_config, "Experiment config JSON")->required();
    t->add_option("--out-dir", train_out_dir, "Directory for checkpoints and diagnostics");

    EvalOptions eval;
    std::string eval_ckpt, eval_config, eval_out, eval_roc_csv;
    auto* e = app.add_subcommand("eval", "Evaluate a classifier checkpoint on a dataset");
    e->add_option("--checkpoint", eval_ckpt, "Model checkpoint")->required();
    e->add_option("--config", eval_config, "Experiment config JSON naming the dataset")->required();
    e->add_option("--split", eval.split, "Dataset side: train or test");
    e->add_option("--out", eval_out, "Report JSON path")->required();
    e->add_option("--roc-csv", eval_roc_csv, "Optional fpr,tpr CSV for the positive class");
    e->add_option("--positive-class", eval.positive_class, "Class plotted as the single ROC curve");

    CompareOptions compare;
    std::vector<std::string> compare_reports;
    std::string compare_out;
    auto* c = app.add_subcommand("compare", "Render a metrics table from report JSONs");
    c->add_option("reports", compare_reports, "Report JSON files")->required();
    c->add_option("--out", compare_out, "Markdown output path");

    RocOptions roc;
    std::vector<std::string> roc_reports;
    std::string roc_out_csv, roc_out_svg;
    auto* r = app.add_subcommand("roc", "Combine ROC curves from report JSONs");
    r->add_option("reports", roc_reports, "Report JSON files")->required();
    r->add_option("--out-csv", roc_out_csv, "Multi-curve curve,fpr,tpr CSV");
    r->add_option("--out-svg", roc_out_svg, "SVG plot path");

    GenerateOptions generate;
    std::string gen_ckpt, gen_out_dir;
    auto* g = app.add_subcommand("generate", "Sample images from a generator checkpoint");
    g->add_option("--checkpoint", gen_ckpt, "Generator checkpoint")->required();
    g->add_option("--count", generate.count, "Number of images");
    g->add_option("--seed", generate.seed, "Noise seed");
    g->add_option("--out", gen_out_dir, "Output directory")->required();

    std::vector<const char*> argv;
    argv.push_back("ganbench");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? kOk : kUsage;
    }

    if (*p) {
        prepare.dir = prepare_dir;
        if (prepare.dataset != "toy" && prepare_dir.empty()) {
            std::cerr << "error: --dir is required for dataset \"" << prepare.dataset << "\"\n";
            return kUsage;
        }
        return cmd_prepare(prepare);
    }
    if (*t) {
        train.config = train_config;
        train.out_dir = train_out_dir;
        return cmd_train(train);
    }
    if (*e) {
        eval.checkpoint = eval_ckpt;
        eval.config = eval_config;
        eval.out = eval_out;
        eval.roc_csv = eval_roc_csv;
        return cmd_eval(eval);
    }
    if (*c) {
        compare.reports.assign(compare_reports.begin(), compare_reports.end());
        compare.out = compare_out;
        return cmd_compare(compare);
    }
    if (*r) {
        roc.reports.assign(roc_reports.begin(), roc_reports.end());
        roc.out_csv = roc_out_csv;
        roc.out_svg = roc_out_svg;
        return cmd_roc(roc);
    }
    if (*g) {
        generate.checkpoint = gen_ckpt;
        generate.out_dir = gen_out_dir;
        return cmd_generate(generate);
    }
    std::cerr << "error: no subcommand given\n";
    return kUsage;
}

}  // namespace ganbench::cli
