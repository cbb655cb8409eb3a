// Acceptance gate: every criterion the benchmark must satisfy, one line of
// output each. Exits nonzero if any criterion fails.
//
//   A1  finite-difference gradient checks over every layer + GAN objectives
//   A2  objective values at the D == 0.5 equilibrium point
//   A3  toy-ring GAN reaches equilibrium and covers the modes
//   A4  F1 formula reproduces the published table (one documented discrepancy)
//   A5  exhaustive ROC/AUC oracle equivalence on small instances
//   A6  scaled-down baseline ordering: CNN beats linear SVM
//   A7  structural fidelity of the generator/discriminator recipes
//   A8  format robustness: parser fuzz, checkpoint round trip, pixel bijection
//   A9  end-to-end determinism of the CLI train/eval pipeline

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ganbench/autograd.hpp"
#include "ganbench/checkpoint.hpp"
#include "ganbench/data_io.hpp"
#include "ganbench/errors.hpp"
#include "ganbench/gan.hpp"
#include "ganbench/layers.hpp"
#include "ganbench/metrics.hpp"
#include "ganbench/models.hpp"
#include "ganbench/ops.hpp"
#include "ganbench/rng.hpp"
#include "ganbench/tensor.hpp"
#include "ganbench/train.hpp"

#include "digits.hpp"
#include "oracles.hpp"
#include "tmpdir.hpp"

using namespace ganbench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

struct Outcome {
    bool pass = false;
    std::string detail;
};

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = rng.normal() * scale;
    return Tensor::from(std::move(shape), std::move(v));
}

// Values at least `margin` away from zero (for kinked activations).
Tensor kink_safe_tensor(Shape shape, Rng& rng, double margin = 1e-2) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) {
        do { x = rng.normal(); } while (std::fabs(x) < margin);
    }
    return Tensor::from(std::move(shape), std::move(v));
}

// Pairwise-separated values (for maxpool: no near-ties within h of a switch).
Tensor separated_tensor(Shape shape, Rng& rng, double min_gap = 1e-3) {
    const std::size_t n = shape_numel(shape);
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    for (std::size_t k = 1; k < n; ++k) {
        if (v[idx[k]] < v[idx[k - 1]] + min_gap) v[idx[k]] = v[idx[k - 1]] + min_gap;
    }
    return Tensor::from(std::move(shape), std::move(v));
}

Tensor prob_tensor(Shape shape, Rng& rng) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = rng.uniform(0.05, 0.95);
    return Tensor::from(std::move(shape), std::move(v));
}

// Round-half-even at two decimals, the table-rendering convention.
std::string two_dp(double v) {
    const double cents = static_cast<double>(std::llrint(v * 100.0));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", cents / 100.0);
    return buf;
}

struct CliResult {
    int code = -1;
    std::string out;
};

CliResult run_cli(const fs::path& cwd, const std::string& args) {
    const fs::path out_file = cwd / ".cli-output.txt";
    const std::string cmd = "cd '" + cwd.string() + "' && '" + GANBENCH_BIN + "' " + args + " > '" +
                            out_file.string() + "' 2>&1";
    const int rc = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

json load_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    return json::parse(in);
}

OptimizerConfig opt_from_json(const json& j, OptimizerConfig base) {
    if (j.is_null()) return base;
    if (j.contains("kind")) base.kind = optimizer_kind_from_string(j["kind"].get<std::string>());
    if (j.contains("lr")) base.lr = j["lr"].get<double>();
    if (j.contains("beta1")) base.beta1 = j["beta1"].get<double>();
    if (j.contains("beta2")) base.beta2 = j["beta2"].get<double>();
    if (j.contains("eps")) base.eps = j["eps"].get<double>();
    return base;
}

// ---------------------------------------------------------------------------
// A1: gradient correctness over every layer and both GAN objectives
// ---------------------------------------------------------------------------

Outcome a1_gradients() {
    constexpr double kH = 1e-5;
    constexpr double kTol = 1e-4;
    constexpr int kInstances = 25;
    Rng rng(101);

    double worst_overall = 0.0;
    std::string worst_name = "none";
    std::vector<std::string> failures;

    // contraction(v) = mean(w .* v) for a fixed random w: a generic linear
    // functional with nonzero gradients everywhere (plain means are blind to
    // normalizing layers).
    const auto check = [&](const std::string& name, const ParamSet& params, const ScalarGraphFn& f) {
        const double rel = finite_diff_check(f, params, kH);
        if (rel > worst_overall) {
            worst_overall = rel;
            worst_name = name;
        }
        if (!(rel < kTol)) {
            failures.push_back(name + " rel " + std::to_string(rel));
        }
    };

    for (int inst = 0; inst < kInstances; ++inst) {
        {  // affine
            ParamSet p;
            p.add("x", random_tensor({3, 5}, rng));
            p.add("w", random_tensor({5, 4}, rng));
            p.add("b", random_tensor({4}, rng));
            const Tensor w = random_tensor({3, 4}, rng);
            check("affine", p, [w](Tape& t, const std::vector<Variable>& v) {
                return ops::mean_all(ops::mul(layers::affine(v[0], v[1], v[2]), t.constant(w)));
            });
        }
        {  // conv2d, varying stride/pad
            const std::size_t stride = 1 + rng.index(2), pad = rng.index(2);
            ParamSet p;
            p.add("x", random_tensor({2, 2, 6, 6}, rng));
            p.add("k", random_tensor({3, 2, 3, 3}, rng));
            const std::size_t ho = (6 + 2 * pad - 3) / stride + 1;
            const Tensor w = random_tensor({2, 3, ho, ho}, rng);
            check("conv2d", p, [w, stride, pad](Tape& t, const std::vector<Variable>& v) {
                return ops::mean_all(ops::mul(layers::conv2d(v[0], v[1], stride, pad), t.constant(w)));
            });
        }
        {  // conv2d_transpose
            ParamSet p;
            p.add("x", random_tensor({2, 3, 4, 4}, rng));
            p.add("k", random_tensor({3, 2, 4, 4}, rng));
            const Tensor w = random_tensor({2, 2, 8, 8}, rng);  // (4-1)*2 - 2 + 4 = 8
            check("conv2d_transpose", p, [w](Tape& t, const std::vector<Variable>& v) {
                return ops::mean_all(ops::mul(layers::conv2d_transpose(v[0], v[1], 2, 1), t.constant(w)));
            });
        }
        {  // maxpool2d on well-separated values
            ParamSet p;
            p.add("x", separated_tensor({2, 2, 6, 6}, rng));
            const Tensor w = random_tensor({2, 2, 3, 3}, rng);
            check("maxpool2d", p, [w](Tape& t, const std::vector<Variable>& v) {
                return ops::mean_all(ops::mul(layers::maxpool2d(v[0], 2, 2), t.constant(w)));
            });
        }
        {  // batchnorm (train mode, gradients through the batch statistics)
            ParamSet p;
            p.add("x", random_tensor({4, 2, 3, 3}, rng));
            p.add("gamma", random_tensor({2}, rng, 0.2));
            p.add("beta", random_tensor({2}, rng, 0.2));
            const Tensor w = random_tensor({4, 2, 3, 3}, rng);
            check("batchnorm", p, [w](Tape& t, const std::vector<Variable>& v) {
                BatchNormState state = make_batchnorm_state(2);
                return ops::mean_all(ops::mul(layers::batchnorm(v[0], v[1], v[2], state), t.constant(w)));
            });
        }
        {  // pad2d / crop2d / global_avg_pool
            ParamSet p;
            p.add("x", random_tensor({2, 3, 4, 4}, rng));
            const Tensor wp = random_tensor({2, 3, 6, 6}, rng);
            check("pad2d", p, [wp](Tape& t, const std::vector<Variable>& v) {
                return ops::mean_all(ops::mul(layers::pad2d(v[0], 1), t.constant(wp)));
            });
            const Tensor wc = random_tensor({2, 3, 2, 2}, rng);
            check("crop2d", p, [wc](Tape& t, const std::vector<Variable>& v) {
                return ops::mean_all(ops::mul(layers::crop2d(v[0], 1), t.constant(wc)));
            });
            const Tensor wg = random_tensor({2, 3}, rng);
            check("global_avg_pool", p, [wg](Tape& t, const std::vector<Variable>& v) {
                return ops::mean_all(ops::mul(layers::global_avg_pool(v[0]), t.constant(wg)));
            });
        }
        {  // activations
            ParamSet p;
            p.add("x", kink_safe_tensor({40}, rng));
            const Tensor w = random_tensor({40}, rng);
            check("relu", p, [w](Tape& t, const std::vector<Variable>& v) {
                return ops::mean_all(ops::mul(ops::relu(v[0]), t.constant(w)));
            });
            check("leaky_relu", p, [w](Tape& t, const std::vector<Variable>& v) {
                return ops::mean_all(ops::mul(ops::leaky_relu(v[0], 0.2), t.constant(w)));
            });
            check("tanh", p, [w](Tape& t, const std::vector<Variable>& v) {
                return ops::mean_all(ops::mul(ops::tanh(v[0]), t.constant(w)));
            });
            check("sigmoid", p, [w](Tape& t, const std::vector<Variable>& v) {
                return ops::mean_all(ops::mul(ops::sigmoid(v[0]), t.constant(w)));
            });
        }
        {  // softmax cross entropy
            ParamSet p;
            p.add("logits", random_tensor({4, 5}, rng));
            std::vector<std::size_t> labels(4);
            for (auto& y : labels) y = rng.index(5);
            check("softmax_cross_entropy", p, [labels](Tape&, const std::vector<Variable>& v) {
                return layers::softmax_cross_entropy(v[0], labels);
            });
        }
        {  // hinge loss, margins held away from the kink
            Tensor scores;
            std::vector<std::size_t> labels(4);
            bool safe = false;
            while (!safe) {
                scores = random_tensor({4, 5}, rng);
                for (auto& y : labels) y = rng.index(5);
                safe = true;
                for (std::size_t i = 0; i < 4 && safe; ++i) {
                    for (std::size_t j = 0; j < 5 && safe; ++j) {
                        if (j == labels[i]) continue;
                        const double m = 1.0 + scores.at(i * 5 + j) - scores.at(i * 5 + labels[i]);
                        if (std::fabs(m) < 1e-3) safe = false;
                    }
                }
            }
            ParamSet p;
            p.add("scores", scores);
            check("hinge_loss", p, [labels](Tape&, const std::vector<Variable>& v) {
                return layers::hinge_loss(v[0], labels, 1.0);
            });
        }
        {  // binary cross entropy from probabilities
            ParamSet p;
            p.add("p", prob_tensor({8}, rng));
            std::vector<double> t(8);
            for (double& x : t) x = double(rng.index(2));
            const Tensor targets = Tensor::from({8}, std::move(t));
            check("bce_from_probability", p, [targets](Tape&, const std::vector<Variable>& v) {
                return layers::bce_from_probability(v[0], targets);
            });
        }
        {  // GAN objectives
            ParamSet p;
            p.add("d_real", prob_tensor({8}, rng));
            p.add("d_fake", prob_tensor({8}, rng));
            check("discriminator_objective", p, [](Tape&, const std::vector<Variable>& v) {
                return discriminator_objective(v[0], v[1]);
            });
            ParamSet pg;
            pg.add("d_fake", prob_tensor({8}, rng));
            check("generator_objective(paper)", pg, [](Tape&, const std::vector<Variable>& v) {
                return generator_objective(v[0], GenLossForm::PaperForm);
            });
            check("generator_objective(non-saturating)", pg, [](Tape&, const std::vector<Variable>& v) {
                return generator_objective(v[0], GenLossForm::NonSaturating);
            });
        }
    }

    if (!failures.empty()) {
        std::string d = std::to_string(failures.size()) + " failures, first: " + failures.front();
        return {false, d};
    }
    return {true, "worst rel " + std::to_string(worst_overall) + " (" + worst_name + ")"};
}

// ---------------------------------------------------------------------------
// A2: objective values at the equilibrium point D == 0.5
// ---------------------------------------------------------------------------

Outcome a2_equilibrium_values() {
    const Tensor half = Tensor::full({8}, 0.5);
    const double two_ln2 = 2.0 * std::log(2.0);
    const double d = discriminator_objective_value(half, half);
    const double v = total_objective_value(half, half);
    const double g = generator_objective_value(half, GenLossForm::PaperForm);
    std::ostringstream detail;
    detail.precision(17);
    if (std::fabs(d - two_ln2) > 1e-12) {
        detail << "d_obj " << d << " != 2 ln 2";
        return {false, detail.str()};
    }
    if (std::fabs(v - (-two_ln2)) > 1e-12) {
        detail << "V " << v << " != -2 ln 2";
        return {false, detail.str()};
    }
    if (std::fabs(g - std::log(0.5)) > 1e-12) {
        detail << "g_paper " << g << " != ln 1/2";
        return {false, detail.str()};
    }
    return {true, "d_obj = 2 ln 2, V = -2 ln 2, g_paper = ln(1/2), all within 1e-12"};
}

// ---------------------------------------------------------------------------
// A3: desk-scale equilibrium + mode coverage on the toy ring
// ---------------------------------------------------------------------------

Outcome a3_toy_equilibrium() {
    const fs::path cfg_path = fs::path(GANBENCH_CONFIG_DIR) / "toy-gan.json";
    const json cfg = load_json(cfg_path);
    const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();

    const json& dj = cfg.at("dataset");
    const std::size_t modes = dj.value("modes", std::size_t{8});
    const LabeledDataset data =
        make_toy_mixture(dj.value("samples", std::size_t{4096}), modes, dj.value("seed", seed));

    // Same init-stream offsets the trainer CLI derives from the config seed,
    // so this run is identical to `train --config configs/toy-gan.json`.
    ModelSpec g = build_model_from_config(cfg.at("generator"), seed + 1000003);
    ModelSpec d = build_model_from_config(cfg.at("discriminator"), seed + 2000003);

    const json& gj = cfg.at("gan");
    GanConfig gc;
    gc.seed = seed;
    gc.noise_dim = gj.value("noise_dim", gc.noise_dim);
    gc.d_steps = gj.value("d_steps", gc.d_steps);
    gc.batch = gj.value("batch", gc.batch);
    gc.total_steps = gj.value("total_steps", gc.total_steps);
    gc.gen_loss = gen_loss_form_from_string(gj.value("gen_loss", "non-saturating"));
    gc.g_opt = opt_from_json(gj.contains("g_opt") ? gj["g_opt"] : json(), gc.g_opt);
    gc.d_opt = opt_from_json(gj.contains("d_opt") ? gj["d_opt"] : json(), gc.d_opt);

    GanTrainer trainer(g, d, data, gc);
    trainer.run();
    const EquilibriumReport eq = equilibrium_report(trainer.diagnostics(), 100);

    const Tensor noise = sample_noise(gc, 1000);
    Tape tape;
    auto bound = bind(tape, g.params, false);
    const Tensor out = model_forward(g, tape, bound, tape.constant(noise), false).main.value;
    const Tensor centers = toy_mode_centers(modes);
    std::vector<int> hits(modes, 0);
    for (std::size_t i = 0; i < 1000; ++i) {
        const double x = out.at(i * 2), y = out.at(i * 2 + 1);
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t m = 0; m < modes; ++m) {
            const double dx = x - centers.at(m * 2), dy = y - centers.at(m * 2 + 1);
            const double dist = dx * dx + dy * dy;
            if (dist < best_d) {
                best_d = dist;
                best = m;
            }
        }
        ++hits[best];
    }
    int covered = 0;
    for (std::size_t m = 0; m < modes; ++m) {
        if (hits[m] >= 20) ++covered;  // >= 2% of 1000
    }

    std::ostringstream detail;
    detail << "window means D(x) " << two_dp(eq.mean_d_real) << ", D(G(z)) " << two_dp(eq.mean_d_fake)
           << "; " << covered << "/" << modes << " modes >= 2%";
    const bool pass = eq.dist_real <= 0.15 && eq.dist_fake <= 0.15 && covered >= 6;
    return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// A4: F1 formula against the published table
// ---------------------------------------------------------------------------

Outcome a4_f1_table() {
    // Confusion counts constructed so tp/(tp+fp) and tp/(tp+fn) equal the
    // published precision/recall exactly (integral rational forms).
    struct Row {
        const char* model;
        std::uint64_t tp, fp, fn;
        const char* precision, *recall, *want_f1;
    };
    const Row rows[] = {
        {"SVM", 68, 12, 17, "0.85", "0.80", "0.82"},
        {"CNN", 946, 129, 154, "0.88", "0.86", "0.87"},
        {"ResNet", 2093, 182, 207, "0.92", "0.91", "0.91"},  // published table says 0.92
        {"CGAN", 1767, 93, 133, "0.95", "0.93", "0.94"},
    };
    std::string note;
    for (const Row& r : rows) {
        ConfusionCounts counts;
        ConfusionCounts::PerClass pc;
        pc.tp = r.tp;
        pc.fp = r.fp;
        pc.fn = r.fn;
        pc.tn = 0;
        counts.per_class = {pc};
        counts.n = r.tp + r.fp + r.fn;
        const MetricsSummary s = metrics(counts);
        if (two_dp(s.precision) != r.precision || two_dp(s.recall) != r.recall) {
            return {false, std::string(r.model) + ": constructed counts render P " + two_dp(s.precision) +
                               " R " + two_dp(s.recall) + ", expected " + r.precision + "/" + r.recall};
        }
        if (two_dp(s.f1) != r.want_f1) {
            return {false, std::string(r.model) + ": harmonic F1 renders " + two_dp(s.f1) +
                               ", expected " + r.want_f1};
        }
        if (std::string(r.model) == "ResNet") {
            std::ostringstream oss;
            oss.precision(6);
            oss << "ResNet computed F1 " << s.f1 << " -> " << two_dp(s.f1)
                << " (published row says 0.92; discrepancy documented, not reproduced)";
            note = oss.str();
        }
    }
    return {true, "SVM 0.82, CNN 0.87, CGAN 0.94; " + note};
}

// ---------------------------------------------------------------------------
// A5: exhaustive ROC/AUC oracle equivalence
// ---------------------------------------------------------------------------

Outcome a5_roc_oracle() {
    Rng rng(505);
    std::size_t instances = 0;
    for (std::size_t n = 2; n <= 12; ++n) {
        for (std::uint32_t pattern = 0; pattern < (1u << n); ++pattern) {
            std::vector<int> labels(n);
            int pos = 0;
            for (std::size_t i = 0; i < n; ++i) {
                labels[i] = int((pattern >> i) & 1u);
                pos += labels[i];
            }
            if (pos == 0 || pos == int(n)) continue;  // roc needs both classes
            for (int draw = 0; draw < 20; ++draw) {
                std::vector<double> scores(n);
                if (draw % 2 == 0) {
                    for (double& s : scores) s = rng.uniform(0.0, 1.0);
                } else {
                    // Quantized scores: plenty of ties.
                    for (double& s : scores) s = double(rng.index(5)) / 4.0;
                }
                ++instances;
                const auto got = roc_curve(scores, labels);
                const auto want = testsupport::brute_force_roc(scores, labels);
                if (got.size() != want.size()) {
                    return {false, "point-count mismatch at n=" + std::to_string(n)};
                }
                for (std::size_t i = 0; i < got.size(); ++i) {
                    if (got[i].fpr != want[i].fpr || got[i].tpr != want[i].tpr) {
                        return {false, "point mismatch at n=" + std::to_string(n)};
                    }
                }
                const double area = auc(got);
                const double mw = testsupport::mann_whitney_auc(scores, labels);
                if (std::fabs(area - mw) > 1e-12) {
                    return {false, "auc " + std::to_string(area) + " vs Mann-Whitney " +
                                       std::to_string(mw) + " at n=" + std::to_string(n)};
                }
            }
        }
    }
    return {true, std::to_string(instances) + " instances, exact points, |auc - MW| <= 1e-12"};
}

// ---------------------------------------------------------------------------
// A6: scaled-down baseline ordering through the CLI pipeline
// ---------------------------------------------------------------------------

struct ModelRun {
    std::string config;   // file name under configs/
    std::string name;     // artifact prefix from the config
    double accuracy = 0.0;
    double macro_auc = 0.0;
};

Outcome a6_baseline_ordering() {
    testsupport::ScopedTempDir scratch;
    const fs::path data_dir = scratch.path() / "data" / "mnist";

    // Use the classic corpus when its files are present; otherwise fall back
    // to the deterministic procedural digit corpus (same IDX container).
    const fs::path real = fs::path(GANBENCH_DATA_DIR) / "mnist";
    std::string source;
    if (fs::exists(real / "train-images-idx3-ubyte")) {
        fs::create_directories(data_dir);
        for (const char* f : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                              "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"}) {
            fs::copy_file(real / f, data_dir / f);
        }
        source = "classic corpus";
    } else {
        testsupport::write_digit_corpus(data_dir, 2000, 1000, 5);
        source = "procedural digit corpus";
    }

    std::vector<ModelRun> runs = {
        {"mnist-svm.json", "mnist-svm"},
        {"mnist-cnn.json", "mnist-cnn"},
        {"mnist-resnet.json", "mnist-resnet"},
        {"mnist-cgan.json", "mnist-cgan"},
    };
    for (ModelRun& r : runs) {
        const fs::path cfg = fs::path(GANBENCH_CONFIG_DIR) / r.config;
        const fs::path out_dir = scratch.path() / ("run-" + r.name);
        const CliResult train = run_cli(scratch.path(), "train --config '" + cfg.string() +
                                                            "' --out-dir '" + out_dir.string() + "'");
        if (train.code != 0) {
            return {false, r.name + " training exited " + std::to_string(train.code) + ": " + train.out};
        }
        const fs::path report = out_dir / "report.json";
        const CliResult eval = run_cli(
            scratch.path(), "eval --checkpoint '" + (out_dir / (r.name + ".ckpt")).string() +
                                "' --config '" + cfg.string() + "' --split test --out '" +
                                report.string() + "'");
        if (eval.code != 0) {
            return {false, r.name + " evaluation exited " + std::to_string(eval.code) + ": " + eval.out};
        }
        const json rep = load_json(report);
        r.accuracy = rep.at("metrics").at("accuracy").get<double>();
        r.macro_auc = rep.at("roc").at("macro_auc").get<double>();
    }

    const ModelRun& svm = runs[0];
    const ModelRun& cnn = runs[1];
    std::ostringstream detail;
    detail << source << "; accuracy svm " << svm.accuracy << ", cnn " << cnn.accuracy << ", resnet "
           << runs[2].accuracy << ", cgan " << runs[3].accuracy << " (resnet/cgan reported, not asserted); "
           << "cnn macro auc " << two_dp(cnn.macro_auc);
    const bool pass = cnn.accuracy >= svm.accuracy + 0.01 && cnn.macro_auc >= 0.95;
    return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// A7: structural fidelity of the architecture recipes
// ---------------------------------------------------------------------------

Outcome a7_structure() {
    for (const std::size_t size : {std::size_t{28}, std::size_t{32}}) {
        Rng rng(7);
        const ModelSpec g = build_generator(64, 1, size, 8, rng);

        std::vector<std::size_t> convt;
        for (std::size_t i = 0; i < g.layers.size(); ++i) {
            const LayerKind k = g.layers[i].kind;
            if (k == LayerKind::Maxpool || k == LayerKind::GlobalAvgPool) {
                return {false, "generator contains a pooling layer"};
            }
            if (k == LayerKind::Conv2dTranspose) convt.push_back(i);
        }
        if (convt.empty()) return {false, "generator has no transposed convolutions"};
        for (std::size_t idx = 0; idx + 1 < convt.size(); ++idx) {
            const std::size_t i = convt[idx];
            if (i + 2 >= g.layers.size() || g.layers[i + 1].kind != LayerKind::Batchnorm ||
                g.layers[i + 2].kind != LayerKind::Relu) {
                return {false, "hidden up-sampling block is not conv_transpose + batchnorm + relu"};
            }
        }
        const std::size_t last = convt.back();
        if (last + 1 >= g.layers.size() || g.layers[last + 1].kind != LayerKind::Tanh) {
            return {false, "generator output block is not tanh-activated"};
        }
        for (std::size_t i = last; i < g.layers.size(); ++i) {
            if (g.layers[i].kind == LayerKind::Batchnorm) {
                return {false, "generator output block applies batchnorm"};
            }
        }

        const ModelSpec d = build_discriminator(1, size, 8, rng);
        std::size_t first_conv = g.layers.size();
        bool leaky = false;
        for (std::size_t i = 0; i < d.layers.size(); ++i) {
            if (d.layers[i].kind == LayerKind::Conv2d && first_conv == g.layers.size()) first_conv = i;
            if (d.layers[i].kind == LayerKind::LeakyRelu) leaky = true;
        }
        if (first_conv == g.layers.size()) return {false, "discriminator has no convolutions"};
        if (d.layers[first_conv + 1].kind == LayerKind::Batchnorm) {
            return {false, "discriminator input block applies batchnorm"};
        }
        if (!leaky) return {false, "discriminator has no leaky relu"};
        if (d.layers.back().kind != LayerKind::Sigmoid) {
            return {false, "discriminator output is not sigmoid-activated"};
        }
    }
    return {true, "generator: conv_transpose/bn/relu blocks, tanh output, no pooling, no output bn; "
                  "discriminator: leaky relu, sigmoid output, no input-block bn (28 and 32 px)"};
}

// ---------------------------------------------------------------------------
// A8: format robustness
// ---------------------------------------------------------------------------

Outcome a8_format_robustness() {
    Rng rng(808);

    // Valid fixtures.
    std::vector<std::vector<std::uint8_t>> imgs;
    std::vector<std::uint8_t> labs;
    for (std::size_t i = 0; i < 10; ++i) {
        imgs.push_back(testsupport::render_digit(i, 900 + i));
        labs.push_back(std::uint8_t(i));
    }
    const std::vector<std::uint8_t> idx_img = testsupport::idx_image_bytes(imgs);
    const std::vector<std::uint8_t> idx_lab = testsupport::idx_label_bytes(labs);
    std::vector<std::uint8_t> cifar(10 * 3073);
    for (std::size_t i = 0; i < 10; ++i) {
        cifar[i * 3073] = std::uint8_t(i);
        for (std::size_t j = 1; j < 3073; ++j) cifar[i * 3073 + j] = std::uint8_t(rng.index(256));
    }

    const auto corrupt = [&](std::vector<std::uint8_t> bytes) {
        switch (rng.index(4)) {
            case 0: {  // truncate
                bytes.resize(rng.index(bytes.size()));
                break;
            }
            case 1: {  // overwrite one byte
                bytes[rng.index(bytes.size())] = std::uint8_t(rng.index(256));
                break;
            }
            case 2: {  // flip one bit
                bytes[rng.index(bytes.size())] ^= std::uint8_t(1u << rng.index(8));
                break;
            }
            default: {  // append garbage
                const std::size_t extra = 1 + rng.index(8);
                for (std::size_t i = 0; i < extra; ++i) bytes.push_back(std::uint8_t(rng.index(256)));
                break;
            }
        }
        return bytes;
    };

    std::size_t parsed_fine = 0, typed = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        try {
            if (trial % 2 == 0) {
                // Corrupt one side of the IDX pair.
                if (rng.index(2) == 0) {
                    parse_idx(corrupt(idx_img), idx_lab);
                } else {
                    parse_idx(idx_img, corrupt(idx_lab));
                }
            } else {
                parse_cifar10(corrupt(cifar));
            }
            ++parsed_fine;
        } catch (const FormatError&) {
            ++typed;
        } catch (const std::exception& e) {
            return {false, std::string("corruption ") + std::to_string(trial) +
                               " escaped the format-error taxonomy: " + e.what()};
        }
    }

    // Checkpoint round trip, bitwise: exercise batchnorm running stats first.
    Rng mrng(8080);
    ModelSpec g = build_generator(16, 1, 28, 4, mrng);
    {
        Tape tape;
        auto bound = bind(tape, g.params, false);
        model_forward(g, tape, bound, tape.constant(random_tensor({2, 16}, mrng, 1.0)), true);
    }
    const std::vector<std::uint8_t> bytes = serialize_checkpoint(g);
    ModelSpec g2 = deserialize_checkpoint(bytes);
    if (serialize_checkpoint(g2) != bytes) {
        return {false, "checkpoint round trip is not bitwise exact"};
    }

    // normalize / denormalize bijection over every byte value.
    std::vector<double> px(256);
    std::iota(px.begin(), px.end(), 0.0);
    const Tensor n = normalize(Tensor::from({256}, std::move(px)));
    for (std::size_t b = 0; b < 256; ++b) {
        if (denormalize_value(n.at(b)) != b) {
            return {false, "normalize/denormalize is not a bijection at byte " + std::to_string(b)};
        }
    }

    return {true, "1000 corruptions: " + std::to_string(typed) + " typed format errors, " +
                      std::to_string(parsed_fine) +
                      " still parseable; checkpoint bitwise; pixel bijection over 0..255"};
}

// ---------------------------------------------------------------------------
// A9: end-to-end determinism of the CLI pipeline
// ---------------------------------------------------------------------------

Outcome a9_determinism() {
    testsupport::ScopedTempDir scratch;
    const json cfg = {
        {"name", "det"},
        {"task", "classifier"},
        {"seed", 7},
        {"dataset", {{"kind", "toy"}, {"samples", 256}, {"modes", 8}}},
        {"classifier", {{"model", "linear-svm"}, {"in_dim", 2}, {"classes", 8}}},
        {"train",
         {{"batch", 32}, {"epochs", 20}, {"loss", "softmax"}, {"opt", {{"kind", "sgd"}, {"lr", 0.5}}}}},
    };
    const fs::path cfg_path = scratch.file("det.json");
    write_text_file(cfg_path, cfg.dump(2));

    std::string ckpt_sha[2], report_sha[2];
    for (int round = 0; round < 2; ++round) {
        const fs::path out_dir = scratch.path() / ("round" + std::to_string(round));
        const CliResult train = run_cli(scratch.path(), "train --config '" + cfg_path.string() +
                                                            "' --out-dir '" + out_dir.string() + "'");
        if (train.code != 0) return {false, "training exited " + std::to_string(train.code)};
        const fs::path ckpt = out_dir / "det.ckpt";
        ckpt_sha[round] = sha256_file(ckpt);

        const fs::path report = out_dir / "report.json";
        const CliResult eval =
            run_cli(scratch.path(), "eval --checkpoint '" + ckpt.string() + "' --config '" +
                                        cfg_path.string() + "' --split test --out '" + report.string() + "'");
        if (eval.code != 0) return {false, "evaluation exited " + std::to_string(eval.code)};
        report_sha[round] = sha256_file(report);
    }
    if (ckpt_sha[0] != ckpt_sha[1]) {
        return {false, "checkpoint hashes differ: " + ckpt_sha[0] + " vs " + ckpt_sha[1]};
    }
    if (report_sha[0] != report_sha[1]) {
        return {false, "report hashes differ: " + report_sha[0] + " vs " + report_sha[1]};
    }
    return {true, "checkpoint sha256 " + ckpt_sha[0].substr(0, 12) + "..., report sha256 " +
                      report_sha[0].substr(0, 12) + "..., identical across runs"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* label;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"A1 gradient checks (every layer + GAN objectives, h=1e-5, rel < 1e-4, 25 instances each)",
         a1_gradients},
        {"A2 objective values at D == 0.5 (2 ln 2 / -2 ln 2 / ln 1/2, tol 1e-12)", a2_equilibrium_values},
        {"A3 toy-ring GAN equilibrium (window means in 0.5 +/- 0.15, >= 6/8 modes >= 2%)",
         a3_toy_equilibrium},
        {"A4 F1 harmonic-mean table reproduction (2-decimal, half-even)", a4_f1_table},
        {"A5 ROC/AUC oracle equivalence (exhaustive <= 12-sample instances x 20 draws)", a5_roc_oracle},
        {"A6 baseline ordering (CNN accuracy >= SVM + 1pt, CNN macro AUC >= 0.95)", a6_baseline_ordering},
        {"A7 architecture recipe structure (generator / discriminator)", a7_structure},
        {"A8 format robustness (1000-corruption fuzz, bitwise checkpoint, pixel bijection)",
         a8_format_robustness},
        {"A9 pipeline determinism (same seed -> identical checkpoint and report hashes)", a9_determinism},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("unexpected exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s: %s  [%.1f s] %s%s\n", c.label, o.pass ? "PASS" : "FAIL", secs,
                    o.detail.empty() ? "" : "-- ", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria FAILED\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
