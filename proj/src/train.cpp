#include "ganbench/train.hpp"

#include <algorithm>
#include <cstdio>

#include "ganbench/errors.hpp"
#include "ganbench/layers.hpp"
#include "ganbench/ops.hpp"

namespace ganbench {

ClsLoss cls_loss_from_string(const std::string& s) {
    if (s == "softmax") return ClsLoss::Softmax;
    if (s == "hinge") return ClsLoss::Hinge;
    throw ContractError("unknown classifier loss: " + s);
}

BatchIterator::BatchIterator(const LabeledDataset& data, std::size_t batch, std::uint64_t seed)
    : data_(data), batch_(batch), rng_(seed) {
    if (batch_ < 1) throw ContractError("batch size must be >= 1");
    if (data_.size() < batch_) {
        throw ContractError("dataset of " + std::to_string(data_.size()) + " samples cannot fill batches of " +
                            std::to_string(batch_));
    }
    order_.resize(data_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    rng_.shuffle(order_);
}

std::pair<Tensor, std::vector<std::size_t>> BatchIterator::next() {
    const std::size_t chw = data_.images.numel() / data_.size();
    // Batches never straddle an epoch boundary; the remainder is dropped.
    if (cursor_ + batch_ > order_.size()) {
        rng_.shuffle(order_);
        cursor_ = 0;
    }
    std::vector<double> img(batch_ * chw);
    std::vector<std::size_t> labels(batch_);
    const double* src = data_.images.data();
    for (std::size_t i = 0; i < batch_; ++i) {
        const std::size_t idx = order_[cursor_++];
        std::copy(src + idx * chw, src + (idx + 1) * chw, img.begin() + i * chw);
        labels[i] = data_.labels[idx];
    }
    Shape shape = data_.images.shape();
    shape[0] = batch_;
    return {Tensor::from(shape, std::move(img)), std::move(labels)};
}

namespace {

bool is_weight_name(const std::string& name) {
    const auto ends_with = [&](const char* suffix) {
        const std::size_t n = std::string(suffix).size();
        return name.size() >= n && name.compare(name.size() - n, n, suffix) == 0;
    };
    return ends_with(".w") || ends_with(".k");
}

Variable add_l2_penalty(Variable loss, const ModelSpec& model, const std::vector<Variable>& bound, double l2) {
    if (l2 <= 0.0) return loss;
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        if (!is_weight_name(model.params[i].name)) continue;
        loss = ops::add(loss, ops::scale(ops::sum_all(ops::mul(bound[i], bound[i])), l2));
    }
    return loss;
}

Variable class_logits_head(const ForwardResult& fr) { return fr.has_aux ? fr.aux : fr.main; }

Variable classification_loss(const Variable& logits, const std::vector<std::size_t>& labels,
                             const TrainConfig& config) {
    if (config.loss == ClsLoss::Hinge) return layers::hinge_loss(logits, labels, config.margin);
    return layers::softmax_cross_entropy(logits, labels);
}

}  // namespace

TrainLog train_classifier(ModelSpec& model, const LabeledDataset& train, const TrainConfig& config,
                          TrainLog* partial) {
    require_normalized(train);
    if (config.epochs < 1) throw ContractError("training needs at least one epoch");
    BatchIterator batches(train, config.batch, config.seed);
    Optimizer opt(config.opt);
    TrainLog log;
    const std::size_t total = config.epochs * batches.batches_per_epoch();
    for (std::size_t s = 0; s < total; ++s) {
        auto [images, labels] = batches.next();
        Tape tape;
        std::vector<Variable> bound = bind(tape, model.params, true);
        const Variable x = tape.constant(images);
        const ForwardResult fr = model_forward(model, tape, bound, x, true);
        Variable loss = classification_loss(class_logits_head(fr), labels, config);
        loss = add_l2_penalty(loss, model, bound, config.l2);
        const Gradients grads = tape.backward(loss);
        try {
            opt.step(model.params, grads, bound);
        } catch (const NumericError& e) {
            throw NumericError("step " + std::to_string(s) + ": " + e.what());
        }
        log.records.push_back({s, loss.value.item()});
        if (partial) partial->records.push_back(log.records.back());
    }
    return log;
}

GanClassifierResult train_gan_classifier(ModelSpec& classifier, ModelSpec* generator,
                                         const LabeledDataset& train, const GanClassifierConfig& config,
                                         GanClassifierResult* partial) {
    if (config.adv_weight < 0.0) throw ContractError("adversarial weight must be >= 0");

    GanClassifierResult result;
    if (config.adv_weight == 0.0) {
        // Degenerate ablation: exactly the supervised loop.
        result.cls_log = train_classifier(classifier, train, config.cls, partial ? &partial->cls_log : nullptr);
        return result;
    }

    if (generator == nullptr) throw ContractError("adversarial training needs a generator");
    if (classifier.aux_layers.empty()) {
        throw ContractError("adversarial classifier training needs a two-headed model");
    }
    if (config.cls.batch < 2) throw ContractError("adversarial training needs batch size >= 2");
    Shape sample_shape(train.images.shape().begin() + 1, train.images.shape().end());
    if (generator->output_shape != sample_shape) {
        throw ContractError("generator emits " + shape_str(generator->output_shape) + " but data samples are " +
                            shape_str(sample_shape));
    }
    if (Shape{config.gan.noise_dim} != generator->input_shape) {
        throw ContractError("noise dimension does not match generator input");
    }

    require_normalized(train);
    if (config.cls.epochs < 1) throw ContractError("training needs at least one epoch");
    BatchIterator batches(train, config.cls.batch, config.cls.seed);
    Optimizer cls_opt(config.cls.opt);
    Optimizer g_opt(config.gan.g_opt);
    Rng noise_rng(config.gan.seed);
    const std::size_t total = config.cls.epochs * batches.batches_per_epoch();

    for (std::size_t s = 0; s < total; ++s) {
        auto [images, labels] = batches.next();
        try {
            {
                // Discriminator-side update: adversarial + supervised.
                const Tensor noise = sample_noise(noise_rng, config.cls.batch, config.gan.noise_dim);
                Tape tape;
                std::vector<Variable> g_bound = bind(tape, generator->params, false);
                std::vector<Variable> c_bound = bind(tape, classifier.params, true);
                const Variable z = tape.constant(noise);
                const Variable fake = model_forward(*generator, tape, g_bound, z, true).main;
                const Variable x = tape.constant(images);
                const ForwardResult real_fr = model_forward(classifier, tape, c_bound, x, true);
                const Variable d_fake = model_forward(classifier, tape, c_bound, fake, true).main;
                Variable loss = ops::add(
                    ops::scale(discriminator_objective(real_fr.main, d_fake), config.adv_weight),
                    layers::softmax_cross_entropy(real_fr.aux, labels));
                loss = add_l2_penalty(loss, classifier, c_bound, config.cls.l2);
                const Gradients grads = tape.backward(loss);
                cls_opt.step(classifier.params, grads, c_bound);
                result.cls_log.records.push_back({s, loss.value.item()});

                GanRecord rec;
                rec.step = s;
                rec.d_loss = discriminator_objective_value(real_fr.main.value, d_fake.value);
                rec.mean_d_real = [&] {
                    double m = 0.0;
                    for (std::size_t i = 0; i < real_fr.main.value.numel(); ++i) m += real_fr.main.value.at(i);
                    return m / double(real_fr.main.value.numel());
                }();
                rec.mean_d_fake = [&] {
                    double m = 0.0;
                    for (std::size_t i = 0; i < d_fake.value.numel(); ++i) m += d_fake.value.at(i);
                    return m / double(d_fake.value.numel());
                }();
                result.gan_diag.records.push_back(rec);
            }
            {
                // Generator update against the adversarial head.
                const Tensor noise = sample_noise(noise_rng, config.cls.batch, config.gan.noise_dim);
                Tape tape;
                std::vector<Variable> g_bound = bind(tape, generator->params, true);
                std::vector<Variable> c_bound = bind(tape, classifier.params, false);
                const Variable z = tape.constant(noise);
                const Variable fake = model_forward(*generator, tape, g_bound, z, true).main;
                const Variable d_fake = model_forward(classifier, tape, c_bound, fake, true).main;
                const Variable g_loss = generator_objective(d_fake, config.gan.gen_loss);
                const Gradients grads = tape.backward(g_loss);
                g_opt.step(generator->params, grads, g_bound);
                result.gan_diag.records.back().g_loss = g_loss.value.item();
            }
        } catch (const NumericError& e) {
            throw NumericError("step " + std::to_string(s) + ": " + e.what());
        }
        if (partial) {
            partial->cls_log.records.push_back(result.cls_log.records.back());
            partial->gan_diag.records.push_back(result.gan_diag.records.back());
        }
    }
    return result;
}

Tensor classifier_logits(ModelSpec& model, const Tensor& images, std::size_t eval_batch) {
    if (images.rank() < 2) throw ContractError("classifier_logits expects a batched input");
    if (eval_batch < 1) throw ContractError("eval batch must be >= 1");
    const std::size_t n = images.dim(0);
    const std::size_t chw = n == 0 ? 0 : images.numel() / n;
    std::vector<double> out;
    std::size_t k = 0;
    for (std::size_t at = 0; at < n; at += eval_batch) {
        const std::size_t b = std::min(eval_batch, n - at);
        Shape shape = images.shape();
        shape[0] = b;
        std::vector<double> chunk(images.values().begin() + at * chw, images.values().begin() + (at + b) * chw);
        Tape tape;
        std::vector<Variable> bound = bind(tape, model.params, false);
        const Variable x = tape.constant(Tensor::from(shape, std::move(chunk)));
        const ForwardResult fr = model_forward(model, tape, bound, x, false);
        const Variable logits = class_logits_head(fr);
        if (logits.value.rank() != 2) {
            throw ContractError("model emits " + shape_str(logits.value.shape()) + ", not class logits");
        }
        k = logits.value.dim(1);
        out.insert(out.end(), logits.value.values().begin(), logits.value.values().end());
    }
    return Tensor::from(Shape{n, k}, std::move(out));
}

std::vector<std::size_t> argmax_rows(const Tensor& logits) {
    if (logits.rank() != 2) throw ContractError("argmax_rows expects [B x K]");
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    std::vector<std::size_t> out(n);
    const double* p = logits.data();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j) {
            if (p[i * k + j] > p[i * k + best]) best = j;
        }
        out[i] = best;
    }
    return out;
}

EvalReport evaluate_classifier(ModelSpec& model, const LabeledDataset& test, std::size_t positive_class) {
    require_normalized(test);
    if (test.size() == 0) throw ContractError("cannot evaluate on an empty dataset");
    if (positive_class >= test.num_classes) {
        throw ContractError("positive class " + std::to_string(positive_class) + " out of range");
    }

    const Tensor logits = classifier_logits(model, test.images);
    if (logits.dim(1) != test.num_classes) {
        throw ContractError("model emits " + std::to_string(logits.dim(1)) + " classes, dataset has " +
                            std::to_string(test.num_classes));
    }
    EvalReport report;
    report.model = model.kind;
    report.counts = confusion(argmax_rows(logits), test.labels, test.num_classes);
    report.summary = metrics(report.counts);
    report.positive_class = positive_class;

    double auc_sum = 0.0;
    std::size_t auc_n = 0;
    for (std::size_t c = 0; c < test.num_classes; ++c) {
        const auto [scores, binary] = one_vs_rest_scores(logits, test.labels, c);
        const bool has_both = std::count(binary.begin(), binary.end(), 1) > 0 &&
                              std::count(binary.begin(), binary.end(), 0) > 0;
        if (!has_both) {
            report.per_class_auc.push_back(0.0);
            report.summary.warnings.push_back("class " + std::to_string(c) +
                                              ": single-class labels, auc set to 0");
            continue;
        }
        const auto points = roc_curve(scores, binary);
        const double a = auc(points);
        report.per_class_auc.push_back(a);
        auc_sum += a;
        ++auc_n;
        if (c == positive_class) {
            report.roc = points;
            report.roc_auc = a;
        }
    }
    report.macro_auc = auc_n == 0 ? 0.0 : auc_sum / double(auc_n);
    return report;
}

std::string train_csv(const TrainLog& log) {
    std::string out = "step,loss\n";
    char buf[64];
    for (const TrainRecord& r : log.records) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", r.step, r.loss);
        out += buf;
    }
    return out;
}

}  // namespace ganbench
