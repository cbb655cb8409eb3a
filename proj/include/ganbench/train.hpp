#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ganbench/data_io.hpp"
#include "ganbench/gan.hpp"
#include "ganbench/metrics.hpp"
#include "ganbench/models.hpp"
#include "ganbench/optim.hpp"

namespace ganbench {

enum class ClsLoss { Softmax, Hinge };

ClsLoss cls_loss_from_string(const std::string& s);

struct TrainConfig {
    std::size_t batch = 64;
    std::size_t epochs = 1;
    std::uint64_t seed = 0;
    OptimizerConfig opt{OptimizerKind::Sgd, 0.01, 0.9, 0.999, 1e-8};
    ClsLoss loss = ClsLoss::Softmax;
    double margin = 1.0;  // hinge only
    double l2 = 0.0;      // penalty on weight/kernel parameters
};

struct TrainRecord {
    std::size_t step = 0;
    double loss = 0.0;
};

struct TrainLog {
    std::vector<TrainRecord> records;
};

// Deterministic epoch shuffling shared by every trainer: same seed, same
// batch sequence.
class BatchIterator {
  public:
    BatchIterator(const LabeledDataset& data, std::size_t batch, std::uint64_t seed);

    std::size_t batches_per_epoch() const { return data_.size() / batch_; }
    // Next batch of images and labels; reshuffles at epoch boundaries.
    std::pair<Tensor, std::vector<std::size_t>> next();

  private:
    const LabeledDataset& data_;
    std::size_t batch_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

// Supervised training on the model's class-logit head (the aux head when
// one exists, the main output otherwise). Trains in place. When `partial`
// is given it receives each record as the step completes, so callers can
// report the last good step after a numeric failure.
TrainLog train_classifier(ModelSpec& model, const LabeledDataset& train, const TrainConfig& config,
                          TrainLog* partial = nullptr);

// Joint adversarial + supervised training for the two-headed classifier.
// Each batch: one discriminator-side update minimizing
//   adv_weight * [adversarial loss] + cross-entropy(class logits, labels)
// then one generator update. adv_weight = 0 skips the generator entirely
// and is exactly the supervised loop.
struct GanClassifierConfig {
    TrainConfig cls;
    GanConfig gan;
    double adv_weight = 1.0;
};

struct GanClassifierResult {
    TrainLog cls_log;
    GanDiagnostics gan_diag;
};

GanClassifierResult train_gan_classifier(ModelSpec& classifier, ModelSpec* generator,
                                         const LabeledDataset& train, const GanClassifierConfig& config,
                                         GanClassifierResult* partial = nullptr);

// CSV with header step,loss.
std::string train_csv(const TrainLog& log);

// Eval-mode logits over a whole dataset, computed in batches.
Tensor classifier_logits(ModelSpec& model, const Tensor& images, std::size_t eval_batch = 256);
std::vector<std::size_t> argmax_rows(const Tensor& logits);

// Full evaluation: confusion metrics, per-class one-vs-rest AUC, and the
// ROC curve of `positive_class`.
EvalReport evaluate_classifier(ModelSpec& model, const LabeledDataset& test, std::size_t positive_class);

}  // namespace ganbench
