#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ganbench/data_io.hpp"
#include "ganbench/models.hpp"
#include "ganbench/optim.hpp"

namespace ganbench {

enum class GenLossForm {
    PaperForm,       // mean log(1 - D(G(z)))
    NonSaturating,   // -mean log D(G(z))
};

GenLossForm gen_loss_form_from_string(const std::string& s);
std::string to_string(GenLossForm f);

struct GanConfig {
    std::size_t noise_dim = 100;
    std::size_t d_steps = 1;        // discriminator updates per generator update
    std::size_t batch = 64;
    std::size_t total_steps = 0;
    GenLossForm gen_loss = GenLossForm::NonSaturating;
    std::uint64_t seed = 0;
    // De facto stable settings for adversarial training.
    OptimizerConfig g_opt{OptimizerKind::AdaptiveMoment, 2e-4, 0.5, 0.999, 1e-8};
    OptimizerConfig d_opt{OptimizerKind::AdaptiveMoment, 2e-4, 0.5, 0.999, 1e-8};
};

struct GanRecord {
    std::size_t step = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double mean_d_real = 0.0;
    double mean_d_fake = 0.0;
};

struct GanDiagnostics {
    std::vector<GanRecord> records;
};

// CSV with header step,d_loss,g_loss,mean_d_real,mean_d_fake.
std::string diagnostics_csv(const GanDiagnostics& diag);

// Adversarial objectives. The graph forms clamp probabilities away from
// {0, 1} (kProbEps) so every loss is finite on [0, 1] inputs.
// Discriminator loss: -[mean log D(x) + mean log(1 - D(G(z)))].
Variable discriminator_objective(const Variable& d_real, const Variable& d_fake);
Variable generator_objective(const Variable& d_fake, GenLossForm form);

// Plain-value twins for diagnostics and tests.
double discriminator_objective_value(const Tensor& d_real, const Tensor& d_fake);
double generator_objective_value(const Tensor& d_fake, GenLossForm form);
// V(D, G) = mean log D(x) + mean log(1 - D(G(z))); exactly the negated
// discriminator objective.
double total_objective_value(const Tensor& d_real, const Tensor& d_fake);

// [n x noise_dim] of i.i.d. standard normals from the stream.
Tensor sample_noise(Rng& rng, std::size_t n, std::size_t noise_dim);
// Fresh stream seeded from the config.
Tensor sample_noise(const GanConfig& config, std::size_t n);

// Alternating trainer. Each step() = d_steps discriminator updates (fresh
// real batch and fresh noise per update, generator parameters frozen)
// followed by one generator update (fresh noise, discriminator parameters
// frozen), then one diagnostics record.
class GanTrainer {
  public:
    GanTrainer(ModelSpec& generator, ModelSpec& discriminator, const LabeledDataset& data, GanConfig config);

    struct DStepResult {
        double d_loss = 0.0;
        double mean_d_real = 0.0;
        double mean_d_fake = 0.0;
    };
    DStepResult discriminator_step();
    double generator_step();
    GanRecord step();
    void run();

    const GanDiagnostics& diagnostics() const { return diag_; }
    std::size_t steps_done() const { return diag_.records.size(); }

  private:
    Tensor next_real_batch();

    ModelSpec& g_;
    ModelSpec& d_;
    const LabeledDataset& data_;
    GanConfig config_;
    Optimizer g_opt_;
    Optimizer d_opt_;
    Rng rng_;
    GanDiagnostics diag_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

// Runs config.total_steps steps and returns the diagnostics; generator
// and discriminator parameters are trained in place.
GanDiagnostics train_gan(ModelSpec& generator, ModelSpec& discriminator, const LabeledDataset& data,
                         const GanConfig& config);

// Windowed equilibrium diagnostics over the last `window` records.
// Standard deviations are population form (divide by the window size).
struct EquilibriumReport {
    std::size_t window = 0;
    double mean_d_real = 0.0;
    double std_d_real = 0.0;
    double mean_d_fake = 0.0;
    double std_d_fake = 0.0;
    double dist_real = 0.0;  // |mean_d_real - 0.5|
    double dist_fake = 0.0;  // |mean_d_fake - 0.5|
};

EquilibriumReport equilibrium_report(const GanDiagnostics& diag, std::size_t window);

}  // namespace ganbench
