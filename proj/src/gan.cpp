#include "ganbench/gan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ganbench/errors.hpp"
#include "ganbench/layers.hpp"
#include "ganbench/ops.hpp"

namespace ganbench {

GenLossForm gen_loss_form_from_string(const std::string& s) {
    if (s == "paper-form") return GenLossForm::PaperForm;
    if (s == "non-saturating") return GenLossForm::NonSaturating;
    throw ContractError("unknown generator loss form: " + s);
}

std::string to_string(GenLossForm f) {
    return f == GenLossForm::PaperForm ? "paper-form" : "non-saturating";
}

std::string diagnostics_csv(const GanDiagnostics& diag) {
    std::string out = "step,d_loss,g_loss,mean_d_real,mean_d_fake\n";
    char buf[160];
    for (const GanRecord& r : diag.records) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", r.step, r.d_loss, r.g_loss,
                      r.mean_d_real, r.mean_d_fake);
        out += buf;
    }
    return out;
}

Variable discriminator_objective(const Variable& d_real, const Variable& d_fake) {
    // bce(p, 1) = -mean log p and bce(p, 0) = -mean log(1 - p).
    return ops::add(layers::bce_from_probability(d_real, 1.0), layers::bce_from_probability(d_fake, 0.0));
}

Variable generator_objective(const Variable& d_fake, GenLossForm form) {
    if (form == GenLossForm::NonSaturating) {
        return layers::bce_from_probability(d_fake, 1.0);  // -mean log D(G(z))
    }
    return ops::neg(layers::bce_from_probability(d_fake, 0.0));  // mean log(1 - D(G(z)))
}

namespace {

double clamped(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

double mean_log(const Tensor& t) {
    if (t.numel() == 0) throw ContractError("objective over an empty batch");
    if (!t.all_finite()) throw NumericError("objective input is not finite");
    double s = 0.0;
    for (std::size_t i = 0; i < t.numel(); ++i) s += std::log(clamped(t.at(i)));
    return s / double(t.numel());
}

double mean_log1m(const Tensor& t) {
    if (t.numel() == 0) throw ContractError("objective over an empty batch");
    if (!t.all_finite()) throw NumericError("objective input is not finite");
    double s = 0.0;
    for (std::size_t i = 0; i < t.numel(); ++i) s += std::log(1.0 - clamped(t.at(i)));
    return s / double(t.numel());
}

double tensor_mean(const Tensor& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.numel(); ++i) s += t.at(i);
    return s / double(t.numel());
}

}  // namespace

double discriminator_objective_value(const Tensor& d_real, const Tensor& d_fake) {
    return -(mean_log(d_real) + mean_log1m(d_fake));
}

double generator_objective_value(const Tensor& d_fake, GenLossForm form) {
    if (form == GenLossForm::NonSaturating) return -mean_log(d_fake);
    return mean_log1m(d_fake);
}

double total_objective_value(const Tensor& d_real, const Tensor& d_fake) {
    return -discriminator_objective_value(d_real, d_fake);
}

Tensor sample_noise(Rng& rng, std::size_t n, std::size_t noise_dim) {
    if (noise_dim < 1) throw ContractError("noise dimension must be >= 1");
    std::vector<double> v(n * noise_dim);
    for (double& x : v) x = rng.normal();
    return Tensor::from(Shape{n, noise_dim}, std::move(v));
}

Tensor sample_noise(const GanConfig& config, std::size_t n) {
    Rng rng(config.seed);
    return sample_noise(rng, n, config.noise_dim);
}

GanTrainer::GanTrainer(ModelSpec& generator, ModelSpec& discriminator, const LabeledDataset& data,
                       GanConfig config)
    : g_(generator),
      d_(discriminator),
      data_(data),
      config_(config),
      g_opt_(config.g_opt),
      d_opt_(config.d_opt),
      rng_(config.seed) {
    if (config_.noise_dim < 1) throw ContractError("noise dimension must be >= 1");
    if (config_.d_steps < 1) throw ContractError("need at least one discriminator step per round");
    if (config_.batch < 2) throw ContractError("adversarial training needs batch size >= 2");
    if (data_.size() < config_.batch) {
        throw ContractError("dataset of " + std::to_string(data_.size()) + " samples cannot fill batches of " +
                            std::to_string(config_.batch));
    }
    if (Shape{config_.noise_dim} != g_.input_shape) {
        throw ContractError("noise dimension " + std::to_string(config_.noise_dim) +
                            " does not match generator input " + shape_str(g_.input_shape));
    }
    Shape sample_shape(data_.images.shape().begin() + 1, data_.images.shape().end());
    if (g_.output_shape != sample_shape) {
        throw ContractError("generator emits " + shape_str(g_.output_shape) + " but data samples are " +
                            shape_str(sample_shape));
    }
    order_.resize(data_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    rng_.shuffle(order_);
}

Tensor GanTrainer::next_real_batch() {
    const std::size_t chw = data_.images.numel() / data_.size();
    std::vector<double> batch(config_.batch * chw);
    const double* src = data_.images.data();
    for (std::size_t i = 0; i < config_.batch; ++i) {
        if (cursor_ == order_.size()) {
            rng_.shuffle(order_);
            cursor_ = 0;
        }
        const std::size_t idx = order_[cursor_++];
        std::copy(src + idx * chw, src + (idx + 1) * chw, batch.begin() + i * chw);
    }
    Shape shape = data_.images.shape();
    shape[0] = config_.batch;
    return Tensor::from(shape, std::move(batch));
}

GanTrainer::DStepResult GanTrainer::discriminator_step() {
    const Tensor real = next_real_batch();
    const Tensor noise = sample_noise(rng_, config_.batch, config_.noise_dim);

    Tape tape;
    std::vector<Variable> g_bound = bind(tape, g_.params, false);  // generator frozen
    std::vector<Variable> d_bound = bind(tape, d_.params, true);

    const Variable z = tape.constant(noise);
    const Variable fake = model_forward(g_, tape, g_bound, z, true).main;
    const Variable x = tape.constant(real);
    const Variable d_real = model_forward(d_, tape, d_bound, x, true).main;
    const Variable d_fake = model_forward(d_, tape, d_bound, fake, true).main;
    const Variable loss = discriminator_objective(d_real, d_fake);

    const Gradients grads = tape.backward(loss);
    d_opt_.step(d_.params, grads, d_bound);

    DStepResult r;
    r.d_loss = loss.value.item();
    r.mean_d_real = tensor_mean(d_real.value);
    r.mean_d_fake = tensor_mean(d_fake.value);
    return r;
}

double GanTrainer::generator_step() {
    const Tensor noise = sample_noise(rng_, config_.batch, config_.noise_dim);

    Tape tape;
    std::vector<Variable> g_bound = bind(tape, g_.params, true);
    std::vector<Variable> d_bound = bind(tape, d_.params, false);  // discriminator frozen

    const Variable z = tape.constant(noise);
    const Variable fake = model_forward(g_, tape, g_bound, z, true).main;
    const Variable d_fake = model_forward(d_, tape, d_bound, fake, true).main;
    const Variable loss = generator_objective(d_fake, config_.gen_loss);

    const Gradients grads = tape.backward(loss);
    g_opt_.step(g_.params, grads, g_bound);
    return loss.value.item();
}

GanRecord GanTrainer::step() {
    const std::size_t index = diag_.records.size();
    try {
        GanRecord rec;
        rec.step = index;
        DStepResult last{};
        for (std::size_t k = 0; k < config_.d_steps; ++k) last = discriminator_step();
        rec.d_loss = last.d_loss;
        rec.mean_d_real = last.mean_d_real;
        rec.mean_d_fake = last.mean_d_fake;
        rec.g_loss = generator_step();
        diag_.records.push_back(rec);
        return rec;
    } catch (const NumericError& e) {
        throw NumericError("step " + std::to_string(index) + ": " + e.what());
    }
}

void GanTrainer::run() {
    for (std::size_t s = 0; s < config_.total_steps; ++s) step();
}

GanDiagnostics train_gan(ModelSpec& generator, ModelSpec& discriminator, const LabeledDataset& data,
                         const GanConfig& config) {
    GanTrainer trainer(generator, discriminator, data, config);
    trainer.run();
    return trainer.diagnostics();
}

EquilibriumReport equilibrium_report(const GanDiagnostics& diag, std::size_t window) {
    if (window == 0) throw ContractError("equilibrium window must be >= 1");
    if (window > diag.records.size()) {
        throw ContractError("window " + std::to_string(window) + " exceeds " +
                            std::to_string(diag.records.size()) + " recorded steps");
    }
    EquilibriumReport rep;
    rep.window = window;
    const std::size_t begin = diag.records.size() - window;
    double sr = 0.0, sf = 0.0, sr2 = 0.0, sf2 = 0.0;
    for (std::size_t i = begin; i < diag.records.size(); ++i) {
        sr += diag.records[i].mean_d_real;
        sf += diag.records[i].mean_d_fake;
        sr2 += diag.records[i].mean_d_real * diag.records[i].mean_d_real;
        sf2 += diag.records[i].mean_d_fake * diag.records[i].mean_d_fake;
    }
    const double n = double(window);
    rep.mean_d_real = sr / n;
    rep.mean_d_fake = sf / n;
    rep.std_d_real = std::sqrt(std::max(0.0, sr2 / n - rep.mean_d_real * rep.mean_d_real));
    rep.std_d_fake = std::sqrt(std::max(0.0, sf2 / n - rep.mean_d_fake * rep.mean_d_fake));
    rep.dist_real = std::abs(rep.mean_d_real - 0.5);
    rep.dist_fake = std::abs(rep.mean_d_fake - 0.5);
    return rep;
}

}  // namespace ganbench
