#include "search/loop.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "chansearch/temperature.hpp"
#include "search/loss.hpp"
#include "search/split.hpp"

namespace search {

using supernet::ForwardMode;

void BilevelConfig::validate() const {
    if (epochs < 0) throw diffcore::ConfigError("config: epochs must be >= 0");
    if (weight_lr <= 0 || arch_lr <= 0) throw diffcore::ConfigError("config: learning rates must be positive");
    if (momentum < 0 || momentum >= 1) throw diffcore::ConfigError("config: momentum must be in [0,1)");
    if (weight_decay < 0) throw diffcore::ConfigError("config: weight_decay must be >= 0");
    if (!(split_ratio > 0 && split_ratio < 1))
        throw diffcore::ConfigError("config: split_ratio must be in (0,1)");
    if (warmup_epochs < 0) throw diffcore::ConfigError("config: warmup_epochs must be >= 0");
    if (!(tau0 > tau_min && tau_min > 0))
        throw diffcore::ConfigError("config: need tau0 > tau_min > 0");
    if (batch_size < 1) throw diffcore::ConfigError("config: batch_size must be >= 1");
}

std::string metrics_csv(const std::vector<EpochMetrics>& rows) {
    std::ostringstream os;
    os << "epoch,weight_loss,arch_loss,tau,alpha_entropy_ops,alpha_entropy_edges,"
          "alpha_entropy_expansion,seconds\n";
    for (const auto& r : rows) {
        char line[256];
        std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.3f\n", r.epoch,
                      r.weight_loss, r.arch_loss, r.tau, r.alpha_entropy_ops,
                      r.alpha_entropy_edges, r.alpha_entropy_expansion, r.seconds);
        os << line;
    }
    return os.str();
}

namespace {

// global-norm clip for the weight optimizers; keeps the occasional spiky
// batch from blowing up momentum
constexpr double kGradClipNorm = 10.0;

double run_step(const supernet::SuperNet& net, const supernet::ArchParams& params, Sgd& opt,
                const std::vector<const Sample*>& batch, diffcore::Rng& rng, double tau,
                ForwardMode mode) {
    if (batch.empty()) throw diffcore::InputError("step: empty batch");
    diffcore::Tensor<float> images = batch_images(batch);
    BatchTargets targets = batch_targets(batch);
    supernet::ForwardResult out = supernet::forward(net, params, images, rng, mode, tau);
    diffcore::Tensor<float> loss = detection_loss<float>(out.preds, targets, net.spec.n_classes);
    opt.zero_grad();
    diffcore::backward(loss);
    opt.step();
    return double(loss.values()[0]);
}

// Deterministic per-epoch reshuffling batch source.
class BatchCycler {
  public:
    BatchCycler(std::vector<std::size_t> indices, diffcore::Rng rng)
        : indices_(std::move(indices)), rng_(rng) {
        reshuffle();
    }

    std::vector<std::size_t> next(int batch_size) {
        std::vector<std::size_t> out;
        for (int i = 0; i < batch_size; ++i) {
            if (cursor_ == indices_.size()) {
                reshuffle();
                cursor_ = 0;
            }
            out.push_back(indices_[cursor_++]);
        }
        return out;
    }

  private:
    void reshuffle() {
        for (std::size_t i = indices_.size() - 1; i > 0; --i)
            std::swap(indices_[i], indices_[std::size_t(rng_.bounded(int(i + 1)))]);
    }

    std::vector<std::size_t> indices_;
    std::size_t cursor_ = 0;
    diffcore::Rng rng_;
};

std::vector<const Sample*> gather(const std::vector<Sample>& dataset,
                                  const std::vector<std::size_t>& idx) {
    std::vector<const Sample*> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(&dataset[i]);
    return out;
}

}  // namespace

double weight_step(const supernet::SuperNet& net, const supernet::ArchParams& params, Sgd& opt,
                   const std::vector<const Sample*>& batch, diffcore::Rng& rng, double tau,
                   ForwardMode mode) {
    return run_step(net, params, opt, batch, rng, tau, mode);
}

double arch_step(const supernet::SuperNet& net, const supernet::ArchParams& params, Sgd& opt,
                 const std::vector<const Sample*>& batch, diffcore::Rng& rng, double tau,
                 ForwardMode mode) {
    return run_step(net, params, opt, batch, rng, tau, mode);
}

SearchResult run_search(const supernet::SearchSpaceSpec& spec, const std::vector<Sample>& dataset,
                        const BilevelConfig& config) {
    config.validate();
    if (dataset.empty()) throw diffcore::ConfigError("run_search: empty dataset");

    diffcore::Rng root(config.seed);
    auto [idx_w, idx_a] = split_dataset(dataset.size(), config.split_ratio, root.fork(1).seed());

    supernet::BuildResult built = supernet::build_supernet(spec, root.fork(2).seed());
    Sgd w_opt(built.net.weight_tensors(),
              {config.weight_lr, config.momentum, config.weight_decay, kGradClipNorm});
    Sgd a_opt(built.params.tensors(), {config.arch_lr, 0.0, 0.0, 0.0});

    diffcore::Rng sample_rng = root.fork(3);
    BatchCycler w_batches(idx_w, root.fork(4));
    BatchCycler a_batches(idx_a, root.fork(5));

    const int iters = int((idx_w.size() + std::size_t(config.batch_size) - 1) /
                          std::size_t(config.batch_size));
    const int total_tau_steps = std::max(1, config.epochs * iters);

    SearchResult result;
    int global_step = 0;
    double tau = config.tau0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double w_sum = 0.0, a_sum = 0.0;
        int a_steps = 0;
        for (int it = 0; it < iters; ++it) {
            tau = chansearch::temperature(std::min(global_step, total_tau_steps), total_tau_steps,
                                          config.tau0, config.tau_min);
            // linear lr ramp across the warmup epochs
            const int warmup_steps = config.warmup_epochs * iters;
            w_opt.set_lr_scale(global_step < warmup_steps
                                   ? double(global_step + 1) / double(warmup_steps)
                                   : 1.0);
            w_sum += weight_step(built.net, built.params, w_opt,
                                 gather(dataset, w_batches.next(config.batch_size)), sample_rng,
                                 tau);
            if (epoch >= config.warmup_epochs) {
                a_sum += arch_step(built.net, built.params, a_opt,
                                   gather(dataset, a_batches.next(config.batch_size)), sample_rng,
                                   tau);
                a_steps++;
            }
            global_step++;
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.weight_loss = w_sum / iters;
        m.arch_loss = a_steps > 0 ? a_sum / a_steps : 0.0;
        m.tau = tau;
        m.alpha_entropy_ops = built.params.mean_entropy(supernet::AlphaFamily::Ops);
        m.alpha_entropy_edges = built.params.mean_entropy(supernet::AlphaFamily::Edges);
        m.alpha_entropy_expansion = built.params.mean_entropy(supernet::AlphaFamily::Expansion);
        m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.metrics.push_back(m);
    }
    result.genotype = supernet::derive(built.params, spec);
    result.net = std::move(built.net);
    result.params = std::move(built.params);
    return result;
}

EvalResult train_derived(const supernet::Genotype& genotype, const std::vector<Sample>& dataset,
                         int epochs, const BilevelConfig& config) {
    config.validate();
    if (dataset.empty()) throw diffcore::ConfigError("train_derived: empty dataset");
    genotype.validate();

    diffcore::Rng root(config.seed);
    // fresh from-scratch weights: materialize against a reinitialized supernet
    supernet::BuildResult built = supernet::build_supernet(genotype.echo, root.fork(7).seed());
    supernet::DerivedNet net = supernet::materialize(genotype, built.net);

    Sgd opt(net.weight_tensors(),
            {config.weight_lr, config.momentum, config.weight_decay, kGradClipNorm});
    std::vector<std::size_t> all(dataset.size());
    std::iota(all.begin(), all.end(), 0);
    BatchCycler batches(all, root.fork(8));
    const int iters =
        int((dataset.size() + std::size_t(config.batch_size) - 1) / std::size_t(config.batch_size));

    EvalResult result;
    result.param_count = net.param_count();
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double sum = 0.0;
        for (int it = 0; it < iters; ++it) {
            std::vector<const Sample*> batch = gather(dataset, batches.next(config.batch_size));
            diffcore::Tensor<float> images = batch_images(batch);
            BatchTargets targets = batch_targets(batch);
            supernet::DerivedOut out = supernet::derived_forward(net, images);
            diffcore::Tensor<float> loss = detection_loss<float>(out.preds, targets,
                                                                 net.spec.n_classes);
            opt.zero_grad();
            diffcore::backward(loss);
            opt.step();
            sum += double(loss.values()[0]);
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.weight_loss = sum / iters;
        m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.metrics.push_back(m);
    }
    return result;
}

}  // namespace search
