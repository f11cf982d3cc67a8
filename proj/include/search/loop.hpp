#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "search/data.hpp"
#include "search/optimizer.hpp"
#include "supernet/derive.hpp"
#include "supernet/graph.hpp"
#include "supernet/materialize.hpp"

namespace search {

struct BilevelConfig {
    int epochs = 50;
    double weight_lr = 0.05;
    double arch_lr = 0.3;
    double momentum = 0.9;       // network weights only
    double weight_decay = 1e-4;  // network weights only
    double split_ratio = 0.5;
    int warmup_epochs = 1;       // weight-only epochs before alternation
    double tau0 = 5.0;
    double tau_min = 0.1;
    std::uint64_t seed = 1;
    int batch_size = 8;

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;
    double weight_loss = 0.0;
    double arch_loss = 0.0;
    double tau = 0.0;
    double alpha_entropy_ops = 0.0;
    double alpha_entropy_edges = 0.0;
    double alpha_entropy_expansion = 0.0;
    double seconds = 0.0;
};

std::string metrics_csv(const std::vector<EpochMetrics>& rows);

// One optimizer step on its own parameter set; the other set's values are
// untouched byte for byte.
double weight_step(const supernet::SuperNet& net, const supernet::ArchParams& params, Sgd& opt,
                   const std::vector<const Sample*>& batch, diffcore::Rng& rng, double tau,
                   supernet::ForwardMode mode = supernet::ForwardMode::Search);
double arch_step(const supernet::SuperNet& net, const supernet::ArchParams& params, Sgd& opt,
                 const std::vector<const Sample*>& batch, diffcore::Rng& rng, double tau,
                 supernet::ForwardMode mode = supernet::ForwardMode::Search);

struct SearchResult {
    supernet::Genotype genotype;
    std::vector<EpochMetrics> metrics;
    supernet::SuperNet net;           // trained supernet (shares the weights)
    supernet::ArchParams params;
};

// Bi-level alternation: the dataset is split in two, network weights train
// on one half and architecture parameters on the other, one step each per
// iteration after the warmup. Fully reproducible from the seed.
SearchResult run_search(const supernet::SearchSpaceSpec& spec, const std::vector<Sample>& dataset,
                        const BilevelConfig& config);

struct EvalResult {
    std::vector<EpochMetrics> metrics;
    std::int64_t param_count = 0;
};

// Trains the materialized architecture from scratch (fresh seeded init) on
// the whole dataset with the same loss.
EvalResult train_derived(const supernet::Genotype& genotype, const std::vector<Sample>& dataset,
                         int epochs, const BilevelConfig& config);

}  // namespace search
