#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jtr/encoder.hpp"
#include "jtr/rng.hpp"
#include "jtr/tree.hpp"
#include "jtr/types.hpp"

namespace jtr {

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0; // decoupled, applied to the raw parameter
    uint32_t batch_size = 32;
    uint32_t epochs = 1;
    uint64_t seed = 0;
    uint32_t extra_random_negatives = 0; // same-level top-up per level
    bool train_encoder = true;
};

struct LevelSample {
    uint64_t positive = 0;
    std::vector<uint64_t> negatives;
};

// One (query, positive doc) pair unrolled along the tree: the node chain
// from just below the root to the positive leaf, with the positive's
// siblings as negatives at each level. Empty when the tree is a lone root,
// which the train loop counts as skipped.
struct TrainingInstance {
    uint32_t query = 0; // caller-tracked query row
    uint32_t positive_doc = 0;
    std::vector<LevelSample> levels; // index 0 is tree level 1
    bool empty() const { return levels.empty(); }
};

TrainingInstance build_instance(const TreeIndex& tree, const QueryEncoder& encoder, const float* query_features,
                                size_t feature_dim, uint32_t positive_doc, uint32_t extra_random_negatives = 0,
                                Rng* rng = nullptr);

// Softmax cross entropy against the positive at one level, computed in f64
// with the running maximum subtracted before exponentiation. With no
// negatives the level contributes exactly zero.
double level_loss(const std::vector<float>& query_embedding, const std::vector<float>& positive_embedding,
                  const std::vector<std::vector<float>>& negative_embeddings);

// mean of the level losses, with the query pushed through the encoder in f64
double instance_loss(const TrainingInstance& instance, const TreeIndex& tree, const QueryEncoder& encoder,
                     const float* query_features, size_t feature_dim);

struct Gradients {
    std::map<uint64_t, std::vector<double>> node; // node id -> d loss / d embedding
    std::vector<double> weight;                   // out_dim x in_dim, row-major
    std::vector<double> bias;                     // out_dim
};

// analytic gradients of instance_loss with respect to the touched node
// embeddings and the encoder parameters
Gradients backward(const TrainingInstance& instance, const TreeIndex& tree, const QueryEncoder& encoder,
                   const float* query_features, size_t feature_dim);

struct EpochReport {
    uint32_t epoch = 0;
    double mean_loss = 0.0;
    uint64_t instances_used = 0;
    uint64_t skipped = 0;
};

struct TrainReport {
    std::vector<EpochReport> epochs;
    uint64_t pairs = 0;
    uint64_t optimizer_steps = 0;

    std::string to_tsv() const; // "epoch<TAB>mean_loss<TAB>skipped" rows
};

// Mini-batch training of node embeddings and encoder over all (query, doc)
// pairs with relevance >= 1. Pair order is reshuffled each epoch from
// config.seed; batch gradients average the non-skipped instances; updates
// are applied with per-parameter step counts so rarely touched nodes keep
// correct bias correction. The corpus supplies the doc id mapping and must
// be the one the tree was built over.
TrainReport train(TreeIndex& tree, QueryEncoder& encoder, const QuerySet& queries, const Qrels& qrels,
                  const Corpus& corpus, const TrainConfig& config);

} // namespace jtr
