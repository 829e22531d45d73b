#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jtr/encoder.hpp"
#include "jtr/training.hpp"
#include "jtr/tree.hpp"
#include "jtr/types.hpp"

namespace jtr {

// Everything the command-line stages read. Populated from a flat key=value
// config file plus per-key flag overrides; field names double as the key
// spellings. Paths name the artifacts the stages exchange, the encoder
// rides along at "<index>.enc".
struct PipelineConfig {
    std::string corpus = "work/corpus.vec";
    std::string train_queries = "work/train_queries.vec";
    std::string train_qrels = "work/train_qrels.tsv";
    std::string dev_queries = "work/dev_queries.vec";
    std::string dev_qrels = "work/dev_qrels.tsv";
    std::string index = "work/index.tree";
    std::string run = "work/run.tsv";
    std::string report = "work/report.tsv";
    std::string train_report = "work/train_report.tsv";

    uint32_t beta = 4;        // children per split
    uint32_t gamma = 64;      // leaf capacity at build time
    uint32_t beam_b = 4;      // beam width
    uint32_t top_k = 100;     // docs returned per query
    uint32_t lambda = 2;      // leaves a doc may occupy after reclustering
    uint32_t k_feedback = 100; // feedback depth for reclustering
    bool normalize_clustering = false;

    double lr = 1e-3;
    uint32_t batch_size = 32;
    uint32_t epochs = 5;
    double weight_decay = 0.0;
    uint32_t extra_negatives = 0;
    uint64_t seed = 0;

    uint32_t mrr_k = 100;
    uint32_t recall_k = 100;
    uint32_t ndcg_k = 10;

    uint32_t gen_blobs = 32;
    uint32_t gen_docs_per_blob = 256;
    uint32_t gen_dim = 64;
    float gen_spread = 1.0f;
    float gen_noise = 0.25f;
    uint32_t gen_train_queries = 2000;
    uint32_t gen_dev_queries = 500;
    uint32_t gen_rels_per_query = 5;

    TrainConfig train_config() const;
};

struct EvalSummary {
    double mrr = 0.0;
    double recall = 0.0;
    double ndcg = 0.0;
};

// pipeline stages, in their natural order
void cmd_gen(const PipelineConfig& cfg);
void cmd_build(const PipelineConfig& cfg);
void cmd_train(const PipelineConfig& cfg);
void cmd_recluster(const PipelineConfig& cfg);
void cmd_search(const PipelineConfig& cfg);
EvalSummary cmd_eval(const PipelineConfig& cfg, bool oracle);
void cmd_ablation(const PipelineConfig& cfg);

// search the dev queries and score the run without touching the filesystem
EvalSummary evaluate_tree(const TreeIndex& tree, const QueryEncoder& encoder, const QuerySet& dev_queries,
                          const Qrels& dev_qrels, const Corpus& corpus, const PipelineConfig& cfg);

// feedback-driven leaf reassignment followed by a fresh training pass
void recluster_and_retrain(TreeIndex& tree, QueryEncoder& encoder, const QuerySet& train_queries,
                           const Qrels& train_qrels, const Corpus& corpus, uint32_t lambda,
                           const PipelineConfig& cfg);

// one row of the ablation ladder, carrying the index state that produced it
struct AblationStage {
    std::string name;
    EvalSummary metrics;
    TreeIndex tree;
    QueryEncoder encoder;
};

// cumulative ladder: plain tree, trained tree, then one reclustering plus
// retraining per entry of lambdas, each building on the stage before it
std::vector<AblationStage> run_ablation(const Corpus& corpus, const QuerySet& train_queries, const Qrels& train_qrels,
                                        const QuerySet& dev_queries, const Qrels& dev_qrels,
                                        const PipelineConfig& cfg, const std::vector<uint32_t>& lambdas);

// command-line entry point: jtr <stage> [--config FILE] [--key value ...];
// returns the process exit code (0 ok, 2 config, 3 data, 4 invariant)
int run_command(int argc, const char* const* argv);

} // namespace jtr
