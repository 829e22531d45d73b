#include "jtr/pipeline.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "jtr/error.hpp"
#include "jtr/eval.hpp"
#include "jtr/io.hpp"
#include "jtr/recluster.hpp"
#include "jtr/retrieval.hpp"
#include "jtr/rng.hpp"
#include "jtr/synthetic.hpp"

namespace jtr {

namespace {

void require_file(const std::string& path, const char* role) {
    if (!file_exists(path)) {
        raise(ErrorCode::ConfigError, std::string(role) + " file not found: " + path);
    }
}

void ensure_parent(const std::string& path) {
    std::filesystem::path parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
        if (ec) {
            raise(ErrorCode::IoFailure, "cannot create directory " + parent.string() + ": " + ec.message());
        }
    }
}

std::string encoder_path(const PipelineConfig& cfg) { return cfg.index + ".enc"; }

// unit-length copy used for clustering only; scoring keeps raw embeddings
Corpus normalized_copy(const Corpus& corpus) {
    Matrix m(corpus.size(), corpus.dim());
    for (size_t d = 0; d < corpus.size(); ++d) {
        const float* row = corpus.embeddings().row(d);
        double norm = std::sqrt(dot_f64(row, row, corpus.dim()));
        if (norm < 1e-12) {
            norm = 1.0;
        }
        for (size_t j = 0; j < corpus.dim(); ++j) {
            m.at(d, j) = float(double(row[j]) / norm);
        }
    }
    return Corpus(corpus.doc_ids(), std::move(m));
}

RunResult search_queries(const TreeIndex& tree, const QueryEncoder& encoder, const QuerySet& queries,
                         const Corpus& corpus, uint32_t beam_width, uint32_t top_k, SearchStats* totals) {
    RunResult run;
    for (size_t q = 0; q < queries.size(); ++q) {
        SearchStats stats;
        std::vector<RankedDoc> ranked =
            retrieve(tree, encoder, queries.features_of(q), queries.dim(), corpus, beam_width, top_k, &stats);
        if (totals != nullptr) {
            totals->node_scores += stats.node_scores;
            totals->doc_scores += stats.doc_scores;
            totals->leaves_visited += stats.leaves_visited;
            totals->wall_time_ns += stats.wall_time_ns;
        }
        std::vector<ScoredDoc> scored;
        scored.reserve(ranked.size());
        for (const RankedDoc& rd : ranked) {
            scored.push_back({corpus.doc_id(rd.doc), rd.score});
        }
        run.add_query(queries.query_id(q), std::move(scored));
    }
    return run;
}

EvalSummary score_run(const RunResult& run, const Qrels& qrels, const PipelineConfig& cfg) {
    EvalSummary s;
    s.mrr = mrr_at_k(run, qrels, cfg.mrr_k);
    s.recall = recall_at_k(run, qrels, cfg.recall_k);
    s.ndcg = ndcg_at_k(run, qrels, cfg.ndcg_k);
    return s;
}

std::string report_text(const EvalSummary& s, const PipelineConfig& cfg) {
    std::string out;
    out += "mrr@" + std::to_string(cfg.mrr_k) + "\t" + format_f64(s.mrr) + "\n";
    out += "recall@" + std::to_string(cfg.recall_k) + "\t" + format_f64(s.recall) + "\n";
    out += "ndcg@" + std::to_string(cfg.ndcg_k) + "\t" + format_f64(s.ndcg) + "\n";
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    ensure_parent(path);
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) {
        raise(ErrorCode::IoFailure, "cannot open " + path + " for writing");
    }
    size_t written = std::fwrite(text.data(), 1, text.size(), f);
    if (std::fclose(f) != 0 || written != text.size()) {
        raise(ErrorCode::IoFailure, "short write to " + path);
    }
}

} // namespace

TrainConfig PipelineConfig::train_config() const {
    TrainConfig tc;
    tc.learning_rate = lr;
    tc.batch_size = batch_size;
    tc.epochs = epochs;
    tc.weight_decay = weight_decay;
    tc.extra_random_negatives = extra_negatives;
    tc.seed = seed;
    return tc;
}

void cmd_gen(const PipelineConfig& cfg) {
    BlobSpec spec;
    spec.num_blobs = cfg.gen_blobs;
    spec.docs_per_blob = cfg.gen_docs_per_blob;
    spec.dim = cfg.gen_dim;
    spec.blob_spread = cfg.gen_spread;
    spec.noise = cfg.gen_noise;
    spec.num_queries = cfg.gen_train_queries + cfg.gen_dev_queries;
    spec.rels_per_query = cfg.gen_rels_per_query;
    spec.seed = cfg.seed;
    if (cfg.gen_train_queries == 0 || cfg.gen_dev_queries == 0) {
        raise(ErrorCode::ConfigError, "gen needs both train and dev query counts above zero");
    }

    SyntheticData data = generate_blobs(spec);
    auto [train_q, train_r] = take_queries(data.queries, data.qrels, 0, cfg.gen_train_queries);
    auto [dev_q, dev_r] = take_queries(data.queries, data.qrels, cfg.gen_train_queries, cfg.gen_dev_queries);

    for (const std::string& p : {cfg.corpus, cfg.train_queries, cfg.train_qrels, cfg.dev_queries, cfg.dev_qrels}) {
        ensure_parent(p);
    }
    save_embeddings(data.corpus, cfg.corpus);
    save_queries(train_q, cfg.train_queries);
    save_qrels(train_r, cfg.train_qrels);
    save_queries(dev_q, cfg.dev_queries);
    save_qrels(dev_r, cfg.dev_qrels);

    std::printf("generated %zu docs in %u blobs, %u train and %u dev queries\n", data.corpus.size(), cfg.gen_blobs,
                cfg.gen_train_queries, cfg.gen_dev_queries);
}

void cmd_build(const PipelineConfig& cfg) {
    require_file(cfg.corpus, "corpus");
    Corpus corpus = load_embeddings(cfg.corpus);

    Rng rng(cfg.seed);
    TreeIndex tree = cfg.normalize_clustering ? TreeIndex::build(normalized_copy(corpus), cfg.beta, cfg.gamma, rng)
                                              : TreeIndex::build(corpus, cfg.beta, cfg.gamma, rng);

    ensure_parent(cfg.index);
    save_tree(tree, cfg.index);
    save_encoder(QueryEncoder::identity(corpus.dim()), encoder_path(cfg));

    std::printf("built tree over %zu docs: %zu nodes, %zu leaves, depth %u\n", corpus.size(), tree.num_nodes(),
                tree.num_leaves(), tree.depth());
}

void cmd_train(const PipelineConfig& cfg) {
    require_file(cfg.corpus, "corpus");
    require_file(cfg.index, "index");
    require_file(encoder_path(cfg), "encoder");
    require_file(cfg.train_queries, "train queries");
    require_file(cfg.train_qrels, "train qrels");

    Corpus corpus = load_embeddings(cfg.corpus);
    TreeIndex tree = load_tree(cfg.index);
    QueryEncoder encoder = load_encoder(encoder_path(cfg));
    QuerySet queries = load_queries(cfg.train_queries);
    Qrels qrels = load_qrels(cfg.train_qrels);

    TrainReport report = train(tree, encoder, queries, qrels, corpus, cfg.train_config());

    save_tree(tree, cfg.index);
    save_encoder(encoder, encoder_path(cfg));
    write_text(cfg.train_report, report.to_tsv());

    for (const EpochReport& e : report.epochs) {
        std::printf("epoch %u: mean loss %.6f over %llu instances (%llu skipped)\n", e.epoch, e.mean_loss,
                    (unsigned long long)e.instances_used, (unsigned long long)e.skipped);
    }
}

void cmd_recluster(const PipelineConfig& cfg) {
    require_file(cfg.corpus, "corpus");
    require_file(cfg.index, "index");
    require_file(encoder_path(cfg), "encoder");
    require_file(cfg.train_queries, "train queries");
    require_file(cfg.train_qrels, "train qrels");

    Corpus corpus = load_embeddings(cfg.corpus);
    TreeIndex tree = load_tree(cfg.index);
    QueryEncoder encoder = load_encoder(encoder_path(cfg));
    QuerySet queries = load_queries(cfg.train_queries);
    Qrels qrels = load_qrels(cfg.train_qrels);

    SparseBinaryMatrix routes = route_queries(tree, encoder, queries, cfg.beam_b);
    SparseBinaryMatrix feedback = feedback_matrix(encoder, queries, corpus, cfg.k_feedback);
    include_judged(feedback, queries, qrels, corpus);

    uint64_t before = overlap_count(feedback, predicted_feedback(routes, assignment_matrix(tree)));
    tree.set_leaf_docs(reassign_leaves(feedback, routes, cfg.lambda, tree));
    uint64_t after = overlap_count(feedback, predicted_feedback(routes, assignment_matrix(tree)));

    save_tree(tree, cfg.index);
    std::printf("reclustered with up to %u leaves per doc: reachable feedback pairs %llu -> %llu of %zu, "
                "%zu leaf slots\n",
                cfg.lambda, (unsigned long long)before, (unsigned long long)after, feedback.nnz(),
                tree.total_leaf_doc_slots());
}

void cmd_search(const PipelineConfig& cfg) {
    require_file(cfg.corpus, "corpus");
    require_file(cfg.index, "index");
    require_file(encoder_path(cfg), "encoder");
    require_file(cfg.dev_queries, "dev queries");

    Corpus corpus = load_embeddings(cfg.corpus);
    TreeIndex tree = load_tree(cfg.index);
    QueryEncoder encoder = load_encoder(encoder_path(cfg));
    QuerySet queries = load_queries(cfg.dev_queries);

    SearchStats totals;
    RunResult run = search_queries(tree, encoder, queries, corpus, cfg.beam_b, cfg.top_k, &totals);
    ensure_parent(cfg.run);
    save_run(run, cfg.run);

    double n = double(queries.size());
    std::printf("searched %zu queries at beam %u: %.1f node scores and %.1f doc scores per query\n", queries.size(),
                cfg.beam_b, double(totals.node_scores) / n, double(totals.doc_scores) / n);
}

EvalSummary cmd_eval(const PipelineConfig& cfg, bool oracle) {
    require_file(cfg.dev_queries, "dev queries");
    require_file(cfg.dev_qrels, "dev qrels");
    QuerySet queries = load_queries(cfg.dev_queries);
    Qrels qrels = load_qrels(cfg.dev_qrels);

    RunResult run;
    if (oracle) {
        require_file(cfg.corpus, "corpus");
        require_file(encoder_path(cfg), "encoder");
        Corpus corpus = load_embeddings(cfg.corpus);
        QueryEncoder encoder = load_encoder(encoder_path(cfg));
        for (size_t q = 0; q < queries.size(); ++q) {
            std::vector<RankedDoc> ranked =
                brute_force(encoder, queries.features_of(q), queries.dim(), corpus, cfg.top_k);
            std::vector<ScoredDoc> scored;
            scored.reserve(ranked.size());
            for (const RankedDoc& rd : ranked) {
                scored.push_back({corpus.doc_id(rd.doc), rd.score});
            }
            run.add_query(queries.query_id(q), std::move(scored));
        }
    } else {
        require_file(cfg.run, "run");
        run = load_run(cfg.run);
    }

    EvalSummary summary = score_run(run, qrels, cfg);
    write_text(cfg.report, report_text(summary, cfg));
    std::fputs(report_text(summary, cfg).c_str(), stdout);

    // timing is informational and never lands in an artifact
    if (!oracle && queries.size() > 10 && file_exists(cfg.corpus) && file_exists(cfg.index) &&
        file_exists(encoder_path(cfg))) {
        Corpus corpus = load_embeddings(cfg.corpus);
        TreeIndex tree = load_tree(cfg.index);
        QueryEncoder encoder = load_encoder(encoder_path(cfg));
        double ms = measure_aqt(tree, encoder, queries, corpus, cfg.beam_b, cfg.top_k);
        std::printf("aqt_ms\t%.3f\n", ms);
    }
    return summary;
}

EvalSummary evaluate_tree(const TreeIndex& tree, const QueryEncoder& encoder, const QuerySet& dev_queries,
                          const Qrels& dev_qrels, const Corpus& corpus, const PipelineConfig& cfg) {
    RunResult run = search_queries(tree, encoder, dev_queries, corpus, cfg.beam_b, cfg.top_k, nullptr);
    return score_run(run, dev_qrels, cfg);
}

void recluster_and_retrain(TreeIndex& tree, QueryEncoder& encoder, const QuerySet& train_queries,
                           const Qrels& train_qrels, const Corpus& corpus, uint32_t lambda,
                           const PipelineConfig& cfg) {
    SparseBinaryMatrix routes = route_queries(tree, encoder, train_queries, cfg.beam_b);
    SparseBinaryMatrix feedback = feedback_matrix(encoder, train_queries, corpus, cfg.k_feedback);
    include_judged(feedback, train_queries, train_qrels, corpus);
    tree.set_leaf_docs(reassign_leaves(feedback, routes, lambda, tree));
    train(tree, encoder, train_queries, train_qrels, corpus, cfg.train_config());
}

std::vector<AblationStage> run_ablation(const Corpus& corpus, const QuerySet& train_queries, const Qrels& train_qrels,
                                        const QuerySet& dev_queries, const Qrels& dev_qrels,
                                        const PipelineConfig& cfg, const std::vector<uint32_t>& lambdas) {
    std::vector<AblationStage> stages;

    Rng rng(cfg.seed);
    TreeIndex tree = cfg.normalize_clustering ? TreeIndex::build(normalized_copy(corpus), cfg.beta, cfg.gamma, rng)
                                              : TreeIndex::build(corpus, cfg.beta, cfg.gamma, rng);
    QueryEncoder encoder = QueryEncoder::identity(corpus.dim());
    stages.push_back({"tree", evaluate_tree(tree, encoder, dev_queries, dev_qrels, corpus, cfg), tree, encoder});

    train(tree, encoder, train_queries, train_qrels, corpus, cfg.train_config());
    stages.push_back({"trained", evaluate_tree(tree, encoder, dev_queries, dev_qrels, corpus, cfg), tree, encoder});

    for (uint32_t lambda : lambdas) {
        recluster_and_retrain(tree, encoder, train_queries, train_qrels, corpus, lambda, cfg);
        stages.push_back({"recluster_l" + std::to_string(lambda),
                          evaluate_tree(tree, encoder, dev_queries, dev_qrels, corpus, cfg), tree, encoder});
    }
    return stages;
}

void cmd_ablation(const PipelineConfig& cfg) {
    require_file(cfg.corpus, "corpus");
    require_file(cfg.train_queries, "train queries");
    require_file(cfg.train_qrels, "train qrels");
    require_file(cfg.dev_queries, "dev queries");
    require_file(cfg.dev_qrels, "dev qrels");

    Corpus corpus = load_embeddings(cfg.corpus);
    QuerySet train_q = load_queries(cfg.train_queries);
    Qrels train_r = load_qrels(cfg.train_qrels);
    QuerySet dev_q = load_queries(cfg.dev_queries);
    Qrels dev_r = load_qrels(cfg.dev_qrels);

    std::vector<uint32_t> ladder{1};
    if (cfg.lambda > 1) {
        ladder.push_back(cfg.lambda);
    }
    std::vector<AblationStage> stages = run_ablation(corpus, train_q, train_r, dev_q, dev_r, cfg, ladder);

    std::string table = "stage\tmrr@" + std::to_string(cfg.mrr_k) + "\trecall@" + std::to_string(cfg.recall_k) +
                        "\tndcg@" + std::to_string(cfg.ndcg_k) + "\n";
    for (const AblationStage& s : stages) {
        table += s.name + "\t" + format_f64(s.metrics.mrr) + "\t" + format_f64(s.metrics.recall) + "\t" +
                 format_f64(s.metrics.ndcg) + "\n";
    }
    write_text(cfg.report, table);
    std::fputs(table.c_str(), stdout);
}

namespace {

// registered on the root app; subcommand arguments fall through to here so
// "jtr <stage> --key value" works and a config file can hold any key
void add_stage_options(CLI::App* app, PipelineConfig& cfg) {
    app->set_config("--config", "", "flat key=value config file");
    app->allow_config_extras(true);
    app->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    app->add_option("--corpus", cfg.corpus, "corpus embedding file");
    app->add_option("--train_queries", cfg.train_queries, "training query file");
    app->add_option("--train_qrels", cfg.train_qrels, "training judgments");
    app->add_option("--dev_queries", cfg.dev_queries, "evaluation query file");
    app->add_option("--dev_qrels", cfg.dev_qrels, "evaluation judgments");
    app->add_option("--index", cfg.index, "tree index file");
    app->add_option("--run", cfg.run, "ranked run file");
    app->add_option("--report", cfg.report, "metric report file");
    app->add_option("--train_report", cfg.train_report, "per-epoch loss file");

    app->add_option("--beta", cfg.beta, "children per split");
    app->add_option("--gamma", cfg.gamma, "leaf capacity at build time");
    app->add_option("--beam_b", cfg.beam_b, "beam width");
    app->add_option("--top_k", cfg.top_k, "docs returned per query");
    app->add_option("--lambda", cfg.lambda, "max leaves per doc after reclustering");
    app->add_option("--k_feedback", cfg.k_feedback, "feedback depth for reclustering");
    app->add_flag("--normalize_clustering", cfg.normalize_clustering, "cluster unit-length doc copies");

    app->add_option("--lr", cfg.lr, "learning rate");
    app->add_option("--batch_size", cfg.batch_size, "training batch size");
    app->add_option("--epochs", cfg.epochs, "training epochs");
    app->add_option("--weight_decay", cfg.weight_decay, "decoupled weight decay");
    app->add_option("--extra_negatives", cfg.extra_negatives, "random same-level negatives per level");
    app->add_option("--seed", cfg.seed, "seed for every random choice");

    app->add_option("--mrr_k", cfg.mrr_k, "MRR cutoff");
    app->add_option("--recall_k", cfg.recall_k, "recall cutoff");
    app->add_option("--ndcg_k", cfg.ndcg_k, "NDCG cutoff");

    app->add_option("--gen_blobs", cfg.gen_blobs, "blob count");
    app->add_option("--gen_docs_per_blob", cfg.gen_docs_per_blob, "docs per blob");
    app->add_option("--gen_dim", cfg.gen_dim, "embedding dimension");
    app->add_option("--gen_spread", cfg.gen_spread, "blob center scale");
    app->add_option("--gen_noise", cfg.gen_noise, "within-blob noise");
    app->add_option("--gen_train_queries", cfg.gen_train_queries, "training queries to generate");
    app->add_option("--gen_dev_queries", cfg.gen_dev_queries, "evaluation queries to generate");
    app->add_option("--gen_rels_per_query", cfg.gen_rels_per_query, "judged docs per query");
}

} // namespace

int run_command(int argc, const char* const* argv) {
    CLI::App app{"tree-based dense retrieval pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    PipelineConfig cfg;
    bool oracle = false;
    add_stage_options(&app, cfg);

    CLI::App* gen = app.add_subcommand("gen", "write a synthetic blob workload");
    CLI::App* build = app.add_subcommand("build", "cluster the corpus into a fresh tree");
    CLI::App* train_cmd = app.add_subcommand("train", "fit node embeddings and the query encoder");
    CLI::App* recluster = app.add_subcommand("recluster", "move docs into the leaves their queries reach");
    CLI::App* search = app.add_subcommand("search", "run the beam over the evaluation queries");
    CLI::App* eval = app.add_subcommand("eval", "score a run against the judgments");
    CLI::App* ablation = app.add_subcommand("ablation", "build, train and recluster in one ladder");
    eval->add_flag("--oracle", oracle, "score exhaustive retrieval instead of the run file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            cmd_gen(cfg);
        } else if (build->parsed()) {
            cmd_build(cfg);
        } else if (train_cmd->parsed()) {
            cmd_train(cfg);
        } else if (recluster->parsed()) {
            cmd_recluster(cfg);
        } else if (search->parsed()) {
            cmd_search(cfg);
        } else if (eval->parsed()) {
            cmd_eval(cfg, oracle);
        } else if (ablation->parsed()) {
            cmd_ablation(cfg);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        switch (e.category()) {
        case ErrorCategory::Config:
            return 2;
        case ErrorCategory::Data:
            return 3;
        case ErrorCategory::Invariant:
            return 4;
        }
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

} // namespace jtr
