#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "jtr/io.hpp"
#include "jtr/pipeline.hpp"
#include "jtr/synthetic.hpp"
#include "test_util.hpp"

using namespace jtr;
using jtr_test::TempDir;

namespace {

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("jtr");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_command(int(argv.size()), argv.data());
}

// config pointing every artifact into dir, with a workload small enough to
// run the whole pipeline in well under a second
PipelineConfig small_config(const TempDir& dir) {
    PipelineConfig cfg;
    cfg.corpus = dir.file("corpus.vec");
    cfg.train_queries = dir.file("train_queries.vec");
    cfg.train_qrels = dir.file("train_qrels.tsv");
    cfg.dev_queries = dir.file("dev_queries.vec");
    cfg.dev_qrels = dir.file("dev_qrels.tsv");
    cfg.index = dir.file("index.tree");
    cfg.run = dir.file("run.tsv");
    cfg.report = dir.file("report.tsv");
    cfg.train_report = dir.file("train_report.tsv");
    cfg.beta = 3;
    cfg.gamma = 8;
    cfg.beam_b = 3;
    cfg.top_k = 10;
    cfg.lambda = 2;
    cfg.k_feedback = 12;
    cfg.epochs = 2;
    cfg.lr = 0.01;
    cfg.batch_size = 16;
    cfg.seed = 5;
    cfg.mrr_k = 10;
    cfg.recall_k = 10;
    cfg.ndcg_k = 5;
    cfg.gen_blobs = 6;
    cfg.gen_docs_per_blob = 24;
    cfg.gen_dim = 8;
    cfg.gen_spread = 4.0f;
    cfg.gen_noise = 0.4f;
    cfg.gen_train_queries = 40;
    cfg.gen_dev_queries = 20;
    cfg.gen_rels_per_query = 3;
    return cfg;
}

std::vector<std::string> flags_of(const PipelineConfig& cfg) {
    return {"--corpus",        cfg.corpus,
            "--train_queries", cfg.train_queries,
            "--train_qrels",   cfg.train_qrels,
            "--dev_queries",   cfg.dev_queries,
            "--dev_qrels",     cfg.dev_qrels,
            "--index",         cfg.index,
            "--run",           cfg.run,
            "--report",        cfg.report,
            "--train_report",  cfg.train_report,
            "--beta",          std::to_string(cfg.beta),
            "--gamma",         std::to_string(cfg.gamma),
            "--beam_b",        std::to_string(cfg.beam_b),
            "--top_k",         std::to_string(cfg.top_k),
            "--lambda",        std::to_string(cfg.lambda),
            "--k_feedback",    std::to_string(cfg.k_feedback),
            "--epochs",        std::to_string(cfg.epochs),
            "--lr",            "0.01",
            "--batch_size",    std::to_string(cfg.batch_size),
            "--seed",          std::to_string(cfg.seed),
            "--mrr_k",         std::to_string(cfg.mrr_k),
            "--recall_k",      std::to_string(cfg.recall_k),
            "--ndcg_k",        std::to_string(cfg.ndcg_k),
            "--gen_blobs",     std::to_string(cfg.gen_blobs),
            "--gen_docs_per_blob", std::to_string(cfg.gen_docs_per_blob),
            "--gen_dim",       std::to_string(cfg.gen_dim),
            "--gen_spread",    "4.0",
            "--gen_noise",     "0.4",
            "--gen_train_queries", std::to_string(cfg.gen_train_queries),
            "--gen_dev_queries", std::to_string(cfg.gen_dev_queries),
            "--gen_rels_per_query", std::to_string(cfg.gen_rels_per_query)};
}

std::vector<std::string> with_flags(const std::string& stage, const PipelineConfig& cfg,
                                    const std::vector<std::string>& extra = {}) {
    std::vector<std::string> args{stage};
    auto flags = flags_of(cfg);
    args.insert(args.end(), flags.begin(), flags.end());
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

void run_all_stages(const PipelineConfig& cfg) {
    REQUIRE(run(with_flags("gen", cfg)) == 0);
    REQUIRE(run(with_flags("build", cfg)) == 0);
    REQUIRE(run(with_flags("train", cfg)) == 0);
    REQUIRE(run(with_flags("recluster", cfg)) == 0);
    REQUIRE(run(with_flags("search", cfg)) == 0);
    REQUIRE(run(with_flags("eval", cfg)) == 0);
}

} // namespace

TEST_CASE("every stage runs and leaves its artifact") {
    TempDir dir("pipe_stages");
    PipelineConfig cfg = small_config(dir);
    run_all_stages(cfg);

    for (const std::string& p : {cfg.corpus, cfg.corpus + ".ids", cfg.train_queries, cfg.train_qrels, cfg.dev_queries,
                                 cfg.dev_qrels, cfg.index, cfg.index + ".enc", cfg.run, cfg.report,
                                 cfg.train_report}) {
        INFO(p);
        CHECK(file_exists(p));
    }

    // the report carries the three metrics with the configured cutoffs
    std::string report = jtr_test::slurp(cfg.report);
    CHECK(report.find("mrr@10\t") != std::string::npos);
    CHECK(report.find("recall@10\t") != std::string::npos);
    CHECK(report.find("ndcg@5\t") != std::string::npos);

    std::string train_report = jtr_test::slurp(cfg.train_report);
    CHECK(train_report.find("1\t") != std::string::npos);
    CHECK(train_report.find("2\t") != std::string::npos);

    // the run parses back and covers the dev queries
    RunResult run_back = load_run(cfg.run);
    CHECK(run_back.num_queries() == 20);

    // oracle evaluation overwrites the report from exhaustive retrieval
    REQUIRE(run(with_flags("eval", cfg, {"--oracle", "--report", dir.file("oracle.tsv")})) == 0);
    CHECK(file_exists(dir.file("oracle.tsv")));
}

TEST_CASE("two identical pipeline runs produce identical artifacts") {
    TempDir dir_a("pipe_det_a");
    TempDir dir_b("pipe_det_b");
    PipelineConfig a = small_config(dir_a);
    PipelineConfig b = small_config(dir_b);
    run_all_stages(a);
    run_all_stages(b);

    auto pairs = {std::pair{a.corpus, b.corpus},
                  {a.corpus + ".ids", b.corpus + ".ids"},
                  {a.train_queries, b.train_queries},
                  {a.train_qrels, b.train_qrels},
                  {a.dev_queries, b.dev_queries},
                  {a.dev_qrels, b.dev_qrels},
                  {a.index, b.index},
                  {a.index + ".enc", b.index + ".enc"},
                  {a.run, b.run},
                  {a.report, b.report},
                  {a.train_report, b.train_report}};
    for (const auto& [pa, pb] : pairs) {
        INFO(pa);
        CHECK(jtr_test::slurp(pa) == jtr_test::slurp(pb));
    }
}

TEST_CASE("config file keys apply and flags override them") {
    TempDir dir("pipe_cfg");
    PipelineConfig cfg = small_config(dir);

    std::string cfg_file = dir.file("run.cfg");
    std::string text;
    text += "# workload\n";
    text += "corpus = " + cfg.corpus + "\n";
    text += "train_queries = " + cfg.train_queries + "\n";
    text += "train_qrels = " + cfg.train_qrels + "\n";
    text += "dev_queries = " + cfg.dev_queries + "\n";
    text += "dev_qrels = " + cfg.dev_qrels + "\n";
    text += "gen_blobs = 4\n";
    text += "gen_docs_per_blob = 10\n";
    text += "gen_dim = 6\n";
    text += "gen_spread = 4.0\n";
    text += "gen_noise = 0.4\n";
    text += "gen_train_queries = 12\n";
    text += "gen_dev_queries = 6\n";
    text += "gen_rels_per_query = 2\n";
    text += "seed = 3\n";
    jtr_test::spit(cfg_file, text);

    REQUIRE(run({"gen", "--config", cfg_file}) == 0);
    CHECK(load_embeddings(cfg.corpus).size() == 40);

    // a flag on the command line beats the same key in the file
    REQUIRE(run({"gen", "--config", cfg_file, "--gen_blobs", "6"}) == 0);
    CHECK(load_embeddings(cfg.corpus).size() == 60);
}

TEST_CASE("process exit codes follow the error categories") {
    TempDir dir("pipe_exit");
    PipelineConfig cfg = small_config(dir);

    // missing input is a config error
    CHECK(run(with_flags("build", cfg)) == 2);

    REQUIRE(run(with_flags("gen", cfg)) == 0);
    REQUIRE(run(with_flags("build", cfg)) == 0);

    // an unreadable artifact is a data error
    std::string good = jtr_test::slurp(cfg.index);
    jtr_test::spit(cfg.index, good.substr(0, good.size() / 2));
    CHECK(run(with_flags("search", cfg)) == 3);
    jtr_test::spit(cfg.index, good);
    REQUIRE(run(with_flags("search", cfg)) == 0);

    // an impossible setting is a config error
    CHECK(run(with_flags("recluster", cfg, {"--k_feedback", "100000"})) == 2);

    // unknown flags and unparsable values are command-line errors
    CHECK(run({"search", "--no_such_flag", "1"}) == 2);
    CHECK(run(with_flags("build", cfg, {"--beta", "many"})) == 2);
    CHECK(run({}) == 2);
    CHECK(run({"--help"}) == 0);
}

TEST_CASE("ablation ladder reports every stage") {
    TempDir dir("pipe_ablation");
    PipelineConfig cfg = small_config(dir);
    REQUIRE(run(with_flags("gen", cfg)) == 0);
    REQUIRE(run(with_flags("ablation", cfg)) == 0);

    std::string table = jtr_test::slurp(cfg.report);
    CHECK(table.find("stage\tmrr@10\trecall@10\tndcg@5\n") == 0);
    CHECK(table.find("\ntree\t") != std::string::npos);
    CHECK(table.find("\ntrained\t") != std::string::npos);
    CHECK(table.find("\nrecluster_l1\t") != std::string::npos);
    CHECK(table.find("\nrecluster_l2\t") != std::string::npos);
}

TEST_CASE("in-memory ablation returns usable stage artifacts") {
    TempDir dir("pipe_mem");
    PipelineConfig cfg = small_config(dir);

    BlobSpec spec;
    spec.num_blobs = cfg.gen_blobs;
    spec.docs_per_blob = cfg.gen_docs_per_blob;
    spec.dim = cfg.gen_dim;
    spec.blob_spread = cfg.gen_spread;
    spec.noise = cfg.gen_noise;
    spec.num_queries = cfg.gen_train_queries + cfg.gen_dev_queries;
    spec.rels_per_query = cfg.gen_rels_per_query;
    spec.seed = cfg.seed;
    SyntheticData data = generate_blobs(spec);
    auto [train_q, train_r] = take_queries(data.queries, data.qrels, 0, cfg.gen_train_queries);
    auto [dev_q, dev_r] = take_queries(data.queries, data.qrels, cfg.gen_train_queries, cfg.gen_dev_queries);

    auto stages = run_ablation(data.corpus, train_q, train_r, dev_q, dev_r, cfg, {1, 2});
    REQUIRE(stages.size() == 4);
    CHECK(stages[0].name == "tree");
    CHECK(stages[1].name == "trained");
    CHECK(stages[2].name == "recluster_l1");
    CHECK(stages[3].name == "recluster_l2");
    for (const auto& s : stages) {
        CHECK(s.metrics.mrr >= 0.0);
        CHECK(s.metrics.mrr <= 1.0);
        CHECK(s.metrics.recall >= 0.0);
        CHECK(s.metrics.recall <= 1.0);
        CHECK(s.metrics.ndcg >= 0.0);
        CHECK(s.metrics.ndcg <= 1.0);
        CHECK(s.tree.doc_count() == data.corpus.size());
    }

    // the trained stage really is a different index from the plain tree
    EvalSummary replay = evaluate_tree(stages[1].tree, stages[1].encoder, dev_q, dev_r, data.corpus, cfg);
    CHECK(replay.recall == stages[1].metrics.recall);
    CHECK(replay.mrr == stages[1].metrics.mrr);
}
