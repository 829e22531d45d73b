#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <optional>

#include "jtr/error.hpp"
#include "jtr/io.hpp"
#include "jtr/rng.hpp"
#include "jtr/types.hpp"
#include "test_util.hpp"

using namespace jtr;
using jtr_test::TempDir;

namespace {

template <typename Fn>
std::optional<ErrorCode> code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

// independently summed reference product, kept apart from dot_f32/dot_f64
double dot_reference(const float* a, const float* b, size_t n) {
    long double acc = 0.0L;
    for (size_t i = n; i > 0; i--) acc += (long double)(a[i - 1]) * (long double)(b[i - 1]);
    return double(acc);
}

} // namespace

TEST_CASE("dot products agree with a reference summation") {
    Rng rng(11);
    for (int round = 0; round < 20; round++) {
        size_t n = 1 + rng.next_below(128);
        std::vector<float> a(n), b(n);
        for (size_t i = 0; i < n; i++) {
            a[i] = float(rng.next_gaussian());
            b[i] = float(rng.next_gaussian());
        }
        double ref = dot_reference(a.data(), b.data(), n);
        CHECK(double(dot_f32(a.data(), b.data(), n)) == doctest::Approx(ref).epsilon(1e-4));
        CHECK(dot_f64(a.data(), b.data(), n) == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("rng streams are reproducible and splittable") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; i++) CHECK(a.next_u64() == b.next_u64());

    Rng c(42);
    Rng child = c.split();
    CHECK(child.next_u64() != c.next_u64());

    Rng d(7);
    for (int i = 0; i < 1000; i++) {
        uint64_t v = d.next_below(10);
        CHECK(v < 10);
    }
    Rng e(7);
    double mean = 0.0;
    for (int i = 0; i < 10000; i++) mean += e.next_gaussian();
    mean /= 10000.0;
    CHECK(std::abs(mean) < 0.05);
}

TEST_CASE("corpus validates ids and shapes") {
    Matrix m(2, 3, {1, 2, 3, 4, 5, 6});
    Corpus c({"a", "b"}, m);
    CHECK(c.size() == 2);
    CHECK(c.dim() == 3);
    CHECK(c.index_of("b") == 1);
    CHECK(code_of([&] { c.index_of("nope"); }) == ErrorCode::UnknownId);
    CHECK(code_of([&] { Corpus({"a", "a"}, m); }) == ErrorCode::StructureInvalid);
    CHECK(code_of([&] { Corpus({"a"}, m); }) == ErrorCode::ShapeMismatch);

    Matrix bad(1, 2, {1.0f, std::numeric_limits<float>::quiet_NaN()});
    CHECK(code_of([&] { Corpus({"a"}, bad); }) == ErrorCode::NonFiniteValue);
}

TEST_CASE("qrels reject duplicate pairs and keep per-query order") {
    std::vector<Judgment> js = {{"q1", "d1", 2}, {"q1", "d2", 0}, {"q2", "d1", 1}};
    Qrels qr(js);
    auto q1 = qr.for_query("q1");
    REQUIRE(q1.size() == 2);
    CHECK(q1[0].first == "d1");
    CHECK(q1[1].first == "d2");
    CHECK(qr.for_query("qx").empty());

    js.push_back({"q1", "d1", 1});
    CHECK(code_of([&] { Qrels q(js); }) == ErrorCode::DuplicatePair);
}

TEST_CASE("sparse binary matrix stores sorted rows and transposes") {
    SparseBinaryMatrix m(3, 4);
    m.set_row(0, {0, 2});
    m.set_row(2, {1, 2, 3});
    CHECK(m.nnz() == 5);
    CHECK(m.at(0, 2));
    CHECK(!m.at(1, 0));

    SparseBinaryMatrix t = m.transposed();
    CHECK(t.rows() == 4);
    CHECK(t.cols() == 3);
    CHECK(t.row(2) == std::vector<uint32_t>{0, 2});
    CHECK(t.row(0) == std::vector<uint32_t>{0});

    CHECK(code_of([&] { m.set_row(0, {2, 1}); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([&] { m.set_row(0, {4}); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([&] { m.set_row(5, {0}); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("run result enforces ordering and uniqueness") {
    RunResult run;
    run.add_query("q1", {{"d2", 3.0f}, {"d1", 3.0f}, {"d3", 1.0f}});
    CHECK(run.num_queries() == 1);
    CHECK(code_of([&] { run.add_query("q1", {}); }) == ErrorCode::DuplicatePair);
    CHECK(code_of([&] { run.add_query("q2", {{"d1", 1.0f}, {"d1", 2.0f}}); }) == ErrorCode::DuplicatePair);
    CHECK(code_of([&] { run.add_query("q3", {{"d1", 1.0f}, {"d2", 2.0f}}); }) == ErrorCode::StructureInvalid);
}

TEST_CASE("embedding file layout matches the documented bytes") {
    TempDir dir("io_layout");
    Matrix m(2, 3, {1.0f, 2.0f, 3.0f, -1.0f, 0.5f, 0.0f});
    std::string path = dir.file("emb.bin");
    save_matrix(m, path);

    std::string bytes = jtr_test::slurp(path);
    REQUIRE(bytes.size() == 24 + 6 * 4);

    // header laid out by hand
    std::string expect;
    expect += "JTRV";
    const unsigned char tail[] = {1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 3, 0, 0, 0, 0, 0, 0, 0};
    expect.append(reinterpret_cast<const char*>(tail), sizeof(tail));
    CHECK(bytes.substr(0, 24) == expect);

    // payload is the raw float32 values, little endian
    float v;
    std::memcpy(&v, bytes.data() + 24, 4);
    CHECK(v == 1.0f);
    std::memcpy(&v, bytes.data() + 24 + 3 * 4, 4);
    CHECK(v == -1.0f);

    // round trip reproduces the file byte for byte
    Matrix back = load_matrix(path);
    REQUIRE(back.rows() == 2);
    REQUIRE(back.cols() == 3);
    CHECK(back.values() == m.values());
    std::string path2 = dir.file("emb2.bin");
    save_matrix(back, path2);
    CHECK(jtr_test::slurp(path2) == bytes);
}

TEST_CASE("embedding loader rejects malformed files") {
    TempDir dir("io_bad");
    Matrix m(2, 3, {1, 2, 3, 4, 5, 6});
    std::string path = dir.file("emb.bin");
    save_matrix(m, path);
    std::string good = jtr_test::slurp(path);

    auto with_bytes = [&](std::string bytes) {
        std::string p = dir.file("mut.bin");
        jtr_test::spit(p, bytes);
        return code_of([&] { load_matrix(p); });
    };

    std::string wrong_magic = good;
    wrong_magic[0] = 'X';
    CHECK(with_bytes(wrong_magic) == ErrorCode::MagicMismatch);

    std::string wrong_version = good;
    wrong_version[4] = 9;
    CHECK(with_bytes(wrong_version) == ErrorCode::VersionUnsupported);

    CHECK(with_bytes(good.substr(0, good.size() - 1)) == ErrorCode::TruncatedFile);
    CHECK(with_bytes(good.substr(0, 10)) == ErrorCode::TruncatedFile);
    CHECK(with_bytes(good + "!") == ErrorCode::TruncatedFile);

    std::string nan_payload = good;
    const unsigned char nan_bits[] = {0x00, 0x00, 0xc0, 0x7f};
    std::memcpy(nan_payload.data() + 24, nan_bits, 4);
    CHECK(with_bytes(nan_payload) == ErrorCode::NonFiniteValue);

    CHECK(code_of([&] { load_matrix(dir.file("missing.bin")); }) == ErrorCode::IoFailure);
}

TEST_CASE("corpus save/load round trips ids through the sidecar") {
    TempDir dir("io_corpus");
    Rng rng(3);
    Matrix m = jtr_test::random_matrix(5, 4, rng);
    Corpus corpus(jtr_test::numbered_ids("doc", 5), m);
    std::string path = dir.file("corpus.bin");
    save_embeddings(corpus, path);

    Corpus back = load_embeddings(path);
    CHECK(back.doc_ids() == corpus.doc_ids());
    CHECK(back.embeddings().values() == m.values());

    // without a sidecar, ids fall back to the row number
    std::string bare = dir.file("bare.bin");
    save_matrix(m, bare);
    Corpus positional = load_embeddings(bare);
    CHECK(positional.doc_id(0) == "0");
    CHECK(positional.doc_id(4) == "4");

    // sidecar with the wrong row count is rejected
    jtr_test::spit(path + ".ids", "only\t0\n");
    CHECK(code_of([&] { load_embeddings(path); }) == ErrorCode::ShapeMismatch);

    // sidecar rows must be dense and ascending
    jtr_test::spit(dir.file("ids.tsv"), "a\t0\nb\t2\n");
    CHECK(code_of([&] { load_ids(dir.file("ids.tsv")); }) == ErrorCode::ParseError);
}

TEST_CASE("qrels file parsing") {
    TempDir dir("io_qrels");
    std::string path = dir.file("qrels.tsv");
    jtr_test::spit(path,
                   "# comment line\n"
                   "q1\td1\t2\n"
                   "\n"
                   "q1\td2\t0\n"
                   "q2\td1\t1\n");
    Qrels qr = load_qrels(path);
    CHECK(qr.size() == 3);
    CHECK(qr.for_query("q1").size() == 2);
    CHECK(qr.for_query("q2")[0].second == 1);

    std::string out = dir.file("qrels_out.tsv");
    save_qrels(qr, out);
    CHECK(jtr_test::slurp(out) == "q1\td1\t2\nq1\td2\t0\nq2\td1\t1\n");

    jtr_test::spit(path, "q1\td1\n");
    CHECK(code_of([&] { load_qrels(path); }) == ErrorCode::ParseError);
    jtr_test::spit(path, "q1\td1\t-1\n");
    CHECK(code_of([&] { load_qrels(path); }) == ErrorCode::ParseError);
    jtr_test::spit(path, "q1\td1\tabc\n");
    CHECK(code_of([&] { load_qrels(path); }) == ErrorCode::ParseError);
    jtr_test::spit(path, "q1\td1\t1\nq1\td1\t2\n");
    CHECK(code_of([&] { load_qrels(path); }) == ErrorCode::DuplicatePair);
}

TEST_CASE("run file round trips exactly") {
    TempDir dir("io_run");
    RunResult run;
    run.add_query("q1", {{"d1", 0.100000001f}, {"d2", -3.25f}});
    run.add_query("q2", {{"d9", float(1.0 / 3.0)}});
    std::string path = dir.file("run.tsv");
    save_run(run, path);

    RunResult back = load_run(path);
    REQUIRE(back.num_queries() == 2);
    CHECK(back.query_id(0) == "q1");
    REQUIRE(back.ranking(0).size() == 2);
    CHECK(back.ranking(0)[0].doc_id == "d1");
    CHECK(back.ranking(0)[0].score == run.ranking(0)[0].score);
    CHECK(back.ranking(0)[1].score == -3.25f);
    CHECK(back.ranking(1)[0].score == run.ranking(1)[0].score);

    std::string path2 = dir.file("run2.tsv");
    save_run(back, path2);
    CHECK(jtr_test::slurp(path2) == jtr_test::slurp(path));

    jtr_test::spit(path, "q1\td1\t2\t1.0\n");
    CHECK(code_of([&] { load_run(path); }) == ErrorCode::ParseError);
    jtr_test::spit(path, "q1\td1\t1\t1.0\nq1\td2\t2\t2.0\n");
    CHECK(code_of([&] { load_run(path); }) == ErrorCode::StructureInvalid);
    jtr_test::spit(path, "q1\td1\t1\t1.0\nq2\td1\t1\t1.0\nq1\td3\t1\t0.5\n");
    CHECK(code_of([&] { load_run(path); }) == ErrorCode::DuplicatePair);
}

TEST_CASE("float formatting round trips float32") {
    Rng rng(99);
    for (int i = 0; i < 2000; i++) {
        float v = float(rng.next_gaussian()) * std::pow(10.0f, float(int(rng.next_below(13)) - 6));
        std::string s = format_f32(v);
        CHECK(std::strtof(s.c_str(), nullptr) == v);
    }
    CHECK(format_f32(0.0f) == "0");
    CHECK(format_f32(1.5f) == "1.5");
}
