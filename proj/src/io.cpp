#include "jtr/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bytes.hpp"
#include "jtr/error.hpp"

namespace jtr {

namespace {

using bytes::read_file;
using bytes::write_file;

constexpr char kMagic[4] = {'J', 'T', 'R', 'V'};
constexpr uint32_t kVersion = 1;
constexpr size_t kHeaderBytes = 24;

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    for (;;) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

bool blank(const std::string& line) {
    for (char c : line) {
        if (c != ' ' && c != '\t' && c != '\r') return false;
    }
    return true;
}

uint64_t parse_uint(const std::string& field, const std::string& path, size_t lineno) {
    if (field.empty()) raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": empty integer field");
    uint64_t v = 0;
    for (char c : field) {
        if (c < '0' || c > '9') {
            raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": bad integer '" + field + "'");
        }
        uint64_t d = uint64_t(c - '0');
        if (v > (UINT64_MAX - d) / 10) {
            raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": integer overflow '" + field + "'");
        }
        v = v * 10 + d;
    }
    return v;
}

float parse_float(const std::string& field, const std::string& path, size_t lineno) {
    char* end = nullptr;
    float v = std::strtof(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size()) {
        raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": bad float '" + field + "'");
    }
    return v;
}

// iterate non-comment lines of a TSV file
template <typename Fn>
void for_tsv_lines(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoFailure, "cannot open " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank(line) || line[0] == '#') continue;
        fn(line, lineno);
    }
    if (in.bad()) raise(ErrorCode::IoFailure, "read failed for " + path);
}

std::string ids_path_for(const std::string& path) { return path + ".ids"; }

std::vector<std::string> ids_or_positional(const std::string& emb_path, size_t count) {
    std::string side = ids_path_for(emb_path);
    if (file_exists(side)) {
        std::vector<std::string> ids = load_ids(side);
        if (ids.size() != count) {
            raise(ErrorCode::ShapeMismatch, side + " lists " + std::to_string(ids.size()) + " ids for " +
                                                std::to_string(count) + " rows");
        }
        return ids;
    }
    std::vector<std::string> ids(count);
    for (size_t i = 0; i < count; i++) ids[i] = std::to_string(i);
    return ids;
}

} // namespace

bool file_exists(const std::string& path) {
    std::error_code ec;
    return std::filesystem::exists(path, ec);
}

std::string format_f32(float v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", double(v));
    return buf;
}

std::string format_f64(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_matrix(const Matrix& m, const std::string& path) {
    if (!m.all_finite()) raise(ErrorCode::NonFiniteValue, "refusing to write non-finite values to " + path);
    std::string out;
    out.reserve(kHeaderBytes + m.values().size() * 4);
    out.append(kMagic, 4);
    bytes::put_u32(out, kVersion);
    bytes::put_u64(out, m.rows());
    bytes::put_u32(out, uint32_t(m.cols()));
    bytes::put_u32(out, 0);
    for (float v : m.values()) bytes::put_f32(out, v);
    write_file(path, out);
}

Matrix load_matrix(const std::string& path) {
    std::string raw = read_file(path);
    bytes::Reader r(raw, path);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) raise(ErrorCode::MagicMismatch, path + " is not an embedding file");
    uint32_t version = r.u32();
    if (version != kVersion) {
        raise(ErrorCode::VersionUnsupported, path + " has version " + std::to_string(version));
    }
    uint64_t count = r.u64();
    uint32_t dim = r.u32();
    r.u32(); // padding
    if (dim != 0 && count > (UINT64_MAX / 4) / dim) {
        raise(ErrorCode::TruncatedFile, path + " header claims an implausible payload size");
    }
    uint64_t expected = count * uint64_t(dim) * 4;
    if (r.remaining() != expected) {
        raise(ErrorCode::TruncatedFile, path + " payload holds " + std::to_string(r.remaining()) +
                                            " bytes, header needs " + std::to_string(expected));
    }
    std::vector<float> values(size_t(count) * dim);
    for (size_t i = 0; i < values.size(); i++) {
        float v = r.f32();
        if (!std::isfinite(v)) {
            raise(ErrorCode::NonFiniteValue, path + " value at flat index " + std::to_string(i) + " is not finite");
        }
        values[i] = v;
    }
    return Matrix(size_t(count), dim, std::move(values));
}

void save_ids(const std::vector<std::string>& ids, const std::string& path) {
    std::string out;
    for (size_t i = 0; i < ids.size(); i++) {
        out += ids[i];
        out += '\t';
        out += std::to_string(i);
        out += '\n';
    }
    write_file(path, out);
}

std::vector<std::string> load_ids(const std::string& path) {
    std::vector<std::string> ids;
    for_tsv_lines(path, [&](const std::string& line, size_t lineno) {
        auto fields = split_tabs(line);
        if (fields.size() != 2) {
            raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected 2 fields, got " +
                                             std::to_string(fields.size()));
        }
        uint64_t idx = parse_uint(fields[1], path, lineno);
        if (idx != ids.size()) {
            raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": row index " + fields[1] +
                                             " breaks the dense ascending order");
        }
        if (fields[0].empty()) raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": empty id");
        ids.push_back(fields[0]);
    });
    return ids;
}

void save_embeddings(const Corpus& corpus, const std::string& path) {
    save_matrix(corpus.embeddings(), path);
    save_ids(corpus.doc_ids(), ids_path_for(path));
}

Corpus load_embeddings(const std::string& path) {
    Matrix m = load_matrix(path);
    std::vector<std::string> ids = ids_or_positional(path, m.rows());
    return Corpus(std::move(ids), std::move(m));
}

void save_queries(const QuerySet& queries, const std::string& path) {
    save_matrix(queries.features(), path);
    save_ids(queries.query_ids(), ids_path_for(path));
}

QuerySet load_queries(const std::string& path) {
    Matrix m = load_matrix(path);
    std::vector<std::string> ids = ids_or_positional(path, m.rows());
    return QuerySet(std::move(ids), std::move(m));
}

Qrels load_qrels(const std::string& path) {
    std::vector<Judgment> judgments;
    for_tsv_lines(path, [&](const std::string& line, size_t lineno) {
        auto fields = split_tabs(line);
        if (fields.size() != 3) {
            raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected 3 fields, got " +
                                             std::to_string(fields.size()));
        }
        if (fields[0].empty() || fields[1].empty()) {
            raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": empty id field");
        }
        uint64_t rel = parse_uint(fields[2], path, lineno);
        if (rel > UINT32_MAX) {
            raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": relevance out of range");
        }
        judgments.push_back({fields[0], fields[1], uint32_t(rel)});
    });
    try {
        return Qrels(std::move(judgments));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DuplicatePair) raise(ErrorCode::DuplicatePair, path + ": " + e.what());
        throw;
    }
}

void save_qrels(const Qrels& qrels, const std::string& path) {
    std::string out;
    for (const Judgment& j : qrels.judgments()) {
        out += j.query_id;
        out += '\t';
        out += j.doc_id;
        out += '\t';
        out += std::to_string(j.relevance);
        out += '\n';
    }
    write_file(path, out);
}

void save_run(const RunResult& run, const std::string& path) {
    std::string out;
    for (size_t q = 0; q < run.num_queries(); q++) {
        const auto& ranking = run.ranking(q);
        for (size_t r = 0; r < ranking.size(); r++) {
            out += run.query_id(q);
            out += '\t';
            out += ranking[r].doc_id;
            out += '\t';
            out += std::to_string(r + 1);
            out += '\t';
            out += format_f32(ranking[r].score);
            out += '\n';
        }
    }
    write_file(path, out);
}

RunResult load_run(const std::string& path) {
    RunResult run;
    std::string current_query;
    std::vector<ScoredDoc> ranking;
    auto flush = [&]() {
        if (!current_query.empty()) run.add_query(current_query, std::move(ranking));
        ranking.clear();
    };
    for_tsv_lines(path, [&](const std::string& line, size_t lineno) {
        auto fields = split_tabs(line);
        if (fields.size() != 4) {
            raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected 4 fields, got " +
                                             std::to_string(fields.size()));
        }
        if (fields[0].empty() || fields[1].empty()) {
            raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": empty id field");
        }
        uint64_t rank = parse_uint(fields[2], path, lineno);
        float score = parse_float(fields[3], path, lineno);
        if (!std::isfinite(score)) {
            raise(ErrorCode::NonFiniteValue, path + ":" + std::to_string(lineno) + ": non-finite score");
        }
        if (fields[0] != current_query) {
            flush();
            current_query = fields[0];
        }
        if (rank != ranking.size() + 1) {
            raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": rank " + fields[2] +
                                             " breaks the 1-based contiguous order for query " + fields[0]);
        }
        ranking.push_back({fields[1], score});
    });
    flush();
    return run;
}

} // namespace jtr
