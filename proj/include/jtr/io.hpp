#pragma once

#include <string>
#include <vector>

#include "jtr/types.hpp"

namespace jtr {

// Binary embedding file, little-endian:
//
//   offset  size  field
//   0       4     magic "JTRV"
//   4       4     u32 format version, currently 1
//   8       8     u64 row count
//   16      4     u32 dimension
//   20      4     u32 padding, written as 0
//   24      ...   row-major float32 payload, count * dim values
//
// The payload length must match the header exactly; shorter or longer files
// are rejected. Ids live in a TSV sidecar next to the file (see below).
void save_matrix(const Matrix& m, const std::string& path);
Matrix load_matrix(const std::string& path);

// Id sidecar, TSV rows "id<TAB>row_index" with row_index dense and ascending
// from 0. save_embeddings/save_queries write it at <path>.ids; the loaders
// read it from there and fall back to decimal positional ids ("0", "1", ...)
// when the sidecar does not exist.
void save_ids(const std::vector<std::string>& ids, const std::string& path);
std::vector<std::string> load_ids(const std::string& path);

void save_embeddings(const Corpus& corpus, const std::string& path);
Corpus load_embeddings(const std::string& path);

void save_queries(const QuerySet& queries, const std::string& path);
QuerySet load_queries(const std::string& path);

// Judgments, TSV rows "query_id<TAB>doc_id<TAB>relevance" with non-negative
// integer relevance. Lines starting with '#' and blank lines are skipped.
Qrels load_qrels(const std::string& path);
void save_qrels(const Qrels& qrels, const std::string& path);

// Ranked run, TSV rows "query_id<TAB>doc_id<TAB>rank<TAB>score" with 1-based
// contiguous ranks per query and non-increasing scores. Scores are printed
// with %.9g, which round-trips float32 exactly.
void save_run(const RunResult& run, const std::string& path);
RunResult load_run(const std::string& path);

// float formatting used by every text artifact
std::string format_f32(float v);  // %.9g
std::string format_f64(double v); // %.17g

bool file_exists(const std::string& path);

} // namespace jtr
