#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "jtr/rng.hpp"
#include "jtr/tree.hpp"
#include "jtr/types.hpp"

namespace jtr_test {

// scratch directory removed on destruction
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("jtr_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size()));
}

inline jtr::Matrix random_matrix(size_t rows, size_t cols, jtr::Rng& rng, float scale = 1.0f) {
    jtr::Matrix m(rows, cols);
    for (size_t i = 0; i < rows; i++) {
        for (size_t j = 0; j < cols; j++) m.at(i, j) = float(rng.next_gaussian()) * scale;
    }
    return m;
}

inline std::vector<std::string> numbered_ids(const std::string& prefix, size_t n) {
    std::vector<std::string> ids(n);
    for (size_t i = 0; i < n; i++) ids[i] = prefix + std::to_string(i);
    return ids;
}

inline jtr::TreeNode make_node(uint64_t id, int64_t parent, uint32_t level, std::vector<uint64_t> children,
                               std::vector<float> emb) {
    jtr::TreeNode n;
    n.node_id = id;
    n.parent = parent;
    n.level = level;
    n.children = std::move(children);
    n.embedding = std::move(emb);
    return n;
}

// perfect binary tree: root 0, internals 1-2, leaves 3-6 holding two docs
// each; embeddings chosen so x > 0 routes left and y breaks leaf ties
inline jtr::TreeIndex two_level_fixture() {
    std::vector<jtr::TreeNode> nodes;
    nodes.push_back(make_node(0, -1, 0, {1, 2}, {0, 0}));
    nodes.push_back(make_node(1, 0, 1, {3, 4}, {1, 0}));
    nodes.push_back(make_node(2, 0, 1, {5, 6}, {-1, 0}));
    nodes.push_back(make_node(3, 1, 2, {}, {2, 1}));
    nodes.push_back(make_node(4, 1, 2, {}, {2, -1}));
    nodes.push_back(make_node(5, 2, 2, {}, {-2, 1}));
    nodes.push_back(make_node(6, 2, 2, {}, {-2, -1}));
    return jtr::TreeIndex::from_parts(2, 2, 2, std::move(nodes),
                                      {{3, {0, 1}}, {4, {2, 3}}, {5, {4, 5}}, {6, {6, 7}}});
}

} // namespace jtr_test
