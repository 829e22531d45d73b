#include "jtr/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>

#include "bytes.hpp"
#include "jtr/error.hpp"
#include "jtr/kmeans.hpp"

namespace jtr {

namespace {

constexpr char kMagic[4] = {'J', 'T', 'R', 'T'};
constexpr uint32_t kVersion = 1;

} // namespace

const TreeNode& TreeIndex::node(uint64_t id) const {
    if (id >= nodes_.size()) raise(ErrorCode::StructureInvalid, "node id " + std::to_string(id) + " out of range");
    return nodes_[id];
}

std::vector<float>& TreeIndex::embedding(uint64_t id) {
    if (id >= nodes_.size()) raise(ErrorCode::StructureInvalid, "node id " + std::to_string(id) + " out of range");
    return nodes_[id].embedding;
}

const std::vector<float>& TreeIndex::embedding(uint64_t id) const { return node(id).embedding; }

uint32_t TreeIndex::leaf_column(uint64_t node_id) const {
    if (node_id >= leaf_column_.size() || leaf_column_[node_id] == UINT32_MAX) {
        raise(ErrorCode::StructureInvalid, "node " + std::to_string(node_id) + " is not a leaf");
    }
    return leaf_column_[node_id];
}

const std::vector<uint32_t>& TreeIndex::docs_of_leaf(uint64_t node_id) const {
    leaf_column(node_id); // leaf check
    return leaf_docs_[node_id];
}

const std::vector<uint64_t>& TreeIndex::leaves_of_doc(uint32_t doc) const {
    if (doc >= doc_leaves_.size()) raise(ErrorCode::DocNotIndexed, "doc " + std::to_string(doc) + " not in the tree");
    return doc_leaves_[doc];
}

const std::vector<uint64_t>& TreeIndex::nodes_at_level(uint32_t level) const {
    static const std::vector<uint64_t> empty;
    return level < nodes_by_level_.size() ? nodes_by_level_[level] : empty;
}

// rebuild every derived table and check the structural contract; shared by
// construction, from_parts, load and set_leaf_docs
void TreeIndex::index_structure() {
    if (nodes_.empty()) raise(ErrorCode::StructureInvalid, "tree has no nodes");
    if (branch_factor_ < 2) raise(ErrorCode::ConfigError, "branch factor must be at least 2");
    if (leaf_capacity_ < 1) raise(ErrorCode::ConfigError, "leaf capacity must be at least 1");
    if (dim_ == 0) raise(ErrorCode::ConfigError, "dimension must be positive");

    depth_ = 0;
    leaf_ids_.clear();
    leaf_column_.assign(nodes_.size(), UINT32_MAX);
    nodes_by_level_.clear();

    for (size_t i = 0; i < nodes_.size(); i++) {
        const TreeNode& n = nodes_[i];
        if (n.node_id != i) {
            raise(ErrorCode::StructureInvalid, "node ids must be dense, found " + std::to_string(n.node_id) +
                                                   " at position " + std::to_string(i));
        }
        if (n.embedding.size() != dim_) {
            raise(ErrorCode::StructureInvalid, "node " + std::to_string(i) + " embedding has wrong dimension");
        }
        for (float v : n.embedding) {
            if (!std::isfinite(v)) {
                raise(ErrorCode::NonFiniteValue, "node " + std::to_string(i) + " embedding is not finite");
            }
        }
        if (i == 0) {
            if (n.parent != -1 || n.level != 0) raise(ErrorCode::StructureInvalid, "node 0 must be the level-0 root");
        } else {
            if (n.parent < 0 || uint64_t(n.parent) >= nodes_.size()) {
                raise(ErrorCode::StructureInvalid, "node " + std::to_string(i) + " has an invalid parent");
            }
            const TreeNode& p = nodes_[size_t(n.parent)];
            if (n.level != p.level + 1) {
                raise(ErrorCode::StructureInvalid, "node " + std::to_string(i) + " level does not follow its parent");
            }
            if (!std::count(p.children.begin(), p.children.end(), n.node_id)) {
                raise(ErrorCode::StructureInvalid, "node " + std::to_string(i) + " missing from its parent's children");
            }
        }
        if (!n.children.empty() && n.children.size() != branch_factor_) {
            raise(ErrorCode::StructureInvalid, "internal node " + std::to_string(i) + " has " +
                                                   std::to_string(n.children.size()) + " children, expected " +
                                                   std::to_string(branch_factor_));
        }
        for (uint64_t c : n.children) {
            if (c >= nodes_.size() || nodes_[size_t(c)].parent != int64_t(i)) {
                raise(ErrorCode::StructureInvalid, "node " + std::to_string(i) + " lists a child that disowns it");
            }
        }
        depth_ = std::max(depth_, n.level);
        if (nodes_by_level_.size() <= n.level) nodes_by_level_.resize(n.level + 1);
        nodes_by_level_[n.level].push_back(n.node_id);
        if (n.is_leaf()) {
            leaf_column_[i] = uint32_t(leaf_ids_.size());
            leaf_ids_.push_back(n.node_id);
        }
    }

    if (leaf_docs_.size() != nodes_.size()) raise(ErrorCode::StructureInvalid, "leaf document table has wrong size");

    size_t max_doc = 0;
    bool any_doc = false;
    total_leaf_doc_slots_ = 0;
    for (size_t i = 0; i < nodes_.size(); i++) {
        const auto& docs = leaf_docs_[i];
        if (!nodes_[i].is_leaf() && !docs.empty()) {
            raise(ErrorCode::StructureInvalid, "internal node " + std::to_string(i) + " carries documents");
        }
        total_leaf_doc_slots_ += docs.size();
        for (size_t j = 0; j < docs.size(); j++) {
            if (j > 0 && docs[j] <= docs[j - 1]) {
                raise(ErrorCode::StructureInvalid, "leaf " + std::to_string(i) + " documents must strictly ascend");
            }
            max_doc = std::max(max_doc, size_t(docs[j]));
            any_doc = true;
        }
    }
    if (!any_doc) raise(ErrorCode::StructureInvalid, "tree holds no documents");

    doc_leaves_.assign(max_doc + 1, {});
    for (uint64_t leaf : leaf_ids_) {
        for (uint32_t d : leaf_docs_[size_t(leaf)]) doc_leaves_[d].push_back(leaf);
    }
    for (size_t d = 0; d <= max_doc; d++) {
        if (doc_leaves_[d].empty()) {
            raise(ErrorCode::StructureInvalid, "document " + std::to_string(d) + " is not reachable from any leaf");
        }
    }
}

TreeIndex TreeIndex::build(const Corpus& corpus, uint32_t branch_factor, uint32_t leaf_capacity, Rng& rng,
                           uint32_t kmeans_iters) {
    if (branch_factor < 2) raise(ErrorCode::ConfigError, "branch factor must be at least 2");
    if (leaf_capacity < 1) raise(ErrorCode::ConfigError, "leaf capacity must be at least 1");

    TreeIndex tree;
    tree.branch_factor_ = branch_factor;
    tree.leaf_capacity_ = leaf_capacity;
    tree.dim_ = uint32_t(corpus.dim());

    size_t n = corpus.size(), dim = corpus.dim();
    const Matrix& emb = corpus.embeddings();

    struct Pending {
        uint64_t id;
        int64_t parent;
        uint32_t level;
        std::vector<uint32_t> docs;
        std::vector<float> embedding;
    };

    std::vector<float> root_emb(dim);
    {
        std::vector<double> sum(dim, 0.0);
        for (size_t i = 0; i < n; i++) {
            const float* row = emb.row(i);
            for (size_t j = 0; j < dim; j++) sum[j] += row[j];
        }
        for (size_t j = 0; j < dim; j++) root_emb[j] = float(sum[j] / double(n));
    }

    std::vector<uint32_t> all_docs(n);
    for (size_t i = 0; i < n; i++) all_docs[i] = uint32_t(i);

    std::deque<Pending> queue;
    queue.push_back({0, -1, 0, std::move(all_docs), std::move(root_emb)});
    uint64_t next_id = 1;

    tree.nodes_.clear();
    tree.leaf_docs_.clear();

    while (!queue.empty()) {
        Pending p = std::move(queue.front());
        queue.pop_front();

        TreeNode node;
        node.node_id = p.id;
        node.parent = p.parent;
        node.level = p.level;
        node.embedding = std::move(p.embedding);

        if (p.docs.size() > leaf_capacity) {
            // gather the member rows and split them
            Matrix sub(p.docs.size(), dim);
            for (size_t i = 0; i < p.docs.size(); i++) {
                std::memcpy(sub.row(i), emb.row(p.docs[i]), dim * sizeof(float));
            }
            KMeansResult km = kmeans(sub, branch_factor, kmeans_iters, rng);

            std::vector<std::vector<uint32_t>> parts(branch_factor);
            for (size_t i = 0; i < p.docs.size(); i++) parts[km.assignment[i]].push_back(p.docs[i]);

            for (uint32_t c = 0; c < branch_factor; c++) {
                uint64_t child_id = next_id++;
                node.children.push_back(child_id);
                std::vector<float> child_emb(km.centroids.row(c), km.centroids.row(c) + dim);
                queue.push_back({child_id, int64_t(p.id), p.level + 1, std::move(parts[c]), std::move(child_emb)});
            }
            tree.nodes_.push_back(std::move(node));
            tree.leaf_docs_.emplace_back();
        } else {
            tree.nodes_.push_back(std::move(node));
            tree.leaf_docs_.push_back(std::move(p.docs)); // ascending by construction
        }
    }

    tree.index_structure();
    return tree;
}

TreeIndex TreeIndex::from_parts(uint32_t branch_factor, uint32_t leaf_capacity, uint32_t dim,
                                std::vector<TreeNode> nodes,
                                std::vector<std::pair<uint64_t, std::vector<uint32_t>>> leaf_docs) {
    TreeIndex tree;
    tree.branch_factor_ = branch_factor;
    tree.leaf_capacity_ = leaf_capacity;
    tree.dim_ = dim;
    tree.nodes_ = std::move(nodes);
    tree.leaf_docs_.assign(tree.nodes_.size(), {});
    for (auto& [id, docs] : leaf_docs) {
        if (id >= tree.nodes_.size()) raise(ErrorCode::StructureInvalid, "leaf record for unknown node");
        if (!tree.nodes_[size_t(id)].is_leaf()) {
            raise(ErrorCode::StructureInvalid, "leaf record for internal node " + std::to_string(id));
        }
        tree.leaf_docs_[size_t(id)] = std::move(docs);
    }
    tree.index_structure();
    return tree;
}

void TreeIndex::set_leaf_docs(std::vector<std::pair<uint64_t, std::vector<uint32_t>>> new_docs) {
    if (new_docs.size() != leaf_ids_.size()) {
        raise(ErrorCode::ShapeMismatch, "expected one document list per leaf");
    }
    size_t n_docs = doc_leaves_.size();
    std::vector<std::vector<uint32_t>> staged(nodes_.size());
    std::vector<char> seen(nodes_.size(), 0);
    for (auto& [id, docs] : new_docs) {
        if (id >= nodes_.size() || !nodes_[size_t(id)].is_leaf()) {
            raise(ErrorCode::ShapeMismatch, "node " + std::to_string(id) + " is not a leaf");
        }
        if (seen[size_t(id)]) raise(ErrorCode::ShapeMismatch, "leaf " + std::to_string(id) + " listed twice");
        seen[size_t(id)] = 1;
        for (uint32_t d : docs) {
            if (d >= n_docs) raise(ErrorCode::ShapeMismatch, "doc " + std::to_string(d) + " out of range");
        }
        staged[size_t(id)] = std::move(docs);
    }
    std::vector<char> covered(n_docs, 0);
    for (const auto& docs : staged) {
        for (uint32_t d : docs) covered[d] = 1;
    }
    for (size_t d = 0; d < n_docs; d++) {
        if (!covered[d]) {
            raise(ErrorCode::StructureInvalid, "document " + std::to_string(d) + " lost by the new assignment");
        }
    }
    leaf_docs_ = std::move(staged);
    index_structure();
}

float node_score(const TreeNode& node, const std::vector<float>& query_embedding) {
    if (node.embedding.size() != query_embedding.size()) {
        raise(ErrorCode::DimensionMismatch, "query dimension " + std::to_string(query_embedding.size()) +
                                                " against node dimension " + std::to_string(node.embedding.size()));
    }
    return dot_f32(node.embedding.data(), query_embedding.data(), query_embedding.size());
}

std::vector<uint64_t> positive_path(const TreeIndex& tree, uint32_t doc, const std::vector<float>& query_embedding) {
    const std::vector<uint64_t>& leaves = tree.leaves_of_doc(doc);
    uint64_t best_leaf = leaves[0];
    float best = node_score(tree.node(leaves[0]), query_embedding);
    for (size_t i = 1; i < leaves.size(); i++) {
        float s = node_score(tree.node(leaves[i]), query_embedding);
        if (s > best) {
            best = s;
            best_leaf = leaves[i];
        }
    }
    std::vector<uint64_t> path;
    for (uint64_t id = best_leaf; id != 0; id = uint64_t(tree.node(id).parent)) path.push_back(id);
    std::reverse(path.begin(), path.end());
    return path;
}

void save_tree(const TreeIndex& tree, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    bytes::put_u32(out, kVersion);
    bytes::put_u32(out, tree.branch_factor());
    bytes::put_u32(out, tree.leaf_capacity());
    bytes::put_u32(out, tree.dim());
    bytes::put_u64(out, tree.num_nodes());
    for (const TreeNode& n : tree.nodes()) {
        bytes::put_u64(out, n.node_id);
        bytes::put_i64(out, n.parent);
        bytes::put_u32(out, n.level);
        bytes::put_u32(out, uint32_t(n.children.size()));
        for (uint64_t c : n.children) bytes::put_u64(out, c);
        for (float v : n.embedding) bytes::put_f32(out, v);
    }
    bytes::put_u64(out, tree.num_leaves());
    for (uint64_t leaf : tree.leaf_ids()) {
        const auto& docs = tree.docs_of_leaf(leaf);
        bytes::put_u64(out, leaf);
        bytes::put_u64(out, docs.size());
        for (uint32_t d : docs) bytes::put_u64(out, d);
    }
    bytes::write_file(path, out);
}

TreeIndex load_tree(const std::string& path) {
    std::string raw = bytes::read_file(path);
    bytes::Reader r(raw, path);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) raise(ErrorCode::MagicMismatch, path + " is not a tree file");
    uint32_t version = r.u32();
    if (version != kVersion) raise(ErrorCode::VersionUnsupported, path + " has version " + std::to_string(version));
    uint32_t branch_factor = r.u32();
    uint32_t leaf_capacity = r.u32();
    uint32_t dim = r.u32();
    uint64_t node_count = r.u64();
    if (node_count > r.remaining()) raise(ErrorCode::TruncatedFile, path + " header claims too many nodes");

    std::vector<TreeNode> nodes;
    nodes.reserve(size_t(node_count));
    for (uint64_t i = 0; i < node_count; i++) {
        TreeNode n;
        n.node_id = r.u64();
        n.parent = r.i64();
        n.level = r.u32();
        uint32_t child_count = r.u32();
        if (child_count > r.remaining() / 8) raise(ErrorCode::TruncatedFile, path + " child list runs past the end");
        n.children.resize(child_count);
        for (uint32_t c = 0; c < child_count; c++) n.children[c] = r.u64();
        n.embedding.resize(dim);
        for (uint32_t j = 0; j < dim; j++) n.embedding[j] = r.f32();
        nodes.push_back(std::move(n));
    }

    uint64_t leaf_count = r.u64();
    std::vector<std::pair<uint64_t, std::vector<uint32_t>>> leaf_docs;
    leaf_docs.reserve(size_t(leaf_count));
    for (uint64_t i = 0; i < leaf_count; i++) {
        uint64_t id = r.u64();
        uint64_t doc_count = r.u64();
        if (doc_count > r.remaining() / 8) raise(ErrorCode::TruncatedFile, path + " doc list runs past the end");
        std::vector<uint32_t> docs(static_cast<size_t>(doc_count));
        for (uint64_t d = 0; d < doc_count; d++) {
            uint64_t v = r.u64();
            if (v > UINT32_MAX) raise(ErrorCode::StructureInvalid, path + " doc index out of range");
            docs[size_t(d)] = uint32_t(v);
        }
        leaf_docs.emplace_back(id, std::move(docs));
    }
    if (!r.done()) raise(ErrorCode::TruncatedFile, path + " has " + std::to_string(r.remaining()) + " trailing bytes");

    TreeIndex tree = TreeIndex::from_parts(branch_factor, leaf_capacity, dim, std::move(nodes), std::move(leaf_docs));
    return tree;
}

} // namespace jtr
