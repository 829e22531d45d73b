#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jtr/rng.hpp"
#include "jtr/types.hpp"

namespace jtr {

struct TreeNode {
    uint64_t node_id = 0;
    int64_t parent = -1; // -1 on the root
    uint32_t level = 0;  // root is 0
    std::vector<uint64_t> children;
    std::vector<float> embedding;

    bool is_leaf() const { return children.empty(); }
};

// Hierarchy over the corpus. Nodes are numbered densely in breadth-first
// order, the root is node 0. Internal nodes carry exactly branch_factor
// children and no documents; leaves carry document index lists. After
// reclustering a document may live in several leaves and a leaf may be
// empty, but every document stays reachable through at least one leaf.
//
// Node embeddings are trainable parameters, so non-const access is exposed;
// nothing here is safe for concurrent mutation.
class TreeIndex {
public:
    TreeIndex() = default;

    // recursive k-means construction; splits every node holding more than
    // leaf_capacity documents into branch_factor children
    static TreeIndex build(const Corpus& corpus, uint32_t branch_factor, uint32_t leaf_capacity, Rng& rng,
                           uint32_t kmeans_iters = 25);

    // assemble from explicit parts (fixtures, loaders); validates the full
    // structural contract and raises StructureInvalid on any breach
    static TreeIndex from_parts(uint32_t branch_factor, uint32_t leaf_capacity, uint32_t dim,
                                std::vector<TreeNode> nodes,
                                std::vector<std::pair<uint64_t, std::vector<uint32_t>>> leaf_docs);

    size_t num_nodes() const { return nodes_.size(); }
    const TreeNode& node(uint64_t id) const;
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::vector<float>& embedding(uint64_t id);
    const std::vector<float>& embedding(uint64_t id) const;

    uint32_t branch_factor() const { return branch_factor_; }
    uint32_t leaf_capacity() const { return leaf_capacity_; }
    uint32_t dim() const { return dim_; }
    uint32_t depth() const { return depth_; } // deepest level
    size_t doc_count() const { return doc_leaves_.size(); }

    const std::vector<uint64_t>& leaf_ids() const { return leaf_ids_; } // ascending
    size_t num_leaves() const { return leaf_ids_.size(); }
    // dense column for a leaf in routing/assignment matrices
    uint32_t leaf_column(uint64_t node_id) const;
    const std::vector<uint32_t>& docs_of_leaf(uint64_t node_id) const;
    const std::vector<uint64_t>& leaves_of_doc(uint32_t doc) const; // ascending
    const std::vector<uint64_t>& nodes_at_level(uint32_t level) const;
    size_t total_leaf_doc_slots() const { return total_leaf_doc_slots_; }

    // install a reclustered assignment; the keys must be exactly the current
    // leaves and the union of the lists must cover every document
    void set_leaf_docs(std::vector<std::pair<uint64_t, std::vector<uint32_t>>> new_docs);

private:
    void index_structure(); // derived tables + validation

    uint32_t branch_factor_ = 0;
    uint32_t leaf_capacity_ = 0;
    uint32_t dim_ = 0;
    uint32_t depth_ = 0;
    size_t total_leaf_doc_slots_ = 0;
    std::vector<TreeNode> nodes_;
    std::vector<std::vector<uint32_t>> leaf_docs_; // indexed by node id, empty on internals
    std::vector<uint64_t> leaf_ids_;
    std::vector<uint32_t> leaf_column_; // node id -> column, UINT32_MAX on internals
    std::vector<std::vector<uint64_t>> doc_leaves_;
    std::vector<std::vector<uint64_t>> nodes_by_level_;
};

// inner product between a node embedding and an encoded query
float node_score(const TreeNode& node, const std::vector<float>& query_embedding);

// ancestors of the document's best-scoring leaf under the given query
// embedding, root excluded, ordered from just below the root down to the
// leaf itself; empty when the root is the only node
std::vector<uint64_t> positive_path(const TreeIndex& tree, uint32_t doc, const std::vector<float>& query_embedding);

// Tree file, little-endian:
//
//   magic "JTRT" | u32 version=1 | u32 branch_factor | u32 leaf_capacity
//   | u32 dim | u64 node_count
//   | per node: u64 node_id, i64 parent (-1 none), u32 level,
//               u32 child_count, u64 x child_count children, f32 x dim
//   | u64 leaf_count
//   | per leaf: u64 node_id, u64 doc_count, u64 x doc_count doc indices
void save_tree(const TreeIndex& tree, const std::string& path);
TreeIndex load_tree(const std::string& path);

} // namespace jtr
