#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jtr/types.hpp"

namespace jtr {

// Affine map from raw query features to the embedding space the tree is
// scored in: phi(q) = W q + bias. Starts as the identity so an untrained
// encoder scores queries directly against document embeddings; training
// moves W and bias jointly with the node embeddings.
class QueryEncoder {
public:
    QueryEncoder() = default;
    QueryEncoder(Matrix weight, std::vector<float> bias);
    static QueryEncoder identity(uint32_t dim);

    uint32_t in_dim() const { return uint32_t(weight_.cols()); }
    uint32_t out_dim() const { return uint32_t(weight_.rows()); }

    // f32 result accumulated in f64; the one encoding path used everywhere
    std::vector<float> encode(const float* features, size_t feature_dim) const;
    std::vector<float> encode(const std::vector<float>& features) const;

    Matrix& weight() { return weight_; }
    const Matrix& weight() const { return weight_; }
    std::vector<float>& bias() { return bias_; }
    const std::vector<float>& bias() const { return bias_; }

private:
    Matrix weight_; // out_dim x in_dim
    std::vector<float> bias_;
};

// Encoder file, little-endian: magic "JTRE" | u32 version=1 | u32 out_dim
// | u32 in_dim | f32 weight row-major | f32 bias
void save_encoder(const QueryEncoder& enc, const std::string& path);
QueryEncoder load_encoder(const std::string& path);

} // namespace jtr
