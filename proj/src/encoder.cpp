#include "jtr/encoder.hpp"

#include <cmath>
#include <cstring>

#include "bytes.hpp"
#include "jtr/error.hpp"

namespace jtr {

namespace {

constexpr char kMagic[4] = {'J', 'T', 'R', 'E'};
constexpr uint32_t kVersion = 1;

} // namespace

QueryEncoder::QueryEncoder(Matrix weight, std::vector<float> bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {
    if (weight_.rows() == 0 || weight_.cols() == 0) {
        raise(ErrorCode::ShapeMismatch, "encoder weight must be non-empty");
    }
    if (bias_.size() != weight_.rows()) {
        raise(ErrorCode::ShapeMismatch, "encoder bias has " + std::to_string(bias_.size()) + " entries for " +
                                            std::to_string(weight_.rows()) + " output rows");
    }
    if (!weight_.all_finite()) raise(ErrorCode::NonFiniteValue, "encoder weight is not finite");
    for (float v : bias_) {
        if (!std::isfinite(v)) raise(ErrorCode::NonFiniteValue, "encoder bias is not finite");
    }
}

QueryEncoder QueryEncoder::identity(uint32_t dim) {
    if (dim == 0) raise(ErrorCode::ConfigError, "encoder dimension must be positive");
    Matrix w(dim, dim);
    for (uint32_t i = 0; i < dim; i++) w.at(i, i) = 1.0f;
    return QueryEncoder(std::move(w), std::vector<float>(dim, 0.0f));
}

std::vector<float> QueryEncoder::encode(const float* features, size_t feature_dim) const {
    if (feature_dim != weight_.cols()) {
        raise(ErrorCode::DimensionMismatch, "encoder expects " + std::to_string(weight_.cols()) +
                                                " features, got " + std::to_string(feature_dim));
    }
    std::vector<float> out(weight_.rows());
    for (size_t i = 0; i < weight_.rows(); i++) {
        double acc = double(bias_[i]);
        const float* w = weight_.row(i);
        for (size_t j = 0; j < feature_dim; j++) acc += double(w[j]) * double(features[j]);
        out[i] = float(acc);
    }
    return out;
}

std::vector<float> QueryEncoder::encode(const std::vector<float>& features) const {
    return encode(features.data(), features.size());
}

void save_encoder(const QueryEncoder& enc, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    bytes::put_u32(out, kVersion);
    bytes::put_u32(out, enc.out_dim());
    bytes::put_u32(out, enc.in_dim());
    for (float v : enc.weight().values()) bytes::put_f32(out, v);
    for (float v : enc.bias()) bytes::put_f32(out, v);
    bytes::write_file(path, out);
}

QueryEncoder load_encoder(const std::string& path) {
    std::string raw = bytes::read_file(path);
    bytes::Reader r(raw, path);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) raise(ErrorCode::MagicMismatch, path + " is not an encoder file");
    uint32_t version = r.u32();
    if (version != kVersion) raise(ErrorCode::VersionUnsupported, path + " has version " + std::to_string(version));
    uint32_t out_dim = r.u32();
    uint32_t in_dim = r.u32();
    if (uint64_t(out_dim) * in_dim > r.remaining() / 4) {
        raise(ErrorCode::TruncatedFile, path + " header claims an implausible weight size");
    }
    Matrix w(out_dim, in_dim);
    for (float& v : w.values()) {
        v = r.f32();
        if (!std::isfinite(v)) raise(ErrorCode::NonFiniteValue, path + " weight is not finite");
    }
    std::vector<float> bias(out_dim);
    for (float& v : bias) {
        v = r.f32();
        if (!std::isfinite(v)) raise(ErrorCode::NonFiniteValue, path + " bias is not finite");
    }
    if (!r.done()) raise(ErrorCode::TruncatedFile, path + " has " + std::to_string(r.remaining()) + " trailing bytes");
    return QueryEncoder(std::move(w), std::move(bias));
}

} // namespace jtr
