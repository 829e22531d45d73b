#include "jtr/training.hpp"

#include <algorithm>
#include <cmath>

#include "jtr/error.hpp"
#include "jtr/io.hpp"

namespace jtr {

namespace {

// phi(q) = W q + bias, all accumulation in f64
std::vector<double> encode_f64(const QueryEncoder& enc, const float* features, size_t feature_dim) {
    if (feature_dim != enc.in_dim()) {
        raise(ErrorCode::DimensionMismatch, "encoder expects " + std::to_string(enc.in_dim()) + " features, got " +
                                                std::to_string(feature_dim));
    }
    std::vector<double> out(enc.out_dim());
    for (size_t i = 0; i < enc.out_dim(); i++) {
        double acc = double(enc.bias()[i]);
        const float* w = enc.weight().row(i);
        for (size_t j = 0; j < feature_dim; j++) acc += double(w[j]) * double(features[j]);
        out[i] = acc;
    }
    return out;
}

double dot_fd(const std::vector<double>& q, const std::vector<float>& e) {
    double acc = 0.0;
    for (size_t i = 0; i < q.size(); i++) acc += q[i] * double(e[i]);
    return acc;
}

// loss and, on request, gradients for one instance; the single code path
// behind instance_loss, backward and the train loop
struct LossResult {
    double loss = 0.0;
    Gradients grads;
};

LossResult loss_core(const TrainingInstance& instance, const TreeIndex& tree, const QueryEncoder& encoder,
                     const float* query_features, size_t feature_dim, bool want_grads) {
    if (encoder.out_dim() != tree.dim()) {
        raise(ErrorCode::DimensionMismatch, "encoder output dimension " + std::to_string(encoder.out_dim()) +
                                                " against tree dimension " + std::to_string(tree.dim()));
    }
    if (instance.empty()) raise(ErrorCode::NoTrainingData, "instance has no levels");

    std::vector<double> phi = encode_f64(encoder, query_features, feature_dim);
    size_t dim = phi.size();

    LossResult res;
    std::vector<double> g_phi(dim, 0.0);
    double level_weight = 1.0 / double(instance.levels.size());

    std::vector<double> neg_scores;
    for (const LevelSample& level : instance.levels) {
        const std::vector<float>& pos = tree.embedding(level.positive);
        double s_pos = dot_fd(phi, pos);

        neg_scores.clear();
        double m = s_pos;
        for (uint64_t id : level.negatives) {
            double s = dot_fd(phi, tree.embedding(id));
            neg_scores.push_back(s);
            m = std::max(m, s);
        }

        double e_pos = std::exp(s_pos - m);
        double z = e_pos;
        for (double s : neg_scores) z += std::exp(s - m);
        res.loss += level_weight * (std::log(z) - (s_pos - m));

        if (!want_grads) continue;

        // d loss / d s_pos = p_pos - 1, d loss / d s_neg = p_neg
        double d_pos = level_weight * (e_pos / z - 1.0);
        auto add_node = [&](uint64_t id, double coeff, const std::vector<float>& emb) {
            auto [it, inserted] = res.grads.node.try_emplace(id, dim, 0.0);
            (void)inserted;
            std::vector<double>& g = it->second;
            for (size_t i = 0; i < dim; i++) {
                g[i] += coeff * phi[i];
                g_phi[i] += coeff * double(emb[i]);
            }
        };
        add_node(level.positive, d_pos, pos);
        for (size_t j = 0; j < level.negatives.size(); j++) {
            double d_neg = level_weight * (std::exp(neg_scores[j] - m) / z);
            add_node(level.negatives[j], d_neg, tree.embedding(level.negatives[j]));
        }
    }

    if (want_grads) {
        res.grads.weight.assign(dim * feature_dim, 0.0);
        res.grads.bias = g_phi;
        for (size_t i = 0; i < dim; i++) {
            double* row = res.grads.weight.data() + i * feature_dim;
            for (size_t j = 0; j < feature_dim; j++) row[j] = g_phi[i] * double(query_features[j]);
        }
    }
    return res;
}

} // namespace

TrainingInstance build_instance(const TreeIndex& tree, const QueryEncoder& encoder, const float* query_features,
                                size_t feature_dim, uint32_t positive_doc, uint32_t extra_random_negatives,
                                Rng* rng) {
    std::vector<float> phi = encoder.encode(query_features, feature_dim);
    std::vector<uint64_t> path = positive_path(tree, positive_doc, phi);

    TrainingInstance inst;
    inst.positive_doc = positive_doc;
    inst.levels.reserve(path.size());

    for (uint64_t id : path) {
        LevelSample level;
        level.positive = id;
        const TreeNode& n = tree.node(id);
        for (uint64_t sib : tree.node(uint64_t(n.parent)).children) {
            if (sib != id) level.negatives.push_back(sib);
        }
        if (extra_random_negatives > 0) {
            if (!rng) raise(ErrorCode::ConfigError, "random negatives need a generator");
            std::vector<uint64_t> pool;
            for (uint64_t cand : tree.nodes_at_level(n.level)) {
                if (cand == id) continue;
                if (std::count(level.negatives.begin(), level.negatives.end(), cand)) continue;
                pool.push_back(cand);
            }
            uint32_t want = std::min<uint32_t>(extra_random_negatives, uint32_t(pool.size()));
            for (uint32_t i = 0; i < want; i++) {
                size_t pick = i + size_t(rng->next_below(pool.size() - i));
                std::swap(pool[i], pool[pick]);
                level.negatives.push_back(pool[i]);
            }
        }
        inst.levels.push_back(std::move(level));
    }
    return inst;
}

double level_loss(const std::vector<float>& query_embedding, const std::vector<float>& positive_embedding,
                  const std::vector<std::vector<float>>& negative_embeddings) {
    if (positive_embedding.size() != query_embedding.size()) {
        raise(ErrorCode::DimensionMismatch, "positive embedding dimension mismatch");
    }
    double s_pos = dot_f64(positive_embedding.data(), query_embedding.data(), query_embedding.size());
    double m = s_pos;
    std::vector<double> scores;
    scores.reserve(negative_embeddings.size());
    for (const auto& e : negative_embeddings) {
        if (e.size() != query_embedding.size()) {
            raise(ErrorCode::DimensionMismatch, "negative embedding dimension mismatch");
        }
        double s = dot_f64(e.data(), query_embedding.data(), query_embedding.size());
        scores.push_back(s);
        m = std::max(m, s);
    }
    double z = std::exp(s_pos - m);
    for (double s : scores) z += std::exp(s - m);
    return std::log(z) - (s_pos - m);
}

double instance_loss(const TrainingInstance& instance, const TreeIndex& tree, const QueryEncoder& encoder,
                     const float* query_features, size_t feature_dim) {
    return loss_core(instance, tree, encoder, query_features, feature_dim, false).loss;
}

Gradients backward(const TrainingInstance& instance, const TreeIndex& tree, const QueryEncoder& encoder,
                   const float* query_features, size_t feature_dim) {
    return loss_core(instance, tree, encoder, query_features, feature_dim, true).grads;
}

namespace {

struct AdamSlot {
    std::vector<double> m, v;
    uint64_t t = 0;
};

// one AdamW step on a float32 parameter block; math in f64 from the stored
// f32 values, result rounded back
void adam_step(AdamSlot& slot, const double* grad, float* param, size_t n, const TrainConfig& cfg) {
    if (slot.m.empty()) {
        slot.m.assign(n, 0.0);
        slot.v.assign(n, 0.0);
    }
    slot.t++;
    double c1 = 1.0 - std::pow(cfg.beta1, double(slot.t));
    double c2 = 1.0 - std::pow(cfg.beta2, double(slot.t));
    for (size_t i = 0; i < n; i++) {
        double g = grad[i];
        slot.m[i] = cfg.beta1 * slot.m[i] + (1.0 - cfg.beta1) * g;
        slot.v[i] = cfg.beta2 * slot.v[i] + (1.0 - cfg.beta2) * g * g;
        double m_hat = slot.m[i] / c1;
        double v_hat = slot.v[i] / c2;
        double p = double(param[i]);
        p -= cfg.learning_rate * (m_hat / (std::sqrt(v_hat) + cfg.epsilon) + cfg.weight_decay * p);
        param[i] = float(p);
    }
}

} // namespace

std::string TrainReport::to_tsv() const {
    std::string out;
    for (const EpochReport& e : epochs) {
        out += std::to_string(e.epoch);
        out += '\t';
        out += format_f64(e.mean_loss);
        out += '\t';
        out += std::to_string(e.skipped);
        out += '\n';
    }
    return out;
}

TrainReport train(TreeIndex& tree, QueryEncoder& encoder, const QuerySet& queries, const Qrels& qrels,
                  const Corpus& corpus, const TrainConfig& config) {
    if (config.learning_rate <= 0.0) raise(ErrorCode::ConfigError, "learning rate must be positive");
    if (config.batch_size == 0) raise(ErrorCode::ConfigError, "batch size must be at least 1");
    if (config.epochs == 0) raise(ErrorCode::ConfigError, "epochs must be at least 1");
    if (tree.doc_count() != corpus.size()) {
        raise(ErrorCode::DimensionMismatch, "tree covers " + std::to_string(tree.doc_count()) +
                                                " docs but the corpus holds " + std::to_string(corpus.size()));
    }
    if (queries.dim() != encoder.in_dim()) {
        raise(ErrorCode::DimensionMismatch, "queries have dimension " + std::to_string(queries.dim()) +
                                                " but the encoder expects " + std::to_string(encoder.in_dim()));
    }

    // (query row, doc row) pairs in judgment order
    std::vector<std::pair<uint32_t, uint32_t>> pairs;
    for (const Judgment& j : qrels.judgments()) {
        if (j.relevance < 1) continue;
        pairs.emplace_back(queries.index_of(j.query_id), corpus.index_of(j.doc_id));
    }
    if (pairs.empty()) raise(ErrorCode::NoTrainingData, "no judgments with relevance >= 1");

    TrainReport report;
    report.pairs = pairs.size();

    Rng rng(config.seed);
    std::map<uint64_t, AdamSlot> node_slots;
    AdamSlot weight_slot, bias_slot;

    std::vector<size_t> order(pairs.size());
    for (size_t i = 0; i < order.size(); i++) order[i] = i;

    for (uint32_t epoch = 1; epoch <= config.epochs; epoch++) {
        for (size_t i = order.size(); i > 1; i--) {
            std::swap(order[i - 1], order[size_t(rng.next_below(i))]);
        }

        double loss_sum = 0.0;
        uint64_t used_total = 0, skipped = 0;

        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            size_t stop = std::min(order.size(), start + config.batch_size);

            std::map<uint64_t, std::vector<double>> node_grads;
            std::vector<double> w_grad(size_t(encoder.out_dim()) * encoder.in_dim(), 0.0);
            std::vector<double> b_grad(encoder.out_dim(), 0.0);
            uint64_t used = 0;

            for (size_t i = start; i < stop; i++) {
                auto [qi, di] = pairs[order[i]];
                const float* feat = queries.features_of(qi);
                TrainingInstance inst =
                    build_instance(tree, encoder, feat, queries.dim(), di, config.extra_random_negatives, &rng);
                if (inst.empty()) {
                    skipped++;
                    continue;
                }
                inst.query = qi;
                LossResult r = loss_core(inst, tree, encoder, feat, queries.dim(), true);
                loss_sum += r.loss;
                used++;
                for (auto& [id, g] : r.grads.node) {
                    auto [it, inserted] = node_grads.try_emplace(id, g.size(), 0.0);
                    (void)inserted;
                    for (size_t d = 0; d < g.size(); d++) it->second[d] += g[d];
                }
                for (size_t d = 0; d < w_grad.size(); d++) w_grad[d] += r.grads.weight[d];
                for (size_t d = 0; d < b_grad.size(); d++) b_grad[d] += r.grads.bias[d];
            }

            if (used == 0) continue;
            used_total += used;
            double inv = 1.0 / double(used);

            for (auto& [id, g] : node_grads) {
                for (double& v : g) v *= inv;
                adam_step(node_slots[id], g.data(), tree.embedding(id).data(), g.size(), config);
            }
            if (config.train_encoder) {
                for (double& v : w_grad) v *= inv;
                for (double& v : b_grad) v *= inv;
                adam_step(weight_slot, w_grad.data(), encoder.weight().values().data(), w_grad.size(), config);
                adam_step(bias_slot, b_grad.data(), encoder.bias().data(), b_grad.size(), config);
            }
            report.optimizer_steps++;
        }

        report.epochs.push_back({epoch, used_total ? loss_sum / double(used_total) : 0.0, used_total, skipped});
    }

    for (const TreeNode& n : tree.nodes()) {
        for (float v : n.embedding) {
            if (!std::isfinite(v)) raise(ErrorCode::NonFiniteValue, "training produced a non-finite node embedding");
        }
    }
    if (!encoder.weight().all_finite()) raise(ErrorCode::NonFiniteValue, "training produced a non-finite weight");
    for (float v : encoder.bias()) {
        if (!std::isfinite(v)) raise(ErrorCode::NonFiniteValue, "training produced a non-finite bias");
    }
    return report;
}

} // namespace jtr
