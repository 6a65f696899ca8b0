#include "qrouter/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qrouter/eval.hpp"

namespace qrouter {
namespace {

struct ForwardCache {
    std::vector<double> hidden;  // tanh activations before dropout
    std::vector<double> dropped;  // after dropout
    std::array<double, 2> logits{};
};

void forward_into(const HeadWeights& head, std::span<const double> embedding,
                  const std::array<double, kNumFeatures>& features, const DropoutMask& mask, ForwardCache& cache) {
    const std::size_t dim = embedding.size();
    if (dim + kNumFeatures != head.input_dim) {
        throw std::invalid_argument("forward: input width " + std::to_string(dim + kNumFeatures) +
                                    " does not match head input " + std::to_string(head.input_dim));
    }
    if (!mask.empty() && mask.size() != head.hidden) throw std::invalid_argument("forward: dropout mask width");

    const std::size_t H = head.hidden;
    cache.hidden.assign(head.b1.begin(), head.b1.end());
    auto accumulate_row = [&](std::size_t i, double x) {
        if (x == 0.0) return;
        const double* row = head.w1.data() + i * H;
        for (std::size_t j = 0; j < H; ++j) cache.hidden[j] += x * row[j];
    };
    for (std::size_t i = 0; i < dim; ++i) accumulate_row(i, embedding[i]);
    for (std::size_t f = 0; f < kNumFeatures; ++f) accumulate_row(dim + f, features[f]);

    cache.dropped.resize(H);
    for (std::size_t j = 0; j < H; ++j) {
        cache.hidden[j] = std::tanh(cache.hidden[j]);
        cache.dropped[j] = mask.empty() ? cache.hidden[j] : cache.hidden[j] * mask[j];
    }
    cache.logits = {head.b2[0], head.b2[1]};
    for (std::size_t j = 0; j < H; ++j) {
        cache.logits[0] += cache.dropped[j] * head.w2[j * 2];
        cache.logits[1] += cache.dropped[j] * head.w2[j * 2 + 1];
    }
}

double input_at(std::span<const double> embedding, const std::array<double, kNumFeatures>& features, std::size_t i) {
    return i < embedding.size() ? embedding[i] : features[i - embedding.size()];
}

}  // namespace

HeadWeights HeadWeights::zeros(std::size_t input_dim, std::size_t hidden, double dropout_p) {
    HeadWeights h;
    h.input_dim = input_dim;
    h.hidden = hidden;
    h.dropout_p = dropout_p;
    h.w1.assign(input_dim * hidden, 0.0);
    h.b1.assign(hidden, 0.0);
    h.w2.assign(hidden * 2, 0.0);
    h.b2.assign(2, 0.0);
    return h;
}

HeadWeights HeadWeights::glorot(std::size_t input_dim, std::size_t hidden, double dropout_p, Rng& rng) {
    HeadWeights h = zeros(input_dim, hidden, dropout_p);
    const double a1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden));
    const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + 2));
    std::uniform_real_distribution<double> u1(-a1, a1);
    std::uniform_real_distribution<double> u2(-a2, a2);
    for (double& w : h.w1) w = u1(rng);
    for (double& w : h.w2) w = u2(rng);
    return h;
}

void HeadWeights::check_shapes() const {
    if (input_dim == 0 || hidden == 0) throw std::invalid_argument("head has zero-sized layer");
    if (w1.size() != input_dim * hidden || b1.size() != hidden || w2.size() != hidden * 2 || b2.size() != 2) {
        throw std::invalid_argument("head weight sizes do not match its shape");
    }
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw std::invalid_argument("dropout_p must be in [0, 1)");
}

DropoutMask sample_dropout_mask(std::size_t hidden, double p, Rng& rng) {
    if (p <= 0.0) return {};
    DropoutMask mask(hidden);
    std::bernoulli_distribution keep(1.0 - p);
    const double scale = 1.0 / (1.0 - p);
    for (double& m : mask) m = keep(rng) ? scale : 0.0;
    return mask;
}

std::array<double, 2> forward(const HeadWeights& head, std::span<const double> embedding,
                              const std::array<double, kNumFeatures>& features, const DropoutMask& mask) {
    ForwardCache cache;
    forward_into(head, embedding, features, mask, cache);
    return cache.logits;
}

std::array<double, 2> softmax(const std::array<double, 2>& logits) {
    const double m = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - m);
    const double e1 = std::exp(logits[1] - m);
    const double z = e0 + e1;
    return {e0 / z, e1 / z};
}

LossAndGradients loss_and_gradients(const HeadWeights& head, std::span<const Sample> batch,
                                    std::span<const DropoutMask> masks) {
    if (batch.empty()) throw std::invalid_argument("loss_and_gradients: empty batch");
    if (!masks.empty() && masks.size() != batch.size()) {
        throw std::invalid_argument("loss_and_gradients: one dropout mask per sample required");
    }
    const std::size_t H = head.hidden;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    LossAndGradients out{0.0, HeadWeights::zeros(head.input_dim, H, head.dropout_p)};
    HeadWeights& g = out.gradients;

    ForwardCache cache;
    std::vector<double> dpre(H);
    static const DropoutMask kNoMask;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const Sample& sample = batch[s];
        const DropoutMask& mask = masks.empty() ? kNoMask : masks[s];
        forward_into(head, sample.embedding, sample.features, mask, cache);

        const double m = std::max(cache.logits[0], cache.logits[1]);
        const double lse = m + std::log(std::exp(cache.logits[0] - m) + std::exp(cache.logits[1] - m));
        out.loss += (lse - cache.logits[sample.label]) * inv_n;

        auto p = softmax(cache.logits);
        std::array<double, 2> dlogit{p[0] * inv_n, p[1] * inv_n};
        dlogit[sample.label] -= inv_n;

        g.b2[0] += dlogit[0];
        g.b2[1] += dlogit[1];
        for (std::size_t j = 0; j < H; ++j) {
            g.w2[j * 2] += cache.dropped[j] * dlogit[0];
            g.w2[j * 2 + 1] += cache.dropped[j] * dlogit[1];
            double dd = head.w2[j * 2] * dlogit[0] + head.w2[j * 2 + 1] * dlogit[1];
            if (!mask.empty()) dd *= mask[j];
            dpre[j] = dd * (1.0 - cache.hidden[j] * cache.hidden[j]);
            g.b1[j] += dpre[j];
        }
        for (std::size_t i = 0; i < head.input_dim; ++i) {
            const double x = input_at(sample.embedding, sample.features, i);
            if (x == 0.0) continue;
            double* row = g.w1.data() + i * H;
            for (std::size_t j = 0; j < H; ++j) row[j] += x * dpre[j];
        }
    }
    return out;
}

std::vector<std::size_t> weighted_sample(std::span<const int> labels, std::size_t batch_size, Rng& rng) {
    std::size_t counts[2] = {0, 0};
    for (int l : labels) {
        if (l != 0 && l != 1) throw std::invalid_argument("weighted_sample: labels must be 0 or 1");
        ++counts[l];
    }
    if (counts[0] == 0 || counts[1] == 0) {
        throw std::invalid_argument("weighted_sample: both classes must be present");
    }
    std::vector<double> weights(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) weights[i] = 1.0 / static_cast<double>(counts[labels[i]]);
    std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
    std::vector<std::size_t> out(batch_size);
    for (auto& idx : out) idx = dist(rng);
    return out;
}

AdamOptimizer::AdamOptimizer(const HeadWeights& shape, double learning_rate, double beta1, double beta2,
                             double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
    auto init = [](Moments& mom, std::size_t n) {
        mom.m.assign(n, 0.0);
        mom.v.assign(n, 0.0);
    };
    init(w1_, shape.w1.size());
    init(b1_, shape.b1.size());
    init(w2_, shape.w2.size());
    init(b2_, shape.b2.size());
}

void AdamOptimizer::update(std::vector<double>& param, const std::vector<double>& grad, Moments& mom) const {
    const double c1 = 1.0 - bias1_;
    const double c2 = 1.0 - bias2_;
    for (std::size_t i = 0; i < param.size(); ++i) {
        mom.m[i] = beta1_ * mom.m[i] + (1.0 - beta1_) * grad[i];
        mom.v[i] = beta2_ * mom.v[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double mhat = mom.m[i] / c1;
        const double vhat = mom.v[i] / c2;
        param[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

void AdamOptimizer::step(HeadWeights& head, const HeadWeights& grads) {
    ++t_;
    bias1_ *= beta1_;
    bias2_ *= beta2_;
    update(head.w1, grads.w1, w1_);
    update(head.b1, grads.b1, b1_);
    update(head.w2, grads.w2, w2_);
    update(head.b2, grads.b2, b2_);
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (epochs == 0) throw std::invalid_argument("epochs must be positive");
    if (eval_every == 0) throw std::invalid_argument("eval_every must be >= 1");
    if (hidden == 0) throw std::invalid_argument("hidden must be positive");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw std::invalid_argument("dropout_p must be in [0, 1)");
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must be in (0, 1)");
}

void ClassifierModel::check_consistency() const {
    head.check_shapes();
    if (embedder.dim + kNumFeatures != head.input_dim) {
        throw std::invalid_argument("model embedder dim " + std::to_string(embedder.dim) +
                                    " inconsistent with head input " + std::to_string(head.input_dim));
    }
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must be in (0, 1)");
}

namespace {

struct PreparedSplit {
    std::vector<Embedding> embeddings;
    std::vector<std::array<double, kNumFeatures>> raw_features;
    std::vector<Sample> samples;
    std::vector<int> labels;
};

PreparedSplit prepare(const std::vector<DatasetRecord>& records, const Embedder& embedder, const char* split) {
    PreparedSplit p;
    std::vector<std::string> texts;
    texts.reserve(records.size());
    for (const auto& r : records) {
        if (!r.label) throw std::invalid_argument(std::string(split) + " record \"" + r.id + "\" has no label");
        texts.push_back(r.query.text());
        p.raw_features.push_back(compute_features(r.query).as_array());
        p.labels.push_back(*r.label == AmbiguityLabel::ambiguous ? 1 : 0);
    }
    p.embeddings = embedder.embed_batch(texts);
    return p;
}

void finalize_samples(PreparedSplit& p, const ScalerParams& scaler) {
    p.samples.clear();
    p.samples.reserve(p.labels.size());
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
        p.samples.push_back(Sample{p.embeddings[i].values, apply_scaler(scaler, p.raw_features[i]), p.labels[i]});
    }
}

void require_both_classes(const std::vector<int>& labels, const char* split) {
    bool has[2] = {false, false};
    for (int l : labels) has[l] = true;
    if (!has[0] || !has[1]) throw std::invalid_argument(std::string(split) + " split must contain both classes");
}

EvaluationPoint evaluate(const HeadWeights& head, const PreparedSplit& split, double threshold, std::size_t step) {
    std::vector<AmbiguityLabel> preds, gold;
    preds.reserve(split.samples.size());
    gold.reserve(split.samples.size());
    double loss = 0.0;
    for (const auto& s : split.samples) {
        auto logits = forward(head, s.embedding, s.features);
        auto p = softmax(logits);
        loss -= std::log(std::max(p[s.label], 1e-300));
        preds.push_back(p[1] >= threshold ? AmbiguityLabel::ambiguous : AmbiguityLabel::clear);
        gold.push_back(s.label ? AmbiguityLabel::ambiguous : AmbiguityLabel::clear);
    }
    auto report = classification_metrics(preds, gold);
    EvaluationPoint point;
    point.step = step;
    point.recall = report.recall;
    point.f1 = report.f1;
    point.selection_metric = 0.5 * (report.recall + report.f1);
    point.validation_loss = loss / static_cast<double>(split.samples.size());
    return point;
}

}  // namespace

TrainResult train(const std::vector<DatasetRecord>& train_records, const std::vector<DatasetRecord>& validation,
                  const TrainConfig& cfg, const Embedder& embedder, const ScalerParams* scaler) {
    cfg.validate();
    PreparedSplit tr = prepare(train_records, embedder, "training");
    PreparedSplit va = prepare(validation, embedder, "validation");
    require_both_classes(tr.labels, "training");
    require_both_classes(va.labels, "validation");

    const ScalerParams fitted =
        scaler ? *scaler : fit_scaler(std::span<const std::array<double, kNumFeatures>>(tr.raw_features));
    finalize_samples(tr, fitted);
    finalize_samples(va, fitted);

    Rng rng(cfg.seed);
    const std::size_t input_dim = embedder.spec().dim + kNumFeatures;
    HeadWeights head = HeadWeights::glorot(input_dim, cfg.hidden, cfg.dropout_p, rng);
    AdamOptimizer adam(head, cfg.learning_rate);

    const std::size_t steps_per_epoch = (tr.samples.size() + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = steps_per_epoch * cfg.epochs;

    TrainResult result;
    result.total_steps = total_steps;
    HeadWeights best = head;
    bool have_best = false;

    std::vector<Sample> batch(cfg.batch_size);
    std::vector<DropoutMask> masks;
    for (std::size_t step = 1; step <= total_steps; ++step) {
        auto indices = weighted_sample(tr.labels, cfg.batch_size, rng);
        for (std::size_t b = 0; b < indices.size(); ++b) batch[b] = tr.samples[indices[b]];
        masks.clear();
        if (cfg.dropout_p > 0.0) {
            for (std::size_t b = 0; b < indices.size(); ++b) {
                masks.push_back(sample_dropout_mask(cfg.hidden, cfg.dropout_p, rng));
            }
        }
        auto lg = loss_and_gradients(head, batch, masks);
        adam.step(head, lg.gradients);

        if (step % cfg.eval_every == 0 || step == total_steps) {
            auto point = evaluate(head, va, cfg.threshold, step);
            result.history.push_back(point);
            if (!have_best || point.selection_metric > result.best_metric) {
                best = head;
                have_best = true;
                result.best_metric = point.selection_metric;
                result.best_step = step;
            }
        }
    }

    result.model.head = std::move(best);
    result.model.scaler = fitted;
    result.model.embedder = embedder.spec();
    result.model.threshold = cfg.threshold;
    result.model.train_config = cfg;
    return result;
}

double ambiguous_probability(const ClassifierModel& model, const Embedder& embedder, const Query& q) {
    const auto features = apply_scaler(model.scaler, compute_features(q));
    const Embedding e = embedder.embed(q.text());
    return softmax(forward(model.head, e.values, features))[1];
}

AmbiguityVerdict classify(const ClassifierModel& model, const Embedder& embedder, const Query& q,
                          const LexicalRules& rules) {
    const double p = ambiguous_probability(model, embedder, q);
    AmbiguityVerdict verdict;
    verdict.score = p;
    verdict.label = p >= model.threshold ? AmbiguityLabel::ambiguous : AmbiguityLabel::clear;
    verdict.ambiguity_type = AmbiguityType::unknown;
    verdict.source = VerdictSource::model;
    const MaskedQuery masked = mask_entities(q, rules.common_words);
    return lexical_override(q, masked, verdict, rules.entity_types);
}

}  // namespace qrouter
