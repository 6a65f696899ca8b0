#pragma once

// Two-layer classification head over [embedding ‖ scaled features]:
//   logits = W2 · dropout(tanh(W1ᵀ x + b1)) + b2
// trained with mean cross-entropy, Adam and class-balanced sampling.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qrouter/core.hpp"
#include "qrouter/embed.hpp"
#include "qrouter/features.hpp"
#include "qrouter/lexical.hpp"

namespace qrouter {

using Rng = std::mt19937_64;

/// Weights are row-major: w1 is input_dim x hidden (w1[i * hidden + j]),
/// w2 is hidden x 2 (w2[j * 2 + k]).
struct HeadWeights {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    double dropout_p = 0.1;
    std::vector<double> w1;
    std::vector<double> b1;
    std::vector<double> w2;
    std::vector<double> b2;

    static HeadWeights zeros(std::size_t input_dim, std::size_t hidden, double dropout_p = 0.1);

    /// Glorot-uniform weights, zero biases.
    static HeadWeights glorot(std::size_t input_dim, std::size_t hidden, double dropout_p, Rng& rng);

    /// Throws std::invalid_argument when vector sizes disagree with the shape.
    void check_shapes() const;

    friend bool operator==(const HeadWeights&, const HeadWeights&) = default;
};

/// One training/evaluation example. `embedding` must outlive the sample.
struct Sample {
    std::span<const double> embedding;
    std::array<double, kNumFeatures> features{};
    int label = 0;  // 0 = clear, 1 = ambiguous
};

/// Per-hidden-unit multipliers for one sample: 0 for dropped units and
/// 1/(1-p) for kept ones. An empty mask disables dropout.
using DropoutMask = std::vector<double>;

DropoutMask sample_dropout_mask(std::size_t hidden, double p, Rng& rng);

std::array<double, 2> forward(const HeadWeights& head, std::span<const double> embedding,
                              const std::array<double, kNumFeatures>& features, const DropoutMask& mask = {});

std::array<double, 2> softmax(const std::array<double, 2>& logits);

struct LossAndGradients {
    double loss = 0.0;
    HeadWeights gradients;  // same shapes as the head
};

/// Mean cross-entropy over `batch` and its gradients. `masks` is either
/// empty (no dropout) or holds one mask per sample.
LossAndGradients loss_and_gradients(const HeadWeights& head, std::span<const Sample> batch,
                                    std::span<const DropoutMask> masks = {});

/// Draws `batch_size` indices with replacement, each weighted by the inverse
/// of its class count. Throws std::invalid_argument unless both classes are
/// present.
std::vector<std::size_t> weighted_sample(std::span<const int> labels, std::size_t batch_size, Rng& rng);

/// Adam with bias correction.
class AdamOptimizer {
public:
    AdamOptimizer(const HeadWeights& shape, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8);

    void step(HeadWeights& head, const HeadWeights& grads);

private:
    struct Moments {
        std::vector<double> m;
        std::vector<double> v;
    };
    void update(std::vector<double>& param, const std::vector<double>& grad, Moments& mom) const;

    double lr_, beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    double bias1_ = 1.0, bias2_ = 1.0;
    Moments w1_, b1_, w2_, b2_;
};

struct TrainConfig {
    double learning_rate = 2e-5;
    std::size_t batch_size = 4;
    std::size_t epochs = 3;
    std::size_t eval_every = 50;
    std::uint64_t seed = 42;
    double dropout_p = 0.1;
    std::size_t hidden = 384;
    double threshold = 0.5;

    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct ClassifierModel {
    HeadWeights head;
    ScalerParams scaler;
    EmbedderSpec embedder;
    double threshold = 0.5;
    std::string version = "qrouter-head-1";
    TrainConfig train_config;

    /// embedder.dim + 3 == head.input_dim, threshold in (0, 1).
    void check_consistency() const;
};

struct EvaluationPoint {
    std::size_t step = 0;
    double recall = 0.0;
    double f1 = 0.0;
    double selection_metric = 0.0;  // (recall + f1) / 2 on the ambiguous class
    double validation_loss = 0.0;
};

struct TrainResult {
    ClassifierModel model;
    std::vector<EvaluationPoint> history;
    std::size_t best_step = 0;
    double best_metric = 0.0;
    std::size_t total_steps = 0;
};

/// Trains the head on `train_records` (the embedding backbone stays fixed).
/// Every `eval_every` steps, and after the final step, the validation split
/// is scored and the weights with the highest (recall + F1) / 2 for the
/// ambiguous class are kept; ties keep the earlier checkpoint. When
/// `scaler` is null it is fitted on the training split.
TrainResult train(const std::vector<DatasetRecord>& train_records, const std::vector<DatasetRecord>& validation,
                  const TrainConfig& cfg, const Embedder& embedder, const ScalerParams* scaler = nullptr);

/// P(ambiguous) from the head alone.
double ambiguous_probability(const ClassifierModel& model, const Embedder& embedder, const Query& q);

/// Features, scaling, embedding, head, threshold (ties are ambiguous), then
/// the lexical override. Embedder failures propagate as EmbedError.
AmbiguityVerdict classify(const ClassifierModel& model, const Embedder& embedder, const Query& q,
                          const LexicalRules& rules);

}  // namespace qrouter
