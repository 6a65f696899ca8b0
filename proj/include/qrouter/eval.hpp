#pragma once

// Detection metrics (ambiguous is the positive class), rewrite similarity
// (BLEU averaged over 1- and 2-grams, embedding cosine) and the harness
// that compares the three routing policies against golden rewrites.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrouter/core.hpp"
#include "qrouter/embed.hpp"
#include "qrouter/json_io.hpp"

namespace qrouter {

struct RoutingRecord;
class AmbiguityDetector;
class Rewriter;
enum class FrameworkMode;

struct ClassificationReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Zero denominators yield 0. Throws std::invalid_argument on empty or
/// mismatched inputs.
ClassificationReport classification_metrics(std::span<const AmbiguityLabel> preds,
                                            std::span<const AmbiguityLabel> gold);
json report_to_json(const ClassificationReport& report);

/// Lowercased whitespace tokens with trailing sentence punctuation split
/// off as its own token.
std::vector<std::string> bleu_tokenize(std::string_view s);

struct BleuBreakdown {
    double p1 = 0.0;  // clipped unigram precision
    double p2 = 0.0;  // clipped bigram precision
    double brevity_penalty = 1.0;
    double bleu1 = 0.0;
    double bleu2 = 0.0;  // BP * sqrt(p1 * p2)
    double average = 0.0;
};

/// No smoothing. When neither side has a bigram, BLEU-2 equals BLEU-1.
BleuBreakdown bleu_breakdown(std::string_view candidate, std::string_view reference);
double bleu_avg12(std::string_view candidate, std::string_view reference);

struct SimilarityScores {
    double bleu = 0.0;
    double cosine = 0.0;
};

/// Scores the routed query against `golden`. Embedder errors propagate.
SimilarityScores rewrite_similarity(const RoutingRecord& result, const std::string& golden,
                                    const Embedder& embedder);

struct FrameworkReport {
    FrameworkMode mode;
    double mean_bleu = 0.0;
    double mean_cosine = 0.0;
    std::size_t n = 0;
    std::size_t degraded_count = 0;
    std::size_t rewrite_count = 0;
};

/// Runs every record through each policy and averages similarity with the
/// golden rewrite. Throws std::invalid_argument when `records` is empty or a
/// record lacks golden_rewrite.
std::vector<FrameworkReport> compare_frameworks(const std::vector<DatasetRecord>& records,
                                                const AmbiguityDetector& detector, const Rewriter& rewriter,
                                                const Embedder& embedder);

json frameworks_to_json(const std::vector<FrameworkReport>& reports);
std::string frameworks_table(const std::vector<FrameworkReport>& reports);

}  // namespace qrouter
