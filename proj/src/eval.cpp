#include "qrouter/eval.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "qrouter/pipeline.hpp"
#include "qrouter/text.hpp"

namespace qrouter {
namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
    std::map<Ngram, std::size_t> counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

// Clipped matches and total candidate n-grams.
std::pair<std::size_t, std::size_t> clipped(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                                            std::size_t n) {
    auto c = ngram_counts(cand, n);
    auto r = ngram_counts(ref, n);
    std::size_t matched = 0, total = 0;
    for (const auto& [gram, count] : c) {
        total += count;
        auto it = r.find(gram);
        if (it != r.end()) matched += std::min(count, it->second);
    }
    return {matched, total};
}

}  // namespace

ClassificationReport classification_metrics(std::span<const AmbiguityLabel> preds,
                                            std::span<const AmbiguityLabel> gold) {
    if (preds.size() != gold.size()) throw std::invalid_argument("classification_metrics: length mismatch");
    if (preds.empty()) throw std::invalid_argument("classification_metrics: empty input");
    ClassificationReport r;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] == AmbiguityLabel::ambiguous;
        const bool g = gold[i] == AmbiguityLabel::ambiguous;
        if (p && g) ++r.tp;
        else if (p && !g) ++r.fp;
        else if (!p && g) ++r.fn;
        else ++r.tn;
    }
    r.precision = ratio(r.tp, r.tp + r.fp);
    r.recall = ratio(r.tp, r.tp + r.fn);
    r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    r.accuracy = ratio(r.tp + r.tn, preds.size());
    return r;
}

json report_to_json(const ClassificationReport& r) {
    return json{{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}, {"accuracy", r.accuracy},
                {"tp", r.tp},               {"fp", r.fp},         {"tn", r.tn}, {"fn", r.fn}};
}

std::vector<std::string> bleu_tokenize(std::string_view s) {
    std::vector<std::string> out;
    for (auto& token : text::split_whitespace(text::to_lower(s))) {
        std::size_t end = token.size();
        while (end > 0 && std::string_view(".,!?;:").find(token[end - 1]) != std::string_view::npos) --end;
        if (end > 0) out.push_back(token.substr(0, end));
        if (end < token.size()) out.push_back(token.substr(end));
    }
    return out;
}

BleuBreakdown bleu_breakdown(std::string_view candidate, std::string_view reference) {
    const auto cand = bleu_tokenize(candidate);
    const auto ref = bleu_tokenize(reference);
    BleuBreakdown b;
    if (cand.empty() || ref.empty()) return b;

    auto [m1, t1] = clipped(cand, ref, 1);
    b.p1 = ratio(m1, t1);
    const double c = static_cast<double>(cand.size());
    const double r = static_cast<double>(ref.size());
    b.brevity_penalty = c < r ? std::exp(1.0 - r / c) : 1.0;
    b.bleu1 = b.brevity_penalty * b.p1;

    if (cand.size() < 2) {
        b.p2 = ref.size() < 2 ? b.p1 : 0.0;
        b.bleu2 = ref.size() < 2 ? b.bleu1 : 0.0;
    } else {
        auto [m2, t2] = clipped(cand, ref, 2);
        b.p2 = ratio(m2, t2);
        b.bleu2 = (b.p1 > 0.0 && b.p2 > 0.0) ? b.brevity_penalty * std::sqrt(b.p1 * b.p2) : 0.0;
    }
    b.average = 0.5 * (b.bleu1 + b.bleu2);
    return b;
}

double bleu_avg12(std::string_view candidate, std::string_view reference) {
    return bleu_breakdown(candidate, reference).average;
}

SimilarityScores rewrite_similarity(const RoutingRecord& result, const std::string& golden,
                                    const Embedder& embedder) {
    if (text::trim(golden).empty()) throw std::invalid_argument("rewrite_similarity: empty golden rewrite");
    SimilarityScores s;
    s.bleu = bleu_avg12(result.routed.text(), golden);
    s.cosine = cosine(embedder.embed(result.routed.text()), embedder.embed(golden));
    return s;
}

std::vector<FrameworkReport> compare_frameworks(const std::vector<DatasetRecord>& records,
                                                const AmbiguityDetector& detector, const Rewriter& rewriter,
                                                const Embedder& embedder) {
    if (records.empty()) throw std::invalid_argument("compare_frameworks: no records");
    for (const auto& r : records) {
        if (!r.golden_rewrite) throw std::invalid_argument("record \"" + r.id + "\" has no golden_rewrite");
    }
    Router router(&detector, &rewriter);
    std::vector<FrameworkReport> reports;
    for (FrameworkMode mode : kAllModes) {
        FrameworkReport report{mode};
        const auto routed = router.process_batch(records, mode);
        double bleu_sum = 0.0, cos_sum = 0.0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            auto s = rewrite_similarity(routed[i], *records[i].golden_rewrite, embedder);
            bleu_sum += s.bleu;
            cos_sum += s.cosine;
            if (routed[i].degraded) ++report.degraded_count;
            if (routed[i].rewrite_invoked) ++report.rewrite_count;
        }
        report.n = records.size();
        report.mean_bleu = bleu_sum / static_cast<double>(report.n);
        report.mean_cosine = cos_sum / static_cast<double>(report.n);
        reports.push_back(report);
    }
    return reports;
}

json frameworks_to_json(const std::vector<FrameworkReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        arr.push_back({{"mode", to_string(r.mode)},
                       {"mean_bleu", r.mean_bleu},
                       {"mean_cosine", r.mean_cosine},
                       {"n", r.n},
                       {"degraded_count", r.degraded_count},
                       {"rewrite_count", r.rewrite_count}});
    }
    return json{{"frameworks", arr}};
}

std::string frameworks_table(const std::vector<FrameworkReport>& reports) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %10s %12s %6s %9s %9s\n", "mode", "mean_bleu", "mean_cosine", "n",
                  "rewrites", "degraded");
    out += line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, "%-16s %10.4f %12.4f %6zu %9zu %9zu\n", std::string(to_string(r.mode)).c_str(),
                      r.mean_bleu, r.mean_cosine, r.n, r.rewrite_count, r.degraded_count);
        out += line;
    }
    return out;
}

}  // namespace qrouter
