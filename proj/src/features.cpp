#include "qrouter/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qrouter/text.hpp"

namespace qrouter {

const std::vector<std::string>& referential_words() {
    static const std::vector<std::string> words{"this", "that", "those", "it", "its", "some",
                                                "others", "another", "other", "them", "above", "previous"};
    return words;
}

std::size_t query_length(const Query& q) {
    return text::split_whitespace(q.text()).size();
}

std::size_t referential_count(const Query& q) {
    const auto& words = referential_words();
    std::size_t count = 0;
    for (const auto& token : text::split_whitespace(q.text())) {
        auto word = text::to_lower(text::strip_punct(token));
        if (std::find(words.begin(), words.end(), word) != words.end()) ++count;
    }
    return count;
}

double coleman_liau(const Query& q) {
    const auto words = static_cast<double>(std::max<std::size_t>(query_length(q), 1));

    std::size_t letters = 0;
    for (char32_t cp : text::decode_utf8(q.text())) {
        if (text::is_letter(cp)) ++letters;
    }

    std::size_t sentences = 0;
    bool in_run = false;
    for (char c : q.text()) {
        bool terminal = c == '.' || c == '!' || c == '?';
        if (terminal && !in_run) ++sentences;
        in_run = terminal;
    }
    sentences = std::max<std::size_t>(sentences, 1);

    return 5.89 * static_cast<double>(letters) / words - 30.0 * static_cast<double>(sentences) / words - 15.8;
}

FeatureVector compute_features(const Query& q) {
    return FeatureVector{query_length(q), referential_count(q), coleman_liau(q)};
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile of empty sample");
    std::sort(values.begin(), values.end());
    double pos = p * static_cast<double>(values.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = static_cast<std::size_t>(std::ceil(pos));
    double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
}

ScalerParams fit_scaler(std::span<const std::array<double, kNumFeatures>> rows) {
    if (rows.empty()) throw std::invalid_argument("fit_scaler: no rows");
    ScalerParams params;
    std::vector<double> column(rows.size());
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        for (std::size_t i = 0; i < rows.size(); ++i) column[i] = rows[i][f];
        params.median[f] = percentile(column, 0.5);
        double iqr = percentile(column, 0.75) - percentile(column, 0.25);
        params.iqr[f] = iqr > 0.0 ? iqr : 1.0;
    }
    return params;
}

ScalerParams fit_scaler(std::span<const FeatureVector> rows) {
    std::vector<std::array<double, kNumFeatures>> arrays;
    arrays.reserve(rows.size());
    for (const auto& fv : rows) arrays.push_back(fv.as_array());
    return fit_scaler(std::span<const std::array<double, kNumFeatures>>(arrays));
}

std::array<double, kNumFeatures> apply_scaler(const ScalerParams& params,
                                              const std::array<double, kNumFeatures>& row) {
    std::array<double, kNumFeatures> out{};
    for (std::size_t f = 0; f < kNumFeatures; ++f) out[f] = (row[f] - params.median[f]) / params.iqr[f];
    return out;
}

std::array<double, kNumFeatures> apply_scaler(const ScalerParams& params, const FeatureVector& fv) {
    return apply_scaler(params, fv.as_array());
}

}  // namespace qrouter
