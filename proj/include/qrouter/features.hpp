#pragma once

// Hand-crafted query features and the robust (median / IQR) scaler that
// normalizes them before they reach the classifier head.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "qrouter/core.hpp"

namespace qrouter {

inline constexpr std::size_t kNumFeatures = 3;

/// The fixed list of referential words counted by referential_count().
const std::vector<std::string>& referential_words();

struct FeatureVector {
    std::size_t query_length = 0;
    std::size_t referential_count = 0;
    double coleman_liau = 0.0;

    std::array<double, kNumFeatures> as_array() const {
        return {static_cast<double>(query_length), static_cast<double>(referential_count), coleman_liau};
    }
};

/// Whitespace-token count.
std::size_t query_length(const Query& q);

/// Tokens (punctuation stripped, lowercased) found in referential_words().
std::size_t referential_count(const Query& q);

/// 5.89 L/W - 30 S/W - 15.8, with L alphabetic characters, W words and S
/// runs of terminal punctuation (at least 1).
double coleman_liau(const Query& q);

FeatureVector compute_features(const Query& q);

struct ScalerParams {
    std::array<double, kNumFeatures> median{};
    std::array<double, kNumFeatures> iqr{1.0, 1.0, 1.0};

    friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

/// Linear-interpolation percentile over a copy of `values`; p in [0, 1].
double percentile(std::vector<double> values, double p);

/// Per-column median and IQR (Q75 - Q25). Zero IQR becomes 1. Throws
/// std::invalid_argument on empty input.
ScalerParams fit_scaler(std::span<const std::array<double, kNumFeatures>> rows);
ScalerParams fit_scaler(std::span<const FeatureVector> rows);

std::array<double, kNumFeatures> apply_scaler(const ScalerParams& params,
                                              const std::array<double, kNumFeatures>& row);
std::array<double, kNumFeatures> apply_scaler(const ScalerParams& params, const FeatureVector& fv);

}  // namespace qrouter
