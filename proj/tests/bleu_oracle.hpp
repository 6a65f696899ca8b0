#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace qtest {

// Straightforward BLEU written against the definition: explicit n-gram
// enumeration by nested loops, clipped counts, brevity penalty.
inline double brute_force_bleu(const std::vector<std::string>& c, const std::vector<std::string>& r) {
    auto precision = [&](std::size_t n, bool& defined) {
        std::size_t total = c.size() >= n ? c.size() - n + 1 : 0;
        defined = total > 0;
        if (!defined) return 0.0;
        std::vector<bool> used(r.size() >= n ? r.size() - n + 1 : 0, false);
        std::size_t match = 0;
        for (std::size_t i = 0; i + n <= c.size(); ++i) {
            for (std::size_t j = 0; j < used.size(); ++j) {
                if (used[j]) continue;
                bool eq = true;
                for (std::size_t k = 0; k < n; ++k) eq = eq && c[i + k] == r[j + k];
                if (eq) {
                    used[j] = true;
                    ++match;
                    break;
                }
            }
        }
        return static_cast<double>(match) / static_cast<double>(total);
    };
    if (c.empty() || r.empty()) return 0.0;
    double bp = c.size() < r.size() ? std::exp(1.0 - static_cast<double>(r.size()) / c.size()) : 1.0;
    bool d1, d2;
    double p1 = precision(1, d1), p2 = precision(2, d2);
    double b1 = bp * p1;
    double b2 = d2 ? bp * std::sqrt(p1 * p2) : (r.size() < 2 ? b1 : 0.0);
    return (b1 + b2) / 2;
}

}  // namespace qtest
