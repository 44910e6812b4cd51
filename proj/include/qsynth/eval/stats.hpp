#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "qsynth/errors.hpp"

namespace qsynth::eval {

inline double mean(std::span<const double> v) {
    if (v.empty()) throw InvalidArgument("mean of empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double stddev(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// 1-based ranks, ties share their average rank.
inline std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("pearson: need two equal samples of size >= 2");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

/// Spearman rank correlation (Pearson on average ranks).
inline double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    return pearson(rx, ry);
}

struct SignTest {
    std::size_t wins = 0;    ///< pairs with first < second
    std::size_t losses = 0;  ///< pairs with first > second
    std::size_t ties = 0;
    double p_value = 1.0;    ///< one-sided P(X >= wins), X ~ Binomial(wins + losses, 1/2)
};

/// Paired one-sided sign test of "first tends to be smaller than second".
inline SignTest sign_test(std::span<const double> first, std::span<const double> second) {
    if (first.size() != second.size()) throw InvalidArgument("sign test: samples differ in length");
    SignTest t;
    for (std::size_t i = 0; i < first.size(); ++i) {
        if (first[i] < second[i]) ++t.wins;
        else if (first[i] > second[i]) ++t.losses;
        else ++t.ties;
    }
    const std::size_t n = t.wins + t.losses;
    double p = 0.0;
    for (std::size_t k = t.wins; k <= n; ++k) {
        const double log_choose = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                                  std::lgamma(static_cast<double>(n - k) + 1.0);
        p += std::exp(log_choose - static_cast<double>(n) * std::log(2.0));
    }
    t.p_value = std::min(1.0, n == 0 ? 1.0 : p);
    return t;
}

}  // namespace qsynth::eval
