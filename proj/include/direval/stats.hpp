#ifndef DIREVAL_STATS_HPP
#define DIREVAL_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "direval/error.hpp"

namespace direval {

struct Correlation {
    double r = 0.0;
    double p = 1.0;
};

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fn + fp + tn; }
    double accuracy() const {
        return total() ? static_cast<double>(tp + tn) / static_cast<double>(total()) : 0.0;
    }
    ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
        tp += o.tp;
        fn += o.fn;
        fp += o.fp;
        tn += o.tn;
        return *this;
    }
};

struct Quartiles {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b) {
    if (a != b) throw ValidationError("input lengths differ (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
}

inline double mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Two-sided p-value of a t statistic.
inline double t_two_sided(double t, double df) {
    if (std::isinf(t)) return 0.0;
    boost::math::students_t dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

inline double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

// p-value for a correlation coefficient via t = r sqrt((n-2)/(1-r^2)).
inline double correlation_p(double r, std::size_t n) {
    if (n <= 2) return 1.0;
    const double one_minus = 1.0 - r * r;
    if (one_minus <= 0.0) return 0.0;
    return t_two_sided(r * std::sqrt(static_cast<double>(n - 2) / one_minus), static_cast<double>(n - 2));
}

inline void require_labels(std::span<const int> labels, std::size_t& n1, std::size_t& n0) {
    n1 = n0 = 0;
    for (int l : labels) {
        if (l == 1) ++n1;
        else if (l == 0) ++n0;
        else throw ValidationError("labels must be 0 or 1");
    }
}

} // namespace detail

inline Correlation pearson(std::span<const double> x, std::span<const double> y) {
    detail::require_same_size(x.size(), y.size());
    if (x.size() < 3) throw ValidationError("correlation needs at least 3 observations");
    const double mx = detail::mean(x), my = detail::mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DomainError("correlation undefined for a constant input");
    Correlation c;
    c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    c.p = detail::correlation_p(c.r, x.size());
    return c;
}

// Point-biserial correlation with the population standard deviation, which
// makes it identical to Pearson against 0/1 labels.
inline Correlation point_biserial(std::span<const double> scores, std::span<const int> labels) {
    detail::require_same_size(scores.size(), labels.size());
    std::size_t n1 = 0, n0 = 0;
    detail::require_labels(labels, n1, n0);
    if (n1 == 0 || n0 == 0) throw ValidationError("point-biserial correlation needs both classes");
    const auto n = static_cast<double>(scores.size());
    double sum1 = 0.0, sum0 = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? sum1 : sum0) += scores[i];
    const double m1 = sum1 / static_cast<double>(n1), m0 = sum0 / static_cast<double>(n0);
    const double mu = detail::mean(scores);
    double ss = 0.0;
    for (double s : scores) ss += (s - mu) * (s - mu);
    const double sd = std::sqrt(ss / n);
    if (sd == 0.0) throw DomainError("point-biserial correlation undefined for constant scores");
    Correlation c;
    c.r = std::clamp((m1 - m0) / sd * std::sqrt(static_cast<double>(n1) * static_cast<double>(n0) / (n * n)), -1.0,
                     1.0);
    c.p = detail::correlation_p(c.r, scores.size());
    return c;
}

// 1-based ranks, ties receive the average of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline Correlation spearman(std::span<const double> x, std::span<const double> y) {
    detail::require_same_size(x.size(), y.size());
    const auto rx = average_ranks(x), ry = average_ranks(y);
    return pearson(rx, ry);
}

// Kendall tau-b. The p-value uses the normal approximation with the
// tie-corrected variance of the S statistic.
inline Correlation kendall_tau(std::span<const double> x, std::span<const double> y) {
    detail::require_same_size(x.size(), y.size());
    const std::size_t n = x.size();
    if (n < 3) throw ValidationError("correlation needs at least 3 observations");
    double s = 0.0;
    double ties_x = 0.0, ties_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j], dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) {
                ties_x += 1;
                ties_y += 1;
            } else if (dx == 0.0) {
                ties_x += 1;
            } else if (dy == 0.0) {
                ties_y += 1;
            } else {
                s += (dx > 0) == (dy > 0) ? 1.0 : -1.0;
            }
        }
    }
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    if (pairs == ties_x || pairs == ties_y) throw DomainError("Kendall tau undefined for a constant input");

    auto tie_terms = [](std::span<const double> v, double& t0, double& t1, double& t2) {
        std::vector<double> sorted(v.begin(), v.end());
        std::sort(sorted.begin(), sorted.end());
        t0 = t1 = t2 = 0.0;
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            const auto t = static_cast<double>(j - i);
            if (t > 1) {
                t0 += t * (t - 1) / 2;
                t1 += t * (t - 1) * (t - 2);
                t2 += t * (t - 1) * (2 * t + 5);
            }
            i = j;
        }
    };
    double xt, x1, x2, yt, y1, y2;
    tie_terms(x, xt, x1, x2);
    tie_terms(y, yt, y1, y2);

    Correlation c;
    c.r = std::clamp(s / std::sqrt((pairs - xt) * (pairs - yt)), -1.0, 1.0);
    const auto nd = static_cast<double>(n);
    const double m = nd * (nd - 1);
    const double var = (m * (2 * nd + 5) - x2 - y2) / 18 + 2 * xt * yt / m + x1 * y1 / (9 * m * (nd - 2));
    c.p = var > 0 ? detail::normal_two_sided(s / std::sqrt(var)) : 1.0;
    return c;
}

struct TestResult {
    double statistic = 0.0;
    double p = 1.0;
};

// Williams' test for two dependent correlations r12 and r13 sharing variable
// 1, given the correlation r23 between the other two. Equal correlations give
// t = 0 regardless of r23.
inline TestResult williams_test(double r12, double r13, double r23, std::size_t n) {
    if (n < 4) throw ValidationError("Williams test needs n >= 4");
    for (double r : {r12, r13, r23})
        if (!(r >= -1.0 && r <= 1.0)) throw DomainError("correlations must lie in [-1, 1]");
    if (r12 == r13) return {0.0, 1.0};
    for (double r : {r12, r13, r23})
        if (std::abs(r) == 1.0) throw DomainError("Williams test undefined for correlations of +-1");
    const auto nd = static_cast<double>(n);
    const double k = 1 - r12 * r12 - r13 * r13 - r23 * r23 + 2 * r12 * r13 * r23;
    const double denom = 2 * k * (nd - 1) / (nd - 3) + ((r12 + r13) * (r12 + r13) / 4) * std::pow(1 - r23, 3);
    if (!(denom > 0.0)) throw DomainError("Williams test denominator is not positive");
    const double t = (r12 - r13) * std::sqrt((nd - 1) * (1 + r23)) / std::sqrt(denom);
    return {t, detail::t_two_sided(t, nd - 3)};
}

// Pearson chi-squared on the 2x2 table [[a_correct, a_wrong], [b_correct, b_wrong]],
// no continuity correction, one degree of freedom.
inline TestResult chi_squared_2x2(std::size_t a_correct, std::size_t a_wrong, std::size_t b_correct,
                                  std::size_t b_wrong) {
    const double obs[2][2] = {{static_cast<double>(a_correct), static_cast<double>(a_wrong)},
                              {static_cast<double>(b_correct), static_cast<double>(b_wrong)}};
    const double row[2] = {obs[0][0] + obs[0][1], obs[1][0] + obs[1][1]};
    const double col[2] = {obs[0][0] + obs[1][0], obs[0][1] + obs[1][1]};
    for (double m : {row[0], row[1], col[0], col[1]})
        if (m == 0.0) throw ValidationError("chi-squared test needs non-zero row and column sums");
    const double total = row[0] + row[1];
    double stat = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double e = row[i] * col[j] / total;
            stat += (obs[i][j] - e) * (obs[i][j] - e) / e;
        }
    boost::math::chi_squared dist(1.0);
    return {stat, stat == 0.0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, stat))};
}

// Linear-interpolation quantiles (position q * (n - 1) in sorted order).
inline Quartiles quartile_summary(std::span<const double> scores) {
    if (scores.empty()) throw ValidationError("quartile summary of an empty list");
    std::vector<double> s(scores.begin(), scores.end());
    std::sort(s.begin(), s.end());
    auto q = [&](double p) {
        const double pos = p * static_cast<double>(s.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, s.size() - 1);
        return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
    };
    return {s.front(), q(0.25), q(0.5), q(0.75), s.back()};
}

// Rule: score >= threshold is classified positive.
inline ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
    detail::require_same_size(scores.size(), labels.size());
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i]) (predicted ? cm.tp : cm.fn) += 1;
        else (predicted ? cm.fp : cm.tn) += 1;
    }
    return cm;
}

struct ThresholdAccuracy {
    double accuracy = 0.0;
    ConfusionMatrix confusion;
};

inline ThresholdAccuracy accuracy_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
    if (scores.empty()) throw ValidationError("accuracy of an empty score list");
    std::size_t n1 = 0, n0 = 0;
    detail::require_labels(labels, n1, n0);
    const auto cm = confusion_at(scores, labels, threshold);
    return {cm.accuracy(), cm};
}

struct ThresholdGrid {
    double lo = 0.0;
    double hi = 1.0;
    double step = 0.01;

    std::size_t points() const { return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1; }
    double at(std::size_t i) const { return lo + static_cast<double>(i) * step; }
};

// Smallest grid threshold with the fewest misclassifications.
inline double best_threshold(std::span<const double> scores, std::span<const int> labels,
                             const ThresholdGrid& grid = {}) {
    if (scores.empty()) throw ValidationError("threshold search on an empty score list");
    detail::require_same_size(scores.size(), labels.size());
    std::size_t n1 = 0, n0 = 0;
    detail::require_labels(labels, n1, n0);
    if (n1 == 0 || n0 == 0) throw ValidationError("threshold search needs both classes");
    if (!(grid.step > 0.0) || !(grid.hi >= grid.lo)) throw ValidationError("invalid threshold grid");

    // Sort once; errors at t are positives below t plus negatives at or above t.
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? pos : neg).push_back(scores[i]);
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    std::size_t best_errors = scores.size() + 1;
    double best = grid.lo;
    for (std::size_t i = 0; i < grid.points(); ++i) {
        const double t = grid.at(i);
        const auto fn = static_cast<std::size_t>(std::lower_bound(pos.begin(), pos.end(), t) - pos.begin());
        const auto fp = static_cast<std::size_t>(neg.end() - std::lower_bound(neg.begin(), neg.end(), t));
        if (fn + fp < best_errors) {
            best_errors = fn + fp;
            best = t;
        }
    }
    return best;
}

} // namespace direval

#endif // DIREVAL_STATS_HPP
