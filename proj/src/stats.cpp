#include "crcop/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace crcop {

namespace {

// Counts inversions in v by bottom-up merge sort.
std::uint64_t count_inversions(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> buffer(n);
    std::uint64_t inversions = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (v[j] < v[i]) {
                    inversions += mid - i;
                    buffer[k++] = v[j++];
                } else {
                    buffer[k++] = v[i++];
                }
            }
            while (i < mid) buffer[k++] = v[i++];
            while (j < hi) buffer[k++] = v[j++];
            std::copy(buffer.begin() + lo, buffer.begin() + hi, v.begin() + lo);
        }
    }
    return inversions;
}

// Sum of g*(g-1)/2 over groups of equal adjacent values in a sorted range.
std::uint64_t tie_pairs(const std::vector<double>& sorted) {
    std::uint64_t total = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const std::uint64_t g = j - i;
        total += g * (g - 1) / 2;
        i = j;
    }
    return total;
}

} // namespace

double empirical_kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size()) throw std::invalid_argument("empirical_kendall_tau: size mismatch");
    if (n < 2) throw std::invalid_argument("empirical_kendall_tau: need at least 2 pairs");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    std::vector<double> xs(n), ys(n);
    for (std::size_t k = 0; k < n; ++k) {
        xs[k] = x[order[k]];
        ys[k] = y[order[k]];
    }

    // Joint ties (both coordinates equal) and x-ties.
    std::uint64_t ties_xy = 0;
    {
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i + 1;
            while (j < n && xs[j] == xs[i] && ys[j] == ys[i]) ++j;
            const std::uint64_t g = j - i;
            ties_xy += g * (g - 1) / 2;
            i = j;
        }
    }
    const std::uint64_t ties_x = tie_pairs(xs);

    // Sorting is by (x asc, y asc), so strict inversions in the y sequence
    // are exactly the discordant pairs.
    std::vector<double> y_in_x_order = ys;
    const std::uint64_t discordant_count = count_inversions(y_in_x_order);

    std::vector<double> y_sorted = ys;
    std::sort(y_sorted.begin(), y_sorted.end());
    const std::uint64_t ties_y = tie_pairs(y_sorted);

    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const double discordant = static_cast<double>(discordant_count);
    const double concordant = static_cast<double>(total - ties_x - ties_y + ties_xy) - discordant;
    const double denom = std::sqrt(static_cast<double>(total - ties_x)) *
                         std::sqrt(static_cast<double>(total - ties_y));
    if (denom == 0.0) return 0.0;
    return (concordant - discordant) / denom;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    std::sort(values.begin(), values.end());
    const double pos = p * (values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - lo;
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean: empty input");
    return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
}

double population_variance(const std::vector<double>& values) {
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return ss / values.size();
}

} // namespace crcop
