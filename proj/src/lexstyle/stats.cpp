#include "emergent/lexstyle.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emergent::lexstyle {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        // positions i..j (0-based) share ranks i+1..j+1
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t q = i; q <= j; ++q) {
            ranks[order[q]] = r;
        }
        i = j + 1;
    }
    return ranks;
}

std::optional<TestResult> kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) {
        throw std::invalid_argument("kruskal_wallis needs at least two groups");
    }
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.empty()) {
            throw std::invalid_argument("kruskal_wallis: empty group");
        }
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    const std::size_t n = pooled.size();
    if (n < 3) {
        throw std::invalid_argument("kruskal_wallis needs at least three values");
    }
    const auto ranks = average_ranks(pooled);

    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) {
            ++j;
        }
        const double t = static_cast<double>(j - i);
        tie_sum += t * t * t - t;
        i = j;
    }
    const double nd = static_cast<double>(n);
    const double correction = 1.0 - tie_sum / (nd * nd * nd - nd);
    if (correction <= 0.0) {
        return std::nullopt;
    }

    double sum = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double r = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            r += ranks[offset + i];
        }
        sum += r * r / static_cast<double>(g.size());
        offset += g.size();
    }
    const double h = (12.0 / (nd * (nd + 1.0)) * sum - 3.0 * (nd + 1.0)) / correction;
    const double stat = std::max(h, 0.0);
    const double df = static_cast<double>(groups.size() - 1);
    return TestResult{stat, boost::math::gamma_q(df / 2.0, stat / 2.0)};
}

std::optional<Correlation> spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("spearman: length mismatch");
    }
    const std::size_t n = x.size();
    if (n < 3) {
        throw std::invalid_argument("spearman needs at least three pairs");
    }
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    // Mean rank is (n+1)/2 regardless of ties.
    const double mean = (static_cast<double>(n) + 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return std::nullopt;
    }
    const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(n - 2);
    double p = 0.0;
    if (std::abs(rho) < 1.0) {
        const double t = rho * std::sqrt(df / ((1.0 - rho) * (1.0 + rho)));
        const boost::math::students_t dist(df);
        p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    }
    return Correlation{rho, p};
}

std::string stars(std::optional<double> p) {
    if (!p) return "";
    if (*p < 0.01) return "**";
    if (*p < 0.05) return "*";
    return "";
}

}  // namespace emergent::lexstyle
