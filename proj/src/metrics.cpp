#include "emergent/metrics.hpp"

#include "emergent/cumulate.hpp"
#include "emergent/reduce.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace emergent::metrics {

std::optional<double> silhouette(const Matrix& points, std::span<const int> labels) {
    if (labels.size() != points.rows()) {
        throw std::invalid_argument("silhouette: label count does not match point count");
    }
    std::vector<std::size_t> idx;
    std::map<int, std::size_t> cluster_index;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != -1) {
            idx.push_back(i);
            cluster_index.emplace(labels[i], 0);
        }
    }
    if (cluster_index.size() < 2) {
        return std::nullopt;
    }
    std::size_t next = 0;
    for (auto& [label, c] : cluster_index) {
        c = next++;
    }
    const std::size_t k = cluster_index.size();
    std::vector<std::size_t> cluster_of(idx.size());
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        cluster_of[r] = cluster_index[labels[idx[r]]];
        ++sizes[cluster_of[r]];
    }

    double total = 0.0;
    std::vector<double> sums(k);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const std::size_t own = cluster_of[r];
        if (sizes[own] == 1) {
            continue;  // singleton: s = 0
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t q = 0; q < idx.size(); ++q) {
            if (q != r) {
                sums[cluster_of[q]] +=
                    reduce::distance(points.row(idx[r]), points.row(idx[q]), reduce::Metric::euclidean);
            }
        }
        const double a = sums[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own) {
                b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
            }
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(idx.size());
}

Band band(double s) {
    if (s > 0.7) return Band::strong;
    if (s >= 0.5) return Band::moderate;
    if (s >= 0.25) return Band::intermediate;
    return Band::weak;
}

std::string_view to_string(Band b) {
    switch (b) {
        case Band::strong: return "strong";
        case Band::moderate: return "moderate";
        case Band::intermediate: return "intermediate";
        case Band::weak: return "weak";
    }
    return "weak";
}

double mean(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("mean of an empty list");
    }
    double s = 0.0;
    for (double v : values) {
        s += v;
    }
    return s / static_cast<double>(values.size());
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw std::invalid_argument("median of an empty list");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

namespace {

SilhouetteRow make_row(std::string model, std::string variant, std::size_t dim, const std::vector<double>& values) {
    SilhouetteRow row;
    row.model_id = std::move(model);
    row.variant = std::move(variant);
    row.dim = dim;
    row.mean = mean(values);
    row.median = median(values);
    row.n = values.size();
    row.mean_band = band(row.mean);
    row.median_band = band(row.median);
    return row;
}

}  // namespace

SilhouetteTable silhouette_summary(const std::vector<SilhouetteSeries>& series) {
    SilhouetteTable table;
    std::map<std::pair<std::string, std::size_t>, std::vector<double>> model_means, model_medians;
    std::vector<std::pair<std::string, std::size_t>> group_order;
    for (const auto& s : series) {
        std::vector<double> defined;
        for (const auto& w : s.windows) {
            if (w) {
                defined.push_back(*w);
            }
        }
        if (defined.empty()) {
            table.warnings.push_back("no defined silhouette for " + s.model_id + "/" + s.variant + "/" +
                                     std::to_string(s.dim) + "d");
            continue;
        }
        auto row = make_row(s.model_id, s.variant, s.dim, defined);
        const auto key = std::make_pair(s.variant, s.dim);
        if (!model_means.contains(key)) {
            group_order.push_back(key);
        }
        model_means[key].push_back(row.mean);
        model_medians[key].push_back(row.median);
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) {
        table.warnings.push_back("all silhouettes undefined; table is empty");
    }
    for (const auto& key : group_order) {
        // The "mean" row aggregates per-model means, the "median" row per-model medians.
        table.grand_rows.push_back(make_row("mean", key.first, key.second, model_means[key]));
        table.grand_rows.push_back(make_row("median", key.first, key.second, model_medians[key]));
    }
    return table;
}

std::optional<double> h_validation_rate(const std::vector<cumulate::ConversionRecord>& records) {
    std::size_t outliers = 0;
    std::size_t validated = 0;
    for (const auto& r : records) {
        if (r.ever_outlier) {
            ++outliers;
            if (r.validates_h) {
                ++validated;
            }
        }
    }
    if (outliers == 0) {
        return std::nullopt;
    }
    return static_cast<double>(validated) / static_cast<double>(outliers);
}

Agreement rescaled_agreement(const std::map<std::string, std::vector<cumulate::ConversionRecord>>& per_model) {
    if (per_model.size() < 2) {
        throw std::invalid_argument("rescaled_agreement needs at least two models");
    }
    // doc_id -> (models with ever_outlier, models validating)
    std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
    std::vector<std::string> order;
    for (const auto& [model, records] : per_model) {
        for (const auto& r : records) {
            auto [it, inserted] = tally.try_emplace(r.doc_id, 0, 0);
            if (inserted && model == per_model.begin()->first) {
                order.push_back(r.doc_id);
            }
            if (r.ever_outlier) {
                ++it->second.first;
                if (r.validates_h) {
                    ++it->second.second;
                }
            }
        }
    }
    const std::size_t models = per_model.size();
    Agreement out;
    std::size_t total_validations = 0;
    for (const auto& id : order) {
        const auto [outlier_models, validating] = tally[id];
        if (outlier_models != models) {
            continue;
        }
        AgreementRecord rec;
        rec.doc_id = id;
        rec.models = models;
        rec.validating_models = validating;
        rec.x = static_cast<double>(validating) / static_cast<double>(models);
        rec.a = rescale(rec.x);
        total_validations += validating;
        out.records.push_back(std::move(rec));
    }
    if (out.records.empty()) {
        out.diagnostic = "no document is an outlier under every model; ever-outlier counts:";
        for (const auto& [model, records] : per_model) {
            const auto count =
                std::count_if(records.begin(), records.end(), [](const auto& r) { return r.ever_outlier; });
            out.diagnostic += " " + model + "=" + std::to_string(count);
        }
        return out;
    }
    double sum_a = 0.0;
    for (const auto& r : out.records) {
        sum_a += r.a;
    }
    out.a_mean_per_doc = sum_a / static_cast<double>(out.records.size());
    const double pooled_x =
        static_cast<double>(total_validations) / static_cast<double>(models * out.records.size());
    out.a_pooled = rescale(pooled_x);
    return out;
}

ValidationSummary validation_summary(
    const std::map<std::string, std::vector<cumulate::ConversionRecord>>& per_model) {
    ValidationSummary summary;
    std::vector<double> defined;
    for (const auto& [model, records] : per_model) {
        auto rate = h_validation_rate(records);
        summary.per_model.emplace_back(model, rate);
        if (rate) {
            defined.push_back(*rate);
        }
    }
    if (!defined.empty()) {
        summary.grand_mean = mean(defined);
    }
    if (per_model.size() >= 2) {
        const auto agreement = rescaled_agreement(per_model);
        for (const auto& r : agreement.records) {
            summary.common_outliers.push_back(r.doc_id);
        }
        summary.mean_a = agreement.a_mean_per_doc;
    }
    return summary;
}

}  // namespace emergent::metrics
