#pragma once

#include "emergent/common.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace emergent::cumulate {
struct ConversionRecord;
}

namespace emergent::metrics {

/// Mean silhouette over points whose label is not -1, euclidean distances.
/// Singleton clusters contribute 0. std::nullopt with fewer than two clusters.
std::optional<double> silhouette(const Matrix& points, std::span<const int> labels);

enum class Band { strong, moderate, intermediate, weak };

/// strong > 0.7, moderate [0.5, 0.7], weak < 0.25; values in [0.25, 0.5) are
/// "intermediate".
Band band(double silhouette);
std::string_view to_string(Band b);

/// One defined-or-undefined silhouette per window for one configuration.
struct SilhouetteSeries {
    std::string model_id;
    std::string variant;
    std::size_t dim = 0;
    std::vector<std::optional<double>> windows;
};

struct SilhouetteRow {
    std::string model_id;  // "mean" / "median" for the grand rows
    std::string variant;
    std::size_t dim = 0;
    double mean = 0.0;
    double median = 0.0;
    std::size_t n = 0;  // defined windows; models for the grand rows
    Band mean_band = Band::weak;
    Band median_band = Band::weak;
};

struct SilhouetteTable {
    std::vector<SilhouetteRow> rows;       // per (model, variant, dim)
    std::vector<SilhouetteRow> grand_rows; // per (variant, dim): mean and median over models
    std::vector<std::string> warnings;
};

double mean(std::span<const double> values);
double median(std::vector<double> values);

SilhouetteTable silhouette_summary(const std::vector<SilhouetteSeries>& series);

/// count(validates_H) / count(ever_outlier); std::nullopt without outliers.
std::optional<double> h_validation_rate(const std::vector<cumulate::ConversionRecord>& records);

/// a = |2x - 1|
inline double rescale(double x) { return std::abs(2.0 * x - 1.0); }

struct AgreementRecord {
    std::string doc_id;
    std::size_t validating_models = 0;
    std::size_t models = 0;
    double x = 0.0;
    double a = 0.0;
};

struct Agreement {
    std::vector<AgreementRecord> records;  // common-outlier documents, corpus-id order
    std::optional<double> a_mean_per_doc;
    std::optional<double> a_pooled;
    std::string diagnostic;  // set when the common-outlier set is empty
};

/// Records per model id; every model must cover the same documents.
Agreement rescaled_agreement(const std::map<std::string, std::vector<cumulate::ConversionRecord>>& per_model);

struct ValidationSummary {
    std::vector<std::pair<std::string, std::optional<double>>> per_model;
    std::optional<double> grand_mean;  // mean over models with a defined rate
    std::vector<std::string> common_outliers;
    std::optional<double> mean_a;
};

ValidationSummary validation_summary(
    const std::map<std::string, std::vector<cumulate::ConversionRecord>>& per_model);

}  // namespace emergent::metrics
