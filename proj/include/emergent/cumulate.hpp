#pragma once

#include "emergent/cluster.hpp"
#include "emergent/corpus_io.hpp"
#include "emergent/reduce.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace emergent::cumulate {

struct RunConfig {
    std::string model_id;
    corpus_io::Variant variant = corpus_io::Variant::body;
    reduce::ReduceParams reduce;  // reduce.seed is ignored; per-window seeds are derived
    cluster::HdbscanParams hdbscan;
    corpus_io::WindowSchedule schedule;
    std::uint64_t seed = 42;
    std::size_t threads = 1;
};

/// Seed for one window: stable hash of (global seed, model, variant, window).
std::uint64_t window_seed(std::uint64_t global_seed, std::string_view model_id, corpus_io::Variant variant,
                          std::size_t window);

struct WindowResult {
    std::size_t window = 0;  // 1-based
    corpus_io::Date end_date;
    std::vector<std::size_t> members;  // corpus indices, ascending
    Matrix layout;                     // rows aligned with members; empty if not fitted
    cluster::ClusterLabeling labeling;
    std::optional<double> silhouette;
    std::size_t effective_neighbors = 0;  // 0 when no layout was fitted
};

/// Cumulative protocol: window t clusters every document dated on or before its
/// end date, from scratch.
std::vector<WindowResult> run_cumulative(const corpus_io::Corpus& corpus, const corpus_io::EmbeddingSet& embeddings,
                                         const RunConfig& config);

/// Reduction + clustering of one member set.
WindowResult run_window(const corpus_io::EmbeddingSet& embeddings, const RunConfig& config, std::size_t window,
                        std::vector<std::size_t> members);

struct Trajectory {
    std::string doc_id;
    std::size_t first_window = 0;  // 1-based
    std::vector<int> labels;       // labels[i] is the label at window first_window + i
};

/// Trajectories in corpus order. Throws IntegrityError when a document is
/// missing from a window at or after its first appearance.
std::vector<Trajectory> build_trajectories(const corpus_io::Corpus& corpus, const std::vector<WindowResult>& results);

struct ConversionRecord {
    std::string doc_id;
    std::string model_id;
    bool ever_outlier = false;
    std::optional<std::size_t> first_outlier_window;
    std::optional<std::size_t> first_conversion_window;
    bool validates_h = false;

    bool operator==(const ConversionRecord&) const = default;
};

ConversionRecord conversion_record(const Trajectory& trajectory, std::string_view model_id);
std::vector<ConversionRecord> conversion_records(const std::vector<Trajectory>& trajectories,
                                                 std::string_view model_id);

struct WindowTableRow {
    std::size_t window = 0;
    corpus_io::Date end_date;
    std::size_t outliers = 0;
    std::size_t members = 0;
    std::size_t converted_later = 0;
    /// Percentage of the window's outliers that are inliers in any later
    /// window. std::nullopt at the final window (no later window exists).
    std::optional<double> percent_converted;
};

/// Checkpoints are 1-based window indices.
std::vector<WindowTableRow> window_table(const std::vector<Trajectory>& trajectories,
                                         const std::vector<corpus_io::Date>& end_dates,
                                         const std::vector<std::size_t>& checkpoints);

// ---------------------------------------------------------------------------
// CSV surfaces

struct WindowLabelRow {
    std::size_t window = 0;
    std::string end_date;
    std::string doc_id;
    int label = -1;
    double glosh = 0.0;
};

void write_window_csv(const std::filesystem::path& path, const corpus_io::Corpus& corpus,
                      const std::vector<WindowResult>& results);
std::vector<WindowLabelRow> read_window_csv(const std::filesystem::path& path);

/// Trajectories rebuilt from per-window label rows (no corpus needed).
std::vector<Trajectory> trajectories_from_rows(const std::vector<WindowLabelRow>& rows);

void write_trajectories_csv(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectories_csv(const std::filesystem::path& path);

void write_conversions_csv(const std::filesystem::path& path, const std::vector<ConversionRecord>& records);
std::vector<ConversionRecord> read_conversions_csv(const std::filesystem::path& path);

void write_window_table_csv(const std::filesystem::path& path, const std::vector<WindowTableRow>& rows);
std::vector<WindowTableRow> read_window_table_csv(const std::filesystem::path& path);

/// One row per window: `window,end_date,members,clusters,outliers,silhouette`
/// (silhouette empty when undefined).
struct WindowSummaryRow {
    std::size_t window = 0;
    std::string end_date;
    std::size_t members = 0;
    std::size_t clusters = 0;
    std::size_t outliers = 0;
    std::optional<double> silhouette;
};

void write_window_summary_csv(const std::filesystem::path& path, const std::vector<WindowResult>& results);
std::vector<WindowSummaryRow> read_window_summary_csv(const std::filesystem::path& path);

/// `48/48` style ratio and `83.33%` / `-` percentage cells.
std::string format_ratio(const WindowTableRow& row);
std::string format_percent(const WindowTableRow& row);

}  // namespace emergent::cumulate
