#pragma once

#include "emergent/cluster.hpp"
#include "emergent/corpus_io.hpp"
#include "emergent/cumulate.hpp"
#include "emergent/lexstyle.hpp"
#include "emergent/metrics.hpp"
#include "emergent/reduce.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace emergent::report {

/// A stage failed after outputs were written (CLI exit code 4).
class PartialRunError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct EmbeddingInput {
    std::string model_id;
    corpus_io::Variant variant = corpus_io::Variant::body;
    std::filesystem::path path;
};

struct ResourcePaths {
    std::map<std::string, std::filesystem::path> function_words;     // by language
    std::map<std::string, std::filesystem::path> sentiment_lexicon;  // by language
    std::map<std::string, std::filesystem::path> frequency;          // by language
};

struct PipelineConfig {
    std::filesystem::path corpus;
    std::vector<EmbeddingInput> embeddings;
    std::vector<std::size_t> dims = {10};
    reduce::ReduceParams reduce;
    cluster::HdbscanParams hdbscan;
    corpus_io::ScheduleMode schedule_mode = corpus_io::ScheduleMode::calendar_month;
    std::optional<std::size_t> schedule_count;
    std::uint64_t seed = 42;
    ResourcePaths resources;
    lexstyle::SentimentProvider sentiment_provider = lexstyle::SentimentProvider::builtin_lexicon;
    std::vector<std::size_t> checkpoints;  // 1-based; empty means every window
    std::size_t top_k = 20;
    std::optional<std::filesystem::path> output_dir;
    std::size_t threads = 1;

    /// Throws ConfigError. With `check_paths`, every input file must exist.
    void validate(bool check_paths = true) const;
};

/// Parses a config object. Relative paths resolve against `base_dir`; unknown
/// keys are rejected.
PipelineConfig parse_config(const nlohmann::json& obj, const std::filesystem::path& base_dir);

/// Loads a config file, or the config recorded in a run_manifest.json.
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form with absolute paths; the output directory is omitted.
nlohmann::ordered_json config_to_json(const PipelineConfig& config);

/// Loaded inputs shared by every stage.
struct Inputs {
    corpus_io::Corpus corpus;
    std::vector<corpus_io::EmbeddingSet> embeddings;
    corpus_io::WindowSchedule schedule;
    lexstyle::Resources resources;
    std::map<std::string, lexstyle::SentimentLexicon> lexicons;
};

/// Throws ConfigError or IntegrityError.
Inputs load_inputs(const PipelineConfig& config);

/// `<model>__<variant>__<dim>d`
std::string run_name(std::string_view model_id, corpus_io::Variant variant, std::size_t dim);

/// Runs every (model, variant, dim), writes per-run CSVs, metrics, plot data and
/// lexstyle.json, then run_manifest.json. On a stage failure the manifest records
/// the failing stage and PartialRunError is thrown.
void run_pipeline(const PipelineConfig& config, const std::filesystem::path& output_dir);

/// Recomputes metrics.json and the validation bar CSVs from a run directory.
void write_metrics(const PipelineConfig& config, const std::filesystem::path& run_dir);

/// Recomputes lexstyle.json from a run directory.
void write_lexstyle(const PipelineConfig& config, const Inputs& inputs, const std::filesystem::path& run_dir);

struct ScatterRow {
    std::string doc_id;
    double x = 0.0;
    double y = 0.0;
    int label = -1;
};

/// Rows of one window for a 2D scatter plot: a separate seeded 2D reduction of
/// the window's members, labels taken from the analysis run.
std::vector<ScatterRow> scatter_rows(const corpus_io::Corpus& corpus, const corpus_io::EmbeddingSet& embeddings,
                                     const std::vector<cumulate::WindowLabelRow>& window_rows,
                                     const reduce::ReduceParams& params, std::uint64_t seed);

/// `doc_id,x,y,label,is_outlier`
void write_scatter_csv(const std::filesystem::path& path, const std::vector<ScatterRow>& rows);

/// Writes scatter CSVs for one window of every run in `run_dir`.
void export_plots(const PipelineConfig& config, const Inputs& inputs, const std::filesystem::path& run_dir,
                  std::size_t window);

/// `model_id,x_model` rows and a final `mean,<grand mean>` row. Throws on an
/// empty summary.
void write_validation_bars(const std::filesystem::path& path, const metrics::ValidationSummary& summary);

/// FNV-1a hashes of every input file named by the config.
nlohmann::ordered_json input_hashes(const PipelineConfig& config);

/// Throws IntegrityError when an input recorded in a manifest has changed.
void verify_inputs(const nlohmann::ordered_json& manifest);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);

/// Reads `run_manifest.json`.
nlohmann::ordered_json read_manifest(const std::filesystem::path& run_dir);

}  // namespace emergent::report
