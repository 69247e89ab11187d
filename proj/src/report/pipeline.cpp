#include "emergent/report.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace emergent::report {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IntegrityError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return hex64(fnv1a(ss.str()));
}

std::string iso_time(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

ordered_json design_decisions(const PipelineConfig& config) {
    return {
        {"knn", "exact brute force, ties to the smaller index"},
        {"negative_sample_rate", reduce::kNegativeSampleRate},
        {"initialization", "spectral when the neighbor graph is connected, else seeded uniform [-10, 10]"},
        {"window_seed", "hash of (seed, model_id, variant, window)"},
        {"small_windows", "n_neighbors and min_samples clamped to members - 1; fewer than 3 members are all -1"},
        {"outlier_rule", "label -1 from excess-of-mass selection; GLOSH reported, never thresholded"},
        {"cluster_ids", "canonical by lowest member index"},
        {"silhouette_space", "reduced layout that was clustered, label -1 excluded"},
        {"silhouette_bands", "strong > 0.7, moderate [0.5, 0.7], intermediate [0.25, 0.5), weak < 0.25"},
        {"final_window_outliers", "counted in the denominator as non-validating"},
        {"inlier_later", "any later window"},
        {"agreement", "per-document x over documents that are outliers under every model"},
        {"consensus_partition", "majority of models; ties go to non-converted"},
        {"tfidf_fit", "union of both groups, no stopword removal"},
        {"sentiment_provider", lexstyle::to_string(config.sentiment_provider)},
        {"neutrality",
         config.sentiment_provider == lexstyle::SentimentProvider::builtin_lexicon
             ? "fraction of words without nonzero lexicon polarity"
             : "external per-document score"},
        {"readability", "Flesch-Kincaid applied to every language; non-English documents flagged"},
    };
}

std::vector<std::size_t> scatter_windows(const PipelineConfig& config, std::size_t windows) {
    if (config.checkpoints.empty()) {
        return {windows};
    }
    return config.checkpoints;
}

/// Writes and re-reads every per-run file.
void emit_run(const fs::path& dir, const corpus_io::Corpus& corpus, const std::vector<cumulate::WindowResult>& results,
              const std::string& model_id, const std::vector<std::size_t>& checkpoints) {
    fs::create_directories(dir / "layouts");
    const auto trajectories = cumulate::build_trajectories(corpus, results);
    const auto records = cumulate::conversion_records(trajectories, model_id);
    std::vector<corpus_io::Date> ends;
    for (const auto& w : results) ends.push_back(w.end_date);
    std::vector<std::size_t> points = checkpoints;
    if (points.empty()) {
        for (std::size_t t = 1; t <= results.size(); ++t) points.push_back(t);
    }
    const auto table = cumulate::window_table(trajectories, ends, points);

    cumulate::write_window_csv(dir / "windows.csv", corpus, results);
    cumulate::write_window_summary_csv(dir / "window_summary.csv", results);
    cumulate::write_trajectories_csv(dir / "trajectories.csv", trajectories);
    cumulate::write_conversions_csv(dir / "conversions.csv", records);
    cumulate::write_window_table_csv(dir / "window_table.csv", table);
    for (const auto& w : results) {
        if (w.layout.empty()) continue;
        std::vector<std::string> ids;
        for (auto i : w.members) ids.push_back(corpus[i].doc_id);
        corpus_io::write_embeddings_binary(dir / "layouts" / ("window_" + std::to_string(w.window) + ".emb"), ids,
                                           w.layout);
    }

    // Self-validation: every file parses under its schema and round-trips.
    if (cumulate::trajectories_from_rows(cumulate::read_window_csv(dir / "windows.csv")).size() !=
            trajectories.size() ||
        cumulate::read_trajectories_csv(dir / "trajectories.csv").size() != trajectories.size() ||
        cumulate::read_conversions_csv(dir / "conversions.csv") != records ||
        cumulate::read_window_table_csv(dir / "window_table.csv").size() != table.size() ||
        cumulate::read_window_summary_csv(dir / "window_summary.csv").size() != results.size()) {
        throw IntegrityError("self-validation failed for " + dir.string());
    }
}

ordered_json list_outputs(const fs::path& root) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), root).generic_string();
        if (rel != "run_manifest.json") files.push_back(rel);
    }
    std::sort(files.begin(), files.end());
    ordered_json out = ordered_json::array();
    for (const auto& f : files) {
        out.push_back({{"path", f}, {"fnv1a64", file_hash(root / f)}});
    }
    return out;
}

}  // namespace

void write_json(const fs::path& path, const ordered_json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IntegrityError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

ordered_json input_hashes(const PipelineConfig& config) {
    ordered_json j;
    j["corpus"] = {{"path", config.corpus.string()}, {"fnv1a64", file_hash(config.corpus)}};
    j["embeddings"] = ordered_json::array();
    for (const auto& e : config.embeddings) {
        j["embeddings"].push_back({{"model_id", e.model_id},
                                   {"variant", corpus_io::to_string(e.variant)},
                                   {"path", e.path.string()},
                                   {"fnv1a64", file_hash(e.path)}});
    }
    j["resources"] = ordered_json::array();
    for (const auto* m : {&config.resources.function_words, &config.resources.sentiment_lexicon,
                          &config.resources.frequency}) {
        for (const auto& [lang, p] : *m) {
            j["resources"].push_back({{"path", p.string()}, {"fnv1a64", file_hash(p)}});
        }
    }
    return j;
}

void verify_inputs(const ordered_json& manifest) {
    if (!manifest.contains("config") || !manifest.contains("inputs")) {
        throw ConfigError("manifest lacks config or inputs");
    }
    auto config = parse_config(nlohmann::json::parse(manifest["config"].dump()), fs::current_path());
    const auto now = input_hashes(config);
    if (nlohmann::json::parse(now.dump()) != nlohmann::json::parse(manifest["inputs"].dump())) {
        throw IntegrityError("input files changed since the manifest was written");
    }
}

void run_pipeline(const PipelineConfig& config, const fs::path& output_dir) {
    const auto started = std::chrono::system_clock::now();
    config.validate();
    const Inputs inputs = load_inputs(config);

    fs::create_directories(output_dir);
    for (const char* owned : {"runs", "plots", "metrics.json", "lexstyle.json", "run_manifest.json"}) {
        fs::remove_all(output_dir / owned);
    }
    ordered_json manifest;
    manifest["manifest_version"] = 1;
    manifest["tool"] = "emergent-topics 0.1.0";
    manifest["config"] = config_to_json(config);
    manifest["inputs"] = input_hashes(config);
    manifest["design_decisions"] = design_decisions(config);
    manifest["windows"] = ordered_json::array();
    for (std::size_t t = 0; t < inputs.schedule.count(); ++t) {
        manifest["windows"].push_back({{"window", t + 1}, {"end_date", inputs.schedule.boundaries[t].to_string()}});
    }
    manifest["seeds"] = ordered_json::array();

    std::string stage = "cluster";
    std::string failure;
    try {
        for (auto dim : config.dims) {
            for (std::size_t e = 0; e < config.embeddings.size(); ++e) {
                const auto& emb = inputs.embeddings[e];
                cumulate::RunConfig rc;
                rc.model_id = emb.model_id;
                rc.variant = emb.variant;
                rc.reduce = config.reduce;
                rc.reduce.target_dim = dim;
                rc.hdbscan = config.hdbscan;
                rc.schedule = inputs.schedule;
                rc.seed = config.seed;
                rc.threads = config.threads;
                stage = "cluster " + run_name(emb.model_id, emb.variant, dim);
                const auto results = cumulate::run_cumulative(inputs.corpus, emb, rc);
                emit_run(output_dir / "runs" / run_name(emb.model_id, emb.variant, dim), inputs.corpus, results,
                         emb.model_id, config.checkpoints);
                ordered_json seeds = ordered_json::array();
                for (const auto& w : results) {
                    seeds.push_back(hex64(cumulate::window_seed(config.seed, emb.model_id, emb.variant, w.window)));
                }
                manifest["seeds"].push_back({{"run", run_name(emb.model_id, emb.variant, dim)}, {"windows", seeds}});
            }
        }
        stage = "metrics";
        write_metrics(config, output_dir);
        stage = "plots";
        for (auto t : scatter_windows(config, inputs.schedule.count())) {
            export_plots(config, inputs, output_dir, t);
        }
        stage = "lexstyle";
        write_lexstyle(config, inputs, output_dir);
    } catch (const std::exception& e) {
        failure = e.what();
    }

    if (failure.empty()) {
        manifest["status"] = "complete";
        manifest["failure"] = nullptr;
    } else {
        manifest["status"] = "failed";
        manifest["failure"] = {{"stage", stage}, {"message", failure}};
    }
    manifest["outputs"] = list_outputs(output_dir);
    const auto finished = std::chrono::system_clock::now();
    manifest["timing"] = {{"started_at", iso_time(started)},
                          {"finished_at", iso_time(finished)},
                          {"elapsed_seconds", std::chrono::duration<double>(finished - started).count()}};
    write_json(output_dir / "run_manifest.json", manifest);
    if (!failure.empty()) {
        throw PartialRunError("stage '" + stage + "' failed: " + failure);
    }
}

}  // namespace emergent::report
