#include "emergent/report.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace emergent::report {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

#ifdef EMERGENT_DEFAULT_RESOURCE_DIR
const fs::path kDefaultResources = EMERGENT_DEFAULT_RESOURCE_DIR;
#else
const fs::path kDefaultResources;
#endif

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    if (!obj.is_object()) {
        throw ConfigError(where + " must be an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (!known.contains(key)) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) {
        throw ConfigError("empty path in config");
    }
    fs::path path(p);
    if (path.is_relative()) {
        path = base / path;
    }
    return fs::absolute(path).lexically_normal();
}

std::size_t positive(const json& v, const std::string& what) {
    if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw ConfigError(what + " must be a positive integer");
    }
    return v.get<std::size_t>();
}

std::map<std::string, fs::path> language_paths(const json& v, const fs::path& base, const std::string& what) {
    if (!v.is_object()) {
        throw ConfigError(what + " must map language codes to paths");
    }
    std::map<std::string, fs::path> out;
    for (const auto& [lang, p] : v.items()) {
        if (!p.is_string()) {
            throw ConfigError(what + "." + lang + " must be a path");
        }
        out[lang] = resolve(base, p.get<std::string>());
    }
    return out;
}

ResourcePaths default_resources() {
    ResourcePaths r;
    if (kDefaultResources.empty() || !fs::exists(kDefaultResources)) {
        return r;
    }
    for (const auto& entry : fs::directory_iterator(kDefaultResources)) {
        if (!entry.is_directory()) continue;
        const auto lang = entry.path().filename().string();
        const auto dir = fs::absolute(entry.path()).lexically_normal();
        if (fs::exists(dir / "function_words.txt")) r.function_words[lang] = dir / "function_words.txt";
        if (fs::exists(dir / "sentiment.tsv")) r.sentiment_lexicon[lang] = dir / "sentiment.tsv";
        if (fs::exists(dir / "frequency.tsv")) r.frequency[lang] = dir / "frequency.tsv";
    }
    return r;
}

bool safe_id(const std::string& id) {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    }) && id.find("__") == std::string::npos;
}

}  // namespace

void PipelineConfig::validate(bool check_paths) const {
    if (embeddings.empty()) {
        throw ConfigError("config: embeddings list is empty");
    }
    std::set<std::pair<std::string, corpus_io::Variant>> seen;
    for (const auto& e : embeddings) {
        if (!safe_id(e.model_id)) {
            throw ConfigError("config: model_id '" + e.model_id +
                              "' must be non-empty [A-Za-z0-9._-] without a double underscore");
        }
        if (!seen.insert({e.model_id, e.variant}).second) {
            throw ConfigError("config: duplicate embeddings for " + e.model_id + "/" +
                              std::string(corpus_io::to_string(e.variant)));
        }
    }
    if (dims.empty()) {
        throw ConfigError("config: dims must be non-empty");
    }
    std::set<std::size_t> dim_set;
    for (auto d : dims) {
        if (d != 2 && d != 3 && d != 5 && d != 10) {
            throw ConfigError("config: dim " + std::to_string(d) + " not in {2, 3, 5, 10}");
        }
        if (!dim_set.insert(d).second) {
            throw ConfigError("config: dim " + std::to_string(d) + " listed twice");
        }
    }
    try {
        auto r = reduce;
        r.target_dim = dims.front();
        r.validate();
        hdbscan.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (schedule_mode == corpus_io::ScheduleMode::quantile && (!schedule_count || *schedule_count == 0)) {
        throw ConfigError("config: quantile schedule needs a positive count");
    }
    for (auto c : checkpoints) {
        if (c == 0) {
            throw ConfigError("config: checkpoints are 1-based window indices");
        }
    }
    if (top_k == 0 || threads == 0) {
        throw ConfigError("config: top_k and threads must be positive");
    }
    if (!check_paths) {
        return;
    }
    auto need = [](const fs::path& p, const std::string& what) {
        if (!fs::is_regular_file(p)) {
            throw ConfigError("config: " + what + " not found: " + p.string());
        }
    };
    need(corpus, "corpus");
    for (const auto& e : embeddings) {
        need(e.path, "embeddings for " + e.model_id);
    }
    for (const auto* m : {&resources.function_words, &resources.sentiment_lexicon, &resources.frequency}) {
        for (const auto& [lang, p] : *m) {
            need(p, "resource for '" + lang + "'");
        }
    }
}

PipelineConfig parse_config(const json& obj, const fs::path& base_dir) {
    reject_unknown(obj,
                   {"corpus", "embeddings", "dims", "reduce", "hdbscan", "schedule", "seed", "resources",
                    "sentiment_provider", "checkpoints", "top_k", "output_dir", "threads"},
                   "config");
    PipelineConfig c;
    try {
        if (!obj.contains("corpus") || !obj["corpus"].is_string()) {
            throw ConfigError("config: 'corpus' path is required");
        }
        c.corpus = resolve(base_dir, obj["corpus"].get<std::string>());

        if (!obj.contains("embeddings") || !obj["embeddings"].is_array()) {
            throw ConfigError("config: 'embeddings' list is required");
        }
        for (const auto& e : obj["embeddings"]) {
            reject_unknown(e, {"model_id", "variant", "path"}, "config.embeddings[]");
            EmbeddingInput in;
            in.model_id = e.at("model_id").get<std::string>();
            const auto variant = corpus_io::parse_variant(e.value("variant", "body"));
            if (!variant) {
                throw ConfigError("config: unknown variant '" + e.value("variant", "") + "'");
            }
            in.variant = *variant;
            in.path = resolve(base_dir, e.at("path").get<std::string>());
            c.embeddings.push_back(std::move(in));
        }

        if (obj.contains("dims")) {
            c.dims.clear();
            for (const auto& d : obj["dims"]) {
                c.dims.push_back(positive(d, "config.dims[]"));
            }
        }
        if (obj.contains("reduce")) {
            const auto& r = obj["reduce"];
            reject_unknown(r, {"n_neighbors", "min_dist", "n_epochs", "metric"}, "config.reduce");
            if (r.contains("n_neighbors")) c.reduce.n_neighbors = positive(r["n_neighbors"], "reduce.n_neighbors");
            if (r.contains("n_epochs")) c.reduce.n_epochs = positive(r["n_epochs"], "reduce.n_epochs");
            if (r.contains("min_dist")) {
                if (!r["min_dist"].is_number()) throw ConfigError("reduce.min_dist must be a number");
                c.reduce.min_dist = r["min_dist"].get<double>();
            }
            if (r.contains("metric")) {
                const auto m = reduce::parse_metric(r["metric"].get<std::string>());
                if (!m) throw ConfigError("config: unknown metric '" + r["metric"].get<std::string>() + "'");
                c.reduce.metric = *m;
            }
        }
        if (obj.contains("hdbscan")) {
            const auto& h = obj["hdbscan"];
            reject_unknown(h, {"min_cluster_size", "min_samples"}, "config.hdbscan");
            if (h.contains("min_cluster_size")) {
                c.hdbscan.min_cluster_size = positive(h["min_cluster_size"], "hdbscan.min_cluster_size");
            }
            if (h.contains("min_samples")) c.hdbscan.min_samples = positive(h["min_samples"], "hdbscan.min_samples");
        }
        if (obj.contains("schedule")) {
            const auto& s = obj["schedule"];
            reject_unknown(s, {"mode", "count"}, "config.schedule");
            if (s.contains("mode")) {
                const auto mode = corpus_io::parse_schedule_mode(s["mode"].get<std::string>());
                if (!mode) throw ConfigError("config: unknown schedule mode '" + s["mode"].get<std::string>() + "'");
                c.schedule_mode = *mode;
            }
            if (s.contains("count") && !s["count"].is_null()) {
                c.schedule_count = positive(s["count"], "schedule.count");
            }
        }
        if (obj.contains("seed")) {
            const auto& seed = obj["seed"];
            if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
                throw ConfigError("config: seed must be a nonnegative integer");
            }
            c.seed = obj["seed"].get<std::uint64_t>();
        }
        if (obj.contains("resources")) {
            const auto& r = obj["resources"];
            reject_unknown(r, {"function_words", "sentiment_lexicon", "frequency"}, "config.resources");
            if (r.contains("function_words")) {
                c.resources.function_words = language_paths(r["function_words"], base_dir, "resources.function_words");
            }
            if (r.contains("sentiment_lexicon")) {
                c.resources.sentiment_lexicon =
                    language_paths(r["sentiment_lexicon"], base_dir, "resources.sentiment_lexicon");
            }
            if (r.contains("frequency")) {
                c.resources.frequency = language_paths(r["frequency"], base_dir, "resources.frequency");
            }
        } else {
            c.resources = default_resources();
        }
        if (obj.contains("sentiment_provider")) {
            const auto p = lexstyle::parse_sentiment_provider(obj["sentiment_provider"].get<std::string>());
            if (!p) {
                throw ConfigError("config: unknown sentiment_provider '" +
                                  obj["sentiment_provider"].get<std::string>() + "'");
            }
            c.sentiment_provider = *p;
        }
        if (obj.contains("checkpoints")) {
            for (const auto& v : obj["checkpoints"]) {
                c.checkpoints.push_back(positive(v, "config.checkpoints[]"));
            }
        }
        if (obj.contains("top_k")) c.top_k = positive(obj["top_k"], "config.top_k");
        if (obj.contains("threads")) c.threads = positive(obj["threads"], "config.threads");
        if (obj.contains("output_dir") && !obj["output_dir"].is_null()) {
            c.output_dir = resolve(base_dir, obj["output_dir"].get<std::string>());
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    json obj;
    try {
        obj = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    const auto base = fs::absolute(path).parent_path();
    if (obj.is_object() && obj.contains("manifest_version")) {
        if (!obj.contains("config")) {
            throw ConfigError(path.string() + ": manifest has no config");
        }
        auto config = parse_config(obj["config"], base);
        config.output_dir.reset();
        return config;
    }
    return parse_config(obj, base);
}

ordered_json config_to_json(const PipelineConfig& c) {
    ordered_json o;
    o["corpus"] = c.corpus.string();
    o["embeddings"] = ordered_json::array();
    for (const auto& e : c.embeddings) {
        o["embeddings"].push_back(
            {{"model_id", e.model_id}, {"variant", corpus_io::to_string(e.variant)}, {"path", e.path.string()}});
    }
    o["dims"] = c.dims;
    o["reduce"] = {{"n_neighbors", c.reduce.n_neighbors},
                   {"min_dist", c.reduce.min_dist},
                   {"n_epochs", c.reduce.n_epochs},
                   {"metric", reduce::to_string(c.reduce.metric)}};
    o["hdbscan"] = {{"min_cluster_size", c.hdbscan.min_cluster_size}, {"min_samples", c.hdbscan.min_samples}};
    o["schedule"] = {{"mode", corpus_io::to_string(c.schedule_mode)},
                     {"count", c.schedule_count ? ordered_json(*c.schedule_count) : ordered_json(nullptr)}};
    o["seed"] = c.seed;
    auto paths = [](const std::map<std::string, fs::path>& m) {
        ordered_json j = ordered_json::object();
        for (const auto& [lang, p] : m) j[lang] = p.string();
        return j;
    };
    o["resources"] = {{"function_words", paths(c.resources.function_words)},
                      {"sentiment_lexicon", paths(c.resources.sentiment_lexicon)},
                      {"frequency", paths(c.resources.frequency)}};
    o["sentiment_provider"] = lexstyle::to_string(c.sentiment_provider);
    o["checkpoints"] = c.checkpoints;
    o["top_k"] = c.top_k;
    o["threads"] = c.threads;
    return o;
}

Inputs load_inputs(const PipelineConfig& config) {
    Inputs in;
    in.corpus = corpus_io::load_corpus(config.corpus);
    if (in.corpus.empty()) {
        throw IntegrityError("corpus " + config.corpus.string() + " is empty");
    }
    for (const auto& e : config.embeddings) {
        in.embeddings.push_back(corpus_io::load_embeddings(e.path, in.corpus, e.model_id, e.variant));
    }
    try {
        in.schedule = corpus_io::build_schedule(in.corpus, config.schedule_mode, config.schedule_count);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("schedule: ") + e.what());
    }
    for (auto c : config.checkpoints) {
        if (c > in.schedule.count()) {
            throw ConfigError("checkpoint " + std::to_string(c) + " exceeds the " +
                              std::to_string(in.schedule.count()) + " windows of the schedule");
        }
    }
    for (const auto& [lang, p] : config.resources.function_words) {
        in.resources.languages[lang].function_words = lexstyle::load_word_list(p);
    }
    for (const auto& [lang, p] : config.resources.frequency) {
        in.resources.languages[lang].frequency = lexstyle::load_frequency(p);
    }
    for (const auto& [lang, p] : config.resources.sentiment_lexicon) {
        in.lexicons.emplace(lang, lexstyle::SentimentLexicon::load(p));
    }
    return in;
}

std::string run_name(std::string_view model_id, corpus_io::Variant variant, std::size_t dim) {
    return std::string(model_id) + "__" + std::string(corpus_io::to_string(variant)) + "__" + std::to_string(dim) +
           "d";
}

ordered_json read_manifest(const fs::path& run_dir) {
    const auto path = run_dir / "run_manifest.json";
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("no run_manifest.json in " + run_dir.string());
    }
    try {
        return ordered_json::parse(in);
    } catch (const ordered_json::parse_error& e) {
        throw IntegrityError(path.string() + ": " + e.what());
    }
}

}  // namespace emergent::report
