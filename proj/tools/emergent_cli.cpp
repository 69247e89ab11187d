#include "emergent/corpus_io.hpp"
#include "emergent/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace emergent;

namespace {

int cmd_run(const fs::path& config_path, const std::optional<fs::path>& out) {
    auto config = report::load_config(config_path);
    std::ifstream probe(config_path);
    const auto raw = nlohmann::json::parse(probe, nullptr, false);
    const bool from_manifest = raw.is_object() && raw.contains("manifest_version");
    if (from_manifest) {
        report::verify_inputs(nlohmann::ordered_json::parse(raw.dump()));
    }
    fs::path dir;
    if (out) {
        dir = *out;
    } else if (config.output_dir) {
        dir = *config.output_dir;
    } else {
        throw ConfigError(from_manifest ? "rerunning a manifest needs --out" : "config has no output_dir; pass --out");
    }
    report::run_pipeline(config, dir);
    std::cout << "run complete: " << dir.string() << "\n";
    return 0;
}

int cmd_synth(const fs::path& spec_path, std::uint64_t seed, const fs::path& out, const std::string& format,
              std::size_t dim) {
    const auto spec = corpus_io::load_scenario(spec_path);
    const auto data = corpus_io::generate_synthetic(spec, seed);
    fs::create_directories(out / "embeddings");
    corpus_io::save_corpus(data.corpus, out / "corpus.jsonl");
    nlohmann::ordered_json config;
    config["corpus"] = "corpus.jsonl";
    config["embeddings"] = nlohmann::ordered_json::array();
    const auto ids = corpus_io::doc_ids(data.corpus);
    for (const auto& [model, emb] : data.embeddings) {
        const std::string file = "embeddings/" + model + (format == "jsonl" ? ".jsonl" : ".emb");
        if (format == "jsonl") {
            corpus_io::write_embeddings_jsonl(out / file, ids, emb.matrix);
        } else {
            corpus_io::write_embeddings_binary(out / file, ids, emb.matrix);
        }
        config["embeddings"].push_back({{"model_id", model}, {"variant", "body"}, {"path", file}});
    }
    config["dims"] = {dim};
    config["schedule"] = {{"mode", "calendar_month"}};
    config["seed"] = seed;
    config["checkpoints"] = nlohmann::ordered_json::array();
    config["output_dir"] = "out";
    report::write_json(out / "config.json", config);
    std::ofstream pre(out / "precursors.txt");
    for (const auto& id : data.precursor_ids) pre << id << "\n";
    std::cout << "wrote " << data.corpus.size() << " documents and " << data.embeddings.size()
              << " embedding sets to " << out.string() << "\n";
    return 0;
}

int cmd_metrics(const fs::path& run) {
    const auto config = report::load_config(run / "run_manifest.json");
    report::write_metrics(config, run);
    std::cout << "wrote " << (run / "metrics.json").string() << "\n";
    return 0;
}

int cmd_lexstyle(const fs::path& run) {
    const auto config = report::load_config(run / "run_manifest.json");
    const auto inputs = report::load_inputs(config);
    report::write_lexstyle(config, inputs, run);
    std::cout << "wrote " << (run / "lexstyle.json").string() << "\n";
    return 0;
}

int cmd_export_plots(const fs::path& run, std::size_t window) {
    const auto config = report::load_config(run / "run_manifest.json");
    const auto inputs = report::load_inputs(config);
    if (window == 0 || window > inputs.schedule.count()) {
        throw ConfigError("window " + std::to_string(window) + " outside 1.." + std::to_string(inputs.schedule.count()));
    }
    report::export_plots(config, inputs, run, window);
    std::cout << "wrote scatter data for window " << window << " to " << (run / "plots").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Emerging-topic detection through outlier-to-inlier conversion"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the full pipeline from a config or a run manifest");
    fs::path config_path;
    std::optional<fs::path> run_out;
    run->add_option("--config", config_path, "Config JSON or run_manifest.json")->required();
    run->add_option("--out", run_out, "Output directory (overrides the config)");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus, embeddings and config");
    fs::path spec_path, synth_out;
    std::uint64_t seed = 42;
    std::string format = "binary";
    std::size_t dim = 10;
    synth->add_option("--spec", spec_path, "Scenario JSON")->required();
    synth->add_option("--seed", seed, "Random seed")->required();
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--format", format, "Embedding encoding")->check(CLI::IsMember({"binary", "jsonl"}));
    synth->add_option("--dim", dim, "Reduced dimension written to the config")->check(CLI::IsMember({2, 3, 5, 10}));

    auto* metrics = app.add_subcommand("metrics", "Recompute metrics.json from a run directory");
    fs::path metrics_run;
    metrics->add_option("--run", metrics_run, "Run directory")->required();

    auto* lex = app.add_subcommand("lexstyle", "Recompute lexstyle.json from a run directory");
    fs::path lex_run;
    lex->add_option("--run", lex_run, "Run directory")->required();

    auto* plots = app.add_subcommand("export-plots", "Write 2D scatter data for one window");
    fs::path plots_run;
    std::size_t window = 0;
    plots->add_option("--run", plots_run, "Run directory")->required();
    plots->add_option("--window", window, "1-based window index")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(config_path, run_out);
        if (*synth) return cmd_synth(spec_path, seed, synth_out, format, dim);
        if (*metrics) return cmd_metrics(metrics_run);
        if (*lex) return cmd_lexstyle(lex_run);
        if (*plots) return cmd_export_plots(plots_run, window);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IntegrityError& e) {
        std::cerr << "data integrity error: " << e.what() << "\n";
        return 3;
    } catch (const report::PartialRunError& e) {
        std::cerr << "partial run: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
