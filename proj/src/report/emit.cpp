#include "emergent/report.hpp"

#include "emergent/csv.hpp"

#include <fstream>
#include <set>

namespace emergent::report {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

struct RunRef {
    std::string model_id;
    corpus_io::Variant variant;
    std::size_t dim;
    fs::path dir;
};

/// Runs grouped by (variant, dim) in config order.
struct Group {
    corpus_io::Variant variant;
    std::size_t dim;
    std::vector<RunRef> runs;
};

std::vector<Group> groups_of(const PipelineConfig& config, const fs::path& run_dir) {
    std::vector<Group> groups;
    for (auto dim : config.dims) {
        for (const auto& e : config.embeddings) {
            auto it = std::find_if(groups.begin(), groups.end(),
                                   [&](const Group& g) { return g.variant == e.variant && g.dim == dim; });
            if (it == groups.end()) {
                groups.push_back({e.variant, dim, {}});
                it = std::prev(groups.end());
            }
            it->runs.push_back({e.model_id, e.variant, dim, run_dir / "runs" / run_name(e.model_id, e.variant, dim)});
        }
    }
    return groups;
}

std::map<std::string, std::vector<cumulate::ConversionRecord>> conversions_of(const Group& g) {
    std::map<std::string, std::vector<cumulate::ConversionRecord>> out;
    for (const auto& r : g.runs) {
        out[r.model_id] = cumulate::read_conversions_csv(r.dir / "conversions.csv");
    }
    return out;
}

metrics::SilhouetteTable silhouette_table(const std::vector<Group>& groups) {
    std::vector<metrics::SilhouetteSeries> series;
    for (const auto& g : groups) {
        for (const auto& r : g.runs) {
            metrics::SilhouetteSeries s{r.model_id, std::string(corpus_io::to_string(r.variant)), r.dim, {}};
            for (const auto& row : cumulate::read_window_summary_csv(r.dir / "window_summary.csv")) {
                s.windows.push_back(row.silhouette);
            }
            series.push_back(std::move(s));
        }
    }
    return metrics::silhouette_summary(series);
}

ordered_json row_json(const metrics::SilhouetteRow& r) {
    return {{"model_id", r.model_id},
            {"variant", r.variant},
            {"dim", r.dim},
            {"mean", r.mean},
            {"median", r.median},
            {"n", r.n},
            {"mean_band", metrics::to_string(r.mean_band)},
            {"median_band", metrics::to_string(r.median_band)}};
}

std::string group_suffix(const Group& g) {
    return std::string(corpus_io::to_string(g.variant)) + "__" + std::to_string(g.dim) + "d";
}

}  // namespace

void write_validation_bars(const fs::path& path, const metrics::ValidationSummary& summary) {
    if (summary.per_model.empty()) {
        throw std::invalid_argument("validation bars need at least one model");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IntegrityError("cannot write " + path.string());
    }
    out << "model_id,x_model\n";
    for (const auto& [model, rate] : summary.per_model) {
        out << csv::join({model, rate ? csv::format_double(*rate) : ""}) << '\n';
    }
    out << csv::join({"mean", summary.grand_mean ? csv::format_double(*summary.grand_mean) : ""}) << '\n';
}

void write_metrics(const PipelineConfig& config, const fs::path& run_dir) {
    const auto groups = groups_of(config, run_dir);
    fs::create_directories(run_dir / "plots");

    ordered_json validation = ordered_json::array();
    for (const auto& g : groups) {
        const auto per_model = conversions_of(g);
        const auto summary = metrics::validation_summary(per_model);
        const auto bars = run_dir / "plots" / ("validation_bars__" + group_suffix(g) + ".csv");
        write_validation_bars(bars, summary);
        if (csv::read(bars, {"model_id", "x_model"}).rows.size() != summary.per_model.size() + 1) {
            throw IntegrityError("self-validation failed for " + bars.string());
        }

        ordered_json models = ordered_json::array();
        for (const auto& [model, rate] : summary.per_model) {
            const auto& recs = per_model.at(model);
            const auto outliers = std::count_if(recs.begin(), recs.end(), [](const auto& r) { return r.ever_outlier; });
            const auto validating = std::count_if(recs.begin(), recs.end(), [](const auto& r) { return r.validates_h; });
            models.push_back({{"model_id", model},
                              {"x_model", opt(rate)},
                              {"ever_outlier", outliers},
                              {"validates_H", validating}});
        }
        ordered_json agreement;
        if (per_model.size() >= 2) {
            const auto a = metrics::rescaled_agreement(per_model);
            ordered_json records = ordered_json::array();
            for (const auto& r : a.records) {
                records.push_back({{"doc_id", r.doc_id},
                                   {"validating_models", r.validating_models},
                                   {"models", r.models},
                                   {"x", r.x},
                                   {"a", r.a}});
            }
            agreement = {{"common_outliers", a.records.size()},
                         {"a_mean_per_doc", opt(a.a_mean_per_doc)},
                         {"a_pooled", opt(a.a_pooled)},
                         {"diagnostic", a.diagnostic.empty() ? ordered_json(nullptr) : ordered_json(a.diagnostic)},
                         {"records", records}};
        } else {
            agreement = {{"common_outliers", nullptr},
                         {"a_mean_per_doc", nullptr},
                         {"a_pooled", nullptr},
                         {"diagnostic", "agreement needs at least two models"},
                         {"records", ordered_json::array()}};
        }
        ordered_json tables = ordered_json::array();
        for (const auto& r : g.runs) {
            ordered_json rows = ordered_json::array();
            for (const auto& row : cumulate::read_window_table_csv(r.dir / "window_table.csv")) {
                rows.push_back({{"window", row.window},
                                {"end_date", row.end_date.to_string()},
                                {"outliers_over_members", cumulate::format_ratio(row)},
                                {"percent_becoming_inliers", cumulate::format_percent(row)}});
            }
            tables.push_back({{"model_id", r.model_id}, {"rows", rows}});
        }
        validation.push_back({{"variant", corpus_io::to_string(g.variant)},
                              {"dim", g.dim},
                              {"models", models},
                              {"grand_mean", opt(summary.grand_mean)},
                              {"agreement", agreement},
                              {"window_tables", tables}});
    }

    const auto table = silhouette_table(groups);
    ordered_json rows = ordered_json::array();
    ordered_json grand = ordered_json::array();
    for (const auto& r : table.rows) rows.push_back(row_json(r));
    for (const auto& r : table.grand_rows) grand.push_back(row_json(r));

    ordered_json out;
    out["silhouette"] = {{"rows", rows}, {"grand_rows", grand}, {"warnings", table.warnings}};
    out["validation"] = validation;
    out["notes"] = {{"silhouette_space", "reduced layout that was clustered, label -1 excluded"},
                    {"final_window_outliers", "counted in the denominator as non-validating"}};
    write_json(run_dir / "metrics.json", out);
}

// ---------------------------------------------------------------------------
// lexstyle.json

namespace {

ordered_json delta_json(const std::vector<lexstyle::DeltaEntry>& entries) {
    ordered_json out = ordered_json::array();
    for (const auto& e : entries) {
        out.push_back({{"word", e.word},
                       {"delta", e.delta},
                       {"occ_diff", e.occ_diff},
                       {"p_value", opt(e.p_value)},
                       {"stars", lexstyle::stars(e.p_value)}});
    }
    return out;
}

ordered_json feature_means(const std::vector<lexstyle::StyleProfile>& profiles) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    std::vector<std::string> order;
    for (const auto& p : profiles) {
        for (const auto& f : lexstyle::features(p)) {
            const auto key = f.group + "." + f.name;
            auto [it, inserted] = acc.try_emplace(key, 0.0, 0);
            if (inserted) order.push_back(key);
            it->second.first += f.value;
            ++it->second.second;
        }
    }
    ordered_json out = ordered_json::object();
    for (const auto& key : order) {
        out[key] = acc[key].first / static_cast<double>(acc[key].second);
    }
    return out;
}

}  // namespace

void write_lexstyle(const PipelineConfig& config, const Inputs& inputs, const fs::path& run_dir) {
    const auto groups = groups_of(config, run_dir);
    const auto table = silhouette_table(groups);

    // Configuration with the best mean silhouette over models; first on ties.
    std::size_t chosen = 0;
    std::optional<double> best;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (const auto& r : table.grand_rows) {
            if (r.model_id == "mean" && r.variant == corpus_io::to_string(groups[i].variant) &&
                r.dim == groups[i].dim && (!best || r.mean > *best)) {
                best = r.mean;
                chosen = i;
            }
        }
    }
    const auto& g = groups[chosen];
    const auto per_model = conversions_of(g);
    const std::size_t models = per_model.size();

    std::map<std::string, std::pair<std::size_t, std::size_t>> votes;  // ever_outlier, validates_H
    for (const auto& [model, recs] : per_model) {
        for (const auto& r : recs) {
            auto& v = votes[r.doc_id];
            v.first += r.ever_outlier ? 1 : 0;
            v.second += r.validates_h ? 1 : 0;
        }
    }
    std::vector<std::size_t> converted, non_converted;
    std::vector<std::string> ties;
    for (std::size_t i = 0; i < inputs.corpus.size(); ++i) {
        const auto& id = inputs.corpus[i].doc_id;
        auto it = votes.find(id);
        if (it == votes.end() || 2 * it->second.first < models) continue;
        if (2 * it->second.second > models) {
            converted.push_back(i);
        } else {
            non_converted.push_back(i);
            if (2 * it->second.second == models) ties.push_back(id);
        }
    }

    ordered_json out;
    std::vector<std::string> notices;
    ordered_json model_ids = ordered_json::array();
    for (const auto& [m, _] : per_model) model_ids.push_back(m);
    out["configuration"] = {{"variant", corpus_io::to_string(g.variant)}, {"dim", g.dim}, {"models", model_ids},
                            {"mean_silhouette", opt(best)}};
    out["text_field"] = "body";
    out["sentiment_provider"] = lexstyle::to_string(config.sentiment_provider);
    ordered_json conv_ids = ordered_json::array(), non_ids = ordered_json::array();
    for (auto i : converted) conv_ids.push_back(inputs.corpus[i].doc_id);
    for (auto i : non_converted) non_ids.push_back(inputs.corpus[i].doc_id);
    out["groups"] = {{"converted", conv_ids}, {"non_converted", non_ids}, {"ties", ties}};

    auto doc_terms = [&](const std::vector<std::size_t>& idx) {
        std::vector<std::vector<std::string>> docs;
        for (auto i : idx) {
            docs.push_back(lexstyle::terms(lexstyle::tokenize(inputs.corpus[i].body, inputs.corpus[i].lang)));
        }
        return docs;
    };
    const auto terms_h = doc_terms(converted);
    const auto terms_n = doc_terms(non_converted);

    std::vector<lexstyle::DeltaEntry> deltas;
    if (!converted.empty() && !non_converted.empty()) {
        deltas = lexstyle::delta_tfidf(terms_h, terms_n);
        const auto top = lexstyle::top_k(deltas, config.top_k);
        out["top_k"] = {{"k", config.top_k},
                        {"h_salient", delta_json(top.h_salient)},
                        {"not_h_salient", delta_json(top.not_h_salient)}};
    } else {
        out["top_k"] = nullptr;
        notices.push_back("delta TF-IDF skipped: the " +
                          std::string(converted.empty() ? "converted" : "non-converted") + " group is empty");
    }

    // Sentiment correlation of ΔTFIDF with word-level subjectivity and neutrality.
    ordered_json correlations = nullptr;
    if (!deltas.empty()) {
        std::vector<std::size_t> docs = converted;
        docs.insert(docs.end(), non_converted.begin(), non_converted.end());
        std::vector<lexstyle::SentimentScores> scores;
        for (auto i : docs) {
            const auto& doc = inputs.corpus[i];
            const lexstyle::SentimentLexicon* lex = nullptr;
            if (auto it = inputs.lexicons.find(doc.lang); it != inputs.lexicons.end()) lex = &it->second;
            scores.push_back(lexstyle::doc_sentiment(doc, config.sentiment_provider, lex));
        }
        std::map<std::string, std::vector<std::size_t>> containing;
        const auto all_terms = [&] {
            auto t = terms_h;
            t.insert(t.end(), terms_n.begin(), terms_n.end());
            return t;
        }();
        for (std::size_t d = 0; d < all_terms.size(); ++d) {
            std::set<std::string> uniq(all_terms[d].begin(), all_terms[d].end());
            for (const auto& w : uniq) containing[w].push_back(d);
        }
        std::vector<double> delta_v, subj_v, neut_v;
        for (const auto& e : deltas) {
            std::vector<lexstyle::SentimentScores> sub;
            for (auto d : containing[e.word]) sub.push_back(scores[d]);
            if (auto ws = lexstyle::word_sentiment(sub)) {
                delta_v.push_back(e.delta);
                subj_v.push_back(ws->subjectivity);
                neut_v.push_back(ws->neutrality);
            }
        }
        auto corr_json = [](const std::optional<lexstyle::Correlation>& c) {
            return c ? ordered_json{{"rho", c->rho}, {"p_value", c->p_value}} : ordered_json(nullptr);
        };
        if (delta_v.size() >= 3) {
            correlations = {{"words", delta_v.size()},
                            {"subjectivity", corr_json(lexstyle::spearman(delta_v, subj_v))},
                            {"neutrality", corr_json(lexstyle::spearman(delta_v, neut_v))}};
        } else {
            notices.push_back("sentiment correlation skipped: fewer than 3 words");
        }
    }
    out["correlations"] = correlations;

    // Stylometry.
    auto profiles_of = [&](const std::vector<std::size_t>& idx) {
        std::vector<lexstyle::StyleProfile> out_profiles;
        for (auto i : idx) {
            const auto& doc = inputs.corpus[i];
            if (!inputs.resources.languages.contains(doc.lang)) {
                notices.push_back("no style resources for '" + doc.lang + "'; document " + doc.doc_id + " skipped");
                continue;
            }
            try {
                out_profiles.push_back(lexstyle::style_profile(doc, inputs.resources));
            } catch (const std::invalid_argument& e) {
                notices.push_back(e.what());
            }
        }
        return out_profiles;
    };
    const auto prof_h = profiles_of(converted);
    const auto prof_n = profiles_of(non_converted);
    out["style_means"] = {{"converted", feature_means(prof_h)}, {"non_converted", feature_means(prof_n)}};
    if (!prof_h.empty() && !prof_n.empty()) {
        const auto diff = lexstyle::group_style_diff(prof_h, prof_n);
        ordered_json rows = ordered_json::array();
        for (const auto& r : diff.rows) {
            rows.push_back({{"group", r.group},
                            {"feature", r.feature},
                            {"mean_converted", r.mean_h},
                            {"mean_non_converted", r.mean_not_h},
                            {"difference", r.difference},
                            {"p_value", opt(r.p_value)},
                            {"stars", r.stars}});
        }
        out["style_diff"] = rows;
        notices.insert(notices.end(), diff.notices.begin(), diff.notices.end());
    } else {
        out["style_diff"] = nullptr;
        notices.push_back("style difference skipped: a group has no profiled documents");
    }
    const bool caveat = std::any_of(prof_h.begin(), prof_h.end(), [](const auto& p) { return p.readability_caveat; }) ||
                        std::any_of(prof_n.begin(), prof_n.end(), [](const auto& p) { return p.readability_caveat; });
    out["readability_caveat"] = caveat;
    out["notices"] = notices;
    write_json(run_dir / "lexstyle.json", out);
}

// ---------------------------------------------------------------------------
// Scatter

std::vector<ScatterRow> scatter_rows(const corpus_io::Corpus& corpus, const corpus_io::EmbeddingSet& embeddings,
                                     const std::vector<cumulate::WindowLabelRow>& window_rows,
                                     const reduce::ReduceParams& params, std::uint64_t seed) {
    std::vector<std::size_t> members;
    for (const auto& r : window_rows) {
        const auto idx = corpus.index_of(r.doc_id);
        if (!idx) {
            throw IntegrityError("window row names unknown document '" + r.doc_id + "'");
        }
        members.push_back(*idx);
    }
    std::vector<ScatterRow> rows;
    rows.reserve(members.size());
    Matrix layout(members.size(), 2, 0.0);
    if (members.size() >= 3) {
        auto p = params;
        p.target_dim = 2;
        p.n_neighbors = std::min(p.n_neighbors, members.size() - 1);
        p.seed = seed;
        layout = reduce::fit_layout(embeddings.matrix.select_rows(members), p);
    }
    for (std::size_t r = 0; r < members.size(); ++r) {
        rows.push_back({window_rows[r].doc_id, layout(r, 0), layout(r, 1), window_rows[r].label});
    }
    return rows;
}

void write_scatter_csv(const fs::path& path, const std::vector<ScatterRow>& rows) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw IntegrityError("cannot write " + path.string());
        }
        out << "doc_id,x,y,label,is_outlier\n";
        for (const auto& r : rows) {
            out << csv::join({r.doc_id, csv::format_double(r.x), csv::format_double(r.y), std::to_string(r.label),
                              r.label == -1 ? "true" : "false"})
                << '\n';
        }
    }
    if (csv::read(path, {"doc_id", "x", "y", "label", "is_outlier"}).rows.size() != rows.size()) {
        throw IntegrityError("self-validation failed for " + path.string());
    }
}

void export_plots(const PipelineConfig& config, const Inputs& inputs, const fs::path& run_dir, std::size_t window) {
    fs::create_directories(run_dir / "plots");
    for (auto dim : config.dims) {
        for (std::size_t e = 0; e < config.embeddings.size(); ++e) {
            const auto& emb = inputs.embeddings[e];
            const auto name = run_name(emb.model_id, emb.variant, dim);
            std::vector<cumulate::WindowLabelRow> rows;
            for (auto& r : cumulate::read_window_csv(run_dir / "runs" / name / "windows.csv")) {
                if (r.window == window) rows.push_back(std::move(r));
            }
            if (rows.empty()) {
                throw IntegrityError("run " + name + " has no rows for window " + std::to_string(window));
            }
            const auto seed = derive_seed(config.seed, {emb.model_id, corpus_io::to_string(emb.variant), "scatter",
                                                        std::to_string(window)});
            write_scatter_csv(run_dir / "plots" / ("scatter__" + name + "__window_" + std::to_string(window) + ".csv"),
                              scatter_rows(inputs.corpus, emb, rows, config.reduce, seed));
        }
    }
}

}  // namespace emergent::report
