#include "emergent/cumulate.hpp"

#include "emergent/csv.hpp"
#include "emergent/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

namespace emergent::cumulate {

using corpus_io::Corpus;
using corpus_io::Date;

std::uint64_t window_seed(std::uint64_t global_seed, std::string_view model_id, corpus_io::Variant variant,
                          std::size_t window) {
    const auto w = std::to_string(window);
    return derive_seed(global_seed, {model_id, corpus_io::to_string(variant), w});
}

WindowResult run_window(const corpus_io::EmbeddingSet& embeddings, const RunConfig& config, std::size_t window,
                        std::vector<std::size_t> members) {
    WindowResult result;
    result.window = window;
    result.end_date = config.schedule.boundaries.at(window - 1);
    result.members = std::move(members);
    const std::size_t m = result.members.size();
    result.labeling.labels.assign(m, -1);
    result.labeling.glosh.assign(m, 0.0);
    // A layout needs at least two neighbors per point.
    if (m < 3) {
        return result;
    }
    auto params = config.reduce;
    params.n_neighbors = std::min(params.n_neighbors, m - 1);
    params.seed = window_seed(config.seed, config.model_id, config.variant, window);
    result.effective_neighbors = params.n_neighbors;
    const Matrix points = embeddings.matrix.select_rows(result.members);
    result.layout = reduce::fit_layout(points, params);
    result.labeling = cluster::hdbscan(result.layout, config.hdbscan);
    result.silhouette = metrics::silhouette(result.layout, result.labeling.labels);
    return result;
}

std::vector<WindowResult> run_cumulative(const Corpus& corpus, const corpus_io::EmbeddingSet& embeddings,
                                         const RunConfig& config) {
    if (embeddings.matrix.rows() != corpus.size()) {
        throw IntegrityError("embedding rows (" + std::to_string(embeddings.matrix.rows()) +
                             ") do not match corpus size (" + std::to_string(corpus.size()) + ")");
    }
    const auto& bounds = config.schedule.boundaries;
    if (bounds.empty()) {
        throw std::invalid_argument("run_cumulative: empty schedule");
    }
    if (!corpus.empty() && corpus[corpus.size() - 1].date > bounds.back()) {
        throw IntegrityError("documents fall after the final window boundary " + bounds.back().to_string());
    }
    std::vector<std::vector<std::size_t>> member_sets(bounds.size());
    for (std::size_t t = 0; t < bounds.size(); ++t) {
        for (std::size_t i = 0; i < corpus.size() && corpus[i].date <= bounds[t]; ++i) {
            member_sets[t].push_back(i);
        }
    }

    std::vector<WindowResult> results(bounds.size());
    const std::size_t workers = std::max<std::size_t>(1, std::min(config.threads, bounds.size()));
    if (workers == 1) {
        for (std::size_t t = 0; t < bounds.size(); ++t) {
            results[t] = run_window(embeddings, config, t + 1, member_sets[t]);
        }
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(bounds.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t t = next++; t < bounds.size(); t = next++) {
                try {
                    results[t] = run_window(embeddings, config, t + 1, member_sets[t]);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return results;
}

namespace {

std::optional<int> label_in(const WindowResult& w, std::size_t corpus_index) {
    auto it = std::lower_bound(w.members.begin(), w.members.end(), corpus_index);
    if (it == w.members.end() || *it != corpus_index) {
        return std::nullopt;
    }
    return w.labeling.labels[static_cast<std::size_t>(it - w.members.begin())];
}

}  // namespace

std::vector<Trajectory> build_trajectories(const Corpus& corpus, const std::vector<WindowResult>& results) {
    std::vector<Trajectory> out;
    out.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        Trajectory tr;
        tr.doc_id = corpus[i].doc_id;
        for (const auto& w : results) {
            const bool expected = corpus[i].date <= w.end_date;
            const auto label = label_in(w, i);
            if (expected != label.has_value()) {
                throw IntegrityError("document '" + tr.doc_id + "' is " + (expected ? "missing from" : "unexpected in") +
                                     " window " + std::to_string(w.window));
            }
            if (label) {
                if (tr.labels.empty()) {
                    tr.first_window = w.window;
                }
                tr.labels.push_back(*label);
            }
        }
        if (tr.labels.empty()) {
            throw IntegrityError("document '" + tr.doc_id + "' appears in no window");
        }
        out.push_back(std::move(tr));
    }
    return out;
}

ConversionRecord conversion_record(const Trajectory& tr, std::string_view model_id) {
    ConversionRecord rec;
    rec.doc_id = tr.doc_id;
    rec.model_id = std::string(model_id);
    for (std::size_t i = 0; i < tr.labels.size(); ++i) {
        if (!rec.first_outlier_window) {
            if (tr.labels[i] == -1) {
                rec.first_outlier_window = tr.first_window + i;
                rec.ever_outlier = true;
            }
        } else if (tr.labels[i] >= 0) {
            rec.first_conversion_window = tr.first_window + i;
            rec.validates_h = true;
            break;
        }
    }
    return rec;
}

std::vector<ConversionRecord> conversion_records(const std::vector<Trajectory>& trajectories,
                                                 std::string_view model_id) {
    std::vector<ConversionRecord> out;
    out.reserve(trajectories.size());
    for (const auto& tr : trajectories) {
        out.push_back(conversion_record(tr, model_id));
    }
    return out;
}

std::vector<WindowTableRow> window_table(const std::vector<Trajectory>& trajectories,
                                         const std::vector<Date>& end_dates,
                                         const std::vector<std::size_t>& checkpoints) {
    const std::size_t total = end_dates.size();
    std::vector<WindowTableRow> rows;
    for (auto t : checkpoints) {
        if (t < 1 || t > total) {
            throw std::invalid_argument("checkpoint " + std::to_string(t) + " is not a window index");
        }
        WindowTableRow row;
        row.window = t;
        row.end_date = end_dates[t - 1];
        for (const auto& tr : trajectories) {
            if (tr.first_window > t) {
                continue;
            }
            ++row.members;
            const std::size_t pos = t - tr.first_window;
            if (tr.labels[pos] != -1) {
                continue;
            }
            ++row.outliers;
            const bool later_inlier =
                std::any_of(tr.labels.begin() + static_cast<std::ptrdiff_t>(pos) + 1, tr.labels.end(),
                            [](int l) { return l >= 0; });
            if (later_inlier) {
                ++row.converted_later;
            }
        }
        if (t < total) {
            row.percent_converted =
                row.outliers == 0 ? 0.0
                                  : 100.0 * static_cast<double>(row.converted_later) / static_cast<double>(row.outliers);
        }
        rows.push_back(row);
    }
    return rows;
}

std::string format_ratio(const WindowTableRow& row) {
    return std::to_string(row.outliers) + "/" + std::to_string(row.members);
}

std::string format_percent(const WindowTableRow& row) {
    if (!row.percent_converted) {
        return "-";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", *row.percent_converted);
    return buf;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

const std::vector<std::string> kWindowHeader = {"window", "end_date", "doc_id", "label", "glosh"};
const std::vector<std::string> kTrajectoryHeader = {"doc_id", "first_window", "labels"};
const std::vector<std::string> kConversionHeader = {"doc_id",         "model_id",
                                                    "ever_outlier",   "first_outlier_window",
                                                    "first_conversion_window", "validates_H"};

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IntegrityError("cannot write " + path.string());
    }
    return out;
}

std::string opt_index(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : ""; }

std::optional<std::size_t> parse_opt_index(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(csv::parse_int(s));
}

bool parse_bool(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw IntegrityError("malformed boolean '" + s + "'");
}

}  // namespace

void write_window_csv(const std::filesystem::path& path, const Corpus& corpus,
                      const std::vector<WindowResult>& results) {
    auto out = open_out(path);
    out << csv::join(kWindowHeader) << '\n';
    for (const auto& w : results) {
        const auto end = w.end_date.to_string();
        for (std::size_t r = 0; r < w.members.size(); ++r) {
            out << csv::join({std::to_string(w.window), end, corpus[w.members[r]].doc_id,
                              std::to_string(w.labeling.labels[r]), csv::format_double(w.labeling.glosh[r])})
                << '\n';
        }
    }
}

std::vector<WindowLabelRow> read_window_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path, kWindowHeader);
    std::vector<WindowLabelRow> rows;
    rows.reserve(table.rows.size());
    for (const auto& f : table.rows) {
        WindowLabelRow row;
        row.window = static_cast<std::size_t>(csv::parse_int(f[0]));
        row.end_date = f[1];
        if (!corpus_io::Date::parse(row.end_date)) {
            throw IntegrityError(path.string() + ": malformed end_date '" + row.end_date + "'");
        }
        row.doc_id = f[2];
        row.label = static_cast<int>(csv::parse_int(f[3]));
        row.glosh = csv::parse_double(f[4]);
        if (row.label < -1 || !(row.glosh >= 0.0 && row.glosh <= 1.0)) {
            throw IntegrityError(path.string() + ": label or glosh out of range for '" + row.doc_id + "'");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<Trajectory> trajectories_from_rows(const std::vector<WindowLabelRow>& rows) {
    // doc_id -> (window -> label)
    std::map<std::string, std::map<std::size_t, int>> by_doc;
    std::vector<std::string> order;
    for (const auto& r : rows) {
        auto [it, inserted] = by_doc.try_emplace(r.doc_id);
        if (inserted) {
            order.push_back(r.doc_id);
        }
        if (!it->second.emplace(r.window, r.label).second) {
            throw IntegrityError("document '" + r.doc_id + "' listed twice in window " + std::to_string(r.window));
        }
    }
    std::vector<Trajectory> out;
    for (const auto& id : order) {
        const auto& windows = by_doc[id];
        Trajectory tr;
        tr.doc_id = id;
        tr.first_window = windows.begin()->first;
        std::size_t expect = tr.first_window;
        for (const auto& [w, label] : windows) {
            if (w != expect++) {
                throw IntegrityError("document '" + id + "' has a gap before window " + std::to_string(w));
            }
            tr.labels.push_back(label);
        }
        out.push_back(std::move(tr));
    }
    return out;
}

void write_trajectories_csv(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories) {
    auto out = open_out(path);
    out << csv::join(kTrajectoryHeader) << '\n';
    for (const auto& tr : trajectories) {
        std::string labels;
        for (std::size_t i = 0; i < tr.labels.size(); ++i) {
            if (i > 0) {
                labels += '|';
            }
            labels += std::to_string(tr.labels[i]);
        }
        out << csv::join({tr.doc_id, std::to_string(tr.first_window), labels}) << '\n';
    }
}

std::vector<Trajectory> read_trajectories_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path, kTrajectoryHeader);
    std::vector<Trajectory> out;
    for (const auto& f : table.rows) {
        Trajectory tr;
        tr.doc_id = f[0];
        tr.first_window = static_cast<std::size_t>(csv::parse_int(f[1]));
        std::string_view rest = f[2];
        while (!rest.empty()) {
            const auto bar = rest.find('|');
            tr.labels.push_back(static_cast<int>(csv::parse_int(rest.substr(0, bar))));
            if (bar == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(bar + 1);
        }
        if (tr.labels.empty()) {
            throw IntegrityError(path.string() + ": empty label sequence for '" + tr.doc_id + "'");
        }
        out.push_back(std::move(tr));
    }
    return out;
}

void write_conversions_csv(const std::filesystem::path& path, const std::vector<ConversionRecord>& records) {
    auto out = open_out(path);
    out << csv::join(kConversionHeader) << '\n';
    for (const auto& r : records) {
        out << csv::join({r.doc_id, r.model_id, r.ever_outlier ? "true" : "false", opt_index(r.first_outlier_window),
                          opt_index(r.first_conversion_window), r.validates_h ? "true" : "false"})
            << '\n';
    }
}

std::vector<ConversionRecord> read_conversions_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path, kConversionHeader);
    std::vector<ConversionRecord> out;
    for (const auto& f : table.rows) {
        ConversionRecord r;
        r.doc_id = f[0];
        r.model_id = f[1];
        r.ever_outlier = parse_bool(f[2]);
        r.first_outlier_window = parse_opt_index(f[3]);
        r.first_conversion_window = parse_opt_index(f[4]);
        r.validates_h = parse_bool(f[5]);
        if (r.validates_h != r.first_conversion_window.has_value() ||
            r.ever_outlier != r.first_outlier_window.has_value() ||
            (r.first_conversion_window && *r.first_conversion_window <= *r.first_outlier_window)) {
            throw IntegrityError(path.string() + ": inconsistent conversion record for '" + r.doc_id + "'");
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_window_table_csv(const std::filesystem::path& path, const std::vector<WindowTableRow>& rows) {
    auto out = open_out(path);
    out << "window,end_date,outliers,members,outliers_over_members,converted_later,percent_becoming_inliers\n";
    for (const auto& r : rows) {
        out << csv::join({std::to_string(r.window), r.end_date.to_string(), std::to_string(r.outliers),
                          std::to_string(r.members), format_ratio(r), std::to_string(r.converted_later),
                          format_percent(r)})
            << '\n';
    }
}

std::vector<WindowTableRow> read_window_table_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path, {"window", "end_date", "outliers", "members", "outliers_over_members",
                                        "converted_later", "percent_becoming_inliers"});
    std::vector<WindowTableRow> rows;
    for (const auto& f : table.rows) {
        WindowTableRow r;
        r.window = static_cast<std::size_t>(csv::parse_int(f[0]));
        const auto end = Date::parse(f[1]);
        if (!end) {
            throw IntegrityError(path.string() + ": malformed end_date '" + f[1] + "'");
        }
        r.end_date = *end;
        r.outliers = static_cast<std::size_t>(csv::parse_int(f[2]));
        r.members = static_cast<std::size_t>(csv::parse_int(f[3]));
        r.converted_later = static_cast<std::size_t>(csv::parse_int(f[5]));
        if (f[6] != "-") {
            if (f[6].size() < 2 || f[6].back() != '%') {
                throw IntegrityError(path.string() + ": malformed percentage '" + f[6] + "'");
            }
            r.percent_converted = csv::parse_double(std::string_view(f[6]).substr(0, f[6].size() - 1));
        }
        if (f[4] != format_ratio(r) || r.outliers > r.members || r.converted_later > r.outliers) {
            throw IntegrityError(path.string() + ": inconsistent row for window " + f[0]);
        }
        rows.push_back(r);
    }
    return rows;
}

void write_window_summary_csv(const std::filesystem::path& path, const std::vector<WindowResult>& results) {
    auto out = open_out(path);
    out << "window,end_date,members,clusters,outliers,silhouette\n";
    for (const auto& w : results) {
        const auto outliers = std::count(w.labeling.labels.begin(), w.labeling.labels.end(), -1);
        out << csv::join({std::to_string(w.window), w.end_date.to_string(), std::to_string(w.members.size()),
                          std::to_string(w.labeling.n_clusters), std::to_string(outliers),
                          w.silhouette ? csv::format_double(*w.silhouette) : ""})
            << '\n';
    }
}

std::vector<WindowSummaryRow> read_window_summary_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path, {"window", "end_date", "members", "clusters", "outliers", "silhouette"});
    std::vector<WindowSummaryRow> rows;
    for (const auto& f : table.rows) {
        WindowSummaryRow r;
        r.window = static_cast<std::size_t>(csv::parse_int(f[0]));
        r.end_date = f[1];
        if (!Date::parse(r.end_date)) {
            throw IntegrityError(path.string() + ": malformed end_date '" + r.end_date + "'");
        }
        r.members = static_cast<std::size_t>(csv::parse_int(f[2]));
        r.clusters = static_cast<std::size_t>(csv::parse_int(f[3]));
        r.outliers = static_cast<std::size_t>(csv::parse_int(f[4]));
        if (!f[5].empty()) {
            r.silhouette = csv::parse_double(f[5]);
            if (!(*r.silhouette >= -1.0 && *r.silhouette <= 1.0)) {
                throw IntegrityError(path.string() + ": silhouette out of range in window " + f[0]);
            }
        }
        if (r.outliers > r.members) {
            throw IntegrityError(path.string() + ": more outliers than members in window " + f[0]);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace emergent::cumulate
