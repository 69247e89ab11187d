#include "emergent/lexstyle.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace emergent::lexstyle {

double TfidfModel::weight(std::size_t doc, std::size_t col) const {
    const auto& row = rows.at(doc);
    auto it = std::lower_bound(row.begin(), row.end(), col,
                               [](const auto& entry, std::size_t c) { return entry.first < c; });
    return (it != row.end() && it->first == col) ? it->second : 0.0;
}

TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& docs) {
    std::map<std::string, std::size_t> df;
    for (const auto& doc : docs) {
        std::vector<std::string> unique = doc;
        std::sort(unique.begin(), unique.end());
        unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
        for (const auto& w : unique) {
            ++df[w];
        }
    }
    if (df.empty()) {
        throw std::invalid_argument("fit_tfidf: every document is empty");
    }

    TfidfModel model;
    const double n = static_cast<double>(docs.size());
    for (const auto& [word, count] : df) {
        model.column.emplace(word, model.vocabulary.size());
        model.vocabulary.push_back(word);
        model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }

    model.rows.reserve(docs.size());
    for (const auto& doc : docs) {
        std::map<std::size_t, double> counts;
        for (const auto& w : doc) {
            counts[model.column.at(w)] += 1.0;
        }
        std::vector<std::pair<std::size_t, double>> row;
        double norm = 0.0;
        for (const auto& [col, c] : counts) {
            const double v = c * model.idf[col];
            row.emplace_back(col, v);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& entry : row) {
            entry.second /= norm;
        }
        model.rows.push_back(std::move(row));
    }
    return model;
}

std::vector<DeltaEntry> delta_tfidf(const std::vector<std::vector<std::string>>& group_h,
                                    const std::vector<std::vector<std::string>>& group_not_h) {
    if (group_h.empty() || group_not_h.empty()) {
        throw std::invalid_argument("delta_tfidf: both groups must be non-empty");
    }
    std::vector<std::vector<std::string>> all = group_h;
    all.insert(all.end(), group_not_h.begin(), group_not_h.end());
    const TfidfModel model = fit_tfidf(all);
    const std::size_t nh = group_h.size();
    const std::size_t v = model.vocabulary.size();

    // Dense per-group weight samples, zeros included.
    std::vector<std::vector<double>> wh(v, std::vector<double>(nh, 0.0));
    std::vector<std::vector<double>> wn(v, std::vector<double>(group_not_h.size(), 0.0));
    std::vector<long long> occ(v, 0);
    for (std::size_t d = 0; d < all.size(); ++d) {
        for (const auto& [col, w] : model.rows[d]) {
            if (d < nh) {
                wh[col][d] = w;
            } else {
                wn[col][d - nh] = w;
            }
        }
        const long long sign = d < nh ? 1 : -1;
        for (const auto& word : all[d]) {
            occ[model.column.at(word)] += sign;
        }
    }

    auto group_mean = [](const std::vector<double>& xs) {
        double s = 0.0;
        for (double x : xs) {
            s += x;
        }
        return s / static_cast<double>(xs.size());
    };

    std::vector<DeltaEntry> out;
    out.reserve(v);
    for (std::size_t col = 0; col < v; ++col) {
        DeltaEntry e;
        e.word = model.vocabulary[col];
        e.delta = group_mean(wh[col]) - group_mean(wn[col]);
        e.occ_diff = occ[col];
        if (nh + group_not_h.size() >= 3) {
            if (auto kw = kruskal_wallis({wh[col], wn[col]})) {
                e.p_value = kw->p_value;
                e.significant_05 = kw->p_value < 0.05;
                e.significant_01 = kw->p_value < 0.01;
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

TopK top_k(const std::vector<DeltaEntry>& entries, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("top_k: k must be at least 1");
    }
    TopK out;
    out.h_salient = entries;
    out.not_h_salient = entries;
    std::sort(out.h_salient.begin(), out.h_salient.end(), [](const DeltaEntry& a, const DeltaEntry& b) {
        return a.delta != b.delta ? a.delta > b.delta : a.word < b.word;
    });
    std::sort(out.not_h_salient.begin(), out.not_h_salient.end(), [](const DeltaEntry& a, const DeltaEntry& b) {
        return a.delta != b.delta ? a.delta < b.delta : a.word < b.word;
    });
    if (out.h_salient.size() > k) {
        out.h_salient.resize(k);
        out.not_h_salient.resize(k);
    }
    return out;
}

}  // namespace emergent::lexstyle
