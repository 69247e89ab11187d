#include "emergent/lexstyle.hpp"

#include "emergent/csv.hpp"
#include "emergent/utf8.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace emergent::lexstyle {

const LanguageResources& Resources::for_language(const std::string& lang) const {
    auto it = languages.find(lang);
    if (it == languages.end()) {
        throw ConfigError("no style resources for language '" + lang + "'");
    }
    return it->second;
}

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open word list " + path.string());
    }
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        words.insert(line);
    }
    return words;
}

std::unordered_map<std::string, double> load_frequency(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open frequency table " + path.string());
    }
    std::unordered_map<std::string, double> table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected word <TAB> value");
        }
        try {
            table[line.substr(0, tab)] = csv::parse_double(line.substr(tab + 1));
        } catch (const IntegrityError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return table;
}

namespace {

bool is_vowel(char32_t c, bool french) {
    switch (c) {
        case U'a': case U'e': case U'i': case U'o': case U'u': case U'y':
            return true;
        default:
            break;
    }
    if (!french) return false;
    static const std::u32string kAccented = U"àâäéèêëîïôöûùüÿœæ";
    return kAccented.find(c) != std::u32string::npos;
}

}  // namespace

std::size_t syllables(std::string_view word, std::string_view lang) {
    const bool french = lang == "fr";
    const std::u32string w = utf8::decode(word);
    std::size_t groups = 0;
    bool in_group = false;
    for (char32_t c : w) {
        const bool v = is_vowel(c, french);
        if (v && !in_group) ++groups;
        in_group = v;
    }
    const std::size_t n = w.size();
    if (groups > 1 && n >= 2) {
        if (lang == "en" && w[n - 1] == U'e' && !is_vowel(w[n - 2], false)) {
            // "table", "little": consonant + le keeps its syllable
            const bool consonant_le = n >= 3 && w[n - 2] == U'l' && !is_vowel(w[n - 3], false);
            if (!consonant_le) --groups;
        } else if (french) {
            if (w[n - 1] == U'e' && !is_vowel(w[n - 2], true)) {
                --groups;
            } else if (n >= 3 && w[n - 1] == U's' && w[n - 2] == U'e' && !is_vowel(w[n - 3], true)) {
                --groups;
            }
        }
    }
    return std::max<std::size_t>(groups, 1);
}

std::size_t sentence_count(const std::vector<Token>& tokens) {
    std::size_t count = 0;
    bool has_word = false;
    for (const auto& t : tokens) {
        if (t.kind == TokenKind::punct) {
            if (t.text == "." || t.text == "!" || t.text == "?" || t.text == "…") {
                if (has_word) ++count;
                has_word = false;
            }
        } else {
            has_word = true;
        }
    }
    if (has_word) ++count;
    return count;
}

double yules_k(const std::vector<std::string>& words) {
    if (words.empty()) {
        throw std::invalid_argument("yules_k of an empty text");
    }
    std::unordered_map<std::string, std::size_t> freq;
    for (const auto& w : words) ++freq[w];
    double s2 = 0.0;
    for (const auto& [w, f] : freq) {
        s2 += static_cast<double>(f) * static_cast<double>(f);
    }
    const double n = static_cast<double>(words.size());
    return 1e4 * (s2 - n) / (n * n);
}

double entropy_bits(const std::vector<std::string>& words) {
    if (words.empty()) {
        throw std::invalid_argument("entropy of an empty text");
    }
    std::map<std::string, std::size_t> freq;
    for (const auto& w : words) ++freq[w];
    const double n = static_cast<double>(words.size());
    double h = 0.0;
    for (const auto& [w, f] : freq) {
        const double p = static_cast<double>(f) / n;
        h -= p * std::log2(p);
    }
    return std::max(h, 0.0);
}

double flesch_kincaid(std::size_t words, std::size_t sentences, std::size_t syllable_count) {
    if (words == 0 || sentences == 0) {
        throw std::invalid_argument("flesch_kincaid needs words and sentences");
    }
    return 0.39 * (static_cast<double>(words) / static_cast<double>(sentences)) +
           11.8 * (static_cast<double>(syllable_count) / static_cast<double>(words)) - 15.59;
}

StyleProfile style_profile(const corpus_io::Document& doc, const Resources& resources) {
    const auto tokens = tokenize(doc.body, doc.lang);
    std::vector<std::string> words;
    std::size_t punct = 0;
    std::size_t numbers = 0;
    for (const auto& t : tokens) {
        switch (t.kind) {
            case TokenKind::word: words.push_back(t.text); break;
            case TokenKind::number: ++numbers; break;
            case TokenKind::punct: ++punct; break;
        }
    }
    if (words.empty()) {
        throw std::invalid_argument("document '" + doc.doc_id + "' has no words");
    }
    const auto& res = resources.for_language(doc.lang);
    const double sentences = static_cast<double>(std::max<std::size_t>(sentence_count(tokens), 1));
    const double n_words = static_cast<double>(words.size());

    StyleProfile p;
    p.doc_id = doc.doc_id;
    std::size_t function_words = 0;
    std::size_t chars = 0;
    std::size_t syl = 0;
    double freq_sum = 0.0;
    std::size_t freq_hits = 0;
    for (const auto& w : words) {
        if (res.function_words.contains(w)) ++function_words;
        chars += utf8::length(w);
        syl += syllables(w, doc.lang);
        if (res.frequency) {
            if (auto it = res.frequency->find(w); it != res.frequency->end()) {
                freq_sum += it->second;
                ++freq_hits;
            }
        }
    }
    p.function_words_per_sentence = static_cast<double>(function_words) / sentences;
    p.punctuation_per_sentence = static_cast<double>(punct) / sentences;
    p.numbers_per_sentence = static_cast<double>(numbers) / sentences;

    if (doc.entities) {
        EntityRates r;
        for (const auto& e : *doc.entities) {
            r.total += 1.0;
            switch (e.kind) {
                case corpus_io::EntityKind::person: r.person += 1.0; break;
                case corpus_io::EntityKind::organization: r.organization += 1.0; break;
                case corpus_io::EntityKind::location: r.location += 1.0; break;
            }
        }
        r.total /= sentences;
        r.person /= sentences;
        r.organization /= sentences;
        r.location /= sentences;
        p.entities_per_sentence = r;
    }
    if (doc.pos_tags && !doc.pos_tags->empty()) {
        std::map<std::string, double> dist;
        for (const auto& tag : *doc.pos_tags) dist[tag] += 1.0;
        for (auto& [tag, v] : dist) v /= static_cast<double>(doc.pos_tags->size());
        p.pos_distribution = std::move(dist);
    }

    p.avg_word_length = static_cast<double>(chars) / n_words;
    p.avg_syllables_per_word = static_cast<double>(syl) / n_words;
    p.avg_sentence_length = n_words / sentences;
    if (freq_hits > 0) {
        p.avg_word_frequency = freq_sum / static_cast<double>(freq_hits);
    }
    p.yules_k = yules_k(words);
    p.entropy_bits = entropy_bits(words);
    p.flesch_kincaid = flesch_kincaid(words.size(), static_cast<std::size_t>(sentences), syl);
    p.readability_caveat = doc.lang != "en";
    return p;
}

std::vector<Feature> features(const StyleProfile& p) {
    std::vector<Feature> out = {
        {"function_words", "per_sentence", p.function_words_per_sentence},
        {"punctuation", "per_sentence", p.punctuation_per_sentence},
        {"numbers", "per_sentence", p.numbers_per_sentence},
    };
    if (p.entities_per_sentence) {
        const auto& e = *p.entities_per_sentence;
        out.push_back({"named_entities", "per_sentence", e.total});
        out.push_back({"named_entities", "person", e.person});
        out.push_back({"named_entities", "organization", e.organization});
        out.push_back({"named_entities", "location", e.location});
    }
    if (p.pos_distribution) {
        for (const auto& [tag, v] : *p.pos_distribution) {
            out.push_back({"pos_distribution", tag, v});
        }
    }
    out.push_back({"structural", "avg_word_length", p.avg_word_length});
    out.push_back({"structural", "avg_syllables_per_word", p.avg_syllables_per_word});
    out.push_back({"structural", "avg_sentence_length", p.avg_sentence_length});
    if (p.avg_word_frequency) {
        out.push_back({"structural", "avg_word_frequency", *p.avg_word_frequency});
    }
    out.push_back({"indexes", "yules_k", p.yules_k});
    out.push_back({"indexes", "entropy_bits", p.entropy_bits});
    out.push_back({"readability", "flesch_kincaid", p.flesch_kincaid});
    return out;
}

StyleDiff group_style_diff(const std::vector<StyleProfile>& h, const std::vector<StyleProfile>& not_h) {
    if (h.empty() || not_h.empty()) {
        throw std::invalid_argument("group_style_diff: both groups must be non-empty");
    }
    using Key = std::pair<std::string, std::string>;
    std::vector<Key> order;
    std::set<Key> seen;
    std::set<std::string> pos_tags;
    auto collect_keys = [&](const std::vector<StyleProfile>& group) {
        for (const auto& p : group) {
            for (const auto& f : features(p)) {
                if (f.group == "pos_distribution") {
                    pos_tags.insert(f.name);
                } else if (seen.insert({f.group, f.name}).second) {
                    order.push_back({f.group, f.name});
                }
            }
        }
    };
    collect_keys(h);
    collect_keys(not_h);
    // Fixed group order; POS tags slot in after the entity rows.
    static const std::vector<std::string> kGroups = {"function_words", "punctuation", "numbers", "named_entities",
                                                     "pos_distribution", "structural", "indexes", "readability"};
    std::vector<Key> keys;
    for (const auto& g : kGroups) {
        if (g == "pos_distribution") {
            for (const auto& tag : pos_tags) keys.push_back({g, tag});
            continue;
        }
        for (const auto& k : order) {
            if (k.first == g) keys.push_back(k);
        }
    }

    auto values = [](const std::vector<StyleProfile>& group, const Key& key) {
        std::vector<double> out;
        for (const auto& p : group) {
            if (key.first == "pos_distribution") {
                if (!p.pos_distribution) continue;
                auto it = p.pos_distribution->find(key.second);
                out.push_back(it == p.pos_distribution->end() ? 0.0 : it->second);
                continue;
            }
            for (const auto& f : features(p)) {
                if (f.group == key.first && f.name == key.second) {
                    out.push_back(f.value);
                    break;
                }
            }
        }
        return out;
    };
    auto mean_of = [](const std::vector<double>& xs) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s / static_cast<double>(xs.size());
    };

    StyleDiff diff;
    std::set<std::string> skipped;
    for (const auto& key : keys) {
        const auto vh = values(h, key);
        const auto vn = values(not_h, key);
        if (vh.empty() || vn.empty()) {
            if (skipped.insert(key.first + "." + key.second).second) {
                diff.notices.push_back("feature " + key.first + "." + key.second +
                                       " unavailable in one group; skipped");
            }
            continue;
        }
        StyleDiffRow row;
        row.group = key.first;
        row.feature = key.second;
        row.mean_h = mean_of(vh);
        row.mean_not_h = mean_of(vn);
        row.difference = row.mean_h - row.mean_not_h;
        row.n_h = vh.size();
        row.n_not_h = vn.size();
        if (vh.size() + vn.size() >= 3) {
            if (auto kw = kruskal_wallis({vh, vn})) {
                row.p_value = kw->p_value;
            }
        }
        row.stars = stars(row.p_value);
        diff.rows.push_back(std::move(row));
    }
    for (const auto& g : kGroups) {
        const bool present = std::any_of(keys.begin(), keys.end(), [&](const Key& k) { return k.first == g; });
        if (!present) {
            diff.notices.push_back("feature group " + g + " unavailable (no annotations); skipped");
        }
    }
    return diff;
}

}  // namespace emergent::lexstyle
