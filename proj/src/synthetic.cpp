#include "emergent/corpus_io.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace emergent::corpus_io {

using nlohmann::json;

void ScenarioSpec::validate() const {
    if (windows == 0) throw ConfigError("scenario: windows must be positive");
    if (dim == 0) throw ConfigError("scenario: dim must be positive");
    if (models == 0) throw ConfigError("scenario: models must be positive");
    if (!(sigma > 0.0)) throw ConfigError("scenario: sigma must be positive");
    if (!(center_distance > 0.0)) throw ConfigError("scenario: center_distance must be positive");
    if (!(precursor_spread > 0.0)) throw ConfigError("scenario: precursor_spread must be positive");
    if (model_noise < 0.0) throw ConfigError("scenario: model_noise must be nonnegative");
    if (topics.empty()) throw ConfigError("scenario: at least one topic is required");
    for (const auto& t : topics) {
        if (t.docs == 0) throw ConfigError("scenario: topic '" + t.name + "' needs a positive document count");
        if (t.span == 0) throw ConfigError("scenario: topic '" + t.name + "' needs a positive span");
        if (t.onset < 1 || t.onset + t.span - 1 > windows) {
            throw ConfigError("scenario: topic '" + t.name + "' bulk falls outside the scenario windows");
        }
        if (t.precursors > 0 && (t.lead == 0 || t.lead >= t.onset)) {
            throw ConfigError("scenario: topic '" + t.name + "' precursors would arrive before window 1");
        }
    }
}

ScenarioSpec parse_scenario(std::string_view json_text) {
    json obj;
    try {
        obj = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    ScenarioSpec spec;
    static const std::set<std::string> kKnown = {"start", "windows", "dim", "models", "sigma", "center_distance",
                                                 "precursor_spread", "model_noise", "lang", "topics"};
    for (const auto& [key, _] : obj.items()) {
        if (!kKnown.contains(key)) {
            throw ConfigError("scenario: unknown key '" + key + "'");
        }
    }
    try {
        if (obj.contains("start")) {
            auto start = Date::parse(obj["start"].get<std::string>() + "-01");
            if (!start) throw ConfigError("scenario: start must be YYYY-MM");
            spec.start = *start;
        }
        auto get_count = [&](const json& o, const char* key, std::size_t fallback) -> std::size_t {
            if (!o.contains(key)) return fallback;
            const auto v = o[key].get<long long>();
            if (v < 0) throw ConfigError(std::string("scenario: '") + key + "' must be nonnegative");
            return static_cast<std::size_t>(v);
        };
        spec.windows = get_count(obj, "windows", spec.windows);
        spec.dim = get_count(obj, "dim", spec.dim);
        spec.models = get_count(obj, "models", spec.models);
        spec.sigma = obj.value("sigma", spec.sigma);
        spec.center_distance = obj.value("center_distance", spec.center_distance);
        spec.precursor_spread = obj.value("precursor_spread", spec.precursor_spread);
        spec.model_noise = obj.value("model_noise", spec.model_noise);
        spec.lang = obj.value("lang", spec.lang);
        static const std::set<std::string> kTopicKeys = {"name", "docs", "onset", "span", "precursors", "lead"};
        for (const auto& t : obj.value("topics", json::array())) {
            for (const auto& [key, _] : t.items()) {
                if (!kTopicKeys.contains(key)) throw ConfigError("scenario: unknown topic key '" + key + "'");
            }
            TopicSpec topic;
            topic.name = t.value("name", "topic" + std::to_string(spec.topics.size()));
            topic.docs = get_count(t, "docs", 0);
            topic.onset = get_count(t, "onset", 1);
            topic.span = get_count(t, "span", 1);
            topic.precursors = get_count(t, "precursors", 0);
            topic.lead = get_count(t, "lead", 3);
            spec.topics.push_back(std::move(topic));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    spec.validate();
    return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

namespace {

const std::vector<std::string>& function_words(const std::string& lang) {
    static const std::vector<std::string> en = {"the", "of", "and", "to", "in", "a", "on", "for",
                                                "with", "that", "is", "was", "by", "at", "from", "it"};
    static const std::vector<std::string> fr = {"le", "la", "les", "de", "des", "et", "en", "un",
                                                "une", "pour", "dans", "sur", "par", "que", "est", "au"};
    return lang == "fr" ? fr : en;
}

const std::vector<std::string>& common_words(const std::string& lang) {
    static const std::vector<std::string> en = {"report", "said", "would", "new",    "year",   "group",
                                                "public", "plan", "local", "office", "people", "week"};
    static const std::vector<std::string> fr = {"projet", "selon", "public", "nouveau", "ville", "groupe",
                                                "conseil", "plan", "local", "semaine", "travail", "annonce"};
    return lang == "fr" ? fr : en;
}

std::string pseudo_word(Rng& rng) {
    static const char* kOnsets[] = {"b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "tr", "br", "st"};
    static const char* kVowels[] = {"a", "e", "i", "o", "u", "ou", "ai"};
    const std::size_t syllables = 2 + rng.below(2);
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
        w += kOnsets[rng.below(std::size(kOnsets))];
        w += kVowels[rng.below(std::size(kVowels))];
    }
    if (rng.below(2) == 0) {
        w += kOnsets[rng.below(12)];
    }
    return w;
}

std::string sentence(Rng& rng, const std::vector<std::string>& topic_vocab, const std::string& lang) {
    const auto& fw = function_words(lang);
    const auto& cw = common_words(lang);
    const std::size_t len = 6 + rng.below(7);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        const double u = rng.uniform();
        std::string word;
        if (u < 0.45) {
            word = topic_vocab[rng.below(topic_vocab.size())];
        } else if (u < 0.75) {
            word = fw[rng.below(fw.size())];
        } else if (u < 0.95) {
            word = cw[rng.below(cw.size())];
        } else {
            word = std::to_string(1 + rng.below(99));
        }
        if (i == 0 && !word.empty() && word[0] >= 'a' && word[0] <= 'z') {
            word[0] = static_cast<char>(word[0] - 'a' + 'A');
        }
        if (i > 0) {
            out += (rng.below(10) == 0 && i + 1 < len) ? ", " : " ";
        }
        out += word;
    }
    out += '.';
    return out;
}

Date window_date(const Date& start, std::size_t window, std::size_t slot) {
    int y = start.year;
    int m = start.month + static_cast<int>(window) - 1;
    y += (m - 1) / 12;
    m = (m - 1) % 12 + 1;
    return Date{y, m, static_cast<int>(1 + slot % 28)};
}

Eigen::MatrixXd random_rotation(std::size_t dim, Rng& rng) {
    Eigen::MatrixXd g(dim, dim);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
            g(i, j) = rng.normal();
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Sign fix makes Q Haar-distributed and independent of Householder conventions.
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        if (r(j, j) < 0) {
            q.col(j) *= -1.0;
        }
    }
    return q;
}

}  // namespace

SyntheticData generate_synthetic(const ScenarioSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng latent_rng(derive_seed(seed, {"latent"}));
    Rng text_rng(derive_seed(seed, {"text"}));

    const std::size_t dim = spec.dim;
    // Topic centers: random directions scaled so that pairwise distances are
    // close to center_distance.
    std::vector<std::vector<double>> centers;
    for (std::size_t t = 0; t < spec.topics.size(); ++t) {
        std::vector<double> c(dim);
        double norm = 0.0;
        for (auto& v : c) {
            v = latent_rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : c) {
            v *= spec.center_distance / std::sqrt(2.0) / norm;
        }
        centers.push_back(std::move(c));
    }

    struct Pending {
        Document doc;
        std::vector<double> latent;
    };
    std::vector<Pending> pending;
    std::vector<std::string> precursor_ids;
    auto make_vocab = [&] {
        std::vector<std::string> vocab;
        for (int i = 0; i < 14; ++i) {
            vocab.push_back(pseudo_word(text_rng));
        }
        return vocab;
    };
    auto make_doc = [&](std::string id, std::size_t window, std::size_t slot, const std::vector<double>& center,
                        double spread, const std::vector<std::string>& vocab) {
        Pending p;
        p.doc.doc_id = std::move(id);
        p.doc.date = window_date(spec.start, window, slot);
        p.doc.lang = spec.lang;
        std::string headline = sentence(text_rng, vocab, spec.lang);
        headline.pop_back();
        p.doc.headline = headline;
        const std::size_t n_sentences = 3 + text_rng.below(3);
        for (std::size_t s = 0; s < n_sentences; ++s) {
            if (s > 0) p.doc.body += ' ';
            p.doc.body += sentence(text_rng, vocab, spec.lang);
        }
        p.doc.subjectivity = text_rng.uniform();
        p.doc.neutrality = text_rng.uniform();
        p.latent.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            p.latent[j] = center[j] + spread * spec.sigma * latent_rng.normal();
        }
        pending.push_back(std::move(p));
    };
    for (std::size_t t = 0; t < spec.topics.size(); ++t) {
        const auto& topic = spec.topics[t];
        const auto vocab = make_vocab();
        for (std::size_t k = 0; k < topic.docs; ++k) {
            const std::size_t window = topic.onset + (k * topic.span) / topic.docs;
            char id[64];
            std::snprintf(id, sizeof id, "%s-%03zu", topic.name.c_str(), k);
            make_doc(id, window, k, centers[t], 1.0, vocab);
        }
        for (std::size_t k = 0; k < topic.precursors; ++k) {
            char id[64];
            std::snprintf(id, sizeof id, "%s-pre%02zu", topic.name.c_str(), k);
            make_doc(id, topic.onset - topic.lead, k, centers[t], spec.precursor_spread, vocab);
            precursor_ids.emplace_back(id);
        }
    }

    std::vector<Document> docs;
    docs.reserve(pending.size());
    for (const auto& p : pending) {
        docs.push_back(p.doc);
    }
    Corpus corpus(std::move(docs));

    Matrix latent(corpus.size(), dim);
    for (const auto& p : pending) {
        const auto row = *corpus.index_of(p.doc.doc_id);
        std::copy(p.latent.begin(), p.latent.end(), latent.row(row).begin());
    }

    SyntheticData out;
    for (std::size_t m = 0; m < spec.models; ++m) {
        const std::string model_id = "pseudo-" + std::to_string(m);
        Rng model_rng(derive_seed(seed, {"model", model_id}));
        const Eigen::MatrixXd q = random_rotation(dim, model_rng);
        Matrix emb(corpus.size(), dim);
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            for (std::size_t r = 0; r < dim; ++r) {
                double v = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    v += q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * latent(i, c);
                }
                if (spec.model_noise > 0.0) {
                    v += spec.model_noise * model_rng.normal();
                }
                emb(i, r) = static_cast<float>(v);
            }
        }
        out.embeddings.emplace(model_id, EmbeddingSet{model_id, Variant::body, std::move(emb)});
    }
    std::sort(precursor_ids.begin(), precursor_ids.end());
    out.corpus = std::move(corpus);
    out.precursor_ids = std::move(precursor_ids);
    return out;
}

}  // namespace emergent::corpus_io
