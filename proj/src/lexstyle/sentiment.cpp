#include "emergent/lexstyle.hpp"

#include "emergent/csv.hpp"

#include <fstream>

namespace emergent::lexstyle {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return fields;
}

}  // namespace

SentimentLexicon SentimentLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open sentiment lexicon " + path.string());
    }
    std::unordered_map<std::string, Entry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 3) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected word, polarity, subjectivity");
        }
        Entry e;
        try {
            e.polarity = csv::parse_double(fields[1]);
            e.subjectivity = csv::parse_double(fields[2]);
        } catch (const IntegrityError& err) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + err.what());
        }
        if (e.polarity < -1.0 || e.polarity > 1.0 || e.subjectivity < 0.0 || e.subjectivity > 1.0) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": value out of range");
        }
        entries[fields[0]] = e;
    }
    return SentimentLexicon(std::move(entries));
}

const SentimentLexicon::Entry* SentimentLexicon::find(const std::string& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? nullptr : &it->second;
}

std::string_view to_string(SentimentProvider p) {
    return p == SentimentProvider::external ? "external" : "builtin_lexicon";
}

std::optional<SentimentProvider> parse_sentiment_provider(std::string_view text) {
    if (text == "external") return SentimentProvider::external;
    if (text == "builtin_lexicon") return SentimentProvider::builtin_lexicon;
    return std::nullopt;
}

SentimentScores doc_sentiment(const corpus_io::Document& doc, SentimentProvider provider,
                              const SentimentLexicon* lexicon) {
    SentimentScores out;
    out.doc_id = doc.doc_id;
    out.provider = provider;
    if (provider == SentimentProvider::external) {
        if (!doc.subjectivity || !doc.neutrality) {
            throw IntegrityError("document '" + doc.doc_id + "' has no external subjectivity/neutrality scores");
        }
        out.subjectivity = *doc.subjectivity;
        out.neutrality = *doc.neutrality;
        return out;
    }
    if (lexicon == nullptr) {
        throw ConfigError("builtin sentiment needs a lexicon for language '" + doc.lang + "'");
    }
    std::size_t words = 0;
    std::size_t matched = 0;
    std::size_t polar = 0;
    double subjectivity = 0.0;
    for (const auto& t : tokenize(doc.body, doc.lang)) {
        if (t.kind != TokenKind::word) continue;
        ++words;
        if (const auto* e = lexicon->find(t.text)) {
            ++matched;
            subjectivity += e->subjectivity;
            if (e->polarity != 0.0) ++polar;
        }
    }
    out.subjectivity = matched == 0 ? 0.0 : subjectivity / static_cast<double>(matched);
    out.neutrality = words == 0 ? 1.0 : static_cast<double>(words - polar) / static_cast<double>(words);
    return out;
}

std::optional<WordSentiment> word_sentiment(const std::vector<SentimentScores>& containing) {
    if (containing.empty()) {
        return std::nullopt;
    }
    WordSentiment ws;
    for (const auto& s : containing) {
        ws.subjectivity += s.subjectivity;
        ws.neutrality += s.neutrality;
    }
    const double n = static_cast<double>(containing.size());
    ws.subjectivity /= n;
    ws.neutrality /= n;
    return ws;
}

}  // namespace emergent::lexstyle
