#pragma once

#include "emergent/corpus_io.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace emergent::lexstyle {

enum class TokenKind { word, number, punct };

struct Token {
    std::string text;
    TokenKind kind = TokenKind::word;

    bool operator==(const Token&) const = default;
};

/// Lowercased word, number and punctuation tokens. Hyphens and apostrophes
/// between letters split words and are dropped.
std::vector<Token> tokenize(std::string_view text, std::string_view lang = "en");

/// Word and number token texts, the vocabulary of the TF-IDF model.
std::vector<std::string> terms(const std::vector<Token>& tokens);

// ---------------------------------------------------------------------------
// TF-IDF

struct TfidfModel {
    std::vector<std::string> vocabulary;  // sorted
    std::unordered_map<std::string, std::size_t> column;
    std::vector<double> idf;
    /// Sparse L2-normalized rows: (column, weight), sorted by column.
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;

    double weight(std::size_t doc, std::size_t col) const;
    std::size_t docs() const { return rows.size(); }
};

/// idf = ln((1+N)/(1+df)) + 1; weight = count * idf, rows L2-normalized.
/// Throws std::invalid_argument when every document is empty.
TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& docs);

// ---------------------------------------------------------------------------
// Rank statistics

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Average ranks (1-based), ties share the mean rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Kruskal-Wallis H with tie correction, p from chi-square with k-1 degrees
/// of freedom. std::nullopt when every value is identical.
std::optional<TestResult> kruskal_wallis(const std::vector<std::vector<double>>& groups);

struct Correlation {
    double rho = 0.0;
    double p_value = 1.0;
};

/// Spearman rank correlation, two-sided p from the t approximation.
/// std::nullopt when either rank vector has zero variance.
std::optional<Correlation> spearman(std::span<const double> x, std::span<const double> y);

/// "**" for p < 0.01, "*" for p < 0.05, else "".
std::string stars(std::optional<double> p);

// ---------------------------------------------------------------------------
// Delta TF-IDF

struct DeltaEntry {
    std::string word;
    double delta = 0.0;
    long long occ_diff = 0;
    std::optional<double> p_value;
    bool significant_05 = false;
    bool significant_01 = false;
};

/// Mean TF-IDF in group H minus mean in group not-H, fitted on the union.
/// Entries in vocabulary order.
std::vector<DeltaEntry> delta_tfidf(const std::vector<std::vector<std::string>>& group_h,
                                    const std::vector<std::vector<std::string>>& group_not_h);

struct TopK {
    std::vector<DeltaEntry> h_salient;      // delta descending
    std::vector<DeltaEntry> not_h_salient;  // delta ascending
};

TopK top_k(const std::vector<DeltaEntry>& entries, std::size_t k);

// ---------------------------------------------------------------------------
// Sentiment

/// word <TAB> polarity <TAB> subjectivity; polarity in [-1, 1], subjectivity in [0, 1].
class SentimentLexicon {
  public:
    struct Entry {
        double polarity = 0.0;
        double subjectivity = 0.0;
    };

    SentimentLexicon() = default;
    explicit SentimentLexicon(std::unordered_map<std::string, Entry> entries) : entries_(std::move(entries)) {}
    static SentimentLexicon load(const std::filesystem::path& path);

    const Entry* find(const std::string& word) const;
    std::size_t size() const { return entries_.size(); }

  private:
    std::unordered_map<std::string, Entry> entries_;
};

enum class SentimentProvider { external, builtin_lexicon };

std::string_view to_string(SentimentProvider p);
std::optional<SentimentProvider> parse_sentiment_provider(std::string_view text);

struct SentimentScores {
    std::string doc_id;
    double subjectivity = 0.0;
    double neutrality = 0.0;
    SentimentProvider provider = SentimentProvider::external;
};

/// External scores pass through; the builtin scorer averages the subjectivity
/// of lexicon words and counts words without nonzero polarity as neutral.
SentimentScores doc_sentiment(const corpus_io::Document& doc, SentimentProvider provider,
                              const SentimentLexicon* lexicon = nullptr);

struct WordSentiment {
    double subjectivity = 0.0;
    double neutrality = 0.0;
};

/// Plain means over the documents containing the word.
std::optional<WordSentiment> word_sentiment(const std::vector<SentimentScores>& containing);

// ---------------------------------------------------------------------------
// Style

/// Loaded resource files for one language.
struct LanguageResources {
    std::unordered_set<std::string> function_words;
    std::optional<std::unordered_map<std::string, double>> frequency;
};

struct Resources {
    std::map<std::string, LanguageResources> languages;

    const LanguageResources& for_language(const std::string& lang) const;
};

/// One word per line; blank lines and `#` comments skipped.
std::unordered_set<std::string> load_word_list(const std::filesystem::path& path);
/// word <TAB> value
std::unordered_map<std::string, double> load_frequency(const std::filesystem::path& path);

/// Vowel-group syllable estimate. English drops a silent final e; French drops
/// final e or es after a consonant.
std::size_t syllables(std::string_view word, std::string_view lang);

/// Sentences split on . ! ? and the ellipsis; segments without words are ignored.
std::size_t sentence_count(const std::vector<Token>& tokens);

double yules_k(const std::vector<std::string>& words);
double entropy_bits(const std::vector<std::string>& words);
double flesch_kincaid(std::size_t words, std::size_t sentences, std::size_t syllables);

struct EntityRates {
    double total = 0.0;
    double person = 0.0;
    double organization = 0.0;
    double location = 0.0;
};

struct StyleProfile {
    std::string doc_id;
    double function_words_per_sentence = 0.0;
    double punctuation_per_sentence = 0.0;
    double numbers_per_sentence = 0.0;
    std::optional<EntityRates> entities_per_sentence;
    std::optional<std::map<std::string, double>> pos_distribution;
    double avg_word_length = 0.0;
    double avg_syllables_per_word = 0.0;
    double avg_sentence_length = 0.0;
    std::optional<double> avg_word_frequency;
    double yules_k = 0.0;
    double entropy_bits = 0.0;
    double flesch_kincaid = 0.0;
    bool readability_caveat = false;  // FK applied to a non-English document
};

/// Throws std::invalid_argument when the body has no words.
StyleProfile style_profile(const corpus_io::Document& doc, const Resources& resources);

/// (group, feature, value) triples; unavailable features are absent.
struct Feature {
    std::string group;
    std::string name;
    double value = 0.0;
};

std::vector<Feature> features(const StyleProfile& profile);

struct StyleDiffRow {
    std::string group;
    std::string feature;
    double mean_h = 0.0;
    double mean_not_h = 0.0;
    double difference = 0.0;  // H minus not-H
    std::optional<double> p_value;
    std::string stars;
    std::size_t n_h = 0;
    std::size_t n_not_h = 0;
};

struct StyleDiff {
    std::vector<StyleDiffRow> rows;
    std::vector<std::string> notices;
};

StyleDiff group_style_diff(const std::vector<StyleProfile>& h, const std::vector<StyleProfile>& not_h);

}  // namespace emergent::lexstyle
