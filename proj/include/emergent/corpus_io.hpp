#pragma once

#include "emergent/common.hpp"

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace emergent::corpus_io {

/// Calendar date at day resolution (proleptic Gregorian, UTC).
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    /// Parses `YYYY-MM-DD`; std::nullopt if malformed or not a real date.
    static std::optional<Date> parse(std::string_view text);
    static Date from_days(std::int64_t days);

    std::int64_t to_days() const;
    Date end_of_month() const;
    std::string to_string() const;
    /// `YYYY-MM`
    std::string month_string() const;

    auto operator<=>(const Date&) const = default;
};

bool is_valid_date(int year, int month, int day);

enum class EntityKind { person, organization, location };

std::string_view to_string(EntityKind kind);
std::optional<EntityKind> parse_entity_kind(std::string_view text);

/// Entity mention as a half-open range of Unicode code points into the body.
struct EntitySpan {
    std::size_t start = 0;
    std::size_t end = 0;
    EntityKind kind = EntityKind::person;

    bool operator==(const EntitySpan&) const = default;
};

struct Document {
    std::string doc_id;
    Date date;
    std::string headline;
    std::string body;
    std::string lang;
    std::optional<std::vector<std::string>> pos_tags;
    std::optional<std::vector<EntitySpan>> entities;
    std::optional<double> subjectivity;
    std::optional<double> neutrality;

    bool operator==(const Document&) const = default;
};

/// Documents in canonical (date, doc_id) order. Immutable after construction.
class Corpus {
  public:
    Corpus() = default;
    /// Validates every document and sorts. Throws IntegrityError on duplicate
    /// ids, empty bodies, out-of-range entity spans or scores.
    explicit Corpus(std::vector<Document> documents);

    std::size_t size() const { return documents_.size(); }
    bool empty() const { return documents_.empty(); }
    const Document& operator[](std::size_t i) const { return documents_[i]; }
    auto begin() const { return documents_.begin(); }
    auto end() const { return documents_.end(); }
    const std::vector<Document>& documents() const { return documents_; }

    std::optional<std::size_t> index_of(std::string_view doc_id) const;

    bool operator==(const Corpus& other) const { return documents_ == other.documents_; }

  private:
    std::vector<Document> documents_;
    std::unordered_map<std::string, std::size_t> index_;
};

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Parses one corpus record; `line` is used in error messages.
Document parse_document(std::string_view json_line, std::size_t line);
std::string serialize_document(const Document& doc);

enum class Variant { headline, body, full };

std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view text);

/// Dense vectors row-aligned with a corpus. Values are stored as doubles but
/// always hold float32-representable numbers: both file encodings carry
/// float32 precision, so JSONL and binary inputs load to identical sets.
struct EmbeddingSet {
    std::string model_id;
    Variant variant = Variant::body;
    Matrix matrix;

    std::size_t dim() const { return matrix.cols(); }
    bool operator==(const EmbeddingSet&) const = default;
};

/// Reads either encoding (binary is detected by its `EMB1` magic) and reorders
/// rows to corpus order.
EmbeddingSet load_embeddings(const std::filesystem::path& path, const Corpus& corpus,
                             std::string model_id = {}, Variant variant = Variant::body);

/// Raw rows in file order.
struct EmbeddingRows {
    std::vector<std::string> doc_ids;
    Matrix matrix;
};

EmbeddingRows read_embedding_rows(const std::filesystem::path& path);
void write_embeddings_jsonl(const std::filesystem::path& path, std::span<const std::string> doc_ids,
                            const Matrix& matrix);
void write_embeddings_binary(const std::filesystem::path& path, std::span<const std::string> doc_ids,
                             const Matrix& matrix);

std::vector<std::string> doc_ids(const Corpus& corpus);

enum class ScheduleMode { calendar_month, quantile };

std::string_view to_string(ScheduleMode mode);
std::optional<ScheduleMode> parse_schedule_mode(std::string_view text);

struct WindowSchedule {
    ScheduleMode mode = ScheduleMode::calendar_month;
    std::vector<Date> boundaries;  // strictly increasing end dates (inclusive)

    std::size_t count() const { return boundaries.size(); }
    /// 1-based index of the earliest boundary >= date; std::nullopt if the date
    /// lies after the final boundary.
    std::optional<std::size_t> first_window(const Date& date) const;
};

/// `count` is required for quantile mode and ignored for calendar months.
/// Quantile boundaries that land on the same date collapse into one.
WindowSchedule build_schedule(const Corpus& corpus, ScheduleMode mode, std::optional<std::size_t> count);

// ---------------------------------------------------------------------------
// Synthetic scenarios

struct TopicSpec {
    std::string name;
    std::size_t docs = 0;
    std::size_t onset = 1;    // 1-based window of the topic's bulk
    std::size_t span = 1;     // bulk documents spread over this many windows
    std::size_t precursors = 0;
    std::size_t lead = 3;     // precursors arrive this many windows before onset
};

struct ScenarioSpec {
    Date start{2022, 1, 1};   // first month of the scenario
    std::size_t windows = 6;  // number of calendar months
    std::size_t dim = 32;
    std::size_t models = 3;
    double sigma = 1.0;             // within-topic spread
    double center_distance = 12.0;  // approximate pairwise distance of topic centers
    double precursor_spread = 1.0;  // precursor sigma as a fraction of sigma
    double model_noise = 0.0;       // per-model isotropic noise added after rotation
    std::string lang = "en";
    std::vector<TopicSpec> topics;

    /// Throws ConfigError on non-positive counts or dimensions.
    void validate() const;
};

ScenarioSpec parse_scenario(std::string_view json_text);
ScenarioSpec load_scenario(const std::filesystem::path& path);

struct SyntheticData {
    Corpus corpus;
    std::map<std::string, EmbeddingSet> embeddings;  // keyed by model id
    std::vector<std::string> precursor_ids;
};

SyntheticData generate_synthetic(const ScenarioSpec& spec, std::uint64_t seed);

}  // namespace emergent::corpus_io
