#include "emergent/corpus_io.hpp"

#include "emergent/utf8.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace emergent::corpus_io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Dates

bool is_valid_date(int year, int month, int day) {
    if (month < 1 || month > 12 || day < 1) {
        return false;
    }
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    const int limit = (month == 2 && leap) ? 29 : kDays[month - 1];
    return day <= limit;
}

std::optional<Date> Date::parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (text[i] < '0' || text[i] > '9') {
                return std::nullopt;
            }
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    auto y = digits(0, 4);
    auto m = digits(5, 2);
    auto d = digits(8, 2);
    if (!y || !m || !d || !is_valid_date(*y, *m, *d)) {
        return std::nullopt;
    }
    return Date{*y, *m, *d};
}

// Civil-from-days / days-from-civil (H. Hinnant).
std::int64_t Date::to_days() const {
    const std::int64_t y = year - (month <= 2 ? 1 : 0);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const std::int64_t yoe = y - era * 400;
    const std::int64_t mp = (month + 9) % 12;
    const std::int64_t doy = (153 * mp + 2) / 5 + day - 1;
    const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

Date Date::from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const std::int64_t doe = z - era * 146097;
    const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const std::int64_t mp = (5 * doy + 2) / 153;
    const int d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    const int m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    const int y = static_cast<int>(yoe + era * 400 + (m <= 2 ? 1 : 0));
    return Date{y, m, d};
}

Date Date::end_of_month() const {
    int d = 31;
    while (!is_valid_date(year, month, d)) {
        --d;
    }
    return Date{year, month, d};
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::string Date::month_string() const { return to_string().substr(0, 7); }

// ---------------------------------------------------------------------------
// Enums

std::string_view to_string(EntityKind kind) {
    switch (kind) {
        case EntityKind::person: return "person";
        case EntityKind::organization: return "organization";
        case EntityKind::location: return "location";
    }
    return "person";
}

std::optional<EntityKind> parse_entity_kind(std::string_view text) {
    if (text == "person") return EntityKind::person;
    if (text == "organization") return EntityKind::organization;
    if (text == "location") return EntityKind::location;
    return std::nullopt;
}

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::headline: return "headline";
        case Variant::body: return "body";
        case Variant::full: return "full";
    }
    return "body";
}

std::optional<Variant> parse_variant(std::string_view text) {
    if (text == "headline") return Variant::headline;
    if (text == "body") return Variant::body;
    if (text == "full") return Variant::full;
    return std::nullopt;
}

std::string_view to_string(ScheduleMode mode) {
    return mode == ScheduleMode::calendar_month ? "calendar_month" : "quantile";
}

std::optional<ScheduleMode> parse_schedule_mode(std::string_view text) {
    if (text == "calendar_month") return ScheduleMode::calendar_month;
    if (text == "quantile") return ScheduleMode::quantile;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Corpus

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
    for (const auto& doc : documents_) {
        if (doc.doc_id.empty()) {
            throw IntegrityError("document with empty doc_id");
        }
        if (doc.body.empty()) {
            throw IntegrityError("document '" + doc.doc_id + "' has an empty body");
        }
        if (!is_valid_date(doc.date.year, doc.date.month, doc.date.day)) {
            throw IntegrityError("document '" + doc.doc_id + "' has an invalid date");
        }
        for (auto score : {doc.subjectivity, doc.neutrality}) {
            if (score && !(*score >= 0.0 && *score <= 1.0)) {
                throw IntegrityError("document '" + doc.doc_id + "' has a sentiment score outside [0,1]");
            }
        }
        if (doc.entities) {
            const std::size_t body_len = utf8::length(doc.body);
            auto spans = *doc.entities;
            std::sort(spans.begin(), spans.end(),
                      [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
            for (std::size_t i = 0; i < spans.size(); ++i) {
                if (spans[i].start >= spans[i].end || spans[i].end > body_len) {
                    throw IntegrityError("document '" + doc.doc_id + "' has an entity span outside the body");
                }
                if (i > 0 && spans[i].start < spans[i - 1].end) {
                    throw IntegrityError("document '" + doc.doc_id + "' has overlapping entity spans");
                }
            }
        }
    }
    std::sort(documents_.begin(), documents_.end(), [](const Document& a, const Document& b) {
        if (a.date != b.date) {
            return a.date < b.date;
        }
        return a.doc_id < b.doc_id;
    });
    index_.reserve(documents_.size());
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        if (!index_.emplace(documents_[i].doc_id, i).second) {
            throw IntegrityError("duplicate doc_id '" + documents_[i].doc_id + "'");
        }
    }
}

std::optional<std::size_t> Corpus::index_of(std::string_view doc_id) const {
    auto it = index_.find(std::string(doc_id));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<std::string> doc_ids(const Corpus& corpus) {
    std::vector<std::string> ids;
    ids.reserve(corpus.size());
    for (const auto& doc : corpus) {
        ids.push_back(doc.doc_id);
    }
    return ids;
}

namespace {

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
    throw IntegrityError("line " + std::to_string(line) + ": " + what);
}

const json& require(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        fail_line(line, std::string("missing key '") + key + "'");
    }
    return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
    const auto& v = require(obj, key, line);
    if (!v.is_string()) {
        fail_line(line, std::string("key '") + key + "' must be a string");
    }
    return v.get<std::string>();
}

std::optional<double> optional_number(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_number()) {
        fail_line(line, std::string("key '") + key + "' must be a number");
    }
    return it->get<double>();
}

}  // namespace

Document parse_document(std::string_view json_line, std::size_t line) {
    json obj;
    try {
        obj = json::parse(json_line);
    } catch (const json::parse_error& e) {
        fail_line(line, std::string("malformed record: ") + e.what());
    }
    if (!obj.is_object()) {
        fail_line(line, "record is not an object");
    }
    static const std::set<std::string> kKnown = {"doc_id", "date",     "headline", "body",        "lang",
                                                 "pos",    "entities", "subjectivity", "neutrality"};
    for (const auto& [key, _] : obj.items()) {
        if (!kKnown.contains(key)) {
            fail_line(line, "unknown key '" + key + "'");
        }
    }
    Document doc;
    doc.doc_id = require_string(obj, "doc_id", line);
    const auto date_text = require_string(obj, "date", line);
    auto date = Date::parse(date_text);
    if (!date) {
        fail_line(line, "malformed date '" + date_text + "' in record '" + doc.doc_id + "'");
    }
    doc.date = *date;
    doc.headline = require_string(obj, "headline", line);
    doc.body = require_string(obj, "body", line);
    if (doc.body.empty()) {
        fail_line(line, "empty body in record '" + doc.doc_id + "'");
    }
    doc.lang = require_string(obj, "lang", line);
    if (auto it = obj.find("pos"); it != obj.end() && !it->is_null()) {
        if (!it->is_array()) {
            fail_line(line, "'pos' must be an array of strings");
        }
        std::vector<std::string> tags;
        for (const auto& t : *it) {
            if (!t.is_string()) {
                fail_line(line, "'pos' must be an array of strings");
            }
            tags.push_back(t.get<std::string>());
        }
        doc.pos_tags = std::move(tags);
    }
    if (auto it = obj.find("entities"); it != obj.end() && !it->is_null()) {
        if (!it->is_array()) {
            fail_line(line, "'entities' must be an array");
        }
        std::vector<EntitySpan> spans;
        for (const auto& e : *it) {
            if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned() ||
                !e[2].is_string()) {
                fail_line(line, "entity entries must be [start, end, kind]");
            }
            auto kind = parse_entity_kind(e[2].get<std::string>());
            if (!kind) {
                fail_line(line, "unknown entity kind '" + e[2].get<std::string>() + "'");
            }
            spans.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), *kind});
        }
        doc.entities = std::move(spans);
    }
    doc.subjectivity = optional_number(obj, "subjectivity", line);
    doc.neutrality = optional_number(obj, "neutrality", line);
    return doc;
}

std::string serialize_document(const Document& doc) {
    json obj;
    obj["doc_id"] = doc.doc_id;
    obj["date"] = doc.date.to_string();
    obj["headline"] = doc.headline;
    obj["body"] = doc.body;
    obj["lang"] = doc.lang;
    if (doc.pos_tags) {
        obj["pos"] = *doc.pos_tags;
    }
    if (doc.entities) {
        json spans = json::array();
        for (const auto& e : *doc.entities) {
            spans.push_back(json::array({e.start, e.end, std::string(to_string(e.kind))}));
        }
        obj["entities"] = std::move(spans);
    }
    if (doc.subjectivity) {
        obj["subjectivity"] = *doc.subjectivity;
    }
    if (doc.neutrality) {
        obj["neutrality"] = *doc.neutrality;
    }
    return obj.dump();
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IntegrityError("cannot open corpus file " + path.string());
    }
    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto doc = parse_document(text, line);
        if (!seen.insert(doc.doc_id).second) {
            fail_line(line, "duplicate doc_id '" + doc.doc_id + "'");
        }
        docs.push_back(std::move(doc));
    }
    return Corpus(std::move(docs));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IntegrityError("cannot write corpus file " + path.string());
    }
    for (const auto& doc : corpus) {
        out << serialize_document(doc) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Embeddings

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                           static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(bytes, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

EmbeddingRows read_binary(const std::string& bytes, const std::filesystem::path& path) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 12) {
        throw IntegrityError(path.string() + ": truncated embedding header");
    }
    const std::uint32_t n = get_u32(p + 4);
    const std::uint32_t d = get_u32(p + 8);
    if (d == 0) {
        throw IntegrityError(path.string() + ": embedding dimension must be positive");
    }
    const std::size_t floats_end = 12 + static_cast<std::size_t>(n) * d * 4;
    if (bytes.size() < floats_end) {
        throw IntegrityError(path.string() + ": truncated embedding matrix");
    }
    EmbeddingRows rows;
    rows.matrix = Matrix(n, d);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * d; ++i) {
        const std::uint32_t bitsv = get_u32(p + 12 + 4 * i);
        const float f = std::bit_cast<float>(bitsv);
        if (!std::isfinite(f)) {
            throw IntegrityError(path.string() + ": non-finite value in row " + std::to_string(i / d));
        }
        rows.matrix.data()[i] = f;
    }
    std::size_t pos = floats_end;
    for (std::uint32_t r = 0; r < n; ++r) {
        const auto nul = bytes.find('\0', pos);
        if (nul == std::string::npos) {
            throw IntegrityError(path.string() + ": truncated doc_id table");
        }
        rows.doc_ids.emplace_back(bytes.substr(pos, nul - pos));
        pos = nul + 1;
    }
    if (pos != bytes.size()) {
        throw IntegrityError(path.string() + ": trailing bytes after doc_id table");
    }
    return rows;
}

EmbeddingRows read_jsonl(const std::string& bytes, const std::filesystem::path& path) {
    std::istringstream in(bytes);
    std::string text;
    std::size_t line = 0;
    std::vector<std::string> ids;
    std::vector<double> values;
    std::size_t dim = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            throw IntegrityError(path.string() + ": line " + std::to_string(line) + ": " + e.what());
        }
        if (!obj.is_object() || !obj.contains("doc_id") || !obj.contains("vector") || !obj["doc_id"].is_string() ||
            !obj["vector"].is_array()) {
            throw IntegrityError(path.string() + ": line " + std::to_string(line) +
                                 ": expected {\"doc_id\": string, \"vector\": array}");
        }
        const auto& vec = obj["vector"];
        if (ids.empty()) {
            dim = vec.size();
            if (dim == 0) {
                throw IntegrityError(path.string() + ": embedding dimension must be positive");
            }
        } else if (vec.size() != dim) {
            throw IntegrityError(path.string() + ": line " + std::to_string(line) + ": vector has " +
                                 std::to_string(vec.size()) + " values, expected " + std::to_string(dim));
        }
        for (const auto& v : vec) {
            if (!v.is_number()) {
                throw IntegrityError(path.string() + ": line " + std::to_string(line) + ": non-numeric value");
            }
            const float f = static_cast<float>(v.get<double>());
            if (!std::isfinite(f)) {
                throw IntegrityError(path.string() + ": line " + std::to_string(line) + ": non-finite value");
            }
            values.push_back(f);
        }
        ids.push_back(obj["doc_id"].get<std::string>());
    }
    EmbeddingRows rows;
    rows.matrix = Matrix(ids.size(), dim, std::move(values));
    rows.doc_ids = std::move(ids);
    return rows;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IntegrityError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

EmbeddingRows read_embedding_rows(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0) {
        return read_binary(bytes, path);
    }
    return read_jsonl(bytes, path);
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, const Corpus& corpus, std::string model_id,
                             Variant variant) {
    auto rows = read_embedding_rows(path);
    std::vector<std::optional<std::size_t>> source(corpus.size());
    for (std::size_t r = 0; r < rows.doc_ids.size(); ++r) {
        auto idx = corpus.index_of(rows.doc_ids[r]);
        if (!idx) {
            throw IntegrityError(path.string() + ": doc_id '" + rows.doc_ids[r] + "' is not in the corpus");
        }
        if (source[*idx]) {
            throw IntegrityError(path.string() + ": doc_id '" + rows.doc_ids[r] + "' appears twice");
        }
        source[*idx] = r;
    }
    std::vector<std::size_t> order;
    order.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!source[i]) {
            throw IntegrityError(path.string() + ": missing embedding for doc_id '" + corpus[i].doc_id + "'");
        }
        order.push_back(*source[i]);
    }
    return EmbeddingSet{std::move(model_id), variant, rows.matrix.select_rows(order)};
}

void write_embeddings_jsonl(const std::filesystem::path& path, std::span<const std::string> ids,
                            const Matrix& matrix) {
    if (ids.size() != matrix.rows()) {
        throw std::invalid_argument("doc_id count does not match matrix rows");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IntegrityError("cannot write " + path.string());
    }
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        json vec = json::array();
        for (double v : matrix.row(i)) {
            // float32 precision, printed so that it re-parses to the same float
            vec.push_back(static_cast<double>(static_cast<float>(v)));
        }
        json obj;
        obj["doc_id"] = ids[i];
        obj["vector"] = std::move(vec);
        out << obj.dump() << '\n';
    }
}

void write_embeddings_binary(const std::filesystem::path& path, std::span<const std::string> ids,
                             const Matrix& matrix) {
    if (ids.size() != matrix.rows()) {
        throw std::invalid_argument("doc_id count does not match matrix rows");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IntegrityError("cannot write " + path.string());
    }
    out.write(kMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(matrix.rows()));
    put_u32(out, static_cast<std::uint32_t>(matrix.cols()));
    for (double v : matrix.data()) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    for (const auto& id : ids) {
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        out.put('\0');
    }
}

// ---------------------------------------------------------------------------
// Schedules

std::optional<std::size_t> WindowSchedule::first_window(const Date& date) const {
    auto it = std::lower_bound(boundaries.begin(), boundaries.end(), date);
    if (it == boundaries.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - boundaries.begin()) + 1;
}

WindowSchedule build_schedule(const Corpus& corpus, ScheduleMode mode, std::optional<std::size_t> count) {
    if (corpus.empty()) {
        throw std::invalid_argument("cannot build a schedule for an empty corpus");
    }
    WindowSchedule schedule;
    schedule.mode = mode;
    if (mode == ScheduleMode::calendar_month) {
        const Date first = corpus[0].date;
        const Date last = corpus[corpus.size() - 1].date;
        int y = first.year;
        int m = first.month;
        while (y < last.year || (y == last.year && m <= last.month)) {
            schedule.boundaries.push_back(Date{y, m, 1}.end_of_month());
            if (++m > 12) {
                m = 1;
                ++y;
            }
        }
        return schedule;
    }
    if (!count || *count == 0) {
        throw std::invalid_argument("quantile schedule requires a positive window count");
    }
    const std::size_t n = corpus.size();
    if (*count > n) {
        throw std::invalid_argument("quantile schedule with " + std::to_string(*count) + " windows exceeds corpus size " +
                                    std::to_string(n));
    }
    for (std::size_t w = 1; w <= *count; ++w) {
        // Window w ends at document ceil(w*n/count) (1-based), so window sizes
        // differ by at most one document.
        const std::size_t last_doc = (w * n + *count - 1) / *count;
        const Date end = corpus[last_doc - 1].date;
        if (schedule.boundaries.empty() || schedule.boundaries.back() < end) {
            schedule.boundaries.push_back(end);
        }
    }
    return schedule;
}

}  // namespace emergent::corpus_io
