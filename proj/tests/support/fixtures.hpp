#pragma once

#include "emergent/common.hpp"
#include "emergent/corpus_io.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

namespace fixtures {

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("emergent_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline emergent::corpus_io::Document doc(std::string id, std::string date, std::string body, std::string lang = "en") {
    emergent::corpus_io::Document d;
    d.doc_id = std::move(id);
    d.date = *emergent::corpus_io::Date::parse(date);
    d.headline = "headline";
    d.body = std::move(body);
    d.lang = std::move(lang);
    return d;
}

/// `per_blob` points around each of `centers` (rows), isotropic unit noise.
inline emergent::Matrix blobs(const emergent::Matrix& centers, std::size_t per_blob, double sigma,
                              emergent::Rng& rng) {
    emergent::Matrix m(centers.rows() * per_blob, centers.cols());
    for (std::size_t c = 0; c < centers.rows(); ++c) {
        for (std::size_t i = 0; i < per_blob; ++i) {
            for (std::size_t j = 0; j < centers.cols(); ++j) {
                m(c * per_blob + i, j) = centers(c, j) + sigma * rng.normal();
            }
        }
    }
    return m;
}

inline emergent::Matrix random_matrix(std::size_t rows, std::size_t cols, emergent::Rng& rng) {
    emergent::Matrix m(rows, cols);
    for (auto& v : m.data()) v = rng.uniform(-1.0, 1.0);
    return m;
}

}  // namespace fixtures
