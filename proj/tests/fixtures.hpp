#pragma once

#include "fedego/graph.hpp"
#include "fedego/model.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace fedego::testing {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("fedego_" + tag + "_" + std::to_string(rd()));
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

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Graph small_graph(std::uint64_t seed = 3, std::size_t nodes = 60, std::size_t classes = 3,
                         std::size_t dim = 5) {
    SyntheticGraphConfig c;
    c.num_nodes = nodes;
    c.num_classes = classes;
    c.feature_dim = dim;
    c.intra_edge_prob = 0.15;
    c.inter_edge_prob = 0.03;
    c.seed = seed;
    return generate_synthetic_graph(c);
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

template <class Params>
void fill_constant(Params& p, double value) {
    for (auto& t : tensors(p)) std::fill(t.values.begin(), t.values.end(), value);
}

template <class Params>
bool bit_identical(const Params& a, const Params& b) {
    const auto ta = tensors(a);
    const auto tb = tensors(b);
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i].values.size() != tb[i].values.size()) return false;
        if (!std::equal(ta[i].values.begin(), ta[i].values.end(), tb[i].values.begin())) return false;
    }
    return true;
}

}  // namespace fedego::testing
