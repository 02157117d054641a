#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "pbda/random.hpp"
#include "pbda/sample.hpp"

namespace testing {

inline pbda::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double shift = 0.0) {
    pbda::Rng rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    pbda::Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = n(rng) + (j == 0 ? shift : 0.0);
    return m;
}

inline pbda::LabeledSample random_labeled(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    pbda::LabeledSample s;
    s.features = random_matrix(rows, cols, seed);
    pbda::Rng rng(seed + 1);
    for (std::size_t i = 0; i < rows; ++i) s.labels.push_back(static_cast<pbda::Label>(rng() & 1));
    return s;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("pbda-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace testing
