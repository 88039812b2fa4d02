#pragma once

#include "cropd/tensor.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testutil {

// Scratch directory that cleans up after itself.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

inline bool bits_equal(const cropd::Matrix& a, const cropd::Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

inline double max_abs_diff(const cropd::Matrix& a, const cropd::Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

inline double max_rel_diff(const cropd::Matrix& a, const cropd::Matrix& b) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        double denom = std::max({std::abs(a.data()[i]), std::abs(b.data()[i]), 1e-8});
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]) / denom);
    }
    return worst;
}

inline cropd::Matrix unit_rows(cropd::Matrix m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) /= m.row(i).norm();
    return m;
}

}  // namespace testutil
