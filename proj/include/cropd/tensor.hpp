#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace cropd {

// Rows are samples throughout.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Labels = std::vector<int32_t>;

using Rng = std::mt19937_64;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// Quantize through float32 so in-memory values round-trip bit-exactly
// with the float32 on-disk container format.
inline double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

inline Matrix quantize_f32(Matrix m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = to_f32(m.data()[i]);
    return m;
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double stddev = 1.0) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

}  // namespace cropd
