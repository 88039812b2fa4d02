#pragma once

#include "cropd/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace cropd {

struct LabeledDataset {
    Matrix inputs;               // n x prod(shape)
    Labels labels;               // values in [0, K)
    std::vector<int64_t> shape;  // per-sample shape, e.g. {d} or {c, h, w}
    int32_t num_classes = 0;
    std::string name;
    std::string split = "train";  // "train" or "test"

    int64_t size() const { return inputs.rows(); }
    int64_t dim() const { return inputs.cols(); }
    bool image_like() const { return shape.size() == 3; }
    void validate() const;

    LabeledDataset subset(const std::vector<int64_t>& idx) const;
};

struct AugmentationPolicy {
    double crop_fraction = 1.0;   // in (0, 1]
    double flip_prob = 0.0;       // in [0, 1]
    double jitter_strength = 0.0; // >= 0
    double grayscale_prob = 0.0;  // in [0, 1]
    bool enabled = false;
};

LabeledDataset make_synthetic_gaussian(int64_t n, int64_t d, int32_t k, double separation, uint64_t seed);

// Grid of n points at exact pairwise spacing >= 2*epsilon, labels round-robin
// over two classes. Points live in the hypercube [0, 2*epsilon*(side-1)]^d.
LabeledDataset make_separated_discrete(int64_t n, int64_t d, double epsilon, uint64_t seed);

void save_tensor_dataset(const LabeledDataset& ds, const std::filesystem::path& dir);
LabeledDataset load_tensor_dataset(const std::filesystem::path& dir);

Matrix augment(const Matrix& x, const std::vector<int64_t>& shape, const AugmentationPolicy& policy,
               uint64_t seed);

// Deterministic shuffled batches; concatenation of an epoch is a permutation
// of the dataset.
class BatchIter {
public:
    BatchIter(const LabeledDataset& ds, int64_t batch_size, uint64_t shuffle_seed);
    bool next(Matrix& inputs, Labels& labels);
    void reset(uint64_t shuffle_seed);
    int64_t num_batches() const;

private:
    const LabeledDataset& ds_;
    int64_t batch_size_;
    std::vector<int64_t> order_;
    int64_t pos_ = 0;
};

}  // namespace cropd
