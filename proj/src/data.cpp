#include "cropd/data.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace cropd {

using json = nlohmann::json;

void LabeledDataset::validate() const {
    if (inputs.rows() < 1) throw std::invalid_argument("dataset: empty inputs");
    if (static_cast<size_t>(inputs.rows()) != labels.size())
        throw std::invalid_argument("dataset: inputs/labels length mismatch");
    int64_t prod = 1;
    for (auto s : shape) prod *= s;
    if (prod != inputs.cols()) throw std::invalid_argument("dataset: shape/input-dim mismatch");
    if (!all_finite(inputs)) throw std::invalid_argument("dataset: non-finite inputs");
    for (auto y : labels)
        if (y < 0 || y >= num_classes) throw std::invalid_argument("dataset: label out of range");
}

LabeledDataset LabeledDataset::subset(const std::vector<int64_t>& idx) const {
    LabeledDataset out;
    out.inputs.resize(static_cast<Eigen::Index>(idx.size()), inputs.cols());
    out.labels.reserve(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(idx[i]);
        out.labels.push_back(labels[static_cast<size_t>(idx[i])]);
    }
    out.shape = shape;
    out.num_classes = num_classes;
    out.name = name;
    out.split = split;
    return out;
}

LabeledDataset make_synthetic_gaussian(int64_t n, int64_t d, int32_t k, double separation, uint64_t seed) {
    if (n < k || k < 2) throw std::invalid_argument("make_synthetic_gaussian: need n >= k >= 2");
    if (d < 1) throw std::invalid_argument("make_synthetic_gaussian: d must be positive");
    if (!(separation > 0.0)) throw std::invalid_argument("make_synthetic_gaussian: separation must be positive");

    Rng rng(seed);
    // Class means on disjoint sparse supports (two coordinates each, chosen
    // by seed) at exact pairwise distance `separation`; the signal then lives
    // in a few coordinates while the noise is isotropic. Falls back to dense
    // random directions when the dimension is too small for disjoint support.
    Matrix means = Matrix::Zero(k, d);
    if (d >= 2 * k) {
        std::vector<int64_t> coords(static_cast<size_t>(d));
        std::iota(coords.begin(), coords.end(), 0);
        std::shuffle(coords.begin(), coords.end(), rng);
        double c = separation / 2.0;
        for (int32_t i = 0; i < k; ++i) {
            means(i, coords[static_cast<size_t>(2 * i)]) = c;
            means(i, coords[static_cast<size_t>(2 * i + 1)]) = c;
        }
    } else {
        means = gaussian_matrix(k, d, rng);
        for (int32_t i = 0; i < k; ++i) means.row(i) /= means.row(i).norm();
        double min_dist = std::numeric_limits<double>::infinity();
        for (int32_t i = 0; i < k; ++i)
            for (int32_t j = i + 1; j < k; ++j) min_dist = std::min(min_dist, (means.row(i) - means.row(j)).norm());
        if (min_dist < 1e-12) {
            means.setZero();
            for (int32_t i = 0; i < k; ++i) means(i, i % d) = static_cast<double>(1 + i / d);
            min_dist = 1.0;
        }
        means *= separation / min_dist;
    }

    LabeledDataset ds;
    ds.inputs.resize(n, d);
    ds.labels.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        int32_t y = static_cast<int32_t>(i % k);  // balanced within +-1
        ds.labels[static_cast<size_t>(i)] = y;
        ds.inputs.row(i) = means.row(y) + gaussian_matrix(1, d, rng).row(0);
    }
    ds.inputs = quantize_f32(ds.inputs);
    ds.shape = {d};
    ds.num_classes = k;
    ds.name = "gaussian";
    ds.validate();
    return ds;
}

LabeledDataset make_separated_discrete(int64_t n, int64_t d, double epsilon, uint64_t /*seed*/) {
    if (n < 2) throw std::invalid_argument("make_separated_discrete: need n >= 2");
    if (d < 1) throw std::invalid_argument("make_separated_discrete: d must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("make_separated_discrete: epsilon must be positive");

    // Axis-aligned grid with spacing exactly 2*epsilon.
    int64_t side = static_cast<int64_t>(std::ceil(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d))));
    double max_coord = 2.0 * epsilon * static_cast<double>(side - 1);
    // Grid extent cap: documented scale factor of 1e6 over the unit hypercube.
    if (max_coord > 1e6)
        throw std::invalid_argument("make_separated_discrete: cannot place points within the scaled hypercube");

    LabeledDataset ds;
    ds.inputs.resize(n, d);
    ds.labels.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        int64_t rem = i;
        for (int64_t j = 0; j < d; ++j) {
            ds.inputs(i, j) = 2.0 * epsilon * static_cast<double>(rem % side);
            rem /= side;
        }
        ds.labels[static_cast<size_t>(i)] = static_cast<int32_t>(i % 2);
    }
    ds.inputs = quantize_f32(ds.inputs);
    ds.shape = {d};
    ds.num_classes = 2;
    ds.name = "separated_discrete";
    ds.validate();
    return ds;
}

void save_tensor_dataset(const LabeledDataset& ds, const std::filesystem::path& dir) {
    ds.validate();
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["name"] = ds.name;
    manifest["n"] = ds.size();
    manifest["shape"] = ds.shape;
    manifest["K"] = ds.num_classes;
    manifest["dtype"] = "float32";
    manifest["split"] = ds.split;
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";

    std::ofstream in(dir / "inputs.bin", std::ios::binary);
    for (Eigen::Index i = 0; i < ds.inputs.rows(); ++i)
        for (Eigen::Index j = 0; j < ds.inputs.cols(); ++j) {
            float v = static_cast<float>(ds.inputs(i, j));
            in.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    std::ofstream lb(dir / "labels.bin", std::ios::binary);
    lb.write(reinterpret_cast<const char*>(ds.labels.data()),
             static_cast<std::streamsize>(ds.labels.size() * sizeof(int32_t)));
}

LabeledDataset load_tensor_dataset(const std::filesystem::path& dir) {
    auto mpath = dir / "manifest.json";
    if (!std::filesystem::exists(mpath)) throw std::runtime_error("load_tensor_dataset: missing " + mpath.string());
    json manifest;
    try {
        std::ifstream(mpath) >> manifest;
    } catch (const std::exception& e) {
        throw std::runtime_error("load_tensor_dataset: corrupt manifest: " + std::string(e.what()));
    }
    LabeledDataset ds;
    ds.name = manifest.at("name").get<std::string>();
    ds.shape = manifest.at("shape").get<std::vector<int64_t>>();
    ds.num_classes = manifest.at("K").get<int32_t>();
    ds.split = manifest.at("split").get<std::string>();
    int64_t n = manifest.at("n").get<int64_t>();
    int64_t dim = 1;
    for (auto s : ds.shape) dim *= s;

    std::ifstream in(dir / "inputs.bin", std::ios::binary);
    if (!in) throw std::runtime_error("load_tensor_dataset: missing inputs.bin");
    ds.inputs.resize(n, dim);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < dim; ++j) {
            float v;
            if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
                throw std::runtime_error("load_tensor_dataset: inputs.bin truncated");
            ds.inputs(i, j) = static_cast<double>(v);
        }

    std::ifstream lb(dir / "labels.bin", std::ios::binary);
    if (!lb) throw std::runtime_error("load_tensor_dataset: missing labels.bin");
    lb.seekg(0, std::ios::end);
    auto bytes = lb.tellg();
    lb.seekg(0);
    if (bytes != static_cast<std::streamoff>(n * sizeof(int32_t)))
        throw std::runtime_error("load_tensor_dataset: labels.bin length mismatch");
    ds.labels.resize(static_cast<size_t>(n));
    lb.read(reinterpret_cast<char*>(ds.labels.data()), bytes);
    ds.validate();
    return ds;
}

namespace {

void check_policy(const AugmentationPolicy& p) {
    if (p.crop_fraction <= 0.0 || p.crop_fraction > 1.0)
        throw std::invalid_argument("augment: crop_fraction must be in (0,1]");
    if (p.flip_prob < 0.0 || p.flip_prob > 1.0) throw std::invalid_argument("augment: flip_prob must be in [0,1]");
    if (p.grayscale_prob < 0.0 || p.grayscale_prob > 1.0)
        throw std::invalid_argument("augment: grayscale_prob must be in [0,1]");
    if (p.jitter_strength < 0.0) throw std::invalid_argument("augment: jitter_strength must be >= 0");
}

// Mirror the trailing axis: width for images, the whole vector otherwise.
void flip_row(RowVector& row, const std::vector<int64_t>& shape) {
    if (shape.size() == 3) {
        int64_t c = shape[0], h = shape[1], w = shape[2];
        for (int64_t ci = 0; ci < c; ++ci)
            for (int64_t hi = 0; hi < h; ++hi)
                for (int64_t wi = 0; wi < w / 2; ++wi) {
                    int64_t a = (ci * h + hi) * w + wi;
                    int64_t b = (ci * h + hi) * w + (w - 1 - wi);
                    std::swap(row(a), row(b));
                }
    } else {
        row.reverseInPlace();
    }
}

}  // namespace

Matrix augment(const Matrix& x, const std::vector<int64_t>& shape, const AugmentationPolicy& policy,
               uint64_t seed) {
    if (!all_finite(x)) throw std::invalid_argument("augment: non-finite input");
    check_policy(policy);
    if (!policy.enabled) return x;

    bool image = shape.size() == 3;
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix out = x;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        auto row = out.row(i);
        if (image && policy.crop_fraction < 1.0) {
            // Crop a window of the given fraction and resize back (nearest).
            int64_t c = shape[0], h = shape[1], w = shape[2];
            int64_t ch = std::max<int64_t>(1, static_cast<int64_t>(std::round(h * policy.crop_fraction)));
            int64_t cw = std::max<int64_t>(1, static_cast<int64_t>(std::round(w * policy.crop_fraction)));
            int64_t oy = (h > ch) ? static_cast<int64_t>(unif(rng) * static_cast<double>(h - ch + 1)) : 0;
            int64_t ox = (w > cw) ? static_cast<int64_t>(unif(rng) * static_cast<double>(w - cw + 1)) : 0;
            RowVector cropped(row.size());
            for (int64_t ci = 0; ci < c; ++ci)
                for (int64_t hi = 0; hi < h; ++hi)
                    for (int64_t wi = 0; wi < w; ++wi) {
                        int64_t sy = oy + std::min(ch - 1, hi * ch / h);
                        int64_t sx = ox + std::min(cw - 1, wi * cw / w);
                        cropped((ci * h + hi) * w + wi) = row((ci * h + sy) * w + sx);
                    }
            row = cropped;
        } else if (!image && policy.crop_fraction < 1.0) {
            // Vector analogue: zero out a random (1 - fraction) share of coords.
            int64_t keep = std::max<int64_t>(1, static_cast<int64_t>(std::round(policy.crop_fraction * row.size())));
            std::vector<int64_t> idx(static_cast<size_t>(row.size()));
            std::iota(idx.begin(), idx.end(), 0);
            std::shuffle(idx.begin(), idx.end(), rng);
            for (int64_t j = keep; j < row.size(); ++j) row(idx[static_cast<size_t>(j)]) = 0.0;
        }
        if (unif(rng) < policy.flip_prob) {
            RowVector r = row;
            flip_row(r, shape);
            row = r;
        }
        if (policy.jitter_strength > 0.0) {
            if (image) {
                double scale = 1.0 + policy.jitter_strength * (2.0 * unif(rng) - 1.0);
                double shift = policy.jitter_strength * (2.0 * unif(rng) - 1.0) * 0.5;
                row = (row.array() * scale + shift).matrix();
            } else {
                for (Eigen::Index j = 0; j < row.size(); ++j) row(j) += policy.jitter_strength * gauss(rng);
            }
        }
        if (image && unif(rng) < policy.grayscale_prob) {
            int64_t c = shape[0], hw = shape[1] * shape[2];
            for (int64_t px = 0; px < hw; ++px) {
                double mean = 0.0;
                for (int64_t ci = 0; ci < c; ++ci) mean += row(ci * hw + px);
                mean /= static_cast<double>(c);
                for (int64_t ci = 0; ci < c; ++ci) row(ci * hw + px) = mean;
            }
        }
        if (image) row = row.cwiseMax(0.0).cwiseMin(1.0);
    }
    return out;
}

BatchIter::BatchIter(const LabeledDataset& ds, int64_t batch_size, uint64_t shuffle_seed)
    : ds_(ds), batch_size_(batch_size) {
    if (batch_size < 1) throw std::invalid_argument("batch_iter: batch_size must be >= 1");
    reset(shuffle_seed);
}

void BatchIter::reset(uint64_t shuffle_seed) {
    order_.resize(static_cast<size_t>(ds_.size()));
    std::iota(order_.begin(), order_.end(), 0);
    Rng rng(shuffle_seed);
    std::shuffle(order_.begin(), order_.end(), rng);
    pos_ = 0;
}

int64_t BatchIter::num_batches() const {
    return (ds_.size() + batch_size_ - 1) / batch_size_;
}

bool BatchIter::next(Matrix& inputs, Labels& labels) {
    if (pos_ >= ds_.size()) return false;
    int64_t count = std::min(batch_size_, ds_.size() - pos_);
    inputs.resize(count, ds_.dim());
    labels.resize(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) {
        inputs.row(i) = ds_.inputs.row(order_[static_cast<size_t>(pos_ + i)]);
        labels[static_cast<size_t>(i)] = ds_.labels[static_cast<size_t>(order_[static_cast<size_t>(pos_ + i)])];
    }
    pos_ += count;
    return true;
}

}  // namespace cropd
