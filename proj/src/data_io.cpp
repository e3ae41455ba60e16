#include "iadfp/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "iadfp/rng.hpp"

namespace iadfp {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "unknown";
}

Shape Dataset::example_shape() const { return Shape(features.shape.begin() + 1, features.shape.end()); }

void Dataset::validate() const {
  if (labels.empty()) throw std::invalid_argument("dataset: no examples");
  if (features.rows() != labels.size()) throw std::invalid_argument("dataset: feature/label count mismatch");
  if (num_classes < 2) throw std::invalid_argument("dataset: need at least two classes");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw std::invalid_argument("dataset: label out of range");
  }
  for (double v : features.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.gather_rows(indices);
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels.at(i));
  out.num_classes = num_classes;
  out.split = split;
  return out;
}

namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                   const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw IdxError(IdxError::Kind::truncated, path.string() + ": truncated header");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void expect_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    char buf[64];
    std::snprintf(buf, sizeof buf, ": bad magic 0x%08x (expected 0x%08x)", got, want);
    throw IdxError(IdxError::Kind::bad_magic, path.string() + buf);
  }
}

}  // namespace

Dataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 int num_classes) {
  const auto img = slurp(images);
  expect_magic(be32(img, 0, images), kIdxImageMagic, images);
  const std::size_t count = be32(img, 4, images);
  const std::size_t rows = be32(img, 8, images);
  const std::size_t cols = be32(img, 12, images);
  const std::size_t pixels = count * rows * cols;
  if (img.size() < 16 + pixels) {
    throw IdxError(IdxError::Kind::truncated, images.string() + ": expected " + std::to_string(pixels) +
                                                   " pixel bytes, found " + std::to_string(img.size() - 16));
  }

  const auto lab = slurp(labels);
  expect_magic(be32(lab, 0, labels), kIdxLabelMagic, labels);
  const std::size_t label_count = be32(lab, 4, labels);
  if (lab.size() < 8 + label_count) {
    throw IdxError(IdxError::Kind::truncated, labels.string() + ": expected " + std::to_string(label_count) +
                                                   " labels, found " + std::to_string(lab.size() - 8));
  }
  if (label_count != count) {
    throw IdxError(IdxError::Kind::count_mismatch, "IDX pair has " + std::to_string(count) + " images but " +
                                                        std::to_string(label_count) + " labels");
  }

  Dataset data;
  data.features = Tensor({count, rows, cols});
  for (std::size_t i = 0; i < pixels; ++i) data.features[i] = img[16 + i] / 255.0;
  data.labels.resize(count);
  int max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    data.labels[i] = lab[8 + i];
    max_label = std::max(max_label, data.labels[i]);
  }
  data.num_classes = num_classes > 0 ? num_classes : max_label + 1;
  return data;
}

void SyntheticSpec::validate() const {
  if (classes < 2) throw std::invalid_argument("synthetic: classes must be >= 2");
  if (dim < static_cast<std::size_t>(classes)) throw std::invalid_argument("synthetic: dim must be >= classes");
  if (!(separation >= 0.0)) throw std::invalid_argument("synthetic: separation must be >= 0");
  if (!(stddev > 0.0)) throw std::invalid_argument("synthetic: stddev must be > 0");
  if (per_class == 0) throw std::invalid_argument("synthetic: per_class must be > 0");
}

Dataset synthetic_blobs(const SyntheticSpec& spec) {
  spec.validate();
  const auto k = static_cast<std::size_t>(spec.classes);
  const std::size_t n = k * spec.per_class;
  const double offset = spec.separation / std::sqrt(2.0);
  Rng rng(spec.seed);

  Dataset data;
  data.num_classes = spec.classes;
  data.features = Tensor({n, spec.dim});
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % k;
    data.labels[i] = static_cast<int>(label);
    auto row = data.features.row(i);
    for (std::size_t j = 0; j < spec.dim; ++j) row[j] = spec.stddev * rng.normal();
    row[label] += offset;
  }
  return data;
}

std::array<Dataset, 3> split_shuffle(const Dataset& data, std::array<double, 3> fractions,
                                     std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw std::invalid_argument("split: fractions must be non-negative");
    total += f;
  }
  if (total > 1.0 + 1e-12) throw std::invalid_argument("split: fractions sum to more than 1");

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::array<Dataset, 3> parts;
  const Split tags[3] = {Split::train, Split::validation, Split::test};
  std::size_t begin = 0;
  for (int p = 0; p < 3; ++p) {
    const auto count = static_cast<std::size_t>(std::floor(fractions[p] * static_cast<double>(n) + 1e-9));
    const std::size_t end = std::min(n, begin + count);
    parts[p] = data.subset(std::span<const std::size_t>(order).subspan(begin, end - begin));
    parts[p].split = tags[p];
    begin = end;
  }
  return parts;
}

void standardize(Dataset& data, const Dataset& reference) {
  const std::size_t width = reference.features.row_size();
  if (data.features.row_size() != width) throw std::invalid_argument("standardize: feature width mismatch");
  std::vector<double> mean(width, 0.0);
  std::vector<double> var(width, 0.0);
  const double n = static_cast<double>(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const auto r = reference.features.row(i);
    for (std::size_t j = 0; j < width; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= n;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const auto r = reference.features.row(i);
    for (std::size_t j = 0; j < width; ++j) var[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto r = data.features.row(i);
    for (std::size_t j = 0; j < width; ++j) {
      const double sd = std::sqrt(var[j] / n);
      r[j] = sd > 0.0 ? (r[j] - mean[j]) / sd : 0.0;
    }
  }
}

}  // namespace iadfp
