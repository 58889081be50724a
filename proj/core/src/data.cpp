#include "htreg/data.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "htreg/rng.hpp"

namespace htreg {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr char kCheckpointMagic[4] = {'H', 'T', 'R', 'W'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::size_t kCifarRecordBytes = 3073;  // 1 label + 32*32*3 pixels

std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TruncatedFile("cannot open " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf,
                        std::size_t off, const std::string& path) {
  if (off + 4 > buf.size()) throw TruncatedFile(path + ": truncated header");
  return (std::uint32_t(buf[off]) << 24) | (std::uint32_t(buf[off + 1]) << 16) |
         (std::uint32_t(buf[off + 2]) << 8) | std::uint32_t(buf[off + 3]);
}

double read_le_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

void write_le_f64(std::ofstream& out, double x) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = (bits >> (8 * i)) & 0xFF;
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

void write_le_u32(std::ofstream& out, std::uint32_t x) {
  unsigned char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = (x >> (8 * i)) & 0xFF;
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_le_u32(const std::vector<unsigned char>& buf,
                          std::size_t off, const std::string& path) {
  if (off + 4 > buf.size()) throw Corrupt(path + ": truncated");
  return std::uint32_t(buf[off]) | (std::uint32_t(buf[off + 1]) << 8) |
         (std::uint32_t(buf[off + 2]) << 16) |
         (std::uint32_t(buf[off + 3]) << 24);
}

}  // namespace

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  const auto img = read_all(images_path);
  if (read_be32(img, 0, images_path) != kIdxImagesMagic) {
    throw BadMagic(images_path + ": bad IDX image magic");
  }
  const std::uint32_t count = read_be32(img, 4, images_path);
  const std::uint32_t rows = read_be32(img, 8, images_path);
  const std::uint32_t cols = read_be32(img, 12, images_path);
  const std::size_t dim = std::size_t(rows) * cols;
  if (img.size() != 16 + std::size_t(count) * dim) {
    throw TruncatedFile(images_path + ": size does not match header");
  }

  const auto lab = read_all(labels_path);
  if (read_be32(lab, 0, labels_path) != kIdxLabelsMagic) {
    throw BadMagic(labels_path + ": bad IDX label magic");
  }
  const std::uint32_t label_count = read_be32(lab, 4, labels_path);
  if (lab.size() != 8 + std::size_t(label_count)) {
    throw TruncatedFile(labels_path + ": size does not match header");
  }
  if (label_count != count) {
    throw CountMismatch("image/label counts differ: " + std::to_string(count) +
                        " vs " + std::to_string(label_count));
  }

  Dataset out;
  out.name = "idx";
  out.feature_dim = static_cast<int>(dim);
  out.features.resize(count, dim);
  out.labels.resize(count);
  int max_label = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const unsigned char* px = img.data() + 16 + std::size_t(i) * dim;
    for (std::size_t j = 0; j < dim; ++j) {
      out.features(i, j) = px[j] / 255.0;
    }
    out.labels[i] = lab[8 + i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.num_classes = max_label + 1;
  return out;
}

Dataset load_cifar10_binary(const std::vector<std::string>& paths) {
  Dataset out;
  out.name = "cifar10";
  out.feature_dim = 3072;
  out.num_classes = 10;

  std::vector<std::vector<unsigned char>> files;
  std::size_t total = 0;
  for (const auto& path : paths) {
    auto buf = read_all(path);
    if (buf.empty() || buf.size() % kCifarRecordBytes != 0) {
      throw TruncatedFile(path + ": not a whole number of 3073-byte records");
    }
    total += buf.size() / kCifarRecordBytes;
    files.push_back(std::move(buf));
  }

  out.features.resize(total, 3072);
  out.labels.resize(total);
  std::size_t row = 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto& buf = files[f];
    for (std::size_t r = 0; r < buf.size() / kCifarRecordBytes; ++r, ++row) {
      const unsigned char* rec = buf.data() + r * kCifarRecordBytes;
      if (rec[0] > 9) {
        throw LabelOutOfRange(paths[f] + ": label byte " +
                              std::to_string(rec[0]));
      }
      out.labels[row] = rec[0];
      for (int j = 0; j < 3072; ++j) out.features(row, j) = rec[1 + j] / 255.0;
    }
  }
  return out;
}

Dataset synth_blobs(int classes, int dim, int n_per_class, double separation,
                    std::uint64_t seed) {
  if (classes < 2 || dim < 1 || n_per_class < 1) {
    throw Error("synth_blobs requires classes >= 2, dim >= 1, n >= 1");
  }
  const int n = classes * n_per_class;
  Dataset out;
  out.name = "blobs";
  out.feature_dim = dim;
  out.num_classes = classes;
  out.features.resize(n, dim);
  out.labels.resize(n);

  Rng rng(seed);
  for (int c = 0; c < classes; ++c) {
    for (int s = 0; s < n_per_class; ++s) {
      const int i = c * n_per_class + s;
      out.labels[i] = c;
      for (int j = 0; j < dim; ++j) {
        const double center = (j == c % dim) ? separation : 0.0;
        out.features(i, j) = center + rng.gaussian();
      }
    }
  }
  // Affine rescale of the whole set into [0, 1].
  const double lo = out.features.minCoeff();
  const double hi = out.features.maxCoeff();
  if (hi > lo) {
    out.features = (out.features.array() - lo) / (hi - lo);
  }
  out.features = out.features.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

Dataset subset(const Dataset& data, int limit) {
  if (limit <= 0 || limit >= data.n()) return data;
  Dataset out;
  out.name = data.name;
  out.feature_dim = data.feature_dim;
  out.num_classes = data.num_classes;
  out.features = data.features.topRows(limit);
  out.labels.assign(data.labels.begin(), data.labels.begin() + limit);
  return out;
}

void save_checkpoint(const MlpModel& model, const nlohmann::json& metadata,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(kCheckpointMagic, 4);
  write_le_u32(out, kCheckpointVersion);
  write_le_u32(out, static_cast<std::uint32_t>(model.num_layers()));
  for (int l = 0; l < model.num_layers(); ++l) {
    const Matrix& w = model.weights[l];
    write_le_u32(out, static_cast<std::uint32_t>(w.rows()));
    write_le_u32(out, static_cast<std::uint32_t>(w.cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) write_le_f64(out, w(i, j));
    }
    for (Eigen::Index j = 0; j < model.biases[l].size(); ++j) {
      write_le_f64(out, model.biases[l](j));
    }
  }
  if (!out) throw Error("write failed: " + path);
  out.close();

  std::ofstream meta(path + ".json", std::ios::trunc);
  meta << metadata.dump(2) << "\n";
}

std::pair<MlpModel, nlohmann::json> load_checkpoint(const std::string& path) {
  const auto buf = read_all(path);
  if (buf.size() < 4 || std::memcmp(buf.data(), kCheckpointMagic, 4) != 0) {
    throw BadMagic(path + ": bad checkpoint magic");
  }
  const std::uint32_t version = read_le_u32(buf, 4, path);
  if (version != kCheckpointVersion) {
    throw VersionUnsupported(path + ": checkpoint version " +
                             std::to_string(version));
  }
  const std::uint32_t layers = read_le_u32(buf, 8, path);
  if (layers == 0 || layers > 1024) {
    throw Corrupt(path + ": implausible layer count");
  }

  MlpModel model;
  std::size_t off = 12;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const std::uint32_t rows = read_le_u32(buf, off, path);
    const std::uint32_t cols = read_le_u32(buf, off + 4, path);
    off += 8;
    if (rows == 0 || cols == 0) throw Corrupt(path + ": zero layer dimension");
    const std::size_t need = (std::size_t(rows) * cols + cols) * 8;
    if (off + need > buf.size()) throw Corrupt(path + ": truncated layer data");
    Matrix w(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) {
        w(i, j) = read_le_f64(buf.data() + off);
        off += 8;
      }
    }
    Vector b(cols);
    for (std::uint32_t j = 0; j < cols; ++j) {
      b(j) = read_le_f64(buf.data() + off);
      off += 8;
    }
    if (l > 0 && model.weights.back().cols() != w.rows()) {
      throw Corrupt(path + ": layer shapes do not chain");
    }
    if (l == 0) model.layer_sizes.push_back(rows);
    model.layer_sizes.push_back(cols);
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  if (off != buf.size()) throw Corrupt(path + ": trailing bytes");

  nlohmann::json metadata;
  std::ifstream meta(path + ".json");
  if (meta) {
    try {
      meta >> metadata;
    } catch (const nlohmann::json::exception& e) {
      throw Corrupt(path + ".json: " + e.what());
    }
  }
  return {std::move(model), std::move(metadata)};
}

std::vector<std::vector<int>> batch_iter(int n, int batch_size,
                                         std::uint64_t epoch_seed) {
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(epoch_seed);
  rng.shuffle(perm);

  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch_size) {
    const int end = std::min(start + batch_size, n);
    batches.emplace_back(perm.begin() + start, perm.begin() + end);
  }
  return batches;
}

}  // namespace htreg
