#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "htreg/data.hpp"
#include "htreg/rng.hpp"

using namespace htreg;

namespace {

const std::filesystem::path kTmp =
    std::filesystem::temp_directory_path() / "htreg_data_test";

void write_file(const std::filesystem::path& path,
                const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void push_be32(std::vector<unsigned char>& buf, std::uint32_t x) {
  buf.push_back((x >> 24) & 0xFF);
  buf.push_back((x >> 16) & 0xFF);
  buf.push_back((x >> 8) & 0xFF);
  buf.push_back(x & 0xFF);
}

// Two 2x2 images with known pixel bytes plus labels [3, 7].
std::pair<std::string, std::string> make_idx_pair() {
  std::filesystem::create_directories(kTmp);
  std::vector<unsigned char> img;
  push_be32(img, 0x00000803);
  push_be32(img, 2);
  push_be32(img, 2);
  push_be32(img, 2);
  for (unsigned char b : {0, 255, 128, 64}) img.push_back(b);
  for (unsigned char b : {10, 20, 30, 40}) img.push_back(b);
  const auto img_path = (kTmp / "images.idx").string();
  write_file(img_path, img);

  std::vector<unsigned char> lab;
  push_be32(lab, 0x00000801);
  push_be32(lab, 2);
  lab.push_back(3);
  lab.push_back(7);
  const auto lab_path = (kTmp / "labels.idx").string();
  write_file(lab_path, lab);
  return {img_path, lab_path};
}

MlpModel random_model(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> sizes;
  const int layers = 2 + static_cast<int>(rng.below(3));
  for (int i = 0; i <= layers; ++i) {
    sizes.push_back(1 + static_cast<int>(rng.below(8)));
  }
  MlpModel m = init_mlp(sizes, seed + 1);
  for (Vector& b : m.biases) {
    for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

bool models_bitwise_equal(const MlpModel& a, const MlpModel& b) {
  if (a.layer_sizes != b.layer_sizes) return false;
  for (int l = 0; l < a.num_layers(); ++l) {
    if (a.weights[l] != b.weights[l]) return false;
    if (a.biases[l] != b.biases[l]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("load_idx parses a synthetic pair") {
  const auto [img, lab] = make_idx_pair();
  const Dataset d = load_idx(img, lab);
  CHECK(d.n() == 2);
  CHECK(d.feature_dim == 4);
  CHECK(d.features(0, 0) == doctest::Approx(0.0));
  CHECK(d.features(0, 1) == doctest::Approx(1.0));
  CHECK(d.features(0, 2) == doctest::Approx(128.0 / 255.0));
  CHECK(d.features(0, 3) == doctest::Approx(64.0 / 255.0));
  CHECK(d.labels[0] == 3);
  CHECK(d.labels[1] == 7);
}

TEST_CASE("load_idx typed errors") {
  const auto [img, lab] = make_idx_pair();

  // flipped image magic
  {
    std::ifstream in(img, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    bytes[3] = 0x99;
    write_file(kTmp / "bad_magic.idx", bytes);
  }
  CHECK_THROWS_AS(load_idx((kTmp / "bad_magic.idx").string(), lab), BadMagic);

  // truncated image payload
  {
    std::ifstream in(img, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() - 3);
    write_file(kTmp / "trunc.idx", bytes);
  }
  CHECK_THROWS_AS(load_idx((kTmp / "trunc.idx").string(), lab), TruncatedFile);

  // label count mismatch
  {
    std::vector<unsigned char> one;
    push_be32(one, 0x00000801);
    push_be32(one, 1);
    one.push_back(0);
    write_file(kTmp / "one_label.idx", one);
  }
  CHECK_THROWS_AS(load_idx(img, (kTmp / "one_label.idx").string()),
                  CountMismatch);

  CHECK_THROWS_AS(load_idx((kTmp / "missing.idx").string(), lab),
                  TruncatedFile);
}

TEST_CASE("idx fuzz: truncations never crash, always typed errors") {
  const auto [img, lab] = make_idx_pair();
  std::ifstream in(img, std::ios::binary);
  std::vector<unsigned char> full((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  for (std::size_t len = 0; len < full.size(); ++len) {
    std::vector<unsigned char> cut(full.begin(), full.begin() + len);
    write_file(kTmp / "fuzz.idx", cut);
    CHECK_THROWS_AS(load_idx((kTmp / "fuzz.idx").string(), lab), Error);
  }
}

TEST_CASE("load_cifar10_binary parses synthetic records") {
  std::filesystem::create_directories(kTmp);
  std::vector<unsigned char> rec(3073, 255);
  rec[0] = 9;
  std::vector<unsigned char> two(2 * 3073);
  std::copy(rec.begin(), rec.end(), two.begin());
  std::copy(rec.begin(), rec.end(), two.begin() + 3073);
  two[3073] = 4;
  write_file(kTmp / "batch.bin", two);

  const Dataset d = load_cifar10_binary({(kTmp / "batch.bin").string()});
  CHECK(d.n() == 2);
  CHECK(d.feature_dim == 3072);
  CHECK(d.labels[0] == 9);
  CHECK(d.labels[1] == 4);
  CHECK(d.features(0, 0) == doctest::Approx(1.0));
  CHECK(d.features(0, 3071) == doctest::Approx(1.0));

  // multiple files concatenate
  const Dataset d2 = load_cifar10_binary({(kTmp / "batch.bin").string(),
                                          (kTmp / "batch.bin").string()});
  CHECK(d2.n() == 4);
}

TEST_CASE("load_cifar10_binary typed errors") {
  std::vector<unsigned char> bad(3072, 0);  // not divisible by 3073
  write_file(kTmp / "short.bin", bad);
  CHECK_THROWS_AS(load_cifar10_binary({(kTmp / "short.bin").string()}),
                  TruncatedFile);

  std::vector<unsigned char> overflow(3073, 0);
  overflow[0] = 12;
  write_file(kTmp / "overflow.bin", overflow);
  CHECK_THROWS_AS(load_cifar10_binary({(kTmp / "overflow.bin").string()}),
                  LabelOutOfRange);
}

TEST_CASE("synth_blobs balance, determinism, range") {
  const Dataset d = synth_blobs(3, 5, 40, 4.0, 9);
  CHECK(d.n() == 120);
  CHECK(d.num_classes == 3);
  std::vector<int> counts(3, 0);
  for (int y : d.labels) ++counts[y];
  for (int c : counts) CHECK(c == 40);
  CHECK(d.features.minCoeff() >= 0.0);
  CHECK(d.features.maxCoeff() <= 1.0);

  const Dataset d2 = synth_blobs(3, 5, 40, 4.0, 9);
  CHECK(d.features == d2.features);
  const Dataset d3 = synth_blobs(3, 5, 40, 4.0, 10);
  CHECK(d.features != d3.features);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  std::filesystem::create_directories(kTmp);
  const auto path = (kTmp / "model.htrw").string();
  const MlpModel m = random_model(123);
  nlohmann::json meta;
  meta["note"] = "test";
  save_checkpoint(m, meta, path);
  const auto [loaded, loaded_meta] = load_checkpoint(path);
  CHECK(models_bitwise_equal(m, loaded));
  CHECK(loaded_meta.at("note") == "test");
}

TEST_CASE("checkpoint round trip property over many random models") {
  std::filesystem::create_directories(kTmp);
  const auto path = (kTmp / "prop.htrw").string();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const MlpModel m = random_model(seed);
    save_checkpoint(m, nlohmann::json::object(), path);
    CHECK(models_bitwise_equal(m, load_checkpoint(path).first));
  }
}

TEST_CASE("checkpoint typed errors") {
  std::filesystem::create_directories(kTmp);
  const auto path = (kTmp / "damage.htrw").string();
  save_checkpoint(random_model(5), nlohmann::json::object(), path);
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  in.close();

  auto damaged = bytes;
  damaged[0] = 'X';
  write_file(kTmp / "bad.htrw", damaged);
  CHECK_THROWS_AS(load_checkpoint((kTmp / "bad.htrw").string()), BadMagic);

  damaged = bytes;
  damaged[4] = 99;  // version
  write_file(kTmp / "ver.htrw", damaged);
  CHECK_THROWS_AS(load_checkpoint((kTmp / "ver.htrw").string()),
                  VersionUnsupported);

  damaged = bytes;
  damaged.resize(damaged.size() - 5);
  write_file(kTmp / "tail.htrw", damaged);
  CHECK_THROWS_AS(load_checkpoint((kTmp / "tail.htrw").string()), Corrupt);

  damaged = bytes;
  damaged.push_back(0);
  write_file(kTmp / "extra.htrw", damaged);
  CHECK_THROWS_AS(load_checkpoint((kTmp / "extra.htrw").string()), Corrupt);
}

TEST_CASE("checkpoint fuzz: every truncation yields a typed error") {
  const auto path = (kTmp / "fuzzsrc.htrw").string();
  save_checkpoint(random_model(17), nlohmann::json::object(), path);
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> full((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  for (std::size_t len = 0; len < full.size(); len += 3) {
    std::vector<unsigned char> cut(full.begin(), full.begin() + len);
    write_file(kTmp / "fuzz.htrw", cut);
    CHECK_THROWS_AS(load_checkpoint((kTmp / "fuzz.htrw").string()), Error);
  }
}

TEST_CASE("batch_iter partitions the index set") {
  const auto batches = batch_iter(5, 2, 1);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 2);
  CHECK(batches[1].size() == 2);
  CHECK(batches[2].size() == 1);

  for (auto [n, bs] : {std::pair{17, 4}, {16, 4}, {1, 3}, {100, 7}}) {
    const auto bb = batch_iter(n, bs, 42);
    std::set<int> seen;
    for (const auto& b : bb) {
      for (int i : b) {
        CHECK(i >= 0);
        CHECK(i < n);
        CHECK(seen.insert(i).second);  // each index exactly once
      }
    }
    CHECK(static_cast<int>(seen.size()) == n);
  }

  CHECK(batch_iter(10, 3, 7) == batch_iter(10, 3, 7));
  CHECK(batch_iter(10, 3, 7) != batch_iter(10, 3, 8));
}

TEST_CASE("subset keeps the leading samples") {
  const Dataset d = synth_blobs(2, 2, 30, 4.0, 3);
  const Dataset s = subset(d, 10);
  CHECK(s.n() == 10);
  CHECK(s.features.row(0) == d.features.row(0));
  CHECK(subset(d, 0).n() == d.n());
  CHECK(subset(d, 1000).n() == d.n());
}
