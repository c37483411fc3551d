// Copyright 2026 The qdnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <unistd.h>

#include "core/data.hpp"
#include "core/error.hpp"
#include "oracles.hpp"

using namespace qdnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("qdnn_data_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void put32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>(v >> s));
}

std::vector<unsigned char> idx_images(const std::vector<std::vector<unsigned char>>& imgs, int rows, int cols,
                                      std::uint32_t magic = 0x803) {
  std::vector<unsigned char> b;
  put32(b, magic);
  put32(b, static_cast<std::uint32_t>(imgs.size()));
  put32(b, static_cast<std::uint32_t>(rows));
  put32(b, static_cast<std::uint32_t>(cols));
  for (const auto& im : imgs) b.insert(b.end(), im.begin(), im.end());
  return b;
}

std::vector<unsigned char> idx_labels(const std::vector<unsigned char>& labels, std::uint32_t magic = 0x801) {
  std::vector<unsigned char> b;
  put32(b, magic);
  put32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream os(p, std::ios::binary);
  os.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

void write_gz(const fs::path& p, const std::vector<unsigned char>& b) {
  gzFile f = gzopen(p.string().c_str(), "wb");
  REQUIRE(f != nullptr);
  gzwrite(f, b.data(), static_cast<unsigned>(b.size()));
  gzclose(f);
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

const std::vector<std::vector<unsigned char>> kImages{{0, 51, 255, 102}, {255, 0, 17, 34}};
const std::vector<unsigned char> kLabels{7, 2};

}  // namespace

TEST_CASE("idx loading") {
  TempDir dir;
  const fs::path img = dir.path / "img", lab = dir.path / "lab";
  SUBCASE("two-image fixture round-trips") {
    write_bytes(img, idx_images(kImages, 2, 2));
    write_bytes(lab, idx_labels(kLabels));
    const Dataset ds = load_idx(img, lab);
    CHECK(ds.size() == 2);
    CHECK(ds.dim() == 4);
    CHECK(ds.num_classes == 10);
    CHECK(ds.labels == std::vector<int>{7, 2});
    for (int s = 0; s < 2; ++s)
      for (int i = 0; i < 4; ++i) CHECK(ds.features(i, s) == kImages[s][i] / 255.0);
  }
  SUBCASE("gzip files decode to the same data") {
    write_gz(img, idx_images(kImages, 2, 2));
    write_gz(lab, idx_labels(kLabels));
    const Dataset ds = load_idx(img, lab);
    CHECK(ds.features(2, 0) == 1.0);
    CHECK(ds.labels[1] == 2);
  }
  SUBCASE("wrong label magic") {
    write_bytes(img, idx_images(kImages, 2, 2));
    write_bytes(lab, idx_labels(kLabels, 0x803));
    CHECK_THROWS_AS(load_idx(img, lab), IoError);
  }
  SUBCASE("wrong image magic") {
    write_bytes(img, idx_images(kImages, 2, 2, 0x801));
    write_bytes(lab, idx_labels(kLabels));
    CHECK_THROWS_AS(load_idx(img, lab), IoError);
  }
  SUBCASE("truncated images") {
    auto b = idx_images(kImages, 2, 2);
    b.pop_back();
    write_bytes(img, b);
    write_bytes(lab, idx_labels(kLabels));
    CHECK_THROWS_AS(load_idx(img, lab), IoError);
  }
  SUBCASE("count mismatch") {
    write_bytes(img, idx_images(kImages, 2, 2));
    write_bytes(lab, idx_labels({1, 2, 3}));
    CHECK_THROWS_AS(load_idx(img, lab), IoError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_idx(dir.path / "nope", lab), IoError); }
}

TEST_CASE("bundled MNIST subset") {
  const Dataset ds = load_mnist_dir("data/mnist-5k");
  CHECK(ds.size() == 5000);
  CHECK(ds.dim() == 784);
  CHECK(ds.num_classes == 10);
  CHECK(ds.features.minCoeff() >= 0.0);
  CHECK(ds.features.maxCoeff() <= 1.0);
  std::vector<int> counts(10, 0);
  for (int c : ds.labels) ++counts[static_cast<std::size_t>(c)];
  for (int c : counts) CHECK(c == 500);
}

TEST_CASE("csv loading") {
  TempDir dir;
  const fs::path p = dir.path / "d.csv";
  SUBCASE("three-row fixture") {
    write_text(p, "a,b,t\n1,5,0.5\n3,5,1.5\n2,5,2.5\n");
    const Dataset ds = load_csv(p, {1, true});
    CHECK(ds.size() == 3);
    CHECK(ds.dim() == 2);
    CHECK(ds.features(0, 0) == 0.0);
    CHECK(ds.features(0, 1) == 1.0);
    CHECK(ds.features(0, 2) == 0.5);
    for (int s = 0; s < 3; ++s) CHECK(ds.features(1, s) == 0.0);  // constant column
    CHECK(ds.targets(0, 2) == 2.5);
  }
  SUBCASE("autoencoding copies features") {
    write_text(p, "1,2\n3,4\n");
    const Dataset ds = load_csv(p, {0, false});
    CHECK(ds.targets == ds.features);
    CHECK_FALSE(ds.has_labels());
  }
  SUBCASE("ragged rows") {
    write_text(p, "1,2\n3\n");
    CHECK_THROWS_AS(load_csv(p, {0, false}), IoError);
  }
  SUBCASE("non-numeric cell") {
    write_text(p, "1,2\n3,x\n");
    CHECK_THROWS_AS(load_csv(p, {0, false}), IoError);
  }
  SUBCASE("synthetic signals round-trip through csv") {
    const Dataset gen = make_synthetic_eeg({300, 6, 3, 0.1, 5});
    std::ofstream os(p);
    os.precision(17);
    for (Eigen::Index s = 0; s < gen.features.cols(); ++s) {
      for (Eigen::Index c = 0; c < gen.features.rows(); ++c) os << (c ? "," : "") << gen.features(c, s);
      os << '\n';
    }
    os.close();
    const Dataset back = load_csv(p, {0, false});
    CHECK((back.features - gen.features).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(back.targets == back.features);
  }
}

TEST_CASE("synthetic signals") {
  const Dataset a = make_synthetic_eeg({500, 56, 8, 0.1, 3});
  CHECK(a.dim() == 56);
  CHECK(a.size() == 500);
  CHECK(a.features.minCoeff() == 0.0);
  CHECK(a.features.maxCoeff() == 1.0);
  CHECK(a.targets == a.features);
  CHECK(make_synthetic_eeg({500, 56, 8, 0.1, 3}).features == a.features);
  CHECK(make_synthetic_eeg({500, 56, 8, 0.1, 4}).features != a.features);
}

TEST_CASE("normalization is idempotent") {
  Rng rng = make_rng(1, 0);
  Matrix m = 10.0 * Matrix::NullaryExpr(4, 30, [&] { return standard_normal(rng); });
  normalize_minmax(m);
  const Matrix once = m;
  normalize_minmax(m);
  CHECK((m - once).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("grayscale weights") {
  Matrix rgb(3, 1);
  rgb << 1.0, 0.5, 0.25;
  CHECK(to_grayscale(rgb)(0, 0) == doctest::Approx(0.299 + 0.587 * 0.5 + 0.114 * 0.25));
}

TEST_CASE("transforms") {
  Dataset ds;
  ds.features = Matrix::Constant(2, 3, 0.25);
  ds.features(1, 2) = 1.0;
  ds.labels = {0, 1, 0};
  ds.num_classes = 2;
  SUBCASE("invert") {
    TransformSpec spec;
    spec.invert = true;
    const Dataset inv = apply_transform(ds, spec);
    CHECK(inv.features(0, 0) == 0.75);
    CHECK(inv.features(1, 2) == 0.0);
    CHECK(apply_transform(inv, spec).features == ds.features);
  }
  SUBCASE("scale and shift") {
    TransformSpec spec;
    spec.scale = Vector::Constant(2, 2.0);
    spec.shift = Vector::Constant(2, -0.5);
    const Dataset out = apply_transform(ds, spec);
    CHECK(out.features(0, 0) == 0.0);
    CHECK(out.features(1, 2) == 1.5);
  }
  SUBCASE("invert needs unit-range data") {
    ds.features(0, 0) = 1.5;
    TransformSpec spec;
    spec.invert = true;
    CHECK_THROWS_AS(apply_transform(ds, spec), StructuralError);
  }
  SUBCASE("autoencoder targets follow the inputs") {
    Dataset ae = ds;
    ae.make_autoencoder();
    TransformSpec spec;
    spec.invert = true;
    const Dataset inv = apply_transform(ae, spec);
    CHECK(inv.targets == inv.features);
  }
}

TEST_CASE("splits and minibatches") {
  Rng rng = make_rng(2, 0);
  Dataset ds;
  ds.features = oracle::random_uniform(3, 10, rng);
  ds.labels = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  ds.num_classes = 10;
  SUBCASE("tail split is disjoint and complete") {
    const Split s = split_tail(ds, 3);
    CHECK(s.train.size() == 7);
    CHECK(s.valid.size() == 3);
    std::set<int> seen(s.train.labels.begin(), s.train.labels.end());
    for (int c : s.valid.labels) CHECK(seen.insert(c).second);
    CHECK(seen.size() == 10);
    CHECK_THROWS_AS(split_tail(ds, 11), ConfigError);
  }
  SUBCASE("batch sizes") {
    const auto b = minibatches(10, 3, rng);
    REQUIRE(b.size() == 4);
    CHECK(b[0].size() == 3);
    CHECK(b[3].size() == 1);
    std::vector<std::size_t> all;
    for (const auto& x : b) all.insert(all.end(), x.begin(), x.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> want(10);
    std::iota(want.begin(), want.end(), 0);
    CHECK(all == want);
  }
  SUBCASE("same seed, same order") {
    Rng a = make_rng(5, 2), b = make_rng(5, 2);
    CHECK(minibatches(100, 7, a) == minibatches(100, 7, b));
    CHECK(minibatches(100, 7, a) == minibatches(100, 7, b));  // second epoch too
  }
  SUBCASE("batch size zero") { CHECK_THROWS_AS(minibatches(10, 0, rng), ConfigError); }
  SUBCASE("batches gather the right columns") {
    const std::vector<std::size_t> pick{4, 1};
    const Matrix x = ds.batch_features(pick);
    CHECK(x.col(0) == ds.features.col(4));
    CHECK(ds.batch_targets(pick).labels == std::vector<int>{4, 1});
  }
}
