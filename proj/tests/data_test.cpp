#include "hypernet/data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace hypernet {
namespace {
namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("hypernet_data_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ImageDataset random_dataset(Index n, Index c, Index h, Index w, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> byte(0, 255), label(0, 9);
  ImageDataset d;
  d.name = "synthetic";
  d.channels = c;
  d.height = h;
  d.width = w;
  d.images.resize(n, c * h * w);
  for (Index i = 0; i < d.images.size(); ++i) d.images.data()[i] = byte(rng) / 255.0;
  for (Index i = 0; i < n; ++i) d.labels.push_back(label(rng));
  return d;
}

Image random_image(Index c, Index h, Index w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img{c, h, w, Eigen::VectorXd(c * h * w)};
  for (Index i = 0; i < img.pixels.size(); ++i) img.pixels[i] = u(rng);
  return img;
}

void truncate_file(const fs::path& p, std::uintmax_t drop) { fs::resize_file(p, fs::file_size(p) - drop); }

DataErrorKind error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no DataError thrown";
  return DataErrorKind::kMissingFile;
}

TEST(IdxTest, RoundTripIsByteExact) {
  TempDir dir;
  std::mt19937_64 rng(1);
  const ImageDataset d = random_dataset(37, 1, 28, 28, rng);
  write_idx(d, dir.path() / "img", dir.path() / "lab");
  const ImageDataset back = load_idx(dir.path() / "img", dir.path() / "lab");
  EXPECT_EQ(back.size(), 37);
  EXPECT_EQ(back.height, 28);
  EXPECT_EQ(back.images, d.images);
  EXPECT_EQ(back.labels, d.labels);
  write_idx(back, dir.path() / "img2", dir.path() / "lab2");
  std::ifstream a(dir.path() / "img", std::ios::binary), b(dir.path() / "img2", std::ios::binary);
  EXPECT_TRUE(std::equal(std::istreambuf_iterator<char>(a), {}, std::istreambuf_iterator<char>(b)));
}

TEST(IdxTest, DistinctErrors) {
  TempDir dir;
  std::mt19937_64 rng(2);
  const ImageDataset d = random_dataset(5, 1, 4, 4, rng);
  const fs::path img = dir.path() / "img", lab = dir.path() / "lab";

  write_idx(d, img, lab);
  truncate_file(img, 1);
  EXPECT_EQ(error_kind([&] { load_idx(img, lab); }), DataErrorKind::kTruncated);

  write_idx(d, img, lab);
  EXPECT_EQ(error_kind([&] { load_idx(lab, lab); }), DataErrorKind::kBadMagic);

  write_idx(d.head(4), dir.path() / "img4", dir.path() / "lab4");
  EXPECT_EQ(error_kind([&] { load_idx(img, dir.path() / "lab4"); }), DataErrorKind::kCountMismatch);

  EXPECT_EQ(error_kind([&] { load_idx(dir.path() / "nope", lab); }), DataErrorKind::kMissingFile);
}

TEST(IdxTest, MissingMnistNamesFetchTool) {
  TempDir dir;
  try {
    load_mnist(dir.path(), true);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), DataErrorKind::kMissingFile);
    EXPECT_NE(std::string(e.what()).find("fetch_mnist_subset.py"), std::string::npos);
  }
}

TEST(IdxTest, BundledMnistSubsetIfPresent) {
  const fs::path dir = fs::path(HYPERNET_SOURCE_DIR) / "data";
  if (!fs::exists(dir / "mnist" / "train-images-idx3-ubyte")) GTEST_SKIP() << "MNIST subset not fetched";
  for (bool train : {true, false}) {
    const ImageDataset d = load_mnist(dir, train);
    EXPECT_EQ(d.height, 28);
    EXPECT_EQ(d.width, 28);
    EXPECT_GE(d.size(), train ? 10000 : 2000);
    EXPECT_GE(d.images.minCoeff(), 0.0);
    EXPECT_LE(d.images.maxCoeff(), 1.0);
    for (int l : d.labels) ASSERT_TRUE(l >= 0 && l < 10);
  }
}

TEST(CifarTest, RoundTripAndCount) {
  TempDir dir;
  std::mt19937_64 rng(3);
  const ImageDataset d = random_dataset(7, 3, 32, 32, rng);
  write_cifar10(d, dir.path() / "b1.bin");
  write_cifar10(d.head(3), dir.path() / "b2.bin");
  EXPECT_EQ(fs::file_size(dir.path() / "b1.bin"), 7u * 3073u);
  const std::vector<fs::path> paths{dir.path() / "b1.bin", dir.path() / "b2.bin"};
  const ImageDataset back = load_cifar10(paths);
  ASSERT_EQ(back.size(), 10);
  EXPECT_EQ(back.images.topRows(7), d.images);
  EXPECT_EQ(back.images.bottomRows(3), d.images.topRows(3));
  for (int l : back.labels) EXPECT_TRUE(l >= 0 && l < 10);

  truncate_file(dir.path() / "b2.bin", 5);
  EXPECT_EQ(error_kind([&] { load_cifar10(paths); }), DataErrorKind::kBadLength);
}

TEST(CifarTest, PlaneOrder) {
  TempDir dir;
  std::vector<char> rec(3073, 0);
  rec[0] = 4;
  rec[1] = static_cast<char>(255);         // R(0,0)
  rec[1 + 1024 + 33] = static_cast<char>(51);  // G(1,1)
  { std::ofstream(dir.path() / "x.bin", std::ios::binary).write(rec.data(), 3073); }
  const std::vector<fs::path> paths{dir.path() / "x.bin"};
  const Image img = load_cifar10(paths).image(0);
  EXPECT_EQ(img.at(0, 0, 0), 1.0);
  EXPECT_EQ(img.at(1, 1, 1), 0.2);
  EXPECT_EQ(img.at(2, 0, 0), 0.0);
}

TEST(RotateTest, ZeroIsIdentity) {
  std::mt19937_64 rng(4);
  const Image img = random_image(3, 9, 12, rng);
  EXPECT_EQ(rotate_image(img, 0.0).pixels, img.pixels);
  EXPECT_EQ(rotate_image(img, 0.0, Interpolation::kNearest).pixels, img.pixels);
}

TEST(RotateTest, HalfTurnFlipsBothAxes) {
  std::mt19937_64 rng(5);
  for (auto [h, w] : {std::pair<Index, Index>{28, 28}, {4, 6}}) {
    const Image img = random_image(2, h, w, rng);
    const Image bil = rotate_image(img, 180.0);
    const Image nn = rotate_image(img, 180.0, Interpolation::kNearest);
    for (Index c = 0; c < 2; ++c)
      for (Index r = 0; r < h; ++r)
        for (Index s = 0; s < w; ++s) {
          const double want = img.at(c, h - 1 - r, w - 1 - s);
          EXPECT_NEAR(bil.at(c, r, s), want, 1e-9);
          EXPECT_EQ(nn.at(c, r, s), want);
        }
  }
}

TEST(RotateTest, QuarterTurnIsTransposeThenReverseRows) {
  std::mt19937_64 rng(6);
  const Index n = 7;
  const Image img = random_image(1, n, n, rng);
  const Image out = rotate_image(img, 90.0, Interpolation::kNearest);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < n; ++c) {
      // transpose: t[r][c] = img[c][r]; reverse rows: out[r][c] = t[n-1-r][c]
      EXPECT_EQ(out.at(0, r, c), img.at(0, c, n - 1 - r));
    }
  }
}

TEST(RotateTest, PreservesRange) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> angle(0, 360);
  const Image img = random_image(1, 28, 28, rng);
  for (int t = 0; t < 20; ++t) {
    const Image out = rotate_image(img, angle(rng));
    EXPECT_GE(out.pixels.minCoeff(), 0.0);
    EXPECT_LE(out.pixels.maxCoeff(), 1.0);
  }
}

TEST(RotationLabelTest, Examples) {
  EXPECT_EQ(rotation_label(0.0), 0);
  EXPECT_EQ(rotation_label(44.0), 1);
  EXPECT_EQ(rotation_label(359.0), 11);
  EXPECT_EQ(rotation_label(15.0), 0);
  EXPECT_EQ(rotation_label(45.0), 1);
  EXPECT_THROW(rotation_label(360.0), std::out_of_range);
  EXPECT_THROW(rotation_label(-1.0), std::out_of_range);
}

TEST(RotationLabelTest, AgreesWithBruteForce) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> angle(0, 360);
  for (int t = 0; t < 10000; ++t) {
    const double a = angle(rng);
    int best = 0;
    double dist = 1e9;
    for (int i = 0; i < 12; ++i) {
      const double d = std::abs(a / 360.0 - 30.0 * i / 360.0);
      if (d < dist) {
        dist = d;
        best = i;
      }
    }
    ASSERT_EQ(rotation_label(a), best) << a;
  }
}

TEST(RotationPairTest, ShapesRangeAndReproducibility) {
  std::mt19937_64 rng(9);
  const Image img = random_image(1, 28, 28, rng);
  std::mt19937_64 a(10), b(10);
  const RotationSample s1 = make_rotation_pair(img, a), s2 = make_rotation_pair(img, b);
  EXPECT_EQ(s1.x, s2.x);
  EXPECT_EQ(s1.label, s2.label);
  EXPECT_EQ(s1.x.size(), 784);
  EXPECT_EQ(s1.cond.size(), 784);
  EXPECT_EQ(s1.label, rotation_label(s1.degrees));
  for (int t = 0; t < 50; ++t) {
    const RotationSample s = make_rotation_pair(img, rng);
    EXPECT_TRUE(s.label >= 0 && s.label < 12);
    EXPECT_GE(s.x.minCoeff(), -1.0);
    EXPECT_LE(s.x.maxCoeff(), 1.0);
  }
  EXPECT_EQ(s1.cond, (2.0 * img.pixels.array() - 1.0).matrix());
}

TEST(GrayscaleTest, LumaWeights) {
  Image white{3, 1, 1, Eigen::Vector3d(1, 1, 1)};
  EXPECT_NEAR(grayscale(white).pixels[0], 1.0, 1e-15);
  Image red{3, 1, 1, Eigen::Vector3d(1, 0, 0)};
  EXPECT_DOUBLE_EQ(grayscale(red).pixels[0], 0.299);
  Image gray{3, 1, 1, Eigen::Vector3d(0.4, 0.4, 0.4)};
  EXPECT_NEAR(grayscale(gray).pixels[0], 0.4, 1e-15);
  EXPECT_THROW(grayscale(Image{1, 1, 1, Eigen::VectorXd::Zero(1)}), std::invalid_argument);
}

TEST(CoordFeaturesTest, Examples) {
  const Eigen::VectorXd z = coord_features(0, 0);
  ASSERT_EQ(z.size(), 42);
  Eigen::VectorXd want = Eigen::VectorXd::Zero(42);
  want.segment(2, 4).setOnes();
  EXPECT_EQ(z, want);
  const Eigen::VectorXd f = coord_features(0.5, -0.5);
  EXPECT_DOUBLE_EQ(f[0], 0.5);
  EXPECT_DOUBLE_EQ(f[1], -0.5);
  EXPECT_DOUBLE_EQ(f[2 + 4 * 2 + 0], -0.25);
  EXPECT_DOUBLE_EQ(f[2 + 4 * 2 + 1], 0.75);
  EXPECT_DOUBLE_EQ(f[2 + 4 * 2 + 2], 0.75);
  EXPECT_DOUBLE_EQ(f[2 + 4 * 2 + 3], -0.25);
  for (int k = 0; k <= 9; ++k) {
    EXPECT_DOUBLE_EQ(f[2 + 4 * k], std::pow(0.5, k) - 0.5);
    EXPECT_DOUBLE_EQ(f[5 + 4 * k], std::pow(-0.5, k) - 0.5);
  }
}

TEST(ColorizationTest, SampleShapesAndRange) {
  std::mt19937_64 rng(11);
  const Image img = random_image(3, 32, 32, rng);
  for (int t = 0; t < 50; ++t) {
    const ColorizationSample s = make_colorization_sample(img, rng);
    EXPECT_EQ(s.x.size(), 42);
    EXPECT_EQ(s.cond.size(), 1024);
    ASSERT_EQ(s.target.size(), 3);
    EXPECT_GE(s.target.minCoeff(), -1.0);
    EXPECT_LE(s.target.maxCoeff(), 1.0);
    EXPECT_GE(s.x[0], -1.0);
    EXPECT_LE(s.x[0], 1.0);
  }
  std::mt19937_64 a(12), b(12);
  const ColorizationSample raw = make_colorization_sample(img, a, CoordMode::kRaw);
  const ColorizationSample nrm = make_colorization_sample(img, b, CoordMode::kNormalized);
  EXPECT_DOUBLE_EQ(nrm.x[0], 2.0 * raw.x[0] / 31.0 - 1.0);
  EXPECT_EQ(raw.target, nrm.target);
}

}  // namespace
}  // namespace hypernet
