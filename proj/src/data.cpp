#include "hypernet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace hypernet {
namespace fs = std::filesystem;
namespace {

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;
constexpr Index kCifarRecord = 3073;

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::kMissingFile, "cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

void put_be32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>((v >> s) & 0xff));
}

void need(const std::vector<unsigned char>& b, std::size_t n, const fs::path& path) {
  if (b.size() < n) {
    throw DataError(DataErrorKind::kTruncated, path.string() + ": expected at least " + std::to_string(n) +
                                                   " bytes, file has " + std::to_string(b.size()));
  }
}

unsigned char to_byte(double v) {
  const double s = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<unsigned char>(s);
}

std::string fetch_hint(const fs::path& dir) {
  return " (expected under " + dir.string() +
         "; MNIST can be built with `python3 tools/fetch_mnist_subset.py --out " +
         dir.parent_path().string() + "`, other datasets must be copied there manually)";
}

void require_files(std::initializer_list<fs::path> paths, const fs::path& dir) {
  for (const fs::path& p : paths) {
    if (!fs::exists(p)) throw DataError(DataErrorKind::kMissingFile, "missing " + p.string() + fetch_hint(dir));
  }
}

}  // namespace

Image ImageDataset::image(Index i) const {
  return Image{channels, height, width, images.row(i).transpose()};
}

ImageDataset ImageDataset::head(Index n) const {
  if (n < 0 || n > size()) {
    throw std::out_of_range("head(" + std::to_string(n) + ") of a dataset with " + std::to_string(size()) +
                            " samples");
  }
  ImageDataset out = *this;
  out.images = images.topRows(n);
  out.labels.resize(static_cast<std::size_t>(n));
  return out;
}

ImageDataset load_idx(const fs::path& images_path, const fs::path& labels_path, const std::string& name) {
  const auto ib = read_file(images_path);
  const auto lb = read_file(labels_path);
  need(ib, 4, images_path);
  need(lb, 4, labels_path);
  if (be32(ib, 0) != kIdxImages) {
    throw DataError(DataErrorKind::kBadMagic, images_path.string() + ": bad IDX image magic");
  }
  if (be32(lb, 0) != kIdxLabels) {
    throw DataError(DataErrorKind::kBadMagic, labels_path.string() + ": bad IDX label magic");
  }
  need(ib, 16, images_path);
  need(lb, 8, labels_path);
  const Index n = be32(ib, 4), rows = be32(ib, 8), cols = be32(ib, 12);
  const Index nl = be32(lb, 4);
  if (n != nl) {
    throw DataError(DataErrorKind::kCountMismatch, std::to_string(n) + " images but " + std::to_string(nl) +
                                                       " labels");
  }
  const std::size_t pixels = static_cast<std::size_t>(n * rows * cols);
  need(ib, 16 + pixels, images_path);
  need(lb, 8 + static_cast<std::size_t>(n), labels_path);

  ImageDataset d;
  d.name = name;
  d.channels = 1;
  d.height = rows;
  d.width = cols;
  d.images.resize(n, rows * cols);
  for (std::size_t i = 0; i < pixels; ++i) d.images.data()[i] = ib[16 + i] / 255.0;
  d.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) d.labels[static_cast<std::size_t>(i)] = lb[8 + static_cast<std::size_t>(i)];
  return d;
}

void write_idx(const ImageDataset& data, const fs::path& images_path, const fs::path& labels_path) {
  if (data.channels != 1) throw std::invalid_argument("write_idx: IDX images must have one channel");
  std::vector<unsigned char> ib, lb;
  put_be32(ib, kIdxImages);
  put_be32(ib, static_cast<std::uint32_t>(data.size()));
  put_be32(ib, static_cast<std::uint32_t>(data.height));
  put_be32(ib, static_cast<std::uint32_t>(data.width));
  for (Index i = 0; i < data.images.size(); ++i) ib.push_back(to_byte(data.images.data()[i]));
  put_be32(lb, kIdxLabels);
  put_be32(lb, static_cast<std::uint32_t>(data.labels.size()));
  for (int l : data.labels) lb.push_back(static_cast<unsigned char>(l));
  write_file(images_path, ib);
  write_file(labels_path, lb);
}

ImageDataset load_cifar10(std::span<const fs::path> batch_paths) {
  ImageDataset d;
  d.name = "cifar10";
  d.channels = 3;
  d.height = 32;
  d.width = 32;
  std::vector<std::vector<unsigned char>> files;
  Index total = 0;
  for (const fs::path& p : batch_paths) {
    files.push_back(read_file(p));
    if (files.back().size() % kCifarRecord != 0) {
      throw DataError(DataErrorKind::kBadLength, p.string() + ": length " + std::to_string(files.back().size()) +
                                                     " is not a multiple of 3073");
    }
    total += static_cast<Index>(files.back().size()) / kCifarRecord;
  }
  d.images.resize(total, 3072);
  d.labels.reserve(static_cast<std::size_t>(total));
  Index row = 0;
  for (const auto& f : files) {
    for (std::size_t at = 0; at < f.size(); at += kCifarRecord, ++row) {
      d.labels.push_back(f[at]);
      for (Index j = 0; j < 3072; ++j) d.images(row, j) = f[at + 1 + static_cast<std::size_t>(j)] / 255.0;
    }
  }
  return d;
}

void write_cifar10(const ImageDataset& data, const fs::path& path) {
  if (data.image_size() != 3072) throw std::invalid_argument("write_cifar10: images must be 3x32x32");
  std::vector<unsigned char> b;
  b.reserve(static_cast<std::size_t>(data.size() * kCifarRecord));
  for (Index i = 0; i < data.size(); ++i) {
    b.push_back(static_cast<unsigned char>(data.labels[static_cast<std::size_t>(i)]));
    for (Index j = 0; j < 3072; ++j) b.push_back(to_byte(data.images(i, j)));
  }
  write_file(path, b);
}

namespace {

ImageDataset load_idx_dir(const fs::path& dir, bool train, const std::string& name) {
  const std::string prefix = train ? "train" : "t10k";
  const fs::path images = dir / (prefix + "-images-idx3-ubyte");
  const fs::path labels = dir / (prefix + "-labels-idx1-ubyte");
  require_files({images, labels}, dir);
  return load_idx(images, labels, name);
}

}  // namespace

ImageDataset load_mnist(const fs::path& data_dir, bool train) {
  return load_idx_dir(data_dir / "mnist", train, "mnist");
}

ImageDataset load_fashion_mnist(const fs::path& data_dir, bool train) {
  return load_idx_dir(data_dir / "fashion-mnist", train, "fashion-mnist");
}

ImageDataset load_cifar10_dir(const fs::path& data_dir, bool train) {
  const fs::path dir = data_dir / "cifar-10-batches-bin";
  std::vector<fs::path> paths;
  if (train) {
    for (int i = 1; i <= 5; ++i) paths.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
  } else {
    paths.push_back(dir / "test_batch.bin");
  }
  for (const fs::path& p : paths) require_files({p}, dir);
  return load_cifar10(paths);
}

Interpolation parse_interpolation(const std::string& name) {
  if (name == "bilinear") return Interpolation::kBilinear;
  if (name == "nearest") return Interpolation::kNearest;
  throw std::invalid_argument("unknown interpolation '" + name + "'");
}

Image rotate_image(const Image& img, double degrees, Interpolation mode) {
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cy = (static_cast<double>(img.height) - 1) / 2.0;
  const double cx = (static_cast<double>(img.width) - 1) / 2.0;
  Image out{img.channels, img.height, img.width, Eigen::VectorXd::Zero(img.pixels.size())};
  auto inside = [&](Index r, Index c) { return r >= 0 && r < img.height && c >= 0 && c < img.width; };
  for (Index r = 0; r < img.height; ++r) {
    for (Index c = 0; c < img.width; ++c) {
      const double dy = static_cast<double>(r) - cy, dx = static_cast<double>(c) - cx;
      const double sr = cy + dy * cs + dx * sn;
      const double sc = cx + dx * cs - dy * sn;
      for (Index ch = 0; ch < img.channels; ++ch) {
        double v = 0.0;
        if (mode == Interpolation::kNearest) {
          const Index rr = std::lround(sr), cc = std::lround(sc);
          if (inside(rr, cc)) v = img.at(ch, rr, cc);
        } else {
          const double fr = std::floor(sr), fc = std::floor(sc);
          const Index r0 = static_cast<Index>(fr), c0 = static_cast<Index>(fc);
          const double wr = sr - fr, wc = sc - fc;
          if (inside(r0, c0)) v += (1 - wr) * (1 - wc) * img.at(ch, r0, c0);
          if (wc > 0 && inside(r0, c0 + 1)) v += (1 - wr) * wc * img.at(ch, r0, c0 + 1);
          if (wr > 0 && inside(r0 + 1, c0)) v += wr * (1 - wc) * img.at(ch, r0 + 1, c0);
          if (wr > 0 && wc > 0 && inside(r0 + 1, c0 + 1)) v += wr * wc * img.at(ch, r0 + 1, c0 + 1);
        }
        out.pixels[(ch * img.height + r) * img.width + c] = v;
      }
    }
  }
  return out;
}

int rotation_label(double degrees) {
  if (!(degrees >= 0.0 && degrees < 360.0)) {
    throw std::out_of_range("rotation_label: angle " + std::to_string(degrees) + " outside [0,360)");
  }
  int best = 0;
  for (int i = 1; i < kRotationClasses; ++i) {
    if (std::abs(degrees - 30.0 * i) < std::abs(degrees - 30.0 * best)) best = i;
  }
  return best;
}

RotationSample make_rotation_pair(const Image& img, std::mt19937_64& rng, Interpolation mode) {
  std::uniform_real_distribution<double> angle(0.0, 360.0);
  RotationSample s;
  s.degrees = angle(rng);
  s.label = rotation_label(s.degrees);
  s.x = (2.0 * rotate_image(img, s.degrees, mode).pixels.array() - 1.0).matrix();
  s.cond = (2.0 * img.pixels.array() - 1.0).matrix();
  return s;
}

Image grayscale(const Image& img) {
  if (img.channels != 3) {
    throw std::invalid_argument("grayscale: expected 3 channels, got " + std::to_string(img.channels));
  }
  const Index plane = img.height * img.width;
  Image out{1, img.height, img.width, Eigen::VectorXd(plane)};
  out.pixels = 0.299 * img.pixels.segment(0, plane) + 0.587 * img.pixels.segment(plane, plane) +
               0.114 * img.pixels.segment(2 * plane, plane);
  return out;
}

Eigen::VectorXd coord_features(double i1, double i2) {
  Eigen::VectorXd f(kCoordFeatures);
  f[0] = i1;
  f[1] = i2;
  double p1 = 1.0, p2 = 1.0;
  for (int k = 0; k <= 9; ++k) {
    f[2 + 4 * k] = p1 + i2;
    f[3 + 4 * k] = p2 + i1;
    f[4 + 4 * k] = p1 - i2;
    f[5 + 4 * k] = p2 - i1;
    p1 *= i1;
    p2 *= i2;
  }
  return f;
}

CoordMode parse_coord_mode(const std::string& name) {
  if (name == "normalized") return CoordMode::kNormalized;
  if (name == "raw") return CoordMode::kRaw;
  throw std::invalid_argument("unknown coordinate mode '" + name + "'");
}

ColorizationSample make_colorization_sample(const Image& img, std::mt19937_64& rng, CoordMode mode) {
  const Image gray = grayscale(img);
  std::uniform_int_distribution<Index> row(0, img.height - 1), col(0, img.width - 1);
  const Index r = row(rng), c = col(rng);
  auto norm = [](Index i, Index n) { return n > 1 ? 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0 : 0.0; };
  ColorizationSample s;
  s.x = mode == CoordMode::kNormalized ? coord_features(norm(r, img.height), norm(c, img.width))
                                       : coord_features(static_cast<double>(r), static_cast<double>(c));
  s.cond = (2.0 * gray.pixels.array() - 1.0).matrix();
  s.target.resize(3);
  for (Index ch = 0; ch < 3; ++ch) s.target[ch] = 2.0 * img.at(ch, r, c) - 1.0;
  return s;
}

}  // namespace hypernet
