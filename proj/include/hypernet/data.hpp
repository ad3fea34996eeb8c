#pragma once

// Image datasets in IDX and CIFAR-10 binary formats, and the two pretext tasks
// built from them: rotation prediction and colorization.

#include "hypernet/autodiff.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypernet {

enum class DataErrorKind { kMissingFile, kBadMagic, kTruncated, kCountMismatch, kBadLength };

class DataError : public std::runtime_error {
 public:
  DataError(DataErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  DataErrorKind kind() const { return kind_; }

 private:
  DataErrorKind kind_;
};

/// Channel-major C x H x W pixels.
struct Image {
  Index channels = 1;
  Index height = 0;
  Index width = 0;
  Eigen::VectorXd pixels;

  double at(Index c, Index r, Index col) const { return pixels[(c * height + r) * width + col]; }
};

struct ImageDataset {
  std::string name;
  Index channels = 1;
  Index height = 0;
  Index width = 0;
  RowMatrix images;  // one flattened image per row, values in [0,1]
  std::vector<int> labels;

  Index size() const { return images.rows(); }
  Index image_size() const { return channels * height * width; }
  Image image(Index i) const;
  /// The first n samples.
  ImageDataset head(Index n) const;
};

ImageDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                      const std::string& name = "idx");
void write_idx(const ImageDataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

ImageDataset load_cifar10(std::span<const std::filesystem::path> batch_paths);
void write_cifar10(const ImageDataset& data, const std::filesystem::path& path);

/// <dir>/mnist/{train,t10k}-{images-idx3,labels-idx1}-ubyte. Missing files raise a
/// DataError that says how to fetch them.
ImageDataset load_mnist(const std::filesystem::path& data_dir, bool train);
ImageDataset load_fashion_mnist(const std::filesystem::path& data_dir, bool train);
/// <dir>/cifar-10-batches-bin/{data_batch_1..5,test_batch}.bin
ImageDataset load_cifar10_dir(const std::filesystem::path& data_dir, bool train);

enum class Interpolation { kBilinear, kNearest };

Interpolation parse_interpolation(const std::string& name);

/// Counterclockwise rotation about the image centre; samples outside the source are 0.
Image rotate_image(const Image& img, double degrees, Interpolation mode = Interpolation::kBilinear);

/// argmin_i |alpha - 30 i| over i = 0..11, no wrap-around, ties to the smaller i.
int rotation_label(double degrees);

inline constexpr int kRotationClasses = 12;

struct RotationSample {
  Eigen::VectorXd x;     // rotated image in [-1,1]
  Eigen::VectorXd cond;  // original image in [-1,1]
  int label = 0;
  double degrees = 0.0;
};

/// alpha ~ U[0,360).
RotationSample make_rotation_pair(const Image& img, std::mt19937_64& rng,
                                  Interpolation mode = Interpolation::kBilinear);

/// 0.299 R + 0.587 G + 0.114 B.
Image grayscale(const Image& img);

inline constexpr Index kCoordFeatures = 42;

/// (i1, i2) followed by (i1^k + i2, i2^k + i1, i1^k - i2, i2^k - i1) for k = 0..9, 0^0 = 1.
Eigen::VectorXd coord_features(double i1, double i2);

enum class CoordMode { kNormalized, kRaw };

CoordMode parse_coord_mode(const std::string& name);

struct ColorizationSample {
  Eigen::VectorXd x;       // 42 coordinate features
  Eigen::VectorXd cond;    // grayscale image in [-1,1]
  Eigen::VectorXd target;  // RGB of the chosen pixel in [-1,1]
};

/// Uniformly chosen pixel of a 3-channel image.
ColorizationSample make_colorization_sample(const Image& img, std::mt19937_64& rng,
                                            CoordMode mode = CoordMode::kNormalized);

}  // namespace hypernet
