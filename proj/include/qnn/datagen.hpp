#pragma once

// Procedural shapes dataset and PGM image files.

#include <filesystem>
#include <string>
#include <vector>

#include "qnn/qtensor.hpp"
#include "qnn/rng.hpp"

namespace qnn {

enum class ShapeKind { Circle = 0, Cross = 1, Square = 2, Triangle = 3 };

inline constexpr int kShapeClasses = 4;
inline constexpr int kIntensityBands = 2;  // attr 0
inline constexpr int kQuadrants = 4;       // attr 1

struct LabeledImage {
  RealTensor<float> pixels;  // {channels, size, size}, values in [0,1]
  int class_label = 0;
  std::vector<int> attr_labels;  // {intensity band, quadrant}
};

// Class cycles through the four shapes; band and quadrant are drawn
// independently, so labels and attributes are independent by construction.
std::vector<LabeledImage> generate_shapes(int n, int size, std::uint64_t seed, int channels = 1);

// Binary P5, maxval 255, single channel.
std::string encode_pgm(const RealTensor<float>& image);
RealTensor<float> decode_pgm(const std::string& bytes);
void save_pgm(const std::filesystem::path& path, const RealTensor<float>& image);
RealTensor<float> load_pgm(const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  int class_label = 0;
  int attr1 = 0;
  int attr2 = 0;
};

// Lines starting with '#' are comments.
std::string format_manifest(const std::vector<ManifestEntry>& entries, const std::string& comment = "");
std::vector<ManifestEntry> parse_manifest(const std::string& text);

// Writes every image as PGM next to a `manifest.txt`.
void write_dataset(const std::filesystem::path& dir, const std::vector<LabeledImage>& data,
                   const std::string& comment = "");
std::vector<LabeledImage> read_dataset(const std::filesystem::path& manifest);

}  // namespace qnn
