#include "qnn/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "qnn/io.hpp"

namespace qnn {

namespace {

bool inside(ShapeKind kind, double dx, double dy, double r) {
  switch (kind) {
    case ShapeKind::Circle:
      return dx * dx + dy * dy <= r * r;
    case ShapeKind::Cross: {
      const double t = std::max(1.0, r / 3.0);
      return (std::abs(dx) <= r && std::abs(dy) <= t) || (std::abs(dy) <= r && std::abs(dx) <= t);
    }
    case ShapeKind::Square:
      return std::max(std::abs(dx), std::abs(dy)) <= 0.8 * r;
    case ShapeKind::Triangle:
      return dy >= -r && dy <= r && std::abs(dx) <= (dy + r) / 2.0;
  }
  return false;
}

}  // namespace

std::vector<LabeledImage> generate_shapes(int n, int size, std::uint64_t seed, int channels) {
  require(n >= 1, ErrorKind::Config, "generate_shapes: n must be >= 1");
  require(size >= 8, ErrorKind::Config, "generate_shapes: size must be >= 8");
  require(channels == 1 || channels == 3, ErrorKind::Config, "generate_shapes: 1 or 3 channels");
  Rng rng(seed);
  std::uniform_int_distribution<int> band_d(0, kIntensityBands - 1), quad_d(0, kQuadrants - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double unit = size / 16.0;
  std::vector<LabeledImage> out;
  for (int s = 0; s < n; ++s) {
    LabeledImage img;
    img.class_label = s % kShapeClasses;
    const int band = band_d(rng), quad = quad_d(rng);
    img.attr_labels = {band, quad};
    const double level = band == 0 ? 0.35 + 0.2 * u(rng) : 0.8 + 0.2 * u(rng);
    const double r = (2.5 + u(rng)) * unit;
    const double cx = (quad % 2 ? 0.75 : 0.25) * size - 0.5 + (u(rng) * 2 - 1) * unit;
    const double cy = (quad / 2 ? 0.75 : 0.25) * size - 0.5 + (u(rng) * 2 - 1) * unit;
    img.pixels = RealTensor<float>(Shape{channels, size, size});
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        if (inside(static_cast<ShapeKind>(img.class_label), x - cx, y - cy, r))
          for (int c = 0; c < channels; ++c)
            img.pixels.values[(Eigen::Index(c) * size + y) * size + x] = float(level);
    out.push_back(std::move(img));
  }
  return out;
}

std::string encode_pgm(const RealTensor<float>& image) {
  const auto& s = image.shape;
  require((s.size() == 3 && s[0] == 1) || s.size() == 2, ErrorKind::Shape,
          "pgm: single-channel image expected, got " + to_string(s));
  const int h = s[s.size() - 2], w = s[s.size() - 1];
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (Eigen::Index v = 0; v < image.size(); ++v) {
    const double p = std::clamp(double(image.values[v]), 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(p * 255.0))));
  }
  return out;
}

RealTensor<float> decode_pgm(const std::string& bytes) {
  std::size_t at = 0;
  // Header tokens separated by whitespace, '#' comments allowed.
  auto token = [&]() {
    for (;;) {
      while (at < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[at]))) ++at;
      if (at < bytes.size() && bytes[at] == '#') {
        while (at < bytes.size() && bytes[at] != '\n') ++at;
        continue;
      }
      break;
    }
    const std::size_t start = at;
    while (at < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[at]))) ++at;
    require(at > start, ErrorKind::Format, "pgm: truncated header");
    return bytes.substr(start, at - start);
  };
  auto number = [&](const char* what) {
    const std::string t = token();
    require(t.find_first_not_of("0123456789") == std::string::npos && t.size() <= 9, ErrorKind::Format,
            std::string("pgm: bad ") + what);
    return std::stoi(t);
  };
  require(token() == "P5", ErrorKind::Format, "pgm: only binary P5 is supported");
  const int w = number("width"), h = number("height"), maxval = number("maxval");
  require(w > 0 && h > 0, ErrorKind::Format, "pgm: empty image");
  require(maxval == 255, ErrorKind::Format, "pgm: only maxval 255 is supported");
  require(at < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[at])), ErrorKind::Format,
          "pgm: missing separator after header");
  ++at;
  const std::size_t count = std::size_t(w) * std::size_t(h);
  require(bytes.size() - at >= count, ErrorKind::Format, "pgm: truncated pixel data");
  RealTensor<float> img(Shape{1, h, w});
  for (std::size_t v = 0; v < count; ++v)
    img.values[Eigen::Index(v)] = float(static_cast<unsigned char>(bytes[at + v]) / 255.0);
  return img;
}

void save_pgm(const std::filesystem::path& path, const RealTensor<float>& image) {
  write_file_atomic(path, encode_pgm(image));
}

RealTensor<float> load_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

std::string format_manifest(const std::vector<ManifestEntry>& entries, const std::string& comment) {
  std::string out = comment.empty() ? "" : "# " + comment + "\n";
  for (const auto& e : entries)
    out += e.path + " " + std::to_string(e.class_label) + " " + std::to_string(e.attr1) + " " +
           std::to_string(e.attr2) + "\n";
  return out;
}

std::vector<ManifestEntry> parse_manifest(const std::string& text) {
  std::vector<ManifestEntry> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string extra;
    require(static_cast<bool>(ls >> e.path >> e.class_label >> e.attr1 >> e.attr2) && !(ls >> extra),
            ErrorKind::Format, "manifest line " + std::to_string(lineno) + ": expected 'path class attr1 attr2'");
    out.push_back(std::move(e));
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<LabeledImage>& data,
                   const std::string& comment) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (std::size_t s = 0; s < data.size(); ++s) {
    char name[32];
    std::snprintf(name, sizeof name, "img%05zu.pgm", s);
    save_pgm(dir / name, data[s].pixels);
    entries.push_back({name, data[s].class_label, data[s].attr_labels.at(0), data[s].attr_labels.at(1)});
  }
  write_file_atomic(dir / "manifest.txt", format_manifest(entries, comment));
}

std::vector<LabeledImage> read_dataset(const std::filesystem::path& manifest) {
  const auto base = manifest.parent_path();
  std::vector<LabeledImage> out;
  for (const auto& e : parse_manifest(read_file(manifest))) {
    LabeledImage img;
    img.pixels = load_pgm(base / e.path);
    img.class_label = e.class_label;
    img.attr_labels = {e.attr1, e.attr2};
    out.push_back(std::move(img));
  }
  require(!out.empty(), ErrorKind::Format, "dataset manifest lists no images");
  return out;
}

}  // namespace qnn
