#include <bit>
#include <cstring>

#include "qnn/io.hpp"
#include "qnn/qtensor.hpp"

namespace qnn {

namespace {

constexpr char kMagic[4] = {'Q', 'T', 'F', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= std::uint32_t(static_cast<unsigned char>(in[at + b])) << (8 * b);
  return v;
}

}  // namespace

std::string encode_feature(const QTensor<float>& x) {
  require(x.shape.size() <= 255, ErrorKind::Shape, "feature rank exceeds 255");
  std::string out(kMagic, 4);
  out.push_back(static_cast<char>(x.shape.size()));
  for (int e : x.shape) {
    require(e >= 0, ErrorKind::Shape, "negative extent");
    put_u32(out, static_cast<std::uint32_t>(e));
  }
  out.reserve(out.size() + 16 * x.size());
  for (const auto& plane : x.planes)
    for (Eigen::Index v = 0; v < plane.size(); ++v) put_u32(out, std::bit_cast<std::uint32_t>(plane[v]));
  return out;
}

QTensor<float> decode_feature(const std::string& bytes) {
  require(bytes.size() >= 5, ErrorKind::Format, "feature file truncated");
  require(std::memcmp(bytes.data(), kMagic, 3) == 0, ErrorKind::Format, "feature file: bad magic");
  require(bytes[3] == kMagic[3], ErrorKind::Version, "feature file: unsupported version");
  const std::size_t rank = static_cast<unsigned char>(bytes[4]);
  std::size_t at = 5;
  require(bytes.size() >= at + 4 * rank, ErrorKind::Format, "feature file truncated in header");
  Shape shape(rank);
  for (std::size_t d = 0; d < rank; ++d, at += 4) {
    const std::uint32_t e = get_u32(bytes, at);
    require(e <= 0x7fffffffu, ErrorKind::Format, "feature file: extent too large");
    shape[d] = static_cast<int>(e);
  }
  const auto n = static_cast<std::size_t>(numel(shape));
  require(bytes.size() == at + 16 * n, ErrorKind::Format, "feature file: payload size mismatch");
  QTensor<float> x(shape);
  for (auto& plane : x.planes)
    for (std::size_t v = 0; v < n; ++v, at += 4) plane[v] = std::bit_cast<float>(get_u32(bytes, at));
  return x;
}

void save_feature(const std::filesystem::path& path, const QTensor<float>& x) {
  write_file_atomic(path, encode_feature(x));
}

QTensor<float> load_feature(const std::filesystem::path& path) {
  return decode_feature(read_file(path));
}

}  // namespace qnn
