#include <sstream>

#include "qnn/io.hpp"
#include "qnn/quaternion.hpp"

namespace qnn {

std::string format_key(const RotationKey& key) {
  std::string s = "axis: " + format_real(key.axis.x()) + " " + format_real(key.axis.y()) + " " +
                  format_real(key.axis.z()) + "\n";
  s += "angle: " + format_real(key.angle) + "\n";
  s += "seed: " + std::to_string(key.seed) + "\n";
  return s;
}

namespace {

std::string expect_field(std::istringstream& lines, const std::string& name) {
  std::string line;
  require(static_cast<bool>(std::getline(lines, line)), ErrorKind::Format,
          "key file: missing '" + name + "' line");
  const std::string prefix = name + ":";
  require(line.rfind(prefix, 0) == 0, ErrorKind::Format,
          "key file: expected '" + prefix + "', got '" + line + "'");
  return line.substr(prefix.size());
}

}  // namespace

RotationKey parse_key(const std::string& text) {
  std::istringstream lines(text);
  RotationKey key;
  {
    std::istringstream f(expect_field(lines, "axis"));
    double x, y, z;
    require(static_cast<bool>(f >> x >> y >> z), ErrorKind::Format, "key file: bad axis");
    key.axis = {x, y, z};
  }
  {
    std::istringstream f(expect_field(lines, "angle"));
    require(static_cast<bool>(f >> key.angle), ErrorKind::Format, "key file: bad angle");
  }
  {
    std::istringstream f(expect_field(lines, "seed"));
    require(static_cast<bool>(f >> key.seed), ErrorKind::Format, "key file: bad seed");
  }
  validate(key);
  return key;
}

void save_key(const std::filesystem::path& path, const RotationKey& key) {
  validate(key);
  write_file_atomic(path, format_key(key));
}

RotationKey load_key(const std::filesystem::path& path) { return parse_key(read_file(path)); }

std::uint64_t key_id(const RotationKey& key) { return fnv1a64(format_key(key)); }

}  // namespace qnn
