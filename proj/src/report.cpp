#include <cstdio>

#include "qnn/attack.hpp"

namespace qnn {

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string format_report_kv(const std::vector<std::pair<std::string, double>>& fields) {
  std::string out;
  for (const auto& [k, v] : fields) out += k + "=" + fmt(v) + "\n";
  return out;
}

std::string format_report_table(const std::vector<std::pair<std::string, double>>& fields) {
  std::size_t width = 6;
  for (const auto& f : fields) width = std::max(width, f.first.size());
  std::string out = "metric" + std::string(width - 6 + 2, ' ') + "value\n";
  out += std::string(width + 2 + 12, '-') + "\n";
  for (const auto& [k, v] : fields) out += k + std::string(width - k.size() + 2, ' ') + fmt(v) + "\n";
  return out;
}

}  // namespace qnn
