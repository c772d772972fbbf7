#include <bit>
#include <cstring>
#include <map>
#include <sstream>

#include "qnn/io.hpp"
#include "qnn/network.hpp"

namespace qnn {

namespace {

constexpr const char* kMagic = "QNNF";
constexpr int kVersion = 1;

const std::pair<LayerKind, const char*> kNames[] = {
    {LayerKind::Conv, "conv"},         {LayerKind::FullyConnected, "fc"},
    {LayerKind::QReLU, "qrelu"},       {LayerKind::QBatchNorm, "qbatchnorm"},
    {LayerKind::MaxPool, "maxpool"},   {LayerKind::AvgPool, "avgpool"},
    {LayerKind::Dropout, "dropout"},   {LayerKind::Residual, "residual"},
    {LayerKind::ReLU, "relu"},         {LayerKind::Bias, "bias"},
    {LayerKind::Sigmoid, "sigmoid"},   {LayerKind::Upsample, "upsample"},
    {LayerKind::Softmax, "softmax"},
};

void write_layer(std::string& out, const LayerSpec<float>& l, int depth) {
  out += std::string(2 * depth, ' ') + kind_name(l.kind);
  const auto& w = l.weights.shape;
  const auto& win = l.window;
  switch (l.kind) {
    case LayerKind::Conv:
      out += " out=" + std::to_string(w[0]) + " in=" + std::to_string(w[1]) +
             " k=" + std::to_string(win.kh) + " stride=" + std::to_string(win.stride) +
             " pad=" + std::to_string(win.pad);
      break;
    case LayerKind::FullyConnected:
      out += " out=" + std::to_string(w[0]) + " in=" + std::to_string(w[1]);
      break;
    case LayerKind::Bias:
      out += " channels=" + std::to_string(w[0]);
      break;
    case LayerKind::QReLU:
      out += " c=" + format_real(l.c);
      break;
    case LayerKind::QBatchNorm:
      out += " eps=" + format_real(l.eps);
      break;
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
      out += " k=" + std::to_string(win.kh) + " stride=" + std::to_string(win.stride) +
             " pad=" + std::to_string(win.pad);
      break;
    case LayerKind::Dropout:
      out += " rate=" + format_real(l.rate);
      break;
    case LayerKind::Residual:
      out += " inner=" + std::to_string(l.inner.size());
      break;
    case LayerKind::Upsample:
      out += " factor=" + std::to_string(l.factor);
      break;
    default:
      break;
  }
  out += "\n";
  for (const auto& in : l.inner) write_layer(out, in, depth + 1);
}

void write_stack(std::string& out, const char* name, const Stack<float>& s) {
  out += std::string(name) + " " + std::to_string(s.size()) + "\n";
  for (const auto& l : s) write_layer(out, l, 1);
}

void write_weights(std::string& blob, const Stack<float>& s) {
  for (const auto& l : s) {
    if (l.has_weights())
      for (Eigen::Index i = 0; i < l.weights.size(); ++i) {
        const auto u = std::bit_cast<std::uint32_t>(l.weights.values[i]);
        for (int b = 0; b < 4; ++b) blob.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
      }
    write_weights(blob, l.inner);
  }
}

class HeaderReader {
 public:
  explicit HeaderReader(std::istringstream& in) : in_(in) {}

  std::istringstream next_line() {
    std::string line;
    do {
      require(static_cast<bool>(std::getline(in_, line)), ErrorKind::Format,
              "network file: header truncated");
    } while (line.rfind("meta ", 0) == 0);  // provenance notes carry no topology
    return std::istringstream(line);
  }

  Stack<float> read_stack(const std::string& name) {
    auto line = next_line();
    std::string tag;
    std::size_t count = 0;
    require(static_cast<bool>(line >> tag >> count) && tag == name, ErrorKind::Format,
            "network file: expected '" + name + " <count>'");
    return read_layers(count);
  }

 private:
  Stack<float> read_layers(std::size_t count) {
    Stack<float> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(read_layer());
    return out;
  }

  LayerSpec<float> read_layer() {
    auto line = next_line();
    std::string kind_str;
    require(static_cast<bool>(line >> kind_str), ErrorKind::Format, "network file: empty layer line");
    auto kind = kind_from_name(kind_str);
    require(kind.has_value(), ErrorKind::Format, "network file: unknown layer '" + kind_str + "'");
    std::map<std::string, std::string> kv;
    std::string tok;
    while (line >> tok) {
      const auto eq = tok.find('=');
      require(eq != std::string::npos, ErrorKind::Format, "network file: bad parameter '" + tok + "'");
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    auto geti = [&](const char* k) {
      auto it = kv.find(k);
      require(it != kv.end(), ErrorKind::Format, "network file: missing '" + std::string(k) + "'");
      try {
        return std::stoi(it->second);
      } catch (const std::exception&) {
        throw Error(ErrorKind::Format, "network file: bad integer for " + std::string(k));
      }
    };
    auto getf = [&](const char* k) {
      auto it = kv.find(k);
      require(it != kv.end(), ErrorKind::Format, "network file: missing '" + std::string(k) + "'");
      try {
        return static_cast<float>(std::stod(it->second));
      } catch (const std::exception&) {
        throw Error(ErrorKind::Format, "network file: bad real for " + std::string(k));
      }
    };
    using L = LayerSpec<float>;
    switch (*kind) {
      case LayerKind::Conv: {
        const int out = geti("out"), in = geti("in"), k = geti("k");
        require(out > 0 && in > 0 && k > 0, ErrorKind::Format, "network file: bad conv extents");
        return L::conv(in, out, k, geti("stride"), geti("pad"));
      }
      case LayerKind::FullyConnected: {
        const int out = geti("out"), in = geti("in");
        require(out > 0 && in > 0, ErrorKind::Format, "network file: bad fc extents");
        return L::fully_connected(in, out);
      }
      case LayerKind::Bias: {
        const int ch = geti("channels");
        require(ch > 0, ErrorKind::Format, "network file: bad bias extent");
        return L::bias(ch);
      }
      case LayerKind::QReLU: return L::qrelu(getf("c"));
      case LayerKind::QBatchNorm: return L::qbatchnorm(getf("eps"));
      case LayerKind::MaxPool: return L::maxpool(geti("k"), geti("stride"), geti("pad"));
      case LayerKind::AvgPool: return L::avgpool(geti("k"), geti("stride"), geti("pad"));
      case LayerKind::Dropout: return L::dropout(getf("rate"));
      case LayerKind::Residual: {
        const int n = geti("inner");
        require(n >= 0, ErrorKind::Format, "network file: bad residual size");
        return L::residual(read_layers(std::size_t(n)));
      }
      case LayerKind::Upsample: return L::upsample(geti("factor"));
      default: return L::simple(*kind);
    }
  }

  std::istringstream& in_;
};

void read_weights(const std::string& bytes, std::size_t& at, Stack<float>& s) {
  for (auto& l : s) {
    if (l.has_weights()) {
      const auto n = static_cast<std::size_t>(l.weights.size());
      require(at + 4 * n <= bytes.size(), ErrorKind::Format, "network file: weight blob truncated");
      for (std::size_t i = 0; i < n; ++i, at += 4) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b)
          u |= std::uint32_t(static_cast<unsigned char>(bytes[at + b])) << (8 * b);
        l.weights.values[Eigen::Index(i)] = std::bit_cast<float>(u);
      }
    }
    read_weights(bytes, at, l.inner);
  }
}

}  // namespace

std::string kind_name(LayerKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "?";
}

std::optional<LayerKind> kind_from_name(const std::string& name) {
  for (const auto& [k, n] : kNames)
    if (name == n) return k;
  return std::nullopt;
}

std::string encode_network(const NetworkSpec<float>& net, const std::string& meta) {
  validate(net);
  require(meta.find('\n') == std::string::npos, ErrorKind::Config, "network meta must be one line");
  std::string head = std::string(kMagic) + " " + std::to_string(kVersion) + "\n";
  if (!meta.empty()) head += "meta " + meta + "\n";
  head += "input";
  for (int e : net.input_shape) head += " " + std::to_string(e);
  head += "\nclasses " + std::to_string(net.class_count) + "\n";
  head += std::string("mode ") + (net.plaintext ? "plaintext" : "quaternion") + "\n";
  write_stack(head, "encoder", net.encoder);
  write_stack(head, "processing", net.processing);
  write_stack(head, "decoder", net.decoder);
  std::string blob;
  write_weights(blob, net.encoder);
  write_weights(blob, net.processing);
  write_weights(blob, net.decoder);
  head += "weights " + std::to_string(blob.size()) + "\n";
  return head + blob;
}

NetworkSpec<float> decode_network(const std::string& bytes) {
  require(bytes.size() >= 4 && bytes.compare(0, 4, kMagic) == 0, ErrorKind::Format,
          "network file: bad magic");
  // The header ends at the newline following the "weights <n>" line.
  const auto wpos = bytes.find("\nweights ");
  require(wpos != std::string::npos, ErrorKind::Format, "network file: no weights section");
  const auto hend = bytes.find('\n', wpos + 1);
  require(hend != std::string::npos, ErrorKind::Format, "network file: header truncated");
  std::istringstream header(bytes.substr(0, hend + 1));
  HeaderReader r(header);

  {
    auto line = r.next_line();
    std::string magic;
    int version = 0;
    require(static_cast<bool>(line >> magic >> version) && magic == kMagic, ErrorKind::Format,
            "network file: bad magic line");
    require(version == kVersion, ErrorKind::Version,
            "network file: unsupported version " + std::to_string(version));
  }
  NetworkSpec<float> net;
  {
    auto line = r.next_line();
    std::string tag;
    require(static_cast<bool>(line >> tag) && tag == "input", ErrorKind::Format,
            "network file: expected 'input'");
    int e;
    while (line >> e) net.input_shape.push_back(e);
  }
  {
    auto line = r.next_line();
    std::string tag;
    require(static_cast<bool>(line >> tag >> net.class_count) && tag == "classes",
            ErrorKind::Format, "network file: expected 'classes'");
  }
  {
    auto line = r.next_line();
    std::string tag, mode;
    require(static_cast<bool>(line >> tag >> mode) && tag == "mode" &&
                (mode == "plaintext" || mode == "quaternion"),
            ErrorKind::Format, "network file: expected 'mode'");
    net.plaintext = mode == "plaintext";
  }
  net.encoder = r.read_stack("encoder");
  net.processing = r.read_stack("processing");
  net.decoder = r.read_stack("decoder");
  std::size_t declared = 0;
  {
    auto line = r.next_line();
    std::string tag;
    require(static_cast<bool>(line >> tag >> declared) && tag == "weights", ErrorKind::Format,
            "network file: expected 'weights'");
  }
  std::size_t at = hend + 1;
  require(bytes.size() - at == declared, ErrorKind::Format,
          "network file: weight blob size mismatch (corrupt or truncated)");
  read_weights(bytes, at, net.encoder);
  read_weights(bytes, at, net.processing);
  read_weights(bytes, at, net.decoder);
  require(at == bytes.size(), ErrorKind::Format, "network file: weight count mismatch");
  validate(net);
  return net;
}

void save_network(const std::filesystem::path& path, const NetworkSpec<float>& net, const std::string& meta) {
  write_file_atomic(path, encode_network(net, meta));
}

NetworkSpec<float> load_network(const std::filesystem::path& path) {
  return decode_network(read_file(path));
}

}  // namespace qnn
