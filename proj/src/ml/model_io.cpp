#include "aggrate/ml/model_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aggrate::ml {

static_assert(std::endian::native == std::endian::little, "model_io assumes a little-endian host");

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Logit: return "logit";
    case ModelKind::Threshold: return "threshold";
    case ModelKind::Rbf: return "rbf";
    case ModelKind::Classifier: return "clf";
  }
  return "unknown";
}

const std::vector<double>& ModelFile::get(const std::string& name, long expected) const {
  const auto it = fields.find(name);
  if (it == fields.end()) throw std::runtime_error("model field missing: " + name);
  if (expected >= 0 && it->second.size() != static_cast<std::size_t>(expected))
    throw std::runtime_error("model field has wrong length: " + name);
  return it->second;
}

namespace {
template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T take(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("model file truncated");
  return v;
}
}  // namespace

void write_model(std::ostream& out, const ModelFile& model) {
  out.write("AGGM", 4);
  put<std::uint32_t>(out, ModelFile::kVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(model.kind));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.fields.size()));
  for (const auto& [name, values] : model.fields) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, values.size());
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("model write failed");
}

ModelFile read_model(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "AGGM", 4) != 0) throw std::runtime_error("not a model file (bad magic)");
  const auto version = take<std::uint32_t>(in);
  if (version != ModelFile::kVersion) throw std::runtime_error("unsupported model version " + std::to_string(version));
  ModelFile m;
  const auto kind = take<std::uint8_t>(in);
  if (kind < 1 || kind > 4) throw std::runtime_error("unknown model kind");
  m.kind = static_cast<ModelKind>(kind);
  const auto count = take<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = take<std::uint16_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw std::runtime_error("model file truncated");
    const auto n = take<std::uint64_t>(in);
    if (n > (1ULL << 32)) throw std::runtime_error("model field too large: " + name);
    std::vector<double> values(n);
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(double))))
      throw std::runtime_error("model file truncated");
    m.fields.emplace(std::move(name), std::move(values));
  }
  return m;
}

void save_model(const std::string& path, const ModelFile& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_model(out, model);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_model(in);
}

std::string model_text(const ModelFile& model) {
  std::ostringstream os;
  os << "kind = " << to_string(model.kind) << "\nversion = " << ModelFile::kVersion << '\n';
  char buf[64];
  for (const auto& [name, values] : model.fields) {
    os << name << " =";
    for (double v : values) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
      os << ' ' << std::string_view(buf, static_cast<std::size_t>(p - buf));
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace aggrate::ml
