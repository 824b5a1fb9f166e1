#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace aggrate::ml {

enum class ModelKind : std::uint8_t { Logit = 1, Threshold = 2, Rbf = 3, Classifier = 4 };

const char* to_string(ModelKind kind);

/// Versioned binary model container. Layout (little-endian):
///   "AGGM" u32 version u8 kind u32 count
///   count × { u16 name_len, name, u64 n, n × f64 }
/// Field names are sorted, so equal models serialize to equal bytes.
struct ModelFile {
  static constexpr std::uint32_t kVersion = 1;
  ModelKind kind = ModelKind::Logit;
  std::map<std::string, std::vector<double>> fields;

  /// Throws std::runtime_error naming the field if it is absent or has the
  /// wrong length (expected < 0 skips the length check).
  const std::vector<double>& get(const std::string& name, long expected = -1) const;
  double scalar(const std::string& name) const { return get(name, 1)[0]; }
  void set(const std::string& name, std::vector<double> values) { fields[name] = std::move(values); }
  void set(const std::string& name, double v) { fields[name] = {v}; }
};

void write_model(std::ostream& out, const ModelFile& model);
ModelFile read_model(std::istream& in);
void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

/// Human-readable dump, one "name = v1 v2 ..." line per field.
std::string model_text(const ModelFile& model);

}  // namespace aggrate::ml
