#include "datafix/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace datafix::io {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

double parse_double(const std::string& text, std::size_t row, std::size_t col) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && (text[begin] == ' ' || text[begin] == '\t')) ++begin;
  while (end > begin && (text[end - 1] == ' ' || text[end - 1] == '\t')) --end;
  double value = 0.0;
  const char* first = text.data() + begin;
  const char* last = text.data() + end;
  if (begin < end && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw std::runtime_error("cannot parse '" + text + "' as a number (data row " +
                             std::to_string(row + 1) + ", column " + std::to_string(col + 1) + ")");
  }
  return value;
}

}  // namespace

std::filesystem::path kinds_sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".kinds.json");
  return p;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

Dataset read_csv(const std::filesystem::path& path,
                 const std::optional<std::filesystem::path>& kinds_path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + " is empty");
  const auto names = split_line(line);
  const std::size_t d = names.size();

  std::vector<double> flat;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_line(line);
    if (fields.size() != d) {
      throw std::runtime_error(path.string() + ": data row " + std::to_string(n + 1) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) flat.push_back(parse_double(fields[j], n, j));
    ++n;
  }
  if (n == 0) throw std::runtime_error(path.string() + " has no data rows");

  Matrix values = Eigen::Map<Matrix>(flat.data(), static_cast<Eigen::Index>(n),
                                     static_cast<Eigen::Index>(d));

  std::vector<FeatureKind> kinds(d, FeatureKind::kContinuous);
  if (kinds_path) {
    kinds = read_kinds(*kinds_path);
  } else if (const auto sidecar = kinds_sidecar_path(path); std::filesystem::exists(sidecar)) {
    kinds = read_kinds(sidecar);
  }
  if (kinds.size() != d) {
    throw std::runtime_error("kinds file lists " + std::to_string(kinds.size()) +
                             " columns but " + path.string() + " has " + std::to_string(d));
  }
  return Dataset(std::move(values), std::move(kinds), names);
}

void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::string out;
  out.reserve(ds.rows() * ds.cols() * 12);
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    if (j) out.push_back(',');
    out += ds.names()[j];
  }
  out.push_back('\n');
  const auto& v = ds.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (j) out.push_back(',');
      out += format_double(v(i, j));
    }
    out.push_back('\n');
  }
  write_text(path, out);
}

std::vector<FeatureKind> read_kinds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("kinds") || !j["kinds"].is_array()) {
    throw std::runtime_error(path.string() + ": expected {\"kinds\": [...]}");
  }
  std::vector<FeatureKind> kinds;
  for (const auto& k : j["kinds"]) kinds.push_back(parse_feature_kind(k.get<std::string>()));
  return kinds;
}

void write_kinds(const std::filesystem::path& path, const std::vector<FeatureKind>& kinds) {
  nlohmann::json j;
  j["kinds"] = nlohmann::json::array();
  for (auto k : kinds) j["kinds"].push_back(to_string(k));
  write_text(path, j.dump() + "\n");
}

std::vector<std::size_t> read_mask(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  // A locate report can stand in for a mask.
  if (j.is_object() && j.contains("refined_mask")) j = j["refined_mask"];
  if (!j.is_array()) throw std::runtime_error(path.string() + ": mask must be a JSON array");
  std::vector<std::size_t> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw std::runtime_error(path.string() + ": mask entries must be non-negative integers");
    }
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

void write_mask(const std::filesystem::path& path, const std::vector<std::size_t>& indices) {
  write_text(path, nlohmann::json(indices).dump() + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace datafix::io
