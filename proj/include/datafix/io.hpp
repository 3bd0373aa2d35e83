#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "datafix/dataset.hpp"

namespace datafix::io {

/// Sidecar path holding column kinds for a CSV: "data.csv" -> "data.kinds.json".
std::filesystem::path kinds_sidecar_path(const std::filesystem::path& csv_path);

/// Reads a CSV with a header row. Column kinds come from `kinds_path` when
/// given, otherwise from the sidecar next to the CSV if it exists, otherwise
/// every column is continuous.
Dataset read_csv(const std::filesystem::path& path,
                 const std::optional<std::filesystem::path>& kinds_path = std::nullopt);

/// Writes values with the shortest round-trip representation, so re-reading
/// and re-writing an unchanged value reproduces the same bytes.
void write_csv(const std::filesystem::path& path, const Dataset& ds);

std::vector<FeatureKind> read_kinds(const std::filesystem::path& path);
void write_kinds(const std::filesystem::path& path, const std::vector<FeatureKind>& kinds);

/// Masks are JSON arrays of column indices; a locate report is read as
/// its refined_mask.
std::vector<std::size_t> read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const std::vector<std::size_t>& indices);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace datafix::io
