#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace potcast {

using json = nlohmann::ordered_json;

// Shortest decimal with 17 significant digits (%.17g): every double
// round-trips and serialization is byte-stable across runs.
std::string format_double(double v);

// Serialize a JSON tree with format_double applied to every floating-point
// number, 2-space indentation, and a trailing newline.
std::string to_json_text(const json& j);

// Read a single-column CSV: one numeric value per line, optional header,
// empty and non-numeric cells dropped and counted.
struct ColumnData {
  std::vector<double> values;
  std::size_t dropped = 0;
};
ColumnData read_single_column_csv(const std::string& path);

}  // namespace potcast
