#include "potcast/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "potcast/errors.hpp"

namespace potcast {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void append_escaped(const std::string& s, std::string* out) {
  out->push_back('"');
  for (char ch : s) {
    switch (ch) {
      case '"': *out += "\\\""; break;
      case '\\': *out += "\\\\"; break;
      case '\n': *out += "\\n"; break;
      case '\t': *out += "\\t"; break;
      case '\r': *out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
          *out += buf;
        } else {
          out->push_back(ch);
        }
    }
  }
  out->push_back('"');
}

void append_json(const json& j, int indent, std::string* out) {
  const std::string pad(2 * static_cast<std::size_t>(indent), ' ');
  const std::string pad_in(2 * static_cast<std::size_t>(indent + 1), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        *out += "{}";
        return;
      }
      *out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) *out += ",\n";
        first = false;
        *out += pad_in;
        append_escaped(it.key(), out);
        *out += ": ";
        append_json(it.value(), indent + 1, out);
      }
      *out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        *out += "[]";
        return;
      }
      *out += "[\n";
      bool first = true;
      for (const auto& item : j) {
        if (!first) *out += ",\n";
        first = false;
        *out += pad_in;
        append_json(item, indent + 1, out);
      }
      *out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      // JSON has no inf/nan literals; emit them as strings.
      if (std::isnan(v) || std::isinf(v)) {
        append_escaped(format_double(v), out);
      } else {
        *out += format_double(v);
      }
      return;
    }
    case json::value_t::string:
      append_escaped(j.get<std::string>(), out);
      return;
    default:
      *out += j.dump();
      return;
  }
}

}  // namespace

std::string to_json_text(const json& j) {
  std::string out;
  append_json(j, 0, &out);
  out.push_back('\n');
  return out;
}

ColumnData read_single_column_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw input_error("cannot open data file: " + path);
  }
  ColumnData data;
  std::string line;
  while (std::getline(in, line)) {
    // Trim whitespace and a possible trailing comma.
    std::size_t begin = 0;
    std::size_t end = line.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(line[begin])))
      ++begin;
    while (end > begin &&
           (std::isspace(static_cast<unsigned char>(line[end - 1])) ||
            line[end - 1] == ','))
      --end;
    const std::string cell = line.substr(begin, end - begin);
    if (cell.empty()) {
      ++data.dropped;
      continue;
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size() || !std::isfinite(v)) {
        ++data.dropped;
        continue;
      }
      data.values.push_back(v);
    } catch (const std::exception&) {
      ++data.dropped;
    }
  }
  return data;
}

}  // namespace potcast
