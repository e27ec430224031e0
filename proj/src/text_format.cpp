#include "rankmatch/text_format.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "rankmatch/core.hpp"

namespace rankmatch {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw Error(Err::ParseError, "bad number '" + text + "'");
  }
  return value;
}

namespace {

void write_value(std::ostream& out, const nlohmann::ordered_json& v, int depth, int indent) {
  const std::string pad(static_cast<std::size_t>(depth) * indent, ' ');
  const std::string pad_in(static_cast<std::size_t>(depth + 1) * indent, ' ');
  switch (v.type()) {
    case nlohmann::ordered_json::value_t::object: {
      if (v.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      std::size_t i = 0;
      for (auto it = v.begin(); it != v.end(); ++it, ++i) {
        out << pad_in << nlohmann::ordered_json(it.key()).dump() << ": ";
        write_value(out, it.value(), depth + 1, indent);
        if (i + 1 < v.size()) out << ",";
        out << "\n";
      }
      out << pad << "}";
      return;
    }
    case nlohmann::ordered_json::value_t::array: {
      if (v.empty()) {
        out << "[]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        out << pad_in;
        write_value(out, v[i], depth + 1, indent);
        if (i + 1 < v.size()) out << ",";
        out << "\n";
      }
      out << pad << "]";
      return;
    }
    case nlohmann::ordered_json::value_t::number_float:
      out << format_double(v.get<double>());
      return;
    default:
      out << v.dump();
      return;
  }
}

}  // namespace

void write_json(std::ostream& out, const nlohmann::ordered_json& value, int indent) {
  write_value(out, value, 0, indent > 0 ? indent : 2);
  out << "\n";
}

std::string json_to_string(const nlohmann::ordered_json& value) {
  std::ostringstream oss;
  write_json(oss, value);
  return oss.str();
}

}  // namespace rankmatch
