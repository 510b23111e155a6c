#include "hmmseg/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "hmmseg/model.hpp"

namespace hmmseg::csv {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::optional<std::string> Document::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  return std::nullopt;
}

std::size_t Document::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error(fmt::format("no column '{}'", name));
}

void write(std::ostream& out, const Document& doc) {
  for (const auto& [k, v] : doc.metadata) out << "# " << k << ": " << v << '\n';
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << '\n';
  };
  line(doc.header);
  for (const auto& r : doc.rows) line(r);
}

Document read(std::istream& in) {
  Document doc;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = line.substr(line.find_first_not_of("# "));
      const auto colon = body.find(": ");
      if (colon == std::string::npos)
        doc.metadata.emplace_back(body, "");
      else
        doc.metadata.emplace_back(body.substr(0, colon), body.substr(colon + 2));
      continue;
    }
    auto fields = split(line);
    if (!have_header) {
      doc.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != doc.header.size())
        throw Error(fmt::format("row has {} fields, header has {}", fields.size(), doc.header.size()));
      doc.rows.push_back(std::move(fields));
    }
  }
  return doc;
}

std::string real(double x) {
  if (std::isinf(x)) return x < 0 ? "-inf" : "inf";
  return fmt::format("{}", x);
}

std::string real(const std::optional<double>& x) { return x ? real(*x) : "NA"; }

std::string integer(std::size_t x) { return std::to_string(x); }

std::string integer(const std::optional<std::size_t>& x) { return x ? integer(*x) : "NA"; }

std::optional<double> parse_real(const std::string& field) {
  if (field == "NA") return std::nullopt;
  if (field == "-inf") return -std::numeric_limits<double>::infinity();
  if (field == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw Error(fmt::format("'{}' is not a number", field));
  return v;
}

}  // namespace hmmseg::csv
