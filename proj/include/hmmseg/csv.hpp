#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hmmseg::csv {

// Every CSV this library writes starts with '#'-prefixed "key: value"
// metadata lines, followed by a header row and data rows. Fields never
// contain commas or quotes, so no quoting is done.
struct Document {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::string> meta(const std::string& key) const;
  std::size_t column(const std::string& name) const;
};

void write(std::ostream& out, const Document& doc);
Document read(std::istream& in);

// Shortest round-trip decimal; "-inf"/"inf" for infinities.
std::string real(double x);
// "NA" for an undefined value.
std::string real(const std::optional<double>& x);
std::string integer(std::size_t x);
std::string integer(const std::optional<std::size_t>& x);

// Inverse of real(); NA parses to nullopt.
std::optional<double> parse_real(const std::string& field);

}  // namespace hmmseg::csv
