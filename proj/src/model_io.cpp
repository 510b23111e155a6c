#include "hmmseg/model_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

namespace hmmseg {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json to_json(const ModelSpec& spec) {
  json j;
  j["states"] = spec.num_states();
  j["transition"] = spec.transition.to_rows();
  j["initial"] = spec.initial;
  json e;
  if (const auto* c = std::get_if<CategoricalEmission>(&spec.emission)) {
    e["kind"] = "categorical";
    e["symbols"] = c->symbols;
    e["table"] = c->probabilities.to_rows();
  } else if (const auto* a = std::get_if<AbstractEmission>(&spec.emission)) {
    e["kind"] = "abstract";
    e["symbols"] = a->symbols;
    e["table"] = a->densities.to_rows();
  } else {
    const auto& g = std::get<GaussianEmission>(spec.emission);
    e["kind"] = "gaussian";
    e["means"] = g.means;
    e["variances"] = g.variances;
  }
  j["emission"] = e;
  return j;
}

}  // namespace

ModelSpec parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw Error(fmt::format("model file is not valid JSON: {}", ex.what()));
  }
  try {
    ModelSpec spec;
    const auto k = j.at("states").get<std::size_t>();
    spec.transition = Matrix::from_rows(j.at("transition").get<std::vector<std::vector<double>>>());
    spec.initial = j.at("initial").get<std::vector<double>>();
    if (spec.initial.size() != k)
      throw Error(fmt::format("'initial' has {} entries but 'states' is {}", spec.initial.size(), k));
    const auto& e = j.at("emission");
    const auto kind = e.at("kind").get<std::string>();
    if (kind == "categorical" || kind == "abstract") {
      auto symbols = e.at("symbols").get<std::vector<std::string>>();
      auto table = Matrix::from_rows(e.at("table").get<std::vector<std::vector<double>>>());
      if (kind == "categorical")
        spec.emission = CategoricalEmission{std::move(symbols), std::move(table)};
      else
        spec.emission = AbstractEmission{std::move(symbols), std::move(table)};
    } else if (kind == "gaussian") {
      spec.emission = GaussianEmission{e.at("means").get<std::vector<double>>(),
                                       e.at("variances").get<std::vector<double>>()};
    } else {
      throw Error(fmt::format("unknown emission kind '{}'", kind));
    }
    require_valid(spec);
    return spec;
  } catch (const json::exception& ex) {
    throw Error(fmt::format("malformed model file: {}", ex.what()));
  } catch (const std::invalid_argument& ex) {
    throw Error(fmt::format("malformed model file: {}", ex.what()));
  }
}

std::string format_model(const ModelSpec& spec) { return to_json(spec).dump(2) + "\n"; }

ModelSpec load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

void store_model(const ModelSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << format_model(spec);
}

std::string model_hash(const ModelSpec& spec) {
  const std::string canonical = to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

ObservationSequence read_observations(std::istream& in, const ModelSpec& spec) {
  std::string line;
  std::size_t lineno = 0;
  if (is_table_emission(spec.emission)) {
    const auto& names = symbol_names(spec.emission);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);
    std::vector<std::size_t> xs;
    while (std::getline(in, line)) {
      ++lineno;
      const auto tok = trim(line);
      if (tok.empty() || tok.front() == '#') continue;
      const auto it = index.find(tok);
      if (it == index.end()) throw Error(fmt::format("line {}: unknown symbol '{}'", lineno, tok));
      xs.push_back(it->second);
    }
    return ObservationSequence::symbols(std::move(xs));
  }
  std::vector<double> xs;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = trim(line);
    if (tok.empty() || tok.front() == '#') continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw Error(fmt::format("line {}: '{}' is not a number", lineno, tok));
    xs.push_back(v);
  }
  return ObservationSequence::reals(std::move(xs));
}

ObservationSequence load_observations(const std::filesystem::path& path, const ModelSpec& spec) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return read_observations(in, spec);
}

void write_observations(std::ostream& out, const ObservationSequence& obs, const ModelSpec& spec) {
  if (obs.is_symbolic()) {
    const auto& names = symbol_names(spec.emission);
    for (auto x : obs.symbol_values()) out << names.at(x) << '\n';
  } else {
    for (double x : obs.real_values()) out << fmt::format("{}", x) << '\n';
  }
}

StatePath read_state_path(std::istream& in, std::size_t num_states) {
  StatePath path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = trim(line);
    if (tok.empty() || tok.front() == '#') continue;
    std::size_t s = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), s);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || s < 1 || s > num_states)
      throw Error(fmt::format("line {}: '{}' is not a state in 1..{}", lineno, tok, num_states));
    path.push_back(s - 1);
  }
  return path;
}

StatePath load_state_path(const std::filesystem::path& path, std::size_t num_states) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return read_state_path(in, num_states);
}

void write_state_path(std::ostream& out, const StatePath& path) {
  for (auto s : path) out << s + 1 << '\n';
}

}  // namespace hmmseg
