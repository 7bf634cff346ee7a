#include "cnld/model_file.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "cnld/errors.hpp"

namespace cnld {

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void append_list(std::ostringstream& os, const char* key, const Vector<double>& v) {
  os << key;
  for (Index i = 0; i < v.size(); ++i) os << ' ' << format_real(v(i));
  os << '\n';
}

struct Line {
  std::size_t offset;
  std::vector<std::string> tokens;
};

std::vector<Line> tokenize(const std::string& text) {
  std::vector<Line> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::istringstream is(text.substr(start, end - start));
    Line line{start, {}};
    for (std::string tok; is >> tok;) line.tokens.push_back(tok);
    if (!line.tokens.empty() && line.tokens.front()[0] != '#') lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

template <typename T>
T parse_number(const std::string& tok, std::size_t offset, int base = 10) {
  T value{};
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  std::from_chars_result r;
  if constexpr (std::is_floating_point_v<T>) {
    r = std::from_chars(first, last, value);
  } else {
    r = std::from_chars(first, last, value, base);
  }
  if (r.ec != std::errc() || r.ptr != last) throw FormatError("model file: bad number '" + tok + "'", offset);
  return value;
}

}  // namespace

std::string format_model(const ModelFile& model) {
  model.params.validate();
  const int levels = model.params.levels();
  const Vector<double> flat = pack(model.params);
  std::ostringstream os;
  os << "cnld-model\n";
  os << "format_version " << ModelFile::kFormatVersion << '\n';
  os << "levels " << levels << '\n';
  append_list(os, "angles", flat.head(kAnglesPerLevel * levels));
  append_list(os, "slopes", flat.tail(kOrientations * levels));
  os << "seed " << model.provenance.seed << '\n';
  os << "epochs " << model.provenance.epochs << '\n';
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, model.provenance.corpus_hash);
  os << "corpus_hash " << hash << '\n';
  return os.str();
}

ModelFile parse_model(const std::string& text) {
  const auto lines = tokenize(text);
  if (lines.empty() || lines.front().tokens.size() != 1 || lines.front().tokens[0] != "cnld-model") {
    throw FormatError("model file must start with 'cnld-model'", 0);
  }
  std::map<std::string, const Line*> fields;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& key = lines[i].tokens.front();
    if (!fields.emplace(key, &lines[i]).second) throw FormatError("model file: duplicate key '" + key + "'", lines[i].offset);
  }
  auto field = [&](const std::string& key) -> const Line& {
    auto it = fields.find(key);
    if (it == fields.end()) throw FormatError("model file: missing key '" + key + "'", text.size());
    return *it->second;
  };
  auto scalar = [&](const std::string& key) -> const std::string& {
    const Line& l = field(key);
    if (l.tokens.size() != 2) throw FormatError("model file: '" + key + "' takes one value", l.offset);
    return l.tokens[1];
  };
  auto list = [&](const std::string& key, int expected) {
    const Line& l = field(key);
    const int count = static_cast<int>(l.tokens.size()) - 1;
    if (count != expected) {
      throw StructuralError("model file: '" + key + "' has " + std::to_string(count) + " values, expected " +
                            std::to_string(expected));
    }
    Vector<double> v(expected);
    for (int i = 0; i < expected; ++i) v(i) = parse_number<double>(l.tokens[static_cast<std::size_t>(i) + 1], l.offset);
    return v;
  };

  const int version = parse_number<int>(scalar("format_version"), field("format_version").offset);
  if (version != ModelFile::kFormatVersion) {
    throw FormatError("model file: unsupported format_version " + std::to_string(version), field("format_version").offset);
  }
  const int levels = parse_number<int>(scalar("levels"), field("levels").offset);
  if (levels < 1) throw StructuralError("model file: levels must be >= 1");

  Vector<double> flat(kParamsPerLevel * levels);
  flat << list("angles", kAnglesPerLevel * levels), list("slopes", kOrientations * levels);

  ModelFile model;
  model.params = unpack<double>(flat, levels);
  model.provenance.seed = parse_number<std::uint64_t>(scalar("seed"), field("seed").offset);
  model.provenance.epochs = parse_number<int>(scalar("epochs"), field("epochs").offset);
  model.provenance.corpus_hash = parse_number<std::uint64_t>(scalar("corpus_hash"), field("corpus_hash").offset, 16);
  return model;
}

void write_model(const ModelFile& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_model(model);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

ModelFile read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace cnld
