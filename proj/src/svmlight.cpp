#include "svp/svmlight.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "svp/error.hpp"

namespace svp {

namespace {

[[noreturn]] void fail(ErrorCode code, std::size_t line, const std::string& msg) {
  throw Error(code, "line " + std::to_string(line) + ": " + msg);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_real(std::string_view s, double& out) {
  // from_chars for double is not available in libstdc++ 11.
  if (s.empty()) return false;
  std::string buf(s);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size();
}

}  // namespace

RawDataset parse_svmlight(std::istream& in, int index_base) {
  if (index_base != 0 && index_base != 1) throw Error(ErrorCode::InvalidParams, "index base must be 0 or 1");
  RawDataset out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string tok;
    if (!(fields >> tok)) continue;

    std::int64_t label = 0;
    if (!parse_number(std::string_view(tok), label)) fail(ErrorCode::ParseError, line_no, "bad label '" + tok + "'");

    std::vector<Feature> feats;
    while (fields >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) fail(ErrorCode::ParseError, line_no, "expected index:value, got '" + tok + "'");
      std::string_view idx_text(tok.data(), colon);
      std::string_view val_text(tok.data() + colon + 1, tok.size() - colon - 1);
      std::uint64_t idx = 0;
      double val = 0.0;
      if (!parse_number(idx_text, idx)) fail(ErrorCode::ParseError, line_no, "bad index in '" + tok + "'");
      if (!parse_real(val_text, val)) fail(ErrorCode::ParseError, line_no, "bad value in '" + tok + "'");
      if (idx < static_cast<std::uint64_t>(index_base)) {
        fail(ErrorCode::ParseError, line_no, "index " + std::to_string(idx) + " below base");
      }
      idx -= static_cast<std::uint64_t>(index_base);
      if (idx > UINT32_MAX) fail(ErrorCode::ParseError, line_no, "index too large");
      if (!feats.empty() && idx <= feats.back().index) {
        fail(ErrorCode::NonMonotoneIndices, line_no, "indices must be strictly increasing");
      }
      feats.push_back({static_cast<std::uint32_t>(idx), val});
    }
    SparseVector x(std::move(feats));
    out.dim = std::max(out.dim, x.min_dim());
    out.x.push_back(std::move(x));
    out.labels.push_back(label);
  }
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed");
  return out;
}

RawDataset read_svmlight(const std::string& path, int index_base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return parse_svmlight(in, index_base);
}

void write_svmlight(std::ostream& out, const Dataset& data, int index_base) {
  char buf[64];
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.y[i];
    for (const auto& f : data.x[i].features()) {
      std::snprintf(buf, sizeof buf, " %u:%.17g", f.index + static_cast<unsigned>(index_base), f.value);
      out << buf;
    }
    out << '\n';
  }
}

LabelMap::LabelMap(std::vector<std::int64_t> raw_labels) : raw_(std::move(raw_labels)) {
  std::sort(raw_.begin(), raw_.end());
  raw_.erase(std::unique(raw_.begin(), raw_.end()), raw_.end());
}

LabelMap LabelMap::identity(std::size_t k) {
  LabelMap m;
  m.raw_.resize(k);
  for (std::size_t c = 0; c < k; ++c) m.raw_[c] = static_cast<std::int64_t>(c);
  return m;
}

ClassId LabelMap::id(std::int64_t raw) const {
  auto it = std::lower_bound(raw_.begin(), raw_.end(), raw);
  if (it == raw_.end() || *it != raw) throw Error(ErrorCode::UnmappedClass, "label " + std::to_string(raw) + " unknown");
  return static_cast<ClassId>(it - raw_.begin());
}

std::string LabelMap::to_text() const {
  std::string s;
  for (auto r : raw_) s += std::to_string(r) + '\n';
  return s;
}

LabelMap LabelMap::from_text(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::int64_t> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::int64_t v = 0;
    if (!parse_number(std::string_view(line), v)) fail(ErrorCode::ParseError, line_no, "bad label");
    if (!raw.empty() && v <= raw.back()) fail(ErrorCode::FormatError, line_no, "labels must be ascending");
    raw.push_back(v);
  }
  LabelMap m;
  m.raw_ = std::move(raw);
  return m;
}

Dataset to_dataset(const RawDataset& raw, const LabelMap& map, std::size_t dim) {
  Dataset d;
  d.x = raw.x;
  d.y.reserve(raw.size());
  for (auto l : raw.labels) d.y.push_back(map.id(l));
  d.dim = std::max(dim, raw.dim);
  d.num_classes = map.num_classes();
  return d;
}

}  // namespace svp
