#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "svp/sparse.hpp"

namespace svp {

/// Examples as read from disk, before label remapping.
struct RawDataset {
  std::vector<SparseVector> x;
  std::vector<std::int64_t> labels;
  std::size_t dim = 0;  // max index + 1 after rebasing

  std::size_t size() const { return x.size(); }
};

/// `label idx:val idx:val ...` per line; `#` starts a comment, blank lines
/// are skipped. Indices are shifted down by `index_base` (0 or 1). Throws
/// ParseError or NonMonotoneIndices with the 1-based line number.
RawDataset parse_svmlight(std::istream& in, int index_base);
RawDataset read_svmlight(const std::string& path, int index_base);

/// Writes 0-based indices shifted up by `index_base`, values at full precision.
void write_svmlight(std::ostream& out, const Dataset& data, int index_base);

/// Dense 0..K-1 ids for arbitrary integer labels, ascending by raw label.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::int64_t> raw_labels);  // any order, duplicates allowed
  static LabelMap identity(std::size_t k);

  std::size_t num_classes() const { return raw_.size(); }
  /// Throws UnmappedClass for a label not in the map.
  ClassId id(std::int64_t raw) const;
  std::int64_t raw(ClassId id) const { return raw_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::int64_t>& raw_labels() const { return raw_; }

  /// One raw label per line, in id order.
  std::string to_text() const;
  static LabelMap from_text(const std::string& text);

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::vector<std::int64_t> raw_;
};

/// Applies the map; `dim` is raised to at least raw.dim.
Dataset to_dataset(const RawDataset& raw, const LabelMap& map, std::size_t dim = 0);

}  // namespace svp
