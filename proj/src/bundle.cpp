#include "svp/bundle.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "svp/binary_io.hpp"
#include "svp/error.hpp"

namespace svp {

namespace fs = std::filesystem;

namespace {

constexpr char kWeightsMagic[8] = {'S', 'V', 'P', 'W', 'G', 'T', '\0', '\0'};
constexpr std::uint32_t kFlatBlock = 0xffffffffu;

void write_block(std::ostream& os, std::uint32_t node, const LinearModel& m) {
  io::write_le<std::uint32_t>(os, node);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.num_outputs()));
  io::write_le<std::uint64_t>(os, m.dim());
  io::write_le<std::uint8_t>(os, m.has_bias() ? 1 : 0);
  io::write_le<double>(os, m.meta.C);
  io::write_le<double>(os, m.meta.eps_l);
  io::write_le<double>(os, m.meta.prune_eta);
  for (double v : m.params()) io::write_le<double>(os, v);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << data;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + p.string());
}

}  // namespace

std::size_t ModelBundle::dim() const {
  if (flat) return flat->dim();
  if (tree)
    for (NodeId v : tree->internal_nodes())
      if (nodes.has(v)) return nodes.model(v).dim();
  return 0;
}

std::string ModelBundle::kind() const {
  if (flat && tree) return "flat+tree";
  return tree ? "tree" : "flat";
}

void write_weights(std::ostream& os, const ModelBundle& b) {
  os.write(kWeightsMagic, sizeof kWeightsMagic);
  io::write_le<std::uint32_t>(os, kBundleVersion);
  std::uint32_t blocks = b.flat ? 1 : 0;
  for (NodeId v = 0; v < b.nodes.num_nodes(); ++v) blocks += b.nodes.has(v);
  io::write_le<std::uint32_t>(os, blocks);
  if (b.flat) write_block(os, kFlatBlock, *b.flat);
  for (NodeId v = 0; v < b.nodes.num_nodes(); ++v)
    if (b.nodes.has(v)) write_block(os, v, b.nodes.model(v));
}

void read_weights(std::istream& is, ModelBundle& b) {
  io::expect_magic(is, kWeightsMagic, sizeof kWeightsMagic);
  const auto version = io::read_le<std::uint32_t>(is);
  if (version != kBundleVersion) throw Error(ErrorCode::FormatError, "unsupported weights version " + std::to_string(version));
  const auto blocks = io::read_le<std::uint32_t>(is);
  const std::size_t n_nodes = b.tree ? b.tree->num_nodes() : 0;
  b.nodes = LinearNodeModels(n_nodes);
  for (std::uint32_t i = 0; i < blocks; ++i) {
    const auto node = io::read_le<std::uint32_t>(is);
    const auto outputs = io::read_le<std::uint32_t>(is);
    const auto dim = io::read_le<std::uint64_t>(is);
    const bool has_bias = io::read_le<std::uint8_t>(is) != 0;
    LinearModel m(outputs, dim, has_bias);
    m.meta.C = io::read_le<double>(is);
    m.meta.eps_l = io::read_le<double>(is);
    m.meta.prune_eta = io::read_le<double>(is);
    for (double& v : m.params()) v = io::read_le<double>(is);
    if (node == kFlatBlock) {
      b.flat = std::move(m);
    } else {
      if (node >= n_nodes || b.tree->is_leaf(node)) {
        throw Error(ErrorCode::FormatError, "weight block for unknown internal node " + std::to_string(node));
      }
      if (outputs != b.tree->node(node).children.size()) {
        throw Error(ErrorCode::FormatError, "weight block arity mismatch at node " + std::to_string(node));
      }
      b.nodes.set(node, std::move(m));
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw Error(ErrorCode::FormatError, "trailing bytes in weights");
}

void save_bundle(const ModelBundle& b, const std::string& dir_path) {
  const fs::path dir(dir_path);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir_path + ": " + ec.message());

  nlohmann::ordered_json files = nlohmann::ordered_json::array({"weights.bin", "labels.txt"});
  {
    std::ostringstream os;
    write_weights(os, b);
    write_file(dir / "weights.bin", os.str());
  }
  write_file(dir / "labels.txt", b.labels.to_text());
  if (b.tree) {
    write_file(dir / "tree.txt", b.tree->to_text());
    files.push_back("tree.txt");
  } else {
    fs::remove(dir / "tree.txt", ec);
  }
  if (b.index) {
    std::ostringstream os;
    b.index->save(os);
    write_file(dir / "index.hnsw", os.str());
    files.push_back("index.hnsw");
  } else {
    fs::remove(dir / "index.hnsw", ec);
  }

  nlohmann::ordered_json m;
  m["format"] = "svp-bundle";
  m["version"] = kBundleVersion;
  m["kind"] = b.kind();
  m["dim"] = b.dim();
  m["num_classes"] = b.num_classes();
  m["files"] = files;
  if (b.flat) {
    m["training"] = {{"C", b.flat->meta.C}, {"eps_l", b.flat->meta.eps_l}, {"prune_eta", b.flat->meta.prune_eta}};
  }
  if (b.index) {
    const auto& p = b.index->params();
    m["index"] = {{"M", p.M}, {"ef_construction", p.ef_construction}, {"seed", p.seed}};
  }
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

ModelBundle load_bundle(const std::string& dir_path) {
  const fs::path dir(dir_path);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("manifest: ") + e.what());
  }
  if (m.value("format", "") != "svp-bundle") throw Error(ErrorCode::FormatError, "not a model bundle");
  if (m.value("version", 0) != kBundleVersion) throw Error(ErrorCode::FormatError, "unsupported bundle version");
  const auto k = m.at("num_classes").get<std::size_t>();
  const auto dim = m.at("dim").get<std::size_t>();
  const auto files = m.at("files").get<std::vector<std::string>>();
  auto listed = [&](const char* f) { return std::find(files.begin(), files.end(), f) != files.end(); };

  ModelBundle b;
  b.labels = LabelMap::from_text(read_file(dir / "labels.txt"));
  if (b.labels.num_classes() != k) throw Error(ErrorCode::FormatError, "labels.txt does not match num_classes");
  if (listed("tree.txt")) b.tree = load_hierarchy(read_file(dir / "tree.txt"), k);
  {
    std::istringstream is(read_file(dir / "weights.bin"));
    read_weights(is, b);
  }
  if (listed("index.hnsw")) {
    std::istringstream is(read_file(dir / "index.hnsw"));
    b.index = HnswIndex::load(is);
  }
  if (b.dim() != dim) throw Error(ErrorCode::FormatError, "weights do not match manifest dim");
  if (b.flat && b.flat->num_outputs() != k) throw Error(ErrorCode::FormatError, "flat model class count mismatch");
  if (b.tree) check_node_models(*b.tree, b.nodes);
  if (b.index && (!b.flat || b.index->num_nodes() != k)) throw Error(ErrorCode::FormatError, "index does not match flat model");
  return b;
}

}  // namespace svp
