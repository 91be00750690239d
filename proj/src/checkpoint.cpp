#include "rlkge/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "rlkge/errors.hpp"

namespace rlkge {

namespace {

constexpr std::array<char, 8> kModelMagic{'R', 'L', 'K', 'G', 'E', 'M', 'D', 'L'};
constexpr std::array<char, 8> kPolicyMagic{'R', 'L', 'K', 'G', 'E', 'P', 'O', 'L'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw DataError("cannot write " + path.string());
  }

  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

  template <typename T>
  void le(T value) {
    std::array<unsigned char, sizeof(T)> buf;
    std::memcpy(buf.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    out_.write(reinterpret_cast<const char*>(buf.data()), sizeof(T));
  }

  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(v); }

  void matrix(const Matrix& m) {
    for (double v : m.data()) f64(v);
  }

  void names(std::span<const std::string> names) {
    u64(names.size());
    for (const auto& n : names) {
      u32(static_cast<std::uint32_t>(n.size()));
      bytes(n.data(), n.size());
    }
  }

  void finish() {
    out_.flush();
    if (!out_) throw DataError("write failed: " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw DataError("cannot open " + path.string());
  }

  void bytes(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (!in_) throw DataError("truncated file: " + path_.string());
  }

  template <typename T>
  T le() {
    std::array<unsigned char, sizeof(T)> buf;
    bytes(reinterpret_cast<char*>(buf.data()), sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    T value;
    std::memcpy(&value, buf.data(), sizeof(T));
    return value;
  }

  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  double f64() { return le<double>(); }

  void magic(const std::array<char, 8>& expected) {
    std::array<char, 8> got{};
    bytes(got.data(), got.size());
    if (got != expected) throw DataError("bad magic in " + path_.string());
    if (u32() != kVersion) throw DataError("unsupported version in " + path_.string());
  }

  Matrix matrix(std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = f64();
    return m;
  }

  std::vector<std::string> names() {
    const auto n = u64();
    std::vector<std::string> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::string s(u32(), '\0');
      bytes(s.data(), s.size());
      out.push_back(std::move(s));
    }
    return out;
  }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw DataError("trailing bytes in " + path_.string());
    }
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

// Sizes read from a file before allocating; guards against corrupt headers.
void check_dims(std::uint64_t rows, std::uint64_t cols, const std::filesystem::path& path) {
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 34;
  if (cols != 0 && rows > kLimit / cols) throw DataError("implausible sizes in " + path.string());
}

}  // namespace

void save_model(const std::filesystem::path& path, const EmbeddingStore& store,
                std::span<const std::string> entity_names,
                std::span<const std::string> relation_names) {
  if (entity_names.size() != store.entities.rows() ||
      relation_names.size() != store.relations.rows()) {
    throw UsageError("vocabulary size does not match the embedding store");
  }
  Writer w(path);
  w.bytes(kModelMagic.data(), kModelMagic.size());
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(store.model.kind));
  w.u64(store.entities.rows());
  w.u64(store.relations.rows());
  w.u64(store.dim);
  w.u32(static_cast<std::uint32_t>(store.model.norm));
  w.u32(static_cast<std::uint32_t>(store.model.negatives));
  w.f64(store.model.margin);
  w.f64(store.model.l2);
  w.f64(store.model.eta);
  w.u64(store.step);
  w.matrix(store.entities);
  w.matrix(store.relations);
  w.matrix(store.entity_m);
  w.matrix(store.entity_v);
  w.matrix(store.relation_m);
  w.matrix(store.relation_v);
  w.names(entity_names);
  w.names(relation_names);
  w.finish();
}

ModelCheckpoint load_model(const std::filesystem::path& path) {
  Reader r(path);
  r.magic(kModelMagic);
  ModelCheckpoint ck;
  auto& s = ck.store;
  const auto kind = r.u32();
  if (kind > 2) throw DataError("unknown model kind in " + path.string());
  s.model.kind = static_cast<ModelKind>(kind);
  const auto ne = r.u64();
  const auto nr = r.u64();
  s.dim = r.u64();
  const auto norm = r.u32();
  if (norm != 1 && norm != 2) throw DataError("bad norm in " + path.string());
  s.model.norm = static_cast<Norm>(norm);
  s.model.negatives = static_cast<int>(r.u32());
  s.model.margin = r.f64();
  s.model.l2 = r.f64();
  s.model.eta = r.f64();
  s.step = r.u64();
  const std::size_t ew = s.model.kind == ModelKind::RotatE ? 2 * s.dim : s.dim;
  check_dims(ne, ew, path);
  check_dims(nr, s.dim, path);
  s.entities = r.matrix(ne, ew);
  s.relations = r.matrix(nr, s.dim);
  s.entity_m = r.matrix(ne, ew);
  s.entity_v = r.matrix(ne, ew);
  s.relation_m = r.matrix(nr, s.dim);
  s.relation_v = r.matrix(nr, s.dim);
  ck.entity_names = r.names();
  ck.relation_names = r.names();
  if (ck.entity_names.size() != ne || ck.relation_names.size() != nr) {
    throw DataError("vocabulary section does not match header in " + path.string());
  }
  r.expect_end();
  return ck;
}

void save_policy(const std::filesystem::path& path, const PolicyParams& params,
                 std::span<const std::uint32_t> cluster_of, std::size_t embedding_dim) {
  if (cluster_of.size() != params.specific.rows()) {
    throw UsageError("cluster assignment size does not match the relation count");
  }
  Writer w(path);
  w.bytes(kPolicyMagic.data(), kPolicyMagic.size());
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(params.mode));
  w.u64(params.shared.rows());
  w.u64(params.specific.rows());
  w.u64(embedding_dim);
  w.u64(params.state_width());
  w.matrix(params.shared);
  w.matrix(params.specific);
  for (auto c : cluster_of) w.u32(c);
  w.finish();
}

PolicyCheckpoint load_policy(const std::filesystem::path& path) {
  Reader r(path);
  r.magic(kPolicyMagic);
  PolicyCheckpoint ck;
  const auto mode = r.u32();
  if (mode > 1) throw DataError("unknown policy mode in " + path.string());
  ck.params.mode = static_cast<PolicyMode>(mode);
  const auto nc = r.u64();
  const auto nr = r.u64();
  ck.embedding_dim = r.u64();
  const auto width = r.u64();
  check_dims(nc, width, path);
  check_dims(nr, width, path);
  ck.params.shared = r.matrix(nc, width);
  ck.params.specific = r.matrix(nr, width);
  ck.cluster_of.resize(nr);
  for (auto& c : ck.cluster_of) {
    c = r.u32();
    if (c >= nc) throw DataError("cluster id out of range in " + path.string());
  }
  r.expect_end();
  return ck;
}

}  // namespace rlkge
