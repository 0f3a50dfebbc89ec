#include "bslrec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "bslrec/random.hpp"

namespace bslrec {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

constexpr char kMagic[8] = {'B', 'S', 'L', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <class T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put(const Matrix& m) {
    put<std::uint64_t>(m.rows());
    put<std::uint64_t>(m.cols());
    const auto* p = reinterpret_cast<const char*>(m.data().data());
    buf_.insert(buf_.end(), p, p + m.size() * sizeof(double));
  }
  std::vector<char>& bytes() { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<char>& buf, std::size_t end) : buf_(buf), end_(end) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  Matrix get_matrix() {
    auto rows = get<std::uint64_t>();
    auto cols = get<std::uint64_t>();
    if (cols != 0 && rows > (end_ - pos_) / sizeof(double) / cols)
      fail(ErrorCode::Corrupt, "checkpoint: matrix extends past end of file");
    Matrix m(rows, cols);
    need(m.size() * sizeof(double));
    std::memcpy(m.data().data(), buf_.data() + pos_, m.size() * sizeof(double));
    pos_ += m.size() * sizeof(double);
    return m;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (end_ - pos_ < n) fail(ErrorCode::Corrupt, "checkpoint: truncated");
  }
  const std::vector<char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  Writer w;
  for (char c : kMagic) w.put(c);
  w.put(kVersion);
  w.put<std::uint64_t>(ckpt.seed);
  w.put<std::uint64_t>(ckpt.epoch);
  w.put<std::uint64_t>(ckpt.emb.dim);
  w.put(ckpt.emb.user_vecs);
  w.put(ckpt.emb.item_vecs);
  w.put(ckpt.adam.beta1);
  w.put(ckpt.adam.beta2);
  w.put(ckpt.adam.eps);
  w.put<std::uint64_t>(ckpt.adam.step);
  w.put(ckpt.adam.user_m);
  w.put(ckpt.adam.user_v);
  w.put(ckpt.adam.item_m);
  w.put(ckpt.adam.item_v);
  auto& bytes = w.bytes();
  std::uint64_t sum = fnv1a(std::as_bytes(std::span(bytes.data(), bytes.size())));
  w.put(sum);

  // Write-then-rename so readers never observe a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write checkpoint: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::Io, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open checkpoint: " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) + sizeof(kVersion) + sizeof(std::uint64_t))
    fail(ErrorCode::Corrupt, "checkpoint: file too short: " + path.string());
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    fail(ErrorCode::Corrupt, "checkpoint: bad magic: " + path.string());

  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body, sizeof stored);
  if (stored != fnv1a(std::as_bytes(std::span(bytes.data(), body))))
    fail(ErrorCode::Corrupt, "checkpoint: checksum mismatch: " + path.string());

  Reader r(bytes, body);
  for (std::size_t k = 0; k < sizeof kMagic; ++k) r.get<char>();
  if (r.get<std::uint32_t>() != kVersion)
    fail(ErrorCode::Corrupt, "checkpoint: unsupported version: " + path.string());
  Checkpoint c;
  c.seed = r.get<std::uint64_t>();
  c.epoch = r.get<std::uint64_t>();
  c.emb.dim = r.get<std::uint64_t>();
  c.emb.user_vecs = r.get_matrix();
  c.emb.item_vecs = r.get_matrix();
  c.adam.beta1 = r.get<double>();
  c.adam.beta2 = r.get<double>();
  c.adam.eps = r.get<double>();
  c.adam.step = r.get<std::uint64_t>();
  c.adam.user_m = r.get_matrix();
  c.adam.user_v = r.get_matrix();
  c.adam.item_m = r.get_matrix();
  c.adam.item_v = r.get_matrix();
  if (r.pos() != body) fail(ErrorCode::Corrupt, "checkpoint: trailing bytes: " + path.string());
  if (c.emb.user_vecs.cols() != c.emb.dim || c.emb.item_vecs.cols() != c.emb.dim ||
      c.adam.user_m.rows() != c.emb.user_vecs.rows() || c.adam.item_m.rows() != c.emb.item_vecs.rows() ||
      c.adam.user_v.rows() != c.emb.user_vecs.rows() || c.adam.item_v.rows() != c.emb.item_vecs.rows())
    fail(ErrorCode::Corrupt, "checkpoint: inconsistent shapes: " + path.string());
  return c;
}

}  // namespace bslrec
