#include "salman/embedding_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace salman {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary embedding I/O assumes a little-endian host");

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_count(std::string_view s, std::uint64_t& out) {
  if (s.empty() || s.front() == '+' || s.front() == '-') return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string row_msg(std::size_t row, const std::string& what) {
  return "row " + std::to_string(row) + ": " + what;
}

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  template <class T>
  T get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T)) throw FormatError(std::string("truncated binary file while reading ") + what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("truncated binary file while reading ") + what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

}  // namespace

void EmbeddingMatrix::validate() const {
  if (values.rows() < 2) throw FormatError("need at least 2 samples, got " + std::to_string(values.rows()));
  if (values.cols() < 1) throw FormatError("embedding dimension must be >= 1");
  if (static_cast<Index>(sample_ids.size()) != values.rows())
    throw FormatError("sample id count " + std::to_string(sample_ids.size()) + " does not match row count " +
                      std::to_string(values.rows()));
  std::unordered_map<std::string_view, std::size_t> seen;
  seen.reserve(sample_ids.size());
  for (std::size_t r = 0; r < sample_ids.size(); ++r) {
    const auto& id = sample_ids[r];
    if (id.empty()) throw FormatError(row_msg(r + 1, "empty sample id"), r + 1);
    auto [it, fresh] = seen.emplace(id, r);
    if (!fresh)
      throw FormatError(row_msg(r + 1, "duplicate sample id '" + id + "' (first seen at row " +
                                           std::to_string(it->second + 1) + ")"),
                        r + 1);
    for (Index c = 0; c < values.cols(); ++c)
      if (!std::isfinite(values(static_cast<Index>(r), c)))
        throw FormatError(row_msg(r + 1, "non-finite value in column " + std::to_string(c + 1)), r + 1);
  }
}

EmbeddingMatrix parse_text_embeddings(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  while (!lines.empty() && split_fields(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw FormatError("empty embedding file: missing header");

  std::string_view header = lines.front();
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  const auto sp = header.find(' ');
  std::uint64_t n = 0, d = 0;
  if (sp == std::string_view::npos || !parse_count(header.substr(0, sp), n) ||
      !parse_count(header.substr(sp + 1), d))
    throw FormatError("malformed header: expected \"<n_samples> <dim>\"");
  if (n < 2) throw FormatError("malformed header: n_samples must be >= 2");
  if (d < 1) throw FormatError("malformed header: dim must be >= 1");
  if (lines.size() - 1 != n)
    throw FormatError("header declares " + std::to_string(n) + " rows but file has " +
                      std::to_string(lines.size() - 1));

  EmbeddingMatrix m;
  m.values.resize(static_cast<Index>(n), static_cast<Index>(d));
  m.sample_ids.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t row = r + 1;
    auto fields = split_fields(lines[row]);
    if (fields.empty()) throw FormatError(row_msg(row, "empty row"), row);
    if (fields.size() - 1 != d)
      throw FormatError(row_msg(row, "expected " + std::to_string(d) + " values, got " +
                                         std::to_string(fields.size() - 1)),
                        row);
    m.sample_ids.emplace_back(fields[0]);
    for (std::size_t c = 0; c < d; ++c) {
      double v;
      if (!parse_real(fields[c + 1], v))
        throw FormatError(row_msg(row, "cannot parse value '" + std::string(fields[c + 1]) + "'"), row);
      m.values(static_cast<Index>(r), static_cast<Index>(c)) = v;
    }
  }
  m.validate();
  return m;
}

std::string format_text_embeddings(const EmbeddingMatrix& m) {
  m.validate();
  std::string out = std::to_string(m.n_samples()) + " " + std::to_string(m.dim()) + "\n";
  char buf[64];
  for (Index r = 0; r < m.n_samples(); ++r) {
    const auto& id = m.sample_ids[static_cast<std::size_t>(r)];
    for (char c : id)
      if (is_space(c) || c == '\n')
        throw FormatError(row_msg(static_cast<std::size_t>(r) + 1, "sample id contains whitespace; use binary format"),
                          static_cast<std::size_t>(r) + 1);
    out += id;
    for (Index c = 0; c < m.dim(); ++c) {
      // Shortest representation that parses back to the same double.
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, m.values(r, c));
      out += ' ';
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

EmbeddingMatrix parse_binary_embeddings(std::string_view bytes) {
  ByteReader in(bytes);
  auto magic = in.take(4, "magic");
  if (std::memcmp(magic.data(), kBinaryMagic, 4) != 0) throw FormatError("bad magic: not an SLMN embedding file");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kBinaryVersion) throw FormatError("unsupported binary version " + std::to_string(version));
  const auto n = in.get<std::uint64_t>("n_samples");
  const auto d = in.get<std::uint64_t>("dim");
  if (n < 2) throw FormatError("malformed header: n_samples must be >= 2");
  if (d < 1) throw FormatError("malformed header: dim must be >= 1");
  if (n > in.remaining() / 4) throw FormatError("malformed header: n_samples exceeds file size");

  EmbeddingMatrix m;
  m.sample_ids.reserve(n);
  for (std::uint64_t r = 0; r < n; ++r) {
    const auto len = in.get<std::uint32_t>("id length");
    m.sample_ids.emplace_back(in.take(len, "sample id"));
  }
  if (in.remaining() != n * d * sizeof(double))
    throw FormatError("payload size mismatch: expected " + std::to_string(n * d * sizeof(double)) + " bytes, found " +
                      std::to_string(in.remaining()));
  m.values.resize(static_cast<Index>(n), static_cast<Index>(d));
  auto payload = in.take(n * d * sizeof(double), "values");
  std::memcpy(m.values.data(), payload.data(), payload.size());
  m.validate();
  return m;
}

std::string format_binary_embeddings(const EmbeddingMatrix& m) {
  m.validate();
  std::string out;
  out.append(kBinaryMagic, 4);
  put(out, kBinaryVersion);
  put(out, static_cast<std::uint64_t>(m.n_samples()));
  put(out, static_cast<std::uint64_t>(m.dim()));
  for (const auto& id : m.sample_ids) {
    put(out, static_cast<std::uint32_t>(id.size()));
    out += id;
  }
  out.append(reinterpret_cast<const char*>(m.values.data()),
             static_cast<std::size_t>(m.values.size()) * sizeof(double));
  return out;
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  const std::string bytes = slurp(path);
  if (format == EmbeddingFormat::detect)
    format = bytes.size() >= 4 && std::memcmp(bytes.data(), kBinaryMagic, 4) == 0 ? EmbeddingFormat::binary
                                                                                   : EmbeddingFormat::text;
  try {
    return format == EmbeddingFormat::binary ? parse_binary_embeddings(bytes) : parse_text_embeddings(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.row());
  }
}

void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path, EmbeddingFormat format) {
  const std::string bytes =
      format == EmbeddingFormat::binary ? format_binary_embeddings(m) : format_text_embeddings(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

void pair_check(const EmbeddingMatrix& x, const EmbeddingMatrix& y) {
  if (x.n_samples() != y.n_samples())
    throw Error("sample count mismatch: " + std::to_string(x.n_samples()) + " vs " + std::to_string(y.n_samples()));
  for (std::size_t i = 0; i < x.sample_ids.size(); ++i)
    if (x.sample_ids[i] != y.sample_ids[i])
      throw Error("sample id mismatch at index " + std::to_string(i) + ": '" + x.sample_ids[i] + "' vs '" +
                  y.sample_ids[i] + "'");
}

}  // namespace salman
