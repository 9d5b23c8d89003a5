#include "wcip/io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace wcip {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    out.append(bytes.data(), sizeof(T));
  } else {
    out.append(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw FileFormatError("observation file is truncated");
    std::array<char, sizeof(T)> raw;
    std::memcpy(raw.data(), bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    pos_ += sizeof(T);
    return std::bit_cast<T>(raw);
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FileFormatError("observation file is truncated");
  }
  const char* data() const { return bytes_.data() + pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::string encode_observation_file(const ObservationFile& file) {
  const std::size_t n = file.node_ids.size();
  if (file.coords.size() != n || file.mask.size() != n) throw ContractError("observation file arrays disagree in size");
  if (file.values.rows() != 3 * static_cast<Index>(n) || file.values.cols() != file.n_steps)
    throw ContractError("observation payload has the wrong shape");
  std::string out = "WCIP";
  put<std::uint32_t>(out, kObservationFileVersion);
  put<std::uint64_t>(out, n);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(file.n_steps));
  put<double>(out, file.dt);
  put<double>(out, file.noise);
  put<std::uint64_t>(out, file.seed);
  for (std::size_t i = 0; i < n; ++i) {
    put<std::uint64_t>(out, file.node_ids[i]);
    for (int a = 0; a < 3; ++a) put<double>(out, file.coords[i](a));
  }
  std::string bitmap((n + 7) / 8, '\0');
  for (std::size_t i = 0; i < n; ++i)
    if (file.mask[i]) bitmap[i / 8] = static_cast<char>(bitmap[i / 8] | (1 << (i % 8)));
  out += bitmap;
  put<std::uint32_t>(out, crc32_of(out.data(), out.size()));
  const double* v = file.values.data();
  for (Index i = 0; i < file.values.size(); ++i) put<double>(out, v[i]);
  return out;
}

ObservationFile decode_observation_file(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "WCIP") != 0) throw FileFormatError("bad magic, not an observation file");
  Reader r(bytes);
  r.skip(4);
  const auto version = r.get<std::uint32_t>();
  const auto n = r.get<std::uint64_t>();
  const auto n_steps = r.get<std::uint64_t>();
  ObservationFile f;
  f.dt = r.get<double>();
  f.noise = r.get<double>();
  f.seed = r.get<std::uint64_t>();
  // A node count that overruns the file leaves no checksum to compare against.
  if (n > bytes.size() / 32 || r.remaining() < n * 32 + (n + 7) / 8 + 4)
    throw ChecksumError("observation file header is corrupt or truncated");
  if (n_steps > bytes.size()) throw FileFormatError("observation file is truncated");
  f.node_ids.resize(n);
  f.coords.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.node_ids[i] = r.get<std::uint64_t>();
    for (int a = 0; a < 3; ++a) f.coords[i](a) = r.get<double>();
  }
  f.mask.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) f.mask[i] = (static_cast<unsigned char>(r.data()[i / 8]) >> (i % 8)) & 1;
  r.skip((n + 7) / 8);
  const std::size_t header_len = r.pos();
  const auto crc = r.get<std::uint32_t>();
  if (crc != crc32_of(bytes.data(), header_len)) throw ChecksumError("observation file header checksum mismatch");
  if (version != kObservationFileVersion)
    throw FileFormatError("unsupported observation file version " + std::to_string(version));

  f.n_steps = static_cast<Index>(n_steps);
  const std::size_t count = 3 * n * n_steps;
  if (r.remaining() != count * sizeof(double))
    throw FileFormatError(r.remaining() < count * sizeof(double) ? "observation payload is truncated"
                                                                 : "observation payload has trailing bytes");
  f.values.resize(3 * static_cast<Index>(n), f.n_steps);
  double* v = f.values.data();
  for (std::size_t i = 0; i < count; ++i) v[i] = r.get<double>();
  return f;
}

void write_observation_file(const std::filesystem::path& path, const ObservationFile& file) {
  const std::string bytes = encode_observation_file(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

ObservationFile read_observation_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_observation_file(ss.str());
}

ObservationFile to_observation_file(const HybridDomain& domain, const ObservationSet& obs) {
  ObservationFile f;
  for (Index node : obs.trace.nodes) {
    f.node_ids.push_back(static_cast<std::uint64_t>(node));
    f.coords.push_back(domain.grid.position(node));
  }
  f.mask = obs.mask;
  f.n_steps = obs.trace.n_steps;
  f.dt = obs.trace.dt;
  f.noise = obs.noise_level;
  f.seed = obs.seed;
  f.values = obs.trace.values;
  return f;
}

ObservationSet to_observation_set(const HybridDomain& domain, const ObservationFile& file, double zeta_fraction) {
  TraceRecord trace;
  const auto& top = domain.boundary.top_nodes;
  std::vector<char> is_top(static_cast<std::size_t>(domain.grid.node_count()), 0);
  for (Index t : top) is_top[static_cast<std::size_t>(t)] = 1;
  for (std::size_t i = 0; i < file.node_ids.size(); ++i) {
    const auto id = static_cast<Index>(file.node_ids[i]);
    if (id < 0 || id >= domain.grid.node_count() || !is_top[static_cast<std::size_t>(id)])
      throw ConfigError("observation node " + std::to_string(file.node_ids[i]) + " is not on the top boundary");
    if ((domain.grid.position(id) - file.coords[i]).norm() > 1e-9 * (1.0 + file.coords[i].norm()))
      throw ConfigError("observation node coordinates do not match the configured domain");
    trace.nodes.push_back(id);
  }
  trace.dt = file.dt;
  trace.n_steps = file.n_steps;
  trace.values = file.values;
  ObservationSet obs = make_observation_set(domain, std::move(trace), zeta_fraction);
  obs.mask = file.mask;
  obs.noise_level = file.noise;
  obs.seed = file.seed;
  return obs;
}

}  // namespace wcip
