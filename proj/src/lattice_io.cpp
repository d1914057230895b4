#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "surfield/error.hpp"
#include "surfield/lattice.hpp"

namespace surfield {

namespace {

static_assert(std::endian::native == std::endian::little, "SRF1 I/O assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'R', 'F', '1'};
constexpr std::uint16_t kVersion = 1;

template <class T>
void put(std::vector<unsigned char>& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  template <class T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw FormatError(std::string("SRF1: truncated while reading ") + what + " at byte " +
                        std::to_string(pos_));
    }
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r' && c != ' ' && c != '\t') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line, std::size_t col) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last) {
    throw FormatError(path + ":" + std::to_string(line) + ": column " + std::to_string(col) + ": cannot parse '" +
                      s + "' as a number");
  }
  return v;
}

}  // namespace

std::vector<unsigned char> encode_srf1(const FieldEnsemble& ensemble) {
  const auto& dom = ensemble.domain();
  const std::size_t n = dom.size();
  const std::size_t F = ensemble.n_fields();
  std::vector<unsigned char> out;
  out.reserve(4 + 2 + 1 + 8 + 8 * n * (dom.dim() + F) + 4);
  out.insert(out.end(), kMagic, kMagic + 4);
  put<std::uint16_t>(out, kVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(dom.dim()));
  put<std::uint64_t>(out, n);
  for (double c : dom.coords()) put<double>(out, c);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(F));
  for (std::size_t i = 0; i < F; ++i) {
    for (std::size_t v = 0; v < n; ++v) put<double>(out, ensemble.value(v, i));
  }
  return out;
}

FieldEnsemble decode_srf1(std::span<const unsigned char> bytes) {
  Reader r(bytes);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.get<std::uint8_t>("magic"));
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("SRF1: bad magic (expected 'SRF1')");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kVersion) {
    throw FormatError("SRF1: unsupported format version " + std::to_string(version));
  }
  const int dim = r.get<std::uint8_t>("dimension");
  if (dim < 1 || dim > kMaxDim) throw FormatError("SRF1: dimension " + std::to_string(dim) + " not in 1..3");
  const auto n = r.get<std::uint64_t>("voxel count");
  if (n == 0) throw FormatError("SRF1: empty voxel set");
  if (n > r.remaining() / (8 * static_cast<std::size_t>(dim))) {
    throw FormatError("SRF1: voxel count " + std::to_string(n) + " exceeds file size");
  }
  std::vector<double> coords(n * dim);
  for (double& c : coords) c = r.get<double>("coordinates");
  std::uint32_t F = 1;
  if (r.remaining() == 8 * n) {
    // single field written without a field-count block
    F = 1;
  } else {
    F = r.get<std::uint32_t>("field count");
  }
  if (F == 0) throw FormatError("SRF1: field count is zero");
  if (r.remaining() != 8 * n * F) {
    throw FormatError("SRF1: expected " + std::to_string(8 * n * F) + " bytes of field data, found " +
                      std::to_string(r.remaining()));
  }
  std::vector<double> data(n * F);
  for (std::size_t i = 0; i < F; ++i) {
    for (std::size_t v = 0; v < n; ++v) data[v * F + i] = r.get<double>("field values");
  }
  auto dom = std::make_shared<const VoxelSet>(dim, std::move(coords));
  return FieldEnsemble(std::move(dom), F, std::move(data));
}

void write_srf1(const std::string& path, const FieldEnsemble& ensemble) {
  const auto bytes = encode_srf1(ensemble);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write to '" + path + "' failed");
}

FieldEnsemble read_srf1(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_srf1(bytes);
}

void write_csv(const std::string& path, const FieldEnsemble& ensemble) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  const auto& dom = ensemble.domain();
  const int dim = dom.dim();
  const std::size_t F = ensemble.n_fields();
  for (int d = 0; d < dim; ++d) f << 'x' << (d + 1) << ',';
  if (F == 1) {
    f << "value\n";
  } else {
    for (std::size_t i = 0; i < F; ++i) f << "field_" << i << (i + 1 < F ? "," : "\n");
  }
  f.precision(17);
  for (std::size_t v = 0; v < dom.size(); ++v) {
    for (int d = 0; d < dim; ++d) f << dom.coord(v, d) << ',';
    for (std::size_t i = 0; i < F; ++i) f << ensemble.value(v, i) << (i + 1 < F ? "," : "\n");
  }
  if (!f) throw Error("write to '" + path + "' failed");
}

FieldEnsemble read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw FormatError(path + ": empty file");
  const auto header = split_csv(line);
  int dim = 0;
  while (dim < static_cast<int>(header.size()) && header[dim] == "x" + std::to_string(dim + 1)) ++dim;
  if (dim < 1 || dim > kMaxDim) throw FormatError(path + ":1: expected header x1[,x2[,x3]],value...");
  const std::size_t F = header.size() - dim;
  if (F == 0) throw FormatError(path + ":1: no value columns");
  std::vector<double> coords;
  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                        " columns, found " + std::to_string(cells.size()));
    }
    for (int d = 0; d < dim; ++d) coords.push_back(parse_double(cells[d], path, lineno, d + 1));
    for (std::size_t i = 0; i < F; ++i) values.push_back(parse_double(cells[dim + i], path, lineno, dim + i + 1));
  }
  if (coords.empty()) throw FormatError(path + ": no data rows");
  auto dom = std::make_shared<const VoxelSet>(dim, std::move(coords));
  return FieldEnsemble(std::move(dom), F, std::move(values));
}

}  // namespace surfield
