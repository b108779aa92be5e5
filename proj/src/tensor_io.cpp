#include "neurocpd/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "neurocpd/error.hpp"

namespace neurocpd {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return v;
  }
}

template <typename T>
void write_le(std::ostream& os, T v) {
  v = byteswap_if_big(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("binary tensor: truncated input");
  return byteswap_if_big(v);
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

constexpr std::uint64_t kMaxOrder = 64;

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_tensor_text(std::ostream& os, const DenseTensor& t) {
  os << t.order() << '\n';
  for (std::size_t k = 0; k < t.order(); ++k) os << (k ? " " : "") << t.dim(k);
  os << '\n';
  std::size_t col = 0;
  for (double v : t.data()) {
    os << (col ? " " : "") << format_double(v);
    if (++col == t.dim(0)) {
      os << '\n';
      col = 0;
    }
  }
}

DenseTensor read_tensor_text(std::istream& is) {
  std::size_t order = 0;
  if (!(is >> order) || order == 0 || order > kMaxOrder) throw Error("text tensor: bad order");
  std::vector<std::size_t> shape(order);
  for (auto& d : shape)
    if (!(is >> d) || d == 0) throw Error("text tensor: bad dimension");
  std::size_t count = 1;
  for (std::size_t d : shape) count *= d;
  std::vector<double> data(count);
  std::string token;
  for (auto& v : data) {
    if (!(is >> token)) throw Error("text tensor: expected " + std::to_string(count) + " values");
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
      throw Error("text tensor: cannot parse value '" + token + "'");
  }
  if (is >> token) throw Error("text tensor: trailing data after payload");
  return DenseTensor(std::move(shape), std::move(data));
}

void write_tensor_binary(std::ostream& os, const DenseTensor& t) {
  os.write(kBinaryMagic.data(), kBinaryMagic.size());
  write_le<std::uint64_t>(os, t.order());
  for (std::size_t d : t.shape()) write_le<std::uint64_t>(os, d);
  for (double v : t.data()) write_le<double>(os, v);
}

DenseTensor read_tensor_binary(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kBinaryMagic) throw Error("binary tensor: bad magic");
  const auto order = read_le<std::uint64_t>(is);
  if (order == 0 || order > kMaxOrder) throw Error("binary tensor: bad order");
  std::vector<std::size_t> shape(order);
  std::size_t count = 1;
  for (auto& d : shape) {
    d = static_cast<std::size_t>(read_le<std::uint64_t>(is));
    if (d == 0) throw Error("binary tensor: bad dimension");
    count *= d;
  }
  std::vector<double> data(count);
  for (auto& v : data) v = read_le<double>(is);
  return DenseTensor(std::move(shape), std::move(data));
}

void save_tensor(const std::filesystem::path& path, const DenseTensor& t, TensorFormat format) {
  std::ostringstream os;
  if (format == TensorFormat::binary)
    write_tensor_binary(os, t);
  else
    write_tensor_text(os, t);
  write_file_atomic(path, os.str());
}

void save_tensor(const std::filesystem::path& path, const DenseTensor& t) {
  save_tensor(path, t, path.extension() == ".bin" ? TensorFormat::binary : TensorFormat::text);
}

DenseTensor load_tensor(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 8> head{};
  in.read(head.data(), head.size());
  const bool binary = in.gcount() == static_cast<std::streamsize>(head.size()) && head == kBinaryMagic;
  in.clear();
  in.seekg(0);
  return binary ? read_tensor_binary(in) : read_tensor_text(in);
}

void write_model_text(std::ostream& os, const KruskalModel& model) {
  os << model.order() << ' ' << model.rank() << '\n';
  for (const auto& f : model.factors()) {
    os << f.rows() << ' ' << f.cols() << '\n';
    std::size_t i = 0;
    for (double v : f.data()) {
      os << (i ? " " : "") << format_double(v);
      if (++i == f.rows()) {
        os << '\n';
        i = 0;
      }
    }
  }
}

KruskalModel read_model_text(std::istream& is) {
  std::size_t order = 0;
  std::size_t rank = 0;
  if (!(is >> order >> rank) || order == 0 || order > kMaxOrder || rank == 0)
    throw Error("model file: bad header");
  std::vector<Matrix> factors;
  std::string token;
  for (std::size_t n = 0; n < order; ++n) {
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!(is >> rows >> cols) || cols != rank || rows == 0) throw Error("model file: bad factor header");
    Matrix m(rows, cols);
    for (auto& v : m.data()) {
      if (!(is >> token)) throw Error("model file: truncated factor");
      const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
      if (res.ec != std::errc()) throw Error("model file: cannot parse '" + token + "'");
    }
    factors.push_back(std::move(m));
  }
  return KruskalModel(std::move(factors));
}

void save_model(const std::filesystem::path& path, const KruskalModel& model) {
  std::ostringstream os;
  write_model_text(os, model);
  write_file_atomic(path, os.str());
}

KruskalModel load_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_model_text(in);
}

void save_key_values(const std::filesystem::path& path,
                     const std::map<std::string, std::string>& values) {
  std::ostringstream os;
  for (const auto& [k, v] : values) os << k << " = " << v << '\n';
  write_file_atomic(path, os.str());
}

std::map<std::string, std::string> load_key_values(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::map<std::string, std::string> out;
  std::string line;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::out | std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace neurocpd
