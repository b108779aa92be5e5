#pragma once

// Tensor and model file formats.
//
// Text tensor:   line 1 = order N, line 2 = N dimensions, then all values
//                whitespace-separated in first-index-fastest order.
// Binary tensor: 8-byte magic "NCPDTNS1", u64 order, order x u64 dims, then
//                the little-endian f64 payload in first-index-fastest order.
// Text model:    line 1 = order N and rank R, then for each factor a line
//                "rows R" followed by its column-major values.
//
// Values are written with 17 significant digits so text files round-trip.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "neurocpd/tensor.hpp"

namespace neurocpd {

enum class TensorFormat { text, binary };

inline constexpr std::array<char, 8> kBinaryMagic{'N', 'C', 'P', 'D', 'T', 'N', 'S', '1'};

void write_tensor_text(std::ostream& os, const DenseTensor& t);
DenseTensor read_tensor_text(std::istream& is);

void write_tensor_binary(std::ostream& os, const DenseTensor& t);
DenseTensor read_tensor_binary(std::istream& is);

/// Writes `.bin` paths in the binary format and everything else as text.
void save_tensor(const std::filesystem::path& path, const DenseTensor& t);
void save_tensor(const std::filesystem::path& path, const DenseTensor& t, TensorFormat format);
/// Detects the format from the leading magic bytes.
DenseTensor load_tensor(const std::filesystem::path& path);

void write_model_text(std::ostream& os, const KruskalModel& model);
KruskalModel read_model_text(std::istream& is);
void save_model(const std::filesystem::path& path, const KruskalModel& model);
KruskalModel load_model(const std::filesystem::path& path);

/// Flat "key = value" records, one per line, keys sorted.
void save_key_values(const std::filesystem::path& path,
                     const std::map<std::string, std::string>& values);
std::map<std::string, std::string> load_key_values(const std::filesystem::path& path);

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace neurocpd
