#pragma once

#include "rmtsnr/numerics.hpp"
#include "rmtsnr/rmt_core.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rmtsnr::io {

// Plain-text CSV: one matrix row per line, comma separated decimals. Blank lines and
// lines starting with '#' are ignored. Errors carry 1-based line/column context.

DenseMatrix parse_matrix(std::istream& in);
DenseMatrix read_matrix(const std::filesystem::path& path);

/// Accepts a single row or a single column.
std::vector<double> read_vector(const std::filesystem::path& path);

/// Psi file: either a dense M x M matrix or one line "diag: q1, q2, ...".
CorrelationSpectrum parse_correlation(std::istream& in);
CorrelationSpectrum read_correlation(const std::filesystem::path& path);

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m);
/// One value per line.
void write_vector(const std::filesystem::path& path, std::span<const double> v);
void write_correlation(const std::filesystem::path& path, const CorrelationSpectrum& spec);

/// Shortest text that parses back to the same double.
std::string format_exact(double v);
/// 12 significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_value(double v);

/// Throws IoError when the file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace rmtsnr::io
