#include "rmtsnr/io.hpp"

#include "rmtsnr/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rmtsnr::io {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(std::string_view field, std::size_t line, std::size_t column) {
    const std::string_view t = trim(field);
    if (t.empty()) throw ParseError("empty field", line, column);
    double v = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw ParseError("not a number: '" + std::string(t) + "'", line, column);
    if (!std::isfinite(v)) throw ParseError("non-finite value", line, column);
    return v;
}

// Splits one CSV line; column numbers are 1-based character offsets of each field.
std::vector<double> parse_row(std::string_view text, std::size_t line, std::size_t offset = 0) {
    std::vector<double> row;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = text.find(',', start);
        const std::string_view field =
            text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                               : comma - start);
        row.push_back(parse_number(field, line, offset + start + 1));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return row;
}

bool skip_line(std::string_view t) { return t.empty() || t.front() == '#'; }

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

template <typename F>
auto with_file_context(const std::filesystem::path& path, F&& f) {
    try {
        return f();
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace

DenseMatrix parse_matrix(std::istream& in) {
    std::vector<double> entries;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string raw;
    for (std::size_t line = 1; std::getline(in, raw); ++line) {
        if (skip_line(trim(raw))) continue;
        std::vector<double> row = parse_row(raw, line);
        if (rows == 0) {
            cols = row.size();
        } else if (row.size() != cols) {
            throw ParseError("row has " + std::to_string(row.size()) + " columns, expected " +
                                 std::to_string(cols),
                             line);
        }
        entries.insert(entries.end(), row.begin(), row.end());
        ++rows;
    }
    if (rows == 0) throw ParseError("no data rows");
    return DenseMatrix(rows, cols, std::move(entries));
}

DenseMatrix read_matrix(const std::filesystem::path& path) {
    auto in = open_input(path);
    return with_file_context(path, [&] { return parse_matrix(in); });
}

std::vector<double> read_vector(const std::filesystem::path& path) {
    const DenseMatrix m = read_matrix(path);
    if (m.rows() != 1 && m.cols() != 1) {
        throw ParseError(path.string() + ": expected a single row or column, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    return {m.entries().begin(), m.entries().end()};
}

CorrelationSpectrum parse_correlation(std::istream& in) {
    std::vector<std::string> lines;
    for (std::string raw; std::getline(in, raw);) lines.push_back(std::move(raw));

    std::size_t first = 0;
    while (first < lines.size() && skip_line(trim(lines[first]))) ++first;
    if (first == lines.size()) throw ParseError("no data rows");

    constexpr std::string_view kDiag = "diag:";
    const std::string& head = lines[first];
    if (trim(head).starts_with(kDiag)) {
        const std::size_t offset = head.find(kDiag) + kDiag.size();
        std::vector<double> q = parse_row(std::string_view(head).substr(offset), first + 1, offset);
        for (std::size_t i = first + 1; i < lines.size(); ++i)
            if (!skip_line(trim(lines[i])))
                throw ParseError("diagonal correlation must be a single line", i + 1);
        return CorrelationSpectrum::from_diagonal(std::move(q));
    }

    std::stringstream buffer;
    for (const auto& l : lines) buffer << l << '\n';
    DenseMatrix psi = parse_matrix(buffer);
    if (!psi.square()) {
        throw DimensionError("correlation matrix must be square, got " +
                             std::to_string(psi.rows()) + "x" + std::to_string(psi.cols()));
    }
    return CorrelationSpectrum::from_matrix(psi);
}

CorrelationSpectrum read_correlation(const std::filesystem::path& path) {
    auto in = open_input(path);
    return with_file_context(path, [&] { return parse_correlation(in); });
}

std::string format_exact(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
    return std::string(buf, ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m) {
    std::string text;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) text += ',';
            text += format_exact(m(i, j));
        }
        text += '\n';
    }
    write_text(path, text);
}

void write_vector(const std::filesystem::path& path, std::span<const double> v) {
    std::string text;
    for (double x : v) text += format_exact(x) + '\n';
    write_text(path, text);
}

void write_correlation(const std::filesystem::path& path, const CorrelationSpectrum& spec) {
    if (!spec.is_diagonal()) {
        write_matrix(path, spec.supplied_matrix());
        return;
    }
    std::string text = "diag:";
    const auto& q = spec.eigenvalues();
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (i) text += ',';
        text += format_exact(q[i]);
    }
    write_text(path, text + '\n');
}

} // namespace rmtsnr::io
