#pragma once

// Matrix Market reader/writer: coordinate format for sparse matrices, array
// format for dense ones. Fields real/integer/double, symmetry general or
// symmetric. Banner keywords are case-insensitive; indices are 1-based.

#include "rails/matrix_core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace rails::mm {

enum class Format { coordinate, array };
enum class Symmetry { general, symmetric };

struct Header {
    Format format = Format::coordinate;
    Symmetry symmetry = Symmetry::general;
};

namespace detail {

inline std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool blank(const std::string& line)
{
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

class Lines {
public:
    explicit Lines(std::istream& in) : in_(in) {}

    // Next non-comment, non-blank line; false at end of stream.
    bool next(std::string& line)
    {
        while (std::getline(in_, line)) {
            ++number_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (blank(line) || line.front() == '%') continue;
            return true;
        }
        return false;
    }

    std::size_t number() const { return number_; }
    std::istream& stream() { return in_; }
    void count() { ++number_; }

private:
    std::istream& in_;
    std::size_t number_ = 0;
};

[[noreturn]] inline void fail(std::size_t line, const std::string& what)
{
    throw Error(ErrorKind::parse, "Matrix Market line " + std::to_string(line) + ": " + what);
}

inline double parse_real(const std::string& tok, std::size_t line)
{
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') fail(line, "malformed number '" + tok + "'");
    if (!std::isfinite(v)) fail(line, "non-finite value '" + tok + "'");
    return v;
}

inline long long parse_int(const std::string& tok, std::size_t line)
{
    long long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) fail(line, "malformed integer '" + tok + "'");
    return v;
}

inline std::vector<std::string> tokens(const std::string& line)
{
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string t; ss >> t;) out.push_back(t);
    return out;
}

inline Header parse_banner(std::istream& in, Lines& lines)
{
    std::string banner;
    if (!std::getline(in, banner)) fail(1, "empty input");
    lines.count();
    if (!banner.empty() && banner.back() == '\r') banner.pop_back();
    auto t = tokens(banner);
    if (t.size() != 5 || lower(t[0]) != "%%matrixmarket") fail(1, "missing %%MatrixMarket banner");
    if (lower(t[1]) != "matrix") fail(1, "unsupported object '" + t[1] + "'");
    Header h;
    std::string fmt = lower(t[2]);
    if (fmt == "coordinate")
        h.format = Format::coordinate;
    else if (fmt == "array")
        h.format = Format::array;
    else
        fail(1, "unsupported format '" + t[2] + "'");
    std::string field = lower(t[3]);
    if (field != "real" && field != "integer" && field != "double") fail(1, "unsupported field '" + t[3] + "'");
    std::string sym = lower(t[4]);
    if (sym == "general")
        h.symmetry = Symmetry::general;
    else if (sym == "symmetric")
        h.symmetry = Symmetry::symmetric;
    else
        fail(1, "unsupported symmetry '" + t[4] + "'");
    return h;
}

struct Parsed {
    Header header;
    Index rows = 0;
    Index cols = 0;
    std::vector<Triplet> entries;
};

inline Parsed parse(std::istream& in)
{
    Lines lines(in);
    Parsed p;
    p.header = parse_banner(in, lines);
    const bool sym = p.header.symmetry == Symmetry::symmetric;

    std::string line;
    if (!lines.next(line)) fail(lines.number(), "missing size line");
    auto size = tokens(line);
    if (p.header.format == Format::coordinate) {
        if (size.size() != 3) fail(lines.number(), "coordinate size line needs rows cols nnz");
        long long r = parse_int(size[0], lines.number());
        long long c = parse_int(size[1], lines.number());
        long long nnz = parse_int(size[2], lines.number());
        if (r < 0 || c < 0 || nnz < 0) fail(lines.number(), "negative size");
        if (sym && r != c) fail(lines.number(), "symmetric matrix must be square");
        p.rows = r;
        p.cols = c;
        p.entries.reserve(static_cast<std::size_t>(sym ? 2 * nnz : nnz));
        for (long long k = 0; k < nnz; ++k) {
            if (!lines.next(line)) fail(lines.number(), "expected " + std::to_string(nnz) + " entries, got " + std::to_string(k));
            auto t = tokens(line);
            if (t.size() != 3) fail(lines.number(), "entry needs row col value");
            long long i = parse_int(t[0], lines.number());
            long long j = parse_int(t[1], lines.number());
            double v = parse_real(t[2], lines.number());
            if (i < 1 || i > r || j < 1 || j > c) fail(lines.number(), "index out of range");
            if (sym && j > i) fail(lines.number(), "symmetric storage requires lower-triangle entries");
            p.entries.push_back({i - 1, j - 1, v});
            if (sym && i != j) p.entries.push_back({j - 1, i - 1, v});
        }
    } else {
        if (size.size() != 2) fail(lines.number(), "array size line needs rows cols");
        long long r = parse_int(size[0], lines.number());
        long long c = parse_int(size[1], lines.number());
        if (r < 0 || c < 0) fail(lines.number(), "negative size");
        if (sym && r != c) fail(lines.number(), "symmetric matrix must be square");
        p.rows = r;
        p.cols = c;
        for (long long j = 0; j < c; ++j)
            for (long long i = sym ? j : 0; i < r; ++i) {
                if (!lines.next(line)) fail(lines.number(), "array data ended early");
                auto t = tokens(line);
                if (t.size() != 1) fail(lines.number(), "array entry needs exactly one value");
                double v = parse_real(t[0], lines.number());
                p.entries.push_back({static_cast<Index>(i), static_cast<Index>(j), v});
                if (sym && i != j) p.entries.push_back({static_cast<Index>(j), static_cast<Index>(i), v});
            }
    }
    if (lines.next(line)) fail(lines.number(), "unexpected trailing data");
    return p;
}

inline std::string format_real(double v)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
    return out;
}

} // namespace detail

inline SparseMatrix parse_sparse(std::istream& in)
{
    auto p = detail::parse(in);
    return SparseMatrix(p.rows, p.cols, p.entries);
}

/// Accepts either array or coordinate input.
inline Dense parse_dense(std::istream& in)
{
    auto p = detail::parse(in);
    Dense d = Dense::Zero(p.rows, p.cols);
    for (const auto& t : p.entries) d(t.row, t.col) += t.value;
    return d;
}

inline void write_sparse(std::ostream& out, const SparseMatrix& a)
{
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
    for (const auto& t : a.triplets()) out << t.row + 1 << ' ' << t.col + 1 << ' ' << detail::format_real(t.value) << '\n';
}

inline void write_dense(std::ostream& out, const Dense& d)
{
    out << "%%MatrixMarket matrix array real general\n";
    out << d.rows() << ' ' << d.cols() << '\n';
    for (Index j = 0; j < d.cols(); ++j)
        for (Index i = 0; i < d.rows(); ++i) out << detail::format_real(d(i, j)) << '\n';
}

inline SparseMatrix read_sparse(const std::filesystem::path& path)
{
    auto in = detail::open_in(path);
    return parse_sparse(in);
}

inline Dense read_dense(const std::filesystem::path& path)
{
    auto in = detail::open_in(path);
    return parse_dense(in);
}

inline void save_sparse(const std::filesystem::path& path, const SparseMatrix& a)
{
    auto out = detail::open_out(path);
    write_sparse(out, a);
    if (!out) throw Error(ErrorKind::io, "write to '" + path.string() + "' failed");
}

inline void save_dense(const std::filesystem::path& path, const Dense& d)
{
    auto out = detail::open_out(path);
    write_dense(out, d);
    if (!out) throw Error(ErrorKind::io, "write to '" + path.string() + "' failed");
}

} // namespace rails::mm
