#include "mslbm/io.hpp"

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mslbm {

namespace {

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    return out;
}

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
    throw parse_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& tok, const std::filesystem::path& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) fail_line(path, line, "trailing characters in number '" + tok + "'");
        return v;
    } catch (const parse_error&) {
        throw;
    } catch (const std::exception&) {
        fail_line(path, line, "not a number: '" + tok + "'");
    }
}

long parse_long(const std::string& tok, const std::filesystem::path& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const long v = std::stol(tok, &used);
        if (used != tok.size()) fail_line(path, line, "trailing characters in integer '" + tok + "'");
        return v;
    } catch (const parse_error&) {
        throw;
    } catch (const std::exception&) {
        fail_line(path, line, "not an integer: '" + tok + "'");
    }
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string tok;
    std::istringstream ss(line);
    while (std::getline(ss, tok, sep)) out.push_back(tok);
    return out;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

}  // namespace

std::string format_double(double v) {
    std::array<char, 40> buf;
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

Matrix read_dense_csv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() && in.eof()) break;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) fail_line(path, lineno, "empty line");
        std::vector<double> row;
        for (const std::string& tok : split(line, ',')) row.push_back(parse_double(tok, path, lineno));
        if (!rows.empty() && row.size() != rows.front().size()) {
            fail_line(path, lineno, "inconsistent column count");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw parse_error(path.string() + ": empty matrix file");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

void write_dense_csv(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out = open_out(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw io_error("write failed: " + path.string());
}

Vector read_vector_csv(const std::filesystem::path& path) {
    const Matrix m = read_dense_csv(path);
    if (m.cols() != 1) throw parse_error(path.string() + ": expected a single column");
    return m.col(0);
}

void write_vector_csv(const std::filesystem::path& path, const Vector& v) {
    write_dense_csv(path, v);
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (in.eof()) break;
            fail_line(path, lineno, "empty line");
        }
        labels.push_back(static_cast<int>(parse_long(line, path, lineno)));
    }
    return labels;
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<int>& labels) {
    std::ofstream out = open_out(path);
    for (int lab : labels) out << lab << '\n';
    if (!out) throw io_error("write failed: " + path.string());
}

namespace {

constexpr char kMagic[4] = {'M', 'S', 'L', 'B'};

void put_u32_le(std::ofstream& out, std::uint32_t v) {
    const std::array<unsigned char, 4> b = {static_cast<unsigned char>(v & 0xff),
                                            static_cast<unsigned char>((v >> 8) & 0xff),
                                            static_cast<unsigned char>((v >> 16) & 0xff),
                                            static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32_le(std::ifstream& in) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

Matrix read_dense_binary(const std::filesystem::path& path) {
    std::ifstream in = open_in(path, std::ios::in | std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw parse_error(path.string() + ": byte 0: bad magic (expected MSLB)");
    }
    const std::uint32_t n = get_u32_le(in);
    get_u32_le(in);  // flags
    get_u32_le(in);  // reserved
    if (!in) throw parse_error(path.string() + ": byte 4: truncated header");
    Matrix m(n, n);
    std::vector<double> row(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) {
            throw parse_error(path.string() + ": byte " +
                              std::to_string(16 + static_cast<std::uint64_t>(i) * n * 8) +
                              ": truncated payload");
        }
        for (std::uint32_t j = 0; j < n; ++j) m(i, j) = row[j];
    }
    return m;
}

void write_dense_binary(const std::filesystem::path& path, const Matrix& m) {
    if (m.rows() != m.cols()) throw invalid_parameter("write_dense_binary: matrix must be square");
    std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
    out.write(kMagic, 4);
    put_u32_le(out, static_cast<std::uint32_t>(m.rows()));
    put_u32_le(out, 0);
    put_u32_le(out, 0);
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
    if (!out) throw io_error("write failed: " + path.string());
}

namespace {

struct MmHeader {
    bool symmetric = false;
    bool pattern = false;
    int rows = 0;
    int cols = 0;
    long nnz = 0;
    std::size_t data_start_line = 0;
};

MmHeader read_mm_header(std::ifstream& in, const std::filesystem::path& path) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw parse_error(path.string() + ":1: empty file");
    ++lineno;
    {
        std::vector<std::string> tok = split_ws(line);
        if (tok.size() < 5 || tok[0] != "%%MatrixMarket" || tok[1] != "matrix" ||
            tok[2] != "coordinate") {
            fail_line(path, lineno, "expected '%%MatrixMarket matrix coordinate ...'");
        }
        MmHeader h;
        if (tok[3] != "real" && tok[3] != "integer" && tok[3] != "pattern") {
            fail_line(path, lineno, "unsupported field type '" + tok[3] + "'");
        }
        h.pattern = tok[3] == "pattern";
        if (tok[4] == "symmetric") {
            h.symmetric = true;
        } else if (tok[4] == "general") {
            h.symmetric = false;
        } else {
            fail_line(path, lineno, "unsupported symmetry '" + tok[4] + "'");
        }
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line[0] == '%') continue;
            std::vector<std::string> dims = split_ws(line);
            if (dims.size() != 3) fail_line(path, lineno, "expected 'rows cols nnz'");
            h.rows = static_cast<int>(parse_long(dims[0], path, lineno));
            h.cols = static_cast<int>(parse_long(dims[1], path, lineno));
            h.nnz = parse_long(dims[2], path, lineno);
            h.data_start_line = lineno;
            return h;
        }
        fail_line(path, lineno, "missing size line");
    }
}

}  // namespace

SparseDeviation read_matrix_market_sym(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    MmHeader h = read_mm_header(in, path);
    if (h.rows != h.cols) throw parse_error(path.string() + ": symmetric matrix must be square");
    SparseDeviation out;
    out.n = h.rows;
    std::string line;
    std::size_t lineno = h.data_start_line;
    long seen = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> tok = split_ws(line);
        const std::size_t expect = h.pattern ? 2 : 3;
        if (tok.size() != expect) fail_line(path, lineno, "expected " + std::to_string(expect) + " fields");
        int i = static_cast<int>(parse_long(tok[0], path, lineno)) - 1;
        int j = static_cast<int>(parse_long(tok[1], path, lineno)) - 1;
        const double v = h.pattern ? 1.0 : parse_double(tok[2], path, lineno);
        if (i < 0 || i >= h.rows || j < 0 || j >= h.cols) fail_line(path, lineno, "index out of range");
        if (i > j) std::swap(i, j);
        if (v != 0.0) out.entries.push_back({i, j, v});
        ++seen;
    }
    if (seen != h.nnz) {
        throw parse_error(path.string() + ": entry count " + std::to_string(seen) +
                          " does not match header nnz " + std::to_string(h.nnz));
    }
    out.validate();  // rejects duplicates
    return out;
}

void write_matrix_market_sym(const std::filesystem::path& path, const SparseDeviation& s) {
    std::vector<SparseEntry> entries = s.entries;
    std::sort(entries.begin(), entries.end(), [](const SparseEntry& a, const SparseEntry& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    std::ofstream out = open_out(path);
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    out << s.n << ' ' << s.n << ' ' << entries.size() << '\n';
    // store the lower triangle: row >= col in 1-based output
    for (const auto& e : entries) {
        out << (e.j + 1) << ' ' << (e.i + 1) << ' ' << format_double(e.value) << '\n';
    }
    if (!out) throw io_error("write failed: " + path.string());
}

std::vector<CountEntry> read_matrix_market_counts(const std::filesystem::path& path, int* n_out) {
    std::ifstream in = open_in(path);
    MmHeader h = read_mm_header(in, path);
    if (h.rows != h.cols) throw parse_error(path.string() + ": counts matrix must be square");
    if (n_out) *n_out = h.rows;
    std::vector<CountEntry> out;
    std::string line;
    std::size_t lineno = h.data_start_line;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> tok = split_ws(line);
        const std::size_t expect = h.pattern ? 2 : 3;
        if (tok.size() != expect) fail_line(path, lineno, "expected " + std::to_string(expect) + " fields");
        int i = static_cast<int>(parse_long(tok[0], path, lineno)) - 1;
        int j = static_cast<int>(parse_long(tok[1], path, lineno)) - 1;
        long c = h.pattern ? 1 : parse_long(tok[2], path, lineno);
        if (i < 0 || i >= h.rows || j < 0 || j >= h.cols) fail_line(path, lineno, "index out of range");
        if (c < 0) fail_line(path, lineno, "negative count");
        if (i > j) std::swap(i, j);
        if (c > 0) out.push_back({i, j, c});
    }
    return out;
}

SymMatrix read_sym_matrix(const std::filesystem::path& path, MatrixFormat format) {
    switch (format) {
        case MatrixFormat::dense_csv:
            return SymMatrix(read_dense_csv(path));
        case MatrixFormat::dense_binary:
            return SymMatrix(read_dense_binary(path));
        case MatrixFormat::matrix_market:
            return SymMatrix(read_matrix_market_sym(path).dense());
    }
    throw invalid_parameter("read_sym_matrix: unknown format");
}

void write_sym_matrix(const std::filesystem::path& path, const SymMatrix& m, MatrixFormat format) {
    switch (format) {
        case MatrixFormat::dense_csv:
            write_dense_csv(path, m.mat());
            return;
        case MatrixFormat::dense_binary:
            write_dense_binary(path, m.mat());
            return;
        case MatrixFormat::matrix_market:
            write_matrix_market_sym(path, SparseDeviation::from_dense(m.mat()));
            return;
    }
    throw invalid_parameter("write_sym_matrix: unknown format");
}

std::vector<std::pair<int, int>> read_pairs_csv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::vector<std::pair<int, int>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> tok = split(line, ',');
        if (tok.size() != 2) fail_line(path, lineno, "expected two columns");
        out.emplace_back(static_cast<int>(parse_long(tok[0], path, lineno)),
                         static_cast<int>(parse_long(tok[1], path, lineno)));
    }
    return out;
}

std::vector<AnnotatedPair> read_annotated_pairs_csv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::vector<AnnotatedPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> tok = split(line, ',');
        if (tok.size() != 3) fail_line(path, lineno, "expected three columns");
        out.push_back({static_cast<int>(parse_long(tok[0], path, lineno)),
                       static_cast<int>(parse_long(tok[1], path, lineno)),
                       parse_double(tok[2], path, lineno)});
    }
    return out;
}

}  // namespace mslbm
