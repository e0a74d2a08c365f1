#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "krylov/errors.hpp"
#include "krylov/format.hpp"
#include "krylov/sparsekit.hpp"

namespace krylov {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

std::size_t parse_index(const std::string& tok, std::size_t line) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError("expected an integer, got '" + tok + "'", line);
  }
  if (pos != tok.size() || tok.front() == '-') throw ParseError("expected an integer, got '" + tok + "'", line);
  return static_cast<std::size_t>(v);
}

}  // namespace

CsrMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);

  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty file", 1);
  ++lineno;
  const auto header = split_ws(lower(line));
  if (header.size() != 5 || header[0] != "%%matrixmarket" || header[1] != "matrix" ||
      header[2] != "coordinate") {
    throw ParseError("expected '%%MatrixMarket matrix coordinate <field> <symmetry>'", lineno);
  }
  if (header[3] != "real" && header[3] != "integer") {
    throw ParseError("unsupported field '" + header[3] + "' (real or integer required)", lineno);
  }
  bool symmetric = false;
  if (header[4] == "symmetric") {
    symmetric = true;
  } else if (header[4] != "general") {
    throw ParseError("unsupported symmetry '" + header[4] + "'", lineno);
  }

  // Size line follows any number of comment lines.
  std::vector<std::string> size_tokens;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '%') continue;
    size_tokens = split_ws(line);
    if (!size_tokens.empty()) break;
  }
  if (size_tokens.size() != 3) throw ParseError("expected 'rows cols nnz'", lineno);
  const std::size_t rows = parse_index(size_tokens[0], lineno);
  const std::size_t cols = parse_index(size_tokens[1], lineno);
  const std::size_t entries = parse_index(size_tokens[2], lineno);
  if (rows != cols) throw ParseError("matrix must be square", lineno);

  std::vector<CsrMatrix::Triplet> triplets;
  triplets.reserve(symmetric ? 2 * entries : entries);
  std::size_t read = 0;
  while (read < entries && std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '%') continue;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 3) throw ParseError("expected 'row col value'", lineno);
    const std::size_t i = parse_index(tok[0], lineno);
    const std::size_t j = parse_index(tok[1], lineno);
    const auto v = parse_double(tok[2]);
    if (!v) throw ParseError("invalid value '" + tok[2] + "'", lineno);
    if (i < 1 || i > rows || j < 1 || j > cols) throw ParseError("index out of range", lineno);
    if (symmetric && j > i) throw ParseError("symmetric storage requires row >= col", lineno);
    triplets.push_back({i - 1, j - 1, *v});
    if (symmetric && i != j) triplets.push_back({j - 1, i - 1, *v});
    ++read;
  }
  if (read != entries) throw ParseError("file ended after " + std::to_string(read) + " of " +
                                            std::to_string(entries) + " entries",
                                        lineno);
  return CsrMatrix::from_triplets(rows, std::move(triplets));
}

void write_matrix_market(const std::filesystem::path& path, const CsrMatrix& a) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  const bool symmetric = a.is_symmetric();
  const auto offsets = a.row_offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();

  std::size_t count = 0;
  for (std::size_t i = 0; i < a.n(); ++i) {
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
      if (!symmetric || cols[k] <= i) ++count;
    }
  }
  out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << '\n';
  out << a.n() << ' ' << a.n() << ' ' << count << '\n';
  for (std::size_t i = 0; i < a.n(); ++i) {
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
      if (symmetric && cols[k] > i) continue;
      out << (i + 1) << ' ' << (cols[k] + 1) << ' ' << format_shortest(vals[k]) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace krylov
