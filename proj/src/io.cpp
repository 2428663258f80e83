#include "dagreg/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "dagreg/error.hpp"

namespace dagreg {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  return out;
}

template <typename Mat, typename Format>
void write_rows(const Mat& m, const std::filesystem::path& path, Format&& format) {
  auto out = open_out(path);
  std::string line;
  char buf[40];
  for (arma::uword i = 0; i < m.n_rows; ++i) {
    line.clear();
    for (arma::uword j = 0; j < m.n_cols; ++j) {
      if (j) line += ',';
      format(buf, sizeof buf, m(i, j));
      line += buf;
    }
    line += '\n';
    out << line;
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace

void write_csv(const arma::mat& m, const std::filesystem::path& path) {
  write_rows(m, path, [](char* buf, std::size_t size, double v) {
    std::snprintf(buf, size, "%.17g", v);
  });
}

void write_csv(const arma::umat& m, const std::filesystem::path& path) {
  write_rows(m, path, [](char* buf, std::size_t size, arma::uword v) {
    std::snprintf(buf, size, "%llu", static_cast<unsigned long long>(v));
  });
}

arma::mat read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || errno == ERANGE) {
        throw Error(ErrorKind::Validation, path.string() + ":" + std::to_string(line_no) +
                                               ": not a number: '" + field + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::Validation,
                  path.string() + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  arma::mat m(rows.size(), rows.front().size());
  for (arma::uword i = 0; i < m.n_rows; ++i) {
    for (arma::uword j = 0; j < m.n_cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Validation, path.string() + ": " + e.what());
  }
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dagreg
