#include "lrmr/matrix_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lrmr/errors.hpp"

namespace lrmr {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

double parse_double(std::string_view token, const fs::path& path, std::size_t line) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) {
    token.remove_suffix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ArgumentError(path.string() + ":" + std::to_string(line) + ": bad number '" +
                        std::string(token) + "'");
  }
  return v;
}

}  // namespace

void write_csv(const Mat& x, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (j) out << ',';
      out << format_double(x(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Mat read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_double(rest.substr(0, comma), path, lineno));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ArgumentError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ArgumentError(path.string() + ": no data");
  Mat x(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = rows[i][j];
  if (!x.all_finite()) throw ArgumentError(path.string() + ": non-finite entry");
  return x;
}

nlohmann::json manifest_json(const Mat& x, const fs::path& csv_path) {
  return {{"rows", x.rows()}, {"cols", x.cols()}, {"path", csv_path.generic_string()}};
}

nlohmann::json write_manifest(const Mat& x, const fs::path& manifest_path,
                              const fs::path& csv_path) {
  write_csv(x, csv_path);
  const fs::path base = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
  fs::path stored = csv_path;
  std::error_code ec;
  const fs::path rel = fs::relative(csv_path, base, ec);
  if (!ec && !rel.empty()) stored = rel;
  nlohmann::json j = manifest_json(x, stored);
  if (manifest_path.has_parent_path()) fs::create_directories(manifest_path.parent_path());
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot open for writing: " + manifest_path.string());
  out << j.dump(2) << '\n';
  return j;
}

Mat load_manifest(const nlohmann::json& manifest, const fs::path& base_dir) {
  if (!manifest.contains("rows") || !manifest.contains("cols") || !manifest.contains("path")) {
    throw ArgumentError("matrix manifest needs rows, cols and path");
  }
  fs::path p = manifest.at("path").get<std::string>();
  if (p.is_relative()) p = base_dir / p;
  Mat x = read_csv(p);
  const auto rows = manifest.at("rows").get<std::size_t>();
  const auto cols = manifest.at("cols").get<std::size_t>();
  if (x.rows() != rows || x.cols() != cols) {
    throw ArgumentError(p.string() + ": manifest says " + std::to_string(rows) + "x" +
                        std::to_string(cols) + ", file holds " + std::to_string(x.rows()) + "x" +
                        std::to_string(x.cols()));
  }
  return x;
}

Mat read_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open for reading: " + manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(manifest_path.string() + ": " + e.what());
  }
  const fs::path base = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
  return load_manifest(j, base);
}

}  // namespace lrmr
