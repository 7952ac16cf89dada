#include "apperf/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "apperf/error.hpp"

namespace apperf {

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.columns = columns;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  out.y.reserve(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    out.x.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
    out.y.push_back(y[rows[r]]);
  }
  return out;
}

namespace {

// Splits one record; pos advances past the record's line break. line counts
// physical lines so quoted newlines keep error positions right.
std::vector<std::string> read_record(std::string_view text, size_t& pos,
                                     int& line, const std::string& source) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  const int start_line = line;
  while (pos < text.size()) {
    char ch = text[pos];
    if (quoted) {
      if (ch == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          cur += '"';
          pos += 2;
          continue;
        }
        quoted = false;
      } else {
        if (ch == '\n') ++line;
        cur += ch;
      }
      ++pos;
      continue;
    }
    if (ch == '"') {
      if (!cur.empty() || was_quoted)
        throw DataError(source + ":" + std::to_string(line) +
                        ": stray quote inside a field");
      quoted = was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
      ++pos;
      ++line;
      fields.push_back(std::move(cur));
      return fields;
    } else if (was_quoted) {
      throw DataError(source + ":" + std::to_string(line) +
                      ": text after closing quote");
    } else {
      cur += ch;
    }
    ++pos;
  }
  if (quoted)
    throw DataError(source + ":" + std::to_string(start_line) +
                    ": unterminated quoted field");
  fields.push_back(std::move(cur));
  ++line;
  return fields;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

bool parse_number(const std::string& raw, double& out) {
  std::string s = trim(raw);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [p, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

Dataset parse_csv(std::string_view text, const std::string& label_column,
                  const std::string& source) {
  size_t pos = 0;
  int line = 1;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  if (pos >= text.size()) throw DataError(source + ": empty file, header required");
  std::vector<std::string> header = read_record(text, pos, line, source);
  for (auto& h : header) h = trim(h);
  auto it = std::find(header.begin(), header.end(), label_column);
  if (it == header.end())
    throw DataError(source + ": missing label column '" + label_column + "'");
  const int label_idx = static_cast<int>(it - header.begin());

  Dataset ds;
  for (int c = 0; c < static_cast<int>(header.size()); ++c)
    if (c != label_idx) ds.columns.push_back(header[c]);
  std::vector<std::vector<double>> rows;
  while (pos < text.size()) {
    const int row_line = line;
    std::vector<std::string> rec = read_record(text, pos, line, source);
    if (rec.size() == 1 && trim(rec[0]).empty()) continue;
    if (rec.size() != header.size())
      throw DataError(source + ":" + std::to_string(row_line) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(rec.size()));
    std::vector<double> vals;
    for (int c = 0; c < static_cast<int>(rec.size()); ++c) {
      double v;
      if (!parse_number(rec[c], v))
        throw DataError(source + ":" + std::to_string(row_line) + ": column '" +
                        header[c] + "': non-numeric value '" + rec[c] + "'");
      if (c == label_idx) {
        if (v != 0.0 && v != 1.0)
          throw DataError(source + ":" + std::to_string(row_line) +
                          ": non-binary label '" + trim(rec[c]) + "'");
        ds.y.push_back(static_cast<int>(v));
      } else {
        vals.push_back(v);
      }
    }
    rows.push_back(std::move(vals));
  }
  ds.x.resize(static_cast<Eigen::Index>(rows.size()),
              static_cast<Eigen::Index>(ds.columns.size()));
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows[r].size(); ++c)
      ds.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return ds;
}

Dataset load_csv(const std::filesystem::path& path,
                 const std::string& label_column) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str(), label_column, path.string());
}

void save_csv(const std::filesystem::path& path, const Dataset& ds,
              const std::string& label_column) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  for (const auto& c : ds.columns) f << field(c) << ",";
  f << field(label_column) << "\n";
  f << std::setprecision(17);
  for (int r = 0; r < ds.size(); ++r) {
    for (int c = 0; c < ds.features(); ++c) f << ds.x(r, c) << ",";
    f << ds.y[r] << "\n";
  }
}

Standardization fit_standardization(const Dataset& ds,
                                    std::vector<std::string>* warnings) {
  if (ds.size() == 0) throw DataError("cannot standardize an empty dataset");
  Standardization st;
  std::vector<double> mean, scale;
  for (int c = 0; c < ds.features(); ++c) {
    double m = ds.x.col(c).mean();
    double var = (ds.x.col(c).array() - m).square().mean();
    double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(m)))) {
      if (warnings)
        warnings->push_back("dropping zero-variance column '" + ds.columns[c] + "'");
      continue;
    }
    st.columns.push_back(ds.columns[c]);
    mean.push_back(m);
    scale.push_back(sd);
  }
  if (st.columns.empty()) throw DataError("no feature column has nonzero variance");
  st.mean = Eigen::Map<Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  st.scale = Eigen::Map<Vector>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  return st;
}

Dataset apply_standardization(const Dataset& ds, const Standardization& st) {
  Dataset out;
  out.y = ds.y;
  out.columns = st.columns;
  out.x.resize(ds.x.rows(), static_cast<Eigen::Index>(st.columns.size()));
  for (size_t j = 0; j < st.columns.size(); ++j) {
    auto it = std::find(ds.columns.begin(), ds.columns.end(), st.columns[j]);
    if (it == ds.columns.end())
      throw DataError("missing feature column '" + st.columns[j] + "'");
    const auto src = static_cast<Eigen::Index>(it - ds.columns.begin());
    const auto dst = static_cast<Eigen::Index>(j);
    out.x.col(dst) = (ds.x.col(src).array() - st.mean(dst)) / st.scale(dst);
  }
  return out;
}

Split split_dataset(const Dataset& ds, double train_frac,
                    double val_frac_of_train, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0) ||
      !(val_frac_of_train > 0.0 && val_frac_of_train < 1.0))
    throw ConfigError("split fractions must lie in (0, 1)");
  const int n = ds.size();
  const int n_fit = static_cast<int>(std::lround(n * train_frac));
  const int n_val = static_cast<int>(std::lround(n_fit * val_frac_of_train));
  const int n_train = n_fit - n_val;
  if (n_train < 1 || n_val < 1 || n - n_fit < 1)
    throw DataError("dataset of " + std::to_string(n) +
                    " rows leaves an empty split");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto part = [&](int from, int to) {
    return ds.subset(std::vector<int>(idx.begin() + from, idx.begin() + to));
  };
  Split s;
  Dataset train = part(0, n_train);
  s.standardization = fit_standardization(train, &s.warnings);
  s.train = apply_standardization(train, s.standardization);
  s.val = apply_standardization(part(n_train, n_fit), s.standardization);
  s.test = apply_standardization(part(n_fit, n), s.standardization);
  return s;
}

Dataset synthetic_gaussians(const SynthConfig& cfg) {
  if (cfg.samples < 1) throw ConfigError("synthetic dataset needs samples");
  if (!(cfg.positive_fraction >= 0.0 && cfg.positive_fraction <= 1.0))
    throw ConfigError("positive fraction must lie in [0, 1]");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> nd;
  const int pos = static_cast<int>(std::lround(cfg.samples * cfg.positive_fraction));
  std::vector<int> labels(cfg.samples, 0);
  std::fill(labels.begin(), labels.begin() + pos, 1);
  std::shuffle(labels.begin(), labels.end(), rng);
  Dataset ds;
  ds.columns = {"x1", "x2"};
  ds.x.resize(cfg.samples, 2);
  ds.y = labels;
  for (int i = 0; i < cfg.samples; ++i) {
    double c = labels[i] ? cfg.separation : 0.0;
    ds.x(i, 0) = c + nd(rng);
    ds.x(i, 1) = c + nd(rng);
  }
  return ds;
}

}  // namespace apperf
