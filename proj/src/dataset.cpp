#include "ccacr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ccacr {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  const std::string t = trim(cell);
  if (t.empty())
    throw DataError("missing value in column '" + col + "' at data row " +
                    std::to_string(row + 1));
  try {
    std::size_t pos = 0;
    double v = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument("trailing characters");
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::exception&) {
    throw DataError("non-numeric cell '" + t + "' in column '" + col +
                    "' at data row " + std::to_string(row + 1));
  }
}

}  // namespace

std::vector<double> load_column(const std::string& path,
                                const std::string& column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) throw DataError("missing column: " + column);
  const auto ci = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(row_no + 1) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    out.push_back(parse_cell(cells[ci], row_no, column));
    ++row_no;
  }
  if (out.empty()) throw DataError("no observations");
  return out;
}

IvDataset load_csv(const std::string& path, const std::string& outcome,
                   const std::string& treatment,
                   const std::vector<std::string>& instruments,
                   const std::vector<std::string>& covariates) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  auto col_index = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("missing column: " + name);
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t yi = col_index(outcome);
  const std::size_t di = col_index(treatment);
  std::vector<std::size_t> zi, xi;
  for (const auto& name : instruments) zi.push_back(col_index(name));
  for (const auto& name : covariates) xi.push_back(col_index(name));
  if (zi.empty()) throw DataError("at least one instrument column required");

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(row_no + 1) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    std::vector<double> parsed(header.size());
    for (std::size_t j = 0; j < header.size(); ++j)
      parsed[j] = parse_cell(cells[j], row_no, header[j]);
    rows.push_back(std::move(parsed));
    ++row_no;
  }
  if (rows.empty()) throw DataError("no observations");

  const std::size_t n = rows.size();
  IvDataset data;
  data.y.resize(n);
  data.d.resize(n);
  data.z = Matrix(n, zi.size());
  data.x = Matrix(n, xi.size());
  data.instrument_names = instruments;
  data.covariate_names = covariates;
  for (std::size_t i = 0; i < n; ++i) {
    data.y[i] = rows[i][yi];
    data.d[i] = rows[i][di];
    for (std::size_t k = 0; k < zi.size(); ++k) {
      double v = rows[i][zi[k]];
      if (v != 0.0 && v != 1.0)
        throw DataError("instrument column '" + instruments[k] +
                        "' has non-binary value " + std::to_string(v) +
                        " at data row " + std::to_string(i + 1));
      data.z(i, k) = v;
    }
    for (std::size_t k = 0; k < xi.size(); ++k) data.x(i, k) = rows[i][xi[k]];
  }
  return data;
}

CollapsedSample collapse_instruments(const IvDataset& data) {
  const std::size_t n = data.n();
  const std::size_t K = data.n_instruments();
  CollapsedSample s;
  s.covariate_names = data.covariate_names;
  std::vector<std::size_t> keep;
  std::vector<int> zt;
  for (std::size_t i = 0; i < n; ++i) {
    bool all_one = true, all_zero = true;
    for (std::size_t k = 0; k < K; ++k) {
      if (data.z(i, k) == 1.0)
        all_zero = false;
      else
        all_one = false;
    }
    if (all_one || all_zero) {
      keep.push_back(i);
      zt.push_back(all_one ? 1 : 0);
    }
  }
  s.dropped = n - keep.size();
  s.parent_indices = keep;
  s.z_tilde = zt;
  s.y.reserve(keep.size());
  s.d.reserve(keep.size());
  for (std::size_t i : keep) {
    s.y.push_back(data.y[i]);
    s.d.push_back(data.d[i]);
  }
  s.x = data.x.take_rows(keep);
  for (int v : zt) (v == 1 ? s.n1 : s.n0)++;
  if (s.n1 == 0 || s.n0 == 0) throw DataError("outer support empty");
  return s;
}

BinarizedInstrument binarize_instrument(const std::vector<double>& values,
                                        double low_percentile,
                                        double high_percentile) {
  if (!(low_percentile >= 0.0 && low_percentile < high_percentile &&
        high_percentile <= 1.0))
    throw DataError("require 0 <= low < high <= 1 for binarization percentiles");
  BinarizedInstrument out;
  out.low_cutoff = quantile_type7(values, low_percentile);
  out.high_cutoff = quantile_type7(values, high_percentile);
  if (out.low_cutoff == out.high_cutoff) throw DataError("cut-offs coincide");
  out.kept.resize(values.size(), false);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] <= out.low_cutoff) {
      out.kept[i] = true;
      out.values.push_back(0);
    } else if (values[i] >= out.high_cutoff) {
      out.kept[i] = true;
      out.values.push_back(1);
    }
  }
  return out;
}

std::pair<std::vector<int>, TreatmentEncoding> encode_treatment_levels(
    const std::vector<double>& d) {
  std::vector<double> levels(d);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  if (levels.size() < 2) throw DataError("treatment is constant");
  TreatmentEncoding enc;
  enc.levels = levels;
  for (std::size_t r = 0; r < levels.size(); ++r)
    enc.codes[levels[r]] = static_cast<int>(r);
  // The CC-ACR denominator is in rank units once levels are re-coded; flag
  // when the observed levels were not already consecutive integers.
  bool consecutive = true;
  for (std::size_t r = 0; r < levels.size(); ++r) {
    if (levels[r] != std::floor(levels[r]) ||
        (r > 0 && levels[r] - levels[r - 1] != 1.0)) {
      consecutive = false;
      break;
    }
  }
  enc.non_consecutive_warning = !consecutive;
  std::vector<int> codes(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) codes[i] = enc.codes.at(d[i]);
  return {codes, enc};
}

}  // namespace ccacr
