#include "survhte/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "survhte/km.hpp"

namespace survhte {

void Dataset::validate() const {
  if (n < 1) throw DataError("dataset must contain at least one subject");
  if (p < 1) throw DataError("dataset must contain at least one covariate");
  if (covariates.rows() != n || covariates.cols() != p)
    throw DataError("covariate matrix shape does not match (n, p)");
  if (covariate_names.size() != p || covariate_kinds.size() != p)
    throw DataError("covariate metadata length does not match p");
  if (treatment.size() != n || time.size() != n || event.size() != n)
    throw DataError("column vectors must all have length n");
  if (!ids.empty() && ids.size() != n) throw DataError("id vector must have length n");
  for (std::size_t i = 0; i < n; ++i) {
    if (treatment[i] > 1) throw DataError("treatment must be 0 or 1 at row " + std::to_string(i + 1));
    if (event[i] > 1) throw DataError("event must be 0 or 1 at row " + std::to_string(i + 1));
    if (!(time[i] >= 0.0) || !std::isfinite(time[i]))
      throw DataError("time must be a finite nonnegative number at row " + std::to_string(i + 1));
  }
  for (std::size_t j = 0; j < p; ++j) {
    if (covariate_kinds[j] != CovariateKind::Binary) continue;
    for (std::size_t i = 0; i < n; ++i) {
      double v = covariates(i, j);
      if (v != 0.0 && v != 1.0)
        throw DataError("binary covariate '" + covariate_names[j] + "' has value " +
                        std::to_string(v) + " at row " + std::to_string(i + 1));
    }
  }
}

std::size_t Dataset::covariate_index(const std::string& name) const {
  auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
  if (it == covariate_names.end()) throw DataError("no covariate named '" + name + "'");
  return static_cast<std::size_t>(it - covariate_names.begin());
}

std::vector<HorizonStatus> classify_at_horizon(const Dataset& d, const Horizon& h) {
  if (!(h.t_star > 0.0)) throw DataError("horizon must be > 0");
  std::vector<HorizonStatus> out(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    if (d.time[i] > h.t_star) {
      out[i] = HorizonStatus::SurvivedPastHorizon;
    } else if (d.event[i] == 1) {
      // event at exactly t* means I(T > t*) = 0
      out[i] = HorizonStatus::EventBeforeHorizon;
    } else if (d.time[i] == h.t_star) {
      // censored at exactly t*: T >= C = t*, so survival past t* is known
      out[i] = HorizonStatus::SurvivedPastHorizon;
    } else {
      out[i] = HorizonStatus::CensoredUnknown;
    }
  }
  return out;
}

std::size_t count_complete(const std::vector<HorizonStatus>& statuses) {
  std::size_t n = 0;
  for (HorizonStatus s : statuses)
    if (is_complete(s)) ++n;
  return n;
}

Horizon km_median_survival(const Dataset& d) {
  bool any_event = std::any_of(d.event.begin(), d.event.end(), [](std::uint8_t e) { return e == 1; });
  if (!any_event) throw DataError("median survival requires at least one event");
  KaplanMeier km = KaplanMeier::fit(d.time, d.event, /*flip_events=*/false);
  for (std::size_t k = 0; k < km.steps().size(); ++k) {
    if (km.steps()[k].survival <= 0.5) return Horizon{km.steps()[k].time};
  }
  throw DataError("Kaplan-Meier survival never reaches 0.5; choose a horizon explicitly");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace / CR
    std::size_t a = cell.find_first_not_of(" \t\r");
    std::size_t b = cell.find_last_not_of(" \t\r");
    cells.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  double v;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw DataError("non-numeric value '" + cell + "' in column '" + col + "' at data row " +
                    std::to_string(row));
  return v;
}

// Shortest representation that round-trips exactly, so that
// load(save(d)) == d and outputs are byte-stable.
std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

CsvSchema CsvSchema::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("schema file " + path + " is not valid JSON: " + e.what());
  }
  CsvSchema s;
  if (j.contains("id")) s.id_column = j["id"].get<std::string>();
  if (j.contains("treatment")) s.treatment_column = j["treatment"].get<std::string>();
  if (j.contains("time")) s.time_column = j["time"].get<std::string>();
  if (j.contains("event")) s.event_column = j["event"].get<std::string>();
  if (j.contains("covariate_kinds")) {
    for (auto& [name, kind] : j["covariate_kinds"].items()) {
      std::string k = kind.get<std::string>();
      if (k != "binary" && k != "continuous")
        throw DataError("covariate kind must be 'binary' or 'continuous', got '" + k + "'");
      s.kind_overrides.emplace_back(name, k == "binary" ? CovariateKind::Binary
                                                        : CovariateKind::Continuous);
    }
  }
  return s;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  std::vector<std::string> header = split_csv_line(line);

  auto find_col = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("missing required column '" + name + "' in " + path);
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t treatment_col = find_col(schema.treatment_column);
  const std::size_t time_col = find_col(schema.time_column);
  const std::size_t event_col = find_col(schema.event_column);

  std::optional<std::size_t> id_col;
  std::string id_name = schema.id_column.value_or("id");
  auto id_it = std::find(header.begin(), header.end(), id_name);
  if (id_it != header.end()) {
    id_col = static_cast<std::size_t>(id_it - header.begin());
  } else if (schema.id_column) {
    throw DataError("missing declared id column '" + id_name + "' in " + path);
  }

  // Covariates: every remaining column, in header order.
  std::vector<std::size_t> cov_cols;
  std::vector<std::string> cov_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == treatment_col || c == time_col || c == event_col) continue;
    if (id_col && c == *id_col) continue;
    if (header[c].empty()) throw DataError("empty column name in header of " + path);
    cov_cols.push_back(c);
    cov_names.push_back(header[c]);
  }
  if (cov_cols.empty()) throw DataError("no covariate columns found in " + path);

  std::vector<std::vector<double>> rows;
  std::vector<std::string> ids;
  std::size_t row_num = 0;
  while (std::getline(in, line)) {
    ++row_num;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("data row " + std::to_string(row_num) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (id_col && c == *id_col) continue;
      row[c] = parse_cell(cells[c], row_num, header[c]);
    }
    if (id_col) ids.push_back(cells[*id_col]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no data rows in " + path);

  Dataset d;
  d.n = rows.size();
  d.p = cov_cols.size();
  d.covariates = Matrix(d.n, d.p);
  d.covariate_names = cov_names;
  d.treatment.resize(d.n);
  d.time.resize(d.n);
  d.event.resize(d.n);
  d.ids = std::move(ids);

  for (std::size_t i = 0; i < d.n; ++i) {
    double a = rows[i][treatment_col];
    if (a != 0.0 && a != 1.0)
      throw DataError("treatment must be 0 or 1 at data row " + std::to_string(i + 1) +
                      ", got " + format_double(a));
    double e = rows[i][event_col];
    if (e != 0.0 && e != 1.0)
      throw DataError("event must be 0 or 1 at data row " + std::to_string(i + 1) + ", got " +
                      format_double(e));
    double t = rows[i][time_col];
    if (!(t >= 0.0))
      throw DataError("time must be nonnegative at data row " + std::to_string(i + 1) +
                      ", got " + format_double(t));
    d.treatment[i] = static_cast<std::uint8_t>(a);
    d.event[i] = static_cast<std::uint8_t>(e);
    d.time[i] = t;
    for (std::size_t j = 0; j < d.p; ++j) d.covariates(i, j) = rows[i][cov_cols[j]];
  }

  // Kind inference: a column whose values are a subset of {0,1} is binary,
  // unless the schema says otherwise.
  d.covariate_kinds.assign(d.p, CovariateKind::Continuous);
  for (std::size_t j = 0; j < d.p; ++j) {
    bool binary = true;
    for (std::size_t i = 0; i < d.n && binary; ++i) {
      double v = d.covariates(i, j);
      binary = (v == 0.0 || v == 1.0);
    }
    if (binary) d.covariate_kinds[j] = CovariateKind::Binary;
  }
  for (const auto& [name, kind] : schema.kind_overrides) {
    d.covariate_kinds[d.covariate_index(name)] = kind;
  }

  d.validate();
  return d;
}

void save_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write data file: " + path);
  if (!d.ids.empty()) out << "id,";
  out << "treatment,time,event";
  for (const auto& name : d.covariate_names) out << "," << name;
  out << "\n";
  for (std::size_t i = 0; i < d.n; ++i) {
    if (!d.ids.empty()) out << d.ids[i] << ",";
    out << int(d.treatment[i]) << "," << format_double(d.time[i]) << "," << int(d.event[i]);
    for (std::size_t j = 0; j < d.p; ++j) out << "," << format_double(d.covariates(i, j));
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace survhte
