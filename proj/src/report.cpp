#include "noisyst/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "noisyst/errors.hpp"

namespace noisyst {

namespace {

std::string fmt_real(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double parse_real(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string pad(const std::string& s, std::size_t width, bool left) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows,
                         std::size_t left_columns) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      out << pad(row[c], width[c], c < left_columns);
    }
    out << '\n';
  };
  emit(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : rows) emit(row);
  return out.str();
}

std::string fmt_cell(double v, int digits = 3) {
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

const std::string& metrics_csv_header() {
  static const std::string header =
      "run,iteration,stage,train_loss,valid_loss,test_error,smoothness,symmetry,"
      "failure_rate,pseudo_examples,seed,config_hash";
  return header;
}

std::string format_metrics_csv(const std::vector<MetricsRecord>& records) {
  std::ostringstream out;
  out << metrics_csv_header() << '\n';
  for (const auto& r : records) {
    out << r.run << ',' << r.iteration << ',' << r.stage << ',' << fmt_real(r.train_loss) << ','
        << fmt_real(r.valid_loss) << ',' << fmt_real(r.test_error) << ','
        << fmt_real(r.smoothness) << ',' << fmt_real(r.symmetry) << ','
        << fmt_real(r.failure_rate) << ',' << r.pseudo_examples << ',' << r.seed << ','
        << r.config_hash << '\n';
  }
  return out.str();
}

std::vector<MetricsRecord> parse_metrics_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != metrics_csv_header()) {
    throw UsageError(origin + ": inconsistent metrics schema");
  }
  std::vector<MetricsRecord> out;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 12) {
      throw UsageError(origin + ":" + std::to_string(number) + ": expected 12 fields");
    }
    try {
      MetricsRecord r;
      r.run = f[0];
      r.iteration = std::stoul(f[1]);
      r.stage = f[2];
      r.train_loss = parse_real(f[3]);
      r.valid_loss = parse_real(f[4]);
      r.test_error = parse_real(f[5]);
      r.smoothness = parse_real(f[6]);
      r.symmetry = parse_real(f[7]);
      r.failure_rate = parse_real(f[8]);
      r.pseudo_examples = std::stoul(f[9]);
      r.seed = std::stoull(f[10]);
      r.config_hash = f[11];
      out.push_back(std::move(r));
    } catch (const std::invalid_argument&) {
      throw UsageError(origin + ":" + std::to_string(number) + ": malformed number");
    }
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRecord>& records) {
  write_text(path, format_metrics_csv(records));
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_metrics_csv(ss.str(), path.string());
}

double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<ComparisonRow> compare_runs(const std::vector<std::vector<MetricsRecord>>& runs,
                                        bool final_only) {
  struct Group {
    std::vector<double> valid, error, smooth, sym, fail;
  };
  using Key = std::tuple<std::string, std::size_t, std::string>;
  std::vector<Key> order;
  std::map<Key, Group> groups;
  for (const auto& records : runs) {
    if (records.empty()) continue;
    const std::size_t first = final_only ? records.size() - 1 : 0;
    for (std::size_t i = first; i < records.size(); ++i) {
      const auto& r = records[i];
      Key key{r.run, r.iteration, r.stage};
      auto [it, inserted] = groups.try_emplace(key);
      if (inserted) order.push_back(key);
      it->second.valid.push_back(r.valid_loss);
      it->second.error.push_back(r.test_error);
      it->second.smooth.push_back(r.smoothness);
      it->second.sym.push_back(r.symmetry);
      it->second.fail.push_back(r.failure_rate);
    }
  }
  std::vector<ComparisonRow> rows;
  for (const auto& key : order) {
    const Group& g = groups.at(key);
    rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), g.error.size(),
                    median(g.valid), median(g.error), median(g.smooth), median(g.sym),
                    median(g.fail)});
  }
  return rows;
}

std::string render_comparison(const std::vector<ComparisonRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.run, std::to_string(r.iteration), r.stage, std::to_string(r.seeds),
                     fmt_cell(r.valid_loss, 4), fmt_cell(r.test_error), fmt_cell(r.smoothness),
                     fmt_cell(r.symmetry), fmt_cell(r.failure_rate, 4)});
  }
  return render_table({"run", "iter", "stage", "seeds", "valid_loss", "error", "smoothness",
                       "symmetry", "fail_rate"},
                      cells, 3);
}

std::string render_summary(const std::vector<MetricsRecord>& records) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : records) {
    cells.push_back({std::to_string(r.iteration), r.stage, fmt_cell(r.train_loss, 4),
                     fmt_cell(r.valid_loss, 4), fmt_cell(r.test_error), fmt_cell(r.smoothness),
                     fmt_cell(r.symmetry), fmt_cell(r.failure_rate, 4),
                     std::to_string(r.pseudo_examples)});
  }
  std::string out;
  if (!records.empty()) {
    out = "run " + records.front().run + "  seed " + std::to_string(records.front().seed) +
          "  config " + records.front().config_hash + "\n\n";
  }
  return out + render_table({"iter", "stage", "train_loss", "valid_loss", "error", "smoothness",
                             "symmetry", "fail_rate", "pseudo"},
                            cells, 2);
}

std::string format_heatmap_csv(const toysum::GridPrediction& grid) {
  std::ostringstream out;
  out << "x1,x2,predicted,error,failed\n";
  for (int x1 = 0; x1 < toysum::kRange; ++x1) {
    for (int x2 = 0; x2 < toysum::kRange; ++x2) {
      const bool failed = grid.failed(x1, x2);
      out << x1 << ',' << x2 << ',' << (failed ? std::string() : std::to_string(grid.at(x1, x2)))
          << ',' << fmt_real(toysum::point_error(grid, x1, x2)) << ',' << (failed ? 1 : 0)
          << '\n';
    }
  }
  return out.str();
}

std::string format_heatmap_pgm(const std::vector<double>& heatmap) {
  const int n = toysum::kRange;
  if (heatmap.size() != toysum::kGridSize) throw UsageError("heat map must be 100x100");
  std::string out = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
  for (double e : heatmap) {
    const double level = std::clamp(e / toysum::kFailurePenalty, 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * (1.0 - level)))));
  }
  return out;
}

}  // namespace noisyst
