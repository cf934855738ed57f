#include "dkd/io/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <variant>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dkd/error.hpp"

namespace dkd::io {

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  while (true) {
    const auto comma = line.find(',');
    cells.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return cells;
}

double parse_real(std::string_view cell, std::string_view source, std::size_t line_no,
                  std::size_t column) {
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError(fmt::format("{}:{}: column {}: '{}' is not a number", source, line_no,
                                 column + 1, cell));
  }
  return value;
}

std::size_t parse_index(std::string_view cell, std::string_view source, std::size_t line_no,
                        std::size_t column) {
  std::size_t value = 0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError(fmt::format("{}:{}: column {}: '{}' is not a class index", source, line_no,
                                 column + 1, cell));
  }
  return value;
}

struct Row {
  std::string sample_id;
  std::size_t label = 0;
  Vector values;
};

// Shared reader for the "sample_id,label,<prefix>_0,..." layout.
std::vector<Row> parse_table(std::istream& in, std::string_view source, std::string_view prefix) {
  std::string line;
  std::size_t line_no = 0;
  const auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line()) throw ParseError(fmt::format("{}: empty file, expected a header", source));
  const auto header = split(line);
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "label") {
    throw ParseError(fmt::format("{}:1: header must start with 'sample_id,label,{}_0'", source,
                                 prefix));
  }
  const std::size_t width = header.size() - 2;
  for (std::size_t i = 0; i < width; ++i) {
    const auto expected = fmt::format("{}_{}", prefix, i);
    if (header[i + 2] != expected) {
      throw ParseError(fmt::format("{}:1: column {} is '{}', expected '{}'", source, i + 3,
                                   header[i + 2], expected));
    }
  }
  std::vector<Row> rows;
  while (next_line()) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ParseError(fmt::format("{}:{}: expected {} columns, found {}", source, line_no,
                                   header.size(), cells.size()));
    }
    if (cells[0].empty()) throw ParseError(fmt::format("{}:{}: empty sample_id", source, line_no));
    Row row;
    row.sample_id = std::string(cells[0]);
    row.label = parse_index(cells[1], source, line_no, 1);
    row.values.reserve(width);
    for (std::size_t i = 0; i < width; ++i) {
      row.values.push_back(parse_real(cells[i + 2], source, line_no, i + 2));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open '{}' for reading", path.string()));
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RunError(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

void write_header(std::ostream& out, std::string_view prefix, std::size_t width) {
  out << "sample_id,label";
  for (std::size_t i = 0; i < width; ++i) out << ',' << prefix << '_' << i;
  out << '\n';
}

void check_id(const std::string& id) {
  if (id.empty() || id.find_first_of(",\n\r") != std::string::npos) {
    throw InputError(fmt::format("sample id '{}' is empty or contains a comma/line break", id));
  }
}

template <typename Record>
void write_records(std::ostream& out, std::span<const Record> records, std::string_view prefix,
                   const Vector Record::*values) {
  const std::size_t width = records.empty() ? 0 : (records.front().*values).size();
  write_header(out, prefix, width);
  for (const auto& r : records) {
    check_id(r.sample_id);
    if ((r.*values).size() != width) throw InputError("records have differing vector lengths");
    out << r.sample_id << ',' << r.label;
    for (double v : r.*values) out << ',' << format_real(v);
    out << '\n';
  }
}

}  // namespace

std::vector<LogitRecord> parse_logits_csv(std::istream& in, std::string_view source) {
  std::vector<LogitRecord> out;
  std::size_t line_no = 1;
  for (auto& row : parse_table(in, source, "f")) {
    ++line_no;
    LogitRecord record{std::move(row.sample_id), row.label, std::move(row.values)};
    try {
      validate(record);
    } catch (const InputError& e) {
      throw ParseError(fmt::format("{}: record {}: {}", source, line_no - 1, e.what()));
    }
    out.push_back(std::move(record));
  }
  return out;
}

std::vector<LogitRecord> read_logits_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_logits_csv(in, path.string());
}

void write_logits_csv(std::ostream& out, std::span<const LogitRecord> records) {
  write_records(out, records, "f", &LogitRecord::logits);
}

void write_logits_csv(const std::filesystem::path& path, std::span<const LogitRecord> records) {
  auto out = open_out(path);
  write_logits_csv(out, records);
}

std::vector<FeatureRecord> parse_features_csv(std::istream& in, std::string_view source) {
  std::vector<FeatureRecord> out;
  for (auto& row : parse_table(in, source, "h")) {
    out.push_back({std::move(row.sample_id), row.label, std::move(row.values)});
  }
  return out;
}

std::vector<FeatureRecord> read_features_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_features_csv(in, path.string());
}

void write_features_csv(std::ostream& out, std::span<const FeatureRecord> records) {
  write_records(out, records, "h", &FeatureRecord::features);
}

void write_features_csv(const std::filesystem::path& path, std::span<const FeatureRecord> records) {
  auto out = open_out(path);
  write_features_csv(out, records);
}

void write_probabilities_csv(const std::filesystem::path& path,
                             std::span<const LogitRecord> records,
                             std::span<const ProbabilityVector> probs) {
  if (records.size() != probs.size()) throw InputError("one probability vector per record expected");
  bool any_isats = false;
  for (const auto& p : probs) any_isats = any_isats || std::holds_alternative<IsatsPolicy>(p.policy);
  auto out = open_out(path);
  const std::size_t width = probs.empty() ? 0 : probs.front().probs.size();
  out << "sample_id,label";
  for (std::size_t i = 0; i < width; ++i) out << ",p_" << i;
  if (any_isats) out << ",tau_star";
  out << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    check_id(records[i].sample_id);
    out << records[i].sample_id << ',' << records[i].label;
    for (double v : probs[i].probs) out << ',' << format_real(v);
    if (any_isats) {
      const auto* isats = std::get_if<IsatsPolicy>(&probs[i].policy);
      out << ',' << (isats && isats->chosen ? format_real(*isats->chosen) : std::string());
    }
    out << '\n';
  }
}

void write_priors_csv(const std::filesystem::path& path, std::span<const ClassPrior> priors) {
  std::vector<LogitRecord> rows;
  for (const auto& p : priors) {
    rows.push_back({fmt::format("prior-c{}-n{}-t{}", p.class_index, p.count, format_real(p.tau0)),
                    p.class_index, p.mean_probs});
  }
  write_logits_csv(path, rows);
}

std::vector<ClassPrior> read_priors_csv(const std::filesystem::path& path) {
  std::vector<ClassPrior> priors;
  for (auto& row : read_logits_csv(path)) {
    ClassPrior prior;
    prior.class_index = row.label;
    prior.mean_probs = std::move(row.logits);
    const auto& id = row.sample_id;
    const auto n_pos = id.find("-n");
    const auto t_pos = id.find("-t", n_pos == std::string::npos ? 0 : n_pos);
    if (id.rfind("prior-c", 0) != 0 || n_pos == std::string::npos || t_pos == std::string::npos) {
      throw ParseError(fmt::format("{}: '{}' is not a prior row id", path.string(), id));
    }
    const std::string_view count(id.data() + n_pos + 2, t_pos - n_pos - 2);
    const std::string_view tau0(id.data() + t_pos + 2, id.size() - t_pos - 2);
    prior.count = parse_index(count, path.string(), priors.size() + 2, 0);
    prior.tau0 = parse_real(tau0, path.string(), priors.size() + 2, 0);
    if (prior.class_index != priors.size()) {
      throw ParseError(fmt::format("{}: prior rows must be ordered by class", path.string()));
    }
    priors.push_back(std::move(prior));
  }
  return priors;
}

void write_affinity_csv(const std::filesystem::path& path, const AffinityReport& report) {
  auto out = open_out(path);
  out << "sample_id,overlap_ratio,intersection,spearman,kendall_signed,kendall_indicator\n";
  for (const auto& row : report.per_sample) {
    out << row.sample_id << ',' << format_real(row.overlap_ratio) << ',' << row.intersection << ','
        << format_real(row.spearman) << ',' << format_real(row.kendall_signed) << ','
        << format_real(row.kendall_indicator) << '\n';
  }
}

void write_histogram_csv(const std::filesystem::path& path, const OverlapHistogram& histogram) {
  auto out = open_out(path);
  out << "k,intersection,count\n";
  for (std::size_t k = 1; k <= histogram.k_max; ++k) {
    for (std::size_t m = 0; m < histogram.counts[k - 1].size(); ++m) {
      out << k << ',' << m << ',' << histogram.counts[k - 1][m] << '\n';
    }
  }
}

}  // namespace dkd::io
