#include "polyreg/landmarks.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace polyreg {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

bool parse_number(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = begin + t.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string token;
  while (ss >> token) out.push_back(token);
  return out;
}

void check_consistent_shape(const std::vector<LandmarkRecord>& records,
                            const LandmarkRecord& next, const std::string& source,
                            std::size_t line) {
  if (records.empty()) return;
  const auto& first = records.front().landmarks;
  if (first.rows() != next.landmarks.rows() || first.cols() != next.landmarks.cols()) {
    throw ParseError(source, line,
                     "record '" + next.id + "' has " + std::to_string(next.landmarks.rows()) +
                         "x" + std::to_string(next.landmarks.cols()) +
                         " landmarks, expected " + std::to_string(first.rows()) + "x" +
                         std::to_string(first.cols()));
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

LandmarkFormat landmark_format_for(const std::filesystem::path& path) {
  const std::string ext = upper(path.extension().string());
  if (ext == ".TPS") return LandmarkFormat::Tps;
  if (ext == ".CSV") return LandmarkFormat::Csv;
  throw std::invalid_argument("cannot infer landmark format from '" + path.string() +
                              "' (expected .tps or .csv)");
}

std::vector<LandmarkRecord> parse_landmarks(const std::filesystem::path& path,
                                            LandmarkFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return format == LandmarkFormat::Tps ? parse_landmarks_tps(in, path.string())
                                       : parse_landmarks_csv(in, path.string());
}

std::vector<LandmarkRecord> parse_landmarks_tps(std::istream& in, const std::string& source) {
  std::vector<LandmarkRecord> records;
  std::string raw;
  std::size_t line_no = 0;

  struct Pending {
    LandmarkRecord record;
    bool has_time = false;
    std::size_t start_line = 0;
  };
  std::optional<Pending> pending;

  const auto finish = [&]() {
    if (!pending) return;
    if (pending->record.id.empty()) {
      pending->record.id = "specimen" + std::to_string(records.size() + 1);
    }
    if (!pending->has_time) {
      throw ParseError(source, pending->start_line,
                       "record '" + pending->record.id + "' has no AGE= or TIME= line");
    }
    check_consistent_shape(records, pending->record, source, pending->start_line);
    records.push_back(std::move(pending->record));
    pending.reset();
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source, line_no, "unexpected line '" + line + "'");
    }
    const std::string key = upper(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "LM" || key == "LM3") {
      finish();
      const int dim = key == "LM3" ? 3 : 2;
      double count = 0.0;
      if (!parse_number(value, count) || count < 1 || count != std::floor(count)) {
        throw ParseError(source, line_no, "invalid landmark count '" + value + "'");
      }
      const auto m = static_cast<Eigen::Index>(count);
      pending = Pending{};
      pending->start_line = line_no;
      pending->record.landmarks.resize(m, dim);
      for (Eigen::Index r = 0; r < m; ++r) {
        if (!std::getline(in, raw)) {
          throw ParseError(source, line_no,
                           "expected " + std::to_string(m) + " coordinate lines, found " +
                               std::to_string(r));
        }
        ++line_no;
        const auto fields = split_whitespace(raw);
        if (fields.size() != static_cast<std::size_t>(dim)) {
          throw ParseError(source, line_no,
                           "expected " + std::to_string(m) + " coordinate lines of " +
                               std::to_string(dim) + " numbers, got '" + trim(raw) + "'");
        }
        for (int c = 0; c < dim; ++c) {
          if (!parse_number(fields[static_cast<std::size_t>(c)],
                            pending->record.landmarks(r, c))) {
            throw ParseError(source, line_no, "non-numeric coordinate '" + fields[c] + "'");
          }
        }
      }
      continue;
    }
    if (!pending) {
      throw ParseError(source, line_no, "'" + key + "=' before the first LM= block");
    }
    if (key == "ID") {
      pending->record.id = value;
    } else if (key == "AGE" || key == "TIME") {
      if (!parse_number(value, pending->record.time)) {
        throw ParseError(source, line_no, "non-numeric time '" + value + "'");
      }
      pending->has_time = true;
    } else if (key == "IMAGE" || key == "SCALE" || key == "COMMENT" || key == "CURVES" ||
               key == "VARIABLES") {
      // Metadata that does not affect the configuration.
    } else {
      throw ParseError(source, line_no, "unknown TPS key '" + key + "'");
    }
  }
  finish();
  if (records.empty()) throw ParseError(source, line_no, "no LM= blocks found");
  return records;
}

std::vector<LandmarkRecord> parse_landmarks_csv(std::istream& in, const std::string& source) {
  std::string raw;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!trim(raw).empty()) {
      header = split(trim(raw), ',');
      break;
    }
  }
  if (header.size() < 3 || trim(header[0]) != "id" || trim(header[1]) != "time") {
    throw ParseError(source, line_no, "header must start with 'id,time,' and name coordinates");
  }

  const std::size_t ncoord = header.size() - 2;
  Eigen::Index dim = 1;
  const std::string first = trim(header[2]);
  if (first == "x1") {
    dim = ncoord >= 3 && trim(header[4]) == "z1" ? 3 : 2;
  }
  if (ncoord % static_cast<std::size_t>(dim) != 0) {
    throw ParseError(source, line_no, "coordinate columns do not form whole landmarks");
  }
  const auto m = static_cast<Eigen::Index>(ncoord) / dim;
  static const char* axes = "xyz";
  for (std::size_t c = 0; c < ncoord; ++c) {
    const std::string expected =
        dim == 1 ? "c" + std::to_string(c + 1)
                 : std::string(1, axes[c % static_cast<std::size_t>(dim)]) +
                       std::to_string(c / static_cast<std::size_t>(dim) + 1);
    if (trim(header[c + 2]) != expected) {
      throw ParseError(source, line_no,
                       "column " + std::to_string(c + 3) + " is '" + trim(header[c + 2]) +
                           "', expected '" + expected + "'");
    }
  }

  std::vector<LandmarkRecord> records;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    LandmarkRecord rec;
    rec.id = trim(fields[0]);
    if (!parse_number(fields[1], rec.time)) {
      throw ParseError(source, line_no, "non-numeric time '" + trim(fields[1]) + "'");
    }
    rec.landmarks.resize(m, dim);
    for (std::size_t c = 0; c < ncoord; ++c) {
      double value = 0.0;
      if (!parse_number(fields[c + 2], value)) {
        throw ParseError(source, line_no,
                         "non-numeric value '" + trim(fields[c + 2]) + "' in column '" +
                             trim(header[c + 2]) + "'");
      }
      rec.landmarks(static_cast<Eigen::Index>(c) / dim, static_cast<Eigen::Index>(c) % dim) =
          value;
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw ParseError(source, line_no, "no data rows");
  return records;
}

void write_landmarks_csv(std::ostream& out, const std::vector<LandmarkRecord>& records) {
  if (records.empty()) throw std::invalid_argument("write_landmarks_csv: no records");
  const Eigen::Index m = records.front().landmarks.rows();
  const Eigen::Index d = records.front().landmarks.cols();
  static const char* axes = "xyz";
  out << "id,time";
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      if (d == 1) {
        out << ",c" << r + 1;
      } else if (d <= 3) {
        out << ',' << axes[c] << r + 1;
      } else {
        throw std::invalid_argument("write_landmarks_csv: landmarks must have d <= 3");
      }
    }
  }
  out << '\n';
  for (const auto& rec : records) {
    if (rec.landmarks.rows() != m || rec.landmarks.cols() != d) {
      throw std::invalid_argument("write_landmarks_csv: inconsistent landmark shapes");
    }
    if (rec.id.find(',') != std::string::npos) {
      throw std::invalid_argument("write_landmarks_csv: id '" + rec.id + "' contains a comma");
    }
    out << rec.id << ',' << format_double(rec.time);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) out << ',' << format_double(rec.landmarks(r, c));
    }
    out << '\n';
  }
}

}  // namespace polyreg
