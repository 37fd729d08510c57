#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyreg {

/// One observed configuration: m landmarks in R^d (or m generic coordinates
/// with d = 1) at a given time.
struct LandmarkRecord {
  std::string id;
  double time = 0.0;
  Eigen::MatrixXd landmarks;  // m x d
};

enum class LandmarkFormat { Tps, Csv };

/// Parse failure with the 1-based line number of the offending input.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Picks the format from the file extension (.tps or .csv, case-insensitive).
LandmarkFormat landmark_format_for(const std::filesystem::path& path);

std::vector<LandmarkRecord> parse_landmarks(const std::filesystem::path& path,
                                            LandmarkFormat format);

/// TPS blocks: "LM=m" (or "LM3=m") followed by m coordinate lines, then
/// key=value lines. ID= names the record and AGE= or TIME= gives its time;
/// IMAGE=, SCALE=, COMMENT= and CURVES= are accepted and ignored.
std::vector<LandmarkRecord> parse_landmarks_tps(std::istream& in,
                                                const std::string& source = "<tps>");

/// CSV with header "id,time,x1,y1[,z1],...,xm,ym[,zm]" or "id,time,c1,...,cn".
std::vector<LandmarkRecord> parse_landmarks_csv(std::istream& in,
                                                const std::string& source = "<csv>");

/// Writes the canonical CSV layout with shortest round-trip decimal numbers.
void write_landmarks_csv(std::ostream& out, const std::vector<LandmarkRecord>& records);

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double x);

}  // namespace polyreg
