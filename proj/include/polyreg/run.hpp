#pragma once

#include "polyreg/geometry.hpp"
#include "polyreg/landmarks.hpp"
#include "polyreg/regress.hpp"

#include <filesystem>
#include <iosfwd>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace polyreg {

struct RunConfig {
  ManifoldKind manifold = ManifoldKind::Kendall;
  std::vector<int> orders{1};
  /// Optimizer settings shared by every order; the order field is ignored.
  FitConfig fit;
  std::filesystem::path input;
  std::filesystem::path output_dir;
  /// Points per fitted curve in curves.csv and plot_curves.csv.
  int samples = 101;
  /// Initialize order k + 1 from the order-k fit. Without warm starts the
  /// orders are independent and run concurrently.
  bool warm_start = true;
  /// Diagonal of the SO(3) metric matrix.
  Eigen::Vector3d so3_inertia = Eigen::Vector3d::Ones();

  void validate() const;
};

/// Manifold matching the record shape: Kendall uses m x d landmarks, the
/// sphere and Euclidean space use all coordinates, SO(3) needs 9 (row-major).
std::unique_ptr<Manifold> make_manifold(const RunConfig& config,
                                        const std::vector<LandmarkRecord>& records);

/// Converts records to manifold points. Kendall records are standardized to
/// preshapes, sphere records normalized, SO(3) records projected to the
/// nearest rotation; records far from the manifold are rejected.
TimedDataset to_dataset(const Manifold& manifold, const std::vector<LandmarkRecord>& records);

struct PlotBundle {
  /// Columns: order, time, then ambient coordinates (landmark-wise for Kendall).
  std::vector<std::vector<double>> curves;
  /// Columns: observation index, time, then ambient coordinates.
  std::vector<std::vector<double>> observations;
  std::vector<std::string> coordinate_names;
};

/// Samples the fitted curve at evenly spaced times spanning the observed
/// range and collects the observations. Kendall curves and observations are
/// Procrustes-aligned to the Frechet mean of the data for display.
PlotBundle emit_plot_data(const Manifold& manifold, const FitResult& fit,
                          const TimedDataset& data, int samples);

struct RunReport {
  std::vector<FitResult> fits;
  /// Orders whose fit raised an error, with the message.
  std::vector<std::pair<int, std::string>> failures;
  bool all_converged = true;
  int exit_code() const { return all_converged && failures.empty() ? 0 : 2; }
};

/// Fits every requested order and writes fit.json, curves.csv,
/// residuals.csv, plot_curves.csv and plot_observations.csv to output_dir.
/// Progress messages go to log.
RunReport run_regression(const RunConfig& config, std::ostream& log);

/// Curves of orders 1..order sharing a base point, with order k using the
/// first k of a fixed set of initial vectors. Rows: order, time, coordinates.
std::vector<std::vector<double>> simulate_nested_curves(const Manifold& manifold, int order,
                                                        int steps, std::uint64_t seed);

std::vector<std::string> coordinate_names(const Manifold& manifold);

}  // namespace polyreg
