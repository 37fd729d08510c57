#include "polyreg/kendall.hpp"
#include "polyreg/run.hpp"
#include "polyreg/so3.hpp"
#include "polyreg/sphere.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::vector<int> parse_orders(const std::string& text) {
  std::vector<int> orders;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw std::invalid_argument("invalid order '" + item + "' in --orders");
    }
    orders.push_back(k);
  }
  return orders;
}

int run_fit(const polyreg::RunConfig& config) {
  const polyreg::RunReport report = polyreg::run_regression(config, std::cerr);
  if (report.exit_code() != 0) {
    std::cerr << "polyreg: at least one fit did not converge\n";
  }
  return report.exit_code();
}

int run_convert(const std::filesystem::path& input, const std::filesystem::path& output) {
  const auto records = polyreg::parse_landmarks(input, polyreg::LandmarkFormat::Tps);
  std::ofstream out(output);
  if (!out) throw std::runtime_error("cannot write '" + output.string() + "'");
  polyreg::write_landmarks_csv(out, records);
  if (!out) throw std::runtime_error("error while writing '" + output.string() + "'");
  std::cerr << "wrote " << records.size() << " records to " << output.string() << '\n';
  return 0;
}

int run_simulate(polyreg::ManifoldKind kind, int order, int steps, std::uint64_t seed,
                 int dim, int landmarks, const std::filesystem::path& output) {
  std::unique_ptr<polyreg::Manifold> manifold;
  switch (kind) {
    case polyreg::ManifoldKind::Euclidean:
      manifold = std::make_unique<polyreg::Euclidean>(dim);
      break;
    case polyreg::ManifoldKind::Sphere:
      manifold = std::make_unique<polyreg::Sphere>(dim);
      break;
    case polyreg::ManifoldKind::SO3:
      manifold = std::make_unique<polyreg::SO3>();
      break;
    case polyreg::ManifoldKind::Kendall:
      manifold = std::make_unique<polyreg::KendallShapeSpace>(landmarks, dim);
      break;
  }
  const auto rows = polyreg::simulate_nested_curves(*manifold, order, steps, seed);
  std::ofstream out(output);
  if (!out) throw std::runtime_error("cannot write '" + output.string() + "'");
  out << "order,time";
  for (const auto& name : polyreg::coordinate_names(*manifold)) out << ',' << name;
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << polyreg::format_double(row[i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("error while writing '" + output.string() + "'");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polynomial regression on Riemannian manifolds"};
  app.require_subcommand(1);

  const std::vector<std::string> manifolds{"euclidean", "sphere", "so3", "kendall"};

  polyreg::RunConfig config;
  std::string fit_manifold;
  std::string orders_text = "1";
  std::string optimizer = "conjugate-gradient";
  std::vector<double> inertia{1.0, 1.0, 1.0};
  bool no_warm_start = false;
  auto* fit = app.add_subcommand("fit", "Fit polynomials of the requested orders");
  fit->add_option("--manifold", fit_manifold, "Manifold")
      ->required()
      ->check(CLI::IsMember(manifolds));
  fit->add_option("--orders", orders_text, "Comma-separated polynomial orders")
      ->capture_default_str();
  fit->add_option("--input", config.input, "Landmark file (.csv or .tps)")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--out", config.output_dir, "Output directory")->required();
  fit->add_option("--steps", config.fit.steps_per_unit, "Integration steps per unit time")
      ->capture_default_str();
  fit->add_option("--max-iters", config.fit.max_iters, "Optimizer iteration limit")
      ->capture_default_str();
  fit->add_option("--tol", config.fit.tol, "Gradient-norm tolerance")->capture_default_str();
  fit->add_option("--optimizer", optimizer, "conjugate-gradient or steepest-descent")
      ->capture_default_str();
  fit->add_option("--samples", config.samples, "Points per sampled curve")
      ->capture_default_str();
  fit->add_flag("--no-warm-start", no_warm_start,
                "Fit orders independently and concurrently");
  fit->add_option("--inertia", inertia, "Diagonal of the SO(3) metric")->expected(3);

  std::filesystem::path tps_in, csv_out;
  auto* convert = app.add_subcommand("convert-tps", "Convert a TPS landmark file to CSV");
  convert->add_option("--input", tps_in, "TPS file")->required()->check(CLI::ExistingFile);
  convert->add_option("--out", csv_out, "CSV file")->required();

  std::string sim_manifold;
  int sim_order = 3, sim_steps = 200, sim_dim = 2, sim_landmarks = 4;
  std::uint64_t sim_seed = 1;
  std::filesystem::path sim_out;
  auto* simulate = app.add_subcommand("simulate", "Sample nested polynomials of orders 1..k");
  simulate->add_option("--manifold", sim_manifold, "Manifold")
      ->required()
      ->check(CLI::IsMember(manifolds));
  simulate->add_option("--order", sim_order, "Highest order")->capture_default_str();
  simulate->add_option("--steps", sim_steps, "Integration steps")->capture_default_str();
  simulate->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  simulate->add_option("--dim", sim_dim,
                       "Sphere or Euclidean dimension, landmark dimension for Kendall")
      ->capture_default_str();
  simulate->add_option("--landmarks", sim_landmarks, "Kendall landmark count")
      ->capture_default_str();
  simulate->add_option("--out", sim_out, "CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fit) {
      config.manifold = polyreg::manifold_kind_from_string(fit_manifold);
      config.orders = parse_orders(orders_text);
      config.fit.optimizer = polyreg::optimizer_from_string(optimizer);
      config.warm_start = !no_warm_start;
      config.so3_inertia = Eigen::Vector3d(inertia[0], inertia[1], inertia[2]);
      return run_fit(config);
    }
    if (*convert) return run_convert(tps_in, csv_out);
    return run_simulate(polyreg::manifold_kind_from_string(sim_manifold), sim_order, sim_steps, sim_seed, sim_dim, sim_landmarks,
                        sim_out);
  } catch (const std::exception& e) {
    std::cerr << "polyreg: " << e.what() << '\n';
    return 1;
  }
}
