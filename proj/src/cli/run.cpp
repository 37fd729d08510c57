#include "polyreg/run.hpp"

#include "polyreg/kendall.hpp"
#include "polyreg/so3.hpp"
#include "polyreg/sphere.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <ostream>
#include <set>

namespace polyreg {

using Json = nlohmann::ordered_json;

void RunConfig::validate() const {
  if (orders.empty()) throw std::invalid_argument("at least one order is required");
  std::set<int> seen;
  for (int k : orders) {
    if (k < 0 || k > 6) throw std::invalid_argument("orders must be in [0, 6]");
    if (!seen.insert(k).second) {
      throw std::invalid_argument("order " + std::to_string(k) + " requested twice");
    }
  }
  if (samples < 2) throw std::invalid_argument("samples must be >= 2");
  if (!(so3_inertia.array() > 0.0).all()) {
    throw std::invalid_argument("SO(3) inertia entries must be positive");
  }
  FitConfig check = fit;
  check.order = 0;
  check.validate();
}

std::unique_ptr<Manifold> make_manifold(const RunConfig& config,
                                        const std::vector<LandmarkRecord>& records) {
  if (records.empty()) throw std::invalid_argument("no records");
  const Eigen::Index m = records.front().landmarks.rows();
  const Eigen::Index d = records.front().landmarks.cols();
  switch (config.manifold) {
    case ManifoldKind::Euclidean:
      return std::make_unique<Euclidean>(m * d);
    case ManifoldKind::Sphere:
      if (m * d < 2) throw std::invalid_argument("sphere data need at least 2 coordinates");
      return std::make_unique<Sphere>(m * d - 1);
    case ManifoldKind::SO3:
      if (m * d != 9) {
        throw std::invalid_argument("SO(3) records need 9 coordinates (row-major rotation)");
      }
      return std::make_unique<SO3>(so3::MetricSpec(config.so3_inertia.asDiagonal()));
    case ManifoldKind::Kendall:
      if (d < 2) {
        throw std::invalid_argument("Kendall shape data need landmark columns x1,y1,...");
      }
      if (m < 3) throw std::invalid_argument("Kendall shape data need at least 3 landmarks");
      return std::make_unique<KendallShapeSpace>(m, d);
  }
  throw std::logic_error("unknown manifold");
}

TimedDataset to_dataset(const Manifold& manifold, const std::vector<LandmarkRecord>& records) {
  constexpr double kTolerance = 1e-6;
  std::vector<Observation> obs;
  double horizon = 0.0;
  for (const auto& rec : records) {
    if (rec.time < 0.0) {
      throw std::invalid_argument("record '" + rec.id + "': times must be non-negative");
    }
    horizon = std::max(horizon, rec.time);
    Vec flat = kendall::flatten(rec.landmarks);
    Vec point;
    switch (manifold.kind()) {
      case ManifoldKind::Euclidean:
        point = flat;
        break;
      case ManifoldKind::Sphere:
        if (std::abs(flat.norm() - 1.0) > kTolerance) {
          throw std::invalid_argument("record '" + rec.id + "' is not a unit vector (norm " +
                                      format_double(flat.norm()) + ")");
        }
        point = flat / flat.norm();
        break;
      case ManifoldKind::SO3: {
        const so3::Matrix3 r = so3::to_matrix(flat);
        if ((r.transpose() * r - so3::Matrix3::Identity()).norm() > kTolerance ||
            std::abs(r.determinant() - 1.0) > kTolerance) {
          throw std::invalid_argument("record '" + rec.id + "' is not a rotation matrix");
        }
        point = so3::to_flat(so3::project_to_rotation(r));
        break;
      }
      case ManifoldKind::Kendall:
        try {
          point = kendall::to_preshape(rec.landmarks).coords;
        } catch (const GeometryError& e) {
          throw std::invalid_argument("record '" + rec.id + "': " + e.what());
        }
        break;
    }
    obs.push_back({rec.time, std::move(point), 0});
  }
  return TimedDataset(std::move(obs), horizon);
}

std::vector<std::string> coordinate_names(const Manifold& manifold) {
  std::vector<std::string> names;
  if (const auto* k = dynamic_cast<const KendallShapeSpace*>(&manifold)) {
    static const char* axes = "xyzw";
    for (Eigen::Index r = 0; r < k->landmarks(); ++r) {
      for (Eigen::Index c = 0; c < k->dim(); ++c) {
        names.push_back(c < 4 ? std::string(1, axes[c]) + std::to_string(r + 1)
                              : "d" + std::to_string(c + 1) + "_" + std::to_string(r + 1));
      }
    }
    return names;
  }
  for (Eigen::Index i = 0; i < manifold.point_size(); ++i) {
    names.push_back("c" + std::to_string(i + 1));
  }
  return names;
}

PlotBundle emit_plot_data(const Manifold& manifold, const FitResult& fit,
                          const TimedDataset& data, int samples) {
  if (samples < 2) throw std::invalid_argument("emit_plot_data: samples must be >= 2");
  PlotBundle bundle;
  bundle.coordinate_names = coordinate_names(manifold);

  const auto* kendall_space = dynamic_cast<const KendallShapeSpace*>(&manifold);
  Vec reference;
  if (kendall_space) reference = frechet_mean(manifold, data.points());
  const auto display = [&](const Vec& p) -> Vec {
    return kendall_space ? kendall_space->procrustes_align(p, reference).aligned : p;
  };

  const auto push = [](std::vector<std::vector<double>>& rows, double a, double b,
                       const Vec& p) {
    std::vector<double> row{a, b};
    row.insert(row.end(), p.data(), p.data() + p.size());
    rows.push_back(std::move(row));
  };

  for (int i = 0; i < samples; ++i) {
    const double u = static_cast<double>(i) / (samples - 1);
    const Vec& p = fit.trajectory.states[fit.trajectory.node_for_time(u)].gamma;
    push(bundle.curves, fit.order, fit.time_map.to_original(u), display(p));
  }
  for (const auto& o : data.observations()) {
    push(bundle.observations, static_cast<double>(o.index), o.time, display(o.point));
  }
  return bundle;
}

namespace {

Json vec_json(const Vec& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json state_json(const PolynomialState& s) {
  Json vels = Json::array();
  for (const auto& v : s.vels) vels.push_back(vec_json(v));
  return Json{{"gamma", vec_json(s.gamma)}, {"vels", vels}};
}

Json fit_json(const FitResult& r) {
  Json j;
  j["order"] = r.order;
  j["converged"] = r.converged;
  j["termination"] = r.termination;
  j["iterations"] = r.iterations;
  j["gradient_norm"] = r.gradient_norm;
  j["sse"] = r.sse;
  j["frechet_variance"] = r.frechet_variance;
  j["r_squared"] = r.r_squared ? Json(*r.r_squared) : Json(nullptr);
  j["collinearity"] = r.collinearity ? Json(*r.collinearity) : Json(nullptr);
  j["params_internal"] = state_json(r.params);
  j["params_original"] = state_json(r.params_original);
  j["trace"] = r.trace;
  j["warnings"] = r.warnings;
  return j;
}

void write_rows(const std::filesystem::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << format_double(row[i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("error while writing '" + path.string() + "'");
}

}  // namespace

RunReport run_regression(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto records = parse_landmarks(config.input, landmark_format_for(config.input));
  const auto manifold = make_manifold(config, records);
  const TimedDataset data = to_dataset(*manifold, records);
  log << "read " << records.size() << " records from " << config.input.string() << " ("
      << manifold->name() << ")\n";

  std::vector<int> orders = config.orders;
  std::sort(orders.begin(), orders.end());

  struct Outcome {
    int order = 0;
    std::optional<FitResult> fit;
    std::string error;
  };
  const auto run_one = [&](int order, const std::optional<PolynomialState>& start) {
    Outcome out;
    out.order = order;
    FitConfig fc = config.fit;
    fc.order = order;
    try {
      out.fit = fit_polynomial(*manifold, data, fc, start);
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    return out;
  };

  std::vector<Outcome> outcomes;
  if (config.warm_start) {
    std::optional<PolynomialState> warm;
    for (int k : orders) {
      outcomes.push_back(run_one(k, warm));
      if (outcomes.back().fit) warm = outcomes.back().fit->params;
    }
  } else {
    std::vector<std::future<Outcome>> jobs;
    for (int k : orders) {
      jobs.push_back(std::async(std::launch::async, run_one, k, std::nullopt));
    }
    for (auto& job : jobs) outcomes.push_back(job.get());
  }

  RunReport report;
  Json fits = Json::array();
  std::vector<std::vector<double>> curve_rows, plot_curve_rows, residual_rows;
  std::vector<std::vector<double>> plot_observation_rows;
  const auto names = coordinate_names(*manifold);

  for (const auto& o : outcomes) {
    if (!o.fit) {
      report.failures.emplace_back(o.order, o.error);
      log << "order " << o.order << ": failed: " << o.error << '\n';
      fits.push_back(Json{{"order", o.order}, {"converged", false}, {"error", o.error}});
      continue;
    }
    const FitResult& r = *o.fit;
    report.all_converged = report.all_converged && r.converged;
    log << "order " << r.order << ": sse " << format_double(r.sse) << ", R^2 "
        << (r.r_squared ? format_double(*r.r_squared) : std::string("undefined")) << ", "
        << r.iterations << " iterations, " << r.termination << '\n';
    fits.push_back(fit_json(r));

    for (int i = 0; i < config.samples; ++i) {
      const double u = static_cast<double>(i) / (config.samples - 1);
      const Vec& p = r.trajectory.states[r.trajectory.node_for_time(u)].gamma;
      std::vector<double> row{static_cast<double>(r.order), r.time_map.to_original(u), u};
      row.insert(row.end(), p.data(), p.data() + p.size());
      curve_rows.push_back(std::move(row));
    }
    for (const auto& obs : data.observations()) {
      const double u = std::clamp(r.time_map.to_internal(obs.time), 0.0, 1.0);
      const Vec& p = r.trajectory.states[r.trajectory.node_for_time(u)].gamma;
      residual_rows.push_back({static_cast<double>(r.order), static_cast<double>(obs.index),
                               obs.time, manifold->dist(p, obs.point)});
    }
    const PlotBundle plot = emit_plot_data(*manifold, r, data, config.samples);
    plot_curve_rows.insert(plot_curve_rows.end(), plot.curves.begin(), plot.curves.end());
    if (plot_observation_rows.empty()) plot_observation_rows = plot.observations;
  }

  Json doc;
  doc["manifold"] = to_string(config.manifold);
  doc["space"] = manifold->name();
  doc["input"] = config.input.string();
  doc["observations"] = data.size();
  doc["config"] = Json{{"steps_per_unit", config.fit.steps_per_unit},
                       {"max_iters", config.fit.max_iters},
                       {"tol", config.fit.tol},
                       {"optimizer", to_string(config.fit.optimizer)},
                       {"warm_start", config.warm_start}};
  if (config.manifold == ManifoldKind::SO3) {
    doc["config"]["so3_inertia"] = vec_json(config.so3_inertia);
  }
  std::vector<double> times;
  for (const auto& obs : data.observations()) times.push_back(obs.time);
  const TimeMap map = TimeMap::unit_interval(times);
  doc["time_map"] = Json{{"origin", map.origin},
                         {"scale", map.scale},
                         {"note", "internal time = (time - origin) / scale; params_internal use "
                                  "internal time, params_original divide v_i by scale^i"}};
  doc["fits"] = fits;

  std::filesystem::create_directories(config.output_dir);
  {
    std::ofstream out(config.output_dir / "fit.json");
    if (!out) throw std::runtime_error("cannot write fit.json in " + config.output_dir.string());
    out << doc.dump(2) << '\n';
  }

  std::vector<std::string> curve_header{"order", "time", "internal_time"};
  curve_header.insert(curve_header.end(), names.begin(), names.end());
  write_rows(config.output_dir / "curves.csv", curve_header, curve_rows);

  // Residual rows carry the record id, so they are written separately.
  {
    std::ofstream out(config.output_dir / "residuals.csv");
    if (!out) throw std::runtime_error("cannot write residuals.csv");
    out << "order,index,id,time,distance\n";
    for (const auto& row : residual_rows) {
      const auto index = static_cast<std::size_t>(row[1]);
      out << format_double(row[0]) << ',' << index << ',' << records[index].id << ','
          << format_double(row[2]) << ',' << format_double(row[3]) << '\n';
    }
  }

  std::vector<std::string> plot_header{"order", "time"};
  plot_header.insert(plot_header.end(), names.begin(), names.end());
  write_rows(config.output_dir / "plot_curves.csv", plot_header, plot_curve_rows);
  std::vector<std::string> obs_header{"index", "time"};
  obs_header.insert(obs_header.end(), names.begin(), names.end());
  write_rows(config.output_dir / "plot_observations.csv", obs_header, plot_observation_rows);

  for (auto& o : outcomes) {
    if (o.fit) report.fits.push_back(std::move(*o.fit));
  }
  return report;
}

std::vector<std::vector<double>> simulate_nested_curves(const Manifold& manifold, int order,
                                                        int steps, std::uint64_t seed) {
  if (order < 1 || order > 6) throw std::invalid_argument("simulate: order must be in [1, 6]");
  std::mt19937_64 rng(seed);
  const Vec base = manifold.random_point(rng);
  std::vector<Vec> vectors;
  for (int j = 0; j < order; ++j) {
    // Larger higher-order vectors make the departures from the geodesic visible.
    vectors.push_back(std::pow(2.0, j) * manifold.random_tangent(base, rng));
  }
  std::vector<std::vector<double>> rows;
  for (int k = 1; k <= order; ++k) {
    const PolynomialState s{base, std::vector<Vec>(vectors.begin(), vectors.begin() + k)};
    const Trajectory traj = integrate_polynomial(manifold, s, 1.0, steps);
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
      std::vector<double> row{static_cast<double>(k), traj.time(n)};
      const Vec& p = traj.states[n].gamma;
      row.insert(row.end(), p.data(), p.data() + p.size());
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace polyreg
