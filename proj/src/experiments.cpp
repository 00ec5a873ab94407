#include "noisebound/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "noisebound/dataset_io.hpp"
#include "noisebound/geometry.hpp"
#include "noisebound/quantize.hpp"
#include "noisebound/robustness.hpp"
#include "noisebound/rng.hpp"
#include "noisebound/stats.hpp"

namespace noisebound {

using nlohmann::json;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Row values round-trip through the printed text, so a reader that
// recomputes the flag from the file always agrees with it.
bool within_printed_bounds(double lower, double radius, double upper) {
  const double lo = std::strtod(format_double(lower).c_str(), nullptr);
  const double ra = std::strtod(format_double(radius).c_str(), nullptr);
  const double up = std::strtod(format_double(upper).c_str(), nullptr);
  return lo <= ra && ra <= up;
}

// Runs fn(i) for i in [0, n) on `threads` workers; results are indexed,
// so the output is independent of scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::future<void>> futures;
  for (int t = 0; t < threads; ++t) {
    futures.push_back(std::async(std::launch::async, worker));
  }
  for (auto& f : futures) f.get();
}

}  // namespace

Dataset make_blobs(int d, int n, double separation, std::uint64_t seed,
                   int classes) {
  if (d < 2 || n < 2) throw ConfigError("make_blobs needs d >= 2 and n >= 2");
  if (classes < 2) throw ConfigError("make_blobs needs at least 2 classes");
  RngStream dir_rng(seed, 0);
  std::vector<Vector> means;
  if (classes == 2) {
    Vector u(d);
    for (int i = 0; i < d; ++i) u[i] = dir_rng.normal();
    u.normalize();
    means.push_back(-separation / 2.0 * u);
    means.push_back(separation / 2.0 * u);
  } else {
    for (int k = 0; k < classes; ++k) {
      Vector u(d);
      for (int i = 0; i < d; ++i) u[i] = dir_rng.normal();
      u.normalize();
      means.push_back(separation / 2.0 * u);
    }
  }
  Dataset data;
  data.X.resize(n, d);
  data.labels.resize(n);
  data.classes = classes;
  for (int i = 0; i < n; ++i) {
    const int k = i % classes;
    RngStream rng(seed, static_cast<std::uint64_t>(i) + 1);
    for (int j = 0; j < d; ++j) data.X(i, j) = means[k][j] + rng.normal();
    data.labels[i] = k;
  }
  return data;
}

Dataset make_blob_images(int side, int n, std::uint64_t seed) {
  if (side < 4 || n < 2) {
    throw ConfigError("make_blob_images needs side >= 4 and n >= 2");
  }
  const int d = side * side;
  Dataset data;
  data.X.resize(n, d);
  data.labels.resize(n);
  data.classes = 2;
  const double c0 = side * 0.40, c1 = side * 0.60;
  for (int s = 0; s < n; ++s) {
    const int k = s % 2;
    RngStream rng(seed, static_cast<std::uint64_t>(s) + 1);
    const double center = (k == 0) ? c0 : c1;
    const double ci = center + rng.uniform(-2.0, 2.0);
    const double cj = center + rng.uniform(-2.0, 2.0);
    const double amp = rng.uniform(40.0, 230.0);
    const double width = rng.uniform(1.8, 4.0);
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        const double dist2 = (i - ci) * (i - ci) + (j - cj) * (j - cj);
        double v = amp * std::exp(-dist2 / (2.0 * width * width)) +
                   rng.normal() * 10.0;
        data.X(s, i * side + j) = std::clamp(v, 0.0, 255.0);
      }
    }
    data.labels[s] = k;
  }
  return data;
}

std::vector<PExponent> ExperimentConfig::default_p_grid() {
  return {PExponent(1.0), PExponent(1.5), PExponent(2.0), PExponent(3.0),
          PExponent(5.0), PExponent::infinity()};
}

void ExperimentConfig::validate() const {
  if (experiment != "lp" && experiment != "gaussian" &&
      experiment != "quantization") {
    throw ConfigError("unknown experiment: " + experiment);
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("epsilon must be in (0, 1)");
  }
  if (experiment == "gaussian" && epsilon >= 1.0 / 3.0) {
    throw ConfigError("gaussian experiment needs epsilon < 1/3");
  }
  if (n_samples < 100) throw ConfigError("n_samples must be >= 100");
  if (n_points < 1) throw ConfigError("n_points must be >= 1");
  if (p_grid.empty() && experiment == "lp") {
    throw ConfigError("lp experiment needs a non-empty p grid");
  }
  if (gaussian_noise != "white" && gaussian_noise != "signal") {
    throw ConfigError("gaussian noise must be 'white' or 'signal'");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError("gamma must be in [0, 1)");
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
  constants.validate();
}

Dataset build_dataset(const DatasetSpec& spec) {
  if (const auto* blobs = std::get_if<BlobsSpec>(&spec)) {
    return make_blobs(blobs->d, blobs->n, blobs->separation, blobs->seed,
                      blobs->classes);
  }
  if (const auto* images = std::get_if<BlobImagesSpec>(&spec)) {
    return make_blob_images(images->side, images->n, images->seed);
  }
  const auto& file = std::get<FileDatasetSpec>(spec);
  if (file.format == "csv") return load_dataset_csv(file.path);
  if (file.format == "idx") {
    return load_dataset_idx(file.path, file.labels_path);
  }
  throw ConfigError("unknown dataset format: " + file.format);
}

std::unique_ptr<DifferentiableClassifier> build_model(
    const ModelSpec& spec, const Dataset& data, double* train_accuracy) {
  if (const auto* file = std::get_if<FileModelSpec>(&spec)) {
    if (train_accuracy) *train_accuracy = kNaN;
    return load_model(file->path);
  }
  const auto& trained = std::get<TrainedModelSpec>(spec);
  if (trained.kind == "logistic") {
    LogisticFit fit = train_logistic(data, trained.train);
    if (train_accuracy) *train_accuracy = fit.train_accuracy;
    return std::make_unique<LinearModel>(std::move(fit.model));
  }
  if (trained.kind == "mlp") {
    MlpFit fit = train_mlp(data, trained.train);
    if (train_accuracy) *train_accuracy = fit.train_accuracy;
    return std::make_unique<MlpModel>(std::move(fit.model));
  }
  throw ConfigError("unknown model kind: " + trained.kind);
}

namespace {

struct PairMeasurement {
  int point_id = -1;
  double r_star = kNaN;
  double radius = kNaN;
  double factor = kNaN;   // lp_factor of the relevant normal direction
  double estimate_base = kNaN;  // estimate at zeta0 = 1
  Vector normal;          // w for bounds (gradient at x* when nonlinear)
  double eta_required = kNaN;
  bool ok = false;
  std::string note;
};

void finalize_common(ExperimentReport& report) {
  std::vector<double> radii, ratios;
  int within = 0, finite = 0;
  for (const auto& row : report.rows) {
    if (!std::isfinite(row.radius)) continue;
    ++finite;
    radii.push_back(row.radius);
    if (row.r_star > 0.0) ratios.push_back(row.radius / row.r_star);
    if (row.within_bounds) ++within;
  }
  report.within_bounds_rate = finite ? static_cast<double>(within) / finite : 0.0;
  if (!radii.empty()) report.median_radius = median(radii);
  if (!ratios.empty()) report.median_ratio = median(ratios);
}

}  // namespace

ExperimentReport run_lp_experiment(const ExperimentConfig& config) {
  config.validate();
  Dataset data = build_dataset(config.dataset);
  double train_acc = kNaN;
  auto model = build_model(config.model, data, &train_acc);
  const auto* linear = dynamic_cast<const LinearModel*>(model.get());
  const int d = model->dim();
  if (d != data.dim()) throw ConfigError("model/dataset dimension mismatch");

  const int n_points = std::min(config.n_points, data.size());
  ExperimentReport report;
  report.experiment = "lp";
  report.constants_used = config.constants;

  std::vector<std::vector<PairMeasurement>> measured(config.p_grid.size());
  int skipped = 0;

  for (size_t pi = 0; pi < config.p_grid.size(); ++pi) {
    const PExponent p = config.p_grid[pi];
    const NoiseModel noise = LpNoise{p};
    const NoiseBank bank(noise, d, config.n_samples,
                         config.seed + 1000003ULL * pi);
    measured[pi].resize(n_points);
    parallel_for(n_points, config.threads, [&](int i) {
      PairMeasurement& m = measured[pi][i];
      m.point_id = i;
      const Vector x = data.X.row(i);
      std::optional<AdversarialResult> adv;
      try {
        adv = min_perturbation(*model, x, p, {});
      } catch (const NumericError&) {
        m.note = "on_boundary";
        return;
      }
      if (!adv->converged) {
        m.note = "adversarial_unconverged";
        return;
      }
      m.r_star = adv->norm;
      if (linear) {
        m.normal = linear->weights();
      } else {
        // gradient at the boundary point plays the role of w
        const auto* diff =
            dynamic_cast<const DifferentiableClassifier*>(model.get());
        const Vector xstar = x + adv->r_star;
        m.normal = diff->num_classes() == 2
                       ? diff->gradient(xstar)
                       : diff->gradient(xstar, model->label(x),
                                        adv->target_class);
      }
      m.factor = lp_factor(m.normal, p);
      m.estimate_base = robustness_estimate(p, d, m.r_star, 1.0);

      const double guess = std::max(m.r_star * m.factor, 1e-12);
      RobustnessQuery query;
      query.x = x;
      query.noise = noise;
      query.epsilon = config.epsilon;
      query.n_samples = config.n_samples;
      if (linear) {
        query.search = BisectionSearch{1e-3 * guess, guess, 1e-3};
      } else {
        query.search = GridSearch{0.0, 2.0 * guess, 50, 2};
      }
      const RobustnessResult rr = robustness_radius(*model, query, bank);
      m.radius = rr.radius;
      m.ok = true;
    });
    for (const auto& m : measured[pi]) {
      if (!m.ok) ++skipped;
    }
  }

  // Optional one-time calibration from this run's own finite pairs.
  BoundConstants constants = config.constants;
  std::vector<double> ratio_over_factor;
  std::vector<CalibrationPair> zpairs;
  for (size_t pi = 0; pi < config.p_grid.size(); ++pi) {
    for (const auto& m : measured[pi]) {
      if (!m.ok || !std::isfinite(m.radius)) continue;
      ratio_over_factor.push_back(m.radius / (m.r_star * m.factor));
      zpairs.push_back(
          CalibrationPair{m.radius, config.p_grid[pi], d, m.r_star});
    }
  }
  if (config.calibrate && !ratio_over_factor.empty()) {
    constants = calibrate_constants(ratio_over_factor, config.epsilon, 1.05,
                                    config.constants.zeta0);
  }
  report.zeta0_calibrated =
      zpairs.empty() ? config.constants.zeta0 : calibrate_zeta0(zpairs);
  report.constants_used = constants;
  const double zeta0_rows =
      config.calibrate ? report.zeta0_calibrated : config.constants.zeta0;

  int est_ok = 0, est_total = 0;
  for (int i = 0; i < n_points; ++i) {
    for (size_t pi = 0; pi < config.p_grid.size(); ++pi) {
      const PExponent p = config.p_grid[pi];
      const PairMeasurement& m = measured[pi][i];
      if (!m.ok) continue;
      ReportRow row;
      row.point_id = m.point_id;
      row.p_or_sigma = p.str();
      row.eps = config.epsilon;
      row.r_star = m.r_star;
      row.radius = m.radius;
      BoundReport bound;
      if (linear) {
        bound = lp_bounds(m.normal, p, config.epsilon, constants,
                          config.alt_lower);
      } else {
        bound = laf_lp_bounds(m.normal, p, config.epsilon, config.gamma, kInf,
                              m.r_star, constants);
      }
      row.lower = bound.lower * m.r_star;
      row.upper = bound.upper * m.r_star;
      row.estimate = zeta0_rows * m.estimate_base;
      row.within_bounds =
          std::isfinite(m.radius) &&
          within_printed_bounds(row.lower, m.radius, row.upper);
      std::ostringstream extra;
      extra << "factor=" << format_double(m.factor)
            << ";valid=" << (bound.valid ? 1 : 0);
      if (!std::isfinite(m.radius)) extra << ";radius=inf";
      row.extra = extra.str();
      report.rows.push_back(std::move(row));

      if (std::isfinite(m.radius)) {
        ++est_total;
        if (std::abs(row.estimate - m.radius) <= 0.3 * m.radius) ++est_ok;
      } else {
        ++report.infinite_count;
      }
    }
  }
  report.skipped_count = skipped;
  report.estimate_agreement_rate =
      est_total ? static_cast<double>(est_ok) / est_total : 0.0;
  finalize_common(report);
  return report;
}

ExperimentReport run_gaussian_experiment(const ExperimentConfig& config) {
  config.validate();
  Dataset data = build_dataset(config.dataset);
  double train_acc = kNaN;
  auto model = build_model(config.model, data, &train_acc);
  const auto* linear = dynamic_cast<const LinearModel*>(model.get());
  const int d = model->dim();
  if (d != data.dim()) throw ConfigError("model/dataset dimension mismatch");
  const bool white = config.gaussian_noise == "white";

  const int n_points = std::min(config.n_points, data.size());
  ExperimentReport report;
  report.experiment = "gaussian";
  report.constants_used = config.constants;
  report.zeta0_calibrated = config.constants.zeta0;

  std::shared_ptr<const CovarianceSpec> white_sigma;
  std::shared_ptr<const NoiseBank> white_bank;
  if (white) {
    white_sigma = std::make_shared<CovarianceSpec>(CovarianceSpec::white(d));
    white_bank = std::make_shared<NoiseBank>(
        NoiseModel{GaussianNoise{*white_sigma}}, d, config.n_samples,
        config.seed);
  }

  struct GaussRow {
    bool ok = false;
    bool skipped = false;
    double r_star = kNaN, radius = kNaN, lower = kNaN, upper = kNaN;
    double whiteness = kNaN;
  };
  std::vector<GaussRow> rows(n_points);

  parallel_for(n_points, config.threads, [&](int i) {
    GaussRow& out = rows[i];
    const Vector x = data.X.row(i);
    std::optional<AdversarialResult> adv;
    try {
      adv = min_perturbation(*model, x, PExponent(2.0), {});
    } catch (const NumericError&) {
      out.skipped = true;
      return;
    }
    if (!adv->converged) {
      out.skipped = true;
      return;
    }
    out.r_star = adv->norm;

    std::shared_ptr<const CovarianceSpec> sigma = white_sigma;
    std::shared_ptr<const NoiseBank> bank = white_bank;
    if (!white) {
      try {
        SignalSigma ss = signal_dependent_sigma(x, config.signal_threshold);
        out.whiteness = ss.whiteness;
        sigma = std::make_shared<CovarianceSpec>(std::move(ss.sigma));
      } catch (const DataError&) {
        out.skipped = true;  // empty support
        return;
      }
      bank = std::make_shared<NoiseBank>(NoiseModel{GaussianNoise{*sigma}}, d,
                                         config.n_samples,
                                         config.seed + 7919ULL * (i + 1));
    }

    Vector normal;
    BoundReport bound;
    try {
      if (linear) {
        normal = linear->weights();
        bound = gaussian_bounds(normal, *sigma, config.epsilon);
      } else {
        const auto* diff =
            dynamic_cast<const DifferentiableClassifier*>(model.get());
        const Vector xstar = x + adv->r_star;
        normal = diff->num_classes() == 2
                     ? diff->gradient(xstar)
                     : diff->gradient(xstar, model->label(x),
                                      adv->target_class);
        bound = laf_gaussian_bounds(normal, *sigma, config.epsilon,
                                    config.gamma, kInf, out.r_star);
      }
    } catch (const NumericError&) {
      out.skipped = true;  // e.g. the normal sits in the null space of Sigma
      return;
    }
    out.lower = bound.lower * out.r_star;
    out.upper = bound.upper * out.r_star;

    const double guess = std::max(out.r_star * bound.factor, 1e-12);
    RobustnessQuery query;
    query.x = x;
    query.noise = GaussianNoise{*sigma};
    query.epsilon = config.epsilon;
    query.n_samples = config.n_samples;
    if (linear) {
      query.search = BisectionSearch{1e-3 * guess, guess, 1e-3};
    } else {
      query.search = GridSearch{0.0, 2.0 * guess, 50, 2};
    }
    out.radius = robustness_radius(*model, query, *bank).radius;
    out.ok = true;
  });

  std::vector<std::pair<double, double>> w_ratio;
  for (int i = 0; i < n_points; ++i) {
    const GaussRow& g = rows[i];
    if (g.skipped) {
      ++report.skipped_count;
      continue;
    }
    ReportRow row;
    row.point_id = i;
    row.p_or_sigma = white ? "white" : "signal";
    row.eps = config.epsilon;
    row.r_star = g.r_star;
    row.radius = g.radius;
    row.lower = g.lower;
    row.upper = g.upper;
    row.estimate = kNaN;
    row.within_bounds = std::isfinite(g.radius) &&
                        within_printed_bounds(g.lower, g.radius, g.upper);
    std::ostringstream extra;
    if (!white) extra << "whiteness=" << format_double(g.whiteness);
    if (!std::isfinite(g.radius)) extra << (white ? "" : ";") << "radius=inf";
    row.extra = extra.str();
    report.rows.push_back(std::move(row));
    if (!std::isfinite(g.radius)) {
      ++report.infinite_count;
    } else if (!white && g.r_star > 0.0) {
      w_ratio.emplace_back(g.whiteness, g.radius / g.r_star);
    }
  }

  // Fig-7 style digest: mean ratio per whiteness quintile.
  if (!w_ratio.empty()) {
    std::sort(w_ratio.begin(), w_ratio.end());
    const int bins = std::min<std::size_t>(5, w_ratio.size());
    const std::size_t per = w_ratio.size() / bins;
    for (int b = 0; b < bins; ++b) {
      const std::size_t begin = b * per;
      const std::size_t end =
          (b + 1 == bins) ? w_ratio.size() : begin + per;
      double mw = 0.0, mr = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        mw += w_ratio[i].first;
        mr += w_ratio[i].second;
      }
      const double cnt = static_cast<double>(end - begin);
      report.whiteness_bins.emplace_back(mw / cnt, mr / cnt);
    }
  }
  finalize_common(report);
  return report;
}

ExperimentReport run_quantization_experiment(const ExperimentConfig& config) {
  config.validate();
  Dataset data = build_dataset(config.dataset);
  double train_acc = kNaN;
  auto model = build_model(config.model, data, &train_acc);
  const int d = model->dim();
  if (d != data.dim()) throw ConfigError("model/dataset dimension mismatch");

  const int n_points = std::min(config.n_points, data.size());
  ExperimentReport report;
  report.experiment = "quantization";
  report.constants_used = config.constants;
  report.zeta0_calibrated = config.constants.zeta0;

  struct QRow {
    bool ok = false;
    QuantizationReport q;
  };
  std::vector<QRow> rows(n_points);
  parallel_for(n_points, config.threads, [&](int i) {
    const Vector x = data.X.row(i);
    std::optional<AdversarialResult> adv;
    try {
      adv = min_perturbation(*model, x, PExponent::infinity(), {});
    } catch (const NumericError&) {
      return;
    }
    if (!adv->converged || !(adv->norm > 0.0)) return;
    rows[i].q = min_bits_preserving_label(*model, x, config.dither,
                                          config.seed + 31ULL * (i + 1),
                                          config.constants.zeta0, adv->norm);
    rows[i].ok = true;
  });

  int agreed = 0, total = 0;
  for (int i = 0; i < n_points; ++i) {
    if (!rows[i].ok) {
      ++report.skipped_count;
      continue;
    }
    const QuantizationReport& q = rows[i].q;
    ReportRow row;
    row.point_id = i;
    row.p_or_sigma = "quant";
    row.eps = config.epsilon;
    row.r_star = q.r_star_inf;
    row.radius = q.measured_bits;
    row.lower = q.predicted_depth - 1;
    row.upper = q.predicted_depth + 1;
    row.estimate = q.predicted_bits;
    row.within_bounds = q.agreed_within_one_bit;
    std::ostringstream extra;
    extra << "levels=" << format_double(q.predicted_levels)
          << ";log2_rstar=" << format_double(std::log2(q.r_star_inf))
          << ";depth=" << q.predicted_depth;
    row.extra = extra.str();
    report.rows.push_back(std::move(row));
    ++total;
    if (q.agreed_within_one_bit) ++agreed;
  }
  report.within_bounds_rate = total ? static_cast<double>(agreed) / total : 0.0;
  report.estimate_agreement_rate = report.within_bounds_rate;
  std::vector<double> bits;
  for (const auto& row : report.rows) bits.push_back(row.radius);
  if (!bits.empty()) report.median_radius = median(bits);
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  if (config.experiment == "lp") return run_lp_experiment(config);
  if (config.experiment == "gaussian") return run_gaussian_experiment(config);
  if (config.experiment == "quantization") {
    return run_quantization_experiment(config);
  }
  throw ConfigError("unknown experiment: " + config.experiment);
}

std::string report_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "point_id,p_or_sigma,eps,r_star,radius,lower,upper,estimate,"
         "within_bounds,extra\n";
  for (const auto& row : report.rows) {
    out << row.point_id << ',' << row.p_or_sigma << ','
        << format_double(row.eps) << ',' << format_double(row.r_star) << ','
        << format_double(row.radius) << ',' << format_double(row.lower) << ','
        << format_double(row.upper) << ',' << format_double(row.estimate)
        << ',' << (row.within_bounds ? 1 : 0) << ',' << row.extra << '\n';
  }
  return out.str();
}

json ExperimentReport::summary() const {
  json doc;
  doc["experiment"] = experiment;
  doc["rows"] = rows.size();
  doc["within_bounds_rate"] = within_bounds_rate;
  doc["estimate_agreement_rate"] = estimate_agreement_rate;
  doc["median_radius"] = median_radius;
  doc["median_ratio"] = median_ratio;
  doc["infinite_count"] = infinite_count;
  doc["skipped_count"] = skipped_count;
  doc["zeta0_calibrated"] = zeta0_calibrated;
  doc["constants"] = {{"C0", constants_used.C0},
                      {"c0", constants_used.c0},
                      {"zeta0", constants_used.zeta0}};
  if (!whiteness_bins.empty()) {
    json bins = json::array();
    for (const auto& [w, r] : whiteness_bins) {
      bins.push_back({{"mean_whiteness", w}, {"mean_ratio", r}});
    }
    doc["whiteness_bins"] = bins;
  }
  return doc;
}

void write_report(const ExperimentReport& report, const std::string& prefix) {
  {
    std::ofstream out(prefix + ".csv", std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + prefix + ".csv");
    out << report_to_csv(report);
  }
  std::ofstream out(prefix + ".json");
  if (!out) throw DataError("cannot open for writing: " + prefix + ".json");
  out << report.summary().dump(2) << "\n";
}

namespace {

PExponent p_from_json(const json& v) {
  if (v.is_string()) return parse_p_exponent(v.get<std::string>());
  return PExponent(v.get<double>());
}

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig config;
  try {
    if (doc.contains("experiment")) config.experiment = doc["experiment"];
    if (doc.contains("dataset")) {
      const json& ds = doc["dataset"];
      const std::string type = ds.value("type", "blobs");
      if (type == "blobs") {
        BlobsSpec spec;
        spec.d = ds.value("d", spec.d);
        spec.n = ds.value("n", spec.n);
        spec.separation = ds.value("separation", spec.separation);
        spec.classes = ds.value("classes", spec.classes);
        spec.seed = ds.value("seed", spec.seed);
        config.dataset = spec;
      } else if (type == "blob_images") {
        BlobImagesSpec spec;
        spec.side = ds.value("side", spec.side);
        spec.n = ds.value("n", spec.n);
        spec.seed = ds.value("seed", spec.seed);
        config.dataset = spec;
      } else if (type == "csv" || type == "idx") {
        FileDatasetSpec spec;
        spec.format = type;
        spec.path = ds.at("path").get<std::string>();
        spec.labels_path = ds.value("labels", "");
        config.dataset = spec;
      } else {
        throw ConfigError("unknown dataset type: " + type);
      }
    }
    if (doc.contains("model")) {
      const json& ms = doc["model"];
      const std::string type = ms.value("type", "logistic");
      if (type == "file") {
        config.model = FileModelSpec{ms.at("path").get<std::string>()};
      } else {
        TrainedModelSpec spec;
        spec.kind = type;
        spec.train.learning_rate =
            ms.value("learning_rate", spec.train.learning_rate);
        spec.train.epochs = ms.value("epochs", spec.train.epochs);
        spec.train.seed = ms.value("seed", spec.train.seed);
        spec.train.weight_decay =
            ms.value("weight_decay", spec.train.weight_decay);
        spec.train.init_scale = ms.value("init_scale", spec.train.init_scale);
        spec.train.input_scale =
            ms.value("input_scale", spec.train.input_scale);
        if (ms.contains("hidden")) {
          spec.train.hidden = ms["hidden"].get<std::vector<int>>();
        }
        config.model = spec;
      }
    }
    if (doc.contains("p_grid")) {
      config.p_grid.clear();
      for (const auto& v : doc["p_grid"]) config.p_grid.push_back(p_from_json(v));
    }
    config.epsilon = doc.value("epsilon", config.epsilon);
    config.n_samples = doc.value("n_samples", config.n_samples);
    config.n_points = doc.value("n_points", config.n_points);
    config.seed = doc.value("seed", config.seed);
    if (doc.contains("constants")) {
      const json& k = doc["constants"];
      config.constants.C0 = k.value("C0", config.constants.C0);
      config.constants.c0 = k.value("c0", config.constants.c0);
      config.constants.zeta0 = k.value("zeta0", config.constants.zeta0);
    }
    config.calibrate = doc.value("calibrate", config.calibrate);
    config.alt_lower = doc.value("alt_lower", config.alt_lower);
    config.gamma = doc.value("gamma", config.gamma);
    config.gaussian_noise = doc.value("gaussian_noise", config.gaussian_noise);
    config.signal_threshold =
        doc.value("signal_threshold", config.signal_threshold);
    config.dither = doc.value("dither", config.dither);
    config.threads = doc.value("threads", config.threads);
    config.output = doc.value("output", config.output);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config JSON parse error: ") + e.what());
  }
  return config_from_json(doc);
}

json config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["experiment"] = config.experiment;
  if (const auto* blobs = std::get_if<BlobsSpec>(&config.dataset)) {
    doc["dataset"] = {{"type", "blobs"},
                      {"d", blobs->d},
                      {"n", blobs->n},
                      {"separation", blobs->separation},
                      {"classes", blobs->classes},
                      {"seed", blobs->seed}};
  } else if (const auto* im = std::get_if<BlobImagesSpec>(&config.dataset)) {
    doc["dataset"] = {{"type", "blob_images"},
                      {"side", im->side},
                      {"n", im->n},
                      {"seed", im->seed}};
  } else {
    const auto& file = std::get<FileDatasetSpec>(config.dataset);
    doc["dataset"] = {{"type", file.format},
                      {"path", file.path},
                      {"labels", file.labels_path}};
  }
  if (const auto* trained = std::get_if<TrainedModelSpec>(&config.model)) {
    doc["model"] = {{"type", trained->kind},
                    {"learning_rate", trained->train.learning_rate},
                    {"epochs", trained->train.epochs},
                    {"seed", trained->train.seed},
                    {"weight_decay", trained->train.weight_decay},
                    {"init_scale", trained->train.init_scale},
                    {"input_scale", trained->train.input_scale},
                    {"hidden", trained->train.hidden}};
  } else {
    doc["model"] = {{"type", "file"},
                    {"path", std::get<FileModelSpec>(config.model).path}};
  }
  json grid = json::array();
  for (const auto& p : config.p_grid) {
    if (p.is_inf()) {
      grid.push_back("inf");
    } else {
      grid.push_back(p.value());
    }
  }
  doc["p_grid"] = grid;
  doc["epsilon"] = config.epsilon;
  doc["n_samples"] = config.n_samples;
  doc["n_points"] = config.n_points;
  doc["seed"] = config.seed;
  doc["constants"] = {{"C0", config.constants.C0},
                      {"c0", config.constants.c0},
                      {"zeta0", config.constants.zeta0}};
  doc["calibrate"] = config.calibrate;
  doc["alt_lower"] = config.alt_lower;
  doc["gamma"] = config.gamma;
  doc["gaussian_noise"] = config.gaussian_noise;
  doc["signal_threshold"] = config.signal_threshold;
  doc["dither"] = config.dither;
  doc["threads"] = config.threads;
  doc["output"] = config.output;
  return doc;
}

}  // namespace noisebound
