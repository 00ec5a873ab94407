// Command-line surface: samplers, adversarial distances, Monte-Carlo
// radius search, closed-form bounds, quantization, and the experiment
// pipelines with CSV/JSON reports.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "noisebound/bounds.hpp"
#include "noisebound/dataset_io.hpp"
#include "noisebound/experiments.hpp"
#include "noisebound/geometry.hpp"
#include "noisebound/models.hpp"
#include "noisebound/noise.hpp"
#include "noisebound/quantize.hpp"
#include "noisebound/robustness.hpp"

namespace nb = noisebound;
using nlohmann::json;

namespace {

nb::Vector parse_vector(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      values.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw nb::ConfigError("cannot parse coordinate '" + cell + "'");
    }
  }
  if (values.empty()) throw nb::ConfigError("empty point");
  nb::Vector x(values.size());
  for (size_t i = 0; i < values.size(); ++i) x[i] = values[i];
  return x;
}

std::string format(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct PointSource {
  std::string coords;   // comma-separated values
  std::string dataset;  // CSV dataset path
  int index = 0;

  nb::Vector resolve() const {
    if (!coords.empty()) return parse_vector(coords);
    if (dataset.empty()) {
      throw nb::ConfigError("provide --x or --dataset/--index");
    }
    nb::Dataset data = nb::load_dataset_csv(dataset);
    if (index < 0 || index >= data.size()) {
      throw nb::ConfigError("--index out of range");
    }
    return data.X.row(index);
  }
};

nb::NoiseModel resolve_noise(const std::string& kind, const std::string& p_text,
                             const std::string& sigma_path, int d) {
  if (kind == "lp") return nb::LpNoise{nb::parse_p_exponent(p_text)};
  if (kind == "white") {
    return nb::GaussianNoise{nb::CovarianceSpec::white(d)};
  }
  if (kind == "gaussian") {
    if (sigma_path.empty()) {
      throw nb::ConfigError("gaussian noise needs --sigma <file>");
    }
    if (sigma_path.size() > 4 &&
        sigma_path.substr(sigma_path.size() - 4) == ".csv") {
      return nb::GaussianNoise{nb::load_covariance_csv(sigma_path)};
    }
    return nb::GaussianNoise{nb::load_covariance_binary(sigma_path)};
  }
  throw nb::ConfigError("unknown noise kind: " + kind);
}

int run(int argc, char** argv) {
  CLI::App app{"classifier robustness to uniform lp and Gaussian noise"};
  app.require_subcommand(1);

  // ---- sample ----------------------------------------------------------
  auto* sample = app.add_subcommand("sample", "draw noise directions");
  std::string sample_kind = "lp", sample_p = "2", sample_sigma;
  int sample_d = 2, sample_n = 10;
  std::uint64_t sample_seed = 0;
  sample->add_option("--noise", sample_kind, "lp | gaussian | white");
  sample->add_option("--p", sample_p, "lp exponent (or 'inf')");
  sample->add_option("--sigma", sample_sigma, "covariance file (.csv or binary)");
  sample->add_option("--d", sample_d, "dimension");
  sample->add_option("--n", sample_n, "number of draws");
  sample->add_option("--seed", sample_seed, "rng seed");
  sample->callback([&]() {
    nb::NoiseModel noise =
        resolve_noise(sample_kind, sample_p, sample_sigma, sample_d);
    if (const auto* g = std::get_if<nb::GaussianNoise>(&noise)) {
      sample_d = g->sigma.dim();
    }
    for (int i = 0; i < sample_n; ++i) {
      nb::RngStream rng(sample_seed, i);
      nb::Vector v = nb::sample_noise(noise, sample_d, rng);
      for (int j = 0; j < sample_d; ++j) {
        std::cout << format(v[j]) << (j + 1 == sample_d ? "\n" : ",");
      }
    }
  });

  // ---- adversarial -----------------------------------------------------
  auto* adv = app.add_subcommand("adversarial",
                                 "minimal perturbation to the boundary");
  std::string adv_model, adv_p = "2";
  PointSource adv_point;
  adv->add_option("--model", adv_model, "model JSON")->required();
  adv->add_option("--p", adv_p, "lp exponent (or 'inf')");
  adv->add_option("--x", adv_point.coords, "point as comma-separated values");
  adv->add_option("--dataset", adv_point.dataset, "dataset CSV");
  adv->add_option("--index", adv_point.index, "row in --dataset");
  adv->callback([&]() {
    auto model = nb::load_model(adv_model);
    nb::Vector x = adv_point.resolve();
    nb::AdversarialResult result =
        nb::min_perturbation(*model, x, nb::parse_p_exponent(adv_p), {});
    json doc;
    doc["norm"] = result.norm;
    doc["p"] = result.p.str();
    doc["target_class"] = result.target_class;
    doc["iterations"] = result.iterations;
    doc["converged"] = result.converged;
    std::vector<double> r(result.r_star.data(),
                          result.r_star.data() + result.r_star.size());
    doc["r_star"] = r;
    std::cout << doc.dump(2) << "\n";
  });

  // ---- radius ----------------------------------------------------------
  auto* radius = app.add_subcommand("radius", "Monte-Carlo robustness radius");
  std::string rad_model, rad_noise = "lp", rad_p = "2", rad_sigma;
  std::string rad_search = "bisection";
  PointSource rad_point;
  double rad_eps = 0.015, rad_lo = 1e-3, rad_hi = 1.0, rad_tol = 1e-3;
  double rad_min = 0.0, rad_max = 1.0;
  int rad_steps = 50, rad_refine = 2, rad_n = 10000;
  std::uint64_t rad_seed = 0;
  radius->add_option("--model", rad_model)->required();
  radius->add_option("--noise", rad_noise, "lp | gaussian | white");
  radius->add_option("--p", rad_p);
  radius->add_option("--sigma", rad_sigma);
  radius->add_option("--x", rad_point.coords);
  radius->add_option("--dataset", rad_point.dataset);
  radius->add_option("--index", rad_point.index);
  radius->add_option("--epsilon", rad_eps);
  radius->add_option("--n-samples", rad_n);
  radius->add_option("--seed", rad_seed);
  radius->add_option("--search", rad_search, "bisection | grid");
  radius->add_option("--alpha-lo", rad_lo);
  radius->add_option("--alpha-hi", rad_hi);
  radius->add_option("--tol", rad_tol);
  radius->add_option("--alpha-min", rad_min);
  radius->add_option("--alpha-max", rad_max);
  radius->add_option("--steps", rad_steps);
  radius->add_option("--refine-rounds", rad_refine);
  radius->callback([&]() {
    auto model = nb::load_model(rad_model);
    nb::RobustnessQuery query;
    query.x = rad_point.resolve();
    query.noise = resolve_noise(rad_noise, rad_p, rad_sigma,
                                static_cast<int>(query.x.size()));
    query.epsilon = rad_eps;
    query.n_samples = rad_n;
    query.seed = rad_seed;
    if (rad_search == "bisection") {
      query.search = nb::BisectionSearch{rad_lo, rad_hi, rad_tol};
    } else if (rad_search == "grid") {
      query.search = nb::GridSearch{rad_min, rad_max, rad_steps, rad_refine};
    } else {
      throw nb::ConfigError("unknown search: " + rad_search);
    }
    nb::RobustnessResult result = nb::robustness_radius(*model, query);
    json doc;
    doc["radius"] = result.radius;
    doc["p_hat_at_radius"] = result.p_hat_at_radius;
    doc["wilson_ci"] = {result.wilson_ci.first, result.wilson_ci.second};
    json trace = json::array();
    for (const auto& t : result.trace) {
      trace.push_back({{"alpha", t.alpha}, {"p_hat", t.p_hat}, {"n", t.n}});
    }
    doc["trace"] = trace;
    std::cout << doc.dump(2) << "\n";
  });

  // ---- bounds ----------------------------------------------------------
  auto* bounds = app.add_subcommand("bounds", "closed-form bound report");
  std::string bnd_model, bnd_w, bnd_p = "2", bnd_sigma, bnd_noise = "lp";
  double bnd_eps = 0.015, bnd_C0 = 1.0, bnd_c0 = 1.0, bnd_zeta0 = 0.72;
  double bnd_gamma = -1.0, bnd_eta = 0.0, bnd_rstar = 0.0;
  bool bnd_alt = false;
  bounds->add_option("--model", bnd_model, "model JSON (binary linear)");
  bounds->add_option("--w", bnd_w, "weight vector, comma-separated");
  bounds->add_option("--noise", bnd_noise, "lp | gaussian | white");
  bounds->add_option("--p", bnd_p);
  bounds->add_option("--sigma", bnd_sigma);
  bounds->add_option("--epsilon", bnd_eps);
  bounds->add_option("--C0", bnd_C0);
  bounds->add_option("--c0", bnd_c0);
  bounds->add_option("--zeta0", bnd_zeta0);
  bounds->add_flag("--alt-lower", bnd_alt, "use the improved lower constant");
  bounds->add_option("--gamma", bnd_gamma,
                     "locally-flat slack; enables the LAF variant");
  bounds->add_option("--eta", bnd_eta, "locality radius (LAF variant)");
  bounds->add_option("--r-star", bnd_rstar, "adversarial norm (LAF variant)");
  bounds->callback([&]() {
    nb::Vector w;
    if (!bnd_w.empty()) {
      w = parse_vector(bnd_w);
    } else if (!bnd_model.empty()) {
      auto model = nb::load_model(bnd_model);
      const auto* lin = dynamic_cast<const nb::LinearModel*>(model.get());
      if (!lin) throw nb::ConfigError("--model must be a binary linear model");
      w = lin->weights();
    } else {
      throw nb::ConfigError("provide --w or --model");
    }
    nb::BoundConstants constants{bnd_C0, bnd_c0, bnd_zeta0};
    nb::BoundReport report;
    const bool laf = bnd_gamma >= 0.0;
    const double eta = bnd_eta > 0.0
                           ? bnd_eta
                           : std::numeric_limits<double>::infinity();
    if (bnd_noise == "lp") {
      nb::PExponent p = nb::parse_p_exponent(bnd_p);
      report = laf ? nb::laf_lp_bounds(w, p, bnd_eps, bnd_gamma, eta,
                                       bnd_rstar, constants)
                   : nb::lp_bounds(w, p, bnd_eps, constants, bnd_alt);
      if (!laf) {
        report.estimate = nb::robustness_estimate(
            p, static_cast<int>(w.size()), bnd_rstar > 0 ? bnd_rstar : 1.0,
            bnd_zeta0);
      }
    } else {
      nb::NoiseModel noise = resolve_noise(bnd_noise, bnd_p, bnd_sigma,
                                           static_cast<int>(w.size()));
      const auto& sigma = std::get<nb::GaussianNoise>(noise).sigma;
      report = laf ? nb::laf_gaussian_bounds(w, sigma, bnd_eps, bnd_gamma, eta,
                                             bnd_rstar)
                   : nb::gaussian_bounds(w, sigma, bnd_eps);
    }
    json doc;
    doc["lower"] = report.lower;
    doc["upper"] = report.upper;
    doc["factor"] = report.factor;
    doc["epsilon"] = report.epsilon;
    doc["valid"] = report.valid;
    if (report.estimate) doc["estimate"] = *report.estimate;
    if (report.eta_required) doc["eta_required"] = *report.eta_required;
    std::cout << doc.dump(2) << "\n";
  });

  // ---- quantize --------------------------------------------------------
  auto* quant = app.add_subcommand("quantize",
                                   "uniform quantization / minimal bit depth");
  std::string q_model;
  PointSource q_point;
  int q_bits = 0;
  bool q_dither = false;
  std::uint64_t q_seed = 0;
  double q_zeta0 = 0.72;
  quant->add_option("--x", q_point.coords);
  quant->add_option("--dataset", q_point.dataset);
  quant->add_option("--index", q_point.index);
  quant->add_option("--bits", q_bits, "quantize to this depth and print");
  quant->add_flag("--dither", q_dither);
  quant->add_option("--seed", q_seed);
  quant->add_option("--model", q_model, "model JSON: search minimal depth");
  quant->add_option("--zeta0", q_zeta0);
  quant->callback([&]() {
    nb::Vector x = q_point.resolve();
    if (!q_model.empty()) {
      auto model = nb::load_model(q_model);
      nb::QuantizationReport report =
          nb::min_bits_preserving_label(*model, x, q_dither, q_seed, q_zeta0);
      json doc;
      doc["predicted_bits"] = report.predicted_bits;
      doc["predicted_levels"] = report.predicted_levels;
      doc["predicted_depth"] = report.predicted_depth;
      doc["measured_bits"] = report.measured_bits;
      doc["r_star_inf"] = report.r_star_inf;
      doc["agreed_within_one_bit"] = report.agreed_within_one_bit;
      std::cout << doc.dump(2) << "\n";
      return;
    }
    if (q_bits < 1) throw nb::ConfigError("provide --bits or --model");
    nb::QuantizedImage q = nb::quantize_image(x, q_bits, q_dither, q_seed);
    for (Eigen::Index j = 0; j < q.values.size(); ++j) {
      std::cout << format(q.values[j])
                << (j + 1 == q.values.size() ? "\n" : ",");
    }
    if (q.input_clamped) {
      std::cerr << "warning: input coordinates were clamped to [0, 255]\n";
    }
  });

  // ---- experiment ------------------------------------------------------
  auto* exp = app.add_subcommand("experiment", "run a full experiment");
  std::string exp_kind, exp_config, exp_output;
  int exp_points = -1, exp_samples = -1, exp_threads = -1;
  double exp_eps = -1.0;
  std::optional<std::uint64_t> exp_seed;
  exp->add_option("kind", exp_kind, "lp | gaussian | quantization");
  exp->add_option("--config", exp_config, "JSON config file");
  exp->add_option("--output", exp_output, "report prefix");
  exp->add_option("--epsilon", exp_eps);
  exp->add_option("--n-points", exp_points);
  exp->add_option("--n-samples", exp_samples);
  exp->add_option("--threads", exp_threads);
  std::uint64_t exp_seed_raw = 0;
  auto* seed_opt = exp->add_option("--seed", exp_seed_raw);
  exp->callback([&]() {
    nb::ExperimentConfig config;
    if (!exp_config.empty()) config = nb::load_config(exp_config);
    if (!exp_kind.empty()) config.experiment = exp_kind;
    if (exp_eps > 0.0) config.epsilon = exp_eps;
    if (exp_points > 0) config.n_points = exp_points;
    if (exp_samples > 0) config.n_samples = exp_samples;
    if (exp_threads > 0) config.threads = exp_threads;
    if (seed_opt->count() > 0) config.seed = exp_seed_raw;
    if (!exp_output.empty()) config.output = exp_output;
    nb::ExperimentReport report = nb::run_experiment(config);
    if (!config.output.empty()) {
      nb::write_report(report, config.output);
      std::cerr << "wrote " << config.output << ".csv and " << config.output
                << ".json\n";
    }
    std::cout << report.summary().dump(2) << "\n";
  });

  // ---- calibrate -------------------------------------------------------
  auto* cal = app.add_subcommand(
      "calibrate", "fit zeta0 / C0 / c0 from an lp experiment report");
  std::string cal_report;
  int cal_d = 0;
  double cal_eps = 0.015, cal_margin = 1.05;
  cal->add_option("--report", cal_report, "lp report CSV")->required();
  cal->add_option("--d", cal_d, "data dimension used in the run")->required();
  cal->add_option("--epsilon", cal_eps);
  cal->add_option("--margin", cal_margin);
  cal->callback([&]() {
    std::ifstream in(cal_report);
    if (!in) throw nb::DataError("cannot open: " + cal_report);
    std::string line;
    std::getline(in, line);  // header
    std::vector<nb::CalibrationPair> pairs;
    std::vector<double> ratios;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::vector<std::string> cells;
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() < 10) continue;
      try {
        nb::PExponent p = nb::parse_p_exponent(cells[1]);
        double r_star = std::stod(cells[3]);
        double rad = std::stod(cells[4]);
        if (!std::isfinite(rad)) continue;
        pairs.push_back(nb::CalibrationPair{rad, p, cal_d, r_star});
        const std::string key = "factor=";
        auto pos = cells[9].find(key);
        if (pos != std::string::npos) {
          double factor = std::stod(cells[9].substr(pos + key.size()));
          ratios.push_back(rad / (r_star * factor));
        }
      } catch (const std::exception&) {
        continue;  // non-lp rows
      }
    }
    if (pairs.empty()) throw nb::DataError("no usable rows in " + cal_report);
    json doc;
    doc["zeta0"] = nb::calibrate_zeta0(pairs);
    if (!ratios.empty()) {
      nb::BoundConstants constants =
          nb::calibrate_constants(ratios, cal_eps, cal_margin);
      doc["C0"] = constants.C0;
      doc["c0"] = constants.c0;
    }
    doc["pairs"] = pairs.size();
    std::cout << doc.dump(2) << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // flag errors are config errors
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const nb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nb::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const nb::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
