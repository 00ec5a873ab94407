#ifndef NOISEBOUND_EXPERIMENTS_HPP
#define NOISEBOUND_EXPERIMENTS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "noisebound/bounds.hpp"
#include "noisebound/models.hpp"

namespace noisebound {

/// Two (or more) spherical Gaussian clusters with means separation/2
/// away from the origin along seeded random unit directions, unit
/// within-class variance. For two classes the means are antipodal.
Dataset make_blobs(int d, int n, double separation, std::uint64_t seed,
                   int classes = 2);

/// Grayscale side x side images of a soft bright blob whose position,
/// amplitude and width vary per class; pixel values in [0, 255].
Dataset make_blob_images(int side, int n, std::uint64_t seed);

struct BlobsSpec {
  int d = 400;
  int n = 2400;
  double separation = 6.0;
  int classes = 2;
  std::uint64_t seed = 1;
};

struct BlobImagesSpec {
  int side = 16;
  int n = 600;
  std::uint64_t seed = 3;
};

struct FileDatasetSpec {
  std::string path;         // CSV path, or IDX image path
  std::string labels_path;  // IDX only
  std::string format = "csv";
};

using DatasetSpec = std::variant<BlobsSpec, BlobImagesSpec, FileDatasetSpec>;

struct TrainedModelSpec {
  std::string kind = "logistic";  // logistic | mlp
  TrainConfig train;
};

struct FileModelSpec {
  std::string path;
};

using ModelSpec = std::variant<TrainedModelSpec, FileModelSpec>;

struct ExperimentConfig {
  std::string experiment = "lp";  // lp | gaussian | quantization
  DatasetSpec dataset = BlobsSpec{};
  ModelSpec model = TrainedModelSpec{};
  std::vector<PExponent> p_grid = default_p_grid();
  double epsilon = 0.015;
  int n_samples = 10000;
  int n_points = 100;
  std::uint64_t seed = 99;
  BoundConstants constants;
  bool calibrate = true;
  bool alt_lower = false;
  double gamma = 0.0;  // locally-flat slack for nonlinear models
  std::string gaussian_noise = "white";  // white | signal
  double signal_threshold = 128.0;
  bool dither = true;
  int threads = 1;
  std::string output;  // prefix for <output>.csv and <output>.json

  static std::vector<PExponent> default_p_grid();
  void validate() const;
};

struct ReportRow {
  int point_id;
  std::string p_or_sigma;
  double eps;
  double r_star;
  double radius;
  double lower;
  double upper;
  double estimate;  // NaN when not applicable
  bool within_bounds;
  std::string extra;
};

struct ExperimentReport {
  std::string experiment;
  std::vector<ReportRow> rows;
  BoundConstants constants_used;
  double zeta0_calibrated = 0.0;
  double within_bounds_rate = 0.0;
  double estimate_agreement_rate = 0.0;  // |estimate - radius| <= 30% radius
  double median_radius = 0.0;
  double median_ratio = 0.0;  // radius / r_star
  int infinite_count = 0;
  int skipped_count = 0;
  std::vector<std::pair<double, double>> whiteness_bins;  // (mean W, mean ratio)

  nlohmann::json summary() const;
};

ExperimentReport run_lp_experiment(const ExperimentConfig& config);
ExperimentReport run_gaussian_experiment(const ExperimentConfig& config);
ExperimentReport run_quantization_experiment(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Formats rows with stable "%.10g" rendering so reruns are
/// byte-identical; the within_bounds flag is recomputed from the
/// printed values so the file is self-consistent.
std::string report_to_csv(const ExperimentReport& report);
void write_report(const ExperimentReport& report, const std::string& prefix);

ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

Dataset build_dataset(const DatasetSpec& spec);
std::unique_ptr<DifferentiableClassifier> build_model(
    const ModelSpec& spec, const Dataset& data, double* train_accuracy);

}  // namespace noisebound

#endif
