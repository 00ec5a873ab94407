#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "noisebound/dataset_io.hpp"
#include "noisebound/experiments.hpp"

using namespace noisebound;

namespace {

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

ExperimentConfig tiny_lp_config() {
  ExperimentConfig config;
  config.experiment = "lp";
  BlobsSpec blobs;
  blobs.d = 10;
  blobs.n = 60;
  blobs.separation = 6.0;
  blobs.seed = 5;
  config.dataset = blobs;
  TrainedModelSpec model;
  model.kind = "logistic";
  model.train.epochs = 80;
  config.model = model;
  config.p_grid = {PExponent(2.0)};
  config.epsilon = 0.1;
  config.n_samples = 400;
  config.n_points = 3;
  config.seed = 17;
  return config;
}

}  // namespace

TEST_CASE("blob generation is deterministic and separable") {
  const Dataset a = make_blobs(20, 200, 6.0, 3);
  const Dataset b = make_blobs(20, 200, 6.0, 3);
  CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);

  TrainConfig config;
  config.epochs = 300;
  CHECK(train_logistic(a, config).train_accuracy >= 0.95);

  // indistinguishable classes hover at chance level
  const Dataset flat = make_blobs(20, 2000, 0.0, 4);
  const double acc = train_logistic(flat, config).train_accuracy;
  CHECK(acc >= 0.45);
  CHECK(acc <= 0.62);
}

TEST_CASE("blob images stay in pixel range and reproduce") {
  const Dataset a = make_blob_images(8, 40, 9);
  const Dataset b = make_blob_images(8, 40, 9);
  CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.X.minCoeff() >= 0.0);
  CHECK(a.X.maxCoeff() <= 255.0);
  CHECK(a.dim() == 64);
}

TEST_CASE("dataset csv parses, round-trips, and names bad lines") {
  const std::string path = "/tmp/nb_ds_test.csv";
  spit(path, "label,f0,f1\n1,0.5,-0.25\n");
  const Dataset one = load_dataset_csv(path);
  CHECK(one.size() == 1);
  CHECK(one.dim() == 2);
  CHECK(one.labels[0] == 1);
  CHECK(one.X(0, 1) == -0.25);

  const Dataset blobs = make_blobs(4, 30, 3.0, 6);
  save_dataset_csv(blobs, path);
  const Dataset back = load_dataset_csv(path);
  CHECK((back.X - blobs.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.labels - blobs.labels).cwiseAbs().maxCoeff() == 0);

  spit(path, "label,f0,f1\n1,0.5\n");
  CHECK_THROWS_WITH_AS(load_dataset_csv(path),
                       doctest::Contains("line 2"), DataError);
  spit(path, "label,f0,f1\n1,0.5,oops\n");
  CHECK_THROWS_WITH_AS(load_dataset_csv(path),
                       doctest::Contains("line 2"), DataError);
  spit(path, "f0,f1\n0.5,0.5\n");
  CHECK_THROWS_AS(load_dataset_csv(path), DataError);
  std::remove(path.c_str());
}

TEST_CASE("idx ingestion parses the big-endian layout") {
  const std::string images = "/tmp/nb_idx_images";
  const std::string labels = "/tmp/nb_idx_labels";
  {
    std::ofstream im(images, std::ios::binary);
    const unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 2,  // 2 images
                                      0, 0, 0, 2, 0, 0, 0, 2}; // 2 x 2
    im.write(reinterpret_cast<const char*>(header), 16);
    const unsigned char pixels[8] = {0, 64, 128, 255, 10, 20, 30, 40};
    im.write(reinterpret_cast<const char*>(pixels), 8);
    std::ofstream lb(labels, std::ios::binary);
    const unsigned char lheader[8] = {0, 0, 8, 1, 0, 0, 0, 2};
    lb.write(reinterpret_cast<const char*>(lheader), 8);
    const unsigned char values[2] = {1, 0};
    lb.write(reinterpret_cast<const char*>(values), 2);
  }
  const Dataset data = ingest_dataset(images, DatasetFormat::kIdx, labels);
  CHECK(data.size() == 2);
  CHECK(data.dim() == 4);
  CHECK(data.X(0, 3) == 255.0);
  CHECK(data.X(1, 0) == 10.0);
  CHECK(data.labels[0] == 1);

  {
    std::ofstream lb(labels, std::ios::binary);
    const unsigned char lheader[8] = {0, 0, 8, 1, 0, 0, 0, 3};  // count 3 != 2
    lb.write(reinterpret_cast<const char*>(lheader), 8);
    const unsigned char values[3] = {1, 0, 1};
    lb.write(reinterpret_cast<const char*>(values), 3);
  }
  CHECK_THROWS_AS(load_dataset_idx(images, labels), DataError);
  {
    std::ofstream im(images, std::ios::binary);
    const unsigned char bad[16] = {0, 0, 9, 9, 0, 0, 0, 1,
                                   0, 0, 0, 1, 0, 0, 0, 1};
    im.write(reinterpret_cast<const char*>(bad), 16);
  }
  CHECK_THROWS_AS(load_dataset_idx(images, labels), DataError);
  std::remove(images.c_str());
  std::remove(labels.c_str());
}

TEST_CASE("a one-point lp run yields exactly one row per point") {
  ExperimentConfig config = tiny_lp_config();
  config.n_points = 1;
  const ExperimentReport report = run_lp_experiment(config);
  CHECK(report.rows.size() == 1);
  CHECK(report.rows[0].lower <= report.rows[0].upper);
}

TEST_CASE("experiment reruns are byte-identical, across thread counts") {
  ExperimentConfig config = tiny_lp_config();
  const std::string a = report_to_csv(run_lp_experiment(config));
  const std::string b = report_to_csv(run_lp_experiment(config));
  CHECK(a == b);
  config.threads = 3;
  const std::string c = report_to_csv(run_lp_experiment(config));
  CHECK(a == c);
}

TEST_CASE("report flags recompute from the printed row values") {
  ExperimentConfig config = tiny_lp_config();
  config.n_points = 4;
  const ExperimentReport report = run_lp_experiment(config);
  std::stringstream csv(report_to_csv(report));
  std::string line;
  std::getline(csv, line);  // header
  int rows = 0;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() >= 10);
    const double r = std::strtod(cells[4].c_str(), nullptr);
    const double lo = std::strtod(cells[5].c_str(), nullptr);
    const double up = std::strtod(cells[6].c_str(), nullptr);
    const bool flag = cells[8] == "1";
    CHECK(flag == (std::isfinite(r) && lo <= r && r <= up));
    ++rows;
  }
  CHECK(rows == static_cast<int>(report.rows.size()));
}

TEST_CASE("calibrated runs bracket their own measurements") {
  ExperimentConfig config = tiny_lp_config();
  config.n_points = 6;
  config.p_grid = {PExponent(1.0), PExponent(2.0), PExponent::infinity()};
  config.calibrate = true;
  const ExperimentReport report = run_lp_experiment(config);
  CHECK(report.within_bounds_rate == 1.0);
  CHECK(report.zeta0_calibrated > 0.0);
}

TEST_CASE("a p=2 run tracks its own calibrated estimate at d=400") {
  // median radius / r*_2 lands within 30% of the per-run constant times
  // sqrt(d) when the grid holds p = 2 alone
  ExperimentConfig config;
  config.experiment = "lp";
  BlobsSpec blobs;
  blobs.d = 400;
  blobs.n = 400;
  blobs.separation = 6.0;
  blobs.seed = 1;
  config.dataset = blobs;
  TrainedModelSpec model;
  model.kind = "logistic";
  model.train.epochs = 150;
  config.model = model;
  config.p_grid = {PExponent(2.0)};
  config.epsilon = 0.015;
  config.n_samples = 4000;
  config.n_points = 25;
  config.seed = 31;
  const ExperimentReport report = run_lp_experiment(config);
  const double sqrt_d = 20.0;
  CHECK(report.median_ratio >= 0.7 * sqrt_d * report.zeta0_calibrated);
  CHECK(report.median_ratio <= 1.3 * sqrt_d * report.zeta0_calibrated);
}

TEST_CASE("nonlinear lp runs use the flat-boundary bounds and grid search") {
  ExperimentConfig config;
  config.experiment = "lp";
  BlobsSpec blobs;
  blobs.d = 8;
  blobs.n = 80;
  blobs.separation = 5.0;
  blobs.seed = 21;
  config.dataset = blobs;
  TrainedModelSpec model;
  model.kind = "mlp";
  model.train.hidden = {6};
  model.train.epochs = 40;
  model.train.learning_rate = 0.1;
  model.train.init_scale = 0.2;
  config.model = model;
  config.p_grid = {PExponent(2.0)};
  config.epsilon = 0.1;
  config.n_samples = 500;
  config.n_points = 4;
  config.gamma = 0.1;
  config.calibrate = false;
  const ExperimentReport report = run_lp_experiment(config);
  CHECK(report.rows.size() + report.skipped_count == 4);
  for (const auto& row : report.rows) {
    CHECK(row.lower < row.upper);
    CHECK(row.r_star > 0.0);
  }
}

TEST_CASE("the gaussian experiment rejects epsilon past a third") {
  ExperimentConfig config = tiny_lp_config();
  config.experiment = "gaussian";
  config.epsilon = 0.34;
  CHECK_THROWS_AS(run_gaussian_experiment(config), ConfigError);
}

TEST_CASE("white gaussian runs produce in-band ratios") {
  ExperimentConfig config = tiny_lp_config();
  config.experiment = "gaussian";
  config.epsilon = 0.15;
  config.n_points = 4;
  config.n_samples = 2000;
  const ExperimentReport report = run_gaussian_experiment(config);
  CHECK(report.rows.size() == 4);
  CHECK(report.within_bounds_rate == 1.0);
}

TEST_CASE("signal-dependent gaussian runs bin ratios by whiteness") {
  ExperimentConfig config;
  config.experiment = "gaussian";
  BlobImagesSpec images;
  images.side = 8;
  images.n = 40;
  images.seed = 2;
  config.dataset = images;
  TrainedModelSpec model;
  model.kind = "logistic";
  model.train.epochs = 150;
  model.train.learning_rate = 1e-4;  // pixel-scale features
  config.model = model;
  config.experiment = "gaussian";
  config.gaussian_noise = "signal";
  config.signal_threshold = 60.0;
  config.epsilon = 0.15;
  config.n_samples = 1000;
  config.n_points = 12;
  const ExperimentReport report = run_gaussian_experiment(config);
  CHECK(report.rows.size() + report.skipped_count == 12);
  CHECK_FALSE(report.whiteness_bins.empty());
  for (const auto& row : report.rows) {
    CHECK(row.extra.find("whiteness=") != std::string::npos);
  }
}

TEST_CASE("all-huge-margin quantization datasets measure one bit") {
  ExperimentConfig config;
  config.experiment = "quantization";
  const std::string model_path = "/tmp/nb_margin_model.json";
  Vector w = Vector::Zero(4);
  w[0] = 1.0;
  save_model(LinearModel(w, -5.0), model_path);
  config.model = FileModelSpec{model_path};
  const std::string data_path = "/tmp/nb_margin_data.csv";
  Dataset data;
  data.X.resize(3, 4);
  data.X << 240, 3, 9, 0, 235, 1, 2, 3, 250, 0, 0, 1;
  data.labels.resize(3);
  data.labels << 1, 1, 1;
  data.classes = 2;
  save_dataset_csv(data, data_path);
  FileDatasetSpec file;
  file.path = data_path;
  file.format = "csv";
  config.dataset = file;
  config.n_points = 3;
  const ExperimentReport report = run_quantization_experiment(config);
  CHECK(report.rows.size() == 3);
  for (const auto& row : report.rows) {
    CHECK(row.radius == 1.0);  // measured_bits
    CHECK(row.extra.find("log2_rstar=") != std::string::npos);
  }
  CHECK(report.within_bounds_rate == 1.0);
  CHECK(report_to_csv(run_quantization_experiment(config)) ==
        report_to_csv(report));
  std::remove(model_path.c_str());
  std::remove(data_path.c_str());
}

TEST_CASE("config json round-trips") {
  ExperimentConfig config = tiny_lp_config();
  config.p_grid = {PExponent(1.5), PExponent::infinity()};
  config.output = "some_report";
  const ExperimentConfig back = config_from_json(config_to_json(config));
  CHECK(back.experiment == config.experiment);
  REQUIRE(back.p_grid.size() == 2);
  CHECK(back.p_grid[0].value() == 1.5);
  CHECK(back.p_grid[1].is_inf());
  CHECK(back.epsilon == config.epsilon);
  CHECK(back.n_samples == config.n_samples);
  CHECK(back.seed == config.seed);
  CHECK(back.output == config.output);
  const auto& blobs = std::get<BlobsSpec>(back.dataset);
  CHECK(blobs.d == 10);
  CHECK(blobs.seed == 5);
}

TEST_CASE("configs are validated") {
  ExperimentConfig config = tiny_lp_config();
  config.experiment = "nope";
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = tiny_lp_config();
  config.epsilon = 1.5;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = tiny_lp_config();
  config.gamma = 1.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
}
