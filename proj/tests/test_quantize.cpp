#include <doctest.h>

#include <cmath>

#include "noisebound/quantize.hpp"
#include "noisebound/rng.hpp"

using namespace noisebound;

namespace {

Vector random_image(int d, std::uint64_t seed) {
  RngStream rng(seed, 0);
  Vector x(d);
  for (int i = 0; i < d; ++i) x[i] = rng.uniform(0.0, 255.0);
  return x;
}

}  // namespace

TEST_CASE("eight bits on integers is the identity, one bit is binary") {
  Vector x(5);
  x << 0.0, 17.0, 100.4, 254.6, 255.0;
  const QuantizedImage q8 = quantize_image(x, 8, false, 0);
  for (int i = 0; i < 5; ++i) CHECK(q8.values[i] == std::round(x[i]));
  const QuantizedImage q1 = quantize_image(x, 1, false, 0);
  for (int i = 0; i < 5; ++i) {
    CHECK((q1.values[i] == 0.0 || q1.values[i] == 255.0));
  }
}

TEST_CASE("two bits snaps onto the four-level grid") {
  Vector x(1);
  x << 100.0;
  const QuantizedImage q = quantize_image(x, 2, false, 0);
  CHECK(q.values[0] == doctest::Approx(85.0).epsilon(1e-12));
}

TEST_CASE("quantization is idempotent, exactly") {
  for (int bits : {1, 2, 3, 5, 8}) {
    const Vector x = random_image(64, bits);
    const QuantizedImage once = quantize_image(x, bits, false, 0);
    const QuantizedImage twice = quantize_image(once.values, bits, false, 0);
    CHECK((twice.values - once.values).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("undithered error never exceeds half a step") {
  for (int bits : {1, 2, 4, 7}) {
    const double delta = 255.0 / ((1 << bits) - 1);
    for (int trial = 0; trial < 50; ++trial) {
      const Vector x = random_image(32, 100 + trial);
      const QuantizedImage q = quantize_image(x, bits, false, 0);
      CHECK((q.values - x).cwiseAbs().maxCoeff() <= delta / 2.0 + 1e-12);
    }
  }
}

TEST_CASE("dithered output still lands on exact levels") {
  const Vector x = random_image(64, 7);
  const QuantizedImage q = quantize_image(x, 3, true, 42);
  const double delta = 255.0 / 7.0;
  for (int i = 0; i < 64; ++i) {
    const double k = q.values[i] / delta;
    CHECK(k == doctest::Approx(std::round(k)).epsilon(1e-12));
    CHECK(q.values[i] >= 0.0);
    CHECK(q.values[i] <= 255.0);
  }
  // seeded dither is reproducible
  const QuantizedImage q2 = quantize_image(x, 3, true, 42);
  CHECK((q.values - q2.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("out-of-range inputs are clamped and flagged") {
  Vector x(2);
  x << -5.0, 300.0;
  const QuantizedImage q = quantize_image(x, 8, false, 0);
  CHECK(q.input_clamped);
  CHECK(q.values[0] == 0.0);
  CHECK(q.values[1] == 255.0);
  CHECK_FALSE(quantize_image(random_image(4, 1), 8, false, 0).input_clamped);
  CHECK_THROWS_AS(quantize_image(x, 0, false, 0), std::invalid_argument);
  CHECK_THROWS_AS(quantize_image(x, 9, false, 0), std::invalid_argument);
}

TEST_CASE("a huge margin survives binary quantization") {
  // boundary 200 units away in l_inf; even 1-bit noise (<= 127.5) cannot
  // cross it
  Vector w = Vector::Zero(4);
  w[0] = 1.0;
  const LinearModel model(w, -10.0);
  Vector x(4);
  x << 210.0, 80.0, 10.0, 255.0;
  const QuantizationReport report =
      min_bits_preserving_label(model, x, false, 0);
  CHECK(report.measured_bits == 1);
  CHECK(report.predicted_depth == 1);
  CHECK(report.agreed_within_one_bit);
}

TEST_CASE("grid-aligned points keep their label at their own depth") {
  const double delta = 255.0 / 15.0;  // 4 bits
  Vector x(3);
  x << 0.0, 3 * delta, 15 * delta;
  Vector w(3);
  w << 1.0, 1.0, 1.0;
  const LinearModel model(w, -100.0);
  const QuantizationReport report =
      min_bits_preserving_label(model, x, false, 5);
  CHECK(report.measured_bits <= 4);
}

TEST_CASE("a label that no depth preserves yields the sentinel") {
  // pathological oracle: any change of x flips the label
  struct ExactMatch final : Classifier {
    Vector x0;
    int dim() const override { return static_cast<int>(x0.size()); }
    int num_classes() const override { return 2; }
    Vector scores(const Vector& x) const override {
      Vector s(1);
      s[0] = (x - x0).cwiseAbs().maxCoeff() == 0.0 ? -1.0 : 1.0;
      return s;
    }
  } oracle;
  oracle.x0 = Vector::Constant(3, 100.4);
  const QuantizationReport report =
      min_bits_preserving_label(oracle, oracle.x0, false, 0, 0.72, 1.0);
  CHECK(report.measured_bits == 9);
}
