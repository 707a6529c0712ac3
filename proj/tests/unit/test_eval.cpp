#include "losp/config.hpp"
#include "losp/experiment.hpp"
#include "losp/io.hpp"
#include "losp/metrics.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace losp;
using namespace losp::test;

namespace {

std::filesystem::path temp(char const *name) { return std::filesystem::temp_directory_path() / name; }

} // namespace

TEST_CASE("image psnr")
{
  RealImage const ref = RealImage::Random(16, 16).abs();
  CHECK(image_psnr(ref, ref) == kPsnrCap);
  RealImage const e = RealImage::Random(16, 16) * 0.01;
  double const p1 = image_psnr(ref + e, ref);
  double const p4 = image_psnr(ref + 2 * e, ref);
  CHECK(p1 - p4 == doctest::Approx(10 * std::log10(4.0)).epsilon(1e-10));
  CHECK(p1 == doctest::Approx(10 * std::log10(256.0 / e.abs2().sum())).epsilon(1e-12));
  CHECK_THROWS_AS(image_psnr(ref, RealImage::Zero(8, 16)), ConfigError);
  CHECK(normalized_psnr(3 * (ref + e), 3 * ref) == doctest::Approx(image_psnr((ref + e) / ref.maxCoeff(), ref / ref.maxCoeff())));
}

TEST_CASE("adc fit")
{
  std::vector<double> const b2{0, 1000};
  std::vector<RealImage> s2{RealImage::Ones(2, 2), RealImage::Constant(2, 2, std::exp(-1.2))};
  CHECK((adc_fit(s2, b2) - 1.2e-3).abs().maxCoeff() < 1e-15);

  std::vector<RealImage> flat{RealImage::Constant(2, 2, 0.7), RealImage::Constant(2, 2, 0.7)};
  CHECK(adc_fit(flat, b2).abs().maxCoeff() == 0.0);

  std::vector<double> const b3{0, 500, 1000};
  std::vector<RealImage> s3;
  for (double b : b3) {
    s3.push_back(RealImage::Constant(3, 3, 0.8 * std::exp(-b * 1.26e-3)));
  }
  s3[1](0, 0) = 0.0;  // one bad sample still leaves two points
  s3[0](1, 1) = -1.0;
  s3[2](1, 1) = 0.0;  // only one valid point left
  RealImage const adc = adc_fit(s3, b3);
  CHECK(std::abs(adc(2, 2) - 1.26e-3) < 1e-9);
  CHECK(std::abs(adc(0, 0) - 1.26e-3) < 1e-9);
  CHECK(adc(1, 1) == kAdcSentinel);
  MaskImage mask = MaskImage::Constant(3, 3, true);
  mask(2, 2) = false;
  CHECK(adc_fit(s3, b3, &mask)(2, 2) == kAdcSentinel);
  CHECK_THROWS_AS(adc_fit(std::span(s3).first(1), std::span(b3).first(1)), ConfigError);
}

TEST_CASE("singular value curve csv")
{
  HankelSpec const spec{5, 30, 1};
  CxVector const c = CxVector::Constant(30, Cx(1, 1));
  auto const rows = sv_curve(std::span(&c, 1), spec);
  CHECK(rows[0].normalized == 1.0);
  CHECK(rows[1].sigma < 1e-10);
  auto const path = temp("losp_test_sv.csv");
  CxVector const r = random_vector(30, 2);
  export_sv_curve(std::span(&r, 1), spec, path);
  auto const back = read_sv_curve(path);
  auto const mem = sv_curve(std::span(&r, 1), spec);
  REQUIRE(back.size() == mem.size());
  for (std::size_t i = 0; i < mem.size(); ++i) {
    CHECK(back[i].index == mem[i].index);
    CHECK(back[i].sigma == mem[i].sigma);
    CHECK(back[i].normalized == mem[i].normalized);
  }
  std::filesystem::remove(path);
}

TEST_CASE("16-bit image export")
{
  auto const path = temp("losp_test_img.pgm");
  RealImage const c = RealImage::Constant(5, 7, 2.5);
  export_image(c, path, Window{1.5, 3.5});
  Gray16 const q = read_pgm16(path);
  CHECK(q.rows() == 5);
  CHECK(q.cols() == 7);
  CHECK((q == 32768).all());

  RealImage ramp(3, 4);
  ramp << 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11;
  export_image(ramp, path);
  Gray16 const r = read_pgm16(path);
  CHECK((r == quantize(ramp, {0, 11})).all());
  CHECK(r(0, 0) == 0);
  CHECK(r(2, 3) == 65535);
  CHECK_THROWS_AS(export_image(RealImage(0, 0), path), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("label image round trip")
{
  auto const path = temp("losp_test_labels.pgm");
  Phantom const ph = generate_phantom(24, 20, 5, 1);
  export_label_image(ph.labels(), path);
  CHECK((read_label_image(path) == ph.labels()).all());
  std::filesystem::remove(path);
}

TEST_CASE("array file round trip")
{
  auto const path = temp("losp_test_arr.bin");
  ShotArray shots = random_shots(3, 5, 4, 2);
  for (auto &s : shots) {
    s = s.cast<std::complex<float>>().cast<Cx>();
  }
  write_array(to_array(shots), path);
  ArrayFile const a = read_array(path);
  CHECK(a.dims == std::vector<std::uint64_t>{3, 5, 4});
  ShotArray const back = shots_from_array(a);
  for (int j = 0; j < 3; ++j) {
    CHECK((back[j] == shots[j]).all());
  }
  CHECK(a.data[1] == shots[0](0, 1));  // row-major

  MultiShotKSpace Y;
  Y.sampling = make_shot_masks(2, 4, SamplingPattern::Interleaved);
  Y.data = {random_shots(3, 5, 4, 7), random_shots(3, 5, 4, 8)};
  for (auto &shot : Y.data) {
    for (auto &k : shot) {
      k = k.cast<std::complex<float>>().cast<Cx>();
    }
  }
  write_array(to_array(Y), path);
  MultiShotKSpace const Yb = kspace_from_array(read_array(path), Y.sampling);
  CHECK((Yb.data[1][2] == Y.data[1][2]).all());
  CHECK_THROWS_AS(image_from_array(read_array(path)), ConfigError);

  std::filesystem::resize_file(path, 20);
  CHECK_THROWS_AS(read_array(path), ConfigError);
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOTANARRAY";
  }
  CHECK_THROWS_AS(read_array(path), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("run config round trip and strict keys")
{
  RunConfig c;
  c.seed = 1234567890123ULL;
  c.solver.policy = "oracle";
  c.solver.lambda = 0.1 + 0.2;
  c.eval.sweep_ranks = {1, 3, 5};
  c.eval.b_values = {0, 400, 800};
  c.eval.b_averages = {1, 2, 3};
  c.phase.coeff_scale = std::numbers::pi / 3;
  nlohmann::json j;
  to_json(j, c);
  CHECK(run_config_from_json(j) == c);
  CHECK(run_config_from_json(nlohmann::json::parse(j.dump())) == c);

  auto const path = temp("losp_test_config.json");
  save_run_config(c, path);
  CHECK(load_run_config(path) == c);
  std::filesystem::remove(path);

  CHECK(run_config_from_json(nlohmann::json::object()) == RunConfig{});
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json{{"sead", 1}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json{{"solver", {{"lamda", 1}}}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json{{"solver", {{"lambda", "one"}}}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json{{"solver", {{"policy", "magic"}}}}), ConfigError);
  CHECK_THROWS_AS(load_run_config(temp("losp_does_not_exist.json")), ConfigError);
}

TEST_CASE("experiment instance")
{
  ExperimentSetup s;
  s.size_ro = 32;
  s.size_pe = 32;
  Instance const a = make_instance(s, 11);
  Instance const b = make_instance(s, 11);
  CHECK((a.data.data[1][2] == b.data.data[1][2]).all());
  CHECK(a.phase.find(kLiverRegion)->order == 5);
  CHECK(a.phase.regions.back().order == 1);
  double const zf = zero_filled_psnr(a);
  CHECK(std::isfinite(zf));
  CHECK(zf < recon_psnr(a, a.ground_truth));
  CHECK(recon_psnr(a, a.ground_truth) == kPsnrCap);
}

TEST_CASE("adc experiment averages")
{
  ExperimentSetup s;
  s.size_ro = 32;
  s.size_pe = 32;
  SolverConfig c;
  c.iterations = 2;
  c.rho = c.tau = 0.005;
  c.log_objective = false;
  c.policy = FixedRank{6};

  AdcSetup a;
  a.averages = {1, 2, 3};
  CHECK_THROWS_AS(run_adc_experiment(s, a, c, 5), ConfigError);
  a.averages = {1, 0};
  CHECK_THROWS_AS(run_adc_experiment(s, a, c, 5), ConfigError);

  a.averages = {1, 2};
  AdcResult const r = run_adc_experiment(s, a, c, 5);
  REQUIRE(r.combined.size() == 2);
  CHECK(r.combined[0].rows() == 32);
  CHECK(r.combined[1].mean() < r.combined[0].mean());
  CHECK(std::isfinite(r.liver_mean));
  CHECK(r.liver_mean > 0);
}
