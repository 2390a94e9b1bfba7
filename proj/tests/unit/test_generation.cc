// Copyright 2026 The xlvc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <limits>

#include "test_util.h"
#include "xlvc/eval/mcd.h"
#include "xlvc/features/feature_file.h"
#include "xlvc/generation/banded_cholesky.h"
#include "xlvc/generation/convert.h"
#include "xlvc/generation/parameter_generation.h"
#include "xlvc/modnet/training.h"
#include "xlvc/rng.h"
#include "xlvc/synthcorpus/corpus.h"

namespace xlvc {
namespace {

namespace fs = std::filesystem;

// Dense W of one dimension: rows [static; delta; delta-delta] blocks of T
// rows each, edge replication folded into the boundary columns.
Matrix DenseWindowMatrix(int T) {
  Matrix w = Matrix::Zero(3 * T, T);
  const std::array<double, 3>* windows[] = {&DeltaWindows::kStatic, &DeltaWindows::kDelta, &DeltaWindows::kDelta2};
  for (int k = 0; k < 3; ++k)
    for (int t = 0; t < T; ++t)
      for (int j = -1; j <= 1; ++j) w(k * T + t, std::clamp(t + j, 0, T - 1)) += (*windows[k])[j + 1];
  return w;
}

Matrix DenseMlpg(const Matrix& means, const Vector& var) {
  const int T = static_cast<int>(means.rows()), D = static_cast<int>(means.cols() / 3);
  const Matrix w = DenseWindowMatrix(T);
  Matrix out(T, D);
  for (int d = 0; d < D; ++d) {
    Vector mu(3 * T), prec(3 * T);
    for (int k = 0; k < 3; ++k)
      for (int t = 0; t < T; ++t) {
        mu(k * T + t) = means(t, k * D + d);
        prec(k * T + t) = 1.0 / var(k * D + d);
      }
    const Matrix a = w.transpose() * prec.asDiagonal() * w;
    const Vector b = w.transpose() * prec.asDiagonal() * mu;
    out.col(d) = a.ldlt().solve(b);
  }
  return out;
}

TEST_CASE("delta windows") {
  SUBCASE("constant sequence") {
    const Matrix s = Matrix::Constant(5, 2, 3.5);
    const Matrix o = ApplyDeltas(s);
    CHECK(o.leftCols(2) == s);
    CHECK(o.rightCols(4).isZero(0.0));
  }
  SUBCASE("ramp") {
    Matrix s(3, 1);
    s << 0, 1, 2;
    const Matrix o = ApplyDeltas(s);
    CHECK(o(1, 1) == 1.0);
    CHECK(o(1, 2) == 0.0);
    CHECK(o(0, 1) == 0.5);   // (1 - 0) / 2 with replicated left edge
    CHECK(o(0, 2) == 1.0);   // 0 - 0 + 1
  }
  SUBCASE("single frame") {
    Matrix s(1, 3);
    s << 1, -2, 7;
    const Matrix o = ApplyDeltas(s);
    CHECK(o.rightCols(6).isZero(0.0));
  }
  SUBCASE("matches the dense window matrix") {
    auto rng = MakeStream(1);
    const Matrix s = RandomNormal(rng, 9, 1);
    const Vector stacked = DenseWindowMatrix(9) * s.col(0);
    const Matrix o = ApplyDeltas(s);
    for (int k = 0; k < 3; ++k)
      for (int t = 0; t < 9; ++t) CHECK(o(t, k) == doctest::Approx(stacked(k * 9 + t)).epsilon(1e-15));
  }
}

TEST_CASE("banded cholesky against dense") {
  auto rng = MakeStream(2);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial * 2, p = trial % 4;
    BandedSpdMatrix a(n, p);
    const Matrix r = RandomNormal(rng, n, n);
    for (int i = 0; i < n; ++i) {
      a.Add(i, i, n + 1.0);
      for (int j = std::max(0, i - p); j < i; ++j) a.Add(i, j, r(i, j));
    }
    const Vector b = RandomNormal(rng, n, 1).col(0);
    const Vector x = BandedCholesky(a).Solve(b);
    const Vector ref = a.ToDense().ldlt().solve(b);
    CHECK((x - ref).cwiseAbs().maxCoeff() <= 1e-10);
  }
  BandedSpdMatrix bad(3, 1);
  bad.Add(0, 0, 1.0);
  bad.Add(1, 1, -1.0);
  bad.Add(2, 2, 1.0);
  CHECK_THROWS(BandedCholesky(bad));
  CHECK_THROWS(BandedSpdMatrix(3, 1).Add(0, 2, 1.0));
}

TEST_CASE("mlpg") {
  SUBCASE("constant mean with zero deltas is reproduced") {
    auto rng = MakeStream(3);
    for (int trial = 0; trial < 20; ++trial) {
      const int T = 1 + trial * 3, D = 1 + trial % 5;
      const Matrix statics = RandomNormal(rng, 1, D).replicate(T, 1);
      Matrix means = Matrix::Zero(T, 3 * D);
      means.leftCols(D) = statics;
      const Vector var = RandomUniform(rng, 3 * D, 1, 1e-3, 10.0).col(0);
      const Matrix c = Mlpg(means, GlobalVariances::Floored(var));
      CHECK((c - statics).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
  SUBCASE("matches a dense solve on random fixtures") {
    auto rng = MakeStream(4);
    std::uniform_int_distribution<int> len(1, 50), dim(1, 8);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const int T = len(rng), D = dim(rng);
      const Matrix means = RandomNormal(rng, T, 3 * D);
      const Vector var = RandomUniform(rng, 3 * D, 1, 0.01, 5.0).col(0);
      worst = std::max(worst, (Mlpg(means, GlobalVariances::Floored(var)) - DenseMlpg(means, var))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    CHECK(worst <= 1e-8);
  }
  SUBCASE("infinite delta variances return the static means") {
    auto rng = MakeStream(5);
    const Matrix means = RandomNormal(rng, 12, 9);
    Vector var = Vector::Constant(9, std::numeric_limits<double>::infinity());
    var.head(3) = RandomUniform(rng, 3, 1, 0.1, 2.0).col(0);
    CHECK((Mlpg(means, GlobalVariances::Floored(var)) - means.leftCols(3)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("deltas then mlpg recover the statics") {
    auto rng = MakeStream(6);
    const Matrix s = RandomNormal(rng, 40, 4);
    Vector var = Vector::Constant(12, 1e6);
    var.head(4).setConstant(1e-6);
    CHECK((Mlpg(ApplyDeltas(s), GlobalVariances::Floored(var)) - s).cwiseAbs().maxCoeff() <= 1e-6);
    // Consistent deltas are reproduced for any weighting.
    const Vector any = RandomUniform(rng, 12, 1, 0.1, 3.0).col(0);
    CHECK((Mlpg(ApplyDeltas(s), GlobalVariances::Floored(any)) - s).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("variances are floored") {
    const GlobalVariances g = GlobalVariances::Floored(Vector::Zero(3));
    CHECK(g.values.minCoeff() == kVarianceFloor);
  }
}

TEST_CASE("cepstral postfilter") {
  Matrix f(1, 4);
  f << 1, 1, 1, 1;
  CHECK(CepstralPostfilter(f, 1.0) == f);
  Matrix want(1, 4);
  want << 1, 1, 1.4, 1.4;
  CHECK((CepstralPostfilter(f, 1.4) - want).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK_THROWS(CepstralPostfilter(f, 0.9));

  // On an exact prediction any beta > 1 only adds distortion.
  auto rng = MakeStream(7);
  const Matrix truth = RandomNormal(rng, 30, 12);
  CHECK(Mcd(truth, truth) == 0.0);
  CHECK(Mcd(CepstralPostfilter(truth, 1.4), truth) > 0.0);
  CHECK(Mcd(CepstralPostfilter(truth, 1.8), truth) > Mcd(CepstralPostfilter(truth, 1.4), truth));
}

TEST_CASE("f0 statistics and conversion") {
  SUBCASE("worked example") {
    Vector x(1), v(1);
    x << 5.2;
    v << 1.0;
    const Vector y = ConvertF0(x, v, {5.0, 0.2, 1}, {5.5, 0.1, 1});
    CHECK(y(0) == doctest::Approx(5.6).epsilon(1e-15));
  }
  SUBCASE("mean maps to mean and equal stats are the identity") {
    Vector x(3), v(3);
    x << 5.0, 4.1, 6.3;
    v << 1, 0, 1;
    const F0Stats s{5.0, 0.3, 2};
    CHECK(ConvertF0(x, v, s, {6.0, 0.1, 2})(0) == 6.0);
    CHECK(ConvertF0(x, v, s, s) == x);
    CHECK(ConvertF0(x, v, s, {6.0, 0.1, 2})(1) == 4.1);  // unvoiced copied
  }
  SUBCASE("converted voiced frames take the target statistics") {
    auto rng = MakeStream(8);
    for (int trial = 0; trial < 50; ++trial) {
      const int T = 20 + trial;
      const Vector x = (RandomNormal(rng, T, 1, 0.3).array() + 5.0).matrix().col(0);
      Vector v(T);
      for (int t = 0; t < T; ++t) v(t) = (t * 7 + trial) % 3 ? 1.0 : 0.0;
      const F0Stats src = ComputeF0Stats(x, v);
      const F0Stats tgt{4.0 + trial * 0.01, 0.05 + trial * 0.002, 10};
      const F0Stats out = ComputeF0Stats(ConvertF0(x, v, src, tgt), v);
      CHECK(std::abs(out.mean_log_f0 - tgt.mean_log_f0) <= 1e-9);
      CHECK(std::abs(out.std_log_f0 - tgt.std_log_f0) <= 1e-9);
      CHECK(out.frames_counted == src.frames_counted);
    }
  }
  SUBCASE("affine composition") {
    auto rng = MakeStream(9);
    const Vector x = (RandomNormal(rng, 10, 1, 0.2).array() + 5.0).matrix().col(0);
    const Vector v = Vector::Ones(10);
    const F0Stats a{5.0, 0.2, 10}, b{5.3, 0.15, 10}, c{4.8, 0.3, 10};
    const Vector two_step = ConvertF0(ConvertF0(x, v, a, b), v, b, c);
    CHECK((two_step - ConvertF0(x, v, a, c)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("statistics use voiced frames only with a floored std") {
    Vector x(4), v(4);
    x << 5.0, 5.0, 9.0, 5.0;
    v << 1, 1, 0, 1;
    const F0Stats s = ComputeF0Stats(x, v);
    CHECK(s.mean_log_f0 == 5.0);
    CHECK(s.std_log_f0 == kF0StdFloor);
    CHECK(s.frames_counted == 3);
    CHECK_THROWS(ComputeF0Stats(x, Vector::Zero(4)));
  }
}

struct ConversionFixture {
  fs::path corpus;
  TrainingData data;
  TrainedModel model;
  double valid_mcc_rmse = 0.0;

  ConversionFixture()
      : corpus(testing::ScratchDir("conversion_corpus")),
        data([this] {
          GenerativeConfig cfg = testing::TinyCorpus();
          cfg.utterances_per_speaker = 8;
          cfg.validation_per_speaker = 2;
          GenerateCorpus(cfg, corpus, 1);
          return LoadTrainingData(CorpusLayout{corpus}.manifest(PpgKind::kMixedLingual),
                                  EmbeddingSettings{EmbeddingMode::kSynthetic, 4, 1});
        }()),
        model(Arch()) {
    TrainHyper h;
    h.batch_sequences = 4;
    h.max_epochs = 60;
    h.patience = 60;
    Trainer t(Arch(), data, h, 1);
    t.Train();
    const fs::path ckpt = corpus / "model.ckpt";
    WriteCheckpoint(ckpt, t.ToCheckpoint());
    model = LoadTrainedModel(ckpt);

    // RMSE of the de-standardized MCC statics over the validation split.
    const AcousticLayout l{model.mcc_dim};
    double sq = 0.0, n = 0.0;
    for (const auto& e : data.valid) {
      const Matrix p = data.output_stats.Invert(t.best_model().Forward(e.input, e.language));
      const Matrix y = data.output_stats.Invert(e.target);
      sq += (p.middleCols(l.mcc(), l.mcc_dim) - y.middleCols(l.mcc(), l.mcc_dim)).squaredNorm();
      n += static_cast<double>(e.target.rows() * l.mcc_dim);
    }
    valid_mcc_rmse = std::sqrt(sq / n);
  }

  ArchitectureConfig Arch() const {
    ArchitectureConfig a;
    a.variant = Variant::kLS;
    a.input_dim = data.input_dim();
    a.output_dim = data.output_dim();
    a.projection_width = 16;
    a.blstm_width = 8;
    a.head_width = 8;
    return a;
  }
};

TEST_CASE("conversion pipeline") {
  static const ConversionFixture fx;
  const Manifest training = ReadManifest(CorpusLayout{fx.corpus}.manifest(PpgKind::kMixedLingual));
  const Manifest test = ReadManifest(CorpusLayout{fx.corpus}.test_manifest(PpgKind::kMixedLingual));
  const ConversionContext ctx(fx.model);
  const AcousticLayout l{fx.model.mcc_dim};
  const UtteranceRecord& src = *test.Find("test-A-t000-A-s0");
  const Matrix src_acoustic = ReadFeatureMatrix(test.Resolve(src.acoustic_path), KindCode::kAcoustic);
  const fs::path out_dir = testing::ScratchDir("conversion_out");

  SUBCASE("aperiodicity is copied and vuv is thresholded") {
    const ConvertedUtterance c = ConvertUtterance(ctx, test, src, "B-s1", out_dir / "x.xvcf");
    CHECK(c.acoustic.middleCols(l.ap(), 3) == src_acoustic.middleCols(l.ap(), 3));
    for (int t = 0; t < c.acoustic.rows(); ++t) {
      const double v = c.acoustic(t, l.vuv());
      CHECK((v == 0.0 || v == 1.0));
      CHECK(v == (c.predicted(t, l.vuv()) >= 0.5 ? 1.0 : 0.0));
    }
    const Matrix back = ReadFeatureMatrix(out_dir / "x.xvcf", KindCode::kAcoustic);
    CHECK(back == Matrix(c.acoustic.cast<float>().cast<double>()));
  }

  SUBCASE("converted voiced frames carry the target speaker's F0 statistics") {
    const ConvertedUtterance c = ConvertUtterance(ctx, test, src, "B-s1", {});
    const F0Stats tgt = ctx.TargetF0("B-s1");
    std::vector<double> both;
    for (int t = 0; t < c.acoustic.rows(); ++t)
      if (c.acoustic(t, l.vuv()) == 1.0 && src_acoustic(t, l.vuv()) == 1.0) both.push_back(c.acoustic(t, l.lf0()));
    REQUIRE(!both.empty());
    // Each such frame is the affine image of the source frame.
    for (int t = 0; t < c.acoustic.rows(); ++t)
      if (c.acoustic(t, l.vuv()) == 1.0 && src_acoustic(t, l.vuv()) == 1.0) {
        const double x = src_acoustic(t, l.lf0());
        const double want = (x - c.source_f0.mean_log_f0) * (tgt.std_log_f0 / c.source_f0.std_log_f0) +
                            tgt.mean_log_f0;
        CHECK(c.acoustic(t, l.lf0()) == doctest::Approx(want).epsilon(1e-12));
      }
  }

  SUBCASE("conversion is deterministic") {
    ConvertUtterance(ctx, test, src, "B-s0", out_dir / "a.xvcf");
    ConvertUtterance(ctx, test, src, "B-s0", out_dir / "b.xvcf");
    CHECK(testing::ReadBytes(out_dir / "a.xvcf") == testing::ReadBytes(out_dir / "b.xvcf"));
  }

  SUBCASE("self-conversion stays within three validation RMSEs") {
    // Validation utterance of A-s0 converted to its own speaker.
    const UtteranceRecord* r = training.Select(Split::kValidation, LanguageId::kA).front();
    const Matrix truth = ReadFeatureMatrix(training.Resolve(r->acoustic_path), KindCode::kAcoustic);
    const Matrix ppg = ReadFeatureMatrix(training.Resolve(r->ppg_path), KindCode::kMixedPpg);
    const F0Stats own = ComputeF0Stats(truth.col(l.lf0()), truth.col(l.vuv()));
    ConvertOptions opt;
    const ConvertedUtterance c =
        ConvertFeatures(fx.model, ppg, truth, ctx.Embedding(r->speaker_id), own, r->language, opt);
    const Matrix err = c.acoustic.middleCols(l.mcc(), l.mcc_dim) - truth.middleCols(l.mcc(), l.mcc_dim);
    double worst = 0.0;
    for (int t = 0; t < err.rows(); ++t) worst = std::max(worst, err.row(t).norm() / std::sqrt(l.mcc_dim));
    MESSAGE("validation MCC RMSE " << fx.valid_mcc_rmse << ", worst per-frame self-conversion RMSE " << worst);
    double mean = 0.0;
    for (int t = 0; t < err.rows(); ++t) mean += err.row(t).norm() / std::sqrt(l.mcc_dim);
    mean /= static_cast<double>(err.rows());
    CHECK(mean < 3.0 * fx.valid_mcc_rmse);
  }

  SUBCASE("errors carry the failing stage") {
    try {
      ConvertUtterance(ctx, test, src, "Z-s9", {});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("target speaker") != std::string::npos);
    }
    Manifest wrong = test;
    wrong.regime = PpgKind::kBilingualStacked;
    CHECK_THROWS_WITH_AS(ConvertUtterance(ctx, wrong, src, "B-s0", {}), doctest::Contains("regime mismatch"),
                         Error);
    SpeakerEmbedding short_emb{"B-s0", Vector::Ones(3)};
    const Matrix ppg = ReadFeatureMatrix(test.Resolve(src.ppg_path), KindCode::kMixedPpg);
    CHECK_THROWS(ConvertFeatures(fx.model, ppg, src_acoustic, short_emb, ctx.TargetF0("B-s0"), LanguageId::kB));
  }

  SUBCASE("conversion log record") {
    ConversionLogRecord log;
    ConvertUtterance(ctx, test, src, "B-s1", out_dir / "y.xvcf", {}, &log);
    const std::string line = FormatConversionLog(log);
    CHECK(line.find("source=test-A-t000-A-s0 target=B-s1 lang=B regime=mppg checkpoint=" +
                    fx.model.checkpoint_hash) == 0);
  }
}

}  // namespace
}  // namespace xlvc
