/*   Copyright 2026 The rmltsk Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
 */

// Dataset I/O, normalization, fold splitting, synthetic data, and metrics.

#include "oracles.hpp"
#include "rmltsk/dataset.hpp"
#include "rmltsk/metrics.hpp"
#include "rmltsk/synthgen.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

using namespace rmltsk;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rmltsk_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
            std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string write(const std::string& name, const std::string& body) {
    const auto p = (dir_ / name).string();
    std::ofstream(p) << body;
    return p;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

template <class F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// dataset
// ---------------------------------------------------------------------------

using DatasetFiles = TempDir;

TEST_F(DatasetFiles, LoadsSampleMajorFiles) {
  const auto d = load_dataset(write("x.csv", "1.0,2.0\n3.0,4.0\n"), write("y.csv", "1,0\n0,1\n"));
  EXPECT_EQ(d.n_features(), 2);
  EXPECT_EQ(d.n_labels(), 2);
  EXPECT_EQ(d.n_samples(), 2);
  EXPECT_EQ(d.features(0, 1), 3.0);  // second sample, first feature
  EXPECT_EQ(d.features(1, 0), 2.0);
  EXPECT_EQ(d.labels(1, 1), 1.0);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"x1", "x2"}));
}

TEST_F(DatasetFiles, ReadsHeaderNames) {
  const auto d = load_dataset(write("x.csv", "# a, b\n1,2\n"), write("y.csv", "#red,blue,green\n1,0,1\n"));
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.label_names, (std::vector<std::string>{"red", "blue", "green"}));
}

TEST_F(DatasetFiles, RejectsNonBinaryLabel) {
  const auto m = error_of([&] { load_dataset(write("x.csv", "1\n2\n"), write("y.csv", "1\n2\n")); });
  EXPECT_NE(m.find("non-binary label"), std::string::npos) << m;
}

TEST_F(DatasetFiles, RejectsSampleCountMismatch) {
  const auto m = error_of([&] { load_dataset(write("x.csv", "1\n2\n3\n"), write("y.csv", "1\n0\n")); });
  EXPECT_NE(m.find("sample count mismatch"), std::string::npos) << m;
}

TEST_F(DatasetFiles, RejectsNonNumericFeature) {
  const auto m = error_of([&] { load_dataset(write("x.csv", "1,abc\n"), write("y.csv", "1\n")); });
  EXPECT_NE(m.find("non-numeric feature cell"), std::string::npos) << m;
}

TEST_F(DatasetFiles, RejectsEmptyAndRaggedFiles) {
  EXPECT_THROW(load_dataset(write("x.csv", ""), write("y.csv", "1\n")), DataError);
  EXPECT_THROW(load_dataset(write("x2.csv", "1,2\n3\n"), write("y2.csv", "1\n0\n")), DataError);
  EXPECT_THROW(load_dataset(path("missing.csv"), write("y3.csv", "1\n")), DataError);
}

TEST_F(DatasetFiles, RoundTripIsBitExact) {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 20; ++t) {
    Dataset d;
    d.features = oracle::random_matrix(rng, 4, 30, -1e6, 1e6);
    d.features(0, 0) = 0.1 + 0.2;
    d.features(1, 0) = -1.0 / 3.0;
    d.features(2, 0) = 1e-300;
    d.labels = oracle::random_binary(rng, 3, 30);
    d.feature_names = default_names("f", 4);
    d.label_names = default_names("l", 3);
    save_dataset(d, path("x.csv"), path("y.csv"));
    const auto back = load_dataset(path("x.csv"), path("y.csv"));
    ASSERT_EQ(back.features, d.features);
    ASSERT_EQ(back.labels, d.labels);
    ASSERT_EQ(back.feature_names, d.feature_names);
  }
}

TEST(Normalize, MinMaxExamples) {
  Dataset d;
  d.features.resize(2, 3);
  d.features << 0, 5, 10, 3, 3, 3;
  d.labels = Matrix::Ones(1, 3);
  const auto [n, stats] = normalize_features(d);
  EXPECT_EQ(n.features, (Matrix(2, 3) << 0, 0.5, 1, 0, 0, 0).finished());

  NormStats s{Vector::Constant(1, 0.0), Vector::Constant(1, 10.0)};
  EXPECT_EQ(apply_norm(col({12.0}), s)(0, 0), 1.0);
  EXPECT_EQ(apply_norm(col({-3.0}), s)(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(apply_norm(col({2.5}), s)(0, 0), 0.25);
}

TEST(Normalize, TrainEntriesStayInUnitInterval) {
  std::mt19937_64 rng(3);
  const Matrix X = oracle::random_matrix(rng, 6, 50, -100, 100);
  const Matrix N = apply_norm(X, fit_norm(X));
  EXPECT_GE(N.minCoeff(), 0.0);
  EXPECT_LE(N.maxCoeff(), 1.0);
}

TEST(KFold, ExamplesAndDeterminism) {
  auto sizes = [](const FoldPlan& p) {
    std::vector<std::size_t> s;
    for (int f = 0; f < p.k; ++f) s.push_back(p.test_indices(f).size());
    std::sort(s.begin(), s.end());
    return s;
  };
  EXPECT_EQ(sizes(kfold_split(10, 5, 99)), std::vector<std::size_t>(5, 2));
  EXPECT_EQ(sizes(kfold_split(11, 5, 1)), (std::vector<std::size_t>{2, 2, 2, 2, 3}));
  EXPECT_EQ(kfold_split(50, 5, 7).assignments, kfold_split(50, 5, 7).assignments);
  EXPECT_NE(kfold_split(50, 5, 7).assignments, kfold_split(50, 5, 8).assignments);
  EXPECT_THROW(kfold_split(10, 1, 0), DataError);
  EXPECT_THROW(kfold_split(3, 4, 0), DataError);
}

TEST(KFold, PartitionPropertyExhaustiveSweep) {
  for (Index n = 2; n <= 200; ++n)
    for (int k = 2; k <= n; ++k) {
      const auto p = kfold_split(n, k, static_cast<std::uint64_t>(n * 1000 + k));
      ASSERT_EQ(static_cast<Index>(p.assignments.size()), n);
      std::vector<int> count(static_cast<std::size_t>(k), 0);
      for (int a : p.assignments) {
        ASSERT_GE(a, 0);
        ASSERT_LT(a, k);
        ++count[static_cast<std::size_t>(a)];
      }
      const auto [lo, hi] = std::minmax_element(count.begin(), count.end());
      ASSERT_GE(*lo, 1) << "n=" << n << " k=" << k;
      ASSERT_LE(*hi - *lo, 1) << "n=" << n << " k=" << k;
      // Train and test of a fold partition the samples.
      const auto te = p.test_indices(0), tr = p.train_indices(0);
      ASSERT_EQ(static_cast<Index>(te.size() + tr.size()), n);
    }
}

// ---------------------------------------------------------------------------
// synthgen
// ---------------------------------------------------------------------------

TEST(Synth, LabelLogicPerKind) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (auto kind : {SynthKind::Independence, SynthKind::Equality, SynthKind::Union}) {
      SynthSpec s;
      s.kind = kind;
      s.seed = seed;
      s.n_samples = 300;
      const auto d = gen_synthetic(s);
      ASSERT_EQ(d.n_labels(), 5);
      ASSERT_EQ(d.n_features(), 20);
      ASSERT_GE(d.features.minCoeff(), 0.0);
      ASSERT_LE(d.features.maxCoeff(), 1.0);
      for (Index i = 0; i < d.n_samples(); ++i) {
        const auto& y = d.labels;
        ASSERT_EQ(y(4, i) == 1.0, y(0, i) + y(1, i) + y(2, i) + y(3, i) == 0.0);
        if (kind == SynthKind::Equality) {
          ASSERT_EQ(y(0, i), y(1, i));
          ASSERT_EQ(y(2, i), y(3, i));
        }
        if (kind == SynthKind::Union) ASSERT_EQ(y(0, i), std::max({y(1, i), y(2, i), y(3, i)}));
      }
    }
  }
}

TEST(Synth, IndependenceLabelsLookIndependent) {
  SynthSpec s;
  s.n_samples = 4000;
  const auto d = gen_synthetic(s);
  // Y1 and Y2 co-occur at roughly p^2.
  double both = 0, y1 = 0, y2 = 0;
  for (Index i = 0; i < d.n_samples(); ++i) {
    y1 += d.labels(0, i);
    y2 += d.labels(1, i);
    both += d.labels(0, i) * d.labels(1, i);
  }
  const double n = double(d.n_samples());
  EXPECT_NEAR(y1 / n, 0.4, 0.03);
  EXPECT_NEAR(both / n, (y1 / n) * (y2 / n), 0.03);
}

TEST(Synth, Deterministic) {
  SynthSpec s;
  s.kind = SynthKind::Union;
  s.seed = 12;
  const auto a = gen_synthetic(s), b = gen_synthetic(s);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  s.seed = 13;
  EXPECT_NE(gen_synthetic(s).features, a.features);
}

TEST(Synth, KindNames) {
  for (auto kind : {SynthKind::Independence, SynthKind::Equality, SynthKind::Union})
    EXPECT_EQ(parse_synth_kind(to_string(kind)), kind);
  EXPECT_FALSE(parse_synth_kind("xor").has_value());
}

TEST(Noise, ZeroAndFullRatio) {
  SynthSpec s;
  s.n_samples = 50;
  const auto d = gen_synthetic(s);
  EXPECT_EQ(inject_label_noise(d, {0.0, 1}).labels, d.labels);
  const auto full = inject_label_noise(d, {1.0, 1});
  EXPECT_EQ(full.labels, (1.0 - d.labels.array()).matrix());
  EXPECT_EQ(full.features, d.features);
}

TEST(Noise, HalfRatioFlipsWholeColumns) {
  SynthSpec s;
  s.n_samples = 10;
  const auto d = gen_synthetic(s);
  const auto n = inject_label_noise(d, {0.5, 3});
  int differing = 0;
  for (Index i = 0; i < d.n_samples(); ++i) {
    const Index diff = (n.labels.col(i).array() != d.labels.col(i).array()).count();
    if (diff) {
      ++differing;
      EXPECT_EQ(diff, d.n_labels());
    }
  }
  EXPECT_EQ(differing, 5);
}

TEST(Noise, InvolutionOnSelection) {
  SynthSpec s;
  s.n_samples = 200;
  const auto d = gen_synthetic(s);
  const NoiseSpec ns{0.3, 77};
  const auto once = inject_label_noise(d, ns);
  EXPECT_NE(once.labels, d.labels);
  EXPECT_EQ(inject_label_noise(once, ns).labels, d.labels);
  EXPECT_EQ(noise_selection(200, ns).size(), 60u);
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

TEST(Ranks, ExamplesAndTieBreak) {
  EXPECT_EQ(rank_labels(col({0.9, 0.5, 0.1})), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(rank_labels(col({0.5, 0.5})), (std::vector<int>{1, 2}));
  EXPECT_EQ(rank_labels(col({0.1, 0.9, 0.9})), (std::vector<int>{3, 1, 2}));
}

TEST(Metrics, HandExamples) {
  const Matrix f = col({0.9, 0.5, 0.1});
  EXPECT_DOUBLE_EQ(average_precision(f, col({1, 0, 0})), 1.0);
  EXPECT_DOUBLE_EQ(average_precision(f, col({0, 0, 1})), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(average_precision(f, col({1, 0, 1})), 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(ranking_loss(f, col({1, 0, 0})), 0.0);
  EXPECT_DOUBLE_EQ(ranking_loss(f, col({0, 0, 1})), 1.0);
  EXPECT_DOUBLE_EQ(ranking_loss(f, col({0, 1, 0})), 0.5);
  EXPECT_DOUBLE_EQ(coverage(f, col({1, 0, 0})).raw, 0.0);
  EXPECT_DOUBLE_EQ(coverage(f, col({1, 0, 1})).raw, 2.0);
  EXPECT_DOUBLE_EQ(coverage(f, col({1, 0, 1})).norm, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(coverage(f, col({1, 1, 1})).raw, 2.0);
  EXPECT_DOUBLE_EQ(hamming_loss(col({1, 1, 1}), col({1, 0, 1})), 1.0 / 3.0);
  const Matrix y = col({1, 0, 1});
  EXPECT_EQ(hamming_loss(y, y), 0.0);
  EXPECT_EQ(hamming_loss((1.0 - y.array()).matrix(), y), 1.0);
}

TEST(Metrics, SkipsAndErrors) {
  Matrix f(2, 3);
  f << 0.2, 0.8, 0.5, 0.7, 0.1, 0.5;
  Matrix y(2, 3);
  y << 0, 1, 1, 0, 1, 0;  // sample 0 empty, sample 1 full, sample 2 tied
  Index skipped = -1;
  EXPECT_DOUBLE_EQ(average_precision(f, y, &skipped), 1.0);
  EXPECT_EQ(skipped, 1);
  // A tie between a relevant and an irrelevant label counts as misordered.
  EXPECT_DOUBLE_EQ(ranking_loss(f, y, &skipped), 1.0);
  EXPECT_EQ(skipped, 2);
  const auto m = error_of([] { average_precision(col({0.3, 0.4}), col({0, 0})); });
  EXPECT_NE(m.find("no evaluable samples"), std::string::npos);
  EXPECT_THROW(hamming_loss(col({0.5}), col({1})), DataError);
  EXPECT_THROW(average_precision(col({0.5, 0.1}), col({1})), DataError);
}

TEST(Metrics, MatchBruteForceOnRandomInstances) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 500; ++t) {
    const Index L = oracle::random_int(rng, 2, 6), N = oracle::random_int(rng, 1, 8);
    Matrix s = oracle::random_matrix(rng, L, N, 0, 1);
    if (t % 2) s = (s * 3).array().round() / 3;
    Matrix y = oracle::random_binary(rng, L, N, 0.5);
    y(0, 0) = 1;
    if (L > 1) y(1, 0) = 0;
    const Matrix pred = (s.array() >= 0.5).cast<double>().matrix();
    const auto o = oracle::brute_metrics(s, pred, y);
    const auto r = evaluate(s, pred, y);
    ASSERT_NEAR(r.ap, o.ap, 1e-12);
    ASSERT_NEAR(r.hl, o.hl, 1e-12);
    ASSERT_NEAR(r.rl, o.rl, 1e-12);
    ASSERT_NEAR(r.cv_raw, o.cv, 1e-12);
    ASSERT_LE(r.ap, 1.0);
    ASSERT_GE(r.ap, 0.0);
    ASSERT_LE(r.cv_norm, 1.0);
  }
}

TEST(Metrics, RanksArePermutations) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 200; ++t) {
    const Index L = oracle::random_int(rng, 1, 7);
    Vector v = oracle::random_matrix(rng, L, 1);
    if (t % 2) v = (v * 2).array().round();
    auto r = rank_labels(v);
    std::sort(r.begin(), r.end());
    for (Index l = 0; l < L; ++l) ASSERT_EQ(r[std::size_t(l)], l + 1);
  }
}

TEST(Metrics, LabelPermutationInvariance) {
  std::mt19937_64 rng(12);
  const Matrix s = oracle::random_matrix(rng, 5, 8, 0, 1);  // tie-free almost surely
  Matrix y = oracle::random_binary(rng, 5, 8);
  y.row(0).setOnes();
  y.row(4).setZero();
  Eigen::PermutationMatrix<Eigen::Dynamic> p(5);
  p.indices() << 3, 0, 4, 1, 2;
  const auto a = evaluate(s, y, 0.5), b = evaluate(p * s, p * y, 0.5);
  EXPECT_NEAR(a.ap, b.ap, 1e-15);
  EXPECT_NEAR(a.rl, b.rl, 1e-15);
  EXPECT_NEAR(a.hl, b.hl, 1e-15);
  EXPECT_NEAR(a.cv_raw, b.cv_raw, 1e-15);
}

TEST(CriticalDifference, Examples) {
  EXPECT_NEAR(critical_difference({12, 10, 3.268}), 5.2695, 1e-4);
  EXPECT_NEAR(critical_difference({2, 7, 1.96}), 1.96 * std::sqrt(1.0 / 7.0), 1e-15);
  EXPECT_NEAR(critical_difference({3, 6, 1.0}), 0.5774, 1e-4);
  EXPECT_THROW(critical_difference({1, 6, 1.0}), DataError);
}
