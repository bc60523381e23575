#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hytimbre/eval.hpp"
#include "hytimbre/model.hpp"
#include "hytimbre/rng.hpp"
#include "hytimbre/synth.hpp"
#include "hytimbre/train.hpp"

using Catch::Approx;
using namespace hytimbre;
using model::Geometry;

namespace {

data::Dataset tiny_corpus() {
  data::CorpusConfig cfg;
  auto all = synth::default_instruments();
  cfg.instruments = {all[0], all[1], all[6]};
  cfg.family_sizes = {2, 1};
  cfg.pitches = synth::pitch_set(6, 220.0, 2.0);
  cfg.n_mel = 12;
  cfg.n_frames = 8;
  cfg.train_per_instrument = 4;
  cfg.val_per_instrument = 1;
  cfg.test_per_instrument = 1;
  return data::build_corpus(cfg, 77);
}

model::LatentConfig tiny_model_config(const data::Dataset& ds, Geometry g, int dt = 2) {
  model::LatentConfig cfg;
  cfg.geometry = g;
  cfg.radius = 1.0;
  cfg.dp = 3;
  cfg.dt = dt;
  cfg.n_pitch = static_cast<int>(ds.pitch_names.size());
  cfg.n_timbre = static_cast<int>(ds.timbre_names.size());
  cfg.input_dim = static_cast<int>(ds.feature_dim());
  cfg.hidden = {16};
  return cfg;
}

// One-feature two-instrument dataset whose sign encodes the instrument.
data::Dataset sign_dataset() {
  data::Dataset ds;
  ds.n_mel = 1;
  ds.n_frames = 1;
  ds.pitch_names = {"p0"};
  ds.timbre_names = {"left/a", "right/b"};
  auto add = [&](float v, std::uint16_t timbre) {
    data::MelExample e;
    e.mel = {v};
    e.pitch = 0;
    e.timbre = timbre;
    e.split = data::Split::test;
    ds.examples.push_back(e);
  };
  add(-5.0f, 0);
  add(5.0f, 1);
  add(-4.0f, 0);
  add(6.0f, 1);
  return ds;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::map<std::string, std::string> parse_kv(const std::string& s) {
  std::map<std::string, std::string> out;
  for (const auto& line : split_lines(s)) {
    std::size_t eq = line.find(" = ");
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

}  // namespace

TEST_CASE("separability of the four-point fixture") {
  std::vector<std::vector<double>> means = {{0, 0}, {0, 1}, {10, 0}, {10, 1}};
  std::vector<int> family = {0, 0, 1, 1};
  eval::Separability sep =
      eval::hierarchical_separability(means, family, Geometry::euclidean);

  CHECK(sep.n_same == 2);
  CHECK(sep.n_diff == 4);
  CHECK(sep.d_same == 1.0);
  CHECK(sep.d_diff == Approx((10.0 + std::sqrt(101.0)) / 2.0).margin(1e-12));
  CHECK(sep.defined);
  CHECK(sep.s == Approx(10.024937810560445).margin(1e-9));
}

TEST_CASE("separability pair counts on the default partition") {
  data::Dataset names_only;
  for (const auto& inst : synth::default_instruments()) names_only.timbre_names.push_back(inst.name);
  std::vector<int> family = names_only.family_ids();
  REQUIRE(family.size() == 12);

  Rng rng(3);
  std::vector<std::vector<double>> means(12, std::vector<double>(3));
  for (auto& row : means)
    for (double& v : row) v = rng.gaussian();

  eval::Separability sep = eval::hierarchical_separability(means, family, Geometry::euclidean);
  CHECK(sep.n_same == 19);
  CHECK(sep.n_diff == 47);
}

TEST_CASE("separability symmetry and degeneracy") {
  SECTION("equidistant means give S = 1") {
    std::vector<std::vector<double>> means = {{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2.0}};
    eval::Separability sep =
        eval::hierarchical_separability(means, {0, 0, 1}, Geometry::euclidean);
    CHECK(sep.s == Approx(1.0).margin(1e-12));
  }

  SECTION("coincident same-family means are undefined with diagnostic fields") {
    std::vector<std::vector<double>> means = {{2, 3}, {2, 3}, {5, 0}, {5, 0}};
    eval::Separability sep =
        eval::hierarchical_separability(means, {0, 0, 1, 1}, Geometry::euclidean);
    CHECK_FALSE(sep.defined);
    CHECK(sep.d_same == 0.0);
    CHECK(sep.d_diff > 0.0);
    CHECK(sep.s == 0.0);
  }

  SECTION("euclidean S is scale invariant") {
    Rng rng(9);
    std::vector<std::vector<double>> means(6, std::vector<double>(3));
    for (auto& row : means)
      for (double& v : row) v = rng.gaussian();
    std::vector<int> family = {0, 0, 1, 1, 2, 2};
    double s1 = eval::hierarchical_separability(means, family, Geometry::euclidean).s;
    for (double c : {3.7, 0.01}) {
      auto scaled = means;
      for (auto& row : scaled)
        for (double& v : row) v *= c;
      double s2 = eval::hierarchical_separability(scaled, family, Geometry::euclidean).s;
      CHECK(s2 == Approx(s1).margin(1e-12));
    }
  }
}

TEST_CASE("separability uses the lorentz distance on curved means") {
  // Points on the K=-1 hyperboloid: (cosh r, sinh r * u).
  auto pt = [](double r, double ux, double uy) {
    return std::vector<double>{std::cosh(r), std::sinh(r) * ux, std::sinh(r) * uy};
  };
  std::vector<std::vector<double>> means = {pt(0, 0, 0), pt(1, 1, 0), pt(2, 0, 1), pt(1, -1, 0)};
  std::vector<int> family = {0, 0, 1, 1};

  auto dist = [&](std::size_t i, std::size_t j) {
    double ip = -means[i][0] * means[j][0] + means[i][1] * means[j][1] + means[i][2] * means[j][2];
    return std::acosh(std::max(1.0, -ip));
  };
  double d_same = (dist(0, 1) + dist(2, 3)) / 2.0;
  double d_diff = (dist(0, 2) + dist(0, 3) + dist(1, 2) + dist(1, 3)) / 4.0;

  eval::Separability sep =
      eval::hierarchical_separability(means, family, Geometry::hyperbolic, -1.0);
  CHECK(sep.d_same == Approx(d_same).margin(1e-12));
  CHECK(sep.d_diff == Approx(d_diff).margin(1e-12));
  CHECK(sep.s == Approx(d_diff / d_same).margin(1e-12));

  // The flat metric on the same coordinates gives a different ratio.
  double s_flat = eval::hierarchical_separability(means, family, Geometry::euclidean).s;
  CHECK(std::abs(s_flat - sep.s) > 1e-3);
}

TEST_CASE("separability input validation") {
  std::vector<std::vector<double>> one = {{0, 0}};
  CHECK_THROWS_AS(eval::hierarchical_separability(one, {0}, Geometry::euclidean),
                  std::invalid_argument);

  std::vector<std::vector<double>> two = {{0, 0}, {1, 0}};
  CHECK_THROWS_AS(eval::hierarchical_separability(two, {0}, Geometry::euclidean),
                  std::invalid_argument);  // family length mismatch
  CHECK_THROWS_AS(eval::hierarchical_separability(two, {0, 0}, Geometry::euclidean),
                  std::invalid_argument);  // no cross-family pair
  CHECK_THROWS_AS(eval::hierarchical_separability(two, {0, 1}, Geometry::euclidean),
                  std::invalid_argument);  // no same-family pair

  std::vector<std::vector<double>> ragged = {{0, 0}, {1, 0, 0}, {1, 1}};
  CHECK_THROWS_AS(eval::hierarchical_separability(ragged, {0, 0, 1}, Geometry::euclidean),
                  std::invalid_argument);
}

TEST_CASE("map accuracy from responsibilities") {
  SECTION("three correct of four") {
    ad::Tensor q = ad::Tensor::matrix({0.7, 0.2, 0.1,   // -> 0
                                       0.1, 0.8, 0.1,   // -> 1
                                       0.2, 0.3, 0.5,   // -> 2
                                       0.6, 0.3, 0.1},  // -> 0, label 2: wrong
                                      4, 3, false);
    std::vector<std::vector<int>> confusion;
    double acc = eval::timbre_accuracy_from_q(q, {0, 1, 2, 2}, &confusion);
    CHECK(acc == 0.75);
    CHECK(confusion == std::vector<std::vector<int>>{{1, 0, 0}, {0, 1, 0}, {1, 0, 1}});
    int total = 0, trace = 0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        total += confusion[i][j];
        trace += i == j ? confusion[i][j] : 0;
      }
    CHECK(total == 4);
    CHECK(acc == static_cast<double>(trace) / total);
  }

  SECTION("ties break toward the lowest index") {
    double third = 1.0 / 3.0;
    ad::Tensor q = ad::Tensor::matrix({third, third, third, third, third, third, third, third,
                                       third},
                                      3, 3, false);
    CHECK(eval::timbre_accuracy_from_q(q, {0, 1, 2}) == Approx(1.0 / 3.0));
    std::vector<std::vector<int>> confusion;
    eval::timbre_accuracy_from_q(q, {0, 1, 2}, &confusion);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(confusion[i][0] == 1);  // everything predicted as class 0
      CHECK(confusion[i][1] + confusion[i][2] == 0);
    }
  }

  SECTION("consistent relabeling leaves accuracy unchanged") {
    Rng rng(21);
    std::size_t n = 20, k = 5;
    std::vector<double> v(n * k);
    for (double& x : v) x = rng.uniform(0.01, 1.0);
    ad::Tensor q = ad::Tensor::matrix(std::vector<double>(v), n, k, false);
    std::vector<int> labels(n);
    for (auto& y : labels) y = static_cast<int>(rng.index(k));

    std::vector<int> perm = {3, 0, 4, 1, 2};  // new index of old class i
    std::vector<double> pv(n * k);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < k; ++c)
        pv[r * k + static_cast<std::size_t>(perm[c])] = v[r * k + c];
    ad::Tensor pq = ad::Tensor::matrix(std::move(pv), n, k, false);
    std::vector<int> plabels(n);
    for (std::size_t i = 0; i < n; ++i) plabels[i] = perm[static_cast<std::size_t>(labels[i])];

    CHECK(eval::timbre_accuracy_from_q(q, labels) == eval::timbre_accuracy_from_q(pq, plabels));
  }

  SECTION("validation") {
    ad::Tensor q = ad::Tensor::matrix({0.5, 0.5}, 1, 2, false);
    CHECK_THROWS_AS(eval::timbre_accuracy_from_q(q, {0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(eval::timbre_accuracy_from_q(q, {2}), std::domain_error);
  }
}

TEST_CASE("map accuracy on hand-built models") {
  data::Dataset ds = sign_dataset();

  for (Geometry g : {Geometry::euclidean, Geometry::hyperbolic}) {
    model::LatentConfig cfg;
    cfg.geometry = g;
    cfg.radius = 1.0;
    cfg.dp = 1;
    cfg.dt = 1;
    cfg.n_pitch = 1;
    cfg.n_timbre = 2;
    cfg.input_dim = 1;
    cfg.hidden = {};
    model::Model m(cfg, 1);

    SECTION(std::string("separated priors classify perfectly: ") +
            (g == Geometry::hyperbolic ? "hyperbolic" : "euclidean")) {
      m.store().get("enc_t.mu.w").mutable_value() = {1.0};
      m.store().get("enc_t.mu.b").mutable_value() = {0.0};
      m.store().get("prior.timbre_tangents").mutable_value() = {-5.0, 5.0};
      CHECK(eval::timbre_accuracy(m, ds, data::Split::test) == 1.0);
    }

    SECTION(std::string("collapsed priors predict the tie-break class: ") +
            (g == Geometry::hyperbolic ? "hyperbolic" : "euclidean")) {
      m.store().get("prior.timbre_tangents").mutable_value() = {0.0, 0.0};
      // All predictions fall to class 0; two of four labels are 0.
      CHECK(eval::timbre_accuracy(m, ds, data::Split::test) == 0.5);
    }
  }

  SECTION("empty split is an error") {
    model::LatentConfig cfg;
    cfg.dp = 1;
    cfg.dt = 1;
    cfg.n_pitch = 1;
    cfg.n_timbre = 2;
    cfg.input_dim = 1;
    cfg.hidden = {};
    model::Model m(cfg, 1);
    CHECK_THROWS_AS(eval::timbre_accuracy(m, ds, data::Split::train), std::invalid_argument);
  }
}

TEST_CASE("evaluation report") {
  data::Dataset ds = tiny_corpus();
  model::Model m(tiny_model_config(ds, Geometry::hyperbolic), 14);
  eval::EvalReport rep = eval::evaluate(m, ds, data::Split::test, 123);

  CHECK(rep.geometry == "hyperbolic");
  CHECK(rep.dp == 3);
  CHECK(rep.dt == 2);
  CHECK(rep.seed == 123);
  CHECK(rep.split == "test");
  CHECK(rep.n_examples == 3);
  REQUIRE(rep.confusion.size() == 3);

  SECTION("confusion row sums match per-instrument counts") {
    std::vector<int> counts(3, 0);
    for (std::size_t i : ds.split_indices(data::Split::test)) ++counts[ds.examples[i].timbre];
    int trace = 0, total = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      int row = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        row += rep.confusion[i][j];
        total += rep.confusion[i][j];
        trace += i == j ? rep.confusion[i][j] : 0;
      }
      CHECK(row == counts[i]);
    }
    CHECK(rep.accuracy == static_cast<double>(trace) / total);
  }

  SECTION("pair counts follow the family partition") {
    CHECK(rep.sep.n_same == 1);
    CHECK(rep.sep.n_diff == 2);
  }

  SECTION("text and machine reports carry the same numbers") {
    std::string text = eval::report_text(rep);
    CHECK(text.find("hyperbolic") != std::string::npos);
    CHECK(text.find("confusion") != std::string::npos);

    auto kv = parse_kv(eval::report_machine(rep));
    CHECK(kv.at("geometry") == "hyperbolic");
    CHECK(std::stod(kv.at("accuracy")) == rep.accuracy);
    CHECK(std::stod(kv.at("d_same")) == rep.sep.d_same);
    CHECK(std::stod(kv.at("d_diff")) == rep.sep.d_diff);
    CHECK(std::stod(kv.at("s")) == rep.sep.s);
    CHECK(kv.at("s_defined") == "true");
    CHECK(kv.at("n_examples") == "3");
    CHECK(kv.count("confusion_0") == 1);
    CHECK(kv.count("confusion_2") == 1);
  }

  SECTION("evaluation is deterministic") {
    eval::EvalReport again = eval::evaluate(m, ds, data::Split::test, 123);
    CHECK(eval::report_machine(again) == eval::report_machine(rep));
  }
}

TEST_CASE("embedding csv export") {
  data::Dataset ds = tiny_corpus();

  for (Geometry g : {Geometry::hyperbolic, Geometry::euclidean}) {
    model::Model m(tiny_model_config(ds, g), 25);
    std::ostringstream csv;
    eval::write_embed_csv(csv, m, ds, data::Split::test);
    std::vector<std::string> lines = split_lines(csv.str());

    const std::size_t ambient = g == Geometry::hyperbolic ? 3 : 2;
    std::string header = "example_id,pitch_label,timbre_label";
    for (std::size_t c = 0; c < ambient; ++c) header += ",c" + std::to_string(c);

    INFO((g == Geometry::hyperbolic ? "hyperbolic" : "euclidean"));
    REQUIRE(lines.size() == 1 + 3 + 3);
    CHECK(lines[0] == header);

    // Parse rows back into cells.
    auto cells = [](const std::string& line) {
      std::vector<std::string> out;
      std::istringstream in(line);
      std::string cell;
      while (std::getline(in, cell, ',')) out.push_back(cell);
      return out;
    };

    ad::Tensor priors = m.timbre_prior_means();
    std::vector<std::vector<double>> prior_coords;
    for (std::size_t j = 0; j < 3; ++j) {
      auto row = cells(lines[1 + 3 + j]);
      REQUIRE(row.size() == 3 + ambient);
      CHECK(row[0] == "prior_" + std::to_string(j));
      CHECK(row[1] == "-1");
      CHECK(row[2] == std::to_string(j));
      std::vector<double> coords;
      for (std::size_t c = 0; c < ambient; ++c) {
        double v = std::stod(row[3 + c]);
        CHECK(v == priors(j, c));  // %.17g round trip is exact
        coords.push_back(v);
      }
      prior_coords.push_back(coords);
    }

    if (g == Geometry::hyperbolic) {
      for (std::size_t r = 0; r < 3; ++r) {
        auto row = cells(lines[1 + r]);
        double inner = -std::stod(row[3]) * std::stod(row[3]);
        for (std::size_t c = 1; c < ambient; ++c)
          inner += std::stod(row[3 + c]) * std::stod(row[3 + c]);
        CHECK(-1.0 * inner == Approx(1.0).margin(1e-9));  // K<z,z> = 1 at K=-1
      }
    }

    // Cross-check: separability recomputed from the exported priors matches
    // the report.
    eval::EvalReport rep = eval::evaluate(m, ds, data::Split::test, 1);
    eval::Separability sep = eval::hierarchical_separability(
        prior_coords, ds.family_ids(), g, m.config().K());
    CHECK(sep.s == rep.sep.s);
    CHECK(sep.d_same == rep.sep.d_same);
    CHECK(sep.d_diff == rep.sep.d_diff);
  }

  SECTION("empty split is an error") {
    model::Model m(tiny_model_config(ds, Geometry::euclidean), 25);
    data::Dataset none = ds;
    for (auto& e : none.examples) e.split = data::Split::train;
    std::ostringstream csv;
    CHECK_THROWS_AS(eval::write_embed_csv(csv, m, none, data::Split::test), std::invalid_argument);
  }
}

TEST_CASE("embedding svg scatter") {
  data::Dataset ds = tiny_corpus();

  SECTION("two-dimensional timbre factor renders") {
    for (Geometry g : {Geometry::hyperbolic, Geometry::euclidean}) {
      model::Model m(tiny_model_config(ds, g, 2), 31);
      std::string svg = eval::embed_svg(m, ds, data::Split::test);
      INFO((g == Geometry::hyperbolic ? "hyperbolic" : "euclidean"));
      CHECK(svg.find("<svg") == 0);
      std::size_t circles = 0, pos = 0;
      while ((pos = svg.find("<circle", pos)) != std::string::npos) {
        ++circles;
        pos += 7;
      }
      // 3 examples + 3 prior markers + 3 legend swatches.
      CHECK(circles == 9);
      CHECK(svg.find(ds.timbre_names[0]) != std::string::npos);
    }
  }

  SECTION("other dimensions are rejected") {
    model::Model m(tiny_model_config(ds, Geometry::hyperbolic, 3), 31);
    CHECK_THROWS_AS(eval::embed_svg(m, ds, data::Split::test), std::invalid_argument);
  }
}

TEST_CASE("prior sampling decodes deterministically") {
  data::Dataset ds = tiny_corpus();
  for (Geometry g : {Geometry::hyperbolic, Geometry::euclidean}) {
    model::Model m(tiny_model_config(ds, g), 8);

    Rng r1(5), r2(5), r3(6);
    std::vector<double> a = eval::sample_decode(m, 2, 1, r1);
    std::vector<double> b = eval::sample_decode(m, 2, 1, r2);
    std::vector<double> c = eval::sample_decode(m, 2, 1, r3);
    std::vector<double> d = eval::sample_decode(m, 2, 2, r2);

    INFO((g == Geometry::hyperbolic ? "hyperbolic" : "euclidean"));
    REQUIRE(a.size() == ds.feature_dim());
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a != d);
    for (double v : a) REQUIRE(std::isfinite(v));

    Rng r4(5);
    CHECK_THROWS_AS(eval::sample_decode(m, 6, 0, r4), std::domain_error);
    CHECK_THROWS_AS(eval::sample_decode(m, 0, 3, r4), std::domain_error);
  }
}

TEST_CASE("sweep grid and formatting") {
  std::vector<eval::SweepCell> grid = eval::sweep_grid({1.0, 10.0, 100.0}, {2, 4});
  REQUIRE(grid.size() == 8);
  CHECK(grid[0].label == "euclidean");
  CHECK(grid[0].dt == 2);
  CHECK(grid[1].label == "euclidean");
  CHECK(grid[1].dt == 4);
  CHECK(grid[2].label == "hyperbolic R=1");
  CHECK(grid[6].label == "hyperbolic R=100");
  CHECK(grid[7].dt == 4);

  for (auto& c : grid) {
    c.accuracy = 0.5;
    c.sep.defined = true;
    c.sep.s = 1.5;
  }
  std::string table = eval::format_sweep_table(grid);
  std::vector<std::string> lines = split_lines(table);
  REQUIRE(lines.size() == 1 + 1 + 4);  // provenance, header, 4 geometry rows
  CHECK(lines[0].find("synthetic") != std::string::npos);
  CHECK(lines[1].find("D_t=2") != std::string::npos);
  CHECK(lines[1].find("D_t=4") != std::string::npos);
  CHECK(lines[2].find("euclidean") == 0);
  CHECK(lines[5].find("hyperbolic R=100") == 0);

  std::string tsv = eval::sweep_tsv(grid);
  std::vector<std::string> tsv_lines = split_lines(tsv);
  REQUIRE(tsv_lines.size() == 9);
  CHECK(tsv_lines[0].find("accuracy") != std::string::npos);
}

TEST_CASE("sweep runs deterministically across thread counts") {
  data::Dataset ds = tiny_corpus();
  model::LatentConfig base = tiny_model_config(ds, Geometry::euclidean);
  train::TrainConfig tc;
  tc.batch_size = 8;
  tc.max_epochs = 2;
  tc.patience = 2;

  std::vector<eval::SweepCell> serial = eval::run_sweep(ds, base, tc, 19, {1.0}, {2}, 1);
  std::vector<eval::SweepCell> parallel = eval::run_sweep(ds, base, tc, 19, {1.0}, {2}, 2);

  REQUIRE(serial.size() == 2);
  REQUIRE(parallel.size() == 2);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].label == parallel[i].label);
    CHECK(serial[i].accuracy == parallel[i].accuracy);
    CHECK(serial[i].sep.s == parallel[i].sep.s);
    CHECK(serial[i].best_epoch == parallel[i].best_epoch);
    CHECK(serial[i].steps > 0);
  }
}
