#pragma once

// Evaluation of a trained model: MAP timbre accuracy with confusion counts,
// hierarchical separability of the learned timbre priors, text and
// machine-readable reports, embedding export (CSV + optional 2-D SVG), prior
// sampling, and the geometry/radius/dimension sweep.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hytimbre/dataset.hpp"
#include "hytimbre/lorentz.hpp"
#include "hytimbre/loss.hpp"
#include "hytimbre/model.hpp"
#include "hytimbre/rng.hpp"
#include "hytimbre/train.hpp"

namespace hytimbre::eval {

// ---------------------------------------------------------------------------
// hierarchical separability
// ---------------------------------------------------------------------------

struct Separability {
  double d_same = 0.0;   // mean prior distance over same-family pairs
  double d_diff = 0.0;   // mean prior distance over cross-family pairs
  double s = 0.0;        // d_diff / d_same, meaningful only when `defined`
  bool defined = false;  // false when all same-family means coincide
  std::size_t n_same = 0, n_diff = 0;
};

// Mean pairwise distance between prior means within and across families.
// `means` rows are ambient coordinates: d+1 per point on the curved manifold
// (with curvature K), d per point in the flat case.
inline Separability hierarchical_separability(const std::vector<std::vector<double>>& means,
                                              const std::vector<int>& family,
                                              model::Geometry geometry, double K = -1.0) {
  if (means.size() < 2)
    throw std::invalid_argument("hierarchical_separability: need at least two instruments");
  if (family.size() != means.size())
    throw std::invalid_argument("hierarchical_separability: family list length mismatch");
  for (const auto& row : means)
    if (row.size() != means[0].size())
      throw std::invalid_argument("hierarchical_separability: ragged mean matrix");

  auto dist = [&](std::size_t i, std::size_t j) {
    if (geometry == model::Geometry::hyperbolic) {
      lorentz::Curvature curv(K);
      return lorentz::distance(lorentz::ManifoldPoint{means[i], curv},
                               lorentz::ManifoldPoint{means[j], curv});
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < means[i].size(); ++c) {
      double d = means[i][c] - means[j][c];
      acc += d * d;
    }
    return std::sqrt(acc);
  };

  Separability out;
  double same = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i)
    for (std::size_t j = i + 1; j < means.size(); ++j) {
      double d = dist(i, j);
      if (family[i] == family[j]) {
        same += d;
        ++out.n_same;
      } else {
        diff += d;
        ++out.n_diff;
      }
    }
  if (out.n_same == 0)
    throw std::invalid_argument("hierarchical_separability: no same-family pair");
  if (out.n_diff == 0)
    throw std::invalid_argument("hierarchical_separability: no cross-family pair");

  out.d_same = same / static_cast<double>(out.n_same);
  out.d_diff = diff / static_cast<double>(out.n_diff);
  out.defined = out.d_same > 0.0;
  out.s = out.defined ? out.d_diff / out.d_same : 0.0;
  return out;
}

inline std::vector<std::vector<double>> tensor_rows(const ad::Tensor& t) {
  std::vector<std::vector<double>> out(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) out[r][c] = t(r, c);
  return out;
}

// ---------------------------------------------------------------------------
// MAP timbre accuracy
// ---------------------------------------------------------------------------

// Accuracy of row-wise argmax predictions from a responsibility matrix; ties
// break toward the lowest class index.  Fills `confusion` (true x predicted
// counts) when given.
inline double timbre_accuracy_from_q(const ad::Tensor& q, const std::vector<int>& labels,
                                     std::vector<std::vector<int>>* confusion = nullptr) {
  if (q.rows() == 0) throw std::invalid_argument("timbre_accuracy: empty evaluation set");
  if (labels.size() != q.rows())
    throw std::invalid_argument("timbre_accuracy: label count differs from row count");
  const std::size_t n_class = q.cols();
  if (confusion) confusion->assign(n_class, std::vector<int>(n_class, 0));

  std::size_t correct = 0;
  for (std::size_t r = 0; r < q.rows(); ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= n_class)
      throw std::domain_error("timbre_accuracy: label out of range");
    std::size_t pred = 0;
    for (std::size_t c = 1; c < n_class; ++c)
      if (q(r, c) > q(r, pred)) pred = c;
    if (confusion) ++(*confusion)[static_cast<std::size_t>(labels[r])][pred];
    correct += pred == static_cast<std::size_t>(labels[r]);
  }
  return static_cast<double>(correct) / static_cast<double>(q.rows());
}

namespace detail {

inline ad::Tensor split_features(const data::Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<double> v;
  v.reserve(idx.size() * ds.feature_dim());
  for (std::size_t i : idx) {
    std::vector<double> f = ds.features(i);
    v.insert(v.end(), f.begin(), f.end());
  }
  return ad::Tensor::matrix(std::move(v), idx.size(), ds.feature_dim(), false);
}

inline void check_compatible(const model::Model& m, const data::Dataset& ds) {
  const model::LatentConfig& cfg = m.config();
  if (static_cast<std::size_t>(cfg.input_dim) != ds.feature_dim())
    throw std::invalid_argument("eval: model input dimension differs from dataset features");
  if (static_cast<std::size_t>(cfg.n_timbre) != ds.timbre_names.size())
    throw std::invalid_argument("eval: model timbre count differs from dataset");
  if (static_cast<std::size_t>(cfg.n_pitch) != ds.pitch_names.size())
    throw std::invalid_argument("eval: model pitch count differs from dataset");
}

}  // namespace detail

// MAP accuracy over a dataset split, evaluating responsibilities at the
// posterior mean.
inline double timbre_accuracy(model::Model& m, const data::Dataset& ds, data::Split split,
                              std::vector<std::vector<int>>* confusion = nullptr) {
  detail::check_compatible(m, ds);
  std::vector<std::size_t> idx = ds.split_indices(split);
  if (idx.empty()) throw std::invalid_argument("timbre_accuracy: empty evaluation set");
  ad::Tensor q = loss::q_timbre_label(m, detail::split_features(ds, idx), nullptr);
  std::vector<int> labels;
  for (std::size_t i : idx) labels.push_back(ds.examples[i].timbre);
  return timbre_accuracy_from_q(q, labels, confusion);
}

// ---------------------------------------------------------------------------
// evaluation report
// ---------------------------------------------------------------------------

struct EvalReport {
  std::string geometry;
  double radius = 0.0;
  int dp = 0, dt = 0;
  std::uint64_t seed = 0;
  std::string split;
  std::size_t n_examples = 0;
  double accuracy = 0.0;
  std::vector<std::vector<int>> confusion;  // rows = true label, cols = predicted
  Separability sep;
  std::vector<std::string> timbre_names;
};

inline const char* split_name(data::Split s) {
  switch (s) {
    case data::Split::train: return "train";
    case data::Split::val: return "val";
    default: return "test";
  }
}

inline EvalReport evaluate(model::Model& m, const data::Dataset& ds, data::Split split,
                           std::uint64_t seed) {
  const model::LatentConfig& cfg = m.config();
  EvalReport rep;
  rep.geometry = cfg.geometry == model::Geometry::hyperbolic ? "hyperbolic" : "euclidean";
  rep.radius = cfg.radius;
  rep.dp = cfg.dp;
  rep.dt = cfg.dt;
  rep.seed = seed;
  rep.split = split_name(split);
  rep.n_examples = ds.split_indices(split).size();
  rep.timbre_names = ds.timbre_names;
  rep.accuracy = timbre_accuracy(m, ds, split, &rep.confusion);
  rep.sep = hierarchical_separability(tensor_rows(m.timbre_prior_means()), ds.family_ids(),
                                      cfg.geometry, cfg.K());
  return rep;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace detail

inline std::string report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "evaluation report\n";
  out << "  geometry:        " << r.geometry;
  if (r.geometry == "hyperbolic") out << " (R = " << detail::fmt(r.radius) << ")";
  out << "\n";
  out << "  latent dims:     pitch " << r.dp << ", timbre " << r.dt << "\n";
  out << "  seed:            " << r.seed << "\n";
  out << "  split:           " << r.split << " (" << r.n_examples << " examples)\n";
  out << "  timbre accuracy: " << detail::fmt4(r.accuracy) << "\n";
  out << "  prior separability: D_same = " << detail::fmt4(r.sep.d_same)
      << ", D_diff = " << detail::fmt4(r.sep.d_diff) << ", ";
  if (r.sep.defined)
    out << "S = " << detail::fmt4(r.sep.s) << "\n";
  else
    out << "S undefined (same-family prior means coincide)\n";
  out << "  pair counts:     " << r.sep.n_same << " same-family, " << r.sep.n_diff
      << " cross-family\n";
  out << "  confusion (rows = true, cols = predicted):\n";
  for (std::size_t i = 0; i < r.confusion.size(); ++i) {
    out << "    ";
    for (std::size_t j = 0; j < r.confusion[i].size(); ++j) {
      if (j) out << " ";
      out << r.confusion[i][j];
    }
    out << "  # " << (i < r.timbre_names.size() ? r.timbre_names[i] : "?") << "\n";
  }
  return out.str();
}

// `key = value` mirror of the text report.
inline std::string report_machine(const EvalReport& r) {
  std::ostringstream out;
  out << "geometry = " << r.geometry << "\n";
  out << "radius = " << detail::fmt(r.radius) << "\n";
  out << "dp = " << r.dp << "\n";
  out << "dt = " << r.dt << "\n";
  out << "seed = " << r.seed << "\n";
  out << "split = " << r.split << "\n";
  out << "n_examples = " << r.n_examples << "\n";
  out << "accuracy = " << detail::fmt(r.accuracy) << "\n";
  out << "d_same = " << detail::fmt(r.sep.d_same) << "\n";
  out << "d_diff = " << detail::fmt(r.sep.d_diff) << "\n";
  out << "n_same = " << r.sep.n_same << "\n";
  out << "n_diff = " << r.sep.n_diff << "\n";
  out << "s_defined = " << (r.sep.defined ? "true" : "false") << "\n";
  if (r.sep.defined) out << "s = " << detail::fmt(r.sep.s) << "\n";
  for (std::size_t i = 0; i < r.confusion.size(); ++i) {
    out << "confusion_" << i << " = ";
    for (std::size_t j = 0; j < r.confusion[i].size(); ++j) {
      if (j) out << ",";
      out << r.confusion[i][j];
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// embedding export
// ---------------------------------------------------------------------------

// CSV of per-example timbre posterior means followed by the prior means.
// Columns: example_id,pitch_label,timbre_label,c0..c{D-1} with D the ambient
// dimension (dt+1 on the curved manifold).  Prior rows use id "prior_<j>" and
// pitch label -1.  Coordinates are printed with %.17g so they round-trip.
inline void write_embed_csv(std::ostream& out, model::Model& m, const data::Dataset& ds,
                            data::Split split) {
  detail::check_compatible(m, ds);
  std::vector<std::size_t> idx = ds.split_indices(split);
  if (idx.empty()) throw std::invalid_argument("embed: empty split");
  model::PosteriorParams post = m.encode(detail::split_features(ds, idx));
  ad::Tensor priors = m.timbre_prior_means();

  out << "example_id,pitch_label,timbre_label";
  for (std::size_t c = 0; c < post.mean_t.cols(); ++c) out << ",c" << c;
  out << "\n";
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const data::MelExample& e = ds.examples[idx[r]];
    out << idx[r] << "," << e.pitch << "," << e.timbre;
    for (std::size_t c = 0; c < post.mean_t.cols(); ++c)
      out << "," << detail::fmt(post.mean_t(r, c));
    out << "\n";
  }
  for (std::size_t j = 0; j < priors.rows(); ++j) {
    out << "prior_" << j << ",-1," << j;
    for (std::size_t c = 0; c < priors.cols(); ++c) out << "," << detail::fmt(priors(j, c));
    out << "\n";
  }
}

namespace detail {

inline std::string color_of(int instrument, int n) {
  int hue = n > 0 ? (360 * instrument) / n : 0;
  return "hsl(" + std::to_string(hue) + ",70%,45%)";
}

}  // namespace detail

// 2-D scatter of the timbre embedding; only dt == 2 plots without a
// projection choice.  Curved embeddings are drawn in the tangent chart at the
// origin (log map), flat ones directly.
inline std::string embed_svg(model::Model& m, const data::Dataset& ds, data::Split split) {
  const model::LatentConfig& cfg = m.config();
  if (cfg.dt != 2)
    throw std::invalid_argument("embed_svg: 2-D scatter requires a 2-dimensional timbre factor");
  detail::check_compatible(m, ds);
  std::vector<std::size_t> idx = ds.split_indices(split);
  if (idx.empty()) throw std::invalid_argument("embed: empty split");

  model::PosteriorParams post = m.encode(detail::split_features(ds, idx));
  ad::Tensor priors = m.timbre_prior_means();
  auto chart = [&](const ad::Tensor& pts) {
    if (cfg.geometry == model::Geometry::euclidean) return pts;
    ad::Tensor u = ad::log_map_rows(ad::origin_row(cfg.dt, cfg.K()), pts, cfg.K());
    return ad::slice_cols(u, 1, 2);
  };
  ad::Tensor zs = chart(post.mean_t);
  ad::Tensor ps = chart(priors);

  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  auto widen = [&](double x, double y) {
    lo_x = std::min(lo_x, x);
    hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y);
    hi_y = std::max(hi_y, y);
  };
  for (std::size_t r = 0; r < zs.rows(); ++r) widen(zs(r, 0), zs(r, 1));
  for (std::size_t r = 0; r < ps.rows(); ++r) widen(ps(r, 0), ps(r, 1));
  double span_x = std::max(hi_x - lo_x, 1e-9), span_y = std::max(hi_y - lo_y, 1e-9);
  lo_x -= 0.08 * span_x;
  hi_x += 0.08 * span_x;
  lo_y -= 0.08 * span_y;
  hi_y += 0.08 * span_y;

  const double plot = 560.0, pad = 20.0, legend_w = 220.0;
  auto sx = [&](double x) { return pad + (x - lo_x) / (hi_x - lo_x) * plot; };
  auto sy = [&](double y) { return pad + (hi_y - y) / (hi_y - lo_y) * plot; };

  const int n_timbre = cfg.n_timbre;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (2 * pad + plot + legend_w)
      << "\" height=\"" << (2 * pad + plot) << "\">\n";
  out << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << plot << "\" height=\""
      << plot << "\" fill=\"white\" stroke=\"#888\"/>\n";
  for (std::size_t r = 0; r < zs.rows(); ++r) {
    int t = ds.examples[idx[r]].timbre;
    out << "<circle cx=\"" << detail::fmt4(sx(zs(r, 0))) << "\" cy=\"" << detail::fmt4(sy(zs(r, 1)))
        << "\" r=\"3\" fill=\"" << detail::color_of(t, n_timbre) << "\" fill-opacity=\"0.75\"/>\n";
  }
  for (std::size_t j = 0; j < ps.rows(); ++j) {
    out << "<circle cx=\"" << detail::fmt4(sx(ps(j, 0))) << "\" cy=\"" << detail::fmt4(sy(ps(j, 1)))
        << "\" r=\"6\" fill=\"" << detail::color_of(static_cast<int>(j), n_timbre)
        << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  }
  for (int t = 0; t < n_timbre; ++t) {
    double y = pad + 14.0 + 16.0 * t;
    out << "<circle cx=\"" << (2 * pad + plot + 10) << "\" cy=\"" << y << "\" r=\"4\" fill=\""
        << detail::color_of(t, n_timbre) << "\"/>\n";
    out << "<text x=\"" << (2 * pad + plot + 20) << "\" y=\"" << (y + 4)
        << "\" font-family=\"monospace\" font-size=\"11\">"
        << (static_cast<std::size_t>(t) < ds.timbre_names.size() ? ds.timbre_names[t] : "?")
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// prior sampling
// ---------------------------------------------------------------------------

// Draws one latent pair from the labeled priors (pitch Gaussian, timbre
// wrapped/flat Gaussian around the prior mean) and decodes it.
inline std::vector<double> sample_decode(model::Model& m, int pitch_id, int timbre_id, Rng& rng) {
  const model::LatentConfig& cfg = m.config();
  if (pitch_id < 0 || pitch_id >= cfg.n_pitch)
    throw std::domain_error("sample: pitch label out of range");
  if (timbre_id < 0 || timbre_id >= cfg.n_timbre)
    throw std::domain_error("sample: timbre label out of range");

  std::vector<double> ep(static_cast<std::size_t>(cfg.dp));
  for (double& v : ep) v = cfg.pitch_sigma * rng.gaussian();
  ad::Tensor z_p = ad::add(ad::gather_rows(m.pitch_prior_means(), {pitch_id}),
                           ad::Tensor::matrix(std::move(ep), 1, static_cast<std::size_t>(cfg.dp), false));

  std::vector<double> et(static_cast<std::size_t>(cfg.dt));
  for (double& v : et) v = cfg.timbre_sigma * rng.gaussian();
  ad::Tensor w = ad::Tensor::matrix(std::move(et), 1, static_cast<std::size_t>(cfg.dt), false);
  ad::Tensor mean_t = ad::gather_rows(m.timbre_prior_means(), {timbre_id});
  ad::Tensor z_t = cfg.geometry == model::Geometry::hyperbolic
                       ? ad::proj_rows(mean_t, w, cfg.K())
                       : ad::add(mean_t, w);

  ad::Tensor x = m.decode(z_p, z_t);
  return x.value();
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepCell {
  std::string label;  // "euclidean" or "hyperbolic R=<r>"
  model::Geometry geometry = model::Geometry::euclidean;
  double radius = 1.0;
  int dt = 0;
  double accuracy = 0.0;
  Separability sep;
  int best_epoch = 0;
  int steps = 0;
};

// Row-major grid: geometry rows ({euclidean} then hyperbolic per radius),
// timbre dimensions as columns.
inline std::vector<SweepCell> sweep_grid(const std::vector<double>& radii,
                                         const std::vector<int>& dts) {
  std::vector<SweepCell> out;
  for (int row = 0; row < 1 + static_cast<int>(radii.size()); ++row)
    for (int dt : dts) {
      SweepCell c;
      c.dt = dt;
      if (row == 0) {
        c.label = "euclidean";
      } else {
        c.geometry = model::Geometry::hyperbolic;
        c.radius = radii[static_cast<std::size_t>(row - 1)];
        char buf[48];
        std::snprintf(buf, sizeof buf, "hyperbolic R=%g", c.radius);
        c.label = buf;
      }
      out.push_back(std::move(c));
    }
  return out;
}

// Trains and evaluates one model per cell.  Each cell derives its own seeds,
// so results do not depend on scheduling; cells run on up to `threads`
// workers (model, tape and random state are all cell-private).
inline std::vector<SweepCell> run_sweep(const data::Dataset& ds, const model::LatentConfig& base,
                                        const train::TrainConfig& tc, std::uint64_t seed,
                                        const std::vector<double>& radii = {1.0, 10.0, 100.0},
                                        const std::vector<int>& dts = {2, 4}, int threads = 0) {
  std::vector<SweepCell> cells = sweep_grid(radii, dts);
  if (threads <= 0) {
    unsigned hc = std::thread::hardware_concurrency();
    threads = hc == 0 ? 1 : static_cast<int>(hc);
  }
  threads = std::min<int>(threads, static_cast<int>(cells.size()));

  auto run_cell = [&](std::size_t i) {
    SweepCell& cell = cells[i];
    model::LatentConfig cfg = base;
    cfg.geometry = cell.geometry;
    cfg.radius = cell.radius;
    cfg.dt = cell.dt;
    model::Model m(cfg, derive_seed(seed, i, 7));
    train::TrainConfig cell_tc = tc;
    cell_tc.seed = derive_seed(seed, i, 8);
    train::TrainResult res = train::train(m, ds, cell_tc);
    cell.best_epoch = res.best_epoch;
    cell.steps = res.steps;
    EvalReport rep = evaluate(m, ds, data::Split::test, seed);
    cell.accuracy = rep.accuracy;
    cell.sep = rep.sep;
  };

  if (threads <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t]() {
        try {
          for (std::size_t i = static_cast<std::size_t>(t); i < cells.size();
               i += static_cast<std::size_t>(threads))
            run_cell(i);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return cells;
}

// Summary table: geometry rows, one accuracy/S column pair per timbre
// dimension.
inline std::string format_sweep_table(const std::vector<SweepCell>& cells) {
  std::vector<int> dts;
  std::vector<std::string> rows;
  for (const auto& c : cells) {
    if (std::find(dts.begin(), dts.end(), c.dt) == dts.end()) dts.push_back(c.dt);
    if (std::find(rows.begin(), rows.end(), c.label) == rows.end()) rows.push_back(c.label);
  }
  auto find_cell = [&](const std::string& label, int dt) -> const SweepCell* {
    for (const auto& c : cells)
      if (c.label == label && c.dt == dt) return &c;
    return nullptr;
  };

  std::ostringstream out;
  out << "# timbre sweep on the synthetic additive corpus (accuracy = MAP timbre accuracy on "
         "the test split; S = prior separability)\n";
  char buf[64];
  out << "configuration      ";
  for (int dt : dts) {
    std::snprintf(buf, sizeof buf, " | D_t=%-2d acc      S", dt);
    out << buf;
  }
  out << "\n";
  for (const auto& label : rows) {
    std::snprintf(buf, sizeof buf, "%-19s", label.c_str());
    out << buf;
    for (int dt : dts) {
      const SweepCell* c = find_cell(label, dt);
      if (!c) continue;
      if (c->sep.defined)
        std::snprintf(buf, sizeof buf, " | %.4f   %8.4f", c->accuracy, c->sep.s);
      else
        std::snprintf(buf, sizeof buf, " | %.4f   undef", c->accuracy);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

// One TSV row per cell for machine consumption.
inline std::string sweep_tsv(const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  out << "label\tgeometry\tradius\tdt\taccuracy\td_same\td_diff\ts_defined\ts\tbest_epoch\tsteps\n";
  for (const auto& c : cells) {
    out << c.label << "\t"
        << (c.geometry == model::Geometry::hyperbolic ? "hyperbolic" : "euclidean") << "\t"
        << detail::fmt(c.radius) << "\t" << c.dt << "\t" << detail::fmt(c.accuracy) << "\t"
        << detail::fmt(c.sep.d_same) << "\t" << detail::fmt(c.sep.d_diff) << "\t"
        << (c.sep.defined ? "true" : "false") << "\t" << detail::fmt(c.sep.defined ? c.sep.s : 0.0)
        << "\t" << c.best_epoch << "\t" << c.steps << "\n";
  }
  return out.str();
}

}  // namespace hytimbre::eval
