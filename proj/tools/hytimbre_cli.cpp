// Command-line front end for the hytimbre library: corpus synthesis, model
// training, evaluation, embedding export, prior sampling, gradient checking,
// and geometry sweeps.
//
// Exit codes: 0 success, 1 runtime failure (message on stderr), 2 bad usage
// (unknown flag or subcommand; usage text printed).
#include <CLI11.hpp>

#include <hytimbre/dataset.hpp>
#include <hytimbre/errors.hpp>
#include <hytimbre/eval.hpp>
#include <hytimbre/gradcheck.hpp>
#include <hytimbre/model.hpp>
#include <hytimbre/rng.hpp>
#include <hytimbre/train.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

namespace data = hytimbre::data;
namespace evalm = hytimbre::eval;
namespace gradcheck = hytimbre::gradcheck;
namespace model = hytimbre::model;
namespace train = hytimbre::train;
using hytimbre::ConfigError;
using hytimbre::Rng;

data::Split parse_split(const std::string& s) {
  if (s == "train") return data::Split::train;
  if (s == "val") return data::Split::val;
  if (s == "test") return data::Split::test;
  throw ConfigError("unknown split '" + s + "' (expected train|val|test)");
}

model::Geometry parse_geometry(const std::string& s) {
  if (s == "euclidean") return model::Geometry::euclidean;
  if (s == "hyperbolic") return model::Geometry::hyperbolic;
  throw ConfigError("unknown geometry '" + s + "' (expected euclidean|hyperbolic)");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Shape the model to the dataset it will see: flattened mel input plus one
// prior per label on each factor.
void fit_to_dataset(model::LatentConfig& cfg, const data::Dataset& ds) {
  cfg.input_dim = static_cast<int>(ds.feature_dim());
  cfg.n_pitch = static_cast<int>(ds.pitch_names.size());
  cfg.n_timbre = static_cast<int>(ds.timbre_names.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"factorized pitch/timbre variational autoencoder with a "
               "hyperbolic timbre latent"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  int exit_code = 0;

  // ---- synth-data ----------------------------------------------------------
  auto* synth = app.add_subcommand(
      "synth-data", "render the synthetic additive-tone corpus and save it");
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "output dataset path")->required();
  synth->add_option("--seed", synth_seed, "corpus random seed");
  synth->callback([&] {
    data::CorpusConfig cfg;
    data::Dataset ds = data::build_corpus(cfg, synth_seed);
    data::save_dataset(ds, synth_out);
    std::cout << "wrote " << synth_out << ": " << ds.examples.size()
              << " examples (" << ds.split_indices(data::Split::train).size()
              << " train / " << ds.split_indices(data::Split::val).size()
              << " val / " << ds.split_indices(data::Split::test).size()
              << " test), " << ds.timbre_names.size() << " instruments, "
              << ds.pitch_names.size() << " pitches, " << ds.n_mel << "x"
              << ds.n_frames << " mel\n";
  });

  // ---- train ---------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train a model on a saved corpus");
  std::string tr_data, tr_out, tr_geometry = "hyperbolic", tr_config, tr_log;
  double tr_radius = 1.0;
  int tr_dt = 4, tr_dp = 8, tr_mc = 1;
  std::uint64_t tr_seed = 0;
  tr->add_option("--data", tr_data, "dataset path")->required();
  tr->add_option("--out", tr_out, "output model path")->required();
  tr->add_option("--geometry", tr_geometry, "timbre geometry (default hyperbolic)")
      ->check(CLI::IsMember({"euclidean", "hyperbolic"}));
  tr->add_option("--radius", tr_radius, "curvature radius R, hyperbolic only (default 1)");
  tr->add_option("--dt", tr_dt, "timbre latent dimension (default 4)");
  tr->add_option("--dp", tr_dp, "pitch latent dimension (default 8)");
  tr->add_option("--config", tr_config, "training config file of 'key = value' lines");
  tr->add_option("--seed", tr_seed, "initialization + training seed");
  tr->add_option("--mc-samples", tr_mc, "Monte Carlo draws for the timbre divergence");
  tr->add_option("--log", tr_log, "epoch log TSV path (default <out>.log.tsv)");
  tr->callback([&] {
    data::Dataset ds = data::load_dataset(tr_data);
    model::LatentConfig mc;
    train::TrainConfig tc;
    if (!tr_config.empty())
      train::apply_config(train::parse_config_file(tr_config), tc, mc);
    mc.geometry = parse_geometry(tr_geometry);
    mc.radius = tr_radius;
    mc.dt = tr_dt;
    mc.dp = tr_dp;
    fit_to_dataset(mc, ds);
    // Explicit flags win over config-file values for the shared keys.
    if (tr->count("--seed") != 0 || tr_config.empty()) tc.seed = tr_seed;
    if (tr->count("--mc-samples") != 0) tc.mc_samples = tr_mc;

    model::Model m(mc, tc.seed);
    std::string log_path = tr_log.empty() ? tr_out + ".log.tsv" : tr_log;
    std::ofstream log = open_out(log_path);
    train::TrainResult res = train::train(m, ds, tc, &log);
    m.save(tr_out);
    std::cout << "trained " << res.log.size() << " epochs (" << res.steps
              << " optimizer steps); best epoch " << res.best_epoch
              << " with validation criterion " << fmt12(res.best_criterion)
              << "\nmodel -> " << tr_out << "\nlog -> " << log_path << "\n";
  });

  // ---- eval ----------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "evaluate a trained model on one split");
  std::string ev_model, ev_data, ev_split = "test", ev_out;
  std::uint64_t ev_seed = 0;
  ev->add_option("model", ev_model, "trained model path")->required();
  ev->add_option("--data", ev_data, "dataset path")->required();
  ev->add_option("--split", ev_split, "split to evaluate (default test)")
      ->check(CLI::IsMember({"train", "val", "test"}));
  ev->add_option("--seed", ev_seed, "evaluation seed");
  ev->add_option("--out", ev_out, "machine-readable 'key = value' report path");
  ev->callback([&] {
    model::Model m = model::Model::load(ev_model);
    data::Dataset ds = data::load_dataset(ev_data);
    evalm::EvalReport rep = evalm::evaluate(m, ds, parse_split(ev_split), ev_seed);
    std::cout << evalm::report_text(rep);
    if (!ev_out.empty()) {
      std::ofstream out = open_out(ev_out);
      out << evalm::report_machine(rep);
      std::cout << "report -> " << ev_out << "\n";
    }
  });

  // ---- embed ---------------------------------------------------------------
  auto* em = app.add_subcommand(
      "embed", "export posterior means and prior means as CSV (plus SVG when "
               "the timbre latent is 2-D)");
  std::string em_model, em_data, em_split = "test", em_out;
  em->add_option("model", em_model, "trained model path")->required();
  em->add_option("--data", em_data, "dataset path")->required();
  em->add_option("--split", em_split, "split to embed (default test)")
      ->check(CLI::IsMember({"train", "val", "test"}));
  em->add_option("--out", em_out, "output CSV path")->required();
  em->callback([&] {
    model::Model m = model::Model::load(em_model);
    data::Dataset ds = data::load_dataset(em_data);
    data::Split split = parse_split(em_split);
    {
      std::ofstream out = open_out(em_out);
      evalm::write_embed_csv(out, m, ds, split);
    }
    std::cout << "embed CSV -> " << em_out << "\n";
    if (m.config().dt == 2) {
      std::string svg_path = em_out + ".svg";
      std::ofstream out = open_out(svg_path);
      out << evalm::embed_svg(m, ds, split);
      std::cout << "scatter SVG -> " << svg_path << "\n";
    }
  });

  // ---- sample --------------------------------------------------------------
  auto* sa = app.add_subcommand(
      "sample", "draw latents from chosen pitch/timbre priors, decode, and "
                "write the mel grid as CSV");
  std::string sa_model, sa_data, sa_out;
  int sa_pitch = 0, sa_timbre = 0;
  std::uint64_t sa_seed = 0;
  sa->add_option("model", sa_model, "trained model path")->required();
  sa->add_option("--data", sa_data, "dataset path (defines the mel grid shape)")
      ->required();
  sa->add_option("--pitch", sa_pitch, "pitch label index")->required();
  sa->add_option("--timbre", sa_timbre, "timbre label index")->required();
  sa->add_option("--seed", sa_seed, "sampling seed");
  sa->add_option("--out", sa_out, "output CSV path")->required();
  sa->callback([&] {
    model::Model m = model::Model::load(sa_model);
    data::Dataset ds = data::load_dataset(sa_data);
    if (static_cast<std::size_t>(m.config().input_dim) != ds.feature_dim())
      throw ConfigError("model input dimension does not match dataset mel shape");
    Rng rng(sa_seed);
    std::vector<double> mel = evalm::sample_decode(m, sa_pitch, sa_timbre, rng);
    std::ofstream out = open_out(sa_out);
    char buf[40];
    for (std::size_t r = 0; r < ds.n_mel; ++r) {
      for (std::size_t c = 0; c < ds.n_frames; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", mel[r * ds.n_frames + c]);
        out << (c == 0 ? "" : ",") << buf;
      }
      out << "\n";
    }
    std::cout << "decoded mel (" << ds.n_mel << "x" << ds.n_frames << ") -> "
              << sa_out << "\n";
  });

  // ---- gradcheck -----------------------------------------------------------
  auto* gc = app.add_subcommand(
      "gradcheck", "finite-difference gradient battery over both geometries");
  std::uint64_t gc_seed = 9001;
  gc->add_option("--seed", gc_seed, "battery seed");
  gc->callback([&] {
    constexpr double kTol = 1e-4;
    bool all_ok = true;
    for (const gradcheck::Check& c : gradcheck::loss_gradient_battery(gc_seed)) {
      bool pass = c.max_rel <= kTol;
      all_ok = all_ok && pass;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3e", c.max_rel);
      std::cout << (pass ? "[ok]   " : "[FAIL] ") << c.name
                << ": max relative error " << buf << " (tolerance 1e-04)\n";
    }
    if (all_ok) {
      std::cout << "all gradient checks passed\n";
    } else {
      std::cout << "gradient check FAILED\n";
      exit_code = 1;
    }
  });

  // ---- sweep ---------------------------------------------------------------
  auto* sw = app.add_subcommand(
      "sweep", "train the full geometry/radius/timbre-dimension grid and "
               "summarize accuracy and separability");
  std::string sw_data, sw_config, sw_out;
  std::uint64_t sw_seed = 0;
  int sw_threads = 0, sw_dp = 8;
  sw->add_option("--data", sw_data, "dataset path")->required();
  sw->add_option("--config", sw_config, "training config file of 'key = value' lines");
  sw->add_option("--seed", sw_seed, "sweep seed (per-cell seeds are derived)");
  sw->add_option("--out", sw_out, "summary TSV path");
  sw->add_option("--threads", sw_threads,
                 "worker threads (default: hardware concurrency)");
  sw->add_option("--dp", sw_dp, "pitch latent dimension (default 8)");
  sw->callback([&] {
    data::Dataset ds = data::load_dataset(sw_data);
    model::LatentConfig base;
    train::TrainConfig tc;
    if (!sw_config.empty())
      train::apply_config(train::parse_config_file(sw_config), tc, base);
    base.dp = sw_dp;
    fit_to_dataset(base, ds);
    std::vector<evalm::SweepCell> cells = evalm::run_sweep(
        ds, base, tc, sw_seed, {1.0, 10.0, 100.0}, {2, 4}, sw_threads);
    std::cout << evalm::format_sweep_table(cells);
    if (!sw_out.empty()) {
      std::ofstream out = open_out(sw_out);
      out << evalm::sweep_tsv(cells);
      std::cout << "sweep TSV -> " << sw_out << "\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends: print and exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the error plus full usage text
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
