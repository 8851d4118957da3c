// gmrf command-line tool. Every subcommand accepts --seed, --out and
// --config; a config file holds `option = value` lines using the long option
// names (the experiment subcommand takes the experiment keys instead).
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "gmrf/checkpoint.hpp"
#include "gmrf/config.hpp"
#include "gmrf/experiment.hpp"
#include "gmrf/features.hpp"
#include "gmrf/games.hpp"
#include "gmrf/gmm.hpp"
#include "gmrf/pnm.hpp"
#include "gmrf/preprocess.hpp"
#include "gmrf/smoothness.hpp"
#include "gmrf/solvers.hpp"
#include "gmrf/train.hpp"

namespace {

using namespace gmrf;

struct Shared {
  std::uint64_t seed = 1;
  std::string out;
  std::string config;
};

void error_line(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

/// Opens --out, or stdout when it is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw Error("io.open", "cannot open " + path + " for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void write_text(const std::string& path, const std::string& text) {
  Output out(path);
  out.stream() << text;
  if (!out.stream()) throw Error("io.write", "failed writing " + path);
}

std::string require_out(const Shared& s, const char* what) {
  detail::require(!s.out.empty(), "cli.out", std::string("--out is required: ") + what);
  return s.out;
}

GameConfig game_config(const std::string& order, int max_sweeps, std::uint64_t seed) {
  GameConfig c;
  c.order = order == "checkerboard" ? SweepOrder::kCheckerboard : SweepOrder::kRaster;
  c.max_sweeps = max_sweeps;
  c.seed = seed;
  c.validate();
  return c;
}

SolveResult solve(const EnergyModel& model, LabelField init, const std::string& solver, const GameConfig& cfg) {
  return solver == "anneal" ? solve_anneal(model, std::move(init), cfg) : solve_icm(model, std::move(init), cfg);
}

void maybe_write_trace(const std::string& path, const std::vector<TraceRow>& trace) {
  if (path.empty()) return;
  Output out(path);
  write_trace_csv(out.stream(), trace);
}

Dataset synthetic_set(int size, int per_class, int noise, std::uint64_t seed, int pad) {
  Dataset d;
  for (int i = 0; i < per_class; ++i) {
    for (int c = 0; c < kSceneClassCount; ++c) {
      d.images.push_back(equalize(gen_scene(c, size + pad, noise, detail::mix_seed({seed, static_cast<std::uint64_t>(i)}))));
      d.labels.push_back(c);
    }
  }
  return d;
}

void add_shared(CLI::App* sub, Shared& s) {
  sub->add_option("--seed", s.seed, "Master seed");
  sub->add_option("--out", s.out, "Output path ('-' for stdout)");
  sub->add_option("--config", s.config, "key = value config file");
}

/// Rewrites argv so that config-file values precede the command-line ones;
/// options take their last value, so the command line wins.
std::vector<std::string> expand_config(CLI::App& app, const std::vector<std::string>& args) {
  if (args.size() < 2 || args[1] == "experiment") return args;
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[1]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::string path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  const KeyValueConfig kv = KeyValueConfig::load(path);
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  for (const ConfigEntry& e : kv.entries()) {
    const CLI::Option* opt = sub->get_option_no_throw("--" + e.key);
    if (opt == nullptr || e.key == "config") {
      throw FormatError("config.unknown_key", "line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
    out.push_back("--" + e.key);
    if (opt->get_type_size() != 0) out.push_back(e.value);
  }
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Game-theoretic MRF image pipeline and scene classifier"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  Shared shared;
  std::function<void()> action;

  // preprocess
  std::string in_path, method = "equalize";
  double cutoff = 0.25;
  auto* pre = app.add_subcommand("preprocess", "Enhance a PNM image");
  add_shared(pre, shared);
  pre->add_option("--in", in_path, "Input PNM")->required();
  pre->add_option("--method", method, "equalize | dft-lowpass | dft-highpass | haar")
      ->check(CLI::IsMember({"equalize", "dft-lowpass", "dft-highpass", "haar"}));
  pre->add_option("--cutoff", cutoff, "DFT cutoff radius in (0, 1]");
  pre->callback([&] {
    action = [&] {
      const Image img = to_gray(load_pnm(in_path));
      Image out;
      if (method == "equalize") out = equalize(img);
      if (method == "dft-lowpass") out = dft_enhance(img, FilterMode::kLowpass, cutoff);
      if (method == "dft-highpass") out = dft_enhance(img, FilterMode::kHighpass, cutoff);
      if (method == "haar") out = haar_enhance(img);
      save_pnm(out, require_out(shared, "output PNM"));
    };
  });

  // gmm-fit
  int components = 2, max_iters = 200;
  double epsilon = 1e-6;
  std::string trace_path;
  auto* gmm = app.add_subcommand("gmm-fit", "Fit a Gaussian mixture to image intensities");
  add_shared(gmm, shared);
  gmm->add_option("--in", in_path, "Input PNM")->required();
  gmm->add_option("--components", components, "Mixture components");
  gmm->add_option("--epsilon", epsilon, "Log-likelihood change that stops EM");
  gmm->add_option("--max-iters", max_iters, "EM iteration cap");
  gmm->add_option("--trace", trace_path, "Write the log-likelihood trace CSV here");
  gmm->callback([&] {
    action = [&] {
      const auto data = normalized_intensities(to_gray(load_pnm(in_path)));
      const GmmFit fit = fit_gmm(data, components, epsilon, max_iters, shared.seed);
      std::ostringstream csv;
      csv.precision(17);
      csv << "component,weight,mean,variance\n";
      for (int m = 0; m < fit.params.components(); ++m) {
        const auto k = static_cast<std::size_t>(m);
        csv << m << ',' << fit.params.weights[k] << ',' << fit.params.means[k] << ',' << fit.params.variances[k] << '\n';
      }
      write_text(shared.out, csv.str());
      if (!trace_path.empty()) {
        std::ostringstream t;
        t.precision(17);
        t << "iteration,loglik\n";
        for (std::size_t i = 0; i < fit.trace.loglik_per_iter.size(); ++i) t << i << ',' << fit.trace.loglik_per_iter[i] << '\n';
        write_text(trace_path, t.str());
      }
    };
  });

  // segment
  double beta = 1.0;
  std::string prior = "potts", solver = "icm", order = "raster";
  int max_sweeps = 100;
  auto* seg = app.add_subcommand("segment", "Segment an image as a pixel game over GMM labels");
  add_shared(seg, shared);
  seg->add_option("--in", in_path, "Input PNM")->required();
  seg->add_option("--components", components, "Number of labels");
  seg->add_option("--beta", beta, "Pairwise weight")->check(CLI::NonNegativeNumber);
  seg->add_option("--prior", prior, "potts | quadratic")->check(CLI::IsMember({"potts", "quadratic"}));
  seg->add_option("--solver", solver, "icm | anneal")->check(CLI::IsMember({"icm", "anneal"}));
  seg->add_option("--order", order, "raster | checkerboard")->check(CLI::IsMember({"raster", "checkerboard"}));
  seg->add_option("--max-sweeps", max_sweeps, "Sweep cap");
  seg->add_option("--trace", trace_path, "Write the energy trace CSV here");
  seg->callback([&] {
    action = [&] {
      const Image img = to_gray(load_pnm(in_path));
      const GmmFit fit = fit_gmm(normalized_intensities(img), components, 1e-6, 200, shared.seed);
      const EnergyModel model = build_segmentation_game(
          img, fit.params, beta, prior == "potts" ? PriorKind::kPotts : PriorKind::kQuadratic);
      const SolveResult r = solve(model, pointwise_argmin(model), solver, game_config(order, max_sweeps, shared.seed));
      save_pnm(labels_to_image(r.labels), require_out(shared, "label PNM"));
      maybe_write_trace(trace_path, r.trace);
    };
  });

  // register
  std::string fixed_path, moving_path;
  int radius = 2;
  auto* reg = app.add_subcommand("register", "Estimate a discrete displacement field between two images");
  add_shared(reg, shared);
  reg->add_option("--fixed", fixed_path, "Fixed PNM")->required();
  reg->add_option("--moving", moving_path, "Moving PNM")->required();
  reg->add_option("--radius", radius, "Displacement window radius");
  reg->add_option("--beta", beta, "Smoothness weight")->check(CLI::NonNegativeNumber);
  reg->add_option("--solver", solver, "icm | anneal")->check(CLI::IsMember({"icm", "anneal"}));
  reg->add_option("--order", order, "raster | checkerboard")->check(CLI::IsMember({"raster", "checkerboard"}));
  reg->add_option("--max-sweeps", max_sweeps, "Sweep cap");
  reg->add_option("--trace", trace_path, "Write the energy trace CSV here");
  reg->callback([&] {
    action = [&] {
      const Image fixed = to_gray(load_pnm(fixed_path)), moving = to_gray(load_pnm(moving_path));
      const auto set = DisplacementLabelSet::square(radius);
      const SmoothnessField smooth = SmoothnessField::uniform(fixed.width(), fixed.height());
      const EnergyModel model = build_registration_game(fixed, moving, set, beta, smooth);
      const SolveResult r = solve(model, pointwise_argmin(model), solver, game_config(order, max_sweeps, shared.seed));
      const DisplacementField f = displacement_field(r.labels, set);
      std::ostringstream csv;
      csv << "x,y,dx,dy\n";
      for (std::size_t p = 0; p < f.dx.size(); ++p)
        csv << p % fixed.width() << ',' << p / fixed.width() << ',' << f.dx[p] << ',' << f.dy[p] << '\n';
      write_text(shared.out, csv.str());
      maybe_write_trace(trace_path, r.trace);
      auto peak = [&](const std::vector<double>& u) {
        double m = 0.0;
        for (double v : smoothness_residual(smooth, u)) m = std::max(m, std::abs(v));
        return m;
      };
      std::fprintf(stderr, "smoothness residual max |r|: dx %.6g dy %.6g\n", peak(f.dx), peak(f.dy));
    };
  });

  // features
  std::vector<std::string> inputs;
  FeatureOptions fopt;
  auto* feat = app.add_subcommand("features", "Extract block features from PNM images");
  add_shared(feat, shared);
  feat->add_option("--in", inputs, "Input PNMs")->required()->expected(1, -1)->multi_option_policy(
      CLI::MultiOptionPolicy::TakeAll);
  feat->add_option("--grid", fopt.grid, "Blocks per side");
  feat->add_option("--bins", fopt.bins, "Histogram bins per block");
  feat->add_option("--edge-threshold", fopt.edge_threshold, "Gradient magnitude counted as an edge");
  feat->callback([&] {
    action = [&] {
      std::vector<std::vector<double>> rows;
      for (const auto& p : inputs) rows.push_back(extract_features(to_gray(load_pnm(p)), fopt));
      Output out(shared.out);
      write_features_csv(out.stream(), rows, fopt);
    };
  });

  // train
  int size = 20, per_class = 40, noise = 1, augment_pad = 0;
  TrainConfig tc;
  std::vector<double> loss_weights{1.0, 1.0};
  auto* tr = app.add_subcommand("train", "Train the scene classifier on synthetic scenes");
  add_shared(tr, shared);
  tr->add_option("--size", size, "Input size in pixels");
  tr->add_option("--per-class", per_class, "Training images per class");
  tr->add_option("--noise", noise, "Noise level 1..3");
  tr->add_option("--epochs", tc.epochs, "SGD epochs");
  tr->add_option("--learning-rate", tc.learning_rate, "SGD step size");
  tr->add_option("--batch-size", tc.batch_size, "Minibatch size");
  tr->add_option("--margin", tc.margin, "Triplet margin");
  tr->add_option("--per-anchor", tc.per_anchor, "Triplets mined per anchor");
  tr->add_option("--loss-weights", loss_weights, "Weights of the triplet and cross-entropy terms")
      ->expected(2)->delimiter(',')->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  tr->add_option("--augment-pad", augment_pad, "Draw scenes this much larger and train on 5 crops");
  tr->add_option("--trace", trace_path, "Write the per-epoch loss CSV here");
  tr->callback([&] {
    action = [&] {
      const std::string path = require_out(shared, "checkpoint path");
      detail::require(augment_pad >= 0, "train.augment_crop", "augment pad must be >= 0");
      tc.seed = detail::mix_seed({shared.seed, 3});
      tc.augment_crop = augment_pad > 0 ? size : 0;
      const LossWeights w(loss_weights);
      const Dataset d = synthetic_set(size, per_class, noise, detail::mix_seed({shared.seed, 1}), augment_pad);
      const TrainResult r = train(make_default_net(size, detail::mix_seed({shared.seed, 2})), d, tc, w);
      save_checkpoint(r.net, path);
      if (!trace_path.empty()) {
        Output t(trace_path);
        write_loss_trace_csv(t.stream(), r.loss_trace);
      }
      std::cerr << "trained on " << d.size() << " images, final loss " << r.loss_trace.back() << '\n';
    };
  });

  // eval
  std::string model_path;
  auto* ev = app.add_subcommand("eval", "Classify PNM images or a fresh synthetic test set");
  add_shared(ev, shared);
  ev->add_option("--model", model_path, "Checkpoint from `train`")->required();
  ev->add_option("--in", inputs, "PNMs to classify (default: synthetic scenes)")->expected(1, -1)->multi_option_policy(
      CLI::MultiOptionPolicy::TakeAll);
  ev->add_option("--per-class", per_class, "Synthetic test images per class");
  ev->add_option("--noise", noise, "Synthetic noise level 1..3");
  ev->callback([&] {
    action = [&] {
      const NetSpec net = load_checkpoint(model_path);
      std::ostringstream csv;
      if (!inputs.empty()) {
        csv << "image,class,name,action\n";
        for (const auto& p : inputs) {
          const int c = classify(net, equalize(to_gray(load_pnm(p)))).label;
          csv << p << ',' << c << ',' << kSceneClassNames[static_cast<std::size_t>(c)] << ',' << label_to_action(c) << '\n';
        }
      } else {
        const Dataset d = synthetic_set(net.input.w, per_class, noise, detail::mix_seed({shared.seed, 4}), 0);
        const Evaluation e = evaluate(net, d);
        csv << "index,truth,predicted\n";
        for (std::size_t i = 0; i < d.size(); ++i) csv << i << ',' << d.labels[i] << ',' << e.predictions[i] << '\n';
        char buf[64];
        std::snprintf(buf, sizeof buf, "accuracy %.4f\n", e.accuracy);
        std::cerr << buf;
      }
      write_text(shared.out, csv.str());
    };
  });

  // experiment
  auto* ex = app.add_subcommand("experiment", "Run the synthetic accuracy experiment and write the report CSV");
  add_shared(ex, shared);
  ex->callback([&] {
    action = [&] {
      KeyValueConfig kv = shared.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(shared.config);
      RunConfig rc = RunConfig::from_config(kv);
      if (ex->count("--seed")) rc.seed = shared.seed;
      const ExperimentReport report = run_experiment(rc);
      std::ostringstream csv;
      write_report_csv(csv, report);
      write_text(shared.out, csv.str());
      for (const ExperimentRow& r : report.rows) {
        if (r.selected_features >= 0) {
          std::cerr << "size " << r.input_size << " noise " << r.noise_level << " trial " << r.trial
                    << ": selected_features " << r.selected_features << '\n';
        }
      }
      if (report.failure) throw Error(report.failure->kind, report.failure->message);
    };
  });

  // keyframes
  KeyframePolicy policy;
  long long total = 0;
  auto* kf = app.add_subcommand("keyframes", "List keyframe indices of a frame stream");
  add_shared(kf, shared);
  kf->add_option("--fps", policy.fps, "Frames per second");
  kf->add_option("--interval", policy.interval_s, "Seconds between keyframes");
  kf->add_option("--total", total, "Total frames")->required();
  kf->callback([&] {
    action = [&] {
      std::ostringstream out;
      for (long long i : keyframe_indices(policy, total)) out << i << '\n';
      write_text(shared.out, out.str());
    };
  });

  std::vector<std::string> args(argv, argv + argc);
  args = expand_config(app, args);
  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_line("usage", e.what());
    return 2;
  }
  action();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gmrf::InvalidArgument& e) {
    error_line(e.kind(), e.what());
    return 2;
  } catch (const gmrf::FormatError& e) {
    error_line(e.kind(), e.what());
    return 2;
  } catch (const gmrf::ParseError& e) {
    error_line(e.kind(), e.what());
    return 2;
  } catch (const gmrf::Error& e) {
    error_line(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    error_line("internal", e.what());
    return 1;
  }
}
