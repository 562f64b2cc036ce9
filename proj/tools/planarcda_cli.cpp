// planarcda command-line front end: synth | fit | transform | eval | bench.
//
// Exit codes: 0 success, 2 input or validation error, 3 fit ran out of
// iterations (the model file is still written).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "planarcda/planarcda.hpp"

namespace fs = std::filesystem;
using namespace planarcda;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNoConvergence = 3;

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  SynthSpec spec;
  std::string shape = "16,16,8,8";
  int ar_variants = 0;
  int bit_depth = 16;
  std::string out;
  bool force = false;
};

LabeledPairSet build_synthetic(SynthArgs& a) {
  const auto dims = split_list(a.shape);
  if (dims.size() != 4) throw ShapeError("--shape expects m,n,p,q");
  try {
    a.spec.m = std::stoi(dims[0]);
    a.spec.n = std::stoi(dims[1]);
    a.spec.p = std::stoi(dims[2]);
    a.spec.q = std::stoi(dims[3]);
  } catch (const std::exception&) {
    throw ShapeError("--shape expects four integers");
  }
  if (a.ar_variants <= 0) return to_unit_range(gen_synthetic(a.spec));

  // Reference replication: one front rendering per class in X, paired with
  // every pose variant of that class in Y (same shape as X).
  if (a.ar_variants < 1) throw ProtocolError("--ar-variants must be positive");
  SynthSpec ref_spec = a.spec;
  ref_spec.per_class = 1;
  ref_spec.variant = 0;
  ref_spec.y_wavelet_levels = 0;
  const LabeledPairSet refs = gen_synthetic(ref_spec);
  LabeledImages variants;
  for (int v = 1; v <= a.ar_variants; ++v) {
    SynthSpec vs = ref_spec;
    vs.per_class = a.spec.per_class;
    vs.variant = v;
    const LabeledPairSet part = gen_synthetic(vs);
    variants.images.insert(variants.images.end(), part.x.begin(), part.x.end());
    variants.labels.insert(variants.labels.end(), part.labels.begin(), part.labels.end());
  }
  // Both views are X renderings, so they share one intensity map.
  LabeledPairSet paired = replicate_references({refs.x, refs.labels}, variants);
  double lo = paired.x.front().minCoeff();
  double hi = paired.x.front().maxCoeff();
  for (const auto* view : {&paired.x, &paired.y}) {
    for (const Mat& s : *view) {
      lo = std::min(lo, s.minCoeff());
      hi = std::max(hi, s.maxCoeff());
    }
  }
  const double span = hi > lo ? hi - lo : 1.0;
  for (auto* view : {&paired.x, &paired.y}) {
    for (Mat& s : *view) s = ((s.array() - lo) / span).matrix();
  }
  return paired;
}

int cmd_synth(SynthArgs& a) {
  if (a.bit_depth != 8 && a.bit_depth != 16) throw ProtocolError("--bit-depth must be 8 or 16");
  const fs::path root(a.out);
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!a.force) throw IoError(root.string() + " exists and is not empty; pass --force to overwrite");
    fs::remove_all(root / "x");
    fs::remove_all(root / "y");
  }
  const LabeledPairSet data = build_synthetic(a);
  write_image_dir(root, data, a.bit_depth == 8 ? 255 : 65535);
  std::printf("N=%zu X=%ldx%ld Y=%ldx%ld c=%d\n", data.size(), static_cast<long>(data.m()),
              static_cast<long>(data.n()), static_cast<long>(data.p()), static_cast<long>(data.q()), data.classes);
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string method;
  std::string mode;
  std::string data;
  std::string out;
  std::string config;
  std::optional<int> d1, d2, width, max_iter;
  std::optional<double> ridge, sigma, conv_tol;
  std::optional<std::string> view;
};

// Config file first, then flags on top; the merged object is validated as one.
RunConfig resolve_config(const FitArgs& a) {
  nlohmann::json j = nlohmann::json::object();
  if (!a.config.empty()) {
    try {
      j = nlohmann::json::parse(read_text(a.config));
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ProtocolError("config: expected a JSON object");
  }
  if (!a.method.empty()) j["method"] = a.method;
  if (!a.mode.empty()) j["mode"] = a.mode;
  if (a.d1) j["d1"] = *a.d1;
  if (a.d2) j["d2"] = *a.d2;
  if (a.width) j["width"] = *a.width;
  if (a.max_iter) j["max_iter"] = *a.max_iter;
  if (a.ridge) j["ridge"] = *a.ridge;
  if (a.sigma) j["sigma"] = *a.sigma;
  if (a.conv_tol) j["conv_tol"] = *a.conv_tol;
  if (a.view) j["view"] = *a.view;
  if (!j.contains("method")) throw ProtocolError("fit: give --method or a config with \"method\"");
  return parse_run_config(j);
}

int cmd_fit(const FitArgs& a) {
  const RunConfig cfg = resolve_config(a);
  const LabeledPairSet data = load_image_dir(a.data);
  const FittedModel model = fit_method(cfg.spec, data);
  save_model(a.out, model);
  if (const auto* d = std::get_if<CdtrlModel>(&model)) {
    std::printf("range branch: %s, null branch: %s\n", d->range.empty() ? "empty" : "present",
                d->null.empty() ? "empty" : "present");
    if (!d->base.converged) {
      std::fprintf(stderr, "note: 2DCCA stage used all %d iterations (last change above conv_tol)\n",
                   d->base.iterations_run);
    }
  }
  if (!model_converged(model)) {
    std::fprintf(stderr, "warning: fit stopped at max_iter without converging; model written to %s\n",
                 a.out.c_str());
    return kExitNoConvergence;
  }
  return 0;
}

// ---------------------------------------------------------------- transform

int cmd_transform(const std::string& model_path, const std::string& data_dir, const std::string& out) {
  const FittedModel model = load_model(model_path);
  const LabeledPairSet data = load_image_dir(data_dir);
  nlohmann::json j;
  j["method"] = method_key(model_method(model));
  j["features"] = nlohmann::json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    nlohmann::json row = to_json(model_features(model, data.x[i], data.y[i]));
    row["label"] = data.labels[i];
    j["features"].push_back(std::move(row));
  }
  const std::string text = j.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text(out, text);
  }
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string protocol = "loo";
  std::string methods = "cdtrl";
  std::string data, train, test;
  std::string report;
  std::string loo_scope = "variants";
  std::string view = "x";
  std::optional<int> d1, d2;
  bool timing = false;
};

// "cdtrl-range" and "cdtrl-null" select a CDTRL mode.
MethodSpec method_from_token(const std::string& token, const EvalArgs& a) {
  MethodSpec spec;
  if (token.rfind("cdtrl-", 0) == 0) {
    spec.method = Method::cdtrl;
    spec.cdtrl.mode = parse_mode(token.substr(6));
  } else {
    spec.method = parse_method(token);
  }
  if (a.view != "x" && a.view != "y") throw ProtocolError("--view must be x or y");
  spec.view = a.view == "x" ? View::x : View::y;
  if (a.d1) spec.solver.d1 = *a.d1;
  if (a.d2) spec.solver.d2 = *a.d2;
  return spec;
}

int cmd_eval(const EvalArgs& a) {
  if (a.loo_scope != "variants" && a.loo_scope != "all") throw ProtocolError("--loo-scope must be variants or all");
  const LooScope scope = a.loo_scope == "all" ? LooScope::all : LooScope::variants;
  const EvalOptions opts{a.timing, 0};
  std::vector<EvalRow> rows;

  if (a.protocol == "loo") {
    if (a.data.empty()) throw ProtocolError("eval --protocol loo needs --data");
    const LabeledPairSet data = load_image_dir(a.data);
    for (const std::string& token : split_list(a.methods)) {
      const MethodSpec spec = method_from_token(token, a);
      if (single_view(spec.method)) {
        MethodSpec pooled = spec;
        pooled.view = View::x;  // both views of the pool hold the same image
        rows.push_back(loo_cv(single_view_pool(data, scope, spec.view), make_fitter(pooled), display_name(spec), opts));
      } else {
        rows.push_back(loo_cv(data, make_fitter(spec), display_name(spec), opts));
      }
      if (rows.back().skipped > 0) {
        std::fprintf(stderr, "%s: %zu LOO folds skipped (held-out class vanished from training)\n",
                     rows.back().method.c_str(), rows.back().skipped);
      }
    }
  } else if (a.protocol == "split") {
    if (a.train.empty() || a.test.empty()) throw ProtocolError("eval --protocol split needs --train and --test");
    const LabeledPairSet train = load_image_dir(a.train);
    const LabeledPairSet test = load_image_dir(a.test);
    for (const std::string& token : split_list(a.methods)) {
      const MethodSpec spec = method_from_token(token, a);
      rows.push_back(split_eval(train, test, make_fitter(spec), display_name(spec), "split", opts));
    }
  } else {
    throw ProtocolError("--protocol must be loo or split");
  }
  if (rows.empty()) throw ProtocolError("--methods is empty");

  const std::string text = emit_report(rows);
  if (a.report.empty() || a.report == "-") {
    std::cout << text;
  } else {
    write_text(a.report, text);
  }
  return 0;
}

// ---------------------------------------------------------------- bench

int cmd_bench(const std::string& sizes, const std::string& samples, int reps, std::uint64_t seed,
              const std::string& out) {
  BenchOptions opts;
  opts.reps = reps;
  opts.seed = seed;
  opts.sizes.clear();
  opts.samples.clear();
  try {
    for (const auto& s : split_list(sizes)) opts.sizes.push_back(std::stoi(s));
    for (const auto& s : split_list(samples)) opts.samples.push_back(std::stoi(s));
  } catch (const std::exception&) {
    throw ProtocolError("--sizes and --samples expect comma-separated integers");
  }
  if (opts.sizes.empty() || opts.samples.empty()) throw ProtocolError("bench: empty size grid");
  const std::string text = emit_bench(run_bench(opts));
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text(out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paired 2D discriminant representation learning"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "write a seeded synthetic dataset directory");
  s->add_option("--classes", synth.spec.classes, "class count")->capture_default_str();
  s->add_option("--per-class", synth.spec.per_class, "samples per class (per variant with --ar-variants)")
      ->capture_default_str();
  s->add_option("--shape", synth.shape, "m,n,p,q")->capture_default_str();
  s->add_option("--separation", synth.spec.class_separation, "class pattern scale")->capture_default_str();
  s->add_option("--noise", synth.spec.noise_sigma, "noise sigma")->capture_default_str();
  s->add_option("--seed", synth.spec.seed, "generator seed")->capture_default_str();
  s->add_option("--variant", synth.spec.variant, "pose variant, 0 = front")->capture_default_str();
  s->add_option("--y-wavelet", synth.spec.y_wavelet_levels, "Y = Haar LL of X after this many levels");
  s->add_option("--ar-variants", synth.ar_variants, "reference-replication layout with this many pose variants");
  s->add_option("--bit-depth", synth.bit_depth, "8 or 16")->capture_default_str();
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_flag("--force", synth.force, "replace x/ and y/ in an existing directory");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "fit a model on a dataset directory");
  f->add_option("--method", fit.method, "cca|2dcca|l2dcca|cdtrl|pca|2dpca|lda|2dlda");
  f->add_option("--mode", fit.mode, "cdtrl mode: range|null|complete");
  f->add_option("--data", fit.data, "dataset directory")->required();
  f->add_option("--out", fit.out, "model JSON path")->required();
  f->add_option("--config", fit.config, "JSON run configuration");
  f->add_option("--d1", fit.d1);
  f->add_option("--d2", fit.d2);
  f->add_option("--width", fit.width);
  f->add_option("--max-iter", fit.max_iter);
  f->add_option("--ridge", fit.ridge);
  f->add_option("--sigma", fit.sigma);
  f->add_option("--conv-tol", fit.conv_tol);
  f->add_option("--view", fit.view, "x|y for single-view baselines");

  std::string model_path, tdata, tout;
  auto* t = app.add_subcommand("transform", "write the feature matrices of a dataset as JSON");
  t->add_option("--model", model_path)->required();
  t->add_option("--data", tdata)->required();
  t->add_option("--out", tout, "output path, - for stdout");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "run a recognition protocol and write a TSV report");
  e->add_option("--protocol", ev.protocol, "loo|split")->capture_default_str();
  e->add_option("--methods", ev.methods, "comma list; cdtrl-range and cdtrl-null select a mode")
      ->capture_default_str();
  e->add_option("--data", ev.data, "dataset directory (loo)");
  e->add_option("--train", ev.train, "training directory (split)");
  e->add_option("--test", ev.test, "test directory (split)");
  e->add_option("--report", ev.report, "TSV path, - for stdout");
  e->add_option("--loo-scope", ev.loo_scope, "variants|all")->capture_default_str();
  e->add_option("--view", ev.view, "x|y for single-view baselines")->capture_default_str();
  e->add_option("--d1", ev.d1);
  e->add_option("--d2", ev.d2);
  e->add_flag("--timing", ev.timing, "record wall-clock runtime_ms");

  std::string sizes = "32,64", samples = "100", bout;
  int reps = 3;
  std::uint64_t bseed = 1;
  auto* b = app.add_subcommand("bench", "time vectorized CCA against 2DCCA and CDTRL");
  b->add_option("--sizes", sizes, "comma list of m (= n)")->capture_default_str();
  b->add_option("--samples", samples, "comma list of N")->capture_default_str();
  b->add_option("--reps", reps)->capture_default_str();
  b->add_option("--seed", bseed)->capture_default_str();
  b->add_option("--out", bout, "TSV path, - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitInput;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*f) return cmd_fit(fit);
    if (*t) return cmd_transform(model_path, tdata, tout);
    if (*e) return cmd_eval(ev);
    if (*b) return cmd_bench(sizes, samples, reps, bseed, bout);
  } catch (const Error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    if (*f) std::fprintf(stderr, "%s", f->help().c_str());
    return kExitInput;
  } catch (const fs::filesystem_error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitInput;
  }
  return kExitInput;
}
