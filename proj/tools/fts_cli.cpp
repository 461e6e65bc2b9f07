#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fts/benchgen.hpp"
#include "fts/clothmodel.hpp"
#include "fts/error.hpp"
#include "fts/parallel.hpp"
#include "fts/serialize.hpp"

namespace fs = std::filesystem;
using namespace fts;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

struct Global {
  int threads = 0;
};

int thread_count(const Global& g) {
  if (g.threads > 0) return g.threads;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// --seed wins, then FTS_SEED, then 1.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("FTS_SEED")) {
    try {
      size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(Errc::InvalidArgument, std::string("FTS_SEED is not an unsigned integer: ") + env);
  }
  return 1;
}

RunConfig run_config(const std::optional<fs::path>& path) {
  return path ? load_run_config(*path) : RunConfig{};
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::optional<std::uint64_t> seed;
  fs::path out;
  double noise = 0.0;
  int subjects = 9;
  int views = 9;
};

int cmd_gen(const GenArgs& a) {
  if (!(a.noise >= 0.0)) throw Error(Errc::InvalidArgument, "--noise must be non-negative");
  BenchGenConfig cfg;
  cfg.seed = resolve_seed(a.seed);
  cfg.n_subjects = a.subjects;
  cfg.n_views = a.views;
  std::vector<BenchSubject> subjects = make_benchmark(cfg);
  if (a.noise > 0.0)
    for (auto& s : subjects)
      s.views = add_noise(std::move(s.views), a.noise, cfg.seed * 1000003ull + static_cast<std::uint64_t>(s.subject_id));
  write_benchmark(a.out, subjects, cfg, a.noise);
  std::cout << "wrote " << subjects.size() << " subjects x " << cfg.n_views << " views to " << a.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::vector<fs::path> scenes;
  bool multi = false;
  std::optional<int> k;
  bool oracle_depth = false;
  std::optional<fs::path> config;
  std::optional<fs::path> out;
};

int cmd_fit(const FitArgs& a, const Global& g) {
  const RunConfig rc = run_config(a.config);
  const int n = static_cast<int>(a.scenes.size());
  const int k = a.k.value_or(std::min(5, n));
  if (a.multi && (k < 1 || k > n))
    throw Error(Errc::InvalidArgument, "--k must lie in [1, " + std::to_string(n) + "] for " + std::to_string(n) +
                                           " scenes");

  std::vector<std::optional<Scene>> scenes(n);
  std::vector<std::optional<FitResult>> results(n);
  std::vector<std::string> errors(n);
  parallel_for(static_cast<size_t>(n), thread_count(g), [&](size_t i) {
    try {
      scenes[i] = load_scene(a.scenes[i]);
      if (a.oracle_depth) {
        if (!scenes[i]->camera) throw Error(Errc::InvalidArgument, "--oracle-depth needs a camera in the scene");
        results[i] = fit_single_fixed_camera(scenes[i]->obs, scenes[i]->camera->translation, rc.fit);
      } else {
        results[i] = fit_single(scenes[i]->obs, rc.fit);
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  json singles = json::array();
  int failed = 0;
  std::vector<int> ok;
  for (int i = 0; i < n; ++i) {
    json entry = {{"scene", a.scenes[i].string()}};
    if (results[i]) {
      entry["result"] = to_json(*results[i]);
      ok.push_back(i);
    } else {
      entry["error"] = errors[i];
      ++failed;
    }
    singles.push_back(entry);
  }

  json out = {{"schema", kSchemaVersion},
              {"config", {{"fit", to_json(rc.fit)}, {"multi", a.multi}, {"k", k}, {"oracle_depth", a.oracle_depth}}},
              {"singles", singles}};
  bool multi_failed = false;
  if (a.multi) {
    try {
      if (static_cast<int>(ok.size()) < k)
        throw Error(Errc::NoInliers, std::to_string(ok.size()) + " successful views, fewer than k = " + std::to_string(k));
      std::vector<Observation> obs;
      std::vector<FitResult> res;
      std::vector<Vec3> truth;
      for (int i : ok) {
        obs.push_back(scenes[i]->obs);
        res.push_back(*results[i]);
        if (a.oracle_depth) truth.push_back(scenes[i]->camera->translation);
      }
      MultiFitResult m = a.oracle_depth ? fit_multi_oracle_depth(obs, truth, rc.fit, k, &res)
                                        : fit_multi(obs, res, rc.fit, k);
      for (int& idx : m.kept) idx = ok[static_cast<size_t>(idx)];
      out["multi"] = to_json(m);
    } catch (const std::exception& e) {
      out["multi"] = {{"error", e.what()}};
      multi_failed = true;
    }
  }

  const std::string text = out.dump(2) + "\n";
  if (a.out) write_text(*a.out, text);
  else std::cout << text;
  for (int i = 0; i < n; ++i)
    if (!results[i]) std::cerr << a.scenes[i].string() << ": " << errors[i] << "\n";
  if (failed == n) return kExitError;
  return failed > 0 || multi_failed ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  fs::path dir;
  fs::path out;
  std::optional<fs::path> config;
  std::vector<std::string> methods;
  std::vector<int> ks{1, 2, 3, 4, 5, 6, 7};
};

Method parse_method(const std::string& s) {
  if (s == "J") return Method::JointsOnly;
  if (s == "J+S") return Method::JointsSilhouette;
  if (s == "J+S+DS") return Method::DepthSearch;
  if (s == "D") return Method::OracleDepth;
  throw Error(Errc::InvalidArgument, "unknown method '" + s + "' (expected J, J+S, J+S+DS or D)");
}

int cmd_bench(const BenchArgs& a, const Global& g) {
  const RunConfig rc = run_config(a.config);
  const std::vector<BenchSubject> subjects = load_benchmark(a.dir);
  AblationConfig ac;
  ac.fit = rc.fit;
  ac.ks = a.ks;
  ac.threads = thread_count(g);
  if (!a.methods.empty()) {
    ac.methods.clear();
    for (const auto& m : a.methods) ac.methods.push_back(parse_method(m));
  }
  const BenchReport report = run_ablation(subjects, ac);
  const auto checks = ordering_checks(report);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw Error(Errc::Io, "cannot create " + a.out.string() + ": " + ec.message());
  write_text(a.out / "report.json", report_json(report, ac.fit, checks).dump(2) + "\n");
  write_text(a.out / "report.csv", report_csv(report));
  bool all = true;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    all = all && c.pass;
  }
  return all ? kExitOk : kExitError;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  fs::path users;
  std::vector<int> models{1, 2, 3};
  double holdout = 0.3;
  std::optional<std::uint64_t> seed;
  fs::path out;
  std::optional<fs::path> shapes;
  std::optional<fs::path> config;
  bool threshold_labels = false;
};

std::string curves_csv(const ShapeConditionalModel& model, const CategoryVocabulary& vocab) {
  std::ostringstream os;
  os.precision(17);
  os << "beta2";
  for (const auto& name : vocab.names()) os << ',' << name;
  os << '\n';
  for (double b : posterior_grid()) {
    os << b;
    for (int c = 0; c < vocab.size(); ++c) os << ',' << posterior(model, c, b);
    os << '\n';
  }
  return os.str();
}

int cmd_stats(const StatsArgs& a) {
  const RunConfig rc = run_config(a.config);
  const CategoryVocabulary vocab = rc.cloth.vocab();
  std::vector<UserRecord> users = load_users_csv(a.users, vocab);
  if (a.shapes) fill_shapes(users, read_json(*a.shapes));
  if (!(a.holdout > 0.0 && a.holdout < 1.0))
    throw Error(Errc::InvalidArgument, "--holdout must lie strictly between 0 and 1");
  for (int m : a.models)
    if (m < 1 || m > 3) throw Error(Errc::InvalidArgument, "--model must be 1, 2 or 3");

  // Model 2 needs a group per user: unlabelled users take the thresholded beta2.
  for (auto& u : users)
    if (u.beta2 && (a.threshold_labels || u.group == Group::Unlabeled))
      u.group = classify_bodytype(*u.beta2, rc.cloth.threshold) == BodyType::Plus ? Group::Plus : Group::Average;

  const std::uint64_t seed = resolve_seed(a.seed);
  const Split split = holdout_split(users, a.holdout, seed);

  json nlls = json::object();
  std::optional<ShapeConditionalModel> shape_model;
  for (int m : a.models) {
    Predictor p;
    MarginalModel mm;
    GroupModel gm;
    if (m == 1) {
      mm = fit_marginal(split.train, vocab);
      p.kind = Predictor::Kind::Marginal;
      p.marginal = &mm;
    } else if (m == 2) {
      gm = fit_group_conditional(split.train, vocab);
      p.kind = Predictor::Kind::Group;
      p.group = &gm;
    } else {
      shape_model = fit_shape_conditional(split.train, vocab, rc.cloth.bandwidth);
      p.kind = Predictor::Kind::Shape;
      p.shape = &*shape_model;
    }
    const double v = nll(p, split.holdout, vocab.size());
    nlls["model_" + std::to_string(m)] = v;
    std::cout << "model " << m << " NLL " << v << "\n";
  }

  json out = {{"schema", kSchemaVersion},
              {"config",
               {{"clothmodel", to_json(rc.cloth)},
                {"models", a.models},
                {"holdout", a.holdout},
                {"seed", seed},
                {"threshold_labels", a.threshold_labels}}},
              {"n_train", split.train.size()},
              {"n_holdout", split.holdout.size()},
              {"nll", nlls}};
  if (shape_model) {
    json bw = json::object();
    for (int c = 0; c < vocab.size(); ++c) {
      const auto& cm = shape_model->categories[static_cast<size_t>(c)];
      bw[vocab.name(c)] = {{"prior", cm.prior},
                           {"fallback", cm.fallback},
                           {"bandwidth_wearers", cm.wearers.bandwidth},
                           {"bandwidth_non_wearers", cm.non_wearers.bandwidth}};
    }
    out["shape_model"] = bw;
  }
  bool labelled = false;
  for (const auto& u : split.train) labelled = labelled || (u.beta2 && u.group != Group::Unlabeled);
  if (labelled) {
    try {
      const ThresholdFit tf = select_threshold(split.train);
      out["threshold"] = {{"value", tf.threshold},
                          {"train_accuracy", tf.accuracy},
                          {"holdout_accuracy", threshold_accuracy(split.holdout, tf.threshold)}};
    } catch (const Error& e) {
      if (e.code() != Errc::MissingGroup) throw;
    }
  }

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw Error(Errc::Io, "cannot create " + a.out.string() + ": " + ec.message());
  write_text(a.out / "stats.json", out.dump(2) + "\n");
  if (shape_model) write_text(a.out / "posterior_curves.csv", curves_csv(*shape_model, vocab));
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GenUsersArgs {
  std::optional<std::uint64_t> seed;
  fs::path out;
  int users = 180;
  std::optional<fs::path> config;
};

int cmd_gen_users(const GenUsersArgs& a) {
  const RunConfig rc = run_config(a.config);
  PopulationConfig pc;
  pc.seed = resolve_seed(a.seed);
  pc.n_users = a.users;
  const CategoryVocabulary vocab = rc.cloth.vocab();
  write_text(a.out, users_csv(make_population(pc, vocab), vocab));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape-from-photos toolkit: benchmark generation, body fitting and clothing statistics"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--threads", g.threads, "worker threads (default: hardware concurrency)")->check(CLI::NonNegativeNumber);

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "write a synthetic multi-view benchmark");
  c_gen->add_option("--seed", gen.seed, "benchmark seed (falls back to FTS_SEED, then 1)");
  c_gen->add_option("--out", gen.out, "output directory")->required();
  c_gen->add_option("--noise", gen.noise, "joint and mask corruption level (0 = clean)");
  c_gen->add_option("--subjects", gen.subjects, "number of subjects")->check(CLI::Range(1, 9));
  c_gen->add_option("--views", gen.views, "views per subject")->check(CLI::PositiveNumber);

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "fit the body model to scene files");
  c_fit->add_option("scenes", fit.scenes, "scene.json files")->required()->check(CLI::ExistingFile);
  c_fit->add_flag("--multi", fit.multi, "also fit one shared shape over the inlier views");
  c_fit->add_option("--k", fit.k, "inlier views kept for --multi (default min(5, scenes))");
  c_fit->add_flag("--oracle-depth", fit.oracle_depth, "hold each camera translation at the scene's ground truth");
  c_fit->add_option("--config", fit.config, "JSON overrides")->check(CLI::ExistingFile);
  c_fit->add_option("--out", fit.out, "results JSON (default: stdout)");

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "run the ablation on a benchmark directory");
  c_bench->add_option("bench_dir", bench.dir, "directory written by gen")->required()->check(CLI::ExistingDirectory);
  c_bench->add_option("--out", bench.out, "report directory")->required();
  c_bench->add_option("--config", bench.config, "JSON overrides")->check(CLI::ExistingFile);
  c_bench->add_option("--methods", bench.methods, "subset of J, J+S, J+S+DS, D");
  c_bench->add_option("--ks", bench.ks, "multi-photo view counts")->check(CLI::PositiveNumber);

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "fit the clothing models and report held-out NLL");
  c_stats->add_option("users", stats.users, "users CSV")->required()->check(CLI::ExistingFile);
  c_stats->add_option("--model", stats.models, "models to evaluate (1 marginal, 2 group, 3 shape)");
  c_stats->add_option("--holdout", stats.holdout, "held-out user fraction");
  c_stats->add_option("--seed", stats.seed, "split seed (falls back to FTS_SEED, then 1)");
  c_stats->add_option("--out", stats.out, "output directory")->required();
  c_stats->add_option("--shapes", stats.shapes, "JSON mapping user_id to beta2 or a fit result")->check(CLI::ExistingFile);
  c_stats->add_option("--config", stats.config, "JSON overrides")->check(CLI::ExistingFile);
  c_stats->add_flag("--threshold-labels", stats.threshold_labels, "label every user by thresholded beta2");

  GenUsersArgs gen_users;
  auto* c_users = app.add_subcommand("gen-users", "write a synthetic users CSV");
  c_users->add_option("--seed", gen_users.seed, "population seed (falls back to FTS_SEED, then 1)");
  c_users->add_option("--out", gen_users.out, "CSV path")->required();
  c_users->add_option("--users", gen_users.users, "number of users")->check(CLI::PositiveNumber);
  c_users->add_option("--config", gen_users.config, "JSON overrides")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*c_gen) return cmd_gen(gen);
    if (*c_fit) return cmd_fit(fit, g);
    if (*c_bench) return cmd_bench(bench, g);
    if (*c_stats) return cmd_stats(stats);
    if (*c_users) return cmd_gen_users(gen_users);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
