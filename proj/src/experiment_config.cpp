#include "kagg/experiment_config.hpp"

#include "kagg/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace kagg {

using nlohmann::json;

std::string source_label(const DataSource& source) {
  if (const auto* s = std::get_if<SyntheticSource>(&source)) {
    return "model" + std::to_string(s->model.id) + "-" + std::string(regime_name(s->model.regime));
  }
  return std::get<CsvSource>(source).path.stem().string();
}

std::string_view metric_name(Metric metric) {
  return metric == Metric::Mse ? "mse" : "rmse";
}

bool scheme_is_differentiable(const WeightScheme& family) {
  const auto* kv = std::get_if<KernelVector>(&family);
  return kv != nullptr && supports_multiplicative(kv->kernel.kind) &&
         kv->bw.param == Parametrization::Multiplicative;
}

std::string default_scheme_label(const WeightScheme& family) {
  if (const auto* kv = std::get_if<KernelVector>(&family)) {
    return "kernel-" + std::string(kernel_name(kv->kernel.kind));
  }
  if (const auto* kp = std::get_if<KernelPerCoord>(&family)) {
    return "kernel-percoord-" + std::string(kernel_name(kp->kernel.kind));
  }
  return scheme_name(family);
}

ResolvedOptimizer ExperimentConfig::optimizer_for(const SchemeConfig& scheme) const {
  ResolvedOptimizer out;
  out.config = scheme.optimizer.value_or(optimizer);
  out.kind = out.config.kind;
  if (out.kind == OptimizerKind::Auto) {
    out.kind = scheme_is_differentiable(scheme.family) ? OptimizerKind::Gd : OptimizerKind::Grid;
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (replications < 1) throw InvalidConfig("replications must be at least 1");
  if (learners.empty()) throw InvalidConfig("at least one learner is required");
  if (schemes.empty()) throw InvalidConfig("at least one scheme is required");
  if (threads < 0) throw InvalidConfig("threads must be non-negative");
  if (!(split.test_fraction > 0.0 && split.test_fraction < 1.0)) {
    throw InvalidConfig("split.test_fraction must lie in (0, 1)");
  }
  if (!(split.dk_fraction_of_train > 0.0 && split.dk_fraction_of_train < 1.0)) {
    throw InvalidConfig("split.dk_fraction must lie in (0, 1)");
  }
  if (const auto* s = std::get_if<SyntheticSource>(&source)) {
    if (s->model.id < 1 || s->model.id > 10) throw InvalidConfig("synthetic model id must be 1..10");
    if (s->n && *s->n < 10) throw InvalidConfig("synthetic n must be at least 10");
  } else {
    const auto& c = std::get<CsvSource>(source);
    if (c.path.empty()) throw InvalidConfig("csv source needs a path");
    if (c.target.empty()) throw InvalidConfig("csv source needs a target column");
  }

  std::set<std::string> names;
  for (const auto& l : learners) {
    if (const auto* k = std::get_if<KnnParams>(&l); k && k->k == 0) throw InvalidConfig("knn k must be positive");
    if (const auto* f = std::get_if<ForestParams>(&l); f && f->n_trees == 0) {
      throw InvalidConfig("rf n_trees must be positive");
    }
    if (!names.insert(learner_name(l)).second) {
      throw InvalidConfig("duplicate learner '" + learner_name(l) + "'");
    }
  }
  for (const auto& s : schemes) {
    if (s.label.empty()) throw InvalidConfig("scheme label is empty");
    if (!names.insert(s.label).second) throw InvalidConfig("duplicate column name '" + s.label + "'");
    try {
      validate_scheme(with_bandwidth(s.family, 1.0), learners.size());
    } catch (const InvalidArgument& e) {
      throw InvalidConfig("scheme '" + s.label + "': " + e.what());
    }
    const ResolvedOptimizer opt = optimizer_for(s);
    if (opt.config.folds < 2) throw InvalidConfig("scheme '" + s.label + "': folds must be at least 2");
    try {
      if (opt.kind == OptimizerKind::Gd) {
        if (!scheme_is_differentiable(s.family)) {
          throw InvalidConfig("scheme '" + s.label +
                              "': gradient descent needs a gaussian or exp4 kernel with multiplicative bandwidth");
        }
        opt.config.gd.validate();
      } else {
        opt.config.grid.validate();
      }
    } catch (const InvalidArgument& e) {
      throw InvalidConfig("scheme '" + s.label + "': " + e.what());
    }
  }
}

ExperimentConfig default_experiment(const SyntheticModelId& model) {
  ExperimentConfig cfg;
  cfg.source = SyntheticSource{model, std::nullopt};
  cfg.learners = {RidgeParams{}, LassoParams{}, KnnParams{}, TreeParams{}, ForestParams{}};
  cfg.schemes.push_back({"cobra", CobraFull{}, false, std::nullopt});
  const WeightScheme gauss = KernelVector{KernelSpec{KernelKind::Gaussian}, Bandwidth{1.0, Parametrization::Multiplicative}};
  cfg.schemes.push_back({default_scheme_label(gauss), gauss, false, std::nullopt});
  return cfg;
}

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw InvalidConfig(where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) bad(where, "unknown key '" + item.key() + "'");
  }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where, std::string("'") + key + "' is missing or has the wrong type");
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, const std::string& where, T& out) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

std::size_t read_count(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) bad(where, std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

void read_count_opt(const json& obj, const char* key, const std::string& where, std::size_t& out) {
  if (obj.contains(key)) out = read_count(obj, key, where);
}

DataSource parse_source(const json& j) {
  const std::string where = "source";
  if (!j.is_object()) bad(where, "expected an object");
  const std::string type = j.contains("type") ? get<std::string>(j, "type", where) : "synthetic";
  if (type == "synthetic") {
    check_keys(j, where, {"type", "model", "regime", "n"});
    SyntheticSource s;
    s.model.id = get<int>(j, "model", where);
    if (j.contains("regime")) {
      try {
        s.model.regime = parse_regime(get<std::string>(j, "regime", where));
      } catch (const std::exception& e) {
        bad(where, e.what());
      }
    }
    if (j.contains("n")) s.n = read_count(j, "n", where);
    return s;
  }
  if (type == "csv") {
    check_keys(j, where, {"type", "path", "target", "features", "delimiter"});
    CsvSource c;
    c.path = get<std::string>(j, "path", where);
    c.target = get<std::string>(j, "target", where);
    read_opt(j, "features", where, c.features);
    if (j.contains("delimiter")) {
      const auto d = get<std::string>(j, "delimiter", where);
      if (d.size() != 1) bad(where, "delimiter must be a single character");
      c.delimiter = d[0];
    }
    return c;
  }
  bad(where, "unknown source type '" + type + "'");
}

LearnerSpec parse_learner(const json& j, std::size_t index) {
  const std::string where = "learners[" + std::to_string(index) + "]";
  const json obj = j.is_string() ? json{{"type", j}} : j;
  if (!obj.is_object()) bad(where, "expected a name or an object");
  const std::string type = get<std::string>(obj, "type", where);
  if (type == "ridge") {
    check_keys(obj, where, {"type", "lambda", "cv_folds"});
    RidgeParams p;
    if (obj.contains("lambda")) p.lambda = get<double>(obj, "lambda", where);
    read_count_opt(obj, "cv_folds", where, p.cv_folds);
    return p;
  }
  if (type == "lasso") {
    check_keys(obj, where, {"type", "lambda", "tol", "max_iter", "cv_folds"});
    LassoParams p;
    if (obj.contains("lambda")) p.lambda = get<double>(obj, "lambda", where);
    read_opt(obj, "tol", where, p.tol);
    read_count_opt(obj, "max_iter", where, p.max_iter);
    read_count_opt(obj, "cv_folds", where, p.cv_folds);
    return p;
  }
  if (type == "knn") {
    check_keys(obj, where, {"type", "k", "standardize"});
    KnnParams p;
    read_count_opt(obj, "k", where, p.k);
    read_opt(obj, "standardize", where, p.standardize);
    return p;
  }
  if (type == "tree") {
    check_keys(obj, where, {"type", "min_leaf", "max_depth"});
    TreeParams p;
    read_count_opt(obj, "min_leaf", where, p.min_leaf);
    read_count_opt(obj, "max_depth", where, p.max_depth);
    return p;
  }
  if (type == "rf") {
    check_keys(obj, where, {"type", "n_trees", "mtry", "min_leaf", "max_depth"});
    ForestParams p;
    read_count_opt(obj, "n_trees", where, p.n_trees);
    if (obj.contains("mtry")) p.mtry = read_count(obj, "mtry", where);
    read_count_opt(obj, "min_leaf", where, p.min_leaf);
    read_count_opt(obj, "max_depth", where, p.max_depth);
    return p;
  }
  bad(where, "unknown learner '" + type + "'");
}

OptimizerConfig parse_optimizer(const json& j, const std::string& where, OptimizerConfig out) {
  check_keys(j, where, {"optimizer", "h0", "lr", "delta", "max_iter", "lr_growth", "max_halvings",
                        "gradient", "grid", "folds"});
  if (j.contains("optimizer")) {
    const auto kind = get<std::string>(j, "optimizer", where);
    if (kind == "auto") out.kind = OptimizerKind::Auto;
    else if (kind == "gd") out.kind = OptimizerKind::Gd;
    else if (kind == "grid") out.kind = OptimizerKind::Grid;
    else bad(where, "optimizer must be auto, gd or grid");
  }
  read_opt(j, "h0", where, out.gd.h0);
  read_opt(j, "lr", where, out.gd.learning_rate);
  read_opt(j, "delta", where, out.gd.threshold);
  read_count_opt(j, "max_iter", where, out.gd.max_iter);
  read_opt(j, "lr_growth", where, out.gd.lr_growth);
  read_count_opt(j, "max_halvings", where, out.gd.max_halvings);
  if (j.contains("gradient")) {
    const auto g = get<std::string>(j, "gradient", where);
    if (g == "analytic") out.gd.grad_mode = AnalyticGradient{};
    else if (g == "numerical") out.gd.grad_mode = NumericalGradient{};
    else bad(where, "gradient must be analytic or numerical");
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    const std::string gw = where + ".grid";
    check_keys(g, gw, {"min", "max", "points", "spacing"});
    read_opt(g, "min", gw, out.grid.h_min);
    read_opt(g, "max", gw, out.grid.h_max);
    read_count_opt(g, "points", gw, out.grid.points);
    if (g.contains("spacing")) {
      const auto s = get<std::string>(g, "spacing", gw);
      if (s == "linear") out.grid.spacing = Spacing::Linear;
      else if (s == "log") out.grid.spacing = Spacing::Logarithmic;
      else bad(gw, "spacing must be linear or log");
    }
  }
  read_count_opt(j, "folds", where, out.folds);
  return out;
}

KernelSpec parse_kernel_spec(const json& j, const std::string& where) {
  KernelSpec k;
  try {
    k.kind = parse_kernel(get<std::string>(j, "kernel", where));
  } catch (const InvalidConfig& e) {
    bad(where, e.what());
  }
  read_opt(j, "sigma", where, k.sigma);
  read_opt(j, "rho1", where, k.rho1);
  return k;
}

SchemeConfig parse_scheme(const json& j, std::size_t index, const OptimizerConfig& base) {
  const std::string where = "schemes[" + std::to_string(index) + "]";
  const json obj = j.is_string() ? json{{"type", j}} : j;
  if (!obj.is_object()) bad(where, "expected a name or an object");
  check_keys(obj, where, {"type", "name", "kernel", "sigma", "rho1", "parametrization", "alpha", "optimizer"});
  const std::string type = get<std::string>(obj, "type", where);
  SchemeConfig s;
  if (type == "cobra") {
    s.family = CobraFull{};
  } else if (type == "cobra-relaxed") {
    CobraRelaxed c;
    if (obj.contains("alpha")) {
      c.alpha = get<double>(obj, "alpha", where);
    } else {
      s.tune_alpha = true;
    }
    s.family = c;
  } else if (type == "kernel" || type == "kernel-percoord") {
    const KernelSpec k = parse_kernel_spec(obj, where);
    Bandwidth bw;
    bw.param = (type == "kernel" && supports_multiplicative(k.kind)) ? Parametrization::Multiplicative
                                                                     : Parametrization::Divisive;
    if (obj.contains("parametrization")) {
      const auto p = get<std::string>(obj, "parametrization", where);
      if (p == "divisive") bw.param = Parametrization::Divisive;
      else if (p == "multiplicative") bw.param = Parametrization::Multiplicative;
      else bad(where, "parametrization must be divisive or multiplicative");
    }
    if (type == "kernel") s.family = KernelVector{k, bw};
    else s.family = KernelPerCoord{k, bw};
  } else {
    bad(where, "unknown scheme '" + type + "'");
  }
  const bool kernel_keys = obj.contains("kernel") || obj.contains("sigma") || obj.contains("rho1") ||
                           obj.contains("parametrization");
  if (kernel_keys && (type == "cobra" || type == "cobra-relaxed")) bad(where, "cobra schemes take no kernel");
  if (obj.contains("alpha") && type != "cobra-relaxed") bad(where, "'alpha' only applies to cobra-relaxed");
  s.label = obj.contains("name") ? get<std::string>(obj, "name", where) : default_scheme_label(s.family);
  if (obj.contains("optimizer")) s.optimizer = parse_optimizer(obj.at("optimizer"), where + ".optimizer", base);
  return s;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(std::string("malformed JSON: ") + e.what());
  }
  const std::string where = "config";
  check_keys(root, where, {"source", "learners", "schemes", "optimizer", "split", "replications", "seed",
                           "metric", "strict_zero_fallback", "threads", "include_timings"});

  ExperimentConfig cfg;
  if (!root.contains("source")) bad(where, "'source' is required");
  cfg.source = parse_source(root.at("source"));

  if (root.contains("optimizer")) cfg.optimizer = parse_optimizer(root.at("optimizer"), "optimizer", cfg.optimizer);

  if (!root.contains("learners") || !root.at("learners").is_array()) bad(where, "'learners' must be an array");
  for (std::size_t i = 0; i < root.at("learners").size(); ++i) {
    cfg.learners.push_back(parse_learner(root.at("learners")[i], i));
  }
  if (!root.contains("schemes") || !root.at("schemes").is_array()) bad(where, "'schemes' must be an array");
  for (std::size_t i = 0; i < root.at("schemes").size(); ++i) {
    cfg.schemes.push_back(parse_scheme(root.at("schemes")[i], i, cfg.optimizer));
  }

  if (root.contains("split")) {
    const json& s = root.at("split");
    check_keys(s, "split", {"test_fraction", "dk_fraction"});
    read_opt(s, "test_fraction", "split", cfg.split.test_fraction);
    read_opt(s, "dk_fraction", "split", cfg.split.dk_fraction_of_train);
  }
  read_count_opt(root, "replications", where, cfg.replications);
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_unsigned()) {
      bad(where, "'seed' must be a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (root.contains("metric")) {
    const auto m = get<std::string>(root, "metric", where);
    if (m == "mse") cfg.metric = Metric::Mse;
    else if (m == "rmse") cfg.metric = Metric::Rmse;
    else bad(where, "metric must be mse or rmse");
  }
  if (root.contains("strict_zero_fallback")) {
    cfg.zero_mass = get<bool>(root, "strict_zero_fallback", where) ? ZeroMassPolicy::Zero
                                                                   : ZeroMassPolicy::ResponseMean;
  }
  read_opt(root, "threads", where, cfg.threads);
  read_opt(root, "include_timings", where, cfg.include_timings);

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str());
}

}  // namespace kagg
