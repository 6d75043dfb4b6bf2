// mahnmf command-line tool. Talks to the library exclusively through the C API.
//
// Settings are resolved as: built-in defaults < --config JSON < flags.
// A config key is the long flag name with dashes replaced by underscores
// ("max_outer", "noise_kind"); a nested object {"noise": {"kind": ...}} is
// flattened to "noise_kind". Unknown keys are rejected.
//
// Exit status: 0 success, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mahnmf/mahnmf.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MatrixDeleter {
  void operator()(mahnmf_matrix* m) const { mahnmf_matrix_free(m); }
};
struct ConfigDeleter {
  void operator()(mahnmf_config* c) const { mahnmf_config_free(c); }
};
struct ResultDeleter {
  void operator()(mahnmf_result* r) const { mahnmf_result_free(r); }
};
using MatrixPtr = std::unique_ptr<mahnmf_matrix, MatrixDeleter>;
using ConfigPtr = std::unique_ptr<mahnmf_config, ConfigDeleter>;
using ResultPtr = std::unique_ptr<mahnmf_result, ResultDeleter>;

void check(mahnmf_status st, const std::string& what) {
  if (st == MAHNMF_OK) return;
  std::string msg = what + ": " + mahnmf_last_error();
  if (st == MAHNMF_ERR_CONFIG) throw UsageError(msg);
  throw RuntimeError(msg);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- settings ---------------------------------------------------------------

struct Settings {
  std::string config;
  std::string input;
  std::string out = ".";
  std::size_t rank = 1;
  std::string solver = "ogm";
  std::string variant = "plain";
  double lambda0 = 0.1;
  double tol = 0.1;
  int max_outer = 100;
  int max_inner = 500;
  double inner_tol = 0.0;  // > 0 selects a fixed inner tolerance
  double inner_tol_scale = 1e-3;
  bool monotone_y = false;
  std::uint64_t seed = 0;
  bool no_timing = false;

  // variants
  double beta = 1.0;
  std::string laplacian;
  std::size_t knn = 5;
  double knn_width = 0.0;
  double alpha = 0.1;
  std::string group_target = "h";
  std::string group_norm = "l2";
  std::string group_mode = "constrained";
  std::string groups;  // "0:5,5:10"
  std::size_t group_size = 0;
  double group_value = 0.0;
  double radius_fraction = 0.01;

  // decompose
  std::string truth;
  bool eucnmf = false;
  int eucnmf_max_iter = 5000;
  double eucnmf_tol = 1e-9;

  // bench
  std::vector<std::string> solvers{"rri", "ogm"};
  std::vector<std::string> sizes{"100x50"};
  int repeats = 10;

  // synth
  std::size_t m = 50;
  std::size_t n = 40;
  double density = 0.1;
  double spike_scale = 1.0;
  std::string noise_kind = "none";
  double noise_magnitude = 0.0;
  double noise_density = 1.0;
  std::uint64_t noise_seed = 1;
  bool noise_clamp = true;
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
  std::string format = "csv";

  // sym
  std::string image;
  double delta_f = 0.3;
  double delta_l = 0.7;
  double cutoff = 0.0;
};

// Binds one setting to a flag and to a config key.
class Binder {
 public:
  Binder(CLI::App* app, Settings& s, std::set<std::string>& all_keys)
      : app_(app), s_(s), all_keys_(all_keys) {}

  template <class T>
  Binder& add(const std::string& flag, T Settings::*field, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + flag, s_.*field, help)->capture_default_str();
    std::string key = flag;
    std::replace(key.begin(), key.end(), '-', '_');
    all_keys_.insert(key);
    T* target = &(s_.*field);
    fields_[key] = Field{opt, [target, key](const json& j) {
                           try {
                             *target = j.get<T>();
                           } catch (const json::exception&) {
                             throw UsageError("config key '" + key + "' has the wrong type");
                           }
                         }};
    return *this;
  }

  Binder& flag(const std::string& flag, bool Settings::*field, const std::string& help) {
    CLI::Option* opt = app_->add_flag("--" + flag, s_.*field, help);
    std::string key = flag;
    std::replace(key.begin(), key.end(), '-', '_');
    all_keys_.insert(key);
    bool* target = &(s_.*field);
    fields_[key] = Field{opt, [target, key](const json& j) {
                           if (!j.is_boolean()) {
                             throw UsageError("config key '" + key + "' must be a boolean");
                           }
                           *target = j.get<bool>();
                         }};
    return *this;
  }

  // Applies the config file to every setting not given on the command line.
  // Keys belonging to other commands are ignored so one file can drive several.
  void apply_config(const std::string& path) const {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot open config file " + path);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
    std::map<std::string, json> flat;
    for (const auto& [key, value] : doc.items()) {
      if (value.is_object()) {
        for (const auto& [sub, v] : value.items()) flat[key + "_" + sub] = v;
      } else {
        flat[key] = value;
      }
    }
    for (const auto& [key, value] : flat) {
      auto it = fields_.find(key);
      if (it == fields_.end()) {
        if (all_keys_.count(key) == 0) throw UsageError("unknown config key '" + key + "'");
        continue;
      }
      if (it->second.opt->count() == 0) it->second.set(value);
    }
  }

 private:
  struct Field {
    CLI::Option* opt;
    std::function<void(const json&)> set;
  };
  CLI::App* app_;
  Settings& s_;
  std::set<std::string>& all_keys_;
  std::map<std::string, Field> fields_;
};

void add_common(Binder& b) {
  b.add("input", &Settings::input, "input matrix (.csv or .mtx)")
      .add("out", &Settings::out, "output directory")
      .add("rank", &Settings::rank, "factorisation rank")
      .add("seed", &Settings::seed, "random seed")
      .flag("no-timing", &Settings::no_timing, "report zero seconds for reproducible output");
}

void add_solver(Binder& b) {
  b.add("solver", &Settings::solver, "rri | ogm")
      .add("variant", &Settings::variant, "plain | box | manifold | group | elastic")
      .add("lambda0", &Settings::lambda0, "initial smoothing parameter")
      .add("tol", &Settings::tol, "outer stopping tolerance on the objective change")
      .add("max-outer", &Settings::max_outer, "maximum outer iterations")
      .add("max-inner", &Settings::max_inner, "maximum inner iterations")
      .add("inner-tol", &Settings::inner_tol, "fixed inner tolerance (0 = adaptive)")
      .add("inner-tol-scale", &Settings::inner_tol_scale, "adaptive inner tolerance scale")
      .flag("monotone-y", &Settings::monotone_y, "monotone choice of the Y sequence")
      .add("beta", &Settings::beta, "manifold trade-off")
      .add("laplacian", &Settings::laplacian, "manifold Laplacian file (default: kNN graph)")
      .add("knn", &Settings::knn, "neighbours of the kNN graph")
      .add("knn-width", &Settings::knn_width, "kNN kernel width (0 = median distance)")
      .add("alpha", &Settings::alpha, "elastic-net trade-off")
      .add("group-target", &Settings::group_target, "w | h")
      .add("group-norm", &Settings::group_norm, "l2 | inf")
      .add("group-mode", &Settings::group_mode, "constrained | penalized")
      .add("groups", &Settings::groups, "column ranges, e.g. 0:5,5:10")
      .add("group-size", &Settings::group_size, "contiguous groups of this size")
      .add("group-value", &Settings::group_value,
           "radius (constrained, 0 = relative) or weight (penalized)")
      .add("radius-fraction", &Settings::radius_fraction,
           "default radius as a fraction of the initial group norm");
}

// ---- helpers ----------------------------------------------------------------

MatrixPtr read_matrix(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing --") + what);
  if (!fs::exists(path)) throw RuntimeError(std::string(what) + " file not found: " + path);
  mahnmf_matrix* m = nullptr;
  check(mahnmf_matrix_read(path.c_str(), &m), "reading " + path);
  return MatrixPtr(m);
}

void write_matrix(const fs::path& path, const mahnmf_matrix* m) {
  check(mahnmf_matrix_write(path.string().c_str(), m), "writing " + path.string());
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream f(path);
  if (!f) throw RuntimeError("cannot write " + path.string());
  f << doc.dump(2) << '\n';
}

fs::path prepare_out(const Settings& s) {
  fs::path dir(s.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeError("cannot create output directory " + s.out + ": " + ec.message());
  return dir;
}

mahnmf_solver parse_solver(const std::string& name) {
  if (name == "ogm") return MAHNMF_SOLVER_OGM;
  if (name == "rri") return MAHNMF_SOLVER_RRI;
  throw UsageError("unknown solver '" + name + "' (expected rri or ogm)");
}

std::vector<std::pair<std::size_t, std::size_t>> parse_groups(const Settings& s,
                                                              std::size_t extent) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (!s.groups.empty()) {
    std::stringstream ss(s.groups);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw UsageError("group range '" + item + "' needs a ':'");
      try {
        out.emplace_back(std::stoul(item.substr(0, colon)), std::stoul(item.substr(colon + 1)));
      } catch (const std::exception&) {
        throw UsageError("bad group range '" + item + "'");
      }
    }
  } else if (s.group_size > 0) {
    for (std::size_t b = 0; b < extent; b += s.group_size) {
      out.emplace_back(b, std::min(extent, b + s.group_size));
    }
  } else {
    throw UsageError("the group variant needs --groups or --group-size");
  }
  return out;
}

// Builds the solver configuration for input X with the given solver name.
ConfigPtr make_config(const Settings& s, const std::string& solver_name, const mahnmf_matrix* X) {
  const mahnmf_solver solver = parse_solver(solver_name);
  const std::string& v = s.variant;
  if (v != "plain" && v != "box" && v != "manifold" && v != "group" && v != "elastic") {
    throw UsageError("unknown variant '" + v + "'");
  }
  if (solver == MAHNMF_SOLVER_RRI && (v == "group" || v == "elastic")) {
    throw UsageError("the " + v + " variant requires --solver ogm");
  }

  mahnmf_config* raw = nullptr;
  check(mahnmf_config_create(&raw), "creating config");
  ConfigPtr cfg(raw);
  check(mahnmf_config_set_rank(cfg.get(), s.rank), "rank");
  check(mahnmf_config_set_solver(cfg.get(), solver), "solver");
  check(mahnmf_config_set_lambda0(cfg.get(), s.lambda0), "lambda0");
  check(mahnmf_config_set_outer_tol(cfg.get(), s.tol), "tol");
  check(mahnmf_config_set_max_outer(cfg.get(), s.max_outer), "max-outer");
  check(mahnmf_config_set_max_inner(cfg.get(), s.max_inner), "max-inner");
  if (s.inner_tol > 0.0) {
    check(mahnmf_config_set_inner_tol_fixed(cfg.get(), s.inner_tol), "inner-tol");
  } else {
    check(mahnmf_config_set_inner_tol_adaptive(cfg.get(), s.inner_tol_scale), "inner-tol-scale");
  }
  check(mahnmf_config_set_seed(cfg.get(), s.seed), "seed");
  check(mahnmf_config_set_monotone_y(cfg.get(), s.monotone_y ? 1 : 0), "monotone-y");
  check(mahnmf_config_set_record_timing(cfg.get(), s.no_timing ? 0 : 1), "timing");

  if (v == "box") {
    check(mahnmf_config_set_box(cfg.get()), "box variant");
  } else if (v == "elastic") {
    check(mahnmf_config_set_elastic(cfg.get(), s.alpha), "elastic variant");
  } else if (v == "manifold") {
    MatrixPtr lap;
    if (!s.laplacian.empty()) {
      lap = read_matrix(s.laplacian, "laplacian");
    } else {
      mahnmf_matrix* sim = nullptr;
      mahnmf_matrix* l = nullptr;
      check(mahnmf_knn_graph(X, s.knn, s.knn_width, &sim, &l), "kNN graph");
      mahnmf_matrix_free(sim);
      lap.reset(l);
    }
    check(mahnmf_config_set_manifold(cfg.get(), s.beta, lap.get()), "manifold variant");
  } else if (v == "group") {
    mahnmf_group_target target;
    if (s.group_target == "w") {
      target = MAHNMF_GROUP_W;
    } else if (s.group_target == "h") {
      target = MAHNMF_GROUP_H;
    } else {
      throw UsageError("--group-target must be w or h");
    }
    mahnmf_group_norm norm;
    if (s.group_norm == "l2") {
      norm = MAHNMF_NORM_L2;
    } else if (s.group_norm == "inf") {
      norm = MAHNMF_NORM_INF;
    } else {
      throw UsageError("--group-norm must be l2 or inf");
    }
    mahnmf_group_mode mode;
    if (s.group_mode == "constrained") {
      mode = MAHNMF_GROUP_CONSTRAINED;
    } else if (s.group_mode == "penalized") {
      mode = MAHNMF_GROUP_PENALIZED;
    } else {
      throw UsageError("--group-mode must be constrained or penalized");
    }
    const std::size_t extent =
        target == MAHNMF_GROUP_W ? mahnmf_matrix_rows(X) : mahnmf_matrix_cols(X);
    const auto ranges = parse_groups(s, extent);
    std::vector<std::size_t> starts, ends;
    for (const auto& [a, b] : ranges) {
      starts.push_back(a);
      ends.push_back(b);
    }
    check(mahnmf_config_add_groups(cfg.get(), target, norm, mode, s.group_value,
                                   s.radius_fraction, starts.data(), ends.data(), ranges.size()),
          "group variant");
  }
  return cfg;
}

// Streams trace rows to disk as the solver produces them, so a failed run
// still leaves the iterations it completed.
class TraceWriter {
 public:
  explicit TraceWriter(const fs::path& path) : out_(path) {
    if (!out_) throw RuntimeError("cannot write " + path.string());
    out_ << "t,lambda,objective,smoothed_objective,inner_h,inner_w,seconds\n";
    out_.flush();
  }

  static void observe(const mahnmf_trace_record* r, const double*, const double*, size_t, size_t,
                      size_t, void* user) {
    auto* self = static_cast<TraceWriter*>(user);
    self->out_ << r->t << ',' << fmt(r->lambda) << ',' << fmt(r->objective) << ','
               << fmt(r->smoothed_objective) << ',' << r->inner_h << ',' << r->inner_w << ','
               << fmt(r->seconds) << '\n';
    self->out_.flush();
  }

 private:
  std::ofstream out_;
};

class Clock {
 public:
  explicit Clock(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

// Mean sparseness of the r rows of a factor (the basis vectors of W, the
// coefficient profiles of H); null when undefined.
json sparseness_of(const mahnmf_matrix* F) {
  mahnmf_matrix* t = nullptr;
  check(mahnmf_matrix_transpose(F, &t), "transpose");
  const MatrixPtr Ft(t);
  double v = 0.0;
  if (mahnmf_mean_column_sparseness(Ft.get(), &v) != MAHNMF_OK) return nullptr;
  return v;
}

double relative_error(const mahnmf_matrix* A, const mahnmf_matrix* B) {
  double v = 0.0;
  check(mahnmf_relative_error(A, B, &v), "relative error");
  return v;
}

MatrixPtr reconstruct(const mahnmf_matrix* W, const mahnmf_matrix* H) {
  mahnmf_matrix* out = nullptr;
  check(mahnmf_reconstruct(W, H, &out), "reconstruction");
  return MatrixPtr(out);
}

ResultPtr run_solver(const mahnmf_matrix* X, const mahnmf_config* cfg, const mahnmf_matrix* W0,
                     const mahnmf_matrix* H0, const fs::path& trace_path) {
  TraceWriter trace(trace_path);
  mahnmf_result* raw = nullptr;
  check(mahnmf_solve_observed(X, cfg, W0, H0, &TraceWriter::observe, &trace, &raw), "solve");
  return ResultPtr(raw);
}

json solve_summary(const Settings& s, const mahnmf_matrix* X, const mahnmf_result* res) {
  const mahnmf_matrix* W = mahnmf_result_W(res);
  const mahnmf_matrix* H = mahnmf_result_H(res);
  double objective = 0.0;
  check(mahnmf_objective(X, W, H, &objective), "objective");
  const MatrixPtr Xhat = reconstruct(W, H);
  const std::size_t len = mahnmf_result_trace_length(res);
  mahnmf_trace_record last{};
  if (len > 0) check(mahnmf_result_trace_record(res, len - 1, &last), "trace");
  json warnings = json::array();
  for (std::size_t i = 0; i < mahnmf_result_warning_count(res); ++i) {
    warnings.push_back(mahnmf_result_warning(res, i));
  }
  json doc;
  doc["solver"] = s.solver;
  doc["variant"] = s.variant;
  doc["rank"] = s.rank;
  doc["seed"] = s.seed;
  doc["m"] = mahnmf_matrix_rows(X);
  doc["n"] = mahnmf_matrix_cols(X);
  doc["initial_objective"] = mahnmf_result_initial_objective(res);
  doc["objective"] = objective;
  doc["variant_objective"] = len > 0 ? last.objective : mahnmf_result_initial_objective(res);
  doc["relative_error"] = relative_error(X, Xhat.get());
  doc["sparseness_w"] = sparseness_of(W);
  doc["sparseness_h"] = sparseness_of(H);
  doc["outer_iterations"] = len;
  doc["converged"] = mahnmf_result_converged(res) != 0;
  doc["warnings"] = warnings;
  return doc;
}

// ---- commands ---------------------------------------------------------------

int cmd_factorize(const Settings& s, bool decompose) {
  const Clock clock(!s.no_timing);
  const MatrixPtr X = read_matrix(s.input, "input");
  const ConfigPtr cfg = make_config(s, s.solver, X.get());
  const fs::path dir = prepare_out(s);

  const ResultPtr res = run_solver(X.get(), cfg.get(), nullptr, nullptr, dir / "trace.csv");
  const mahnmf_matrix* W = mahnmf_result_W(res.get());
  const mahnmf_matrix* H = mahnmf_result_H(res.get());
  write_matrix(dir / "W.csv", W);
  write_matrix(dir / "H.csv", H);

  json doc;
  doc["command"] = decompose ? "decompose" : "factorize";
  doc["input"] = s.input;
  doc.update(solve_summary(s, X.get(), res.get()));

  if (decompose) {
    const MatrixPtr low = reconstruct(W, H);
    mahnmf_matrix* sparse = nullptr;
    check(mahnmf_matrix_subtract(X.get(), low.get(), &sparse), "sparse part");
    const MatrixPtr S(sparse);
    write_matrix(dir / "lowrank.csv", low.get());
    write_matrix(dir / "sparse.csv", S.get());
    double sparse_norm = 0.0;
    check(mahnmf_matrix_create(mahnmf_matrix_rows(S.get()), mahnmf_matrix_cols(S.get()), &sparse),
          "zero matrix");
    const MatrixPtr zero(sparse);
    check(mahnmf_manhattan(S.get(), zero.get(), &sparse_norm), "sparse norm");
    doc["sparse_manhattan"] = sparse_norm;

    MatrixPtr L;
    if (!s.truth.empty()) {
      L = read_matrix(s.truth, "truth");
      doc["truth_relative_error"] = relative_error(L.get(), low.get());
    }
    if (s.eucnmf) {
      mahnmf_matrix* ew = nullptr;
      mahnmf_matrix* eh = nullptr;
      check(mahnmf_eucnmf(X.get(), s.rank, s.eucnmf_max_iter, s.eucnmf_tol, s.seed, &ew, &eh),
            "EucNMF baseline");
      const MatrixPtr EW(ew), EH(eh);
      const MatrixPtr elow = reconstruct(EW.get(), EH.get());
      double eobj = 0.0;
      check(mahnmf_objective(X.get(), EW.get(), EH.get(), &eobj), "EucNMF objective");
      doc["eucnmf_objective"] = eobj;
      doc["eucnmf_relative_error"] = relative_error(X.get(), elow.get());
      if (L) doc["eucnmf_truth_relative_error"] = relative_error(L.get(), elow.get());
    }
  }
  doc["wall_seconds"] = clock.seconds();
  write_json(dir / "summary.json", doc);
  return 0;
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    const std::size_t m = std::stoul(text.substr(0, x));
    const std::size_t n = std::stoul(text.substr(x + 1));
    if (m == 0 || n == 0) throw std::invalid_argument(text);
    return {m, n};
  } catch (const std::exception&) {
    throw UsageError("bad size '" + text + "' (expected MxN)");
  }
}

struct Series {
  std::vector<double> objective;  // index t; t = 0 is the initial point
  std::vector<double> seconds;
};

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

// Sample standard deviation; zero for a single value.
double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

int cmd_bench(const Settings& s) {
  if (s.solvers.empty()) throw UsageError("bench needs at least one solver");
  if (s.repeats < 1) throw UsageError("--repeats must be at least 1");
  for (const auto& name : s.solvers) parse_solver(name);

  std::vector<std::pair<std::size_t, std::size_t>> sizes;
  MatrixPtr input;
  if (!s.input.empty()) {
    input = read_matrix(s.input, "input");
    sizes.emplace_back(mahnmf_matrix_rows(input.get()), mahnmf_matrix_cols(input.get()));
  } else {
    for (const auto& text : s.sizes) sizes.push_back(parse_size(text));
  }
  if (sizes.empty()) throw UsageError("bench needs at least one size");

  const fs::path dir = prepare_out(s);
  fs::create_directories(dir / "runs");
  std::ofstream agg(dir / "aggregate.csv");
  if (!agg) throw RuntimeError("cannot write aggregate.csv");
  agg << "solver,m,n,t,mean_objective,std_objective,mean_seconds,std_seconds,runs\n";
  json summary;
  summary["command"] = "bench";
  summary["rank"] = s.rank;
  summary["seed"] = s.seed;
  summary["repeats"] = s.repeats;
  summary["runs"] = json::array();

  for (const auto& [m, n] : sizes) {
    std::map<std::string, std::vector<Series>> series;
    for (int rep = 0; rep < s.repeats; ++rep) {
      // Each repeat draws data and the shared initialisation from its own seed.
      const std::uint64_t seed = s.seed + static_cast<std::uint64_t>(rep);
      MatrixPtr X;
      if (input) {
        mahnmf_matrix* copy = nullptr;
        check(mahnmf_matrix_copy(input.get(), &copy), "copy");
        X.reset(copy);
      } else {
        mahnmf_matrix* raw = nullptr;
        check(mahnmf_random_uniform(m, n, seed, &raw), "random data");
        X.reset(raw);
      }
      mahnmf_matrix* w0 = nullptr;
      mahnmf_matrix* h0 = nullptr;
      check(mahnmf_initialize(X.get(), s.rank, seed, &w0, &h0), "initialisation");
      const MatrixPtr W0(w0), H0(h0);

      for (const auto& name : s.solvers) {
        const ConfigPtr cfg = make_config(s, name, X.get());
        const std::string tag =
            name + "_" + std::to_string(m) + "x" + std::to_string(n) + "_" + std::to_string(rep);
        const ResultPtr res =
            run_solver(X.get(), cfg.get(), W0.get(), H0.get(), dir / "runs" / (tag + ".csv"));
        Series ser;
        ser.objective.push_back(mahnmf_result_initial_objective(res.get()));
        ser.seconds.push_back(0.0);
        const std::size_t len = mahnmf_result_trace_length(res.get());
        for (std::size_t i = 0; i < len; ++i) {
          mahnmf_trace_record r{};
          check(mahnmf_result_trace_record(res.get(), i, &r), "trace");
          ser.objective.push_back(r.objective);
          ser.seconds.push_back(r.seconds);
        }
        json run;
        run["solver"] = name;
        run["m"] = m;
        run["n"] = n;
        run["repeat"] = rep;
        run["seed"] = seed;
        run["final_objective"] = ser.objective.back();
        run["seconds"] = ser.seconds.back();
        run["outer_iterations"] = len;
        run["converged"] = mahnmf_result_converged(res.get()) != 0;
        summary["runs"].push_back(run);
        series[name].push_back(std::move(ser));
      }
    }

    // Shorter runs are padded with their final values.
    for (const auto& name : s.solvers) {
      const auto& runs = series[name];
      std::size_t longest = 0;
      for (const auto& r : runs) longest = std::max(longest, r.objective.size());
      for (std::size_t t = 0; t < longest; ++t) {
        std::vector<double> obj, sec;
        for (const auto& r : runs) {
          const std::size_t k = std::min(t, r.objective.size() - 1);
          obj.push_back(r.objective[k]);
          sec.push_back(r.seconds[k]);
        }
        agg << name << ',' << m << ',' << n << ',' << t << ',' << fmt(mean_of(obj)) << ','
            << fmt(std_of(obj)) << ',' << fmt(mean_of(sec)) << ',' << fmt(std_of(sec)) << ','
            << runs.size() << '\n';
      }
    }
  }
  write_json(dir / "summary.json", summary);
  return 0;
}

mahnmf_noise_kind parse_noise(const std::string& name) {
  if (name == "occlusion") return MAHNMF_NOISE_OCCLUSION;
  if (name == "laplace") return MAHNMF_NOISE_LAPLACE;
  if (name == "salt_pepper" || name == "salt-pepper") return MAHNMF_NOISE_SALT_PEPPER;
  if (name == "gaussian") return MAHNMF_NOISE_GAUSSIAN;
  if (name == "poisson") return MAHNMF_NOISE_POISSON;
  throw UsageError("unknown noise kind '" + name + "'");
}

int cmd_synth(const Settings& s) {
  if (s.format != "csv" && s.format != "mtx") throw UsageError("--format must be csv or mtx");
  mahnmf_matrix *x = nullptr, *l = nullptr, *sp = nullptr;
  check(mahnmf_synth_low_rank_plus_sparse(s.m, s.n, s.rank, s.density, s.seed, s.spike_scale, &x,
                                          &l, &sp),
        "synthesis");
  MatrixPtr X(x);
  const MatrixPtr L(l), S(sp);

  json noise = nullptr;
  if (s.noise_kind != "none") {
    mahnmf_noise_spec spec = mahnmf_noise_spec_default(parse_noise(s.noise_kind));
    spec.magnitude = s.noise_magnitude;
    spec.density = s.noise_density;
    spec.seed = s.noise_seed;
    spec.clamp_nonneg = s.noise_clamp ? 1 : 0;
    spec.image_rows = s.image_rows;
    spec.image_cols = s.image_cols;
    mahnmf_matrix* noisy = nullptr;
    check(mahnmf_inject_noise(X.get(), &spec, &noisy), "noise");
    X.reset(noisy);
    noise = json{{"kind", s.noise_kind},     {"magnitude", s.noise_magnitude},
                 {"density", s.noise_density}, {"seed", s.noise_seed},
                 {"clamp", s.noise_clamp},     {"image_rows", s.image_rows},
                 {"image_cols", s.image_cols}};
  }

  const fs::path dir = prepare_out(s);
  const std::string ext = "." + s.format;
  write_matrix(dir / ("X" + ext), X.get());
  write_matrix(dir / ("L" + ext), L.get());
  write_matrix(dir / ("S" + ext), S.get());

  json doc;
  doc["command"] = "synth";
  doc["generator"] = "low_rank_plus_sparse";
  doc["m"] = s.m;
  doc["n"] = s.n;
  doc["rank"] = s.rank;
  doc["density"] = s.density;
  doc["spike_scale"] = s.spike_scale;
  doc["seed"] = s.seed;
  doc["noise"] = noise;
  doc["files"] = {{"X", "X" + ext}, {"L", "L" + ext}, {"S", "S" + ext}};
  doc["version"] = mahnmf_version();
  write_json(dir / "provenance.json", doc);
  return 0;
}

int cmd_sym(const Settings& s) {
  if (s.input.empty() == s.image.empty()) throw UsageError("sym needs exactly one of --input, --image");
  MatrixPtr X;
  if (!s.input.empty()) {
    X = read_matrix(s.input, "input");
    const std::size_t n = mahnmf_matrix_rows(X.get());
    if (mahnmf_matrix_cols(X.get()) != n) throw UsageError("sym input must be square");
    const double* a = mahnmf_matrix_cdata(X.get());
    double peak = 0.0;
    for (std::size_t i = 0; i < n * n; ++i) peak = std::max(peak, std::abs(a[i]));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (std::abs(a[i * n + j] - a[j * n + i]) > 1e-12 * peak) {
          throw UsageError("sym input is not symmetric");
        }
      }
    }
  } else {
    const MatrixPtr img = read_matrix(s.image, "image");
    mahnmf_matrix* sim = nullptr;
    check(mahnmf_image_similarity(img.get(), s.delta_f, s.delta_l, s.cutoff, &sim),
          "image similarity");
    const MatrixPtr A(sim);
    mahnmf_matrix* normalized = nullptr;
    check(mahnmf_normalize_similarity(A.get(), &normalized), "normalisation");
    X.reset(normalized);
  }

  const fs::path dir = prepare_out(s);
  if (!s.image.empty()) write_matrix(dir / "similarity.csv", X.get());

  mahnmf_config* raw = nullptr;
  check(mahnmf_config_create(&raw), "config");
  const ConfigPtr cfg(raw);
  check(mahnmf_config_set_rank(cfg.get(), s.rank), "rank");
  check(mahnmf_config_set_seed(cfg.get(), s.seed), "seed");
  check(mahnmf_config_set_outer_tol(cfg.get(), s.tol), "tol");
  check(mahnmf_config_set_max_outer(cfg.get(), s.max_outer), "max-outer");
  check(mahnmf_config_set_record_timing(cfg.get(), s.no_timing ? 0 : 1), "timing");

  const Clock clock(!s.no_timing);
  mahnmf_matrix* h = nullptr;
  const std::string trace = (dir / "trace.csv").string();
  check(mahnmf_sym_solve(X.get(), cfg.get(), &h, trace.c_str()), "symmetric solve");
  const MatrixPtr H(h);
  write_matrix(dir / "H.csv", H.get());

  mahnmf_matrix* ht = nullptr;
  check(mahnmf_matrix_transpose(H.get(), &ht), "transpose");
  const MatrixPtr Ht(ht);
  double objective = 0.0, norm = 0.0;
  check(mahnmf_objective(X.get(), Ht.get(), Ht.get(), &objective), "objective");
  mahnmf_matrix* z = nullptr;
  check(mahnmf_matrix_create(mahnmf_matrix_rows(X.get()), mahnmf_matrix_cols(X.get()), &z),
        "zero matrix");
  const MatrixPtr Z(z);
  check(mahnmf_manhattan(X.get(), Z.get(), &norm), "norm");

  json doc;
  doc["command"] = "sym";
  doc["input"] = s.input.empty() ? s.image : s.input;
  doc["source"] = s.input.empty() ? "image" : "similarity";
  doc["rank"] = s.rank;
  doc["seed"] = s.seed;
  doc["n"] = mahnmf_matrix_rows(X.get());
  doc["objective"] = objective;
  doc["relative_objective"] = norm > 0.0 ? objective / norm : 0.0;
  doc["wall_seconds"] = clock.seconds();
  write_json(dir / "summary.json", doc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manhattan-distance non-negative matrix factorisation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mahnmf_version());

  Settings s;
  std::set<std::string> all_keys{"config"};
  struct Command {
    CLI::App* app;
    std::unique_ptr<Binder> binder;
  };
  std::vector<Command> commands;
  auto command = [&](const char* name, const char* help) -> Binder& {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", s.config, "JSON config file; flags override its keys");
    commands.push_back({sub, std::make_unique<Binder>(sub, s, all_keys)});
    return *commands.back().binder;
  };

  for (const char* name : {"factorize", "decompose"}) {
    Binder& b = command(name, name == std::string("factorize")
                                  ? "factorise X ~= W^T H"
                                  : "split X into low-rank and sparse parts");
    add_common(b);
    add_solver(b);
    if (name == std::string("decompose")) {
      b.add("truth", &Settings::truth, "ground-truth low-rank matrix for comparison")
          .flag("eucnmf", &Settings::eucnmf, "also run the Euclidean NMF baseline")
          .add("eucnmf-max-iter", &Settings::eucnmf_max_iter, "baseline iteration budget")
          .add("eucnmf-tol", &Settings::eucnmf_tol, "baseline relative tolerance");
    }
  }
  {
    Binder& b = command("bench", "compare solvers over seeded repeats");
    add_common(b);
    add_solver(b);
    b.add("solvers", &Settings::solvers, "solvers to run")
        .add("sizes", &Settings::sizes, "problem sizes MxN (ignored with --input)")
        .add("repeats", &Settings::repeats, "repeats per size");
  }
  {
    Binder& b = command("synth", "generate a low-rank plus sparse dataset");
    add_common(b);
    b.add("m", &Settings::m, "rows")
        .add("n", &Settings::n, "columns")
        .add("density", &Settings::density, "fraction of entries with a spike")
        .add("spike-scale", &Settings::spike_scale, "spike size relative to max(L)")
        .add("noise-kind", &Settings::noise_kind,
             "none | occlusion | laplace | salt_pepper | gaussian | poisson")
        .add("noise-magnitude", &Settings::noise_magnitude, "noise magnitude")
        .add("noise-density", &Settings::noise_density, "noise density")
        .add("noise-seed", &Settings::noise_seed, "noise seed")
        .add("noise-clamp", &Settings::noise_clamp, "clamp noisy values at zero")
        .add("image-rows", &Settings::image_rows, "image height (occlusion)")
        .add("image-cols", &Settings::image_cols, "image width (occlusion)")
        .add("format", &Settings::format, "csv | mtx");
  }
  {
    Binder& b = command("sym", "symmetric factorisation X ~= H H^T");
    add_common(b);
    b.add("tol", &Settings::tol, "outer stopping tolerance")
        .add("max-outer", &Settings::max_outer, "maximum sweeps")
        .add("image", &Settings::image, "brightness image; builds the similarity matrix")
        .add("delta-f", &Settings::delta_f, "brightness kernel width")
        .add("delta-l", &Settings::delta_l, "spatial kernel width")
        .add("cutoff", &Settings::cutoff, "spatial cutoff (0 = median distance)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (auto& c : commands) {
      if (!c.app->parsed()) continue;
      c.binder->apply_config(s.config);
      const std::string name = c.app->get_name();
      if (name == "factorize") return cmd_factorize(s, false);
      if (name == "decompose") return cmd_factorize(s, true);
      if (name == "bench") return cmd_bench(s);
      if (name == "synth") return cmd_synth(s);
      if (name == "sym") return cmd_sym(s);
    }
  } catch (const UsageError& e) {
    std::cerr << "mahnmf: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mahnmf: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
