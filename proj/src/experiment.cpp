#include "seldyn/experiment.hpp"

#include <fstream>
#include <set>

#include "seldyn/io.hpp"

namespace seldyn {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

const json& member(const json& obj, const char* key, const char* where) {
  if (!obj.is_object()) fail(std::string(where) + " must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(std::string(where) + " is missing '" + key + "'");
  return *it;
}

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(std::string(where) + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) known = true;
    if (!known) fail(std::string(where) + " has unknown key '" + it.key() + "'");
  }
}

double number(const json& v, const char* where) {
  if (!v.is_number()) fail(std::string(where) + " must be a number");
  return v.get<double>();
}

int integer(const json& v, const char* where) {
  if (!v.is_number_integer()) fail(std::string(where) + " must be an integer");
  return v.get<int>();
}

std::string text(const json& v, const char* where) {
  if (!v.is_string()) fail(std::string(where) + " must be a string");
  return v.get<std::string>();
}

std::filesystem::path resolve(const std::string& rel, const std::filesystem::path& base) {
  std::filesystem::path p(rel);
  return p.is_absolute() ? p : base / p;
}

Field load_field_source(const json& src, const char* where, const Grid& grid,
                        const std::filesystem::path& base) {
  if (src.is_object() && src.contains("constant")) {
    check_keys(src, where, {"constant"});
    return Field::constant(grid.size(), number(src["constant"], where));
  }
  if (src.is_object() && src.contains("path")) {
    check_keys(src, where, {"path"});
    return io::read_field_csv(resolve(text(src["path"], where), base), grid);
  }
  if (src.is_string()) return io::read_field_csv(resolve(src.get<std::string>(), base), grid);
  fail(std::string(where) + " must be a path string, {\"path\": ...} or {\"constant\": ...}");
}

Activation parse_activation(const std::string& name) {
  try {
    return Activation::parse(name);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

}  // namespace

Experiment parse_experiment(const json& config, const std::filesystem::path& base_dir) {
  if (!config.is_object()) fail("top level must be an object");
  check_keys(config, "top level",
             {"grid", "time", "activation", "initial_field", "controls", "loss", "train",
              "analyze", "output"});

  Experiment exp;

  {
    const json& g = member(config, "grid", "top level");
    check_keys(g, "grid", {"n", "domain"});
    const int n = integer(member(g, "n", "grid"), "grid.n");
    Interval domain{0.0, 1.0};
    if (g.contains("domain")) {
      const json& d = g["domain"];
      if (!d.is_array() || d.size() != 2) fail("grid.domain must be [lo, hi]");
      domain.lo = number(d[0], "grid.domain[0]");
      domain.hi = number(d[1], "grid.domain[1]");
    }
    try {
      exp.grid = Grid::make_uniform(n, domain);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  {
    const json& t = member(config, "time", "top level");
    check_keys(t, "time", {"T", "steps"});
    try {
      exp.time = TimeGrid(number(member(t, "T", "time"), "time.T"),
                          integer(member(t, "steps", "time"), "time.steps"));
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  exp.act = parse_activation(text(member(config, "activation", "top level"), "activation"));
  exp.f_I = load_field_source(member(config, "initial_field", "top level"), "initial_field",
                              exp.grid, base_dir);

  {
    const json& c = member(config, "controls", "top level");
    check_keys(c, "controls", {"a", "b"});
    const json& bsrc = member(c, "b", "controls");

    if (bsrc.is_object() && bsrc.contains("rank_one")) {
      check_keys(bsrc, "controls.b", {"rank_one"});
      const json& r = bsrc["rank_one"];
      check_keys(r, "controls.b.rank_one", {"phi", "psi", "a0"});
      RankOneSpec spec;
      spec.phi = load_field_source(member(r, "phi", "rank_one"), "rank_one.phi", exp.grid,
                                   base_dir);
      spec.psi = load_field_source(member(r, "psi", "rank_one"), "rank_one.psi", exp.grid,
                                   base_dir);
      spec.a0 = number(member(r, "a0", "rank_one"), "rank_one.a0");
      spec.f_I = exp.f_I;
      try {
        spec.validate(exp.grid);
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
      // Separable data fixes both controls: kernel psi(y) phi(z) and
      // bias a0 psi, so any controls.a entry is rejected as ambiguous.
      if (c.contains("a")) fail("controls.a must be omitted when controls.b is rank_one");
      KernelSlice k(Eigen::MatrixXd(spec.psi.values * spec.phi.values.transpose()));
      Field a(spec.a0 * spec.psi.values);
      exp.controls = ControlParams::constant(a, k, exp.time.steps);
      exp.rank_one = std::move(spec);
    } else {
      Field a = Field::zeros(exp.grid.size());
      std::vector<Field> a_slices;
      bool a_autonomous = true;
      if (c.contains("a")) {
        const json& asrc = c["a"];
        const bool is_path_like =
            asrc.is_string() || (asrc.is_object() && asrc.contains("path"));
        if (is_path_like) {
          const std::string rel = asrc.is_string() ? asrc.get<std::string>()
                                                   : text(asrc["path"], "controls.a.path");
          const std::filesystem::path p = resolve(rel, base_dir);
          const std::string header = io::peek_csv_header(p);
          if (header == "t,y,value") {
            a_slices = io::read_control_bias_csv(p, exp.grid, exp.time);
            a_autonomous = false;
          } else {
            a = io::read_field_csv(p, exp.grid);
          }
        } else {
          a = load_field_source(asrc, "controls.a", exp.grid, base_dir);
        }
      }

      KernelSlice b = KernelSlice::zeros(exp.grid.size());
      std::vector<KernelSlice> b_slices;
      bool b_autonomous = true;
      if (bsrc.is_object() && bsrc.contains("constant")) {
        check_keys(bsrc, "controls.b", {"constant"});
        b = KernelSlice::constant(exp.grid.size(), number(bsrc["constant"], "controls.b"));
      } else {
        const std::string rel = bsrc.is_string()
                                    ? bsrc.get<std::string>()
                                    : text(member(bsrc, "path", "controls.b"), "controls.b.path");
        const std::filesystem::path p = resolve(rel, base_dir);
        const std::string header = io::peek_csv_header(p);
        if (header == "t,y,z,value") {
          b_slices = io::read_control_kernel_csv(p, exp.grid, exp.time);
          b_autonomous = false;
        } else {
          b = io::read_kernel_csv(p, exp.grid);
        }
      }

      if (a_autonomous && b_autonomous) {
        exp.controls = ControlParams::constant(a, b, exp.time.steps);
      } else {
        if (a_autonomous) a_slices.assign(exp.time.steps, a);
        if (b_autonomous) b_slices.assign(exp.time.steps, b);
        exp.controls = ControlParams::time_varying(std::move(a_slices), std::move(b_slices));
      }
    }
  }

  if (config.contains("loss")) {
    const json& l = config["loss"];
    check_keys(l, "loss", {"kind", "target", "label", "classifier", "lambda"});
    const std::string kind = text(member(l, "kind", "loss"), "loss.kind");
    const double lambda = l.contains("lambda") ? number(l["lambda"], "loss.lambda") : 0.0;
    if (lambda < 0.0) fail("loss.lambda must be nonnegative");
    if (kind == "tracking") {
      if (l.contains("label") || l.contains("classifier"))
        fail("tracking loss takes only 'target' and 'lambda'");
      Field target = load_field_source(member(l, "target", "loss"), "loss.target", exp.grid,
                                       base_dir);
      exp.loss = LossSpec::tracking_loss(std::move(target), lambda);
    } else if (kind == "classification") {
      if (l.contains("target")) fail("classification loss takes 'label', not 'target'");
      Field label = load_field_source(member(l, "label", "loss"), "loss.label", exp.grid,
                                      base_dir);
      const json& cls = member(l, "classifier", "loss");
      check_keys(cls, "loss.classifier", {"W", "mu"});
      ClassifierParams params;
      params.W = io::read_kernel_csv(
          resolve(text(member(cls, "W", "classifier"), "classifier.W"), base_dir), exp.grid);
      params.mu = load_field_source(member(cls, "mu", "classifier"), "classifier.mu", exp.grid,
                                    base_dir);
      exp.loss = LossSpec::classification_loss(std::move(label), std::move(params), lambda);
    } else {
      fail("loss.kind must be 'tracking' or 'classification'");
    }
  }

  if (config.contains("train")) {
    const json& t = config["train"];
    check_keys(t, "train",
               {"algo", "tau", "inner_iters", "max_iters", "tol", "damping", "box", "seed"});
    TrainConfig cfg;
    const std::string algo = text(member(t, "algo", "train"), "train.algo");
    if (algo == "ppa")
      cfg.algo = TrainAlgo::ppa;
    else if (algo == "pmp")
      cfg.algo = TrainAlgo::pmp;
    else
      fail("train.algo must be 'ppa' or 'pmp'");
    if (t.contains("tau")) cfg.tau = number(t["tau"], "train.tau");
    if (t.contains("inner_iters")) cfg.inner_iters = integer(t["inner_iters"], "train.inner_iters");
    if (t.contains("max_iters")) cfg.max_iters = integer(t["max_iters"], "train.max_iters");
    if (t.contains("tol")) cfg.tol = number(t["tol"], "train.tol");
    if (t.contains("damping")) cfg.damping = number(t["damping"], "train.damping");
    if (t.contains("box")) {
      const json& b = t["box"];
      check_keys(b, "train.box", {"a_lo", "a_hi", "b_lo", "b_hi"});
      cfg.box.a_lo = number(member(b, "a_lo", "box"), "box.a_lo");
      cfg.box.a_hi = number(member(b, "a_hi", "box"), "box.a_hi");
      cfg.box.b_lo = number(member(b, "b_lo", "box"), "box.b_lo");
      cfg.box.b_hi = number(member(b, "b_hi", "box"), "box.b_hi");
    }
    if (t.contains("seed")) cfg.seed = static_cast<unsigned>(integer(t["seed"], "train.seed"));
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    exp.train = cfg;
  }

  if (config.contains("analyze")) {
    const json& a = config["analyze"];
    check_keys(a, "analyze", {"n_triples"});
    if (a.contains("n_triples")) exp.analyze_triples = integer(a["n_triples"], "analyze.n_triples");
    if (exp.analyze_triples < 1) fail("analyze.n_triples must be at least 1");
  }

  if (config.contains("output")) exp.output_dir = text(config["output"], "output");

  exp.echo = config;
  return exp;
}

Experiment load_experiment(const std::filesystem::path& config_path) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + config_path.string() + "'");
  json config;
  try {
    in >> config;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + config_path.string() + "' is not valid JSON: " +
                      e.what());
  }
  return parse_experiment(config, config_path.parent_path());
}

const char* to_string(TrainAlgo algo) { return algo == TrainAlgo::ppa ? "ppa" : "pmp"; }

}  // namespace seldyn
