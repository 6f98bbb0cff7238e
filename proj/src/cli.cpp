#include "gmy/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "gmy/balance.hpp"
#include "gmy/checks.hpp"
#include "gmy/lattice.hpp"
#include "gmy/matrix.hpp"

namespace gmy::cli {

ConfigError::ConfigError(const std::string& source, int line, int column, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

bool key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'; }

}  // namespace

std::vector<ConfigRecord> parse_config(std::string_view text, const std::string& source) {
  std::vector<ConfigRecord> records(1);
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    if (trim(line) == "---") {
      records.emplace_back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source, line_no, static_cast<int>(first) + 1, "expected `key = value`");
    }
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source, line_no, static_cast<int>(eq) + 1, "empty key");
    const auto key_start = line.find(key, first);
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (!key_char(key[i])) {
        throw ConfigError(source, line_no, static_cast<int>(key_start + i) + 1,
                          std::string("invalid character '") + key[i] + "' in key");
      }
    }
    std::string_view value = trim(line.substr(eq + 1));
    const int value_column = value.empty() ? static_cast<int>(eq) + 2
                                           : static_cast<int>(line.find(value, eq + 1)) + 1;
    if (value.empty()) throw ConfigError(source, line_no, value_column, "missing value");
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') {
        throw ConfigError(source, line_no, value_column, "unterminated quoted value");
      }
      value = value.substr(1, value.size() - 2);
    }
    std::string name(key);
    std::replace(name.begin(), name.end(), '_', '-');
    auto& rec = records.back();
    if (std::any_of(rec.begin(), rec.end(), [&](const ConfigEntry& e) { return e.key == name; })) {
      throw ConfigError(source, line_no, static_cast<int>(key_start) + 1, "duplicate key '" + name + "'");
    }
    rec.push_back({name, std::string(value), line_no, static_cast<int>(key_start) + 1});
  }
  std::erase_if(records, [](const ConfigRecord& r) { return r.empty(); });
  if (records.empty()) records.emplace_back();
  return records;
}

std::vector<ConfigRecord> load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 0, 0, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Params {
  // global
  std::string config;
  std::string out;
  std::string format;
  Seed seed = 1;
  bool verbose = false;

  // dist
  std::string law = "gig";
  double lambda = 0.5;
  double a = 1;
  double b = 1;
  std::size_t dist_n = 1000;
  std::size_t dist_check_n = 100000;

  // map
  double alpha = 1;
  double beta = 2;
  double x = 1;
  double y = 1;
  bool psi = false;
  std::size_t map_n = 10000;

  // matrix
  std::vector<int> orders{1, 2, 3};
  std::size_t pairs = 100;
  int r = 2;
  double p = 3;
  std::size_t matrix_n = 1000;
  std::size_t burn_in = 4000;
  std::size_t thin = 0;

  // balance
  std::string variant = "fdk";
  double c1 = 1;
  double c2 = 1;
  std::size_t balance_n = 0;
  int permutations = 499;
  double threshold = 0.01;
  bool negative_control = false;
  double s = 0.7;
  double sigma = -0.5;
  double theta = -0.8;
  std::size_t machinery_n = 1000000;

  // lattice
  std::size_t width = 1000;
  std::size_t horizon = 50;
  double c = 1;
  double x_scale = 1;
  std::string replay;
  std::vector<std::size_t> probes{10, 25, 50};
};

class Invocation;

struct Leaf {
  CLI::App* app;
  std::string name;
  std::vector<std::string> required;
  std::function<int(Invocation&, std::ostream&)> action;
};

class Invocation {
 public:
  Invocation();

  void parse(const std::vector<std::string>& args);
  void apply(const ConfigRecord& record, const std::string& source);
  void apply_env();
  void check_required() const;
  int execute(std::ostream& out, std::ostream& err);

  [[nodiscard]] bool given(const std::string& name) const;
  /// Records a value chosen by the command itself (auto n, inferred sizes).
  void resolve(const std::string& name, const std::string& value) { overrides_[name] = value; }
  [[nodiscard]] std::string header_line() const;
  [[nodiscard]] nlohmann::json header_json() const;
  [[nodiscard]] std::string format_or(const std::string& fallback) const;

  CLI::App app{"GIG laws, discrete KdV cell maps and their detailed balance", "gmy"};
  Params p;

 private:
  Leaf& leaf(CLI::App* group, const std::string& name, const std::string& description,
             std::function<int(Invocation&, std::ostream&)> action);
  [[nodiscard]] const Leaf& selected() const;
  [[nodiscard]] std::vector<std::pair<std::string, std::string>> resolved() const;
  CLI::Option* find(const std::string& name) const;

  std::vector<Leaf> leaves_;
  std::map<std::string, std::string> overrides_;
};

std::string num(double v) { return format_double(v); }

int emit_table(Invocation& inv, std::ostream& out, const CheckTable& table) {
  if (inv.format_or("csv") == "json") {
    nlohmann::json j = to_json(table);
    j["header"] = inv.header_json();
    out << j.dump() << '\n';
  } else {
    out << inv.header_line() << '\n' << to_csv(table);
  }
  return table.all_pass() ? kPass : kVerificationFailed;
}

void require_format(const Invocation& inv, const std::string& only) {
  if (inv.format_or(only) != only) throw UsageError("this command writes " + only + " only");
}

void emit_json(Invocation& inv, std::ostream& out, nlohmann::json j) {
  require_format(inv, "json");
  j["header"] = inv.header_json();
  out << j.dump() << '\n';
}

MarginalLaw dist_law(const Params& p) {
  if (p.law == "gig") return GigParams(p.lambda, p.a, p.b);
  if (p.law == "gamma") return GammaParams(p.lambda, p.a);
  if (p.law == "invgamma") return InvGammaParams(p.lambda, p.b);
  throw UsageError("--law must be gig, gamma or invgamma");
}

BalanceSpec balance_spec(const Params& p) {
  const MapParams map(p.alpha, p.beta);
  if (p.variant == "fdk") return {map, p.c1, p.c2, p.lambda, ScalarFdK{}};
  if (p.variant == "psi") return {map, p.c1, p.c2, p.lambda, ScalarPsi{}};
  if (p.variant == "matrix") {
    const int r = p.r;
    if (r < 1) throw UsageError("--r must be >= 1");
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(r, r);
    return {map, p.c1, p.c2, p.lambda, MatrixFdK{SpdMatrix(p.c1 * id), SpdMatrix(p.c2 * id)}};
  }
  throw UsageError("--variant must be fdk, psi or matrix");
}

ReplayBoundary read_replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open replay file " + path);
  std::map<std::size_t, double> xs;
  std::map<std::size_t, double> ys;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
    std::array<std::string, 4> f;
    std::istringstream ls(line);
    for (auto& field : f) std::getline(ls, field, ',');
    try {
      const std::size_t t = std::stoul(f[0]);
      const std::size_t n = std::stoul(f[1]);
      if (t == 0 && n >= 1) xs[n] = std::stod(f[2]);
      if (n == 0 && t >= 1) ys[t] = std::stod(f[3]);
    } catch (const std::exception&) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": malformed frame row");
    }
  }
  ReplayBoundary r;
  for (const auto& [n, v] : xs) {
    if (n != r.x0.size() + 1) throw UsageError(path + ": x boundary has a gap at n=" + std::to_string(n));
    r.x0.push_back(v);
  }
  for (const auto& [t, v] : ys) {
    if (t != r.y0.size() + 1) throw UsageError(path + ": y boundary has a gap at t=" + std::to_string(t));
    r.y0.push_back(v);
  }
  return r;
}

LatticeConfig lattice_config(Invocation& inv) {
  Params& p = inv.p;
  const double c1 = inv.given("c1") ? p.c1 : p.c;
  const double c2 = inv.given("c2") ? p.c2 : p.c;
  inv.resolve("c1", num(c1));
  inv.resolve("c2", num(c2));
  std::size_t width = p.width;
  std::size_t horizon = p.horizon;
  ReplayBoundary replay;
  if (!p.replay.empty()) {
    replay = read_replay(p.replay);
    if (!inv.given("n")) width = replay.x0.size();
    if (!inv.given("t")) horizon = replay.y0.size();
    inv.resolve("n", std::to_string(width));
    inv.resolve("t", std::to_string(horizon));
  }
  LatticeConfig cfg = LatticeConfig::stationary(width, horizon, MapParams(p.alpha, p.beta), p.lambda, c1, c2, p.seed);
  cfg.x_scale = p.x_scale;
  if (!p.replay.empty()) cfg.boundary = std::move(replay);
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------

Invocation::Invocation() {
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.failure_message(CLI::FailureMessage::help);
  app.add_option("--config", p.config, "flat key = value file; `---` separates records");
  app.add_option("--out", p.out, "write output to this file instead of stdout");
  app.add_option("--format", p.format, "csv or json (commands have a default)");
  app.add_option("--seed", p.seed, "64-bit seed (GMY_SEED when not given)");
  app.add_flag("-v,--verbose", p.verbose, "timings on stderr");

  auto group = [&](const std::string& name, const std::string& description) {
    CLI::App* g = app.add_subcommand(name, description);
    g->require_subcommand(1);
    g->fallthrough();
    return g;
  };

  CLI::App* specfun = group("specfun", "Bessel functions");
  leaf(specfun, "check", "residual table of the Bessel battery", [](Invocation& inv, std::ostream& out) {
    return emit_table(inv, out, specfun_battery());
  });

  CLI::App* dist = group("dist", "GIG, Gamma and inverse-Gamma laws");
  {
    Leaf& l = leaf(dist, "sample", "draw from one law, one value per line", [](Invocation& inv, std::ostream& out) {
      require_format(inv, "csv");
      const auto values = sample(dist_law(inv.p), inv.p.seed, inv.p.dist_n);
      out << inv.header_line() << '\n';
      for (const double v : values) out << num(v) << '\n';
      return kPass;
    });
    l.app->add_option("--law", p.law, "gig, gamma or invgamma");
    l.app->add_option("--lambda", p.lambda);
    l.app->add_option("--a", p.a);
    l.app->add_option("--b", p.b);
    l.app->add_option("--n", p.dist_n);
    l.required = {"lambda"};
  }
  {
    Leaf& l = leaf(dist, "check", "invariant suite and sampler KS battery", [](Invocation& inv, std::ostream& out) {
      return emit_table(inv, out, dist_battery(inv.p.seed, inv.p.dist_check_n));
    });
    l.app->add_option("--n", p.dist_check_n, "draws per KS test");
  }

  CLI::App* map = group("map", "scalar maps");
  {
    Leaf& l = leaf(map, "eval", "image of one point", [](Invocation& inv, std::ostream& out) {
      const MapParams mp(inv.p.alpha, inv.p.beta);
      const PositivePair in(inv.p.x, inv.p.y);
      const PositivePair img = inv.p.psi ? psi(mp, in) : f_dk(mp, in);
      if (inv.format_or("csv") == "json") {
        emit_json(inv, out, {{"schema", "gmy.map/1"}, {"first", img.first}, {"second", img.second}});
      } else {
        out << inv.header_line() << '\n' << num(img.first) << ',' << num(img.second) << '\n';
      }
      return kPass;
    });
    l.app->add_option("--alpha", p.alpha);
    l.app->add_option("--beta", p.beta);
    l.app->add_option("--x", p.x);
    l.app->add_option("--y", p.y);
    l.app->add_flag("--psi", p.psi, "evaluate psi instead of F_dK");
    l.required = {"alpha", "beta", "x", "y"};
  }
  {
    Leaf& l = leaf(map, "check", "identity and Jacobian battery", [](Invocation& inv, std::ostream& out) {
      std::vector<MapParams> params = default_map_params();
      if (inv.given("alpha") || inv.given("beta")) params = {MapParams(inv.p.alpha, inv.p.beta)};
      return emit_table(inv, out, map_battery(params, inv.p.seed, inv.p.map_n));
    });
    l.app->add_option("--alpha", p.alpha, "single parameter pair instead of the default set");
    l.app->add_option("--beta", p.beta);
    l.app->add_option("--n", p.map_n, "points per parameter pair");
  }

  CLI::App* matrix = group("matrix", "matrix map and matrix GIG law");
  {
    Leaf& l = leaf(matrix, "check", "involution, Jacobian and uv = yx battery", [](Invocation& inv, std::ostream& out) {
      for (const int r : inv.p.orders) {
        if (r < 1 || r > 4) throw UsageError("--r must lie in 1..4");
      }
      return emit_table(inv, out, matrix_battery(MapParams(inv.p.alpha, inv.p.beta), inv.p.orders, inv.p.seed, inv.p.pairs));
    });
    l.app->add_option("--r", p.orders, "orders to check")->delimiter(',');
    l.app->add_option("--alpha", p.alpha);
    l.app->add_option("--beta", p.beta);
    l.app->add_option("--pairs", p.pairs, "random SPD pairs per order");
  }
  {
    Leaf& l = leaf(matrix, "sample", "MCMC draws of MGIG(p, a I, b I), row-major", [](Invocation& inv, std::ostream& out) {
      require_format(inv, "csv");
      const Params& q = inv.p;
      if (q.r < 1) throw UsageError("--r must be >= 1");
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(q.r, q.r);
      const MgigParams law(q.p, SpdMatrix(q.a * id), SpdMatrix(q.b * id));
      McmcConfig cfg;
      cfg.burn_in = q.burn_in;
      cfg.thin = q.thin;
      const McmcRun run = mgig_sample(law, q.seed, q.matrix_n, cfg);
      const auto& d = run.diagnostics;
      out << inv.header_line() << '\n';
      out << "# r=" << q.r << " p=" << num(q.p) << " a=" << num(q.a) << " b=" << num(q.b) << " seed=" << q.seed
          << " burn-in=" << d.burn_in << " thinning=" << d.thin << " acceptance_min=" << num(d.acceptance_min)
          << " acceptance_max=" << num(d.acceptance_max) << " rhat=" << num(d.rhat) << " ess=" << num(d.ess) << '\n';
      for (const auto& x : run.draws) {
        for (Eigen::Index i = 0; i < x.dim(); ++i) {
          for (Eigen::Index j = 0; j < x.dim(); ++j) out << (i + j > 0 ? "," : "") << num(x(i, j));
        }
        out << '\n';
      }
      return d.converged() ? kPass : kVerificationFailed;
    });
    l.app->add_option("--r", p.r, "matrix order");
    l.app->add_option("--p", p.p, "order parameter");
    l.app->add_option("--a", p.a, "a = a I");
    l.app->add_option("--b", p.b, "b = b I");
    l.app->add_option("--n", p.matrix_n, "draws");
    l.app->add_option("--burn-in", p.burn_in);
    l.app->add_option("--thin", p.thin, "0 picks ceil(3 tau) from a pilot run");
  }

  CLI::App* balance = group("balance", "detailed balance");
  {
    Leaf& l = leaf(balance, "verify", "Monte Carlo detailed-balance report", [](Invocation& inv, std::ostream& out) {
      const BalanceSpec spec = balance_spec(inv.p);
      std::size_t n = inv.p.balance_n;
      if (n == 0) n = spec.is_matrix() ? 6000 : 100000;
      inv.resolve("n", std::to_string(n));
      BalanceOptions opt;
      opt.permutations = inv.p.permutations;
      opt.threshold = inv.p.threshold;
      opt.negative_control = inv.p.negative_control;
      const BalanceReport report = monte_carlo_balance(spec, inv.p.seed, n, opt);
      emit_json(inv, out, to_json(report));
      return report.pass ? kPass : kVerificationFailed;
    });
    l.app->add_option("--variant", p.variant, "fdk, psi or matrix");
    l.app->add_option("--alpha", p.alpha);
    l.app->add_option("--beta", p.beta);
    l.app->add_option("--c1", p.c1);
    l.app->add_option("--c2", p.c2);
    l.app->add_option("--lambda", p.lambda);
    l.app->add_option("--n", p.balance_n, "pairs; 0 picks 100000 (scalar) or 6000 (matrix)");
    l.app->add_option("--r", p.r, "matrix order for --variant matrix");
    l.app->add_option("--permutations", p.permutations);
    l.app->add_option("--threshold", p.threshold);
    l.app->add_flag("--negative-control", p.negative_control, "double c1 in the law of Y");
    l.required = {"alpha", "beta", "lambda"};
  }
  {
    Leaf& l = leaf(balance, "machinery", "extended-Laplace identity table", [](Invocation& inv, std::ostream& out) {
      const Params& q = inv.p;
      const BalanceSpec spec(MapParams(q.alpha, q.beta), q.c1, q.c2, q.lambda, ScalarPsi{});
      const auto rows = machinery_check(spec, q.s, q.sigma, q.theta, q.seed, q.machinery_n);
      const bool pass = std::all_of(rows.begin(), rows.end(), [](const MachineryRow& r) { return r.pass; });
      if (inv.format_or("csv") == "json") {
        nlohmann::json j = to_json(from_machinery(rows));
        j["schema"] = "gmy.machinery/1";
        emit_json(inv, out, j);
      } else {
        out << inv.header_line() << '\n' << machinery_csv(rows);
      }
      return pass ? kPass : kVerificationFailed;
    });
    l.app->add_option("--alpha", p.alpha);
    l.app->add_option("--beta", p.beta);
    l.app->add_option("--c1", p.c1);
    l.app->add_option("--c2", p.c2);
    l.app->add_option("--lambda", p.lambda);
    l.app->add_option("--s", p.s);
    l.app->add_option("--sigma", p.sigma);
    l.app->add_option("--theta", p.theta);
    l.app->add_option("--n", p.machinery_n);
  }

  CLI::App* lattice = group("lattice", "discrete mKdV lattice");
  auto lattice_options = [&](Leaf& l) {
    l.app->add_option("--n", p.width, "sites");
    l.app->add_option("--t", p.horizon, "time steps");
    l.app->add_option("--alpha", p.alpha);
    l.app->add_option("--beta", p.beta);
    l.app->add_option("--lambda", p.lambda);
    l.app->add_option("--c", p.c, "c1 = c2 = c");
    l.app->add_option("--c1", p.c1, "overrides --c");
    l.app->add_option("--c2", p.c2, "overrides --c");
    l.app->add_option("--x-scale", p.x_scale, "multiplies the x boundary row");
    l.app->add_option("--replay", p.replay, "take the boundary from a `lattice run` frames file");
  };
  {
    Leaf& l = leaf(lattice, "run", "frames as CSV t,n,x,y, boundary included", [](Invocation& inv, std::ostream& out) {
      require_format(inv, "csv");
      const LatticeConfig cfg = lattice_config(inv);
      out << inv.header_line() << '\n' << "t,n,x,y\n";
      const EvolveSummary summary = evolve(cfg, [&](const LatticeFrame& f) {
        if (f.t == 0) {
          for (std::size_t n = 1; n <= f.x_row.size(); ++n) out << "0," << n << ',' << num(f.x_row[n - 1]) << ",\n";
          return;
        }
        out << f.t << ",0,," << num(f.y_boundary) << '\n';
        for (std::size_t n = 1; n <= f.x_row.size(); ++n) {
          out << f.t << ',' << n << ',' << num(f.x_row[n - 1]) << ',' << num(f.y_row[n - 1]) << '\n';
        }
      });
      return summary.all_positive ? kPass : kVerificationFailed;
    });
    lattice_options(l);
  }
  {
    Leaf& l = leaf(lattice, "stationarity", "two-sample KS report per parity class", [](Invocation& inv, std::ostream& out) {
      if (!inv.given("n")) inv.p.width = 100000;
      const LatticeConfig cfg = lattice_config(inv);
      inv.resolve("n", std::to_string(cfg.width));
      const StationarityReport report = stationarity_report(cfg, inv.p.probes);
      emit_json(inv, out, to_json(cfg, report));
      return report.all_pass() && report.evolve.all_positive ? kPass : kVerificationFailed;
    });
    lattice_options(l);
    l.app->add_option("--probes", p.probes, "probe times")->delimiter(',');
  }
}

Leaf& Invocation::leaf(CLI::App* group, const std::string& name, const std::string& description,
                       std::function<int(Invocation&, std::ostream&)> action) {
  CLI::App* sub = group->add_subcommand(name, description);
  sub->fallthrough();
  leaves_.push_back({sub, group->get_name() + " " + name, {}, std::move(action)});
  return leaves_.back();
}

void Invocation::parse(const std::vector<std::string>& args) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(reversed);
}

const Leaf& Invocation::selected() const {
  for (const auto& l : leaves_) {
    if (l.app->parsed()) return l;
  }
  throw UsageError("no command selected");
}

CLI::Option* Invocation::find(const std::string& name) const {
  const Leaf& l = selected();
  for (const CLI::App* scope : {static_cast<const CLI::App*>(l.app), static_cast<const CLI::App*>(&app)}) {
    for (CLI::Option* o : const_cast<CLI::App*>(scope)->get_options()) {
      if (o->check_lname(name) && o->get_name() != "--help") return o;
    }
  }
  return nullptr;
}

bool Invocation::given(const std::string& name) const {
  const CLI::Option* o = find(name);
  return o != nullptr && o->count() > 0;
}

void Invocation::apply(const ConfigRecord& record, const std::string& source) {
  for (const auto& e : record) {
    if (e.key == "config") throw ConfigError(source, e.line, e.column, "`config` cannot be set from a config file");
    CLI::Option* o = find(e.key);
    if (o == nullptr) {
      throw ConfigError(source, e.line, e.column, "unknown key '" + e.key + "' for `" + selected().name + "`");
    }
    if (o->count() > 0) continue;
    try {
      o->add_result(e.value);
      o->run_callback();
    } catch (const CLI::Error& err) {
      throw ConfigError(source, e.line, e.column, err.what());
    }
  }
}

void Invocation::apply_env() {
  CLI::Option* o = app.get_option("--seed");
  if (o->count() > 0) return;
  const char* env = std::getenv("GMY_SEED");
  if (env == nullptr || *env == '\0') return;
  o->clear();
  try {
    o->add_result(env);
    o->run_callback();
  } catch (const CLI::Error&) {
    throw UsageError(std::string("GMY_SEED is not a 64-bit unsigned integer: ") + env);
  }
}

void Invocation::check_required() const {
  const Leaf& l = selected();
  for (const auto& name : l.required) {
    if (!given(name)) throw UsageError("--" + name + " is required");
  }
}

std::string Invocation::format_or(const std::string& fallback) const {
  if (p.format.empty()) return fallback;
  if (p.format != "csv" && p.format != "json") throw UsageError("--format must be csv or json");
  return p.format;
}

std::vector<std::pair<std::string, std::string>> Invocation::resolved() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("seed", std::to_string(p.seed));
  if (!p.config.empty()) kv.emplace_back("config", p.config);
  for (const CLI::Option* o : selected().app->get_options()) {
    if (o->get_name() == "--help") continue;
    const std::string name = o->get_single_name();
    std::string value;
    if (auto it = overrides_.find(name); it != overrides_.end()) {
      value = it->second;
    } else if (o->count() > 0) {
      for (const auto& r : o->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = o->get_default_str();
      if (value.empty() && o->get_expected_max() == 0) value = "false";
    }
    kv.emplace_back(name, value);
  }
  return kv;
}

std::string Invocation::header_line() const {
  std::string line = "# gmy " + std::string(kVersion) + " " + selected().name;
  for (const auto& [k, v] : resolved()) {
    const bool quote = v.empty() || v.find_first_of(" \t\"") != std::string::npos;
    line += " " + k + "=" + (quote ? nlohmann::json(v).dump() : v);
  }
  return line;
}

nlohmann::json Invocation::header_json() const {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : resolved()) params[k] = v;
  return {{"program", "gmy"}, {"version", kVersion}, {"command", selected().name}, {"params", params}};
}

int Invocation::execute(std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const int status = selected().action(*this, out);
  out.flush();
  if (p.verbose) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    err << selected().name << ": " << secs << " s, exit " << status << '\n';
  }
  return status;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Invocation probe;
  try {
    probe.parse(args);
  } catch (const CLI::ParseError& e) {
    return probe.app.exit(e, out, err) == 0 ? kPass : kUsageError;
  }
  try {
    std::vector<ConfigRecord> records{ConfigRecord{}};
    if (!probe.p.config.empty()) records = load_config(probe.p.config);
    std::string open_path;
    std::ofstream file;
    int status = kPass;
    for (const auto& record : records) {
      Invocation inv;
      inv.parse(args);
      inv.apply_env();
      inv.apply(record, probe.p.config);
      inv.check_required();
      std::ostream* sink = &out;
      if (!inv.p.out.empty()) {
        if (inv.p.out != open_path) {
          file.close();
          file.open(inv.p.out, std::ios::binary | std::ios::trunc);
          if (!file) throw UsageError("cannot open " + inv.p.out + " for writing");
          open_path = inv.p.out;
        }
        sink = &file;
      }
      status = std::max(status, inv.execute(*sink, err));
    }
    return status;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kUsageError;
}

}  // namespace gmy::cli
