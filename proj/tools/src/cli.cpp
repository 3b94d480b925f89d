#include "rkinv_cli/cli.hpp"

#include "rkinv/couplings.hpp"
#include "rkinv/gff.hpp"
#include "rkinv/graph.hpp"
#include "rkinv/graph_io.hpp"
#include "rkinv/inverse_process.hpp"
#include "rkinv/jump_process.hpp"
#include "rkinv/loop_soup.hpp"
#include "rkinv/stats.hpp"
#include "rkinv/suites.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace rkinv::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Problems with the user's configuration map to kConfigError.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string graph;
  std::string x0;
  std::optional<double> u;
  double alpha = 0.5;
  std::size_t n = 1;
  std::optional<std::uint64_t> seed;
  std::string engine = "stack";
  std::string out = "rkinv-out";
  std::vector<std::string> pins;
  std::string source = "field";
  std::string law = "shifted";
  int n_max = 40;
  std::string suite;
  std::string oracle;
  double scale = 1.0;
  double p_threshold = 0.01;
  double k_sigma = 4.0;
  double eps = 1e-9;
};

class Output {
public:
  explicit Output(const std::string &dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec)
      throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  }

  std::ofstream open(const std::string &name) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f)
      throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
    f << std::setprecision(17);
    files_.push_back(name);
    return f;
  }

  const std::vector<std::string> &files() const { return files_; }
  const fs::path &dir() const { return dir_; }

private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct Context {
  Options opt;
  GraphSpec spec;
  std::optional<Graph> graph;

  const Graph &g() const { return *graph; }

  VertexId vertex(const std::string &label) const {
    if (auto v = graph->find(label))
      return *v;
    throw ConfigError("unknown vertex label '" + label + "'");
  }
  VertexId x0() const {
    if (!opt.x0.empty())
      return vertex(opt.x0);
    if (spec.x0)
      return vertex(*spec.x0);
    throw ConfigError("no root vertex: pass --x0 or set \"x0\" in the graph file");
  }
  double u() const {
    const double v = opt.u ? *opt.u : spec.u.value_or(1.0);
    if (!(v > 0.0))
      throw ConfigError("--u must be positive");
    return v;
  }
  std::uint64_t seed() const { return opt.seed.value_or(1); }
  std::vector<double> couplings() const {
    std::vector<double> J;
    for (const Edge &e : g().edges())
      J.push_back(e.conductance);
    return J;
  }
};

void load_graph(Context &ctx, bool allow_recurrent) {
  if (ctx.opt.graph.empty())
    throw ConfigError("--graph is required for this command");
  if (!fs::exists(ctx.opt.graph))
    throw ConfigError("cannot read graph file '" + ctx.opt.graph + "': no such file");
  try {
    ctx.spec = load_graph_spec(ctx.opt.graph);
    GraphOptions go;
    go.allow_recurrent = allow_recurrent;
    ctx.graph.emplace(Graph::build(ctx.spec, go));
  } catch (const GraphError &e) {
    throw ConfigError("invalid graph '" + ctx.opt.graph + "': " + e.what());
  }
}

std::string join_labels(const Graph &g, const std::vector<VertexId> &vs) {
  std::string s;
  for (VertexId v : vs)
    s += (s.empty() ? "" : " ") + g.label(v);
  return s;
}

void write_trajectory(std::ostream &f, std::size_t replica, const Graph &g, const Trajectory &t) {
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const Step &s = t.steps[i];
    f << replica << ',' << i << ',' << g.label(s.vertex) << ',' << s.holding << ','
      << to_string(s.exit) << ',';
    if (s.edge != kNoEdge)
      f << s.edge;
    f << '\n';
  }
}

json edges_json(const EdgeSet &s) { return json(s.ids()); }

void write_summary(Output &out, const std::string &command, const Context &ctx,
                   const std::vector<std::string> &lines) {
  std::ofstream f = out.open("summary.txt");
  f << "command: " << command << '\n';
  if (!ctx.opt.graph.empty())
    f << "graph: " << ctx.opt.graph << '\n';
  f << "replicas: " << ctx.opt.n << '\n' << "seed: " << ctx.seed() << '\n';
  for (const std::string &l : lines)
    f << l << '\n';
  f << "files:";
  for (const std::string &name : out.files())
    if (name != "summary.txt")
      f << ' ' << name;
  f << '\n';
}

std::map<VertexId, double> parse_pins(const Context &ctx) {
  std::map<VertexId, double> out;
  for (const std::string &p : ctx.opt.pins) {
    const auto eq = p.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--pin expects LABEL=VALUE, got '" + p + "'");
    double v;
    try {
      std::size_t used = 0;
      v = std::stod(p.substr(eq + 1), &used);
      if (used != p.size() - eq - 1)
        throw std::invalid_argument(p);
    } catch (const std::exception &) {
      throw ConfigError("--pin value is not a number in '" + p + "'");
    }
    out[ctx.vertex(p.substr(0, eq))] = v;
  }
  return out;
}

// ----------------------------------------------------------------- commands

int cmd_sample_gff(Context &ctx, std::ostream &os) {
  load_graph(ctx, false);
  ConditionSpec cond;
  cond.pinned = parse_pins(ctx);
  const GffSampler sampler(ctx.g(), cond);
  const auto fields = parallel_replicas(ctx.opt.n, ctx.seed(),
                                        [&](std::size_t, Rng &rng) { return sampler.sample(rng); });
  Output out(ctx.opt.out);
  {
    auto f = out.open("gff.csv");
    f << "replica,vertex,value\n";
    for (std::size_t i = 0; i < fields.size(); ++i)
      for (VertexId v = 0; v < ctx.g().num_vertices(); ++v)
        f << i << ',' << ctx.g().label(v) << ',' << fields[i][v] << '\n';
  }
  write_summary(out, "sample-gff", ctx, {"pinned vertices: " + std::to_string(cond.pinned.size())});
  os << "wrote " << fields.size() << " field samples to " << out.dir().string() << '\n';
  return kOk;
}

void write_soups(Output &out, const Graph &g, const std::vector<LoopSoupSample> &soups) {
  auto f = out.open("soup.csv");
  f << "replica,loop_id,root,step,vertex,holding,edge_id\n";
  auto fv = out.open("fields_vertex.csv");
  fv << "replica,vertex,L\n";
  auto fe = out.open("fields_edge.csv");
  fe << "replica,edge,N\n";
  for (std::size_t i = 0; i < soups.size(); ++i) {
    const LoopSoupSample &s = soups[i];
    for (std::size_t l = 0; l < s.loops.size(); ++l) {
      const Trajectory &t = s.loops[l];
      for (std::size_t k = 0; k < t.steps.size(); ++k) {
        const Step &st = t.steps[k];
        f << i << ',' << l << ',' << g.label(t.start) << ',' << k << ',' << g.label(st.vertex)
          << ',' << st.holding << ',';
        if (st.edge != kNoEdge)
          f << st.edge;
        f << '\n';
      }
    }
    const SoupFields sf = fields(s);
    for (VertexId v = 0; v < g.num_vertices(); ++v)
      fv << i << ',' << g.label(v) << ',' << sf.occupation[v] << '\n';
    for (EdgeId e = 0; e < g.num_edges(); ++e)
      fe << i << ',' << e << ',' << sf.crossings[e] << '\n';
  }
}

int cmd_sample_loopsoup(Context &ctx, std::ostream &os) {
  load_graph(ctx, false);
  if (!(ctx.opt.alpha > 0.0))
    throw ConfigError("--alpha must be positive");
  const LoopSoupSampler sampler(ctx.g(), default_enumeration(ctx.g()), ctx.opt.alpha, ctx.opt.eps);
  const auto soups = parallel_replicas(ctx.opt.n, ctx.seed(),
                                       [&](std::size_t, Rng &rng) { return sampler.sample(rng); });
  Output out(ctx.opt.out);
  write_soups(out, ctx.g(), soups);
  std::size_t loops = 0;
  for (const auto &s : soups)
    loops += s.loops.size();
  std::ostringstream a;
  a << "alpha: " << ctx.opt.alpha;
  write_summary(out, "sample-loopsoup", ctx, {a.str(), "loops: " + std::to_string(loops)});
  os << "wrote " << soups.size() << " loop soups (" << loops << " loops) to "
     << out.dir().string() << '\n';
  return kOk;
}

int cmd_forward_rk(Context &ctx, std::ostream &os) {
  load_graph(ctx, false);
  const Graph &g = ctx.g();
  const ForwardRkSampler sampler(g, ctx.x0(), ctx.u());
  const auto runs = parallel_replicas(ctx.opt.n, ctx.seed(),
                                      [&](std::size_t, Rng &rng) { return sampler.sample(rng); });
  Output out(ctx.opt.out);
  {
    auto f = out.open("trajectory.csv");
    f << "replica,step,vertex,holding,exit_kind,edge_id\n";
    for (std::size_t i = 0; i < runs.size(); ++i)
      write_trajectory(f, i, g, runs[i].traj);
  }
  {
    auto f = out.open("fields.csv");
    f << "replica,vertex,phi0,phiU\n";
    for (std::size_t i = 0; i < runs.size(); ++i)
      for (VertexId v = 0; v < g.num_vertices(); ++v)
        f << i << ',' << g.label(v) << ',' << runs[i].phi0[v] << ',' << runs[i].phiU[v] << '\n';
  }
  {
    auto f = out.open("runs.jsonl");
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const ForwardRk &r = runs[i];
      json j{{"replica", i},
             {"tau_u", r.traj.total_time()},
             {"jumps", r.traj.jumps()},
             {"open0", edges_json(r.open0)},
             {"openU", edges_json(r.openU)},
             {"clusters0", clusters(g, r.open0).count},
             {"clustersU", clusters(g, r.openU).count},
             {"crossings", r.traj.crossings(g.num_edges())}};
      f << j.dump() << '\n';
    }
  }
  double mean_tau = 0.0;
  for (const auto &r : runs)
    mean_tau += r.traj.total_time() / static_cast<double>(runs.size());
  std::ostringstream s;
  s << "x0: " << g.label(ctx.x0()) << "\nu: " << ctx.u() << "\nmean tau_u: " << mean_tau;
  write_summary(out, "forward-rk", ctx, {s.str()});
  os << "wrote " << runs.size() << " forward couplings to " << out.dir().string() << '\n';
  return kOk;
}

int cmd_forward_enlarged(Context &ctx, std::ostream &os) {
  load_graph(ctx, false);
  const Graph &g = ctx.g();
  const ForwardEnlargedSampler sampler(g, ctx.x0(), ctx.u());
  const auto runs = parallel_replicas(ctx.opt.n, ctx.seed(),
                                      [&](std::size_t, Rng &rng) { return sampler.sample(rng); });
  Output out(ctx.opt.out);
  {
    auto f = out.open("trajectory.csv");
    f << "replica,step,vertex,holding,exit_kind,edge_id\n";
    for (std::size_t i = 0; i < runs.size(); ++i)
      write_trajectory(f, i, g, runs[i].traj);
  }
  {
    auto f = out.open("events.csv");
    f << "replica,time,edge,kind,from,to,n_after\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const ForwardEnlarged &r = runs[i];
      // Crossing entries appear in the same order as the jumps of the path.
      std::vector<const Step *> jumps;
      for (const Step &s : r.traj.steps)
        if (s.exit == ExitKind::kJump)
          jumps.push_back(&s);
      std::size_t next_jump = 0;
      for (const EnlargedHistoryEntry &h : r.history) {
        const Edge &e = g.edge(h.edge);
        VertexId from = e.minus;
        VertexId to = e.plus;
        if (h.crossing && next_jump < jumps.size()) {
          from = jumps[next_jump]->vertex;
          to = e.other(from);
          ++next_jump;
        }
        f << i << ',' << h.time << ',' << h.edge << ',' << (h.crossing ? "crossing" : "point")
          << ',' << g.label(from) << ',' << g.label(to) << ',' << h.n_after << '\n';
      }
    }
  }
  {
    auto f = out.open("runs.jsonl");
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const ForwardEnlarged &r = runs[i];
      json j{{"replica", i},     {"tau_u", r.traj.total_time()}, {"n0", r.n0},
             {"n_end", r.n_end}, {"C0", edges_json(r.C0)},        {"C_end", edges_json(r.C_end)},
             {"phi0", r.phi0},   {"phiU", r.phiU}};
      f << j.dump() << '\n';
    }
  }
  write_summary(out, "forward-enlarged", ctx, {"x0: " + g.label(ctx.x0())});
  os << "wrote " << runs.size() << " enlarged forward runs to " << out.dir().string() << '\n';
  return kOk;
}

int cmd_inverse_rk(Context &ctx, std::ostream &os) {
  load_graph(ctx, false);
  const Graph &g = ctx.g();
  const VertexId x0 = ctx.x0();
  const double u = ctx.u();
  const std::string &engine = ctx.opt.engine;
  const GffSampler pinned(g, ConditionSpec::pin(x0, std::sqrt(2.0 * u)));

  struct Record {
    FieldReal phi;
    InverseRun run;
  };
  const auto runs = parallel_replicas(ctx.opt.n, ctx.seed(), [&](std::size_t, Rng &rng) {
    Record r;
    r.phi = pinned.sample(rng);
    if (engine == "stack") {
      InverseState st = init_inverse_from_field(g, x0, r.phi, rng);
      r.run = run_inverse(st, rng);
    } else if (engine == "jump-rate") {
      r.run = run_inverse_jump_rates(g, x0, r.phi, fk_from_field(g, r.phi, rng), rng);
    } else {
      const InverseState st = init_inverse_from_field(g, x0, r.phi, rng);
      const DiscreteInverseRun d = run_inverse_discrete(g, x0, st.counts(), rng, false);
      // The embedded chain has no clock: event times are step indices.
      for (std::size_t k = 0; k < d.popped.size(); ++k)
        r.run.events.push_back({static_cast<double>(k + 1), d.popped[k], d.kinds[k],
                                d.vertices[k], d.vertices[k + 1], -1, false, 0.0});
      r.run.terminal_time = static_cast<double>(d.popped.size());
      r.run.terminal_vertex = d.terminal_vertex;
      r.run.terminal_open = d.terminal_open;
      r.run.crossings = d.crossings;
      r.run.jumps = d.jumps;
      r.run.ended_at_root = d.ended_at_root;
      r.run.containment_violations = d.containment_violations;
    }
    return r;
  });

  Output out(ctx.opt.out);
  {
    auto f = out.open("events.csv");
    f << "replica,time,edge,kind,from,to,n_after\n";
    for (std::size_t i = 0; i < runs.size(); ++i)
      for (const InverseEvent &ev : runs[i].run.events) {
        f << i << ',' << ev.time << ',' << ev.edge << ',' << to_string(ev.kind) << ','
          << g.label(ev.from) << ',' << g.label(ev.to) << ',';
        if (ev.n_after >= 0)
          f << ev.n_after;
        f << '\n';
      }
  }
  std::size_t violations = 0;
  {
    auto f = out.open("runs.jsonl");
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const InverseRun &r = runs[i].run;
      violations += r.containment_violations + !r.ended_at_root;
      json j{{"replica", i},
             {"terminal_vertex", g.label(r.terminal_vertex)},
             {"T", r.terminal_time},
             {"jumps", r.jumps},
             {"cluster_count", clusters(g, r.terminal_open).count},
             {"terminal_open", edges_json(r.terminal_open)},
             {"crossings", r.crossings},
             {"phi", runs[i].phi}};
      f << j.dump() << '\n';
    }
  }
  std::ostringstream s;
  s << "engine: " << engine << "\nx0: " << g.label(x0) << "\nu: " << u
    << "\ninvariant violations: " << violations;
  write_summary(out, "inverse-rk", ctx, {s.str()});
  os << "wrote " << runs.size() << " inverse runs (" << engine << " engine) to "
     << out.dir().string() << '\n';
  return violations == 0 ? kOk : kRuntimeError;
}

int cmd_invert_loopsoup(Context &ctx, std::ostream &os) {
  load_graph(ctx, false);
  const Graph &g = ctx.g();
  const GffSampler gff(g, ConditionSpec::free());
  const std::vector<VertexId> en = default_enumeration(g);
  struct Record {
    FieldReal phi;
    LoopSoupSample soup;
    InverseDiagnostics diag;
  };
  const auto recs = parallel_replicas(ctx.opt.n, ctx.seed(), [&](std::size_t, Rng &rng) {
    Record r;
    r.phi = gff.sample(rng);
    r.soup = invert_loop_soup(g, r.phi, en, ctx.opt.eps, rng, &r.diag);
    return r;
  });
  Output out(ctx.opt.out);
  std::vector<LoopSoupSample> soups;
  double err = 0.0;
  std::size_t violations = 0;
  for (const Record &r : recs) {
    soups.push_back(r.soup);
    const SoupFields f = fields(r.soup);
    for (VertexId v = 0; v < g.num_vertices(); ++v)
      err = std::max(err, std::fabs(2.0 * f.occupation[v] - r.phi[v] * r.phi[v]));
    violations += r.diag.containment_violations + r.diag.wrong_terminal;
  }
  write_soups(out, g, soups);
  {
    auto f = out.open("field.csv");
    f << "replica,vertex,value\n";
    for (std::size_t i = 0; i < recs.size(); ++i)
      for (VertexId v = 0; v < g.num_vertices(); ++v)
        f << i << ',' << g.label(v) << ',' << recs[i].phi[v] << '\n';
  }
  std::ostringstream s;
  s << "enumeration: " << join_labels(g, en) << "\nmax |2L - phi^2|: " << err
    << "\ninvariant violations: " << violations;
  write_summary(out, "invert-loopsoup", ctx, {s.str()});
  os << "inverted " << recs.size() << " fields into loop soups; max |2L - phi^2| = " << err << '\n';
  return violations == 0 ? kOk : kRuntimeError;
}

int cmd_couple_fk(Context &ctx, std::ostream &os) {
  load_graph(ctx, false);
  const Graph &g = ctx.g();
  const std::string &source = ctx.opt.source;
  const GffSampler gff(g, ConditionSpec::free());
  std::optional<LoopSoupSampler> soup;
  if (source == "loopsoup")
    soup.emplace(g, default_enumeration(g), 0.5, ctx.opt.eps);
  const auto lifts = parallel_replicas(ctx.opt.n, ctx.seed(), [&](std::size_t, Rng &rng) {
    if (soup)
      return lupu_lift_loopsoup(g, soup->sample(rng), std::nullopt, rng);
    LupuLift r;
    r.phi = gff.sample(rng);
    r.open = fk_from_field(g, r.phi, rng);
    return r;
  });
  Output out(ctx.opt.out);
  {
    auto f = out.open("fk.csv");
    f << "replica,edge,open\n";
    for (std::size_t i = 0; i < lifts.size(); ++i)
      for (EdgeId e = 0; e < g.num_edges(); ++e)
        f << i << ',' << e << ',' << (lifts[i].open.contains(e) ? 1 : 0) << '\n';
  }
  {
    auto f = out.open("runs.jsonl");
    for (std::size_t i = 0; i < lifts.size(); ++i)
      f << json{{"replica", i},
                {"phi", lifts[i].phi},
                {"open", edges_json(lifts[i].open)},
                {"clusters", clusters(g, lifts[i].open).count}}
               .dump()
        << '\n';
  }
  write_summary(out, "couple-fk", ctx, {"source: " + source});
  os << "wrote " << lifts.size() << " field/FK pairs to " << out.dir().string() << '\n';
  return kOk;
}

int cmd_invert_current(Context &ctx, std::ostream &os) {
  load_graph(ctx, true);
  const Graph &g = ctx.g();
  const std::vector<double> J = ctx.couplings();
  const OpenStackLaw law = open_stack_law_from_string(ctx.opt.law);
  const DiscreteDistribution fk = fk_exact(g, J);
  struct Record {
    EdgeSet fk;
    CurrentConfig n;
  };
  const auto recs = parallel_replicas(ctx.opt.n, ctx.seed(), [&](std::size_t, Rng &rng) {
    Record r;
    r.fk = edge_set_from_indicator(fk.sample(rng));
    r.n = invert_current_from_fk(g, J, r.fk, rng, law);
    return r;
  });
  Output out(ctx.opt.out);
  std::size_t parity_failures = 0;
  {
    auto f = out.open("currents.csv");
    f << "replica,edge,fk_open,N\n";
    for (std::size_t i = 0; i < recs.size(); ++i) {
      parity_failures += !parity_ok(g, recs[i].n);
      for (EdgeId e = 0; e < g.num_edges(); ++e)
        f << i << ',' << e << ',' << (recs[i].fk.contains(e) ? 1 : 0) << ',' << recs[i].n[e]
          << '\n';
    }
  }
  std::ostringstream s;
  s << "open-edge stack law: " << to_string(law) << "\ncouplings J_e: edge conductances"
    << "\nparity failures: " << parity_failures;
  write_summary(out, "invert-current", ctx, {s.str()});
  os << "wrote " << recs.size() << " inverted currents to " << out.dir().string() << '\n';
  return parity_failures == 0 ? kOk : kRuntimeError;
}

int cmd_oracle(Context &ctx, std::ostream &os) {
  load_graph(ctx, true);
  const Graph &g = ctx.g();
  const std::vector<double> J = ctx.couplings();
  DiscreteDistribution d;
  if (ctx.opt.oracle == "ising")
    d = ising_exact(g, J);
  else if (ctx.opt.oracle == "fk")
    d = fk_exact(g, J);
  else
    d = current_exact(g, J, ctx.opt.n_max);
  Output out(ctx.opt.out);
  {
    auto f = out.open("oracle.csv");
    f << "outcome,probability\n";
    for (std::size_t i = 0; i < d.size(); ++i)
      f << DiscreteDistribution::key(d.outcomes[i]) << ',' << d.probabilities[i] << '\n';
  }
  std::ostringstream s;
  s << std::setprecision(17) << "oracle: " << ctx.opt.oracle << "\noutcomes: " << d.size()
    << "\nlog Z: " << d.log_normalizer << "\ntruncation bound: " << d.truncation_bound;
  write_summary(out, "oracle " + ctx.opt.oracle, ctx, {s.str()});
  os << s.str() << '\n';
  return kOk;
}

int cmd_verify(Context &ctx, std::ostream &os) {
  if (!ctx.opt.seed)
    throw ConfigError("verify requires --seed");
  SuiteParams p;
  p.sample_scale = ctx.opt.scale;
  p.p_threshold = ctx.opt.p_threshold;
  p.k_sigma = ctx.opt.k_sigma;
  p.n_max = ctx.opt.n_max;
  if (!(p.sample_scale > 0.0) || !(p.p_threshold > 0.0 && p.p_threshold < 1.0) ||
      !(p.k_sigma > 0.0))
    throw ConfigError("--scale, --p-threshold and --k-sigma must be positive "
                      "(p-threshold below 1)");
  std::vector<TestReport> reports;
  try {
    reports = run_suite(ctx.opt.suite, p, *ctx.opt.seed);
  } catch (const std::invalid_argument &e) {
    if (std::string(e.what()).rfind("unknown suite", 0) == 0)
      throw ConfigError(e.what());
    throw;
  }
  Output out(ctx.opt.out);
  {
    auto f = out.open("report.csv");
    f << reports_csv(reports);
  }
  const bool ok = all_pass(reports);
  const std::string text = reports_summary(reports);
  {
    auto f = out.open("summary.txt");
    f << "suite: " << ctx.opt.suite << "\nseed: " << *ctx.opt.seed << "\nscale: " << p.sample_scale
      << "\nresult: " << (ok ? "PASS" : "FAIL") << "\n\n"
      << text;
  }
  os << text;
  double runtime = 0.0;
  std::string last;
  for (const TestReport &r : reports)
    if (r.suite != last) {
      runtime += r.runtime_s;
      last = r.suite;
    }
  os << (ok ? "PASS" : "FAIL") << "  " << reports.size() << " reports, " << std::fixed
     << std::setprecision(1) << runtime << " s\n";
  return ok ? kOk : kTestFailure;
}

void add_common(CLI::App *app, Options &o, bool needs_graph, bool rooted, bool replicas) {
  if (needs_graph)
    app->add_option("--graph", o.graph, "Graph spec file (JSON)")->required();
  if (rooted) {
    app->add_option("--x0", o.x0, "Root vertex label (default: \"x0\" in the graph file)");
    app->add_option("--u", o.u,
                    "Local time at the root, u > 0 (default: \"u\" in the graph file, else 1)");
  }
  if (replicas)
    app->add_option("--n", o.n, "Number of independent replicas")
        ->default_val(1)
        ->check(CLI::PositiveNumber);
  app->add_option("--seed", o.seed, "Master seed; replica i uses a stream derived from it "
                                    "(default 1)");
  app->add_option("--out", o.out, "Output directory")->default_val("rkinv-out");
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &os, std::ostream &es) {
  CLI::App app{"rkinv: signed Ray-Knight couplings, their inversion and verification suites.\n"
               "Exit codes: 0 ok, 1 test failure, 2 config error, 3 runtime error."};
  app.name("rkinv");
  app.require_subcommand(1);
  Options o;

  auto *gff = app.add_subcommand("sample-gff", "Sample the free or pinned field; writes gff.csv");
  add_common(gff, o, true, false, true);
  gff->add_option("--pin", o.pins, "Condition on LABEL=VALUE (repeatable)");

  auto *soup = app.add_subcommand("sample-loopsoup",
                                  "Sample a loop soup; writes soup.csv, fields_vertex.csv, "
                                  "fields_edge.csv");
  add_common(soup, o, true, false, true);
  soup->add_option("--alpha", o.alpha, "Soup intensity alpha > 0")->default_val(0.5);
  soup->add_option("--eps", o.eps, "Stick-breaking truncation level")->default_val(1e-9);

  auto *fwd = app.add_subcommand("forward-rk",
                                 "Forward signed Ray-Knight coupling; writes trajectory.csv, "
                                 "fields.csv, runs.jsonl");
  add_common(fwd, o, true, true, true);

  auto *enl = app.add_subcommand("forward-enlarged",
                                 "Forward process with Poisson stacks; writes trajectory.csv, "
                                 "events.csv, runs.jsonl");
  add_common(enl, o, true, true, true);

  auto *inv = app.add_subcommand("inverse-rk",
                                 "Inverse process started from a field pinned at sqrt(2u) at x0; "
                                 "writes events.csv, runs.jsonl");
  add_common(inv, o, true, true, true);
  inv->add_option("--engine", o.engine, "Simulation engine")
      ->default_val("stack")
      ->check(CLI::IsMember({"stack", "jump-rate", "discrete"}));

  auto *ils = app.add_subcommand("invert-loopsoup",
                                 "Invert free-field samples into loop soups; writes soup.csv, "
                                 "fields_*.csv, field.csv");
  add_common(ils, o, true, false, true);
  ils->add_option("--eps", o.eps, "Stick-breaking truncation level")->default_val(1e-9);

  auto *cfk = app.add_subcommand("couple-fk", "Field and FK configuration pairs; writes fk.csv, "
                                              "runs.jsonl");
  add_common(cfk, o, true, false, true);
  cfk->add_option("--source", o.source,
                  "field: free field then FK edges; loopsoup: lift of an alpha=1/2 soup")
      ->default_val("field")
      ->check(CLI::IsMember({"field", "loopsoup"}));
  cfk->add_option("--eps", o.eps, "Stick-breaking truncation level")->default_val(1e-9);

  auto *icur = app.add_subcommand("invert-current",
                                  "Invert exact FK samples into random currents, with couplings "
                                  "J_e equal to the edge conductances; writes currents.csv");
  add_common(icur, o, true, false, true);
  icur->add_option("--law", o.law, "Stack law on open edges")
      ->default_val("shifted")
      ->check(CLI::IsMember({"shifted", "zero-truncated"}));

  auto *orc = app.add_subcommand("oracle",
                                 "Exact law by enumeration, couplings J_e equal to the edge "
                                 "conductances; writes oracle.csv");
  orc->add_option("kind", o.oracle, "ising, fk or current")
      ->required()
      ->check(CLI::IsMember({"ising", "fk", "current"}));
  add_common(orc, o, true, false, false);
  orc->add_option("--n-max", o.n_max, "Per-edge truncation of the current oracle")
      ->default_val(40)
      ->check(CLI::PositiveNumber);

  auto *ver = app.add_subcommand("verify", "Run a verification suite; writes report.csv, "
                                           "summary.txt. Exit 1 if any adjusted test fails");
  std::string suites_help = "Suite name: all";
  for (const std::string &s : suite_names())
    suites_help += ", " + s;
  ver->add_option("suite", o.suite, suites_help)->required();
  ver->add_option("--seed", o.seed, "Master seed (required)")->required();
  ver->add_option("--out", o.out, "Output directory")->default_val("rkinv-out");
  ver->add_option("--scale", o.scale, "Multiplier on every sample size")->default_val(1.0);
  ver->add_option("--p-threshold", o.p_threshold, "Per-test p-value threshold before Bonferroni")
      ->default_val(0.01);
  ver->add_option("--k-sigma", o.k_sigma, "Moment tolerance in standard errors")->default_val(4.0);
  ver->add_option("--n-max", o.n_max, "Per-edge truncation of the current oracle")
      ->default_val(40)
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, os, es);
    return code == 0 ? kOk : kConfigError;
  }

  Context ctx;
  ctx.opt = o;
  try {
    if (gff->parsed())
      return cmd_sample_gff(ctx, os);
    if (soup->parsed())
      return cmd_sample_loopsoup(ctx, os);
    if (fwd->parsed())
      return cmd_forward_rk(ctx, os);
    if (enl->parsed())
      return cmd_forward_enlarged(ctx, os);
    if (inv->parsed())
      return cmd_inverse_rk(ctx, os);
    if (ils->parsed())
      return cmd_invert_loopsoup(ctx, os);
    if (cfk->parsed())
      return cmd_couple_fk(ctx, os);
    if (icur->parsed())
      return cmd_invert_current(ctx, os);
    if (orc->parsed())
      return cmd_oracle(ctx, os);
    if (ver->parsed())
      return cmd_verify(ctx, os);
  } catch (const ConfigError &e) {
    es << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const GraphError &e) {
    es << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception &e) {
    es << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}

} // namespace rkinv::cli
