#include "tcflow/bench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tcflow/dfbuilder.hpp"
#include "tcflow/lexer.hpp"
#include "tcflow/parser.hpp"

namespace tcflow {

const std::vector<std::string> kBenchWorkloads = {"blackscholes_lite", "pipeline_lite", "imbalance"};

namespace {

// Synthetic option parameters and price for a global option index. The
// interpreted body below mirrors this expression for expression, so the
// two paths agree bit for bit.
double bs_price(int64_t i) {
  double s = 10.0 + static_cast<double>(i % 100) * 0.9;
  double strk = 10.0 + static_cast<double>((i * 7 + 3) % 100) * 0.9;
  double r = 0.01 + static_cast<double>(i % 10) * 0.004;
  double v = 0.1 + static_cast<double>(i % 25) * 0.02;
  double tm = 0.2 + static_cast<double>(i % 8) * 0.35;
  double d1 = (std::log(s / strk) + (r + v * v / 2.0) * tm) / (v * std::sqrt(tm));
  double d2 = d1 - v * std::sqrt(tm);
  double nd1 = 0.5 * (1.0 + std::erf(d1 / std::sqrt(2.0)));
  double nd2 = 0.5 * (1.0 + std::erf(d2 / std::sqrt(2.0)));
  return s * nd1 - strk * std::exp(0.0 - r * tm) * nd2;
}

std::string blackscholes_source(const BenchOptions& opt) {
  uint64_t n_opts = static_cast<uint64_t>(opt.bs_tasks) * opt.bs_opts_per_task;
  std::ostringstream os;
  os << R"(// synthetic option pricing with serial read/write chains
int n_opts;
int hdr;
float zero;
treb_parout int span;
treb_parout float part;
treb_parout float acc;
float total;

n_opts = )" << n_opts
     << R"(;
zero = 0.0;

treb_super single name(bs_setup) input(n_opts) output(hdr)
#BEGINSUPER
hdr = n_opts;
#ENDSUPER

treb_super parallel name(bs_read) input(local.span::(mytid - 1), starter.hdr) output(span)
#BEGINSUPER
t = treb_get_tid();
if (t == 0) { span = hdr; } else { span = span; }
#ENDSUPER

treb_super parallel name(bs_compute) input(span::mytid) output(part)
#BEGINSUPER
t = treb_get_tid();
k = treb_get_n_tasks();
lo = span * t / k;
hi = span * (t + 1) / k;
i = lo;
part = 0.0;
while (i < hi) {
  s = 10.0 + to_float(i % 100) * 0.9;
  strk = 10.0 + to_float((i * 7 + 3) % 100) * 0.9;
  r = 0.01 + to_float(i % 10) * 0.004;
  v = 0.1 + to_float(i % 25) * 0.02;
  tm = 0.2 + to_float(i % 8) * 0.35;
  d1 = (log(s / strk) + (r + v * v / 2.0) * tm) / (v * sqrt(tm));
  d2 = d1 - v * sqrt(tm);
  nd1 = 0.5 * (1.0 + erf(d1 / sqrt(2.0)));
  nd2 = 0.5 * (1.0 + erf(d2 / sqrt(2.0)));
  part = part + (s * nd1 - strk * exp(0.0 - r * tm) * nd2);
  i = i + 1;
}
#ENDSUPER

treb_super parallel name(bs_write) input(part::mytid, local.acc::(mytid - 1), starter.zero) output(acc)
#BEGINSUPER
t = treb_get_tid();
if (t == 0) { base = zero; } else { base = acc; }
acc = base + part;
#ENDSUPER

treb_super single name(bs_close) input(acc::lasttid) output(total)
#BEGINSUPER
total = acc;
#ENDSUPER

return total;
)";
  return os.str();
}

void register_blackscholes_native(Registry& registry) {
  registry.register_super(
      "bs_compute", {{"span", "int"}}, {{"part", "float"}}, [](ExecContext& ctx) {
        int64_t span = ctx.in("span").as_int();
        int64_t t = ctx.tid(), k = ctx.n_tasks();
        int64_t lo = span * t / k, hi = span * (t + 1) / k;
        double part = 0.0;
        for (int64_t i = lo; i < hi; ++i) part = part + bs_price(i);
        ctx.set_out("part", Value::floats(part));
      });
}

std::string pipeline_source(const BenchOptions& opt) {
  std::ostringstream os;
  os << R"(// non-linear pipeline over a bag of items, block-sized tasks
int bag;
int hdr;
treb_parout int b1;
treb_parout int b2a;
treb_parout int b2b;
treb_parout int b3;
int sink;

bag = )" << opt.pl_items
     << R"(;

treb_super single name(pl_read) input(bag) output(hdr)
#BEGINSUPER
hdr = bag;
#ENDSUPER

treb_super parallel name(pl_stage1) input(hdr) output(b1)
#BEGINSUPER
t = treb_get_tid();
k = treb_get_n_tasks();
lo = hdr * t / k;
hi = hdr * (t + 1) / k;
burn_ms(to_float(hi - lo) * )"
     << format_double(opt.pl_cost_ms) << R"();
b1 = hi - lo;
#ENDSUPER

treb_super parallel name(pl_stage2a) input(b1::mytid) output(b2a)
#BEGINSUPER
burn_ms(to_float(b1) * )"
     << format_double(opt.pl_cost_ms * 2.0) << R"();
b2a = b1 * 2;
#ENDSUPER

treb_super parallel name(pl_stage2b) input(b1::mytid) output(b2b)
#BEGINSUPER
burn_ms(to_float(b1) * )"
     << format_double(opt.pl_cost_ms * 2.0) << R"();
b2b = b1 * 3;
#ENDSUPER

treb_super parallel name(pl_stage3) input(b2a::mytid, b2b::mytid) output(b3)
#BEGINSUPER
t = treb_get_tid();
if (t % 2 == 0) { x = b2a; } else { x = b2b; }
burn_ms(to_float(b2a / 2) * )"
     << format_double(opt.pl_cost_ms) << R"();
b3 = x;
#ENDSUPER

treb_super single name(pl_write) input(b3::*) output(sink)
#BEGINSUPER
n = len(b3);
i = 0;
sink = 0;
while (i < n) { sink = sink + get(b3, i); i = i + 1; }
#ENDSUPER

return sink;
)";
  return os.str();
}

std::string imbalance_source(const BenchOptions& opt) {
  std::ostringstream os;
  os << R"(// geometric task durations: early tasks dominate
int seed0;
int go;
treb_parout int w;
int done;

seed0 = 1;

treb_super single name(imb_src) input(seed0) output(go)
#BEGINSUPER
go = seed0;
#ENDSUPER

treb_super parallel name(imb_work) input(go) output(w)
#BEGINSUPER
t = treb_get_tid();
burn_ms()" << format_double(opt.imb_base_ms)
     << R"( * pow()" << format_double(opt.imb_ratio) << R"(, to_float(t)));
w = t;
#ENDSUPER

treb_super single name(imb_sink) input(w::*) output(done)
#BEGINSUPER
done = len(w);
#ENDSUPER

return done;
)";
  return os.str();
}

std::shared_ptr<const GraphIR> compile_source(const std::string& source) {
  Program prog = parse(tokenize(source));
  return std::make_shared<const GraphIR>(build_graph(prog));
}

}  // namespace

std::string workload_source(const std::string& name, const BenchOptions& opt) {
  if (name == "blackscholes_lite") return blackscholes_source(opt);
  if (name == "pipeline_lite") return pipeline_source(opt);
  if (name == "imbalance") return imbalance_source(opt);
  std::string known;
  for (const auto& w : kBenchWorkloads) known += (known.empty() ? "" : ", ") + w;
  throw CompileError("unknown workload '" + name + "'; available: " + known, {});
}

Workload build_workload(const std::string& name, const BenchOptions& opt) {
  Workload w;
  w.graph = compile_source(workload_source(name, opt));
  if (name == "blackscholes_lite") {
    register_blackscholes_native(w.registry);
    w.n_tasks = opt.bs_tasks;
  } else if (name == "pipeline_lite") {
    w.n_tasks = std::max<uint32_t>(1, (opt.pl_items + opt.pl_block - 1) / opt.pl_block);
  } else {
    w.n_tasks = opt.imb_tasks;
    w.place_all_on_pe0 = true;
  }
  return w;
}

RunOutcome run_workload_once(const Workload& w, uint32_t n_pes, bool stealing, uint64_t seed) {
  ConcreteGraph cg = expand_instances(w.graph, w.n_tasks);
  cg.n_pes = n_pes;
  RunConfig cfg;
  cfg.n_pes = n_pes;
  cfg.n_tasks = w.n_tasks;
  cfg.stealing = stealing;
  cfg.seed = seed;
  if (w.place_all_on_pe0) {
    std::vector<uint32_t> placement = default_placement(cg, n_pes);
    for (uint32_t id = 0; id < w.graph->instrs.size(); ++id)
      if (w.graph->is_parallel_super(id))
        for (uint32_t i = 0; i < cg.instance_count[id]; ++i)
          placement[cg.node_index(id, i)] = 0;
    cfg.placement = std::move(placement);
  }
  return run_program(cg, w.registry, cfg);
}

BenchReport run_bench(const std::string& name, const BenchOptions& opt) {
  Workload w = build_workload(name, opt);
  BenchReport report;
  report.workload = name;

  double base_ms = 0.0;
  for (uint32_t n_pes : opt.pes) {
    std::vector<double> times;
    uint64_t steals_at_median = 0, fired_at_median = 0;
    std::vector<std::pair<uint64_t, uint64_t>> counters;
    for (uint32_t run = 0; run < opt.runs; ++run) {
      RunOutcome out = run_workload_once(w, n_pes, opt.stealing, run);
      if (out.status != RunStatus::Stopped)
        throw std::runtime_error("workload " + name + " failed: " + out.error);
      std::string line = out.result_line();
      if (report.result_line.empty())
        report.result_line = line;
      else if (report.result_line != line)
        throw std::runtime_error("workload " + name + " produced diverging results: " +
                                 report.result_line + " vs " + line);
      times.push_back(out.wall_ms);
      uint64_t steals = 0, fired = 0;
      for (const auto& s : out.stats) {
        steals += s.steals;
        fired += s.fired;
      }
      counters.emplace_back(steals, fired);
    }
    std::vector<size_t> order(times.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return times[a] < times[b]; });
    size_t median_idx = order[order.size() / 2];
    double median = times[median_idx];
    steals_at_median = counters[median_idx].first;
    fired_at_median = counters[median_idx].second;

    if (report.points.empty()) base_ms = median;
    BenchPoint pt;
    pt.n_pes = n_pes;
    pt.median_ms = median;
    pt.speedup = report.points.empty() ? 1.0 : base_ms / median;
    pt.steals = steals_at_median;
    pt.fired = fired_at_median;
    report.points.push_back(pt);
  }
  return report;
}

std::string BenchReport::table() const {
  std::ostringstream os;
  os << "workload: " << workload << "\n";
  os << "result:   " << result_line << "\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%6s %12s %9s %8s %8s\n", "n_pes", "median_ms", "speedup",
                "steals", "fired");
  os << buf;
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%6u %12.2f %9.2f %8llu %8llu\n", p.n_pes, p.median_ms,
                  p.speedup, static_cast<unsigned long long>(p.steals),
                  static_cast<unsigned long long>(p.fired));
    os << buf;
  }
  return os.str();
}

std::string BenchReport::csv() const {
  std::ostringstream os;
  os << "workload,n_pes,median_ms,speedup,steals\n";
  for (const auto& p : points) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%u,%.3f,%.3f,%llu\n", workload.c_str(), p.n_pes,
                  p.median_ms, p.speedup, static_cast<unsigned long long>(p.steals));
    os << buf;
  }
  return os.str();
}

}  // namespace tcflow
