// Command-line driver: compile annotated sources to dataflow assembly,
// execute assembly on the virtual machine, and run the benchmark corpus.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "tcflow/assembly.hpp"
#include "tcflow/bench.hpp"
#include "tcflow/dfbuilder.hpp"
#include "tcflow/lexer.hpp"
#include "tcflow/parser.hpp"
#include "tcflow/runtime.hpp"

namespace fs = std::filesystem;
using namespace tcflow;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CompileError("cannot open '" + path + "'", {});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CompileError("cannot write '" + path + "'", {});
  out << text;
}

int cmd_build(const std::string& source_path, bool want_dot, bool want_skeleton,
              const std::string& out_dir) {
  std::string source;
  std::vector<Diagnostic> warnings;
  try {
    source = read_file(source_path);
    Program prog = parse(tokenize(source));
    GraphIR g = build_graph(prog, &warnings);
    for (const auto& w : warnings)
      std::cerr << source_path << ":" << w.loc.to_string() << ": " << w.to_string() << "\n";

    fs::path base = fs::path(source_path).stem();
    fs::path dir = out_dir.empty() ? fs::path(source_path).parent_path() : fs::path(out_dir);
    write_file((dir / base).string() + ".fl", emit_assembly(g));
    if (want_dot) write_file((dir / base).string() + ".dot", emit_dot(g));
    if (want_skeleton) write_file((dir / base).string() + ".skel", emit_skeleton(g));
    return 0;
  } catch (const CompileError& e) {
    std::cerr << source_path << ":" << e.diag().loc.to_string() << ": error: "
              << e.diag().message << "\n";
    return 1;
  }
}

bool parse_placement_file(const std::string& path, const ConcreteGraph& cg,
                          std::vector<uint32_t>& placement, std::string& error) {
  std::ifstream in(path);
  if (!in) {
    error = "cannot open placement file '" + path + "'";
    return false;
  }
  std::string line;
  uint32_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::string node_field;
    uint32_t pe;
    if (!(ss >> node_field >> pe)) {
      error = path + ":" + std::to_string(line_no) + ": malformed placement line";
      return false;
    }
    try {
      size_t dot = node_field.find('.');
      if (dot == std::string::npos) {
        uint32_t tmpl = std::stoul(node_field);
        if (tmpl >= cg.instance_count.size()) throw std::out_of_range("node");
        for (uint32_t i = 0; i < cg.instance_count[tmpl]; ++i)
          placement[cg.node_index(tmpl, i)] = pe;
      } else {
        uint32_t tmpl = std::stoul(node_field.substr(0, dot));
        uint32_t inst = std::stoul(node_field.substr(dot + 1));
        if (tmpl >= cg.instance_count.size() || inst >= cg.instance_count[tmpl])
          throw std::out_of_range("node");
        placement[cg.node_index(tmpl, inst)] = pe;
      }
    } catch (const std::exception&) {
      error = path + ":" + std::to_string(line_no) + ": unknown node '" + node_field + "'";
      return false;
    }
  }
  return true;
}

int cmd_run(const std::string& fl_path, uint32_t n_pes, std::optional<uint32_t> n_tasks,
            bool no_steal, const std::string& placement_path, bool trace, uint64_t seed,
            const std::vector<std::string>& args, bool no_validate) {
  try {
    GraphIR g = parse_assembly(read_file(fl_path), /*validate=*/!no_validate);
    auto shared = std::make_shared<const GraphIR>(std::move(g));

    RunConfig cfg;
    cfg.n_pes = n_pes;
    cfg.n_tasks = n_tasks;
    cfg.stealing = !no_steal;
    cfg.trace = trace;
    cfg.seed = seed;
    cfg.argv = args;

    uint32_t tasks = cfg.n_tasks.value_or(cfg.n_pes);
    ConcreteGraph cg = expand_instances(shared, tasks);
    cg.n_pes = cfg.n_pes;

    if (!placement_path.empty()) {
      std::vector<uint32_t> placement = default_placement(cg, cfg.n_pes);
      std::string error;
      if (!parse_placement_file(placement_path, cg, placement, error)) {
        std::cerr << error << "\n";
        return 1;
      }
      cfg.placement = std::move(placement);
    }

    RunOutcome out = run_program(cg, Registry::empty(), cfg);
    for (const auto& line : out.trace) std::cout << line << "\n";
    if (out.status == RunStatus::Stopped) {
      std::cout << out.result_line() << "\n";
      for (uint32_t p = 0; p < out.stats.size(); ++p)
        std::cout << "STATS pe=" << p << " fired=" << out.stats[p].fired
                  << " steals=" << out.stats[p].steals << " sent=" << out.stats[p].sent << "\n";
      return 0;
    }
    std::cerr << out.error << "\n";
    return out.status == RunStatus::Deadlock ? 2 : 1;
  } catch (const CompileError& e) {
    std::cerr << fl_path << ": " << e.what() << "\n";
    return 1;
  }
}

int cmd_bench(const std::string& workload, BenchOptions opt, bool csv) {
  try {
    BenchReport report = run_bench(workload, opt);
    std::cout << (csv ? report.csv() : report.table());
    return 0;
  } catch (const CompileError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coarse-grained dataflow toolchain"};
  app.require_subcommand(1);

  // build
  std::string source_path, out_dir;
  bool want_dot = false, want_skeleton = false;
  auto* build = app.add_subcommand("build", "compile a .tc source to .fl assembly");
  build->add_option("source", source_path, "annotated source file")->required();
  build->add_flag("--dot", want_dot, "also write the Graphviz rendering");
  build->add_flag("--skeleton", want_skeleton, "also write the native-registry stub listing");
  build->add_option("-o,--out-dir", out_dir, "output directory (default: next to the source)");

  // run
  std::string fl_path, placement_path;
  uint32_t n_pes = std::max(1u, std::thread::hardware_concurrency());
  std::optional<uint32_t> n_tasks;
  uint32_t n_tasks_raw = 0;
  bool no_steal = false, trace = false, no_validate = false;
  uint64_t seed = 0;
  std::vector<std::string> prog_args;
  auto* run = app.add_subcommand("run", "execute a .fl program on the virtual machine");
  run->add_option("program", fl_path, "assembly file")->required();
  run->add_option("-p,--pes", n_pes, "number of processing elements (default: machine cores)");
  auto* tasks_opt = run->add_option("-t,--tasks", n_tasks_raw, "parallel task count (default: PEs)");
  run->add_flag("--no-steal", no_steal, "disable work stealing");
  run->add_option("--placement", placement_path, "placement file: 'node pe' per line");
  run->add_flag("--trace", trace, "print FIRE/STEAL events");
  run->add_option("--seed", seed, "victim-selection seed");
  run->add_option("--args", prog_args, "arguments forwarded to treb_argv");
  run->add_flag("--no-validate", no_validate, "skip graph validation (expert use)");

  // bench
  std::string workload;
  BenchOptions bopt;
  bool csv = false;
  std::string pes_list = "1,2,4";
  auto* bench = app.add_subcommand("bench", "run a synthetic workload and report scaling");
  bench->add_option("workload", workload, "blackscholes_lite | pipeline_lite | imbalance")
      ->required();
  bench->add_option("--pes", pes_list, "comma-separated PE sweep (default 1,2,4)");
  bench->add_option("--runs", bopt.runs, "runs per point, median reported (default 5)");
  bench->add_flag("--no-steal", no_steal, "disable work stealing");
  bench->add_flag("--csv", csv, "CSV output");
  bench->add_option("--opts-per-task", bopt.bs_opts_per_task, "blackscholes options per task");
  bench->add_option("--tasks", bopt.bs_tasks, "blackscholes task count");
  bench->add_option("--items", bopt.pl_items, "pipeline item count");
  bench->add_option("--block", bopt.pl_block, "pipeline items per task (default 5)");
  bench->add_option("--cost-ms", bopt.pl_cost_ms, "pipeline per-item stage cost");
  bench->add_option("--imb-tasks", bopt.imb_tasks, "imbalance task count");
  bench->add_option("--imb-base-ms", bopt.imb_base_ms, "imbalance heaviest task duration");
  bench->add_option("--imb-ratio", bopt.imb_ratio, "imbalance geometric ratio");

  CLI11_PARSE(app, argc, argv);

  if (build->parsed()) return cmd_build(source_path, want_dot, want_skeleton, out_dir);
  if (run->parsed()) {
    if (*tasks_opt) n_tasks = n_tasks_raw;
    return cmd_run(fl_path, n_pes, n_tasks, no_steal, placement_path, trace, seed, prog_args,
                   no_validate);
  }
  if (bench->parsed()) {
    bopt.stealing = !no_steal;
    bopt.pes.clear();
    std::istringstream ss(pes_list);
    std::string item;
    while (std::getline(ss, item, ',')) bopt.pes.push_back(std::stoul(item));
    return cmd_bench(workload, bopt, csv);
  }
  return 1;
}
