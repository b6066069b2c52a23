// piperoute command-line entry point.

#include <piperoute/cli.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitNoSolution = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitInput = 4;

}  // namespace

int main(int argc, char** argv) {
  using namespace piperoute;
  CLI::App app{"Frenet-frame pipe routing with reinforcement learning"};
  app.require_subcommand(1);

  RunConfig rc;
  long long steps = 0;
  int workers = 1;
  std::string len_normalized;
  std::string rl_path, reward_path;
  bool quiet = false;
  auto* route = app.add_subcommand("route", "train a routing policy and export the best path");
  route->add_option("--scene", rc.scene_path, "scene JSON")->required()->check(CLI::ExistingFile);
  route->add_option("--route", rc.route, "port pair name (default: first)");
  route->add_option("--machine", rc.machine_path, "machine config JSON")->check(CLI::ExistingFile);
  route->add_option("--seed", rc.seed, "random seed")->required();
  route->add_option("--steps", steps, "environment steps (default: RL config total_steps)");
  route->add_option("--workers", workers, "rollout workers")->check(CLI::PositiveNumber);
  route->add_option("--out", rc.out_dir, "output directory")->required();
  route->add_option("--len-normalized", len_normalized, "divide the length reward by s_max (true/false)")
      ->check(CLI::IsMember({"true", "false"}));
  route->add_option("--rl-config", rl_path, "RL config overrides JSON")->check(CLI::ExistingFile);
  route->add_option("--reward-config", reward_path, "reward weight overrides JSON")->check(CLI::ExistingFile);
  route->add_flag("--quiet", quiet, "no per-update progress");

  EvalConfig ec;
  auto* eval = app.add_subcommand("eval", "layout report (PL, CFI, MVR, l_align) for a polyline");
  eval->add_option("polyline", ec.polyline_path, "polyline CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--scene", ec.scene_path, "scene JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--route", ec.route, "port pair name");
  eval->add_option("--machine", ec.machine_path, "machine config JSON")->check(CLI::ExistingFile);
  eval->add_option("--s-max", ec.s_max, "alignment distance scale, mm")->check(CLI::PositiveNumber);
  eval->add_option("--out", ec.out_path, "write the report JSON here");

  std::string export_in, export_machine, export_out;
  auto* exp = app.add_subcommand("export-machine", "bending-die trajectory from a profile or polyline CSV");
  exp->add_option("input", export_in, "profile or polyline CSV")->required()->check(CLI::ExistingFile);
  exp->add_option("--machine", export_machine, "machine config JSON")->check(CLI::ExistingFile);
  exp->add_option("--out", export_out, "output CSV (default: stdout)");

  std::string cmp_a, cmp_b, cmp_out;
  double eps = kDefaultSimilarityEps;
  auto* cmp = app.add_subcommand("compare", "similarity of two trajectories (LCSS, Frechet, DTW, EDR)");
  cmp->add_option("a", cmp_a, "first trajectory CSV")->required()->check(CLI::ExistingFile);
  cmp->add_option("b", cmp_b, "second trajectory CSV")->required()->check(CLI::ExistingFile);
  cmp->add_option("--eps", eps, "match tolerance, mm")->check(CLI::NonNegativeNumber);
  cmp->add_option("--out", cmp_out, "write the report JSON here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*route) {
      if (!rl_path.empty()) rc.rl_overrides = read_json_file(rl_path);
      if (!reward_path.empty()) rc.reward_overrides = read_json_file(reward_path);
      if (steps > 0) rc.rl_overrides["total_steps"] = steps;
      rc.rl_overrides["workers"] = workers;
      if (!len_normalized.empty()) rc.reward_overrides["len_normalized"] = len_normalized == "true";
      const RunArtifacts art = cmd_route(rc, quiet ? nullptr : &std::cerr);
      if (!art.trajectory_note.empty()) std::cerr << "trajectory not written: " << art.trajectory_note << '\n';
      if (!art.done) {
        std::cerr << "no episode reached the target; see " << art.training_log_csv.string() << '\n';
        return kExitNoSolution;
      }
      std::cout << to_json(art.report).dump(2) << '\n';
      return 0;
    }
    if (*eval) {
      std::cout << to_json(cmd_eval(ec)).dump(2) << '\n';
      return 0;
    }
    if (*exp) {
      const std::string csv = cmd_export_machine(export_in, export_machine);
      if (export_out.empty()) {
        std::cout << csv;
      } else {
        write_text_file(export_out, csv);
      }
      return 0;
    }
    if (*cmp) {
      const std::string rep = to_json(cmd_compare(cmp_a, cmp_b, eps)).dump(2) + "\n";
      if (!cmp_out.empty()) write_text_file(cmp_out, rep);
      std::cout << rep;
      return 0;
    }
  } catch (const numeric_fault& e) {
    std::cerr << "numeric fault: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const domain_error& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitUsage;
}
