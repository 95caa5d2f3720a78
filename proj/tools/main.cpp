// shapelab: numerical laboratory for spectral shape functionals with Riesz
// repulsion. Subcommands: eval, verify, optimize, sweep, necklace, surgery,
// gen-corpus. Exit codes: 0 success, 1 check failure, 2 usage/input error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <atomic>
#include <random>
#include <thread>

#include "shapelab/functionals.hpp"
#include "shapelab/io.hpp"
#include "shapelab/shapeopt.hpp"
#include "shapelab/surgery.hpp"
#include "shapelab/version.hpp"

namespace fs = std::filesystem;
using namespace shapelab;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct GlobalOptions {
  int grid = 256;
  double box = 3.0;
  int dim = 2;
  double tol = 1e-8;
  int max_iter = 200;  // inverse-power iteration cap
  std::uint64_t seed = 7;
  std::string out = ".";
  int threads = 1;
};

GridSpec make_spec(const GlobalOptions& g) {
  return GridSpec::centered(g.dim, g.grid, g.box);
}

SolverOptions solver_of(const GlobalOptions& g) {
  SolverOptions s;
  s.tol = g.tol;
  s.max_power_iter = g.max_iter;
  return s;
}

json grid_json(const GridSpec& spec) {
  json j;
  j["dimension"] = spec.dim;
  j["cells_per_axis"] = spec.cells;
  j["spacing"] = spec.h;
  json o = json::array();
  for (int a = 0; a < spec.dim; ++a) o.push_back(spec.origin[a]);
  j["origin"] = o;
  return j;
}

void save_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << j.dump(1) << "\n";
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("invalid JSON in '" + path.string() + "': " + e.what());
  }
  return j;
}

json provenance(const GlobalOptions& g, const PenaltyParams& p) {
  json j;
  j["grid"] = grid_json(make_spec(g));
  j["tol"] = g.tol;
  j["kernel_table"] =
      RieszKernelTable::build(g.dim, p.alpha, make_spec(g)).cache_key();
  j["code_version"] = kVersion;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ",";
    row += cells[i];
  }
  row += "\n";
  return row;
}

// parse "a2=0.15" / "b3=-0.1" lists into a star boundary
StarBoundary parse_modes(const std::vector<std::string>& specs) {
  StarBoundary b;
  b.base_radius = 1.0;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || s.size() < 4 ||
        (s[0] != 'a' && s[0] != 'b'))
      throw Error("bad mode spec '" + s + "' (expected e.g. a2=0.15)");
    const bool sine = s[0] == 'b';
    const int mode = std::stoi(s.substr(1, eq - 1));
    const double amp = std::stod(s.substr(eq + 1));
    if (mode < 0 || mode > 32) throw Error("mode out of range in '" + s + "'");
    b.set_coefficient(mode, sine, amp);
  }
  return b;
}

int cmd_eval(const GlobalOptions& g, const std::string& file, double alpha,
             double eps, double eta, bool with_eigen) {
  PenaltyParams p;
  p.alpha = alpha;
  p.epsilon = eps;
  p.eta = eta;
  GridDomain dom = load_domain_any(file, make_spec(g));
  p.validate(dom.spec.dim);
  Evaluator ev(solver_of(g));
  FunctionalReport rep = ev.evaluate_all(dom, p, with_eigen);

  json payload;
  payload["measure"] = rep.measure;
  payload["energy"] = rep.energy;
  payload["riesz"] = rep.riesz;
  payload["F"] = rep.F;
  payload["G"] = rep.G;
  payload["asymmetry"] = rep.asymmetry;
  if (rep.lambda1) payload["lambda1"] = *rep.lambda1;
  if (rep.F_tilde) payload["F_tilde"] = *rep.F_tilde;
  for (const auto& [k, v] : rep.deficits) payload["deficit_" + k] = v;

  json record;
  record["format"] = "shapelab-record";
  record["version"] = 1;
  record["experiment"] = "eval";
  record["input_hash"] = dom.content_hash();
  record["payload"] = payload;
  record["provenance"] = provenance(g, p);
  std::cout << record.dump(1) << "\n";
  if (g.out != "-") {
    fs::create_directories(g.out);
    save_json(fs::path(g.out) / "eval_record.json", record);
  }
  return kExitOk;
}

int cmd_gen_corpus(const GlobalOptions& g, int count, double alpha,
                   double min_asym) {
  fs::create_directories(g.out);
  const GridSpec spec = make_spec(g);
  Evaluator ev(solver_of(g));
  json manifest;
  manifest["format"] = "shapelab-corpus";
  manifest["version"] = 1;
  manifest["seed"] = g.seed;
  manifest["alpha"] = alpha;
  manifest["grid"] = grid_json(spec);
  manifest["code_version"] = kVersion;
  json domains = json::array();
  for (int i = 0; i < count; ++i) {
    StarBoundary b =
        random_star_boundary(g.seed * 1000 + i, 2, 6, 0.08, 2.5 * min_asym);
    GridDomain dom = rasterize_star(b, spec);
    char name[32];
    std::snprintf(name, sizeof(name), "dom_%03d.dom", i);
    save_domain(fs::path(g.out) / name, dom);
    json entry;
    entry["file"] = name;
    entry["seed"] = g.seed * 1000 + i;
    entry["boundary"] = json::parse(star_to_text(b));
    entry["measure"] = measure(dom);
    entry["energy"] = ev.torsion_energy(dom);
    entry["lambda1"] = ev.eigenvalue(dom);
    entry["riesz"] = ev.riesz(dom, alpha);
    domains.push_back(entry);
  }
  manifest["domains"] = domains;
  save_json(fs::path(g.out) / "manifest.json", manifest);
  std::cout << "wrote " << count << " domains to " << g.out << "\n";
  return kExitOk;
}

int cmd_verify(const GlobalOptions& g, const std::string& corpus,
               std::vector<std::string> checks) {
  const fs::path dir(corpus);
  if (!fs::exists(dir / "manifest.json")) {
    std::cerr << "error: no corpus manifest at " << (dir / "manifest.json")
              << "\n";
    return kExitUsage;
  }
  if (checks.empty()) checks = {"sv", "fk", "riesz", "kj"};
  for (const auto& check : checks) {
    if (check != "sv" && check != "fk" && check != "riesz" && check != "kj") {
      std::cerr << "error: unknown check '" << check << "'\n";
      return kExitUsage;
    }
  }
  json manifest = load_json(dir / "manifest.json");
  const double alpha = manifest.value("alpha", 1.5);

  const double slack_sv = 1e-3 * std::abs(ball_torsion_energy_unit(g.dim));
  const double slack_fk = 1e-3 * ball_eigenvalue_unit(g.dim);
  const double slack_rz = 1e-3 * ball_riesz_energy_unit(g.dim, alpha);

  const auto& entries = manifest.at("domains");
  const int count = static_cast<int>(entries.size());
  std::vector<std::string> rows(count);
  std::vector<bool> oks(count, true);

  // the corpus cells are independent; workers write by index and the table
  // is merged in manifest order, so the output is thread-count independent
  auto work = [&](int i) {
    const auto& entry = entries[i];
    const std::string file = entry.at("file").get<std::string>();
    GridDomain dom = load_domain(dir / file);
    Evaluator ev(solver_of(g));
    std::string csv;
    bool ok_all = true;

    const double e_now = ev.torsion_energy(dom);
    if (std::abs(e_now - entry.at("energy").get<double>()) >
        1e-9 * std::abs(e_now)) {
      csv += csv_row({file, "stored_energy", format_double(e_now),
                      format_double(e_now - entry.at("energy").get<double>()),
                      "", "", "0"});
      rows[i] = csv;
      oks[i] = false;
      return;
    }

    const double asym = ev.asymmetry(dom);
    auto emit = [&](const std::string& name, double value, double deficit,
                    bool ok) {
      const std::string ratio =
          asym > 0.02 ? format_double(deficit / (asym * asym)) : "";
      csv += csv_row({file, name, format_double(value), format_double(deficit),
                      format_double(asym), ratio, ok ? "1" : "0"});
      ok_all = ok_all && ok;
    };
    for (const auto& check : checks) {
      if (check == "sv") {
        auto d = saint_venant_deficit(dom, ev);
        emit("saint_venant", d.deficit, d.deficit, d.deficit >= -slack_sv);
      } else if (check == "fk") {
        auto d = faber_krahn_deficit(dom, ev);
        emit("faber_krahn", d.deficit, d.deficit, d.deficit >= -slack_fk);
      } else if (check == "riesz") {
        auto d = riesz_deficit(dom, alpha, ev);
        emit("riesz", d.deficit, d.deficit, d.deficit >= -slack_rz);
      } else if (check == "kj") {
        auto kj = kohler_jobin_check(dom, ev);
        emit("kohler_jobin", kj.lhs, kj.lhs - kj.rhs, kj.ok);
      }
    }
    rows[i] = csv;
    oks[i] = ok_all;
  };

  const int workers = std::max(1, std::min(g.threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) work(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
          work(i);
      });
    for (auto& t : pool) t.join();
  }

  std::string csv = "domain,check,value,deficit,asymmetry,ratio,ok\n";
  bool all_ok = true;
  for (int i = 0; i < count; ++i) {
    csv += rows[i];
    all_ok = all_ok && oks[i];
  }
  fs::create_directories(g.out);
  write_text(fs::path(g.out) / "verify_summary.csv", csv);
  std::cout << csv;
  return all_ok ? kExitOk : kExitCheckFailed;
}

DescentConfig descent_config(const GlobalOptions& g, double alpha, double eps,
                             double eta, const std::string& functional,
                             const std::string& volume_mode, int K, int iters,
                             double step) {
  DescentConfig cfg;
  cfg.grid = make_spec(g);
  cfg.solver = solver_of(g);
  cfg.params.alpha = alpha;
  cfg.params.epsilon = eps;
  cfg.params.eta = eta;
  cfg.max_mode = K;
  cfg.max_iterations = iters;
  cfg.initial_step = step;
  if (functional == "F")
    cfg.objective = ObjectiveKind::kTorsion;
  else if (functional == "Ftilde")
    cfg.objective = ObjectiveKind::kEigen;
  else if (functional == "G")
    cfg.objective = ObjectiveKind::kPenalty;
  else
    throw Error("unknown functional '" + functional + "'");
  if (volume_mode == "projection")
    cfg.volume_mode = VolumeMode::kProjection;
  else if (volume_mode == "penalty")
    cfg.volume_mode = VolumeMode::kPenalty;
  else
    throw Error("unknown volume mode '" + volume_mode + "'");
  if (cfg.objective == ObjectiveKind::kPenalty)
    cfg.volume_mode = VolumeMode::kPenalty;
  return cfg;
}

std::string trace_csv(const DescentResult& res) {
  std::string csv = "iteration,F,E,V,measure,asymmetry,residual_std,step\n";
  for (const auto& row : res.trace) {
    csv += csv_row({std::to_string(row.iteration), format_double(row.objective),
                    format_double(row.energy), format_double(row.riesz),
                    format_double(row.measure), format_double(row.asymmetry),
                    format_double(row.residual_std), format_double(row.step)});
  }
  return csv;
}

int cmd_optimize(const GlobalOptions& g, const std::vector<std::string>& modes,
                 double alpha, double eps, double eta,
                 const std::string& functional, const std::string& volume_mode,
                 int K, int iters, double step, bool residual) {
  DescentConfig cfg =
      descent_config(g, alpha, eps, eta, functional, volume_mode, K, iters, step);
  cfg.trace_residual = residual;
  StarBoundary start = parse_modes(modes);
  if (cfg.volume_mode == VolumeMode::kProjection) start.scale_to_area(1.0);
  DescentResult res = descend(start, cfg);

  fs::create_directories(g.out);
  write_text(fs::path(g.out) / "trace.csv", trace_csv(res));
  save_star(fs::path(g.out) / "final_boundary.json", res.final_boundary);
  save_domain(fs::path(g.out) / "final_domain.dom",
              rasterize_star(res.final_boundary, cfg.grid));
  std::cout << "stop: " << res.stop_reason
            << " final_asymmetry=" << format_double(res.trace.back().asymmetry)
            << " iterations=" << res.trace.back().iteration << "\n";
  return kExitOk;
}

int cmd_sweep(const GlobalOptions& g, const std::vector<double>& eps_grid,
              double alpha, double eta, const std::string& functional, int K,
              int iters, double step, int seeds, double mode_amp,
              double asym_threshold) {
  if (eps_grid.empty()) {
    std::cerr << "error: empty epsilon grid\n";
    return kExitUsage;
  }
  std::string csv = "epsilon,seed,final_asymmetry,recovered\n";
  double largest_ok = -1.0, smallest_fail = -1.0;
  for (double eps : eps_grid) {
    int recovered = 0;
    for (int s = 0; s < seeds; ++s) {
      DescentConfig cfg = descent_config(g, alpha, eps, eta, functional,
                                         "projection", K, iters, step);
      std::mt19937_64 rng(g.seed + 17 * s);
      std::uniform_real_distribution<double> u(-0.03, 0.03);
      StarBoundary start;
      start.base_radius = 1.0;
      start.set_coefficient(2, false, mode_amp);
      for (int k = 3; k <= K; ++k) {
        start.set_coefficient(k, false, u(rng));
        start.set_coefficient(k, true, u(rng));
      }
      start.scale_to_area(1.0);
      DescentResult res = descend(start, cfg);
      const double a = res.trace.back().asymmetry;
      const bool ok = a < asym_threshold;
      recovered += ok;
      csv += csv_row({format_double(eps), std::to_string(s), format_double(a),
                      ok ? "1" : "0"});
    }
    if (recovered * 10 >= seeds * 9) {
      largest_ok = std::max(largest_ok, eps);
    } else if (smallest_fail < 0.0 || eps < smallest_fail) {
      smallest_fail = eps;
    }
  }
  auto nb = necklace_bounds(0.4, eps_grid.back(), g.dim, alpha,
                            std::min(g.grid, 384));
  csv += csv_row({"necklace_flip_epsilon", "", format_double(nb.flip_epsilon),
                  ""});
  fs::create_directories(g.out);
  write_text(fs::path(g.out) / "sweep_phase.csv", csv);
  std::cout << csv;
  std::cout << "threshold_bracket=[" << format_double(largest_ok) << ","
            << format_double(smallest_fail) << ")\n";
  return kExitOk;
}

int cmd_necklace(const GlobalOptions& g, double delta, double eps, double alpha,
                 bool eps_scan) {
  auto nb = necklace_bounds(delta, eps, g.dim, alpha, g.grid);
  json record;
  record["format"] = "shapelab-record";
  record["version"] = 1;
  record["experiment"] = "necklace";
  json payload;
  payload["k"] = nb.k;
  payload["ball_radius"] = nb.ball_radius;
  payload["tangent_diameter"] = nb.tangent_diameter;
  payload["E_ball"] = nb.E_ball;
  payload["V_ball"] = nb.V_ball;
  payload["E_necklace"] = nb.E_necklace;
  payload["V_necklace"] = nb.V_necklace;
  payload["numeric_ball_F"] = nb.numeric_ball_F;
  payload["numeric_necklace_F"] = nb.numeric_necklace_F;
  payload["lower_ball_side"] = nb.lower_ball_side;
  payload["upper_necklace_side"] = nb.upper_necklace_side;
  payload["necklace_wins"] = nb.necklace_wins;
  payload["alpha_in_regime"] = nb.alpha_in_regime;
  if (eps_scan) payload["flip_epsilon"] = nb.flip_epsilon;
  record["payload"] = payload;
  PenaltyParams p;
  p.alpha = alpha;
  record["provenance"] = provenance(g, p);
  std::cout << record.dump(1) << "\n";
  if (g.out != "-") {
    fs::create_directories(g.out);
    save_json(fs::path(g.out) / "necklace_record.json", record);
  }
  return kExitOk;
}

int cmd_surgery(const GlobalOptions& g, const std::string& file, double C4,
                const std::string& directions, double alpha, double eps) {
  GridDomain dom = load_domain_any(file, make_spec(g));
  PenaltyParams p;
  p.alpha = alpha;
  p.epsilon = eps;
  TailCutOptions opts;
  opts.C4 = C4;
  opts.solver = solver_of(g);

  std::string csv =
      "direction,cut,t_star,label,eps_t,delta_t,m_t,lambda_before,lambda_after,"
      "f_tilde_before,f_tilde_after,epsilon_bar,diameter\n";
  if (directions == "all") {
    // trichotomy sensitivity of the input: cond3 slice counts per direction
    // for C4 in {5, 10, 20}
    {
      EigenSolution eig0 = solve_first_eigen(dom, opts.solver);
      std::cout << "c4_sensitivity(direction:cond3@5/10/20)";
      for (const Direction& dir : Direction::sweep_order(dom.spec.dim)) {
        SliceStats stats = slice_statistics(dom, eig0, dir);
        int counts[3] = {0, 0, 0};
        const double c4s[3] = {5.0, 10.0, 20.0};
        for (std::size_t j = 0; j < stats.size(); ++j) {
          if (stats.eps_t[j] <= 0.0) continue;
          for (int k = 0; k < 3; ++k)
            counts[k] += classify_trichotomy(stats, j, c4s[k]) ==
                         TrichotomyTag::kCond3;
        }
        std::cout << " " << (dir.sign < 0 ? "-" : "+")
                  << char('x' + dir.axis) << ":" << counts[0] << "/"
                  << counts[1] << "/" << counts[2];
      }
      std::cout << "\n";
    }
    SweepResult sweep = surgery_sweep(dom, p, opts);
    for (const auto& row : sweep.log) {
      const std::string dname =
          std::string(row.direction.sign < 0 ? "-" : "+") +
          char('x' + row.direction.axis);
      csv += csv_row({dname, row.cut_performed ? "1" : "0",
                      format_double(row.t_star), row.label,
                      format_double(row.eps_t), format_double(row.delta_t),
                      format_double(row.m_t), format_double(row.lambda_before),
                      format_double(row.lambda_after),
                      format_double(row.f_tilde_before),
                      format_double(row.f_tilde_after),
                      format_double(row.epsilon_bar),
                      format_double(row.diameter_after)});
    }
    fs::create_directories(g.out);
    write_text(fs::path(g.out) / "surgery_log.csv", csv);
    save_domain(fs::path(g.out) / "surgery_result.dom", sweep.domain);
    std::cout << csv;
    std::cout << "diameter " << format_double(sweep.initial_diameter) << " -> "
              << format_double(sweep.final_diameter) << ", lambda "
              << format_double(sweep.initial_lambda) << " -> "
              << format_double(sweep.final_lambda) << "\n";
    return kExitOk;
  }
  // single direction, e.g. "-x" or "+y"
  if (directions.size() != 2 || (directions[0] != '-' && directions[0] != '+'))
    throw Error("bad directions '" + directions + "' (use all, -x, +x, ...)");
  Direction dir{directions[1] - 'x', directions[0] == '-' ? -1 : +1};
  if (dir.axis < 0 || dir.axis >= dom.spec.dim)
    throw Error("direction axis out of range");
  EigenSolution eig = solve_first_eigen(dom, opts.solver);
  TailCutResult cut = apply_tail_cut(dom, eig, dir, p, opts);
  std::cout << "cut=" << (cut.cut_performed ? "1" : "0")
            << " label=" << (cut.cut_performed ? to_string(cut.label) : "tail_short")
            << " lambda " << format_double(cut.lambda_before) << " -> "
            << format_double(cut.lambda_after) << "\n";
  if (cut.cut_performed) {
    fs::create_directories(g.out);
    save_domain(fs::path(g.out) / "surgery_result.dom", cut.rescaled_domain);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shapelab: spectral shape functionals with Riesz repulsion"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--grid", g.grid, "cells per axis")->capture_default_str();
  app.add_option("--box", g.box, "box side length")->capture_default_str();
  app.add_option("--dim", g.dim, "dimension (2 or 3)")->capture_default_str();
  app.add_option("--tol", g.tol, "solver tolerance")->capture_default_str();
  app.add_option("--max-iter", g.max_iter, "eigen iteration cap")
      ->capture_default_str();
  app.add_option("--seed", g.seed, "base random seed")->capture_default_str();
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads")->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate the functionals on a domain");
  eval->fallthrough();
  std::string eval_file;
  double alpha = 1.5, eps = 0.0, eta = 0.5;
  bool with_eigen = false;
  eval->add_option("domain", eval_file, "domain or star file")->required();
  eval->add_option("--alpha", alpha, "Riesz exponent");
  eval->add_option("--eps", eps, "repulsion strength");
  eval->add_option("--eta", eta, "penalty slope");
  eval->add_flag("--with-eigen", with_eigen, "also solve the eigenvalue");

  // verify
  auto* verify = app.add_subcommand("verify", "run the inequality corpus checks");
  verify->fallthrough();
  std::string corpus;
  std::vector<std::string> checks;
  verify->add_option("corpus", corpus, "corpus directory")->required();
  verify->add_option("--checks", checks, "subset: sv fk riesz kj");

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "generate the star-domain corpus");
  gen->fallthrough();
  int count = 20;
  double min_asym = 0.05;
  gen->add_option("--count", count, "number of domains");
  gen->add_option("--alpha", alpha, "Riesz exponent stored in the manifest");
  gen->add_option("--min-asym", min_asym, "rejection threshold on asymmetry");

  // optimize
  auto* opt = app.add_subcommand("optimize", "shape gradient descent");
  opt->fallthrough();
  std::vector<std::string> modes;
  std::string functional = "F", volume_mode = "projection";
  int K = 4, iters = 60;
  double step = 0.04;
  bool residual = false;
  opt->add_option("--mode", modes, "start coefficients, e.g. a2=0.15")
      ->required();
  opt->add_option("--alpha", alpha, "Riesz exponent");
  opt->add_option("--eps", eps, "repulsion strength");
  opt->add_option("--eta", eta, "penalty slope");
  opt->add_option("--functional", functional, "F | Ftilde | G");
  opt->add_option("--volume-mode", volume_mode, "projection | penalty");
  opt->add_option("--K", K, "max Fourier mode");
  opt->add_option("--iters", iters, "max iterations");
  opt->add_option("--step", step, "initial step");
  opt->add_flag("--residual", residual, "trace the optimality residual");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "epsilon phase sweep");
  sweep->fallthrough();
  std::vector<double> eps_grid;
  int seeds = 10;
  double mode_amp = 0.15, asym_threshold = 0.03;
  sweep->add_option("--eps-grid", eps_grid, "epsilon values")->required();
  sweep->add_option("--alpha", alpha, "Riesz exponent");
  sweep->add_option("--eta", eta, "penalty slope");
  sweep->add_option("--functional", functional, "F | Ftilde | G");
  sweep->add_option("--K", K, "max Fourier mode");
  sweep->add_option("--iters", iters, "max iterations");
  sweep->add_option("--step", step, "initial step");
  sweep->add_option("--seeds", seeds, "seeded starts per epsilon");
  sweep->add_option("--mode-amp", mode_amp, "a2 start amplitude");
  sweep->add_option("--asym-threshold", asym_threshold, "recovery threshold");

  // necklace
  auto* neck = app.add_subcommand("necklace", "ball vs necklace bounds");
  neck->fallthrough();
  double delta = 0.4;
  bool eps_scan = false;
  neck->add_option("--delta", delta, "internal ball scale")->required();
  neck->add_option("--eps", eps, "repulsion strength");
  neck->add_option("--alpha", alpha, "Riesz exponent");
  neck->add_flag("--eps-scan", eps_scan, "report the flip epsilon");

  // surgery
  auto* surg = app.add_subcommand("surgery", "tail-cutting passes");
  surg->fallthrough();
  std::string surg_file, directions = "all";
  double C4 = 10.0;
  surg->add_option("domain", surg_file, "domain file")->required();
  surg->add_option("--c4", C4, "trichotomy constant");
  surg->add_option("--directions", directions, "all | -x | +x | -y | +y");
  surg->add_option("--alpha", alpha, "Riesz exponent");
  surg->add_option("--eps", eps, "repulsion strength");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;  // stable usage-error contract
  }

  try {
    if (*eval) return cmd_eval(g, eval_file, alpha, eps, eta, with_eigen);
    if (*verify) return cmd_verify(g, corpus, checks);
    if (*gen) return cmd_gen_corpus(g, count, alpha, min_asym);
    if (*opt)
      return cmd_optimize(g, modes, alpha, eps, eta, functional, volume_mode, K,
                          iters, step, residual);
    if (*sweep)
      return cmd_sweep(g, eps_grid, alpha, eta, functional, K, iters, step,
                       seeds, mode_amp, asym_threshold);
    if (*neck) return cmd_necklace(g, delta, eps, alpha, eps_scan);
    if (*surg) return cmd_surgery(g, surg_file, C4, directions, alpha, eps);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
