#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csi/config.hpp"
#include "csi/container.hpp"
#include "csi/errors.hpp"
#include "csi/imaging.hpp"
#include "csi/phantom.hpp"
#include "csi/residual.hpp"
#include "csi/solution_set.hpp"
#include "csi/solver.hpp"
#include "csi/species_model.hpp"

namespace fs = std::filesystem;
using csi::Complex;
using csi::CVector;
using csi::Json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Json vector_json(const CVector& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(complex_json(v(k)));
  return a;
}

Complex parse_complex(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw csi::FormatError("expected a number or a [re, im] pair");
}

CVector parse_vector(const Json& j) {
  if (!j.is_array()) throw csi::FormatError("expected an array of [re, im] pairs");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = parse_complex(j[k]);
  return v;
}

std::vector<double> echo_ms(const csi::AcquisitionModel& model) {
  std::vector<double> ms;
  for (double t : model.echoes().times()) ms.push_back(t * 1e3);
  return ms;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw csi::FormatError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw csi::FormatError("failed writing " + path.string());
}

void emit_json(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    write_text(out, j.dump(2) + "\n");
  }
}

csi::AcquisitionModel load_model(const std::string& path) {
  return csi::acquisition_from_json(csi::load_json_file(path));
}

Json load_optional(const std::string& path) {
  return path.empty() ? Json() : csi::load_json_file(path);
}

std::vector<Complex> scalars_of(const csi::CsirData& d) {
  if (d.header.channels != 1) throw csi::FormatError("expected a single-channel container");
  return d.values;
}

// model-info

struct ModelInfoArgs {
  std::string config;
  std::string out;
};

int run_model_info(const ModelInfoArgs& a) {
  const auto model = load_model(a.config);
  const auto sub = csi::check_submatrices_nonsingular(model);
  const auto jr = csi::check_J_full_rank(model);
  const auto structure = csi::rationalize_echoes(model.echoes());
  Json species = Json::array();
  for (const auto& s : model.species()) species.push_back(csi::species_to_json(s));
  Json j = {{"n_e", model.n_e()},
            {"n_s", model.n_s()},
            {"echo_times_ms", echo_ms(model)},
            {"hz_per_ppm", model.hz_per_ppm()},
            {"species", species},
            {"submatrix",
             {{"min_abs_det", sub.min_abs_det},
              {"worst_selection", sub.worst_selection},
              {"scale", sub.scale},
              {"selections", sub.selections},
              {"ok", sub.ok}}},
            {"j_rank",
             {{"sigma_min", jr.sigma_min}, {"sigma_max", jr.sigma_max}, {"ok", jr.ok},
              {"reason", jr.reason}}},
            {"commensurable", structure.commensurable}};
  if (structure.commensurable) {
    j["lattice_period_hz"] = csi::fieldmap_lattice(structure).period_hz;
  }
  emit_json(j, a.out);
  return 0;
}

// analyze

struct AnalyzeArgs {
  std::string config;
  std::string out;
  std::string csv;
  double lo = -2000.0;
  double hi = 2000.0;
  double step = 1.0;
};

int run_analyze(const AnalyzeArgs& a) {
  const auto model = load_model(a.config);
  const auto structure = csi::rationalize_echoes(model.echoes());
  Json report;
  report["commensurable"] = structure.commensurable;
  if (structure.commensurable) {
    const auto lattice = csi::fieldmap_lattice(structure);
    report["lattice"] = {{"period_hz", lattice.period_hz}, {"p", structure.p},
                         {"q", structure.q}, {"t_max_s", structure.t_max}};
  } else {
    report["lattice"] = nullptr;
  }
  Json zeros = Json::array();
  if (model.n_e() >= 2 * model.n_s()) {
    const auto set = csi::delta_zero_set(model, a.lo, a.hi);
    report["sigma_threshold"] = set.sigma_threshold;
    for (const auto& z : set.zeros) {
      Json phases = Json::array();
      if (z.swap_phases) {
        for (Complex p : *z.swap_phases) phases.push_back(complex_json(p));
      }
      zeros.push_back({{"eta_hz", z.eta_hz},
                       {"sigma_min", z.sigma_min},
                       {"kernel_dim", z.kernel_dim},
                       {"classification", csi::to_string(z.classification)},
                       {"phases", phases}});
    }
  } else {
    report["note"] = "zero set requires n_e >= 2 n_s";
  }
  report["zeros"] = zeros;
  emit_json(report, a.out);
  if (!a.csv.empty()) {
    const auto prof = csi::sigma_min_profile(model, a.lo, a.hi, a.step);
    std::string text = "eta_hz,sigma_min\n";
    char buf[96];
    for (std::size_t i = 0; i < prof.eta_hz.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.10g,%.17g\n", prof.eta_hz[i], prof.sigma_min[i]);
      text += buf;
    }
    write_text(a.csv, text);
  }
  return 0;
}

// solve

struct SolveArgs {
  std::string input;
  std::string out;
  std::string trajectory;
};

int run_solve(const SolveArgs& a) {
  const Json in = csi::load_json_file(a.input);
  if (!in.contains("acquisition") || !in.contains("signal")) {
    throw csi::FormatError("solve input needs acquisition and signal");
  }
  const auto model = csi::acquisition_from_json(in["acquisition"]);
  const auto op = csi::make_residual_operator(model);
  const CVector y = parse_vector(in["signal"]);
  if (y.size() != model.n_e()) throw csi::DimensionError("signal length differs from n_e");
  const Complex init = in.contains("init") ? parse_complex(in["init"]) : Complex{1.0, 0.0};
  auto cfg = csi::flow_from_json(in.value("flow", Json()));
  if (!a.trajectory.empty()) cfg.keep_trajectory = true;
  csi::RecoveryResult r;
  if (in.contains("epsilon")) {
    r = csi::regularized_constrained_flow(op, y, in.value("delta", 0.0),
                                          in["epsilon"].get<double>(), init, cfg);
  } else if (in.contains("delta")) {
    r = csi::constrained_flow(op, y, in["delta"].get<double>(), init, cfg);
  } else {
    r = csi::wirtinger_flow(op, y, init, cfg);
  }
  Json out = {{"xi_hat", complex_json(r.xi_hat)},
              {"fieldmap_hz", r.xi_hat.real()},
              {"r2star_hz", r.xi_hat.imag()},
              {"c_hat", vector_json(r.c_hat)},
              {"iterations", r.iterations},
              {"final_grad_norm", r.final_grad_norm},
              {"objective", r.objective},
              {"converged", r.converged},
              {"step", r.step},
              {"branch", csi::to_string(r.branch)},
              {"stop_reason", r.stop_reason}};
  if (r.s_hat) out["s_hat"] = vector_json(*r.s_hat);
  emit_json(out, a.out);
  if (!a.trajectory.empty()) {
    std::string text = "iteration,re_xi_hz,im_xi_hz\n";
    char buf[96];
    for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, r.trajectory[i].real(),
                    r.trajectory[i].imag());
      text += buf;
    }
    write_text(a.trajectory, text);
  }
  return 0;
}

// phantom

struct PhantomArgs {
  std::string config;
  std::string phantom;
  std::string out_dir;
};

int run_phantom(const PhantomArgs& a) {
  const auto model = load_model(a.config);
  const auto spec = csi::phantom_from_json(load_optional(a.phantom));
  const auto ph = csi::generate_phantom(spec, model);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const auto ms = echo_ms(model);
  auto sig = csi::csir_from_grid(ph.grid, ms);
  sig.header.n_s = model.n_s();
  csi::write_csir((dir / "signal.json").string(), sig.header, sig.values);
  const auto xi = csi::csir_from_scalars(ph.xi_truth, ph.grid.width, ph.grid.height, "xi_hz", ms);
  csi::write_csir((dir / "truth_xi.json").string(), xi.header, xi.values);
  auto c = csi::csir_from_vectors(ph.c_truth, ph.grid.width, ph.grid.height, "concentration", ms);
  c.header.n_s = model.n_s();
  csi::write_csir((dir / "truth_c.json").string(), c.header, c.values);
  std::vector<Complex> mask(ph.grid.size());
  for (std::size_t v = 0; v < mask.size(); ++v) mask[v] = ph.grid.mask[v] ? 1.0 : 0.0;
  const auto m = csi::csir_from_scalars(mask, ph.grid.width, ph.grid.height, "mask", ms);
  csi::write_csir((dir / "mask.json").string(), m.header, m.values);
  std::size_t masked = 0;
  for (auto b : ph.grid.mask) masked += b;
  emit_json({{"width", ph.grid.width}, {"height", ph.grid.height}, {"masked_voxels", masked},
             {"signal", (dir / "signal.json").string()}},
            "-");
  return 0;
}

// corrupt

struct CorruptArgs {
  std::string input;
  std::string config;
  std::string truth_xi;
  std::string out;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::string mismatch_species;
  double mismatch_concentration = 0.0;
  double mask_threshold = 0.05;
};

int run_corrupt(const CorruptArgs& a) {
  const auto model = load_model(a.config);
  const auto data = csi::read_csir(a.input);
  csi::ImageGrid grid = csi::grid_from_csir(data);
  grid.mask = csi::threshold_mask(grid, a.mask_threshold);
  std::vector<Complex> xi(grid.size(), Complex{0.0, 0.0});
  if (!a.truth_xi.empty()) xi = scalars_of(csi::read_csir(a.truth_xi));
  csi::CorruptionSpec spec;
  spec.sigma = a.sigma;
  if (!a.mismatch_species.empty()) {
    csi::Mismatch m{csi::species_preset(a.mismatch_species, model.hz_per_ppm()), {}};
    m.concentration.assign(grid.size(), Complex{0.0, 0.0});
    for (std::size_t v = 0; v < grid.size(); ++v) {
      if (grid.mask[v]) m.concentration[v] = a.mismatch_concentration;
    }
    spec.mismatch = std::move(m);
  }
  csi::CorruptionReport rep;
  const auto noisy = csi::corrupt(grid, model, xi, spec, a.seed, &rep);
  auto out = csi::csir_from_grid(noisy, data.header.echo_times_ms);
  out.header.n_s = data.header.n_s;
  csi::write_csir(a.out, out.header, out.values);
  emit_json({{"mean_budget", rep.mean_budget}, {"mean_realized", rep.mean_realized},
             {"output", a.out}},
            "-");
  return 0;
}

// reconstruct

struct ReconstructArgs {
  std::string input;
  std::string config;
  std::string constraint;
  std::string flow;
  std::string init_xi;
  std::string truth_c;
  std::string out_dir;
  double delta = -1.0;
  int water = -1;
  int fat = -1;
  std::string pdff_convention = "magnitude";
  int log_every = 0;
};

int run_reconstruct(const ReconstructArgs& a) {
  const auto model = load_model(a.config);
  const auto op = csi::make_residual_operator(model);
  const auto cons = csi::constraint_from_json(load_optional(a.constraint));
  csi::ReconConfig cfg;
  cfg.flow = csi::flow_from_json(load_optional(a.flow));
  cfg.log_every = a.log_every;
  const auto data = csi::read_csir(a.input);
  csi::ImageGrid grid = csi::grid_from_csir(data);
  if (grid.n_e != model.n_e()) throw csi::DimensionError("container echo count differs from n_e");
  grid.mask = csi::threshold_mask(grid, cons.mask_threshold);
  const auto constraint =
      csi::FieldmapConstraint::from_mask(grid.mask, cons.eps_on_mask_hz, cons.eps_off_mask_hz);
  auto init = csi::default_init(grid.size());
  if (!a.init_xi.empty()) init = scalars_of(csi::read_csir(a.init_xi));
  csi::ReconResult r;
  if (a.delta >= 0.0) {
    r = csi::reconstruct_noisy(grid, op, constraint, std::vector<double>(grid.size(), a.delta),
                               cfg, init);
  } else {
    r = csi::reconstruct(grid, op, constraint, cfg, init);
  }
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const auto ms = echo_ms(model);
  const auto xi = csi::csir_from_scalars(r.xi_map, grid.width, grid.height, "xi_hz", ms);
  csi::write_csir((dir / "xi_map.json").string(), xi.header, xi.values);
  auto c = csi::csir_from_vectors(r.c_map, grid.width, grid.height, "concentration", ms);
  c.header.n_s = model.n_s();
  csi::write_csir((dir / "c_map.json").string(), c.header, c.values);

  const int water = a.water >= 0 ? a.water : model.species_index("water");
  const int fat = a.fat >= 0 ? a.fat : model.species_index("fat");
  Json out = {{"iterations", r.iterations},
              {"converged", r.converged},
              {"final_grad_norm", r.final_grad_norm},
              {"constraint_violation", r.constraint_violation},
              {"objective", r.objective_trace.empty() ? 0.0 : r.objective_trace.back()}};
  if (water >= 0 && fat >= 0) {
    const auto conv = a.pdff_convention == "real" ? csi::PdffConvention::RealPart
                                                  : csi::PdffConvention::Magnitude;
    const auto pdff = csi::pdff_map(r.c_map, water, fat, 1e-12, conv);
    std::vector<Complex> pc(pdff.begin(), pdff.end());
    const auto p = csi::csir_from_scalars(pc, grid.width, grid.height, "pdff_percent", ms);
    csi::write_csir((dir / "pdff.json").string(), p.header, p.values);
  }
  if (!a.truth_c.empty()) {
    const auto truth = csi::vectors_from_csir(csi::read_csir(a.truth_c));
    if (truth.size() != r.c_map.size()) throw csi::DimensionError("truth grid differs");
    Json table = Json::array();
    for (int l = 0; l < model.n_s(); ++l) {
      std::vector<Complex> t, e;
      for (std::size_t v = 0; v < truth.size(); ++v) {
        t.push_back(truth[v](l));
        e.push_back(r.c_map[v](l));
      }
      const auto m = csi::metrics(t, e);
      table.push_back({{"quantity", model.species()[l].name()},
                       {"mse", m.mse},
                       {"snr_db", m.snr_db},
                       {"psnr_db", m.psnr_db}});
    }
    out["metrics"] = table;
  }
  write_text(dir / "metrics.json", out.dump(2) + "\n");
  emit_json(out, "-");
  return 0;
}

// metrics

struct MetricsArgs {
  std::string truth;
  std::string estimate;
  std::string out;
};

int run_metrics(const MetricsArgs& a) {
  const auto t = csi::read_csir(a.truth);
  const auto e = csi::read_csir(a.estimate);
  if (t.header.width != e.header.width || t.header.height != e.header.height ||
      t.header.channels != e.header.channels) {
    throw csi::DimensionError("containers differ in shape");
  }
  const int ch = t.header.channels;
  Json table = Json::array();
  for (int k = 0; k < ch; ++k) {
    std::vector<Complex> tv, ev;
    for (std::size_t i = k; i < t.values.size(); i += ch) {
      tv.push_back(t.values[i]);
      ev.push_back(e.values[i]);
    }
    const auto m = csi::metrics(tv, ev);
    table.push_back({{"channel", k}, {"mse", m.mse}, {"snr_db", m.snr_db}, {"psnr_db", m.psnr_db}});
  }
  emit_json({{"quantity", t.header.quantity}, {"metrics", table}}, a.out);
  return 0;
}

// experiment

struct ExperimentArgs {
  std::string kind;
  std::string config;
  std::string phantom;
  std::string out_dir;
  double lo = -1000.0;
  double hi = 1000.0;
  double step = 0.5;
  int stride = 4;
};

int run_experiment(const ExperimentArgs& a) {
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const auto model = load_model(a.config);
  char buf[160];
  if (a.kind == "solution-set") {
    const std::vector<int> counts = {4, 6, 7, 8};
    const double first = model.echoes().first();
    const double spacing = model.n_e() > 1 ? model.echoes().times()[1] - first : first;
    const auto scan = csi::echo_error_scan(first, spacing, counts, a.lo, a.hi, a.step);
    std::string text = "phi_hz";
    for (int n : counts) text += ",error_ne" + std::to_string(n);
    text += "\n";
    for (std::size_t j = 0; j < scan.phi_hz.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.10g", scan.phi_hz[j]);
      text += buf;
      for (const auto& row : scan.error) {
        std::snprintf(buf, sizeof buf, ",%.17g", row[j]);
        text += buf;
      }
      text += "\n";
    }
    write_text(dir / "echo_error.csv", text);
    AnalyzeArgs an{a.config, (dir / "zeros.json").string(), (dir / "sigma_min.csv").string(),
                   a.lo, a.hi, a.step};
    return run_analyze(an);
  }
  if (a.kind == "curvature") {
    const auto op = csi::make_residual_operator(model);
    const auto ph = csi::generate_phantom(csi::phantom_from_json(load_optional(a.phantom)), model);
    csi::CurvatureOptions opts;
    opts.profile_radii = {0.25, 0.5, 1, 2, 4, 8, 16, 32, 64, 128};
    const auto maps = csi::experiment_curvature(ph, op, opts, a.stride);
    std::string text =
        "x,y,lambert_hz,loose_hz,tight_hz,empirical_hz,half_hz,figure_of_merit\n";
    std::string prof = "x,y,radius_hz,q\n";
    for (std::size_t i = 0; i < maps.voxel.size(); ++i) {
      const int x = maps.voxel[i] % maps.width;
      const int y = maps.voxel[i] / maps.width;
      const auto& r = maps.reports[i];
      std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", x, y,
                    r.radius_lambert_hz, r.radius_loose_hz, r.radius_tight_hz,
                    r.radius_empirical_hz, r.radius_half_hz, r.figure_of_merit);
      text += buf;
      for (const auto& [rad, q] : r.q_profile) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g\n", x, y, rad, q);
        prof += buf;
      }
    }
    write_text(dir / "curvature.csv", text);
    write_text(dir / "q_profile.csv", prof);
    emit_json({{"voxels", maps.voxel.size()}, {"out_dir", dir.string()}}, "-");
    return 0;
  }
  throw csi::SpecError("unknown experiment '" + a.kind + "'");
}

void print_error(const std::string& code, const std::string& message) {
  std::cerr << Json({{"error", code}, {"message", message}}).dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chemical-shift-encoded MRI parameter recovery"};
  app.require_subcommand(1);

  ModelInfoArgs mi;
  auto* c_mi = app.add_subcommand("model-info", "Summarize an acquisition model");
  c_mi->add_option("-c,--config", mi.config, "Acquisition config JSON")->required();
  c_mi->add_option("-o,--out", mi.out, "Output JSON (default stdout)");

  AnalyzeArgs an;
  auto* c_an = app.add_subcommand("analyze", "Fieldmap lattice and Delta zero set");
  c_an->add_option("-c,--config", an.config, "Acquisition config JSON")->required();
  c_an->add_option("-o,--out", an.out, "Report JSON (default stdout)");
  c_an->add_option("--csv", an.csv, "sigma_min profile CSV");
  c_an->add_option("--lo", an.lo, "Band start (Hz)");
  c_an->add_option("--hi", an.hi, "Band end (Hz)");
  c_an->add_option("--step", an.step, "CSV grid step (Hz)")->check(CLI::PositiveNumber);

  SolveArgs so;
  auto* c_so = app.add_subcommand("solve", "Single-voxel recovery");
  c_so->add_option("-i,--input", so.input, "Solve input JSON")->required();
  c_so->add_option("-o,--out", so.out, "Result JSON (default stdout)");
  c_so->add_option("--trajectory", so.trajectory, "Trajectory CSV");

  PhantomArgs ph;
  auto* c_ph = app.add_subcommand("phantom", "Generate an in-silico phantom");
  c_ph->add_option("-c,--config", ph.config, "Acquisition config JSON")->required();
  c_ph->add_option("-p,--phantom", ph.phantom, "Phantom config JSON");
  c_ph->add_option("-o,--out-dir", ph.out_dir, "Output directory")->required();

  CorruptArgs co;
  auto* c_co = app.add_subcommand("corrupt", "Add noise and model mismatch");
  c_co->add_option("-i,--input", co.input, "Signal container")->required();
  c_co->add_option("-c,--config", co.config, "Acquisition config JSON")->required();
  c_co->add_option("--truth-xi", co.truth_xi, "Fieldmap container for the mismatch term");
  c_co->add_option("-o,--out", co.out, "Output container")->required();
  c_co->add_option("--sigma", co.sigma, "Noise standard deviation")->check(CLI::NonNegativeNumber);
  c_co->add_option("--seed", co.seed, "RNG seed");
  c_co->add_option("--mismatch-species", co.mismatch_species, "Unmodeled species preset");
  c_co->add_option("--mismatch-concentration", co.mismatch_concentration,
                   "Unmodeled concentration on the mask");
  c_co->add_option("--mask-threshold", co.mask_threshold, "Relative mask threshold");

  ReconstructArgs re;
  auto* c_re = app.add_subcommand("reconstruct", "Constrained image reconstruction");
  c_re->add_option("-i,--input", re.input, "Signal container")->required();
  c_re->add_option("-c,--config", re.config, "Acquisition config JSON")->required();
  c_re->add_option("--constraint", re.constraint, "Constraint config JSON");
  c_re->add_option("--flow", re.flow, "Flow config JSON");
  c_re->add_option("--init-xi", re.init_xi, "Initial fieldmap container");
  c_re->add_option("--truth-c", re.truth_c, "Truth concentrations for metrics");
  c_re->add_option("--delta", re.delta, "Per-voxel noise radius; enables the noisy solver");
  c_re->add_option("--water-index", re.water, "Species index used as water in PDFF");
  c_re->add_option("--fat-index", re.fat, "Species index used as fat in PDFF");
  c_re->add_option("--pdff", re.pdff_convention, "PDFF convention")
      ->check(CLI::IsMember({"magnitude", "real"}));
  c_re->add_option("--log-every", re.log_every, "Progress log interval");
  c_re->add_option("-o,--out-dir", re.out_dir, "Output directory")->required();

  MetricsArgs me;
  auto* c_me = app.add_subcommand("metrics", "Error metrics between two containers");
  c_me->add_option("--truth", me.truth, "Truth container")->required();
  c_me->add_option("--estimate", me.estimate, "Estimate container")->required();
  c_me->add_option("-o,--out", me.out, "Output JSON (default stdout)");

  ExperimentArgs ex;
  auto* c_ex = app.add_subcommand("experiment", "Write experiment data files");
  c_ex->add_option("kind", ex.kind, "solution-set | curvature")
      ->required()
      ->check(CLI::IsMember({"solution-set", "curvature"}));
  c_ex->add_option("-c,--config", ex.config, "Acquisition config JSON")->required();
  c_ex->add_option("-p,--phantom", ex.phantom, "Phantom config JSON");
  c_ex->add_option("-o,--out-dir", ex.out_dir, "Output directory")->required();
  c_ex->add_option("--lo", ex.lo, "Scan start (Hz)");
  c_ex->add_option("--hi", ex.hi, "Scan end (Hz)");
  c_ex->add_option("--step", ex.step, "Scan step (Hz)")->check(CLI::PositiveNumber);
  c_ex->add_option("--stride", ex.stride, "Voxel stride")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what());
    return kExitInput;
  }

  try {
    if (*c_mi) return run_model_info(mi);
    if (*c_an) return run_analyze(an);
    if (*c_so) return run_solve(so);
    if (*c_ph) return run_phantom(ph);
    if (*c_co) return run_corrupt(co);
    if (*c_re) return run_reconstruct(re);
    if (*c_me) return run_metrics(me);
    if (*c_ex) return run_experiment(ex);
  } catch (const csi::Error& e) {
    print_error(e.code(), e.what());
    return e.kind() == csi::ErrorKind::Input ? kExitInput : kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    print_error("FormatError", e.what());
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    print_error("FormatError", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return kExitNumerical;
  }
  return kExitInput;
}
