// Command-line front end: batch runs, the planning service, synthetic
// environment fields, allocation and heatmap rendering.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "searchplan/allocation.hpp"
#include "searchplan/io/png.hpp"
#include "searchplan/io/snapshot.hpp"
#include "searchplan/pipeline/config.hpp"
#include "searchplan/pipeline/run.hpp"
#include "searchplan/pipeline/service.hpp"
#include "searchplan/synthetic.hpp"

namespace sp = searchplan;

namespace {

int cmd_run(const std::string& config_path, int workers) {
  sp::pipeline::RunConfig config = sp::pipeline::load_run_config(config_path);
  if (workers > 0) config.workers = static_cast<unsigned>(workers);
  const auto result = sp::pipeline::run(config);
  const auto& m = result.manifest;
  for (const auto& s : m["stages"]) {
    std::cout << std::left << std::setw(24) << s["stage"].get<std::string>() << std::right << std::fixed
              << std::setprecision(2) << std::setw(9) << s["seconds"].get<double>() << " s";
    if (s.contains("digest")) std::cout << "  " << s["digest"].get<std::string>().substr(0, 16);
    std::cout << '\n';
  }
  if (m.contains("beacon_failure_probability")) {
    std::cout << "beacon failure probability: prior " << std::setprecision(4)
              << m["beacon_failure_probability"]["prior"].get<double>() << ", posterior "
              << m["beacon_failure_probability"]["posterior"].get<double>() << '\n';
  }
  std::cout << "output: " << config.output_path().string() << '\n';
  if (!result.ok()) {
    std::cerr << "run failed at stage '" << m.value("failed_stage", "") << "': " << m.value("error", "") << '\n';
    return 1;
  }
  return 0;
}

int cmd_serve(const std::string& config_path, const std::string& host, int port) {
  sp::pipeline::PlanningService service(sp::pipeline::load_run_config(config_path));
  std::cout << "serving /v1/ on " << host << ':' << port << std::endl;
  return service.listen(host, port) ? 0 : 1;
}

struct EnvgenOptions {
  std::string kind = "current";
  std::string pattern = "uniform";
  double lat = 2.98, lon = -30.59;
  double u = 0.0, v = 0.0, omega = 0.0;
  double half_width_nm = 60.0, spacing_nm = 10.0;
  std::string start = "2009-06-01T00:00:00Z";
  double hours = 240.0, step_hours = 6.0;
  std::string out;
  bool append = false;
};

int cmd_envgen(const EnvgenOptions& o) {
  const sp::SyntheticGrid grid{{o.lat, o.lon}, o.half_width_nm, o.spacing_nm, sp::parse_iso8601(o.start), o.hours,
                               o.step_hours};
  const auto kind = sp::field_kind_from_string(o.kind);
  sp::VelocityField field = o.pattern == "gyre" ? sp::gyre_field(kind, grid, o.omega)
                          : o.pattern == "uniform"
                              ? sp::uniform_field(kind, grid, {o.u, o.v})
                              : throw std::invalid_argument("pattern must be 'uniform' or 'gyre'");
  if (o.out.empty() || o.out == "-") {
    sp::write_velocity_field(std::cout, field, !o.append);
    return 0;
  }
  std::ofstream out(o.out, o.append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + o.out);
  sp::write_velocity_field(out, field, !o.append);
  return 0;
}

/// Cell prior CSV: `cell_id,p,rho`.
int cmd_allocate(const std::string& prior_path, double budget, const std::string& out_path) {
  std::ifstream in(prior_path);
  if (!in) throw std::invalid_argument("cannot open " + prior_path);
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "cell_id,p,rho") throw std::invalid_argument("cell prior header must be 'cell_id,p,rho'");
  std::vector<std::string> ids;
  sp::CellPrior prior;
  std::vector<sp::DetectionFunction> det;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, p, rho;
    std::getline(ss, id, ',');
    std::getline(ss, p, ',');
    std::getline(ss, rho, ',');
    ids.push_back(id);
    prior.p.push_back(std::stod(p));
    det.emplace_back(sp::ExponentialDetection{rho.empty() ? 1.0 : std::stod(rho)});
  }
  const sp::Allocation alloc = sp::optimize(prior, det, budget);
  const sp::AllocationValue value = sp::evaluate(alloc, prior, det);

  std::ostringstream csv;
  csv << "cell_id,effort,detection_probability\n" << std::setprecision(17);
  for (std::size_t j = 0; j < ids.size(); ++j)
    csv << ids[j] << ',' << alloc.effort[j] << ',' << sp::detection_probability(det[j], alloc.effort[j]) << '\n';
  if (out_path.empty() || out_path == "-") {
    std::cout << csv.str();
  } else {
    std::ofstream out(out_path);
    out << csv.str();
  }
  std::cout << std::setprecision(12) << "achieved_probability=" << value.probability << " cost=" << value.cost
            << " budget=" << budget << '\n';
  return 0;
}

struct HeatmapOptions {
  std::string snapshot;
  std::string config;
  double lat = 2.98, lon = -30.59;
  double half_width_nm = 40.0;
  double cell_nm = 2.0;
  std::string out = "heatmap.png";
  std::string csv;
};

int cmd_heatmap(const HeatmapOptions& o) {
  const sp::ParticleSet ps = sp::io::read_snapshot(o.snapshot);
  const sp::GridSpec grid = o.config.empty()
                                ? sp::GridSpec::centered({o.lat, o.lon}, sp::nm_to_m(o.half_width_nm), sp::nm_to_m(o.cell_nm))
                                : sp::pipeline::load_run_config(o.config).grid();
  const sp::CellProbabilityMap map = sp::grid_aggregate(ps, grid);
  const sp::GrayImage img = sp::render_heatmap(map);
  std::ofstream out(o.out, std::ios::binary);
  if (o.out.size() > 4 && o.out.substr(o.out.size() - 4) == ".pgm") sp::write_pgm(out, img);
  else out << sp::io::encode_png(img);
  if (!o.csv.empty()) {
    std::ofstream c(o.csv);
    sp::write_map_csv(c, map);
  }
  std::cout << "wrote " << o.out << " (" << img.width << "x" << img.height << "), off-extent mass " << map.off_extent
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian search planning: priors, drift, posteriors and effort allocation"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 0;
  auto* run = app.add_subcommand("run", "Run the batch pipeline described by a config file");
  run->add_option("config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "Worker threads (overrides the config)");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve interactive planning sessions over HTTP");
  serve->add_option("config", config_path, "Base run configuration (JSON)")->required()->check(CLI::ExistingFile);
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--host", host, "Listen address");

  EnvgenOptions env;
  auto* envgen = app.add_subcommand("envgen", "Write a synthetic wind or current field as CSV");
  envgen->add_option("--kind", env.kind, "wind | current");
  envgen->add_option("--pattern", env.pattern, "uniform | gyre");
  envgen->add_option("--lat", env.lat, "Grid center latitude");
  envgen->add_option("--lon", env.lon, "Grid center longitude");
  envgen->add_option("--u", env.u, "Uniform east component, knots");
  envgen->add_option("--v", env.v, "Uniform north component, knots");
  envgen->add_option("--omega", env.omega, "Gyre angular rate, rad/hour (counterclockwise positive)");
  envgen->add_option("--half-width-nm", env.half_width_nm, "Grid half width, NM");
  envgen->add_option("--spacing-nm", env.spacing_nm, "Grid point spacing, NM");
  envgen->add_option("--start", env.start, "First grid time (ISO-8601)");
  envgen->add_option("--hours", env.hours, "Time span, hours");
  envgen->add_option("--step-hours", env.step_hours, "Grid time step, hours");
  envgen->add_option("--out", env.out, "Output CSV (default stdout)");
  envgen->add_flag("--append", env.append, "Append rows without a header");

  std::string prior_path, alloc_out;
  double budget = 0.0;
  auto* allocate = app.add_subcommand("allocate", "Optimal effort allocation over a cell prior");
  allocate->add_option("--prior", prior_path, "Cell prior CSV (cell_id,p,rho)")->required()->check(CLI::ExistingFile);
  allocate->add_option("--budget", budget, "Effort budget, hours")->required();
  allocate->add_option("--out", alloc_out, "Allocation CSV (default stdout)");

  HeatmapOptions hm;
  auto* heatmap = app.add_subcommand("heatmap", "Render a particle snapshot as a grayscale heatmap");
  heatmap->add_option("snapshot", hm.snapshot, "Particle snapshot CSV")->required()->check(CLI::ExistingFile);
  heatmap->add_option("--config", hm.config, "Take the grid from a run configuration");
  heatmap->add_option("--lat", hm.lat, "Grid center latitude");
  heatmap->add_option("--lon", hm.lon, "Grid center longitude");
  heatmap->add_option("--half-width-nm", hm.half_width_nm, "Grid half width, NM");
  heatmap->add_option("--cell-nm", hm.cell_nm, "Cell size, NM");
  heatmap->add_option("--out", hm.out, "Output image (.png or .pgm)");
  heatmap->add_option("--csv", hm.csv, "Also write cell probabilities as CSV");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, workers);
    if (*serve) return cmd_serve(config_path, host, port);
    if (*envgen) return cmd_envgen(env);
    if (*allocate) return cmd_allocate(prior_path, budget, alloc_out);
    if (*heatmap) return cmd_heatmap(hm);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
