// Serial reference vs OpenMP kernel timings for the two parallel hot paths:
// dense grid evaluation and Monte-Carlo campaigns.

#include <chrono>
#include <cstdio>

#include "radreg/cost.hpp"
#include "radreg/credibility.hpp"
#include "radreg/scenario.hpp"

using namespace radreg;

namespace {

double seconds(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

int main() {
  const ScenarioInstance inst = generate(ScenarioSpec::overlapped2d(7));
  CostModel model;
  model.outlier.kind = OutlierKind::corrupted_gaussian;
  model.outlier.alpha = 0.2;

  GridSpec grid;
  grid.axes = {{3.0, 7.0, 81}, {-2.0, 2.0, 81}, {0.0, 0.5236, 41}};

  CostSurface serial_surface, omp_surface;
  const double t_grid_serial = seconds(
      [&] { serial_surface = cost_surface(inst.m, inst.f, model, grid, 1); });
  const double t_grid_omp = seconds(
      [&] { omp_surface = cost_surface(inst.m, inst.f, model, grid, 0); });
  const bool grid_equal = serial_surface.values == omp_surface.values &&
                          serial_surface.argopt == omp_surface.argopt;

  CampaignConfig campaign;
  campaign.scenario = ScenarioSpec::overlapped2d(7);
  campaign.model = model;
  campaign.n_trials = 24;
  campaign.base_seed = 7;

  CredibilityReport serial_report, omp_report;
  campaign.n_threads = 1;
  const double t_camp_serial = seconds([&] { serial_report = run_campaign(campaign); });
  campaign.n_threads = 0;
  const double t_camp_omp = seconds([&] { omp_report = run_campaign(campaign); });
  bool campaign_equal = serial_report.nees.values == omp_report.nees.values &&
                        serial_report.nci.rho == omp_report.nci.rho;

  std::printf("%-24s %12s %12s %10s %12s\n", "kernel", "serial [s]", "openmp [s]",
              "speedup", "bit-equal");
  std::printf("%-24s %12.3f %12.3f %9.2fx %12s\n", "grid (81x81x41)",
              t_grid_serial, t_grid_omp, t_grid_serial / t_grid_omp,
              grid_equal ? "yes" : "NO");
  std::printf("%-24s %12.3f %12.3f %9.2fx %12s\n", "campaign (24 trials)",
              t_camp_serial, t_camp_omp, t_camp_serial / t_camp_omp,
              campaign_equal ? "yes" : "NO");
  return grid_equal && campaign_equal ? 0 : 1;
}
