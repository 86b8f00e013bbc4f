#include <doctest.h>

#include <cmath>

#include "radreg/cost.hpp"
#include "radreg/credibility.hpp"
#include "radreg/scenario.hpp"

using namespace radreg;

// The OpenMP kernels must be bit-identical to the serial reference
// (n_threads = 1): grid cells and campaign trials are independent and are
// written by index, with all aggregation done serially afterwards.

TEST_CASE("grid evaluation is bit-identical across thread counts") {
  const ScenarioInstance inst = generate(ScenarioSpec::overlapped2d(7));
  CostModel model;
  model.outlier.kind = OutlierKind::corrupted_gaussian;
  model.outlier.alpha = 0.2;
  GridSpec spec;
  spec.axes = {{3.0, 7.0, 17}, {-2.0, 2.0, 17}, {0.0, 0.5, 9}};

  const CostSurface serial = cost_surface(inst.m, inst.f, model, spec, 1);
  const CostSurface def = cost_surface(inst.m, inst.f, model, spec, 0);
  const CostSurface three = cost_surface(inst.m, inst.f, model, spec, 3);

  REQUIRE(serial.values.size() == def.values.size());
  REQUIRE(serial.values.size() == three.values.size());
  bool all_equal = true;
  for (size_t i = 0; i < serial.values.size(); ++i) {
    all_equal = all_equal && serial.values[i] == def.values[i] &&
                serial.values[i] == three.values[i];
  }
  CHECK(all_equal);
  CHECK(serial.argopt == def.argopt);
  CHECK(serial.argopt == three.argopt);
}

TEST_CASE("campaign results are bit-identical across thread counts") {
  CampaignConfig cfg;
  cfg.scenario = ScenarioSpec::overlapped2d(5);
  cfg.n_trials = 12;
  cfg.base_seed = 9;

  cfg.n_threads = 1;
  const CredibilityReport serial = run_campaign(cfg);
  cfg.n_threads = 0;
  const CredibilityReport def = run_campaign(cfg);
  cfg.n_threads = 3;
  const CredibilityReport three = run_campaign(cfg);

  REQUIRE(serial.trials.size() == def.trials.size());
  REQUIRE(serial.trials.size() == three.trials.size());
  for (size_t i = 0; i < serial.trials.size(); ++i) {
    const auto& a = serial.trials[i];
    for (const auto* other : {&def.trials[i], &three.trials[i]}) {
      CHECK(a.seed == other->seed);
      CHECK(a.excluded == other->excluded);
      if (a.excluded) continue;
      CHECK((a.record.theta_hat.array() == other->record.theta_hat.array()).all());
      CHECK((a.record.sigma_hat.array() == other->record.sigma_hat.array()).all());
      CHECK(a.nees_value == other->nees_value);
      CHECK(((a.rho == other->rho) ||
             (std::isnan(a.rho) && std::isnan(other->rho))));
    }
  }
  CHECK(serial.nees.mean == def.nees.mean);
  CHECK(serial.nees.mean == three.nees.mean);
  CHECK(serial.nci.gamma == def.nci.gamma);
  CHECK(serial.nci.nu == three.nci.nu);
}
