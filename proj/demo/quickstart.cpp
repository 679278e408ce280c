// Fits UoI-LASSO and UoI-VAR on small synthetic problems and prints how well
// the true supports were recovered.
#include <cstdio>

#include "uoi/uoi.hpp"

int main() {
  auto [problem, truth] = uoi::generate_regression(400, 60, 6, 0.5, 1.0, 11);

  uoi::BootstrapPlan plan;
  plan.master_seed = 2024;
  uoi::UoiOptions options;
  options.workers = 0;
  const uoi::UoiFit fit = uoi::fit_uoi_lasso(problem, plan, {}, options);
  const auto m = uoi::support_metrics(fit.support(options.zero_tol), truth.support_true);
  std::printf("lasso: %zu selected, FP=%zu FN=%zu, |beta*-beta|/|beta|=%.3g\n",
              fit.support(options.zero_tol).size(), m.false_positives, m.false_negatives,
              (fit.beta_star - truth.beta_true).norm() / truth.beta_true.norm());

  const uoi::VarSpec spec = uoi::generate_stable_var(8, 1, 2, 0.9, 5);
  const uoi::MatrixXd series = uoi::simulate_var(spec, 1500, 200, 6);
  uoi::UoiOptions var_options = uoi::var_default_options();
  var_options.workers = 0;
  const uoi::VarFit var = uoi::fit_uoi_var(series, 1, uoi::var_default_plan(), {}, var_options);
  std::printf("var: spectral radius true %.3f, estimated %.3f, max|A_hat-A|=%.3g\n",
              uoi::check_stability(spec.A).spectral_radius, var.stability.spectral_radius,
              (var.A_hat[0] - spec.A[0]).cwiseAbs().maxCoeff());
  return 0;
}
