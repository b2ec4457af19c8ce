#include "blab/verify.hpp"

#include "blab/boundary.hpp"
#include "blab/errors.hpp"
#include "blab/gradcheck.hpp"
#include "blab/io.hpp"
#include "blab/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace blab {

bool SuiteReport::passed() const {
  return std::all_of(cases.begin(), cases.end(), [](const CaseOutcome& c) { return c.passed; });
}

std::size_t SuiteReport::pass_count() const {
  return static_cast<std::size_t>(std::count_if(cases.begin(), cases.end(), [](const CaseOutcome& c) { return c.passed; }));
}

namespace {

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vector(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json net_json(const Mlpd& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : net.layers()) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) rows.push_back(vector_json(layer.weights.row(r).transpose()));
    layers.push_back({{"weights", rows}, {"bias", vector_json(layer.bias)}});
  }
  return layers;
}

std::string describe(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, format, a, b, c);
  return buffer;
}

Mlpd train_oracle_network(int n, std::uint64_t seed, Dataset& data) {
  const std::uint64_t data_seed = derive_seed(seed, 2 * static_cast<std::uint64_t>(n));
  if (n % 2 == 0) {
    SplitMix64 rng(data_seed);
    const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const Eigen::Vector2d axis(std::cos(angle), std::sin(angle));
    data = gen_gaussian_blobs(2, 40, -axis, axis, 0.5, rng());
  } else {
    data = gen_xor_quadrants(15, 0.3, data_seed);
  }
  Mlpd net = init_network<double>({2, 16, 16, 2}, derive_seed(seed, 2 * static_cast<std::uint64_t>(n) + 1));
  TrainConfig tc;
  tc.learning_rate = 1e-2;
  tc.batch_size = 16;
  tc.max_epochs = 2000;
  tc.seed = data_seed ^ 0x5bd1e995u;
  train(net, data, tc);
  return net;
}

}  // namespace

Dataset gen_xor_quadrants(std::size_t per_cluster, double sigma, std::uint64_t seed) {
  if (per_cluster == 0 || !(sigma > 0.0)) throw InvalidArgument("xor quadrants need samples and a positive sigma");
  SplitMix64 rng(seed);
  Dataset out;
  out.name = "xor quadrants";
  out.samples.resize(2, static_cast<Eigen::Index>(4 * per_cluster));
  Eigen::Index col = 0;
  for (const auto& [cx, cy] : {std::pair{1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}, {-1.0, 1.0}}) {
    for (std::size_t k = 0; k < per_cluster; ++k, ++col) {
      out.samples(0, col) = cx + sigma * rng.normal();
      out.samples(1, col) = cy + sigma * rng.normal();
      out.labels.push_back(cx * cy > 0.0 ? 1 : 0);
    }
  }
  return out;
}

SuiteReport run_oracle_suite(const OracleSuiteOptions& opts) {
  SuiteReport report{"oracle", {}};
  ProjectorOptions popts;
  popts.segment_candidates = opts.segment_candidates;
  for (int n = 0; n < opts.networks; ++n) {
    Dataset data;
    const Mlpd net = train_oracle_network(n, opts.seed, data);
    const PlanarField field = planar_field(net);

    std::vector<std::size_t> correct;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (is_correct(margin(net, Eigen::VectorXd(data.sample(i))), data.labels[i])) correct.push_back(i);
    SplitMix64 rng(derive_seed(opts.seed, 1000 + static_cast<std::uint64_t>(n)));
    shuffle(std::span<std::size_t>(correct), rng);
    const std::size_t count = std::min(correct.size(), static_cast<std::size_t>(opts.points_per_network));

    for (std::size_t q = 0; q < count; ++q) {
      const Eigen::VectorXd x = data.sample(correct[q]);
      const ProjectionResult solved = project_to_boundary(net, x, data, popts);
      CaseOutcome c;
      c.name = "network " + std::to_string(n) + " point " + std::to_string(correct[q]);
      if (!solved.converged) {
        c.detail = "solver did not converge";
      } else {
        // Any boundary point closer than the solver's lies in this window.
        const double half = (1.0 + opts.relative_tolerance) * solved.distance + 3.0 * opts.grid_step;
        const GridBounds bounds{x(0) - half, x(0) + half, x(1) - half, x(1) + half};
        const GridProjection grid = grid_boundary_projection(field, Eigen::Vector2d(x), bounds, opts.grid_step);
        const double rel = std::abs(solved.distance - grid.distance) / grid.distance;
        c.passed = rel <= opts.relative_tolerance;
        c.detail = describe("solver %.6g grid %.6g relative %.3g", solved.distance, grid.distance, rel);
      }
      if (!c.passed) c.replay = {{"network", net_json(net)}, {"point", vector_json(x)}};
      report.cases.push_back(std::move(c));
    }
    if (count < static_cast<std::size_t>(opts.points_per_network)) {
      report.cases.push_back({"network " + std::to_string(n) + " training", false,
                              "only " + std::to_string(count) + " correctly classified samples", net_json(net)});
    }
  }

  SplitMix64 rng(derive_seed(opts.seed, 999));
  for (int k = 0; k < opts.linear_cases; ++k) {
    const int dim = 2 + k % 5;
    const Mlpd net = init_network<double>({dim, 2}, rng());
    Eigen::VectorXd x(dim);
    for (Eigen::Index d = 0; d < dim; ++d) x(d) = 2.0 * rng.normal();
    const auto& layer = net.layers().front();
    const Eigen::VectorXd w = (layer.weights.row(1) - layer.weights.row(0)).transpose();
    const double b = layer.bias(1) - layer.bias(0);
    const Eigen::VectorXd exact = halfspace_projection(w, b, x);
    const ProjectionResult solved = project_to_boundary(net, x, Dataset{}, popts);
    const double error = (solved.point - exact).norm();
    CaseOutcome c;
    c.name = "linear " + std::to_string(k) + " (dim " + std::to_string(dim) + ")";
    c.passed = solved.converged && error <= opts.linear_tolerance;
    c.detail = describe("|solver - halfspace| = %.3g", error);
    if (!c.passed) c.replay = {{"network", net_json(net)}, {"point", vector_json(x)}};
    report.cases.push_back(std::move(c));
  }
  return report;
}

SuiteReport run_claims_suite(const ClaimsSuiteOptions& opts) {
  SuiteReport report{"claims", {}};
  SplitMix64 rng(opts.seed);

  {
    CaseOutcome c;
    c.name = "claim 1 chain, " + std::to_string(opts.claim1_instances) + " random instances";
    int failures = 0;
    double min_averaging = std::numeric_limits<double>::infinity();
    double min_triangle = std::numeric_limits<double>::infinity();
    for (int k = 0; k < opts.claim1_instances; ++k) {
      const std::size_t points = 2 + rng.below(11);
      const Eigen::Index dim = 2 + static_cast<Eigen::Index>(rng.below(7));
      const VectorProjectionInstance instance = random_claim1_instance(rng, points, dim, k % 4 == 0);
      const Claim1Report r = check_claim1_chain(instance);
      min_averaging = std::min(min_averaging, r.min_averaging_slack);
      min_triangle = std::min(min_triangle, r.min_triangle_slack);
      if (!r.passed() || !r.preconditions_hold || r.vacuous) {
        if (failures++ == 0) c.replay = {{"instance", to_json(instance)}, {"step", r.violations.empty() ? "" : r.violations.front().step}};
      }
    }
    c.passed = failures == 0;
    c.detail = std::to_string(opts.claim1_instances - failures) + "/" + std::to_string(opts.claim1_instances) +
               describe(" pass, min averaging slack %.3g, min triangle slack %.3g", min_averaging, min_triangle);
    report.cases.push_back(std::move(c));
  }

  {
    CaseOutcome c;
    c.name = "ratio bound a/b + b/a >= 2, " + std::to_string(opts.ratio_pairs) + " pairs";
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < opts.ratio_pairs; ++k) {
      const double a = std::exp(rng.uniform(-20.0, 20.0));
      const double b = std::exp(rng.uniform(-20.0, 20.0));
      const double value = ratio_bound(a, b);
      if (value < worst) {
        worst = value;
        if (value < 2.0 - 1e-12) c.replay = {{"a", a}, {"b", b}};
      }
    }
    c.passed = worst >= 2.0 - 1e-12;
    c.detail = describe("minimum %.17g", worst);
    report.cases.push_back(std::move(c));
  }

  {
    const VectorProjectionInstance instance = orthogonal_counterexample_instance();
    const Claim2Report r = check_claim2_product(instance);
    CaseOutcome c;
    c.name = "claim 2 flags the orthogonal equal-norm instance";
    c.passed = r.counterexample && r.ratio_substep_ok;
    c.detail = describe("log prod |h| %.6g vs log prod |f| %.6g", r.log_product_h, r.log_product_f);
    if (!c.passed) c.replay = {{"instance", to_json(instance)}};
    report.cases.push_back(std::move(c));
  }

  {
    const VectorProjectionInstance instance = collinear_equality_instance();
    const Claim2Report r = check_claim2_product(instance);
    CaseOutcome c;
    c.name = "claim 2 passes the collinear h = f instance";
    c.passed = r.passed() && r.equality && !r.counterexample;
    c.detail = r.equality ? "equality detected" : "equality not detected";
    if (!c.passed) c.replay = {{"instance", to_json(instance)}};
    report.cases.push_back(std::move(c));
  }

  if (opts.assert_strict_on_counterexample) {
    const VectorProjectionInstance instance = orthogonal_counterexample_instance();
    const Claim2Report r = check_claim2_product(instance);
    CaseOutcome c;
    c.name = "claim 2 strict inequality on the orthogonal instance";
    c.passed = r.strict_holds;
    c.detail = describe("prod |h| = %.6g, prod |f| = %.6g", std::exp(r.log_product_h), std::exp(r.log_product_f));
    if (!c.passed) c.replay = {{"instance", to_json(instance)}};
    report.cases.push_back(std::move(c));
  }
  return report;
}

SuiteReport run_gradients_suite(int cases, std::uint64_t seed) {
  SuiteReport report{"gradients", {}};
  const GradientSuiteResult result = run_gradient_suite(cases, seed);
  CaseOutcome c;
  c.name = "backprop vs central differences";
  c.passed = result.passed == result.checked && result.checked == cases;
  c.detail = std::to_string(result.passed) + "/" + std::to_string(result.checked) + " pass, " +
             std::to_string(result.kink_excluded) + " kink-adjacent draws replaced" +
             describe(", worst relative error %.3g", result.worst_relative_error);
  if (!c.passed) c.replay = {{"seed", seed}, {"failing_case_seeds", result.failing_seeds}};
  report.cases.push_back(std::move(c));
  return report;
}

std::string format_suite_table(const SuiteReport& report) {
  std::size_t width = 4;
  for (const auto& c : report.cases) width = std::max(width, c.name.size());
  std::string out;
  for (const auto& c : report.cases) {
    out += c.passed ? "PASS  " : "FAIL  ";
    out += c.name + std::string(width - c.name.size() + 2, ' ') + c.detail + "\n";
  }
  out += report.suite + ": " + std::to_string(report.pass_count()) + "/" + std::to_string(report.cases.size()) +
         " cases pass\n";
  return out;
}

nlohmann::json to_json(const VectorProjectionInstance& instance) {
  nlohmann::json points = nlohmann::json::array(), f = nlohmann::json::array(), g = nlohmann::json::array();
  for (std::size_t i = 0; i < instance.points.size(); ++i) {
    points.push_back(vector_json(instance.points[i]));
    f.push_back(vector_json(instance.f_vectors[i]));
    g.push_back(vector_json(instance.g_vectors[i]));
  }
  return {{"points", points}, {"labels", instance.labels}, {"f_vectors", f}, {"g_vectors", g}};
}

VectorProjectionInstance instance_from_json(const nlohmann::json& j) {
  VectorProjectionInstance out;
  try {
    for (const auto& p : j.at("points")) out.points.push_back(json_vector(p));
    out.labels = j.at("labels").get<std::vector<int>>();
    for (const auto& v : j.at("f_vectors")) out.f_vectors.push_back(json_vector(v));
    for (const auto& v : j.at("g_vectors")) out.g_vectors.push_back(json_vector(v));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed instance: ") + e.what());
  }
  out.validate();
  return out;
}

}  // namespace blab
