#include "cmms/cli.hpp"

#include "cmms/conformal.hpp"
#include "cmms/fractal.hpp"
#include "cmms/io.hpp"
#include "cmms/oracle.hpp"
#include "cmms/space.hpp"

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace cmms {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string out_path(const RunConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.out_dir);
  return (std::filesystem::path(c.out_dir) / name).string();
}

int pick_resolution(const RunConfig& c, int fallback) {
  return c.resolutions.empty() ? fallback : c.resolutions.back();
}

template <typename Fn>
ScalarField map_coords(const DiscreteMMS& s, Fn&& fn) {
  ScalarField f(static_cast<std::size_t>(s.n));
  for (int i = 0; i < s.n; ++i) f[i] = fn(s.coords[i][0], s.coords[i][1]);
  return f;
}

ScalarField sample_smooth(const DiscreteMMS& s, const SmoothField& g) {
  return map_coords(s, [&](double x, double y) {
    Eigen::Vector2d p(x, y);
    return g.eval(p);
  });
}

struct Problem {
  DiscreteMMS space;
  ConformalPair pair;
};

// Space and weights from --space/--w/--v with preset fallbacks. Preset
// weights apply only when the space itself came from the preset.
Problem make_problem(const RunConfig& c, int resolution) {
  Problem p;
  const std::string preset = c.preset.empty() ? "flat" : c.preset;
  const bool from_preset = c.space_path.empty();
  if (!from_preset) {
    p.space = load_space(c.space_path);
  } else if (preset == "flat") {
    p.space = build_grid_space(resolution, resolution, Bounds::unit_square());
  } else if (preset == "stereographic-sphere") {
    p.space = build_grid_space(resolution, resolution, Bounds::symmetric_square());
  } else if (preset == "fractal-default") {
    p.space = build_centered_grid_space(resolution, resolution, Bounds::symmetric_square());
  } else {
    fail("unknown preset '" + preset + "'");
  }

  const std::size_t n = static_cast<std::size_t>(p.space.n);
  p.pair = ConformalPair::zero(n);
  if (from_preset && preset == "stereographic-sphere") {
    const SmoothField sw = stereographic_weight(2);
    p.pair.w = sample_smooth(p.space, sw);
    for (std::size_t i = 0; i < n; ++i) p.pair.v[i] = 2.0 * p.pair.w[i];  // area weight in 2d
  } else if (from_preset && preset == "fractal-default") {
    const FractalParams fp;
    p.pair.w = map_coords(p.space, [&](double x, double y) {
      return fractal_weight(fp, Point{x, y}, fp.depth);
    });
  }
  if (!c.w_path.empty()) p.pair.w = load_field(c.w_path, n);
  if (!c.v_path.empty()) p.pair.v = load_field(c.v_path, n);
  return p;
}

// ---- verify ----------------------------------------------------------

const std::vector<std::string>& identity_names() {
  static const std::vector<std::string> names = {"gradient", "laplacian", "inner_product",
                                                 "angle",    "hessian",   "covariant",
                                                 "gamma2",   "ricci"};
  return names;
}

FieldComparison angle_comparison(const DiscreteMMS& base, const RunConfig& cfg) {
  ConformalPair pair = ConformalPair::zero(static_cast<std::size_t>(base.n));
  pair.w = map_coords(base, [](double x, double y) { return x + 0.5 * y; });

  std::mt19937 rng(cfg.seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  FieldComparison total;
  for (int s = 0; s < cfg.samples; ++s) {
    const double a = U(rng), b = U(rng), p = U(rng), q = U(rng);
    const VectorField X =
        VectorField::gradient(map_coords(base, [&](double x, double y) { return a * x + b * y; }));
    const VectorField Y =
        VectorField::gradient(map_coords(base, [&](double x, double y) { return p * x + q * y; }));
    const AngleField ref = angle(base, X, Y);
    const AngleField cand = transformed_angle(base, pair, X, Y);
    const FieldComparison cmp = compare_fields(base, 1, ref.angle, cand.angle);
    total.max_abs = std::max(total.max_abs, cmp.max_abs);
    total.max_rel = std::max(total.max_rel, cmp.max_rel);
    total.scale = std::max(total.scale, cmp.scale);
    total.compared += cmp.compared;
    total.excluded += cmp.excluded;
  }
  return total;
}

FieldComparison identity_comparison(const std::string& id, const DiscreteMMS& base,
                                    const RunConfig& cfg) {
  if (id == "angle") return angle_comparison(base, cfg);

  const std::size_t n = static_cast<std::size_t>(base.n);
  ConformalPair pair = ConformalPair::zero(n);
  const auto grad_of = [&](auto&& fn) { return VectorField::gradient(map_coords(base, fn)); };

  if (id == "gradient") {
    pair.w = map_coords(base, [](double x, double) { return x; });
    const ScalarField f = map_coords(base, [](double x, double y) { return std::sin(x) + y; });
    return compare_fields(base, 1, transformed_gradient_norm(base, pair, f),
                          direct_gradient_norm(base, pair, f));
  }
  if (id == "laplacian") {
    pair.w = map_coords(base, [](double x, double) { return x; });
    const ScalarField f = map_coords(base, [](double x, double) { return x * x; });
    return compare_fields(base, 1, transformed_laplacian(base, pair, f),
                          direct_laplacian(base, pair, f));
  }
  if (id == "inner_product") {
    pair.w = map_coords(base, [](double x, double) { return x; });
    const VectorField X = grad_of([](double x, double y) { return std::sin(x) + y; });
    const VectorField Y = grad_of([](double x, double y) { return x * y; });
    return compare_fields(base, 1, transformed_inner_product(base, pair, X, Y),
                          direct_inner_product(base, pair, X, Y));
  }
  if (id == "hessian") {
    pair.w = map_coords(base, [](double, double y) { return y; });
    const ScalarField f = map_coords(base, [](double x, double) { return x; });
    return compare_fields(base, 2, transformed_hessian(base, pair, f).hs2,
                          direct_hessian(base, pair, f).hs2);
  }
  if (id == "covariant") {
    pair.w = map_coords(base, [](double x, double) { return 0.5 * x; });
    const VectorField X = grad_of([](double x, double y) { return std::sin(x) + y; });
    const VectorField Y = grad_of([](double x, double y) { return x * y + x; });
    const VectorField Z = grad_of([](double x, double y) { return 0.5 * x * x + y; });
    return compare_fields(base, 2, transformed_covariant_derivative(base, pair, X, Y, Z),
                          direct_covariant_derivative(base, pair, X, Y, Z));
  }
  if (id == "gamma2") {
    pair.w = map_coords(base, [](double x, double) { return 0.5 * x; });
    pair.v = map_coords(base, [](double x, double y) { return 0.25 * (x + y); });
    const ScalarField f = map_coords(base, [](double x, double y) { return std::sin(x) + y; });
    return compare_fields(base, 2, transformed_gamma2(base, pair, f),
                          direct_gamma2(base, pair, f));
  }
  if (id == "ricci") {
    pair.w = map_coords(base, [](double x, double) { return 0.25 * x; });
    pair.v = map_coords(base, [](double x, double) { return 0.125 * x; });
    const ScalarField f =
        map_coords(base, [](double x, double y) { return x * x + y * y + 0.5 * x * y; });
    const RicciParams rp{3.0, cfg.singular_tol};
    return compare_fields(base, 2, transformed_ricci_n(base, pair, rp, f),
                          direct_ricci_n(base, pair, rp, f));
  }
  fail("unknown identity '" + id +
       "' (expected gradient|laplacian|inner_product|angle|hessian|covariant|gamma2|ricci)");
}

}  // namespace

void RunConfig::validate() const {
  for (int r : resolutions)
    if (r < 2) fail("resolutions must be >= 2, got " + std::to_string(r));
  if (!(rel_tol > 0.0)) fail("rel_tol must be positive");
  if (!(singular_tol > 0.0)) fail("singular_tol must be positive");
  if (tol < 0.0) fail("tol must be positive when given");
  if (pairs < 1) fail("pairs must be >= 1");
  if (samples < 1) fail("samples must be >= 1");
}

bool cmd_transform(const RunConfig& c) {
  const int fallback = (c.preset == "fractal-default") ? 128 : 64;
  const Problem p = make_problem(c, pick_resolution(c, fallback));
  const DiscreteMMS t = conformal_transform(p.space, p.pair);

  const std::string space_file = out_path(c, "transformed_space.json");
  save_space(t, space_file);

  const GeodesicResult g = geodesic_distance(t, 0);
  std::vector<std::tuple<int, int, double>> rows;
  rows.reserve(static_cast<std::size_t>(t.n));
  for (int j = 0; j < t.n; ++j) rows.emplace_back(0, j, g.dist[j]);
  save_distances_csv(out_path(c, "distances.csv"), rows);

  std::printf("transform: %d nodes, %zu edges, %d unreachable from node 0 -> %s\n", t.n,
              t.edges.size(), g.unreachable, space_file.c_str());
  return true;
}

bool cmd_verify(const RunConfig& c) {
  std::vector<std::string> ids;
  if (c.identity.empty()) {
    ids = identity_names();
  } else {
    const auto& all = identity_names();
    if (std::find(all.begin(), all.end(), c.identity) == all.end())
      fail("unknown identity '" + c.identity +
           "' (expected gradient|laplacian|inner_product|angle|hessian|covariant|gamma2|ricci)");
    ids.push_back(c.identity);
  }
  const std::vector<int> res =
      c.resolutions.empty() ? std::vector<int>{64, 128} : c.resolutions;

  bool all_pass = true;
  for (const std::string& id : ids) {
    json runs = json::array();
    std::vector<FieldComparison> cmps;
    for (int r : res) {
      const DiscreteMMS base = build_grid_space(r, r, Bounds::unit_square());
      const FieldComparison cmp = identity_comparison(id, base, c);
      cmps.push_back(cmp);
      runs.push_back(json{{"resolution", r},
                          {"max_abs_err", cmp.max_abs},
                          {"max_rel_err", cmp.max_rel},
                          {"nodes_compared", cmp.compared},
                          {"nodes_excluded", cmp.excluded}});
    }

    const bool exact = (id == "angle");
    const bool have_ratio = cmps.size() >= 2;
    const double ratio =
        have_ratio ? cmps.front().max_rel / std::max(cmps.back().max_rel, 1e-300) : 0.0;

    double tol = 0.0;
    bool pass = true;
    if (exact) {
      tol = c.tol > 0.0 ? c.tol : 1e-12;
      for (const FieldComparison& cmp : cmps) pass = pass && cmp.max_abs <= tol;
    } else {
      tol = c.tol > 0.0 ? c.tol : c.rel_tol;
      pass = cmps.back().max_rel <= tol;
      // Halving the mesh must at least halve the error for a convergent route.
      if (have_ratio && res.back() >= 2 * res.front()) pass = pass && ratio >= 2.0;
    }

    json rep{{"identity", id},
             {"kind", exact ? "exact" : "convergent"},
             {"runs", runs},
             {"tolerance", tol},
             {"pass", pass}};
    if (have_ratio) rep["error_ratio"] = ratio;
    if (exact) {
      rep["seed"] = c.seed;
      rep["samples"] = c.samples;
    }
    write_text(out_path(c, "verify_" + id + ".json"), canonical_dump(rep));

    std::printf("verify %-13s max_abs %.3e  max_rel %.3e", id.c_str(), cmps.back().max_abs,
                cmps.back().max_rel);
    if (have_ratio) std::printf("  ratio %.2f", ratio);
    std::printf("  %s\n", pass ? "PASS" : "FAIL");
    all_pass = all_pass && pass;
  }
  return all_pass;
}

bool cmd_curvature(const RunConfig& c) {
  const std::string preset = c.preset.empty() ? "flat" : c.preset;
  json rep{{"preset", preset}, {"N", c.N}, {"K", c.K}};
  bool pass = false;

  if (preset == "stereographic-sphere" && !c.has_w_const) {
    const int res = pick_resolution(c, 200);
    const DiscreteMMS base = build_grid_space(res, res, Bounds::symmetric_square());
    const ScalarField w = sample_smooth(base, stereographic_weight(2));
    const double kp = curvature_bound(base, w, c.N, c.K);
    const double tol = c.tol > 0.0 ? c.tol : 2e-2;
    pass = std::abs(kp - 1.0) <= tol;  // round unit sphere
    rep["resolution"] = res;
    rep["k_prime"] = kp;
    rep["expected"] = 1.0;
    rep["tolerance"] = tol;
    std::printf("curvature %s: K' = %.6f (expected 1 +- %g)  %s\n", preset.c_str(), kp, tol,
                pass ? "PASS" : "FAIL");
  } else {
    if (preset == "fractal-default") fail("curvature: use the flat or stereographic-sphere preset");
    const int res = pick_resolution(c, 64);
    const DiscreteMMS base = preset == "flat"
                                 ? build_grid_space(res, res, Bounds::unit_square())
                                 : build_grid_space(res, res, Bounds::symmetric_square());
    const double cw = c.has_w_const ? c.w_const : 0.0;
    const ScalarField w(static_cast<std::size_t>(base.n), cw);
    const double kp = curvature_bound(base, w, c.N, c.K);
    const double expected = std::exp(-2.0 * cw) * c.K;
    pass = (kp == expected);  // every correction term vanishes identically
    rep["resolution"] = res;
    rep["w_const"] = cw;
    rep["k_prime"] = kp;
    rep["expected"] = expected;
    std::printf("curvature %s: K' = %.17g, expected %.17g (constant weight, exact)  %s\n",
                preset.c_str(), kp, expected, pass ? "PASS" : "FAIL");
  }
  rep["pass"] = pass;
  write_text(out_path(c, "curvature.json"), canonical_dump(rep));
  return pass;
}

bool cmd_fractal(const RunConfig& c) {
  FractalParams fp;
  fp.eps = c.eps;
  fp.gamma_exp = c.gamma_exp;
  fp.depth = c.depth;
  fp.validate();

  const SeriesReport series = measure_diameter_bounds(fp);
  const bool exact_ok = series_bounds_exact(fp.depth);
  const DisjointnessReport dis = check_disjointness(fp);
  bool pass = series.pass && exact_ok && dis.ok;

  // exterior pairs: weight zero at full depth, separated enough to matter
  std::mt19937 rng(c.seed);
  std::uniform_real_distribution<double> U(-0.95, 0.95);
  std::vector<std::pair<Point, Point>> pairs;
  while (static_cast<int>(pairs.size()) < c.pairs) {
    const Point a{U(rng), U(rng)};
    const Point b{U(rng), U(rng)};
    if (fractal_weight(fp, a, fp.depth) != 0.0 || fractal_weight(fp, b, fp.depth) != 0.0) continue;
    if (std::hypot(a[0] - b[0], a[1] - b[1]) < 0.5) continue;
    pairs.emplace_back(a, b);
  }

  const std::vector<int> resolutions =
      c.resolutions.empty() ? std::vector<int>{128} : c.resolutions;

  json jres = json::array();
  for (int res : resolutions) {
    std::vector<std::vector<double>> dist_by_level;  // [N][pair]
    std::vector<double> gap_limit;                   // bound + grid_tol per step
    json levels = json::array();

    if (fp.depth == 0) {
      std::vector<double> d0;
      for (const auto& pr : pairs) d0.push_back(approx_distance(fp, 0, pr.first, pr.second, res));
      dist_by_level.push_back(std::move(d0));
    }
    for (int lev = 0; lev + 1 <= fp.depth; ++lev) {
      const GapReport gr = gap_bound_check(fp, lev, pairs, res);
      if (lev == 0) {
        std::vector<double> d0;
        for (const GapPair& gp : gr.pairs) d0.push_back(gp.d_lo);
        dist_by_level.push_back(std::move(d0));
      }
      std::vector<double> dn;
      for (const GapPair& gp : gr.pairs) dn.push_back(gp.d_hi);
      dist_by_level.push_back(std::move(dn));
      gap_limit.push_back(gr.bound);
      levels.push_back(json{{"level", lev},
                            {"max_gap", gr.max_gap},
                            {"bound", gr.bound},
                            {"grid_tol", gr.grid_tol},
                            {"monotone", gr.monotone},
                            {"under_bound", gr.under_bound},
                            {"sandwich_eps_hat", gr.sandwich.eps_hat},
                            {"sandwich_pass", gr.sandwich.pass}});
      pass = pass && gr.pass;
    }

    std::string csv = "pair,N,d_N,gap,bound\n";
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      for (std::size_t N = 0; N < dist_by_level.size(); ++N) {
        csv += std::to_string(p) + "," + std::to_string(N) + "," +
               format_double(dist_by_level[N][p]) + ",";
        if (N == 0)
          csv += ",";
        else
          csv += format_double(dist_by_level[N][p] - dist_by_level[N - 1][p]) + "," +
                 format_double(gap_limit[N - 1]);
        csv += "\n";
      }
    }
    write_text(out_path(c, "fractal_distances_" + std::to_string(res) + ".csv"), csv);
    jres.push_back(json{{"resolution", res}, {"levels", levels}});
  }

  json jrad = json::array();
  for (int n = 0; n <= std::min(fp.depth, 1); ++n) {
    const RadialReport rr = radial_bound_check(fp, n, 0, 256);
    jrad.push_back(json{{"level", n},
                        {"measured", rr.measured},
                        {"analytic", rr.analytic},
                        {"tolerance", rr.tolerance},
                        {"pass", rr.pass}});
    pass = pass && rr.pass;
  }

  json jpairs = json::array();
  for (const auto& pr : pairs)
    jpairs.push_back(json::array({pr.first[0], pr.first[1], pr.second[0], pr.second[1]}));

  const json summary{
      {"params", json{{"eps", fp.eps}, {"gamma", fp.gamma_exp}, {"depth", fp.depth}}},
      {"seed", c.seed},
      {"pairs", jpairs},
      {"series",
       json{{"measure_total", series.measure_total},
            {"measure_bound", series.measure_bound},
            {"diam_sum", series.diam_sum},
            {"diam_bound", series.diam_bound},
            {"pass", series.pass}}},
      {"series_exact", exact_ok},
      {"disjoint", json{{"ok", dis.ok}, {"worst_margin", dis.worst_margin}}},
      {"resolutions", jres},
      {"radial", jrad},
      {"pass", pass}};
  write_text(out_path(c, "fractal_summary.json"), canonical_dump(summary));

  std::printf("fractal: series %s, disjoint %s, gaps+radial %s  %s\n",
              series.pass && exact_ok ? "ok" : "FAIL", dis.ok ? "ok" : "FAIL",
              pass ? "ok" : "FAIL", pass ? "PASS" : "FAIL");
  return pass;
}

bool cmd_oracle(const RunConfig& c) {
  const SmoothField w = stereographic_weight(2);
  std::mt19937 rng(c.seed);
  std::uniform_real_distribution<double> U(-0.9, 0.9);

  json samples = json::array();
  double worst = 0.0;
  for (int s = 0; s < c.samples; ++s) {
    const Eigen::Vector2d p(U(rng), U(rng));
    const Eigen::VectorXd pd = p;
    const Eigen::MatrixXd ric = smooth_conformal_ricci(w, 2, pd);
    const double e2w = std::exp(2.0 * w.eval(pd));
    const double gauss = gauss_curvature_2d(w, p);
    const double dev = (ric - e2w * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff();
    worst = std::max(worst, dev);
    samples.push_back(json{{"point", json::array({p.x(), p.y()})},
                           {"ricci", json::array({json::array({ric(0, 0), ric(0, 1)}),
                                                  json::array({ric(1, 0), ric(1, 1)})})},
                           {"conformal_factor", e2w},
                           {"gauss_curvature", gauss},
                           {"deviation", dev}});
  }

  const double tol = c.tol > 0.0 ? c.tol : 1e-8;
  const bool pass = worst <= tol;
  const json rep{{"model", "stereographic-sphere"}, {"seed", c.seed},
                 {"samples", samples},             {"max_deviation", worst},
                 {"tolerance", tol},               {"pass", pass}};
  write_text(out_path(c, "oracle.json"), canonical_dump(rep));
  std::printf("oracle stereographic-sphere: max |Ric' - K g'| = %.3e (tol %g)  %s\n", worst, tol,
              pass ? "PASS" : "FAIL");
  return pass;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"conformal transformations of discrete metric measure spaces"};
  app.require_subcommand(1);
  RunConfig c;

  const auto add_common = [&c](CLI::App* s) {
    s->add_option("--space", c.space_path, "space JSON file (overrides --preset)");
    s->add_option("--w", c.w_path, "length-weight field file");
    s->add_option("--v", c.v_path, "measure-weight field file");
    s->add_option("--preset", c.preset, "flat | stereographic-sphere | fractal-default")
        ->check(CLI::IsMember({"flat", "stereographic-sphere", "fractal-default"}));
    s->add_option("--resolution", c.resolutions, "grid resolution, repeatable");
    s->add_option("--seed", c.seed, "RNG seed for sampled fields and points");
    s->add_option("--out", c.out_dir, "output directory");
    s->add_option("--tol", c.tol, "override the pass tolerance")->check(CLI::PositiveNumber);
  };

  CLI::App* t = app.add_subcommand(
      "transform", "apply weights and write the transformed space plus node-0 distances");
  add_common(t);

  CLI::App* vf =
      app.add_subcommand("verify", "compare predicted against directly recomputed quantities");
  add_common(vf);
  vf->add_option("--identity", c.identity,
                 "gradient|laplacian|inner_product|angle|hessian|covariant|gamma2|ricci "
                 "(default: all)");
  vf->add_option("--rel-tol", c.rel_tol, "relative error gate at the finest resolution")
      ->check(CLI::PositiveNumber);
  vf->add_option("--samples", c.samples, "random vector-field pairs for the angle identity");

  CLI::App* cv = app.add_subcommand("curvature", "lower-bound estimate for the transformed space");
  add_common(cv);
  CLI::Option* wconst = cv->add_option("--w-const", c.w_const, "constant length weight");
  cv->add_option("--K", c.K, "curvature lower bound of the base space");
  cv->add_option("--N", c.N, "effective dimension parameter");

  CLI::App* fr = app.add_subcommand("fractal", "singular-weight distance convergence suite");
  add_common(fr);
  fr->add_option("--eps", c.eps, "base ball radius")->check(CLI::PositiveNumber);
  fr->add_option("--gamma", c.gamma_exp, "weight exponent in (0,1)");
  fr->add_option("--depth", c.depth, "construction depth");
  fr->add_option("--pairs", c.pairs, "number of sampled exterior pairs");

  CLI::App* orc = app.add_subcommand("oracle", "closed-form curvature check at sampled points");
  add_common(orc);
  orc->add_option("--samples", c.samples, "number of sample points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  c.subcommand = app.get_subcommands().front()->get_name();
  c.has_w_const = wconst->count() > 0;

  try {
    c.validate();
    bool pass = false;
    if (c.subcommand == "transform")
      pass = cmd_transform(c);
    else if (c.subcommand == "verify")
      pass = cmd_verify(c);
    else if (c.subcommand == "curvature")
      pass = cmd_curvature(c);
    else if (c.subcommand == "fractal")
      pass = cmd_fractal(c);
    else
      pass = cmd_oracle(c);
    return pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace cmms
