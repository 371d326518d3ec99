#include "greybox/problems.hpp"

#include "greybox/chemproc.hpp"
#include "greybox/pbr.hpp"

#include <algorithm>
#include <cmath>

namespace greybox {
namespace toys {
namespace {

BoxDomain box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  Vector l(static_cast<Eigen::Index>(lo.size())), u(static_cast<Eigen::Index>(hi.size()));
  std::copy(lo.begin(), lo.end(), l.data());
  std::copy(hi.begin(), hi.end(), u.data());
  return {l, u};
}

}  // namespace

CompositeProblem affine() {
  CompositeProblem p;
  p.id = "toy_affine";
  p.design_box = box({0.0, 0.0}, {1.0, 1.0});
  p.nodes = {{"y1", {0, 1}, {}, -10.0, 10.0, nullptr}, {"y2", {0, 1}, {}, -10.0, 10.0, nullptr}};
  p.g = [](const Vector& x) { return x[0] * x[0]; };
  p.h = [](const Vector&, const Vector& y) { return 2.0 * y[0] - 3.0 * y[1] + 1.0; };
  p.sampler = [](const Vector& x) {
    Vector y(2);
    y << std::sin(3.0 * x[0]) + x[1], x[0] * x[1] + std::cos(2.0 * x[1]);
    return y;
  };
  p.validate();
  return p;
}

CompositeProblem quadratic() {
  CompositeProblem p;
  p.id = "toy_quadratic";
  p.design_box = box({-1.0, -1.0}, {1.0, 1.0});
  p.nodes = {{"y1", {0, 1}, {}, -5.0, 5.0, nullptr}, {"y2", {0, 1}, {}, -5.0, 5.0, nullptr}};
  p.g = [](const Vector& x) { return 0.1 * x.squaredNorm(); };
  p.h = [](const Vector&, const Vector& y) {
    return (y[0] - 0.2) * (y[0] - 0.2) + (y[1] + 0.1) * (y[1] + 0.1);
  };
  p.sampler = [](const Vector& x) {
    Vector y(2);
    y << x[0] + 0.5 * std::sin(2.0 * x[1]), x[1] - 0.3 * x[0] * x[0];
    return y;
  };
  p.validate();
  return p;
}

CompositeProblem nested_chain() {
  CompositeProblem p;
  p.id = "toy_nested";
  p.design_box = box({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
  p.nodes = {{"y1", {0, 1}, {}, 0.0, 4.0, nullptr},
             {"y2", {2}, {"y1"}, 0.0, 10.0, nullptr},
             {"y3", {0}, {"y2"}, -10.0, 10.0, nullptr}};
  p.g = [](const Vector& x) { return 0.5 * x[2]; };
  p.h = [](const Vector&, const Vector& y) { return y[2] * y[2] + 0.3 * y[0]; };
  p.sampler = [](const Vector& x) {
    Vector y(3);
    y[0] = 1.0 + x[0] * x[0] + std::sin(2.0 * x[1]);
    y[1] = y[0] * (0.5 + x[2]);
    y[2] = y[1] - 1.5 + 0.8 * std::cos(3.0 * x[0]);
    return y;
  };
  p.validate();
  return p;
}

CompositeProblem scalar() {
  CompositeProblem p;
  p.id = "toy_scalar";
  p.design_box = box({0.0}, {1.0});
  p.nodes = {{"y", {0}, {}, -2.0, 2.0, nullptr}};
  p.g = [](const Vector& x) { return 0.2 * x[0]; };
  p.h = [](const Vector&, const Vector& y) { return (y[0] - 0.3) * (y[0] - 0.3); };
  p.sampler = [](const Vector& x) {
    Vector y(1);
    y[0] = std::sin(6.0 * x[0]) + 0.5 * x[0];
    return y;
  };
  p.validate();
  return p;
}

CompositeProblem opbo_affine() {
  CompositeProblem p;
  p.id = "toy_opbo";
  p.design_box = box({0.0, 0.0}, {1.0, 1.0});
  p.nodes = {{"y", {0, 1}, {}, -3.0, 3.0, nullptr}};
  p.g = [](const Vector& x) { return (x[0] - 0.4) * (x[0] - 0.4) + 0.5 * (x[1] - 0.6) * (x[1] - 0.6); };
  p.h = [](const Vector& x, const Vector& y) { return (0.8 + 0.4 * x[1]) * y[0]; };
  p.sampler = [](const Vector& x) {
    Vector y(1);
    y[0] = std::sin(4.0 * x[0]) * std::cos(3.0 * x[1]);
    return y;
  };
  p.validate();
  return p;
}

}  // namespace toys

const std::vector<ProblemEntry>& problem_registry() {
  static const std::vector<ProblemEntry> registry = {
      {"chemproc", "recycle reactor/flash flowsheet, hourly cost (USD/hr)", [] { return chemproc::make_problem(); },
       std::nullopt},
      {"pbr", "biofertilizer plant, minimum selling price (USD/kg)", [] { return pbr::make_problem(); },
       std::nullopt},
      {"toy_affine", "affine white-box h over two intermediates", toys::affine, std::nullopt},
      {"toy_opbo", "two design variables, h affine in one intermediate", toys::opbo_affine, std::nullopt},
      {"toy_nested", "three-stage nested intermediate chain", toys::nested_chain, std::nullopt},
      {"toy_quadratic", "quadratic white-box h over two intermediates", toys::quadratic, std::nullopt},
      {"toy_scalar", "one design variable, one intermediate", toys::scalar, std::nullopt},
  };
  return registry;
}

const ProblemEntry& find_problem(const std::string& id) {
  for (const ProblemEntry& e : problem_registry()) {
    if (e.id == id) return e;
  }
  std::string known;
  for (const ProblemEntry& e : problem_registry()) known += (known.empty() ? "" : ", ") + e.id;
  throw InvalidArgument("unknown problem '" + id + "' (registered: " + known + ")");
}

CompositeProblem make_registered(const std::string& id) { return find_problem(id).make(); }

}  // namespace greybox
