#include "greybox/optimize.hpp"
#include "greybox/problems.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>

// Brute-force reference optimum of a registered problem's true objective
// (sampler followed by g + h), merged into a JSON fixture.
int main(int argc, char** argv) {
  CLI::App app{"Reference optimum by grid plus compass search"};
  std::string problem_id = "chemproc";
  std::string out = "reference_optima.json";
  greybox::PatternSearchOptions opts;
  app.add_option("--problem", problem_id, "Registered problem id");
  app.add_option("--grid", opts.grid_levels, "Grid levels per axis")->check(CLI::Range(2, 50));
  app.add_option("--top", opts.refine_top, "Grid points refined")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Fixture file (merged if it exists)");
  CLI11_PARSE(app, argc, argv);

  try {
    const greybox::CompositeProblem p = greybox::make_registered(problem_id);
    const greybox::Objective f = [&](const greybox::Vector& x) {
      try {
        return p.f(x, p.sampler(x));
      } catch (const greybox::NumericalError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    const greybox::OptimizeReport rep = greybox::pattern_search(f, p.design_box, opts);

    nlohmann::json fixture = nlohmann::json::object();
    if (std::ifstream in(out); in) fixture = nlohmann::json::parse(in);
    fixture[problem_id] = {{"f_star", rep.value},
                           {"x", std::vector<double>(rep.argmin.data(), rep.argmin.data() + rep.argmin.size())},
                           {"grid_levels", opts.grid_levels},
                           {"refine_top", opts.refine_top},
                           {"evaluations", rep.evaluations}};
    std::ofstream(out) << fixture.dump(2) << '\n';
    std::cout.precision(17);
    std::cout << problem_id << ": f* = " << rep.value << " after " << rep.evaluations << " evaluations\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
