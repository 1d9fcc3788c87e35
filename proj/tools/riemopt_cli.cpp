#include <riemopt/cli.hpp>

#include <CLI11.hpp>

namespace {

riemopt::Vector parse_components(const std::string& text, const std::string& flag) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = riemopt::detail::trim(item);
    if (item.empty()) continue;
    vals.push_back(riemopt::detail::parse_double(flag, item));
  }
  riemopt::Vector v(static_cast<int>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<int>(i)) = vals[i];
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riemopt: manifold optimization runs, conformance checks, geometry demos"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "execute a configured experiment");
  run->add_option("config", config_path, "INI run configuration")->required();

  riemopt::CheckArgs check_args;
  CLI::App* check = app.add_subcommand("check", "run the manifold conformance suite");
  check->add_option("manifold", check_args.manifold,
                    "stiefel | grassmann | spd | built-in metric name")
      ->required();
  check->add_option("n", check_args.n, "ambient dimension (frame/subspace/spd)");
  check->add_option("d", check_args.d, "column count (frame/subspace)");
  check->add_option("--seed", check_args.seed, "sampling seed");
  check->add_option("--samples", check_args.samples, "sample count per check");

  riemopt::GeometryArgs geo_args;
  std::string at_text, dir_text, vec_text;
  CLI::App* geometry = app.add_subcommand("geometry", "coordinate-geometry demos");
  geometry
      ->add_option("sub", geo_args.sub, "curvature | geodesic | transport | ricci-flow")
      ->required();
  geometry->add_option("metric", geo_args.metric, "built-in metric name")->required();
  geometry->add_option("--at", at_text, "chart point, comma-separated");
  geometry->add_option("--dir", dir_text, "initial velocity, comma-separated");
  geometry->add_option("--vec", vec_text, "vector to transport, comma-separated");
  geometry->add_option("--t-end", geo_args.t_end, "integration span");
  geometry->add_option("--step", geo_args.step, "integrator step");
  geometry->add_option("--out", geo_args.out_path, "write CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return riemopt::cmd_run(config_path);
    if (check->parsed()) return riemopt::cmd_check(check_args);
    geo_args.at = parse_components(at_text, "--at");
    geo_args.dir = parse_components(dir_text, "--dir");
    geo_args.vec = parse_components(vec_text, "--vec");
    return riemopt::cmd_geometry(geo_args);
  } catch (const riemopt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
