// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

// Experiment driver: osl <subcommand> [--config FILE] [key=value | --key value ...]

#include "osl/config.hpp"
#include "osl/error.hpp"
#include "osl/run.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

namespace {

std::string key_of(std::string flag) {
  flag.erase(0, flag.find_first_not_of('-'));
  std::replace(flag.begin(), flag.end(), '-', '_');
  return flag;
}

// key=value, --key=value, --key value and bare --flag (boolean true)
void apply_overrides(osl::ExperimentConfig &cfg, const std::vector<std::string> &args) {
  bool search_given = false, alpha_given = false;
  for (std::size_t k = 0; k < args.size(); ++k) {
    const std::string &a = args[k];
    std::string key, value;
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      key = key_of(a.substr(0, eq));
      value = a.substr(eq + 1);
    } else if (a.rfind("--", 0) == 0) {
      key = key_of(a);
      if (k + 1 < args.size() && args[k + 1].rfind("--", 0) != 0 && args[k + 1].find('=') == std::string::npos)
        value = args[++k];
      else
        value = "true";
    } else {
      throw osl::PreconditionError("cannot read argument '" + a + "'; expected key=value");
    }
    osl::set_key(cfg, key, value);
    search_given |= key == "search";
    alpha_given |= key == "alpha_plus";
  }
  // an explicit alpha+ means a single shoot unless --search is also given
  if (alpha_given && !search_given) cfg.search = false;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"osl: obstacle soliton laboratory"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<CLI::App *> subs;
  for (const std::string &name : osl::subcommands()) {
    CLI::App *sub = app.add_subcommand(name, "run " + name);
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->allow_extras();
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App *chosen = nullptr;
  for (CLI::App *s : subs)
    if (s->parsed()) chosen = s;
  try {
    osl::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = osl::load_config(config_path);
    apply_overrides(cfg, chosen->remaining());
    const osl::RunOutput out = osl::run(chosen->get_name(), cfg);
    if (out.exit_code != 0) {
      std::cerr << "error: " << out.error << "\n";
      return out.exit_code;
    }
    std::cout << out.summary << "\n";
    return 0;
  } catch (const osl::PreconditionError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
