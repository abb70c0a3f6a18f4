// Command-line front end over the C API.
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rbr/rbr.h"

namespace {

int report(const std::string& command, const std::string& kind, int status, const std::string& message) {
  nlohmann::json j;
  j["command"] = command;
  j["error"] = kind;
  j["status"] = status;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
  return status == 0 ? 1 : status;
}

int run(const std::string& command, const std::string& config_path, const std::string& out_override) {
  rbr_config* cfg = nullptr;
  rbr_status st = rbr_config_load(config_path.c_str(), &cfg);
  if (st != RBR_OK) return report(command, rbr_status_name(st), st, rbr_last_error_message());

  std::string out_dir = out_override;
  if (out_dir.empty()) {
    char* s = nullptr;
    st = rbr_config_output_dir(cfg, &s);
    if (st == RBR_OK) {
      out_dir = s;
      rbr_string_free(s);
    }
  }
  if (st == RBR_OK) {
    if (command == "train") st = rbr_run_train(cfg, out_dir.c_str());
    else if (command == "sample") st = rbr_run_sample(cfg, out_dir.c_str());
    else if (command == "recourse") st = rbr_run_recourse(cfg, out_dir.c_str());
    else if (command == "benchmark") st = rbr_run_benchmark(cfg, out_dir.c_str());
    else st = rbr_run_sweep(cfg, out_dir.c_str());
  }
  const std::string message = rbr_last_error_message();
  rbr_config_free(cfg);
  if (st != RBR_OK) return report(command, rbr_status_name(st), st, message);
  std::cout << command << ": wrote outputs to " << out_dir << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian and robust Bayesian recourse for black-box classifiers"};
  app.set_version_flag("--version", std::string(rbr_version()));
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"train", "train the current classifier; writes model.json and metrics.json"},
      {"sample", "build a local sample set around the boundary point; writes sample_set.json"},
      {"recourse", "generate one recourse; writes recourse.json"},
      {"benchmark", "evaluate every method at one configuration point; writes CSV and manifest"},
      {"sweep", "cost/validity sweep over the configured grids; writes CSV and manifest"},
  };
  std::string config_path;
  std::string out_dir;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("-c,--config", config_path, "configuration file")->required();
    sub->add_option("-o,--out", out_dir, "output directory (overrides output_dir)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string command = "rbr";
    for (auto* sub : app.get_subcommands()) command = sub->get_name();
    return report(command, "usage", 64, e.what());
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return run(command, config_path, out_dir);
}
