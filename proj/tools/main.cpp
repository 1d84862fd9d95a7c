/*
 Copyright 2026 The feedsynth Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "feedsynth/demo_configs.hpp"
#include "feedsynth/runner.hpp"

namespace
{

constexpr const char *kOutputEnv = "FEEDSYNTH_OUTPUT_DIR";

std::optional<std::string> output_override(const std::string &flag)
{
  if (!flag.empty())
    return flag;
  if (const char *env = std::getenv(kOutputEnv); env && *env)
    return std::string(env);
  return std::nullopt;
}

int report_violations(const std::vector<std::string> &violations)
{
  for (const std::string &v : violations)
    std::cerr << "config error: " << v << "\n";
  return feedsynth::kExitConfigError;
}

int execute(feedsynth::ParsedConfig parsed, const std::string &output_flag, int workers,
            bool quiet)
{
  if (!parsed.violations.empty())
    return report_violations(parsed.violations);
  if (workers >= 0)
    parsed.config.workers = workers;
  const feedsynth::RunOutcome outcome =
      feedsynth::run(parsed.config, output_override(output_flag), quiet ? nullptr : &std::cerr);
  std::cout << outcome.status;
  if (!outcome.message.empty())
    std::cout << ": " << outcome.message;
  std::cout << "\n";
  if (outcome.exit_code != feedsynth::kExitConfigError)
    std::cout << "outputs in " << outcome.output_dir << "\n";
  return outcome.exit_code;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Feedback control synthesis by descent on the feedback field"};
  app.require_subcommand(1);

  std::string config_path, demo_name, output_flag;
  int workers = -1;
  bool quiet = false;

  CLI::App *run_cmd = app.add_subcommand("run", "Run the pipeline described by a config file");
  run_cmd->add_option("config", config_path, "Path to a JSON run config")->required();
  run_cmd->add_option("-o,--output", output_flag, "Output directory (overrides config and env)");
  run_cmd->add_option("-w,--workers", workers, "Worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  run_cmd->add_flag("-q,--quiet", quiet, "Do not print per-iteration progress");

  CLI::App *validate_cmd = app.add_subcommand("validate", "List every violation in a config file");
  validate_cmd->add_option("config", config_path, "Path to a JSON run config")->required();
  validate_cmd->add_option("-o,--output", output_flag, "Output directory to check");

  CLI::App *demo_cmd = app.add_subcommand("demo", "Run a shipped demo config");
  demo_cmd->add_option("name", demo_name, "Demo name");
  demo_cmd->add_option("-o,--output", output_flag, "Output directory (overrides config and env)");
  demo_cmd->add_option("-w,--workers", workers, "Worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  demo_cmd->add_flag("-q,--quiet", quiet, "Do not print per-iteration progress");
  bool list = false, print = false;
  demo_cmd->add_flag("-l,--list", list, "List the shipped demos");
  demo_cmd->add_flag("-p,--print", print, "Print the demo config instead of running it");

  CLI11_PARSE(app, argc, argv);

  if (*run_cmd)
    return execute(feedsynth::load_config_file(config_path), output_flag, workers, quiet);

  if (*validate_cmd)
  {
    const feedsynth::ParsedConfig parsed = feedsynth::load_config_file(config_path);
    if (!parsed.violations.empty())
      return report_violations(parsed.violations);
    const auto violations =
        feedsynth::validate_config(parsed.config, output_override(output_flag));
    if (!violations.empty())
      return report_violations(violations);
    std::cout << "ok\n";
    return feedsynth::kExitConverged;
  }

  if (list || demo_name.empty())
  {
    for (const auto &[name, text] : feedsynth::demo_configs())
      std::cout << name << "\n";
    return demo_name.empty() && !list ? feedsynth::kExitConfigError : 0;
  }
  const std::optional<std::string> text = feedsynth::demo_config(demo_name);
  if (!text)
  {
    std::cerr << "unknown demo '" << demo_name << "'; try --list\n";
    return feedsynth::kExitConfigError;
  }
  if (print)
  {
    std::cout << *text;
    return 0;
  }
  return execute(feedsynth::parse_config_text(*text), output_flag, workers, quiet);
}
