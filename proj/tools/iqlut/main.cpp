#include <cstdio>
#include <map>

#include <fmt/format.h>

#include "common.hpp"
#include "iqlut/error.hpp"
#include "iqlut/parallel.hpp"

int main(int argc, char** argv) {
  using namespace iqlut::cli;

  CLI::App app{"iqlut: lookup-table super-resolution (train, convert, infer, evaluate)"};
  app.set_version_flag("--version", IQLUT_VERSION);
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.require_subcommand(1);

  RunContext ctx;
  ctx.threads = iqlut::default_thread_count();
  app.add_option("--threads", ctx.threads, "Worker threads (default: $IQLUT_THREADS or the core count)");

  std::map<const CLI::App*, Runner> runners;
  for (auto add : {add_train, add_build_lut, add_search_ab, add_inspect, add_infer, add_eval, add_resize}) {
    Runner r = add(app, ctx);
    runners[app.get_subcommands({}).back()] = std::move(r);
  }

  auto finish = [&](const CLI::App& scope, int code, const std::string& error) {
    if (!error.empty()) fmt::print(stderr, "error: {}\n", error);
    ctx.emit(ctx.manifest(scope, code, error));
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    ctx.set_command(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name());
    return finish(app, 2, e.what());
  }

  const CLI::App* sub = app.get_subcommands().front();
  ctx.set_command(sub->get_name());
  try {
    if (ctx.threads < 1) throw iqlut::ConfigError("--threads must be >= 1");
    runners.at(sub)();
  } catch (const iqlut::Error& e) {
    return finish(*sub, iqlut::exit_code(e.kind()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return finish(*sub, 3, e.what());
  } catch (const std::exception& e) {
    return finish(*sub, 1, e.what());
  }
  return finish(*sub, 0, "");
}
