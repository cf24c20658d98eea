#include "twsim/config.hpp"
#include "twsim/runner.hpp"
#include "twsim/sequential.hpp"
#include "twsim/trace.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace
{
    std::ofstream open_output(const std::string &path)
    {
        std::ofstream out(path);
        if (!out)
        {
            throw std::runtime_error("cannot write " + path);
        }
        return out;
    }

    int cmd_run(const std::string &config_path, const std::string &backend_name, std::string out_path,
                const std::string &node)
    {
        const auto cfg = twsim::load_config(config_path);
        const auto backend = twsim::parse_backend(backend_name);
        const auto result = twsim::run_experiment(cfg, backend, node);
        if (result.rows.empty())
        {
            // A non-controller node; the controller writes the results.
            return 0;
        }
        if (out_path.empty())
        {
            out_path = cfg.output;
        }
        if (out_path.empty() || out_path == "-")
        {
            twsim::write_results_csv(std::cout, result);
        }
        else
        {
            auto out = open_output(out_path);
            twsim::write_results_csv(out, result);
        }
        return 0;
    }

    int cmd_oracle(const std::string &config_path, const std::string &out_path)
    {
        const auto cfg = twsim::load_config(config_path);
        // First value of every list; lps only matters with rng_mode = per_lp.
        const auto trace = twsim::run_sequential(cfg.phold);
        if (out_path == "-")
        {
            twsim::write_trace(std::cout, trace);
        }
        else
        {
            auto out = open_output(out_path);
            twsim::write_trace(out, trace);
        }
        return 0;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Time Warp PHOLD simulator"};
    app.require_subcommand(1);

    std::string config_path, backend = "inproc", out_path, node;
    auto *run = app.add_subcommand("run", "Run the experiment matrix of a config file");
    run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("--backend", backend, "Transport backend")->check(CLI::IsMember({"inproc", "tcp"}));
    run->add_option("--out", out_path, "CSV output path ('-' for stdout)");
    run->add_option("--node", node, "Topology node this process runs (tcp backend)");

    std::string oracle_config, trace_path;
    auto *oracle = app.add_subcommand("oracle", "Sequential reference trace of a config file");
    oracle->add_option("--config", oracle_config, "Config file")->required()->check(CLI::ExistingFile);
    oracle->add_option("--out", trace_path, "Trace output path ('-' for stdout)")->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*run)
        {
            return cmd_run(config_path, backend, out_path, node);
        }
        return cmd_oracle(oracle_config, trace_path);
    }
    catch (const std::exception &e)
    {
        std::cerr << "twsim: " << e.what() << '\n';
        return 1;
    }
}
