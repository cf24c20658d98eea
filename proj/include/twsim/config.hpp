#pragma once

#include "twsim/phold.hpp"
#include "twsim/tcp_transport.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace twsim
{
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Experiment description. The lists expand to the run matrix
    // workloads x entities x lps, each point repeated `repetitions` times.
    struct RunConfig
    {
        PholdConfig phold;
        std::vector<std::uint32_t> lps{1};
        std::vector<std::uint32_t> entities{840};
        std::vector<std::uint64_t> workloads{0};
        double gvt_period = 1.0;
        std::uint32_t repetitions = 1;
        std::size_t max_received_messages = 64;
        bool record_trace = false;
        double connect_timeout = 30.0;
        Topology topology;
        std::string output;

        // PholdConfig for one point of the matrix.
        PholdConfig point(std::uint64_t workload, std::uint32_t entities, std::uint32_t lps) const;

        void validate() const;
    };

    // Flat "key = value" text, '#' starts a comment. Recognised keys:
    //   seed, lps, entities, workload (comma lists allowed for the last three),
    //   rho, mean_increment, end_time, gvt_period, repetitions, rng_mode
    //   (per_entity | per_lp), max_received_messages, record_trace,
    //   connect_timeout, output
    // and topology lines:
    //   node [name] host:port first-last
    //   controller name
    // Throws ConfigError naming the offending line.
    RunConfig parse_config(std::string_view text);
    RunConfig load_config(const std::filesystem::path &path);
}
