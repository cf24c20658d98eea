#include "twsim/config.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

namespace twsim
{
    namespace
    {
        std::string_view trim(std::string_view s)
        {
            const auto first = s.find_first_not_of(" \t\r");
            if (first == std::string_view::npos)
            {
                return {};
            }
            const auto last = s.find_last_not_of(" \t\r");
            return s.substr(first, last - first + 1);
        }

        std::vector<std::string_view> split(std::string_view s, char sep)
        {
            std::vector<std::string_view> out;
            std::size_t start = 0;
            while (start <= s.size())
            {
                const auto pos = s.find(sep, start);
                const auto piece = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
                if (!piece.empty())
                {
                    out.push_back(piece);
                }
                if (pos == std::string_view::npos)
                {
                    break;
                }
                start = pos + 1;
            }
            return out;
        }

        std::vector<std::string_view> words(std::string_view s)
        {
            std::vector<std::string_view> out;
            std::size_t i = 0;
            while (i < s.size())
            {
                while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
                {
                    ++i;
                }
                const auto start = i;
                while (i < s.size() && s[i] != ' ' && s[i] != '\t')
                {
                    ++i;
                }
                if (i > start)
                {
                    out.push_back(s.substr(start, i - start));
                }
            }
            return out;
        }

        template <class T>
        std::optional<T> parse_number(std::string_view s)
        {
            T v{};
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || ptr != s.data() + s.size())
            {
                return std::nullopt;
            }
            return v;
        }

        std::optional<double> parse_double(std::string_view s)
        {
            // from_chars for double is missing from older libstdc++.
            std::string tmp(s);
            std::istringstream in(tmp);
            double v = 0;
            in >> v;
            if (!in || !in.eof())
            {
                return std::nullopt;
            }
            return v;
        }

        struct LineContext
        {
            std::size_t line;
            std::string_view key;

            [[noreturn]] void error(const std::string &what) const
            {
                throw ConfigError("line " + std::to_string(line) + " (" + std::string(key) + "): " + what);
            }
        };

        template <class T>
        T need_number(const LineContext &ctx, std::string_view value)
        {
            auto v = parse_number<T>(value);
            if (!v)
            {
                ctx.error("expected an integer, got '" + std::string(value) + "'");
            }
            return *v;
        }

        double need_double(const LineContext &ctx, std::string_view value)
        {
            auto v = parse_double(value);
            if (!v)
            {
                ctx.error("expected a number, got '" + std::string(value) + "'");
            }
            return *v;
        }

        template <class T>
        std::vector<T> need_list(const LineContext &ctx, std::string_view value)
        {
            std::vector<T> out;
            for (auto piece : split(value, ','))
            {
                out.push_back(need_number<T>(ctx, piece));
            }
            if (out.empty())
            {
                ctx.error("empty list");
            }
            return out;
        }

        bool need_bool(const LineContext &ctx, std::string_view value)
        {
            if (value == "true" || value == "1" || value == "yes")
            {
                return true;
            }
            if (value == "false" || value == "0" || value == "no")
            {
                return false;
            }
            ctx.error("expected true/false, got '" + std::string(value) + "'");
        }

        NodeSpec parse_node(const LineContext &ctx, const std::vector<std::string_view> &w, std::size_t index)
        {
            // node [name] host:port first-last
            if (w.size() != 3 && w.size() != 4)
            {
                ctx.error("expected 'node [name] host:port first-last'");
            }
            NodeSpec n;
            std::size_t at = 1;
            n.name = w.size() == 4 ? std::string(w[at++]) : std::to_string(index);
            const auto endpoint = w[at++];
            const auto colon = endpoint.rfind(':');
            if (colon == std::string_view::npos)
            {
                ctx.error("expected host:port, got '" + std::string(endpoint) + "'");
            }
            n.host = std::string(endpoint.substr(0, colon));
            n.port = need_number<std::uint16_t>(ctx, endpoint.substr(colon + 1));
            const auto range = w[at];
            const auto dash = range.find('-');
            if (dash == std::string_view::npos)
            {
                n.first_lp = n.last_lp = need_number<LpId>(ctx, range);
            }
            else
            {
                n.first_lp = need_number<LpId>(ctx, range.substr(0, dash));
                n.last_lp = need_number<LpId>(ctx, range.substr(dash + 1));
            }
            return n;
        }
    }

    PholdConfig RunConfig::point(std::uint64_t workload, std::uint32_t num_entities, std::uint32_t num_lps) const
    {
        PholdConfig p = phold;
        p.workload_fpops = workload;
        p.entities = num_entities;
        p.lps = num_lps;
        return p;
    }

    void RunConfig::validate() const
    {
        if (lps.empty() || entities.empty() || workloads.empty())
        {
            throw ConfigError("lps, entities and workload need at least one value");
        }
        if (repetitions < 1)
        {
            throw ConfigError("repetitions must be at least 1");
        }
        if (!(gvt_period > 0.0))
        {
            throw ConfigError("gvt_period must be positive");
        }
        if (max_received_messages < 1)
        {
            throw ConfigError("max_received_messages must be at least 1");
        }
        try
        {
            for (auto w : workloads)
            {
                for (auto e : entities)
                {
                    for (auto l : lps)
                    {
                        point(w, e, l).validate();
                    }
                }
            }
        }
        catch (const std::invalid_argument &ex)
        {
            throw ConfigError(ex.what());
        }
        if (!topology.nodes.empty())
        {
            if (lps.size() != 1)
            {
                throw ConfigError("a topology fixes the LP count; give a single 'lps' value");
            }
            try
            {
                topology.validate(lps.front());
            }
            catch (const std::invalid_argument &ex)
            {
                throw ConfigError(ex.what());
            }
        }
    }

    RunConfig parse_config(std::string_view text)
    {
        RunConfig cfg;
        std::optional<std::string> controller;
        std::size_t line_no = 0;
        std::size_t start = 0;
        while (start <= text.size())
        {
            const auto nl = text.find('\n', start);
            auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
            start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++line_no;

            if (const auto hash = line.find('#'); hash != std::string_view::npos)
            {
                line = line.substr(0, hash);
            }
            line = trim(line);
            if (line.empty())
            {
                continue;
            }

            const auto w = words(line);
            if (w.front() == "node")
            {
                cfg.topology.nodes.push_back(parse_node({line_no, "node"}, w, cfg.topology.nodes.size()));
                continue;
            }
            if (w.front() == "controller")
            {
                if (w.size() != 2)
                {
                    LineContext{line_no, "controller"}.error("expected 'controller name'");
                }
                controller = std::string(w[1]);
                continue;
            }

            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
            {
                throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
            }
            const auto key = trim(line.substr(0, eq));
            const auto value = trim(line.substr(eq + 1));
            const LineContext ctx{line_no, key};
            if (value.empty())
            {
                ctx.error("missing value");
            }

            if (key == "seed")
            {
                cfg.phold.base_seed = need_number<std::int64_t>(ctx, value);
            }
            else if (key == "lps")
            {
                cfg.lps = need_list<std::uint32_t>(ctx, value);
            }
            else if (key == "entities")
            {
                cfg.entities = need_list<std::uint32_t>(ctx, value);
            }
            else if (key == "workload")
            {
                cfg.workloads = need_list<std::uint64_t>(ctx, value);
            }
            else if (key == "rho")
            {
                cfg.phold.rho = need_double(ctx, value);
            }
            else if (key == "mean_increment")
            {
                cfg.phold.mean_increment = need_double(ctx, value);
            }
            else if (key == "end_time")
            {
                const double t = need_double(ctx, value);
                if (!(t >= 0.0))
                {
                    ctx.error("end_time must be non-negative");
                }
                cfg.phold.end_time = Timestamp(t);
            }
            else if (key == "gvt_period")
            {
                cfg.gvt_period = need_double(ctx, value);
            }
            else if (key == "repetitions")
            {
                cfg.repetitions = need_number<std::uint32_t>(ctx, value);
            }
            else if (key == "rng_mode")
            {
                if (value == "per_entity")
                {
                    cfg.phold.rng_mode = RngMode::PerEntity;
                }
                else if (value == "per_lp")
                {
                    cfg.phold.rng_mode = RngMode::PerLp;
                }
                else
                {
                    ctx.error("expected per_entity or per_lp");
                }
            }
            else if (key == "max_received_messages")
            {
                cfg.max_received_messages = need_number<std::size_t>(ctx, value);
            }
            else if (key == "record_trace")
            {
                cfg.record_trace = need_bool(ctx, value);
            }
            else if (key == "connect_timeout")
            {
                cfg.connect_timeout = need_double(ctx, value);
            }
            else if (key == "output")
            {
                cfg.output = std::string(value);
            }
            else
            {
                ctx.error("unknown key");
            }
        }

        if (controller)
        {
            try
            {
                cfg.topology.controller_node = cfg.topology.find(*controller);
            }
            catch (const std::invalid_argument &ex)
            {
                throw ConfigError(std::string("controller: ") + ex.what());
            }
        }
        cfg.phold.lps = cfg.lps.front();
        cfg.phold.entities = cfg.entities.front();
        cfg.phold.workload_fpops = cfg.workloads.front();
        cfg.validate();
        return cfg;
    }

    RunConfig load_config(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw ConfigError("cannot open config file " + path.string());
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_config(buf.str());
    }
}
