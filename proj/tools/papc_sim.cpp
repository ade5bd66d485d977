// Command-line front end: Monte Carlo sum-rate sweeps (`simulate`) and
// closed-form approximation checks (`validate-approx`), both emitting CSV.
// Exit codes: 0 success, 2 configuration error, 3 I/O error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "papc/harness.hpp"

namespace {

// "a:b:c" arithmetic range (start:step:stop, inclusive) or comma list
std::vector<double> parse_double_list(const std::string& text)
{
    std::vector<double> values;
    if (text.find(':') != std::string::npos)
    {
        double start = 0.0, step = 0.0, stop = 0.0;
        char c1 = 0, c2 = 0;
        std::istringstream stream(text);
        if (!(stream >> start >> c1 >> step >> c2 >> stop) || c1 != ':' || c2 != ':' || step <= 0.0)
            throw std::invalid_argument("bad range '" + text + "' (want start:step:stop)");
        for (double v = start; v <= stop + 1e-9 * step; v += step)
            values.push_back(v);
        return values;
    }
    std::istringstream stream(text);
    std::string token;
    while (std::getline(stream, token, ','))
    {
        if (token.empty())
            continue;
        values.push_back(std::stod(token));
    }
    if (values.empty())
        throw std::invalid_argument("empty value list '" + text + "'");
    return values;
}

std::vector<arma::uword> parse_uword_list(const std::string& text)
{
    std::vector<arma::uword> values;
    for (double v : parse_double_list(text))
    {
        if (v < 1.0 || v != std::floor(v))
            throw std::invalid_argument("expected positive integers in '" + text + "'");
        values.push_back(static_cast<arma::uword>(v));
    }
    return values;
}

std::vector<papc::Method> parse_methods(const std::string& text)
{
    if (text == "all")
        return papc::all_methods();
    std::vector<papc::Method> methods;
    std::istringstream stream(text);
    std::string token;
    while (std::getline(stream, token, ','))
    {
        if (token.empty())
            continue;
        const auto method = papc::method_from_name(token);
        if (!method)
            throw std::invalid_argument("unknown method '" + token + "'");
        methods.push_back(*method);
    }
    if (methods.empty())
        throw std::invalid_argument("empty method list");
    return methods;
}

// Flat key=value file; '#' starts a comment. Values override any flags.
std::map<std::string, std::string> read_config_file(const std::string& path)
{
    std::ifstream file(path);
    if (!file)
        throw std::runtime_error("cannot open config file '" + path + "'");
    std::map<std::string, std::string> entries;
    std::string line;
    while (std::getline(file, line))
    {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos)
            continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line without '=': " + line);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        entries[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return entries;
}

struct SimulateArgs
{
    arma::uword m = 128;
    arma::uword k = 16;
    std::string snr_db = "-10:5:30";
    std::string beta = "1.0";
    arma::uword trials = 500;
    std::uint64_t seed = 42;
    std::string methods = "all";
    std::string out;
    std::string config;
};

struct ValidateArgs
{
    arma::uword m = 256;
    std::string k = "24";
    arma::uword trials = 200;
    std::uint64_t seed = 42;
    std::string out;
    std::string config;
};

void apply_overrides(SimulateArgs& args, const std::map<std::string, std::string>& entries)
{
    for (const auto& [key, value] : entries)
    {
        if (key == "m")
            args.m = std::stoull(value);
        else if (key == "k")
            args.k = std::stoull(value);
        else if (key == "snr-db")
            args.snr_db = value;
        else if (key == "beta")
            args.beta = value;
        else if (key == "trials")
            args.trials = std::stoull(value);
        else if (key == "seed")
            args.seed = std::stoull(value);
        else if (key == "methods")
            args.methods = value;
        else if (key == "out")
            args.out = value;
        else
            throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

void apply_overrides(ValidateArgs& args, const std::map<std::string, std::string>& entries)
{
    for (const auto& [key, value] : entries)
    {
        if (key == "m")
            args.m = std::stoull(value);
        else if (key == "k")
            args.k = value;
        else if (key == "trials")
            args.trials = std::stoull(value);
        else if (key == "seed")
            args.seed = std::stoull(value);
        else if (key == "out")
            args.out = value;
        else
            throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Power allocation for ZF/CB precoding under per-antenna power constraints"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo sum-rate sweep to CSV");
    sim->add_option("--m", sim_args.m, "BS antenna count");
    sim->add_option("--k", sim_args.k, "UE count");
    sim->add_option("--snr-db", sim_args.snr_db, "SNR grid, start:step:stop or comma list");
    sim->add_option("--beta", sim_args.beta, "CSI correlation grid, comma list in [0,1]");
    sim->add_option("--trials", sim_args.trials, "Monte Carlo trials");
    sim->add_option("--seed", sim_args.seed, "base RNG seed");
    sim->add_option("--methods", sim_args.methods, "'all' or comma list of method names");
    sim->add_option("--out", sim_args.out, "output CSV path")->required();
    sim->add_option("--config", sim_args.config, "key=value file overriding flags");

    ValidateArgs val_args;
    CLI::App* val = app.add_subcommand("validate-approx",
                                       "Monte Carlo checks of the closed-form approximations");
    val->add_option("--m", val_args.m, "BS antenna count");
    val->add_option("--k", val_args.k, "UE count(s), value, comma list, or start:step:stop");
    val->add_option("--trials", val_args.trials, "Monte Carlo trials per check");
    val->add_option("--seed", val_args.seed, "base RNG seed");
    val->add_option("--out", val_args.out, "output CSV path")->required();
    val->add_option("--config", val_args.config, "key=value file overriding flags");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try
    {
        if (sim->parsed())
        {
            if (!sim_args.config.empty())
                apply_overrides(sim_args, read_config_file(sim_args.config));

            papc::ExperimentConfig cfg;
            cfg.m = sim_args.m;
            cfg.k = sim_args.k;
            cfg.snr_db = parse_double_list(sim_args.snr_db);
            cfg.beta = parse_double_list(sim_args.beta);
            cfg.trials = sim_args.trials;
            cfg.seed = sim_args.seed;
            cfg.methods = parse_methods(sim_args.methods);
            cfg.output_path = sim_args.out;
            papc::validate_config(cfg);

            const papc::ExperimentResult result = papc::run_experiment(cfg);
            papc::emit_csv(result, cfg.output_path);
            std::cout << "wrote " << result.cells.size() << " rows to " << cfg.output_path
                      << "\n";
        }
        else
        {
            if (!val_args.config.empty())
                apply_overrides(val_args, read_config_file(val_args.config));

            const std::vector<arma::uword> k_list = parse_uword_list(val_args.k);
            const auto rows =
                papc::validate_approximations(val_args.m, k_list, val_args.trials, val_args.seed);
            papc::emit_approx_csv(rows, val_args.out);
            std::cout << "wrote " << rows.size() << " rows to " << val_args.out << "\n";
        }
    }
    catch (const std::invalid_argument& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::domain_error& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::runtime_error& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
