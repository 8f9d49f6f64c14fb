// Command-line driver: run experiment batches, emit bound curves, solve
// matchings against the exact oracle, and validate configs.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmab/config.hpp"
#include "dmab/harness.hpp"
#include "dmab/matching.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw dmab::InvalidModelError("cannot open '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

dmab::SimConfig load_or_fail(const std::string& path, int& exit_code) {
    std::vector<std::string> errors;
    dmab::SimConfig cfg;
    try {
        cfg = dmab::load_and_validate(read_file(path), errors);
    } catch (const std::exception& e) {
        std::cerr << "config parse error: " << e.what() << "\n";
        exit_code = 1;
        return cfg;
    }
    if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
        exit_code = 1;
    }
    return cfg;
}

dmab::ValueMatrix read_matrix(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw dmab::InvalidModelError("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream is(line);
        std::vector<double> row;
        double x;
        while (is >> x) row.push_back(x);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw dmab::InvalidModelError("matrix file '" + path + "' is empty");
    dmab::ValueMatrix vm(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw dmab::InvalidModelError("matrix file has ragged rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            vm.at(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
    return vm;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dmab: multi-player bandit simulator with auction-based matching"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_override;
    auto* run = app.add_subcommand("run", "execute a seeded batch and write its CSV");
    run->add_option("config", config_path, "JSON experiment config")->required();
    run->add_option("-o,--output", output_override, "override the config's output path");

    std::string bounds_config;
    std::string bounds_output;
    auto* bounds = app.add_subcommand("bounds", "emit the regret bound curve only");
    bounds->add_option("config", bounds_config, "JSON experiment config")->required();
    bounds->add_option("-o,--output", bounds_output, "write CSV here instead of stdout");

    std::string matrix_path;
    double eps = 1e-3;
    auto* match = app.add_subcommand("match", "auction a value matrix and check the oracle");
    match->add_option("matrix", matrix_path, "text file, one row of values per line")->required();
    match->add_option("--eps", eps, "auction precision")->check(CLI::PositiveNumber);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a config and report field errors");
    validate->add_option("config", validate_path, "JSON experiment config")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    try {
        if (*run) {
            int rc = 0;
            dmab::SimConfig cfg = load_or_fail(config_path, rc);
            if (rc != 0) return rc;
            std::string out_path = output_override.empty() ? cfg.output : output_override;
            if (out_path.empty()) {
                std::cerr << "config error: output: no output path given\n";
                return 1;
            }
            dmab::BatchResult res = dmab::run_batch(cfg);
            dmab::emit_csv(res.rows, out_path);
            std::cout << "wrote " << res.rows.size() << " rows x " << res.traces.size()
                      << " seeds to " << out_path << "\n";
            return 0;
        }
        if (*bounds) {
            int rc = 0;
            dmab::SimConfig cfg = load_or_fail(bounds_config, rc);
            if (rc != 0) return rc;
            std::string csv = dmab::bounds_csv(cfg);
            if (bounds_output.empty()) {
                std::cout << csv;
            } else {
                std::ofstream f(bounds_output, std::ios::binary);
                f << csv;
                std::cout << "wrote bound curve to " << bounds_output << "\n";
            }
            return 0;
        }
        if (*match) {
            dmab::ValueMatrix vm = read_matrix(matrix_path);
            auto [matching, state] = dmab::run_auction(vm, eps);
            auto [oracle, oracle_surplus] = dmab::brute_force_matching(vm);
            double surplus = dmab::matching_surplus(vm, matching);
            std::cout << "matching:";
            for (int i = 0; i < vm.players; ++i)
                std::cout << " " << (i + 1) << "->" << (matching.arm_of[static_cast<std::size_t>(i)] + 1);
            std::cout << "\nsurplus: " << surplus << "\nrounds: " << state.rounds
                      << "\noracle surplus: " << oracle_surplus
                      << "\ngap: " << (oracle_surplus - surplus) << "\n";
            if (oracle_surplus - surplus > eps) {
                std::cerr << "auction missed the eps-optimality target\n";
                return 2;
            }
            return 0;
        }
        if (*validate) {
            std::vector<std::string> errors;
            try {
                dmab::load_and_validate(read_file(validate_path), errors);
            } catch (const std::exception& e) {
                std::cerr << "config parse error: " << e.what() << "\n";
                return 1;
            }
            if (!errors.empty()) {
                for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
                return 1;
            }
            std::cout << "config ok\n";
            return 0;
        }
    } catch (const dmab::InvalidModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
