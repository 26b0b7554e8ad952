// dw: command-line front end for the decision engine.
//
// Exit codes: 0 success, 1 domain error (invalid diagram, bad parameter,
// unreadable file), 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dw/dw.hpp"
#include "dw/store/http_api.hpp"

namespace {

dw::InfluenceDiagram load_diagram(const std::string& path) { return dw::decode(dw::read_file(path)); }

void print_result(const dw::SolveResult& r, const dw::InfluenceDiagram& d, const std::string& output) {
    if (output == "machine") {
        dw::Json j = dw::to_json(r);
        j["policy_table"] = dw::policy_table(r.policy, dw::canonicalize(d));
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::cout.precision(12);
    std::cout << "expected utility: " << r.expected_utility << "\n";
    dw::Json table = dw::policy_table(r.policy, dw::canonicalize(d));
    if (!table.empty()) std::cout << "policy:\n";
    for (const auto& rule : table) {
        for (const auto& row : rule["rows"]) {
            std::cout << "  " << rule["decision"].get<std::string>();
            const auto state = row["state"].get<std::string>();
            if (!rule["information"].empty()) std::cout << " [" << state << "]";
            std::cout << ": " << row["choice"].get<std::string>() << "\n";
        }
    }
    if (!r.trace.empty()) {
        std::cout << "elimination:\n";
        for (const auto& line : dw::summarize(r.trace).steps) std::cout << "  " << line << "\n";
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Influence-diagram decision engine"};
    app.require_subcommand(1);

    std::string file;
    std::string output = "text";
    std::string param;
    double from = 0.0;
    double to = 1.0;
    int steps = 10;
    int scan = 101;
    std::string chance;
    std::string decision;
    int port = 8080;
    std::string data_dir;

    auto* validate_cmd = app.add_subcommand("validate", "Check a diagram document against every invariant");
    validate_cmd->add_option("file", file, "Diagram document")->required();

    auto* solve_cmd = app.add_subcommand("solve", "Optimal policy and expected utility");
    solve_cmd->add_option("file", file, "Diagram document")->required();
    solve_cmd->add_option("--output", output, "text or machine")->check(CLI::IsMember({"text", "machine"}));

    auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force solve by policy enumeration");
    oracle_cmd->add_option("file", file, "Diagram document")->required();
    oracle_cmd->add_option("--output", output, "text or machine")->check(CLI::IsMember({"text", "machine"}));

    auto* sweep_cmd = app.add_subcommand("sweep", "One-way sweep of a parameter");
    sweep_cmd->add_option("file", file, "Diagram document")->required();
    sweep_cmd->add_option("--param", param, "NODE/ROW/OUTCOME or NODE/ROW")->required();
    sweep_cmd->add_option("--from", from, "First grid value")->required();
    sweep_cmd->add_option("--to", to, "Last grid value")->required();
    sweep_cmd->add_option("--steps", steps, "Number of intervals (grid has steps+1 points)")
        ->check(CLI::NonNegativeNumber);

    auto* thresholds_cmd = app.add_subcommand("thresholds", "Probabilities where the first choice changes");
    thresholds_cmd->add_option("file", file, "Diagram document")->required();
    thresholds_cmd->add_option("--param", param, "NODE/ROW/OUTCOME")->required();
    thresholds_cmd->add_option("--scan", scan, "Scan grid size")->check(CLI::Range(2, 100000));

    auto* evpi_cmd = app.add_subcommand("evpi", "Expected value of perfect information");
    evpi_cmd->add_option("file", file, "Diagram document")->required();
    evpi_cmd->add_option("--chance", chance, "Chance node to observe")->required();
    evpi_cmd->add_option("--decision", decision, "Decision that observes it")->required();

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--data-dir", data_dir, "Data directory (default $DW_DATA_DIR or ./dw-data)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*validate_cmd) {
            dw::Json j = dw::parse_json(dw::read_file(file));
            dw::detail::check_version(j, "document");
            auto report = dw::validate(dw::diagram_from_body(j, "document"));
            if (report.ok()) {
                std::cout << "ok\n";
                return 0;
            }
            for (const auto& v : report.violations)
                std::cout << v.code << "\t" << v.where << "\t" << v.message << "\n";
            return 1;
        }
        if (*solve_cmd) {
            auto d = load_diagram(file);
            print_result(dw::solve(d), d, output);
            return 0;
        }
        if (*oracle_cmd) {
            auto d = load_diagram(file);
            print_result(dw::solve_oracle(d), d, output);
            return 0;
        }
        if (*sweep_cmd) {
            auto d = load_diagram(file);
            std::vector<double> grid;
            for (int i = 0; i <= steps; ++i)
                grid.push_back(steps == 0 ? from : from + (to - from) * static_cast<double>(i) / steps);
            std::cout << dw::to_json(dw::sweep(d, dw::ParamRef::parse(param), grid)).dump(2) << "\n";
            return 0;
        }
        if (*thresholds_cmd) {
            auto d = load_diagram(file);
            dw::ThresholdOptions opts;
            opts.scan_points = static_cast<std::size_t>(scan);
            std::cout.precision(10);
            for (double t : dw::thresholds(d, dw::ParamRef::parse(param), opts)) std::cout << t << "\n";
            return 0;
        }
        if (*evpi_cmd) {
            auto d = load_diagram(file);
            std::cout.precision(12);
            std::cout << dw::evpi(d, chance, decision) << "\n";
            return 0;
        }
        if (*serve_cmd) {
            if (data_dir.empty()) {
                const char* env = std::getenv("DW_DATA_DIR");
                data_dir = env && *env ? env : "dw-data";
            }
            dw::Service service{dw::SessionStore(data_dir)};
            httplib::Server server;
            service.mount(server);
            std::cerr << "serving on port " << port << " with data in " << data_dir << "\n";
            if (!server.listen("0.0.0.0", port)) {
                std::cerr << "error: cannot listen on port " << port << "\n";
                return 1;
            }
            return 0;
        }
    } catch (const dw::ValidationError& e) {
        for (const auto& v : e.report().violations)
            std::cerr << "error: " << v.code << " " << v.where << ": " << v.message << "\n";
        return 1;
    } catch (const dw::Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
