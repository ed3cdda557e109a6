// Command-line front end: market validation, stability audits, preference
// condition tables, constrained serial dictatorship runs, agent-target
// compilation, and seeded random market generation.

#include "multimatch/multimatch.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;    // validation / bad arguments
constexpr int kExitResource = 2; // size caps, sampling exhaustion
constexpr int kExitIo = 3;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct LoadedMarket {
    std::optional<multimatch::Market> market;
    int exit_code = kExitOk;
};

LoadedMarket load_market_file(const std::string& path) {
    const auto text = read_file(path);
    if (!text) {
        std::cerr << "error: cannot read '" << path << "'\n";
        return {std::nullopt, kExitIo};
    }
    std::vector<multimatch::Diagnostic> diags;
    auto market = multimatch::load_market(*text, diags);
    if (!market) {
        std::cerr << multimatch::diagnostics_text(diags);
        return {std::nullopt, kExitInput};
    }
    return {std::move(market), kExitOk};
}

int cmd_check(const std::string& path) {
    LoadedMarket loaded = load_market_file(path);
    if (!loaded.market) return loaded.exit_code;
    std::cout << "OK\n";
    return kExitOk;
}

int cmd_audit(const std::string& path, const std::string& outcome_text, const std::string& format) {
    LoadedMarket loaded = load_market_file(path);
    if (!loaded.market) return loaded.exit_code;
    const multimatch::Market& m = *loaded.market;
    std::string error;
    auto outcome = multimatch::parse_contract_set(m, outcome_text, error);
    if (!outcome) {
        std::cerr << "error: " << error << '\n';
        return kExitInput;
    }
    const multimatch::StabilityReport report = multimatch::audit(m, *outcome);
    std::cout << (format == "structured" ? multimatch::report_structured(m, report)
                                         : multimatch::report_text(m, report));
    return kExitOk;
}

int cmd_conditions(const std::string& path, const std::string& condition_filter, const std::string& format) {
    LoadedMarket loaded = load_market_file(path);
    if (!loaded.market) return loaded.exit_code;
    const multimatch::Market& m = *loaded.market;

    std::vector<multimatch::Condition> wanted;
    if (condition_filter.empty()) {
        for (std::size_t i = 0; i < multimatch::kConditionNames.size(); ++i)
            wanted.push_back(static_cast<multimatch::Condition>(i));
    } else {
        auto c = multimatch::condition_from_name(condition_filter);
        if (!c) {
            std::cerr << "error: unknown condition '" << condition_filter << "'\n";
            return kExitInput;
        }
        wanted.push_back(*c);
    }

    try {
        std::ostringstream out;
        for (int a = 0; a < m.agent_count(); ++a) {
            for (multimatch::Condition c : wanted) {
                const multimatch::ConditionReport r = multimatch::check_condition(m, a, c);
                if (format == "structured") {
                    out << multimatch::condition_line(m, r) << '\n';
                } else {
                    out << m.agent_name(a) << ": " << multimatch::condition_name(c) << ": "
                        << (r.holds ? "holds" : "fails");
                    if (r.counterexample)
                        out << "  (" << multimatch::counterexample_value(m, *r.counterexample) << ')';
                    out << '\n';
                }
            }
        }
        const multimatch::GroupUniquenessReport g = multimatch::check_one_contract_per_group(m);
        if (format == "structured") {
            out << "one_contract_per_group=" << (g.holds ? "true" : "false");
            if (!g.holds)
                out << " agent=" << m.agent_name(*g.agent)
                    << " counterexample=" << multimatch::counterexample_value(m, *g.counterexample);
            out << '\n';
        } else {
            out << "market: one contract per group: " << (g.holds ? "holds" : "fails");
            if (!g.holds)
                out << "  (" << m.agent_name(*g.agent) << ": "
                    << multimatch::counterexample_value(m, *g.counterexample) << ')';
            out << '\n';
        }
        std::cout << out.str();
    } catch (const multimatch::SizeCapError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitResource;
    }
    return kExitOk;
}

int cmd_csd(const std::string& path, const std::string& order_text, std::optional<std::uint64_t> seed) {
    LoadedMarket loaded = load_market_file(path);
    if (!loaded.market) return loaded.exit_code;
    const multimatch::Market& m = *loaded.market;

    std::vector<int> order;
    if (!order_text.empty()) {
        std::string error;
        order = multimatch::parse_ordering(m, order_text, error);
        if (order.empty() && m.agent_count() > 0) {
            std::cerr << "error: " << error << '\n';
            return kExitInput;
        }
    } else if (seed) {
        order = multimatch::random_ordering(m.agent_count(), *seed);
    } else {
        std::cerr << "error: csd needs --order or --seed\n";
        return kExitInput;
    }

    try {
        const multimatch::CsdResult result = multimatch::run_csd(m, order);
        std::cout << multimatch::trace_text(m, result);
    } catch (const multimatch::SizeCapError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitResource;
    }
    return kExitOk;
}

int cmd_outcome_lists(const std::string& path, bool efficient_only) {
    LoadedMarket loaded = load_market_file(path);
    if (!loaded.market) return loaded.exit_code;
    const multimatch::Market& m = *loaded.market;
    try {
        const std::vector<multimatch::ContractSet> ir = multimatch::enumerate_individually_rational(m);
        for (multimatch::ContractSet y : ir) {
            if (efficient_only && !multimatch::constrained_efficiency(m, y, ir).efficient) continue;
            std::cout << m.set_text(y) << '\n';
        }
    } catch (const multimatch::SizeCapError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitResource;
    }
    return kExitOk;
}

int cmd_compile_atm(const std::string& path, const std::string& out_path) {
    const auto text = read_file(path);
    if (!text) {
        std::cerr << "error: cannot read '" << path << "'\n";
        return kExitIo;
    }
    std::vector<multimatch::Diagnostic> diags;
    auto spec = multimatch::load_atm(*text, diags);
    if (!spec) {
        std::cerr << multimatch::diagnostics_text(diags);
        return kExitInput;
    }
    std::optional<multimatch::Market> market;
    try {
        market = multimatch::compile_atm(*spec, diags);
    } catch (const multimatch::SizeCapError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitResource;
    }
    if (!market) {
        std::cerr << multimatch::diagnostics_text(diags);
        return kExitInput;
    }
    const std::string out_text = multimatch::write_market(*market);
    if (out_path.empty()) {
        std::cout << out_text;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write '" << out_path << "'\n";
            return kExitIo;
        }
        out << out_text;
    }
    return kExitOk;
}

int cmd_random(const multimatch::RandomMarketParams& params, const std::string& condition_filter,
               const std::string& out_path) {
    multimatch::GeneratorFilter filter;
    if (!condition_filter.empty()) {
        auto f = multimatch::filter_from_name(condition_filter);
        if (!f) {
            std::cerr << "error: unknown condition '" << condition_filter << "'\n";
            return kExitInput;
        }
        filter = *f;
    }
    multimatch::GenerationStats stats;
    std::optional<multimatch::Market> market;
    try {
        market = multimatch::random_market(params, filter, &stats);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    if (filter.active())
        std::cerr << "sampling: " << stats.attempts << " preference draws across " << params.agents
                  << " agents\n";
    if (!market) {
        std::cerr << "error: attempt cap (" << multimatch::kGenerationAttemptCap
                  << " per agent) exhausted while sampling agent a" << (stats.exhausted_agent + 1)
                  << " against the condition filter\n";
        return kExitResource;
    }
    const std::string out_text = multimatch::write_market(*market);
    if (out_path.empty()) {
        std::cout << out_text;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write '" << out_path << "'\n";
            return kExitIo;
        }
        out << out_text;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multilateral matching market toolkit"};
    app.require_subcommand(1);

    std::string path, outcome_text, order_text, condition_filter, out_path;
    std::string format = "text";
    std::optional<std::uint64_t> seed;
    multimatch::RandomMarketParams params;

    auto* check = app.add_subcommand("check", "validate a market file");
    check->add_option("file", path)->required();

    auto* audit = app.add_subcommand("audit", "audit an outcome against all stability notions");
    audit->add_option("file", path)->required();
    audit->add_option("--outcome", outcome_text, "outcome literal, e.g. {x,y}")->required();
    audit->add_option("--format", format)->check(CLI::IsMember({"text", "structured"}));

    auto* conditions = app.add_subcommand("conditions", "check preference conditions per agent");
    conditions->add_option("file", path)->required();
    conditions->add_option("--condition", condition_filter, "restrict to one condition");
    conditions->add_option("--format", format)->check(CLI::IsMember({"text", "structured"}));

    auto* csd = app.add_subcommand("csd", "run constrained serial dictatorship");
    csd->add_option("file", path)->required();
    csd->add_option("--order", order_text, "comma-separated agent names");
    csd->add_option("--seed", seed, "seed for a random ordering");

    auto* ir = app.add_subcommand("ir", "list individually rational outcomes");
    ir->add_option("file", path)->required();

    auto* efficient = app.add_subcommand("efficient", "list constrained efficient outcomes");
    efficient->add_option("file", path)->required();

    auto* compile = app.add_subcommand("compile-atm", "compile an agent-target spec to a market file");
    compile->add_option("file", path)->required();
    compile->add_option("-o", out_path, "output market file (stdout if omitted)");

    auto* random = app.add_subcommand("random", "generate a seeded random market");
    random->add_option("--agents", params.agents);
    random->add_option("--contracts", params.contracts);
    random->add_option("--max-signers", params.max_signers);
    random->add_option("--seed", seed)->required();
    random->add_option("--condition", condition_filter, "rejection-sample until all agents pass");
    random->add_option("-o", out_path, "output market file (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    if (check->parsed()) return cmd_check(path);
    if (audit->parsed()) return cmd_audit(path, outcome_text, format);
    if (conditions->parsed()) return cmd_conditions(path, condition_filter, format);
    if (csd->parsed()) return cmd_csd(path, order_text, seed);
    if (ir->parsed()) return cmd_outcome_lists(path, false);
    if (efficient->parsed()) return cmd_outcome_lists(path, true);
    if (compile->parsed()) return cmd_compile_atm(path, out_path);
    if (random->parsed()) {
        params.seed = seed.value_or(0);
        return cmd_random(params, condition_filter, out_path);
    }
    return kExitInput;
}
