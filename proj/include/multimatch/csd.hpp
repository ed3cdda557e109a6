#pragma once

#include "multimatch/stability.hpp"

#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace multimatch {

struct CsdStep {
    int agent = -1;
    int candidates_considered = 0;
    ContractSet chosen;
    ContractSet pool_after;
    // Set when the winning comparison was decided by the completion rule,
    // i.e. every candidate portfolio at this step was unacceptable.
    bool completion_rule_used = false;
};

struct CsdResult {
    ContractSet outcome;
    std::vector<CsdStep> steps;
};

// All extensions available to `agent`: subsets of her contracts avoiding the
// forbidden agents' contracts such that pool plus extension is still part of
// some individually rational outcome. Canonical order; always contains the
// empty extension.
inline std::vector<ContractSet> feasible_extensions(const Market& m,
                                                    const std::vector<ContractSet>& ir_outcomes,
                                                    ContractSet pool, int agent, AgentSet forbidden) {
    bool pool_ok = false;
    for (ContractSet y : ir_outcomes)
        if (pool.subset_of(y)) {
            pool_ok = true;
            break;
        }
    if (!pool_ok)
        throw std::invalid_argument("feasible_extensions: pool is not part of any individually rational outcome");

    const ContractSet avail = m.contracts_of(agent) - m.restrict_group(m.all_contracts(), forbidden);
    std::vector<ContractSet> out;
    for_each_subset_canonical(avail, [&](ContractSet z) {
        const ContractSet widened = pool | z;
        for (ContractSet y : ir_outcomes) {
            if (widened.subset_of(y)) {
                out.push_back(z);
                break;
            }
        }
        return true;
    });
    return out;
}

inline std::vector<ContractSet> feasible_extensions(const Market& m, ContractSet pool, int agent,
                                                    AgentSet forbidden) {
    return feasible_extensions(m, enumerate_individually_rational(m), pool, agent, forbidden);
}

// Constrained serial dictatorship. Agents take turns in the given order; each
// adds the contracts, untouched by her predecessors, that leave the pool part
// of some individually rational outcome and make her own portfolio best. The
// last agent takes no turn: with every contract multi-signer, all of them are
// reachable through the earlier agents.
inline CsdResult run_csd(const Market& m, const std::vector<int>& order) {
    if (static_cast<int>(order.size()) != m.agent_count())
        throw std::invalid_argument("csd: ordering must list every agent exactly once");
    std::vector<bool> seen(static_cast<std::size_t>(m.agent_count()), false);
    for (int a : order) {
        if (a < 0 || a >= m.agent_count() || seen[static_cast<std::size_t>(a)])
            throw std::invalid_argument("csd: ordering must list every agent exactly once");
        seen[static_cast<std::size_t>(a)] = true;
    }

    const std::vector<ContractSet> ir_outcomes = enumerate_individually_rational(m);
    CsdResult result;
    ContractSet pool;
    AgentSet predecessors;
    const int steps = m.agent_count() > 1 ? m.agent_count() - 1 : 0;
    for (int k = 0; k < steps; ++k) {
        const int agent = order[static_cast<std::size_t>(k)];
        const std::vector<ContractSet> extensions =
            feasible_extensions(m, ir_outcomes, pool, agent, predecessors);
        const ContractSet base = m.restrict(pool, agent);
        ContractSet best_extension = extensions.front();  // the empty extension
        ContractSet best_portfolio = base | best_extension;
        for (std::size_t i = 1; i < extensions.size(); ++i) {
            const ContractSet portfolio = base | extensions[i];
            if (m.compare(agent, portfolio, best_portfolio) == Rel::first) {
                best_extension = extensions[i];
                best_portfolio = portfolio;
            }
        }
        pool = pool | best_extension;
        CsdStep step;
        step.agent = agent;
        step.candidates_considered = static_cast<int>(extensions.size());
        step.chosen = best_extension;
        step.pool_after = pool;
        step.completion_rule_used =
            extensions.size() > 1 && !best_portfolio.empty() && !m.acceptable(agent, best_portfolio);
        result.steps.push_back(step);
        predecessors = predecessors.with(agent);
    }
    result.outcome = pool;
    return result;
}

// Seeded Fisher-Yates permutation. Byte-reproducible across platforms: draws
// come straight from the engine, not from a distribution adapter.
inline std::vector<int> random_ordering(int agent_count, std::uint64_t seed) {
    std::vector<int> order(static_cast<std::size_t>(agent_count));
    for (int i = 0; i < agent_count; ++i) order[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    for (int i = agent_count - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(i + 1))]);
    return order;
}

inline std::vector<int> parse_ordering(const Market& m, std::string_view text, std::string& error) {
    std::vector<int> order;
    std::vector<bool> seen(static_cast<std::size_t>(m.agent_count()), false);
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string_view name =
            comma == std::string_view::npos ? text.substr(start) : text.substr(start, comma - start);
        const int a = m.agent_index(name);
        if (a < 0) {
            error = "unknown agent '" + std::string(name) + "' in ordering";
            return {};
        }
        if (seen[static_cast<std::size_t>(a)]) {
            error = "agent '" + std::string(name) + "' listed twice in ordering";
            return {};
        }
        seen[static_cast<std::size_t>(a)] = true;
        order.push_back(a);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (static_cast<int>(order.size()) != m.agent_count()) {
        error = "ordering must name every agent exactly once";
        return {};
    }
    return order;
}

inline std::string trace_text(const Market& m, const CsdResult& r) {
    std::ostringstream out;
    for (std::size_t k = 0; k < r.steps.size(); ++k) {
        const CsdStep& s = r.steps[k];
        out << "step " << (k + 1) << " agent=" << m.agent_name(s.agent) << " chose=" << m.set_text(s.chosen)
            << " pool=" << m.set_text(s.pool_after);
        if (s.completion_rule_used) out << " completion-rule";
        out << '\n';
    }
    out << "result=" << m.set_text(r.outcome) << '\n';
    return out.str();
}

}  // namespace multimatch
