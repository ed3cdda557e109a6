#pragma once

#include "multimatch/conditions.hpp"
#include "multimatch/market.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace multimatch {

struct RandomMarketParams {
    int agents = 3;
    int contracts = 4;
    int max_signers = 3;
    int max_acceptable = 8;  // ranked portfolios kept per agent
    std::uint64_t seed = 0;
};

// The generator's rejection filter: a per-agent preference condition, or the
// one-contract-per-group structural requirement on acceptable portfolios.
struct GeneratorFilter {
    std::optional<Condition> condition;
    bool one_contract_per_group = false;

    bool active() const { return condition.has_value() || one_contract_per_group; }
};

inline std::optional<GeneratorFilter> filter_from_name(std::string_view name) {
    GeneratorFilter f;
    std::string normalized(name);
    for (char& ch : normalized)
        if (ch == '-') ch = '_';
    if (normalized == "one_contract_per_group") {
        f.one_contract_per_group = true;
        return f;
    }
    if (auto c = condition_from_name(normalized)) {
        f.condition = *c;
        return f;
    }
    return std::nullopt;
}

struct GenerationStats {
    long attempts = 0;  // preference draws across all agents
    std::vector<int> attempts_per_agent;
    bool exhausted = false;
    int exhausted_agent = -1;
};

inline constexpr int kGenerationAttemptCap = 10000;  // per agent

namespace detail {

inline int draw_below(std::mt19937_64& rng, int n) {
    return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

// Uniformly includes each nonempty portfolio, shuffles the kept ones into a
// ranked order, then truncates to the acceptable-list budget.
inline std::vector<std::uint32_t> draw_ranked(std::mt19937_64& rng, int n, int max_acceptable) {
    std::vector<std::uint32_t> kept;
    const std::uint32_t limit = n >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << n) - 1;
    for (std::uint32_t s = 1; s <= limit; ++s)
        if (rng() & 1u) kept.push_back(s);
    for (int i = static_cast<int>(kept.size()) - 1; i > 0; --i)
        std::swap(kept[static_cast<std::size_t>(i)], kept[static_cast<std::size_t>(draw_below(rng, i + 1))]);
    if (static_cast<int>(kept.size()) > max_acceptable) kept.resize(static_cast<std::size_t>(max_acceptable));
    return kept;
}

inline bool ranked_in_distinct_groups(const AgentView& v) {
    for (std::uint32_t entry : v.ranked) {
        std::vector<int> members;
        for (int i = 0; i < v.size(); ++i)
            if ((entry >> i) & 1u) members.push_back(i);
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = i + 1; j < members.size(); ++j)
                if (v.signer[static_cast<std::size_t>(members[i])] ==
                    v.signer[static_cast<std::size_t>(members[j])])
                    return false;
    }
    return true;
}

}  // namespace detail

// Deterministic function of the parameters: agents a1..aN, contracts c1..cM
// with uniformly drawn signer sets, and per-agent ranked lists drawn as above.
// With a filter, each agent's preference is rejection-sampled until it passes
// the named check; nullopt (with stats) when the attempt cap runs out.
inline std::optional<Market> random_market(const RandomMarketParams& params, GeneratorFilter filter = {},
                                           GenerationStats* stats_out = nullptr) {
    if (params.agents < 2 || params.agents > Market::kMaxAgents)
        throw std::invalid_argument("random_market: agent count must be between 2 and " +
                                    std::to_string(Market::kMaxAgents));
    if (params.contracts < 0 || params.contracts > Market::kMaxContracts)
        throw std::invalid_argument("random_market: contract count must be between 0 and " +
                                    std::to_string(Market::kMaxContracts));
    if (params.max_signers < 2) throw std::invalid_argument("random_market: max signers must be at least 2");

    std::mt19937_64 rng(params.seed);
    GenerationStats stats;
    stats.attempts_per_agent.assign(static_cast<std::size_t>(params.agents), 0);

    MarketDraft draft;
    for (int a = 0; a < params.agents; ++a) draft.agents.push_back({"a" + std::to_string(a + 1), 0});

    const int signer_cap = std::min(params.max_signers, params.agents);
    std::vector<int> scratch(static_cast<std::size_t>(params.agents));
    std::vector<AgentSet> signer_sets;
    for (int c = 0; c < params.contracts; ++c) {
        const int k = 2 + (signer_cap > 2 ? detail::draw_below(rng, signer_cap - 1) : 0);
        for (int i = 0; i < params.agents; ++i) scratch[static_cast<std::size_t>(i)] = i;
        AgentSet signers;
        for (int i = 0; i < k; ++i) {
            const int j = i + detail::draw_below(rng, params.agents - i);
            std::swap(scratch[static_cast<std::size_t>(i)], scratch[static_cast<std::size_t>(j)]);
            signers = signers.with(scratch[static_cast<std::size_t>(i)]);
        }
        MarketDraft::RawContract raw;
        raw.id = "c" + std::to_string(c + 1);
        signers.for_each([&](int a) { raw.signers.push_back(draft.agents[static_cast<std::size_t>(a)].name); });
        draft.contracts.push_back(std::move(raw));
        signer_sets.push_back(signers);
    }

    for (int a = 0; a < params.agents; ++a) {
        detail::AgentView view;
        for (int c = 0; c < params.contracts; ++c) {
            if (!signer_sets[static_cast<std::size_t>(c)].contains(a)) continue;
            view.universe.push_back(c);
            view.signer.push_back(signer_sets[static_cast<std::size_t>(c)]);
            view.id.push_back(draft.contracts[static_cast<std::size_t>(c)].id);
        }
        bool accepted = false;
        for (int attempt = 0; attempt < kGenerationAttemptCap; ++attempt) {
            ++stats.attempts;
            ++stats.attempts_per_agent[static_cast<std::size_t>(a)];
            view.ranked = detail::draw_ranked(rng, view.size(), params.max_acceptable);
            bool ok = true;
            if (filter.condition) ok = detail::check_condition_view(view, *filter.condition).holds;
            if (ok && filter.one_contract_per_group) ok = detail::ranked_in_distinct_groups(view);
            if (ok) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            stats.exhausted = true;
            stats.exhausted_agent = a;
            if (stats_out) *stats_out = stats;
            return std::nullopt;
        }
        if (view.ranked.empty()) continue;
        MarketDraft::RawPreference pref;
        pref.agent = draft.agents[static_cast<std::size_t>(a)].name;
        for (std::uint32_t entry : view.ranked) {
            std::vector<std::string> ids;
            for (int i = 0; i < view.size(); ++i)
                if ((entry >> i) & 1u) ids.push_back(view.id[static_cast<std::size_t>(i)]);
            pref.portfolios.push_back(std::move(ids));
        }
        draft.preferences.push_back(std::move(pref));
    }

    if (stats_out) *stats_out = stats;
    std::vector<Diagnostic> diags;
    std::optional<Market> market = validate_market(draft, diags);
    if (!market) throw std::logic_error("random_market produced an invalid draft: " + diagnostics_text(diags));
    return market;
}

}  // namespace multimatch
