#pragma once

#include "multimatch/market.hpp"

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace multimatch {

// An agent-target problem: indivisible elementary cooperations, contracts that
// bundle cooperations implemented by one common group, and per-agent targets
// each requiring a set of cooperations. Preferences over contract portfolios
// are induced, not stated: more targets beat fewer, and among portfolios
// achieving the same targets the smaller one wins.
class AtmSpec {
public:
    static constexpr int kMaxCooperations = 24;
    static constexpr int kMaxContractsPerAgent = 12;

    struct Cooperation {
        std::string id;
        AgentSet implementers;  // at least two
    };
    struct Bundle {
        std::string id;
        CoopSet cooperations;  // nonempty
    };
    struct Target {
        std::string id;
        int agent = -1;
        CoopSet required;  // nonempty, all involving the agent
    };

    int agent_count() const { return static_cast<int>(agent_names_.size()); }
    int cooperation_count() const { return static_cast<int>(cooperations_.size()); }
    int contract_count() const { return static_cast<int>(contracts_.size()); }
    int target_count() const { return static_cast<int>(targets_.size()); }

    const std::string& agent_name(int a) const { return agent_names_[static_cast<std::size_t>(a)]; }
    const Cooperation& cooperation(int e) const { return cooperations_[static_cast<std::size_t>(e)]; }
    const Bundle& contract(int c) const { return contracts_[static_cast<std::size_t>(c)]; }
    const Target& target(int t) const { return targets_[static_cast<std::size_t>(t)]; }

    int agent_index(std::string_view name) const {
        for (int a = 0; a < agent_count(); ++a)
            if (agent_name(a) == name) return a;
        return -1;
    }
    int cooperation_index(std::string_view id) const {
        for (int e = 0; e < cooperation_count(); ++e)
            if (cooperation(e).id == id) return e;
        return -1;
    }

    // Implementer set shared by the bundle's cooperations; nullopt when mixed.
    std::optional<AgentSet> uniform_signers(int c) const {
        std::optional<AgentSet> common;
        bool mixed = false;
        contract(c).cooperations.for_each([&](int e) {
            const AgentSet s = cooperation(e).implementers;
            if (!common)
                common = s;
            else if (*common != s)
                mixed = true;
        });
        if (mixed) return std::nullopt;
        return common;
    }

    // Contracts involving the agent, assuming uniform signer sets.
    ContractSet contracts_of(int a) const {
        ContractSet out;
        for (int c = 0; c < contract_count(); ++c) {
            const int e = contract(c).cooperations.lowest();
            if (cooperation(e).implementers.contains(a)) out = out.with(c);
        }
        return out;
    }

    std::vector<int> targets_of(int a) const {
        std::vector<int> out;
        for (int t = 0; t < target_count(); ++t)
            if (target(t).agent == a) out.push_back(t);
        return out;
    }

    friend std::optional<AtmSpec> validate_atm(const struct AtmDraft&, std::vector<Diagnostic>&);

private:
    std::vector<std::string> agent_names_;
    std::vector<Cooperation> cooperations_;
    std::vector<Bundle> contracts_;
    std::vector<Target> targets_;
};

struct AtmDraft {
    struct RawAgent {
        std::string name;
        int line = 0;
    };
    struct RawCoop {
        std::string id;
        std::vector<std::string> implementers;
        int line = 0;
    };
    struct RawContract {
        std::string id;
        std::vector<std::string> cooperations;
        int line = 0;
    };
    struct RawTarget {
        std::string agent;
        std::string id;
        std::vector<std::string> cooperations;
        int line = 0;
    };
    std::vector<RawAgent> agents;
    std::vector<RawCoop> cooperations;
    std::vector<RawContract> contracts;
    std::vector<RawTarget> targets;
};

inline std::optional<AtmSpec> validate_atm(const AtmDraft& draft, std::vector<Diagnostic>& diags) {
    AtmSpec spec;
    const auto before = diags.size();

    if (static_cast<int>(draft.cooperations.size()) > AtmSpec::kMaxCooperations)
        diags.push_back({0, "too many cooperations (cap is " + std::to_string(AtmSpec::kMaxCooperations) + ")"});
    if (static_cast<int>(draft.contracts.size()) > Market::kMaxContracts)
        diags.push_back({0, "too many contracts (cap is " + std::to_string(Market::kMaxContracts) + ")"});
    if (static_cast<int>(draft.agents.size()) > Market::kMaxAgents)
        diags.push_back({0, "too many agents (cap is " + std::to_string(Market::kMaxAgents) + ")"});
    if (diags.size() != before) return std::nullopt;

    for (const auto& a : draft.agents) {
        if (spec.agent_index(a.name) >= 0) {
            diags.push_back({a.line, "duplicate agent '" + a.name + "'"});
            continue;
        }
        spec.agent_names_.push_back(a.name);
    }

    for (const auto& c : draft.cooperations) {
        if (spec.cooperation_index(c.id) >= 0) {
            diags.push_back({c.line, "duplicate cooperation '" + c.id + "'"});
            continue;
        }
        AgentSet implementers;
        bool ok = true;
        for (const auto& name : c.implementers) {
            const int a = spec.agent_index(name);
            if (a < 0) {
                diags.push_back({c.line, "cooperation '" + c.id + "' names unknown agent '" + name + "'"});
                ok = false;
                continue;
            }
            if (implementers.contains(a)) {
                diags.push_back({c.line, "cooperation '" + c.id + "' repeats agent '" + name + "'"});
                ok = false;
            }
            implementers = implementers.with(a);
        }
        if (ok && implementers.count() < 2) {
            diags.push_back({c.line, "cooperation '" + c.id + "' must have at least 2 implementers"});
            ok = false;
        }
        if (ok) spec.cooperations_.push_back({c.id, implementers});
    }

    for (const auto& c : draft.contracts) {
        bool duplicate = false;
        for (const auto& existing : spec.contracts_)
            if (existing.id == c.id) duplicate = true;
        if (duplicate) {
            diags.push_back({c.line, "duplicate contract '" + c.id + "'"});
            continue;
        }
        CoopSet coops;
        bool ok = true;
        for (const auto& id : c.cooperations) {
            const int e = spec.cooperation_index(id);
            if (e < 0) {
                diags.push_back({c.line, "contract '" + c.id + "' names unknown cooperation '" + id + "'"});
                ok = false;
                continue;
            }
            if (coops.contains(e)) {
                diags.push_back({c.line, "contract '" + c.id + "' repeats cooperation '" + id + "'"});
                ok = false;
            }
            coops = coops.with(e);
        }
        if (ok && coops.empty()) {
            diags.push_back({c.line, "contract '" + c.id + "' must bundle at least one cooperation"});
            ok = false;
        }
        if (ok) spec.contracts_.push_back({c.id, coops});
    }

    for (const auto& t : draft.targets) {
        const int a = spec.agent_index(t.agent);
        if (a < 0) {
            diags.push_back({t.line, "target '" + t.id + "' names unknown agent '" + t.agent + "'"});
            continue;
        }
        bool duplicate = false;
        for (const auto& existing : spec.targets_)
            if (existing.agent == a && existing.id == t.id) duplicate = true;
        if (duplicate) {
            diags.push_back({t.line, "duplicate target '" + t.id + "' for agent '" + t.agent + "'"});
            continue;
        }
        CoopSet required;
        bool ok = true;
        for (const auto& id : t.cooperations) {
            const int e = spec.cooperation_index(id);
            if (e < 0) {
                diags.push_back({t.line, "target '" + t.id + "' names unknown cooperation '" + id + "'"});
                ok = false;
                continue;
            }
            if (!spec.cooperation(e).implementers.contains(a)) {
                diags.push_back({t.line, "target '" + t.id + "' requires cooperation '" + id +
                                             "' that does not involve agent '" + t.agent + "'"});
                ok = false;
            }
            required = required.with(e);
        }
        if (ok && required.empty()) {
            diags.push_back({t.line, "target '" + t.id + "' must require at least one cooperation"});
            ok = false;
        }
        if (ok) spec.targets_.push_back({t.id, a, required});
    }

    if (diags.size() != before) return std::nullopt;
    return spec;
}

// --- agent-target file grammar -----------------------------------------------
//
//   agents <name>+
//   coop <id> <agent>+            at least two implementers
//   contract <id> <coop-id>+
//   target <agent> <id> <coop-id>+

inline AtmDraft parse_atm_draft(std::string_view text, std::vector<Diagnostic>& diags) {
    AtmDraft draft;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        for (std::string t; ls >> t;) tokens.push_back(t);
        if (tokens.empty()) continue;
        const std::string& directive = tokens[0];
        if (directive == "agents") {
            if (tokens.size() < 2) {
                diags.push_back({lineno, "'agents' needs at least one name"});
                continue;
            }
            for (std::size_t i = 1; i < tokens.size(); ++i) draft.agents.push_back({tokens[i], lineno});
        } else if (directive == "coop") {
            if (tokens.size() < 4) {
                diags.push_back({lineno, "'coop' needs an id and at least two agents"});
                continue;
            }
            AtmDraft::RawCoop c;
            c.id = tokens[1];
            c.implementers.assign(tokens.begin() + 2, tokens.end());
            c.line = lineno;
            draft.cooperations.push_back(std::move(c));
        } else if (directive == "contract") {
            if (tokens.size() < 3) {
                diags.push_back({lineno, "'contract' needs an id and at least one cooperation"});
                continue;
            }
            AtmDraft::RawContract c;
            c.id = tokens[1];
            c.cooperations.assign(tokens.begin() + 2, tokens.end());
            c.line = lineno;
            draft.contracts.push_back(std::move(c));
        } else if (directive == "target") {
            if (tokens.size() < 4) {
                diags.push_back({lineno, "'target' needs an agent, an id, and at least one cooperation"});
                continue;
            }
            AtmDraft::RawTarget t;
            t.agent = tokens[1];
            t.id = tokens[2];
            t.cooperations.assign(tokens.begin() + 3, tokens.end());
            t.line = lineno;
            draft.targets.push_back(std::move(t));
        } else {
            diags.push_back({lineno, "unknown directive '" + directive + "'"});
        }
    }
    return draft;
}

inline std::optional<AtmSpec> load_atm(std::string_view text, std::vector<Diagnostic>& diags) {
    const AtmDraft draft = parse_atm_draft(text, diags);
    if (!diags.empty()) return std::nullopt;
    return validate_atm(draft, diags);
}

// Targets of the agent achievable from the cooperations bundled in the chosen
// contracts; ascending target indices.
inline std::vector<int> achieved_targets(const AtmSpec& spec, int agent, ContractSet chosen) {
    CoopSet pooled;
    chosen.for_each([&](int c) { pooled = pooled | spec.contract(c).cooperations; });
    std::vector<int> out;
    for (int t : spec.targets_of(agent))
        if (spec.target(t).required.subset_of(pooled)) out.push_back(t);
    return out;
}

namespace detail {

// Ranking key for one portfolio of one agent: achieve more targets first;
// break ties toward lexicographically smaller target-id lists, then fewer
// contracts, then lexicographically smaller contract-id lists.
struct InducedKey {
    int achieved_count = 0;
    std::vector<std::string> target_ids;
    int portfolio_size = 0;
    std::vector<std::string> contract_ids;

    bool operator<(const InducedKey& o) const {  // true = ranks higher
        if (achieved_count != o.achieved_count) return achieved_count > o.achieved_count;
        if (target_ids != o.target_ids) return target_ids < o.target_ids;
        if (portfolio_size != o.portfolio_size) return portfolio_size < o.portfolio_size;
        return contract_ids < o.contract_ids;
    }
};

}  // namespace detail

// Induced ranked list for one agent: every portfolio achieving at least one
// target is acceptable, ordered by the key above. Portfolio masks index the
// spec's contracts, which is also the compiled market's contract order.
inline std::vector<ContractSet> induce_preference(const AtmSpec& spec, int agent) {
    const ContractSet universe = spec.contracts_of(agent);
    if (universe.count() > AtmSpec::kMaxContractsPerAgent)
        throw SizeCapError("agent signs more than " + std::to_string(AtmSpec::kMaxContractsPerAgent) +
                           " contracts; induced preference domain is too large");
    std::vector<std::pair<detail::InducedKey, ContractSet>> entries;
    for_each_subset_canonical(universe, [&](ContractSet y) {
        if (y.empty()) return true;
        const std::vector<int> achieved = achieved_targets(spec, agent, y);
        if (achieved.empty()) return true;
        detail::InducedKey key;
        key.achieved_count = static_cast<int>(achieved.size());
        for (int t : achieved) key.target_ids.push_back(spec.target(t).id);
        std::sort(key.target_ids.begin(), key.target_ids.end());
        key.portfolio_size = y.count();
        y.for_each([&](int c) { key.contract_ids.push_back(spec.contract(c).id); });
        std::sort(key.contract_ids.begin(), key.contract_ids.end());
        entries.emplace_back(std::move(key), y);
        return true;
    });
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<ContractSet> ranked;
    ranked.reserve(entries.size());
    for (const auto& e : entries) ranked.push_back(e.second);
    return ranked;
}

// Compiles the spec into an ordinary market: contract signers are the common
// implementer sets, preferences are induced. After building, every induced
// order is re-verified against the two ranking assumptions (larger target set
// wins; equal targets, smaller portfolio wins) by exhaustive scan.
inline std::optional<Market> compile_atm(const AtmSpec& spec, std::vector<Diagnostic>& diags) {
    const auto before = diags.size();
    MarketDraft draft;
    for (int a = 0; a < spec.agent_count(); ++a) draft.agents.push_back({spec.agent_name(a), 0});
    for (int c = 0; c < spec.contract_count(); ++c) {
        const auto signers = spec.uniform_signers(c);
        if (!signers) {
            diags.push_back({0, "contract '" + spec.contract(c).id +
                                    "' bundles cooperations with different implementer sets; "
                                    "a contract must have a uniform signer set"});
            continue;
        }
        MarketDraft::RawContract raw;
        raw.id = spec.contract(c).id;
        signers->for_each([&](int a) { raw.signers.push_back(spec.agent_name(a)); });
        draft.contracts.push_back(std::move(raw));
    }
    if (diags.size() != before) return std::nullopt;

    for (int a = 0; a < spec.agent_count(); ++a) {
        const std::vector<ContractSet> ranked = induce_preference(spec, a);
        if (ranked.empty()) continue;
        MarketDraft::RawPreference pref;
        pref.agent = spec.agent_name(a);
        for (ContractSet y : ranked) {
            std::vector<std::string> ids;
            y.for_each([&](int c) { ids.push_back(spec.contract(c).id); });
            pref.portfolios.push_back(std::move(ids));
        }
        draft.preferences.push_back(std::move(pref));
    }

    std::optional<Market> market = validate_market(draft, diags);
    if (!market) return std::nullopt;

    // Exhaustive post-check of the two induced-order assumptions. Achieved
    // target sets are encoded over the agent's own target list.
    for (int a = 0; a < spec.agent_count(); ++a) {
        const ContractSet universe = spec.contracts_of(a);
        const std::vector<int> targets = spec.targets_of(a);
        if (targets.size() > 64)
            throw SizeCapError("agent has more than 64 targets; assumption post-check mask overflows");
        std::vector<std::uint64_t> achieved_mask(std::size_t{1} << universe.count());
        const std::vector<int> members = universe.indices();
        for (std::uint32_t s = 0; s < achieved_mask.size(); ++s) {
            CoopSet pooled;
            for (std::size_t i = 0; i < members.size(); ++i)
                if ((s >> i) & 1u) pooled = pooled | spec.contract(members[i]).cooperations;
            std::uint64_t achieved = 0;
            for (std::size_t i = 0; i < targets.size(); ++i)
                if (spec.target(targets[i]).required.subset_of(pooled)) achieved |= std::uint64_t{1} << i;
            achieved_mask[s] = achieved;
        }
        auto to_global = [&](std::uint32_t s) {
            ContractSet out;
            for (std::size_t i = 0; i < members.size(); ++i)
                if ((s >> i) & 1u) out = out.with(members[i]);
            return out;
        };
        const std::uint32_t limit = static_cast<std::uint32_t>(achieved_mask.size());
        for (std::uint32_t sa = 0; sa < limit; ++sa) {
            for (std::uint32_t sb = 0; sb < limit; ++sb) {
                if (sa == sb) continue;
                const std::uint64_t ta = achieved_mask[sa];
                const std::uint64_t tb = achieved_mask[sb];
                bool must_prefer_a = false;
                if (tb != ta && (tb & ~ta) == 0) must_prefer_a = true;  // tb ⊂ ta
                if (ta == tb && (sa & ~sb) == 0) must_prefer_a = true;  // sa ⊂ sb
                if (!must_prefer_a) continue;
                if (market->compare(a, to_global(sa), to_global(sb)) != Rel::first)
                    throw std::logic_error("induced preference violates a ranking assumption for agent " +
                                           spec.agent_name(a));
            }
        }
    }
    return market;
}

}  // namespace multimatch
