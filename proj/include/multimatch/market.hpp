#pragma once

#include "multimatch/contract_set.hpp"

#include <algorithm>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace multimatch {

// Thrown when an operation would exceed the engine's exhaustive-search caps.
struct SizeCapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Rel { first, second, equal };

struct Contract {
    std::string id;
    AgentSet signers;
};

// Strictly ranked acceptable portfolios, best first. The empty portfolio sits
// directly below the last entry. Subsets of the agent's contracts that are not
// listed are unacceptable: they rank below the empty portfolio, ordered by
// ascending cardinality and then by their sorted contract ids. That completion
// never affects choice functions (whose maximum is acceptable or empty); it
// only resolves comparisons between two unacceptable portfolios.
struct Preference {
    std::vector<ContractSet> ranked;
};

struct Diagnostic {
    int line = 0;  // 0 when not tied to an input line
    std::string message;
};

inline std::string diagnostics_text(const std::vector<Diagnostic>& diags) {
    std::ostringstream out;
    for (const auto& d : diags) {
        if (d.line > 0)
            out << "line " << d.line << ": " << d.message << '\n';
        else
            out << d.message << '\n';
    }
    return out.str();
}

// Raw, unchecked market description as read from a market file or assembled
// programmatically. validate_market turns it into a Market or diagnostics.
struct MarketDraft {
    struct RawAgent {
        std::string name;
        int line = 0;
    };
    struct RawContract {
        std::string id;
        std::vector<std::string> signers;
        int line = 0;
    };
    struct RawPreference {
        std::string agent;
        std::vector<std::vector<std::string>> portfolios;  // best first
        int line = 0;
    };
    std::vector<RawAgent> agents;
    std::vector<RawContract> contracts;
    std::vector<RawPreference> preferences;
};

class Market;
std::optional<Market> validate_market(const MarketDraft& draft, std::vector<Diagnostic>& diags);

// Immutable market instance: agents, multi-signer contracts, one strict
// preference per agent. All operations are pure; instances are safe to share
// across threads.
class Market {
public:
    static constexpr int kMaxAgents = 12;
    static constexpr int kMaxContracts = 24;

    int agent_count() const { return static_cast<int>(agent_names_.size()); }
    int contract_count() const { return static_cast<int>(contracts_.size()); }
    const std::string& agent_name(int a) const { return agent_names_[static_cast<std::size_t>(a)]; }
    const Contract& contract(int c) const { return contracts_[static_cast<std::size_t>(c)]; }
    const Preference& preference(int a) const { return preferences_[static_cast<std::size_t>(a)]; }

    int agent_index(std::string_view name) const {
        auto it = agent_index_.find(std::string(name));
        return it == agent_index_.end() ? -1 : it->second;
    }
    int contract_index(std::string_view id) const {
        auto it = contract_index_.find(std::string(id));
        return it == contract_index_.end() ? -1 : it->second;
    }

    AgentSet all_agents() const { return AgentSet::first_n(agent_count()); }
    ContractSet all_contracts() const { return ContractSet::first_n(contract_count()); }

    // X_i: the contracts that involve agent a.
    ContractSet contracts_of(int a) const { return agent_contracts_[static_cast<std::size_t>(a)]; }

    // Y_i: the members of y that involve agent a.
    ContractSet restrict(ContractSet y, int a) const { return y & contracts_of(a); }

    ContractSet restrict_group(ContractSet y, AgentSet group) const {
        ContractSet out;
        group.for_each([&](int a) { out = out | restrict(y, a); });
        return out;
    }

    // N(Y): everyone signing a member of y.
    AgentSet signers(ContractSet y) const {
        AgentSet out;
        y.for_each([&](int c) { out = out | contract(c).signers; });
        return out;
    }

    bool acceptable(int a, ContractSet s) const {
        const auto& r = rank_[static_cast<std::size_t>(a)];
        return r.find(s.bits) != r.end();
    }

    // Strict total order over portfolios of agent a: ranked entries by rank,
    // then the empty portfolio, then unacceptable portfolios by the completion
    // rule. Both arguments must be drawn from the agent's contracts.
    Rel compare(int a, ContractSet lhs, ContractSet rhs) const {
        if (!lhs.subset_of(contracts_of(a)) || !rhs.subset_of(contracts_of(a)))
            throw std::invalid_argument("compare: portfolio not drawn from agent " + agent_name(a) +
                                        "'s contracts");
        if (lhs == rhs) return Rel::equal;
        const int rl = rank_key(a, lhs);
        const int rr = rank_key(a, rhs);
        if (rl != rr) return rl < rr ? Rel::first : Rel::second;
        // both unacceptable
        if (lhs.count() != rhs.count()) return lhs.count() < rhs.count() ? Rel::first : Rel::second;
        return sorted_ids(lhs) < sorted_ids(rhs) ? Rel::first : Rel::second;
    }

    // C_a(available): the best portfolio drawn from the agent's part of
    // `available`, i.e. the first ranked entry contained in it, else empty.
    ContractSet choose(int a, ContractSet available) const {
        const ContractSet mine = restrict(available, a);
        for (ContractSet r : preference(a).ranked)
            if (r.subset_of(mine)) return r;
        return ContractSet{};
    }

    bool self_chosen(int a, ContractSet s) const { return choose(a, s) == s; }

    std::string set_text(ContractSet s) const {
        std::string out = "{";
        bool sep = false;
        s.for_each([&](int c) {
            if (sep) out += ',';
            out += contract(c).id;
            sep = true;
        });
        out += '}';
        return out;
    }

    std::string agents_text(AgentSet s) const {
        std::string out = "{";
        bool sep = false;
        s.for_each([&](int a) {
            if (sep) out += ',';
            out += agent_name(a);
            sep = true;
        });
        out += '}';
        return out;
    }

    friend std::optional<Market> validate_market(const MarketDraft&, std::vector<Diagnostic>&);

private:
    Market() = default;

    // 0..L-1 for ranked entries, L for the empty portfolio, L+1 otherwise.
    int rank_key(int a, ContractSet s) const {
        const auto& r = rank_[static_cast<std::size_t>(a)];
        auto it = r.find(s.bits);
        if (it != r.end()) return it->second;
        const int n = static_cast<int>(preference(a).ranked.size());
        return s.empty() ? n : n + 1;
    }

    std::vector<std::string> sorted_ids(ContractSet s) const {
        std::vector<std::string> ids;
        s.for_each([&](int c) { ids.push_back(contract(c).id); });
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    std::vector<std::string> agent_names_;
    std::vector<Contract> contracts_;
    std::vector<Preference> preferences_;
    std::vector<ContractSet> agent_contracts_;
    std::vector<std::unordered_map<std::uint32_t, int>> rank_;
    std::unordered_map<std::string, int> agent_index_;
    std::unordered_map<std::string, int> contract_index_;
};

inline std::optional<Market> validate_market(const MarketDraft& draft, std::vector<Diagnostic>& diags) {
    Market m;
    const auto before = diags.size();

    if (static_cast<int>(draft.agents.size()) > Market::kMaxAgents)
        diags.push_back({0, "too many agents (cap is " + std::to_string(Market::kMaxAgents) + ")"});
    if (static_cast<int>(draft.contracts.size()) > Market::kMaxContracts)
        diags.push_back({0, "too many contracts (cap is " + std::to_string(Market::kMaxContracts) + ")"});
    if (diags.size() != before) return std::nullopt;

    for (const auto& a : draft.agents) {
        if (m.agent_index_.count(a.name)) {
            diags.push_back({a.line, "duplicate agent '" + a.name + "'"});
            continue;
        }
        m.agent_index_.emplace(a.name, static_cast<int>(m.agent_names_.size()));
        m.agent_names_.push_back(a.name);
    }

    for (const auto& c : draft.contracts) {
        if (m.contract_index_.count(c.id)) {
            diags.push_back({c.line, "duplicate contract '" + c.id + "'"});
            continue;
        }
        AgentSet signers;
        bool ok = true;
        for (const auto& name : c.signers) {
            const int a = m.agent_index(name);
            if (a < 0) {
                diags.push_back({c.line, "contract '" + c.id + "' names unknown agent '" + name + "'"});
                ok = false;
                continue;
            }
            if (signers.contains(a)) {
                diags.push_back({c.line, "contract '" + c.id + "' repeats signer '" + name + "'"});
                ok = false;
            }
            signers = signers.with(a);
        }
        if (ok && signers.count() < 2) {
            diags.push_back({c.line, "contract '" + c.id + "' must have at least 2 signers"});
            ok = false;
        }
        if (!ok) continue;
        m.contract_index_.emplace(c.id, static_cast<int>(m.contracts_.size()));
        m.contracts_.push_back(Contract{c.id, signers});
    }

    m.agent_contracts_.assign(m.agent_names_.size(), ContractSet{});
    for (int c = 0; c < m.contract_count(); ++c)
        m.contract(c).signers.for_each(
            [&](int a) { m.agent_contracts_[static_cast<std::size_t>(a)] = m.agent_contracts_[static_cast<std::size_t>(a)].with(c); });

    m.preferences_.assign(m.agent_names_.size(), Preference{});
    std::vector<bool> seen(m.agent_names_.size(), false);
    for (const auto& p : draft.preferences) {
        const int a = m.agent_index(p.agent);
        if (a < 0) {
            diags.push_back({p.line, "preference for unknown agent '" + p.agent + "'"});
            continue;
        }
        if (seen[static_cast<std::size_t>(a)]) {
            diags.push_back({p.line, "duplicate preference line for agent '" + p.agent + "'"});
            continue;
        }
        seen[static_cast<std::size_t>(a)] = true;
        Preference pref;
        for (const auto& portfolio : p.portfolios) {
            ContractSet s;
            bool ok = true;
            for (const auto& id : portfolio) {
                const int c = m.contract_index(id);
                if (c < 0) {
                    diags.push_back({p.line, "preference entry names unknown contract '" + id + "'"});
                    ok = false;
                    continue;
                }
                if (s.contains(c)) {
                    diags.push_back({p.line, "preference entry repeats contract '" + id + "'"});
                    ok = false;
                }
                s = s.with(c);
            }
            if (!ok) continue;
            if (s.empty()) {
                diags.push_back({p.line, "preference entries must be nonempty"});
                continue;
            }
            if (!s.subset_of(m.contracts_of(a))) {
                diags.push_back({p.line, "preference entry " + m.set_text(s) + " contains a contract not signed by '" +
                                             p.agent + "'"});
                continue;
            }
            if (std::find(pref.ranked.begin(), pref.ranked.end(), s) != pref.ranked.end()) {
                diags.push_back({p.line, "preference entry " + m.set_text(s) + " listed twice for '" + p.agent + "'"});
                continue;
            }
            pref.ranked.push_back(s);
        }
        m.preferences_[static_cast<std::size_t>(a)] = std::move(pref);
    }

    if (diags.size() != before) return std::nullopt;

    m.rank_.resize(m.agent_names_.size());
    for (int a = 0; a < m.agent_count(); ++a) {
        const auto& ranked = m.preference(a).ranked;
        for (int r = 0; r < static_cast<int>(ranked.size()); ++r)
            m.rank_[static_cast<std::size_t>(a)].emplace(ranked[static_cast<std::size_t>(r)].bits, r);
    }
    return m;
}

// --- market file grammar ----------------------------------------------------
//
//   agents <name>+
//   contract <id> <agent>+        at least two agents
//   pref <agent> <set>+           sets best first; the empty set is implicit
//
// '#' starts a comment. A <set> is `{id(,id)*}` with no internal whitespace.
// Parsing is strict: unknown directives and malformed sets are errors.

inline std::optional<std::vector<std::string>> parse_set_token(std::string_view token) {
    if (token.size() < 2 || token.front() != '{' || token.back() != '}') return std::nullopt;
    std::vector<std::string> ids;
    const std::string_view inner = token.substr(1, token.size() - 2);
    if (inner.empty()) return ids;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = inner.find(',', start);
        const std::string_view id =
            comma == std::string_view::npos ? inner.substr(start) : inner.substr(start, comma - start);
        if (id.empty()) return std::nullopt;
        ids.emplace_back(id);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return ids;
}

inline MarketDraft parse_market_draft(std::string_view text, std::vector<Diagnostic>& diags) {
    MarketDraft draft;
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
        } else if (directive == "contract") {
            if (tokens.size() < 4) {
                diags.push_back({lineno, "'contract' needs an id and at least two agents"});
                continue;
            }
            MarketDraft::RawContract c;
            c.id = tokens[1];
            c.signers.assign(tokens.begin() + 2, tokens.end());
            c.line = lineno;
            draft.contracts.push_back(std::move(c));
        } else if (directive == "pref") {
            if (tokens.size() < 3) {
                diags.push_back({lineno, "'pref' needs an agent and at least one set"});
                continue;
            }
            MarketDraft::RawPreference p;
            p.agent = tokens[1];
            p.line = lineno;
            bool ok = true;
            for (std::size_t i = 2; i < tokens.size(); ++i) {
                auto ids = parse_set_token(tokens[i]);
                if (!ids) {
                    diags.push_back({lineno, "malformed set '" + tokens[i] + "'"});
                    ok = false;
                    break;
                }
                p.portfolios.push_back(std::move(*ids));
            }
            if (ok) draft.preferences.push_back(std::move(p));
        } else {
            diags.push_back({lineno, "unknown directive '" + directive + "'"});
        }
    }
    return draft;
}

inline std::optional<Market> load_market(std::string_view text, std::vector<Diagnostic>& diags) {
    const MarketDraft draft = parse_market_draft(text, diags);
    if (!diags.empty()) return std::nullopt;
    return validate_market(draft, diags);
}

// Canonical file form: one agents line, contracts in index order, preferences
// in agent order with set members in contract-index order. Reparsing the
// output reproduces the market, and rewriting reproduces the bytes.
inline std::string write_market(const Market& m) {
    std::ostringstream out;
    out << "agents";
    for (int a = 0; a < m.agent_count(); ++a) out << ' ' << m.agent_name(a);
    out << '\n';
    for (int c = 0; c < m.contract_count(); ++c) {
        out << "contract " << m.contract(c).id;
        m.contract(c).signers.for_each([&](int a) { out << ' ' << m.agent_name(a); });
        out << '\n';
    }
    for (int a = 0; a < m.agent_count(); ++a) {
        const auto& ranked = m.preference(a).ranked;
        if (ranked.empty()) continue;
        out << "pref " << m.agent_name(a);
        for (ContractSet s : ranked) out << ' ' << m.set_text(s);
        out << '\n';
    }
    return out.str();
}

// Resolves a `{id,id}` literal against a market; used for CLI outcomes.
inline std::optional<ContractSet> parse_contract_set(const Market& m, std::string_view token,
                                                     std::string& error) {
    const auto ids = parse_set_token(token);
    if (!ids) {
        error = "malformed set '" + std::string(token) + "'";
        return std::nullopt;
    }
    ContractSet s;
    for (const auto& id : *ids) {
        const int c = m.contract_index(id);
        if (c < 0) {
            error = "unknown contract '" + id + "'";
            return std::nullopt;
        }
        if (s.contains(c)) {
            error = "set repeats contract '" + id + "'";
            return std::nullopt;
        }
        s = s.with(c);
    }
    return s;
}

}  // namespace multimatch
