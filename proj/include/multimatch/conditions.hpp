#pragma once

#include "multimatch/market.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace multimatch {

enum class Condition {
    complementary,
    scale_economies,
    single_contract_se,
    different_group_complementary,
    ordinal_se,
};

inline constexpr std::array<std::string_view, 5> kConditionNames = {
    "complementary", "scale_economies", "single_contract_se", "different_group_complementary",
    "ordinal_se"};

inline std::string_view condition_name(Condition c) {
    return kConditionNames[static_cast<std::size_t>(c)];
}

inline std::optional<Condition> condition_from_name(std::string_view name) {
    std::string normalized(name);
    for (char& ch : normalized)
        if (ch == '-') ch = '_';
    for (std::size_t i = 0; i < kConditionNames.size(); ++i)
        if (normalized == kConditionNames[i]) return static_cast<Condition>(i);
    return std::nullopt;
}

// The violated quantifier instance of a failed check. Field use per condition:
//   complementary:                  before/after = growing available sets, contract = dropped
//   scale_economies:                before/after = growing available sets
//   single_contract_se:             before = available set, contract = dropped, trigger = the arrival
//   different_group_complementary:  before = held portfolio, extra = additions, contract = dropped
//   ordinal_se:                     before/after = the improving swap, extra = re-added contracts
struct ConditionCounterexample {
    std::optional<ContractSet> before;
    std::optional<ContractSet> after;
    std::optional<ContractSet> extra;
    std::optional<int> contract;
    std::optional<int> trigger;
};

struct ConditionReport {
    int agent = -1;
    Condition condition{};
    bool holds = true;
    std::optional<ConditionCounterexample> counterexample;
};

// Per-agent checks enumerate the full quantifier domain (up to 3^|X_i| set
// pairs); this cap keeps them tractable.
inline constexpr int kMaxConditionContracts = 14;

namespace detail {

struct LocalTag {};
using LocalSet = IndexSet<LocalTag>;

// One agent's preference context compressed onto local indices 0..n-1, so
// choice tables over 2^n fit in a flat vector. Also used by the random-market
// generator to test a candidate preference without building a full market.
struct AgentView {
    std::vector<int> universe;          // global contract indices, ascending
    std::vector<std::uint32_t> ranked;  // local masks, best first
    std::vector<AgentSet> signer;       // per local contract
    std::vector<std::string> id;        // per local contract

    int size() const { return static_cast<int>(universe.size()); }
    std::uint32_t full() const {
        return size() >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << size()) - 1;
    }

    std::uint32_t choose(std::uint32_t avail) const {
        for (std::uint32_t r : ranked)
            if ((r & ~avail) == 0) return r;
        return 0;
    }

    int rank_key(std::uint32_t s) const {
        for (std::size_t i = 0; i < ranked.size(); ++i)
            if (ranked[i] == s) return static_cast<int>(i);
        return s == 0 ? static_cast<int>(ranked.size()) : static_cast<int>(ranked.size()) + 1;
    }

    std::vector<std::string> sorted_ids(std::uint32_t s) const {
        std::vector<std::string> ids;
        for (int i = 0; i < size(); ++i)
            if ((s >> i) & 1u) ids.push_back(id[static_cast<std::size_t>(i)]);
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    bool prefers(std::uint32_t a, std::uint32_t b) const {  // strict
        if (a == b) return false;
        const int ra = rank_key(a);
        const int rb = rank_key(b);
        if (ra != rb) return ra < rb;
        const int ca = std::popcount(a);
        const int cb = std::popcount(b);
        if (ca != cb) return ca < cb;
        return sorted_ids(a) < sorted_ids(b);
    }

    AgentSet signers_of(std::uint32_t s) const {
        AgentSet out;
        for (int i = 0; i < size(); ++i)
            if ((s >> i) & 1u) out = out | signer[static_cast<std::size_t>(i)];
        return out;
    }

    ContractSet global(std::uint32_t s) const {
        ContractSet out;
        for (int i = 0; i < size(); ++i)
            if ((s >> i) & 1u) out = out.with(universe[static_cast<std::size_t>(i)]);
        return out;
    }

    int global_contract(int local) const { return universe[static_cast<std::size_t>(local)]; }
};

inline AgentView make_view(const Market& m, int a) {
    AgentView v;
    v.universe = m.contracts_of(a).indices();
    for (int c : v.universe) {
        v.signer.push_back(m.contract(c).signers);
        v.id.push_back(m.contract(c).id);
    }
    for (ContractSet r : m.preference(a).ranked) {
        std::uint32_t local = 0;
        for (std::size_t i = 0; i < v.universe.size(); ++i)
            if (r.contains(v.universe[i])) local |= std::uint32_t{1} << i;
        v.ranked.push_back(local);
    }
    return v;
}

inline void require_within_cap(const AgentView& v) {
    if (v.size() > kMaxConditionContracts)
        throw SizeCapError("agent has more than " + std::to_string(kMaxConditionContracts) +
                           " contracts; condition check domain is too large");
}

inline std::vector<std::uint32_t> choice_table(const AgentView& v) {
    std::vector<std::uint32_t> table(std::size_t{1} << v.size());
    for (std::uint32_t s = 0; s < table.size(); ++s) table[s] = v.choose(s);
    return table;
}

// Self-chosen portfolios (choice of the set is the set itself), canonical order.
inline std::vector<std::uint32_t> self_chosen_masks(const AgentView& v,
                                                    const std::vector<std::uint32_t>& table) {
    std::vector<std::uint32_t> out;
    for_each_local_subset_canonical(v.size(), [&](std::uint32_t s) {
        if (table[s] == s) out.push_back(s);
        return true;
    });
    return out;
}

inline ConditionReport check_complementary_view(const AgentView& v) {
    require_within_cap(v);
    const auto table = choice_table(v);
    ConditionReport r;
    r.condition = Condition::complementary;
    for_each_local_proper_pair(v.size(), [&](std::uint32_t small, std::uint32_t large) {
        const std::uint32_t dropped = table[small] & ~table[large];
        if (dropped == 0) return true;
        ConditionCounterexample cx;
        cx.before = v.global(small);
        cx.after = v.global(large);
        cx.contract = v.global_contract(std::countr_zero(dropped));
        r.holds = false;
        r.counterexample = cx;
        return false;
    });
    return r;
}

inline ConditionReport check_scale_economies_view(const AgentView& v) {
    require_within_cap(v);
    const auto table = choice_table(v);
    ConditionReport r;
    r.condition = Condition::scale_economies;
    for_each_local_proper_pair(v.size(), [&](std::uint32_t small, std::uint32_t large) {
        const std::uint32_t dropped = table[small] & ~table[large];
        const std::uint32_t added = table[large] & ~table[small];
        if (v.signers_of(dropped).subset_of(v.signers_of(added))) return true;
        ConditionCounterexample cx;
        cx.before = v.global(small);
        cx.after = v.global(large);
        r.holds = false;
        r.counterexample = cx;
        return false;
    });
    return r;
}

inline ConditionReport check_single_contract_se_view(const AgentView& v) {
    require_within_cap(v);
    const auto table = choice_table(v);
    ConditionReport r;
    r.condition = Condition::single_contract_se;
    for_each_local_subset_canonical(v.size(), [&](std::uint32_t s) {
        for (int w = 0; w < v.size(); ++w) {
            if ((s >> w) & 1u) continue;
            const std::uint32_t dropped = table[s] & ~table[s | (std::uint32_t{1} << w)];
            for (std::uint32_t d = dropped; d != 0; d &= d - 1) {
                const int x = std::countr_zero(d);
                if (v.signer[static_cast<std::size_t>(x)].subset_of(v.signer[static_cast<std::size_t>(w)]))
                    continue;
                ConditionCounterexample cx;
                cx.before = v.global(s);
                cx.contract = v.global_contract(x);
                cx.trigger = v.global_contract(w);
                r.holds = false;
                r.counterexample = cx;
                return false;
            }
        }
        return true;
    });
    return r;
}

inline ConditionReport check_different_group_complementary_view(const AgentView& v) {
    require_within_cap(v);
    const auto table = choice_table(v);
    ConditionReport r;
    r.condition = Condition::different_group_complementary;
    for_each_local_subset_canonical(v.size(), [&](std::uint32_t held) {
        if (table[held] != held) return true;
        const std::uint32_t complement = v.full() & ~held;
        bool keep_going = true;
        for_each_subset_canonical(LocalSet{complement}, [&](LocalSet z) {
            const std::uint32_t joint_choice = table[held | z.bits];
            for (std::uint32_t h = held; h != 0; h &= h - 1) {
                const int x = std::countr_zero(h);
                if ((joint_choice >> x) & 1u) continue;
                bool same_group_added = false;
                z.for_each([&](int zi) {
                    if (v.signer[static_cast<std::size_t>(zi)] == v.signer[static_cast<std::size_t>(x)])
                        same_group_added = true;
                });
                if (same_group_added) continue;
                ConditionCounterexample cx;
                cx.before = v.global(held);
                cx.extra = v.global(z.bits);
                cx.contract = v.global_contract(x);
                r.holds = false;
                r.counterexample = cx;
                keep_going = false;
                return false;
            }
            return true;
        });
        return keep_going;
    });
    return r;
}

inline ConditionReport check_ordinal_se_view(const AgentView& v) {
    require_within_cap(v);
    const auto table = choice_table(v);
    const auto stable_sets = self_chosen_masks(v, table);
    ConditionReport r;
    r.condition = Condition::ordinal_se;
    for (std::uint32_t held : stable_sets) {
        for (std::uint32_t better : stable_sets) {
            if (better == held || !v.prefers(better, held)) continue;
            const std::uint32_t dropped = held & ~better;
            if (dropped == 0) continue;
            const AgentSet new_partners = v.signers_of(better & ~held);
            // contracts whose signers are not all covered by the new partners
            std::uint32_t reclaimable = 0;
            for (std::uint32_t d = dropped; d != 0; d &= d - 1) {
                const int x = std::countr_zero(d);
                if (!v.signer[static_cast<std::size_t>(x)].subset_of(new_partners))
                    reclaimable |= std::uint32_t{1} << x;
            }
            if (reclaimable == 0) continue;
            bool ok = true;
            for_each_subset_canonical(LocalSet{reclaimable}, [&](LocalSet z) {
                if (z.empty()) return true;
                const std::uint32_t widened = better | z.bits;
                if (table[widened] == widened) return true;
                ConditionCounterexample cx;
                cx.before = v.global(held);
                cx.after = v.global(better);
                cx.extra = v.global(z.bits);
                r.holds = false;
                r.counterexample = cx;
                ok = false;
                return false;
            });
            if (!ok) return r;
        }
    }
    return r;
}

inline ConditionReport check_condition_view(const AgentView& v, Condition c) {
    switch (c) {
        case Condition::complementary: return check_complementary_view(v);
        case Condition::scale_economies: return check_scale_economies_view(v);
        case Condition::single_contract_se: return check_single_contract_se_view(v);
        case Condition::different_group_complementary:
            return check_different_group_complementary_view(v);
        case Condition::ordinal_se: return check_ordinal_se_view(v);
    }
    throw std::logic_error("unreachable");
}

}  // namespace detail

inline ConditionReport check_condition(const Market& m, int agent, Condition c) {
    ConditionReport r = detail::check_condition_view(detail::make_view(m, agent), c);
    r.agent = agent;
    return r;
}

inline ConditionReport check_complementary(const Market& m, int agent) {
    return check_condition(m, agent, Condition::complementary);
}
inline ConditionReport check_scale_economies(const Market& m, int agent) {
    return check_condition(m, agent, Condition::scale_economies);
}
inline ConditionReport check_single_contract_se(const Market& m, int agent) {
    return check_condition(m, agent, Condition::single_contract_se);
}
inline ConditionReport check_different_group_complementary(const Market& m, int agent) {
    return check_condition(m, agent, Condition::different_group_complementary);
}
inline ConditionReport check_ordinal_scale_economies(const Market& m, int agent) {
    return check_condition(m, agent, Condition::ordinal_se);
}

inline bool market_satisfies(const Market& m, Condition c) {
    for (int a = 0; a < m.agent_count(); ++a)
        if (!check_condition(m, a, c).holds) return false;
    return true;
}

// One group negotiating one contract: every acceptable portfolio of every
// agent must avoid carrying two contracts signed by the same set of agents.
struct GroupUniquenessReport {
    bool holds = true;
    std::optional<int> agent;
    std::optional<ConditionCounterexample> counterexample;  // before=portfolio, contract+trigger=pair
};

inline GroupUniquenessReport check_one_contract_per_group(const Market& m) {
    for (int a = 0; a < m.agent_count(); ++a) {
        for (ContractSet portfolio : m.preference(a).ranked) {
            const std::vector<int> members = portfolio.indices();
            for (std::size_t i = 0; i < members.size(); ++i) {
                for (std::size_t j = i + 1; j < members.size(); ++j) {
                    if (m.contract(members[i]).signers != m.contract(members[j]).signers) continue;
                    GroupUniquenessReport r;
                    r.holds = false;
                    r.agent = a;
                    ConditionCounterexample cx;
                    cx.before = portfolio;
                    cx.contract = members[i];
                    cx.trigger = members[j];
                    r.counterexample = cx;
                    return r;
                }
            }
        }
    }
    return {};
}

// --- serialization -----------------------------------------------------------

inline std::string counterexample_value(const Market& m, const ConditionCounterexample& cx) {
    std::string out;
    auto add = [&](std::string_view key, const std::string& value) {
        if (!out.empty()) out += ';';
        out += key;
        out += ':';
        out += value;
    };
    if (cx.before) add("before", m.set_text(*cx.before));
    if (cx.after) add("after", m.set_text(*cx.after));
    if (cx.extra) add("extra", m.set_text(*cx.extra));
    if (cx.contract) add("contract", m.contract(*cx.contract).id);
    if (cx.trigger) add("trigger", m.contract(*cx.trigger).id);
    return out;
}

inline std::optional<ConditionCounterexample> parse_counterexample_value(const Market& m,
                                                                         std::string_view value,
                                                                         std::string& error) {
    ConditionCounterexample cx;
    std::size_t start = 0;
    while (start < value.size()) {
        std::size_t semi = value.find(';', start);
        if (semi == std::string_view::npos) semi = value.size();
        const std::string_view item = value.substr(start, semi - start);
        const std::size_t colon = item.find(':');
        if (colon == std::string_view::npos) {
            error = "malformed counterexample item '" + std::string(item) + "'";
            return std::nullopt;
        }
        const std::string_view key = item.substr(0, colon);
        const std::string_view val = item.substr(colon + 1);
        if (key == "before" || key == "after" || key == "extra") {
            auto s = parse_contract_set(m, val, error);
            if (!s) return std::nullopt;
            if (key == "before") cx.before = *s;
            else if (key == "after") cx.after = *s;
            else cx.extra = *s;
        } else if (key == "contract" || key == "trigger") {
            const int c = m.contract_index(val);
            if (c < 0) {
                error = "unknown contract '" + std::string(val) + "'";
                return std::nullopt;
            }
            if (key == "contract") cx.contract = c;
            else cx.trigger = c;
        } else {
            error = "unknown counterexample key '" + std::string(key) + "'";
            return std::nullopt;
        }
        start = semi + 1;
    }
    return cx;
}

inline std::string condition_line(const Market& m, const ConditionReport& r) {
    std::string out = "agent=" + m.agent_name(r.agent);
    out += " condition=";
    out += condition_name(r.condition);
    out += " holds=";
    out += r.holds ? "true" : "false";
    out += " counterexample=";
    out += r.counterexample ? counterexample_value(m, *r.counterexample) : "none";
    return out;
}

}  // namespace multimatch
