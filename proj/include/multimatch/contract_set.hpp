#pragma once

#include <bit>
#include <cstdint>
#include <vector>

namespace multimatch {

// Dense-index bitmask set. The tag keeps contract sets and agent sets from
// being mixed up at call sites; markets are capped well below 32 indices.
template <typename Tag>
struct IndexSet {
    std::uint32_t bits = 0;

    static IndexSet single(int i) { return IndexSet{std::uint32_t{1} << i}; }
    static IndexSet first_n(int n) {
        return IndexSet{n >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << n) - 1};
    }

    bool empty() const { return bits == 0; }
    int count() const { return std::popcount(bits); }
    bool contains(int i) const { return (bits >> i) & 1u; }
    bool subset_of(IndexSet other) const { return (bits & ~other.bits) == 0; }
    bool intersects(IndexSet other) const { return (bits & other.bits) != 0; }
    int lowest() const { return std::countr_zero(bits); }

    IndexSet with(int i) const { return IndexSet{bits | (std::uint32_t{1} << i)}; }
    IndexSet without(int i) const { return IndexSet{bits & ~(std::uint32_t{1} << i)}; }

    friend IndexSet operator|(IndexSet a, IndexSet b) { return IndexSet{a.bits | b.bits}; }
    friend IndexSet operator&(IndexSet a, IndexSet b) { return IndexSet{a.bits & b.bits}; }
    friend IndexSet operator-(IndexSet a, IndexSet b) { return IndexSet{a.bits & ~b.bits}; }
    friend bool operator==(IndexSet a, IndexSet b) { return a.bits == b.bits; }
    friend bool operator!=(IndexSet a, IndexSet b) { return a.bits != b.bits; }

    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (std::uint32_t m = bits; m != 0; m &= m - 1) fn(std::countr_zero(m));
    }

    std::vector<int> indices() const {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(count()));
        for_each([&](int i) { out.push_back(i); });
        return out;
    }
};

struct ContractTag {};
struct AgentTag {};
struct CoopTag {};

using ContractSet = IndexSet<ContractTag>;
using AgentSet = IndexSet<AgentTag>;
using CoopSet = IndexSet<CoopTag>;

namespace detail {

// Advances an ascending index combination over [0, n); false when exhausted.
inline bool next_combination(std::vector<int>& c, int n) {
    const int k = static_cast<int>(c.size());
    for (int j = k - 1; j >= 0; --j) {
        if (c[j] < n - (k - j)) {
            ++c[j];
            for (int l = j + 1; l < k; ++l) c[l] = c[l - 1] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace detail

// Canonical subset order used throughout: ascending cardinality, then
// lexicographic on the ascending index sequence. The visitor returns false to
// stop early; the function returns false iff it was stopped.
template <typename Tag, typename Fn>
bool for_each_subset_canonical(IndexSet<Tag> universe, Fn&& fn) {
    const std::vector<int> u = universe.indices();
    const int n = static_cast<int>(u.size());
    std::vector<int> comb;
    for (int k = 0; k <= n; ++k) {
        comb.resize(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) comb[j] = j;
        while (true) {
            IndexSet<Tag> s;
            for (int j : comb) s = s.with(u[j]);
            if (!fn(s)) return false;
            if (k == 0 || !detail::next_combination(comb, n)) break;
        }
    }
    return true;
}

// Same walk over the dense local space {0,..,n-1}; masks are raw bits.
template <typename Fn>
bool for_each_local_subset_canonical(int n, Fn&& fn) {
    std::vector<int> comb;
    for (int k = 0; k <= n; ++k) {
        comb.resize(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) comb[j] = j;
        while (true) {
            std::uint32_t s = 0;
            for (int j : comb) s |= std::uint32_t{1} << j;
            if (!fn(s)) return false;
            if (k == 0 || !detail::next_combination(comb, n)) break;
        }
    }
    return true;
}

// Visits every pair small ⊂ large ⊆ {0,..,n-1}, ordered by (|large|, |small|,
// large lexicographic, small lexicographic) so the first violation a checker
// hits is its canonical counterexample.
template <typename Fn>
bool for_each_local_proper_pair(int n, Fn&& fn) {
    std::vector<int> outer, inner;
    for (int kl = 1; kl <= n; ++kl) {
        for (int ks = 0; ks < kl; ++ks) {
            outer.resize(static_cast<std::size_t>(kl));
            for (int j = 0; j < kl; ++j) outer[j] = j;
            while (true) {
                std::uint32_t large = 0;
                for (int j : outer) large |= std::uint32_t{1} << j;
                inner.resize(static_cast<std::size_t>(ks));
                for (int j = 0; j < ks; ++j) inner[j] = j;
                while (true) {
                    std::uint32_t small = 0;
                    for (int j : inner) small |= std::uint32_t{1} << outer[j];
                    if (!fn(small, large)) return false;
                    if (ks == 0 || !detail::next_combination(inner, kl)) break;
                }
                if (!detail::next_combination(outer, n)) break;
            }
        }
    }
    return true;
}

}  // namespace multimatch
