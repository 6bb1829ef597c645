#include "dcloss/graph.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace dcloss {

const ResistanceGraph::Edge* ResistanceGraph::edge(const std::string& id) const {
    for (const Edge& e : edges) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

namespace {

struct DisjointSet {
    std::map<std::string, std::string> parent;

    void add(const std::string& x) {
        if (!parent.count(x)) parent[x] = x;
    }
    std::string find(const std::string& x) {
        std::string root = x;
        while (parent.at(root) != root) root = parent.at(root);
        std::string cur = x;
        while (cur != root) {
            std::string next = parent.at(cur);
            parent[cur] = root;
            cur = next;
        }
        return root;
    }
    void unite(const std::string& a, const std::string& b) {
        add(a);
        add(b);
        parent[find(a)] = find(b);
    }
};

std::vector<std::vector<std::string>> voltage_partition(const Circuit& c) {
    DisjointSet ds;
    for (const std::string& n : c.nodes) ds.add(n);
    for (const Element& e : c.elements) {
        if (e.kind == ElementKind::VoltageSource) ds.unite(e.from, e.to);
    }
    std::map<std::string, std::vector<std::string>> groups;
    for (const std::string& n : c.nodes) groups[ds.find(n)].push_back(n);
    std::vector<std::vector<std::string>> result;
    for (auto& [_, members] : groups) {
        std::sort(members.begin(), members.end());
        result.push_back(std::move(members));
    }
    std::sort(result.begin(), result.end(),
              [](const auto& x, const auto& y) { return x.front() < y.front(); });
    return result;
}

} // namespace

ResistanceGraph resistance_graph(const Circuit& c) {
    ResistanceGraph rg;
    rg.supernodes = voltage_partition(c);
    for (size_t k = 0; k < rg.supernodes.size(); ++k) {
        for (const std::string& n : rg.supernodes[k]) rg.supernode_of[n] = static_cast<int>(k);
    }
    for (const Element& e : c.elements) {
        switch (e.kind) {
            case ElementKind::Resistor:
                rg.edges.push_back({e.id, rg.supernode_of.at(e.from), rg.supernode_of.at(e.to)});
                break;
            case ElementKind::CurrentSource:
                rg.removed_current_sources.push_back(e.id);
                break;
            case ElementKind::VoltageSource:
                break;
        }
    }
    return rg;
}

CycleBasis spanning_tree_and_cycles(const ResistanceGraph& rg, const TreeOptions& options) {
    const int n = static_cast<int>(rg.supernodes.size());
    std::vector<std::vector<int>> incident(n); // edge indices per supernode
    for (size_t k = 0; k < rg.edges.size(); ++k) {
        const auto& e = rg.edges[k];
        if (e.a == e.b) continue; // self-loops never join the tree
        incident[e.a].push_back(static_cast<int>(k));
        incident[e.b].push_back(static_cast<int>(k));
    }

    std::vector<int> roots(n);
    for (int i = 0; i < n; ++i) roots[i] = i;
    if (options.shuffle_seed) {
        std::mt19937_64 rng(*options.shuffle_seed);
        for (auto& lst : incident) std::shuffle(lst.begin(), lst.end(), rng);
        std::shuffle(roots.begin(), roots.end(), rng);
    }

    std::vector<int> parent_edge(n, -1);
    std::vector<int> parent_node(n, -1);
    std::vector<bool> visited(n, false);
    std::set<int> tree;
    for (int root : roots) {
        if (visited[root]) continue;
        visited[root] = true;
        std::vector<std::pair<int, size_t>> stack{{root, 0}};
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            if (next >= incident[u].size()) {
                stack.pop_back();
                continue;
            }
            int k = incident[u][next++];
            const auto& e = rg.edges[k];
            int w = (e.a == u) ? e.b : e.a;
            if (visited[w]) continue;
            visited[w] = true;
            parent_edge[w] = k;
            parent_node[w] = u;
            tree.insert(k);
            stack.push_back({w, 0});
        }
    }

    CycleBasis cb;
    auto path_to_root = [&](int v) {
        std::vector<int> chain{v};
        while (parent_node[chain.back()] != -1) chain.push_back(parent_node[chain.back()]);
        return chain;
    };
    for (size_t k = 0; k < rg.edges.size(); ++k) {
        const auto& e = rg.edges[k];
        if (tree.count(static_cast<int>(k))) {
            cb.tree_edges.push_back(e.id);
            continue;
        }
        cb.chords.push_back(e.id);
        std::vector<CycleStep> cycle{{e.id, 1}};
        if (e.a != e.b) {
            // Tree path from e.b back to e.a: climb both endpoints to their
            // lowest common ancestor.
            std::vector<int> from_b = path_to_root(e.b);
            std::vector<int> from_a = path_to_root(e.a);
            auto in_a = [&](int v) {
                return std::find(from_a.begin(), from_a.end(), v) != from_a.end();
            };
            int meet = from_b.front();
            std::vector<CycleStep> up;
            for (int v : from_b) {
                if (in_a(v)) {
                    meet = v;
                    break;
                }
                const auto& pe = rg.edges[parent_edge[v]];
                // Moving v -> parent(v): forward when the edge leaves v.
                up.push_back({pe.id, pe.a == v ? 1 : -1});
            }
            std::vector<CycleStep> down;
            for (int v : from_a) {
                if (v == meet) break;
                const auto& pe = rg.edges[parent_edge[v]];
                down.push_back({pe.id, pe.a == v ? -1 : 1});
            }
            cycle.insert(cycle.end(), up.begin(), up.end());
            cycle.insert(cycle.end(), down.rbegin(), down.rend());
        }
        cb.cycle_of_chord[e.id] = std::move(cycle);
    }
    return cb;
}

NodeBasis fundamental_node_basis(const Circuit& c, const BasisOptions& options) {
    NodeBasis nb;
    std::vector<std::vector<std::string>> groups = voltage_partition(c);
    for (size_t k = 0; k < groups.size(); ++k) {
        for (const std::string& n : groups[k]) nb.supernode_of[n] = static_cast<int>(k);
    }
    std::optional<std::mt19937_64> rng;
    if (options.representative_seed) rng.emplace(*options.representative_seed);
    for (const auto& group : groups) {
        if (rng) {
            std::uniform_int_distribution<size_t> pick(0, group.size() - 1);
            nb.representatives.push_back(group[pick(*rng)]);
        } else {
            nb.representatives.push_back(group.front());
        }
    }

    // Propagate offsets away from each representative over voltage-source
    // edges; validate() guarantees such paths form a forest.
    std::map<std::string, std::vector<const Element*>> adj;
    for (const Element& e : c.elements) {
        if (e.kind != ElementKind::VoltageSource) continue;
        adj[e.from].push_back(&e);
        adj[e.to].push_back(&e);
    }
    for (const std::string& rep : nb.representatives) {
        nb.offset[rep] = 0.0;
        std::vector<std::string> queue{rep};
        for (size_t qi = 0; qi < queue.size(); ++qi) {
            std::string u = queue[qi];
            auto it = adj.find(u);
            if (it == adj.end()) continue;
            for (const Element* e : it->second) {
                const std::string& w = (e->from == u) ? e->to : e->from;
                if (nb.offset.count(w)) continue;
                double step = (e->from == u) ? -e->value : e->value;
                nb.offset[w] = nb.offset.at(u) + step;
                queue.push_back(w);
            }
        }
    }
    for (const std::string& n : c.nodes) {
        if (!nb.offset.count(n)) nb.offset[n] = 0.0; // isolated in the source forest
    }
    return nb;
}

CurrentClassKind ResistorClasses::current_class(const std::string& id) const {
    size_t count = owning_cycles.at(id).size();
    if (count == 0) return CurrentClassKind::I1;
    if (count == 1) return CurrentClassKind::I2;
    return CurrentClassKind::I3;
}

ResistorClasses classify_resistors(const Circuit& c, const NodeBasis& nb, const CycleBasis& cb) {
    ResistorClasses rc;
    for (const Element& e : c.elements) {
        if (e.kind != ElementKind::Resistor) continue;
        bool same = nb.supernode_of.at(e.from) == nb.supernode_of.at(e.to);
        rc.voltage_view[e.id] = same ? VoltageClass::V1 : VoltageClass::V2;
        rc.owning_cycles[e.id];
    }
    for (const auto& [chord, cycle] : cb.cycle_of_chord) {
        for (const CycleStep& step : cycle) rc.owning_cycles[step.id].push_back(chord);
    }
    for (auto& [_, owners] : rc.owning_cycles) std::sort(owners.begin(), owners.end());
    return rc;
}

const char* edit_class_name(EditClass k) {
    return k == EditClass::Parallel ? "parallel" : "serial";
}

bool is_bridge(const Circuit& c, const std::string& element_id) {
    const Element* target = c.find(element_id);
    if (!target) {
        throw Error(ErrorCode::UnknownElement, "no element '" + element_id + "' in circuit");
    }
    std::map<std::string, std::vector<std::string>> adj;
    for (const Element& e : c.elements) {
        if (e.id == element_id) continue;
        adj[e.from].push_back(e.to);
        adj[e.to].push_back(e.from);
    }
    std::set<std::string> seen{target->from};
    std::vector<std::string> stack{target->from};
    while (!stack.empty()) {
        std::string u = stack.back();
        stack.pop_back();
        if (u == target->to) return false;
        auto it = adj.find(u);
        if (it == adj.end()) continue;
        for (const std::string& w : it->second) {
            if (seen.insert(w).second) stack.push_back(w);
        }
    }
    return true;
}

EditClass classify_removal(const Circuit& c, const std::string& element_id) {
    return is_bridge(c, element_id) ? EditClass::Serial : EditClass::Parallel;
}

} // namespace dcloss
