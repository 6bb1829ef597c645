#include "dcloss/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

namespace dcloss {

char element_kind_letter(ElementKind kind) {
    switch (kind) {
        case ElementKind::Resistor: return 'R';
        case ElementKind::VoltageSource: return 'V';
        case ElementKind::CurrentSource: return 'I';
    }
    return '?';
}

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyNetlist: return "EmptyNetlist";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::NonPositiveResistance: return "NonPositiveResistance";
        case ErrorCode::SelfLoopElement: return "SelfLoopElement";
        case ErrorCode::UnknownElement: return "UnknownElement";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::BadGrid: return "BadGrid";
        case ErrorCode::InvalidCircuit: return "InvalidCircuit";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::DegenerateSubcircuit: return "DegenerateSubcircuit";
        case ErrorCode::ConstraintInconsistent: return "ConstraintInconsistent";
        case ErrorCode::NoEquivalent: return "NoEquivalent";
        case ErrorCode::EditIllPosed: return "EditIllPosed";
        case ErrorCode::UnsupportedEdit: return "UnsupportedEdit";
    }
    return "Unknown";
}

const char* fault_code_name(FaultCode code) {
    switch (code) {
        case FaultCode::Disconnected: return "Disconnected";
        case FaultCode::InconsistentVoltageLoop: return "InconsistentVoltageLoop";
        case FaultCode::RedundantVoltageLoop: return "RedundantVoltageLoop";
        case FaultCode::UnbalancedCurrentCut: return "UnbalancedCurrentCut";
        case FaultCode::RedundantCurrentCut: return "RedundantCurrentCut";
    }
    return "Unknown";
}

const Element* Circuit::find(const std::string& id) const {
    for (const Element& e : elements) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

bool Circuit::has_node(const std::string& id) const {
    return std::find(nodes.begin(), nodes.end(), id) != nodes.end();
}

namespace {

void check_element(const Element& e) {
    if (e.from == e.to) {
        throw Error(ErrorCode::SelfLoopElement,
                    "element '" + e.id + "' connects node '" + e.from + "' to itself");
    }
    if (!std::isfinite(e.value)) {
        throw Error(ErrorCode::SyntaxError, "element '" + e.id + "' has a non-finite value");
    }
    if (e.kind == ElementKind::Resistor && e.value <= 0.0) {
        throw Error(ErrorCode::NonPositiveResistance,
                    "resistor '" + e.id + "' must have a positive value");
    }
}

} // namespace

Circuit make_circuit(const std::vector<Element>& elements) {
    Circuit c;
    std::set<std::string> ids;
    std::set<std::string> seen_nodes;
    for (const Element& e : elements) {
        check_element(e);
        if (!ids.insert(e.id).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate element id '" + e.id + "'");
        }
        for (const std::string* n : {&e.from, &e.to}) {
            if (seen_nodes.insert(*n).second) c.nodes.push_back(*n);
        }
        c.elements.push_back(e);
    }
    return c;
}

CircuitClass circuit_class(const Circuit& c) {
    bool has_v = false;
    bool has_i = false;
    for (const Element& e : c.elements) {
        has_v = has_v || e.kind == ElementKind::VoltageSource;
        has_i = has_i || e.kind == ElementKind::CurrentSource;
    }
    if (has_v && has_i) return CircuitClass::Mixed;
    if (has_v) return CircuitClass::VoltageControlled;
    if (has_i) return CircuitClass::CurrentControlled;
    return CircuitClass::Passive;
}

namespace {

struct Line {
    int number;
    std::vector<std::string> tokens;
};

std::vector<Line> tokenize(const std::string& text) {
    std::vector<Line> lines;
    std::istringstream in(text);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        Line line{number, {}};
        std::string tok;
        while (ls >> tok) line.tokens.push_back(tok);
        if (!line.tokens.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

double parse_value(const std::string& tok, int line) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + tok.size()) {
        throw Error(ErrorCode::SyntaxError,
                    "line " + std::to_string(line) + ": bad numeric value '" + tok + "'");
    }
    return v;
}

} // namespace

Circuit parse_netlist(const std::string& text) {
    std::vector<Element> elements;
    for (const Line& line : tokenize(text)) {
        if (line.tokens.size() != 5) {
            throw Error(ErrorCode::SyntaxError,
                        "line " + std::to_string(line.number) +
                            ": expected `<K> <id> <n+> <n-> <value>`");
        }
        const std::string& k = line.tokens[0];
        Element e;
        if (k == "R") e.kind = ElementKind::Resistor;
        else if (k == "V") e.kind = ElementKind::VoltageSource;
        else if (k == "I") e.kind = ElementKind::CurrentSource;
        else {
            throw Error(ErrorCode::SyntaxError,
                        "line " + std::to_string(line.number) + ": unknown element kind '" + k +
                            "' (expected R, V or I)");
        }
        e.id = line.tokens[1];
        e.from = line.tokens[2];
        e.to = line.tokens[3];
        e.value = parse_value(line.tokens[4], line.number);
        try {
            check_element(e);
        } catch (const Error& err) {
            throw Error(err.code(), "line " + std::to_string(line.number) + ": " + err.what());
        }
        for (const Element& prev : elements) {
            if (prev.id == e.id) {
                throw Error(ErrorCode::DuplicateId,
                            "line " + std::to_string(line.number) + ": duplicate element id '" +
                                e.id + "'");
            }
        }
        elements.push_back(std::move(e));
    }
    if (elements.empty()) {
        throw Error(ErrorCode::EmptyNetlist, "netlist contains no elements");
    }
    return make_circuit(elements);
}

std::string serialize_netlist(const Circuit& c) {
    std::ostringstream out;
    for (const Element& e : c.elements) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", e.value);
        out << element_kind_letter(e.kind) << ' ' << e.id << ' ' << e.from << ' ' << e.to << ' '
            << buf << '\n';
    }
    return out.str();
}

namespace {

using Adjacency = std::map<std::string, std::vector<std::pair<std::string, const Element*>>>;

Adjacency adjacency(const Circuit& c, bool (*keep)(ElementKind)) {
    Adjacency adj;
    for (const std::string& n : c.nodes) adj[n];
    for (const Element& e : c.elements) {
        if (!keep(e.kind)) continue;
        adj[e.from].push_back({e.to, &e});
        adj[e.to].push_back({e.from, &e});
    }
    return adj;
}

std::map<std::string, int> components(const Adjacency& adj) {
    std::map<std::string, int> comp;
    int next = 0;
    for (const auto& [start, _] : adj) {
        if (comp.count(start)) continue;
        int id = next++;
        std::vector<std::string> stack{start};
        comp[start] = id;
        while (!stack.empty()) {
            std::string u = stack.back();
            stack.pop_back();
            for (const auto& [w, e] : adj.at(u)) {
                (void)e;
                if (!comp.count(w)) {
                    comp[w] = id;
                    stack.push_back(w);
                }
            }
        }
    }
    return comp;
}

/// Scans the pure voltage-source subgraph for cycles.  Walks a BFS forest
/// assigning each node the algebraic sum of source values along its tree
/// path; every non-tree voltage edge closes a loop, consistent when the
/// propagated offsets already satisfy it.
void scan_voltage_loops(const Circuit& c, std::vector<Fault>& faults) {
    Adjacency adj = adjacency(c, [](ElementKind k) { return k == ElementKind::VoltageSource; });
    std::map<std::string, double> offset;
    std::map<std::string, std::pair<std::string, const Element*>> parent;
    std::set<const Element*> processed;
    for (const std::string& root : c.nodes) {
        if (offset.count(root)) continue;
        offset[root] = 0.0;
        std::vector<std::string> queue{root};
        for (size_t qi = 0; qi < queue.size(); ++qi) {
            std::string u = queue[qi];
            for (const auto& [w, e] : adj.at(u)) {
                if (processed.count(e)) continue;
                processed.insert(e);
                // v = phi(from) - phi(to) = value
                double step = (e->from == u) ? -e->value : e->value;
                if (!offset.count(w)) {
                    offset[w] = offset[u] + step;
                    parent[w] = {u, e};
                    queue.push_back(w);
                    continue;
                }
                // Closing edge: collect the loop through the BFS forest.
                std::vector<std::string> u_chain{u};
                while (parent.count(u_chain.back())) u_chain.push_back(parent.at(u_chain.back()).first);
                std::vector<const Element*> loop{e};
                double scale = std::abs(e->value);
                std::string x = w;
                while (std::find(u_chain.begin(), u_chain.end(), x) == u_chain.end()) {
                    loop.push_back(parent.at(x).second);
                    scale += std::abs(parent.at(x).second->value);
                    x = parent.at(x).first;
                }
                for (const std::string& y : u_chain) {
                    if (y == x) break;
                    loop.push_back(parent.at(y).second);
                    scale += std::abs(parent.at(y).second->value);
                }
                double mismatch = offset[u] + ((e->from == u) ? -e->value : e->value) - offset[w];
                Fault f;
                for (const Element* le : loop) f.elements.push_back(le->id);
                std::sort(f.elements.begin(), f.elements.end());
                if (std::abs(mismatch) > 1e-12 * std::max(scale, 1e-300)) {
                    f.code = FaultCode::InconsistentVoltageLoop;
                    f.message = "voltage sources form a loop with nonzero algebraic sum";
                } else {
                    f.code = FaultCode::RedundantVoltageLoop;
                    f.message = "voltage sources form a zero-sum loop; their currents are not unique";
                }
                faults.push_back(std::move(f));
            }
        }
    }
}

/// A node group whose boundary consists solely of current sources leaves the
/// group potential floating (and, when the net injection is nonzero, leaves
/// Kirchhoff's current law unsatisfiable).  Such groups are exactly the
/// components of the resistor/voltage-source graph when there is more than
/// one of them.
void scan_current_cuts(const Circuit& c, std::vector<Fault>& faults) {
    Adjacency adj = adjacency(c, [](ElementKind k) { return k != ElementKind::CurrentSource; });
    std::map<std::string, int> comp = components(adj);
    int count = 0;
    for (const auto& [_, id] : comp) count = std::max(count, id + 1);
    if (count <= 1) return;
    for (int group = 0; group < count; ++group) {
        double net = 0.0;
        double scale = 0.0;
        std::vector<std::string> crossing;
        std::vector<std::string> members;
        for (const auto& [node, id] : comp) {
            if (id == group) members.push_back(node);
        }
        for (const Element& e : c.elements) {
            if (e.kind != ElementKind::CurrentSource) continue;
            bool from_in = comp.at(e.from) == group;
            bool to_in = comp.at(e.to) == group;
            if (from_in == to_in) continue;
            crossing.push_back(e.id);
            net += to_in ? e.value : -e.value;
            scale += std::abs(e.value);
        }
        Fault f;
        f.elements = crossing;
        std::string where = "node group {";
        for (size_t i = 0; i < members.size(); ++i) where += (i ? "," : "") + members[i];
        where += "}";
        if (std::abs(net) > 1e-12 * std::max(scale, 1e-300)) {
            f.code = FaultCode::UnbalancedCurrentCut;
            f.message = where + " is fed only by current sources with nonzero net injection";
        } else {
            f.code = FaultCode::RedundantCurrentCut;
            f.message = where + " connects to the rest only through current sources; its potential is not unique";
        }
        faults.push_back(std::move(f));
    }
}

} // namespace

ValidationReport validate(const Circuit& c) {
    ValidationReport report;
    if (c.nodes.empty()) {
        report.faults.push_back({FaultCode::Disconnected, {}, "circuit has no nodes"});
        return report;
    }
    Adjacency all = adjacency(c, [](ElementKind) { return true; });
    std::map<std::string, int> comp = components(all);
    int count = 0;
    for (const auto& [_, id] : comp) count = std::max(count, id + 1);
    if (count > 1) {
        report.faults.push_back(
            {FaultCode::Disconnected, {}, "circuit graph has " + std::to_string(count) + " components"});
    }
    scan_voltage_loops(c, report.faults);
    scan_current_cuts(c, report.faults);
    report.well_posed = report.faults.empty();
    return report;
}

void require_well_posed(const Circuit& c) {
    ValidationReport report = validate(c);
    if (report.well_posed) return;
    std::string msg = "circuit is not well posed:";
    for (const Fault& f : report.faults) {
        msg += std::string(" [") + fault_code_name(f.code) + "] " + f.message + ";";
    }
    throw Error(ErrorCode::InvalidCircuit, msg);
}

GridCase parse_grid(const std::string& text) {
    GridCase g;
    std::set<std::string> bus_ids;
    std::set<std::string> branch_ids;
    for (const Line& line : tokenize(text)) {
        const std::string& k = line.tokens[0];
        if (k == "BUS") {
            if (line.tokens.size() != 3) {
                throw Error(ErrorCode::SyntaxError,
                            "line " + std::to_string(line.number) + ": expected `BUS <id> <injection>`");
            }
            GridBus bus{line.tokens[1], parse_value(line.tokens[2], line.number)};
            if (!bus_ids.insert(bus.id).second) {
                throw Error(ErrorCode::DuplicateId,
                            "line " + std::to_string(line.number) + ": duplicate bus '" + bus.id + "'");
            }
            g.buses.push_back(std::move(bus));
        } else if (k == "BRANCH") {
            if (line.tokens.size() != 5) {
                throw Error(ErrorCode::SyntaxError,
                            "line " + std::to_string(line.number) +
                                ": expected `BRANCH <id> <from> <to> <reactance>`");
            }
            GridBranch br{line.tokens[1], line.tokens[2], line.tokens[3],
                          parse_value(line.tokens[4], line.number)};
            if (!branch_ids.insert(br.id).second) {
                throw Error(ErrorCode::DuplicateId,
                            "line " + std::to_string(line.number) + ": duplicate branch '" + br.id + "'");
            }
            if (br.reactance <= 0.0) {
                throw Error(ErrorCode::BadGrid,
                            "line " + std::to_string(line.number) + ": branch reactance must be positive");
            }
            g.branches.push_back(std::move(br));
        } else {
            throw Error(ErrorCode::SyntaxError,
                        "line " + std::to_string(line.number) + ": expected BUS or BRANCH");
        }
    }
    if (g.buses.empty()) {
        throw Error(ErrorCode::EmptyNetlist, "grid case contains no buses");
    }
    return g;
}

Circuit import_grid(const GridCase& g) {
    double net = 0.0;
    double scale = 0.0;
    std::set<std::string> bus_ids;
    for (const GridBus& b : g.buses) {
        net += b.injection;
        scale += std::abs(b.injection);
        bus_ids.insert(b.id);
    }
    if (std::abs(net) > 1e-12 * std::max(scale, 1e-300)) {
        throw Error(ErrorCode::BadGrid, "bus injections do not sum to zero");
    }
    for (const GridBranch& br : g.branches) {
        if (!bus_ids.count(br.from) || !bus_ids.count(br.to)) {
            throw Error(ErrorCode::BadGrid, "branch '" + br.id + "' references an unknown bus");
        }
    }
    const std::string& reference = g.buses.front().id;
    std::vector<Element> elements;
    for (const GridBranch& br : g.branches) {
        elements.push_back({br.id, ElementKind::Resistor, br.from, br.to, br.reactance});
    }
    // Injection P_k becomes a current source from the reference bus to bus k;
    // zero injections keep their placeholder source so the import is always a
    // current-controlled circuit.
    for (const GridBus& b : g.buses) {
        if (b.id == reference) continue;
        elements.push_back({"inj:" + b.id, ElementKind::CurrentSource, reference, b.id, b.injection});
    }
    Circuit c = make_circuit(elements);
    // Buses may appear before any element touches them.
    for (const GridBus& b : g.buses) {
        if (!c.has_node(b.id)) c.nodes.push_back(b.id);
    }
    return c;
}

} // namespace dcloss
