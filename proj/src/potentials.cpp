#include "dcloss/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dcloss/decomposition.hpp"
#include "dcloss/solver.hpp"

namespace dcloss {

Eigen::VectorXd minimize_equality_constrained(const QuadraticForm& q, const Eigen::MatrixXd& A,
                                              const Eigen::VectorXd& rhs) {
    const int n = q.dimension();
    const int m = static_cast<int>(A.rows());
    if (n + m == 0) return Eigen::VectorXd();

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n) = 2.0 * q.Q;
    if (m > 0) {
        kkt.topRightCorner(n, m) = A.transpose();
        kkt.bottomLeftCorner(m, n) = A;
    }
    Eigen::VectorXd full_rhs(n + m);
    full_rhs.head(n) = -q.b;
    full_rhs.tail(m) = rhs;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
    double rcond = lu.rcond();
    if (!std::isfinite(rcond) || rcond < 1e-12) {
        throw Error(ErrorCode::ConstraintInconsistent,
                    "stationarity system is singular (rcond estimate " + std::to_string(rcond) +
                        "); constraints are inconsistent or mis-assembled");
    }
    return lu.solve(full_rhs).head(n);
}

VoltagePotential build_voltage_potential(const Circuit& c, const NodeBasis& nb,
                                         const ResistorClasses& classes) {
    VoltagePotential p;
    p.variables = nb.representatives;
    const int d = nb.dimension();
    p.quadratic.Q = Eigen::MatrixXd::Zero(d, d);
    p.quadratic.b = Eigen::VectorXd::Zero(d);
    for (const Element& e : c.elements) {
        if (e.kind != ElementKind::Resistor) continue;
        double off_a = nb.offset.at(e.from);
        double off_b = nb.offset.at(e.to);
        if (classes.voltage_view.at(e.id) == VoltageClass::V1) {
            double drop = off_a - off_b;
            p.constant_loss += drop * drop / e.value;
            continue;
        }
        int i = nb.supernode_of.at(e.from);
        int j = nb.supernode_of.at(e.to);
        p.terms.push_back({e.id, i, j, e.value, off_a, off_b});
        double g = 1.0 / e.value;
        double offset = off_a - off_b;
        p.quadratic.Q(i, i) += g;
        p.quadratic.Q(j, j) += g;
        p.quadratic.Q(i, j) -= g;
        p.quadratic.Q(j, i) -= g;
        p.quadratic.b(i) += 2.0 * offset * g;
        p.quadratic.b(j) -= 2.0 * offset * g;
        p.quadratic.c += offset * offset * g;
    }
    p.quadratic.c += p.constant_loss;
    return p;
}

namespace {

struct RoutedInjections {
    std::map<std::string, double> flow; // tree edge id -> amps along from->to
};

/// Routes every current source through the spanning tree: `value` amps enter
/// the external network at the source's `to` supernode and return at its
/// `from` supernode, carried by the unique tree path between them.
RoutedInjections route_injections(const Circuit& c, const ResistanceGraph& rg,
                                  const CycleBasis& cb) {
    RoutedInjections routed;
    std::map<std::string, const ResistanceGraph::Edge*> edge_by_id;
    for (const auto& e : rg.edges) edge_by_id[e.id] = &e;

    // Supernode-level adjacency restricted to the tree.
    std::vector<std::vector<std::pair<int, const ResistanceGraph::Edge*>>> tree(
        rg.supernodes.size());
    for (const std::string& id : cb.tree_edges) {
        const auto* e = edge_by_id.at(id);
        tree[e->a].push_back({e->b, e});
        tree[e->b].push_back({e->a, e});
        routed.flow[id] = 0.0;
    }

    for (const Element& src : c.elements) {
        if (src.kind != ElementKind::CurrentSource) continue;
        int start = rg.supernode_of.at(src.to);
        int goal = rg.supernode_of.at(src.from);
        if (start == goal) continue; // circulates inside one supernode
        // BFS through the tree from `start` to `goal`.
        std::vector<int> parent(rg.supernodes.size(), -1);
        std::vector<const ResistanceGraph::Edge*> via(rg.supernodes.size(), nullptr);
        std::vector<int> queue{start};
        parent[start] = start;
        for (size_t qi = 0; qi < queue.size() && parent[goal] == -1; ++qi) {
            for (const auto& [w, e] : tree[queue[qi]]) {
                if (parent[w] != -1) continue;
                parent[w] = queue[qi];
                via[w] = e;
                queue.push_back(w);
            }
        }
        if (parent[goal] == -1) {
            throw Error(ErrorCode::DegenerateSubcircuit,
                        "current source '" + src.id +
                            "' spans disconnected parts of the resistance graph");
        }
        for (int v = goal; v != start; v = parent[v]) {
            const auto* e = via[v];
            // Walking parent[v] -> v; aligned with the edge when v is its b side.
            routed.flow[e->id] += (e->b == v) ? src.value : -src.value;
        }
    }
    return routed;
}

} // namespace

CurrentPotential build_current_potential(const Circuit& c, const CycleBasis& cb,
                                         const ResistorClasses& classes) {
    ResistanceGraph rg = resistance_graph(c);
    RoutedInjections routed = route_injections(c, rg, cb);

    CurrentPotential p;
    p.variables = cb.chords;
    const int n = static_cast<int>(cb.chords.size());
    std::map<std::string, int> chord_index;
    for (int i = 0; i < n; ++i) chord_index[cb.chords[i]] = i;

    // Signed cycle membership per resistor.
    std::map<std::string, std::vector<std::pair<int, int>>> membership;
    for (const auto& [chord, cycle] : cb.cycle_of_chord) {
        int ci = chord_index.at(chord);
        for (const CycleStep& step : cycle) membership[step.id].push_back({ci, step.direction});
    }
    for (auto& [_, cycles] : membership) std::sort(cycles.begin(), cycles.end());

    p.quadratic.Q = Eigen::MatrixXd::Zero(n, n);
    p.quadratic.b = Eigen::VectorXd::Zero(n);

    for (const Element& e : c.elements) {
        if (e.kind != ElementKind::Resistor) continue;
        double r = e.value;
        double inj = 0.0;
        if (auto it = routed.flow.find(e.id); it != routed.flow.end()) inj = it->second;
        const auto& cycles = membership[e.id];
        switch (classes.current_class(e.id)) {
            case CurrentClassKind::I1:
                p.i1_terms.push_back({e.id, r, inj});
                p.constant_loss += r * inj * inj;
                break;
            case CurrentClassKind::I2:
                p.i2_terms.push_back({cycles.front().first, e.id, r, cycles.front().second, inj});
                break;
            case CurrentClassKind::I3:
                p.i3_terms.push_back({e.id, r, cycles, inj});
                break;
        }
        for (const auto& [ci, si] : cycles) {
            for (const auto& [cj, sj] : cycles) p.quadratic.Q(ci, cj) += r * si * sj;
            p.quadratic.b(ci) += 2.0 * r * si * inj;
        }
        p.quadratic.c += r * inj * inj;
    }
    return p;
}

const char* loss_method_name(LossMethod m) {
    switch (m) {
        case LossMethod::A: return "A";
        case LossMethod::B: return "B";
        case LossMethod::C: return "C";
        case LossMethod::D: return "D";
    }
    return "?";
}

namespace {

/// Algebraic sum of the voltage-source offsets picked up between consecutive
/// resistor edges of a fundamental cycle (the supernode transits).  The
/// cycle voltage balance of a mixed circuit reads
///   sum_k sigma_k R_k i_k = -w_c.
double cycle_source_voltage(const Circuit& c, const NodeBasis& nb,
                            const std::vector<CycleStep>& cycle) {
    double w = 0.0;
    const size_t n = cycle.size();
    for (size_t k = 0; k < n; ++k) {
        const Element* cur = c.find(cycle[k].id);
        const Element* next = c.find(cycle[(k + 1) % n].id);
        const std::string& exit = cycle[k].direction > 0 ? cur->to : cur->from;
        const std::string& entry = cycle[(k + 1) % n].direction > 0 ? next->from : next->to;
        w += nb.offset.at(exit) - nb.offset.at(entry);
    }
    return w;
}

std::vector<std::pair<std::string, double>> node_witness(const std::vector<std::string>& nodes,
                                                         const Eigen::VectorXd& x) {
    std::vector<std::pair<std::string, double>> w;
    for (size_t i = 0; i < nodes.size(); ++i) w.push_back({"e(" + nodes[i] + ")", x(i)});
    return w;
}

std::vector<std::pair<std::string, double>> chord_witness(const std::vector<std::string>& chords,
                                                          const Eigen::VectorXd& x) {
    std::vector<std::pair<std::string, double>> w;
    for (size_t i = 0; i < chords.size(); ++i) w.push_back({"I(" + chords[i] + ")", x(i)});
    return w;
}

LossResult loss_method_b(const Circuit& c) {
    ResistanceGraph rg = resistance_graph(c);
    CycleBasis cb = spanning_tree_and_cycles(rg);
    NodeBasis nb = fundamental_node_basis(c);
    ResistorClasses classes = classify_resistors(c, nb, cb);
    CurrentPotential cp = build_current_potential(c, cb, classes);

    const int n = static_cast<int>(cp.variables.size());
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) {
        w(i) = cycle_source_voltage(c, nb, cb.cycle_of_chord.at(cp.variables[i]));
    }
    // Cycle voltage balance, linear in the chord currents:
    //   Q x = -w - b/2   (Q and b from the potential's quadratic form)
    Eigen::VectorXd rhs = -w - 0.5 * cp.quadratic.b;
    Eigen::VectorXd x = minimize_equality_constrained(cp.quadratic, cp.quadratic.Q, rhs);
    return {LossMethod::B, cp.quadratic.value(x), chord_witness(cp.variables, x)};
}

LossResult loss_method_c(const Circuit& c) {
    NodeBasis nb = fundamental_node_basis(c);
    ResistanceGraph rg = resistance_graph(c);
    CycleBasis cb = spanning_tree_and_cycles(rg);
    ResistorClasses classes = classify_resistors(c, nb, cb);
    VoltagePotential vp = build_voltage_potential(c, nb, classes);

    const int d = nb.dimension();
    // Current balance per supernode (the reference row is the redundant one
    // and is replaced by the gauge e_ref = 0).
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    for (const VoltagePotential::Term& t : vp.terms) {
        double g = 1.0 / t.resistance;
        double fixed = (t.offset_from - t.offset_to) * g;
        for (auto [node, sign] : {std::pair{t.i, 1.0}, std::pair{t.j, -1.0}}) {
            if (node == 0) continue;
            a(node, t.i) += sign * g;
            a(node, t.j) -= sign * g;
            rhs(node) -= sign * fixed;
        }
    }
    for (const Element& e : c.elements) {
        if (e.kind != ElementKind::CurrentSource) continue;
        int to = nb.supernode_of.at(e.to);
        int from = nb.supernode_of.at(e.from);
        if (to != 0) rhs(to) += e.value;
        if (from != 0) rhs(from) -= e.value;
    }
    a(0, 0) = 1.0; // gauge: reference representative held at 0 V
    rhs(0) = 0.0;

    Eigen::VectorXd x = minimize_equality_constrained(vp.quadratic, a, rhs);
    return {LossMethod::C, vp.quadratic.value(x), node_witness(vp.variables, x)};
}

LossResult loss_method_d(const Circuit& c) {
    Decomposition dec = decompose(c);

    NodeBasis nb_v = fundamental_node_basis(dec.cv);
    ResistanceGraph rg_v = resistance_graph(dec.cv);
    CycleBasis cb_v = spanning_tree_and_cycles(rg_v);
    VoltagePotential vp =
        build_voltage_potential(dec.cv, nb_v, classify_resistors(dec.cv, nb_v, cb_v));
    Eigen::MatrixXd gauge = Eigen::MatrixXd::Zero(1, nb_v.dimension());
    gauge(0, 0) = 1.0;
    Eigen::VectorXd x_v =
        minimize_equality_constrained(vp.quadratic, gauge, Eigen::VectorXd::Zero(1));

    ResistanceGraph rg_i = resistance_graph(dec.ci);
    CycleBasis cb_i = spanning_tree_and_cycles(rg_i);
    NodeBasis nb_i = fundamental_node_basis(dec.ci);
    CurrentPotential cp =
        build_current_potential(dec.ci, cb_i, classify_resistors(dec.ci, nb_i, cb_i));
    Eigen::VectorXd x_i = minimize_equality_constrained(
        cp.quadratic, Eigen::MatrixXd(0, cp.quadratic.dimension()), Eigen::VectorXd(0));

    LossResult result{LossMethod::D, vp.quadratic.value(x_v) + cp.quadratic.value(x_i), {}};
    result.witness = node_witness(vp.variables, x_v);
    auto chords = chord_witness(cp.variables, x_i);
    result.witness.insert(result.witness.end(), chords.begin(), chords.end());
    return result;
}

} // namespace

LossResult compute_loss(const Circuit& c, LossMethod method) {
    require_well_posed(c);
    switch (method) {
        case LossMethod::A: return {LossMethod::A, solve(c).total_loss, {}};
        case LossMethod::B: return loss_method_b(c);
        case LossMethod::C: return loss_method_c(c);
        case LossMethod::D: return loss_method_d(c);
    }
    throw Error(ErrorCode::UnsupportedEdit, "unknown loss method");
}

std::vector<LossResult> compute_all_losses(const Circuit& c) {
    return {compute_loss(c, LossMethod::A), compute_loss(c, LossMethod::B),
            compute_loss(c, LossMethod::C), compute_loss(c, LossMethod::D)};
}

} // namespace dcloss
