#include "dcloss/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace dcloss {

Solution solve(const Circuit& c) {
    if (c.nodes.empty()) {
        throw Error(ErrorCode::SingularSystem, "cannot solve an empty circuit");
    }
    std::vector<std::string> nodes = c.nodes;
    std::sort(nodes.begin(), nodes.end());
    const std::string& reference = nodes.front();

    std::map<std::string, int> node_index;
    for (size_t i = 0; i < nodes.size(); ++i) node_index[nodes[i]] = static_cast<int>(i);

    std::vector<const Element*> vsources;
    for (const Element& e : c.elements) {
        if (e.kind == ElementKind::VoltageSource) vsources.push_back(&e);
    }

    const int n = static_cast<int>(nodes.size());
    const int m = static_cast<int>(vsources.size());
    const int dim = n + m;

    // Unknowns: potential of every node followed by the from->to current of
    // every voltage source.  Rows: KCL per node (the reference row replaced
    // by phi_ref = 0) plus one voltage constraint per source.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);

    for (const Element& e : c.elements) {
        int ia = node_index.at(e.from);
        int ib = node_index.at(e.to);
        switch (e.kind) {
            case ElementKind::Resistor: {
                double g = 1.0 / e.value;
                a(ia, ia) += g;
                a(ia, ib) -= g;
                a(ib, ib) += g;
                a(ib, ia) -= g;
                break;
            }
            case ElementKind::CurrentSource:
                rhs(ia) -= e.value;
                rhs(ib) += e.value;
                break;
            case ElementKind::VoltageSource: {
                int j = n + static_cast<int>(std::find(vsources.begin(), vsources.end(), &e) -
                                             vsources.begin());
                a(ia, j) += 1.0;
                a(ib, j) -= 1.0;
                a(j, ia) += 1.0;
                a(j, ib) -= 1.0;
                rhs(j) = e.value;
                break;
            }
        }
    }

    int ref = node_index.at(reference);
    a.row(ref).setZero();
    a(ref, ref) = 1.0;
    rhs(ref) = 0.0;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    double rcond = lu.rcond();
    if (!std::isfinite(rcond) || rcond < 1e-12) {
        throw Error(ErrorCode::SingularSystem,
                    "augmented nodal system is singular or near-singular (rcond estimate " +
                        std::to_string(rcond) + ")");
    }
    Eigen::VectorXd x = lu.solve(rhs);

    Solution s;
    s.reference = reference;
    for (const std::string& node : nodes) s.potentials[node] = x(node_index.at(node));
    for (const Element& e : c.elements) {
        double v = s.potentials.at(e.from) - s.potentials.at(e.to);
        double i = 0.0;
        switch (e.kind) {
            case ElementKind::Resistor: i = v / e.value; break;
            case ElementKind::CurrentSource: i = e.value; break;
            case ElementKind::VoltageSource: {
                int j = n + static_cast<int>(std::find(vsources.begin(), vsources.end(), &e) -
                                             vsources.begin());
                i = x(j);
                break;
            }
        }
        s.currents[e.id] = i;
        s.consumed[e.id] = v * i;
        if (e.kind == ElementKind::Resistor) s.total_loss += v * i;
    }
    return s;
}

double total_loss(const Solution& s) { return s.total_loss; }

double element_voltage(const Solution& s, const Element& e) {
    return s.potentials.at(e.from) - s.potentials.at(e.to);
}

double delivered_power(const Solution& s, const Element& e) {
    return -s.consumed.at(e.id);
}

double source_delivery_current(const Solution& s, const Element& e) {
    return -s.currents.at(e.id);
}

double source_delivery_voltage(const Solution& s, const Element& e) {
    return s.potentials.at(e.to) - s.potentials.at(e.from);
}

double kcl_residual(const Circuit& c, const Solution& s) {
    std::map<std::string, double> net;
    std::map<std::string, double> scale;
    for (const Element& e : c.elements) {
        double i = s.currents.at(e.id);
        net[e.from] += i;
        net[e.to] -= i;
        scale[e.from] += std::abs(i);
        scale[e.to] += std::abs(i);
    }
    double worst = 0.0;
    for (const auto& [node, value] : net) {
        worst = std::max(worst, std::abs(value) / std::max(scale[node], 1e-300));
    }
    return worst;
}

double energy_residual(const Solution& s) {
    double net = 0.0;
    double scale = 0.0;
    for (const auto& [_, p] : s.consumed) {
        net += p;
        scale += std::abs(p);
    }
    return scale > 0.0 ? std::abs(net) / scale : 0.0;
}

} // namespace dcloss
