#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "dcloss/netlist.hpp"

namespace dcloss {

/// Sensitivities of every source's dual delivery quantity to every source
/// value, measured with sources in delivery polarity: for a voltage source
/// the response is the current out of its `from` terminal, for a current
/// source the voltage rise potential(to) - potential(from).  Rows index the
/// driving source, columns the responding source.
///
/// The blocks satisfy svv = svv^T, sii = sii^T and siv = -svi^T exactly (up
/// to roundoff of the underlying solves).
struct SourceFactorMatrix {
    std::vector<std::string> voltage_sources; // ids, file order
    std::vector<std::string> current_sources; // ids, file order
    Eigen::MatrixXd svv; // l x l, siemens
    Eigen::MatrixXd svi; // l x k, dimensionless
    Eigen::MatrixXd siv; // k x l, dimensionless
    Eigen::MatrixXd sii; // k x k, ohms
};

/// Exact sensitivities from one unit-value solve per source (the circuit is
/// linear, so no finite differences are involved).
SourceFactorMatrix source_factors(const Circuit& c);

/// Max-norm deviation from the reciprocity relations, each block normalized
/// by its own magnitude.
double reciprocity_residual(const SourceFactorMatrix& m);

enum class EquivalentKind { Thevenin, Norton, Mixed };

const char* equivalent_kind_name(EquivalentKind k);

/// Two-terminal reduction at (m, n).  v_eq is the open-circuit voltage
/// potential(m) - potential(n); i_eq the short-circuit current flowing
/// m -> n through an external short; r_eq the resistance seen at the
/// terminals with every source zeroed.  The mixed kind takes v_eq from the
/// voltage sub-circuit, i_eq from the current sub-circuit and the shared
/// r_eq: a series v_eq/r_eq branch with i_eq in parallel.
struct Equivalent {
    EquivalentKind kind = EquivalentKind::Thevenin;
    double v_eq = 0.0;
    double i_eq = 0.0;
    double r_eq = 0.0;
    std::pair<std::string, std::string> terminals;
};

Equivalent equivalent(const Circuit& c, const std::string& m, const std::string& n,
                      EquivalentKind kind);

} // namespace dcloss
